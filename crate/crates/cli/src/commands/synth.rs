use phonostyle::phonology::FeatureTable;
use phonostyle::synth::{balanced_cells, generate_raw, write_raw_tsv, StyleBook};
use serde::Serialize;

use super::{now, write_with, Context};
use crate::error::{CliError, CliResult};
use crate::output::OutputSet;
use crate::SynthArgs;

#[derive(Debug, Serialize)]
struct Settings {
    poets: usize,
    per_cell: usize,
    lines_per_poem: usize,
}

pub fn run(ctx: &Context, a: SynthArgs) -> CliResult<()> {
    let started = now();
    if a.poets < 2 || a.per_cell == 0 || a.lines_per_poem == 0 {
        return Err(CliError::config("synth needs at least 2 poets and positive cell and poem sizes"));
    }
    let cells = balanced_cells(a.poets, a.per_cell, a.lines_per_poem);
    let styles = StyleBook::random(&cells, ctx.seed);
    let table = FeatureTable::default_table();
    let raw = generate_raw(&cells, &styles, &table, ctx.seed);
    let settings = Settings {
        poets: a.poets,
        per_cell: a.per_cell,
        lines_per_poem: a.lines_per_poem,
    };
    let mut out = OutputSet::new();
    out.add(a.out.join("corpus.tsv"), write_with(|b| write_raw_tsv(b, &raw))?);
    ctx.finish("synth", &settings, vec![], out, started)
}
