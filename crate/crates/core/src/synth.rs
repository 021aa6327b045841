//! Synthetic corpora with planted structure, for demos and recovery tests.
//!
//! Two layers are generated. [`generate_raw`] writes raw, prephonemized
//! mesra tables that go through the full ingest path; each poet and meter
//! biases which consonants appear and how often syllables close, so the
//! metrics carry real poet and meter signal. [`PlantedDesign`] generates
//! metric rows directly from a known linear model for estimator tests.

use std::collections::BTreeMap;
use std::io::Write;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{MetricKind, MetricRow, MetricVector};
use crate::phonology::{FeatureTable, SegmentClass};

/// One raw input row (one mesra).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawMesra {
    pub poet_name: String,
    pub poem_id: String,
    pub century: Option<i32>,
    pub meter_code: Option<String>,
    pub form: Option<String>,
    pub line_index: u32,
    pub line_text: String,
}

pub const RAW_COLUMNS: [&str; 7] = ["poet_name", "poem_id", "century", "meter_code", "form", "line_index", "line_text"];

pub fn write_raw_tsv<W: Write>(out: W, rows: &[RawMesra]) -> Result<()> {
    let err = |e: csv::Error| Error::Invalid(format!("writing raw corpus: {e}"));
    let mut w = csv::WriterBuilder::new()
        .delimiter(b'\t')
        .quote_style(csv::QuoteStyle::Never)
        .from_writer(out);
    w.write_record(RAW_COLUMNS).map_err(err)?;
    for r in rows {
        w.write_record([
            r.poet_name.as_str(),
            &r.poem_id,
            &r.century.map(|c| c.to_string()).unwrap_or_default(),
            r.meter_code.as_deref().unwrap_or(""),
            r.form.as_deref().unwrap_or(""),
            &r.line_index.to_string(),
            &r.line_text,
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Invalid(format!("writing raw corpus: {e}")))
}

/// A block of mesras sharing poet, meter label and form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellPlan {
    pub poet: String,
    /// Raw meter label as it would appear in a source table.
    pub meter: Option<String>,
    pub form: Option<String>,
    pub century: Option<i32>,
    pub mesras: usize,
    pub lines_per_poem: usize,
}

/// Style parameters steering the phoneme sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Style {
    /// Tilt of consonant choice toward hard (> 0) or soft (< 0) segments.
    pub hardness_tilt: f64,
    /// Extra weight on strident segments.
    pub sibilance_tilt: f64,
    /// Probability that a syllable is closed by a consonant.
    pub coda_rate: f64,
}

impl Style {
    fn combine(self, other: Style) -> Style {
        Style {
            hardness_tilt: self.hardness_tilt + other.hardness_tilt,
            sibilance_tilt: self.sibilance_tilt + other.sibilance_tilt,
            coda_rate: (self.coda_rate + other.coda_rate).clamp(0.02, 0.95),
        }
    }
}

/// Per-poet and per-meter styles for the raw generator; names not listed
/// get a neutral style.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StyleBook {
    pub poets: BTreeMap<String, Style>,
    pub meters: BTreeMap<String, Style>,
}

impl StyleBook {
    /// Styles drawn from `seed` for every poet and meter in `cells`.
    pub fn random(cells: &[CellPlan], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f57);
        let mut book = StyleBook::default();
        for c in cells {
            if !book.poets.contains_key(&c.poet) {
                let s = Style {
                    hardness_tilt: rng.gen_range(-0.6..0.6),
                    sibilance_tilt: rng.gen_range(-0.4..0.4),
                    coda_rate: 0.35 + rng.gen_range(-0.15..0.15),
                };
                book.poets.insert(c.poet.clone(), s);
            }
            if let Some(m) = &c.meter {
                if !book.meters.contains_key(m) {
                    let s = Style {
                        hardness_tilt: rng.gen_range(-0.3..0.3),
                        sibilance_tilt: rng.gen_range(-0.2..0.2),
                        coda_rate: rng.gen_range(-0.08..0.08),
                    };
                    book.meters.insert(m.clone(), s);
                }
            }
        }
        book
    }

    fn style(&self, poet: &str, meter: Option<&str>) -> Style {
        let neutral = Style {
            hardness_tilt: 0.0,
            sibilance_tilt: 0.0,
            coda_rate: 0.0,
        };
        let base = self.poets.get(poet).copied().unwrap_or(Style { coda_rate: 0.35, ..neutral });
        base.combine(meter.and_then(|m| self.meters.get(m)).copied().unwrap_or(neutral))
    }
}

struct Sampler {
    consonants: Vec<String>,
    hardness: Vec<f64>,
    strident: Vec<bool>,
    vowels: Vec<String>,
}

impl Sampler {
    fn new(table: &FeatureTable) -> Self {
        let mut s = Sampler {
            consonants: Vec::new(),
            hardness: Vec::new(),
            strident: Vec::new(),
            vowels: Vec::new(),
        };
        for f in table.entries() {
            if f.segment_class == SegmentClass::Vowel {
                s.vowels.push(f.symbol.clone());
            } else if f.segment_class.is_consonant() && f.symbol != table.boundary_symbol() {
                s.consonants.push(f.symbol.clone());
                s.hardness.push(f.hardness);
                s.strident.push(f.strident);
            }
        }
        s
    }

    fn weights(&self, style: Style) -> WeightedIndex<f64> {
        let mean = self.hardness.iter().sum::<f64>() / self.hardness.len() as f64;
        let w: Vec<f64> = self
            .hardness
            .iter()
            .zip(&self.strident)
            .map(|(h, st)| (style.hardness_tilt * (h - mean) + if *st { style.sibilance_tilt } else { 0.0 }).exp())
            .collect();
        WeightedIndex::new(w).expect("positive weights")
    }

    fn line(&self, rng: &mut impl Rng, cw: &WeightedIndex<f64>, style: Style, boundary: &str) -> String {
        let words = rng.gen_range(4..=7);
        let mut out: Vec<&str> = Vec::new();
        for w in 0..words {
            if w > 0 {
                out.push(boundary);
            }
            for _ in 0..rng.gen_range(1..=3) {
                if rng.gen_bool(0.85) {
                    out.push(&self.consonants[cw.sample(rng)]);
                }
                out.push(&self.vowels[rng.gen_range(0..self.vowels.len())]);
                if rng.gen_bool(style.coda_rate) {
                    out.push(&self.consonants[cw.sample(rng)]);
                }
            }
        }
        out.join(" ")
    }
}

/// Generate prephonemized mesra rows for every cell. Poem ids are unique
/// per poet; each cell's lines come from its own seeded stream, so adding a
/// cell leaves the others unchanged.
pub fn generate_raw(cells: &[CellPlan], styles: &StyleBook, table: &FeatureTable, seed: u64) -> Vec<RawMesra> {
    let sampler = Sampler::new(table);
    let boundary = table.boundary_symbol();
    let mut poem_counter: BTreeMap<&str, usize> = BTreeMap::new();
    let mut out = Vec::with_capacity(cells.iter().map(|c| c.mesras).sum());
    for (ci, cell) in cells.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ ci as u64);
        let style = styles.style(&cell.poet, cell.meter.as_deref());
        let cw = sampler.weights(style);
        let per_poem = cell.lines_per_poem.max(1);
        for i in 0..cell.mesras {
            if i % per_poem == 0 {
                *poem_counter.entry(&cell.poet).or_default() += 1;
            }
            out.push(RawMesra {
                poet_name: cell.poet.clone(),
                poem_id: format!("p{:05}", poem_counter[cell.poet.as_str()]),
                century: cell.century,
                meter_code: cell.meter.clone(),
                form: cell.form.clone(),
                line_index: (i % per_poem) as u32,
                line_text: sampler.line(&mut rng, &cw, style, boundary),
            });
        }
    }
    out
}

/// Display names of the retained meters, as raw source labels.
pub const METER_LABELS: [&str; 5] = ["mutaqarib", "hazaj", "ramal", "mujtass", "muzari'"];
pub const FORMS: [&str; 3] = ["ghazal", "masnavi", "qasida"];

/// Cells for `poets` poets, each writing `per_cell` mesras in every meter
/// and centuries spread over 5..=17. Each poet-meter cell is split over two
/// forms, two thirds in the first and the rest in the next.
pub fn balanced_cells(poets: usize, per_cell: usize, lines_per_poem: usize) -> Vec<CellPlan> {
    let mut cells = Vec::new();
    for p in 0..poets {
        for (m, meter) in METER_LABELS.iter().enumerate() {
            let minor = per_cell / 3;
            for (k, n) in [(0, per_cell - minor), (1, minor)] {
                if n == 0 {
                    continue;
                }
                cells.push(CellPlan {
                    poet: format!("poet{p:03}"),
                    meter: Some(meter.to_string()),
                    form: Some(FORMS[(p + m + k) % FORMS.len()].to_string()),
                    century: Some(5 + (p % 13) as i32),
                    mesras: n,
                    lines_per_poem,
                });
            }
        }
    }
    cells
}

/// A linear model generating metric rows: intercept, additive poet, meter
/// and form effects, length slopes, a poem-level shock and mesra noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedDesign {
    pub outcome: MetricKind,
    pub intercept: f64,
    pub poets: Vec<(String, f64)>,
    pub meters: Vec<(String, f64)>,
    pub forms: Vec<(String, f64)>,
    pub slope_symbols: f64,
    pub slope_tokens: f64,
    pub sigma: f64,
    pub poem_sigma: f64,
    pub lines_per_poem: usize,
    pub n_rows: usize,
    /// Row `p` gives poet `p`'s meter weights; uniform when absent.
    pub meter_mix: Option<Vec<Vec<f64>>>,
}

impl PlantedDesign {
    /// `y = 2 + 0.5·poetB − 0.3·meterM02 + noise`, two poets, two meters.
    pub fn simple(n_rows: usize, sigma: f64) -> Self {
        PlantedDesign {
            outcome: MetricKind::Hardness,
            intercept: 2.0,
            poets: vec![("poetA".into(), 0.0), ("poetB".into(), 0.5)],
            meters: vec![("M01".into(), 0.0), ("M02".into(), -0.3)],
            forms: vec![("ghazal".into(), 0.0)],
            slope_symbols: 0.0,
            slope_tokens: 0.0,
            sigma,
            poem_sigma: 0.0,
            lines_per_poem: 10,
            n_rows,
            meter_mix: None,
        }
    }

    /// A soft poet writing mostly in a hard meter and a hard poet writing
    /// mostly in a soft one, so raw poet means invert the true order.
    pub fn confounded() -> Self {
        PlantedDesign {
            outcome: MetricKind::Hardness,
            intercept: 1.6,
            poets: vec![
                ("hard_poet".into(), 0.15),
                ("mid_poet".into(), 0.0),
                ("soft_poet".into(), -0.15),
            ],
            meters: vec![("M01".into(), 0.5), ("M02".into(), 0.0), ("M03".into(), 0.1)],
            forms: vec![("ghazal".into(), 0.0), ("masnavi".into(), 0.05)],
            slope_symbols: 0.004,
            slope_tokens: -0.01,
            sigma: 0.12,
            poem_sigma: 0.04,
            lines_per_poem: 12,
            n_rows: 12_000,
            meter_mix: Some(vec![vec![0.1, 0.8, 0.1], vec![0.34, 0.33, 0.33], vec![0.9, 0.05, 0.05]]),
        }
    }

    pub fn generate(&self, seed: u64) -> Vec<MetricRow> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, self.sigma.max(0.0)).expect("finite sigma");
        let shock = Normal::new(0.0, self.poem_sigma.max(0.0)).expect("finite sigma");
        let mixes: Vec<WeightedIndex<f64>> = (0..self.poets.len())
            .map(|p| {
                let w = self
                    .meter_mix
                    .as_ref()
                    .map(|m| m[p].clone())
                    .unwrap_or_else(|| vec![1.0; self.meters.len()]);
                WeightedIndex::new(w).expect("meter weights")
            })
            .collect();
        let per_poem = self.lines_per_poem.max(1);
        let mut rows = Vec::with_capacity(self.n_rows);
        let mut poem = 0usize;
        while rows.len() < self.n_rows {
            let p = poem % self.poets.len();
            let m = mixes[p].sample(&mut rng);
            let f = rng.gen_range(0..self.forms.len());
            let poem_shock = shock.sample(&mut rng);
            let (poet, pe) = &self.poets[p];
            let (meter, me) = &self.meters[m];
            let (form, fe) = &self.forms[f];
            for line in 0..per_poem.min(self.n_rows - rows.len()) {
                let n_symbols = rng.gen_range(18..=42usize);
                let n_tokens = (n_symbols / 5 + rng.gen_range(0..=2)).max(1);
                let y = self.intercept
                    + pe
                    + me
                    + fe
                    + self.slope_symbols * n_symbols as f64
                    + self.slope_tokens * n_tokens as f64
                    + poem_shock
                    + noise.sample(&mut rng);
                rows.push(planted_row(poet, poem, line, meter, form, self.outcome, y, n_symbols, n_tokens));
            }
            poem += 1;
        }
        rows
    }
}

#[allow(clippy::too_many_arguments)]
fn planted_row(
    poet: &str,
    poem: usize,
    line: usize,
    meter: &str,
    form: &str,
    outcome: MetricKind,
    y: f64,
    n_symbols: usize,
    n_tokens: usize,
) -> MetricRow {
    let mut m = MetricVector {
        hardness: 1.6,
        sonority: 3.2,
        sibilance: Some(0.18),
        vowel_ratio: 0.42,
        cluster_ratio: 0.2,
        entropy: 3.7,
        n_symbols,
        n_tokens,
    };
    match outcome {
        MetricKind::Hardness => m.hardness = y,
        MetricKind::Sonority => m.sonority = y,
        MetricKind::Sibilance => m.sibilance = Some(y),
        MetricKind::VowelRatio => m.vowel_ratio = y,
        MetricKind::Entropy => m.entropy = y,
        MetricKind::ClusterRatio => m.cluster_ratio = y,
    }
    let poem_id = format!("q{poem:06}");
    MetricRow {
        mesra_id: format!("{poet}/{poem_id}/{line}"),
        poet_id: poet.to_string(),
        poem_id,
        line_index: line as u32,
        century: None,
        meter: meter.to_string(),
        form: form.to_string(),
        metrics: m,
    }
}
