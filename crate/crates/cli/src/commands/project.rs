use std::path::PathBuf;

use phonostyle::atlas::{pca_project, poet_profiles, render_fingerprint, render_space, write_profiles, FINGERPRINTS_PER_PAGE};
use serde::Serialize;

use super::{json_bytes, load_rows, now, write_with, Context};
use crate::error::CliResult;
use crate::output::OutputSet;
use crate::ProjectArgs;

#[derive(Debug, Serialize)]
struct Settings {
    metrics: PathBuf,
    highlight: Vec<String>,
    per_page: usize,
}

pub fn run(ctx: &Context, a: ProjectArgs) -> CliResult<()> {
    let started = now();
    let c = &ctx.config.project;
    let highlight = a.highlight.clone().or_else(|| c.highlight.clone()).unwrap_or_default();
    let per_page = a.per_page.or(c.per_page).unwrap_or(FINGERPRINTS_PER_PAGE);
    let rows = load_rows(&a.metrics)?;
    let profiles = poet_profiles(&rows)?;
    let pages = render_fingerprint(&profiles, per_page)?;
    let projection = pca_project(&profiles)?;
    for w in &projection.warnings {
        log::warn!("{w}");
    }
    let unknown: Vec<&String> = highlight.iter().filter(|h| projection.pc(h).is_none()).collect();
    if !unknown.is_empty() {
        log::warn!("highlighted poet(s) not in the projection: {unknown:?}");
    }

    let mut out = OutputSet::new();
    out.add(a.out.join("profiles.csv"), write_with(|b| write_profiles(b, &profiles))?);
    out.add(a.out.join("projection.json"), json_bytes(&projection)?);
    out.add(a.out.join("space.svg"), render_space(&projection, &highlight).into_bytes());
    for (i, page) in pages.into_iter().enumerate() {
        out.add(a.out.join("fingerprints").join(format!("page-{:02}.svg", i + 1)), page.into_bytes());
    }
    let settings = Settings {
        metrics: a.metrics.clone(),
        highlight,
        per_page,
    };
    ctx.finish("project", &settings, vec![a.metrics.clone()], out, started)
}
