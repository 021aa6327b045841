//! Corpus ingestion, normalization and cohort construction.

pub mod cohort;
pub mod ingest;
pub mod maps;
pub mod normalize;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cohort::{build_cohort, AttritionReport, CohortSpec};
pub use ingest::{ingest_files, split_mesras, DelimiterSpec, IngestConfig, Ingested, Rejection, StreamSource};
pub use maps::{AliasTable, CenturyMap, MeterMap, METER_OTHER, RETAINED_METERS, UNKNOWN};
pub use normalize::normalize_text;

/// One hemistich with identity, metadata and its symbol stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MesraRecord {
    pub mesra_id: String,
    pub poet_id: String,
    #[serde(skip)]
    pub poet_unlisted: bool,
    pub poem_id: String,
    pub line_index: u32,
    pub century: Option<i32>,
    /// Retained meter key, [`METER_OTHER`] or [`UNKNOWN`].
    pub meter: String,
    pub form: String,
    pub text_norm: String,
    /// Space-separated symbols with the boundary marker between words.
    pub stream: String,
    pub n_symbols: usize,
    pub n_tokens: usize,
}

impl MesraRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        poet_id: String,
        poet_unlisted: bool,
        poem_id: String,
        line_index: u32,
        century: Option<i32>,
        meter: String,
        form: String,
        text_norm: String,
        symbols: &[impl AsRef<str>],
        boundaries: &[usize],
        boundary: &str,
    ) -> Self {
        MesraRecord {
            mesra_id: format!("{poet_id}/{poem_id}/{line_index}"),
            n_symbols: symbols.len(),
            n_tokens: boundaries.len() + 1,
            stream: render_stream(symbols, boundaries, boundary),
            poet_id,
            poet_unlisted,
            poem_id,
            line_index,
            century,
            meter,
            form,
            text_norm,
        }
    }

    pub fn sort_key(&self) -> (&str, &str, u32) {
        (&self.poet_id, &self.poem_id, self.line_index)
    }

}

/// Prephonemized rendering with `boundary` between words.
pub fn render_stream(symbols: &[impl AsRef<str>], boundaries: &[usize], boundary: &str) -> String {
    let mut out = String::new();
    let mut b = boundaries.iter().peekable();
    for (i, s) in symbols.iter().enumerate() {
        if b.peek() == Some(&&i) {
            b.next();
            out.push(' ');
            out.push_str(boundary);
        }
        if i > 0 {
            out.push(' ');
        }
        out.push_str(s.as_ref());
    }
    out
}

pub const COHORT_COLUMNS: [&str; 11] = [
    "mesra_id",
    "poet_name",
    "poem_id",
    "line_index",
    "century",
    "meter_code",
    "form",
    "line_text",
    "stream",
    "n_symbols",
    "n_tokens",
];

/// Write records as a tab-delimited table that [`ingest_files`] and
/// [`read_cohort`] both accept.
pub fn write_cohort<W: std::io::Write>(out: W, records: &[MesraRecord]) -> Result<()> {
    let err = |e: csv::Error| Error::Invalid(format!("writing cohort: {e}"));
    let mut w = csv::WriterBuilder::new()
        .delimiter(b'\t')
        .quote_style(csv::QuoteStyle::Never)
        .from_writer(out);
    w.write_record(COHORT_COLUMNS).map_err(err)?;
    for r in records {
        w.write_record([
            r.mesra_id.as_str(),
            &r.poet_id,
            &r.poem_id,
            &r.line_index.to_string(),
            &r.century.map(|c| c.to_string()).unwrap_or_default(),
            &r.meter,
            &r.form,
            &r.text_norm,
            &r.stream,
            &r.n_symbols.to_string(),
            &r.n_tokens.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Invalid(format!("writing cohort: {e}")))
}

/// Read a cohort table written by [`write_cohort`], taking identities and
/// metadata verbatim.
pub fn read_cohort(path: &Path, boundary: &str) -> Result<Vec<MesraRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .quoting(false)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::schema(path, format!("{other:?}")),
        })?;
    let headers = rdr.headers().map_err(|e| Error::schema(path, e.to_string()))?.clone();
    let pos = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::schema(path, format!("missing column `{name}`")))
    };
    let [poet, poem, line, century, meter, form, text, stream] =
        ["poet_name", "poem_id", "line_index", "century", "meter_code", "form", "line_text", "stream"].map(pos);
    let (poet, poem, line, century, meter, form, text, stream) =
        (poet?, poem?, line?, century?, meter?, form?, text?, stream?);
    let mut out = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::schema(path, e.to_string()))?;
        let get = |i: usize| rec.get(i).unwrap_or("");
        let bad = |c: &str| Error::schema(path, format!("row {}: bad `{c}`", n + 2));
        let (symbols, boundaries) = crate::phonology::split_symbols(get(stream), boundary);
        out.push(MesraRecord::new(
            get(poet).to_string(),
            false,
            get(poem).to_string(),
            get(line).parse().map_err(|_| bad("line_index"))?,
            match get(century) {
                "" => None,
                s => Some(s.parse().map_err(|_| bad("century"))?),
            },
            get(meter).to_string(),
            get(form).to_string(),
            get(text).to_string(),
            &symbols,
            &boundaries,
            boundary,
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_lengths_follow_stream() {
        let r = MesraRecord::new(
            "p".into(),
            false,
            "1".into(),
            0,
            None,
            "M01".into(),
            "ghazal".into(),
            "s a l # a m".into(),
            &["s", "a", "l", "a", "m"],
            &[3],
            "#",
        );
        assert_eq!((r.n_symbols, r.n_tokens), (5, 2));
        assert_eq!(r.stream, "s a l # a m");
    }
}
