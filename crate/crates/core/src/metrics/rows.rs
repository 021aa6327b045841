//! Mesra-level metric rows and their CSV form.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use crate::corpus::MesraRecord;
use crate::error::{Error, Result};
use crate::metrics::{metric_vector, MetricVector};
use crate::phonology::{parse_stream, FeatureTable, ParseMode, UnknownPolicy};

pub const COLUMNS: [&str; 15] = [
    "mesra_id",
    "poet_id",
    "poem_id",
    "line_index",
    "century",
    "meter",
    "form",
    "hardness",
    "sonority",
    "sibilance",
    "vowel_ratio",
    "entropy",
    "cluster_ratio",
    "n_symbols",
    "n_tokens",
];

/// One mesra joined with its metadata and metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub mesra_id: String,
    pub poet_id: String,
    pub poem_id: String,
    pub line_index: u32,
    pub century: Option<i32>,
    pub meter: String,
    pub form: String,
    pub metrics: MetricVector,
}

impl MetricRow {
    /// Clustering key: poem ids are only unique within a poet.
    pub fn poem_key(&self) -> String {
        format!("{}/{}", self.poet_id, self.poem_id)
    }

    pub fn sort_key(&self) -> (&str, &str, u32) {
        (&self.poet_id, &self.poem_id, self.line_index)
    }
}

/// A cohort mesra the metrics stage could not score.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricReject {
    pub mesra_id: String,
    pub reason: String,
}

/// Score every record against `table`. Output keeps input order; records
/// whose stream fails under `policy` are returned as rejects.
pub fn compute_rows(
    records: &[MesraRecord],
    table: &FeatureTable,
    policy: UnknownPolicy,
) -> Result<(Vec<MetricRow>, Vec<MetricReject>)> {
    let scored: Vec<Result<MetricRow>> = records
        .par_iter()
        .map(|r| {
            let parsed = parse_stream(&r.stream, table, ParseMode::Prephonemized, policy)?;
            Ok(MetricRow {
                mesra_id: r.mesra_id.clone(),
                poet_id: r.poet_id.clone(),
                poem_id: r.poem_id.clone(),
                line_index: r.line_index,
                century: r.century,
                meter: r.meter.clone(),
                form: r.form.clone(),
                metrics: metric_vector(&parsed.stream, table)?,
            })
        })
        .collect();
    let mut rows = Vec::with_capacity(scored.len());
    let mut rejects = Vec::new();
    for (rec, res) in records.iter().zip(scored) {
        match res {
            Ok(row) => rows.push(row),
            Err(Error::Reject(reason)) => rejects.push(MetricReject {
                mesra_id: rec.mesra_id.clone(),
                reason,
            }),
            Err(e) => return Err(e),
        }
    }
    Ok((rows, rejects))
}

pub fn sort_rows(rows: &mut [MetricRow]) {
    rows.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_rows<W: Write>(out: W, rows: &[MetricRow]) -> Result<()> {
    let io = |e: csv::Error| Error::Invalid(format!("writing metrics: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS).map_err(io)?;
    for r in rows {
        let m = &r.metrics;
        w.write_record([
            r.mesra_id.clone(),
            r.poet_id.clone(),
            r.poem_id.clone(),
            r.line_index.to_string(),
            fmt_opt(r.century),
            r.meter.clone(),
            r.form.clone(),
            m.hardness.to_string(),
            m.sonority.to_string(),
            fmt_opt(m.sibilance),
            m.vowel_ratio.to_string(),
            m.entropy.to_string(),
            m.cluster_ratio.to_string(),
            m.n_symbols.to_string(),
            m.n_tokens.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Invalid(format!("writing metrics: {e}")))?;
    Ok(())
}

pub fn read_rows<R: Read>(input: R, origin: &Path) -> Result<Vec<MetricRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers().map_err(|e| Error::schema(origin, e.to_string()))?.clone();
    let mut idx = [0usize; 15];
    for (slot, name) in idx.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::schema(origin, format!("missing column `{name}`")))?;
    }
    let mut rows = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::schema(origin, e.to_string()))?;
        let at = |i: usize| rec.get(idx[i]).unwrap_or("");
        let bad = |col: &str| Error::schema(origin, format!("row {}: bad `{col}` value", n + 2));
        let num = |i: usize| at(i).parse::<f64>().map_err(|_| bad(COLUMNS[i]));
        let int = |i: usize| at(i).parse::<usize>().map_err(|_| bad(COLUMNS[i]));
        let opt_num = |i: usize| match at(i) {
            "" => Ok(None),
            s => s.parse::<f64>().map(Some).map_err(|_| bad(COLUMNS[i])),
        };
        rows.push(MetricRow {
            mesra_id: at(0).to_string(),
            poet_id: at(1).to_string(),
            poem_id: at(2).to_string(),
            line_index: at(3).parse().map_err(|_| bad("line_index"))?,
            century: match at(4) {
                "" => None,
                s => Some(s.parse().map_err(|_| bad("century"))?),
            },
            meter: at(5).to_string(),
            form: at(6).to_string(),
            metrics: MetricVector {
                hardness: num(7)?,
                sonority: num(8)?,
                sibilance: opt_num(9)?,
                vowel_ratio: num(10)?,
                entropy: num(11)?,
                cluster_ratio: num(12)?,
                n_symbols: int(13)?,
                n_tokens: int(14)?,
            },
        });
    }
    Ok(rows)
}

pub fn read_rows_path(path: &Path) -> Result<Vec<MetricRow>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_rows(std::io::BufReader::new(f), path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(sib: Option<f64>) -> MetricRow {
        MetricRow {
            mesra_id: "p/1/0".into(),
            poet_id: "p".into(),
            poem_id: "1".into(),
            line_index: 0,
            century: None,
            meter: "M01".into(),
            form: "ghazal".into(),
            metrics: MetricVector {
                hardness: 1.0 / 3.0,
                sonority: 3.1,
                sibilance: sib,
                vowel_ratio: 0.4,
                cluster_ratio: 0.1,
                entropy: 3.3,
                n_symbols: 30,
                n_tokens: 7,
            },
        }
    }

    #[test]
    fn missing_serialises_as_empty_and_values_roundtrip_exactly() {
        let rows = vec![row(None), row(Some(0.2))];
        let mut buf = Vec::new();
        write_rows(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().nth(1).unwrap().contains(",3.1,,0.4,"));
        let back = read_rows(&buf[..], Path::new("m.csv")).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn missing_column_is_schema_error() {
        let err = read_rows(&b"mesra_id,poet_id\n"[..], Path::new("m.csv")).unwrap_err();
        assert!(matches!(err, Error::Schema { .. }));
    }
}
