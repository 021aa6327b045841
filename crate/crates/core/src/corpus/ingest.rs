//! Raw table ingestion: header-driven parsing, mesra splitting, identity
//! canonicalization and duplicate control.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::maps::{canonical_form, AliasTable, CenturyMap, MeterMap, UNKNOWN};
use crate::corpus::normalize::{normalize_bytes, normalize_text, ZWNJ};
use crate::corpus::MesraRecord;
use crate::error::{Error, Result};
use crate::phonology::{split_symbols, FeatureTable, ParseMode, RuleTable, StreamParser, UnknownPolicy};

/// Characters that mark mesra boundaries inside poem-level rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelimiterSpec {
    chars: Vec<char>,
}

impl DelimiterSpec {
    /// Rejects delimiters that would cut through a token.
    pub fn new(chars: impl IntoIterator<Item = char>) -> Result<Self> {
        let chars: Vec<char> = chars.into_iter().collect();
        if chars.is_empty() {
            return Err(Error::Config("mesra delimiter set is empty".into()));
        }
        for c in &chars {
            if *c == ' ' || *c == ZWNJ || c.is_alphanumeric() {
                return Err(Error::Config(format!(
                    "`{}` (U+{:04X}) cannot delimit mesras: it occurs inside tokens",
                    c.escape_default(),
                    *c as u32
                )));
            }
        }
        Ok(DelimiterSpec { chars })
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }
}

impl Default for DelimiterSpec {
    fn default() -> Self {
        DelimiterSpec {
            chars: vec!['|', '\n'],
        }
    }
}

/// Split a poem into mesra texts at the listed delimiters only.
pub fn split_mesras(poem_text: &str, delimiters: &DelimiterSpec) -> Result<Vec<String>> {
    let parts: Vec<String> = poem_text
        .split(|c| delimiters.chars.contains(&c))
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect();
    if parts.is_empty() {
        return Err(Error::Reject("poem has no non-empty mesra".into()));
    }
    Ok(parts)
}

/// How mesra text turns into a symbol stream during ingestion.
pub enum StreamSource {
    /// Text already holds whitespace-separated symbols.
    Prephonemized { boundary: String },
    /// Script text run through a rule table; unknowns handled per policy.
    RuleG2p {
        parser: Box<dyn StreamParser>,
        table: FeatureTable,
        policy: UnknownPolicy,
    },
}

impl StreamSource {
    pub fn prephonemized(boundary: impl Into<String>) -> Self {
        StreamSource::Prephonemized {
            boundary: boundary.into(),
        }
    }

    pub fn rule_g2p(table: FeatureTable, rules: RuleTable, policy: UnknownPolicy) -> Result<Self> {
        let parser = crate::phonology::parser_for(ParseMode::RuleG2p, Some(rules), &table)?;
        Ok(StreamSource::RuleG2p { parser, table, policy })
    }

    pub fn boundary(&self) -> &str {
        match self {
            StreamSource::Prephonemized { boundary } => boundary,
            StreamSource::RuleG2p { table, .. } => table.boundary_symbol(),
        }
    }

    fn symbols(&self, text: &str) -> Result<(Vec<String>, Vec<usize>)> {
        match self {
            StreamSource::Prephonemized { boundary } => {
                let (s, b) = split_symbols(text, boundary);
                Ok((s.into_iter().map(str::to_string).collect(), b))
            }
            StreamSource::RuleG2p { parser, table, policy } => {
                let parsed = parser.parse(text, table, *policy)?;
                let rendered = parsed.stream.render(table);
                let (s, b) = split_symbols(&rendered, table.boundary_symbol());
                Ok((s.into_iter().map(str::to_string).collect(), b))
            }
        }
    }
}

pub struct IngestConfig {
    /// Field delimiter of the input tables.
    pub delimiter: u8,
    pub mesra_delimiters: DelimiterSpec,
    pub aliases: AliasTable,
    pub meters: MeterMap,
    pub centuries: CenturyMap,
    pub source: StreamSource,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            delimiter: b'\t',
            mesra_delimiters: DelimiterSpec::default(),
            aliases: AliasTable::default(),
            meters: MeterMap::default_map(),
            centuries: CenturyMap::default(),
            source: StreamSource::prephonemized("#"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub source: String,
    /// 1-based line in the source table (header is line 1).
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct Ingested {
    pub records: Vec<MesraRecord>,
    pub rejected: Vec<Rejection>,
    pub duplicates: Vec<Rejection>,
    /// Canonical keys produced by slug fallback.
    pub unlisted_poets: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Col {
    PoetName,
    PoemId,
    Century,
    MeterCode,
    Form,
    LineText,
    LineIndex,
}

const COLUMN_NAMES: [(&str, Col); 7] = [
    ("poet_name", Col::PoetName),
    ("poem_id", Col::PoemId),
    ("century", Col::Century),
    ("meter_code", Col::MeterCode),
    ("form", Col::Form),
    ("line_text", Col::LineText),
    ("line_index", Col::LineIndex),
];

struct Layout {
    cols: [Option<usize>; 7],
    stream: Option<usize>,
}

impl Layout {
    fn get(&self, c: Col) -> Option<usize> {
        self.cols[c as usize]
    }
}

/// Candidate record with its provenance, used to resolve duplicates
/// independently of file order.
struct Candidate {
    record: MesraRecord,
    source: String,
    row: usize,
}

/// Ingest every file; output is sorted by (poet_id, poem_id, line_index)
/// and does not depend on the order of `paths`.
pub fn ingest_files(paths: &[PathBuf], config: &IngestConfig) -> Result<Ingested> {
    let per_file: Vec<Result<(Vec<Candidate>, Vec<Rejection>)>> =
        paths.par_iter().map(|p| ingest_file(p, config)).collect();
    let mut candidates = Vec::new();
    let mut out = Ingested::default();
    for r in per_file {
        let (c, rej) = r?;
        candidates.extend(c);
        out.rejected.extend(rej);
    }
    candidates.sort_by(|a, b| {
        a.record
            .sort_key()
            .cmp(&b.record.sort_key())
            .then_with(|| a.source.cmp(&b.source))
            .then(a.row.cmp(&b.row))
    });
    let mut unlisted = HashSet::new();
    let mut last: Option<(String, String, u32)> = None;
    for c in candidates {
        let key = (c.record.poet_id.clone(), c.record.poem_id.clone(), c.record.line_index);
        if last.as_ref() == Some(&key) {
            log::info!("duplicate mesra {} at {}:{}", c.record.mesra_id, c.source, c.row);
            out.duplicates.push(Rejection {
                source: c.source,
                row: c.row,
                reason: format!("duplicate of {}", c.record.mesra_id),
            });
            continue;
        }
        if c.record.poet_unlisted {
            unlisted.insert(c.record.poet_id.clone());
        }
        last = Some(key);
        out.records.push(c.record);
    }
    out.rejected.sort_by(|a, b| (&a.source, a.row).cmp(&(&b.source, b.row)));
    out.unlisted_poets = unlisted.into_iter().collect();
    out.unlisted_poets.sort();
    Ok(out)
}

fn ingest_file(path: &Path, config: &IngestConfig) -> Result<(Vec<Candidate>, Vec<Rejection>)> {
    let source = path.display().to_string();
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(config.delimiter)
        .quoting(config.delimiter != b'\t')
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::schema(path, format!("{other:?}")),
        })?;
    let header = rdr.byte_headers().map_err(|e| Error::schema(path, e.to_string()))?.clone();
    let names: Vec<String> = header
        .iter()
        .map(|h| String::from_utf8_lossy(h).trim().trim_start_matches('\u{feff}').to_ascii_lowercase())
        .collect();
    let mut layout = Layout {
        cols: [None; 7],
        stream: names.iter().position(|n| n == "stream"),
    };
    for (name, col) in COLUMN_NAMES {
        layout.cols[col as usize] = names.iter().position(|n| n == name);
    }
    for required in [Col::PoetName, Col::LineText] {
        if layout.get(required).is_none() {
            let name = COLUMN_NAMES.iter().find(|(_, c)| *c == required).unwrap().0;
            return Err(Error::schema(path, format!("missing required column `{name}`")));
        }
    }
    let poem_rows = layout.get(Col::LineIndex).is_none();

    let mut candidates = Vec::new();
    let mut rejected = Vec::new();
    let mut poem_ordinal: std::collections::HashMap<String, usize> = Default::default();
    let mut prev_line: std::collections::HashMap<String, u32> = Default::default();

    for (n, rec) in rdr.byte_records().enumerate() {
        let row = n + 2;
        let reject = |reason: String| Rejection {
            source: source.clone(),
            row,
            reason,
        };
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                rejected.push(reject(format!("unreadable row: {e}")));
                continue;
            }
        };
        let field = |c: Col| -> Result<Option<String>> {
            match layout.get(c).and_then(|i| rec.get(i)) {
                None => Ok(None),
                Some(b) => normalize_bytes(b).map(|s| (!s.is_empty()).then_some(s)),
            }
        };
        let parsed = (|| -> Result<Vec<MesraRecord>> {
            let poet_name = field(Col::PoetName)?.ok_or_else(|| Error::Reject("empty poet_name".into()))?;
            let text = layout
                .get(Col::LineText)
                .and_then(|i| rec.get(i))
                .map(|b| std::str::from_utf8(b).map(str::to_string))
                .transpose()
                .map_err(|e| Error::Reject(format!("invalid UTF-8 at byte {}", e.valid_up_to())))?
                .unwrap_or_default();
            let poet = config.aliases.canonicalize(&poet_name);
            let meter = config
                .meters
                .canonicalize(field(Col::MeterCode)?.as_deref())
                .unwrap_or_else(|| UNKNOWN.to_string());
            let form = canonical_form(field(Col::Form)?.as_deref());
            let century = match config.centuries.get(&poet.id) {
                Some(c) => Some(c),
                None => field(Col::Century)?
                    .map(|s| s.parse::<i32>().map_err(|_| Error::Reject(format!("century `{s}` is not an integer"))))
                    .transpose()?,
            };
            let line_index: Option<u32> = field(Col::LineIndex)?
                .map(|s| s.parse::<u32>().map_err(|_| Error::Reject(format!("line_index `{s}` is not a non-negative integer"))))
                .transpose()?;

            let poem_id = match field(Col::PoemId)? {
                Some(p) => p,
                None => {
                    // Synthesize from (poet, file, ordinal). In mesra-row files a
                    // new poem starts whenever the line index fails to advance.
                    let ord = poem_ordinal.entry(poet.id.clone()).or_insert(0);
                    if !poem_rows {
                        let prev = prev_line.get(&poet.id).copied();
                        if prev.is_some_and(|p| Some(p) >= line_index) {
                            *ord += 1;
                        }
                        prev_line.insert(poet.id.clone(), line_index.unwrap_or(0));
                    } else {
                        *ord += 1;
                    }
                    format!("{}:{}:{}", poet.id, stem, ord)
                }
            };

            let lines: Vec<(u32, String)> = if poem_rows {
                split_mesras(&text, &config.mesra_delimiters)?
                    .into_iter()
                    .enumerate()
                    .map(|(i, t)| (i as u32, t))
                    .collect()
            } else {
                vec![(line_index.unwrap_or(0), text)]
            };

            let mut out = Vec::with_capacity(lines.len());
            for (idx, raw_line) in lines {
                let text_norm = normalize_text(&raw_line);
                if text_norm.is_empty() {
                    return Err(Error::Reject("empty line_text".into()));
                }
                let stream_text = match layout.stream.and_then(|i| rec.get(i)) {
                    Some(b) if !poem_rows && !b.is_empty() => normalize_bytes(b)?,
                    _ => text_norm.clone(),
                };
                let (symbols, boundaries) = config.source.symbols(&stream_text)?;
                if symbols.is_empty() {
                    return Err(Error::Reject("empty symbol stream".into()));
                }
                out.push(MesraRecord::new(
                    poet.id.clone(),
                    poet.unlisted,
                    poem_id.clone(),
                    idx,
                    century,
                    meter.clone(),
                    form.clone(),
                    text_norm,
                    &symbols,
                    &boundaries,
                    config.source.boundary(),
                ));
            }
            Ok(out)
        })();
        match parsed {
            Ok(records) => candidates.extend(records.into_iter().map(|record| Candidate {
                record,
                source: source.clone(),
                row,
            })),
            Err(Error::Reject(reason)) => rejected.push(reject(reason)),
            Err(e) => return Err(e),
        }
    }
    Ok((candidates, rejected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn split_on_listed_delimiters_only() {
        let tab = DelimiterSpec::new(['\t']).unwrap();
        assert_eq!(split_mesras("A\tB", &tab).unwrap(), ["A", "B"]);
        assert_eq!(split_mesras("A B", &tab).unwrap(), ["A B"]);
        assert_eq!(split_mesras("A\t\t B \t", &tab).unwrap(), ["A", "B"]);
        assert!(matches!(split_mesras(" \t ", &tab), Err(Error::Reject(_))));
    }

    #[test]
    fn token_internal_delimiters_refused() {
        assert!(DelimiterSpec::new([' ']).is_err());
        assert!(DelimiterSpec::new([ZWNJ]).is_err());
        assert!(DelimiterSpec::new(Vec::<char>::new()).is_err());
    }

    proptest! {
        #[test]
        fn resplit_recovers_fragments(
            frags in proptest::collection::vec("[a-zسلام]{1,6}( [a-zسلام]{1,6}){0,3}", 1..8),
            seps in proptest::collection::vec(proptest::sample::select(vec!["|", "\n", "|\n", "||"]), 8),
        ) {
            let spec = DelimiterSpec::default();
            let mut poem = String::new();
            for (i, f) in frags.iter().enumerate() {
                if i > 0 { poem.push_str(seps[i % seps.len()]); }
                poem.push_str(f);
            }
            prop_assert_eq!(split_mesras(&poem, &spec).unwrap(), frags);
        }
    }
}
