//! Per-symbol articulatory profiles and their validated lookup table.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the reserved row that declares the word-boundary symbol.
pub const BOUNDARY_ROW: &str = "#BOUNDARY";

const DEFAULT_TABLE: &str = include_str!("../../data/features.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SegmentClass {
    Vowel,
    Stop,
    Fricative,
    Affricate,
    Nasal,
    Liquid,
    Glide,
}

impl SegmentClass {
    pub fn is_consonant(self) -> bool {
        self != SegmentClass::Vowel
    }
}

impl FromStr for SegmentClass {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s.trim().to_ascii_uppercase().as_str() {
            "VOWEL" => SegmentClass::Vowel,
            "STOP" => SegmentClass::Stop,
            "FRICATIVE" => SegmentClass::Fricative,
            "AFFRICATE" => SegmentClass::Affricate,
            "NASAL" => SegmentClass::Nasal,
            "LIQUID" => SegmentClass::Liquid,
            "GLIDE" => SegmentClass::Glide,
            other => return Err(format!("unknown segment class `{other}`")),
        })
    }
}

impl fmt::Display for SegmentClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SegmentClass::Vowel => "VOWEL",
            SegmentClass::Stop => "STOP",
            SegmentClass::Fricative => "FRICATIVE",
            SegmentClass::Affricate => "AFFRICATE",
            SegmentClass::Nasal => "NASAL",
            SegmentClass::Liquid => "LIQUID",
            SegmentClass::Glide => "GLIDE",
        };
        f.write_str(s)
    }
}

/// Place of articulation. Optional in the table; only needed to check the
/// dental-stop hardness band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Place {
    Labial,
    Dental,
    Alveolar,
    Postalveolar,
    Palatal,
    Velar,
    Uvular,
    Glottal,
}

impl FromStr for Place {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "labial" => Place::Labial,
            "dental" => Place::Dental,
            "alveolar" => Place::Alveolar,
            "postalveolar" => Place::Postalveolar,
            "palatal" => Place::Palatal,
            "velar" => Place::Velar,
            "uvular" => Place::Uvular,
            "glottal" => Place::Glottal,
            other => return Err(format!("unknown place `{other}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhonemeFeature {
    pub symbol: String,
    pub segment_class: SegmentClass,
    pub voiced: bool,
    pub strident: bool,
    pub hardness: f64,
    pub sonority: f64,
    pub place: Option<Place>,
}

impl PhonemeFeature {
    #[inline]
    pub fn is_vowel(&self) -> bool {
        self.segment_class == SegmentClass::Vowel
    }

    #[inline]
    pub fn is_consonant(&self) -> bool {
        self.segment_class.is_consonant()
    }

    /// Every band violation of this entry, as human-readable messages.
    pub fn violations(&self) -> Vec<String> {
        use SegmentClass::*;
        let mut out = Vec::new();
        let sym = &self.symbol;
        let within = |x: f64, lo: f64, hi: f64| x >= lo - 1e-9 && x <= hi + 1e-9;

        if self.strident && !matches!(self.segment_class, Fricative | Affricate) {
            out.push(format!(
                "`{sym}`: strident requires FRICATIVE or AFFRICATE, found {}",
                self.segment_class
            ));
        }
        if !within(self.hardness, 0.0, 4.9) {
            out.push(format!("`{sym}`: hardness {} outside [0, 4.9]", self.hardness));
        }
        if !within(self.sonority, 0.0, 5.0) {
            out.push(format!("`{sym}`: sonority {} outside [0, 5]", self.sonority));
        }

        let (son_lo, son_hi) = match self.segment_class {
            Stop => (1.0, 1.0),
            Fricative | Affricate => (2.0, 2.0),
            Nasal => (3.0, 3.0),
            Liquid => (3.5, 3.7),
            Glide => (4.1, 4.2),
            Vowel => (5.0, 5.0),
        };
        if !within(self.sonority, son_lo, son_hi) {
            out.push(format!(
                "`{sym}`: {} sonority {} outside band [{son_lo}, {son_hi}]",
                self.segment_class, self.sonority
            ));
        }

        let hard_band = match self.segment_class {
            Vowel => Some((0.5, 0.5, "VOWEL")),
            Liquid | Nasal => Some((1.2, 2.0, "LIQUID/NASAL")),
            Fricative if self.voiced => Some((2.5, 2.8, "voiced FRICATIVE")),
            Stop if self.place == Some(Place::Dental) => Some((3.0, 4.0, "dental STOP")),
            _ => None,
        };
        if let Some((lo, hi, label)) = hard_band {
            if !within(self.hardness, lo, hi) {
                out.push(format!(
                    "`{sym}`: {label} hardness {} outside band [{lo}, {hi}]",
                    self.hardness
                ));
            }
        }
        out
    }
}

/// Interned symbol index into a [`FeatureTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolId(pub u16);

impl SymbolId {
    /// Neutral pseudo-symbol produced by the `other` unknown-symbol policy.
    /// It has no feature entry and is excluded from every metric.
    pub const OTHER: SymbolId = SymbolId(u16::MAX);
}

/// Validated, immutable symbol → feature map.
#[derive(Debug, Clone)]
pub struct FeatureTable {
    entries: Vec<PhonemeFeature>,
    index: HashMap<String, SymbolId>,
    boundary: String,
    version: String,
}

impl FeatureTable {
    /// The table shipped with the crate.
    pub fn default_table() -> Self {
        Self::parse(DEFAULT_TABLE, Path::new("<default features.tsv>"))
            .expect("shipped feature table must validate")
    }

    pub fn default_source() -> &'static str {
        DEFAULT_TABLE
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Parse and validate a tab-delimited table. Every violation is
    /// collected before failing.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::schema(origin, "empty feature table"))?;
        let cols: Vec<String> = header.split('\t').map(|c| c.trim().to_ascii_lowercase()).collect();
        let required = ["symbol", "class", "voiced", "strident", "hardness", "sonority"];
        let mut problems = Vec::new();
        let mut pos = HashMap::new();
        for name in required.iter().chain(["place"].iter()) {
            match cols.iter().position(|c| c == name) {
                Some(i) => {
                    pos.insert(*name, i);
                }
                None if *name != "place" => problems.push(format!("missing required column `{name}`")),
                None => {}
            }
        }
        if !problems.is_empty() {
            return Err(Error::FeatureTable(problems));
        }

        let mut entries: Vec<PhonemeFeature> = Vec::new();
        let mut index = HashMap::new();
        let mut boundary: Option<String> = None;

        for (lineno, line) in lines {
            let fields: Vec<&str> = line.split('\t').collect();
            let get = |name: &str| pos.get(name).and_then(|&i| fields.get(i)).map(|s| s.trim()).unwrap_or("");
            let symbol = get("symbol");
            let at = format!("line {}", lineno + 1);
            if symbol == BOUNDARY_ROW {
                let b = fields.get(1).map(|s| s.trim()).unwrap_or("");
                if b.is_empty() {
                    problems.push(format!("{at}: {BOUNDARY_ROW} row names no symbol"));
                } else if boundary.replace(b.to_string()).is_some() {
                    problems.push(format!("{at}: duplicate {BOUNDARY_ROW} row"));
                }
                continue;
            }
            if symbol.is_empty() {
                problems.push(format!("{at}: empty symbol"));
                continue;
            }
            if symbol.chars().any(char::is_whitespace) {
                problems.push(format!("{at}: symbol `{symbol}` contains whitespace"));
                continue;
            }
            let class = get("class").parse::<SegmentClass>();
            let voiced = parse_bool(get("voiced"));
            let strident = parse_bool(get("strident"));
            let hardness = get("hardness").parse::<f64>();
            let sonority = get("sonority").parse::<f64>();
            let place = match get("place") {
                "" => Ok(None),
                p => p.parse::<Place>().map(Some),
            };
            let entry = match (class, voiced, strident, hardness, sonority, place) {
                (Ok(c), Some(v), Some(st), Ok(h), Ok(so), Ok(pl)) if h.is_finite() && so.is_finite() => {
                    PhonemeFeature {
                        symbol: symbol.to_string(),
                        segment_class: c,
                        voiced: v,
                        strident: st,
                        hardness: h,
                        sonority: so,
                        place: pl,
                    }
                }
                _ => {
                    problems.push(format!("{at}: `{symbol}` has unparseable fields"));
                    continue;
                }
            };
            if index.contains_key(symbol) {
                problems.push(format!("{at}: duplicate symbol `{symbol}`"));
                continue;
            }
            problems.extend(entry.violations());
            if entries.len() >= u16::MAX as usize {
                problems.push("too many symbols".into());
                break;
            }
            index.insert(symbol.to_string(), SymbolId(entries.len() as u16));
            entries.push(entry);
        }

        match &boundary {
            None => problems.push(format!("missing {BOUNDARY_ROW} row")),
            Some(b) if index.contains_key(b) => {
                problems.push(format!("boundary symbol `{b}` must not have a feature entry"))
            }
            _ => {}
        }
        if entries.is_empty() {
            problems.push("table has no symbols".into());
        }
        if !problems.is_empty() {
            return Err(Error::FeatureTable(problems));
        }
        Ok(FeatureTable {
            entries,
            index,
            boundary: boundary.unwrap_or_default(),
            version: format!("fnv1a64:{:016x}", fnv1a64(text.as_bytes())),
        })
    }

    pub fn boundary_symbol(&self) -> &str {
        &self.boundary
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn lookup(&self, symbol: &str) -> Option<SymbolId> {
        self.index.get(symbol).copied()
    }

    /// Feature record for an interned symbol; `None` for [`SymbolId::OTHER`].
    #[inline]
    pub fn feature(&self, id: SymbolId) -> Option<&PhonemeFeature> {
        self.entries.get(id.0 as usize)
    }

    pub fn entries(&self) -> &[PhonemeFeature] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn hardness_range(&self) -> (f64, f64) {
        range(self.entries.iter().map(|e| e.hardness))
    }
}

fn range(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "y" => Some(true),
        "false" | "0" | "no" | "n" => Some(false),
        _ => None,
    }
}

pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "symbol\tclass\tvoiced\tstrident\thardness\tsonority\tplace\n#BOUNDARY\t#\n";

    fn table_with(rows: &str) -> Result<FeatureTable> {
        FeatureTable::parse(&format!("{HEADER}{rows}"), Path::new("test.tsv"))
    }

    fn violations_of(rows: &str) -> Vec<String> {
        match table_with(rows) {
            Err(Error::FeatureTable(v)) => v,
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn default_table_passes_every_band() {
        let t = FeatureTable::default_table();
        assert_eq!(t.boundary_symbol(), "#");
        for e in t.entries() {
            assert!(e.violations().is_empty(), "{e:?}");
        }
        let lookup = |s: &str| t.feature(t.lookup(s).unwrap()).unwrap().clone();
        assert_eq!(lookup("t").hardness, 3.5);
        assert_eq!(lookup("d").hardness, 3.0);
        assert_eq!(lookup("q").hardness, 4.9);
        assert_eq!(lookup("r").sonority, 3.7);
        assert_eq!(lookup("l").sonority, 3.5);
        assert_eq!(lookup("y").sonority, 4.2);
        assert_eq!(lookup("x").hardness, 4.7);
    }

    #[test]
    fn vowel_sonority_off_band_names_symbol() {
        let v = violations_of("a\tVOWEL\ttrue\tfalse\t0.5\t4.9\t\n");
        assert!(v.iter().any(|m| m.contains("`a`") && m.contains("sonority")), "{v:?}");
    }

    #[test]
    fn strident_nasal_rejected() {
        let v = violations_of("n\tNASAL\ttrue\ttrue\t1.8\t3.0\tdental\n");
        assert!(v.iter().any(|m| m.contains("`n`") && m.contains("strident")), "{v:?}");
    }

    #[test]
    fn one_violation_per_band_all_reported() {
        let rows = [
            "p\tSTOP\tfalse\tfalse\t3.0\t1.5\tlabial",   // stop sonority
            "f\tFRICATIVE\tfalse\tfalse\t2.0\t2.2\t",     // fricative sonority
            "m\tNASAL\ttrue\tfalse\t1.8\t2.9\t",          // nasal sonority
            "l\tLIQUID\ttrue\tfalse\t1.5\t3.9\t",         // liquid sonority
            "y\tGLIDE\ttrue\tfalse\t1.0\t4.0\t",          // glide sonority
            "o\tVOWEL\ttrue\tfalse\t0.7\t5.0\t",          // vowel hardness
            "r\tLIQUID\ttrue\tfalse\t2.1\t3.7\t",         // liquid hardness
            "z\tFRICATIVE\ttrue\ttrue\t2.9\t2.0\t",       // voiced fricative hardness
            "t\tSTOP\tfalse\tfalse\t4.1\t1.0\tdental",    // dental stop hardness
            "q\tSTOP\ttrue\tfalse\t5.0\t1.0\tuvular",     // global hardness cap
        ];
        let v = violations_of(&(rows.join("\n") + "\n"));
        for sym in ["p", "f", "m", "l", "y", "o", "r", "z", "t", "q"] {
            assert!(v.iter().any(|m| m.contains(&format!("`{sym}`"))), "no violation for {sym}: {v:?}");
        }
        assert_eq!(v.len(), 10, "{v:?}");
    }

    #[test]
    fn duplicate_and_missing_columns() {
        let v = violations_of("a\tVOWEL\ttrue\tfalse\t0.5\t5.0\t\na\tVOWEL\ttrue\tfalse\t0.5\t5.0\t\n");
        assert!(v.iter().any(|m| m.contains("duplicate symbol `a`")));

        let err = FeatureTable::parse("symbol\tclass\tvoiced\n#BOUNDARY\t#\n", Path::new("x")).unwrap_err();
        match err {
            Error::FeatureTable(v) => {
                assert_eq!(v.len(), 3, "{v:?}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn boundary_symbol_must_be_structural() {
        let v = violations_of("#\tVOWEL\ttrue\tfalse\t0.5\t5.0\t\n");
        assert!(v.iter().any(|m| m.contains("boundary symbol")));
    }

    #[test]
    fn valid_minimal_table() {
        let t = table_with("a\tVOWEL\ttrue\tfalse\t0.5\t5.0\t\ns\tFRICATIVE\tfalse\ttrue\t2.4\t2.0\t\n").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.hardness_range(), (0.5, 2.4));
    }
}
