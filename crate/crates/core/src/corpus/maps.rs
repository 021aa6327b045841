//! `raw<TAB>canonical` mapping files: poet aliases, meter labels and poet
//! centuries.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use crate::corpus::normalize::{normalize_text, slug};
use crate::error::{Error, Result};

pub const METER_OTHER: &str = "OTHER";
pub const UNKNOWN: &str = "UNKNOWN";

/// Canonical retained meter keys and their display names.
pub const RETAINED_METERS: [(&str, &str); 5] = [
    ("M01", "mutaqarib"),
    ("M02", "hazaj"),
    ("M03", "ramal"),
    ("M04", "mujtass"),
    ("M05", "muzari'"),
];

pub fn meter_display_name(key: &str) -> &str {
    RETAINED_METERS
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, name)| *name)
        .unwrap_or(key)
}

/// Parse `raw<TAB>canonical` lines. Blank lines and lines starting with
/// `#` are ignored.
pub fn parse_pairs(text: &str, origin: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (raw, canon) = line
            .split_once('\t')
            .ok_or_else(|| Error::schema(origin, format!("line {}: expected raw<TAB>canonical", n + 1)))?;
        let (raw, canon) = (raw.trim(), canon.trim());
        if raw.is_empty() || canon.is_empty() {
            return Err(Error::schema(origin, format!("line {}: empty key or value", n + 1)));
        }
        out.push((raw.to_string(), canon.to_string()));
    }
    Ok(out)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn fold(s: &str) -> String {
    normalize_text(s).to_lowercase()
}

#[derive(Debug, Clone, Default)]
pub struct AliasTable {
    map: HashMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoetKey {
    pub id: String,
    /// The name had no alias entry and was slugified.
    pub unlisted: bool,
}

impl AliasTable {
    pub fn load(path: &Path) -> Result<Self> {
        Self::from_pairs(parse_pairs(&read(path)?, path)?)
    }

    /// Each alias must resolve to exactly one canonical key; every
    /// conflict is reported. Canonical keys resolve to themselves.
    pub fn from_pairs(pairs: Vec<(String, String)>) -> Result<Self> {
        let mut map: HashMap<String, String> = HashMap::new();
        let mut conflicts = Vec::new();
        let mut insert = |alias: String, canon: &str, map: &mut HashMap<String, String>| match map.get(&alias) {
            Some(prev) if prev != canon => {
                conflicts.push(format!("alias `{alias}` maps to both `{prev}` and `{canon}`"))
            }
            _ => {
                map.insert(alias, canon.to_string());
            }
        };
        for (raw, canon) in &pairs {
            insert(fold(raw), canon, &mut map);
        }
        for (_, canon) in &pairs {
            insert(fold(canon), canon, &mut map);
        }
        if conflicts.is_empty() {
            Ok(AliasTable { map })
        } else {
            conflicts.sort();
            conflicts.dedup();
            Err(Error::Config(conflicts.join("; ")))
        }
    }

    pub fn canonicalize(&self, name: &str) -> PoetKey {
        match self.map.get(&fold(name)) {
            Some(id) => PoetKey {
                id: id.clone(),
                unlisted: false,
            },
            None => PoetKey {
                id: slug(name),
                unlisted: true,
            },
        }
    }
}

/// Raw meter labels → canonical keys. Unmapped labels become [`METER_OTHER`].
#[derive(Debug, Clone, Default)]
pub struct MeterMap {
    map: HashMap<String, String>,
}

impl MeterMap {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::from_pairs(parse_pairs(&read(path)?, path)?))
    }

    pub fn from_pairs(pairs: Vec<(String, String)>) -> Self {
        let mut map = HashMap::new();
        for (raw, canon) in pairs {
            map.insert(fold(&canon), canon.clone());
            map.insert(fold(&raw), canon);
        }
        MeterMap { map }
    }

    /// Transliteration variants of the five retained meter names.
    pub fn default_map() -> Self {
        let pairs = [
            ("mutaqarib", "M01"),
            ("mutagharib", "M01"),
            ("motaqareb", "M01"),
            ("متقارب", "M01"),
            ("hazaj", "M02"),
            ("hazaj musaddas", "M02"),
            ("هزج", "M02"),
            ("ramal", "M03"),
            ("رمل", "M03"),
            ("mujtass", "M04"),
            ("mujtath", "M04"),
            ("mojtas", "M04"),
            ("مجتث", "M04"),
            ("muzari'", "M05"),
            ("muzari", "M05"),
            ("modar", "M05"),
            ("مضارع", "M05"),
        ];
        Self::from_pairs(pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect())
    }

    /// `None` for a missing label; [`METER_OTHER`] for an unmapped one.
    pub fn canonicalize(&self, raw: Option<&str>) -> Option<String> {
        let raw = raw.map(str::trim).filter(|s| !s.is_empty())?;
        Some(self.map.get(&fold(raw)).cloned().unwrap_or_else(|| METER_OTHER.to_string()))
    }
}

#[derive(Debug, Clone, Default)]
pub struct CenturyMap {
    map: BTreeMap<String, i32>,
}

impl CenturyMap {
    pub fn load(path: &Path) -> Result<Self> {
        let pairs = parse_pairs(&read(path)?, path)?;
        let mut map = BTreeMap::new();
        for (poet, c) in pairs {
            let c: i32 = c
                .parse()
                .map_err(|_| Error::schema(path, format!("century `{c}` for `{poet}` is not an integer")))?;
            map.insert(poet, c);
        }
        Ok(CenturyMap { map })
    }

    pub fn from_map(map: BTreeMap<String, i32>) -> Self {
        CenturyMap { map }
    }

    pub fn get(&self, poet_id: &str) -> Option<i32> {
        self.map.get(poet_id).copied()
    }
}

/// Canonical form key: trimmed lower-case, [`UNKNOWN`] when absent.
pub fn canonical_form(raw: Option<&str>) -> String {
    match raw.map(|s| normalize_text(s).to_lowercase()) {
        Some(s) if !s.is_empty() => s,
        _ => UNKNOWN.to_string(),
    }
}
