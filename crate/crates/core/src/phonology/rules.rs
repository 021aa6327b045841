//! Longest-match grapheme → symbol transliteration rules.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::phonology::features::FeatureTable;

const DEFAULT_RULES: &str = include_str!("../../data/rules.tsv");

#[derive(Debug, Clone)]
struct Rule {
    grapheme: Vec<char>,
    symbols: Vec<String>,
    order: usize,
}

/// Rules are bucketed by first character and kept sorted longest-first,
/// then by file order, so the first prefix hit is the winning rule.
#[derive(Debug, Clone)]
pub struct RuleTable {
    by_first: HashMap<char, Vec<Rule>>,
    len: usize,
}

impl RuleTable {
    pub fn default_rules() -> Self {
        Self::parse(DEFAULT_RULES, Path::new("<default rules.tsv>")).expect("shipped rules parse")
    }

    pub fn default_source() -> &'static str {
        DEFAULT_RULES
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// One rule per line: `grapheme-sequence<TAB>symbol-sequence`, symbols
    /// separated by spaces. An empty symbol sequence deletes the grapheme.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut by_first: HashMap<char, Vec<Rule>> = HashMap::new();
        let mut len = 0;
        for (lineno, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (g, s) = line
                .split_once('\t')
                .ok_or_else(|| Error::schema(origin, format!("line {}: expected grapheme<TAB>symbols", lineno + 1)))?;
            let grapheme: Vec<char> = g.chars().collect();
            let Some(&first) = grapheme.first() else {
                return Err(Error::schema(origin, format!("line {}: empty grapheme", lineno + 1)));
            };
            let symbols = s.split_whitespace().map(str::to_string).collect();
            by_first.entry(first).or_default().push(Rule {
                grapheme,
                symbols,
                order: len,
            });
            len += 1;
        }
        for rules in by_first.values_mut() {
            rules.sort_by(|a, b| b.grapheme.len().cmp(&a.grapheme.len()).then(a.order.cmp(&b.order)));
        }
        Ok(RuleTable { by_first, len })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Symbols emitted by rules that have no entry in `table`.
    pub fn unknown_symbols(&self, table: &FeatureTable) -> Vec<String> {
        let mut missing: Vec<String> = self
            .by_first
            .values()
            .flatten()
            .flat_map(|r| r.symbols.iter())
            .filter(|s| table.lookup(s).is_none())
            .cloned()
            .collect();
        missing.sort();
        missing.dedup();
        missing
    }

    /// Longest rule matching at the start of `chars`: (graphemes consumed, symbols).
    pub fn longest_match(&self, chars: &[char]) -> Option<(usize, &[String])> {
        let first = chars.first()?;
        self.by_first
            .get(first)?
            .iter()
            .find(|r| chars.starts_with(&r.grapheme))
            .map(|r| (r.grapheme.len(), r.symbols.as_slice()))
    }
}
