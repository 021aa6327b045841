//! Symbol streams and the parsers that produce them.
//!
//! Two parsers ship: [`Prephonemized`] reads whitespace-separated symbol
//! tokens with an explicit boundary symbol, and [`RuleG2p`] transliterates
//! pointed Persian script through a longest-match [`RuleTable`]. Both sit
//! behind [`StreamParser`] and are selected by [`ParseMode`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phonology::features::{FeatureTable, PhonemeFeature, SymbolId};
use crate::phonology::rules::RuleTable;

/// What to do with a character or token that has no rule or table entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnknownPolicy {
    /// Reject the mesra.
    #[default]
    Strict,
    /// Drop the symbol and count it.
    Skip,
    /// Keep a neutral placeholder that no metric reads.
    Other,
}

impl FromStr for UnknownPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "strict" => Ok(UnknownPolicy::Strict),
            "skip" => Ok(UnknownPolicy::Skip),
            "other" => Ok(UnknownPolicy::Other),
            _ => Err(Error::Config(format!("unknown-symbol policy `{s}` (strict|skip|other)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParseMode {
    #[default]
    Prephonemized,
    RuleG2p,
}

impl ParseMode {
    pub const NAMES: [&'static str; 2] = ["prephonemized", "rule-g2p"];
}

impl FromStr for ParseMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "prephonemized" => Ok(ParseMode::Prephonemized),
            "rule-g2p" => Ok(ParseMode::RuleG2p),
            _ => Err(Error::UnknownStrategy {
                kind: "parse mode",
                name: s.to_string(),
                available: Self::NAMES.iter().map(|s| s.to_string()).collect(),
            }),
        }
    }
}

impl fmt::Display for ParseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParseMode::Prephonemized => "prephonemized",
            ParseMode::RuleG2p => "rule-g2p",
        })
    }
}

/// Ordered symbols of one mesra plus the positions where word boundaries
/// fall. A boundary at position `p` sits between `symbols[p-1]` and
/// `symbols[p]`; boundaries are strictly increasing and interior.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SymbolStream {
    pub symbols: Vec<SymbolId>,
    pub boundaries: Vec<usize>,
}

impl SymbolStream {
    pub fn n_tokens(&self) -> usize {
        self.boundaries.len() + 1
    }

    /// Symbols with a feature entry (excludes the `other` placeholder).
    pub fn n_segments(&self) -> usize {
        self.symbols.iter().filter(|s| **s != SymbolId::OTHER).count()
    }

    /// Serialize back into prephonemized form.
    pub fn render(&self, table: &FeatureTable) -> String {
        let mut out = String::new();
        let mut next_boundary = self.boundaries.iter().peekable();
        for (i, sym) in self.symbols.iter().enumerate() {
            if next_boundary.peek() == Some(&&i) {
                next_boundary.next();
                out.push(' ');
                out.push_str(table.boundary_symbol());
            }
            if i > 0 {
                out.push(' ');
            }
            match table.feature(*sym) {
                Some(f) => out.push_str(&f.symbol),
                None => out.push_str(OTHER_TOKEN),
            }
        }
        out
    }

    /// Word index of each symbol.
    pub fn word_of(&self) -> Vec<usize> {
        let mut words = Vec::with_capacity(self.symbols.len());
        let mut w = 0;
        let mut b = self.boundaries.iter().peekable();
        for i in 0..self.symbols.len() {
            while b.peek().is_some_and(|&&p| p == i) {
                b.next();
                w += 1;
            }
            words.push(w);
        }
        words
    }
}

/// Token written for the `other` placeholder when a stream is rendered.
pub const OTHER_TOKEN: &str = "<OTHER>";

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseDiagnostics {
    pub skipped: usize,
    pub other: usize,
}

#[derive(Debug, Clone)]
pub struct Parsed {
    pub stream: SymbolStream,
    pub diagnostics: ParseDiagnostics,
}

pub trait StreamParser: Send + Sync {
    fn mode(&self) -> ParseMode;
    fn parse(&self, text: &str, table: &FeatureTable, policy: UnknownPolicy) -> Result<Parsed>;
}

/// Builder for streams that enforces the boundary invariants as symbols
/// and boundaries arrive.
struct StreamBuilder<'t> {
    table: &'t FeatureTable,
    policy: UnknownPolicy,
    stream: SymbolStream,
    diagnostics: ParseDiagnostics,
    pending_boundary: bool,
}

impl<'t> StreamBuilder<'t> {
    fn new(table: &'t FeatureTable, policy: UnknownPolicy) -> Self {
        StreamBuilder {
            table,
            policy,
            stream: SymbolStream::default(),
            diagnostics: ParseDiagnostics::default(),
            pending_boundary: false,
        }
    }

    fn boundary(&mut self) {
        if !self.stream.symbols.is_empty() {
            self.pending_boundary = true;
        }
    }

    fn push_id(&mut self, id: SymbolId) {
        if self.pending_boundary {
            self.stream.boundaries.push(self.stream.symbols.len());
            self.pending_boundary = false;
        }
        self.stream.symbols.push(id);
    }

    fn push_symbol(&mut self, sym: &str, what: impl FnOnce() -> String) -> Result<()> {
        match self.table.lookup(sym) {
            Some(id) => self.push_id(id),
            None => self.unknown(what)?,
        }
        Ok(())
    }

    fn unknown(&mut self, what: impl FnOnce() -> String) -> Result<()> {
        match self.policy {
            UnknownPolicy::Strict => return Err(Error::Reject(what())),
            UnknownPolicy::Skip => self.diagnostics.skipped += 1,
            UnknownPolicy::Other => {
                self.diagnostics.other += 1;
                self.push_id(SymbolId::OTHER);
            }
        }
        Ok(())
    }

    fn finish(self) -> Result<Parsed> {
        if self.stream.n_segments() == 0 {
            return Err(Error::Reject("empty symbol stream".into()));
        }
        Ok(Parsed {
            stream: self.stream,
            diagnostics: self.diagnostics,
        })
    }
}

/// Split a prephonemized line into symbol tokens and boundary positions
/// without consulting a feature table.
pub fn split_symbols<'a>(text: &'a str, boundary: &str) -> (Vec<&'a str>, Vec<usize>) {
    let mut symbols = Vec::new();
    let mut boundaries = Vec::new();
    let mut pending = false;
    for tok in text.split_whitespace() {
        if tok == boundary {
            pending = !symbols.is_empty();
            continue;
        }
        if pending {
            boundaries.push(symbols.len());
            pending = false;
        }
        symbols.push(tok);
    }
    (symbols, boundaries)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Prephonemized;

impl StreamParser for Prephonemized {
    fn mode(&self) -> ParseMode {
        ParseMode::Prephonemized
    }

    fn parse(&self, text: &str, table: &FeatureTable, policy: UnknownPolicy) -> Result<Parsed> {
        let mut b = StreamBuilder::new(table, policy);
        for tok in text.split_whitespace() {
            if tok == table.boundary_symbol() {
                b.boundary();
            } else if tok == OTHER_TOKEN && policy != UnknownPolicy::Strict {
                b.unknown(String::new)?;
            } else {
                b.push_symbol(tok, || format!("unknown symbol `{tok}`"))?;
            }
        }
        b.finish()
    }
}

#[derive(Debug, Clone)]
pub struct RuleG2p {
    rules: RuleTable,
}

impl RuleG2p {
    /// Fails if any rule emits a symbol the table does not define.
    pub fn new(rules: RuleTable, table: &FeatureTable) -> Result<Self> {
        let missing = rules.unknown_symbols(table);
        if !missing.is_empty() {
            return Err(Error::Config(format!(
                "rule table emits symbols absent from the feature table: {}",
                missing.join(" ")
            )));
        }
        Ok(RuleG2p { rules })
    }
}

/// Characters that separate words in script input alongside whitespace.
fn is_word_separator(c: char) -> bool {
    c.is_whitespace() || c.is_ascii_punctuation() || matches!(c, '،' | '؛' | '؟' | '«' | '»' | '٬')
}

impl StreamParser for RuleG2p {
    fn mode(&self) -> ParseMode {
        ParseMode::RuleG2p
    }

    fn parse(&self, text: &str, table: &FeatureTable, policy: UnknownPolicy) -> Result<Parsed> {
        let mut b = StreamBuilder::new(table, policy);
        let chars: Vec<char> = text.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if is_word_separator(c) {
                b.boundary();
                i += 1;
                continue;
            }
            match self.rules.longest_match(&chars[i..]) {
                Some((consumed, symbols)) => {
                    for s in symbols {
                        b.push_symbol(s, || format!("rule symbol `{s}` missing from table"))?;
                    }
                    i += consumed;
                }
                None => {
                    b.unknown(|| format!("no rule for character `{c}` (U+{:04X})", c as u32))?;
                    i += 1;
                }
            }
        }
        b.finish()
    }
}

/// Build the parser for a mode. `rules` is required for [`ParseMode::RuleG2p`];
/// `None` falls back to the shipped rule table.
pub fn parser_for(mode: ParseMode, rules: Option<RuleTable>, table: &FeatureTable) -> Result<Box<dyn StreamParser>> {
    Ok(match mode {
        ParseMode::Prephonemized => Box::new(Prephonemized),
        ParseMode::RuleG2p => Box::new(RuleG2p::new(rules.unwrap_or_else(RuleTable::default_rules), table)?),
    })
}

/// One-shot parse with the shipped rules for `RuleG2p`.
pub fn parse_stream(text: &str, table: &FeatureTable, mode: ParseMode, policy: UnknownPolicy) -> Result<Parsed> {
    parser_for(mode, None, table)?.parse(text, table, policy)
}

/// Feature record per segment, in stream order. Boundaries and `other`
/// placeholders produce nothing.
pub fn annotate<'t>(stream: &SymbolStream, table: &'t FeatureTable) -> Vec<&'t PhonemeFeature> {
    stream.symbols.iter().filter_map(|s| table.feature(*s)).collect()
}
