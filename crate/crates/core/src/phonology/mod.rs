//! Text → symbol streams → per-symbol articulatory features.

pub mod features;
pub mod rules;
pub mod stream;

pub use features::{FeatureTable, PhonemeFeature, Place, SegmentClass, SymbolId};
pub use rules::RuleTable;
pub use stream::{
    annotate, parse_stream, parser_for, split_symbols, ParseMode, Parsed, Prephonemized, RuleG2p, StreamParser,
    SymbolStream, UnknownPolicy,
};
