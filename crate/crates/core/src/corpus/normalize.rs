//! Conservative orthographic normalization.

use crate::error::{Error, Result};

const ARABIC_YA: char = '\u{064A}';
const PERSIAN_YA: char = '\u{06CC}';
const ARABIC_KAF: char = '\u{0643}';
const PERSIAN_KAF: char = '\u{06A9}';
const TATWEEL: char = '\u{0640}';
pub const ZWNJ: char = '\u{200C}';

/// Harmonize ya/kaf variants, drop tatweel and collapse whitespace runs to
/// a single space. ZWNJ is not whitespace and passes through. Idempotent.
pub fn normalize_text(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for c in raw.chars() {
        let c = match c {
            ARABIC_YA => PERSIAN_YA,
            ARABIC_KAF => PERSIAN_KAF,
            TATWEEL => continue,
            c => c,
        };
        if c.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        out.push(c);
    }
    out
}

/// Byte-level entry point for raw table fields.
pub fn normalize_bytes(raw: &[u8]) -> Result<String> {
    let s = std::str::from_utf8(raw)
        .map_err(|e| Error::Reject(format!("invalid UTF-8 at byte {}", e.valid_up_to())))?;
    Ok(normalize_text(s))
}

/// Lower-case, hyphen-joined key for names missing from the alias table.
pub fn slug(name: &str) -> String {
    let mut out = String::new();
    for c in normalize_text(name).chars() {
        if c.is_alphanumeric() {
            out.extend(c.to_lowercase());
        } else if (c == ' ' || c == ZWNJ || c == '-' || c == '_') && !out.ends_with('-') && !out.is_empty() {
            out.push('-');
        }
    }
    while out.ends_with('-') {
        out.pop();
    }
    if out.is_empty() {
        "unnamed".into()
    } else {
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn arabic_kaf_and_tatweel() {
        let out = normalize_text("كتاب\u{0640}\u{0640}ها");
        assert_eq!(out, "کتابها");
        assert!(!out.contains(ARABIC_KAF) && !out.contains(TATWEEL));
    }

    #[test]
    fn canonical_input_unchanged() {
        assert_eq!(normalize_text("سلام"), "سلام");
        assert_eq!(normalize_text("می\u{200C}روم"), "می\u{200C}روم");
    }

    #[test]
    fn whitespace_collapsed_and_trimmed() {
        assert_eq!(normalize_text("  علي \t\u{00A0} ك  "), "علی ک");
    }

    #[test]
    fn invalid_utf8_rejected() {
        assert!(matches!(normalize_bytes(&[0x61, 0xff]), Err(Error::Reject(_))));
    }

    #[test]
    fn slugs() {
        assert_eq!(slug("  Hafez   Shirazi "), "hafez-shirazi");
        assert_eq!(slug("حافظ شیرازی"), "حافظ-شیرازی");
        assert_eq!(slug("!!"), "unnamed");
    }

    fn mixed_script() -> impl Strategy<Value = String> {
        let pool: Vec<char> = "abc كيـکی سلام\u{200C}\t\n \u{00A0}ا".chars().collect();
        proptest::collection::vec(proptest::sample::select(pool), 0..40).prop_map(|v| v.into_iter().collect())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn idempotent(s in mixed_script()) {
            let once = normalize_text(&s);
            prop_assert_eq!(normalize_text(&once), once);
        }

        #[test]
        fn introduces_only_canonical_replacements(s in mixed_script()) {
            let out = normalize_text(&s);
            for c in out.chars() {
                prop_assert!(s.contains(c) || c == PERSIAN_YA || c == PERSIAN_KAF || c == ' ', "introduced {:?}", c);
            }
        }
    }
}
