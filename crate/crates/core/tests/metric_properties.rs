mod common;

use common::*;
use phonostyle::metrics::{metric_vector, MetricKind};
use phonostyle::phonology::{annotate, parse_stream, FeatureTable, ParseMode, RuleTable, UnknownPolicy};
use proptest::prelude::*;
use rand::prelude::{Rng, SliceRandom};

fn table() -> FeatureTable {
    FeatureTable::default_table()
}

fn metrics_of(text: &str, t: &FeatureTable) -> phonostyle::metrics::MetricVector {
    let p = parse_stream(text, t, ParseMode::Prephonemized, UnknownPolicy::Strict).unwrap();
    metric_vector(&p.stream, t).unwrap()
}

fn tokens_strategy() -> impl Strategy<Value = Vec<Tok>> {
    let pool = symbols(&table());
    proptest::collection::vec(
        prop_oneof![
            4 => proptest::sample::select(pool).prop_map(Tok::Sym),
            1 => Just(Tok::Boundary),
        ],
        1..80,
    )
    .prop_filter("needs a symbol", |v| v.iter().any(|t| matches!(t, Tok::Sym(_))))
}

const ORDER_FREE: [MetricKind; 5] = [
    MetricKind::Hardness,
    MetricKind::Sonority,
    MetricKind::Sibilance,
    MetricKind::VowelRatio,
    MetricKind::Entropy,
];

fn close(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => (x - y).abs() <= 1e-12,
        (None, None) => true,
        _ => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn matches_oracle(tokens in tokens_strategy()) {
        let t = table();
        let got = metrics_of(&render(&tokens, t.boundary_symbol()), &t);
        let want = oracle_metrics(&tokens, &t);
        prop_assert!(max_metric_diff(&got, &want) <= 1e-12, "{got:?} vs {want:?}");
        prop_assert_eq!(got.n_symbols, want.n_symbols);
        prop_assert_eq!(got.n_tokens, want.n_tokens);
    }

    #[test]
    fn permuting_symbols_keeps_order_free_metrics(tokens in tokens_strategy(), seed in any::<u64>()) {
        let t = table();
        let mut syms: Vec<String> = tokens.iter().filter_map(|x| match x { Tok::Sym(s) => Some(s.clone()), _ => None }).collect();
        syms.shuffle(&mut rng(seed));
        let mut it = syms.into_iter();
        let permuted: Vec<Tok> = tokens.iter().map(|x| match x { Tok::Sym(_) => Tok::Sym(it.next().unwrap()), b => b.clone() }).collect();
        let a = metrics_of(&render(&tokens, "#"), &t);
        let b = metrics_of(&render(&permuted, "#"), &t);
        for m in ORDER_FREE {
            prop_assert!(close(a.get(m), b.get(m)), "{m}: {:?} vs {:?}", a.get(m), b.get(m));
        }
    }

    #[test]
    fn self_concatenation_keeps_order_free_metrics(tokens in tokens_strategy()) {
        let t = table();
        let mut doubled = tokens.clone();
        doubled.extend(tokens.iter().cloned());
        let a = metrics_of(&render(&tokens, "#"), &t);
        let b = metrics_of(&render(&doubled, "#"), &t);
        for m in ORDER_FREE {
            prop_assert!(close(a.get(m), b.get(m)), "{m}: {:?} vs {:?}", a.get(m), b.get(m));
        }
    }

    #[test]
    fn identity_substitution_and_render_are_stable(tokens in tokens_strategy()) {
        let t = table();
        let text = render(&tokens, "#");
        let p = parse_stream(&text, &t, ParseMode::Prephonemized, UnknownPolicy::Strict).unwrap();
        let again = parse_stream(&p.stream.render(&t), &t, ParseMode::Prephonemized, UnknownPolicy::Strict).unwrap();
        prop_assert_eq!(&p.stream, &again.stream);
        prop_assert_eq!(metric_vector(&p.stream, &t).unwrap(), metric_vector(&again.stream, &t).unwrap());
    }

    #[test]
    fn annotation_covers_every_segment(tokens in tokens_strategy()) {
        let t = table();
        let p = parse_stream(&render(&tokens, "#"), &t, ParseMode::Prephonemized, UnknownPolicy::Strict).unwrap();
        let feats = annotate(&p.stream, &t);
        let n_sym = tokens.iter().filter(|x| matches!(x, Tok::Sym(_))).count();
        prop_assert_eq!(feats.len(), n_sym);
        prop_assert!(feats.iter().all(|f| f.symbol != t.boundary_symbol()));
        let v = feats.iter().filter(|f| f.is_vowel()).count();
        let c = feats.iter().filter(|f| f.is_consonant()).count();
        prop_assert_eq!(v + c, n_sym);
    }
}

#[test]
fn cluster_ratio_depends_on_order() {
    let t = table();
    let together = metrics_of("s t a", &t);
    let apart = metrics_of("s a t", &t);
    assert_eq!(together.cluster_ratio, 2.0 / 3.0);
    assert_eq!(apart.cluster_ratio, 0.0);
    assert_eq!(together.hardness, apart.hardness);
}

#[test]
fn bounds_hold_on_random_streams() {
    let t = table();
    let pool = symbols(&t);
    let (hmin, hmax) = t.hardness_range();
    let smin = t.entries().iter().map(|e| e.sonority).fold(f64::INFINITY, f64::min);
    let smax = t.entries().iter().map(|e| e.sonority).fold(f64::NEG_INFINITY, f64::max);
    let mut r = rng(0xb0_0d5);
    for i in 0..100_000 {
        let len = r.gen_range(1..=80);
        let tokens = random_tokens(&mut r, &pool, len, i % 2 == 0);
        let v = metrics_of(&render(&tokens, "#"), &t);
        let distinct = {
            let mut s: Vec<&str> = words(&tokens).into_iter().flatten().collect();
            s.sort_unstable();
            s.dedup();
            s.len()
        };
        assert!(v.hardness >= hmin - 1e-12 && v.hardness <= hmax + 1e-12);
        assert!(v.sonority >= smin - 1e-12 && v.sonority <= smax + 1e-12);
        assert!(v.sibilance.map_or(true, |x| (0.0..=1.0).contains(&x)));
        assert!((0.0..=1.0).contains(&v.vowel_ratio));
        assert!((0.0..=1.0).contains(&v.cluster_ratio));
        assert!(v.entropy >= 0.0 && v.entropy <= (distinct as f64).log2() + 1e-12);
    }
}

/// Independent longest-match transliterator read straight from the rule file.
fn naive_g2p(word: &str, rules: &[(Vec<char>, Vec<String>)]) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let mut best: Option<&(Vec<char>, Vec<String>)> = None;
        for rule in rules {
            let fits = i + rule.0.len() <= chars.len() && chars[i..i + rule.0.len()] == rule.0[..];
            if fits && best.is_none_or(|b| rule.0.len() > b.0.len()) {
                best = Some(rule);
            }
        }
        let (g, s) = best.expect("generated words use rule graphemes only");
        out.extend(s.iter().cloned());
        i += g.len();
    }
    out
}

#[test]
fn rule_g2p_matches_naive_matcher() {
    let t = table();
    let rules: Vec<(Vec<char>, Vec<String>)> = RuleTable::default_source()
        .lines()
        .filter(|l| !l.is_empty())
        .map(|l| {
            let (g, s) = l.split_once('\t').unwrap();
            (g.chars().collect(), s.split_whitespace().map(String::from).collect())
        })
        .collect();
    let graphemes: Vec<String> = rules
        .iter()
        .map(|(g, _)| g.iter().collect::<String>())
        .filter(|g| !g.chars().any(|c| c.is_whitespace() || c.is_ascii_punctuation()))
        .collect();
    let mut r = rng(500);
    let mut checked = 0;
    while checked < 500 {
        let word: String = (0..r.gen_range(1..=6)).map(|_| graphemes[r.gen_range(0..graphemes.len())].as_str()).collect();
        let want = naive_g2p(&word, &rules);
        let got = parse_stream(&word, &t, ParseMode::RuleG2p, UnknownPolicy::Strict);
        if want.is_empty() {
            assert!(got.is_err(), "{word}: only deleted graphemes should reject");
            continue;
        }
        let got = got.unwrap().stream.render(&t);
        assert_eq!(got, want.join(" "), "word {word:?}");
        checked += 1;
    }
}
