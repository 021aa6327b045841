use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;
use crate::phonology::{FeatureTable, PhonemeFeature, SymbolId, SymbolStream};

fn require_nonempty<T>(xs: &[T], what: &str) -> Result<()> {
    if xs.is_empty() {
        Err(Error::Invalid(format!("{what} of an empty mesra")))
    } else {
        Ok(())
    }
}

fn mean_of(features: &[&PhonemeFeature], f: impl Fn(&PhonemeFeature) -> f64) -> f64 {
    let s: NeumaierSum = features.iter().map(|p| f(p)).collect();
    s.value() / features.len() as f64
}

/// Mean symbol-level hardness.
pub fn hardness(features: &[&PhonemeFeature]) -> Result<f64> {
    require_nonempty(features, "hardness")?;
    Ok(mean_of(features, |p| p.hardness))
}

/// Mean symbol-level sonority.
pub fn sonority(features: &[&PhonemeFeature]) -> Result<f64> {
    require_nonempty(features, "sonority")?;
    Ok(mean_of(features, |p| p.sonority))
}

/// Share of strident consonants among consonants; `None` without consonants.
pub fn sibilance(features: &[&PhonemeFeature]) -> Option<f64> {
    let (strident, consonants) = features
        .iter()
        .filter(|p| p.is_consonant())
        .fold((0usize, 0usize), |(s, c), p| (s + p.strident as usize, c + 1));
    (consonants > 0).then(|| strident as f64 / consonants as f64)
}

pub fn vowel_ratio(features: &[&PhonemeFeature]) -> Result<f64> {
    require_nonempty(features, "vowel ratio")?;
    let vowels = features.iter().filter(|p| p.is_vowel()).count();
    Ok(vowels as f64 / features.len() as f64)
}

/// Share of segments that are consonants with a consonant neighbour inside
/// the same word. Word boundaries and `other` placeholders both break
/// adjacency.
pub fn cluster_ratio(stream: &SymbolStream, table: &FeatureTable) -> Result<f64> {
    let n = stream.n_segments();
    if n == 0 {
        return Err(Error::Invalid("cluster ratio of an empty mesra".into()));
    }
    let consonant: Vec<bool> = stream
        .symbols
        .iter()
        .map(|s| table.feature(*s).is_some_and(|f| f.is_consonant()))
        .collect();
    let mut is_boundary_before = vec![false; stream.symbols.len() + 1];
    for &b in &stream.boundaries {
        is_boundary_before[b] = true;
    }
    let mut clustered = 0usize;
    for i in 0..consonant.len() {
        if !consonant[i] {
            continue;
        }
        let left = i > 0 && consonant[i - 1] && !is_boundary_before[i];
        let right = i + 1 < consonant.len() && consonant[i + 1] && !is_boundary_before[i + 1];
        if left || right {
            clustered += 1;
        }
    }
    Ok(clustered as f64 / n as f64)
}

/// Shannon entropy (bits) of the segment distribution.
///
/// Symbols sharing a count `c` are summed as one term `(g c / n) log2(n / c)`,
/// so a uniform stream over `k` symbols gives exactly `log2 k`.
pub fn entropy(stream: &SymbolStream) -> Result<f64> {
    let mut ids: Vec<SymbolId> = stream.symbols.iter().copied().filter(|s| *s != SymbolId::OTHER).collect();
    if ids.is_empty() {
        return Err(Error::Invalid("entropy of an empty mesra".into()));
    }
    ids.sort_unstable();
    let mut counts: Vec<usize> = ids.chunk_by(|a, b| a == b).map(<[SymbolId]>::len).collect();
    counts.sort_unstable();
    let n = ids.len() as f64;
    let mut h = NeumaierSum::new();
    for group in counts.chunk_by(|a, b| a == b) {
        let c = group[0] as f64;
        let mass = (group.len() * group[0]) as f64 / n;
        h.add(mass * (n / c).log2());
    }
    Ok(h.value())
}
