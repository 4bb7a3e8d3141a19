use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::harness::synth::rng_from_seed;

use super::AugmentError;

/// Displacement bound k for the permutation: every unit must satisfy
/// |sigma(i) - i| <= k. `Unbounded` admits any permutation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShuffleBound {
    Bounded(usize),
    Unbounded,
}

impl ShuffleBound {
    pub fn admits(&self, displacement: usize) -> bool {
        match self {
            ShuffleBound::Bounded(k) => displacement <= *k,
            ShuffleBound::Unbounded => true,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        if s == "inf" || s == "infinity" {
            Some(ShuffleBound::Unbounded)
        } else {
            s.parse().ok().map(ShuffleBound::Bounded)
        }
    }
}

/// Word-order shuffling spec. Entity spans (0-based, inclusive) are moved
/// as single units so entity-internal token order is preserved.
#[derive(Debug, Clone)]
pub struct ShuffleSpec {
    pub bound: ShuffleBound,
    pub copies: usize,
    pub entity_spans: Vec<(usize, usize)>,
    pub seed: u64,
}

impl Default for ShuffleSpec {
    fn default() -> Self {
        ShuffleSpec { bound: ShuffleBound::Unbounded, copies: 10, entity_spans: vec![], seed: 0 }
    }
}

fn units(n: usize, spans: &[(usize, usize)]) -> Result<Vec<(usize, usize)>, AugmentError> {
    let mut sorted = spans.to_vec();
    sorted.sort_unstable();
    let mut units = Vec::new();
    let mut pos = 0usize;
    for &(s, e) in &sorted {
        if s > e || e >= n || s < pos {
            return Err(AugmentError::BadEntitySpan(s, e));
        }
        while pos < s {
            units.push((pos, pos));
            pos += 1;
        }
        units.push((s, e));
        pos = e + 1;
    }
    while pos < n {
        units.push((pos, pos));
        pos += 1;
    }
    Ok(units)
}

/// Uniformly samples an admissible unit permutation by enumeration (small
/// unit counts) or by bounded-proposal rejection sampling.
fn sample_permutation(m: usize, bound: ShuffleBound, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if m <= 1 {
        return (0..m).collect();
    }
    if let ShuffleBound::Bounded(0) = bound {
        return (0..m).collect();
    }
    if m <= 8 {
        let admissible = admissible_permutations(m, bound);
        let idx = rng.gen_range(0..admissible.len());
        return admissible[idx].clone();
    }
    // Fisher-Yates with window-limited swaps as the proposal; verify the
    // bound and retry on violation. Identity is always admissible.
    for _ in 0..200 {
        let mut perm: Vec<usize> = (0..m).collect();
        for i in 0..m {
            let hi = match bound {
                ShuffleBound::Bounded(k) => (i + k).min(m - 1),
                ShuffleBound::Unbounded => m - 1,
            };
            let j = rng.gen_range(i..=hi);
            perm.swap(i, j);
        }
        let ok = perm.iter().enumerate().all(|(i, &p)| bound.admits(p.abs_diff(i)));
        if ok {
            return perm;
        }
    }
    (0..m).collect()
}

/// All permutations of `0..m` satisfying the bound. Exposes the exact
/// admissible set for tests; factorial in `m`, so keep `m` small.
pub fn admissible_permutations(m: usize, bound: ShuffleBound) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(m);
    let mut used = vec![false; m];
    fn rec(
        m: usize,
        bound: ShuffleBound,
        current: &mut Vec<usize>,
        used: &mut Vec<bool>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if current.len() == m {
            out.push(current.clone());
            return;
        }
        let i = current.len();
        for p in 0..m {
            if !used[p] && bound.admits(p.abs_diff(i)) {
                used[p] = true;
                current.push(p);
                rec(m, bound, current, used, out);
                current.pop();
                used[p] = false;
            }
        }
    }
    rec(m, bound, &mut current, &mut used, &mut out);
    out
}

/// Permutes token order under the displacement bound, keeping each entity
/// span contiguous and internally ordered. Returns the permuted tokens and
/// the token-level source index of every output position.
pub fn shuffle_order(
    tokens: &[String],
    spec: &ShuffleSpec,
) -> Result<(Vec<String>, Vec<usize>), AugmentError> {
    let units = units(tokens.len(), &spec.entity_spans)?;
    let mut rng = rng_from_seed(spec.seed);
    let perm = sample_permutation(units.len(), spec.bound, &mut rng);
    let mut out = Vec::with_capacity(tokens.len());
    let mut source = Vec::with_capacity(tokens.len());
    for &u in &perm {
        let (s, e) = units[u];
        for t in s..=e {
            out.push(tokens[t].clone());
            source.push(t);
        }
    }
    Ok((out, source))
}

/// Extracts BIO entity spans (0-based inclusive) from a label sequence.
pub fn bio_spans(labels: &[String]) -> Vec<(usize, usize, String)> {
    let mut spans = Vec::new();
    let mut open: Option<(usize, String)> = None;
    for (i, label) in labels.iter().enumerate() {
        if let Some(ty) = label.strip_prefix("B-") {
            if let Some((s, t)) = open.take() {
                spans.push((s, i - 1, t));
            }
            open = Some((i, ty.to_string()));
        } else if let Some(ty) = label.strip_prefix("I-") {
            match &open {
                Some((_, t)) if t == ty => {}
                _ => {
                    if let Some((s, t)) = open.take() {
                        spans.push((s, i - 1, t));
                    }
                    open = Some((i, ty.to_string()));
                }
            }
        } else if let Some((s, t)) = open.take() {
            spans.push((s, i - 1, t));
        }
    }
    if let Some((s, t)) = open {
        spans.push((s, labels.len() - 1, t));
    }
    spans
}

/// Shuffles one labeled utterance, co-permuting the labels with the
/// tokens. Entity spans are derived from the labels and moved as units.
pub fn make_noisy_sample(
    tokens: &[String],
    labels: &[String],
    bound: ShuffleBound,
    seed: u64,
) -> Result<(Vec<String>, Vec<String>), AugmentError> {
    if tokens.len() != labels.len() {
        return Err(AugmentError::LengthMismatch { tokens: tokens.len(), labels: labels.len() });
    }
    let spans: Vec<(usize, usize)> =
        bio_spans(labels).into_iter().map(|(s, e, _)| (s, e)).collect();
    let spec = ShuffleSpec { bound, copies: 1, entity_spans: spans, seed };
    let (out_tokens, source) = shuffle_order(tokens, &spec)?;
    let out_labels: Vec<String> = source.iter().map(|&t| labels[t].clone()).collect();
    Ok((out_tokens, out_labels))
}

/// Shuffles every utterance of a labeled dataset once with the given
/// bound; per-sample seeds derive deterministically from `seed`.
pub fn make_noisy_testset(
    dataset: &[(Vec<String>, Vec<String>)],
    bound: ShuffleBound,
    seed: u64,
) -> Result<Vec<(Vec<String>, Vec<String>)>, AugmentError> {
    dataset
        .iter()
        .enumerate()
        .map(|(i, (tokens, labels))| {
            make_noisy_sample(tokens, labels, bound, seed.wrapping_add(i as u64))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn toks(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("t{i}")).collect()
    }

    #[test]
    fn k_zero_is_identity() {
        let spec = ShuffleSpec {
            bound: ShuffleBound::Bounded(0),
            copies: 1,
            entity_spans: vec![],
            seed: 7,
        };
        let (out, _) = shuffle_order(&toks(6), &spec).unwrap();
        assert_eq!(out, toks(6));
    }

    /// n=3, k=1: only {012, 102, 021} are admissible.
    #[test]
    fn admissible_set_for_n3_k1() {
        let set = admissible_permutations(3, ShuffleBound::Bounded(1));
        let expect: BTreeSet<Vec<usize>> =
            [vec![0, 1, 2], vec![1, 0, 2], vec![0, 2, 1]].into_iter().collect();
        let got: BTreeSet<Vec<usize>> = set.into_iter().collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn emitted_permutations_stay_admissible() {
        for k in [ShuffleBound::Bounded(1), ShuffleBound::Bounded(2), ShuffleBound::Unbounded] {
            for n in 1..=6 {
                let legal: BTreeSet<Vec<usize>> =
                    admissible_permutations(n, k).into_iter().collect();
                for seed in 0..50 {
                    let spec =
                        ShuffleSpec { bound: k, copies: 1, entity_spans: vec![], seed };
                    let (_, source) = shuffle_order(&toks(n), &spec).unwrap();
                    assert!(legal.contains(&source), "{source:?} not admissible for k={k:?}");
                }
            }
        }
    }

    #[test]
    fn unbounded_n3_covers_all_six_permutations() {
        let mut seen = BTreeSet::new();
        for seed in 0..1000 {
            let spec = ShuffleSpec {
                bound: ShuffleBound::Unbounded,
                copies: 1,
                entity_spans: vec![],
                seed,
            };
            let (_, source) = shuffle_order(&toks(3), &spec).unwrap();
            seen.insert(source);
        }
        assert_eq!(seen.len(), 6);
    }

    #[test]
    fn entity_tokens_stay_contiguous_and_ordered() {
        let tokens = toks(7);
        let spec = ShuffleSpec {
            bound: ShuffleBound::Unbounded,
            copies: 1,
            entity_spans: vec![(2, 4)],
            seed: 3,
        };
        for seed in 0..100 {
            let spec = ShuffleSpec { seed, ..spec.clone() };
            let (_, source) = shuffle_order(&tokens, &spec).unwrap();
            let at = source.iter().position(|&t| t == 2).unwrap();
            assert_eq!(&source[at..at + 3], &[2, 3, 4]);
        }
    }

    #[test]
    fn large_sequences_respect_small_bounds() {
        for seed in 0..30 {
            let spec = ShuffleSpec {
                bound: ShuffleBound::Bounded(1),
                copies: 1,
                entity_spans: vec![],
                seed,
            };
            let (_, source) = shuffle_order(&toks(20), &spec).unwrap();
            for (i, &p) in source.iter().enumerate() {
                assert!(p.abs_diff(i) <= 1);
            }
        }
    }

    #[test]
    fn noisy_sample_labels_follow_tokens() {
        let tokens: Vec<String> =
            ["set", "an", "alarm", "nine", "pm"].iter().map(|s| s.to_string()).collect();
        let labels: Vec<String> =
            ["O", "O", "O", "B-TIME", "I-TIME"].iter().map(|s| s.to_string()).collect();
        for seed in 0..50 {
            let (out_tokens, out_labels) =
                make_noisy_sample(&tokens, &labels, ShuffleBound::Unbounded, seed).unwrap();
            let spans = bio_spans(&out_labels);
            assert_eq!(spans.len(), 1);
            let (s, e, ty) = &spans[0];
            assert_eq!(ty, "TIME");
            assert_eq!(out_tokens[*s], "nine");
            assert_eq!(out_tokens[*e], "pm");
            assert_eq!(e - s, 1);
        }
    }

    #[test]
    fn k_zero_testset_is_unchanged() {
        let ds = vec![
            (toks(4), vec!["O".into(), "B-X".into(), "I-X".into(), "O".into()]),
            (toks(3), vec!["O".into(), "O".into(), "O".into()]),
        ];
        let out = make_noisy_testset(&ds, ShuffleBound::Bounded(0), 5).unwrap();
        assert_eq!(out, ds);
    }

    #[test]
    fn multiset_preserved() {
        let tokens = toks(9);
        for seed in 0..30 {
            let spec = ShuffleSpec {
                bound: ShuffleBound::Bounded(2),
                copies: 1,
                entity_spans: vec![(1, 2), (5, 7)],
                seed,
            };
            let (out, _) = shuffle_order(&tokens, &spec).unwrap();
            let mut a = out.clone();
            let mut b = tokens.clone();
            a.sort();
            b.sort();
            assert_eq!(a, b);
        }
    }
}
