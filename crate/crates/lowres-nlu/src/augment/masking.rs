use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::harness::synth::rng_from_seed;

/// What happens to a masked position: the standard 80/10/10 split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaskAction {
    MaskToken,
    RandomToken,
    Keep,
}

/// A masking plan: which positions are masked and how each is replaced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskPlan {
    pub n: usize,
    /// Sorted masked positions (0-based).
    pub masked: Vec<usize>,
    /// One action per masked position, aligned with `masked`.
    pub actions: Vec<MaskAction>,
}

impl MaskPlan {
    pub fn masked_count(&self) -> usize {
        self.masked.len()
    }

    /// Maximal runs of consecutive masked positions.
    pub fn runs(&self) -> Vec<(usize, usize)> {
        let mut runs = Vec::new();
        let mut iter = self.masked.iter().copied();
        let Some(first) = iter.next() else { return runs };
        let (mut start, mut end) = (first, first);
        for p in iter {
            if p == end + 1 {
                end = p;
            } else {
                runs.push((start, end));
                start = p;
                end = p;
            }
        }
        runs.push((start, end));
        runs
    }
}

/// Number of masked positions for a sequence of length `n`: round-half-up
/// of `rate * n`, with a floor of one masked token once n >= 7.
fn masked_count(n: usize, rate: f64) -> usize {
    if rate <= 0.0 {
        return 0;
    }
    let count = (rate * n as f64 + 0.5).floor() as usize;
    if n >= 7 {
        count.max(1)
    } else {
        count
    }
}

/// Token-level masking: samples `round(rate * n)` positions and assigns
/// each an action with probabilities 0.8 / 0.1 / 0.1.
pub fn token_mask(n: usize, rate: f64, seed: u64) -> MaskPlan {
    let mut rng = rng_from_seed(seed);
    let count = masked_count(n, rate).min(n);
    let mut positions: Vec<usize> = (0..n).collect();
    positions.shuffle(&mut rng);
    let mut masked: Vec<usize> = positions.into_iter().take(count).collect();
    masked.sort_unstable();
    let actions = masked
        .iter()
        .map(|_| {
            let u: f64 = rng.gen();
            if u < 0.8 {
                MaskAction::MaskToken
            } else if u < 0.9 {
                MaskAction::RandomToken
            } else {
                MaskAction::Keep
            }
        })
        .collect();
    MaskPlan { n, masked, actions }
}

/// Moves every isolated masked index next to its nearest masked neighbor
/// so masked runs grow; already-contiguous runs are untouched and the
/// masked count never changes. An isolated index attaches to the left edge
/// of the nearest run, ties broken toward the lower index.
pub fn make_spans(plan: &MaskPlan) -> MaskPlan {
    if plan.n <= 1 || plan.masked.len() <= 1 {
        return plan.clone();
    }
    let mut masked: Vec<usize> = plan.masked.clone();
    loop {
        let runs = runs_of(&masked);
        if runs.len() <= 1 {
            break;
        }
        // The first still-isolated index that is not the sole survivor.
        let isolated = runs.iter().find(|&&(s, e)| s == e && runs.len() > 1).copied();
        let Some((pos, _)) = isolated else { break };
        let mut best: Option<(usize, usize)> = None; // (distance, target)
        for &(s, e) in &runs {
            if s == pos {
                continue;
            }
            let distance = if pos < s { s - pos } else { pos - e };
            // Attach left of the run when space allows, else right.
            let target = if s > 0 && !masked.contains(&(s - 1)) {
                s - 1
            } else if e + 1 < plan.n && !masked.contains(&(e + 1)) {
                e + 1
            } else {
                continue;
            };
            let candidate = (distance, target);
            best = Some(match best {
                None => candidate,
                Some(b) if candidate < b => candidate,
                Some(b) => b,
            });
        }
        let Some((_, target)) = best else { break };
        masked.retain(|&p| p != pos);
        masked.push(target);
        masked.sort_unstable();
        if runs_of(&masked).len() >= runs.len() {
            // No progress is possible (degenerate layouts); stop.
            break;
        }
    }
    MaskPlan { n: plan.n, masked, actions: plan.actions.clone() }
}

fn runs_of(masked: &[usize]) -> Vec<(usize, usize)> {
    MaskPlan { n: 0, masked: masked.to_vec(), actions: vec![] }.runs()
}

/// Span-level masking: token-level masking followed by isolated-index
/// relocation.
pub fn span_mask(n: usize, rate: f64, seed: u64) -> MaskPlan {
    make_spans(&token_mask(n, rate, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rate_is_empty_plan() {
        let plan = token_mask(30, 0.0, 1);
        assert!(plan.masked.is_empty());
    }

    #[test]
    fn twenty_tokens_mask_three() {
        let plan = token_mask(20, 0.15, 2);
        assert_eq!(plan.masked_count(), 3);
    }

    #[test]
    fn rounding_rule() {
        // round-half-up of 0.15n; floor of 1 applies from n = 7.
        assert_eq!(masked_count(3, 0.15), 0);
        assert_eq!(masked_count(4, 0.15), 1); // 0.6 rounds to 1
        assert_eq!(masked_count(7, 0.15), 1);
        assert_eq!(masked_count(10, 0.15), 2); // 1.5 rounds half-up to 2
        assert_eq!(masked_count(20, 0.15), 3);
    }

    #[test]
    fn partition_fractions_converge_to_80_10_10() {
        let mut counts = [0usize; 3];
        let mut total = 0usize;
        for seed in 0..10_000 {
            let plan = token_mask(20, 0.15, seed);
            for a in &plan.actions {
                total += 1;
                match a {
                    MaskAction::MaskToken => counts[0] += 1,
                    MaskAction::RandomToken => counts[1] += 1,
                    MaskAction::Keep => counts[2] += 1,
                }
            }
        }
        let fractions: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
        assert!((fractions[0] - 0.8).abs() < 0.02, "{fractions:?}");
        assert!((fractions[1] - 0.1).abs() < 0.02, "{fractions:?}");
        assert!((fractions[2] - 0.1).abs() < 0.02, "{fractions:?}");
    }

    /// The masked sentence `... would [MASK](4) ... country [MASK](10) sphere`
    /// becomes `... the [MASK](9) [MASK](10) sphere`.
    #[test]
    fn western_music_example() {
        let plan = MaskPlan {
            n: 12,
            masked: vec![4, 10],
            actions: vec![MaskAction::MaskToken, MaskAction::MaskToken],
        };
        let moved = make_spans(&plan);
        assert_eq!(moved.masked, vec![9, 10]);
    }

    /// {2, 7, 8} in n=12: the isolated 2 attaches to the left edge of the
    /// [7, 8] run.
    #[test]
    fn left_attach_tie_break() {
        let plan = MaskPlan {
            n: 12,
            masked: vec![2, 7, 8],
            actions: vec![MaskAction::MaskToken; 3],
        };
        let moved = make_spans(&plan);
        assert_eq!(moved.masked, vec![6, 7, 8]);
    }

    #[test]
    fn contiguous_runs_untouched() {
        let plan = MaskPlan {
            n: 10,
            masked: vec![3, 4, 5],
            actions: vec![MaskAction::MaskToken; 3],
        };
        assert_eq!(make_spans(&plan).masked, vec![3, 4, 5]);
    }

    #[test]
    fn masked_count_is_preserved() {
        for seed in 0..2000 {
            let n = 5 + (seed as usize % 40);
            let plan = token_mask(n, 0.15, seed);
            let moved = make_spans(&plan);
            assert_eq!(moved.masked_count(), plan.masked_count(), "seed {seed}");
            assert!(moved.masked.windows(2).all(|w| w[0] < w[1]), "positions stay sorted/unique");
            assert!(moved.masked.iter().all(|&p| p < n));
            if !plan.masked.is_empty() {
                assert!(!moved.runs().is_empty());
            }
        }
    }

    #[test]
    fn single_token_plan_unchanged() {
        let plan = token_mask(1, 0.9, 3);
        assert_eq!(make_spans(&plan), plan);
    }
}
