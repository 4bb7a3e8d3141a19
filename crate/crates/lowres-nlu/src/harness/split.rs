use rand::seq::SliceRandom;

use super::synth::rng_from_seed;
use super::HarnessError;

/// Few-shot selection: an explicit count or a fraction of the dataset,
/// drawn uniformly without replacement under a fixed seed.
#[derive(Debug, Clone)]
pub struct SplitSpec {
    pub fraction: Option<f64>,
    pub count: Option<usize>,
    pub seed: u64,
    pub upsample_factor: usize,
}

impl SplitSpec {
    pub fn fraction(fraction: f64, seed: u64) -> Self {
        SplitSpec { fraction: Some(fraction), count: None, seed, upsample_factor: 1 }
    }

    pub fn count(count: usize, seed: u64) -> Self {
        SplitSpec { fraction: None, count: Some(count), seed, upsample_factor: 1 }
    }

    fn size(&self, n: usize) -> Result<usize, HarnessError> {
        let k = match (self.count, self.fraction) {
            (Some(c), _) => c,
            (None, Some(f)) => {
                if !(0.0..=1.0).contains(&f) {
                    return Err(HarnessError::BadSplit(format!("fraction {f} out of [0,1]")));
                }
                (f * n as f64).floor() as usize
            }
            (None, None) => 0,
        };
        if k > n {
            return Err(HarnessError::BadSplit(format!("requested {k} of {n} samples")));
        }
        Ok(k)
    }
}

/// Deterministically splits a dataset into a few-shot subset and the
/// remainder.
pub fn few_shot_split<T: Clone>(
    dataset: &[T],
    spec: &SplitSpec,
) -> Result<(Vec<T>, Vec<T>), HarnessError> {
    let k = spec.size(dataset.len())?;
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut rng = rng_from_seed(spec.seed);
    order.shuffle(&mut rng);
    let mut chosen: Vec<usize> = order[..k].to_vec();
    let mut rest: Vec<usize> = order[k..].to_vec();
    chosen.sort_unstable();
    rest.sort_unstable();
    Ok((
        chosen.into_iter().map(|i| dataset[i].clone()).collect(),
        rest.into_iter().map(|i| dataset[i].clone()).collect(),
    ))
}

/// Repeats each sample `factor` times; `1` is the identity.
pub fn upsample<T: Clone>(subset: &[T], factor: usize) -> Vec<T> {
    assert!(factor >= 1, "upsample factor must be >= 1");
    let mut out = Vec::with_capacity(subset.len() * factor);
    for _ in 0..factor {
        out.extend(subset.iter().cloned());
    }
    out
}

/// Joint-training mix: the source set plus the target subset upsampled.
pub fn mix_with_upsampled<T: Clone>(source: &[T], target: &[T], factor: usize) -> Vec<T> {
    let mut out = source.to_vec();
    out.extend(upsample(target, factor));
    out
}
