use ndarray::Array2;
use rand_chacha::ChaCha8Rng;

use crate::nn::{xavier, Binder, ParamStore, Var};

use super::EncoderError;

/// Linear-chain CRF over `n_labels` classes with start/end scores and a
/// full transition matrix. Training minimizes `log Z - score(gold)`;
/// decoding runs Viterbi over emission + transition scores.
#[derive(Debug, Clone)]
pub struct LinearChainCrf {
    prefix: String,
    pub n_labels: usize,
}

impl LinearChainCrf {
    pub fn new(prefix: impl Into<String>, n_labels: usize) -> Self {
        assert!(n_labels >= 1, "CRF needs at least one label");
        LinearChainCrf { prefix: prefix.into(), n_labels }
    }

    pub fn init(&self, store: &mut ParamStore, rng: &mut ChaCha8Rng) {
        let l = self.n_labels;
        store.insert(format!("{}.trans", self.prefix), xavier(rng, l, l) * 0.1);
        store.insert(format!("{}.start", self.prefix), Array2::zeros((1, l)));
        store.insert(format!("{}.end", self.prefix), Array2::zeros((1, l)));
    }

    /// Negative log-likelihood of a gold path given emission scores
    /// (n x L). Differentiable through emissions and CRF parameters.
    pub fn nll<'t>(&self, binder: &Binder<'t, '_>, emissions: Var<'t>, gold: &[usize]) -> Var<'t> {
        let (n, l) = emissions.dim();
        assert_eq!(l, self.n_labels, "emission width != label count");
        assert_eq!(n, gold.len(), "one gold label per position");
        assert!(n >= 1, "empty sequence");
        let trans = binder.get(&format!("{}.trans", self.prefix));
        let start = binder.get(&format!("{}.start", self.prefix));
        let end = binder.get(&format!("{}.end", self.prefix));

        // Forward recursion for the partition function.
        let mut alpha = emissions.slice_rows(0, 1) + start;
        for t in 1..n {
            let scores = trans.add_col(alpha.t());
            alpha = scores.logsumexp_cols() + emissions.slice_rows(t, t + 1);
        }
        let log_z = (alpha + end).logsumexp_rows();

        // Gold path score.
        let emission_score = emissions.pick(gold).sum_all();
        let mut score = emission_score + start.pick(&[gold[0]]) + end.pick(&[gold[n - 1]]);
        if n > 1 {
            let pairs: Vec<(usize, usize)> =
                gold.windows(2).map(|w| (w[0], w[1])).collect();
            score = score + trans.pick_entries(&pairs).sum_all();
        }
        log_z - score
    }

    /// Highest-scoring label path under emission + transition scores.
    pub fn viterbi(&self, store: &ParamStore, emissions: &Array2<f64>) -> Vec<usize> {
        let (n, l) = emissions.dim();
        assert_eq!(l, self.n_labels);
        assert!(n >= 1);
        let trans = store.get(&format!("{}.trans", self.prefix)).expect("initialized CRF");
        let start = store.get(&format!("{}.start", self.prefix)).expect("initialized CRF");
        let end = store.get(&format!("{}.end", self.prefix)).expect("initialized CRF");
        let mut score: Vec<f64> = (0..l).map(|j| emissions[(0, j)] + start[(0, j)]).collect();
        let mut backptr: Vec<Vec<usize>> = Vec::with_capacity(n);
        for t in 1..n {
            let mut next = vec![f64::NEG_INFINITY; l];
            let mut ptr = vec![0usize; l];
            for j in 0..l {
                for i in 0..l {
                    let s = score[i] + trans[(i, j)];
                    if s > next[j] {
                        next[j] = s;
                        ptr[j] = i;
                    }
                }
                next[j] += emissions[(t, j)];
            }
            score = next;
            backptr.push(ptr);
        }
        let mut best = 0usize;
        let mut best_score = f64::NEG_INFINITY;
        for j in 0..l {
            let s = score[j] + end[(0, j)];
            if s > best_score {
                best_score = s;
                best = j;
            }
        }
        let mut path = vec![best];
        for ptr in backptr.iter().rev() {
            best = ptr[best];
            path.push(best);
        }
        path.reverse();
        path
    }

    /// Total score of one explicit path; shared by tests and the
    /// exhaustive oracle.
    pub fn path_score(&self, store: &ParamStore, emissions: &Array2<f64>, path: &[usize]) -> f64 {
        let trans = store.get(&format!("{}.trans", self.prefix)).expect("initialized CRF");
        let start = store.get(&format!("{}.start", self.prefix)).expect("initialized CRF");
        let end = store.get(&format!("{}.end", self.prefix)).expect("initialized CRF");
        let mut s = start[(0, path[0])] + end[(0, path[path.len() - 1])];
        for (t, &y) in path.iter().enumerate() {
            s += emissions[(t, y)];
        }
        for w in path.windows(2) {
            s += trans[(w[0], w[1])];
        }
        s
    }

    pub fn dims_ok(&self, emissions: &Array2<f64>) -> Result<(), EncoderError> {
        if emissions.ncols() != self.n_labels {
            return Err(EncoderError::DimensionMismatch {
                expected: self.n_labels,
                got: emissions.ncols(),
            });
        }
        Ok(())
    }
}

/// Enumerates all `L^n` label paths (for small n) — the brute-force oracle
/// used by the tests and the acceptance suite.
pub fn enumerate_paths(n: usize, l: usize) -> Vec<Vec<usize>> {
    let mut paths = vec![vec![]];
    for _ in 0..n {
        let mut next = Vec::with_capacity(paths.len() * l);
        for p in &paths {
            for y in 0..l {
                let mut q = p.clone();
                q.push(y);
                next.push(q);
            }
        }
        paths = next;
    }
    paths
}
