use ndarray::{Array1, Array2, Axis};
use serde::Serialize;

use super::{AlignError, EmbeddingTable};

/// An orthogonal-mapping problem: source and target embedding matrices
/// plus a binary dictionary matrix pairing their rows.
#[derive(Debug, Clone)]
pub struct AlignmentProblem {
    pub source: Array2<f64>,
    pub target: Array2<f64>,
    /// Pairs of (source row, target row) — the nonzero entries of the
    /// binary dictionary matrix.
    pub pairs: Vec<(usize, usize)>,
}

/// Length-normalizes rows, mean-centers columns, then re-normalizes.
/// Errors on zero rows, which cannot be normalized.
pub fn preprocess(table: &EmbeddingTable) -> Result<EmbeddingTable, AlignError> {
    let mut m = table.vectors.clone();
    normalize_rows(&mut m, table)?;
    let mean = m.mean_axis(Axis(0)).expect("nonempty table");
    for mut row in m.rows_mut() {
        row -= &mean;
    }
    normalize_rows(&mut m, table)?;
    Ok(EmbeddingTable::new(table.words().to_vec(), m))
}

fn normalize_rows(m: &mut Array2<f64>, table: &EmbeddingTable) -> Result<(), AlignError> {
    for (i, mut row) in m.rows_mut().into_iter().enumerate() {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(AlignError::ZeroVector(table.words()[i].clone()));
        }
        row.mapv_inplace(|v| v / norm);
    }
    Ok(())
}

/// Solves `argmax_W Tr(X W Z^T D^T)` over orthogonal `W` via the singular
/// decomposition of `X^T D Z`: `W = U V^T`.
pub fn solve_mapping(problem: &AlignmentProblem) -> Result<Array2<f64>, AlignError> {
    if problem.pairs.is_empty() {
        return Err(AlignError::EmptyDictionary);
    }
    let d = problem.source.ncols();
    if problem.target.ncols() != d {
        return Err(AlignError::DimensionMismatch(d, problem.target.ncols()));
    }
    // M = X^T D Z = sum over pairs of x_i^T z_j.
    let mut m = Array2::<f64>::zeros((d, d));
    for &(i, j) in &problem.pairs {
        let x = problem.source.row(i);
        let z = problem.target.row(j);
        for a in 0..d {
            for b in 0..d {
                m[(a, b)] += x[a] * z[b];
            }
        }
    }
    let nm = nalgebra::DMatrix::from_fn(d, d, |r, c| m[(r, c)]);
    let svd = nm.svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let w = u * vt;
    Ok(Array2::from_shape_fn((d, d), |(r, c)| w[(r, c)]))
}

/// Trace objective `Tr(X W Z^T D^T)` for a candidate mapping.
pub fn trace_objective(problem: &AlignmentProblem, w: &Array2<f64>) -> f64 {
    let mut total = 0.0;
    for &(i, j) in &problem.pairs {
        let mapped: Array1<f64> = problem.source.row(i).dot(w);
        total += mapped.dot(&problem.target.row(j));
    }
    total
}

/// Mean cosine distance (1 - cosine similarity) between mapped source seed
/// words and their target counterparts.
pub fn mean_seed_distance(problem: &AlignmentProblem, w: &Array2<f64>) -> f64 {
    let mut total = 0.0;
    for &(i, j) in &problem.pairs {
        let mapped: Array1<f64> = problem.source.row(i).dot(w);
        let target = problem.target.row(j);
        let dot = mapped.dot(&target);
        let na = mapped.dot(&mapped).sqrt();
        let nb = target.dot(&target).sqrt();
        total += 1.0 - dot / (na * nb);
    }
    total / problem.pairs.len() as f64
}

#[derive(Debug, Clone, Serialize)]
pub struct RefineHistory {
    /// Trace objective after each iteration; non-decreasing with a fixed
    /// dictionary.
    pub objectives: Vec<f64>,
    /// Mean seed cosine distance after each iteration.
    pub seed_distances: Vec<f64>,
    pub converged: bool,
}

/// Iterates the orthogonal solve until the mean cosine distance over seed
/// pairs drops below `threshold` or `max_iters` is reached. The dictionary
/// stays fixed across iterations; non-convergence is reported through the
/// history rather than an error.
pub fn refine(
    source: &EmbeddingTable,
    target: &EmbeddingTable,
    seed_dict: &[(String, String)],
    threshold: f64,
    max_iters: usize,
) -> Result<(Array2<f64>, RefineHistory), AlignError> {
    let source = preprocess(source)?;
    let target = preprocess(target)?;
    let mut pairs = Vec::new();
    for (s, t) in seed_dict {
        let i = source.position(s).ok_or_else(|| AlignError::UnknownWord(s.clone()))?;
        let j = target.position(t).ok_or_else(|| AlignError::UnknownWord(t.clone()))?;
        pairs.push((i, j));
    }
    let problem =
        AlignmentProblem { source: source.vectors.clone(), target: target.vectors.clone(), pairs };
    let mut history =
        RefineHistory { objectives: Vec::new(), seed_distances: Vec::new(), converged: false };
    let mut w = Array2::eye(source.dim());
    for _ in 0..max_iters.max(1) {
        w = solve_mapping(&problem)?;
        history.objectives.push(trace_objective(&problem, &w));
        let distance = mean_seed_distance(&problem, &w);
        history.seed_distances.push(distance);
        if distance < threshold {
            history.converged = true;
            break;
        }
    }
    Ok((w, history))
}

/// `||W^T W - I||_F`, the orthogonality defect of a mapping.
pub fn orthogonality_defect(w: &Array2<f64>) -> f64 {
    let wtw = w.t().dot(w);
    let mut total = 0.0;
    for i in 0..wtw.nrows() {
        for j in 0..wtw.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            total += (wtw[(i, j)] - target).powi(2);
        }
    }
    total.sqrt()
}

/// Random orthogonal matrix from the QR decomposition of a Gaussian
/// matrix; used by the optimality probes.
pub fn random_orthogonal(dim: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Array2<f64> {
    use rand::Rng;
    let g = nalgebra::DMatrix::from_fn(dim, dim, |_, _| {
        // Box-Muller from uniform draws.
        let u1: f64 = rng.gen_range(1e-12..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    });
    let qr = g.qr();
    let q = qr.q();
    Array2::from_shape_fn((dim, dim), |(r, c)| q[(r, c)])
}
