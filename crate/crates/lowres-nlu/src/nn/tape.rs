use std::cell::RefCell;
use std::ops::{Add, Mul, Neg, Sub};

use ndarray::{Array2, Axis};

type BackwardFn = Box<dyn Fn(&Array2<f64>, &Array2<f64>, &[&Array2<f64>]) -> Vec<Array2<f64>>>;

struct Node {
    value: Array2<f64>,
    parents: Vec<usize>,
    backward: Option<BackwardFn>,
}

/// Records a forward computation as a Wengert list.
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

/// Handle to a node on a [`Tape`]. Cheap to copy; all arithmetic on `Var`s
/// records new nodes on the owning tape.
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    idx: usize,
}

/// Per-node gradients produced by [`Tape::backward`].
pub struct Gradients {
    grads: Vec<Option<Array2<f64>>>,
}

impl Gradients {
    /// Gradient of the backward root with respect to `v`. Zero if the root
    /// does not depend on `v`.
    pub fn wrt(&self, v: Var<'_>) -> Array2<f64> {
        match &self.grads[v.idx] {
            Some(g) => g.clone(),
            None => Array2::zeros(v.tape.shape(v.idx)),
        }
    }
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: RefCell::new(Vec::new()) }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn shape(&self, idx: usize) -> (usize, usize) {
        let nodes = self.nodes.borrow();
        nodes[idx].value.dim()
    }

    fn push(&self, value: Array2<f64>, parents: Vec<usize>, backward: Option<BackwardFn>) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { value, parents, backward });
        Var { tape: self, idx: nodes.len() - 1 }
    }

    /// Registers a leaf node. Gradients are accumulated for leaves but
    /// nothing propagates past them.
    pub fn input(&self, value: Array2<f64>) -> Var<'_> {
        self.push(value, vec![], None)
    }

    /// Leaf holding a scalar.
    pub fn scalar(&self, value: f64) -> Var<'_> {
        self.input(Array2::from_elem((1, 1), value))
    }

    /// Current value of a node.
    pub fn value(&self, v: Var<'_>) -> Array2<f64> {
        self.nodes.borrow()[v.idx].value.clone()
    }

    /// Runs reverse accumulation from `root`, which must be 1x1.
    pub fn backward(&self, root: Var<'_>) -> Gradients {
        let nodes = self.nodes.borrow();
        assert_eq!(nodes[root.idx].value.dim(), (1, 1), "backward root must be a scalar");
        let mut grads: Vec<Option<Array2<f64>>> = vec![None; nodes.len()];
        grads[root.idx] = Some(Array2::from_elem((1, 1), 1.0));
        for idx in (0..=root.idx).rev() {
            let Some(grad) = grads[idx].take() else { continue };
            let node = &nodes[idx];
            if let Some(backward) = &node.backward {
                let parent_values: Vec<&Array2<f64>> =
                    node.parents.iter().map(|&p| &nodes[p].value).collect();
                let parent_grads = backward(&node.value, &grad, &parent_values);
                debug_assert_eq!(parent_grads.len(), node.parents.len());
                for (&p, pg) in node.parents.iter().zip(parent_grads) {
                    match &mut grads[p] {
                        Some(acc) => *acc += &pg,
                        slot => *slot = Some(pg),
                    }
                }
            }
            grads[idx] = Some(grad);
        }
        Gradients { grads }
    }
}

impl<'t> Var<'t> {
    pub fn value(self) -> Array2<f64> {
        self.tape.value(self)
    }

    pub fn dim(self) -> (usize, usize) {
        self.tape.shape(self.idx)
    }

    /// Cuts the gradient flow: returns a fresh leaf with the same value.
    pub fn detach(self) -> Var<'t> {
        self.tape.input(self.value())
    }

    fn unary(
        self,
        value: Array2<f64>,
        backward: impl Fn(&Array2<f64>, &Array2<f64>, &[&Array2<f64>]) -> Vec<Array2<f64>> + 'static,
    ) -> Var<'t> {
        self.tape.push(value, vec![self.idx], Some(Box::new(backward)))
    }

    fn binary(
        self,
        other: Var<'t>,
        value: Array2<f64>,
        backward: impl Fn(&Array2<f64>, &Array2<f64>, &[&Array2<f64>]) -> Vec<Array2<f64>> + 'static,
    ) -> Var<'t> {
        self.tape
            .push(value, vec![self.idx, other.idx], Some(Box::new(backward)))
    }

    pub fn matmul(self, other: Var<'t>) -> Var<'t> {
        let a = self.value();
        let b = other.value();
        assert_eq!(a.ncols(), b.nrows(), "matmul dimension mismatch");
        let value = a.dot(&b);
        self.binary(other, value, |_, g, ps| {
            vec![g.dot(&ps[1].t()), ps[0].t().dot(g)]
        })
    }

    pub fn t(self) -> Var<'t> {
        let value = self.value().t().to_owned();
        self.unary(value, |_, g, _| vec![g.t().to_owned()])
    }

    pub fn scale(self, c: f64) -> Var<'t> {
        let value = self.value() * c;
        self.unary(value, move |_, g, _| vec![g * c])
    }

    pub fn add_scalar(self, c: f64) -> Var<'t> {
        let value = self.value() + c;
        self.unary(value, |_, g, _| vec![g.clone()])
    }

    pub fn tanh(self) -> Var<'t> {
        let value = self.value().mapv(f64::tanh);
        self.unary(value, |y, g, _| vec![g * &(1.0 - y * y)])
    }

    pub fn sigmoid(self) -> Var<'t> {
        let value = self.value().mapv(|x| 1.0 / (1.0 + (-x).exp()));
        self.unary(value, |y, g, _| vec![g * &(y * &(1.0 - y))])
    }

    pub fn relu(self) -> Var<'t> {
        let value = self.value().mapv(|x| x.max(0.0));
        self.unary(value, |_, g, ps| {
            vec![g * &ps[0].mapv(|x| if x > 0.0 { 1.0 } else { 0.0 })]
        })
    }

    pub fn exp(self) -> Var<'t> {
        let value = self.value().mapv(f64::exp);
        self.unary(value, |y, g, _| vec![g * y])
    }

    pub fn ln(self) -> Var<'t> {
        let value = self.value().mapv(f64::ln);
        self.unary(value, |_, g, ps| vec![g / ps[0]])
    }

    pub fn sqrt(self) -> Var<'t> {
        let value = self.value().mapv(f64::sqrt);
        self.unary(value, |y, g, _| vec![g / &(y * 2.0)])
    }

    pub fn sum_all(self) -> Var<'t> {
        let value = Array2::from_elem((1, 1), self.value().sum());
        self.unary(value, |_, g, ps| {
            vec![Array2::from_elem(ps[0].dim(), g[(0, 0)])]
        })
    }

    pub fn mean_all(self) -> Var<'t> {
        let v = self.value();
        let count = v.len() as f64;
        let value = Array2::from_elem((1, 1), v.sum() / count);
        self.unary(value, move |_, g, ps| {
            vec![Array2::from_elem(ps[0].dim(), g[(0, 0)] / count)]
        })
    }

    /// Sum along each row: n x d -> n x 1.
    pub fn sum_rows(self) -> Var<'t> {
        let v = self.value();
        let value = v.sum_axis(Axis(1)).insert_axis(Axis(1));
        self.unary(value, |_, g, ps| {
            let (n, d) = ps[0].dim();
            let mut out = Array2::zeros((n, d));
            for i in 0..n {
                out.row_mut(i).fill(g[(i, 0)]);
            }
            vec![out]
        })
    }

    /// Sum along each column: n x d -> 1 x d.
    pub fn sum_cols(self) -> Var<'t> {
        let v = self.value();
        let value = v.sum_axis(Axis(0)).insert_axis(Axis(0));
        self.unary(value, |_, g, ps| {
            let (n, d) = ps[0].dim();
            let mut out = Array2::zeros((n, d));
            for i in 0..n {
                for j in 0..d {
                    out[(i, j)] = g[(0, j)];
                }
            }
            vec![out]
        })
    }

    /// Mean along each row: n x d -> n x 1.
    pub fn mean_rows(self) -> Var<'t> {
        let d = self.dim().1 as f64;
        self.sum_rows().scale(1.0 / d)
    }

    /// Softmax along each row.
    pub fn softmax_rows(self) -> Var<'t> {
        let v = self.value();
        let value = softmax_rows_value(&v);
        self.unary(value, |y, g, _| {
            let mut out = g.clone();
            for (mut orow, (yrow, grow)) in out
                .rows_mut()
                .into_iter()
                .zip(y.rows().into_iter().zip(g.rows()))
            {
                let dot: f64 = yrow.iter().zip(grow.iter()).map(|(a, b)| a * b).sum();
                for (o, &yv) in orow.iter_mut().zip(yrow.iter()) {
                    *o = yv * (*o - dot);
                }
            }
            vec![out]
        })
    }

    /// Log-softmax along each row.
    pub fn log_softmax_rows(self) -> Var<'t> {
        let v = self.value();
        let mut value = v.clone();
        for mut row in value.rows_mut() {
            let lse = logsumexp(row.iter().copied());
            row.mapv_inplace(|x| x - lse);
        }
        self.unary(value, |y, g, _| {
            let mut out = g.clone();
            for (mut orow, yrow) in out.rows_mut().into_iter().zip(y.rows()) {
                let gsum: f64 = orow.iter().sum();
                for (o, &yv) in orow.iter_mut().zip(yrow.iter()) {
                    *o -= yv.exp() * gsum;
                }
            }
            vec![out]
        })
    }

    /// Log-sum-exp along each row: n x d -> n x 1.
    pub fn logsumexp_rows(self) -> Var<'t> {
        let v = self.value();
        let value =
            Array2::from_shape_fn((v.nrows(), 1), |(i, _)| logsumexp(v.row(i).iter().copied()));
        self.unary(value, |y, g, ps| {
            let (n, d) = ps[0].dim();
            let mut out = Array2::zeros((n, d));
            for i in 0..n {
                for j in 0..d {
                    out[(i, j)] = g[(i, 0)] * (ps[0][(i, j)] - y[(i, 0)]).exp();
                }
            }
            vec![out]
        })
    }

    /// Log-sum-exp along each column: n x d -> 1 x d.
    pub fn logsumexp_cols(self) -> Var<'t> {
        let v = self.value();
        let value =
            Array2::from_shape_fn((1, v.ncols()), |(_, j)| logsumexp(v.column(j).iter().copied()));
        self.unary(value, |y, g, ps| {
            let (n, d) = ps[0].dim();
            let mut out = Array2::zeros((n, d));
            for i in 0..n {
                for j in 0..d {
                    out[(i, j)] = g[(0, j)] * (ps[0][(i, j)] - y[(0, j)]).exp();
                }
            }
            vec![out]
        })
    }

    /// Adds a 1 x d row vector to every row of an n x d matrix.
    pub fn add_row(self, row: Var<'t>) -> Var<'t> {
        let a = self.value();
        let b = row.value();
        assert_eq!(b.nrows(), 1, "add_row expects a 1 x d row vector");
        assert_eq!(a.ncols(), b.ncols(), "add_row dimension mismatch");
        let value = &a + &b;
        self.binary(row, value, |_, g, _| {
            vec![g.clone(), g.sum_axis(Axis(0)).insert_axis(Axis(0))]
        })
    }

    /// Adds an n x 1 column vector to every column of an n x d matrix.
    pub fn add_col(self, col: Var<'t>) -> Var<'t> {
        let a = self.value();
        let b = col.value();
        assert_eq!(b.ncols(), 1, "add_col expects an n x 1 column vector");
        assert_eq!(a.nrows(), b.nrows(), "add_col dimension mismatch");
        let value = &a + &b;
        self.binary(col, value, |_, g, _| {
            vec![g.clone(), g.sum_axis(Axis(1)).insert_axis(Axis(1))]
        })
    }

    /// Multiplies every row of an n x d matrix elementwise by a 1 x d row.
    pub fn mul_row(self, row: Var<'t>) -> Var<'t> {
        let a = self.value();
        let b = row.value();
        assert_eq!(b.nrows(), 1, "mul_row expects a 1 x d row vector");
        let value = &a * &b;
        self.binary(row, value, |_, g, ps| {
            let da = g * ps[1];
            let db = (g * ps[0]).sum_axis(Axis(0)).insert_axis(Axis(0));
            vec![da, db]
        })
    }

    /// Multiplies every column of an n x d matrix elementwise by an n x 1 column.
    pub fn mul_col(self, col: Var<'t>) -> Var<'t> {
        let a = self.value();
        let b = col.value();
        assert_eq!(b.ncols(), 1, "mul_col expects an n x 1 column vector");
        let value = &a * &b;
        self.binary(col, value, |_, g, ps| {
            let da = g * ps[1];
            let db = (g * ps[0]).sum_axis(Axis(1)).insert_axis(Axis(1));
            vec![da, db]
        })
    }

    /// Divides every column of an n x d matrix elementwise by an n x 1 column.
    pub fn div_col(self, col: Var<'t>) -> Var<'t> {
        let a = self.value();
        let b = col.value();
        assert_eq!(b.ncols(), 1, "div_col expects an n x 1 column vector");
        let value = &a / &b;
        self.binary(col, value, |_, g, ps| {
            let da = g / ps[1];
            let db = (-(g * ps[0]) / (ps[1] * ps[1])).sum_axis(Axis(1)).insert_axis(Axis(1));
            vec![da, db]
        })
    }

    /// Selects rows by index; indices may repeat (used for hidden-state
    /// copying and embedding lookup). Backward scatter-adds.
    pub fn gather_rows(self, indices: &[usize]) -> Var<'t> {
        let v = self.value();
        for &i in indices {
            assert!(i < v.nrows(), "gather_rows index out of range");
        }
        let mut value = Array2::zeros((indices.len(), v.ncols()));
        for (k, &i) in indices.iter().enumerate() {
            value.row_mut(k).assign(&v.row(i));
        }
        let indices = indices.to_vec();
        self.unary(value, move |_, g, ps| {
            let mut out = Array2::zeros(ps[0].dim());
            for (k, &i) in indices.iter().enumerate() {
                let mut row = out.row_mut(i);
                row += &g.row(k);
            }
            vec![out]
        })
    }

    /// Contiguous row slice.
    pub fn slice_rows(self, start: usize, end: usize) -> Var<'t> {
        let indices: Vec<usize> = (start..end).collect();
        self.gather_rows(&indices)
    }

    /// Picks entry `(i, targets[i])` from each row: n x d -> n x 1.
    pub fn pick(self, targets: &[usize]) -> Var<'t> {
        let v = self.value();
        assert_eq!(v.nrows(), targets.len(), "pick expects one target per row");
        let mut value = Array2::zeros((targets.len(), 1));
        for (i, &t) in targets.iter().enumerate() {
            value[(i, 0)] = v[(i, t)];
        }
        let targets = targets.to_vec();
        self.unary(value, move |_, g, ps| {
            let mut out = Array2::zeros(ps[0].dim());
            for (i, &t) in targets.iter().enumerate() {
                out[(i, t)] = g[(i, 0)];
            }
            vec![out]
        })
    }

    /// Picks arbitrary entries: k x 1 column of `a[r, c]` values.
    pub fn pick_entries(self, entries: &[(usize, usize)]) -> Var<'t> {
        let v = self.value();
        let mut value = Array2::zeros((entries.len(), 1));
        for (k, &(r, c)) in entries.iter().enumerate() {
            value[(k, 0)] = v[(r, c)];
        }
        let entries = entries.to_vec();
        self.unary(value, move |_, g, ps| {
            let mut out = Array2::zeros(ps[0].dim());
            for (k, &(r, c)) in entries.iter().enumerate() {
                out[(r, c)] += g[(k, 0)];
            }
            vec![out]
        })
    }
}

/// Vertical concatenation of same-width matrices.
pub fn vstack<'t>(parts: &[Var<'t>]) -> Var<'t> {
    assert!(!parts.is_empty(), "vstack of zero parts");
    let tape = parts[0].tape;
    let values: Vec<Array2<f64>> = parts.iter().map(|p| p.value()).collect();
    let cols = values[0].ncols();
    let rows: usize = values.iter().map(|v| v.nrows()).sum();
    let mut value = Array2::zeros((rows, cols));
    let mut offset = 0;
    let mut splits = Vec::with_capacity(values.len());
    for v in &values {
        assert_eq!(v.ncols(), cols, "vstack width mismatch");
        value.slice_mut(ndarray::s![offset..offset + v.nrows(), ..]).assign(v);
        splits.push((offset, v.nrows()));
        offset += v.nrows();
    }
    let parents: Vec<usize> = parts.iter().map(|p| p.idx).collect();
    tape.push(
        value,
        parents,
        Some(Box::new(move |_, g, _| {
            splits
                .iter()
                .map(|&(off, len)| g.slice(ndarray::s![off..off + len, ..]).to_owned())
                .collect()
        })),
    )
}

/// Horizontal concatenation of same-height matrices.
pub fn hstack<'t>(parts: &[Var<'t>]) -> Var<'t> {
    assert!(!parts.is_empty(), "hstack of zero parts");
    let tape = parts[0].tape;
    let values: Vec<Array2<f64>> = parts.iter().map(|p| p.value()).collect();
    let rows = values[0].nrows();
    let cols: usize = values.iter().map(|v| v.ncols()).sum();
    let mut value = Array2::zeros((rows, cols));
    let mut offset = 0;
    let mut splits = Vec::with_capacity(values.len());
    for v in &values {
        assert_eq!(v.nrows(), rows, "hstack height mismatch");
        value.slice_mut(ndarray::s![.., offset..offset + v.ncols()]).assign(v);
        splits.push((offset, v.ncols()));
        offset += v.ncols();
    }
    let parents: Vec<usize> = parts.iter().map(|p| p.idx).collect();
    tape.push(
        value,
        parents,
        Some(Box::new(move |_, g, _| {
            splits
                .iter()
                .map(|&(off, len)| g.slice(ndarray::s![.., off..off + len]).to_owned())
                .collect()
        })),
    )
}

/// Numerically stable log(sum(exp(xs))).
pub fn logsumexp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = xs.map(|x| (x - max).exp()).sum();
    max + sum.ln()
}

pub(crate) fn softmax_rows_value(v: &Array2<f64>) -> Array2<f64> {
    let mut out = v.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|x| (x - max).exp());
        let sum: f64 = row.iter().sum();
        row.mapv_inplace(|x| x / sum);
    }
    out
}

impl<'t> Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: Var<'t>) -> Var<'t> {
        let a = self.value();
        let b = rhs.value();
        assert_eq!(a.dim(), b.dim(), "add shape mismatch");
        let value = &a + &b;
        self.binary(rhs, value, |_, g, _| vec![g.clone(), g.clone()])
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: Var<'t>) -> Var<'t> {
        let a = self.value();
        let b = rhs.value();
        assert_eq!(a.dim(), b.dim(), "sub shape mismatch");
        let value = &a - &b;
        self.binary(rhs, value, |_, g, _| vec![g.clone(), -g])
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: Var<'t>) -> Var<'t> {
        let a = self.value();
        let b = rhs.value();
        assert_eq!(a.dim(), b.dim(), "mul shape mismatch");
        let value = &a * &b;
        self.binary(rhs, value, |_, g, ps| vec![g * ps[1], g * ps[0]])
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Var<'t> {
        self.scale(-1.0)
    }
}
