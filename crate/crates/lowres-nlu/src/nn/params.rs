use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::tape::{Gradients, Tape, Var};

#[derive(Debug, Error)]
pub enum ParamError {
    #[error("unknown parameter {0}")]
    Unknown(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("checkpoint tensor {name} has {got} values, expected {expected}")]
    ShapeMismatch { name: String, got: usize, expected: usize },
}

#[derive(Serialize, Deserialize)]
struct TensorRecord {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Named model parameters. Iteration order is the sorted name order, which
/// keeps optimizer updates and checkpoints deterministic.
#[derive(Default, Clone)]
pub struct ParamStore {
    params: BTreeMap<String, Array2<f64>>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Array2<f64>) {
        self.params.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Result<&Array2<f64>, ParamError> {
        self.params.get(name).ok_or_else(|| ParamError::Unknown(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Array2<f64>, ParamError> {
        self.params.get_mut(name).ok_or_else(|| ParamError::Unknown(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.params.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.params.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Array2<f64>)> {
        self.params.iter()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Writes the checkpoint archive: a JSON map from parameter name to
    /// `{rows, cols, data}` with row-major data.
    pub fn save(&self, path: &Path) -> Result<(), ParamError> {
        let mut records = BTreeMap::new();
        for (name, value) in &self.params {
            records.insert(
                name.clone(),
                TensorRecord {
                    rows: value.nrows(),
                    cols: value.ncols(),
                    data: value.iter().copied().collect(),
                },
            );
        }
        let file = std::fs::File::create(path)?;
        let mut writer = std::io::BufWriter::new(file);
        serde_json::to_writer(&mut writer, &records)?;
        writer.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ParamError> {
        let file = std::fs::File::open(path)?;
        let reader = std::io::BufReader::new(file);
        let records: BTreeMap<String, TensorRecord> = serde_json::from_reader(reader)?;
        let mut store = ParamStore::new();
        for (name, rec) in records {
            let expected = rec.rows * rec.cols;
            if rec.data.len() != expected {
                return Err(ParamError::ShapeMismatch { name, got: rec.data.len(), expected });
            }
            let value = Array2::from_shape_vec((rec.rows, rec.cols), rec.data)
                .expect("shape validated above");
            store.insert(name, value);
        }
        Ok(store)
    }
}

/// Reads a plain numeric matrix file with a one-line `rows dim` header,
/// one whitespace-separated row per line. Used for importing externally
/// produced position tables.
pub fn read_matrix_file(path: &Path) -> Result<Array2<f64>, ParamError> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut lines = reader.lines();
    let header = lines.next().ok_or_else(|| {
        ParamError::Io(std::io::Error::new(std::io::ErrorKind::UnexpectedEof, "empty matrix file"))
    })??;
    let mut parts = header.split_whitespace();
    let parse = |s: Option<&str>| -> Result<usize, ParamError> {
        s.and_then(|v| v.parse().ok()).ok_or_else(|| {
            ParamError::Io(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                "matrix header must be `rows dim`",
            ))
        })
    };
    let rows = parse(parts.next())?;
    let cols = parse(parts.next())?;
    let mut data = Vec::with_capacity(rows * cols);
    for line in lines {
        let line = line?;
        for tok in line.split_whitespace() {
            data.push(tok.parse::<f64>().map_err(|_| {
                ParamError::Io(std::io::Error::new(
                    std::io::ErrorKind::InvalidData,
                    format!("bad matrix entry {tok:?}"),
                ))
            })?);
        }
    }
    if data.len() != rows * cols {
        return Err(ParamError::ShapeMismatch {
            name: path.display().to_string(),
            got: data.len(),
            expected: rows * cols,
        });
    }
    Ok(Array2::from_shape_vec((rows, cols), data).expect("shape validated above"))
}

pub fn write_matrix_file(path: &Path, m: &Array2<f64>) -> Result<(), ParamError> {
    let mut out = String::new();
    out.push_str(&format!("{} {}\n", m.nrows(), m.ncols()));
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Binds parameters from a store onto a tape for one forward/backward pass.
pub struct Binder<'t, 's> {
    tape: &'t Tape,
    store: &'s ParamStore,
    bound: std::cell::RefCell<BTreeMap<String, Var<'t>>>,
    frozen: std::collections::BTreeSet<String>,
}

impl<'t, 's> Binder<'t, 's> {
    pub fn new(tape: &'t Tape, store: &'s ParamStore) -> Self {
        Binder {
            tape,
            store,
            bound: std::cell::RefCell::new(BTreeMap::new()),
            frozen: Default::default(),
        }
    }

    /// Marks parameter prefixes whose gradients should be discarded (frozen
    /// pretrained tables and the like).
    pub fn freeze_prefix(&mut self, prefix: &str) {
        self.frozen.insert(prefix.to_string());
    }

    /// Binds (or reuses) the tape leaf for a named parameter.
    pub fn get(&self, name: &str) -> Var<'t> {
        if let Some(v) = self.bound.borrow().get(name) {
            return *v;
        }
        let value = self
            .store
            .get(name)
            .unwrap_or_else(|_| panic!("parameter {name} missing from store"))
            .clone();
        let var = self.tape.input(value);
        self.bound.borrow_mut().insert(name.to_string(), var);
        var
    }

    /// Collects gradients for all bound, non-frozen parameters.
    pub fn grad_map(&self, grads: &Gradients) -> BTreeMap<String, Array2<f64>> {
        let mut out = BTreeMap::new();
        for (name, var) in self.bound.borrow().iter() {
            if self.frozen.iter().any(|p| name.starts_with(p.as_str())) {
                continue;
            }
            out.insert(name.clone(), grads.wrt(*var));
        }
        out
    }
}

/// Adam optimizer with per-parameter first/second moment state.
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    first: BTreeMap<String, Array2<f64>>,
    second: BTreeMap<String, Array2<f64>>,
}

impl Adam {
    pub fn new(learning_rate: f64) -> Self {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            first: BTreeMap::new(),
            second: BTreeMap::new(),
        }
    }

    pub fn step(&mut self, store: &mut ParamStore, grads: &BTreeMap<String, Array2<f64>>) {
        self.step += 1;
        let t = self.step as f64;
        let bias1 = 1.0 - self.beta1.powf(t);
        let bias2 = 1.0 - self.beta2.powf(t);
        for (name, grad) in grads {
            let value = match store.get_mut(name) {
                Ok(v) => v,
                Err(_) => continue,
            };
            let m = self
                .first
                .entry(name.clone())
                .or_insert_with(|| Array2::zeros(grad.dim()));
            let v = self
                .second
                .entry(name.clone())
                .or_insert_with(|| Array2::zeros(grad.dim()));
            *m = &*m * self.beta1 + grad * (1.0 - self.beta1);
            *v = &*v * self.beta2 + &(grad * grad) * (1.0 - self.beta2);
            let m_hat = &*m / bias1;
            let v_hat = &*v / bias2;
            let update = &m_hat / &(v_hat.mapv(f64::sqrt) + self.epsilon);
            *value -= &(update * self.learning_rate);
        }
    }
}

/// Uniform Xavier/Glorot initialization.
pub fn xavier(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-bound..bound))
}
