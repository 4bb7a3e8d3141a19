use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use ndarray::Array2;

use super::AlignError;

/// Vocabulary-to-vector map with a fixed dimension. Word order follows the
/// source file so writes are reproducible.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    words: Vec<String>,
    index: HashMap<String, usize>,
    pub vectors: Array2<f64>,
}

impl EmbeddingTable {
    pub fn new(words: Vec<String>, vectors: Array2<f64>) -> Self {
        assert_eq!(words.len(), vectors.nrows());
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        EmbeddingTable { words, index, vectors }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn position(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn vector(&self, word: &str) -> Option<ndarray::ArrayView1<'_, f64>> {
        self.position(word).map(|i| self.vectors.row(i))
    }

    /// Reads the standard text format: a `count dim` header line followed
    /// by `word v1 v2 ... vd` lines.
    pub fn read(path: &Path) -> Result<Self, AlignError> {
        let file = std::fs::File::open(path)?;
        let reader = std::io::BufReader::new(file);
        let mut lines = reader.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or(AlignError::Parse { line: 1, message: "empty file".to_string() })?;
        let header = header?;
        let mut parts = header.split_whitespace();
        let count: usize = parts
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or(AlignError::Parse { line: 1, message: "header must be `count dim`".into() })?;
        let dim: usize = parts
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or(AlignError::Parse { line: 1, message: "header must be `count dim`".into() })?;
        let mut words = Vec::with_capacity(count);
        let mut data = Vec::with_capacity(count * dim);
        for (lineno, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let word = parts
                .next()
                .ok_or(AlignError::Parse { line: lineno + 1, message: "missing word".into() })?;
            let values: Result<Vec<f64>, _> = parts.map(|v| v.parse::<f64>()).collect();
            let values = values.map_err(|e| AlignError::Parse {
                line: lineno + 1,
                message: e.to_string(),
            })?;
            if values.len() != dim {
                return Err(AlignError::Parse {
                    line: lineno + 1,
                    message: format!("expected {dim} values, found {}", values.len()),
                });
            }
            words.push(word.to_string());
            data.extend(values);
        }
        if words.len() != count {
            return Err(AlignError::Parse {
                line: words.len() + 1,
                message: format!("header promised {count} words, found {}", words.len()),
            });
        }
        let vectors = Array2::from_shape_vec((words.len(), dim), data)
            .expect("row count validated above");
        Ok(EmbeddingTable::new(words, vectors))
    }

    pub fn write(&self, path: &Path) -> Result<(), AlignError> {
        let file = std::fs::File::create(path)?;
        let mut writer = std::io::BufWriter::new(file);
        writeln!(writer, "{} {}", self.len(), self.dim())?;
        for (word, row) in self.words.iter().zip(self.vectors.rows()) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            writeln!(writer, "{} {}", word, cells.join(" "))?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Two-column TSV seed dictionary: `source<TAB>target` per line.
pub fn read_seed_dictionary(path: &Path) -> Result<Vec<(String, String)>, AlignError> {
    let content = std::fs::read_to_string(path)?;
    let mut pairs = Vec::new();
    for (lineno, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let (Some(src), Some(tgt)) = (parts.next(), parts.next()) else {
            return Err(AlignError::Parse {
                line: lineno + 1,
                message: "expected `source<TAB>target`".into(),
            });
        };
        pairs.push((src.trim().to_string(), tgt.trim().to_string()));
    }
    if pairs.is_empty() {
        return Err(AlignError::EmptyDictionary);
    }
    Ok(pairs)
}
