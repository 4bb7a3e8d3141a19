use std::io::{BufRead, Write};
use std::path::Path;

use crate::parse_repr::{parse_hierarchical, ParseRecord, ParseTree};

use super::HarnessError;

/// Tokens plus one BIO label per token, optionally with an utterance
/// intent — the sequence-labeling interchange unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedSequence {
    pub tokens: Vec<String>,
    pub labels: Vec<String>,
    pub intent: Option<String>,
}

impl TaggedSequence {
    /// Checks the `B-`/`I-`/`O` label grammar and length agreement.
    pub fn validate(&self) -> Result<(), String> {
        if self.tokens.len() != self.labels.len() {
            return Err(format!(
                "{} tokens but {} labels",
                self.tokens.len(),
                self.labels.len()
            ));
        }
        for label in &self.labels {
            let ok = label == "O"
                || label.strip_prefix("B-").map(|t| !t.is_empty()).unwrap_or(false)
                || label.strip_prefix("I-").map(|t| !t.is_empty()).unwrap_or(false);
            if !ok {
                return Err(format!("label {label:?} does not match the BIO grammar"));
            }
        }
        Ok(())
    }
}

/// Loads CoNLL data: `token<TAB>label` lines, blank line between
/// sentences, optional `# intent = NAME` line per sentence.
pub fn load_conll(path: &Path) -> Result<Vec<TaggedSequence>, HarnessError> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::Io(path.into(), e))?;
    let reader = std::io::BufReader::new(file);
    let mut sentences = Vec::new();
    let mut tokens = Vec::new();
    let mut labels = Vec::new();
    let mut intent: Option<String> = None;
    let mut flush = |tokens: &mut Vec<String>,
                     labels: &mut Vec<String>,
                     intent: &mut Option<String>,
                     line: usize|
     -> Result<(), HarnessError> {
        if tokens.is_empty() {
            return Ok(());
        }
        let seq = TaggedSequence {
            tokens: std::mem::take(tokens),
            labels: std::mem::take(labels),
            intent: intent.take(),
        };
        seq.validate().map_err(|message| HarnessError::Format { line, message })?;
        sentences.push(seq);
        Ok(())
    };
    let mut last_line = 0;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| HarnessError::Io(path.into(), e))?;
        last_line = lineno + 1;
        let trimmed = line.trim_end();
        if trimmed.is_empty() {
            flush(&mut tokens, &mut labels, &mut intent, last_line)?;
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            if let Some(value) = rest.trim().strip_prefix("intent") {
                let value = value.trim_start_matches([' ', '=', ':']).trim();
                if !value.is_empty() {
                    intent = Some(value.to_string());
                }
            }
            continue;
        }
        let mut parts = trimmed.split('\t');
        let (Some(token), Some(label)) = (parts.next(), parts.next()) else {
            return Err(HarnessError::Format {
                line: last_line,
                message: format!("expected `token<TAB>label`, found {trimmed:?}"),
            });
        };
        tokens.push(token.to_string());
        labels.push(label.to_string());
    }
    flush(&mut tokens, &mut labels, &mut intent, last_line + 1)?;
    Ok(sentences)
}

pub fn write_conll(path: &Path, data: &[TaggedSequence]) -> Result<(), HarnessError> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::Io(path.into(), e))?;
    let mut writer = std::io::BufWriter::new(file);
    let io = |r: std::io::Result<()>| r.map_err(|e| HarnessError::Io(path.into(), e));
    for seq in data {
        if let Some(intent) = &seq.intent {
            io(writeln!(writer, "# intent = {intent}"))?;
        }
        for (t, l) in seq.tokens.iter().zip(&seq.labels) {
            io(writeln!(writer, "{t}\t{l}"))?;
        }
        io(writeln!(writer))?;
    }
    io(writer.flush())
}

/// Loads parse JSONL: one `{tokens, parse}` object per line, each parse
/// validated through the bracketed parser.
pub fn load_parse_jsonl(path: &Path) -> Result<Vec<(ParseTree, ParseRecord)>, HarnessError> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::Io(path.into(), e))?;
    let reader = std::io::BufReader::new(file);
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| HarnessError::Io(path.into(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ParseRecord =
            serde_json::from_str(&line).map_err(|e| HarnessError::Format {
                line: lineno + 1,
                message: e.to_string(),
            })?;
        let tree = parse_hierarchical(&record.parse, &record.tokens).map_err(|e| {
            HarnessError::Format { line: lineno + 1, message: e.to_string() }
        })?;
        out.push((tree, record));
    }
    Ok(out)
}

pub fn write_jsonl<T: serde::Serialize>(path: &Path, records: &[T]) -> Result<(), HarnessError> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::Io(path.into(), e))?;
    let mut writer = std::io::BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r)
            .map_err(|e| HarnessError::Format { line: 0, message: e.to_string() })?;
        writeln!(writer, "{line}").map_err(|e| HarnessError::Io(path.into(), e))?;
    }
    writer.flush().map_err(|e| HarnessError::Io(path.into(), e))
}

pub fn load_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, HarnessError> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::Io(path.into(), e))?;
    let reader = std::io::BufReader::new(file);
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| HarnessError::Io(path.into(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| HarnessError::Format {
            line: lineno + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Loads a corpus of one sentence per line (UTF-8).
pub fn load_corpus_lines(path: &Path) -> Result<Vec<String>, HarnessError> {
    let content = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(path.into(), e))?;
    Ok(content.lines().map(|l| l.to_string()).collect())
}

pub fn write_corpus_lines(path: &Path, lines: &[String]) -> Result<(), HarnessError> {
    let mut out = lines.join("\n");
    if !out.is_empty() {
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| HarnessError::Io(path.into(), e))
}
