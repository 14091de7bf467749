//! Prediction dump: UTF-8 text, one record per line after a header.
//!
//! ```text
//! #augrank-preds v1 classes=<C> count=<N>
//! <id>,<class>:<weight>[;<class>:<weight>...],<p_0>|<p_1>|...|<p_{C-1}>
//! ```
//!
//! One-hot labels are written `c:1`. Floats are written with 17 significant
//! digits, enough to read back the identical double.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Lines, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::metric::{PredictionRecord, PredictionSet, RecordSource};
use crate::prob::{LabelWeights, ProbVector};

pub const MAGIC: &str = "#augrank-preds";
pub const VERSION: u32 = 1;

/// 17 significant digits in scientific notation.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn format_weight(w: f64) -> String {
    if w == 1.0 {
        "1".to_string()
    } else {
        format_f64(w)
    }
}

/// Formats one record line, without the newline.
pub fn format_line(record: &PredictionRecord) -> String {
    let labels: Vec<String> = record.labels.nonzero().map(|(c, w)| format!("{c}:{}", format_weight(w))).collect();
    let probs: Vec<String> = record.probs.values().iter().map(|&p| format_f64(p)).collect();
    format!("{},{},{}", record.id, labels.join(";"), probs.join("|"))
}

pub fn write_header(out: &mut impl Write, num_classes: usize, count: usize) -> Result<()> {
    writeln!(out, "{MAGIC} v{VERSION} classes={num_classes} count={count}")?;
    Ok(())
}

pub fn write_prediction_dump(path: impl AsRef<Path>, preds: &PredictionSet) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_header(&mut out, preds.num_classes(), preds.len())?;
    for r in preds.records() {
        writeln!(out, "{}", format_line(r))?;
    }
    out.flush()?;
    Ok(())
}

/// Declared shape of a dump.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DumpHeader {
    pub num_classes: usize,
    pub count: usize,
}

pub fn parse_header(line: &str) -> Result<DumpHeader> {
    let mut tokens = line.split_whitespace();
    if tokens.next() != Some(MAGIC) {
        return Err(Error::BadHeader(format!("expected {MAGIC:?} at the start of {line:?}")));
    }
    let version = tokens.next().ok_or_else(|| Error::BadHeader("missing version".into()))?;
    let v = version.strip_prefix('v').ok_or_else(|| Error::BadHeader(format!("bad version token {version:?}")))?;
    if v != VERSION.to_string() {
        return Err(Error::VersionUnsupported(version.to_string()));
    }
    let mut field = |key: &str| -> Result<usize> {
        let token = tokens.next().ok_or_else(|| Error::BadHeader(format!("missing {key}=")))?;
        token
            .strip_prefix(key)
            .and_then(|t| t.strip_prefix('='))
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::BadHeader(format!("bad {key} token {token:?}")))
    };
    let num_classes = field("classes")?;
    let count = field("count")?;
    if tokens.next().is_some() {
        return Err(Error::BadHeader("trailing tokens".into()));
    }
    if num_classes == 0 {
        return Err(Error::BadHeader("classes must be positive".into()));
    }
    Ok(DumpHeader { num_classes, count })
}

/// Parses one record line; `line_no` is 1-based and only used in errors.
pub fn parse_line(line: &str, line_no: usize, num_classes: usize) -> Result<PredictionRecord> {
    let bad = |reason: String| Error::BadLine { line: line_no, reason };
    let mut fields = line.splitn(3, ',');
    let (Some(id), Some(label_spec), Some(probs)) = (fields.next(), fields.next(), fields.next()) else {
        return Err(bad("expected <id>,<labels>,<probs>".into()));
    };
    let id: u64 = id.parse().map_err(|_| bad(format!("bad id {id:?}")))?;

    let mut pairs = Vec::new();
    for item in label_spec.split(';') {
        let (class, weight) = item.split_once(':').ok_or_else(|| bad(format!("bad label item {item:?}")))?;
        let class: usize = class.parse().map_err(|_| bad(format!("bad class {class:?}")))?;
        if class >= num_classes {
            return Err(bad(format!("class {class} out of range for {num_classes} classes")));
        }
        let weight: f64 = weight.parse().map_err(|_| bad(format!("bad weight {weight:?}")))?;
        pairs.push((class, weight));
    }
    let labels = LabelWeights::from_pairs(num_classes, &pairs).map_err(|e| bad(format!("labels: {e}")))?;

    let values = probs
        .split('|')
        .map(|p| p.parse::<f64>().map_err(|_| bad(format!("bad probability {p:?}"))))
        .collect::<Result<Vec<_>>>()?;
    if values.len() != num_classes {
        return Err(bad(format!("{} probabilities for {num_classes} classes", values.len())));
    }
    let probs = ProbVector::new(values).map_err(|e| bad(format!("probabilities: {e}")))?;
    Ok(PredictionRecord { id, labels, probs })
}

/// Streaming reader. Yields records in file order and checks the declared
/// count once the input is exhausted.
pub struct DumpReader<R: BufRead> {
    header: DumpHeader,
    lines: Lines<R>,
    line_no: usize,
    read: usize,
    seen: HashSet<u64>,
    done: bool,
}

impl<R: BufRead> DumpReader<R> {
    pub fn new(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let first = lines.next().ok_or_else(|| Error::BadHeader("empty file".into()))??;
        let header = parse_header(&first)?;
        Ok(Self { header, lines, line_no: 1, read: 0, seen: HashSet::new(), done: false })
    }

    pub fn header(&self) -> DumpHeader {
        self.header
    }
}

impl DumpReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        Self::new(BufReader::new(File::open(path)?))
    }
}

impl<R: BufRead> Iterator for DumpReader<R> {
    type Item = Result<PredictionRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let Some(line) = self.lines.next() else {
            self.done = true;
            return (self.read != self.header.count)
                .then_some(Err(Error::CountMismatch { expected: self.header.count, found: self.read }));
        };
        self.line_no += 1;
        let result = line.map_err(Error::from).and_then(|line| {
            let r = parse_line(&line, self.line_no, self.header.num_classes)?;
            if !self.seen.insert(r.id) {
                return Err(Error::BadLine { line: self.line_no, reason: format!("duplicate id {}", r.id) });
            }
            Ok(r)
        });
        match result {
            Ok(r) => {
                self.read += 1;
                Some(Ok(r))
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

pub fn read_prediction_dump(path: impl AsRef<Path>) -> Result<PredictionSet> {
    let reader = DumpReader::open(path)?;
    let num_classes = reader.header().num_classes;
    let records = reader.collect::<Result<Vec<_>>>()?;
    PredictionSet::new(num_classes, records)
}

/// Replays a dump file from disk on every pass.
#[derive(Debug, Clone)]
pub struct DumpSource {
    path: PathBuf,
    header: DumpHeader,
}

impl DumpSource {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let header = DumpReader::open(&path)?.header();
        Ok(Self { path, header })
    }

    pub fn header(&self) -> DumpHeader {
        self.header
    }
}

impl RecordSource for DumpSource {
    fn replay(&mut self) -> Result<Box<dyn Iterator<Item = Result<PredictionRecord>> + '_>> {
        let reader = DumpReader::open(&self.path)?;
        if reader.header() != self.header {
            return Err(Error::ReplayMismatch(format!("{} changed between passes", self.path.display())));
        }
        Ok(Box::new(reader))
    }
}
