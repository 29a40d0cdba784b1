// SPDX-License-Identifier: MIT OR Apache-2.0

//! FASTA ingestion, dyadic length handling and on-disk result formats.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationPath;
use crate::domain::{CategoricalSequence, ProbabilityMatrix, RealMatrix};
use crate::error::{Error, Result};
use crate::evaluation::SweepTable;
use crate::segmentation::Partition;
use crate::selection::{CriterionPoint, PenaltySpec};

/// Nucleotide alphabet; labels 1..=4 map to A, C, G, T.
pub const NUCLEOTIDES: [u8; 4] = *b"ACGT";

fn nucleotide_label(b: u8) -> Option<u8> {
    match b.to_ascii_uppercase() {
        b'A' => Some(1),
        b'C' => Some(2),
        b'G' => Some(3),
        b'T' => Some(4),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InvalidSymbolPolicy {
    #[default]
    Error,
    Drop,
}

impl FromStr for InvalidSymbolPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "error" => Ok(Self::Error),
            "drop" => Ok(Self::Drop),
            _ => Err(Error::invalid(format!("unknown symbol policy '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FastaOptions {
    pub invalid: InvalidSymbolPolicy,
    /// Select the record whose header (or its first word) equals this.
    pub record: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FastaRecord {
    pub header: String,
    pub sequence: CategoricalSequence,
    /// Symbols skipped under [`InvalidSymbolPolicy::Drop`].
    pub dropped: usize,
    /// Number of records in the input.
    pub records: usize,
}

pub fn read_fasta(path: impl AsRef<Path>, opts: &FastaOptions) -> Result<FastaRecord> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_fasta(BufReader::new(file), path, opts)
}

/// Parses the first record (or the one named in `opts`) of a FASTA stream.
pub fn parse_fasta(reader: impl BufRead, path: &Path, opts: &FastaOptions) -> Result<FastaRecord> {
    let mut records = 0;
    let mut header: Option<String> = None;
    let mut capturing = false;
    let mut values = Vec::new();
    let mut dropped = 0;
    for (lineno, line) in reader.split(b'\n').enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.strip_suffix(b"\r").unwrap_or(&line);
        if let Some(rest) = line.strip_prefix(b">") {
            records += 1;
            let name = String::from_utf8_lossy(rest).trim().to_string();
            capturing = header.is_none()
                && match &opts.record {
                    None => true,
                    Some(want) => {
                        name == *want || name.split_whitespace().next() == Some(want.as_str())
                    }
                };
            if capturing {
                header = Some(name);
            }
            continue;
        }
        if !capturing {
            if header.is_none() && records == 0 && !line.iter().all(u8::is_ascii_whitespace) {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    message: "sequence data before the first '>' header".into(),
                });
            }
            continue;
        }
        for &b in line.iter().filter(|b| !b.is_ascii_whitespace()) {
            match nucleotide_label(b) {
                Some(v) => values.push(v),
                None => match opts.invalid {
                    InvalidSymbolPolicy::Drop => dropped += 1,
                    InvalidSymbolPolicy::Error => {
                        return Err(Error::InvalidSymbol {
                            position: values.len() + dropped + 1,
                            symbol: b as char,
                        })
                    }
                },
            }
        }
    }
    let header = header.ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: match &opts.record {
            Some(want) => format!("no record named '{want}'"),
            None => "no FASTA record found".into(),
        },
    })?;
    if values.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: format!("record '{header}' has an empty sequence"),
        });
    }
    Ok(FastaRecord {
        header,
        sequence: CategoricalSequence::new(values, NUCLEOTIDES.len())?,
        dropped,
        records,
    })
}

/// Writes a sequence over at most four categories as a single FASTA record.
pub fn write_fasta(seq: &CategoricalSequence, header: &str, path: impl AsRef<Path>) -> Result<()> {
    if seq.alphabet_size() > NUCLEOTIDES.len() {
        return Err(Error::invalid(format!(
            "FASTA output supports at most 4 categories, got {}",
            seq.alphabet_size()
        )));
    }
    write_file(path.as_ref(), |w| {
        writeln!(w, ">{header}")?;
        for chunk in seq.values().chunks(70) {
            let line: Vec<u8> = chunk.iter().map(|&v| NUCLEOTIDES[v as usize - 1]).collect();
            w.write_all(&line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LengthPolicy {
    /// Keep the first `2^floor(log2 n)` symbols.
    #[default]
    Truncate,
    /// Extend to `2^ceil(log2 n)` by repeating the last symbol.
    PadRepeatLast,
    Reject,
}

impl FromStr for LengthPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "truncate" => Ok(Self::Truncate),
            "pad-repeat-last" => Ok(Self::PadRepeatLast),
            "reject" => Ok(Self::Reject),
            _ => Err(Error::invalid(format!(
                "unknown length policy '{s}' (expected truncate, pad-repeat-last or reject)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LengthAction {
    Unchanged,
    Truncated,
    Padded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LengthAdjusted {
    pub sequence: CategoricalSequence,
    pub original_len: usize,
    pub action: LengthAction,
}

impl LengthAdjusted {
    pub fn effective_len(&self) -> usize {
        self.sequence.len()
    }

    pub fn metadata(&self) -> serde_json::Value {
        serde_json::json!({
            "original_length": self.original_len,
            "effective_length": self.effective_len(),
            "length_action": self.action,
        })
    }

    /// One-line description for the diagnostic stream, if anything changed.
    pub fn describe(&self) -> Option<String> {
        match self.action {
            LengthAction::Unchanged => None,
            LengthAction::Truncated => Some(format!(
                "truncated sequence from {} to {} symbols",
                self.original_len,
                self.effective_len()
            )),
            LengthAction::Padded => Some(format!(
                "padded sequence from {} to {} symbols by repeating the last symbol",
                self.original_len,
                self.effective_len()
            )),
        }
    }
}

/// Brings a sequence to a power-of-two length.
pub fn apply_length_policy(seq: CategoricalSequence, policy: LengthPolicy) -> Result<LengthAdjusted> {
    let n = seq.len();
    if n < 2 {
        return Err(Error::invalid(format!("sequence of length {n} is too short")));
    }
    if n.is_power_of_two() {
        return Ok(LengthAdjusted {
            sequence: seq,
            original_len: n,
            action: LengthAction::Unchanged,
        });
    }
    let r = seq.alphabet_size();
    let mut values = seq.values().to_vec();
    let action = match policy {
        LengthPolicy::Reject => return Err(Error::NotDyadic(n)),
        LengthPolicy::Truncate => {
            values.truncate(1 << n.ilog2());
            LengthAction::Truncated
        }
        LengthPolicy::PadRepeatLast => {
            let last = *values.last().expect("non-empty");
            values.resize(n.next_power_of_two(), last);
            LengthAction::Padded
        }
    };
    Ok(LengthAdjusted {
        sequence: CategoricalSequence::new(values, r)?,
        original_len: n,
        action,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(Error::invalid(format!("unknown format '{s}' (expected csv or json)"))),
        }
    }
}

/// Shortest decimal form of `x` rounded to 12 significant digits.
pub fn format_value(x: f64) -> String {
    let rounded: f64 = format!("{x:.11e}").parse().expect("round-trips through exponent form");
    if rounded == 0.0 {
        "0".into()
    } else {
        rounded.to_string()
    }
}

fn write_file(path: &Path, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

#[derive(Serialize, Deserialize)]
struct EstimateJson {
    n: usize,
    r: usize,
    columns: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    metadata: Option<serde_json::Value>,
}

pub fn write_estimate_to(
    w: &mut dyn Write,
    est: &RealMatrix,
    format: OutputFormat,
    metadata: Option<&serde_json::Value>,
) -> std::io::Result<()> {
    let (r, n) = (est.rows(), est.cols());
    match format {
        OutputFormat::Csv => {
            let header: Vec<String> = (1..=r).map(|j| format!("p{j}")).collect();
            writeln!(w, "i,{}", header.join(","))?;
            for i in 0..n {
                let row: Vec<String> = (0..r).map(|j| format_value(est.get(j, i))).collect();
                writeln!(w, "{},{}", i + 1, row.join(","))?;
            }
        }
        OutputFormat::Json => {
            let doc = EstimateJson {
                n,
                r,
                columns: (0..n).map(|i| est.column(i)).collect(),
                metadata: metadata.cloned(),
            };
            serde_json::to_writer(&mut *w, &doc)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

pub fn write_estimate(
    est: &RealMatrix,
    path: impl AsRef<Path>,
    format: OutputFormat,
    metadata: Option<&serde_json::Value>,
) -> Result<()> {
    write_file(path.as_ref(), |w| write_estimate_to(w, est, format, metadata))
}

pub fn read_estimate(path: impl AsRef<Path>, format: OutputFormat) -> Result<RealMatrix> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    match format {
        OutputFormat::Json => {
            let doc: EstimateJson =
                serde_json::from_str(&text).map_err(|e| parse_err(e.line(), e.to_string()))?;
            let m = RealMatrix::from_columns(&doc.columns)?;
            if m.rows() != doc.r || m.cols() != doc.n {
                return Err(parse_err(1, "n or r does not match the columns".into()));
            }
            Ok(m)
        }
        OutputFormat::Csv => {
            let mut lines = text.lines();
            let header = lines.next().ok_or_else(|| parse_err(1, "empty file".into()))?;
            let r = header.split(',').count().saturating_sub(1);
            let mut columns = Vec::new();
            for (k, line) in lines.enumerate() {
                let fields: Vec<&str> = line.split(',').collect();
                if fields.len() != r + 1 {
                    return Err(parse_err(k + 2, format!("expected {} fields", r + 1)));
                }
                let column = fields[1..]
                    .iter()
                    .map(|f| f.parse::<f64>().map_err(|e| parse_err(k + 2, e.to_string())))
                    .collect::<Result<Vec<_>>>()?;
                columns.push(column);
            }
            RealMatrix::from_columns(&columns)
        }
    }
}

/// Keeps the first `len` columns, undoing padding.
pub fn crop_columns(m: &RealMatrix, len: usize) -> RealMatrix {
    let len = len.min(m.cols());
    let data = m.lines().flat_map(|line| line[..len].iter().copied()).collect();
    RealMatrix::from_data_unchecked(m.rows(), len, data)
}

pub fn write_segments_to(
    w: &mut dyn Write,
    partition: &Partition,
    est: &ProbabilityMatrix,
) -> std::io::Result<()> {
    let m = est.as_real();
    for (start, end) in partition.segments() {
        let probs: Vec<String> = (0..m.rows()).map(|j| format_value(m.get(j, start - 1))).collect();
        writeln!(w, "{start}\t{end}\t{}", probs.join("\t"))?;
    }
    Ok(())
}

/// Tab-separated `start end p1 .. pr` rows, one per segment.
pub fn write_segments(
    partition: &Partition,
    est: &ProbabilityMatrix,
    path: impl AsRef<Path>,
) -> Result<()> {
    if partition.len() != est.cols() {
        return Err(Error::invalid(format!(
            "partition covers {} positions but the estimate has {}",
            partition.len(),
            est.cols()
        )));
    }
    write_file(path.as_ref(), |w| write_segments_to(w, partition, est))
}

pub fn write_criterion_path(path: impl AsRef<Path>, points: &[CriterionPoint]) -> Result<()> {
    write_file(path.as_ref(), |w| {
        writeln!(w, "candidate,dimension,criterion")?;
        for p in points {
            writeln!(w, "{},{},{}", p.candidate, p.dimension, format_value(p.value))?;
        }
        Ok(())
    })
}

pub fn write_calibration(path: impl AsRef<Path>, cal: &CalibrationPath) -> Result<()> {
    write_file(path.as_ref(), |w| {
        writeln!(w, "c,dimension")?;
        for (c, d) in cal.grid.iter().zip(&cal.dims) {
            writeln!(w, "{},{d}", format_value(*c))?;
        }
        Ok(())
    })
}

pub fn write_sweep(path: impl AsRef<Path>, table: &SweepTable) -> Result<()> {
    write_file(path.as_ref(), |w| {
        writeln!(w, "c1,c2,c,risk,replicates,converged")?;
        for row in &table.rows {
            let (c1, c2, c) = match row.penalty {
                PenaltySpec::TwoConstantLog { c1, c2 } => (format_value(c1), format_value(c2), String::new()),
                PenaltySpec::Linear { c } => (String::new(), String::new(), format_value(c)),
            };
            writeln!(
                w,
                "{c1},{c2},{c},{},{},{}",
                format_value(row.risk.value),
                row.risk.replicates,
                row.risk.converged
            )?;
        }
        Ok(())
    })
}
