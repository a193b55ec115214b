//! Per-event motif-transition posterior features.
//!
//! Row `i` of the matrix holds, for every open instance the `i`-th event
//! extends, the normalized posterior of that extension, accumulated into the
//! column of the instance's type. Cold events give empty rows.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead, Write};

use crate::error::{Error, Result};
use crate::ingest::TemporalGraph;
use crate::motif::{MotifVocabulary, TypeIndex};
use crate::scoring::hot_log_posterior;
use crate::stats::{MtmStats, TransitionTracker};

/// Which side of a transition names the column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColumnIndexing {
    #[default]
    Source,
    Target,
}

impl std::str::FromStr for ColumnIndexing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "source" => Ok(Self::Source),
            "target" => Ok(Self::Target),
            other => Err(Error::InvalidArgument(format!(
                "unknown column indexing {other:?}, expected source or target"
            ))),
        }
    }
}

/// Sparse `rows x cols` matrix in row-major triplet order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
    pub vocab_ref: String,
}

pub const DEFAULT_VOCAB_REF: &str = "vocab.tsv";

impl FeatureMatrix {
    pub fn row(&self, row: usize) -> &[(usize, usize, f64)] {
        let lo = self.entries.partition_point(|e| e.0 < row);
        let hi = self.entries.partition_point(|e| e.0 <= row);
        &self.entries[lo..hi]
    }

    pub fn nonzero_rows(&self) -> usize {
        let mut n = 0;
        let mut last = None;
        for &(r, _, _) in &self.entries {
            if last != Some(r) {
                n += 1;
                last = Some(r);
            }
        }
        n
    }

    /// Largest deviation of a nonzero row sum from one.
    pub fn max_row_sum_error(&self) -> f64 {
        let mut worst = 0.0f64;
        let mut i = 0;
        while i < self.entries.len() {
            let r = self.entries[i].0;
            let mut sum = 0.0;
            while i < self.entries.len() && self.entries[i].0 == r {
                sum += self.entries[i].2;
                i += 1;
            }
            worst = worst.max((sum - 1.0).abs());
        }
        worst
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.cols]; self.rows];
        for &(r, c, v) in &self.entries {
            out[r][c] = v;
        }
        out
    }
}

/// Builds the feature matrix of `g` in one chronological pass.
pub fn build_feature_matrix(
    g: &TemporalGraph,
    stats: &MtmStats,
    indexing: ColumnIndexing,
) -> Result<FeatureMatrix> {
    let vocab = stats.vocab();
    let mut tracker = TransitionTracker::new(vocab, stats.delta_c());
    let mut entries = Vec::new();
    let mut scores: Vec<(TypeIndex, f64)> = Vec::new();
    let mut row: BTreeMap<TypeIndex, f64> = BTreeMap::new();
    for (i, e) in g.events().iter().enumerate() {
        scores.clear();
        for t in tracker.observe(e) {
            let s = hot_log_posterior(t.source, t.target, t.waiting, stats)?;
            let col = match indexing {
                ColumnIndexing::Source => t.source,
                ColumnIndexing::Target => t.target,
            };
            scores.push((col, s.log_posterior));
        }
        let peak = scores.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        if peak == f64::NEG_INFINITY {
            continue;
        }
        let total: f64 = scores.iter().map(|s| (s.1 - peak).exp()).sum();
        row.clear();
        for &(col, lp) in &scores {
            let p = (lp - peak).exp() / total;
            if p > 0.0 {
                *row.entry(col).or_default() += p;
            }
        }
        entries.extend(row.iter().map(|(&c, &v)| (i, c, v)));
    }
    Ok(FeatureMatrix {
        rows: g.len(),
        cols: vocab.len(),
        entries,
        vocab_ref: DEFAULT_VOCAB_REF.to_string(),
    })
}

/// Write failure after `written` bytes reached the sink.
#[derive(Debug)]
pub struct ExportError {
    pub written: u64,
    pub source: io::Error,
}

impl fmt::Display for ExportError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "write failed after {} bytes: {}",
            self.written, self.source
        )
    }
}

impl std::error::Error for ExportError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

impl From<ExportError> for Error {
    fn from(e: ExportError) -> Self {
        Error::Io(e.source)
    }
}

struct Counting<W> {
    inner: W,
    written: u64,
}

impl<W: Write> Write for Counting<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.written += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

/// `%.9g`-style formatting: nine significant digits, trailing zeros trimmed.
pub fn format_significant(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-5..9).contains(&exp) {
        let s = format!("{v:.8e}");
        let (mant, e) = s.split_once('e').expect("exponent form");
        let mant = mant.trim_end_matches('0').trim_end_matches('.');
        return format!("{mant}e{e}");
    }
    let decimals = (8 - exp).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Writes the `#rows cols vocab_ref` header and one `row col value` line per
/// entry. Returns the byte count.
pub fn export_sparse<W: Write>(
    m: &FeatureMatrix,
    sink: W,
) -> std::result::Result<u64, ExportError> {
    let mut out = Counting {
        inner: sink,
        written: 0,
    };
    let mut run = || -> io::Result<()> {
        writeln!(out, "#{} {} {}", m.rows, m.cols, m.vocab_ref)?;
        for &(r, c, v) in &m.entries {
            writeln!(out, "{r} {c} {}", format_significant(v))?;
        }
        out.flush()
    };
    match run() {
        Ok(()) => Ok(out.written),
        Err(source) => Err(ExportError {
            written: out.written,
            source,
        }),
    }
}

pub fn read_sparse<R: BufRead>(input: R) -> Result<FeatureMatrix> {
    let mut lines = input.lines();
    let header = lines.next().ok_or(Error::EmptyInput)??;
    let bad = |line: usize, message: &str| Error::Parse {
        line,
        message: message.to_string(),
    };
    let fields: Vec<&str> = header
        .strip_prefix('#')
        .ok_or_else(|| bad(1, "missing header"))?
        .split_whitespace()
        .collect();
    if fields.len() != 3 {
        return Err(bad(1, "header needs rows, cols and vocabulary reference"));
    }
    let rows = fields[0].parse().map_err(|_| bad(1, "bad row count"))?;
    let cols = fields[1].parse().map_err(|_| bad(1, "bad column count"))?;
    let vocab_ref = fields[2].to_string();
    let mut entries = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let n = i + 2;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(bad(n, "expected row col value"));
        }
        let r: usize = f[0].parse().map_err(|_| bad(n, "bad row"))?;
        let c: usize = f[1].parse().map_err(|_| bad(n, "bad column"))?;
        let v: f64 = f[2].parse().map_err(|_| bad(n, "bad value"))?;
        if r >= rows || c >= cols {
            return Err(bad(n, "entry outside matrix"));
        }
        entries.push((r, c, v));
    }
    Ok(FeatureMatrix {
        rows,
        cols,
        entries,
        vocab_ref,
    })
}

/// Refuses dense export above this many rows.
pub const DENSE_ROW_LIMIT: usize = 100_000;

/// One CSV line per event with a `t<index>` column per motif type.
pub fn export_dense_csv<W: Write>(m: &FeatureMatrix, mut out: W, row_limit: usize) -> Result<()> {
    if m.rows > row_limit {
        return Err(Error::InvalidArgument(format!(
            "{} rows exceed the dense export limit of {row_limit}",
            m.rows
        )));
    }
    let header: Vec<String> = (0..m.cols).map(|c| format!("t{c}")).collect();
    writeln!(out, "{}", header.join(","))?;
    let mut line = vec![String::from("0"); m.cols];
    let mut k = 0;
    for r in 0..m.rows {
        let start = k;
        while k < m.entries.len() && m.entries[k].0 == r {
            line[m.entries[k].1] = format_significant(m.entries[k].2);
            k += 1;
        }
        writeln!(out, "{}", line.join(","))?;
        for e in &m.entries[start..k] {
            line[e.1] = String::from("0");
        }
    }
    Ok(())
}

pub fn export_vocabulary<W: Write>(vocab: &MotifVocabulary, out: W) -> Result<()> {
    vocab.write_tsv(out)?;
    Ok(())
}
