//! File formats: sample text, spin CSV, and the CSV table writers.
//!
//! Sample text format: one outcome label per line; blank lines are skipped;
//! `#`-prefixed lines are comments, except an optional `# states=<S>` header
//! declaring the state-space cardinality. Spin CSV: one observation per row,
//! comma-separated unit values in {-1, 1} (0 accepted as "down" on input).

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use thiserror::Error;

use crate::sample::{Sample, SampleError, SpinSample, MAX_SPIN_UNITS};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: bad states header: {msg}")]
    BadHeader { line: usize, msg: String },
    #[error("line {line}: {msg}")]
    BadRow { line: usize, msg: String },
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error("declared states={declared} but sample has {observed} distinct labels")]
    StateSpaceOverflow { declared: u64, observed: u64 },
}

/// A parsed sample file: the outcomes plus the declared cardinality, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleFile {
    pub sample: Sample,
    pub declared_states: Option<u64>,
}

pub fn read_sample_text<R: BufRead>(reader: R) -> Result<SampleFile, FormatError> {
    let mut outcomes = Vec::new();
    let mut declared_states = None;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(value) = rest.strip_prefix("states=") {
                let s: u64 = value.trim().parse().map_err(|e| FormatError::BadHeader {
                    line: idx + 1,
                    msg: format!("{value:?}: {e}"),
                })?;
                if s == 0 {
                    return Err(FormatError::BadHeader {
                        line: idx + 1,
                        msg: "states must be >= 1".into(),
                    });
                }
                declared_states = Some(s);
            }
            continue;
        }
        outcomes.push(trimmed.to_owned());
    }
    let sample = Sample::new(outcomes)?;
    if let Some(declared) = declared_states {
        let observed = sample.frequency_profile().occupied_states();
        if observed > declared {
            return Err(FormatError::StateSpaceOverflow { declared, observed });
        }
    }
    Ok(SampleFile {
        sample,
        declared_states,
    })
}

pub fn write_sample_text<W: Write>(
    w: &mut W,
    sample: &Sample,
    declared_states: Option<u64>,
) -> Result<(), FormatError> {
    if let Some(s) = declared_states {
        writeln!(w, "# states={s}")?;
    }
    for o in sample.outcomes() {
        writeln!(w, "{o}")?;
    }
    Ok(())
}

pub fn read_spin_csv<R: BufRead>(reader: R) -> Result<SpinSample, FormatError> {
    let mut rows: Vec<Vec<i8>> = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut row = Vec::new();
        for field in trimmed.split(',') {
            let v: i64 = field.trim().parse().map_err(|e| FormatError::BadRow {
                line: idx + 1,
                msg: format!("bad unit value {field:?}: {e}"),
            })?;
            match v {
                1 => row.push(1i8),
                -1 | 0 => row.push(-1i8),
                other => {
                    return Err(FormatError::BadRow {
                        line: idx + 1,
                        msg: format!("unit value must be -1, 0 or 1, got {other}"),
                    })
                }
            }
        }
        match width {
            None => {
                if row.len() > MAX_SPIN_UNITS {
                    return Err(FormatError::BadRow {
                        line: idx + 1,
                        msg: format!(
                            "{} units per observation exceeds the supported maximum {}",
                            row.len(),
                            MAX_SPIN_UNITS
                        ),
                    });
                }
                width = Some(row.len());
            }
            Some(w) if w != row.len() => {
                return Err(FormatError::BadRow {
                    line: idx + 1,
                    msg: format!("expected {w} columns, got {}", row.len()),
                })
            }
            _ => {}
        }
        rows.push(row);
    }
    Ok(SpinSample::from_signs(&rows)?)
}

pub fn write_spin_csv<W: Write>(w: &mut W, sample: &SpinSample) -> Result<(), FormatError> {
    for i in 0..sample.len() {
        writeln!(w, "{}", sample.row_label(i))?;
    }
    Ok(())
}

/// Shortest-roundtrip exponent notation; stable across runs for equal bits.
pub fn fmt_f64(x: f64) -> String {
    let mut s = String::new();
    write!(s, "{x:e}").expect("formatting f64 cannot fail");
    s
}

/// CSV `state,count` over all declared states, sorted by label.
pub fn write_frequency_csv<W: Write>(
    w: &mut W,
    profile: &crate::sample::FrequencyProfile,
) -> Result<(), FormatError> {
    writeln!(w, "state,count")?;
    for (label, k) in profile.counts() {
        writeln!(w, "{label},{k}")?;
    }
    Ok(())
}

/// CSV `rank,count` sorted by count descending (rank starts at 1).
pub fn write_rank_csv<W: Write>(
    w: &mut W,
    profile: &crate::sample::FrequencyProfile,
) -> Result<(), FormatError> {
    writeln!(w, "rank,count")?;
    for (i, k) in profile.rank_counts().iter().enumerate() {
        writeln!(w, "{},{k}", i + 1)?;
    }
    Ok(())
}

/// CSV `k,m_k` ascending in k, occupied k only.
pub fn write_degeneracy_csv<W: Write>(
    w: &mut W,
    profile: &crate::sample::FrequencyProfile,
) -> Result<(), FormatError> {
    writeln!(w, "k,m_k")?;
    for (&k, &m) in profile.degeneracy() {
        writeln!(w, "{k},{m}")?;
    }
    Ok(())
}
