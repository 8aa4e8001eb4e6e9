//! Sample containers and frequency/degeneracy profiles.
//!
//! A sample is an ordered list of N discrete outcomes. Outcomes are opaque
//! labels; spin configurations are carried in the packed [`SpinSample`] form
//! and only turned into labels on export.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SampleError {
    #[error("empty sample")]
    Empty,
    #[error("profile counts sum to {got}, expected {expected}")]
    CountMismatch { got: u64, expected: u64 },
    #[error("spin sample supports at most {max} units per observation, got {got}")]
    TooManyUnits { max: usize, got: usize },
    #[error("observation {row} has {got} units, expected {expected}")]
    RaggedRow {
        row: usize,
        got: usize,
        expected: usize,
    },
}

/// An ordered sample of N outcome labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    outcomes: Vec<String>,
}

impl Sample {
    pub fn new(outcomes: Vec<String>) -> Result<Self, SampleError> {
        if outcomes.is_empty() {
            return Err(SampleError::Empty);
        }
        Ok(Sample { outcomes })
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn frequency_profile(&self) -> FrequencyProfile {
        FrequencyProfile::from_labels(self.outcomes.iter().map(|s| s.as_str()))
            .expect("non-empty by construction")
    }
}

/// Frequencies k_s per state plus the degeneracy map m_k = |{s : k_s = k}|.
///
/// States with k_s = 0 may be present in `counts` (a declared state space);
/// they never contribute to the degeneracy map or to entropies.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyProfile {
    /// (label, count), sorted by label for deterministic serialization.
    counts: Vec<(String, u64)>,
    /// k -> m_k over occupied k >= 1, ascending.
    degeneracy: BTreeMap<u64, u64>,
    n: u64,
}

impl FrequencyProfile {
    /// Count an iterator of outcome labels.
    pub fn from_labels<'a, I>(outcomes: I) -> Result<Self, SampleError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut map: HashMap<&str, u64> = HashMap::new();
        let mut n = 0u64;
        for s in outcomes {
            *map.entry(s).or_insert(0) += 1;
            n += 1;
        }
        if n == 0 {
            return Err(SampleError::Empty);
        }
        let mut counts: Vec<(String, u64)> =
            map.into_iter().map(|(s, k)| (s.to_owned(), k)).collect();
        counts.sort();
        Ok(Self::from_sorted_counts(counts, n))
    }

    /// Build from a count vector over states 0..len; labels are the indices.
    /// Zero counts are kept as declared states.
    pub fn from_index_counts(counts: &[u64]) -> Result<Self, SampleError> {
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(SampleError::Empty);
        }
        let width = (counts.len().saturating_sub(1)).to_string().len();
        let labeled: Vec<(String, u64)> = counts
            .iter()
            .enumerate()
            .map(|(i, &k)| (format!("{i:0width$}"), k))
            .collect();
        Ok(Self::from_sorted_counts(labeled, n))
    }

    /// Build from explicit (label, count) pairs; `expected_n`, when given, is
    /// validated against the count sum.
    pub fn from_counts(
        mut counts: Vec<(String, u64)>,
        expected_n: Option<u64>,
    ) -> Result<Self, SampleError> {
        let n: u64 = counts.iter().map(|(_, k)| *k).sum();
        if n == 0 {
            return Err(SampleError::Empty);
        }
        if let Some(expected) = expected_n {
            if n != expected {
                return Err(SampleError::CountMismatch {
                    got: n,
                    expected,
                });
            }
        }
        counts.sort();
        Ok(Self::from_sorted_counts(counts, n))
    }

    fn from_sorted_counts(counts: Vec<(String, u64)>, n: u64) -> Self {
        let mut degeneracy: BTreeMap<u64, u64> = BTreeMap::new();
        for &(_, k) in &counts {
            if k > 0 {
                *degeneracy.entry(k).or_insert(0) += 1;
            }
        }
        FrequencyProfile {
            counts,
            degeneracy,
            n,
        }
    }

    /// Total number of observations N.
    pub fn n(&self) -> u64 {
        self.n
    }

    /// All (label, k_s) pairs, sorted by label, zero counts included.
    pub fn counts(&self) -> &[(String, u64)] {
        &self.counts
    }

    /// Occupied frequencies only.
    pub fn positive_counts(&self) -> impl Iterator<Item = u64> + '_ {
        self.counts.iter().map(|&(_, k)| k).filter(|&k| k > 0)
    }

    /// k -> m_k, ascending in k, occupied k only.
    pub fn degeneracy(&self) -> &BTreeMap<u64, u64> {
        &self.degeneracy
    }

    /// Number of states with k_s >= 1.
    pub fn occupied_states(&self) -> u64 {
        self.degeneracy.values().sum()
    }

    /// Largest frequency in the profile.
    pub fn max_count(&self) -> u64 {
        self.degeneracy.keys().next_back().copied().unwrap_or(0)
    }

    /// Counts sorted descending, i.e. the rank table.
    pub fn rank_counts(&self) -> Vec<u64> {
        let mut ks: Vec<u64> = self.positive_counts().collect();
        ks.sort_unstable_by(|a, b| b.cmp(a));
        ks
    }
}

/// A sample of N observations, each a configuration of `n_units` binary
/// units, packed one observation per u32 (bit set = up spin / unit on).
#[derive(Debug, Clone, PartialEq)]
pub struct SpinSample {
    n_units: usize,
    rows: Vec<u32>,
}

/// Packed configurations keep the per-step bookkeeping of the samplers O(1).
pub const MAX_SPIN_UNITS: usize = 24;

impl SpinSample {
    pub fn new(n_units: usize, rows: Vec<u32>) -> Result<Self, SampleError> {
        if rows.is_empty() {
            return Err(SampleError::Empty);
        }
        if n_units == 0 || n_units > MAX_SPIN_UNITS {
            return Err(SampleError::TooManyUnits {
                max: MAX_SPIN_UNITS,
                got: n_units,
            });
        }
        Ok(SpinSample { n_units, rows })
    }

    /// Build from rows of ±1 (or 0/1) values; any positive value is "up".
    pub fn from_signs(rows: &[Vec<i8>]) -> Result<Self, SampleError> {
        if rows.is_empty() {
            return Err(SampleError::Empty);
        }
        let n_units = rows[0].len();
        let mut packed = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_units {
                return Err(SampleError::RaggedRow {
                    row: i,
                    got: row.len(),
                    expected: n_units,
                });
            }
            let mut code = 0u32;
            for (b, &v) in row.iter().enumerate() {
                if v > 0 {
                    code |= 1 << b;
                }
            }
            packed.push(code);
        }
        SpinSample::new(n_units, packed)
    }

    pub fn n_units(&self) -> usize {
        self.n_units
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[u32] {
        &self.rows
    }

    pub fn rows_mut(&mut self) -> &mut [u32] {
        &mut self.rows
    }

    /// Flip one unit of one observation.
    pub fn flip(&mut self, row: usize, unit: usize) {
        debug_assert!(unit < self.n_units);
        self.rows[row] ^= 1 << unit;
    }

    /// ±1 value of a unit in a row code.
    pub fn sign_of(code: u32, unit: usize) -> f64 {
        if code & (1 << unit) != 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// 0/1 value of a unit in a row code.
    pub fn bit_of(code: u32, unit: usize) -> f64 {
        ((code >> unit) & 1) as f64
    }

    /// Per-unit magnetizations m_i = mean of ±1 values.
    pub fn magnetizations(&self) -> Vec<f64> {
        let n = self.rows.len() as f64;
        (0..self.n_units)
            .map(|u| {
                let ups = self.rows.iter().filter(|&&r| r & (1 << u) != 0).count() as f64;
                (2.0 * ups - n) / n
            })
            .collect()
    }

    /// Canonical text label of one observation: comma-joined ±1 values.
    pub fn row_label(&self, row: usize) -> String {
        let code = self.rows[row];
        (0..self.n_units)
            .map(|u| if code & (1 << u) != 0 { "1" } else { "-1" })
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Frequency profile over distinct configurations.
    pub fn frequency_profile(&self) -> FrequencyProfile {
        let mut map: HashMap<u32, u64> = HashMap::new();
        for &r in &self.rows {
            *map.entry(r).or_insert(0) += 1;
        }
        let width = self.n_units;
        let counts: Vec<(String, u64)> = map
            .into_iter()
            .map(|(code, k)| (format!("{code:0width$b}"), k))
            .collect();
        FrequencyProfile::from_counts(counts, Some(self.rows.len() as u64))
            .expect("non-empty by construction")
    }

    /// Expand to an ordinary label sample (one ±1 CSV row per outcome).
    pub fn to_sample(&self) -> Sample {
        Sample::new((0..self.rows.len()).map(|i| self.row_label(i)).collect())
            .expect("non-empty by construction")
    }
}
