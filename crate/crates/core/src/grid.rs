//! Grid argument syntax: `min:max:step` ranges and comma-separated lists.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("bad range {input:?}: expected min:max:step")]
    BadShape { input: String },
    #[error("bad number {field:?} in {input:?}")]
    BadNumber { input: String, field: String },
    #[error("step must be positive and finite in {input:?}")]
    BadStep { input: String },
    #[error("range {input:?} is empty (max < min)")]
    EmptyRange { input: String },
    #[error("range {input:?} has too many points (limit {limit})")]
    TooManyPoints { input: String, limit: usize },
}

const MAX_POINTS: usize = 1_000_000;

/// Inclusive arithmetic grid parsed from `min:max:step`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RangeSpec {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl RangeSpec {
    pub fn parse(input: &str) -> Result<Self, GridError> {
        let parts: Vec<&str> = input.split(':').collect();
        if parts.len() != 3 {
            return Err(GridError::BadShape {
                input: input.to_owned(),
            });
        }
        let mut nums = [0.0f64; 3];
        for (slot, part) in nums.iter_mut().zip(&parts) {
            *slot = part.trim().parse().map_err(|_| GridError::BadNumber {
                input: input.to_owned(),
                field: (*part).to_owned(),
            })?;
            if !slot.is_finite() {
                return Err(GridError::BadNumber {
                    input: input.to_owned(),
                    field: (*part).to_owned(),
                });
            }
        }
        let [min, max, step] = nums;
        if !(step > 0.0) {
            return Err(GridError::BadStep {
                input: input.to_owned(),
            });
        }
        if max < min {
            return Err(GridError::EmptyRange {
                input: input.to_owned(),
            });
        }
        let span = (max - min) / step;
        if span > MAX_POINTS as f64 {
            return Err(GridError::TooManyPoints {
                input: input.to_owned(),
                limit: MAX_POINTS,
            });
        }
        Ok(RangeSpec { min, max, step })
    }

    /// Grid points min, min+step, ... The endpoint is included when it lands
    /// within half a step of a grid point (so `-1:1:0.1` has 21 points).
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.max - self.min) / self.step + 0.5).floor() as usize;
        let mut vs: Vec<f64> = (0..=count)
            .map(|i| self.min + i as f64 * self.step)
            .collect();
        // snap values that should be exact (e.g. 0 in -1:1:0.1)
        for v in &mut vs {
            if v.abs() < 1e-12 * self.step.abs() {
                *v = 0.0;
            }
        }
        vs
    }
}

/// Comma-separated list of positive integers, e.g. `10,20,40`.
pub fn parse_u64_list(input: &str) -> Result<Vec<u64>, GridError> {
    input
        .split(',')
        .map(|part| {
            part.trim().parse().map_err(|_| GridError::BadNumber {
                input: input.to_owned(),
                field: part.to_owned(),
            })
        })
        .collect()
}

/// Comma-separated list of floats.
pub fn parse_f64_list(input: &str) -> Result<Vec<f64>, GridError> {
    input
        .split(',')
        .map(|part| {
            let v: f64 = part.trim().parse().map_err(|_| GridError::BadNumber {
                input: input.to_owned(),
                field: part.to_owned(),
            })?;
            if !v.is_finite() {
                return Err(GridError::BadNumber {
                    input: input.to_owned(),
                    field: part.to_owned(),
                });
            }
            Ok(v)
        })
        .collect()
}
