//! Interacting-variable models: pairwise-coupled spins fitted by exact
//! enumeration, and restricted Boltzmann machines trained by (persistent)
//! contrastive divergence.

pub mod rbm;
pub mod sk;

pub use rbm::{CdConfig, HiddenUnits, RbmError, RbmParams};
pub use sk::{SkError, SkMoments, SkParams};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParamsFileError {
    #[error("bad parameter file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("inconsistent parameter file: {0}")]
    Inconsistent(String),
}

/// On-disk parameter file, tagged by model kind.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelParamsFile {
    Sk {
        n: usize,
        h: Vec<f64>,
        j: Vec<Vec<f64>>,
    },
    Rbm {
        n_visible: usize,
        n_hidden: usize,
        a: Vec<f64>,
        b: Vec<f64>,
        w: Vec<Vec<f64>>,
        #[serde(default)]
        hidden_units: HiddenUnits,
    },
}

/// Validated in-memory parameters.
#[derive(Debug, Clone)]
pub enum ModelParams {
    Sk(SkParams),
    Rbm(RbmParams),
}

pub fn params_from_json(text: &str) -> Result<ModelParams, ParamsFileError> {
    let file: ModelParamsFile = serde_json::from_str(text)?;
    match file {
        ModelParamsFile::Sk { n, h, j } => {
            if h.len() != n {
                return Err(ParamsFileError::Inconsistent(format!(
                    "h has {} entries, expected n = {n}",
                    h.len()
                )));
            }
            if j.len() != n || j.iter().any(|row| row.len() != n) {
                return Err(ParamsFileError::Inconsistent(format!(
                    "j must be an {n} x {n} matrix"
                )));
            }
            let flat: Vec<f64> = j.into_iter().flatten().collect();
            let params = SkParams::new(n, h, flat)
                .map_err(|e| ParamsFileError::Inconsistent(e.to_string()))?;
            Ok(ModelParams::Sk(params))
        }
        ModelParamsFile::Rbm {
            n_visible,
            n_hidden,
            a,
            b,
            w,
            hidden_units,
        } => {
            if a.len() != n_visible || b.len() != n_hidden {
                return Err(ParamsFileError::Inconsistent(
                    "field vector lengths do not match unit counts".into(),
                ));
            }
            if w.len() != n_visible || w.iter().any(|row| row.len() != n_hidden) {
                return Err(ParamsFileError::Inconsistent(format!(
                    "w must be {n_visible} x {n_hidden}"
                )));
            }
            let flat: Vec<f64> = w.into_iter().flatten().collect();
            let params = RbmParams::new(n_visible, n_hidden, a, b, flat, hidden_units)
                .map_err(|e| ParamsFileError::Inconsistent(e.to_string()))?;
            Ok(ModelParams::Rbm(params))
        }
    }
}

pub fn params_to_json(params: &ModelParams) -> String {
    let file = match params {
        ModelParams::Sk(p) => ModelParamsFile::Sk {
            n: p.n(),
            h: p.h().to_vec(),
            j: (0..p.n())
                .map(|i| (0..p.n()).map(|k| p.j(i, k)).collect())
                .collect(),
        },
        ModelParams::Rbm(p) => ModelParamsFile::Rbm {
            n_visible: p.n_visible(),
            n_hidden: p.n_hidden(),
            a: p.a().to_vec(),
            b: p.b().to_vec(),
            w: (0..p.n_visible())
                .map(|i| (0..p.n_hidden()).map(|j| p.w(i, j)).collect())
                .collect(),
            hidden_units: p.hidden_units(),
        },
    };
    serde_json::to_string_pretty(&file).expect("parameter serialization cannot fail")
}
