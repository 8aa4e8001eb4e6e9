//! Normalized maximum likelihood (NML) codes as generative models: exact
//! and asymptotic parametric complexity, typical and tilted sampling for
//! categorical, independent-spin, pairwise-spin and RBM model classes, the
//! resolution/relevance statistics of the generated samples, and the
//! large-deviation analysis of the coding cost around its localization
//! transition.
//!
//! Modules map onto the moving parts:
//!
//! * [`sample`]      - samples, frequency profiles, packed spin samples
//! * [`relevance`]   - resolution/relevance, bound curve, random baseline
//! * [`dirichlet`]   - categorical NML: saddle point, complexity, samplers
//! * [`spin`]        - paramagnet NML: exact pmf, complexity, sampler
//! * [`models`]      - pairwise-coupled spins (exact fit) and RBMs (CD/PCD)
//! * [`mcmc`]        - refit Metropolis sampler over sample space
//! * [`largedev`]    - phi(beta), rate function, localization diagnostics
//! * [`io`], [`grid`] - file formats and CLI grid syntax
//!
//! Entropies are natural-log internally; divide by ln 2 for bits.

pub mod dirichlet;
pub mod grid;
pub mod io;
pub mod largedev;
pub mod mcmc;
pub mod models;
pub mod numeric;
pub mod relevance;
pub mod sample;
pub mod spin;

pub use sample::{FrequencyProfile, Sample, SpinSample};

/// Conversion factor: nats to bits.
pub const NATS_TO_BITS: f64 = std::f64::consts::LOG2_E;
