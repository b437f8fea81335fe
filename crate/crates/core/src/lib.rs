//! Grid and Monte Carlo numerics for entropy, Fisher information and maximal
//! correlation of sums of i.i.d. random variables.
//!
//! The grid pipeline builds densities of partial sums by FFT convolution and
//! evaluates functionals on them; the Monte Carlo side estimates the same
//! quantities from samples as an independent check.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod correlation;
pub mod density;
pub mod dist;
pub mod error;
pub mod family;
pub mod functionals;
pub mod grid;
pub mod numfmt;
pub mod oracle;
pub mod semigroup;

pub use correlation::{
    cond_exp, contraction_ratio, maximal_correlation, verify_score_projection, CondExpKernel, GridFunction,
    MaxCorrelation, ScoreProjection,
};
pub use density::{convolve, make_density, normalize, ou_evolve, rescale, GridDensity, Regularity};
pub use dist::{DistributionSpec, Family};
pub use error::{Error, Result};
pub use family::{GridPolicy, IidSumFamily};
pub use functionals::{entropy, fisher_information, moments, report, score, FunctionalReport, ScoreField};
pub use grid::GridSpec;
pub use oracle::{mc_entropy, mc_fisher, mc_maxcorr, sample, EstimateWithCI, SampleSet};
pub use semigroup::{
    debruijn_gap, fisher_along_flow, flow_profile, monotonicity_via_flow, FlowComparison, FlowProfile,
    FlowSchedule, FlowTrace,
};
