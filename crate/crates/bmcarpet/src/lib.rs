//! Multifractal analysis of Bernoulli measures on Bedford-McMullen
//! self-affine carpets.
//!
//! The library computes the theoretical local-dimension spectrum
//! `f(alpha) = inf_t (alpha t + beta(t))` for a carpet with bases `m < n`,
//! digit set `D` and probability vector `p`, and verifies it empirically
//! through the symbolic machinery of approximate squares: exact square
//! measures, tilted sampling measures, true ball measures and coarse box
//! counting.

pub mod carpet;
pub mod empirical;
pub mod spectrum;
pub mod symbolic;

#[doc(hidden)]
pub mod test_support;

pub use carpet::{CarpetError, CarpetSpec, Digit, RawCarpetSpec};
pub use empirical::{
    ball_measure, ball_measure_radius, coarse_spectrum, covering_sum_demo, local_dim_estimate,
    sample_prefix, verify_convergence, BallMeasure, BallOptions, BallRunConfig, CoarseMode,
    CoarseSpectrum, CoveringSumReport, EmpiricalError, EmpiricalReport, LocalDimEstimate,
};
pub use spectrum::{
    alpha_of_t, alpha_range, beta, hausdorff_dimension, legendre_point, measure_dimension,
    spectrum_curve, tilted_measure, AlphaRange, LegendrePoint, SpectrumCurve, SpectrumError,
    SpectrumSample, TiltedMeasure, ENDPOINT_T,
};
pub use symbolic::{
    approx_square, birkhoff, classify_square, enumerate_gamma, find_good_levels, for_each_square,
    l_of_k, project_prefix, symbolic_local_dim, v_k, z_k, ApproxSquare, Birkhoff, SquareClass,
    SymbolicError, SymbolicPrefix,
};

/// Stable log(sum(exp(x_i))) with a max shift.
pub(crate) fn logsumexp<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let mx = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !mx.is_finite() {
        return mx;
    }
    mx + xs.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
}
