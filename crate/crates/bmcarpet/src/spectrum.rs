//! The pressure-like function beta(t), tilted weights, and the Legendre
//! transform spectrum f(alpha).
//!
//! Sign convention: beta(t) = log_m S(t) with
//! `S(t) = sum_d p_d^t q_row(d)^{(1-sigma) t} gamma_row(d)(t)^{sigma-1}`,
//! which makes beta convex and strictly decreasing, beta(1) = 0,
//! beta(0) = dim_H of the carpet, and alpha(t) = -beta'(t) > 0.

use crate::carpet::CarpetSpec;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SpectrumError {
    #[error("alpha {alpha} outside the open interval ({lo}, {hi})")]
    OutOfRange { alpha: f64, lo: f64, hi: f64 },
    #[error("degenerate spectrum: alpha_min = alpha_max = {0}")]
    Degenerate(f64),
    #[error("bracket expansion exceeded |t| = {0}")]
    NoConvergence(f64),
    #[error("empty parameter grid")]
    EmptyGrid,
}

/// The tilted Bernoulli weight vector at parameter t.
#[derive(Debug, Clone)]
pub struct TiltedMeasure {
    pub t: f64,
    /// P_d, one per digit, positive, summing to 1.
    pub weights: Vec<f64>,
    /// Q_r, one per row of the grid (zero on empty rows).
    pub row_marginals: Vec<f64>,
    pub beta: f64,
    pub alpha: f64,
}

/// The attainable range of local dimensions and the limiting spectrum values.
#[derive(Debug, Clone)]
pub struct AlphaRange {
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Per-digit exponent e_d = (-sigma log p_d + (sigma-1) log q_row)/log m.
    pub exponents: Vec<f64>,
    /// f evaluated at t = +200 (a numerical limit, not a closed form).
    pub f_at_min: f64,
    /// f evaluated at t = -200.
    pub f_at_max: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct LegendrePoint {
    pub f: f64,
    pub t_star: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SpectrumSample {
    pub t: f64,
    pub alpha: f64,
    pub f: f64,
    pub beta: f64,
}

#[derive(Debug, Clone)]
pub struct SpectrumCurve {
    pub samples: Vec<SpectrumSample>,
    pub spec_fingerprint: String,
}

/// t-range used to expose the endpoint limits of the open-interval theorem.
pub const ENDPOINT_T: f64 = 200.0;
const BRACKET_LIMIT: f64 = 1e4;

/// Per-digit log term of S(t): t log p + (1-sigma) t log q + (sigma-1) log gamma.
fn log_terms(spec: &CarpetSpec, t: f64) -> Vec<f64> {
    let sigma = spec.sigma();
    let mut log_gamma = vec![0.0; spec.m() as usize];
    for &r in spec.nonempty_rows() {
        log_gamma[r as usize] = spec.log_gamma_row(r, t);
    }
    spec.digits()
        .iter()
        .zip(spec.probs())
        .map(|(d, &p)| {
            let q = spec.row_probs()[d.row as usize];
            t * p.ln() + (1.0 - sigma) * t * q.ln() + (sigma - 1.0) * log_gamma[d.row as usize]
        })
        .collect()
}

fn log_s(spec: &CarpetSpec, t: f64) -> f64 {
    crate::logsumexp(log_terms(spec, t))
}

/// beta(t) = log_m S(t).
pub fn beta(spec: &CarpetSpec, t: f64) -> f64 {
    log_s(spec, t) / (spec.m() as f64).ln()
}

/// The tilted weights P_d = p_d^t q^{(1-sigma)t} gamma^{sigma-1} / S(t),
/// with their row marginals and the pair (beta(t), alpha(t)).
pub fn tilted_measure(spec: &CarpetSpec, t: f64) -> TiltedMeasure {
    let terms = log_terms(spec, t);
    let ls = crate::logsumexp(terms.iter().cloned());
    let weights: Vec<f64> = terms.iter().map(|&x| (x - ls).exp()).collect();
    let mut row_marginals = vec![0.0; spec.m() as usize];
    for (d, &w) in spec.digits().iter().zip(&weights) {
        row_marginals[d.row as usize] += w;
    }
    let sigma = spec.sigma();
    let log_m = (spec.m() as f64).ln();
    let mut acc = 0.0;
    for (&p, &w) in spec.probs().iter().zip(&weights) {
        acc -= sigma * w * p.ln();
    }
    for &r in spec.nonempty_rows() {
        let q = spec.row_probs()[r as usize];
        acc -= (1.0 - sigma) * row_marginals[r as usize] * q.ln();
    }
    TiltedMeasure {
        t,
        weights,
        row_marginals,
        beta: ls / log_m,
        alpha: acc / log_m,
    }
}

/// alpha(t) = -beta'(t), evaluated through the analytic formula.
pub fn alpha_of_t(spec: &CarpetSpec, t: f64) -> f64 {
    tilted_measure(spec, t).alpha
}

/// dim of the projected tilted measure, t alpha(t) + beta(t).
pub fn measure_dimension(spec: &CarpetSpec, t: f64) -> f64 {
    let tm = tilted_measure(spec, t);
    t * tm.alpha + tm.beta
}

/// Hausdorff dimension of the carpet itself, beta(0) = log_m sum_r N_r^sigma.
pub fn hausdorff_dimension(spec: &CarpetSpec) -> f64 {
    beta(spec, 0.0)
}

const DEGENERATE_TOL: f64 = 1e-12;

pub fn alpha_range(spec: &CarpetSpec) -> AlphaRange {
    let sigma = spec.sigma();
    let log_m = (spec.m() as f64).ln();
    let exponents: Vec<f64> = spec
        .digits()
        .iter()
        .zip(spec.probs())
        .map(|(d, &p)| {
            let q = spec.row_probs()[d.row as usize];
            (-sigma * p.ln() + (sigma - 1.0) * q.ln()) / log_m
        })
        .collect();
    let alpha_min = exponents.iter().cloned().fold(f64::INFINITY, f64::min);
    let alpha_max = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    AlphaRange {
        alpha_min,
        alpha_max,
        f_at_min: measure_dimension(spec, ENDPOINT_T),
        f_at_max: measure_dimension(spec, -ENDPOINT_T),
        degenerate: alpha_max - alpha_min <= DEGENERATE_TOL,
        exponents,
    }
}

/// Inverts the strictly decreasing map t -> alpha(t) by bisection, then
/// evaluates f = alpha t* + beta(t*).
pub fn legendre_point(spec: &CarpetSpec, alpha: f64) -> Result<LegendrePoint, SpectrumError> {
    let range = alpha_range(spec);
    if range.degenerate {
        return Err(SpectrumError::Degenerate(range.alpha_min));
    }
    if alpha <= range.alpha_min || alpha >= range.alpha_max {
        return Err(SpectrumError::OutOfRange {
            alpha,
            lo: range.alpha_min,
            hi: range.alpha_max,
        });
    }
    // alpha(t) decreases, so the left bracket end must overshoot alpha.
    let mut lo = -1.0;
    let mut hi = 1.0;
    while alpha_of_t(spec, lo) < alpha {
        lo *= 2.0;
        if lo < -BRACKET_LIMIT {
            return Err(SpectrumError::NoConvergence(BRACKET_LIMIT));
        }
    }
    while alpha_of_t(spec, hi) > alpha {
        hi *= 2.0;
        if hi > BRACKET_LIMIT {
            return Err(SpectrumError::NoConvergence(BRACKET_LIMIT));
        }
    }
    // Bisect until the t-interval is tight: alpha(t) flattens out for large
    // |t|, so a residual test on alpha alone would leave t* far off.
    let mut t = 0.5 * (lo + hi);
    loop {
        let a = alpha_of_t(spec, t);
        if (hi - lo) <= 1e-10 * (1.0 + t.abs()) {
            break;
        }
        if a > alpha {
            lo = t;
        } else {
            hi = t;
        }
        t = 0.5 * (lo + hi);
    }
    Ok(LegendrePoint {
        f: alpha * t + beta(spec, t),
        t_star: t,
    })
}

pub fn spectrum_curve(spec: &CarpetSpec, t_grid: &[f64]) -> Result<SpectrumCurve, SpectrumError> {
    if t_grid.is_empty() {
        return Err(SpectrumError::EmptyGrid);
    }
    let mut grid = t_grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let samples = grid
        .iter()
        .map(|&t| {
            let tm = tilted_measure(spec, t);
            SpectrumSample {
                t,
                alpha: tm.alpha,
                f: t * tm.alpha + tm.beta,
                beta: tm.beta,
            }
        })
        .collect();
    Ok(SpectrumCurve {
        samples,
        spec_fingerprint: spec.fingerprint(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::{figure1, random_spec};

    #[test]
    fn beta_special_points() {
        let spec = figure1();
        assert!(beta(&spec, 1.0).abs() < 1e-14);
        // beta(0) = log_2(2^sigma + 1), summed directly
        let sigma = spec.sigma();
        let direct = (2f64.powf(sigma) + 1.0).ln() / 2f64.ln();
        assert!((beta(&spec, 0.0) - direct).abs() < 1e-14);
        assert!((beta(&spec, 0.0) - 1.3496838).abs() < 1e-7);
        // S(2) evaluated term by term
        let q = [2.0f64 / 3.0, 1.0 / 3.0];
        let g = [2.0 / 9.0f64, 1.0 / 9.0];
        let p = 1.0 / 3.0f64;
        let s2: f64 = [0usize, 0, 1]
            .iter()
            .map(|&r| p.powi(2) * q[r].powf(2.0 * (1.0 - sigma)) * g[r].powf(sigma - 1.0))
            .sum();
        let direct2 = s2.ln() / 2f64.ln();
        assert!((beta(&spec, 2.0) - direct2).abs() < 1e-12);
        assert!((beta(&spec, 2.0) + 1.32876).abs() < 1e-4);
    }

    #[test]
    fn alpha_values() {
        let spec = figure1();
        // t = 1: P = p, Q = q
        let sigma = spec.sigma();
        let log2 = 2f64.ln();
        let ln3 = 3f64.ln();
        let a1 = (sigma * ln3
            - (1.0 - sigma) * (2.0 / 3.0 * (2.0f64 / 3.0).ln() + 1.0 / 3.0 * (1.0f64 / 3.0).ln()))
            / log2;
        assert!((alpha_of_t(&spec, 1.0) - a1).abs() < 1e-13);
        assert!((alpha_of_t(&spec, 1.0) - 1.3389157).abs() < 1e-7);
        assert!((alpha_of_t(&spec, 0.0) - 1.3607073).abs() < 1e-7);
        // t -> +inf limit hits alpha_min
        assert!((alpha_of_t(&spec, 200.0) - 1.2158923).abs() < 1e-6);
    }

    #[test]
    fn tilted_weights_normalize_and_specialize() {
        let spec = figure1();
        let tm = tilted_measure(&spec, 1.0);
        for (w, &p) in tm.weights.iter().zip(spec.probs()) {
            assert!((w - p).abs() < 1e-14);
        }
        let tm0 = tilted_measure(&spec, 0.0);
        assert!((tm0.weights[0] - 0.3038110).abs() < 1e-7);
        assert!((tm0.weights[1] - 0.3038110).abs() < 1e-7);
        assert!((tm0.weights[2] - 0.3923780).abs() < 1e-7);
        assert!((tm0.row_marginals[0] - 0.6076220).abs() < 1e-7);
        assert!((tm0.row_marginals[1] - 0.3923780).abs() < 1e-7);
        for seed in 0..20 {
            let spec = random_spec(seed);
            for &t in &[-30.0, -2.0, 0.3, 4.0, 75.0] {
                let tm = tilted_measure(&spec, t);
                let sum: f64 = tm.weights.iter().sum();
                assert!((sum - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn alpha_range_figure1() {
        let spec = figure1();
        let r = alpha_range(&spec);
        assert!((r.alpha_min - 1.2158923).abs() < 1e-7);
        assert!((r.alpha_max - 1.5849625).abs() < 1e-7);
        assert!((r.f_at_min - 0.6309298).abs() < 1e-6);
        assert!(r.f_at_max.abs() < 1e-6);
        assert!(!r.degenerate);
    }

    #[test]
    fn alpha_range_degenerate() {
        // all cells present with uniform p: every e_d coincides
        let raw = crate::RawCarpetSpec {
            m: 2,
            n: 3,
            digits: (0..2).flat_map(|r| (0..3).map(move |c| [r, c])).collect(),
            probs: vec![1.0 / 6.0; 6],
        };
        let spec = crate::CarpetSpec::build(&raw).unwrap();
        let r = alpha_range(&spec);
        assert!(r.degenerate);
        assert!(matches!(
            legendre_point(&spec, r.alpha_min),
            Err(SpectrumError::Degenerate(_))
        ));
    }

    #[test]
    fn legendre_figure1() {
        let spec = figure1();
        let a1 = alpha_of_t(&spec, 1.0);
        let lp = legendre_point(&spec, a1).unwrap();
        assert!((lp.f - a1).abs() < 1e-9, "spectrum touches the diagonal");
        assert!((lp.t_star - 1.0).abs() < 1e-7);
        let a0 = alpha_of_t(&spec, 0.0);
        let lp0 = legendre_point(&spec, a0).unwrap();
        assert!((lp0.f - beta(&spec, 0.0)).abs() < 1e-9);
        assert!(lp0.t_star.abs() < 1e-7);
        assert!(matches!(
            legendre_point(&spec, 1.6),
            Err(SpectrumError::OutOfRange { .. })
        ));
    }

    #[test]
    fn curve_samples() {
        let spec = figure1();
        let c = spectrum_curve(&spec, &[0.0, 1.0]).unwrap();
        assert!((c.samples[0].alpha - 1.3607073).abs() < 1e-7);
        assert!((c.samples[0].f - 1.3496838).abs() < 1e-7);
        assert!((c.samples[1].alpha - 1.3389157).abs() < 1e-7);
        assert!((c.samples[1].f - 1.3389157).abs() < 1e-7);
        assert!(c.samples[1].beta.abs() < 1e-12);
        assert!(matches!(
            spectrum_curve(&spec, &[]),
            Err(SpectrumError::EmptyGrid)
        ));
    }

    #[test]
    fn beta_is_convex_and_alpha_decreasing() {
        for seed in 0..10 {
            let spec = random_spec(seed);
            let mut prev_alpha = f64::INFINITY;
            for i in 0..21 {
                let t = -20.0 + 2.0 * i as f64;
                let a = alpha_of_t(&spec, t);
                assert!(a <= prev_alpha + 1e-12);
                prev_alpha = a;
                let b1 = beta(&spec, t);
                let b2 = beta(&spec, t + 3.0);
                let mid = beta(&spec, t + 1.5);
                assert!(mid <= 0.5 * (b1 + b2) + 1e-10);
            }
        }
    }

    #[test]
    fn alpha_matches_finite_difference() {
        let spec = figure1();
        let h = 1e-5;
        for &t in &[-5.0, -1.0, 0.0, 0.5, 1.0, 2.0, 5.0] {
            let fd = -(beta(&spec, t + h) - beta(&spec, t - h)) / (2.0 * h);
            assert!((alpha_of_t(&spec, t) - fd).abs() < 1e-6);
        }
    }
}
