//! Numerical verification: tilted-measure sampling, true ball measures,
//! local-dimension regression, coarse spectra and covering-sum decay.
//!
//! Every sampled quantity is a function of (seed, sample index) only, so
//! results are reproducible regardless of how work is scheduled.

use crate::carpet::{CarpetSpec, Digit};
use crate::spectrum::{alpha_of_t, beta, tilted_measure};
use crate::symbolic::{
    self, for_each_square, l_of_k, project_prefix, symbolic_local_dim, ApproxSquare,
    SymbolicError, SymbolicPrefix,
};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EmpiricalError {
    #[error("point ({0}, {1}) outside the unit square")]
    BadPoint(f64, f64),
    #[error("ball of radius {0} at ({1}, {2}) has measure zero; point off the support")]
    ZeroMeasure(f64, f64, f64),
    #[error("delta = {delta} must exceed eps (alpha |t| + 2) = {bound}")]
    BadDelta { delta: f64, bound: f64 },
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
}

fn mix_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 over the pair; decorrelates adjacent sample indices
    let mut z = seed ^ index.wrapping_mul(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Draws a length-k prefix i.i.d. from the tilted weights at parameter t.
/// Deterministic in (seed, sample_index).
pub fn sample_prefix(
    spec: &CarpetSpec,
    t: f64,
    k: usize,
    seed: u64,
    sample_index: u64,
) -> SymbolicPrefix {
    let tm = tilted_measure(spec, t);
    let mut cum = Vec::with_capacity(tm.weights.len());
    let mut acc = 0.0;
    for &w in &tm.weights {
        acc += w;
        cum.push(acc);
    }
    let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(seed, sample_index));
    let digits: Vec<Digit> = (0..k)
        .map(|_| {
            let u: f64 = rng.gen();
            let idx = cum.partition_point(|&c| c < u).min(cum.len() - 1);
            spec.digits()[idx]
        })
        .collect();
    SymbolicPrefix::new(spec, digits).expect("sampled digits belong to the spec")
}

/// Exact ball measure bracketed from below and above by fully-contained and
/// boundary-straddling square mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallMeasure {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct BallOptions {
    /// Stop once (upper-lower) <= rel_tol * lower.
    pub rel_tol: f64,
    /// Hard cap on square refinements; the bracket is still rigorous when hit.
    pub max_expansions: usize,
}

impl Default for BallOptions {
    fn default() -> Self {
        BallOptions {
            rel_tol: 1e-6,
            max_expansions: 400_000,
        }
    }
}

struct Node {
    k: usize,
    x0: f64,
    y0: f64,
    measure: f64,
    suffix_rows: Vec<u32>,
}

impl Node {
    fn l(&self) -> usize {
        self.k - self.suffix_rows.len()
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.measure == other.measure
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.measure.total_cmp(&other.measure)
    }
}

enum Placement {
    Inside,
    Outside,
    Straddles,
}

fn classify_rect(x0: f64, y0: f64, w: f64, h: f64, cx: f64, cy: f64, r: f64) -> Placement {
    let r2 = r * r;
    let dx = (x0 - cx).max(cx - (x0 + w)).max(0.0);
    let dy = (y0 - cy).max(cy - (y0 + h)).max(0.0);
    if dx * dx + dy * dy > r2 {
        return Placement::Outside;
    }
    let fx = (cx - x0).abs().max((x0 + w - cx).abs());
    let fy = (cy - y0).abs().max((y0 + h - cy).abs());
    if fx * fx + fy * fy <= r2 {
        return Placement::Inside;
    }
    Placement::Straddles
}

/// Exact Euclidean ball measure mu(B((x, y), r)) by adaptive refinement of
/// approximate squares: fully contained squares contribute their closed-form
/// measure, straddling squares are split largest-first until the ambiguous
/// mass is below tolerance.
pub fn ball_measure_radius(
    spec: &CarpetSpec,
    x: f64,
    y: f64,
    r: f64,
    opts: BallOptions,
) -> Result<BallMeasure, EmpiricalError> {
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return Err(EmpiricalError::BadPoint(x, y));
    }
    let n = spec.n() as f64;
    let m = spec.m() as f64;
    let mut inside = 0.0f64;
    let mut ambiguous;
    let mut heap: BinaryHeap<Node> = BinaryHeap::new();

    let root = Node {
        k: 0,
        x0: 0.0,
        y0: 0.0,
        measure: 1.0,
        suffix_rows: Vec::new(),
    };
    match classify_rect(0.0, 0.0, 1.0, 1.0, x, y, r) {
        Placement::Inside => {
            return Ok(BallMeasure {
                value: 1.0,
                lower: 1.0,
                upper: 1.0,
            })
        }
        Placement::Outside => {
            return Ok(BallMeasure {
                value: 0.0,
                lower: 0.0,
                upper: 0.0,
            })
        }
        Placement::Straddles => {
            ambiguous = 1.0;
            heap.push(root);
        }
    }

    let mut expansions = 0usize;
    while let Some(node) = heap.pop() {
        if ambiguous <= opts.rel_tol * inside.max(f64::MIN_POSITIVE) {
            heap.push(node);
            break;
        }
        if expansions >= opts.max_expansions {
            heap.push(node);
            break;
        }
        expansions += 1;
        ambiguous -= node.measure;
        let k1 = node.k + 1;
        let l_new = l_of_k(spec, k1);
        let h = m.powi(-(k1 as i32));
        let mut emit = |x0: f64, y0: f64, w: f64, measure: f64, suffix_rows: Vec<u32>| {
            if measure <= 0.0 {
                return;
            }
            match classify_rect(x0, y0, w, h, x, y, r) {
                Placement::Inside => inside += measure,
                Placement::Outside => {}
                Placement::Straddles => {
                    ambiguous += measure;
                    heap.push(Node {
                        k: k1,
                        x0,
                        y0,
                        measure,
                        suffix_rows,
                    });
                }
            }
        };
        if l_new == node.l() {
            // width unchanged: append one suffix row
            let w = n.powi(-(l_new as i32));
            for &rrow in spec.nonempty_rows() {
                let q = spec.row_probs()[rrow as usize];
                let mut rows = node.suffix_rows.clone();
                rows.push(rrow);
                emit(
                    node.x0,
                    node.y0 + rrow as f64 * h,
                    w,
                    node.measure * q,
                    rows,
                );
            }
        } else {
            // width shrinks: resolve the leading suffix row into a digit,
            // then append one suffix row
            let w = n.powi(-(l_new as i32));
            let r0 = node.suffix_rows[0];
            let q0 = spec.row_probs()[r0 as usize];
            for &didx in spec.row_members(r0) {
                let d = spec.digits()[didx];
                let p = spec.probs()[didx];
                let x0 = node.x0 + d.col as f64 * w;
                for &rrow in spec.nonempty_rows() {
                    let q = spec.row_probs()[rrow as usize];
                    let mut rows: Vec<u32> = node.suffix_rows[1..].to_vec();
                    rows.push(rrow);
                    emit(
                        x0,
                        node.y0 + rrow as f64 * h,
                        w,
                        node.measure * (p / q0) * q,
                        rows,
                    );
                }
            }
        }
    }
    let lower = inside;
    let upper = inside + ambiguous;
    Ok(BallMeasure {
        value: 0.5 * (lower + upper),
        lower,
        upper,
    })
}

/// Ball measure at the dyadic scale r = m^-k.
pub fn ball_measure(
    spec: &CarpetSpec,
    x: f64,
    y: f64,
    k: u32,
    opts: BallOptions,
) -> Result<BallMeasure, EmpiricalError> {
    ball_measure_radius(spec, x, y, (spec.m() as f64).powi(-(k as i32)), opts)
}

#[derive(Debug, Clone)]
pub struct LocalDimEstimate {
    pub slope: f64,
    /// RMS residual of the least-squares fit.
    pub residual: f64,
    /// (k, log mu(B(x, m^-k))) pairs used by the fit.
    pub points: Vec<(u32, f64)>,
}

/// Least-squares slope of log mu(B(x, m^-k)) against log m^-k over
/// k in [k0, k1].
pub fn local_dim_estimate(
    spec: &CarpetSpec,
    x: f64,
    y: f64,
    k0: u32,
    k1: u32,
    opts: BallOptions,
) -> Result<LocalDimEstimate, EmpiricalError> {
    assert!(k1 > k0, "need a nontrivial scale range");
    let log_m = (spec.m() as f64).ln();
    let mut pts = Vec::new();
    for k in k0..=k1 {
        let b = ball_measure(spec, x, y, k, opts)?;
        if b.upper <= 0.0 || b.value <= 0.0 {
            let r = (spec.m() as f64).powi(-(k as i32));
            return Err(EmpiricalError::ZeroMeasure(r, x, y));
        }
        pts.push((k, b.value.ln()));
    }
    // regress log mu on log r = -k log m
    let nf = pts.len() as f64;
    let mean_x: f64 = pts.iter().map(|&(k, _)| -(k as f64) * log_m).sum::<f64>() / nf;
    let mean_y: f64 = pts.iter().map(|&(_, v)| v).sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(k, v) in &pts {
        let dx = -(k as f64) * log_m - mean_x;
        sxx += dx * dx;
        sxy += dx * (v - mean_y);
    }
    let slope = sxy / sxx;
    let mut ss = 0.0;
    for &(k, v) in &pts {
        let fit = mean_y + slope * (-(k as f64) * log_m - mean_x);
        ss += (v - fit) * (v - fit);
    }
    Ok(LocalDimEstimate {
        slope,
        residual: (ss / nf).sqrt(),
        points: pts,
    })
}

/// How the square population was traversed.
#[derive(Debug, Clone, PartialEq)]
pub enum CoarseMode {
    Exact,
    /// Uniform seeded sample over canonical square indices.
    Sampled { samples: u64, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct CoarseSpectrum {
    pub k: usize,
    pub l: usize,
    pub eps: f64,
    pub total_squares: f64,
    pub alpha_grid: Vec<f64>,
    /// Squares falling in Y(alpha, eps, k) per grid alpha (scaled estimates
    /// in sampled mode).
    pub counts: Vec<f64>,
    /// log(count) / (k log m) where the count is at least one.
    pub f_hat: Vec<Option<f64>>,
    pub mode: CoarseMode,
}

pub const COARSE_GUARD: f64 = 1e8;

fn coarse_tally(
    k: usize,
    log_m: f64,
    eps: f64,
    alpha_grid: &[f64],
    counts: &mut [f64],
    sq: &ApproxSquare,
    weight: f64,
) {
    let kf = k as f64;
    for (i, &a) in alpha_grid.iter().enumerate() {
        let lo = -kf * a * (1.0 + eps) * log_m;
        let hi = -kf * a * (1.0 - eps) * log_m;
        if lo <= sq.log_measure && sq.log_measure <= hi {
            counts[i] += weight;
        }
    }
}

/// Counts level-k squares per measure window Y(alpha, eps, k) over the grid
/// and converts counts into the coarse estimate log(count)/(k log m).
pub fn coarse_spectrum(
    spec: &CarpetSpec,
    k: usize,
    eps: f64,
    alpha_grid: &[f64],
    mode: CoarseMode,
) -> Result<CoarseSpectrum, EmpiricalError> {
    let l = l_of_k(spec, k);
    let log_m = (spec.m() as f64).ln();
    let total =
        (spec.digit_count() as f64).powi(l as i32) * (spec.rho() as f64).powi((k - l) as i32);
    let mut counts = vec![0.0f64; alpha_grid.len()];
    match mode {
        CoarseMode::Exact => {
            for_each_square(spec, k, COARSE_GUARD, |sq| {
                coarse_tally(k, log_m, eps, alpha_grid, &mut counts, sq, 1.0);
            })?;
        }
        CoarseMode::Sampled { samples, seed } => {
            let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(seed, 0x636f61727365));
            let weight = total / samples as f64;
            for _ in 0..samples {
                let prefix: Vec<Digit> = (0..l)
                    .map(|_| spec.digits()[rng.gen_range(0..spec.digit_count())])
                    .collect();
                let rows: Vec<u32> = (0..k - l)
                    .map(|_| spec.nonempty_rows()[rng.gen_range(0..spec.rho())])
                    .collect();
                let sq = ApproxSquare::from_index(spec, prefix, rows)?;
                coarse_tally(k, log_m, eps, alpha_grid, &mut counts, &sq, weight);
            }
        }
    }
    let f_hat = counts
        .iter()
        .map(|&c| {
            if c >= 1.0 {
                Some(c.ln() / (k as f64 * log_m))
            } else {
                None
            }
        })
        .collect();
    Ok(CoarseSpectrum {
        k,
        l,
        eps,
        total_squares: total,
        alpha_grid: alpha_grid.to_vec(),
        counts,
        f_hat,
        mode,
    })
}

#[derive(Debug, Clone)]
pub struct CoveringSumLevel {
    pub k: usize,
    pub squares_in_g: u64,
    pub sum: f64,
}

#[derive(Debug, Clone)]
pub struct CoveringSumReport {
    pub t: f64,
    pub alpha: f64,
    pub eps: f64,
    pub delta: f64,
    pub exponent: f64,
    pub levels: Vec<CoveringSumLevel>,
    /// S_{k+1} / S_k for consecutive levels with nonzero S_k.
    pub ratios: Vec<f64>,
}

/// Per-level covering sums S_k = sum over G(alpha, eps, k) of
/// |2 D_1 R_k|^{alpha t + beta(t) + delta}, with their consecutive ratios.
pub fn covering_sum_demo(
    spec: &CarpetSpec,
    t: f64,
    alpha: f64,
    eps: f64,
    delta: f64,
    k_lo: usize,
    k_hi: usize,
) -> Result<CoveringSumReport, EmpiricalError> {
    let bound = eps * (alpha * t.abs() + 2.0);
    if delta <= bound {
        return Err(EmpiricalError::BadDelta { delta, bound });
    }
    let exponent = alpha * t + beta(spec, t) + delta;
    let d1 = ((spec.n() as f64) * (spec.n() as f64) + 1.0).sqrt();
    let mut levels = Vec::new();
    for k in k_lo..=k_hi {
        let mut count = 0u64;
        let mut sum = 0.0;
        for_each_square(spec, k, COARSE_GUARD, |sq| {
            let class = symbolic::classify_square(spec, sq, alpha, eps, t)
                .expect("l(k) >= 1 for the tested levels");
            if class.in_g {
                count += 1;
                sum += (2.0 * d1 * sq.diameter()).powf(exponent);
            }
        })?;
        levels.push(CoveringSumLevel {
            k,
            squares_in_g: count,
            sum,
        });
    }
    let ratios = levels
        .windows(2)
        .filter(|w| w[0].sum > 0.0)
        .map(|w| w[1].sum / w[0].sum)
        .collect();
    Ok(CoveringSumReport {
        t,
        alpha,
        eps,
        delta,
        exponent,
        levels,
        ratios,
    })
}

/// Scale range and budget for the ball-based half of a convergence run.
#[derive(Debug, Clone, Copy)]
pub struct BallRunConfig {
    /// How many of the sampled prefixes also get a ball estimate.
    pub samples: usize,
    pub k0: u32,
    pub k1: u32,
    pub tolerance: f64,
    pub opts: BallOptions,
}

impl Default for BallRunConfig {
    fn default() -> Self {
        BallRunConfig {
            samples: 100,
            k0: 5,
            k1: 30,
            tolerance: 0.05,
            opts: BallOptions {
                rel_tol: 1e-6,
                max_expansions: 30_000,
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmpiricalReport {
    pub t: f64,
    pub k: usize,
    pub samples: usize,
    pub seed: u64,
    pub alpha_target: f64,
    /// Finite-k symbolic local dimension per sample.
    pub symbolic_dims: Vec<f64>,
    pub mean_symbolic: f64,
    pub mean_abs_err_symbolic: f64,
    /// Ball regression slope for the first `ball.samples` samples.
    pub ball_slopes: Vec<f64>,
    pub ball_tolerance: f64,
    pub frac_ball_within: f64,
}

/// Samples prefixes from the tilted measure and compares both local-dimension
/// estimators against alpha(t).
pub fn verify_convergence(
    spec: &CarpetSpec,
    t: f64,
    samples: usize,
    k: usize,
    seed: u64,
    ball: Option<BallRunConfig>,
) -> Result<EmpiricalReport, EmpiricalError> {
    let alpha_target = alpha_of_t(spec, t);
    let mut symbolic_dims = Vec::with_capacity(samples);
    let mut prefixes = Vec::new();
    for i in 0..samples {
        let prefix = sample_prefix(spec, t, k, seed, i as u64);
        symbolic_dims.push(symbolic_local_dim(spec, &prefix, k)?);
        if let Some(cfg) = &ball {
            if i < cfg.samples {
                prefixes.push(prefix);
            }
        }
    }
    let nf = samples as f64;
    let mean_symbolic = symbolic_dims.iter().sum::<f64>() / nf;
    let mean_abs_err_symbolic = symbolic_dims
        .iter()
        .map(|d| (d - alpha_target).abs())
        .sum::<f64>()
        / nf;

    let mut ball_slopes = Vec::new();
    let mut within = 0usize;
    let (ball_tolerance, frac_ball_within) = if let Some(cfg) = ball {
        for prefix in &prefixes {
            let (x, y, _, _) = project_prefix(spec, prefix);
            let est = local_dim_estimate(spec, x, y, cfg.k0, cfg.k1, cfg.opts)?;
            if (est.slope - alpha_target).abs() <= cfg.tolerance {
                within += 1;
            }
            ball_slopes.push(est.slope);
        }
        let frac = if ball_slopes.is_empty() {
            0.0
        } else {
            within as f64 / ball_slopes.len() as f64
        };
        (cfg.tolerance, frac)
    } else {
        (0.0, 0.0)
    };

    Ok(EmpiricalReport {
        t,
        k,
        samples,
        seed,
        alpha_target,
        symbolic_dims,
        mean_symbolic,
        mean_abs_err_symbolic,
        ball_slopes,
        ball_tolerance,
        frac_ball_within,
    })
}
