//! Symbolic coding of the carpet: projections, approximate squares with
//! exact measures, compatible-prefix enumeration and the run-length /
//! Birkhoff diagnostics used by the covering argument.
//!
//! Positions in a digit string are 1-indexed in the formulas below; the
//! underlying storage is 0-indexed.

use crate::carpet::{CarpetSpec, Digit};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SymbolicError {
    #[error("prefix of length {len} too short for level {k}")]
    PrefixTooShort { len: usize, k: usize },
    #[error("digit ({0}, {1}) does not belong to the carpet")]
    ForeignDigit(u32, u32),
    #[error("empty prefix")]
    EmptyPrefix,
    #[error("level {k} has l(k) = 0; diagnostic undefined below k = 1/sigma")]
    LTooSmall { k: usize },
    #[error("enumeration size {0} exceeds the guard of {1}")]
    TooLarge(f64, f64),
}

/// A finite initial segment of a symbolic expansion in D^N.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolicPrefix {
    digits: Vec<Digit>,
}

impl SymbolicPrefix {
    pub fn new(spec: &CarpetSpec, digits: Vec<Digit>) -> Result<Self, SymbolicError> {
        if digits.is_empty() {
            return Err(SymbolicError::EmptyPrefix);
        }
        for d in &digits {
            if spec.digit_index(*d).is_none() {
                return Err(SymbolicError::ForeignDigit(d.row, d.col));
            }
        }
        Ok(SymbolicPrefix { digits })
    }

    /// Parses the CLI text form `row,col;row,col;...`.
    pub fn parse(spec: &CarpetSpec, text: &str) -> Result<Self, String> {
        let mut digits = Vec::new();
        for part in text.split(';') {
            let part = part.trim();
            let (r, c) = part
                .split_once(',')
                .ok_or_else(|| format!("bad digit `{part}`, expected `row,col`"))?;
            let row: u32 = r.trim().parse().map_err(|_| format!("bad row `{r}`"))?;
            let col: u32 = c.trim().parse().map_err(|_| format!("bad col `{c}`"))?;
            digits.push(Digit::new(row, col));
        }
        Self::new(spec, digits).map_err(|e| e.to_string())
    }

    pub fn digits(&self) -> &[Digit] {
        &self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    fn row(&self, pos1: usize) -> u32 {
        self.digits[pos1 - 1].row
    }

    fn col(&self, pos1: usize) -> u32 {
        self.digits[pos1 - 1].col
    }
}

/// l(k) = floor(sigma k).
pub fn l_of_k(spec: &CarpetSpec, k: usize) -> usize {
    (spec.sigma() * k as f64).floor() as usize
}

/// Projection of a finite prefix into the unit square, with the per-axis
/// tail radius bounds (n^-K/(n-1), m^-K/(m-1)).
pub fn project_prefix(spec: &CarpetSpec, prefix: &SymbolicPrefix) -> (f64, f64, f64, f64) {
    let n = spec.n() as f64;
    let m = spec.m() as f64;
    let mut x = 0.0;
    let mut y = 0.0;
    let mut nu = 1.0;
    let mut mu = 1.0;
    for d in prefix.digits() {
        nu /= n;
        mu /= m;
        x += d.col as f64 * nu;
        y += d.row as f64 * mu;
    }
    let k = prefix.len() as i32;
    let rx = n.powi(-k) / (n - 1.0);
    let ry = m.powi(-k) / (m - 1.0);
    (x, y, rx, ry)
}

/// A level-k approximate square: full digits to l(k), rows only from l(k)+1
/// to k. Height m^-k, width n^-l(k).
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxSquare {
    pub k: usize,
    pub l: usize,
    pub prefix: Vec<Digit>,
    pub suffix_rows: Vec<u32>,
    pub x0: f64,
    pub y0: f64,
    pub width: f64,
    pub height: f64,
    /// Closed-form measure; may underflow to 0 at deep levels, in which case
    /// `log_measure` remains valid.
    pub measure: f64,
    pub log_measure: f64,
}

impl ApproxSquare {
    /// Builds a square from its canonical index (digits to l, rows to k).
    pub fn from_index(
        spec: &CarpetSpec,
        prefix: Vec<Digit>,
        suffix_rows: Vec<u32>,
    ) -> Result<Self, SymbolicError> {
        let l = prefix.len();
        let k = l + suffix_rows.len();
        if l != l_of_k(spec, k) {
            return Err(SymbolicError::PrefixTooShort { len: l, k });
        }
        let n = spec.n() as f64;
        let m = spec.m() as f64;
        let mut x0 = 0.0;
        let mut y0 = 0.0;
        let mut measure = 1.0;
        let mut log_measure = 0.0;
        let mut nu = 1.0;
        let mut mu = 1.0;
        for d in &prefix {
            let idx = spec
                .digit_index(*d)
                .ok_or(SymbolicError::ForeignDigit(d.row, d.col))?;
            nu /= n;
            mu /= m;
            x0 += d.col as f64 * nu;
            y0 += d.row as f64 * mu;
            let p = spec.probs()[idx];
            measure *= p;
            log_measure += p.ln();
        }
        for &r in &suffix_rows {
            mu /= m;
            y0 += r as f64 * mu;
            let q = spec.row_probs()[r as usize];
            if q <= 0.0 {
                return Err(SymbolicError::ForeignDigit(r, 0));
            }
            measure *= q;
            log_measure += q.ln();
        }
        Ok(ApproxSquare {
            k,
            l,
            prefix,
            suffix_rows,
            x0,
            y0,
            width: n.powi(-(l as i32)),
            height: m.powi(-(k as i32)),
            measure,
            log_measure,
        })
    }

    /// Diameter of the rectangle.
    pub fn diameter(&self) -> f64 {
        self.width.hypot(self.height)
    }

    /// All k row symbols of the square, prefix rows then suffix rows.
    pub fn rows(&self) -> Vec<u32> {
        self.prefix
            .iter()
            .map(|d| d.row)
            .chain(self.suffix_rows.iter().cloned())
            .collect()
    }
}

/// The level-k approximate square containing the point coded by `prefix`.
pub fn approx_square(
    spec: &CarpetSpec,
    prefix: &SymbolicPrefix,
    k: usize,
) -> Result<ApproxSquare, SymbolicError> {
    if prefix.len() < k {
        return Err(SymbolicError::PrefixTooShort {
            len: prefix.len(),
            k,
        });
    }
    let l = l_of_k(spec, k);
    let digits: Vec<Digit> = prefix.digits()[..l].to_vec();
    let rows: Vec<u32> = prefix.digits()[l..k].iter().map(|d| d.row).collect();
    ApproxSquare::from_index(spec, digits, rows)
}

/// Gamma_k: all length-k digit strings that share the square's full prefix
/// and row pattern. Cardinality is the product of N_r over suffix rows.
pub fn enumerate_gamma(
    spec: &CarpetSpec,
    square: &ApproxSquare,
    guard: f64,
) -> Result<Vec<Vec<Digit>>, SymbolicError> {
    let mut size = 1.0f64;
    for &r in &square.suffix_rows {
        size *= spec.row_counts()[r as usize] as f64;
    }
    if size > guard {
        return Err(SymbolicError::TooLarge(size, guard));
    }
    let mut out: Vec<Vec<Digit>> = vec![square.prefix.clone()];
    for &r in &square.suffix_rows {
        let members = spec.row_members(r);
        let mut next = Vec::with_capacity(out.len() * members.len());
        for s in &out {
            for &idx in members {
                let mut t = s.clone();
                t.push(spec.digits()[idx]);
                next.push(t);
            }
        }
        out = next;
    }
    Ok(out)
}

pub const GAMMA_GUARD: f64 = 1e7;

/// Finite-k symbolic local dimension -log mu(R_k) / (k log m).
pub fn symbolic_local_dim(
    spec: &CarpetSpec,
    prefix: &SymbolicPrefix,
    k: usize,
) -> Result<f64, SymbolicError> {
    if k < 1 {
        return Err(SymbolicError::PrefixTooShort { len: prefix.len(), k });
    }
    let sq = approx_square(spec, prefix, k)?;
    Ok(-sq.log_measure / (k as f64 * (spec.m() as f64).ln()))
}

/// Birkhoff averages of log omega, omega_r = q_r^t gamma_r(t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Birkhoff {
    pub b_l: f64,
    pub b_k: f64,
    pub a_k: f64,
}

/// log omega_r for every nonempty row.
pub fn log_omega(spec: &CarpetSpec, t: f64) -> Vec<f64> {
    (0..spec.m())
        .map(|r| {
            let q = spec.row_probs()[r as usize];
            if q > 0.0 {
                t * q.ln() + spec.log_gamma_row(r, t)
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect()
}

fn birkhoff_from_rows(spec: &CarpetSpec, rows: &[u32], t: f64, k: usize) -> Birkhoff {
    let lw = log_omega(spec, t);
    let l = l_of_k(spec, k);
    let mut sum = 0.0;
    let mut b_l = 0.0;
    for (i, &r) in rows.iter().take(k).enumerate() {
        sum += lw[r as usize];
        if i + 1 == l {
            b_l = sum / l as f64;
        }
    }
    let b_k = sum / k as f64;
    Birkhoff {
        b_l,
        b_k,
        a_k: b_l - b_k,
    }
}

/// B_{l(k)}, B_k and A_k = B_{l(k)} - B_k for the prefix.
pub fn birkhoff(
    spec: &CarpetSpec,
    prefix: &SymbolicPrefix,
    t: f64,
    k: usize,
) -> Result<Birkhoff, SymbolicError> {
    if prefix.len() < k {
        return Err(SymbolicError::PrefixTooShort {
            len: prefix.len(),
            k,
        });
    }
    if l_of_k(spec, k) < 1 {
        return Err(SymbolicError::LTooSmall { k });
    }
    let rows: Vec<u32> = prefix.digits()[..k].iter().map(|d| d.row).collect();
    Ok(birkhoff_from_rows(spec, &rows, t, k))
}

/// V_k = inf{ l > k : row(d_l) not in {0, m-1} or row(d_l) != row(d_{k+1}) } - k - 1,
/// or None when no witness exists within the prefix horizon.
pub fn v_k(spec: &CarpetSpec, prefix: &SymbolicPrefix, k: usize) -> Option<usize> {
    if k + 1 > prefix.len() {
        return None;
    }
    let top = spec.m() - 1;
    let anchor = prefix.row(k + 1);
    for l in (k + 1)..=prefix.len() {
        let r = prefix.row(l);
        if (r != 0 && r != top) || r != anchor {
            return Some(l - k - 1);
        }
    }
    None
}

/// Z_k = max( row-change time after k, sigma^-1 * column-change time after l(k) ),
/// or None if either witness exceeds the horizon (including l(k) = 0).
pub fn z_k(spec: &CarpetSpec, prefix: &SymbolicPrefix, k: usize) -> Option<f64> {
    let l = l_of_k(spec, k);
    if l < 1 || k + 1 > prefix.len() {
        return None;
    }
    let row_anchor = prefix.row(k + 1);
    let eta_row = (1..)
        .take_while(|eta| k + eta <= prefix.len())
        .find(|&eta| prefix.row(k + eta) != row_anchor)?;
    let col_anchor = prefix.col(l);
    let eta_col = (1..)
        .take_while(|eta| l + eta <= prefix.len())
        .find(|&eta| prefix.col(l + eta) != col_anchor)?;
    Some((eta_row as f64).max(eta_col as f64 / spec.sigma()))
}

/// Membership in the measure window Y(alpha, eps, k) and the refined class
/// G(alpha, eps, k), plus the finite-k exponent and Birkhoff defect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareClass {
    pub in_y: bool,
    pub in_g: bool,
    pub alpha_hat: f64,
    pub a_k: f64,
}

/// Classifies a square. A_k depends only on the row symbols, so any member
/// of the square's Gamma_k gives the same value.
pub fn classify_square(
    spec: &CarpetSpec,
    square: &ApproxSquare,
    alpha: f64,
    eps: f64,
    t: f64,
) -> Result<SquareClass, SymbolicError> {
    let k = square.k;
    if l_of_k(spec, k) < 1 {
        return Err(SymbolicError::LTooSmall { k });
    }
    let log_m = (spec.m() as f64).ln();
    let kf = k as f64;
    let lo = -kf * alpha * (1.0 + eps) * log_m;
    let hi = -kf * alpha * (1.0 - eps) * log_m;
    let in_y = lo <= square.log_measure && square.log_measure <= hi;
    let b = birkhoff_from_rows(spec, &square.rows(), t, k);
    let in_g = in_y && b.a_k >= -(1.0 + eps).ln();
    Ok(SquareClass {
        in_y,
        in_g,
        alpha_hat: -square.log_measure / (kf * log_m),
        a_k: b.a_k,
    })
}

/// Levels k <= K with A_k > -eps and V_k = 0. Per the covering argument this
/// set is unbounded for sequences whose V_u are all finite.
pub fn find_good_levels(
    spec: &CarpetSpec,
    prefix: &SymbolicPrefix,
    t: f64,
    eps: f64,
    horizon: usize,
) -> Vec<usize> {
    let kmax = horizon.min(prefix.len());
    let mut out = Vec::new();
    for k in 1..=kmax {
        if l_of_k(spec, k) < 1 {
            continue;
        }
        if v_k(spec, prefix, k) != Some(0) {
            continue;
        }
        let b = birkhoff(spec, prefix, t, k).expect("bounds checked");
        if b.a_k > -eps {
            out.push(k);
        }
    }
    out
}

/// Iterates every distinct level-k square (all |D|^l prefixes times all
/// rho^(k-l) suffix row patterns), calling `f` on each.
pub fn for_each_square<F: FnMut(&ApproxSquare)>(
    spec: &CarpetSpec,
    k: usize,
    guard: f64,
    mut f: F,
) -> Result<(), SymbolicError> {
    let l = l_of_k(spec, k);
    let nd = spec.digit_count();
    let rho = spec.rho();
    let total = (nd as f64).powi(l as i32) * (rho as f64).powi((k - l) as i32);
    if total > guard {
        return Err(SymbolicError::TooLarge(total, guard));
    }
    // odometer over (prefix digit indices, suffix row indices)
    let mut pidx = vec![0usize; l];
    loop {
        let prefix: Vec<Digit> = pidx.iter().map(|&i| spec.digits()[i]).collect();
        let mut sidx = vec![0usize; k - l];
        loop {
            let rows: Vec<u32> = sidx.iter().map(|&i| spec.nonempty_rows()[i]).collect();
            let sq = ApproxSquare::from_index(spec, prefix.clone(), rows)
                .expect("index is canonical by construction");
            f(&sq);
            // advance suffix odometer
            let mut j = k - l;
            loop {
                if j == 0 {
                    break;
                }
                sidx[j - 1] += 1;
                if sidx[j - 1] < rho {
                    break;
                }
                sidx[j - 1] = 0;
                j -= 1;
            }
            if j == 0 {
                break;
            }
        }
        let mut j = l;
        loop {
            if j == 0 {
                return Ok(());
            }
            pidx[j - 1] += 1;
            if pidx[j - 1] < nd {
                break;
            }
            pidx[j - 1] = 0;
            j -= 1;
        }
    }
}
