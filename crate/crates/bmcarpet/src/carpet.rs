//! Carpet model: digit sets, probability vectors and row statistics.
//!
//! A carpet is generated by the maps `T_d(x, y) = ((x + col) / n, (y + row) / m)`
//! for digits `d = (row, col)`. Columns live on the x-axis (base `n`, strong
//! contraction), rows on the y-axis (base `m`, weak contraction).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A cell of the `m x n` subdivision grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Digit {
    pub row: u32,
    pub col: u32,
}

impl Digit {
    pub fn new(row: u32, col: u32) -> Self {
        Digit { row, col }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CarpetError {
    #[error("bad bases: need 2 <= m < n, got m={m}, n={n}")]
    BadBases { m: u32, n: u32 },
    #[error("digit ({0}, {1}) out of bounds for the grid")]
    DigitOutOfBounds(u32, u32),
    #[error("duplicate digit ({0}, {1})")]
    DuplicateDigit(u32, u32),
    #[error("digit/probability count mismatch: {digits} digits, {probs} probabilities")]
    CountMismatch { digits: usize, probs: usize },
    #[error("non-positive probability {0}")]
    NonPositiveProb(f64),
    #[error("probabilities sum to {0}, expected 1 within 1e-12")]
    ProbSumMismatch(f64),
    #[error("digits must occupy at least two rows and two columns")]
    DegenerateRows,
}

/// Raw, unvalidated spec record as read from a config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawCarpetSpec {
    pub m: u32,
    pub n: u32,
    /// `[row, col]` pairs.
    pub digits: Vec<[u32; 2]>,
    pub probs: Vec<f64>,
}

/// Validated carpet plus a Bernoulli probability vector and derived row data.
#[derive(Debug, Clone, PartialEq)]
pub struct CarpetSpec {
    m: u32,
    n: u32,
    digits: Vec<Digit>,
    probs: Vec<f64>,
    sigma: f64,
    /// q_r: total probability of row r (length m, zero on empty rows).
    row_prob: Vec<f64>,
    /// N_r: digit count of row r.
    row_count: Vec<u32>,
    /// Indices of digits living in each row.
    row_members: Vec<Vec<usize>>,
    /// Rows with at least one digit, ascending.
    nonempty_rows: Vec<u32>,
}

const PROB_SUM_TOL: f64 = 1e-12;

impl CarpetSpec {
    /// Validates a raw record and computes the derived row statistics.
    pub fn build(raw: &RawCarpetSpec) -> Result<Self, CarpetError> {
        let (m, n) = (raw.m, raw.n);
        if m < 2 || n <= m {
            return Err(CarpetError::BadBases { m, n });
        }
        if raw.digits.len() != raw.probs.len() {
            return Err(CarpetError::CountMismatch {
                digits: raw.digits.len(),
                probs: raw.probs.len(),
            });
        }
        let mut digits = Vec::with_capacity(raw.digits.len());
        for &[row, col] in &raw.digits {
            if row >= m || col >= n {
                return Err(CarpetError::DigitOutOfBounds(row, col));
            }
            let d = Digit::new(row, col);
            if digits.contains(&d) {
                return Err(CarpetError::DuplicateDigit(row, col));
            }
            digits.push(d);
        }
        for &p in &raw.probs {
            if !(p > 0.0) {
                return Err(CarpetError::NonPositiveProb(p));
            }
        }
        let sum: f64 = raw.probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(CarpetError::ProbSumMismatch(sum));
        }
        // Normalize away the residual rounding error; rejected above if larger.
        let probs: Vec<f64> = raw.probs.iter().map(|p| p / sum).collect();

        let mut row_prob = vec![0.0; m as usize];
        let mut row_count = vec![0u32; m as usize];
        let mut row_members = vec![Vec::new(); m as usize];
        let mut cols_seen = std::collections::BTreeSet::new();
        for (idx, d) in digits.iter().enumerate() {
            row_prob[d.row as usize] += probs[idx];
            row_count[d.row as usize] += 1;
            row_members[d.row as usize].push(idx);
            cols_seen.insert(d.col);
        }
        let nonempty_rows: Vec<u32> = (0..m).filter(|&r| row_count[r as usize] > 0).collect();
        if nonempty_rows.len() < 2 || cols_seen.len() < 2 {
            return Err(CarpetError::DegenerateRows);
        }

        let sigma = (m as f64).ln() / (n as f64).ln();
        Ok(CarpetSpec {
            m,
            n,
            digits,
            probs,
            sigma,
            row_prob,
            row_count,
            row_members,
            nonempty_rows,
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self, String> {
        let raw: RawCarpetSpec = toml::from_str(text).map_err(|e| e.to_string())?;
        Self::build(&raw).map_err(|e| e.to_string())
    }

    pub fn to_raw(&self) -> RawCarpetSpec {
        RawCarpetSpec {
            m: self.m,
            n: self.n,
            digits: self.digits.iter().map(|d| [d.row, d.col]).collect(),
            probs: self.probs.clone(),
        }
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// sigma = log m / log n, in (0, 1).
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn digits(&self) -> &[Digit] {
        &self.digits
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn digit_count(&self) -> usize {
        self.digits.len()
    }

    /// q_r for every row (zero on empty rows).
    pub fn row_probs(&self) -> &[f64] {
        &self.row_prob
    }

    /// N_r for every row.
    pub fn row_counts(&self) -> &[u32] {
        &self.row_count
    }

    /// Digit indices belonging to row `r`.
    pub fn row_members(&self, r: u32) -> &[usize] {
        &self.row_members[r as usize]
    }

    pub fn nonempty_rows(&self) -> &[u32] {
        &self.nonempty_rows
    }

    /// Number of nonempty rows (rho).
    pub fn rho(&self) -> usize {
        self.nonempty_rows.len()
    }

    pub fn digit_index(&self, d: Digit) -> Option<usize> {
        self.digits.iter().position(|&x| x == d)
    }

    /// q of the row containing digit `idx`.
    pub fn q_of(&self, idx: usize) -> f64 {
        self.row_prob[self.digits[idx].row as usize]
    }

    /// gamma_r(t) = sum over row-r digits of p^t, for every row.
    ///
    /// Empty rows yield 0. For |t| > 50 the sum is taken in log space with a
    /// max shift so extreme parameters neither overflow nor vanish.
    pub fn gamma(&self, t: f64) -> Vec<f64> {
        (0..self.m).map(|r| self.gamma_row(r, t)).collect()
    }

    pub fn gamma_row(&self, r: u32, t: f64) -> f64 {
        self.log_gamma_row(r, t).exp()
    }

    /// log gamma_r(t); -inf for empty rows.
    pub fn log_gamma_row(&self, r: u32, t: f64) -> f64 {
        let members = &self.row_members[r as usize];
        if members.is_empty() {
            return f64::NEG_INFINITY;
        }
        if t.abs() <= 50.0 {
            let s: f64 = members.iter().map(|&i| self.probs[i].powf(t)).sum();
            s.ln()
        } else {
            crate::logsumexp(members.iter().map(|&i| t * self.probs[i].ln()))
        }
    }

    /// A short stable fingerprint of the spec, echoed in output headers.
    pub fn fingerprint(&self) -> String {
        // FNV-1a over a canonical rendering; stability matters, crypto does not.
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        eat(&self.m.to_le_bytes());
        eat(&self.n.to_le_bytes());
        for (d, p) in self.digits.iter().zip(&self.probs) {
            eat(&d.row.to_le_bytes());
            eat(&d.col.to_le_bytes());
            eat(&p.to_bits().to_le_bytes());
        }
        format!("{h:016x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::figure1;

    #[test]
    fn figure1_build() {
        let spec = figure1();
        assert_eq!(spec.m(), 2);
        assert_eq!(spec.n(), 3);
        assert!((spec.sigma() - 0.6309298).abs() < 1e-7);
        assert!((spec.row_probs()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((spec.row_probs()[1] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(spec.row_counts(), &[2, 1]);
        assert_eq!(spec.rho(), 2);
    }

    #[test]
    fn rejects_bad_bases() {
        let raw = RawCarpetSpec {
            m: 1,
            n: 3,
            digits: vec![[0, 0], [0, 1]],
            probs: vec![0.5, 0.5],
        };
        assert!(matches!(
            CarpetSpec::build(&raw),
            Err(CarpetError::BadBases { .. })
        ));
        let raw = RawCarpetSpec {
            m: 3,
            n: 3,
            digits: vec![[0, 0], [1, 1]],
            probs: vec![0.5, 0.5],
        };
        assert!(matches!(
            CarpetSpec::build(&raw),
            Err(CarpetError::BadBases { .. })
        ));
    }

    #[test]
    fn rejects_single_row() {
        let raw = RawCarpetSpec {
            m: 2,
            n: 3,
            digits: vec![[0, 0], [0, 1], [0, 2]],
            probs: vec![1.0 / 3.0; 3],
        };
        assert_eq!(CarpetSpec::build(&raw), Err(CarpetError::DegenerateRows));
    }

    #[test]
    fn rejects_single_column() {
        let raw = RawCarpetSpec {
            m: 2,
            n: 3,
            digits: vec![[0, 1], [1, 1]],
            probs: vec![0.5, 0.5],
        };
        assert_eq!(CarpetSpec::build(&raw), Err(CarpetError::DegenerateRows));
    }

    #[test]
    fn rejects_bad_prob_sum() {
        let raw = RawCarpetSpec {
            m: 2,
            n: 3,
            digits: vec![[0, 0], [0, 2], [1, 1]],
            probs: vec![0.5, 0.5, 0.5],
        };
        assert!(matches!(
            CarpetSpec::build(&raw),
            Err(CarpetError::ProbSumMismatch(_))
        ));
    }

    #[test]
    fn rejects_duplicates_and_nonpositive() {
        let raw = RawCarpetSpec {
            m: 2,
            n: 3,
            digits: vec![[0, 0], [0, 0], [1, 1]],
            probs: vec![1.0 / 3.0; 3],
        };
        assert_eq!(
            CarpetSpec::build(&raw),
            Err(CarpetError::DuplicateDigit(0, 0))
        );
        let raw = RawCarpetSpec {
            m: 2,
            n: 3,
            digits: vec![[0, 0], [0, 2], [1, 1]],
            probs: vec![1.5, -0.5, 0.0],
        };
        assert!(matches!(
            CarpetSpec::build(&raw),
            Err(CarpetError::NonPositiveProb(_))
        ));
    }

    #[test]
    fn gamma_special_values() {
        let spec = figure1();
        // t = 1 collapses to q, t = 0 counts digits.
        let g1 = spec.gamma(1.0);
        assert!((g1[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((g1[1] - 1.0 / 3.0).abs() < 1e-15);
        let g0 = spec.gamma(0.0);
        assert!((g0[0] - 2.0).abs() < 1e-15);
        assert!((g0[1] - 1.0).abs() < 1e-15);
        let g2 = spec.gamma(2.0);
        assert!((g2[0] - 2.0 / 9.0).abs() < 1e-15);
        assert!((g2[1] - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn gamma_extreme_t_is_finite() {
        let spec = figure1();
        for &t in &[-400.0, -60.0, 60.0, 400.0] {
            for r in 0..2 {
                let lg = spec.log_gamma_row(r, t);
                assert!(lg.is_finite(), "log gamma not finite at t={t}");
            }
        }
    }

    #[test]
    fn toml_round_trip() {
        let spec = figure1();
        let text = toml::to_string(&spec.to_raw()).unwrap();
        let back = CarpetSpec::from_toml_str(&text).unwrap();
        assert_eq!(spec, back);
    }
}
