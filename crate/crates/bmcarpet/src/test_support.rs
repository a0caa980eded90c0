//! Shared fixtures for unit, integration and acceptance tests.

use crate::carpet::{CarpetSpec, RawCarpetSpec};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

/// The worked example: m=2, n=3, D={(0,0),(0,2),(1,1)}, uniform p.
pub fn figure1() -> CarpetSpec {
    let raw = RawCarpetSpec {
        m: 2,
        n: 3,
        digits: vec![[0, 0], [0, 2], [1, 1]],
        probs: vec![1.0 / 3.0; 3],
    };
    CarpetSpec::build(&raw).expect("figure1 spec is valid")
}

/// A valid random spec: 2 <= m < n <= 6, digit set spanning at least two
/// rows and two columns, strictly positive probabilities summing to 1.
pub fn random_spec(seed: u64) -> CarpetSpec {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    loop {
        let m = rng.gen_range(2..=5);
        let n = rng.gen_range((m + 1)..=6);
        let mut cells: Vec<[u32; 2]> = (0..m)
            .flat_map(|r| (0..n).map(move |c| [r, c]))
            .collect();
        cells.shuffle(&mut rng);
        let count = rng.gen_range(3..=cells.len());
        let digits: Vec<[u32; 2]> = cells.into_iter().take(count).collect();
        let rows: std::collections::HashSet<u32> = digits.iter().map(|d| d[0]).collect();
        let cols: std::collections::HashSet<u32> = digits.iter().map(|d| d[1]).collect();
        if rows.len() < 2 || cols.len() < 2 {
            continue;
        }
        let weights: Vec<f64> = (0..digits.len())
            .map(|_| rng.gen_range(0.05..1.0))
            .collect();
        let total: f64 = weights.iter().sum();
        let mut probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        // force the sum to 1 bit-exactly enough for validation
        let s: f64 = probs.iter().sum();
        let last = probs.len() - 1;
        probs[last] += 1.0 - s;
        let raw = RawCarpetSpec {
            m,
            n,
            digits,
            probs,
        };
        if let Ok(spec) = CarpetSpec::build(&raw) {
            return spec;
        }
    }
}
