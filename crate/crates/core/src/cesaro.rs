//! Higher-order Cesàro `(C, k)` and Hölder `(H, k)` means.
//!
//! A bounded sequence whose plain averages oscillate keeps oscillating under
//! every one of these summation methods, so historic behavior cannot be
//! smoothed away by averaging the averages.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frequency::{CompensatedSum, OscillationReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanKind {
    Cesaro,
    Hoelder,
}

/// Summation method and order; order 0 is the identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeanSpec {
    pub kind: MeanKind,
    pub order: u32,
}

impl MeanSpec {
    pub fn means(&self, seq: &[f64]) -> Vec<f64> {
        match self.kind {
            MeanKind::Cesaro => cesaro_means(seq, self.order),
            MeanKind::Hoelder => hoelder_means(seq, self.order),
        }
    }
}

fn prefix_sums(seq: &[f64]) -> Vec<f64> {
    let mut acc = CompensatedSum::default();
    seq.iter()
        .map(|&x| {
            acc.add(x);
            acc.value()
        })
        .collect()
}

/// `binom(n + k, k)` as a float.
fn binomial(n: usize, k: u32) -> f64 {
    (1..=k as usize).fold(1.0, |acc, i| acc * (n + i) as f64 / i as f64)
}

/// All `(C, k)` means: `S^k_n / binom(n + k, k)` with `S^0 = a` and
/// `S^k_n = sum_{i <= n} S^{k-1}_i`, for `n = 0 .. len`.
pub fn cesaro_means(seq: &[f64], k: u32) -> Vec<f64> {
    let mut s = seq.to_vec();
    for _ in 0..k {
        s = prefix_sums(&s);
    }
    s.iter().enumerate().map(|(n, &v)| v / binomial(n, k)).collect()
}

/// All `(H, k)` means: `k` rounds of running arithmetic averaging.
pub fn hoelder_means(seq: &[f64], k: u32) -> Vec<f64> {
    let mut h = seq.to_vec();
    for _ in 0..k {
        h = prefix_sums(&h).iter().enumerate().map(|(n, &v)| v / (n + 1) as f64).collect();
    }
    h
}

fn check_index(seq: &[f64], n: usize) -> Result<()> {
    if n >= seq.len() {
        return Err(Error::Precondition(format!("index {n} beyond sequence of length {}", seq.len())));
    }
    Ok(())
}

/// `(C, k)` mean at index `n` (0-based).
pub fn cesaro_mean(seq: &[f64], k: u32, n: usize) -> Result<f64> {
    check_index(seq, n)?;
    Ok(cesaro_means(&seq[..=n], k)[n])
}

/// `(H, k)` mean at index `n` (0-based).
pub fn hoelder_mean(seq: &[f64], k: u32, n: usize) -> Result<f64> {
    check_index(seq, n)?;
    Ok(hoelder_means(&seq[..=n], k)[n])
}

/// Tail sup/inf of the order-`k` means over indices `burn_in ..= horizon - 1`.
pub fn mean_oscillation(seq: &[f64], kind: MeanKind, k: u32, burn_in: usize, horizon: usize) -> Result<OscillationReport> {
    if horizon <= burn_in {
        return Err(Error::Precondition(format!("horizon {horizon} must exceed burn-in {burn_in}")));
    }
    if horizon > seq.len() {
        return Err(Error::Precondition(format!("horizon {horizon} beyond sequence of length {}", seq.len())));
    }
    let means = MeanSpec { kind, order: k }.means(&seq[..horizon]);
    OscillationReport::from_values(means[burn_in..].iter().copied(), burn_in as u64, horizon as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_are_fixed() {
        let seq = vec![0.7; 500];
        for k in 0..4 {
            for kind in [MeanKind::Cesaro, MeanKind::Hoelder] {
                let m = MeanSpec { kind, order: k }.means(&seq);
                assert!(m.iter().all(|v| (v - 0.7).abs() < 1e-13), "{kind:?} {k}");
            }
        }
    }

    #[test]
    fn alternating_signs_are_summable() {
        let seq: Vec<f64> = (0..20001).map(|n| if n % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!(cesaro_mean(&seq, 1, 20000).unwrap().abs() < 1e-4);
        assert!(cesaro_mean(&seq, 2, 20000).unwrap().abs() < 1e-4);
        assert!(cesaro_mean(&seq, 0, 20000).unwrap() == 1.0);
    }

    #[test]
    fn first_order_means_coincide() {
        let seq: Vec<f64> = (0..300).map(|n| ((n * 7919) % 13) as f64 / 13.0).collect();
        let c = cesaro_means(&seq, 1);
        let h = hoelder_means(&seq, 1);
        for (a, b) in c.iter().zip(&h) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn convergent_input_is_regular() {
        let seq: Vec<f64> = (0..100_000).map(|n| 0.25 + 1.0 / (n as f64 + 1.0)).collect();
        for k in 1..=3 {
            let m = cesaro_mean(&seq, k, seq.len() - 1).unwrap();
            assert!((m - 0.25).abs() < 1e-3, "k={k}: {m}");
        }
    }

    #[test]
    fn oscillation_errors() {
        let seq = vec![0.0; 10];
        assert!(mean_oscillation(&seq, MeanKind::Cesaro, 1, 5, 5).is_err());
        assert!(mean_oscillation(&seq, MeanKind::Cesaro, 1, 5, 11).is_err());
        assert!(cesaro_mean(&seq, 1, 10).is_err());
    }
}
