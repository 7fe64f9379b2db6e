//! A non-periodic orbit and a set `A` of its own points whose visit
//! frequency swings between `>= 9/10` and `<= 1/10`.
//!
//! With `n_j = 1 + 10 + .. + 10^j`, `A` holds the orbit points at times
//! `n_1..=n_2`, `n_3..=n_4`, and so on. The stream below labels time
//! `t + 1` with 1 when that point is in `A`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frequency::{visit_frequency, Freq};
use crate::symbolic::{CylinderSpec, Symbol, Word};

/// `n_0 ..= n_{k_max}`.
pub fn block_schedule(k_max: u32) -> Result<Vec<u64>> {
    let mut out = Vec::with_capacity(k_max as usize + 1);
    let mut n = 0u64;
    for j in 0..=k_max {
        let p = 10u64.checked_pow(j).ok_or_else(|| Error::Resource("block schedule overflows".into()))?;
        n = n.checked_add(p).ok_or_else(|| Error::Resource("block schedule overflows".into()))?;
        out.push(n);
    }
    Ok(out)
}

/// Labels for times `1 ..= n_{k_max}`.
pub fn block_schedule_labels(k_max: u32) -> Result<Vec<Symbol>> {
    let n = block_schedule(k_max)?;
    let len = *n.last().unwrap() as usize;
    let mut labels = vec![0; len];
    let mut i = 1;
    while i < n.len() {
        let (lo, hi) = (n[i], n.get(i + 1).copied().unwrap_or(u64::MAX).min(len as u64));
        for t in lo..=hi {
            labels[t as usize - 1] = 1;
        }
        i += 2;
    }
    Ok(labels)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntroCheckpoint {
    pub k: u32,
    pub n_k: u64,
    pub frequency: Freq,
    /// `>= 9/10` for even `k`, `<= 1/10` for odd `k`.
    pub holds: bool,
}

/// Frequency of `A` over times `1 ..= n_k` for `k = 1 ..= k_max`.
pub fn intro_checkpoints(k_max: u32) -> Result<Vec<IntroCheckpoint>> {
    let labels = block_schedule_labels(k_max)?;
    let n = block_schedule(k_max)?;
    let target = CylinderSpec::from_word(Word(vec![1]));
    (1..=k_max)
        .map(|k| {
            let n_k = n[k as usize];
            let frequency = visit_frequency(&labels, &target, n_k)?;
            let holds = if k % 2 == 0 { frequency.at_least(9, 10) } else { frequency.at_most(1, 10) };
            Ok(IntroCheckpoint { k, n_k, frequency, holds })
        })
        .collect()
}
