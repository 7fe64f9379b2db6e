//! Explicit construction of a wild historic sequence on an aperiodic
//! topological Markov chain.
//!
//! The sequence `z` is glued from long copies of periodic orbits: at
//! position `ell_n` it starts repeating `p_{kappa_n}`, and keeps repeating it
//! until a short connector leads into the next periodic block at
//! `ell_{n+1}`. Since `kappa` visits every index infinitely often and the
//! lengths grow geometrically, every periodic orbit gets a positive share of
//! the running visit frequency along a subsequence of times.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frequency::Freq;
use crate::symbolic::{aperiodicity_index, is_admissible, PeriodicEnumeration, PeriodicWord, Symbol, Tmc, Word};

/// The index sequence `1, 1, 2, 1, 2, 3, 1, 2, 3, 4, ...`.
///
/// With `alpha_b = b(b+1)/2`, `kappa(alpha_{b-1} + j) = j` for `j = 1..=b`.
pub fn kappa(n: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::Input("kappa is indexed from 1".into()));
    }
    // largest b with alpha_b < n
    let mut b = ((((8 * n as u128 + 1) as f64).sqrt() - 1.0) / 2.0) as u64;
    while (b as u128) * (b as u128 + 1) / 2 >= n as u128 {
        b -= 1;
    }
    while ((b + 1) as u128) * ((b + 2) as u128) / 2 < n as u128 {
        b += 1;
    }
    Ok(n - b * (b + 1) / 2)
}

/// Per-step multiplier `G_n` of the length recurrence
/// `ell_1 = N`, `ell_{n+1} = G_n * (ell_1 + .. + ell_n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "factor")]
pub enum GrowthMode {
    /// `G_n = 10^n`.
    PowersOfTen,
    /// `G_n = g` for every `n`, `g >= 2`.
    Constant(u64),
}

impl Default for GrowthMode {
    fn default() -> Self {
        GrowthMode::Constant(2)
    }
}

impl GrowthMode {
    fn validate(&self) -> Result<()> {
        match *self {
            GrowthMode::Constant(g) if g < 2 => Err(Error::Input(format!("growth factor {g} must be at least 2"))),
            _ => Ok(()),
        }
    }

    fn factor_big(&self, n: u64) -> BigUint {
        match *self {
            GrowthMode::PowersOfTen => BigUint::from(10u32).pow(n as u32),
            GrowthMode::Constant(g) => BigUint::from(g),
        }
    }

    fn factor(&self, n: u64) -> Option<u64> {
        match *self {
            GrowthMode::PowersOfTen => 10u64.checked_pow(u32::try_from(n).ok()?),
            GrowthMode::Constant(g) => Some(g),
        }
    }
}

/// `ell_n` as an unbounded integer.
pub fn schedule_length(base: u64, growth: GrowthMode, n: u64) -> Result<BigUint> {
    growth.validate()?;
    if n == 0 || base == 0 {
        return Err(Error::Input("schedule index and base length must be positive".into()));
    }
    let mut ell = BigUint::from(base);
    let mut sum = ell.clone();
    for i in 1..n {
        ell = growth.factor_big(i) * &sum;
        sum += &ell;
    }
    Ok(ell)
}

/// The lengths `ell_1 = N < ell_2 < ...`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthSchedule {
    pub base: u64,
    pub growth: GrowthMode,
}

impl LengthSchedule {
    pub fn new(base: u64, growth: GrowthMode) -> Result<Self> {
        growth.validate()?;
        if base == 0 {
            return Err(Error::Input("base length must be positive".into()));
        }
        Ok(LengthSchedule { base, growth })
    }

    /// `ell_n` in machine integers; overflow is a resource error.
    pub fn ell(&self, n: u64) -> Result<u64> {
        let lens = self.lengths(n as usize)?;
        lens.last().copied().ok_or_else(|| Error::Input("schedule is indexed from 1".into()))
    }

    /// `[ell_1, .., ell_count]`.
    pub fn lengths(&self, count: usize) -> Result<Vec<u64>> {
        let overflow = || Error::Resource("schedule length overflows u64".into());
        let mut out = Vec::with_capacity(count);
        let mut sum = 0u64;
        for i in 0..count as u64 {
            let ell = if i == 0 {
                self.base
            } else {
                self.growth.factor(i).and_then(|g| g.checked_mul(sum)).ok_or_else(overflow)?
            };
            sum = sum.checked_add(ell).ok_or_else(overflow)?;
            out.push(ell);
        }
        Ok(out)
    }

    /// Lengths up to and including the first one that reaches `horizon`.
    pub fn lengths_covering(&self, horizon: u64) -> Result<Vec<u64>> {
        let mut count = 1;
        loop {
            let lens = self.lengths(count)?;
            if *lens.last().unwrap() >= horizon {
                return Ok(lens);
            }
            count += 1;
        }
    }

    /// Prefix length at which checkpoint `n`'s periodic block is complete.
    pub fn horizon_through(&self, n: u64) -> Result<u64> {
        self.ell(n + 1)
    }
}

/// Position `ell_n` where the copy of periodic orbit `p_index` starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub n: u64,
    pub ell: u64,
    pub kappa: u64,
    pub p_index: u64,
}

/// Finite prefix of the constructed sequence together with its
/// checkpoints and the periodic orbits it copies.
#[derive(Clone, Debug, PartialEq)]
pub struct WildPrefix {
    pub word: Word,
    pub checkpoints: Vec<Checkpoint>,
    /// `periodic[i]` is the orbit with `p_index = i + 1`.
    pub periodic: Vec<PeriodicWord>,
    /// `(start, len)` of every connector block.
    pub connectors: Vec<(u64, u64)>,
    pub tmc: Tmc,
}

impl WildPrefix {
    pub fn periodic_word(&self, p_index: u64) -> Result<&PeriodicWord> {
        self.periodic
            .get((p_index as usize).wrapping_sub(1))
            .ok_or_else(|| Error::Input(format!("no periodic orbit with index {p_index} in this prefix")))
    }

    pub fn symbols(&self) -> &[Symbol] {
        self.word.symbols()
    }

    /// JSON array of `{"n", "ell", "kappa", "p_index"}` records.
    pub fn sidecar_json(&self) -> String {
        serde_json::to_string_pretty(&self.checkpoints).expect("checkpoint serialization")
    }
}

fn aperiodic_index(tmc: &Tmc) -> Result<usize> {
    aperiodicity_index(tmc, tmc.wielandt_bound())?
        .ok_or_else(|| Error::Structural("incidence matrix is not aperiodic: no power is positive".into()))
}

/// Builds `z` up to length `horizon` using `p_{kappa_n}` at checkpoint `n`.
pub fn build_wild_prefix(tmc: &Tmc, schedule: &LengthSchedule, horizon: u64) -> Result<WildPrefix> {
    let n_aper = aperiodic_index(tmc)?;
    if (schedule.base as usize) < n_aper {
        return Err(Error::Precondition(format!(
            "schedule base {} is below the aperiodicity index {n_aper}",
            schedule.base
        )));
    }
    if horizon < schedule.base {
        return Err(Error::Precondition(format!(
            "horizon {horizon} is smaller than the first checkpoint {}",
            schedule.base
        )));
    }
    let lens = schedule.lengths_covering(horizon)?;
    // segments start at ell_1 .. ell_{K-1} < horizon <= ell_K
    let segments = (lens.len() - 1).max(1);
    let kappas: Vec<u64> = (1..=segments as u64).map(kappa).collect::<Result<_>>()?;
    let max_h = *kappas.iter().max().unwrap();
    let mut enumeration = PeriodicEnumeration::new(tmc);
    enumeration.get(max_h as usize)?;
    let periodic = enumeration.known()[..max_h as usize].to_vec();
    assemble(tmc, n_aper, &lens, &kappas, &kappas, periodic, horizon)
}

/// Same construction with an explicit target list: checkpoint `n` copies
/// `targets[(n - 1) % targets.len()]`.
pub fn build_wild_prefix_with_targets(
    tmc: &Tmc,
    schedule: &LengthSchedule,
    targets: &[PeriodicWord],
    horizon: u64,
) -> Result<WildPrefix> {
    if targets.is_empty() {
        return Err(Error::Precondition("need at least one target orbit".into()));
    }
    for t in targets {
        PeriodicWord::new(t.word().clone(), tmc)?;
    }
    let n_aper = aperiodic_index(tmc)?;
    if (schedule.base as usize) < n_aper {
        return Err(Error::Precondition(format!(
            "schedule base {} is below the aperiodicity index {n_aper}",
            schedule.base
        )));
    }
    if horizon < schedule.base {
        return Err(Error::Precondition(format!(
            "horizon {horizon} is smaller than the first checkpoint {}",
            schedule.base
        )));
    }
    let lens = schedule.lengths_covering(horizon)?;
    // segments start at ell_1 .. ell_{K-1} < horizon <= ell_K
    let segments = (lens.len() - 1).max(1);
    let idx: Vec<u64> = (0..segments).map(|i| (i % targets.len()) as u64 + 1).collect();
    let kappas: Vec<u64> = (1..=segments as u64).map(kappa).collect::<Result<_>>()?;
    assemble(tmc, n_aper, &lens, &kappas, &idx, targets.to_vec(), horizon)
}

fn assemble(
    tmc: &Tmc,
    n_aper: usize,
    lens: &[u64],
    kappas: &[u64],
    p_indices: &[u64],
    periodic: Vec<PeriodicWord>,
    horizon: u64,
) -> Result<WildPrefix> {
    let segments = p_indices.len();
    let len = usize::try_from(horizon).map_err(|_| Error::Resource("horizon exceeds address space".into()))?;
    let target = |n: usize| &periodic[p_indices[n] as usize - 1];
    let mut z: Vec<Symbol> = Vec::with_capacity(len);

    // positions before ell_1 continue p_{kappa_1} backwards so that the
    // first block is already in phase
    let first = target(0);
    let ell1 = lens[0] as usize;
    let pi = first.period();
    for i in 0..ell1.min(len) {
        z.push(first.symbol_at((i + pi * (ell1 / pi + 1) - ell1) % pi));
    }

    let mut connectors = Vec::new();
    for seg in 0..segments {
        let start = lens[seg] as usize;
        let p = target(seg);
        let nominal_end = if seg + 1 < segments { lens[seg + 1] as usize } else { len };
        let (d, path) = if seg + 1 < segments {
            let v = target(seg + 1).symbol_at(0);
            let reach = tmc.exact_step_reachability(v, n_aper);
            let mut found = None;
            for d in 0..n_aper {
                if nominal_end < start + d + 1 {
                    break;
                }
                let u = p.symbol_at(nominal_end - d - 1 - start);
                if reach[d + 1][u as usize] {
                    let mut path = Vec::with_capacity(d);
                    let mut cur = u;
                    for step in 0..d {
                        let x = (0..tmc.alphabet_size() as Symbol)
                            .find(|&x| tmc.allows(cur, x) && reach[d - step][x as usize])
                            .expect("reachability guarantees a successor");
                        path.push(x);
                        cur = x;
                    }
                    found = Some((d, path));
                    break;
                }
            }
            found.ok_or_else(|| {
                Error::Structural(format!("no connector of length < {n_aper} after checkpoint {}", seg + 1))
            })?
        } else {
            (0, Vec::new())
        };
        let copy_end = nominal_end - d;
        if copy_end < 2 * start && copy_end < len {
            return Err(Error::Precondition(format!(
                "schedule leaves no room for a connector after checkpoint {}",
                seg + 1
            )));
        }
        for i in start..copy_end.min(len) {
            z.push(p.symbol_at(i - start));
        }
        if d > 0 {
            connectors.push((copy_end as u64, d as u64));
            z.extend(path.into_iter().take(len.saturating_sub(z.len())));
        }
    }
    debug_assert_eq!(z.len(), len);

    let checkpoints = (0..segments)
        .filter(|&s| 2 * lens[s] <= horizon)
        .map(|s| Checkpoint { n: s as u64 + 1, ell: lens[s], kappa: kappas[s], p_index: p_indices[s] })
        .collect();
    let word = Word(z);
    debug_assert!(is_admissible(&word, tmc).unwrap_or(false));
    Ok(WildPrefix { word, checkpoints, periodic, connectors, tmc: tmc.clone() })
}

/// Per-checkpoint evidence for one target `[p_h]_m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointEntry {
    pub n: u64,
    pub ell: u64,
    /// Visits to `[p_h]_m` at times `ell_n ..= 2 ell_n`.
    pub window_count: u64,
    /// `floor(ell_n / pi_h)`.
    pub window_floor: u64,
    /// Running frequency over times `0 ..= 2 ell_n`.
    pub frequency: Freq,
    /// `ell_n / ((2 ell_n + 1) 2 pi_h)`.
    pub frequency_floor: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointReport {
    pub p_index: u64,
    pub period: usize,
    pub generation: usize,
    pub entries: Vec<CheckpointEntry>,
    /// `1 / (4 pi_h)`.
    pub bound: f64,
    pub max_frequency: Option<Freq>,
    pub certified: bool,
    pub vacuous: bool,
}

/// Checks the visit counts to `[p_h]_m` at every checkpoint with
/// `kappa_n = h`, and whether some checkpoint frequency reaches
/// `1 / (4 pi_h)`.
pub fn verify_checkpoint_bounds(prefix: &WildPrefix, h: u64, m: usize) -> Result<CheckpointReport> {
    if m == 0 {
        return Err(Error::Input("cylinder generation must be positive".into()));
    }
    let p = prefix.periodic_word(h)?;
    let pi = p.period() as u64;
    let cyl = p.window(0, m);
    let z = prefix.symbols();
    let qualifying: Vec<&Checkpoint> = prefix
        .checkpoints
        .iter()
        .filter(|c| c.p_index == h && c.ell >= m as u64 && 2 * c.ell as usize + m <= z.len())
        .collect();
    let mut entries = Vec::with_capacity(qualifying.len());
    if let Some(last) = qualifying.last() {
        // running count of matches, read off at ell_n - 1 and 2 ell_n
        let stop = 2 * last.ell as usize;
        let mut marks: Vec<(usize, usize)> = Vec::new();
        for (i, c) in qualifying.iter().enumerate() {
            if c.ell > 0 {
                marks.push((c.ell as usize - 1, 2 * i));
            }
            marks.push((2 * c.ell as usize, 2 * i + 1));
        }
        marks.sort_unstable();
        let mut counts = vec![0u64; 2 * qualifying.len()];
        let mut next = marks.iter().peekable();
        let mut running = 0u64;
        for j in 0..=stop {
            if z[j..j + m] == cyl.0[..] {
                running += 1;
            }
            while let Some(&&(pos, slot)) = next.peek() {
                if pos != j {
                    break;
                }
                counts[slot] = running;
                next.next();
            }
        }
        for (i, c) in qualifying.iter().enumerate() {
            let total = counts[2 * i + 1];
            let window_count = total - counts[2 * i];
            let frequency = Freq::new(total, 2 * c.ell + 1)?;
            let window_floor = c.ell / pi;
            // frequency >= ell / ((2 ell + 1) 2 pi)  <=>  2 pi total >= ell
            let ok = window_count >= window_floor && 2 * pi * total >= c.ell;
            entries.push(CheckpointEntry {
                n: c.n,
                ell: c.ell,
                window_count,
                window_floor,
                frequency,
                frequency_floor: c.ell as f64 / ((2 * c.ell + 1) as f64 * 2.0 * pi as f64),
                ok,
            });
        }
    }
    let max_frequency = entries.iter().map(|e| e.frequency).max();
    let certified = max_frequency.is_some_and(|f| f.at_least(1, 4 * pi)) && entries.iter().all(|e| e.ok);
    Ok(CheckpointReport {
        p_index: h,
        period: pi as usize,
        generation: m,
        vacuous: entries.is_empty(),
        entries,
        bound: 1.0 / (4.0 * pi as f64),
        max_frequency,
        certified,
    })
}

/// Finite-horizon membership in `U_n`: for every `j < n` some `k` with
/// `n < k <= len` has visit frequency of the orbit neighborhood
/// `B(p_j, m_n)` at least `1/pi(p_j) - 1/n`.
///
/// `periodic[0]` is `p_1`.
pub fn genericity_membership(word: &[Symbol], n: u64, periodic: &[PeriodicWord], m_n: usize, tmc: &Tmc) -> Result<bool> {
    if n == 0 || m_n == 0 {
        return Err(Error::Input("n and m_n must be positive".into()));
    }
    let required = (n - 1) as usize;
    if periodic.len() < required {
        return Err(Error::Precondition(format!("need p_1 .. p_{required}, got {}", periodic.len())));
    }
    let mut neighborhoods: Vec<HashSet<Vec<Symbol>>> = Vec::with_capacity(required);
    for p in &periodic[..required] {
        let words: HashSet<Vec<Symbol>> = (0..p.period()).map(|i| p.window(i, m_n).0).collect();
        for w in &words {
            if !is_admissible(&Word(w.clone()), tmc)? {
                return Err(Error::Input(format!("orbit {p} is not admissible")));
            }
        }
        if neighborhoods.iter().any(|other| !other.is_disjoint(&words)) {
            return Err(Error::Structural(format!("orbit neighborhoods overlap at generation {m_n}")));
        }
        neighborhoods.push(words);
    }
    if word.len() < m_n {
        return Ok(required == 0);
    }
    let k_max = (word.len() - m_n + 1) as u64;
    for (p, hood) in periodic[..required].iter().zip(&neighborhoods) {
        let pi = p.period() as u128;
        let mut count = 0u128;
        let mut hit = false;
        for k in 1..=k_max {
            let j = (k - 1) as usize;
            if hood.contains(&word[j..j + m_n]) {
                count += 1;
            }
            // count / k >= 1/pi - 1/n  <=>  count * pi * n >= k * (n - pi)
            if k > n && count * pi * n as u128 + k as u128 * pi >= k as u128 * n as u128 {
                hit = true;
                break;
            }
        }
        if !hit {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Writes a symbol stream as `rle-v1 <len>` followed by `symbol count`
/// lines.
pub fn write_rle<W: Write>(symbols: &[Symbol], mut w: W) -> Result<()> {
    writeln!(w, "rle-v1 {}", symbols.len())?;
    let mut i = 0;
    while i < symbols.len() {
        let s = symbols[i];
        let mut j = i;
        while j < symbols.len() && symbols[j] == s {
            j += 1;
        }
        writeln!(w, "{s} {}", j - i)?;
        i = j;
    }
    Ok(())
}

pub fn read_rle<R: BufRead>(r: R) -> Result<Vec<Symbol>> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::Input("empty rle stream".into()))??;
    let total: usize = header
        .strip_prefix("rle-v1 ")
        .and_then(|t| t.trim().parse().ok())
        .ok_or_else(|| Error::Input(format!("bad rle header {header:?}")))?;
    let mut out = Vec::with_capacity(total);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let bad = || Error::Input(format!("bad rle line {line:?}"));
        let s: Symbol = it.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
        let c: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
        out.extend(std::iter::repeat_n(s, c));
    }
    if out.len() != total {
        return Err(Error::Input(format!("rle stream holds {} symbols, header says {total}", out.len())));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::CylinderSpec;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn kappa_prefix() {
        let got: Vec<u64> = (1..=15).map(|n| kappa(n).unwrap()).collect();
        assert_eq!(got, vec![1, 1, 2, 1, 2, 3, 1, 2, 3, 4, 1, 2, 3, 4, 5]);
        assert_eq!(kappa(1_000_000).unwrap(), 1_000_000 - 1413 * 1414 / 2);
        assert!(kappa(0).is_err());
    }

    #[test]
    fn schedule_examples() {
        assert_eq!(schedule_length(1, GrowthMode::PowersOfTen, 2).unwrap(), BigUint::from(10u32));
        assert_eq!(schedule_length(1, GrowthMode::PowersOfTen, 3).unwrap(), BigUint::from(1100u32));
        assert_eq!(schedule_length(3, GrowthMode::Constant(2), 2).unwrap(), BigUint::from(6u32));
        // ell_5 with powers-of-ten growth: 10^4 * (1 + 10 + 1100 + 1111000)
        assert_eq!(schedule_length(1, GrowthMode::PowersOfTen, 5).unwrap(), BigUint::from(11_121_110_000u64));
        assert!(schedule_length(1, GrowthMode::Constant(1), 2).is_err());
        let s = LengthSchedule::new(1, GrowthMode::PowersOfTen).unwrap();
        assert_eq!(s.lengths(4).unwrap(), vec![1, 10, 1100, 1_111_000]);
        assert!(matches!(s.ell(30), Err(Error::Resource(_))));
        let big = schedule_length(1, GrowthMode::PowersOfTen, 12).unwrap();
        assert!(big > BigUint::from(u64::MAX));
    }

    #[test]
    fn schedule_dominates_past_sum() {
        for growth in [GrowthMode::Constant(2), GrowthMode::Constant(3), GrowthMode::PowersOfTen] {
            for base in 1..4 {
                let count = if growth == GrowthMode::PowersOfTen { 6 } else { 8 };
                let lens = LengthSchedule::new(base, growth).unwrap().lengths(count).unwrap();
                let mut sum = 0;
                for win in lens.windows(2) {
                    sum += win[0];
                    assert!(win[1] > win[0]);
                    assert!(win[1] >= 2 * sum);
                    assert!(win[1] - win[0] >= base);
                }
            }
        }
    }

    #[test]
    fn full_shift_checkpoint_contract() {
        let tmc = Tmc::full_shift(2);
        let s = LengthSchedule::new(1, GrowthMode::Constant(2)).unwrap();
        let z = build_wild_prefix(&tmc, &s, 100).unwrap();
        assert_eq!(z.word.len(), 100);
        assert!(is_admissible(&z.word, &tmc).unwrap());
        // ell = 1, 2, 6, 18, 54; checkpoint 2 copies p_{kappa_2} = p_1 = 0
        let c2 = z.checkpoints.iter().find(|c| c.n == 2).unwrap();
        assert_eq!((c2.ell, c2.kappa, c2.p_index), (2, 1, 1));
        assert_eq!(&z.symbols()[2..4], &[0, 0]);
        for c in &z.checkpoints {
            let p = z.periodic_word(c.p_index).unwrap();
            let e = c.ell as usize;
            assert_eq!(&z.symbols()[e..2 * e], &p.window(0, e).0[..], "checkpoint {}", c.n);
        }
        // a fixed point target gets at least ell_n / 2 visits in its window
        let rep = verify_checkpoint_bounds(&z, 1, 1).unwrap();
        assert!(rep.entries.iter().all(|e| 2 * e.window_count >= e.ell));
    }

    #[test]
    fn golden_mean_prefix_is_admissible_and_deterministic() {
        let tmc = Tmc::golden_mean();
        let s = LengthSchedule::new(2, GrowthMode::Constant(2)).unwrap();
        let a = build_wild_prefix(&tmc, &s, 200).unwrap();
        assert!(is_admissible(&a.word, &tmc).unwrap());
        let b = build_wild_prefix(&tmc, &s, 200).unwrap();
        assert_eq!(a, b);
        assert!(a.connectors.iter().all(|&(_, d)| d < 2));
    }

    #[test]
    fn connectors_are_short_on_sparse_chains() {
        // 0 -> 1 -> 2 -> 0 plus 0 -> 0: aperiodic with index > 1
        let tmc = Tmc::new(vec![vec![1, 1, 0], vec![0, 0, 1], vec![1, 0, 0]]).unwrap();
        let n = aperiodicity_index(&tmc, tmc.wielandt_bound()).unwrap().unwrap();
        let s = LengthSchedule::new(n as u64, GrowthMode::Constant(3)).unwrap();
        let z = build_wild_prefix(&tmc, &s, 5000).unwrap();
        assert!(is_admissible(&z.word, &tmc).unwrap());
        assert!(z.connectors.iter().all(|&(_, d)| d <= n as u64));
        for c in &z.checkpoints {
            let p = z.periodic_word(c.p_index).unwrap();
            let e = c.ell as usize;
            assert_eq!(&z.symbols()[e..2 * e], &p.window(0, e).0[..]);
        }
    }

    #[test]
    fn builder_errors() {
        let cycle = Tmc::new(vec![vec![0, 1], vec![1, 0]]).unwrap();
        let s = LengthSchedule::new(1, GrowthMode::Constant(2)).unwrap();
        assert!(matches!(build_wild_prefix(&cycle, &s, 10), Err(Error::Structural(_))));
        let gm = Tmc::golden_mean();
        assert!(matches!(build_wild_prefix(&gm, &s, 10), Err(Error::Precondition(_))));
        let s2 = LengthSchedule::new(4, GrowthMode::Constant(2)).unwrap();
        assert!(matches!(build_wild_prefix(&gm, &s2, 3), Err(Error::Precondition(_))));
    }

    #[test]
    fn checkpoint_bound_values() {
        let tmc = Tmc::full_shift(2);
        let s = LengthSchedule::new(1, GrowthMode::Constant(2)).unwrap();
        let z = build_wild_prefix(&tmc, &s, s.horizon_through(10).unwrap()).unwrap();
        let r1 = verify_checkpoint_bounds(&z, 1, 1).unwrap();
        assert_eq!(r1.bound, 0.25);
        assert!(r1.certified && !r1.vacuous);
        let r3 = verify_checkpoint_bounds(&z, 3, 2).unwrap();
        assert_eq!(r3.period, 2);
        assert_eq!(r3.bound, 0.125);
        assert!(r3.certified);
        // no checkpoint copies p_6 this early
        let r6 = verify_checkpoint_bounds(&z, 4, 1).unwrap();
        assert!(!r6.vacuous);
        let tiny = build_wild_prefix(&tmc, &s, 20).unwrap();
        let empty = verify_checkpoint_bounds(&tiny, 4, 1);
        assert!(empty.is_err() || empty.unwrap().vacuous);
    }

    #[test]
    fn checkpoint_on_own_orbit_has_full_frequency() {
        let tmc = Tmc::full_shift(2);
        let s = LengthSchedule::new(1, GrowthMode::Constant(2)).unwrap();
        let zero = PeriodicWord::new(w("0"), &tmc).unwrap();
        let z = build_wild_prefix_with_targets(&tmc, &s, &[zero], 200).unwrap();
        assert!(z.symbols().iter().all(|&x| x == 0));
        let rep = verify_checkpoint_bounds(&z, 1, 3).unwrap();
        assert!(rep.entries.iter().all(|e| e.frequency == Freq::one()));
    }

    #[test]
    fn genericity_examples() {
        let tmc = Tmc::full_shift(2);
        let p: Vec<PeriodicWord> = ["0", "1", "01"].iter().map(|s| PeriodicWord::new(w(s), &tmc).unwrap()).collect();
        let zeros = vec![0; 200];
        assert!(genericity_membership(&zeros, 1, &p, 1, &tmc).unwrap());
        assert!(genericity_membership(&zeros, 2, &p, 1, &tmc).unwrap());
        assert!(!genericity_membership(&zeros, 3, &p, 1, &tmc).unwrap());
        // neighborhoods of 0 and 01 overlap at generation 1
        assert!(matches!(genericity_membership(&zeros, 4, &p, 1, &tmc), Err(Error::Structural(_))));

        let s = LengthSchedule::new(1, GrowthMode::Constant(2)).unwrap();
        let z = build_wild_prefix(&tmc, &s, s.horizon_through(12).unwrap()).unwrap();
        assert!(genericity_membership(z.symbols(), 3, &z.periodic, 1, &tmc).unwrap());
        // a single segment is 2/3 of the prefix under growth 2, too little for n = 4
        assert!(!genericity_membership(z.symbols(), 4, &z.periodic, 3, &tmc).unwrap());
        let s = LengthSchedule::new(1, GrowthMode::Constant(10)).unwrap();
        let z = build_wild_prefix(&tmc, &s, s.horizon_through(6).unwrap()).unwrap();
        assert!(genericity_membership(z.symbols(), 4, &z.periodic, 3, &tmc).unwrap());
    }

    #[test]
    fn rle_round_trip_and_sidecar() {
        let tmc = Tmc::golden_mean();
        let s = LengthSchedule::new(2, GrowthMode::Constant(2)).unwrap();
        let z = build_wild_prefix(&tmc, &s, 500).unwrap();
        let mut buf = Vec::new();
        write_rle(z.symbols(), &mut buf).unwrap();
        assert_eq!(read_rle(&buf[..]).unwrap(), z.symbols());
        assert!(read_rle("rle-v1 3\n0 2\n".as_bytes()).is_err());
        let side: Vec<Checkpoint> = serde_json::from_str(&z.sidecar_json()).unwrap();
        assert_eq!(side, z.checkpoints);
        assert!(z.sidecar_json().contains("\"p_index\""));
        let _ = CylinderSpec::whole_space();
    }
}
