//! Orbit measure `eta` on symbolic spaces, built from the visit-frequency
//! premeasure by covering with cylinders.
//!
//! Cylinders of generation `g` have diameter `2^-g` under
//! `dist(x, y) = 2^-(first disagreement)`, so the supremum over cover
//! fineness is taken as a supremum over generations. For a fixed
//! generation the cover infimum is read off the partition into
//! generation-`g` subcylinders.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frequency::{geometric_horizons, in_union, EventuallyPeriodic, Freq, LabelRuns, OscillationReport};
use crate::orbit::{verify_checkpoint_bounds, WildPrefix};
use crate::symbolic::{admissible_words, enumerate_periodic_words, CylinderSpec, PeriodicWord, Symbol, Tmc, Word};

/// Default ratio between consecutive sampled horizons.
pub const DEFAULT_GAMMA: f64 = 1.1;

/// Default level a packing bound must exceed to certify wild behavior.
pub const DEFAULT_THRESHOLD: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Exact,
    LowerBound,
    UpperBound,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Exact => "exact",
            Direction::LowerBound => "lower_bound",
            Direction::UpperBound => "upper_bound",
        })
    }
}

/// Estimate of the premeasure on one cylinder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauHat {
    pub value: f64,
    /// Last horizon used; `None` for limit values.
    pub horizon: Option<u64>,
    pub exact: Option<Freq>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaEstimate {
    pub target: String,
    pub value: f64,
    pub direction: Direction,
    pub generation: usize,
    pub horizon: Option<u64>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<Freq>,
}

impl EtaEstimate {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("estimate serialization")
    }
}

fn describe(targets: &[CylinderSpec]) -> String {
    if targets.is_empty() {
        return "empty".into();
    }
    targets.iter().map(|t| t.to_string()).collect::<Vec<_>>().join("+")
}

/// Premeasure estimates on every admissible generation-`g` cylinder.
#[derive(Clone, Debug, PartialEq)]
pub struct PremeasureTable {
    generation: usize,
    entries: BTreeMap<Word, TauHat>,
    horizon: Option<u64>,
}

impl PremeasureTable {
    /// Limit frequencies of an eventually periodic orbit.
    pub fn exact(orbit: &EventuallyPeriodic, tmc: &Tmc, g: usize) -> Self {
        let entries = admissible_words(tmc, g)
            .into_iter()
            .map(|w| {
                let f = orbit.limit_frequency(&[CylinderSpec::from_word(w.clone())]);
                (w, TauHat { value: f.value(), horizon: None, exact: Some(f) })
            })
            .collect();
        PremeasureTable { generation: g, entries, horizon: None }
    }

    /// Tail sup of the visit frequencies over geometric horizons from
    /// `burn_in` to `horizon`.
    pub fn from_orbit(orbit: &[Symbol], tmc: &Tmc, g: usize, burn_in: u64, horizon: u64) -> Result<Self> {
        let s = tmc.alphabet_size();
        if horizon == 0 || burn_in > horizon {
            return Err(Error::Precondition(format!("need 0 < burn-in {burn_in} <= horizon {horizon}")));
        }
        if (orbit.len() as u64) < horizon + g as u64 - 1 {
            return Err(Error::Precondition(format!(
                "orbit of length {} is too short for horizon {horizon} at generation {g}",
                orbit.len()
            )));
        }
        if let Some(&bad) = orbit.iter().find(|&&x| x as usize >= s) {
            return Err(Error::Input(format!("symbol {bad} outside alphabet of size {s}")));
        }
        let cells = (s as u64)
            .checked_pow(g as u32)
            .filter(|&c| c <= 1 << 24)
            .ok_or_else(|| Error::Resource(format!("{s}^{g} cells is too many")))? as usize;
        let code = |w: &[Symbol]| w.iter().fold(0usize, |acc, &x| acc * s + x as usize);
        let horizons = geometric_horizons(burn_in, horizon, DEFAULT_GAMMA);
        let mut counts = vec![0u64; cells];
        let mut best: Vec<Option<Freq>> = vec![None; cells];
        let mut next = horizons.iter().peekable();
        for j in 0..horizon as usize {
            counts[code(&orbit[j..j + g])] += 1;
            let n = j as u64 + 1;
            if next.peek() == Some(&&n) {
                next.next();
                for (c, b) in counts.iter().zip(best.iter_mut()) {
                    let f = Freq::new(*c, n)?;
                    if b.is_none_or(|old| f > old) {
                        *b = Some(f);
                    }
                }
            }
        }
        let entries = admissible_words(tmc, g)
            .into_iter()
            .map(|w| {
                let f = best[code(w.symbols())].unwrap_or_else(Freq::zero);
                (w, TauHat { value: f.value(), horizon: Some(horizon), exact: None })
            })
            .collect();
        Ok(PremeasureTable { generation: g, entries, horizon: Some(horizon) })
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn horizon(&self) -> Option<u64> {
        self.horizon
    }

    pub fn get(&self, w: &Word) -> Option<&TauHat> {
        self.entries.get(w)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Word, &TauHat)> {
        self.entries.iter()
    }

    pub fn is_exact(&self) -> bool {
        self.entries.values().all(|t| t.exact.is_some())
    }
}

/// Cover value of a finite cylinder union at the table's generation: the
/// sum of the premeasure over the generation-`g` subcylinders it contains.
///
/// For limit tables this is exact; for finite-horizon tables it is a
/// lower bound.
pub fn nu_g(table: &PremeasureTable, targets: &[CylinderSpec]) -> Result<EtaEstimate> {
    let g = table.generation;
    if let Some(t) = targets.iter().find(|t| t.generation() > g) {
        return Err(Error::Precondition(format!("target {t} is finer than table generation {g}")));
    }
    let mut exact = Some(Freq::zero());
    let mut value = 0.0;
    for (w, tau) in &table.entries {
        if !in_union(w.symbols(), targets) {
            continue;
        }
        value += tau.value;
        exact = match (exact, tau.exact) {
            (Some(a), Some(b)) => add_freq(a, b),
            _ => None,
        };
    }
    let direction = if exact.is_some() { Direction::Exact } else { Direction::LowerBound };
    Ok(EtaEstimate {
        target: describe(targets),
        value: exact.map_or(value, |f| f.value()),
        direction,
        generation: g,
        horizon: table.horizon,
        note: "generation-g partition sum".into(),
        exact,
    })
}

fn add_freq(a: Freq, b: Freq) -> Option<Freq> {
    let (p1, q1) = a.reduced();
    let (p2, q2) = b.reduced();
    let q = num_integer::lcm(q1, q2);
    Freq::new(p1 * (q / q1) + p2 * (q / q2), q).ok()
}

/// `eta` of an eventually periodic orbit: the uniform measure on its
/// periodic part.
pub fn eta_eventually_periodic(orbit: &EventuallyPeriodic, targets: &[CylinderSpec]) -> EtaEstimate {
    let f = orbit.limit_frequency(targets);
    EtaEstimate {
        target: describe(targets),
        value: f.value(),
        direction: Direction::Exact,
        generation: targets.iter().map(|t| t.generation()).max().unwrap_or(0),
        horizon: None,
        note: format!("uniform on periodic orbit {}", orbit.period),
        exact: Some(f),
    }
}

/// Per-orbit lower bound on the premeasure of a small cylinder around a
/// periodic orbit.
pub trait PackingSource {
    fn orbit_bound(&mut self, p: &PeriodicWord) -> Result<f64>;
    fn describe(&self) -> String;
}

/// `1 / (4 pi)` for an orbit of period `pi`, the bound the wild
/// construction guarantees for every periodic orbit it visits.
#[derive(Clone, Copy, Debug, Default)]
pub struct ConstructionBound;

impl PackingSource for ConstructionBound {
    fn orbit_bound(&mut self, p: &PeriodicWord) -> Result<f64> {
        Ok(1.0 / (4.0 * p.period() as f64))
    }

    fn describe(&self) -> String {
        "construction bound 1/(4 pi)".into()
    }
}

/// Uses checkpoint evidence on a concrete prefix: `1 / (4 pi)` if the
/// prefix certifies it at generation `m`, otherwise 0.
pub struct CheckpointPacking<'a> {
    pub prefix: &'a WildPrefix,
    pub generation: usize,
}

impl PackingSource for CheckpointPacking<'_> {
    fn orbit_bound(&mut self, p: &PeriodicWord) -> Result<f64> {
        let canon = crate::symbolic::canonical_rotation(p);
        let Some(i) = self.prefix.periodic.iter().position(|q| *q == canon) else { return Ok(0.0) };
        let rep = verify_checkpoint_bounds(self.prefix, i as u64 + 1, self.generation)?;
        Ok(if rep.certified { rep.bound } else { 0.0 })
    }

    fn describe(&self) -> String {
        format!("checkpoint evidence at generation {}", self.generation)
    }
}

impl<F: FnMut(&PeriodicWord) -> Result<f64>> PackingSource for F {
    fn orbit_bound(&mut self, p: &PeriodicWord) -> Result<f64> {
        self(p)
    }

    fn describe(&self) -> String {
        "custom".into()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PackingLevel {
    pub period: usize,
    pub orbits: usize,
    pub contribution: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PackingReport {
    pub estimate: EtaEstimate,
    pub levels: Vec<PackingLevel>,
    pub threshold: f64,
    pub exceeds_threshold: bool,
}

/// Lower bound for `eta(host)` from disjoint cylinders around the periodic
/// orbits of the given periods that meet `host`.
///
/// Two periodic sequences of periods at most `q` that agree on `2q`
/// symbols coincide, so the generation-`2 max(periods)` cylinders around
/// distinct orbits are pairwise disjoint.
pub fn eta_packing_lower_bound(
    host: &CylinderSpec,
    periods: &[usize],
    tmc: &Tmc,
    source: &mut dyn PackingSource,
    threshold: f64,
) -> Result<PackingReport> {
    if periods.is_empty() {
        return Err(Error::Precondition("need at least one period level".into()));
    }
    let mut sorted: Vec<usize> = periods.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut levels = Vec::with_capacity(sorted.len());
    let mut total = 0.0;
    for &q in &sorted {
        let orbits = enumerate_periodic_words(tmc, q, &host.base)?;
        let mut contribution = 0.0;
        for p in &orbits {
            contribution += source.orbit_bound(p)?;
        }
        total += contribution;
        levels.push(PackingLevel { period: q, orbits: orbits.len(), contribution });
    }
    let generation = 2 * sorted.last().copied().unwrap_or(0);
    Ok(PackingReport {
        estimate: EtaEstimate {
            target: host.to_string(),
            value: total,
            direction: Direction::LowerBound,
            generation,
            horizon: None,
            note: source.describe(),
            exact: None,
        },
        levels,
        threshold,
        exceeds_threshold: total > threshold,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Probability,
    Historic,
    Undetermined,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Probability => "probability",
            Verdict::Historic => "historic",
            Verdict::Undetermined => "undetermined",
        })
    }
}

/// A running time average whose tail extremes can be evaluated.
pub trait AverageTrack {
    fn max_horizon(&self) -> u64;
    fn oscillation(&self, burn_in: u64, horizon: u64) -> Result<OscillationReport>;
}

/// Visit frequency of a cylinder union along a finite orbit, sampled at
/// geometric horizons.
pub struct CylinderTrack<'a> {
    pub orbit: &'a [Symbol],
    pub targets: Vec<CylinderSpec>,
}

impl AverageTrack for CylinderTrack<'_> {
    fn max_horizon(&self) -> u64 {
        let depth = self.targets.iter().map(|t| t.generation()).max().unwrap_or(0);
        (self.orbit.len() + 1).saturating_sub(depth.max(1)) as u64
    }

    fn oscillation(&self, burn_in: u64, horizon: u64) -> Result<OscillationReport> {
        let hs = geometric_horizons(burn_in, horizon, DEFAULT_GAMMA);
        let values = frequencies_at(self.orbit, &self.targets, &hs)?;
        OscillationReport::from_values(values.into_iter().map(|f| f.value()), burn_in, horizon)
    }
}

/// Average of a label function along a run-length stream, exact at every
/// run end.
pub struct RunTrack<'a> {
    pub runs: &'a LabelRuns,
    pub labels: Vec<u32>,
}

impl AverageTrack for RunTrack<'_> {
    fn max_horizon(&self) -> u64 {
        self.runs.total_len()
    }

    fn oscillation(&self, burn_in: u64, horizon: u64) -> Result<OscillationReport> {
        let mut hs: Vec<u64> = self.runs.tail_horizons(burn_in)?.into_iter().filter(|&h| h < horizon).collect();
        hs.push(horizon);
        let labels = self.labels.clone();
        let phi = move |l: u32| if labels.contains(&l) { 1.0 } else { 0.0 };
        let values = self.runs.averages_at(&phi, &hs);
        OscillationReport::from_values(values.into_iter().map(|(_, v)| v), burn_in, horizon)
    }
}

/// Exact visit frequencies of a cylinder union at sorted horizons.
pub fn frequencies_at(orbit: &[Symbol], targets: &[CylinderSpec], horizons: &[u64]) -> Result<Vec<Freq>> {
    let Some(&max_n) = horizons.last() else { return Ok(Vec::new()) };
    let depth = targets.iter().map(|t| t.generation()).max().unwrap_or(0);
    if max_n == 0 || (orbit.len() as u64) < max_n + depth.max(1) as u64 - 1 {
        return Err(Error::Precondition(format!(
            "orbit of length {} is too short for horizon {max_n}",
            orbit.len()
        )));
    }
    let mut out = Vec::with_capacity(horizons.len());
    let mut hits = 0u64;
    let mut next = horizons.iter().peekable();
    for j in 0..max_n as usize {
        if in_union(&orbit[j..], targets) {
            hits += 1;
        }
        let n = j as u64 + 1;
        while next.peek() == Some(&&n) {
            out.push(Freq::new(hits, n)?);
            next.next();
        }
    }
    Ok(out)
}

/// Finite-horizon test of whether the orbit measure is a probability,
/// i.e. whether all tracked averages converge.
///
/// `probability` when every amplitude on `[burn_in, horizon]` is at most
/// `tol`; `historic` when some amplitude stays at least `3 tol` on both
/// `[burn_in, horizon / 2]` and `[burn_in, horizon]`.
pub fn probability_verdict(tracks: &[&dyn AverageTrack], burn_in: u64, horizon: u64, tol: f64) -> Verdict {
    if burn_in == 0 || horizon < 2 * burn_in || tracks.is_empty() {
        return Verdict::Undetermined;
    }
    if tracks.iter().any(|t| t.max_horizon() < horizon) {
        return Verdict::Undetermined;
    }
    let mut all_small = true;
    let mut persistent = false;
    for t in tracks {
        let (Ok(full), Ok(half)) = (t.oscillation(burn_in, horizon), t.oscillation(burn_in, horizon / 2)) else {
            return Verdict::Undetermined;
        };
        all_small &= full.amplitude <= tol;
        persistent |= full.amplitude >= 3.0 * tol && half.amplitude >= 3.0 * tol;
    }
    if all_small {
        Verdict::Probability
    } else if persistent {
        Verdict::Historic
    } else {
        Verdict::Undetermined
    }
}

fn tail_sup(track: &dyn AverageTrack, burn_in: u64, horizon: u64) -> Result<f64> {
    Ok(track.oscillation(burn_in, horizon)?.sup_tail)
}

/// Total mass from a partition of the space into generation-`g`
/// cylinders: the sum over cells of the tail-sup frequencies.
pub fn total_mass_cylinders(
    orbit: &[Symbol],
    cells: &[CylinderSpec],
    tmc: &Tmc,
    burn_in: u64,
    horizon: u64,
) -> Result<EtaEstimate> {
    for (i, a) in cells.iter().enumerate() {
        if let Some(b) = cells[i + 1..].iter().find(|b| !a.is_disjoint_from(b)) {
            return Err(Error::Structural(format!("partition cells {a} and {b} overlap")));
        }
    }
    let g = cells.iter().map(|c| c.generation()).max().unwrap_or(0);
    if let Some(w) = admissible_words(tmc, g).into_iter().find(|w| !in_union(w.symbols(), cells)) {
        return Err(Error::Precondition(format!("partition does not cover [{w}]_{g}")));
    }
    let mut value = 0.0;
    for c in cells {
        let track = CylinderTrack { orbit, targets: vec![c.clone()] };
        value += tail_sup(&track, burn_in, horizon)?;
    }
    Ok(EtaEstimate {
        target: "whole space".into(),
        value,
        direction: Direction::LowerBound,
        generation: g,
        horizon: Some(horizon),
        note: format!("sum of tail sups over {} cells", cells.len()),
        exact: None,
    })
}

/// Total mass from a partition of a labelled stream into label groups.
pub fn total_mass_regions(runs: &LabelRuns, cells: &[Vec<u32>], burn_in: u64) -> Result<EtaEstimate> {
    let mut seen = BTreeSet::new();
    for cell in cells {
        for &l in cell {
            if !seen.insert(l) {
                return Err(Error::Structural(format!("label {l} belongs to two cells")));
            }
        }
    }
    if let Some(&(l, _)) = runs.runs().iter().find(|(l, _)| !seen.contains(l)) {
        return Err(Error::Precondition(format!("label {l} is not covered by the partition")));
    }
    let horizon = runs.total_len();
    let mut value = 0.0;
    for cell in cells {
        let track = RunTrack { runs, labels: cell.clone() };
        value += tail_sup(&track, burn_in, horizon)?;
    }
    Ok(EtaEstimate {
        target: "whole space".into(),
        value,
        direction: Direction::LowerBound,
        generation: 0,
        horizon: Some(horizon),
        note: format!("sum of tail sups over {} regions", cells.len()),
        exact: None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauEtaRow {
    pub target: String,
    pub tau: f64,
    pub eta: EtaEstimate,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauEtaReport {
    pub rows: Vec<TauEtaRow>,
    pub all_ok: bool,
}

/// Checks `tau(target) <= eta(target) + tol` for finite cylinder unions.
///
/// Cylinders are both open and closed, so the closed-set and open-set
/// comparisons reduce to the same inequality.
pub fn compare_tau_eta(
    orbit: &[Symbol],
    tmc: &Tmc,
    targets: &[Vec<CylinderSpec>],
    g: usize,
    burn_in: u64,
    horizon: u64,
    tol: f64,
) -> Result<TauEtaReport> {
    let g = targets.iter().flatten().map(|c| c.generation()).max().unwrap_or(0).max(g);
    let table = PremeasureTable::from_orbit(orbit, tmc, g, burn_in, horizon)?;
    let mut rows = Vec::with_capacity(targets.len());
    for t in targets {
        let tau = if t.is_empty() {
            0.0
        } else {
            tail_sup(&CylinderTrack { orbit, targets: t.clone() }, burn_in, horizon)?
        };
        let eta = nu_g(&table, t)?;
        let ok = tau <= eta.value + tol;
        rows.push(TauEtaRow { target: describe(t), tau, eta, ok });
    }
    let all_ok = rows.iter().all(|r| r.ok);
    Ok(TauEtaReport { rows, all_ok })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn cyl(s: &str) -> CylinderSpec {
        CylinderSpec::from_word(w(s))
    }

    fn ep(pre: &str, per: &str) -> EventuallyPeriodic {
        let tmc = Tmc::full_shift(3);
        EventuallyPeriodic::new(w(pre), PeriodicWord::new(w(per), &tmc).unwrap())
    }

    #[test]
    fn nu_g_examples() {
        let tmc = Tmc::full_shift(2);
        let fixed = ep("", "0");
        for g in 1..5 {
            let t = PremeasureTable::exact(&fixed, &tmc, g);
            let e = nu_g(&t, &[cyl("0")]).unwrap();
            assert_eq!(e.exact, Some(Freq::one()));
            assert_eq!(e.direction, Direction::Exact);
        }
        let alt = ep("", "01");
        let t = PremeasureTable::exact(&alt, &tmc, 2);
        assert_eq!(t.get(&w("01")).unwrap().value, 0.5);
        assert_eq!(nu_g(&t, &[cyl("0")]).unwrap().value, 0.5);
        let t1 = PremeasureTable::exact(&alt, &tmc, 1);
        assert!(matches!(nu_g(&t1, &[cyl("01")]), Err(Error::Precondition(_))));
    }

    #[test]
    fn whole_space_has_mass_at_least_one() {
        let tmc = Tmc::full_shift(2);
        let orbit: Vec<Symbol> = (0..5000u32).map(|i| ((i * i + i / 7) % 2) as Symbol).collect();
        let t = PremeasureTable::from_orbit(&orbit, &tmc, 1, 100, 4000).unwrap();
        let e = nu_g(&t, &[CylinderSpec::whole_space()]).unwrap();
        assert!(e.value >= 1.0);
        assert_eq!(e.direction, Direction::LowerBound);
    }

    #[test]
    fn eventually_periodic_eta() {
        assert_eq!(eta_eventually_periodic(&ep("", "0"), &[cyl("0")]).value, 1.0);
        assert_eq!(eta_eventually_periodic(&ep("12", "01"), &[cyl("0")]).value, 0.5);
        let e = eta_eventually_periodic(&ep("2", "001"), &[cyl("00")]);
        assert_eq!(e.exact, Some(Freq::new(1, 3).unwrap()));
        let json: serde_json::Value = serde_json::from_str(&e.to_json()).unwrap();
        for key in ["target", "value", "direction", "generation", "horizon"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert_eq!(json["direction"], "exact");
    }

    #[test]
    fn packing_examples() {
        let tmc = Tmc::full_shift(2);
        let rep = eta_packing_lower_bound(&cyl("0"), &[2, 3], &tmc, &mut ConstructionBound, DEFAULT_THRESHOLD).unwrap();
        assert!((rep.estimate.value - (1.0 / 8.0 + 2.0 / 12.0)).abs() < 1e-15);
        assert_eq!(rep.levels.iter().map(|l| l.orbits).collect::<Vec<_>>(), vec![1, 2]);
        let mut zero = |_: &PeriodicWord| Ok(0.0);
        let rep = eta_packing_lower_bound(&cyl("0"), &[2, 3, 4], &tmc, &mut zero, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(rep.estimate.value, 0.0);
        assert!(!rep.exceeds_threshold);
        let single = eta_packing_lower_bound(&cyl("01"), &[2], &tmc, &mut ConstructionBound, 10.0).unwrap();
        assert_eq!(single.estimate.value, 1.0 / 8.0);
        assert!(eta_packing_lower_bound(&cyl("0"), &[], &tmc, &mut ConstructionBound, 10.0).is_err());
    }

    #[test]
    fn packing_grows_with_levels() {
        let tmc = Tmc::full_shift(2);
        let mut prev = 0.0;
        for top in 2..=10 {
            let periods: Vec<usize> = (2..=top).collect();
            let v = eta_packing_lower_bound(&cyl("0"), &periods, &tmc, &mut ConstructionBound, 10.0)
                .unwrap()
                .estimate
                .value;
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn verdicts() {
        let orbit = ep("21", "0110").materialize(20_000);
        let track = CylinderTrack { orbit: &orbit, targets: vec![cyl("0"), cyl("11")] };
        assert_eq!(probability_verdict(&[&track], 1000, 19_000, 1e-2), Verdict::Probability);
        assert_eq!(probability_verdict(&[&track], 1000, 1500, 1e-2), Verdict::Undetermined);
        let mut runs = LabelRuns::new();
        let mut len = 10u64;
        for _ in 0..12 {
            runs.push(0, len).unwrap();
            runs.push(1, 2 * len).unwrap();
            len *= 4;
        }
        let t = RunTrack { runs: &runs, labels: vec![0] };
        assert_eq!(probability_verdict(&[&t], runs.total_len() / 1000, runs.total_len(), 0.05), Verdict::Historic);
    }

    #[test]
    fn total_mass_examples() {
        let tmc = Tmc::full_shift(2);
        let orbit = ep("1", "0").materialize(5000);
        let e = total_mass_cylinders(&orbit, &[cyl("0"), cyl("10"), cyl("11")], &tmc, 100, 4000).unwrap();
        assert!((e.value - 1.0).abs() < 1e-2);
        assert!(matches!(
            total_mass_cylinders(&orbit, &[cyl("0"), cyl("01"), cyl("1")], &tmc, 100, 4000),
            Err(Error::Structural(_))
        ));
        assert!(total_mass_cylinders(&orbit, &[cyl("0")], &tmc, 100, 4000).is_err());
        let mut runs = LabelRuns::new();
        runs.push(0, 5).unwrap();
        assert!(matches!(total_mass_regions(&runs, &[vec![0], vec![0, 1]], 1), Err(Error::Structural(_))));
    }

    #[test]
    fn tau_below_eta() {
        let tmc = Tmc::full_shift(2);
        let orbit = ep("", "011").materialize(3000);
        let rep = compare_tau_eta(&orbit, &tmc, &[vec![cyl("0")], vec![cyl("11"), cyl("00")], vec![]], 3, 300, 2900, 1e-12)
            .unwrap();
        assert!(rep.all_ok);
        assert_eq!(rep.rows[2].tau, 0.0);
        assert_eq!(rep.rows[2].eta.value, 0.0);
    }
}
