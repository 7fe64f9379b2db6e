//! Birkhoff sums along symbolic orbits.
//!
//! Visit frequencies are kept as exact rationals ([`Freq`]); real-valued
//! time averages use compensated summation. A [`FrequencyTrace`] records a
//! running average at a sampled set of horizons, and [`running_extremes`]
//! turns it into the tail sup/inf pair used as a finite-horizon stand-in for
//! limsup/liminf.
//!
//! Tail convention: `sup_tail` and `inf_tail` are taken over every sampled
//! horizon `n >= burn_in`. Horizons are by default geometric,
//! `n, ceil(1.1 n), ...`, since the oscillations of interest live on
//! geometric time scales.

use std::cmp::Ordering;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use num_integer::Integer;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::symbolic::{CylinderSpec, PeriodicWord, Symbol, Word};

/// Exact visit frequency `hits / n`.
#[derive(Clone, Copy, Debug)]
pub struct Freq {
    hits: u64,
    n: u64,
}

impl Freq {
    pub fn new(hits: u64, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Input("frequency over zero steps".into()));
        }
        if hits > n {
            return Err(Error::Input(format!("{hits} hits exceed {n} steps")));
        }
        Ok(Freq { hits, n })
    }

    pub fn zero() -> Self {
        Freq { hits: 0, n: 1 }
    }

    pub fn one() -> Self {
        Freq { hits: 1, n: 1 }
    }

    pub fn hits(&self) -> u64 {
        self.hits
    }

    pub fn steps(&self) -> u64 {
        self.n
    }

    pub fn value(&self) -> f64 {
        self.hits as f64 / self.n as f64
    }

    /// Reduced numerator and denominator.
    pub fn reduced(&self) -> (u64, u64) {
        let g = self.hits.gcd(&self.n);
        (self.hits / g, self.n / g)
    }

    /// `self >= p / q`, exactly.
    pub fn at_least(&self, p: u64, q: u64) -> bool {
        self.hits as u128 * q as u128 >= p as u128 * self.n as u128
    }

    /// `self <= p / q`, exactly.
    pub fn at_most(&self, p: u64, q: u64) -> bool {
        self.hits as u128 * q as u128 <= p as u128 * self.n as u128
    }
}

impl PartialEq for Freq {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Freq {}

impl PartialOrd for Freq {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Freq {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.hits as u128 * other.n as u128).cmp(&(other.hits as u128 * self.n as u128))
    }
}

impl fmt::Display for Freq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (p, q) = self.reduced();
        write!(f, "{p}/{q}")
    }
}

impl FromStr for Freq {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (p, q) = s.split_once('/').ok_or_else(|| Error::Input(format!("not a rational: {s:?}")))?;
        let p = p.trim().parse().map_err(|_| Error::Input(format!("bad numerator in {s:?}")))?;
        let q = q.trim().parse().map_err(|_| Error::Input(format!("bad denominator in {s:?}")))?;
        Freq::new(p, q)
    }
}

impl Serialize for Freq {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Freq {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// 17 significant digits, enough for a lossless f64 round trip.
pub fn format_sig17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

fn require_prefix(orbit_len: usize, n: u64, depth: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Precondition("horizon must be positive".into()));
    }
    let need = n as u128 + depth.max(1) as u128 - 1;
    if (orbit_len as u128) < need {
        return Err(Error::Precondition(format!(
            "orbit prefix of length {orbit_len} is too short for horizon {n} and window {depth}"
        )));
    }
    Ok(())
}

pub fn in_union(window: &[Symbol], targets: &[CylinderSpec]) -> bool {
    targets.iter().any(|t| t.contains(window))
}

/// `(1/n) #{0 <= j < n : shift^j(orbit) in target}`, exactly.
pub fn visit_frequency(orbit: &[Symbol], target: &CylinderSpec, n: u64) -> Result<Freq> {
    visit_frequency_union(orbit, std::slice::from_ref(target), n)
}

/// Visit frequency of a finite union of cylinders.
pub fn visit_frequency_union(orbit: &[Symbol], targets: &[CylinderSpec], n: u64) -> Result<Freq> {
    let depth = targets.iter().map(|t| t.generation()).max().unwrap_or(0);
    require_prefix(orbit.len(), n, depth)?;
    let hits = (0..n as usize).filter(|&j| in_union(&orbit[j..], targets)).count() as u64;
    Freq::new(hits, n)
}

/// A function of the first `depth()` symbols of a sequence.
pub trait Observable {
    fn depth(&self) -> usize;
    fn eval(&self, window: &[Symbol]) -> f64;

    fn describe(&self) -> String {
        "observable".into()
    }
}

/// Indicator of a cylinder.
#[derive(Clone, Debug)]
pub struct CylinderIndicator(pub CylinderSpec);

impl Observable for CylinderIndicator {
    fn depth(&self) -> usize {
        self.0.generation()
    }

    fn eval(&self, window: &[Symbol]) -> f64 {
        if self.0.contains(window) {
            1.0
        } else {
            0.0
        }
    }

    fn describe(&self) -> String {
        self.0.to_string()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ConstantObservable(pub f64);

impl Observable for ConstantObservable {
    fn depth(&self) -> usize {
        0
    }

    fn eval(&self, _: &[Symbol]) -> f64 {
        self.0
    }

    fn describe(&self) -> String {
        format!("const({})", self.0)
    }
}

/// `phi(x) = values[x_0]`.
#[derive(Clone, Debug)]
pub struct SymbolFunction(pub Vec<f64>);

impl Observable for SymbolFunction {
    fn depth(&self) -> usize {
        1
    }

    fn eval(&self, window: &[Symbol]) -> f64 {
        self.0[window[0] as usize]
    }

    fn describe(&self) -> String {
        format!("symbol_fn{:?}", self.0)
    }
}

/// One sampled horizon of a running average.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub n: u64,
    pub value: f64,
    pub exact: Option<Freq>,
}

/// Running averages `n -> S_n` at increasing sampled horizons.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTrace {
    pub target: String,
    pub orbit_id: String,
    points: Vec<TracePoint>,
}

pub const TRACE_HEADER: [&str; 4] = ["n", "value", "target", "orbit_id"];

impl FrequencyTrace {
    pub fn new(target: impl Into<String>, orbit_id: impl Into<String>) -> Self {
        FrequencyTrace { target: target.into(), orbit_id: orbit_id.into(), points: Vec::new() }
    }

    pub fn points(&self) -> &[TracePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> Option<&TracePoint> {
        self.points.last()
    }

    pub fn push(&mut self, n: u64, value: f64, exact: Option<Freq>) -> Result<()> {
        if let Some(last) = self.points.last() {
            if n <= last.n {
                return Err(Error::Input(format!("trace horizons must increase: {n} after {}", last.n)));
            }
        }
        self.points.push(TracePoint { n, value, exact });
        Ok(())
    }

    /// Writes the `n,value,target,orbit_id` CSV. Exact points are written
    /// as `p/q`, others with 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(TRACE_HEADER)?;
        for p in &self.points {
            let v = match p.exact {
                Some(f) => f.to_string(),
                None => format_sig17(p.value),
            };
            wr.write_record([p.n.to_string(), v, self.target.clone(), self.orbit_id.clone()])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads a single-target trace written by [`write_csv`](Self::write_csv).
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != TRACE_HEADER {
            return Err(Error::Input(format!("unexpected trace header {:?}", headers)));
        }
        let mut trace: Option<FrequencyTrace> = None;
        for rec in rd.records() {
            let rec = rec?;
            let n: u64 = rec[0].parse().map_err(|_| Error::Input(format!("bad n {:?}", &rec[0])))?;
            let (value, exact) = if rec[1].contains('/') {
                let f: Freq = rec[1].parse()?;
                (f.value(), Some(f))
            } else {
                (rec[1].parse().map_err(|_| Error::Input(format!("bad value {:?}", &rec[1])))?, None)
            };
            let t = trace.get_or_insert_with(|| FrequencyTrace::new(&rec[2], &rec[3]));
            t.push(n, value, exact)?;
        }
        trace.ok_or_else(|| Error::Input("empty trace".into()))
    }
}

/// `first, ceil(gamma*first), ...` up to and including `last`.
pub fn geometric_horizons(first: u64, last: u64, gamma: f64) -> Vec<u64> {
    let mut out = Vec::new();
    if last == 0 {
        return out;
    }
    let mut n = first.max(1);
    while n < last {
        out.push(n);
        let next = (n as f64 * gamma).ceil() as u64;
        n = next.max(n + 1);
    }
    out.push(last);
    out
}

/// Visit-frequency trace of a cylinder union at the given horizons.
pub fn trace_visit_frequency(
    orbit: &[Symbol],
    targets: &[CylinderSpec],
    horizons: &[u64],
    orbit_id: &str,
) -> Result<FrequencyTrace> {
    let depth = targets.iter().map(|t| t.generation()).max().unwrap_or(0);
    let label = targets.iter().map(|t| t.to_string()).collect::<Vec<_>>().join("+");
    let mut trace = FrequencyTrace::new(if label.is_empty() { "empty".to_string() } else { label }, orbit_id);
    let Some(&max_n) = horizons.last() else { return Ok(trace) };
    require_prefix(orbit.len(), max_n, depth)?;
    let mut hits = 0u64;
    let mut next = horizons.iter().peekable();
    for j in 0..max_n as usize {
        if in_union(&orbit[j..], targets) {
            hits += 1;
        }
        let n = j as u64 + 1;
        while next.peek() == Some(&&n) {
            let f = Freq::new(hits, n)?;
            trace.push(n, f.value(), Some(f))?;
            next.next();
        }
    }
    Ok(trace)
}

/// Real-valued time average `(1/n) sum_{j<n} phi(shift^j x)` at the given
/// horizons.
pub fn time_average_trace(
    orbit: &[Symbol],
    observable: &dyn Observable,
    horizons: &[u64],
    orbit_id: &str,
) -> Result<FrequencyTrace> {
    let mut trace = FrequencyTrace::new(observable.describe(), orbit_id);
    let Some(&max_n) = horizons.last() else { return Ok(trace) };
    let depth = observable.depth();
    require_prefix(orbit.len(), max_n, depth)?;
    let mut sum = CompensatedSum::default();
    let mut next = horizons.iter().peekable();
    for j in 0..max_n as usize {
        sum.add(observable.eval(&orbit[j..j + depth]));
        let n = j as u64 + 1;
        while next.peek() == Some(&&n) {
            trace.push(n, sum.value() / n as f64, None)?;
            next.next();
        }
    }
    Ok(trace)
}

/// Tail sup/inf of a running average past a burn-in horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationReport {
    pub sup_tail: f64,
    pub inf_tail: f64,
    pub burn_in: u64,
    pub horizon: u64,
    pub amplitude: f64,
}

impl OscillationReport {
    pub fn from_values(values: impl IntoIterator<Item = f64>, burn_in: u64, horizon: u64) -> Result<Self> {
        let (mut sup, mut inf, mut any) = (f64::NEG_INFINITY, f64::INFINITY, false);
        for v in values {
            sup = sup.max(v);
            inf = inf.min(v);
            any = true;
        }
        if !any {
            return Err(Error::Precondition(format!("no samples at or beyond burn-in {burn_in}")));
        }
        Ok(OscillationReport { sup_tail: sup, inf_tail: inf, burn_in, horizon, amplitude: sup - inf })
    }
}

/// Sup and inf over the sampled points with `n >= burn_in`.
///
/// For a tail that decreases (increases) monotonically toward its limit,
/// `sup_tail` over-estimates the limsup (`inf_tail` under-estimates the
/// liminf).
pub fn running_extremes(trace: &FrequencyTrace, burn_in: u64) -> Result<OscillationReport> {
    let horizon = trace.last().map_or(0, |p| p.n);
    OscillationReport::from_values(
        trace.points.iter().filter(|p| p.n >= burn_in).map(|p| p.value),
        burn_in,
        horizon,
    )
}

/// A sequence `preperiod` followed by the periodic word repeated forever.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventuallyPeriodic {
    pub preperiod: Word,
    pub period: PeriodicWord,
}

impl EventuallyPeriodic {
    pub fn new(preperiod: Word, period: PeriodicWord) -> Self {
        EventuallyPeriodic { preperiod, period }
    }

    pub fn materialize(&self, len: usize) -> Vec<Symbol> {
        let q = self.preperiod.len();
        (0..len)
            .map(|i| if i < q { self.preperiod.0[i] } else { self.period.symbol_at(i - q) })
            .collect()
    }

    /// Limit frequency of a cylinder union: the fraction of points of the
    /// periodic orbit lying in it.
    pub fn limit_frequency(&self, targets: &[CylinderSpec]) -> Freq {
        let p = self.period.period();
        let depth = targets.iter().map(|t| t.generation()).max().unwrap_or(0);
        let hits = (0..p).filter(|&i| in_union(&self.period.window(i, depth).0, targets)).count();
        Freq::new(hits as u64, p as u64).expect("nonzero period")
    }
}

/// Average of `phi` over one period of `p`.
pub fn periodic_average(observable: &dyn Observable, p: &PeriodicWord) -> f64 {
    let depth = observable.depth();
    let mut sum = CompensatedSum::default();
    for i in 0..p.period() {
        sum.add(observable.eval(&p.window(i, depth).0));
    }
    sum.value() / p.period() as f64
}

/// True iff the averages of `phi` over all given periodic orbits agree
/// within `tol`.
pub fn is_periodically_trivial(observable: &dyn Observable, periodic: &[PeriodicWord], tol: f64) -> Result<bool> {
    if periodic.is_empty() {
        return Err(Error::Precondition("need at least one periodic orbit".into()));
    }
    let avgs: Vec<f64> = periodic.iter().map(|p| periodic_average(observable, p)).collect();
    let max = avgs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = avgs.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(max - min <= tol)
}

/// `(1/l) #{1 <= j <= l - h : a_j .. a_{j+h-1} = block}` where the sequence
/// is indexed from 1 (`a_1 = seq[0]`).
pub fn digit_block_frequency(seq: &[Symbol], block: &Word, ell: u64) -> Result<Freq> {
    let h = block.len() as u64;
    if ell < h || ell == 0 {
        return Err(Error::Precondition(format!("horizon {ell} is shorter than block length {h}")));
    }
    if (seq.len() as u64) < ell {
        return Err(Error::Precondition(format!("sequence of length {} is shorter than {ell}", seq.len())));
    }
    let hits = (1..=ell - h)
        .filter(|&j| {
            let s = j as usize - 1;
            seq[s..s + h as usize] == block.0[..]
        })
        .count() as u64;
    Freq::new(hits, ell)
}

/// Outcome of comparing the flow frequency of `A x I` with the discrete
/// frequency of `A` for a piecewise-constant roof.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuspensionReport {
    /// Fraction of `[0, T]` spent in `A x I`.
    pub lhs: f64,
    /// `(L / r1)` times the discrete frequency of `A` over the completed
    /// returns.
    pub rhs: f64,
    /// Slack `(L / r1) / (k + 1)` from the unfinished last return; always
    /// below `r1 / T`.
    pub edge: f64,
    pub completed_returns: u64,
    pub discrete_frequency: Freq,
    pub verdict: bool,
}

/// Suspension flow over the shift with roof `roof[x_0]`, interval
/// `I = [0, L)` at the bottom of each fiber, run for continuous time `T`.
pub fn suspension_frequency_bound(
    orbit: &[Symbol],
    target: &CylinderSpec,
    roof: &[f64],
    r0: f64,
    r1: f64,
    interval_mass: f64,
    horizon: f64,
) -> Result<SuspensionReport> {
    if !(r0 > 0.0 && r1 >= r0) {
        return Err(Error::Input(format!("roof bounds must satisfy 0 < r0 <= r1, got {r0}, {r1}")));
    }
    if let Some(r) = roof.iter().find(|&&r| !(r0..=r1).contains(&r)) {
        return Err(Error::Input(format!("roof value {r} outside [{r0}, {r1}]")));
    }
    if !(interval_mass > 0.0 && interval_mass <= r0) {
        return Err(Error::Input(format!("interval length {interval_mass} must lie in (0, r0]")));
    }
    if !(horizon > 0.0) {
        return Err(Error::Input("flow horizon must be positive".into()));
    }
    let depth = target.generation();
    let mut t = 0.0f64;
    let mut time_in = CompensatedSum::default();
    let (mut k, mut hits) = (0u64, 0u64);
    let mut j = 0usize;
    while t < horizon {
        if j + depth.max(1) > orbit.len() {
            return Err(Error::Precondition(format!("orbit too short to reach flow time {horizon}")));
        }
        let r = *roof
            .get(orbit[j] as usize)
            .ok_or_else(|| Error::Input(format!("no roof value for symbol {}", orbit[j])))?;
        let inside = target.contains(&orbit[j..]);
        if t + r <= horizon {
            if inside {
                time_in.add(interval_mass);
                hits += 1;
            }
            k += 1;
            t += r;
            j += 1;
        } else {
            if inside {
                time_in.add(interval_mass.min(horizon - t));
            }
            break;
        }
    }
    let lhs = time_in.value() / horizon;
    let discrete_frequency = if k == 0 { Freq::zero() } else { Freq::new(hits, k)? };
    let rhs = interval_mass / r1 * discrete_frequency.value();
    let edge = interval_mass / r1 / (k + 1) as f64;
    let verdict = lhs >= rhs - edge - 1e-12;
    Ok(SuspensionReport { lhs, rhs, edge, completed_returns: k, discrete_frequency, verdict })
}

/// Run-length encoded label stream `label^len label^len ...`.
///
/// Used for long region-labelled orbits whose runs are too long to
/// materialize; every time average is still the unit-step average of the
/// expanded stream.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelRuns {
    runs: Vec<(u32, u64)>,
    total: u64,
}

impl LabelRuns {
    pub fn new() -> Self {
        LabelRuns::default()
    }

    pub fn push(&mut self, label: u32, len: u64) -> Result<()> {
        if len == 0 {
            return Ok(());
        }
        self.total = self
            .total
            .checked_add(len)
            .ok_or_else(|| Error::Resource("label stream length overflows u64".into()))?;
        match self.runs.last_mut() {
            Some((l, n)) if *l == label => *n += len,
            _ => self.runs.push((label, len)),
        }
        Ok(())
    }

    pub fn runs(&self) -> &[(u32, u64)] {
        &self.runs
    }

    pub fn total_len(&self) -> u64 {
        self.total
    }

    /// Expands the stream; refuses anything longer than `cap` steps.
    pub fn materialize(&self, cap: u64) -> Result<Vec<Symbol>> {
        if self.total > cap {
            return Err(Error::Resource(format!("stream of {} steps exceeds cap {cap}", self.total)));
        }
        let mut out = Vec::with_capacity(self.total as usize);
        for &(l, n) in &self.runs {
            out.extend(std::iter::repeat_n(l, n as usize));
        }
        Ok(out)
    }

    /// Number of steps among the first `n` carrying a label in `labels`.
    pub fn count_prefix(&self, labels: &[u32], n: u64) -> u64 {
        let mut left = n;
        let mut count = 0;
        for &(l, len) in &self.runs {
            if left == 0 {
                break;
            }
            let take = len.min(left);
            if labels.contains(&l) {
                count += take;
            }
            left -= take;
        }
        count
    }

    /// Run end positions (cumulative lengths).
    pub fn boundaries(&self) -> Vec<u64> {
        let mut acc = 0;
        self.runs
            .iter()
            .map(|&(_, n)| {
                acc += n;
                acc
            })
            .collect()
    }

    /// Time averages of `phi(label)` at every horizon in `horizons`
    /// (sorted, each at most the total length).
    pub fn averages_at(&self, phi: &dyn Fn(u32) -> f64, horizons: &[u64]) -> Vec<(u64, f64)> {
        let mut out = Vec::with_capacity(horizons.len());
        let mut sum = CompensatedSum::default();
        let mut start = 0u64;
        let mut it = horizons.iter().peekable();
        for &(l, len) in &self.runs {
            let v = phi(l);
            let end = start + len;
            while let Some(&&h) = it.peek() {
                if h > end {
                    break;
                }
                if h >= 1 {
                    let partial = sum.value() + v * (h - start) as f64;
                    out.push((h, partial / h as f64));
                }
                it.next();
            }
            sum.add(v * len as f64);
            start = end;
        }
        out
    }

    /// Exact tail sup/inf of the running average of `phi(label)` over
    /// every step `n` in `[burn_in, total]`.
    ///
    /// Inside a run the average moves monotonically toward the run's value,
    /// so the extremes are attained at `burn_in` or at run ends.
    pub fn extremes(&self, phi: &dyn Fn(u32) -> f64, burn_in: u64) -> Result<OscillationReport> {
        let horizons = self.tail_horizons(burn_in)?;
        let values = self.averages_at(phi, &horizons);
        OscillationReport::from_values(values.into_iter().map(|(_, v)| v), burn_in, self.total)
    }

    /// `burn_in` plus all run ends past it.
    pub fn tail_horizons(&self, burn_in: u64) -> Result<Vec<u64>> {
        if burn_in > self.total {
            return Err(Error::Precondition(format!(
                "burn-in {burn_in} exceeds stream length {}",
                self.total
            )));
        }
        let start = burn_in.max(1);
        let mut hs = vec![start];
        hs.extend(self.boundaries().into_iter().filter(|&b| b > start));
        Ok(hs)
    }

    /// Trace of the running average at the union of `extra` horizons and
    /// all run ends.
    pub fn trace(&self, phi: &dyn Fn(u32) -> f64, extra: &[u64], target: &str, orbit_id: &str) -> Result<FrequencyTrace> {
        let mut hs: Vec<u64> = extra.iter().copied().filter(|&h| h >= 1 && h <= self.total).collect();
        hs.extend(self.boundaries());
        hs.sort_unstable();
        hs.dedup();
        let mut t = FrequencyTrace::new(target, orbit_id);
        for (n, v) in self.averages_at(phi, &hs) {
            t.push(n, v, None)?;
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::Tmc;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn cyl(s: &str) -> CylinderSpec {
        CylinderSpec::from_word(w(s))
    }

    fn alternating(n: usize) -> Vec<Symbol> {
        (0..n).map(|i| (i % 2) as Symbol).collect()
    }

    #[test]
    fn visit_frequency_examples() {
        let orbit = alternating(20);
        assert_eq!(visit_frequency(&orbit, &cyl("0"), 10).unwrap(), Freq::new(1, 2).unwrap());
        let zeros = vec![0; 50];
        assert_eq!(visit_frequency(&zeros, &cyl("1"), 40).unwrap().hits(), 0);
        assert_eq!(visit_frequency(&zeros, &CylinderSpec::whole_space(), 50).unwrap(), Freq::one());
        assert!(matches!(visit_frequency(&zeros, &cyl("00"), 50), Err(Error::Precondition(_))));
        assert!(visit_frequency(&zeros, &cyl("00"), 49).is_ok());
    }

    #[test]
    fn freq_formatting_and_order() {
        let f = Freq::new(6, 8).unwrap();
        assert_eq!(f.to_string(), "3/4");
        assert_eq!("3/4".parse::<Freq>().unwrap(), f);
        assert!(Freq::new(1, 3).unwrap() < Freq::new(1, 2).unwrap());
        assert!(f.at_least(3, 4) && f.at_most(3, 4) && !f.at_least(4, 5));
        assert!(Freq::new(3, 2).is_err());
        assert_eq!(serde_json::to_string(&f).unwrap(), "\"3/4\"");
    }

    #[test]
    fn extremes_examples() {
        let mut t = FrequencyTrace::new("x", "o");
        for n in 1..=10 {
            t.push(n, 0.5, None).unwrap();
        }
        let r = running_extremes(&t, 3).unwrap();
        assert_eq!(r.amplitude, 0.0);
        assert!(matches!(running_extremes(&t, 11), Err(Error::Precondition(_))));
        assert!(t.push(10, 0.5, None).is_err());
    }

    #[test]
    fn eventually_periodic_amplitude_bound() {
        // preperiod 7, period 3 ("001")
        let gm = Tmc::full_shift(2);
        let ep = EventuallyPeriodic::new(w("1111111"), PeriodicWord::new(w("001"), &gm).unwrap());
        let orbit = ep.materialize(5000);
        let hs = geometric_horizons(1, 4000, 1.1);
        let trace = trace_visit_frequency(&orbit, &[cyl("0")], &hs, "ep").unwrap();
        let burn = 200;
        let r = running_extremes(&trace, burn).unwrap();
        assert!(r.amplitude <= (7.0 + 3.0) / burn as f64);
        assert_eq!(ep.limit_frequency(&[cyl("0")]), Freq::new(2, 3).unwrap());
    }

    #[test]
    fn time_average_consistency() {
        let orbit: Vec<Symbol> = (0..500).map(|i| ((i * i + 3 * i) % 3 == 0) as Symbol).collect();
        let hs = geometric_horizons(1, 400, 1.1);
        let a = time_average_trace(&orbit, &CylinderIndicator(cyl("0")), &hs, "o").unwrap();
        let b = trace_visit_frequency(&orbit, &[cyl("0")], &hs, "o").unwrap();
        for (p, q) in a.points().iter().zip(b.points()) {
            assert_eq!(p.n, q.n);
            assert!((p.value - q.value).abs() < 1e-15);
        }
        let c = time_average_trace(&orbit, &ConstantObservable(0.25), &hs, "o").unwrap();
        assert!(c.points().iter().all(|p| (p.value - 0.25).abs() < 1e-15));
    }

    #[test]
    fn periodically_trivial_examples() {
        let full = Tmc::full_shift(2);
        let fixed = vec![PeriodicWord::new(w("0"), &full).unwrap(), PeriodicWord::new(w("1"), &full).unwrap()];
        assert!(is_periodically_trivial(&ConstantObservable(1.0), &fixed, 1e-12).unwrap());
        assert!(!is_periodically_trivial(&CylinderIndicator(cyl("0")), &fixed, 1e-12).unwrap());
        // phi(x) = x_0 - 1/2: averages -1/2 and 1/2
        let signed = SymbolFunction(vec![-0.5, 0.5]);
        assert!((periodic_average(&signed, &fixed[0]) + 0.5).abs() < 1e-15);
        assert!(!is_periodically_trivial(&signed, &fixed, 1e-12).unwrap());
        // a coboundary-like observable with equal averages on 01 and 0011
        let p2 = PeriodicWord::new(w("01"), &full).unwrap();
        let p4 = PeriodicWord::new(w("0011"), &full).unwrap();
        assert!(is_periodically_trivial(&CylinderIndicator(cyl("0")), &[p2, p4], 1e-12).unwrap());
        assert!(is_periodically_trivial(&ConstantObservable(1.0), &[], 0.0).is_err());
    }

    #[test]
    fn digit_block_examples() {
        let seq = alternating(100);
        assert_eq!(digit_block_frequency(&seq, &w("0"), 40).unwrap(), Freq::new(1, 2).unwrap());
        assert_eq!(digit_block_frequency(&seq, &w("00"), 40).unwrap().hits(), 0);
        assert!(digit_block_frequency(&seq, &w("000"), 2).is_err());
    }

    #[test]
    fn suspension_examples() {
        let orbit = alternating(1000);
        let target = cyl("0");
        let unit = suspension_frequency_bound(&orbit, &target, &[1.0, 1.0], 1.0, 1.0, 1.0, 500.0).unwrap();
        let disc = visit_frequency(&orbit, &target, 500).unwrap();
        assert_eq!(unit.lhs, disc.value());
        assert_eq!(unit.discrete_frequency, disc);
        assert!(unit.verdict);

        let two = suspension_frequency_bound(&orbit, &target, &[2.0, 2.0], 2.0, 2.0, 1.0, 600.0).unwrap();
        assert_eq!(two.completed_returns, 300);
        assert!((two.rhs - 0.5 * two.discrete_frequency.value()).abs() < 1e-15);
        assert!(two.verdict);
        assert!(two.edge <= 2.0 / 600.0);

        let fixed = vec![0; 100];
        let f = suspension_frequency_bound(&fixed, &target, &[1.5, 3.0], 1.0, 3.0, 1.0, 150.0).unwrap();
        assert!((f.lhs - 1.0 / 1.5).abs() < 1e-12);
        assert!(f.lhs >= f.rhs);

        assert!(matches!(
            suspension_frequency_bound(&orbit, &target, &[0.5, 1.0], 1.0, 2.0, 1.0, 10.0),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn label_runs_extremes_match_expanded_stream() {
        let mut runs = LabelRuns::new();
        for (l, n) in [(0u32, 3u64), (1, 5), (2, 1), (0, 9), (1, 20), (0, 2)] {
            runs.push(l, n).unwrap();
        }
        let stream = runs.materialize(1000).unwrap();
        let phi = |l: u32| if l == 0 { 1.0 } else { 0.0 };
        let burn = 4;
        let exact = runs.extremes(&phi, burn).unwrap();
        let mut sum = 0.0;
        let mut vals = Vec::new();
        for (j, &s) in stream.iter().enumerate() {
            sum += phi(s);
            let n = j as u64 + 1;
            if n >= burn {
                vals.push(sum / n as f64);
            }
        }
        let brute = OscillationReport::from_values(vals, burn, stream.len() as u64).unwrap();
        assert!((exact.sup_tail - brute.sup_tail).abs() < 1e-15);
        assert!((exact.inf_tail - brute.inf_tail).abs() < 1e-15);
        assert_eq!(runs.count_prefix(&[0], 10), 3 + 1);
        assert!(runs.materialize(10).is_err());
    }

    #[test]
    fn trace_csv_round_trip() {
        let orbit = alternating(64);
        let t = trace_visit_frequency(&orbit, &[cyl("01")], &geometric_horizons(1, 60, 1.5), "alt").unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("n,value,target,orbit_id\n"));
        assert_eq!(FrequencyTrace::read_csv(&buf[..]).unwrap(), t);
        assert!(FrequencyTrace::read_csv("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn geometric_horizons_cover_range() {
        let hs = geometric_horizons(1, 1000, 1.1);
        assert_eq!(hs[0], 1);
        assert_eq!(*hs.last().unwrap(), 1000);
        assert!(hs.windows(2).all(|w| w[0] < w[1] && (w[1] as f64) <= (w[0] as f64 * 1.1).ceil().max(w[0] as f64 + 1.0)));
    }
}
