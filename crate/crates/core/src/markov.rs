//! Finite-state Markov measures, their ergodic components, and Monte Carlo
//! checks of the ergodic decomposition and of physicality criteria.
//!
//! Sampling uses ChaCha8 seeded from a 64-bit seed; sample `i` of a run
//! draws from stream `i` of that seed, so every sample is reproducible on
//! its own.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eta::{frequencies_at, probability_verdict, AverageTrack, CylinderTrack, Verdict};
use crate::symbolic::{CylinderSpec, Symbol, Tmc, Word};

/// Identifier of the sampling generator, recorded in every report.
pub const PRNG_ID: &str = "chacha8-rand_chacha-0.9;stream=sample-index";

const STOCHASTIC_TOL: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-12;

pub type Matrix = Vec<Vec<f64>>;

fn check_stochastic(p: &Matrix) -> Result<usize> {
    let s = p.len();
    if s == 0 {
        return Err(Error::Input("empty transition matrix".into()));
    }
    for (i, row) in p.iter().enumerate() {
        if row.len() != s {
            return Err(Error::Input(format!("row {i} has length {}, expected {s}", row.len())));
        }
        if let Some(x) = row.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::Input(format!("row {i} has invalid entry {x}")));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::Input(format!("row {i} sums to {sum}")));
        }
    }
    Ok(s)
}

fn check_distribution(v: &[f64], s: usize) -> Result<()> {
    if v.len() != s {
        return Err(Error::Input(format!("distribution has length {}, expected {s}", v.len())));
    }
    if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || (v.iter().sum::<f64>() - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::Input("initial vector is not a probability vector".into()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MarkovJson", into = "MarkovJson")]
pub struct MarkovMeasure {
    transition: Matrix,
    initial: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MarkovJson {
    transition: Matrix,
    initial: Vec<f64>,
}

impl TryFrom<MarkovJson> for MarkovMeasure {
    type Error = Error;
    fn try_from(j: MarkovJson) -> Result<Self> {
        MarkovMeasure::new(j.transition, j.initial)
    }
}

impl From<MarkovMeasure> for MarkovJson {
    fn from(m: MarkovMeasure) -> Self {
        MarkovJson { transition: m.transition, initial: m.initial }
    }
}

impl MarkovMeasure {
    pub fn new(transition: Matrix, initial: Vec<f64>) -> Result<Self> {
        let s = check_stochastic(&transition)?;
        check_distribution(&initial, s)?;
        Ok(MarkovMeasure { transition, initial })
    }

    /// The chain started from its stationary distribution.
    pub fn stationary(transition: Matrix) -> Result<Self> {
        let pi = stationary_distribution(&transition)?;
        MarkovMeasure::new(transition, pi)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn transition(&self) -> &Matrix {
        &self.transition
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn states(&self) -> usize {
        self.transition.len()
    }

    /// True iff every positive transition is allowed by `tmc`.
    pub fn respects(&self, tmc: &Tmc) -> bool {
        tmc.alphabet_size() == self.states()
            && self.transition.iter().enumerate().all(|(i, row)| {
                row.iter().enumerate().all(|(j, &p)| p == 0.0 || tmc.allows(i as Symbol, j as Symbol))
            })
    }

    /// `mu([w])` for the chain started from `initial`.
    pub fn cylinder_measure(&self, w: &Word) -> f64 {
        cylinder_measure(&self.transition, &self.initial, w)
    }
}

/// `start[w_0] * prod P[w_i][w_{i+1}]`; the empty word has measure 1.
pub fn cylinder_measure(p: &Matrix, start: &[f64], w: &Word) -> f64 {
    let s = w.symbols();
    let Some(&first) = s.first() else { return 1.0 };
    let (first, n) = (first as usize, p.len());
    if first >= n || s.iter().any(|&x| x as usize >= n) {
        return 0.0;
    }
    s.windows(2).fold(start[first], |acc, e| acc * p[e[0] as usize][e[1] as usize])
}

fn to_dmatrix(p: &Matrix) -> DMatrix<f64> {
    let s = p.len();
    DMatrix::from_fn(s, s, |i, j| p[i][j])
}

/// Strongly connected components of the support graph that no positive
/// transition leaves, each sorted.
fn recurrent_classes(p: &Matrix) -> Vec<Vec<usize>> {
    let s = p.len();
    let mut g = DiGraph::<usize, ()>::with_capacity(s, s * s);
    let nodes: Vec<_> = (0..s).map(|i| g.add_node(i)).collect();
    for i in 0..s {
        for j in 0..s {
            if p[i][j] > 0.0 {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    let mut classes: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|n| g[n]).collect();
            v.sort_unstable();
            v
        })
        .filter(|c| c.iter().all(|&i| (0..s).all(|j| p[i][j] == 0.0 || c.binary_search(&j).is_ok())))
        .collect();
    classes.sort();
    classes
}

/// Solves `pi P = pi`, `sum pi = 1` on a chain with a single recurrent
/// class; transient states get mass 0.
pub fn stationary_distribution(p: &Matrix) -> Result<Vec<f64>> {
    let s = check_stochastic(p)?;
    let classes = recurrent_classes(p);
    if classes.len() != 1 {
        return Err(Error::Structural(format!(
            "chain has {} recurrent classes; split it with ergodic_components",
            classes.len()
        )));
    }
    let pm = to_dmatrix(p);
    let mut a = pm.transpose() - DMatrix::identity(s, s);
    for j in 0..s {
        a[(s - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(s);
    b[s - 1] = 1.0;
    let lu = a.clone().lu();
    let mut x = lu.solve(&b).ok_or_else(|| Error::Structural("stationary system is singular".into()))?;
    for _ in 0..3 {
        let r = &b - &a * &x;
        if let Some(dx) = lu.solve(&r) {
            x += dx;
        }
    }
    let mut pi: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= total);
    let residual = stationary_residual(p, &pi);
    if residual > RESIDUAL_TOL {
        return Err(Error::Resource(format!("stationary residual {residual:e} above {RESIDUAL_TOL:e}")));
    }
    Ok(pi)
}

/// `max_j |(pi P)_j - pi_j|`.
pub fn stationary_residual(p: &Matrix, pi: &[f64]) -> f64 {
    (0..p.len())
        .map(|j| ((0..p.len()).map(|i| pi[i] * p[i][j]).sum::<f64>() - pi[j]).abs())
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErgodicComponent {
    pub states: Vec<usize>,
    /// Stationary vector on the full state space, zero off `states`.
    pub stationary: Vec<f64>,
}

fn restrict(p: &Matrix, states: &[usize]) -> Matrix {
    states.iter().map(|&i| states.iter().map(|&j| p[i][j]).collect()).collect()
}

pub fn ergodic_components(p: &Matrix) -> Result<Vec<ErgodicComponent>> {
    let s = check_stochastic(p)?;
    recurrent_classes(p)
        .into_iter()
        .map(|states| {
            let local = stationary_distribution(&restrict(p, &states))?;
            let mut stationary = vec![0.0; s];
            for (k, &i) in states.iter().enumerate() {
                stationary[i] = local[k];
            }
            Ok(ErgodicComponent { states, stationary })
        })
        .collect()
}

/// `absorb[i][c]`: probability that the chain from state `i` ends in
/// component `c`.
pub fn absorption_probabilities(p: &Matrix, components: &[ErgodicComponent]) -> Result<Vec<Vec<f64>>> {
    let s = check_stochastic(p)?;
    let owner: Vec<Option<usize>> =
        (0..s).map(|i| components.iter().position(|c| c.states.contains(&i))).collect();
    let transient: Vec<usize> = (0..s).filter(|&i| owner[i].is_none()).collect();
    let mut absorb = vec![vec![0.0; components.len()]; s];
    for i in 0..s {
        if let Some(c) = owner[i] {
            absorb[i][c] = 1.0;
        }
    }
    if transient.is_empty() {
        return Ok(absorb);
    }
    let t = transient.len();
    let iq = DMatrix::from_fn(t, t, |a, b| {
        (if a == b { 1.0 } else { 0.0 }) - p[transient[a]][transient[b]]
    });
    let r = DMatrix::from_fn(t, components.len(), |a, c| {
        components[c].states.iter().map(|&j| p[transient[a]][j]).sum()
    });
    let b = iq
        .lu()
        .solve(&r)
        .ok_or_else(|| Error::Structural("transient block is singular".into()))?;
    for (a, &i) in transient.iter().enumerate() {
        for c in 0..components.len() {
            absorb[i][c] = b[(a, c)];
        }
    }
    Ok(absorb)
}

/// Length-`n` path of the chain; sample `stream` of `seed`.
pub fn sample_orbit(m: &MarkovMeasure, seed: u64, stream: u64, n: usize) -> Vec<Symbol> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    sample_with(&m.transition, &m.initial, &mut rng, n)
}

fn draw(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

fn sample_with(p: &Matrix, start: &[f64], rng: &mut ChaCha8Rng, n: usize) -> Vec<Symbol> {
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    let mut x = draw(start, rng);
    out.push(x as Symbol);
    for _ in 1..n {
        x = draw(&p[x], rng);
        out.push(x as Symbol);
    }
    out
}

/// Asymptotic variance of the visit count of `[w]` under the stationary
/// chain: `lim Var(S_n) / n`.
///
/// Uses the fundamental matrix `Z = (I - P + 1 pi)^-1` for lags at least
/// `|w|` and exact overlap probabilities for shorter lags.
pub fn asymptotic_variance(p: &Matrix, pi: &[f64], w: &Word) -> Result<f64> {
    let s = check_stochastic(p)?;
    let m = w.len();
    if m == 0 {
        return Ok(0.0);
    }
    let mu = cylinder_measure(p, pi, w);
    if mu == 0.0 {
        return Ok(0.0);
    }
    let sym = w.symbols();
    let mut var = mu * (1.0 - mu);
    for k in 1..m {
        let overlap = sym[k..] == sym[..m - k];
        let joint = if overlap {
            let mut u = sym.to_vec();
            u.extend_from_slice(&sym[m - k..]);
            cylinder_measure(p, pi, &Word(u))
        } else {
            0.0
        };
        var += 2.0 * (joint - mu * mu);
    }
    let pm = to_dmatrix(p);
    let one_pi = DMatrix::from_fn(s, s, |_, j| pi[j]);
    let z = (DMatrix::identity(s, s) - pm + one_pi)
        .try_inverse()
        .ok_or_else(|| Error::Structural("fundamental matrix is singular".into()))?;
    let (l, f) = (sym[m - 1] as usize, sym[0] as usize);
    let delta = if l == f { 1.0 } else { 0.0 };
    var += 2.0 * mu * mu / pi[f] * (z[(l, f)] - delta);
    Ok(var.max(0.0))
}

/// Spectral gap `1 - max |lambda|` over eigenvalues other than 1.
fn spectral_gap(p: &Matrix) -> f64 {
    let mut mods: Vec<f64> = to_dmatrix(p).complex_eigenvalues().iter().map(|z| z.norm()).collect();
    mods.sort_by(|a, b| b.total_cmp(a));
    1.0 - mods.get(1).copied().unwrap_or(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub states: Vec<usize>,
    pub weight: f64,
}

/// Convex combination of the ergodic components of one chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MixtureJson", into = "MixtureJson")]
pub struct MixtureSpec {
    transition: Matrix,
    components: Vec<MixtureComponent>,
    stationary: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct MixtureJson {
    transition: Matrix,
    components: Vec<MixtureComponent>,
}

impl TryFrom<MixtureJson> for MixtureSpec {
    type Error = Error;
    fn try_from(j: MixtureJson) -> Result<Self> {
        MixtureSpec::new(j.transition, j.components)
    }
}

impl From<MixtureSpec> for MixtureJson {
    fn from(m: MixtureSpec) -> Self {
        MixtureJson { transition: m.transition, components: m.components }
    }
}

impl MixtureSpec {
    /// Every component must be a recurrent class of `transition`; weights
    /// sum to 1.
    pub fn new(transition: Matrix, components: Vec<MixtureComponent>) -> Result<Self> {
        check_stochastic(&transition)?;
        if components.is_empty() {
            return Err(Error::Input("mixture needs at least one component".into()));
        }
        let classes = ergodic_components(&transition)?;
        let mut stationary = Vec::with_capacity(components.len());
        let mut used = vec![false; transition.len()];
        for c in &components {
            let mut states = c.states.clone();
            states.sort_unstable();
            let class = classes
                .iter()
                .find(|k| k.states == states)
                .ok_or_else(|| Error::Structural(format!("states {:?} are not a recurrent class", c.states)))?;
            for &i in &states {
                if std::mem::replace(&mut used[i], true) {
                    return Err(Error::Structural(format!("state {i} appears in two components")));
                }
            }
            if !(c.weight.is_finite() && c.weight >= 0.0) {
                return Err(Error::Input(format!("invalid weight {}", c.weight)));
            }
            stationary.push(class.stationary.clone());
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::Input(format!("weights sum to {total}")));
        }
        Ok(MixtureSpec { transition, components, stationary })
    }

    /// Block-diagonal chain from irreducible blocks and weights.
    pub fn from_blocks(blocks: &[(Matrix, f64)]) -> Result<Self> {
        let s: usize = blocks.iter().map(|(b, _)| b.len()).sum();
        let mut transition = vec![vec![0.0; s]; s];
        let mut components = Vec::with_capacity(blocks.len());
        let mut off = 0;
        for (b, w) in blocks {
            check_stochastic(b)?;
            for (i, row) in b.iter().enumerate() {
                transition[off + i][off..off + b.len()].copy_from_slice(row);
            }
            components.push(MixtureComponent { states: (off..off + b.len()).collect(), weight: *w });
            off += b.len();
        }
        MixtureSpec::new(transition, components)
    }

    /// The single recurrent class of an ergodic chain with weight 1.
    pub fn ergodic(transition: Matrix) -> Result<Self> {
        let classes = ergodic_components(&transition)?;
        if classes.len() != 1 {
            return Err(Error::Structural(format!("chain has {} recurrent classes", classes.len())));
        }
        let states = classes[0].states.clone();
        MixtureSpec::new(transition, vec![MixtureComponent { states, weight: 1.0 }])
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn transition(&self) -> &Matrix {
        &self.transition
    }

    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }

    pub fn component_stationary(&self, c: usize) -> &[f64] {
        &self.stationary[c]
    }

    pub fn component_measure(&self, c: usize, w: &Word) -> f64 {
        cylinder_measure(&self.transition, &self.stationary[c], w)
    }

    pub fn mixture_measure(&self, w: &Word) -> f64 {
        self.components.iter().enumerate().map(|(c, k)| k.weight * self.component_measure(c, w)).sum()
    }

    /// Draws a component by weight, then a stationary path in it.
    pub fn sample(&self, seed: u64, stream: u64, n: usize) -> (usize, Vec<Symbol>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let weights: Vec<f64> = self.components.iter().map(|c| c.weight).collect();
        let c = draw(&weights, &mut rng);
        (c, sample_with(&self.transition, &self.stationary[c], &mut rng, n))
    }

    fn component_sigma(&self, c: usize, w: &Word, horizon: u64) -> Result<f64> {
        let states = &self.components[c].states;
        let local = restrict(&self.transition, states);
        let pi: Vec<f64> = states.iter().map(|&i| self.stationary[c][i]).collect();
        let Some(lw) = w.symbols().iter().map(|&x| states.iter().position(|&i| i == x as usize)).collect::<Option<Vec<_>>>()
        else {
            return Ok(0.0);
        };
        let lw = Word(lw.into_iter().map(|i| i as Symbol).collect());
        Ok((asymptotic_variance(&local, &pi, &lw)? / horizon as f64).sqrt())
    }

    fn min_gap(&self) -> f64 {
        self.components
            .iter()
            .map(|c| spectral_gap(&restrict(&self.transition, &c.states)))
            .fold(1.0, f64::min)
    }
}

/// Chains whose two classes have stationary vectors `(1 - t, t)` and
/// `(t, 1 - t)`, mixed with equal weights.
pub fn two_class_family(t: f64) -> Result<MixtureSpec> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Input(format!("parameter {t} outside (0, 1)")));
    }
    MixtureSpec::from_blocks(&[
        (vec![vec![1.0 - t, t], vec![1.0 - t, t]], 0.5),
        (vec![vec![t, 1.0 - t], vec![t, 1.0 - t]], 0.5),
    ])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylinderRow {
    pub cylinder: String,
    pub mixture_measure: f64,
    pub sample_mean: f64,
    pub sigma: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub stream: u64,
    pub component: usize,
    pub eta_hat: Vec<f64>,
    pub max_z: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub prng: String,
    pub seed: u64,
    pub horizon: u64,
    pub tol_sigma: f64,
    pub cylinders: Vec<CylinderRow>,
    pub samples: Vec<SampleRow>,
    pub sample_pass_fraction: f64,
    pub mixing_warning: bool,
}

/// Samples points of the mixture, measures cylinder frequencies up to
/// `horizon`, and compares them with the component of each sample and,
/// on average, with the mixture.
pub fn decomposition_check(
    mix: &MixtureSpec,
    samples: usize,
    horizon: u64,
    cylinders: &[CylinderSpec],
    tol_sigma: f64,
    seed: u64,
) -> Result<DecompositionReport> {
    if samples == 0 || horizon == 0 {
        return Err(Error::Input("need at least one sample and a positive horizon".into()));
    }
    let depth = cylinders.iter().map(|c| c.generation()).max().unwrap_or(1).max(1);
    let len = (horizon as usize) + depth - 1;
    let k = mix.components.len();
    let mut sigma = vec![vec![0.0; cylinders.len()]; k];
    for (c, row) in sigma.iter_mut().enumerate() {
        for (j, cyl) in cylinders.iter().enumerate() {
            row[j] = mix.component_sigma(c, &cyl.base, horizon)?;
        }
    }
    let mut rows = Vec::with_capacity(samples);
    let mut sums = vec![0.0; cylinders.len()];
    for i in 0..samples as u64 {
        let (c, orbit) = mix.sample(seed, i, len);
        let mut eta_hat = Vec::with_capacity(cylinders.len());
        let mut max_z: f64 = 0.0;
        for (j, cyl) in cylinders.iter().enumerate() {
            let f = frequencies_at(&orbit, std::slice::from_ref(cyl), &[horizon])?[0].value();
            let exact = mix.component_measure(c, &cyl.base);
            let dev = (f - exact).abs();
            let z = if sigma[c][j] > 0.0 {
                dev / sigma[c][j]
            } else if dev == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            max_z = max_z.max(z);
            sums[j] += f;
            eta_hat.push(f);
        }
        rows.push(SampleRow { stream: i, component: c, eta_hat, max_z, ok: max_z <= tol_sigma });
    }
    let n = samples as f64;
    let cyl_rows = cylinders
        .iter()
        .enumerate()
        .map(|(j, cyl)| {
            let mu = mix.mixture_measure(&cyl.base);
            let second: f64 = (0..k)
                .map(|c| {
                    let m = mix.component_measure(c, &cyl.base);
                    mix.components[c].weight * (m * m + sigma[c][j] * sigma[c][j])
                })
                .sum();
            let sd = ((second - mu * mu).max(0.0) / n).sqrt();
            let mean = sums[j] / n;
            let ok = (mean - mu).abs() <= tol_sigma * sd + 1e-12;
            CylinderRow { cylinder: cyl.to_string(), mixture_measure: mu, sample_mean: mean, sigma: sd, ok }
        })
        .collect();
    let pass = rows.iter().filter(|r| r.ok).count() as f64 / n;
    Ok(DecompositionReport {
        prng: PRNG_ID.into(),
        seed,
        horizon,
        tol_sigma,
        cylinders: cyl_rows,
        samples: rows,
        sample_pass_fraction: pass,
        mixing_warning: (horizon as f64) * mix.min_gap() < 1000.0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalityReport {
    pub prng: String,
    pub seed: u64,
    pub samples: usize,
    pub horizon: u64,
    pub fraction_convergent: f64,
    pub pairwise_agreement: bool,
    pub max_disagreement: f64,
    /// Some positive-measure set of points has convergent averages.
    pub generalized_physical: bool,
    /// Additionally all those points share the same limit.
    pub physical: bool,
}

/// Tests convergence of the cylinder averages of sampled points past
/// `horizon / 10` and whether the convergent samples agree within `tol`.
pub fn physicality_check(
    mix: &MixtureSpec,
    samples: usize,
    horizon: u64,
    cylinders: &[CylinderSpec],
    tol: f64,
    seed: u64,
) -> Result<PhysicalityReport> {
    if samples == 0 || horizon < 20 || cylinders.is_empty() {
        return Err(Error::Input("need samples, cylinders and a horizon of at least 20".into()));
    }
    let depth = cylinders.iter().map(|c| c.generation()).max().unwrap_or(1).max(1);
    let len = horizon as usize + depth - 1;
    let mut convergent: Vec<Vec<f64>> = Vec::new();
    for i in 0..samples as u64 {
        let (_, orbit) = mix.sample(seed, i, len);
        let tracks: Vec<CylinderTrack> =
            cylinders.iter().map(|c| CylinderTrack { orbit: &orbit, targets: vec![c.clone()] }).collect();
        let refs: Vec<&dyn AverageTrack> = tracks.iter().map(|t| t as &dyn AverageTrack).collect();
        if probability_verdict(&refs, horizon / 10, horizon, tol) == Verdict::Probability {
            let eta: Result<Vec<f64>> = cylinders
                .iter()
                .map(|c| Ok(frequencies_at(&orbit, std::slice::from_ref(c), &[horizon])?[0].value()))
                .collect();
            convergent.push(eta?);
        }
    }
    let mut max_disagreement: f64 = 0.0;
    for a in &convergent {
        for b in &convergent {
            for (x, y) in a.iter().zip(b) {
                max_disagreement = max_disagreement.max((x - y).abs());
            }
        }
    }
    let fraction_convergent = convergent.len() as f64 / samples as f64;
    let pairwise_agreement = max_disagreement <= tol;
    let generalized_physical = fraction_convergent > 0.0;
    Ok(PhysicalityReport {
        prng: PRNG_ID.into(),
        seed,
        samples,
        horizon,
        fraction_convergent,
        pairwise_agreement,
        max_disagreement,
        generalized_physical,
        physical: generalized_physical && pairwise_agreement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::{admissible_words, is_admissible};

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn stationary_examples() {
        let pi = stationary_distribution(&vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!(close(&pi, &[0.5, 0.5], 1e-14));
        let pi = stationary_distribution(&vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(close(&pi, &[0.5, 0.5], 1e-14));
        let p = vec![vec![0.75, 0.25], vec![0.5, 0.5]];
        let pi = stationary_distribution(&p).unwrap();
        assert!(close(&pi, &[2.0 / 3.0, 1.0 / 3.0], 1e-14));
        assert!(stationary_residual(&p, &pi) <= 1e-12);
        let two = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(matches!(stationary_distribution(&two), Err(Error::Structural(_))));
        assert!(matches!(stationary_distribution(&vec![vec![0.5, 0.4], vec![0.5, 0.5]]), Err(Error::Input(_))));
    }

    #[test]
    fn component_examples() {
        let block = vec![
            vec![0.5, 0.5, 0.0, 0.0],
            vec![0.5, 0.5, 0.0, 0.0],
            vec![0.0, 0.0, 0.2, 0.8],
            vec![0.0, 0.0, 0.4, 0.6],
        ];
        let cs = ergodic_components(&block).unwrap();
        assert_eq!(cs.len(), 2);
        assert_eq!(cs[1].states, vec![2, 3]);
        assert!(close(&cs[1].stationary, &[0.0, 0.0, 1.0 / 3.0, 2.0 / 3.0], 1e-14));
        assert_eq!(ergodic_components(&vec![vec![0.3, 0.7], vec![1.0, 0.0]]).unwrap().len(), 1);
        // state 0 is transient and feeds the absorbing states 1 and 2
        let feed = vec![vec![0.2, 0.3, 0.5], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let cs = ergodic_components(&feed).unwrap();
        assert_eq!(cs.iter().map(|c| c.states.clone()).collect::<Vec<_>>(), vec![vec![1], vec![2]]);
        let ab = absorption_probabilities(&feed, &cs).unwrap();
        assert!(close(&ab[0], &[0.375, 0.625], 1e-14));
    }

    #[test]
    fn sampling_contract() {
        let id = MarkovMeasure::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.0, 0.0]).unwrap();
        assert!(sample_orbit(&id, 7, 0, 50).iter().all(|&x| x == 0));
        let m = MarkovMeasure::stationary(vec![vec![0.9, 0.1, 0.0], vec![0.0, 0.5, 0.5], vec![0.3, 0.0, 0.7]]).unwrap();
        let a = sample_orbit(&m, 42, 3, 1000);
        assert_eq!(a, sample_orbit(&m, 42, 3, 1000));
        assert_ne!(a, sample_orbit(&m, 42, 4, 1000));
        let host = Tmc::new(vec![vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 1]]).unwrap();
        assert!(m.respects(&host));
        assert!(is_admissible(&Word(a), &host).unwrap());
    }

    #[test]
    fn transition_counts_within_bands() {
        let p = vec![vec![0.9, 0.1], vec![0.3, 0.7]];
        let m = MarkovMeasure::stationary(p.clone()).unwrap();
        let path = sample_orbit(&m, 2024, 0, 1_000_000);
        let mut counts = [[0u64; 2]; 2];
        for e in path.windows(2) {
            counts[e[0] as usize][e[1] as usize] += 1;
        }
        for i in 0..2 {
            let n = (counts[i][0] + counts[i][1]) as f64;
            for j in 0..2 {
                let phat = counts[i][j] as f64 / n;
                let se = (p[i][j] * (1.0 - p[i][j]) / n).sqrt();
                assert!((phat - p[i][j]).abs() <= 5.0 * se, "{i}{j}: {phat}");
            }
        }
    }

    #[test]
    fn variance_matches_iid_case() {
        // for an i.i.d. chain the cylinder [0] count is binomial
        let p = vec![vec![0.3, 0.7], vec![0.3, 0.7]];
        let v = asymptotic_variance(&p, &[0.3, 0.7], &Word(vec![0])).unwrap();
        assert!((v - 0.21).abs() < 1e-12);
        // [00] counts of an i.i.d. fair sequence: mu = 1/4, var = 1/4 - 1/16 + 2 (1/8 - 1/16) = 5/16
        let q = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        let v = asymptotic_variance(&q, &[0.5, 0.5], &Word(vec![0, 0])).unwrap();
        assert!((v - 5.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn variance_matches_simulation() {
        let p = vec![vec![0.8, 0.2], vec![0.4, 0.6]];
        let m = MarkovMeasure::stationary(p.clone()).unwrap();
        let w = Word(vec![0, 1]);
        let v = asymptotic_variance(&p, m.initial(), &w).unwrap();
        let n = 2000usize;
        let reps = 400;
        let freqs: Vec<f64> = (0..reps)
            .map(|r| {
                let path = sample_orbit(&m, 9, r, n + 1);
                path.windows(2).filter(|e| e == &[0, 1]).count() as f64
            })
            .collect();
        let mean = freqs.iter().sum::<f64>() / reps as f64;
        let var = freqs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64 / n as f64;
        assert!((var / v - 1.0).abs() < 0.25, "{var} vs {v}");
    }

    #[test]
    fn mixture_validation() {
        let mix = two_class_family(0.3).unwrap();
        assert_eq!(mix.components().len(), 2);
        assert!((mix.mixture_measure(&Word(vec![0])) - 0.35).abs() < 1e-14);
        let bad = MixtureSpec::new(
            mix.transition().clone(),
            vec![MixtureComponent { states: vec![0, 1], weight: 0.5 }, MixtureComponent { states: vec![1, 2], weight: 0.5 }],
        );
        assert!(matches!(bad, Err(Error::Structural(_))));
        let json = serde_json::to_string(&mix).unwrap();
        assert_eq!(MixtureSpec::from_json(&json).unwrap(), mix);
    }

    #[test]
    fn degenerate_weight_is_single_component() {
        let mix = MixtureSpec::from_blocks(&[
            (vec![vec![0.6, 0.4], vec![0.2, 0.8]], 1.0),
            (vec![vec![0.5, 0.5], vec![0.5, 0.5]], 0.0),
        ])
        .unwrap();
        let cyl: Vec<CylinderSpec> = admissible_words(&Tmc::full_shift(4), 1).into_iter().map(CylinderSpec::from_word).collect();
        let rep = decomposition_check(&mix, 20, 20_000, &cyl, 4.0, 1).unwrap();
        assert!(rep.samples.iter().all(|s| s.component == 0));
        assert!(rep.cylinders.iter().all(|c| c.ok));
    }

    #[test]
    fn physicality_examples() {
        let cyl: Vec<CylinderSpec> = (0..2).map(|s| CylinderSpec::from_word(Word(vec![s]))).collect();
        let erg = MixtureSpec::ergodic(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let r = physicality_check(&erg, 10, 50_000, &cyl, 0.05, 3).unwrap();
        assert!(r.generalized_physical && r.physical, "{r:?}");
        let cyl4: Vec<CylinderSpec> = (0..4).map(|s| CylinderSpec::from_word(Word(vec![s]))).collect();
        let r = physicality_check(&two_class_family(0.3).unwrap(), 10, 50_000, &cyl4, 0.05, 3).unwrap();
        assert!(r.generalized_physical && !r.physical, "{r:?}");
    }
}
