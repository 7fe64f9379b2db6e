//! Sojourn model of a planar flow with an attracting heteroclinic cycle
//! between two saddles `A` and `B`.
//!
//! Sojourn times near the saddles grow geometrically: after `a_k` steps
//! near `A` the orbit spends `b_k = lambda * a_k` near `B`, then
//! `a_{k+1} = sigma * b_k` near `A` again, with `c` transit steps in
//! between. Time averages of a continuous observable oscillate between two
//! closed-form convex combinations of its saddle values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frequency::{LabelRuns, OscillationReport};
use crate::symbolic::Symbol;

pub const LABEL_A: u32 = 0;
pub const LABEL_B: u32 = 1;
pub const LABEL_TRANSIT: u32 = 2;

/// Largest stream that [`SojournItinerary::label_stream`] expands.
pub const MATERIALIZE_CAP: u64 = 100_000_000;

/// Eigenvalues at the two saddles: `-alpha_minus < 0 < alpha_plus` at `A`
/// and `-beta_minus < 0 < beta_plus` at `B`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaddleParams {
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    pub beta_plus: f64,
    pub beta_minus: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedModuli {
    pub lambda: f64,
    pub sigma: f64,
    pub rho: f64,
}

impl DerivedModuli {
    pub fn from_ratios(lambda: f64, sigma: f64) -> Result<Self> {
        for (name, v) in [("lambda", lambda), ("sigma", sigma)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Input(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(DerivedModuli { lambda, sigma, rho: lambda * sigma })
    }

    pub fn attracting(&self) -> bool {
        self.rho > 1.0
    }

    fn require_attracting(&self) -> Result<()> {
        if !self.attracting() {
            return Err(Error::Domain(format!(
                "cycle is not attracting (lambda * sigma = {} <= 1)",
                self.rho
            )));
        }
        Ok(())
    }
}

/// `lambda = alpha_minus / beta_plus`, `sigma = beta_minus / alpha_plus`.
pub fn moduli(p: &SaddleParams) -> Result<DerivedModuli> {
    for (name, v) in [
        ("alpha_plus", p.alpha_plus),
        ("alpha_minus", p.alpha_minus),
        ("beta_plus", p.beta_plus),
        ("beta_minus", p.beta_minus),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Input(format!("{name} must be positive and finite, got {v}")));
        }
    }
    DerivedModuli::from_ratios(p.alpha_minus / p.beta_plus, p.beta_minus / p.alpha_plus)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormExtremes {
    pub limsup: f64,
    pub liminf: f64,
}

/// Limsup and liminf of the time averages of an observable with saddle
/// values `phi_a >= phi_b`. Equal values give convergence.
pub fn closed_form_extremes(m: &DerivedModuli, phi_a: f64, phi_b: f64) -> Result<ClosedFormExtremes> {
    m.require_attracting()?;
    if phi_a < phi_b {
        return Err(Error::Orientation(format!(
            "expected phi(A) >= phi(B), got {phi_a} < {phi_b}; swap the saddle labels"
        )));
    }
    let (l, s) = (m.lambda, m.sigma);
    Ok(ClosedFormExtremes {
        limsup: s / (1.0 + s) * phi_a + 1.0 / (1.0 + s) * phi_b,
        liminf: l / (1.0 + l) * phi_b + 1.0 / (1.0 + l) * phi_a,
    })
}

/// Masses of the two atoms of the upper measure and their sum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomMasses {
    pub mass_a: f64,
    pub mass_b: f64,
    pub total: f64,
}

pub fn eta_atoms(m: &DerivedModuli) -> Result<AtomMasses> {
    m.require_attracting()?;
    let (l, s) = (m.lambda, m.sigma);
    Ok(AtomMasses {
        mass_a: s / (1.0 + s),
        mass_b: l / (1.0 + l),
        total: (s + l + 2.0 * l * s) / (1.0 + s + l + l * s),
    })
}

/// Discretized itinerary `A^{a_0} T^c B^{b_0} T^c A^{a_1} ...` with
/// durations rounded up to whole steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SojournItinerary {
    pub moduli: DerivedModuli,
    pub a0: f64,
    pub transit: u64,
    pub a: Vec<u64>,
    pub b: Vec<u64>,
    pub runs: LabelRuns,
}

fn whole_steps(x: f64) -> Result<u64> {
    let c = x.ceil();
    if !(c.is_finite() && c < u64::MAX as f64) {
        return Err(Error::Resource(format!("sojourn of {x} steps does not fit in u64")));
    }
    Ok((c as u64).max(1))
}

/// Builds `cycles` full cycles starting near `A`.
pub fn generate_itinerary(m: &DerivedModuli, a0: f64, transit: u64, cycles: usize) -> Result<SojournItinerary> {
    if !(a0.is_finite() && a0 > 0.0) {
        return Err(Error::Input(format!("a0 must be positive, got {a0}")));
    }
    if cycles == 0 {
        return Err(Error::Input("need at least one cycle".into()));
    }
    let mut runs = LabelRuns::new();
    let (mut a, mut b) = (Vec::with_capacity(cycles), Vec::with_capacity(cycles));
    for k in 0..cycles {
        let ak = a0 * m.rho.powi(k as i32);
        let (da, db) = (whole_steps(ak)?, whole_steps(m.lambda * ak)?);
        runs.push(LABEL_A, da)?;
        runs.push(LABEL_TRANSIT, transit)?;
        runs.push(LABEL_B, db)?;
        runs.push(LABEL_TRANSIT, transit)?;
        a.push(da);
        b.push(db);
    }
    Ok(SojournItinerary { moduli: *m, a0, transit, a, b, runs })
}

impl SojournItinerary {
    pub fn total_len(&self) -> u64 {
        self.runs.total_len()
    }

    /// Step at which cycle `k` (0-based) begins.
    pub fn cycle_start(&self, k: usize) -> u64 {
        self.a.iter().zip(&self.b).take(k).map(|(a, b)| a + b + 2 * self.transit).sum()
    }

    pub fn label_stream(&self) -> Result<Vec<Symbol>> {
        self.runs.materialize(MATERIALIZE_CAP)
    }

    /// Average of `phi` over the last cycle, the limit of the time averages
    /// once sojourns stop growing.
    pub fn last_cycle_average(&self, phi_a: f64, phi_b: f64, phi_t: f64) -> f64 {
        let (a, b) = (*self.a.last().unwrap() as f64, *self.b.last().unwrap() as f64);
        let t = 2.0 * self.transit as f64;
        (a * phi_a + b * phi_b + t * phi_t) / (a + b + t)
    }
}

fn phi_of(phi_a: f64, phi_b: f64, phi_t: f64) -> impl Fn(u32) -> f64 {
    move |l| match l {
        LABEL_A => phi_a,
        LABEL_B => phi_b,
        _ => phi_t,
    }
}

/// Exact tail sup/inf of the running averages over `[burn_in, total]`.
pub fn empirical_extremes(
    it: &SojournItinerary,
    phi_a: f64,
    phi_b: f64,
    phi_t: f64,
    burn_in: u64,
) -> Result<OscillationReport> {
    it.runs.extremes(&phi_of(phi_a, phi_b, phi_t), burn_in)
}

/// Check of the standing hypothesis: frequency of time spent away from
/// both saddles, empirical atom masses, and their closed forms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub attracting: bool,
    pub heteroclinic_connection: bool,
    pub transit_frequency: f64,
    pub empirical_mass_a: f64,
    pub empirical_mass_b: f64,
    pub closed_form: Option<AtomMasses>,
    pub holds: bool,
}

pub fn hypothesis_report(it: &SojournItinerary, burn_in: u64, tol: f64) -> Result<HypothesisReport> {
    let n = it.total_len();
    let transit_frequency = it.runs.count_prefix(&[LABEL_TRANSIT], n) as f64 / n as f64;
    let ea = it.runs.extremes(&phi_of(1.0, 0.0, 0.0), burn_in)?.sup_tail;
    let eb = it.runs.extremes(&phi_of(0.0, 1.0, 0.0), burn_in)?.sup_tail;
    let attracting = it.moduli.attracting();
    let closed_form = if attracting { Some(eta_atoms(&it.moduli)?) } else { None };
    let holds = closed_form.is_some_and(|c| {
        transit_frequency <= tol && (ea - c.mass_a).abs() <= tol && (eb - c.mass_b).abs() <= tol
    });
    Ok(HypothesisReport {
        attracting,
        heteroclinic_connection: true,
        transit_frequency,
        empirical_mass_a: ea,
        empirical_mass_b: eb,
        closed_form,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(l: f64, s: f64) -> DerivedModuli {
        DerivedModuli::from_ratios(l, s).unwrap()
    }

    #[test]
    fn moduli_from_eigenvalues() {
        let p = SaddleParams { alpha_plus: 1.0, alpha_minus: 2.0, beta_plus: 1.0, beta_minus: 2.0 };
        let d = moduli(&p).unwrap();
        assert_eq!((d.lambda, d.sigma, d.rho), (2.0, 2.0, 4.0));
        assert!(moduli(&SaddleParams { alpha_plus: 0.0, ..p }).is_err());
    }

    #[test]
    fn symmetric_extremes() {
        let e = closed_form_extremes(&m(2.0, 2.0), 1.0, 0.0).unwrap();
        assert!((e.limsup - 2.0 / 3.0).abs() < 1e-15);
        assert!((e.liminf - 1.0 / 3.0).abs() < 1e-15);
        let a = eta_atoms(&m(2.0, 2.0)).unwrap();
        assert!((a.total - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn swapping_saddles_swaps_roles() {
        let (l, s) = (3.0, 1.5);
        let ab = eta_atoms(&m(l, s)).unwrap();
        let ba = eta_atoms(&m(s, l)).unwrap();
        assert!((ab.mass_a - ba.mass_b).abs() < 1e-15);
        assert!((ab.total - ba.total).abs() < 1e-15);
        let e = closed_form_extremes(&m(l, s), 1.0, 0.0).unwrap();
        let f = closed_form_extremes(&m(s, l), 1.0, 0.0).unwrap();
        assert!((e.limsup - (1.0 - f.liminf)).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(matches!(closed_form_extremes(&m(2.0, 2.0), 0.0, 1.0), Err(Error::Orientation(_))));
        assert!(matches!(eta_atoms(&m(0.5, 1.5)), Err(Error::Domain(_))));
        assert!(matches!(closed_form_extremes(&m(0.5, 1.5), 1.0, 0.0), Err(Error::Domain(_))));
        let e = closed_form_extremes(&m(2.0, 2.0), 0.4, 0.4).unwrap();
        assert_eq!((e.limsup, e.liminf), (0.4, 0.4));
    }

    #[test]
    fn itinerary_shape() {
        let it = generate_itinerary(&m(2.0, 2.0), 1.0, 1, 3).unwrap();
        assert_eq!(it.a, vec![1, 4, 16]);
        assert_eq!(it.b, vec![2, 8, 32]);
        assert_eq!(it.total_len(), 1 + 2 + 4 + 8 + 16 + 32 + 6);
        assert_eq!(it.cycle_start(1), 5);
        let s = it.label_stream().unwrap();
        assert_eq!(&s[..6], &[0, 2, 1, 1, 2, 0]);
    }

    #[test]
    fn empirical_matches_closed_form() {
        let d = m(2.0, 2.0);
        let it = generate_itinerary(&d, 10.0, 1, 25).unwrap();
        let rep = empirical_extremes(&it, 1.0, 0.0, 0.5, it.cycle_start(22)).unwrap();
        let cf = closed_form_extremes(&d, 1.0, 0.0).unwrap();
        assert!((rep.sup_tail - cf.limsup).abs() < 1e-6);
        assert!((rep.inf_tail - cf.liminf).abs() < 1e-6);
    }

    #[test]
    fn non_attracting_settles() {
        let d = m(0.5, 1.5);
        let it = generate_itinerary(&d, 50.0, 1, 400).unwrap();
        let rep = empirical_extremes(&it, 1.0, 0.0, 0.5, it.cycle_start(300)).unwrap();
        let lim = it.last_cycle_average(1.0, 0.0, 0.5);
        assert!(rep.amplitude < 0.05, "{rep:?}");
        assert!((rep.sup_tail - lim).abs() < 0.05);
        let h = hypothesis_report(&it, it.cycle_start(300), 1e-2).unwrap();
        assert!(!h.holds && h.closed_form.is_none());
    }

    #[test]
    fn hypothesis_holds_for_attracting_cycle() {
        let it = generate_itinerary(&m(3.0, 1.5), 10.0, 1, 25).unwrap();
        let h = hypothesis_report(&it, it.cycle_start(20), 1e-3).unwrap();
        assert!(h.holds, "{h:?}");
    }
}
