//! Randomized invariants across modules.

use num_bigint::BigUint;
use orbitmeter::bowen::{eta_atoms, DerivedModuli};
use orbitmeter::cesaro::{cesaro_means, hoelder_means};
use orbitmeter::eta::{nu_g, PremeasureTable};
use orbitmeter::frequency::{visit_frequency, visit_frequency_union};
use orbitmeter::markov::{sample_orbit, stationary_distribution, stationary_residual, MarkovMeasure};
use orbitmeter::orbit::{build_wild_prefix, kappa, GrowthMode, LengthSchedule};
use orbitmeter::symbolic::{
    enumerate_periodic_words, encode_base_b, is_admissible, minimal_period, subcylinders, CylinderSpec, Symbol, Tmc,
    Word,
};
use proptest::prelude::*;

fn word(max_sym: u32, len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Symbol>> {
    prop::collection::vec(0..max_sym, len)
}

proptest! {
    #[test]
    fn subcylinder_counts(s in 2usize..4, base in word(3, 0..3), extra in 0usize..3) {
        let base: Vec<Symbol> = base.into_iter().map(|x| x % s as u32).collect();
        let tmc = Tmc::full_shift(s);
        let cyl = CylinderSpec::new(Word(base.clone()), &tmc).unwrap();
        let g = base.len() + extra;
        let subs = subcylinders(&cyl, g, &tmc).unwrap();
        prop_assert_eq!(subs.len(), s.pow(extra as u32));
        prop_assert!(subs.iter().all(|c| c.base.symbols().starts_with(&base)));
    }

    #[test]
    fn base_b_is_monotone(a in word(3, 6..7), b in word(3, 6..7)) {
        let (x, y) = (encode_base_b(&a, 3).unwrap(), encode_base_b(&b, 3).unwrap());
        prop_assert_eq!(a.cmp(&b), x.value.partial_cmp(&y.value).unwrap());
    }

    #[test]
    fn minimal_period_counts_fixing_rotations(w in word(2, 1..13)) {
        let n = w.len();
        let fixing = (0..n).filter(|&r| (0..n).all(|i| w[(i + r) % n] == w[i])).count();
        prop_assert_eq!(minimal_period(&Word(w)).unwrap(), n / fixing);
    }

    #[test]
    fn enumerated_orbits_close_up(q in 1usize..9, golden in any::<bool>()) {
        let tmc = if golden { Tmc::golden_mean() } else { Tmc::full_shift(2) };
        for p in enumerate_periodic_words(&tmc, q, &Word::empty()).unwrap() {
            let mut twice = p.word().symbols().to_vec();
            twice.extend_from_slice(p.word().symbols());
            prop_assert!(is_admissible(&Word(twice), &tmc).unwrap());
            prop_assert_eq!(p.period(), q);
        }
    }

    #[test]
    fn union_is_subadditive(orbit in word(2, 40..120), a in word(2, 1..4), b in word(2, 1..4), n in 1u64..30) {
        let (ca, cb) = (CylinderSpec::from_word(Word(a)), CylinderSpec::from_word(Word(b)));
        let u = visit_frequency_union(&orbit, &[ca.clone(), cb.clone()], n).unwrap();
        let (fa, fb) = (visit_frequency(&orbit, &ca, n).unwrap(), visit_frequency(&orbit, &cb, n).unwrap());
        prop_assert!(u.hits() <= fa.hits() + fb.hits());
        if ca.is_disjoint_from(&cb) {
            prop_assert_eq!(u.hits(), fa.hits() + fb.hits());
        }
    }

    #[test]
    fn shift_drops_first_visit(orbit in word(3, 20..80), a in word(3, 1..3), n in 1u64..15) {
        let c = CylinderSpec::from_word(Word(a));
        let shifted = visit_frequency(&orbit[1..], &c, n).unwrap().hits();
        let longer = visit_frequency(&orbit, &c, n + 1).unwrap().hits();
        prop_assert_eq!(shifted + u64::from(c.contains(&orbit)), longer);
    }

    #[test]
    fn nu_g_is_monotone(orbit in word(2, 400..600), target in word(2, 1..3)) {
        let tmc = Tmc::full_shift(2);
        let t = CylinderSpec::from_word(Word(target));
        let mut prev = 0.0;
        for g in t.generation()..6 {
            let table = PremeasureTable::from_orbit(&orbit, &tmc, g, 20, 390).unwrap();
            let v = nu_g(&table, std::slice::from_ref(&t)).unwrap().value;
            prop_assert!(v + 1e-12 >= prev);
            prev = v;
        }
    }

    #[test]
    fn atom_total_identity(l in 0.1f64..5.0, s in 0.1f64..5.0) {
        let m = DerivedModuli::from_ratios(l, s).unwrap();
        match eta_atoms(&m) {
            Ok(a) => {
                let excess = (l * s - 1.0) / ((1.0 + l) * (1.0 + s));
                prop_assert!((a.total - 1.0 - excess).abs() < 1e-12);
                prop_assert!(a.total > 1.0);
                let swapped = eta_atoms(&DerivedModuli::from_ratios(s, l).unwrap()).unwrap();
                prop_assert!((swapped.total - a.total).abs() < 1e-12);
            }
            Err(_) => prop_assert!(l * s <= 1.0),
        }
    }

    #[test]
    fn cesaro_matches_integer_oracle(seq in prop::collection::vec(0u64..1000, 1..400), k in 0u32..4) {
        // S^k_n exactly in u128, divided by binom(n + k, k)
        let mut s: Vec<u128> = seq.iter().map(|&x| x as u128).collect();
        for _ in 0..k {
            let mut acc = 0u128;
            for v in s.iter_mut() {
                acc += *v;
                *v = acc;
            }
        }
        let means = cesaro_means(&seq.iter().map(|&x| x as f64).collect::<Vec<_>>(), k);
        for (n, (&exact, &m)) in s.iter().zip(&means).enumerate() {
            let binom = (1..=k as u128).fold(1u128, |acc, i| acc * (n as u128 + i) / i);
            let oracle = exact as f64 / binom as f64;
            prop_assert!((m - oracle).abs() <= 1e-9 * oracle.abs().max(1.0));
        }
        if k == 1 {
            let h = hoelder_means(&seq.iter().map(|&x| x as f64).collect::<Vec<_>>(), 1);
            for (a, b) in h.iter().zip(&means) {
                prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn stationary_residual_is_tiny(raw in prop::collection::vec(prop::collection::vec(0.01f64..1.0, 4), 4)) {
        let p: Vec<Vec<f64>> = raw.iter().map(|r| {
            let t: f64 = r.iter().sum();
            r.iter().map(|x| x / t).collect()
        }).collect();
        let pi = stationary_distribution(&p).unwrap();
        prop_assert!(stationary_residual(&p, &pi) <= 1e-12);
    }

    #[test]
    fn samples_respect_host(seed in any::<u64>(), a in 0.05f64..0.95) {
        let m = MarkovMeasure::stationary(vec![vec![1.0 - a, a], vec![1.0, 0.0]]).unwrap();
        let tmc = Tmc::golden_mean();
        prop_assert!(m.respects(&tmc));
        prop_assert!(is_admissible(&Word(sample_orbit(&m, seed, 0, 300)), &tmc).unwrap());
    }
}

#[test]
fn schedule_dominates_past_sum_in_every_mode() {
    for growth in [GrowthMode::Constant(2), GrowthMode::Constant(5), GrowthMode::PowersOfTen] {
        let mut sum = BigUint::from(0u32);
        let mut prev = BigUint::from(0u32);
        for n in 1..12 {
            let ell = orbitmeter::orbit::schedule_length(2, growth, n).unwrap();
            if n > 1 {
                assert!(ell >= &sum * 2u32);
                // under growth 2 the first gap is exactly N
                let first_gap_tight = n == 2 && growth == GrowthMode::Constant(2);
                assert!(first_gap_tight || &ell - &prev > BigUint::from(2u32));
                assert!(&ell - &prev >= BigUint::from(2u32));
            }
            sum += &ell;
            prev = ell;
        }
    }
}

#[test]
fn checkpoint_blocks_copy_their_orbit() {
    for tmc in [Tmc::full_shift(2), Tmc::golden_mean(), Tmc::full_shift(3)] {
        let n = orbitmeter::symbolic::aperiodicity_index(&tmc, tmc.wielandt_bound()).unwrap().unwrap() as u64;
        let s = LengthSchedule::new(n, GrowthMode::Constant(2)).unwrap();
        let z = build_wild_prefix(&tmc, &s, s.horizon_through(9).unwrap()).unwrap();
        assert!(is_admissible(&z.word, &tmc).unwrap());
        for cp in &z.checkpoints {
            assert_eq!(cp.kappa, kappa(cp.n).unwrap());
            let p = z.periodic_word(cp.p_index).unwrap();
            let block = &z.symbols()[cp.ell as usize..2 * cp.ell as usize];
            assert!(block.iter().enumerate().all(|(i, &x)| x == p.symbol_at(i)), "checkpoint {}", cp.n);
        }
    }
}
