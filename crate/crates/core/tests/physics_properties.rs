mod common;

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{analytic_stokes, random_state, random_unitary};
use qswitch::hardware::{compile_unitary, element_chain, lens_phase, prism, realized_with_errors};
use qswitch::matstack::ComplexMatrix;
use qswitch::processes::{
    born_probability, dephase_control, pauli_x, stokes_expectation, switch_process, white_noise_process,
    ChoiOperator, PureState, UnitaryGate, A_IN, A_OUT, B_IN, B_OUT, C_IN,
};
use qswitch::simulator::{
    control_x_expectation, run_experiment, simulate_pair, switch_output_state, NoiseModel,
};
use qswitch::witness::{optimize_witness, CausalWitness, GammaEntry};

fn ideal_switch() -> qswitch::processes::ProcessMatrix {
    switch_process(&PureState::zero(), &PureState::plus()).unwrap()
}

fn standard_pairs() -> Vec<(UnitaryGate, UnitaryGate)> {
    let gates = UnitaryGate::standard_set();
    gates
        .iter()
        .flat_map(|a| gates.iter().map(move |b| (a.clone(), b.clone())))
        .collect()
}

fn x_effects() -> (ComplexMatrix, ComplexMatrix) {
    let i = ComplexMatrix::identity(2);
    let x = pauli_x();
    ((&i + &x).scale(0.5), (&i - &x).scale(0.5))
}

#[test]
fn stokes_matches_analytic_oracle_on_all_pairs() {
    let w = ideal_switch();
    let psi = PureState::zero();
    for (a, b) in standard_pairs() {
        let s = stokes_expectation(&w, &a, &b).unwrap();
        let oracle = analytic_stokes(&a, &b, &psi);
        assert!((s - oracle).abs() < 1e-10, "{a} {b}: {s} vs {oracle}");
        let state = control_x_expectation(&switch_output_state(a.matrix(), b.matrix(), &psi), 1.0);
        assert!((state - oracle).abs() < 1e-10, "{a} {b}: {state} vs {oracle}");
    }
}

#[test]
fn born_rule_over_x_measurement_is_normalized() {
    let w = ideal_switch();
    let (plus, minus) = x_effects();
    let e_plus = ChoiOperator::of_effect(&plus, C_IN, "+").unwrap();
    let e_minus = ChoiOperator::of_effect(&minus, C_IN, "-").unwrap();
    for (a, b) in standard_pairs() {
        let ca = ChoiOperator::of_unitary(&a, A_IN, A_OUT).unwrap();
        let cb = ChoiOperator::of_unitary(&b, B_IN, B_OUT).unwrap();
        let p = born_probability(&[&ca, &cb, &e_plus], &w).unwrap();
        let m = born_probability(&[&ca, &cb, &e_minus], &w).unwrap();
        assert!((p + m - 1.0).abs() < 1e-12, "{a} {b}: {p} + {m}");
        assert!(p >= -1e-12 && m >= -1e-12);
        let s = stokes_expectation(&w, &a, &b).unwrap();
        assert!((p - m - s).abs() < 1e-12);
    }
}

#[test]
fn white_noise_gives_uniform_outcomes() {
    let w = white_noise_process();
    let (plus, _) = x_effects();
    let e = ChoiOperator::of_effect(&plus, C_IN, "+").unwrap();
    for (a, b) in standard_pairs() {
        let ca = ChoiOperator::of_unitary(&a, A_IN, A_OUT).unwrap();
        let cb = ChoiOperator::of_unitary(&b, B_IN, B_OUT).unwrap();
        assert!((born_probability(&[&ca, &cb, &e], &w).unwrap() - 0.5).abs() < 1e-12);
    }
}

#[test]
fn prism_and_lens_identities_on_a_grid() {
    let i = ComplexMatrix::identity(2);
    for k in -360..=360 {
        let r = prism(k as f64 * 0.25);
        assert!(r.hermitian_deviation() < 1e-15);
        assert!(r.unitarity_deviation() < 1e-14);
        assert!((&r.matmul(&r) - &i).max_abs() < 1e-14);
    }
    let c = lens_phase();
    let c4 = c.matmul(&c).matmul(&c).matmul(&c);
    assert!((&c4 - &i).max_abs() < 1e-15);
}

#[test]
fn realized_gate_is_lipschitz_in_prism_errors() {
    let bound = 4.0 * PI / 180.0;
    for gate in UnitaryGate::standard_set() {
        let recipe = compile_unitary(&gate).unwrap();
        let at = |d1: f64, d2: f64| realized_with_errors(&recipe, d1, d2).unwrap().matrix().clone();
        let grid: Vec<f64> = (-10..=10).map(|k| k as f64 * 0.5).collect();
        for &d1 in &grid {
            for &d2 in &grid {
                for (e1, e2) in [(0.5, 0.0), (0.0, 0.5), (0.5, 0.5), (0.5, -0.5)] {
                    let (n1, n2) = (d1 + e1, d2 + e2);
                    if n1.abs() > 5.0 || n2.abs() > 5.0 {
                        continue;
                    }
                    let diff = (&at(n1, n2) - &at(d1, d2)).frobenius_norm();
                    let step = (e1 * e1 + e2 * e2).sqrt();
                    assert!(diff <= bound * step + 1e-12, "{} at ({d1},{d2}) step ({e1},{e2}): {diff}", gate);
                }
            }
        }
    }
}

#[test]
fn shot_noise_spread_matches_binomial() {
    let shots = 1_000u64;
    for (a, b) in [("Z", "P"), ("I", "X"), ("X", "Y")] {
        let (a, b) = (UnitaryGate::named(a).unwrap(), UnitaryGate::named(b).unwrap());
        let estimates: Vec<f64> = (0..1000)
            .map(|seed| {
                let noise = NoiseModel {
                    visibility: 0.938,
                    angle_jitter_deg: 0.0,
                    shots_per_setting: shots,
                    rng_seed: seed,
                    analytic: false,
                };
                simulate_pair(&a, &b, &noise, 0).unwrap().estimate
            })
            .collect();
        let e = 0.938 * analytic_stokes(&a, &b, &PureState::zero());
        let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
        let var = estimates.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (estimates.len() - 1) as f64;
        let predicted = ((1.0 - e * e) / shots as f64).sqrt();
        let ratio = var.sqrt() / predicted;
        assert!((ratio - 1.0).abs() < 0.1, "{a} {b}: ratio {ratio}");
        assert!((mean - e).abs() < 4.0 * predicted / (estimates.len() as f64).sqrt());
    }
}

fn small_witness() -> CausalWitness {
    let entries = [("I", "X", 1.0), ("X", "Y", -1.0), ("Z", "Z", -0.5), ("P", "Q", 0.7)]
        .into_iter()
        .map(|(a, b, v)| GammaEntry::from((a.to_string(), b.to_string(), v)))
        .collect();
    CausalWitness::from_named(entries, 0.0).unwrap()
}

#[test]
fn witness_violation_shrinks_as_visibility_drops() {
    let witness = optimize_witness(&ideal_switch(), &UnitaryGate::standard_set()).unwrap();
    let mut previous = f64::NEG_INFINITY;
    for k in 0..=20 {
        let noise = NoiseModel {
            visibility: 1.0 - k as f64 * 0.05,
            angle_jitter_deg: 0.0,
            analytic: true,
            ..NoiseModel::default()
        };
        let v = run_experiment(&witness, &noise).unwrap().witness_estimate.value;
        assert!(v >= previous - 1e-12, "k={k}: {v} < {previous}");
        if k == 0 {
            assert!(v < 0.0);
        }
        previous = v;
    }
    assert!((previous - 1.0).abs() < 1e-12);
}

#[test]
fn identical_seeds_give_identical_results() {
    let witness = small_witness();
    let noise = NoiseModel {
        shots_per_setting: 5_000,
        rng_seed: 42,
        ..NoiseModel::default()
    };
    let a = serde_json::to_string(&run_experiment(&witness, &noise).unwrap()).unwrap();
    let b = serde_json::to_string(&run_experiment(&witness, &noise).unwrap()).unwrap();
    assert_eq!(a, b);
    let other = NoiseModel { rng_seed: 43, ..noise };
    let c = serde_json::to_string(&run_experiment(&witness, &other).unwrap()).unwrap();
    assert_ne!(a, c);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn switch_process_is_valid_for_any_states(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (target, control) = (random_state(&mut rng), random_state(&mut rng));
        let v = switch_process(&target, &control).unwrap().validity().unwrap();
        prop_assert!(v.psd && v.trace_ok);
        prop_assert!((v.trace - 4.0).abs() < 1e-10);
    }

    #[test]
    fn state_vector_and_process_agree_for_random_unitaries(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let target = random_state(&mut rng);
        let (a, b) = (random_unitary(&mut rng, "U"), random_unitary(&mut rng, "V"));
        let w = switch_process(&target, &PureState::plus()).unwrap();
        let from_w = stokes_expectation(&w, &a, &b).unwrap();
        let from_state = control_x_expectation(&switch_output_state(a.matrix(), b.matrix(), &target), 1.0);
        prop_assert!((from_w - from_state).abs() < 1e-10);
        prop_assert!((from_w - analytic_stokes(&a, &b, &target)).abs() < 1e-10);
    }

    #[test]
    fn stokes_is_linear_under_control_dephasing(seed in any::<u64>(), v in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = switch_process(&random_state(&mut rng), &PureState::plus()).unwrap();
        let (a, b) = (random_unitary(&mut rng, "U"), random_unitary(&mut rng, "V"));
        let mixed = stokes_expectation(&dephase_control(&w, v).unwrap(), &a, &b).unwrap();
        let full = stokes_expectation(&w, &a, &b).unwrap();
        let dephased = stokes_expectation(&dephase_control(&w, 0.0).unwrap(), &a, &b).unwrap();
        prop_assert!((mixed - (v * full + (1.0 - v) * dephased)).abs() < 1e-10);
    }

    #[test]
    fn compiled_recipes_round_trip_reachable_gates(t1 in -90.0f64..90.0, t2 in -90.0f64..90.0, phase in -PI..PI) {
        let m = element_chain(t1, t2).scale_complex(Complex64::from_polar(1.0, phase));
        let u = UnitaryGate::new("U", m).unwrap();
        let recipe = compile_unitary(&u).unwrap();
        let back = realized_with_errors(&recipe, 0.0, 0.0).unwrap();
        prop_assert!((back.matrix() - u.matrix()).max_abs() < 1e-9);
        prop_assert!(recipe.theta1_deg.abs() <= 45.0 && recipe.theta2_deg.abs() <= 45.0);
    }
}
