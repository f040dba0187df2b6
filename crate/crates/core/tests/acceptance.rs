//! End-to-end acceptance checks. Each criterion prints one `PASS`/`FAIL` line
//! on stderr; the test fails if any criterion fails.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{analytic_stokes, random_separable};
use qswitch::causal_sdp::{is_causally_separable, Separability};
use qswitch::hardware::{compile_unitary, realized_with_errors};
use qswitch::matstack::{ComplexMatrix, HermitianOperator, Subsystem};
use qswitch::processes::{
    born_probability, pauli_x, stokes_expectation, switch_process, white_noise_process, ChoiOperator,
    ProcessMatrix, PureState, UnitaryGate, A_IN, A_OUT, B_IN, B_OUT, C_IN,
};
use qswitch::simulator::{run_experiment, run_experiment_with, NoiseModel, RecipeBook};
use qswitch::witness::{corrected_separable_bound, optimize_witness_report, CausalWitness, StokesTable};

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ideal_switch() -> ProcessMatrix {
    switch_process(&PureState::zero(), &PureState::plus()).unwrap()
}

fn report(results: &mut Vec<bool>, n: usize, name: &str, outcome: Outcome) {
    let line = match &outcome {
        Ok(d) => format!("PASS criterion {n} ({name}): {d}"),
        Err(d) => format!("FAIL criterion {n} ({name}): {d}"),
    };
    // written directly so the line survives output capture
    let _ = writeln!(std::io::stderr(), "{line}");
    results.push(outcome.is_ok());
}

fn ideal_witness_value(value: f64, elapsed: Duration) -> Outcome {
    check(
        (value + 0.248).abs() <= 0.01 && elapsed <= Duration::from_secs(300),
        format!("tr[S W] = {value:.5} (target -0.248 ± 0.01), {:.1} s", elapsed.as_secs_f64()),
    )
}

fn sparsity(witness: &CausalWitness) -> Outcome {
    let n = witness.pair_count();
    check((20..=24).contains(&n), format!("{n} nonzero pairs (target 21)"))
}

fn ideal_stokes(witness: &CausalWitness) -> Outcome {
    let w = ideal_switch();
    let table = StokesTable::from_process(witness, &w).map_err(|e| e.to_string())?;
    let off_grid = table
        .records
        .iter()
        .map(|r| (r.stokes - r.stokes.round()).abs())
        .fold(0.0, f64::max);
    let psi = PureState::zero();
    let gates = UnitaryGate::standard_set();
    let mut oracle_gap: f64 = 0.0;
    for a in &gates {
        for b in &gates {
            let s = stokes_expectation(&w, a, b).map_err(|e| e.to_string())?;
            oracle_gap = oracle_gap.max((s - analytic_stokes(a, b, &psi)).abs());
        }
    }
    check(
        off_grid < 1e-12 && oracle_gap < 1e-10,
        format!(
            "{} surviving values within {off_grid:.1e} of {{-1, 0, 1}}; 36-pair oracle gap {oracle_gap:.1e}",
            table.records.len()
        ),
    )
}

fn separability_verdicts() -> Outcome {
    let mut worst_residual: f64 = 0.0;
    let mut cases = vec![
        switch_process(&PureState::zero(), &PureState::zero()).unwrap(),
        switch_process(&PureState::zero(), &PureState::one()).unwrap(),
        white_noise_process(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    cases.extend((0..5).map(|_| random_separable(&mut rng)));
    for (i, w) in cases.iter().enumerate() {
        match is_causally_separable(w, 1e-7).map_err(|e| e.to_string())? {
            Separability::Separable(d) => worst_residual = worst_residual.max(d.residual),
            Separability::Nonseparable(c) => {
                return Err(format!("separable case {i} flagged (value {:.3e})", c.value))
            }
        }
    }
    if worst_residual > 1e-7 {
        return Err(format!("residual {worst_residual:.2e} > 1e-7"));
    }
    let Separability::Nonseparable(c) = is_causally_separable(&ideal_switch(), 1e-6).map_err(|e| e.to_string())?
    else {
        return Err("ideal switch reported separable".into());
    };
    let worst = (0..1000)
        .map(|_| c.witness.inner(random_separable(&mut rng).operator()))
        .fold(f64::INFINITY, f64::min);
    check(
        c.value < 0.0 && worst >= -1e-6,
        format!(
            "{} separable cases, max residual {worst_residual:.1e}; switch certificate {:.4}, min over 1000 separable samples {worst:.3e}",
            cases.len(),
            c.value
        ),
    )
}

fn noisy_window(witness: &CausalWitness) -> Outcome {
    let sweep: Vec<f64> = (0..=10)
        .map(|k| {
            let noise = NoiseModel {
                visibility: 0.913 + 0.0049 * k as f64,
                angle_jitter_deg: 0.0,
                ..NoiseModel::default()
            };
            run_experiment(witness, &noise).unwrap().witness_estimate.value
        })
        .collect();
    let lo = sweep.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = sweep.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let book = RecipeBook::compile(witness.gates()).map_err(|e| e.to_string())?;
    let values: Vec<f64> = (0..100)
        .map(|seed| {
            let noise = NoiseModel {
                rng_seed: seed,
                ..NoiseModel::default()
            };
            run_experiment_with(&book, witness, &noise).unwrap().witness_estimate.value
        })
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    check(
        (lo + 0.20).abs() <= 0.01 && (hi + 0.14).abs() <= 0.01 && (mean + 0.171).abs() <= 0.02,
        format!("V sweep spans [{lo:.4}, {hi:.4}] (target [-0.20, -0.14] ± 0.01); mean over 100 seeds {mean:.4} (target -0.171 ± 0.02)"),
    )
}

fn corrected_bound(witness: &CausalWitness) -> Outcome {
    let b0 = corrected_separable_bound(witness, 0.0).map_err(|e| e.to_string())?;
    let b1 = corrected_separable_bound(witness, 1.0).map_err(|e| e.to_string())?;
    let b2 = corrected_separable_bound(witness, 2.0).map_err(|e| e.to_string())?;
    check(
        b0 == 0.0 && (-0.06..0.0).contains(&b1) && b2 <= b1,
        format!("bound(0°) = {b0}, bound(1°) = {b1:.4} (target [-0.06, 0)), bound(2°) = {b2:.4}"),
    )
}

fn hardware_map() -> Outcome {
    let x = compile_unitary(&UnitaryGate::named("X").unwrap()).map_err(|e| e.to_string())?;
    let x_ok = (x.theta1_deg - 45.0).abs() <= 0.05 && x.theta2_deg.abs() <= 0.05 && x.global_phase.abs() <= 1e-9;
    let mut worst: f64 = 0.0;
    for g in UnitaryGate::standard_set() {
        let r = compile_unitary(&g).map_err(|e| e.to_string())?;
        let back = realized_with_errors(&r, 0.0, 0.0).map_err(|e| e.to_string())?;
        worst = worst.max((back.matrix() - g.matrix()).max_abs());
    }
    check(
        x_ok && worst <= 1e-9,
        format!(
            "X -> ({:.4}°, {:.4}°, {:.1e}); 6-gate round trip error {worst:.1e}",
            x.theta1_deg, x.theta2_deg, x.global_phase
        ),
    )
}

fn property_spot_checks(witness: &CausalWitness) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let labels = |names: &[&str]| names.iter().map(|n| Subsystem::new(*n, 2)).collect::<Vec<_>>();

    // partial trace / kron algebra
    let a = HermitianOperator::new(common::random_hermitian(&mut rng, 2), labels(&["A"])).unwrap();
    let b = HermitianOperator::new(common::random_hermitian(&mut rng, 2), labels(&["B"])).unwrap();
    let ab = a.kron(&b).unwrap();
    let pt_gap = (ab.partial_trace(&["A"]).unwrap().matrix() - &a.matrix().scale(b.trace())).max_abs();

    // Born-rule normalization over the control measurement
    let w = ideal_switch();
    let i2 = ComplexMatrix::identity(2);
    let plus = ChoiOperator::of_effect(&(&i2 + &pauli_x()).scale(0.5), C_IN, "+").unwrap();
    let minus = ChoiOperator::of_effect(&(&i2 - &pauli_x()).scale(0.5), C_IN, "-").unwrap();
    let gates = UnitaryGate::standard_set();
    let mut born_gap: f64 = 0.0;
    for g in &gates {
        for h in &gates {
            let ca = ChoiOperator::of_unitary(g, A_IN, A_OUT).unwrap();
            let cb = ChoiOperator::of_unitary(h, B_IN, B_OUT).unwrap();
            let p = born_probability(&[&ca, &cb, &plus], &w).unwrap() + born_probability(&[&ca, &cb, &minus], &w).unwrap();
            born_gap = born_gap.max((p - 1.0).abs());
        }
    }

    // PSD projection optimality conditions
    let m = HermitianOperator::new(common::random_hermitian(&mut rng, 8), labels(&["A", "B", "C"])).unwrap();
    let p = m.psd_project().unwrap();
    let r = p.sub(&m).unwrap();
    let psd_ok = p.min_eigenvalue().unwrap() > -1e-10 && r.min_eigenvalue().unwrap() > -1e-10 && p.inner(&r).abs() < 1e-9;

    // determinism
    let noise = NoiseModel {
        rng_seed: 99,
        ..NoiseModel::default()
    };
    let first = serde_json::to_string(&run_experiment(witness, &noise).unwrap()).unwrap();
    let second = serde_json::to_string(&run_experiment(witness, &noise).unwrap()).unwrap();

    check(
        pt_gap < 1e-12 && born_gap < 1e-12 && psd_ok && first == second,
        format!(
            "partial trace gap {pt_gap:.1e}, Born normalization gap {born_gap:.1e}, PSD projection ok {psd_ok}, deterministic {}",
            first == second
        ),
    )
}

#[test]
fn acceptance() {
    let mut results = Vec::new();

    let start = Instant::now();
    let opt = optimize_witness_report(&ideal_switch(), &UnitaryGate::standard_set());
    let elapsed = start.elapsed();
    let opt = match opt {
        Ok(o) => o,
        Err(e) => {
            report(&mut results, 1, "ideal witness value", Err(e.to_string()));
            panic!("witness optimization failed: {e}");
        }
    };
    let witness = &opt.witness;

    report(&mut results, 1, "ideal witness value", ideal_witness_value(opt.value, elapsed));
    report(&mut results, 2, "sparsity structure", sparsity(witness));
    report(&mut results, 3, "ideal Stokes values", ideal_stokes(witness));
    report(&mut results, 4, "separability verdicts", separability_verdicts());
    report(&mut results, 5, "noisy prediction window", noisy_window(witness));
    report(&mut results, 6, "corrected bound", corrected_bound(witness));
    report(&mut results, 7, "hardware map", hardware_map());
    report(&mut results, 8, "property spot checks", property_spot_checks(witness));

    let failed: Vec<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, ok)| !**ok)
        .map(|(i, _)| i + 1)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
