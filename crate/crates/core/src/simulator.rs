//! Monte-Carlo model of the photonic switch: jittered prism angles, reduced
//! interference visibility and binomial photon counting at the control's
//! diagonal/antidiagonal polarisation ports.

use std::collections::HashMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardware::{compile_unitary, realized_with_errors, OpticalRecipe};
use crate::matstack::ComplexMatrix;
use crate::processes::{PureState, UnitaryGate, STANDARD_GATES};
use crate::witness::{evaluate_witness, CausalWitness, StokesRecord, StokesTable, WitnessEstimate};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Contrast of the interference between the two orders, in `[0, 1]`.
    pub visibility: f64,
    /// Prism angles are off by a uniform draw from `[−jitter, jitter]` degrees.
    pub angle_jitter_deg: f64,
    pub shots_per_setting: u64,
    pub rng_seed: u64,
    /// Report expectation values instead of sampled counts.
    #[serde(default)]
    pub analytic: bool,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            visibility: 0.938,
            angle_jitter_deg: 1.0,
            shots_per_setting: 100_000,
            rng_seed: 0,
            analytic: false,
        }
    }
}

impl NoiseModel {
    /// Perfect visibility and alignment, expectation values only.
    pub fn ideal() -> Self {
        Self {
            visibility: 1.0,
            angle_jitter_deg: 0.0,
            analytic: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.visibility) {
            return Err(Error::OutOfRange(format!("visibility {} not in [0, 1]", self.visibility)));
        }
        if !(self.angle_jitter_deg >= 0.0 && self.angle_jitter_deg <= crate::hardware::MAX_ANGLE_ERROR_DEG) {
            return Err(Error::OutOfRange(format!(
                "angle jitter {}° not in [0, {}]",
                self.angle_jitter_deg,
                crate::hardware::MAX_ANGLE_ERROR_DEG
            )));
        }
        if !self.analytic && self.shots_per_setting == 0 {
            return Err(Error::OutOfRange("shots per setting must be positive".into()));
        }
        Ok(())
    }
}

/// `(B·A|ψ⟩ ⊗ |0⟩ + A·B|ψ⟩ ⊗ |1⟩)/√2`, indexed as `target · 2 + control`.
pub fn switch_output_state(a: &ComplexMatrix, b: &ComplexMatrix, target: &PureState) -> Vec<Complex64> {
    let ba = b.matmul(a).apply(target.amplitudes());
    let ab = a.matmul(b).apply(target.amplitudes());
    let mut out = Vec::with_capacity(2 * ba.len());
    for (x, y) in ba.into_iter().zip(ab) {
        out.push(x * FRAC_1_SQRT_2);
        out.push(y * FRAC_1_SQRT_2);
    }
    out
}

/// `⟨X̂⟩` of the control with its coherence scaled by `visibility`.
pub fn control_x_expectation(state: &[Complex64], visibility: f64) -> f64 {
    let coherence: Complex64 = state.chunks(2).map(|c| c[0].conj() * c[1]).sum();
    2.0 * visibility * coherence.re
}

/// Prism recipes for a set of gates, compiled once.
#[derive(Clone, Debug, Default)]
pub struct RecipeBook {
    recipes: HashMap<String, OpticalRecipe>,
}

impl RecipeBook {
    pub fn compile(gates: &[UnitaryGate]) -> Result<Self> {
        let recipes = gates
            .par_iter()
            .map(|g| Ok((g.name().to_string(), compile_unitary(g)?)))
            .collect::<Result<HashMap<_, _>>>()?;
        Ok(Self { recipes })
    }

    pub fn get(&self, name: &str) -> Option<&OpticalRecipe> {
        self.recipes.get(name)
    }
}

/// One simulated measurement setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSample {
    pub gate_a: String,
    pub gate_b: String,
    /// Noise-free `⟨X̂⟩`.
    pub ideal: f64,
    /// `⟨X̂⟩` with the drawn misalignment and the visibility applied.
    pub expectation: f64,
    /// `(N₊ − N₋)/(N₊ + N₋)`, or the expectation in analytic mode.
    pub estimate: f64,
    /// Binomial standard error of the estimate (0 in analytic mode).
    pub std: f64,
    pub n_plus: Option<u64>,
    pub n_minus: Option<u64>,
    /// Prism errors `[θ₁ᴬ, θ₂ᴬ, θ₁ᴮ, θ₂ᴮ]` in degrees.
    pub angle_errors: [f64; 4],
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Simulates one setting; `stream` selects an independent random stream of the seed.
pub fn simulate_pair(a: &UnitaryGate, b: &UnitaryGate, noise: &NoiseModel, stream: u64) -> Result<PairSample> {
    let book = if noise.angle_jitter_deg > 0.0 {
        RecipeBook::compile(&[a.clone(), b.clone()])?
    } else {
        RecipeBook::default()
    };
    simulate_pair_with(&book, a, b, noise, stream)
}

/// As [`simulate_pair`], reusing compiled recipes.
pub fn simulate_pair_with(
    book: &RecipeBook,
    a: &UnitaryGate,
    b: &UnitaryGate,
    noise: &NoiseModel,
    stream: u64,
) -> Result<PairSample> {
    noise.validate()?;
    let target = PureState::zero();
    let ideal = control_x_expectation(&switch_output_state(a.matrix(), b.matrix(), &target), 1.0);

    let mut rng = rng_for(noise.rng_seed, stream);
    let u = noise.angle_jitter_deg;
    let mut errors = [0.0; 4];
    let (ra, rb) = if u > 0.0 {
        for e in errors.iter_mut() {
            *e = rng.random_range(-u..=u);
        }
        let recipe = |g: &UnitaryGate| {
            book.get(g.name())
                .ok_or_else(|| Error::UnknownGate(format!("no recipe compiled for `{}`", g.name())))
        };
        (
            realized_with_errors(recipe(a)?, errors[0], errors[1])?,
            realized_with_errors(recipe(b)?, errors[2], errors[3])?,
        )
    } else {
        (a.clone(), b.clone())
    };
    let expectation = control_x_expectation(&switch_output_state(ra.matrix(), rb.matrix(), &target), noise.visibility)
        .clamp(-1.0, 1.0);

    let (estimate, std, n_plus, n_minus) = if noise.analytic {
        (expectation, 0.0, None, None)
    } else {
        let n = noise.shots_per_setting;
        let p_plus = (1.0 + expectation) / 2.0;
        let binomial = Binomial::new(n, p_plus.clamp(0.0, 1.0))
            .map_err(|e| Error::OutOfRange(format!("binomial({n}, {p_plus}): {e}")))?;
        let plus = binomial.sample(&mut rng);
        let minus = n - plus;
        let est = (plus as f64 - minus as f64) / n as f64;
        (est, ((1.0 - est * est).max(0.0) / n as f64).sqrt(), Some(plus), Some(minus))
    };
    Ok(PairSample {
        gate_a: a.name().to_string(),
        gate_b: b.name().to_string(),
        ideal,
        expectation,
        estimate,
        std,
        n_plus,
        n_minus,
        angle_errors: errors,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    /// One record per witness pair, in witness order.
    pub stokes_records: Vec<PairSample>,
    pub witness_estimate: WitnessEstimate,
    pub separable_bound: f64,
    pub noise: NoiseModel,
}

impl ExperimentResult {
    pub fn stokes_table(&self) -> StokesTable {
        StokesTable::new(
            self.stokes_records
                .iter()
                .map(|r| StokesRecord {
                    gate_a: r.gate_a.clone(),
                    gate_b: r.gate_b.clone(),
                    stokes: r.estimate,
                    std: r.std,
                })
                .collect(),
        )
    }

    pub fn summary(&self) -> ExperimentSummary {
        ExperimentSummary {
            witness_value: self.witness_estimate.value,
            std_error: self.witness_estimate.std_error,
            sigma_from_bound: self.witness_estimate.sigma_from_bound,
            separable_bound: self.separable_bound,
            pairs: self.stokes_records.len(),
            config: self.noise.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub witness_value: f64,
    /// Statistical (shot-noise) error only.
    pub std_error: f64,
    pub sigma_from_bound: Option<f64>,
    pub separable_bound: f64,
    pub pairs: usize,
    pub config: NoiseModel,
}

/// Simulates every pair of the witness and evaluates `⟨S⟩`. Pair `i` uses random stream `i`.
pub fn run_experiment(witness: &CausalWitness, noise: &NoiseModel) -> Result<ExperimentResult> {
    noise.validate()?;
    if witness.gamma().is_empty() {
        return Err(Error::OutOfRange("witness has no pairs".into()));
    }
    let book = if noise.angle_jitter_deg > 0.0 {
        RecipeBook::compile(witness.gates())?
    } else {
        RecipeBook::default()
    };
    run_experiment_with(&book, witness, noise)
}

/// As [`run_experiment`], reusing compiled recipes (useful for seed sweeps).
pub fn run_experiment_with(book: &RecipeBook, witness: &CausalWitness, noise: &NoiseModel) -> Result<ExperimentResult> {
    noise.validate()?;
    let stokes_records = witness
        .gamma()
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let a = witness.gate(&e.gate_a).ok_or_else(|| Error::UnknownGate(e.gate_a.clone()))?;
            let b = witness.gate(&e.gate_b).ok_or_else(|| Error::UnknownGate(e.gate_b.clone()))?;
            simulate_pair_with(book, a, b, noise, i as u64)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut result = ExperimentResult {
        stokes_records,
        witness_estimate: WitnessEstimate {
            value: 0.0,
            std_error: 0.0,
            stokes_records: vec![],
            sigma_from_bound: None,
        },
        separable_bound: witness.separable_bound(),
        noise: noise.clone(),
    };
    result.witness_estimate = evaluate_witness(witness, &result.stokes_table())?;
    Ok(result)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Figure4Row {
    pub pair_index: usize,
    pub gate_a: String,
    pub gate_b: String,
    pub ideal: f64,
    pub simulated: f64,
    pub std: f64,
}

fn gate_rank(witness: &CausalWitness, name: &str) -> (usize, usize) {
    match STANDARD_GATES.iter().position(|g| *g == name) {
        Some(p) => (0, p),
        None => (1, witness.gates().iter().position(|g| g.name() == name).unwrap_or(usize::MAX)),
    }
}

/// Ideal and simulated Stokes values per witness pair, ordered by gate A then
/// gate B in the sequence `I, X, Y, Z, P, Q`; `pair_index` counts from 1.
pub fn reproduce_figure4(witness: &CausalWitness, noise: &NoiseModel) -> Result<Vec<Figure4Row>> {
    Ok(figure4_rows(witness, &run_experiment(witness, noise)?))
}

/// Figure rows from an existing experiment result.
pub fn figure4_rows(witness: &CausalWitness, result: &ExperimentResult) -> Vec<Figure4Row> {
    let mut records: Vec<&PairSample> = result.stokes_records.iter().collect();
    records.sort_by_key(|r| (gate_rank(witness, &r.gate_a), gate_rank(witness, &r.gate_b)));
    records
        .into_iter()
        .enumerate()
        .map(|(i, r)| Figure4Row {
            pair_index: i + 1,
            gate_a: r.gate_a.clone(),
            gate_b: r.gate_b.clone(),
            ideal: r.ideal,
            simulated: r.estimate,
            std: r.std,
        })
        .collect()
}

/// CSV with header `pair_index,gate_a,gate_b,ideal,simulated,std`.
pub fn write_figure4_csv<W: Write>(rows: &[Figure4Row], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
