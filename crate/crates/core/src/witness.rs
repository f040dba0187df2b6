//! Measurable causal witnesses `S = ¼(I + Σ γ_{AB} 𝒜⊗ℬ⊗X̂)` over pairs of
//! unitaries, their evaluation from Stokes values, and the separable bound
//! corrected for misaligned optics.

use std::collections::HashMap;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::causal_sdp::{
    soundness_shift, solve_sdp, BlockCone, CausalOrder, CombProjector, ConeMinimumProblem,
    FreeTerm, OrderedConeSpec, Point, SolverDiagnostics, SolverSettings, SplitProblem,
};
use crate::error::{Error, Result};
use crate::hardware::{compile_unitary, realized_with_errors, OpticalRecipe};
use crate::matstack::{eigh_matrix, ComplexMatrix, HermitianOperator};
use crate::processes::{pair_observable, process_subsystems, ProcessMatrix, UnitaryGate};

/// Coefficients below this magnitude are dropped.
pub const PRUNE_TOL: f64 = 1e-6;
/// An optimum above `−NO_WITNESS_TOL` means the gate set cannot detect the process.
pub const NO_WITNESS_TOL: f64 = 1e-6;
/// Value given up in exchange for a sparser γ table.
pub const SPARSITY_SLACK: f64 = 1e-4;
/// Residual tolerance of the inner cone minimizations behind the corrected bound.
pub const BOUND_PROBE_TOL: f64 = 1e-5;
/// Initial penalty for the inner cone minimizations; their objective is small next to unit-trace iterates.
pub const CONE_MINIMUM_RHO: f64 = 0.1;
/// Budget for the ℓ1 re-solve; the plain optimum is kept when it runs out.
pub const SPARSITY_ITERATIONS: usize = 5_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "(String, String, f64)", into = "(String, String, f64)")]
pub struct GammaEntry {
    pub gate_a: String,
    pub gate_b: String,
    pub value: f64,
}

impl From<(String, String, f64)> for GammaEntry {
    fn from((gate_a, gate_b, value): (String, String, f64)) -> Self {
        Self { gate_a, gate_b, value }
    }
}

impl From<GammaEntry> for (String, String, f64) {
    fn from(e: GammaEntry) -> Self {
        (e.gate_a, e.gate_b, e.value)
    }
}

#[derive(Serialize, Deserialize)]
struct WitnessFile {
    gamma: Vec<GammaEntry>,
    separable_bound: f64,
}

/// `S = ¼(I + Σ γ 𝒜⊗ℬ⊗X̂)`, kept together with the gates it is built from.
#[derive(Clone, Debug)]
pub struct CausalWitness {
    gamma: Vec<GammaEntry>,
    gates: Vec<UnitaryGate>,
    operator: HermitianOperator,
    separable_bound: f64,
}

fn witness_operator(terms: &[(f64, &UnitaryGate, &UnitaryGate)]) -> Result<HermitianOperator> {
    let mut m = ComplexMatrix::identity(32);
    for (g, a, b) in terms {
        m.axpy(*g, pair_observable(a, b)?.matrix());
    }
    HermitianOperator::new(m.scale(0.25), process_subsystems())
}

impl CausalWitness {
    /// Builds the witness from a γ table; every gate name must be in `gates`.
    pub fn new(gamma: Vec<GammaEntry>, gates: Vec<UnitaryGate>, separable_bound: f64) -> Result<Self> {
        let lookup = |name: &str| -> Result<&UnitaryGate> {
            gates
                .iter()
                .find(|g| g.name() == name)
                .ok_or_else(|| Error::UnknownGate(name.to_string()))
        };
        let mut terms = Vec::with_capacity(gamma.len());
        for e in &gamma {
            terms.push((e.value, lookup(&e.gate_a)?, lookup(&e.gate_b)?));
        }
        let operator = witness_operator(&terms)?;
        Ok(Self {
            gamma,
            gates,
            operator,
            separable_bound,
        })
    }

    /// Builds from standard gate names (`I, X, Y, Z, P, Q`).
    pub fn from_named(gamma: Vec<GammaEntry>, separable_bound: f64) -> Result<Self> {
        let mut gates: Vec<UnitaryGate> = Vec::new();
        for e in &gamma {
            for name in [&e.gate_a, &e.gate_b] {
                if !gates.iter().any(|g| g.name() == name) {
                    gates.push(UnitaryGate::named(name)?);
                }
            }
        }
        Self::new(gamma, gates, separable_bound)
    }

    pub fn gamma(&self) -> &[GammaEntry] {
        &self.gamma
    }

    pub fn gates(&self) -> &[UnitaryGate] {
        &self.gates
    }

    pub fn gate(&self, name: &str) -> Option<&UnitaryGate> {
        self.gates.iter().find(|g| g.name() == name)
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.operator
    }

    pub fn separable_bound(&self) -> f64 {
        self.separable_bound
    }

    pub fn with_separable_bound(mut self, bound: f64) -> Self {
        self.separable_bound = bound;
        self
    }

    pub fn pair_count(&self) -> usize {
        self.gamma.len()
    }

    /// `tr[S W]`
    pub fn value_on(&self, w: &ProcessMatrix) -> f64 {
        self.operator.inner(w.operator())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&WitnessFile {
            gamma: self.gamma.clone(),
            separable_bound: self.separable_bound,
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: WitnessFile = serde_json::from_str(text)?;
        Self::from_named(f.gamma, f.separable_bound)
    }
}

/// Order of a gate name within a gate list, for figure-order sorting.
fn rank(gates: &[UnitaryGate], name: &str) -> usize {
    gates.iter().position(|g| g.name() == name).unwrap_or(usize::MAX)
}

/// `min tr[S(γ) W]` over witnesses of the restricted form in the dual of both cones.
///
/// Variables: `γ` (free) and PSD multipliers `Z₁, Z₂` with `L_k(S(γ) − Z_k) = 0`.
/// In sparsity mode the linear objective is replaced by `‖γ‖₁` and the value is
/// pinned through `Σ g_i γ_i = target`.
struct RestrictedWitnessProblem {
    first: CombProjector,
    second: CombProjector,
    s0: ComplexMatrix,
    first_basis: Vec<ComplexMatrix>,
    second_basis: Vec<ComplexMatrix>,
    basis: Vec<ComplexMatrix>,
    /// `g_i = tr[B_i W]`
    linear: Vec<f64>,
    offset: f64,
    h_inv: Vec<f64>,
    mode: Mode,
}

#[derive(Clone, Copy)]
enum Mode {
    Minimize,
    Sparsify { target: f64 },
}

impl RestrictedWitnessProblem {
    fn new(w: &ProcessMatrix, pairs: &[(&UnitaryGate, &UnitaryGate)]) -> Result<Self> {
        let first = OrderedConeSpec::new(CausalOrder::AThenB).projector();
        let second = OrderedConeSpec::new(CausalOrder::BThenA).projector();
        let basis = pairs
            .iter()
            .map(|(a, b)| Ok(pair_observable(a, b)?.into_matrix().scale(0.25)))
            .collect::<Result<Vec<_>>>()?;
        let first_basis: Vec<_> = basis.iter().map(|b| first.apply(b)).collect();
        let second_basis: Vec<_> = basis.iter().map(|b| second.apply(b)).collect();
        let n = basis.len();
        let mut h = ComplexMatrix::identity(n);
        for i in 0..n {
            for j in 0..n {
                let g = basis[i].real_inner(&first_basis[j]) + basis[i].real_inner(&second_basis[j]);
                h[(i, j)] += g;
            }
        }
        let h_inv = eigh_matrix(&h)?.reconstruct_with(|l| 1.0 / l);
        let wm = w.operator().matrix();
        let s0 = ComplexMatrix::identity(32).scale(0.25);
        Ok(Self {
            linear: basis.iter().map(|b| b.real_inner(wm)).collect(),
            offset: s0.real_inner(wm),
            h_inv: h_inv.as_slice().iter().map(|z| z.re).collect(),
            first,
            second,
            s0,
            first_basis,
            second_basis,
            basis,
            mode: Mode::Minimize,
        })
    }

    fn n(&self) -> usize {
        self.basis.len()
    }

    fn h_inv_apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n).map(|i| (0..n).map(|j| self.h_inv[i * n + j] * v[j]).sum()).collect()
    }

    fn combination(&self, basis: &[ComplexMatrix], gamma: &[f64]) -> ComplexMatrix {
        let mut out = self.s0.clone();
        for (g, b) in gamma.iter().zip(basis) {
            if *g != 0.0 {
                out.axpy(*g, b);
            }
        }
        out
    }

    fn value(&self, gamma: &[f64]) -> f64 {
        self.offset + gamma.iter().zip(&self.linear).map(|(g, l)| g * l).sum::<f64>()
    }
}

impl SplitProblem for RestrictedWitnessProblem {
    fn cones(&self) -> Vec<BlockCone> {
        vec![BlockCone::Psd, BlockCone::Psd]
    }

    fn free_term(&self) -> FreeTerm {
        match self.mode {
            Mode::Minimize => FreeTerm::None,
            Mode::Sparsify { .. } => FreeTerm::L1(1.0),
        }
    }

    fn initial_point(&self) -> Point {
        Point::new(vec![0.0; self.n()], vec![self.s0.clone(), self.s0.clone()])
    }

    fn prox(&self, v: &Point, rho: f64) -> Point {
        let d1 = &v.blocks[0] - &self.s0;
        let d2 = &v.blocks[1] - &self.s0;
        let rhs: Vec<f64> = (0..self.n())
            .map(|i| {
                let lin = match self.mode {
                    Mode::Minimize => self.linear[i] / rho,
                    Mode::Sparsify { .. } => 0.0,
                };
                v.free[i] - lin + self.first_basis[i].real_inner(&d1) + self.second_basis[i].real_inner(&d2)
            })
            .collect();
        let mut gamma = self.h_inv_apply(&rhs);
        if let Mode::Sparsify { target } = self.mode {
            let hc = self.h_inv_apply(&self.linear);
            let chc: f64 = self.linear.iter().zip(&hc).map(|(a, b)| a * b).sum();
            let cg: f64 = self.linear.iter().zip(&gamma).map(|(a, b)| a * b).sum();
            let lambda = (cg - (target - self.offset)) / chc;
            for (g, h) in gamma.iter_mut().zip(&hc) {
                *g -= lambda * h;
            }
        }
        let z1 = {
            let mut o = &v.blocks[0] - &self.first.apply(&v.blocks[0]);
            o.axpy(1.0, &self.combination(&self.first_basis, &gamma));
            o
        };
        let z2 = {
            let mut o = &v.blocks[1] - &self.second.apply(&v.blocks[1]);
            o.axpy(1.0, &self.combination(&self.second_basis, &gamma));
            o
        };
        Point::new(gamma, vec![z1, z2])
    }

    fn objective(&self, x: &Point) -> f64 {
        self.value(&x.free)
    }
}

/// Outcome of [`optimize_witness_report`].
#[derive(Clone, Debug)]
pub struct WitnessOptimization {
    pub witness: CausalWitness,
    /// Optimum of the restricted SDP before sparsification and repair.
    pub raw_optimum: f64,
    /// `tr[S W]` of the returned (pruned, repaired) witness.
    pub value: f64,
    /// Identity weight added to make the witness provably nonnegative on both cones.
    pub repair_shift: f64,
    pub sparsified: bool,
    pub diagnostics: SolverDiagnostics,
}

/// Optimal measurable witness for `w` over all ordered pairs of `gates`.
pub fn optimize_witness(w: &ProcessMatrix, gates: &[UnitaryGate]) -> Result<CausalWitness> {
    Ok(optimize_witness_report(w, gates)?.witness)
}

pub fn optimize_witness_report(w: &ProcessMatrix, gates: &[UnitaryGate]) -> Result<WitnessOptimization> {
    if gates.is_empty() {
        return Err(Error::OutOfRange("empty gate set".into()));
    }
    let pairs: Vec<(&UnitaryGate, &UnitaryGate)> =
        gates.iter().flat_map(|a| gates.iter().map(move |b| (a, b))).collect();
    optimize_over_pairs(w, gates, &pairs)
}

/// As [`optimize_witness_report`], restricted to the given ordered pairs.
pub fn optimize_witness_pairs(w: &ProcessMatrix, pairs: &[(UnitaryGate, UnitaryGate)]) -> Result<WitnessOptimization> {
    if pairs.is_empty() {
        return Err(Error::OutOfRange("empty pair set".into()));
    }
    let mut gates: Vec<UnitaryGate> = Vec::new();
    for g in pairs.iter().flat_map(|(a, b)| [a, b]) {
        if !gates.iter().any(|h| h.name() == g.name()) {
            gates.push(g.clone());
        }
    }
    let refs: Vec<(&UnitaryGate, &UnitaryGate)> = pairs.iter().map(|(a, b)| (a, b)).collect();
    optimize_over_pairs(w, &gates, &refs)
}

fn optimize_over_pairs(
    w: &ProcessMatrix,
    gates: &[UnitaryGate],
    pairs: &[(&UnitaryGate, &UnitaryGate)],
) -> Result<WitnessOptimization> {
    let mut problem = RestrictedWitnessProblem::new(w, pairs)?;
    let settings = SolverSettings::default();
    let sol = solve_sdp(&problem, &settings, None);
    if !sol.diagnostics.converged {
        return Err(Error::SolverFailure(sol.diagnostics));
    }
    let raw_optimum = problem.value(&sol.x.free);
    if raw_optimum >= -NO_WITNESS_TOL {
        return Err(Error::NoWitnessPossible { optimum: raw_optimum });
    }

    // a little slack keeps the pinned value strictly feasible
    problem.mode = Mode::Sparsify {
        target: raw_optimum + SPARSITY_SLACK,
    };
    let sparse_settings = settings.clone().with_max_iterations(SPARSITY_ITERATIONS);
    let sparse = solve_sdp(&problem, &sparse_settings, Some((&sol.z, &Point::zeros_like(&sol.z))));
    let (chosen, diagnostics, sparsified) = if sparse.diagnostics.converged {
        (sparse.z, sparse.diagnostics, true)
    } else {
        (sol.z, sol.diagnostics, false)
    };

    let mut gamma = chosen.free.clone();
    for g in gamma.iter_mut() {
        if g.abs() < PRUNE_TOL {
            *g = 0.0;
        }
    }
    let s = problem.combination(&problem.basis, &gamma);
    let shift = soundness_shift(
        &s,
        [&chosen.blocks[0], &chosen.blocks[1]],
        [&problem.first, &problem.second],
    )?;
    // S + c·I renormalized to tr S = 8 rescales every γ by 1/(1 + 4c)
    let scale = 1.0 / (1.0 + 4.0 * shift);

    let entries: Vec<GammaEntry> = pairs
        .iter()
        .zip(&gamma)
        .filter(|(_, g)| **g != 0.0)
        .map(|((a, b), g)| GammaEntry {
            gate_a: a.name().to_string(),
            gate_b: b.name().to_string(),
            value: g * scale,
        })
        .collect();
    let witness = CausalWitness::new(entries, gates.to_vec(), 0.0)?;
    let value = witness.value_on(w);
    Ok(WitnessOptimization {
        witness,
        raw_optimum,
        value,
        repair_shift: shift,
        sparsified,
        diagnostics,
    })
}

/// One measured Stokes value `⟨X̂⟩` for a pair of gates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StokesRecord {
    pub gate_a: String,
    pub gate_b: String,
    pub stokes: f64,
    pub std: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StokesTable {
    pub records: Vec<StokesRecord>,
}

impl StokesTable {
    pub fn new(records: Vec<StokesRecord>) -> Self {
        Self { records }
    }

    pub fn get(&self, gate_a: &str, gate_b: &str) -> Option<&StokesRecord> {
        self.records.iter().find(|r| r.gate_a == gate_a && r.gate_b == gate_b)
    }

    /// Ideal values `tr[(𝒜⊗ℬ⊗X̂) W]` for every pair of the witness.
    pub fn from_process(witness: &CausalWitness, w: &ProcessMatrix) -> Result<Self> {
        let records = witness
            .gamma()
            .iter()
            .map(|e| {
                let a = witness.gate(&e.gate_a).ok_or_else(|| Error::UnknownGate(e.gate_a.clone()))?;
                let b = witness.gate(&e.gate_b).ok_or_else(|| Error::UnknownGate(e.gate_b.clone()))?;
                Ok(StokesRecord {
                    gate_a: e.gate_a.clone(),
                    gate_b: e.gate_b.clone(),
                    stokes: crate::processes::stokes_expectation(w, a, b)?,
                    std: 0.0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { records })
    }

    /// Every value multiplied by `factor` (std scaled by its magnitude).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            records: self
                .records
                .iter()
                .map(|r| StokesRecord {
                    stokes: r.stokes * factor,
                    std: r.std * factor.abs(),
                    ..r.clone()
                })
                .collect(),
        }
    }

    /// CSV with header `gate_a,gate_b,stokes,std`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let records = r.deserialize().collect::<std::result::Result<Vec<StokesRecord>, _>>()?;
        Ok(Self { records })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessEstimate {
    /// `⟨S⟩ = 1 + ¼ Σ γ ⟨X̂⟩`
    pub value: f64,
    pub std_error: f64,
    pub stokes_records: Vec<StokesRecord>,
    /// `(bound − value)/std_error` when the value lies below the bound and the error is nonzero.
    pub sigma_from_bound: Option<f64>,
}

/// Combines measured Stokes values into `⟨S⟩` with linear error propagation.
pub fn evaluate_witness(witness: &CausalWitness, stokes: &StokesTable) -> Result<WitnessEstimate> {
    let mut value = 1.0;
    let mut variance = 0.0;
    let mut used = Vec::with_capacity(witness.gamma().len());
    for e in witness.gamma() {
        let r = stokes
            .get(&e.gate_a, &e.gate_b)
            .ok_or_else(|| Error::MissingPair(e.gate_a.clone(), e.gate_b.clone()))?;
        value += 0.25 * e.value * r.stokes;
        variance += (0.25 * e.value * r.std).powi(2);
        used.push(r.clone());
    }
    let std_error = variance.sqrt();
    let bound = witness.separable_bound();
    let sigma_from_bound = (value < bound && std_error > 0.0).then(|| (bound - value) / std_error);
    Ok(WitnessEstimate {
        value,
        std_error,
        stokes_records: used,
        sigma_from_bound,
    })
}

/// Sampling plan for [`corrected_separable_bound_with`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundSettings {
    /// Interior samples with every pair perturbed independently.
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for BoundSettings {
    fn default() -> Self {
        Self {
            mc_samples: 200,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound: f64,
    pub probes: usize,
    /// Prism errors `[d1_a, d2_a, d1_b, d2_b]` per pair at the minimizing probe.
    pub worst_errors: Vec<[f64; 4]>,
}

/// Conservative separable bound when every prism angle may be off by up to `uncertainty_deg`.
pub fn corrected_separable_bound(witness: &CausalWitness, uncertainty_deg: f64) -> Result<f64> {
    Ok(corrected_separable_bound_with(witness, uncertainty_deg, &BoundSettings::default())?.bound)
}

/// Minimizes the measured combination `1 + ¼ Σ γ tr[(𝒜′⊗ℬ′⊗X̂) W_sep]` over both
/// cones for a set of perturbed realizations `𝒜′, ℬ′` of the witness gates.
///
/// Probes: the 16 sign patterns of `±u` on the four prisms of a pair, applied
/// to every pair at once, then `mc_samples` draws where each prism of each pair
/// is uniform on `[−u, u]` independently.
pub fn corrected_separable_bound_with(
    witness: &CausalWitness,
    uncertainty_deg: f64,
    settings: &BoundSettings,
) -> Result<BoundReport> {
    if uncertainty_deg.is_nan() || uncertainty_deg < 0.0 {
        return Err(Error::OutOfRange(format!("angle uncertainty {uncertainty_deg} is negative")));
    }
    let pairs = witness.gamma().len();
    if uncertainty_deg == 0.0 {
        return Ok(BoundReport {
            bound: 0.0,
            probes: 0,
            worst_errors: vec![[0.0; 4]; pairs],
        });
    }
    let recipes: HashMap<String, OpticalRecipe> = witness
        .gates()
        .iter()
        .filter(|g| witness.gamma().iter().any(|e| e.gate_a == g.name() || e.gate_b == g.name()))
        .map(|g| Ok((g.name().to_string(), compile_unitary(g)?)))
        .collect::<Result<_>>()?;

    let u = uncertainty_deg;
    let mut probes: Vec<Vec<[f64; 4]>> = Vec::new();
    for pattern in 0..16u32 {
        let d: [f64; 4] = std::array::from_fn(|k| if pattern >> k & 1 == 1 { u } else { -u });
        probes.push(vec![d; pairs]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    for _ in 0..settings.mc_samples {
        probes.push(
            (0..pairs)
                .map(|_| std::array::from_fn(|_| rng.random_range(-u..=u)))
                .collect(),
        );
    }

    let cones = [
        OrderedConeSpec::new(CausalOrder::AThenB).projector(),
        OrderedConeSpec::new(CausalOrder::BThenA).projector(),
    ];
    let probe_settings = SolverSettings {
        rho: CONE_MINIMUM_RHO,
        ..SolverSettings::default().with_tol(BOUND_PROBE_TOL)
    };
    const CHUNK: usize = 24;
    let values: Vec<f64> = probes
        .par_chunks(CHUNK)
        .map(|chunk| -> Result<Vec<f64>> {
            let mut warm: [Option<(Point, Point)>; 2] = [None, None];
            let mut out = Vec::with_capacity(chunk.len());
            for errors in chunk {
                let s = perturbed_witness(witness, &recipes, errors)?;
                let mut best = f64::INFINITY;
                for (k, cone) in cones.iter().enumerate() {
                    let problem = ConeMinimumProblem::new(cone, &s);
                    let start = warm[k].as_ref().map(|(z, y)| (z, y));
                    let sol = solve_sdp(&problem, &probe_settings, start);
                    if !sol.diagnostics.converged {
                        return Err(Error::SolverFailure(sol.diagnostics));
                    }
                    let value = cone.apply_affine(&sol.z.blocks[0]).real_inner(&s).min(sol.diagnostics.objective);
                    best = best.min(value);
                    let scaled_dual = sol.dual.combine(1.0 / probe_settings.rho, &sol.dual, 0.0);
                    warm[k] = Some((sol.z, scaled_dual));
                }
                out.push(best);
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let (idx, min) = values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    Ok(BoundReport {
        bound: min.min(0.0),
        probes: probes.len(),
        worst_errors: probes[idx].clone(),
    })
}

fn perturbed_witness(
    witness: &CausalWitness,
    recipes: &HashMap<String, OpticalRecipe>,
    errors: &[[f64; 4]],
) -> Result<ComplexMatrix> {
    let mut gates = Vec::with_capacity(errors.len());
    for (e, d) in witness.gamma().iter().zip(errors) {
        let a = realized_with_errors(&recipes[&e.gate_a], d[0], d[1])?;
        let b = realized_with_errors(&recipes[&e.gate_b], d[2], d[3])?;
        gates.push((e.value, a, b));
    }
    let terms: Vec<(f64, &UnitaryGate, &UnitaryGate)> = gates.iter().map(|(g, a, b)| (*g, a, b)).collect();
    Ok(witness_operator(&terms)?.into_matrix())
}

/// Sorts γ entries into figure order (by gate A, then gate B, following `gates`).
pub fn figure_order(entries: &mut [GammaEntry], gates: &[UnitaryGate]) {
    entries.sort_by_key(|e| (rank(gates, &e.gate_a), rank(gates, &e.gate_b)));
}
