//! Gates, Choi operators, process matrices and the generalized Born rule.
//!
//! Choi convention: for a map `M` from `X_I` to `X_O` the operator used in
//! the Born rule is the *transposed* Choi matrix
//! `(Σ_lm |l⟩⟨m| ⊗ M(|l⟩⟨m|))^T`. For a unitary this is the projector onto
//! `|Ū⟩⟩ = Σ_m |m⟩ ⊗ Ū|m⟩`. The untransposed variant is obtained by conjugating
//! the gate; with the transposed form a measurement effect `E` at `C_I`
//! enters the Born rule as `E` itself.
//!
//! Subsystem order is fixed to `(A_I, A_O, B_I, B_O, C_I)`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matstack::{ComplexMatrix, HermitianOperator, Subsystem};

pub const A_IN: &str = "A_I";
pub const A_OUT: &str = "A_O";
pub const B_IN: &str = "B_I";
pub const B_OUT: &str = "B_O";
pub const C_IN: &str = "C_I";

/// Global subsystem order of every process matrix.
pub const PROCESS_LABELS: [&str; 5] = [A_IN, A_OUT, B_IN, B_OUT, C_IN];

const UNITARY_TOL: f64 = 1e-12;
const NORM_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-8;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Named single-qubit gate set used throughout the witness.
pub const STANDARD_GATES: [&str; 6] = ["I", "X", "Y", "Z", "P", "Q"];

/// A 2×2 (or d×d) unitary acting on the target.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryGate {
    name: String,
    matrix: ComplexMatrix,
}

impl UnitaryGate {
    pub fn new(name: impl Into<String>, matrix: ComplexMatrix) -> Result<Self> {
        let name = name.into();
        let deviation = matrix.unitarity_deviation();
        if !matrix.is_finite() || deviation > UNITARY_TOL {
            return Err(Error::NotUnitary { name, deviation });
        }
        Ok(Self { name, matrix })
    }

    /// One of `I, X, Y, Z, P, Q`, with `P = (Y+Z)/√2` and `Q = (X+Z)/√2`.
    pub fn named(name: &str) -> Result<Self> {
        let s = FRAC_1_SQRT_2;
        let m = match name {
            "I" => ComplexMatrix::identity(2),
            "X" => ComplexMatrix::from_rows(&[&[c(0., 0.), c(1., 0.)], &[c(1., 0.), c(0., 0.)]]),
            "Y" => ComplexMatrix::from_rows(&[&[c(0., 0.), c(0., -1.)], &[c(0., 1.), c(0., 0.)]]),
            "Z" => ComplexMatrix::from_rows(&[&[c(1., 0.), c(0., 0.)], &[c(0., 0.), c(-1., 0.)]]),
            "P" => ComplexMatrix::from_rows(&[&[c(s, 0.), c(0., -s)], &[c(0., s), c(-s, 0.)]]),
            "Q" => ComplexMatrix::from_rows(&[&[c(s, 0.), c(s, 0.)], &[c(s, 0.), c(-s, 0.)]]),
            other => return Err(Error::UnknownGate(other.to_string())),
        };
        Self::new(name, m)
    }

    /// The six gates in figure order `I, X, Y, Z, P, Q`.
    pub fn standard_set() -> Vec<Self> {
        STANDARD_GATES
            .iter()
            .map(|n| Self::named(n).expect("standard gate"))
            .collect()
    }

    /// Parses a gate list such as `"IXYZPQ"` or `"I,X,Z"`.
    pub fn parse_set(spec: &str) -> Result<Vec<Self>> {
        spec.chars()
            .filter(|ch| !ch.is_whitespace() && *ch != ',')
            .map(|ch| Self::named(&ch.to_string()))
            .collect()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn adjoint(&self) -> ComplexMatrix {
        self.matrix.adjoint()
    }
}

impl fmt::Display for UnitaryGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if amplitudes.is_empty() || (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amplitudes })
    }

    pub fn zero() -> Self {
        Self {
            amplitudes: vec![c(1., 0.), c(0., 0.)],
        }
    }

    pub fn one() -> Self {
        Self {
            amplitudes: vec![c(0., 0.), c(1., 0.)],
        }
    }

    pub fn plus() -> Self {
        Self {
            amplitudes: vec![c(FRAC_1_SQRT_2, 0.), c(FRAC_1_SQRT_2, 0.)],
        }
    }

    /// `"zero"`, `"one"` or `"plus"`.
    pub fn named(name: &str) -> Result<Self> {
        match name {
            "zero" | "0" => Ok(Self::zero()),
            "one" | "1" => Ok(Self::one()),
            "plus" | "+" => Ok(Self::plus()),
            other => Err(Error::UnknownState(other.to_string())),
        }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }
}

/// Transposed Choi operator of a CP map, on `(input, output)` or a single input factor.
#[derive(Clone, Debug)]
pub struct ChoiOperator {
    pub operator: HermitianOperator,
    pub source: String,
}

impl ChoiOperator {
    /// `(Σ_lm |l⟩⟨m| ⊗ U|l⟩⟨m|U†)^T` on `input ⊗ output`.
    pub fn of_unitary(u: &UnitaryGate, input: &str, output: &str) -> Result<Self> {
        let d = u.dim();
        let mut choi = ComplexMatrix::zeros(d * d);
        let um = u.matrix();
        for l in 0..d {
            for m in 0..d {
                // U|l⟩⟨m|U† has entries U[i,l] conj(U[j,m])
                for i in 0..d {
                    for j in 0..d {
                        choi[(l * d + i, m * d + j)] = um[(i, l)] * um[(j, m)].conj();
                    }
                }
            }
        }
        let operator = HermitianOperator::new(
            choi.transpose(),
            vec![Subsystem::new(input, d), Subsystem::new(output, d)],
        )?;
        Ok(Self {
            operator,
            source: format!("unitary {}", u.name()),
        })
    }

    /// A measurement effect (or observable) `E` on a final input-only factor.
    pub fn of_effect(effect: &ComplexMatrix, label: &str, name: &str) -> Result<Self> {
        Ok(Self {
            operator: HermitianOperator::single(effect.clone(), label)?,
            source: format!("effect {name}"),
        })
    }
}

/// Transposed Choi operator of a unitary at party A (`A_I ⊗ A_O`).
pub fn choi_of_unitary(u: &UnitaryGate) -> Result<ChoiOperator> {
    ChoiOperator::of_unitary(u, A_IN, A_OUT)
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[&[c(0., 0.), c(1., 0.)], &[c(1., 0.), c(0., 0.)]])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_real_diagonal(&[1.0, -1.0])
}

/// `𝒜 ⊗ ℬ ⊗ X̂` on the standard process space.
pub fn pair_observable(a: &UnitaryGate, b: &UnitaryGate) -> Result<HermitianOperator> {
    let ca = ChoiOperator::of_unitary(a, A_IN, A_OUT)?;
    let cb = ChoiOperator::of_unitary(b, B_IN, B_OUT)?;
    let x = HermitianOperator::single(pauli_x(), C_IN)?;
    ca.operator.kron(&cb.operator)?.kron(&x)
}

/// Validity flags of a candidate process matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessValidity {
    pub min_eigenvalue: f64,
    pub trace: f64,
    pub psd: bool,
    pub trace_ok: bool,
}

/// Process matrix on `(A_I, A_O, B_I, B_O, C_I)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProcessMatrix {
    operator: HermitianOperator,
}

impl ProcessMatrix {
    /// Checks subsystem order, positivity (to 1e-10) and `tr W = d_{A_O} d_{B_O}`.
    pub fn new(operator: HermitianOperator) -> Result<Self> {
        let w = Self::unchecked(operator)?;
        let v = w.validity()?;
        if !v.psd {
            return Err(Error::InvalidProcess(format!(
                "not positive semidefinite (min eigenvalue {:e})",
                v.min_eigenvalue
            )));
        }
        if !v.trace_ok {
            return Err(Error::InvalidProcess(format!(
                "trace {} != {}",
                v.trace,
                w.expected_trace()
            )));
        }
        Ok(w)
    }

    /// Only checks the subsystem layout; used for unnormalized cone elements.
    pub fn unchecked(operator: HermitianOperator) -> Result<Self> {
        if operator.labels() != PROCESS_LABELS {
            return Err(Error::InvalidProcess(format!(
                "subsystems {:?}, expected {:?}",
                operator.labels(),
                PROCESS_LABELS
            )));
        }
        Ok(Self { operator })
    }

    pub fn validity(&self) -> Result<ProcessValidity> {
        let min_eigenvalue = self.operator.min_eigenvalue()?;
        let trace = self.operator.trace();
        Ok(ProcessValidity {
            min_eigenvalue,
            trace,
            psd: min_eigenvalue >= -PSD_TOL,
            trace_ok: (trace - self.expected_trace()).abs() <= TRACE_TOL,
        })
    }

    pub fn expected_trace(&self) -> f64 {
        let dims = self.operator.dims();
        (dims[1] * dims[3]) as f64
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.operator
    }

    pub fn into_operator(self) -> HermitianOperator {
        self.operator
    }

    pub fn trace(&self) -> f64 {
        self.operator.trace()
    }

    /// Convex combination `p·self + (1-p)·other`.
    pub fn mix(&self, p: f64, other: &Self) -> Result<Self> {
        let op = self.operator.scaled(p).add(&other.operator.scaled(1.0 - p))?;
        Ok(Self { operator: op })
    }

    /// Exchanges the roles of parties A and B.
    pub fn swap_parties(&self) -> Result<Self> {
        let swapped = self
            .operator
            .permute(&[B_IN, B_OUT, A_IN, A_OUT, C_IN])?
            .relabel(&[(B_IN, "tmp_i"), (B_OUT, "tmp_o")])?
            .relabel(&[(A_IN, B_IN), (A_OUT, B_OUT)])?
            .relabel(&[("tmp_i", A_IN), ("tmp_o", A_OUT)])?;
        Self::unchecked(swapped)
    }
}

/// Generalized Born rule `tr[(M_1 ⊗ M_2 ⊗ …) W]`.
pub fn born_probability(maps: &[&ChoiOperator], w: &ProcessMatrix) -> Result<f64> {
    let (first, rest) = maps
        .split_first()
        .ok_or_else(|| Error::DimensionMismatch("no maps given".into()))?;
    let mut joint = first.operator.clone();
    for m in rest {
        joint = joint.kron(&m.operator)?;
    }
    if joint.subsystems() != w.operator().subsystems() {
        return Err(Error::DimensionMismatch(format!(
            "maps act on {:?}, process on {:?}",
            joint.labels(),
            w.operator().labels()
        )));
    }
    Ok(joint.inner(w.operator()))
}

/// Process matrix of the quantum switch with target `target` and control `control`.
///
/// The pure process vector lives on `(A_I, A_O, B_I, B_O, C_t, C_c)`:
/// `c₀ |ψ⟩_{A_I}|1⟩⟩_{A_O B_I}|1⟩⟩_{B_O C_t}|0⟩ + c₁ |ψ⟩_{B_I}|1⟩⟩_{B_O A_I}|1⟩⟩_{A_O C_t}|1⟩`.
/// The target output `C_t` is traced out and the control becomes `C_I`.
pub fn switch_process(target: &PureState, control: &PureState) -> Result<ProcessMatrix> {
    if control.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "control must be a qubit, got dimension {}",
            control.dim()
        )));
    }
    let d = target.dim();
    let psi = target.amplitudes();
    let (c0, c1) = (control.amplitudes()[0], control.amplitudes()[1]);
    // index (ai, ao, bi, bo, ct, cc) -> flat
    let flat = |ai: usize, ao: usize, bi: usize, bo: usize, ct: usize, cc: usize| {
        ((((ai * d + ao) * d + bi) * d + bo) * d + ct) * 2 + cc
    };
    let n = d.pow(5) * 2;
    let mut w = vec![c(0., 0.); n];
    for ai in 0..d {
        for ao in 0..d {
            // A first: A_O wired to B_I, B_O wired to the target output
            for bo in 0..d {
                w[flat(ai, ao, ao, bo, bo, 0)] += c0 * psi[ai];
            }
        }
    }
    for bi in 0..d {
        for bo in 0..d {
            // B first: B_O wired to A_I, A_O wired to the target output
            for ao in 0..d {
                w[flat(bo, ao, bi, bo, ao, 1)] += c1 * psi[bi];
            }
        }
    }
    let full = HermitianOperator::new(
        ComplexMatrix::outer(&w, &w),
        vec![
            Subsystem::new(A_IN, d),
            Subsystem::new(A_OUT, d),
            Subsystem::new(B_IN, d),
            Subsystem::new(B_OUT, d),
            Subsystem::new("C_t", d),
            Subsystem::new(C_IN, 2),
        ],
    )?;
    ProcessMatrix::new(full.partial_trace(&PROCESS_LABELS)?)
}

/// Standard qubit subsystem layout of a process matrix.
pub fn process_subsystems() -> Vec<Subsystem> {
    PROCESS_LABELS.iter().map(|l| Subsystem::new(*l, 2)).collect()
}

/// `tr[(𝒜 ⊗ ℬ ⊗ X̂) W]`.
pub fn stokes_expectation(w: &ProcessMatrix, a: &UnitaryGate, b: &UnitaryGate) -> Result<f64> {
    let obs = pair_observable(a, b)?;
    if obs.subsystems() != w.operator().subsystems() {
        return Err(Error::DimensionMismatch(format!(
            "gates of dimension {} on process {:?}",
            a.dim(),
            w.operator().dims()
        )));
    }
    Ok(obs.inner(w.operator()))
}

/// Maximally mixed process `I₃₂ · 4/32`.
pub fn white_noise_process() -> ProcessMatrix {
    let id = HermitianOperator::identity(process_subsystems()).expect("standard layout");
    ProcessMatrix { operator: id.scaled(4.0 / 32.0) }
}

/// `V·W + (1-V)·(W + Z_C W Z_C)/2`: removes the control coherence between the two orders.
pub fn dephase_control(w: &ProcessMatrix, visibility: f64) -> Result<ProcessMatrix> {
    if !(0.0..=1.0).contains(&visibility) {
        return Err(Error::OutOfRange(format!("visibility {visibility} not in [0, 1]")));
    }
    let dims = w.operator().dims();
    let rest: usize = dims[..4].iter().product();
    let zc = ComplexMatrix::identity(rest).kron(&pauli_z());
    let m = w.operator().matrix();
    let conj = zc.matmul(m).matmul(&zc);
    let dephased = (m + &conj).scale(0.5);
    let mut out = dephased.scale(1.0 - visibility);
    out.axpy(visibility, m);
    Ok(ProcessMatrix {
        operator: HermitianOperator::from_parts(out, w.operator().subsystems().to_vec()),
    })
}
