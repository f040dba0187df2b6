//! First-order conic solver: over-relaxed ADMM between an affine/quadratic
//! part (handled by a problem-specific proximal step) and a product of cones
//! (PSD blocks via eigenvalue clipping, free reals, optional ℓ1 on the reals).
//!
//! Iteration, with relaxation α and penalty ρ:
//!
//! ```text
//! x  = prox_f(z − u, ρ)
//! x̂  = α x + (1 − α) z
//! z' = Π_K(x̂ + u)
//! u' = u + x̂ − z'
//! ```
//!
//! Converged when `max(‖x − z'‖, ρ‖z' − z‖) ≤ tol`. The scaled multiplier
//! `ρu` is returned as the dual point.

use serde::{Deserialize, Serialize};

use crate::matstack::{eigh_warm, eigh_matrix, ComplexMatrix};

/// Variable of a split problem: a real vector and a list of Hermitian blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub free: Vec<f64>,
    pub blocks: Vec<ComplexMatrix>,
}

impl Point {
    pub fn new(free: Vec<f64>, blocks: Vec<ComplexMatrix>) -> Self {
        Self { free, blocks }
    }

    pub fn zeros_like(other: &Self) -> Self {
        Self {
            free: vec![0.0; other.free.len()],
            blocks: other.blocks.iter().map(|b| ComplexMatrix::zeros(b.dim())).collect(),
        }
    }

    /// `a·self + b·other`
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        Self {
            free: self.free.iter().zip(&other.free).map(|(x, y)| a * x + b * y).collect(),
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(x, y)| {
                    let mut out = x.scale(a);
                    out.axpy(b, y);
                    out
                })
                .collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        let f: f64 = self.free.iter().map(|x| x * x).sum();
        let m: f64 = self.blocks.iter().map(|b| b.frobenius_norm().powi(2)).sum();
        (f + m).sqrt()
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.combine(1.0, other, -1.0).norm()
    }
}

/// Cone attached to one Hermitian block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockCone {
    Psd,
    Free,
}

/// Non-smooth term on the free reals, handled in the cone step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FreeTerm {
    None,
    /// `weight · ‖x‖₁`
    L1(f64),
}

/// A problem `min f(x) + g(x)` where `g` is the indicator of the block cones
/// (plus an optional ℓ1 term) and `f` has an inexpensive proximal operator.
pub trait SplitProblem {
    fn cones(&self) -> Vec<BlockCone>;

    fn free_term(&self) -> FreeTerm {
        FreeTerm::None
    }

    fn initial_point(&self) -> Point;

    /// `argmin_x f(x) + ρ/2 ‖x − v‖²`
    fn prox(&self, v: &Point, rho: f64) -> Point;

    fn objective(&self, x: &Point) -> f64;

    /// Least-squares residual of the affine constraints; nonzero means they are inconsistent.
    fn inconsistency(&self) -> f64 {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iterations: usize,
    pub rho: f64,
    pub alpha: f64,
    pub adaptive_rho: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iterations: 50_000,
            rho: 1.0,
            alpha: 1.6,
            adaptive_rho: true,
        }
    }
}

impl SolverSettings {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iterations(mut self, cap: usize) -> Self {
        self.max_iterations = cap;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Converged,
    IterationCap,
    InconsistentConstraints,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub converged: bool,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub objective: f64,
    pub status: SolverStatus,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    /// Iterate satisfying the affine part exactly.
    pub x: Point,
    /// Iterate lying in the cone exactly.
    pub z: Point,
    /// Multiplier of the consensus constraint `x = z`.
    pub dual: Point,
    pub diagnostics: SolverDiagnostics,
}

const RHO_MIN: f64 = 1e-4;
const RHO_MAX: f64 = 1e4;
const ADAPT_EVERY: usize = 25;

/// Runs ADMM on `problem`, optionally warm-started from a previous `(z, u)` pair.
pub fn solve_sdp<P: SplitProblem + ?Sized>(
    problem: &P,
    settings: &SolverSettings,
    warm: Option<(&Point, &Point)>,
) -> SdpSolution {
    let cones = problem.cones();
    let free_term = problem.free_term();
    let (mut z, mut u) = match warm {
        Some((z0, u0)) => (z0.clone(), u0.clone()),
        None => {
            let z0 = problem.initial_point();
            let u0 = Point::zeros_like(&z0);
            (z0, u0)
        }
    };
    assert_eq!(z.blocks.len(), cones.len(), "cone list does not match point layout");

    let inconsistency = problem.inconsistency();
    if inconsistency > settings.tol {
        let x = problem.prox(&z, settings.rho);
        let objective = problem.objective(&x);
        return SdpSolution {
            dual: Point::zeros_like(&x),
            diagnostics: SolverDiagnostics {
                converged: false,
                iterations: 0,
                primal_residual: inconsistency,
                dual_residual: f64::NAN,
                objective,
                status: SolverStatus::InconsistentConstraints,
            },
            x,
            z,
        };
    }

    let mut rho = settings.rho;
    let alpha = settings.alpha;
    let mut bases: Vec<Option<ComplexMatrix>> = vec![None; cones.len()];
    let mut x = z.clone();
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < settings.max_iterations {
        iterations += 1;
        x = problem.prox(&z.combine(1.0, &u, -1.0), rho);
        let relaxed = x.combine(alpha, &z, 1.0 - alpha);
        let shifted = relaxed.combine(1.0, &u, 1.0);
        let z_new = project_cones(&shifted, &cones, free_term, rho, &mut bases);
        u = shifted.combine(1.0, &z_new, -1.0);
        primal = x.distance(&z_new);
        dual = rho * z_new.distance(&z);
        z = z_new;
        if primal <= settings.tol && dual <= settings.tol {
            converged = true;
            break;
        }
        if settings.adaptive_rho && iterations % ADAPT_EVERY == 0 {
            let factor = if primal > 10.0 * dual {
                2.0
            } else if dual > 10.0 * primal {
                0.5
            } else {
                1.0
            };
            let next = (rho * factor).clamp(RHO_MIN, RHO_MAX);
            if next != rho {
                // keep ρu fixed
                u = u.combine(rho / next, &u, 0.0);
                rho = next;
            }
        }
    }

    let objective = problem.objective(&x);
    SdpSolution {
        dual: u.combine(rho, &u, 0.0),
        diagnostics: SolverDiagnostics {
            converged,
            iterations,
            primal_residual: primal,
            dual_residual: dual,
            objective,
            status: if converged {
                SolverStatus::Converged
            } else {
                SolverStatus::IterationCap
            },
        },
        x,
        z,
    }
}

fn project_cones(
    v: &Point,
    cones: &[BlockCone],
    free_term: FreeTerm,
    rho: f64,
    bases: &mut [Option<ComplexMatrix>],
) -> Point {
    let free = match free_term {
        FreeTerm::None => v.free.clone(),
        FreeTerm::L1(weight) => {
            let t = weight / rho;
            v.free
                .iter()
                .map(|&x| x.signum() * (x.abs() - t).max(0.0))
                .collect()
        }
    };
    let blocks = v
        .blocks
        .iter()
        .zip(cones)
        .zip(bases.iter_mut())
        .map(|((b, cone), basis)| match cone {
            BlockCone::Free => b.clone(),
            BlockCone::Psd => psd_clip(b, basis),
        })
        .collect();
    Point { free, blocks }
}

/// Eigenvalue clipping with a cached eigenbasis for warm starts.
fn psd_clip(m: &ComplexMatrix, basis: &mut Option<ComplexMatrix>) -> ComplexMatrix {
    let eig = match eigh_warm(m, basis.as_ref()) {
        Ok(e) => e,
        // a stale basis can only slow Jacobi down; retry from scratch
        Err(_) => eigh_matrix(m).expect("Jacobi failed on a finite Hermitian matrix"),
    };
    let out = eig.reconstruct_with(|l| l.max(0.0));
    *basis = Some(eig.vectors);
    out
}

/// Generic dense SDP in standard form:
/// `min Σ_k ⟨C_k, X_k⟩ s.t. Σ_k ⟨A_jk, X_k⟩ = b_j, X_k ⪰ 0`.
///
/// Intended for small constraint counts; the affine projection uses the
/// pseudo-inverse of the constraint Gram matrix.
#[derive(Clone, Debug)]
pub struct LinearSdp {
    objective: Vec<ComplexMatrix>,
    constraints: Vec<(Vec<ComplexMatrix>, f64)>,
    gram_pinv: Vec<f64>,
    inconsistency: f64,
}

impl LinearSdp {
    pub fn new(objective: Vec<ComplexMatrix>, constraints: Vec<(Vec<ComplexMatrix>, f64)>) -> Self {
        let m = constraints.len();
        let mut gram = ComplexMatrix::zeros(m.max(1));
        for i in 0..m {
            for j in 0..m {
                let g: f64 = constraints[i]
                    .0
                    .iter()
                    .zip(&constraints[j].0)
                    .map(|(a, b)| a.real_inner(b))
                    .sum();
                gram[(i, j)] = g.into();
            }
        }
        let eig = eigh_matrix(&gram).expect("Gram matrix is symmetric");
        let cutoff = 1e-12 * eig.values.iter().fold(0.0f64, |a, &l| a.max(l.abs())).max(1e-300);
        let pinv = eig.reconstruct_with(|l| if l.abs() > cutoff { 1.0 / l } else { 0.0 });
        let gram_pinv: Vec<f64> = pinv.as_slice().iter().map(|z| z.re).collect();
        let mut sdp = Self {
            objective,
            constraints,
            gram_pinv,
            inconsistency: 0.0,
        };
        // minimum-norm least-squares point and its residual
        let zero = Point::new(vec![], sdp.objective.iter().map(|c| ComplexMatrix::zeros(c.dim())).collect());
        let x0 = sdp.project(&zero);
        let resid: f64 = sdp
            .constraints
            .iter()
            .map(|(a, b)| {
                let lhs: f64 = a.iter().zip(&x0.blocks).map(|(ak, xk)| ak.real_inner(xk)).sum();
                (lhs - b).powi(2)
            })
            .sum();
        sdp.inconsistency = resid.sqrt();
        sdp
    }

    fn project(&self, v: &Point) -> Point {
        let m = self.constraints.len();
        let resid: Vec<f64> = self
            .constraints
            .iter()
            .map(|(a, b)| a.iter().zip(&v.blocks).map(|(ak, vk)| ak.real_inner(vk)).sum::<f64>() - b)
            .collect();
        let lambda: Vec<f64> = (0..m)
            .map(|i| (0..m).map(|j| self.gram_pinv[i * m.max(1) + j] * resid[j]).sum())
            .collect();
        let mut out = v.clone();
        for ((a, _), l) in self.constraints.iter().zip(&lambda) {
            for (xk, ak) in out.blocks.iter_mut().zip(a) {
                xk.axpy(-l, ak);
            }
        }
        out
    }
}

impl SplitProblem for LinearSdp {
    fn cones(&self) -> Vec<BlockCone> {
        vec![BlockCone::Psd; self.objective.len()]
    }

    fn initial_point(&self) -> Point {
        Point::new(vec![], self.objective.iter().map(|c| ComplexMatrix::zeros(c.dim())).collect())
    }

    fn prox(&self, v: &Point, rho: f64) -> Point {
        let shifted = Point::new(
            vec![],
            v.blocks
                .iter()
                .zip(&self.objective)
                .map(|(vk, ck)| {
                    let mut out = vk.clone();
                    out.axpy(-1.0 / rho, ck);
                    out
                })
                .collect(),
        );
        self.project(&shifted)
    }

    fn objective(&self, x: &Point) -> f64 {
        x.blocks.iter().zip(&self.objective).map(|(xk, ck)| ck.real_inner(xk)).sum()
    }

    fn inconsistency(&self) -> f64 {
        self.inconsistency
    }
}
