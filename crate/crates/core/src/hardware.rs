//! Optical realization of single-qubit gates on the spatial-mode qubit:
//! two image-rotating prisms `R(θ)` interleaved with cylindrical-lens phase
//! elements `C = diag(1, i)`, plus an explicit global phase.
//!
//! `U = e^{iφ} · C · R(θ₂) · C · R(θ₁)`, with `R(θ) = [[cos2θ, sin2θ], [sin2θ, −cos2θ]]`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matstack::ComplexMatrix;
use crate::processes::UnitaryGate;

/// Max-norm distance a compiled recipe must reach.
pub const RECIPE_TOL: f64 = 1e-9;
/// Largest angular error accepted by [`realized_with_errors`].
pub const MAX_ANGLE_ERROR_DEG: f64 = 5.0;

const COARSE_STEP_DEG: f64 = 0.5;
const REFINE_CANDIDATES: usize = 12;
const NEWTON_STEPS: usize = 60;

pub fn prism(theta_deg: f64) -> ComplexMatrix {
    let t = 2.0 * theta_deg.to_radians();
    let (s, c) = t.sin_cos();
    ComplexMatrix::from_rows(&[
        &[Complex64::new(c, 0.0), Complex64::new(s, 0.0)],
        &[Complex64::new(s, 0.0), Complex64::new(-c, 0.0)],
    ])
}

pub fn lens_phase() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[
        &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        &[Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0)],
    ])
}

/// `C · R(θ₂) · C · R(θ₁)` without the global phase.
pub fn element_chain(theta1_deg: f64, theta2_deg: f64) -> ComplexMatrix {
    let c = lens_phase();
    c.matmul(&prism(theta2_deg)).matmul(&c).matmul(&prism(theta1_deg))
}

fn realize(theta1_deg: f64, theta2_deg: f64, phase: f64) -> ComplexMatrix {
    element_chain(theta1_deg, theta2_deg).scale_complex(Complex64::from_polar(1.0, phase))
}

#[derive(Clone, Debug, PartialEq)]
pub struct OpticalRecipe {
    pub theta1_deg: f64,
    pub theta2_deg: f64,
    /// Radians, in `(−π, π]`.
    pub global_phase: f64,
    pub realized: UnitaryGate,
}

impl OpticalRecipe {
    pub fn new(name: &str, theta1_deg: f64, theta2_deg: f64, global_phase: f64) -> Result<Self> {
        Ok(Self {
            theta1_deg,
            theta2_deg,
            global_phase,
            realized: UnitaryGate::new(name, realize(theta1_deg, theta2_deg, global_phase))?,
        })
    }

    pub fn name(&self) -> &str {
        self.realized.name()
    }
}

/// Best global phase for `target ≈ e^{iφ} m` and the resulting max-norm distance.
fn phase_fit(target: &ComplexMatrix, m: &ComplexMatrix) -> (f64, f64) {
    let overlap = m.inner(target);
    let phase = if overlap.norm() > 0.0 { overlap.arg() } else { 0.0 };
    let fitted = m.scale_complex(Complex64::from_polar(1.0, phase));
    (phase, (target - &fitted).max_abs())
}

/// Residual vector (real and imaginary parts of `e^{iφ}M(θ) − U`).
fn residual(target: &ComplexMatrix, p: [f64; 3]) -> [f64; 8] {
    let d = &realize(p[0], p[1], p[2]) - target;
    let s = d.as_slice();
    let mut out = [0.0; 8];
    for k in 0..4 {
        out[2 * k] = s[k].re;
        out[2 * k + 1] = s[k].im;
    }
    out
}

/// Gauss–Newton on the 8-component residual, with a numerical Jacobian.
fn refine(target: &ComplexMatrix, mut p: [f64; 3]) -> [f64; 3] {
    const H: [f64; 3] = [1e-6, 1e-6, 1e-8];
    for _ in 0..NEWTON_STEPS {
        let r = residual(target, p);
        let norm: f64 = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-15 {
            break;
        }
        let mut jac = [[0.0; 3]; 8];
        for j in 0..3 {
            let mut q = p;
            q[j] += H[j];
            let rq = residual(target, q);
            for i in 0..8 {
                jac[i][j] = (rq[i] - r[i]) / H[j];
            }
        }
        // normal equations with a small Levenberg damping
        let mut a = [[0.0; 3]; 3];
        let mut b = [0.0; 3];
        for i in 0..8 {
            for j in 0..3 {
                b[j] -= jac[i][j] * r[i];
                for k in 0..3 {
                    a[j][k] += jac[i][j] * jac[i][k];
                }
            }
        }
        for (j, row) in a.iter_mut().enumerate() {
            row[j] += 1e-12 * (1.0 + row[j]);
        }
        let Some(step) = solve3(a, b) else { break };
        let mut next = p;
        for j in 0..3 {
            next[j] += step[j];
        }
        let next_norm: f64 = residual(target, next).iter().map(|x| x * x).sum::<f64>().sqrt();
        if next_norm >= norm {
            break;
        }
        p = next;
    }
    p
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&a);
    if d.abs() < 1e-300 {
        return None;
    }
    let mut x = [0.0; 3];
    for (col, xc) in x.iter_mut().enumerate() {
        let mut m = a;
        for row in 0..3 {
            m[row][col] = b[row];
        }
        *xc = det(&m) / d;
    }
    Some(x)
}

fn wrap_phase(phi: f64) -> f64 {
    let mut p = phi.rem_euclid(2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    }
    p
}

/// Maps θ into `(−45°, 45°]`; `R(θ + 90°) = −R(θ)`, so each shift costs a phase of π.
fn canonical_angle(theta: f64) -> (f64, f64) {
    const SNAP: f64 = 1e-9;
    let k = ((theta - 45.0) / 90.0).ceil();
    let mut t = theta - 90.0 * k;
    let mut flips = k;
    if (t + 45.0).abs() < SNAP {
        t += 90.0;
        flips -= 1.0;
    }
    if (t - 45.0).abs() < SNAP {
        t = 45.0;
    }
    if t.abs() < SNAP {
        t = 0.0;
    }
    (t, flips.rem_euclid(2.0) * PI)
}

fn canonical(p: [f64; 3]) -> [f64; 3] {
    let (t1, f1) = canonical_angle(p[0]);
    let (t2, f2) = canonical_angle(p[1]);
    let mut phase = wrap_phase(p[2] + f1 + f2);
    if phase.abs() < 1e-12 {
        phase = 0.0;
    }
    [t1, t2, phase]
}

/// Finds `(θ₁, θ₂, φ)` reproducing `u` to [`RECIPE_TOL`] in max-norm.
///
/// A 0.5° scan over one period of both prism angles seeds Gauss–Newton
/// refinement from the best grid points. Several recipes can realize the same
/// gate; the one with the smallest `|θ₁| + |θ₂|` after canonicalization wins,
/// ties broken by the larger `θ₁`.
pub fn compile_unitary(u: &UnitaryGate) -> Result<OpticalRecipe> {
    if u.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "optical recipes exist for qubit gates only, got dimension {}",
            u.dim()
        )));
    }
    let target = u.matrix();
    let steps = (180.0 / COARSE_STEP_DEG) as usize;
    let mut grid: Vec<(f64, [f64; 3])> = Vec::with_capacity(steps * steps);
    for i in 0..steps {
        let t1 = -90.0 + COARSE_STEP_DEG * (i as f64 + 1.0);
        for j in 0..steps {
            let t2 = -90.0 + COARSE_STEP_DEG * (j as f64 + 1.0);
            let (phase, dist) = phase_fit(target, &element_chain(t1, t2));
            grid.push((dist, [t1, t2, phase]));
        }
    }
    grid.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut best: Option<([f64; 3], f64)> = None;
    let mut closest = f64::INFINITY;
    for (_, seed) in grid.iter().take(REFINE_CANDIDATES) {
        let p = refine(target, *seed);
        let (phase, _) = phase_fit(target, &element_chain(p[0], p[1]));
        let p = canonical([p[0], p[1], phase]);
        let dist = (&realize(p[0], p[1], p[2]) - target).max_abs();
        closest = closest.min(dist);
        if dist > RECIPE_TOL {
            continue;
        }
        let better = match &best {
            None => true,
            Some((q, _)) => {
                let cost = |x: &[f64; 3]| x[0].abs() + x[1].abs();
                let (cp, cq) = (cost(&p), cost(q));
                cp < cq - 1e-6 || ((cp - cq).abs() <= 1e-6 && p[0] > q[0] + 1e-6)
            }
        };
        if better {
            best = Some((p, dist));
        }
    }
    match best {
        Some((p, _)) => OpticalRecipe::new(u.name(), p[0], p[1], p[2]),
        None => Err(Error::NoRecipe {
            name: u.name().to_string(),
            distance: closest,
        }),
    }
}

/// The recipe's gate with prism angles `θ₁ + d1`, `θ₂ + d2` (degrees).
pub fn realized_with_errors(recipe: &OpticalRecipe, d1: f64, d2: f64) -> Result<UnitaryGate> {
    for d in [d1, d2] {
        if !d.is_finite() || d.abs() > MAX_ANGLE_ERROR_DEG {
            return Err(Error::OutOfRange(format!(
                "angular error {d}° exceeds ±{MAX_ANGLE_ERROR_DEG}°"
            )));
        }
    }
    UnitaryGate::new(
        recipe.name(),
        realize(recipe.theta1_deg + d1, recipe.theta2_deg + d2, recipe.global_phase),
    )
}

/// Writes the recipe table with header `gate,theta1_deg,theta2_deg,phase_rad`.
pub fn write_recipe_csv<W: Write>(recipes: &[OpticalRecipe], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["gate", "theta1_deg", "theta2_deg", "phase_rad"])?;
    for r in recipes {
        w.write_record([
            r.name().to_string(),
            format!("{}", r.theta1_deg),
            format!("{}", r.theta2_deg),
            format!("{}", r.global_phase),
        ])?;
    }
    w.flush()?;
    Ok(())
}
