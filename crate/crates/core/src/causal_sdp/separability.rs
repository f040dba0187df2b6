use serde::{Deserialize, Serialize};

use super::cones::{CausalOrder, CombProjector, OrderedConeSpec};
use super::problems::{ConeMembershipProblem, ConeMinimumProblem, FullWitnessProblem, SeparabilityProblem};
use super::solver::{solve_sdp, Point, SolverDiagnostics, SolverSettings};
use crate::error::{Error, Result};
use crate::matstack::{eigh_matrix, ComplexMatrix, HermitianOperator};
use crate::processes::{white_noise_process, ProcessMatrix, PROCESS_LABELS};

/// Bracket for the bisection over the noise weight.
pub const ROBUSTNESS_BRACKET: (f64, f64) = (0.0, 4.0);
pub const BISECTION_TOL: f64 = 1e-4;
/// Decomposition gap below which a probe counts as separable during bisection.
const BISECTION_GAP: f64 = 1e-6;

/// `W ≈ q·w_ab + (1−q)·w_ba`.
#[derive(Clone, Debug)]
pub struct SeparableDecomposition {
    pub q: f64,
    pub w_ab: ProcessMatrix,
    pub w_ba: ProcessMatrix,
    /// Largest of the reproduction gap and the distance of either part from its comb subspace.
    pub residual: f64,
}

/// A Hermitian `S` that is nonnegative on both cones but negative on the tested process.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub witness: HermitianOperator,
    /// `tr[S W]`
    pub value: f64,
    /// `min tr[S W']` over each normalized cone, found by inner minimization.
    pub cone_minima: [f64; 2],
    pub diagnostics: SolverDiagnostics,
}

#[derive(Clone, Debug)]
pub enum Separability {
    Separable(SeparableDecomposition),
    Nonseparable(Certificate),
}

impl Separability {
    pub fn is_separable(&self) -> bool {
        matches!(self, Separability::Separable(_))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RobustnessResult {
    pub r_star: f64,
    /// Dual witness, normalized to `tr[S·white_noise] = 1`.
    pub witness: HermitianOperator,
    /// `tr[S W]`; equals `−r_star` up to solver accuracy.
    pub witness_value: f64,
    pub bisection_steps: usize,
    pub diagnostics: SolverDiagnostics,
}

fn projectors() -> (CombProjector, CombProjector) {
    (
        OrderedConeSpec::new(CausalOrder::AThenB).projector(),
        OrderedConeSpec::new(CausalOrder::BThenA).projector(),
    )
}

fn projector(order: CausalOrder) -> CombProjector {
    OrderedConeSpec::new(order).projector()
}

fn check_layout(w: &HermitianOperator) -> Result<()> {
    if w.labels() != PROCESS_LABELS || w.dims() != [2; 5] {
        return Err(Error::DimensionMismatch(format!(
            "expected qubit process layout {:?}, got {:?} with dims {:?}",
            PROCESS_LABELS,
            w.labels(),
            w.dims()
        )));
    }
    Ok(())
}

fn operator_norm(m: &ComplexMatrix) -> Result<f64> {
    let e = eigh_matrix(m)?;
    Ok(e.values.iter().fold(0.0f64, |a, l| a.max(l.abs())))
}

/// Smallest `c ≥ 0` such that `S + c·I` is provably nonnegative on both normalized cones,
/// given PSD multipliers `Z_k` with `L_k(S − Z_k) ≈ 0`.
pub(crate) fn soundness_shift(
    s: &ComplexMatrix,
    multipliers: [&ComplexMatrix; 2],
    cones: [&CombProjector; 2],
) -> Result<f64> {
    let mut shift = 0.0f64;
    for (z, cone) in multipliers.into_iter().zip(cones) {
        let residual = cone.apply(&(s - z));
        // tr[S W'] ≥ tr[Z W'] − ‖R‖_op · tr W', and tr[I W'] = tr W'
        shift = shift.max(operator_norm(&residual)?);
    }
    Ok(shift)
}

/// Adds `shift·I` and rescales so that `tr S = 8`.
pub(crate) fn shift_and_normalize(s: &ComplexMatrix, shift: f64) -> ComplexMatrix {
    let mut out = s.clone();
    out.axpy(shift, &ComplexMatrix::identity(s.dim()));
    out.scale(8.0 / out.trace().re)
}

fn separability_solve(
    w: &ComplexMatrix,
    cones: (&CombProjector, &CombProjector),
    settings: &SolverSettings,
    warm: Option<(&Point, &Point)>,
) -> (super::solver::SdpSolution, f64) {
    let problem = SeparabilityProblem::new(cones.0, cones.1, w);
    let sol = solve_sdp(&problem, settings, warm);
    let gap = problem.gap(&sol.z);
    (sol, gap)
}

/// Membership residual of `w` in one normalized cone.
pub fn cone_membership(w: &HermitianOperator, order: CausalOrder) -> Result<(f64, SolverDiagnostics)> {
    check_layout(w)?;
    let cone = projector(order);
    let problem = ConeMembershipProblem::new(&cone, w.matrix());
    let sol = solve_sdp(&problem, &SolverSettings::default(), None);
    let residual = (w.matrix() - &sol.z.blocks[0]).frobenius_norm()
        .max(cone.complement(&sol.z.blocks[0]).frobenius_norm())
        .max((sol.z.blocks[0].trace().re - cone.trace()).abs());
    Ok((residual, sol.diagnostics))
}

/// `min tr[S W']` over the normalized cone of `order`.
pub fn cone_minimum(s: &HermitianOperator, order: CausalOrder) -> Result<(f64, SolverDiagnostics)> {
    check_layout(s)?;
    let cone = projector(order);
    let problem = ConeMinimumProblem::new(&cone, s.matrix());
    let sol = solve_sdp(&problem, &SolverSettings::default(), None);
    if !sol.diagnostics.converged {
        return Err(Error::SolverFailure(sol.diagnostics));
    }
    // the PSD iterate, pushed back onto the affine subspace
    let value = cone.apply_affine(&sol.z.blocks[0]).real_inner(s.matrix());
    Ok((value.min(sol.diagnostics.objective), sol.diagnostics))
}

/// Optimal witness for `w` over the full dual cone, with the soundness shift applied.
fn full_witness(w: &ComplexMatrix, cones: (&CombProjector, &CombProjector)) -> Result<(ComplexMatrix, SolverDiagnostics)> {
    let problem = FullWitnessProblem::new(cones.0, cones.1, w);
    let sol = solve_sdp(&problem, &SolverSettings::default(), None);
    if !sol.diagnostics.converged {
        return Err(Error::SolverFailure(sol.diagnostics));
    }
    let z = &sol.z.blocks;
    let shift = soundness_shift(&z[0], [&z[1], &z[2]], [cones.0, cones.1])?;
    Ok((shift_and_normalize(&z[0], shift), sol.diagnostics))
}

/// Decides whether `w` is a convex mixture of the two fixed-order cones.
///
/// Either returns a decomposition whose residual is at most `tol`, or a
/// certificate `S` with `tr[S w] < 0` whose cone minima were checked by an
/// inner minimization. A solver stalling at the iteration cap is reported as
/// [`Error::SolverFailure`], never as a verdict.
pub fn is_causally_separable(w: &ProcessMatrix, tol: f64) -> Result<Separability> {
    check_layout(w.operator())?;
    let (pa, pb) = projectors();
    let m = w.operator().matrix();
    let settings = SolverSettings::default().with_tol((tol / 10.0).min(1e-7));
    let (sol, gap) = separability_solve(m, (&pa, &pb), &settings, None);

    if gap <= tol {
        let subsystems = w.operator().subsystems().to_vec();
        let z1 = &sol.z.blocks[0];
        let z2 = &sol.z.blocks[1];
        let q = (z1.trace().re / 4.0).clamp(0.0, 1.0);
        let part = |z: &ComplexMatrix, weight: f64| -> Result<ProcessMatrix> {
            if weight <= f64::EPSILON {
                return Ok(white_noise_process());
            }
            ProcessMatrix::unchecked(HermitianOperator::new(z.scale(1.0 / weight), subsystems.clone())?)
        };
        return Ok(Separability::Separable(SeparableDecomposition {
            q,
            w_ab: part(z1, q)?,
            w_ba: part(z2, 1.0 - q)?,
            residual: gap,
        }));
    }
    if !sol.diagnostics.converged {
        return Err(Error::SolverFailure(sol.diagnostics));
    }

    let (s, diagnostics) = full_witness(m, (&pa, &pb))?;
    let value = s.real_inner(m);
    let witness = HermitianOperator::new(s, w.operator().subsystems().to_vec())?;
    let (min_ab, _) = cone_minimum(&witness, CausalOrder::AThenB)?;
    let (min_ba, _) = cone_minimum(&witness, CausalOrder::BThenA)?;
    if value >= 0.0 || min_ab.min(min_ba) < -tol {
        return Err(Error::Inconclusive {
            gap,
            certificate_value: value,
        });
    }
    Ok(Separability::Nonseparable(Certificate {
        witness,
        value,
        cone_minima: [min_ab, min_ba],
        diagnostics,
    }))
}

/// Random robustness: the least `r ≥ 0` for which `(W + r·𝟙°)/(1 + r)` is separable,
/// `𝟙°` being the white-noise process.
///
/// Found by bisection on `[0, 4]` to within `1e-4`, then certified by the
/// optimal dual witness.
pub fn random_robustness(w: &ProcessMatrix) -> Result<RobustnessResult> {
    check_layout(w.operator())?;
    let (pa, pb) = projectors();
    let m = w.operator().matrix();
    let noise = white_noise_process();
    let noise = noise.operator().matrix();
    let noisy = |r: f64| -> ComplexMatrix {
        let mut out = m.clone();
        out.axpy(r, noise);
        out.scale(1.0 / (1.0 + r))
    };
    let settings = SolverSettings::default();

    let (mut lo, mut hi) = ROBUSTNESS_BRACKET;
    let mut steps = 0;
    let (first, gap0) = separability_solve(m, (&pa, &pb), &settings, None);
    if !first.diagnostics.converged && gap0 > BISECTION_GAP {
        return Err(Error::SolverFailure(first.diagnostics));
    }
    let mut warm = (first.z, first.dual.combine(1.0 / settings.rho, &first.dual, 0.0));
    if gap0 <= BISECTION_GAP {
        hi = 0.0;
    } else {
        while hi - lo > BISECTION_TOL {
            steps += 1;
            let mid = 0.5 * (lo + hi);
            let (sol, gap) = separability_solve(&noisy(mid), (&pa, &pb), &settings, Some((&warm.0, &warm.1)));
            if gap <= BISECTION_GAP {
                hi = mid;
            } else if sol.diagnostics.converged {
                lo = mid;
            } else {
                return Err(Error::SolverFailure(sol.diagnostics));
            }
            warm = (sol.z, sol.dual.combine(1.0 / settings.rho, &sol.dual, 0.0));
        }
    }

    let (s, diagnostics) = full_witness(m, (&pa, &pb))?;
    let witness_value = s.real_inner(m);
    let witness = HermitianOperator::new(s, w.operator().subsystems().to_vec())?;
    Ok(RobustnessResult {
        r_star: hi,
        witness,
        witness_value,
        bisection_steps: steps,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::{switch_process, PureState};

    fn ideal_switch() -> ProcessMatrix {
        switch_process(&PureState::zero(), &PureState::plus()).unwrap()
    }

    #[test]
    fn fixed_order_is_separable_with_q_one() {
        let w = switch_process(&PureState::zero(), &PureState::zero()).unwrap();
        match is_causally_separable(&w, 1e-6).unwrap() {
            Separability::Separable(d) => {
                assert!((d.q - 1.0).abs() < 1e-5, "q = {}", d.q);
                assert!(d.residual <= 1e-6);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn white_noise_is_separable() {
        assert!(is_causally_separable(&white_noise_process(), 1e-6).unwrap().is_separable());
    }

    #[test]
    fn ideal_switch_gets_certificate() {
        match is_causally_separable(&ideal_switch(), 1e-6).unwrap() {
            Separability::Nonseparable(c) => {
                assert!(c.value < -1.0, "{}", c.value);
                assert!(c.cone_minima.iter().all(|&m| m >= -1e-6), "{:?}", c.cone_minima);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn robustness_of_ideal_switch() {
        let r = random_robustness(&ideal_switch()).unwrap();
        eprintln!("{} {} {:?}", r.r_star, r.witness_value, r.diagnostics);
        assert!((r.r_star + r.witness_value).abs() < 1e-3);
    }
}
