//! The structured conic problems behind separability, robustness and certificate checks.
//!
//! All of them live on the two comb subspaces, which are ranges of commuting
//! orthogonal projectors. Splitting every matrix into the four joint sectors
//! makes each proximal step closed-form.

use super::cones::{CombProjector, Sectors};
use super::solver::{BlockCone, Point, SplitProblem};
use crate::matstack::ComplexMatrix;

const DIM: usize = 32;

fn identity_component(m: &ComplexMatrix) -> f64 {
    m.trace().re / DIM as f64
}

fn with_identity_component(m: &ComplexMatrix, c: f64) -> ComplexMatrix {
    let mut out = m.clone();
    out.axpy(c - identity_component(m), &ComplexMatrix::identity(DIM));
    out
}

fn sum3(a: &ComplexMatrix, b: &ComplexMatrix, c: &ComplexMatrix) -> ComplexMatrix {
    let mut out = a + b;
    out.axpy(1.0, c);
    out
}

/// `min ½‖W − X₁ − X₂‖²` over `X₁ ∈ K_{A≺B}`, `X₂ ∈ K_{B≺A}` (unnormalized cones).
///
/// Zero optimum means `W = X₁ + X₂` is causally separable with `q = tr X₁ / 4`.
pub struct SeparabilityProblem<'a> {
    first: &'a CombProjector,
    second: &'a CombProjector,
    target: ComplexMatrix,
    sectors: Sectors,
}

impl<'a> SeparabilityProblem<'a> {
    pub fn new(first: &'a CombProjector, second: &'a CombProjector, target: &ComplexMatrix) -> Self {
        Self {
            first,
            second,
            target: target.clone(),
            sectors: Sectors::split(first, second, target),
        }
    }

    /// Largest of the reproduction gap and the subspace violations of a PSD pair.
    pub fn gap(&self, z: &Point) -> f64 {
        let (z1, z2) = (&z.blocks[0], &z.blocks[1]);
        let mut fit = &self.target - z1;
        fit.axpy(-1.0, z2);
        fit.frobenius_norm()
            .max(self.first.complement(z1).frobenius_norm())
            .max(self.second.complement(z2).frobenius_norm())
    }
}

impl SplitProblem for SeparabilityProblem<'_> {
    fn cones(&self) -> Vec<BlockCone> {
        vec![BlockCone::Psd, BlockCone::Psd]
    }

    fn initial_point(&self) -> Point {
        let half = self.target.scale(0.5);
        Point::new(vec![], vec![half.clone(), half])
    }

    fn prox(&self, v: &Point, rho: f64) -> Point {
        let w = &self.sectors;
        let v1 = Sectors::split(self.first, self.second, &v.blocks[0]);
        let v2 = Sectors::split(self.first, self.second, &v.blocks[1]);

        let mut s = w.both.scale(2.0);
        s.axpy(rho, &v1.both);
        s.axpy(rho, &v2.both);
        let s = s.scale(1.0 / (2.0 + rho));
        let diff = &v1.both - &v2.both;

        let mut x1 = &s + &diff;
        x1 = x1.scale(0.5);
        let mut only1 = w.first_only.clone();
        only1.axpy(rho, &v1.first_only);
        x1.axpy(1.0 / (1.0 + rho), &only1);

        let mut x2 = &s - &diff;
        x2 = x2.scale(0.5);
        let mut only2 = w.second_only.clone();
        only2.axpy(rho, &v2.second_only);
        x2.axpy(1.0 / (1.0 + rho), &only2);

        Point::new(vec![], vec![x1, x2])
    }

    fn objective(&self, x: &Point) -> f64 {
        let mut r = &self.target - &x.blocks[0];
        r.axpy(-1.0, &x.blocks[1]);
        0.5 * r.frobenius_norm().powi(2)
    }
}

/// `min tr[S W]` over `S ∈ K*_{A≺B} ∩ K*_{B≺A}` with `tr S = 32/4`.
///
/// Blocks are `(S, Z₁, Z₂)` with `L_k(S − Z_k) = 0`, `Z_k ⪰ 0`. At the optimum
/// `−tr[S W]` is the random robustness of `W`.
pub struct FullWitnessProblem<'a> {
    first: &'a CombProjector,
    second: &'a CombProjector,
    target: ComplexMatrix,
}

impl<'a> FullWitnessProblem<'a> {
    pub fn new(first: &'a CombProjector, second: &'a CombProjector, target: &ComplexMatrix) -> Self {
        Self {
            first,
            second,
            target: target.clone(),
        }
    }
}

impl SplitProblem for FullWitnessProblem<'_> {
    fn cones(&self) -> Vec<BlockCone> {
        vec![BlockCone::Free, BlockCone::Psd, BlockCone::Psd]
    }

    fn initial_point(&self) -> Point {
        let s0 = ComplexMatrix::identity(DIM).scale(0.25);
        Point::new(vec![], vec![s0.clone(), s0.clone(), s0])
    }

    fn prox(&self, v: &Point, rho: f64) -> Point {
        let mut shifted = v.blocks[0].clone();
        shifted.axpy(-1.0 / rho, &self.target);
        let s = Sectors::split(self.first, self.second, &shifted);
        let a = Sectors::split(self.first, self.second, &v.blocks[1]);
        let b = Sectors::split(self.first, self.second, &v.blocks[2]);

        let common = sum3(&s.both, &a.both, &b.both).scale(1.0 / 3.0);
        let common = with_identity_component(&common, 0.25);
        let m1 = (&s.first_only + &a.first_only).scale(0.5);
        let m2 = (&s.second_only + &b.second_only).scale(0.5);

        let xs = {
            let mut o = sum3(&common, &m1, &m2);
            o.axpy(1.0, &s.neither);
            o
        };
        let x1 = {
            let mut o = sum3(&common, &m1, &a.second_only);
            o.axpy(1.0, &a.neither);
            o
        };
        let x2 = {
            let mut o = sum3(&common, &m2, &b.first_only);
            o.axpy(1.0, &b.neither);
            o
        };
        Point::new(vec![], vec![xs, x1, x2])
    }

    fn objective(&self, x: &Point) -> f64 {
        x.blocks[0].real_inner(&self.target)
    }
}

/// `min tr[S W']` over the normalized cone `{W' ⪰ 0, L(W') = W', tr W' = 4}`.
pub struct ConeMinimumProblem<'a> {
    cone: &'a CombProjector,
    witness: ComplexMatrix,
}

impl<'a> ConeMinimumProblem<'a> {
    pub fn new(cone: &'a CombProjector, witness: &ComplexMatrix) -> Self {
        Self {
            cone,
            witness: witness.clone(),
        }
    }
}

impl SplitProblem for ConeMinimumProblem<'_> {
    fn cones(&self) -> Vec<BlockCone> {
        vec![BlockCone::Psd]
    }

    fn initial_point(&self) -> Point {
        Point::new(vec![], vec![ComplexMatrix::identity(DIM).scale(self.cone.trace() / DIM as f64)])
    }

    fn prox(&self, v: &Point, rho: f64) -> Point {
        let mut m = v.blocks[0].clone();
        m.axpy(-1.0 / rho, &self.witness);
        Point::new(vec![], vec![self.cone.apply_affine(&m)])
    }

    fn objective(&self, x: &Point) -> f64 {
        x.blocks[0].real_inner(&self.witness)
    }
}

/// `min ½‖W − X‖²` over the normalized cone; zero iff `W` belongs to it.
pub struct ConeMembershipProblem<'a> {
    cone: &'a CombProjector,
    target: ComplexMatrix,
}

impl<'a> ConeMembershipProblem<'a> {
    pub fn new(cone: &'a CombProjector, target: &ComplexMatrix) -> Self {
        Self {
            cone,
            target: target.clone(),
        }
    }
}

impl SplitProblem for ConeMembershipProblem<'_> {
    fn cones(&self) -> Vec<BlockCone> {
        vec![BlockCone::Psd]
    }

    fn initial_point(&self) -> Point {
        Point::new(vec![], vec![self.target.clone()])
    }

    fn prox(&self, v: &Point, rho: f64) -> Point {
        let mut m = self.target.clone();
        m.axpy(rho, &v.blocks[0]);
        Point::new(vec![], vec![self.cone.apply_affine(&m.scale(1.0 / (1.0 + rho)))])
    }

    fn objective(&self, x: &Point) -> f64 {
        0.5 * (&self.target - &x.blocks[0]).frobenius_norm().powi(2)
    }
}
