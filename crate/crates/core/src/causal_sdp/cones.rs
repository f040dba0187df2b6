//! Fixed-order process cones (quantum combs) for two parties and a final party C.
//!
//! Writing `ₓW = Tr_X W ⊗ I_X / d_X`, a process compatible with `A≺B≺C` satisfies
//!
//! * `_{C_I}W = _{B_O C_I}W`
//! * `_{B_I B_O C_I}W = _{A_O B_I B_O C_I}W`
//! * `tr W = d_{A_O} d_{B_O}`
//!
//! and `B≺A≺C` is the same with the parties exchanged. All the `ₓ` maps commute
//! and are nested, so the orthogonal projector onto the comb subspace is
//! `L(W) = W − Σ_k (ₜₖW − ₜₖ∪ₚₖW)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matstack::{ComplexMatrix, HermitianOperator, TensorLayout};
use crate::processes::{A_IN, A_OUT, B_IN, B_OUT, C_IN, PROCESS_LABELS};

/// The two definite orders of A and B (C is always last).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CausalOrder {
    #[serde(rename = "A<B<C")]
    AThenB,
    #[serde(rename = "B<A<C")]
    BThenA,
}

impl CausalOrder {
    pub const BOTH: [CausalOrder; 2] = [CausalOrder::AThenB, CausalOrder::BThenA];
}

/// `ₜW = ₜ∪ₚW`: tracing `traced` is the same as additionally tracing `padded`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombConstraint {
    pub traced: Vec<String>,
    pub padded: Vec<String>,
}

impl CombConstraint {
    fn new(traced: &[&str], padded: &[&str]) -> Self {
        Self {
            traced: traced.iter().map(|s| s.to_string()).collect(),
            padded: padded.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderedConeSpec {
    pub order: CausalOrder,
    pub constraints: Vec<CombConstraint>,
    pub trace: f64,
}

impl OrderedConeSpec {
    pub fn new(order: CausalOrder) -> Self {
        let (first_out, second_in, second_out) = match order {
            CausalOrder::AThenB => (A_OUT, B_IN, B_OUT),
            CausalOrder::BThenA => (B_OUT, A_IN, A_OUT),
        };
        Self {
            order,
            constraints: vec![
                CombConstraint::new(&[C_IN], &[second_out]),
                CombConstraint::new(&[second_in, second_out, C_IN], &[first_out]),
            ],
            trace: 4.0,
        }
    }

    pub fn projector(&self) -> CombProjector {
        CombProjector::new(self)
    }
}

/// Precomputed orthogonal projector onto the linear span of a comb cone.
#[derive(Clone, Debug)]
pub struct CombProjector {
    // (sign, layout): L(M) = M + Σ sign · trace_replace(M)
    terms: Vec<(f64, TensorLayout)>,
    dim: usize,
    trace: f64,
}

impl CombProjector {
    pub fn new(spec: &OrderedConeSpec) -> Self {
        let dims = [2usize; 5];
        let mask = |labels: &[String]| -> Vec<bool> {
            PROCESS_LABELS
                .iter()
                .map(|l| labels.iter().any(|x| x == l))
                .collect()
        };
        let mut terms = Vec::new();
        for c in &spec.constraints {
            let mut wider = c.traced.clone();
            wider.extend(c.padded.iter().cloned());
            terms.push((-1.0, TensorLayout::new(&dims, &mask(&c.traced))));
            terms.push((1.0, TensorLayout::new(&dims, &mask(&wider))));
        }
        Self {
            terms,
            dim: 32,
            trace: spec.trace,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    /// Linear projection `L(M)`.
    pub fn apply(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let mut out = m.clone();
        for (sign, layout) in &self.terms {
            out.axpy(*sign, &layout.trace_replace(m));
        }
        out
    }

    /// `M − L(M)`.
    pub fn complement(&self, m: &ComplexMatrix) -> ComplexMatrix {
        m - &self.apply(m)
    }

    /// Projection onto the affine comb subspace (`L(M)` shifted to the cone trace).
    pub fn apply_affine(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let mut out = self.apply(m);
        let shift = (self.trace - out.trace().re) / self.dim as f64;
        out.axpy(shift, &ComplexMatrix::identity(self.dim));
        out
    }
}

/// Orthogonal projection of `w` onto the affine comb subspace of `spec`.
pub fn project_to_cone_subspace(w: &HermitianOperator, spec: &OrderedConeSpec) -> Result<HermitianOperator> {
    if w.labels() != PROCESS_LABELS || w.dims() != [2; 5] {
        return Err(Error::DimensionMismatch(format!(
            "expected qubit process layout {:?}, got {:?} with dims {:?}",
            PROCESS_LABELS,
            w.labels(),
            w.dims()
        )));
    }
    let p = spec.projector();
    HermitianOperator::new(p.apply_affine(w.matrix()), w.subsystems().to_vec())
}

/// Decomposition of a matrix into the four joint eigenspaces of two commuting comb projectors.
pub(crate) struct Sectors {
    pub both: ComplexMatrix,
    pub first_only: ComplexMatrix,
    pub second_only: ComplexMatrix,
    pub neither: ComplexMatrix,
}

impl Sectors {
    pub fn split(first: &CombProjector, second: &CombProjector, m: &ComplexMatrix) -> Self {
        let both = first.apply(&second.apply(m));
        let first_only = &first.apply(m) - &both;
        let second_only = &second.apply(m) - &both;
        let mut neither = m - &both;
        neither.axpy(-1.0, &first_only);
        neither.axpy(-1.0, &second_only);
        Self {
            both,
            first_only,
            second_only,
            neither,
        }
    }
}
