#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use qswitch::causal_sdp::{CausalOrder, OrderedConeSpec};
use qswitch::matstack::{ComplexMatrix, HermitianOperator};
use qswitch::processes::{process_subsystems, ProcessMatrix, PureState, UnitaryGate};

pub fn random_matrix<R: Rng>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let data = (0..dim * dim)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    ComplexMatrix::from_vec(dim, data).unwrap()
}

pub fn random_hermitian<R: Rng>(rng: &mut R, dim: usize) -> ComplexMatrix {
    random_matrix(rng, dim).hermitian_part()
}

pub fn random_state<R: Rng>(rng: &mut R) -> PureState {
    let v: Vec<Complex64> = (0..2)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    PureState::new(v.into_iter().map(|z| z / n).collect()).unwrap()
}

/// Unitary from the Gram–Schmidt of a Gaussian matrix.
pub fn random_unitary_matrix<R: Rng>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let m = random_matrix(rng, dim);
    let mut cols: Vec<Vec<Complex64>> = (0..dim).map(|j| (0..dim).map(|i| m[(i, j)]).collect()).collect();
    for j in 0..dim {
        for k in 0..j {
            let proj: Complex64 = (0..dim).map(|i| cols[k][i].conj() * cols[j][i]).sum();
            let prev = cols[k].clone();
            for (x, v) in cols[j].iter_mut().zip(prev) {
                *x -= proj * v;
            }
        }
        let n = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        cols[j].iter_mut().for_each(|z| *z /= n);
    }
    let mut u = ComplexMatrix::zeros(dim);
    for (j, col) in cols.iter().enumerate() {
        for (i, z) in col.iter().enumerate() {
            u[(i, j)] = *z;
        }
    }
    u
}

pub fn random_unitary<R: Rng>(rng: &mut R, name: &str) -> UnitaryGate {
    UnitaryGate::new(name, random_unitary_matrix(rng, 2)).unwrap()
}

/// Random valid process in the cone of `order`: the comb-subspace projection
/// of a random Hermitian matrix, lifted to positivity along the identity and
/// renormalized to trace 4. These sit on the cone boundary.
pub fn random_cone_element<R: Rng>(rng: &mut R, order: CausalOrder) -> ProcessMatrix {
    let p = OrderedConeSpec::new(order).projector();
    let scale = rng.random_range(0.01..1.0);
    let m = p.apply_affine(&random_hermitian(rng, 32).scale(scale));
    let op = HermitianOperator::new(m, process_subsystems()).unwrap();
    let lambda = op.min_eigenvalue().unwrap().min(0.0);
    let lifted = op.add(&HermitianOperator::identity(process_subsystems()).unwrap().scaled(-lambda)).unwrap();
    let w = lifted.scaled(4.0 / lifted.trace());
    ProcessMatrix::new(w).unwrap()
}

/// Pure comb for `A < B < C`: a state on `A_I ⊗ M`, a unitary
/// `A_O ⊗ M → B_I ⊗ M′` and a unitary `B_O ⊗ M′ → C_I ⊗ E` with `E` discarded.
/// Every wire is a qubit.
pub fn random_extreme_comb<R: Rng>(rng: &mut R, order: CausalOrder) -> ProcessMatrix {
    let psi = random_unitary_matrix(rng, 4);
    let v1 = random_unitary_matrix(rng, 4);
    let v2 = random_unitary_matrix(rng, 4);
    let mut w = ComplexMatrix::zeros(32);
    for e in 0..2 {
        // |w_e⟩ indexed by (a_i, a_o, b_i, b_o, c)
        let mut vec = vec![Complex64::new(0.0, 0.0); 32];
        for (idx, slot) in vec.iter_mut().enumerate() {
            let (ai, ao, bi, bo, c) = ((idx >> 4) & 1, (idx >> 3) & 1, (idx >> 2) & 1, (idx >> 1) & 1, idx & 1);
            for m in 0..2 {
                for m2 in 0..2 {
                    *slot += psi[(ai * 2 + m, 0)] * v1[(bi * 2 + m2, ao * 2 + m)] * v2[(c * 2 + e, bo * 2 + m2)];
                }
            }
        }
        for i in 0..32 {
            for j in 0..32 {
                w[(i, j)] += vec[i] * vec[j].conj();
            }
        }
    }
    let comb = ProcessMatrix::new(HermitianOperator::new(w, process_subsystems()).unwrap()).unwrap();
    match order {
        CausalOrder::AThenB => comb,
        CausalOrder::BThenA => comb.swap_parties().unwrap(),
    }
}

fn random_order_element<R: Rng>(rng: &mut R, order: CausalOrder) -> ProcessMatrix {
    if rng.random_bool(0.5) {
        random_extreme_comb(rng, order)
    } else {
        random_cone_element(rng, order)
    }
}

/// `q·W_AB + (1−q)·W_BA`, each part either an extreme comb or a random cone element.
pub fn random_separable<R: Rng>(rng: &mut R) -> ProcessMatrix {
    let a = random_order_element(rng, CausalOrder::AThenB);
    let b = random_order_element(rng, CausalOrder::BThenA);
    a.mix(rng.random_range(0.0..=1.0), &b).unwrap()
}

pub fn complex(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `Re⟨ψ|A†B†AB|ψ⟩` by direct matrix products.
pub fn analytic_stokes(a: &UnitaryGate, b: &UnitaryGate, psi: &PureState) -> f64 {
    let (am, bm) = (a.matrix(), b.matrix());
    let m = am.adjoint().matmul(&bm.adjoint()).matmul(am).matmul(bm);
    let v = m.apply(psi.amplitudes());
    psi.amplitudes().iter().zip(&v).map(|(x, y)| x.conj() * y).sum::<Complex64>().re
}
