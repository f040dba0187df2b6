//! Cyclic Jacobi eigendecomposition for dense Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot `a_pq` with a diagonal
//! unitary, then applies the classical real Jacobi rotation. Sweeps stop once
//! the off-diagonal Frobenius norm falls below `OFF_DIAGONAL_TOL * ‖M‖_F`.

use num_complex::Complex64;

use super::ComplexMatrix;
use crate::error::{Error, Result};

pub const MAX_SWEEPS: usize = 100;
pub const OFF_DIAGONAL_TOL: f64 = 1e-12;

/// Eigenvalues in ascending order; eigenvectors stored as the matching columns.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigen {
    /// V diag(f(λ)) V†
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let v = self.vectors.as_slice();
        let weights: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = ComplexMatrix::zeros(n);
        let data = out.as_mut_slice();
        for (k, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = v[i * n + k] * w;
                if vik.re == 0.0 && vik.im == 0.0 {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] += vik * v[j * n + k].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|l| l)
    }
}

/// Diagonalizes a Hermitian matrix. Only the Hermitian part of `m` is used.
pub fn eigh_matrix(m: &ComplexMatrix) -> Result<Eigen> {
    eigh_warm(m, None)
}

/// Diagonalizes `m` starting from an approximate eigenbasis `guess` (a unitary).
///
/// With a good guess, `guess† m guess` is nearly diagonal and only a couple of
/// sweeps are needed. The SDP solver uses this between iterations.
pub fn eigh_warm(m: &ComplexMatrix, guess: Option<&ComplexMatrix>) -> Result<Eigen> {
    let n = m.dim();
    let herm = m.hermitian_part();
    let norm = herm.frobenius_norm();
    let (mut a, mut v) = match guess {
        Some(g) if g.dim() == n => (g.adjoint().matmul(&herm).matmul(g).hermitian_part(), g.clone()),
        _ => (herm, ComplexMatrix::identity(n)),
    };
    let target = OFF_DIAGONAL_TOL * norm;
    // entries below this are skipped; n^2 of them still sum below `target`
    let skip = target / (2.0 * n as f64).max(1.0);

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a);
        if off <= target || norm == 0.0 {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                off_norm: off,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= skip {
                    continue;
                }
                rotate(&mut a, &mut v, p, q, apq, mag);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let values = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = ComplexMatrix::zeros(n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            vectors[(row, new_col)] = v[(row, old_col)];
        }
    }
    Ok(Eigen { values, vectors })
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Applies G = D·J in the (p, q) plane, where D = diag(1, e^{-iα}) on q makes
/// the pivot real and J is the real Jacobi rotation zeroing it.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize, apq: Complex64, mag: f64) {
    let n = a.dim();
    let phase = apq / mag; // e^{iα}
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let ph = phase.conj(); // e^{-iα}
    let g_pp = Complex64::new(c, 0.0);
    let g_pq = Complex64::new(s, 0.0);
    let g_qp = ph * (-s);
    let g_qq = ph * c;

    // columns: A <- A G
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * g_pp + akq * g_qp;
        a[(k, q)] = akp * g_pq + akq * g_qq;
    }
    // rows: A <- G† A
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
        a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * g_pp + vkq * g_qp;
        v[(k, q)] = vkp * g_pq + vkq * g_qq;
    }
}
