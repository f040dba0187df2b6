//! Dense complex linear algebra with tensor-product structure.
//!
//! Everything here works on small dense matrices (dimension ≤ 64). A
//! [`HermitianOperator`] carries an ordered list of labelled subsystems so
//! that partial traces and re-embeddings can be addressed by name.

mod eigen;
mod matrix;

use std::collections::HashSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use eigen::{eigh_matrix, eigh_warm, Eigen, MAX_SWEEPS, OFF_DIAGONAL_TOL};
pub use matrix::ComplexMatrix;

use crate::error::{Error, Result};

/// Relative Hermiticity threshold accepted at construction.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// A labelled tensor factor.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "(String, usize)", into = "(String, usize)")]
pub struct Subsystem {
    pub label: String,
    pub dim: usize,
}

impl Subsystem {
    pub fn new(label: impl Into<String>, dim: usize) -> Self {
        Self {
            label: label.into(),
            dim,
        }
    }
}

impl From<(String, usize)> for Subsystem {
    fn from((label, dim): (String, usize)) -> Self {
        Self { label, dim }
    }
}

impl From<Subsystem> for (String, usize) {
    fn from(s: Subsystem) -> Self {
        (s.label, s.dim)
    }
}

/// Hermitian matrix on a labelled tensor product space.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
    subsystems: Vec<Subsystem>,
}

impl HermitianOperator {
    /// Validates and symmetrizes `matrix`.
    pub fn new(matrix: ComplexMatrix, subsystems: Vec<Subsystem>) -> Result<Self> {
        check_subsystems(&subsystems, matrix.dim())?;
        if !matrix.is_finite() {
            return Err(Error::NonFinite);
        }
        let deviation = matrix.hermitian_deviation();
        if deviation > HERMITIAN_TOL * matrix.max_abs() {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self {
            matrix: matrix.hermitian_part(),
            subsystems,
        })
    }

    /// Operator on a single unnamed-ish factor.
    pub fn single(matrix: ComplexMatrix, label: &str) -> Result<Self> {
        let dim = matrix.dim();
        Self::new(matrix, vec![Subsystem::new(label, dim)])
    }

    /// Symmetrizes without the Hermiticity check; for results of arithmetic on
    /// operators that are already Hermitian.
    pub(crate) fn from_parts(matrix: ComplexMatrix, subsystems: Vec<Subsystem>) -> Self {
        debug_assert_eq!(
            subsystems.iter().map(|s| s.dim).product::<usize>(),
            matrix.dim()
        );
        Self {
            matrix: matrix.hermitian_part(),
            subsystems,
        }
    }

    pub fn identity(subsystems: Vec<Subsystem>) -> Result<Self> {
        let dim = subsystems.iter().map(|s| s.dim).product();
        Self::new(ComplexMatrix::identity(dim), subsystems)
    }

    pub fn zeros(subsystems: Vec<Subsystem>) -> Result<Self> {
        let dim = subsystems.iter().map(|s| s.dim).product();
        Self::new(ComplexMatrix::zeros(dim), subsystems)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn labels(&self) -> Vec<&str> {
        self.subsystems.iter().map(|s| s.label.as_str()).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.subsystems.iter().map(|s| s.dim).collect()
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// tr(self · other), real for Hermitian arguments.
    pub fn inner(&self, other: &Self) -> f64 {
        self.matrix.real_inner(&other.matrix)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.frobenius_norm()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            matrix: self.matrix.scale(factor),
            subsystems: self.subsystems.clone(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        Ok(Self::from_parts(&self.matrix + &other.matrix, self.subsystems.clone()))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        Ok(Self::from_parts(&self.matrix - &other.matrix, self.subsystems.clone()))
    }

    fn same_space(&self, other: &Self) -> Result<()> {
        if self.subsystems != other.subsystems {
            return Err(Error::DimensionMismatch(format!(
                "{:?} vs {:?}",
                self.labels(),
                other.labels()
            )));
        }
        Ok(())
    }

    /// Tensor product; the subsystem list is the concatenation.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        let mut subsystems = self.subsystems.clone();
        subsystems.extend(other.subsystems.iter().cloned());
        check_subsystems(&subsystems, self.dim() * other.dim())?;
        Ok(Self {
            matrix: self.matrix.kron(&other.matrix),
            subsystems,
        })
    }

    /// Traces out every subsystem not in `keep`. Kept subsystems stay in their original order.
    pub fn partial_trace(&self, keep: &[&str]) -> Result<Self> {
        let mask = self.label_mask(keep)?;
        let traced: Vec<bool> = mask.iter().map(|k| !k).collect();
        let layout = TensorLayout::new(&self.dims(), &traced);
        let kept = self
            .subsystems
            .iter()
            .zip(&mask)
            .filter(|(_, &k)| k)
            .map(|(s, _)| s.clone())
            .collect();
        Ok(Self::from_parts(layout.partial_trace(&self.matrix), kept))
    }

    /// Tr_X(M) ⊗ I_X / d_X, with the traced factors re-inserted at their original positions.
    pub fn trace_replace(&self, traced: &[&str]) -> Result<Self> {
        let mask = self.label_mask(traced)?;
        let layout = TensorLayout::new(&self.dims(), &mask);
        Ok(Self::from_parts(
            layout.trace_replace(&self.matrix),
            self.subsystems.clone(),
        ))
    }

    /// Reorders the tensor factors to `order` (a permutation of the labels).
    pub fn permute(&self, order: &[&str]) -> Result<Self> {
        if order.len() != self.subsystems.len() {
            return Err(Error::DimensionMismatch(format!(
                "permutation of length {} for {} subsystems",
                order.len(),
                self.subsystems.len()
            )));
        }
        let positions = order
            .iter()
            .map(|l| self.position(l))
            .collect::<Result<Vec<_>>>()?;
        let unique: HashSet<_> = positions.iter().collect();
        if unique.len() != positions.len() {
            return Err(Error::DuplicateLabel(order.join(",")));
        }
        let dims = self.dims();
        let new_subsystems: Vec<Subsystem> = positions.iter().map(|&p| self.subsystems[p].clone()).collect();
        let new_dims: Vec<usize> = new_subsystems.iter().map(|s| s.dim).collect();
        let old_strides = strides(&dims);
        let n = self.dim();
        // map each new flat index to the old flat index
        let map: Vec<usize> = (0..n)
            .map(|idx| {
                let digits = unflatten(idx, &new_dims);
                digits
                    .iter()
                    .zip(&positions)
                    .map(|(&d, &p)| d * old_strides[p])
                    .sum()
            })
            .collect();
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = self.matrix[(map[i], map[j])];
            }
        }
        Ok(Self {
            matrix: out,
            subsystems: new_subsystems,
        })
    }

    /// Renames subsystems; `pairs` maps old label to new label.
    pub fn relabel(&self, pairs: &[(&str, &str)]) -> Result<Self> {
        let mut subsystems = self.subsystems.clone();
        for (old, new) in pairs {
            let p = self.position(old)?;
            subsystems[p].label = (*new).to_string();
        }
        check_subsystems(&subsystems, self.dim())?;
        Ok(Self {
            matrix: self.matrix.clone(),
            subsystems,
        })
    }

    pub fn eigh(&self) -> Result<Eigen> {
        eigh_matrix(&self.matrix)
    }

    /// Nearest positive semidefinite operator in Frobenius norm (negative eigenvalues clipped).
    pub fn psd_project(&self) -> Result<Self> {
        let e = self.eigh()?;
        Ok(Self::from_parts(
            e.reconstruct_with(|l| l.max(0.0)),
            self.subsystems.clone(),
        ))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigh()?.values[0])
    }

    fn position(&self, label: &str) -> Result<usize> {
        self.subsystems
            .iter()
            .position(|s| s.label == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    fn label_mask(&self, labels: &[&str]) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.subsystems.len()];
        for l in labels {
            mask[self.position(l)?] = true;
        }
        Ok(mask)
    }
}

fn check_subsystems(subsystems: &[Subsystem], dim: usize) -> Result<()> {
    let product: usize = subsystems.iter().map(|s| s.dim).product();
    if product != dim || subsystems.is_empty() {
        return Err(Error::SubsystemProduct { product, dim });
    }
    let mut seen = HashSet::new();
    for s in subsystems {
        if !seen.insert(s.label.as_str()) {
            return Err(Error::DuplicateLabel(s.label.clone()));
        }
    }
    Ok(())
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

fn unflatten(mut idx: usize, dims: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        digits[k] = idx % dims[k];
        idx /= dims[k];
    }
    digits
}

/// Precomputed index offsets splitting a flat index into kept and traced parts.
///
/// The flat index of (kept multi-index r, traced multi-index t) is
/// `kept_offsets[r] + traced_offsets[t]`.
#[derive(Clone, Debug)]
pub struct TensorLayout {
    dim: usize,
    kept_offsets: Vec<usize>,
    traced_offsets: Vec<usize>,
}

impl TensorLayout {
    pub fn new(dims: &[usize], traced: &[bool]) -> Self {
        let st = strides(dims);
        let offsets = |want: bool| -> Vec<usize> {
            let sel: Vec<usize> = (0..dims.len()).filter(|&k| traced[k] == want).collect();
            let sub_dims: Vec<usize> = sel.iter().map(|&k| dims[k]).collect();
            let count: usize = sub_dims.iter().product();
            (0..count)
                .map(|i| {
                    unflatten(i, &sub_dims)
                        .iter()
                        .zip(&sel)
                        .map(|(&d, &k)| d * st[k])
                        .sum()
                })
                .collect()
        };
        Self {
            dim: dims.iter().product(),
            kept_offsets: offsets(false),
            traced_offsets: offsets(true),
        }
    }

    pub fn kept_dim(&self) -> usize {
        self.kept_offsets.len()
    }

    pub fn traced_dim(&self) -> usize {
        self.traced_offsets.len()
    }

    pub fn partial_trace(&self, m: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(m.dim(), self.dim);
        let k = self.kept_dim();
        let mut out = ComplexMatrix::zeros(k);
        for (r, &ro) in self.kept_offsets.iter().enumerate() {
            for (c, &co) in self.kept_offsets.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for &t in &self.traced_offsets {
                    acc += m[(ro + t, co + t)];
                }
                out[(r, c)] = acc;
            }
        }
        out
    }

    /// Inverse-shaped companion of `partial_trace`: R ⊗ I_traced / d_traced in place.
    pub fn embed_normalized(&self, reduced: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim);
        let w = 1.0 / self.traced_dim() as f64;
        for (r, &ro) in self.kept_offsets.iter().enumerate() {
            for (c, &co) in self.kept_offsets.iter().enumerate() {
                let v = reduced[(r, c)] * w;
                for &t in &self.traced_offsets {
                    out[(ro + t, co + t)] = v;
                }
            }
        }
        out
    }

    pub fn trace_replace(&self, m: &ComplexMatrix) -> ComplexMatrix {
        self.embed_normalized(&self.partial_trace(m))
    }
}

#[derive(Serialize, Deserialize)]
struct OperatorJson {
    dim: usize,
    subsystems: Vec<Subsystem>,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for HermitianOperator {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let data = self.matrix.as_slice();
        OperatorJson {
            dim: self.dim(),
            subsystems: self.subsystems.clone(),
            re: data.iter().map(|z| z.re).collect(),
            im: data.iter().map(|z| z.im).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for HermitianOperator {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = OperatorJson::deserialize(deserializer)?;
        if raw.re.len() != raw.im.len() {
            return Err(D::Error::custom("`re` and `im` lengths differ"));
        }
        let data = raw
            .re
            .iter()
            .zip(&raw.im)
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        let matrix = ComplexMatrix::from_vec(raw.dim, data).map_err(D::Error::custom)?;
        HermitianOperator::new(matrix, raw.subsystems).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pauli(name: &str, label: &str) -> HermitianOperator {
        let m = match name {
            "I" => ComplexMatrix::identity(2),
            "X" => ComplexMatrix::from_rows(&[&[c(0., 0.), c(1., 0.)], &[c(1., 0.), c(0., 0.)]]),
            "Z" => ComplexMatrix::from_real_diagonal(&[1.0, -1.0]),
            _ => unreachable!(),
        };
        HermitianOperator::single(m, label).unwrap()
    }

    #[test]
    fn kron_identities() {
        let k = pauli("I", "a").kron(&pauli("I", "b")).unwrap();
        assert_eq!(k.matrix(), &ComplexMatrix::identity(4));
        assert_eq!(k.labels(), vec!["a", "b"]);
    }

    #[test]
    fn kron_z_z_is_diagonal() {
        let k = pauli("Z", "a").kron(&pauli("Z", "b")).unwrap();
        assert_eq!(k.matrix(), &ComplexMatrix::from_real_diagonal(&[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn kron_x_z_blocks() {
        let k = pauli("X", "a").kron(&pauli("Z", "b")).unwrap();
        let z = ComplexMatrix::from_real_diagonal(&[1.0, -1.0]);
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j { c(0.0, 0.0) } else { c(1.0, 0.0) };
                for p in 0..2 {
                    for q in 0..2 {
                        assert_eq!(k.matrix()[(2 * i + p, 2 * j + q)], expected * z[(p, q)]);
                    }
                }
            }
        }
    }

    #[test]
    fn kron_rejects_duplicate_labels() {
        assert!(matches!(
            pauli("X", "a").kron(&pauli("Z", "a")),
            Err(Error::DuplicateLabel(_))
        ));
    }

    #[test]
    fn partial_trace_of_identity_32() {
        let subs = (0..5).map(|k| Subsystem::new(format!("q{k}"), 2)).collect();
        let id = HermitianOperator::identity(subs).unwrap();
        let r = id.partial_trace(&["q2"]).unwrap();
        assert_eq!(r.matrix(), &ComplexMatrix::identity(2).scale(16.0));
        assert_eq!(r.labels(), vec!["q2"]);
    }

    #[test]
    fn partial_trace_bell_state() {
        let s = 0.5f64.sqrt();
        let phi = [c(s, 0.), c(0., 0.), c(0., 0.), c(s, 0.)];
        let proj = HermitianOperator::new(
            ComplexMatrix::outer(&phi, &phi),
            vec![Subsystem::new("a", 2), Subsystem::new("b", 2)],
        )
        .unwrap();
        // brute-force index sum over b
        let mut expected = ComplexMatrix::zeros(2);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    expected[(i, j)] += proj.matrix()[(2 * i + k, 2 * j + k)];
                }
            }
        }
        let r = proj.partial_trace(&["a"]).unwrap();
        assert_eq!(r.matrix(), &expected);
        assert!((&expected - &ComplexMatrix::identity(2).scale(0.5)).max_abs() < 1e-15);
    }

    #[test]
    fn partial_trace_unknown_label() {
        assert!(matches!(
            pauli("X", "a").partial_trace(&["zz"]),
            Err(Error::UnknownLabel(_))
        ));
    }

    #[test]
    fn trace_replace_middle_factor() {
        let op = pauli("X", "a")
            .kron(&pauli("Z", "b"))
            .unwrap()
            .kron(&pauli("X", "c"))
            .unwrap();
        // Z is traceless, so replacing b kills the operator
        let r = op.trace_replace(&["b"]).unwrap();
        assert!(r.matrix().max_abs() < 1e-15);
        let op2 = pauli("X", "a")
            .kron(&pauli("I", "b"))
            .unwrap()
            .kron(&pauli("X", "c"))
            .unwrap();
        assert_eq!(op2.trace_replace(&["b"]).unwrap(), op2);
    }

    #[test]
    fn permute_swaps_factors() {
        let op = pauli("X", "a").kron(&pauli("Z", "b")).unwrap();
        let swapped = op.permute(&["b", "a"]).unwrap();
        let expected = pauli("Z", "b").kron(&pauli("X", "a")).unwrap();
        assert_eq!(swapped, expected);
    }

    #[test]
    fn psd_projection_examples() {
        let id = pauli("I", "a");
        assert_eq!(id.psd_project().unwrap(), id);
        let z = pauli("Z", "a").psd_project().unwrap();
        assert!((z.matrix() - &ComplexMatrix::from_real_diagonal(&[1.0, 0.0])).max_abs() < 1e-15);
        let subs = vec![Subsystem::new("a", 2), Subsystem::new("b", 2)];
        let neg = HermitianOperator::identity(subs).unwrap().scaled(-1.0);
        assert!(neg.psd_project().unwrap().matrix().max_abs() < 1e-15);
    }

    #[test]
    fn eigh_of_paulis() {
        let e = pauli("Z", "a").eigh().unwrap();
        assert_eq!(e.values, vec![-1.0, 1.0]);
        assert!((e.vectors[(1, 0)].norm() - 1.0).abs() < 1e-15);
        let e = pauli("X", "a").eigh().unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        let s = 0.5f64.sqrt();
        for k in 0..2 {
            assert!((e.vectors[(0, k)].norm() - s).abs() < 1e-12);
            assert!((e.vectors[(1, k)].norm() - s).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_rows(&[&[c(0., 0.), c(1., 0.)], &[c(0., 0.), c(0., 0.)]]);
        assert!(matches!(
            HermitianOperator::single(m, "a"),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let op = pauli("X", "a").kron(&pauli("Z", "b")).unwrap();
        let text = serde_json::to_string(&op).unwrap();
        assert!(text.contains("\"subsystems\":[[\"a\",2],[\"b\",2]]"));
        let back: HermitianOperator = serde_json::from_str(&text).unwrap();
        assert_eq!(back, op);
    }
}
