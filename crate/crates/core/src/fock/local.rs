use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::layout::SpaceLayout;
use super::operator::TruncatedOperator;
use crate::error::{Error, Result};
use crate::scalar::{CMatrix, CVector, Real};

/// Operator acting on a subset of tensor factors, identity elsewhere.
///
/// The small matrix is indexed row-major over `factors` in the order given,
/// which need not be increasing.
#[derive(Clone, Debug)]
pub struct LocalOperator<T: Real> {
    layout: SpaceLayout,
    factors: Vec<usize>,
    matrix: CMatrix<T>,
}

/// Anything that can act on a full-space state vector.
pub trait LinearMap<T: Real> {
    fn layout(&self) -> &SpaceLayout;
    fn apply_vector(&self, v: &CVector<T>) -> CVector<T>;
}

impl<T: Real> LocalOperator<T> {
    pub fn new(layout: &SpaceLayout, factors: Vec<usize>, matrix: CMatrix<T>) -> Result<Self> {
        let count = layout.factor_count();
        let mut seen = vec![false; count];
        for &f in &factors {
            if f >= count {
                return Err(Error::LayoutMismatch(format!(
                    "factor {f} out of range ({count} factors)"
                )));
            }
            if std::mem::replace(&mut seen[f], true) {
                return Err(Error::LayoutMismatch(format!("factor {f} repeated")));
            }
        }
        let dim: usize = factors.iter().map(|&f| layout.factor_dim(f)).product();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::ShapeMismatch {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
                dim,
            });
        }
        Ok(Self {
            layout: layout.clone(),
            factors,
            matrix,
        })
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self {
            layout: self.layout.clone(),
            factors: self.factors.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    fn local_dims(&self) -> Vec<usize> {
        self.factors
            .iter()
            .map(|&f| self.layout.factor_dim(f))
            .collect()
    }

    /// Splits a full index into (local index, index with local digits zeroed).
    fn split(&self, index: usize, strides: &[usize], dims: &[usize]) -> (usize, usize) {
        let mut local = 0;
        let mut rest = index;
        for (&f, &d) in self.factors.iter().zip(dims) {
            let digit = (index / strides[f]) % d;
            local = local * d + digit;
            rest -= digit * strides[f];
        }
        (local, rest)
    }

    /// Full index of local index `local` on top of `rest`.
    fn join(&self, local: usize, rest: usize, strides: &[usize], dims: &[usize]) -> usize {
        let mut index = rest;
        let mut l = local;
        for (&f, &d) in self.factors.iter().zip(dims).rev() {
            index += (l % d) * strides[f];
            l /= d;
        }
        index
    }

    /// Dense embedding into the full space.
    pub fn embed(&self) -> TruncatedOperator<T> {
        let dim = self.layout.dim();
        let strides = self.layout.strides();
        let dims = self.local_dims();
        let mut full = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            let (lc, rest) = self.split(col, &strides, &dims);
            for lr in 0..self.matrix.nrows() {
                let value = self.matrix[(lr, lc)];
                if value.re != T::zero() || value.im != T::zero() {
                    full[(self.join(lr, rest, &strides, &dims), col)] = value;
                }
            }
        }
        TruncatedOperator::new_unchecked(self.layout.clone(), full)
    }

    /// Matrix elements between the basis states listed in `basis`, together
    /// with the largest column weight that leaves the subspace.
    pub fn restrict(&self, basis: &SubspaceBasis) -> (CMatrix<T>, T) {
        let strides = self.layout.strides();
        let dims = self.local_dims();
        let n = basis.len();
        let mut out = DMatrix::zeros(n, n);
        let mut leakage = T::zero();
        for (j, &col) in basis.indices().iter().enumerate() {
            let (lc, rest) = self.split(col, &strides, &dims);
            let mut outside = T::zero();
            for lr in 0..self.matrix.nrows() {
                let value = self.matrix[(lr, lc)];
                let row = self.join(lr, rest, &strides, &dims);
                match basis.position(row) {
                    Some(i) => out[(i, j)] += value,
                    None => outside += value.norm_sqr(),
                }
            }
            leakage = leakage.max(outside);
        }
        (out, leakage)
    }
}

impl<T: Real> LinearMap<T> for LocalOperator<T> {
    fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    fn apply_vector(&self, v: &CVector<T>) -> CVector<T> {
        let dim = self.layout.dim();
        assert_eq!(v.len(), dim, "vector length does not match layout");
        let strides = self.layout.strides();
        let dims = self.local_dims();
        let local_dim = self.matrix.nrows();
        let mut out = DVector::zeros(dim);
        let mut buffer = vec![num_complex::Complex::new(T::zero(), T::zero()); local_dim];
        let mut indices = vec![0usize; local_dim];
        // visit each orbit of the local factors once, from its zero-digit representative
        for base in 0..dim {
            let (lc, rest) = self.split(base, &strides, &dims);
            if lc != 0 {
                continue;
            }
            for l in 0..local_dim {
                indices[l] = self.join(l, rest, &strides, &dims);
                buffer[l] = v[indices[l]];
            }
            for r in 0..local_dim {
                let mut acc = num_complex::Complex::new(T::zero(), T::zero());
                for c in 0..local_dim {
                    acc += self.matrix[(r, c)] * buffer[c];
                }
                out[indices[r]] = acc;
            }
        }
        out
    }
}

impl<T: Real> LinearMap<T> for TruncatedOperator<T> {
    fn layout(&self) -> &SpaceLayout {
        TruncatedOperator::layout(self)
    }

    fn apply_vector(&self, v: &CVector<T>) -> CVector<T> {
        self.apply(v)
    }
}

/// Ordered list of full-space basis indices spanning a subspace.
#[derive(Clone, Debug)]
pub struct SubspaceBasis {
    indices: Vec<usize>,
    lookup: HashMap<usize, usize>,
}

impl SubspaceBasis {
    pub fn new(indices: Vec<usize>) -> Self {
        let lookup = indices.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        Self { indices, lookup }
    }

    /// Basis states of `layout` whose factor digits satisfy `keep`.
    pub fn filtered(layout: &SpaceLayout, mut keep: impl FnMut(&[usize]) -> bool) -> Self {
        let indices = (0..layout.dim())
            .filter(|&i| keep(&layout.digits_of(i)))
            .collect();
        Self::new(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn position(&self, index: usize) -> Option<usize> {
        self.lookup.get(&index).copied()
    }
}

/// Local operators applied in order: the first entry acts first.
#[derive(Clone, Debug)]
pub struct OperatorSequence<T: Real> {
    layout: SpaceLayout,
    ops: Vec<LocalOperator<T>>,
}

impl<T: Real> OperatorSequence<T> {
    pub fn new(layout: &SpaceLayout) -> Self {
        Self {
            layout: layout.clone(),
            ops: Vec::new(),
        }
    }

    pub fn then(mut self, op: LocalOperator<T>) -> Result<Self> {
        if op.layout != self.layout {
            return Err(Error::LayoutMismatch(
                "operator layout differs from sequence layout".into(),
            ));
        }
        self.ops.push(op);
        Ok(self)
    }

    pub fn extend(mut self, other: &OperatorSequence<T>) -> Result<Self> {
        for op in &other.ops {
            self = self.then(op.clone())?;
        }
        Ok(self)
    }

    pub fn ops(&self) -> &[LocalOperator<T>] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Inverse sequence (reversed order, each factor adjointed).
    pub fn adjoint(&self) -> Self {
        Self {
            layout: self.layout.clone(),
            ops: self.ops.iter().rev().map(LocalOperator::adjoint).collect(),
        }
    }

    /// Dense product `ops[n-1] ⋯ ops[0]`.
    pub fn to_operator(&self) -> TruncatedOperator<T> {
        let mut acc = TruncatedOperator::identity(&self.layout);
        for op in &self.ops {
            acc = op
                .embed()
                .compose(&acc)
                .expect("sequence operators share one layout");
        }
        acc
    }

    /// Product restricted to a subspace, with the worst per-factor leakage.
    pub fn restrict(&self, basis: &SubspaceBasis) -> (CMatrix<T>, T) {
        let n = basis.len();
        let mut acc = DMatrix::identity(n, n);
        let mut leakage = T::zero();
        for op in &self.ops {
            let (m, leak) = op.restrict(basis);
            acc = m * acc;
            leakage = leakage.max(leak);
        }
        (acc, leakage)
    }
}

impl<T: Real> LinearMap<T> for OperatorSequence<T> {
    fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    fn apply_vector(&self, v: &CVector<T>) -> CVector<T> {
        self.ops
            .iter()
            .fold(v.clone(), |acc, op| op.apply_vector(&acc))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{cplx, max_abs};

    fn random_matrix(n: usize, seed: u64) -> CMatrix<f64> {
        let mut s = seed;
        DMatrix::from_fn(n, n, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
            let a = (s >> 33) as f64 / (1u64 << 31) as f64 - 0.5;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
            let b = (s >> 33) as f64 / (1u64 << 31) as f64 - 0.5;
            cplx(a, b)
        })
    }

    #[test]
    fn embedding_matches_kronecker_product() {
        let layout = SpaceLayout::new(1, vec![3, 2]).unwrap();
        let m = random_matrix(3, 5);
        let op = LocalOperator::new(&layout, vec![1], m.clone()).unwrap();
        let id2 = DMatrix::identity(2, 2);
        let expected = id2.kronecker(&m).kronecker(&id2);
        assert!(max_abs(&(op.embed().matrix() - expected)) < 1e-15);
    }

    #[test]
    fn reversed_factor_order_is_a_swap_of_roles() {
        let layout = SpaceLayout::modes(vec![2, 3]).unwrap();
        let a = random_matrix(2, 1);
        let b = random_matrix(3, 2);
        let forward = LocalOperator::new(&layout, vec![0, 1], a.kronecker(&b)).unwrap();
        let backward = LocalOperator::new(&layout, vec![1, 0], b.kronecker(&a)).unwrap();
        assert!(max_abs(&(forward.embed().matrix() - backward.embed().matrix())) < 1e-15);
    }

    #[test]
    fn apply_and_restrict_agree_with_embedding() {
        let layout = SpaceLayout::new(1, vec![3, 3]).unwrap();
        let op = LocalOperator::new(&layout, vec![2, 0], random_matrix(6, 9)).unwrap();
        let full = op.embed();
        let v = nalgebra::DVector::from_fn(layout.dim(), |i, _| cplx(i as f64 * 0.1, 1.0 - i as f64 * 0.05));
        let diff = (op.apply_vector(&v) - full.apply(&v)).norm();
        assert!(diff < 1e-13);
        let basis = SubspaceBasis::new(vec![0, 4, 7, 11]);
        let (restricted, _) = op.restrict(&basis);
        assert!(max_abs(&(restricted - full.restricted(basis.indices()))) < 1e-15);
    }

    #[test]
    fn rejects_bad_factor_lists() {
        let layout = SpaceLayout::modes(vec![2, 2]).unwrap();
        assert!(LocalOperator::new(&layout, vec![0, 0], random_matrix(4, 1)).is_err());
        assert!(LocalOperator::new(&layout, vec![2], random_matrix(2, 1)).is_err());
        assert!(LocalOperator::new(&layout, vec![1], random_matrix(3, 1)).is_err());
    }
}
