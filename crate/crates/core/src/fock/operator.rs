use std::sync::OnceLock;

use nalgebra::DMatrix;

use super::expm::expm;
use super::layout::SpaceLayout;
use crate::error::{Error, Result};
use crate::scalar::{cmatmul, creal, lit, max_abs, sandwich, CMatrix, CVector, Real, C};

/// Tolerance on `‖U†U − I‖_max` for the unitary flag.
pub const UNITARY_TOL: f64 = 1e-10;
/// Tolerance on `‖A − A†‖_max` for the Hermitian flag.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Outcome of a lazily evaluated structural check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Verified<T> {
    pub holds: bool,
    pub residual: T,
    pub tolerance: T,
}

/// Dense operator on the full space of a [`SpaceLayout`].
#[derive(Debug)]
pub struct TruncatedOperator<T: Real> {
    layout: SpaceLayout,
    matrix: CMatrix<T>,
    hermitian: OnceLock<Verified<T>>,
    unitary: OnceLock<Verified<T>>,
}

impl<T: Real> Clone for TruncatedOperator<T> {
    fn clone(&self) -> Self {
        Self {
            layout: self.layout.clone(),
            matrix: self.matrix.clone(),
            hermitian: self.hermitian.clone(),
            unitary: self.unitary.clone(),
        }
    }
}

impl<T: Real> TruncatedOperator<T> {
    pub fn from_matrix(layout: SpaceLayout, matrix: CMatrix<T>) -> Result<Self> {
        let dim = layout.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::ShapeMismatch {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
                dim,
            });
        }
        Ok(Self::new_unchecked(layout, matrix))
    }

    pub(crate) fn new_unchecked(layout: SpaceLayout, matrix: CMatrix<T>) -> Self {
        Self {
            layout,
            matrix,
            hermitian: OnceLock::new(),
            unitary: OnceLock::new(),
        }
    }

    pub fn identity(layout: &SpaceLayout) -> Self {
        let dim = layout.dim();
        Self::new_unchecked(layout.clone(), DMatrix::identity(dim, dim))
    }

    pub fn zeros(layout: &SpaceLayout) -> Self {
        let dim = layout.dim();
        Self::new_unchecked(layout.clone(), DMatrix::zeros(dim, dim))
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn check_layout(&self, other: &Self) -> Result<()> {
        if self.layout == other.layout {
            Ok(())
        } else {
            Err(Error::LayoutMismatch(format!(
                "{:?} vs {:?}",
                self.layout, other.layout
            )))
        }
    }

    /// `self · other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_layout(other)?;
        Ok(Self::new_unchecked(
            self.layout.clone(),
            cmatmul(&self.matrix, &other.matrix),
        ))
    }

    /// Composes a sequence given in application order: the first element
    /// acts first, so the result is `ops[n-1] ⋯ ops[0]`.
    pub fn sequence<'a, I>(layout: &SpaceLayout, ops: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Self>,
    {
        let mut acc = Self::identity(layout);
        for op in ops {
            acc = op.compose(&acc)?;
        }
        Ok(acc)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_layout(other)?;
        Ok(Self::new_unchecked(
            self.layout.clone(),
            &self.matrix + &other.matrix,
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_layout(other)?;
        Ok(Self::new_unchecked(
            self.layout.clone(),
            &self.matrix - &other.matrix,
        ))
    }

    pub fn scale(&self, factor: C<T>) -> Self {
        Self::new_unchecked(self.layout.clone(), &self.matrix * factor)
    }

    pub fn adjoint(&self) -> Self {
        Self::new_unchecked(self.layout.clone(), self.matrix.adjoint())
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_layout(other)?;
        Ok(Self::new_unchecked(
            self.layout.clone(),
            cmatmul(&self.matrix, &other.matrix) - cmatmul(&other.matrix, &self.matrix),
        ))
    }

    /// `self · other · self†`.
    pub fn conjugate(&self, other: &Self) -> Result<Self> {
        self.check_layout(other)?;
        Ok(Self::new_unchecked(
            self.layout.clone(),
            sandwich(&self.matrix, &other.matrix),
        ))
    }

    /// Matrix exponential `exp(self)`.
    pub fn exp(&self) -> Self {
        Self::new_unchecked(self.layout.clone(), expm(&self.matrix))
    }

    /// `self^n` by repeated squaring.
    pub fn pow(&self, n: u64) -> Self {
        Self::new_unchecked(self.layout.clone(), crate::scalar::matrix_power(&self.matrix, n))
    }

    pub fn apply(&self, v: &CVector<T>) -> CVector<T> {
        &self.matrix * v
    }

    pub fn max_abs(&self) -> T {
        max_abs(&self.matrix)
    }

    /// Largest entry of `self − other`.
    pub fn distance_max(&self, other: &Self) -> Result<T> {
        self.check_layout(other)?;
        Ok(max_abs(&(&self.matrix - &other.matrix)))
    }

    pub fn hermiticity(&self) -> Verified<T> {
        *self.hermitian.get_or_init(|| {
            let residual = max_abs(&(&self.matrix - self.matrix.adjoint()));
            let tolerance = lit(HERMITIAN_TOL);
            Verified {
                holds: residual <= tolerance,
                residual,
                tolerance,
            }
        })
    }

    pub fn unitarity(&self) -> Verified<T> {
        *self.unitary.get_or_init(|| {
            let dim = self.dim();
            let product = cmatmul(&self.matrix.adjoint(), &self.matrix);
            let residual = max_abs(&(product - DMatrix::identity(dim, dim)));
            let tolerance = lit(UNITARY_TOL);
            Verified {
                holds: residual <= tolerance,
                residual,
                tolerance,
            }
        })
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity().holds
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity().holds
    }

    /// `‖self² − I‖_max`.
    pub fn involution_residual(&self) -> T {
        let dim = self.dim();
        max_abs(&(cmatmul(&self.matrix, &self.matrix) - DMatrix::<C<T>>::identity(dim, dim)))
    }

    /// Submatrix on the given basis indices (rows and columns).
    pub fn restricted(&self, indices: &[usize]) -> CMatrix<T> {
        DMatrix::from_fn(indices.len(), indices.len(), |i, j| {
            self.matrix[(indices[i], indices[j])]
        })
    }

    pub fn trace(&self) -> C<T> {
        self.matrix.trace()
    }

    /// Zero-phase identity plus a multiple of this operator.
    pub fn affine_identity(&self, identity_coeff: C<T>, coeff: C<T>) -> Self {
        let dim = self.dim();
        Self::new_unchecked(
            self.layout.clone(),
            DMatrix::<C<T>>::identity(dim, dim) * identity_coeff + &self.matrix * coeff,
        )
    }
}

impl<T: Real> PartialEq for TruncatedOperator<T> {
    fn eq(&self, other: &Self) -> bool {
        self.layout == other.layout && self.matrix == other.matrix
    }
}

/// Scalar helper kept here so builders can write `one::<T>()`.
pub(crate) fn one<T: Real>() -> C<T> {
    creal(T::one())
}
