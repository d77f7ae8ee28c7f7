//! Scalar abstraction shared by every numerical module.
//!
//! All physics is written against [`Real`], so the same code runs in `f64`
//! (the default used by the aliases at the crate root) and in `f32`. The
//! tolerances quoted throughout the crate are `f64` tolerances; in `f32`
//! only the loose structural checks are meaningful.

use nalgebra::{DMatrix, DVector, RealField};
use num_complex::Complex;
use num_traits::{FloatConst, FromPrimitive, ToPrimitive};

/// Real floating point type usable as the base field of the simulator.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + FloatConst + Send + Sync + 'static
{
    /// Largest 1-norm for which the Padé approximant of the matrix
    /// exponential is used without further scaling, and its degree.
    const PADE: (f64, usize);
}

impl Real for f64 {
    const PADE: (f64, usize) = (5.371_920_351_148_152, 13);
}

impl Real for f32 {
    const PADE: (f64, usize) = (3.925_724_783_138_66, 7);
}

/// Complex scalar over `T`.
pub type C<T> = Complex<T>;
/// Dense complex matrix over `T`.
pub type CMatrix<T> = DMatrix<Complex<T>>;
/// Dense complex column vector over `T`.
pub type CVector<T> = DVector<Complex<T>>;

/// Below this size the plain complex product is as fast.
const SPLIT_MATMUL_MIN: usize = 32;

/// `a·b` through four real products, which reach the blocked real kernel;
/// the generic complex product does not.
pub fn cmatmul<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    if a.nrows().min(a.ncols()).min(b.ncols()) < SPLIT_MATMUL_MIN {
        return a * b;
    }
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    re.zip_map(&im, Complex::new)
}

/// `u ρ u†`.
pub fn sandwich<T: Real>(u: &CMatrix<T>, rho: &CMatrix<T>) -> CMatrix<T> {
    cmatmul(&cmatmul(u, rho), &u.adjoint())
}

/// `m^n` by repeated squaring.
pub fn matrix_power<T: Real>(m: &CMatrix<T>, mut n: u64) -> CMatrix<T> {
    let mut result = DMatrix::identity(m.nrows(), m.ncols());
    let mut base = m.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = cmatmul(&result, &base);
        }
        n >>= 1;
        if n > 0 {
            base = cmatmul(&base, &base);
        }
    }
    result
}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

/// Converts a `usize` into `T`.
#[inline]
pub fn from_usize<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("usize representable in scalar type")
}

#[inline]
pub fn cplx<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

#[inline]
pub fn creal<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}

#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Modulus of a complex scalar.
#[inline]
pub fn cabs<T: Real>(z: C<T>) -> T {
    nalgebra::ComplexField::modulus(z)
}

/// Largest entry modulus of a complex matrix.
pub fn max_abs<T: Real>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(cabs(*z)))
}

/// Conjugate transpose.
pub fn dagger<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    m.adjoint()
}

/// Kronecker product `a ⊗ b`.
pub fn kron<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a.kronecker(b)
}

/// Operator (spectral) norm, computed from the singular values.
pub fn operator_norm<T: Real>(m: &CMatrix<T>) -> T {
    if m.is_empty() {
        return T::zero();
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(T::zero(), |acc, &s| acc.max(s))
}
