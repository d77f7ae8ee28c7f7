//! Builders for the standard operators.
//!
//! Each builder comes in two flavours: `*_local` returns a [`LocalOperator`]
//! carrying only the small factor matrix, the plain name returns the dense
//! embedding into the full space.
//!
//! Beam-splitter convention: with generator `a_b a_a† − a_b† a_a` the
//! single-excitation block maps `|1,0⟩ → (|1,0⟩ − |0,1⟩)/√2` and
//! `|0,1⟩ → (|1,0⟩ + |0,1⟩)/√2`, where the first label is `mode_a`.

use nalgebra::DMatrix;

use super::expm::expm;
use super::layout::SpaceLayout;
use super::local::LocalOperator;
use super::operator::{one, TruncatedOperator};
use crate::error::Result;
use crate::scalar::{cplx, creal, from_usize, CMatrix, Real, C};

/// Single-qubit Pauli labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix<T: Real>(self) -> CMatrix<T> {
        let z = C::new(T::zero(), T::zero());
        let o = one::<T>();
        let i = cplx(T::zero(), T::one());
        match self {
            Pauli::I => DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
            Pauli::X => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
            Pauli::Y => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
            Pauli::Z => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        }
    }
}

/// `a` on a single `d`-level factor.
pub fn annihilation_matrix<T: Real>(d: usize) -> CMatrix<T> {
    let mut m = DMatrix::zeros(d, d);
    for n in 1..d {
        m[(n - 1, n)] = creal(from_usize::<T>(n).sqrt());
    }
    m
}

pub fn number_matrix<T: Real>(d: usize) -> CMatrix<T> {
    DMatrix::from_fn(d, d, |r, c| {
        if r == c {
            creal(from_usize(r))
        } else {
            C::new(T::zero(), T::zero())
        }
    })
}

pub fn parity_matrix<T: Real>(d: usize) -> CMatrix<T> {
    DMatrix::from_fn(d, d, |r, c| match (r == c, r % 2) {
        (true, 0) => one(),
        (true, _) => -one::<T>(),
        _ => C::new(T::zero(), T::zero()),
    })
}

/// `exp(iφN)` on a single factor.
pub fn phase_matrix<T: Real>(d: usize, phi: T) -> CMatrix<T> {
    DMatrix::from_fn(d, d, |r, c| {
        if r == c {
            let angle = phi * from_usize(r);
            cplx(angle.cos(), angle.sin())
        } else {
            C::new(T::zero(), T::zero())
        }
    })
}

/// `exp(iθσ) = cos θ I + i sin θ σ`.
pub fn rotation_matrix<T: Real>(pauli: Pauli, theta: T) -> CMatrix<T> {
    Pauli::I.matrix::<T>() * creal(theta.cos()) + pauli.matrix::<T>() * cplx(T::zero(), theta.sin())
}

/// `exp(α a† − α* a)` on a single truncated factor.
pub fn displacement_matrix<T: Real>(d: usize, alpha: C<T>) -> CMatrix<T> {
    let a = annihilation_matrix::<T>(d);
    let generator = a.adjoint() * alpha - &a * alpha.conj();
    expm(&generator)
}

/// 50:50 beam splitter on two `d`-level factors, row-major `|n_a, n_b⟩`.
///
/// Built block by block in total excitation number; the truncated generator
/// is block diagonal, so this equals the exponential of the full generator.
pub fn beam_splitter_matrix<T: Real>(d: usize) -> CMatrix<T> {
    let quarter_pi = T::frac_pi_4();
    let mut out = DMatrix::zeros(d * d, d * d);
    for total in 0..=2 * (d - 1) {
        let lo = total.saturating_sub(d - 1);
        let hi = total.min(d - 1);
        let states: Vec<(usize, usize)> = (lo..=hi).map(|na| (na, total - na)).collect();
        let k = states.len();
        let mut g = DMatrix::<C<T>>::zeros(k, k);
        for (j, &(na, nb)) in states.iter().enumerate() {
            // a_b a_a†|na, nb⟩ = √(na+1)√nb |na+1, nb−1⟩
            if nb > 0 && na + 1 < d {
                let i = j + 1;
                let amp = (from_usize::<T>(na + 1) * from_usize::<T>(nb)).sqrt();
                g[(i, j)] += creal(amp * quarter_pi);
            }
            // −a_b† a_a|na, nb⟩ = −√na √(nb+1) |na−1, nb+1⟩
            if na > lo && nb + 1 < d {
                let i = j - 1;
                let amp = (from_usize::<T>(na) * from_usize::<T>(nb + 1)).sqrt();
                g[(i, j)] -= creal(amp * quarter_pi);
            }
        }
        let block = expm(&g);
        for (i, &(ra, rb)) in states.iter().enumerate() {
            for (j, &(ca, cb)) in states.iter().enumerate() {
                out[(ra * d + rb, ca * d + cb)] = block[(i, j)];
            }
        }
    }
    out
}

pub fn swap_matrix<T: Real>(d: usize) -> CMatrix<T> {
    let mut out = DMatrix::zeros(d * d, d * d);
    for m in 0..d {
        for n in 0..d {
            out[(n * d + m, m * d + n)] = one();
        }
    }
    out
}

/// `|0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ P` on (qubit, mode).
pub fn controlled_parity_matrix<T: Real>(d: usize) -> CMatrix<T> {
    let mut out = DMatrix::zeros(2 * d, 2 * d);
    for n in 0..d {
        out[(n, n)] = one();
        out[(d + n, d + n)] = if n % 2 == 0 { one() } else { -one::<T>() };
    }
    out
}

fn on_mode<T: Real>(layout: &SpaceLayout, mode: usize, m: CMatrix<T>) -> Result<LocalOperator<T>> {
    let f = layout.mode_factor(mode)?;
    LocalOperator::new(layout, vec![f], m)
}

fn on_pair<T: Real>(
    layout: &SpaceLayout,
    mode_a: usize,
    mode_b: usize,
    m: impl FnOnce(usize) -> CMatrix<T>,
) -> Result<LocalOperator<T>> {
    let d = layout.check_mode_pair(mode_a, mode_b)?;
    let fa = layout.mode_factor(mode_a)?;
    let fb = layout.mode_factor(mode_b)?;
    LocalOperator::new(layout, vec![fa, fb], m(d))
}

pub fn annihilation_local<T: Real>(layout: &SpaceLayout, mode: usize) -> Result<LocalOperator<T>> {
    on_mode(layout, mode, annihilation_matrix(layout.cutoff(mode)?))
}

pub fn creation_local<T: Real>(layout: &SpaceLayout, mode: usize) -> Result<LocalOperator<T>> {
    on_mode(layout, mode, annihilation_matrix::<T>(layout.cutoff(mode)?).adjoint())
}

pub fn number_local<T: Real>(layout: &SpaceLayout, mode: usize) -> Result<LocalOperator<T>> {
    on_mode(layout, mode, number_matrix(layout.cutoff(mode)?))
}

pub fn parity_local<T: Real>(layout: &SpaceLayout, mode: usize) -> Result<LocalOperator<T>> {
    on_mode(layout, mode, parity_matrix(layout.cutoff(mode)?))
}

pub fn phase_rotation_local<T: Real>(
    layout: &SpaceLayout,
    mode: usize,
    phi: T,
) -> Result<LocalOperator<T>> {
    on_mode(layout, mode, phase_matrix(layout.cutoff(mode)?, phi))
}

pub fn displacement_local<T: Real>(
    layout: &SpaceLayout,
    mode: usize,
    alpha: C<T>,
) -> Result<LocalOperator<T>> {
    on_mode(layout, mode, displacement_matrix(layout.cutoff(mode)?, alpha))
}

pub fn beam_splitter_5050_local<T: Real>(
    layout: &SpaceLayout,
    mode_a: usize,
    mode_b: usize,
) -> Result<LocalOperator<T>> {
    on_pair(layout, mode_a, mode_b, beam_splitter_matrix)
}

pub fn two_mode_swap_local<T: Real>(
    layout: &SpaceLayout,
    mode_a: usize,
    mode_b: usize,
) -> Result<LocalOperator<T>> {
    on_pair(layout, mode_a, mode_b, swap_matrix)
}

pub fn controlled_parity_local<T: Real>(
    layout: &SpaceLayout,
    qubit: usize,
    mode: usize,
) -> Result<LocalOperator<T>> {
    let fq = layout.qubit_factor(qubit)?;
    let fm = layout.mode_factor(mode)?;
    LocalOperator::new(layout, vec![fq, fm], controlled_parity_matrix(layout.cutoff(mode)?))
}

pub fn pauli_local<T: Real>(layout: &SpaceLayout, qubit: usize, p: Pauli) -> Result<LocalOperator<T>> {
    LocalOperator::new(layout, vec![layout.qubit_factor(qubit)?], p.matrix())
}

/// `exp(iθσ)` on one qubit.
pub fn qubit_rotation_local<T: Real>(
    layout: &SpaceLayout,
    qubit: usize,
    p: Pauli,
    theta: T,
) -> Result<LocalOperator<T>> {
    LocalOperator::new(layout, vec![layout.qubit_factor(qubit)?], rotation_matrix(p, theta))
}

pub fn annihilation<T: Real>(layout: &SpaceLayout, mode: usize) -> Result<TruncatedOperator<T>> {
    Ok(annihilation_local(layout, mode)?.embed())
}

pub fn creation<T: Real>(layout: &SpaceLayout, mode: usize) -> Result<TruncatedOperator<T>> {
    Ok(creation_local(layout, mode)?.embed())
}

pub fn number<T: Real>(layout: &SpaceLayout, mode: usize) -> Result<TruncatedOperator<T>> {
    Ok(number_local(layout, mode)?.embed())
}

/// Sum of the number operators of all modes.
pub fn total_number<T: Real>(layout: &SpaceLayout) -> TruncatedOperator<T> {
    let dim = layout.dim();
    let q = layout.qubit_count();
    let diag = (0..dim).map(|i| {
        let n: usize = layout.digits_of(i)[q..].iter().sum();
        creal(from_usize::<T>(n))
    });
    let m = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(dim, diag));
    TruncatedOperator::new_unchecked(layout.clone(), m)
}

pub fn parity<T: Real>(layout: &SpaceLayout, mode: usize) -> Result<TruncatedOperator<T>> {
    Ok(parity_local(layout, mode)?.embed())
}

pub fn phase_rotation<T: Real>(
    layout: &SpaceLayout,
    mode: usize,
    phi: T,
) -> Result<TruncatedOperator<T>> {
    Ok(phase_rotation_local(layout, mode, phi)?.embed())
}

pub fn displacement<T: Real>(
    layout: &SpaceLayout,
    mode: usize,
    alpha: C<T>,
) -> Result<TruncatedOperator<T>> {
    Ok(displacement_local(layout, mode, alpha)?.embed())
}

pub fn beam_splitter_5050<T: Real>(
    layout: &SpaceLayout,
    mode_a: usize,
    mode_b: usize,
) -> Result<TruncatedOperator<T>> {
    Ok(beam_splitter_5050_local(layout, mode_a, mode_b)?.embed())
}

pub fn two_mode_swap<T: Real>(
    layout: &SpaceLayout,
    mode_a: usize,
    mode_b: usize,
) -> Result<TruncatedOperator<T>> {
    Ok(two_mode_swap_local(layout, mode_a, mode_b)?.embed())
}

pub fn controlled_parity<T: Real>(
    layout: &SpaceLayout,
    qubit: usize,
    mode: usize,
) -> Result<TruncatedOperator<T>> {
    Ok(controlled_parity_local(layout, qubit, mode)?.embed())
}

pub fn pauli<T: Real>(layout: &SpaceLayout, qubit: usize, p: Pauli) -> Result<TruncatedOperator<T>> {
    Ok(pauli_local(layout, qubit, p)?.embed())
}

pub fn qubit_rotation<T: Real>(
    layout: &SpaceLayout,
    qubit: usize,
    p: Pauli,
    theta: T,
) -> Result<TruncatedOperator<T>> {
    Ok(qubit_rotation_local(layout, qubit, p, theta)?.embed())
}

/// Basis vector `|digits⟩` as a column.
pub fn basis_vector<T: Real>(layout: &SpaceLayout, digits: &[usize]) -> crate::scalar::CVector<T> {
    let mut v = nalgebra::DVector::zeros(layout.dim());
    v[layout.index_of(digits)] = one();
    v
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::scalar::max_abs;

    fn l(q: usize, d: &[usize]) -> SpaceLayout {
        SpaceLayout::new(q, d.to_vec()).unwrap()
    }

    #[test]
    fn ladder_coefficients() {
        let a = annihilation::<f64>(&l(0, &[2]), 0).unwrap();
        assert_eq!(a.matrix()[(0, 1)], creal(1.0));
        assert_eq!(a.matrix()[(1, 0)], creal(0.0));
        let a = annihilation::<f64>(&l(0, &[6]), 0).unwrap();
        assert!((a.matrix()[(2, 3)].re - 3f64.sqrt()).abs() < 1e-15);
        let vac = basis_vector::<f64>(&l(0, &[6]), &[0]);
        assert!(a.apply(&vac).norm() == 0.0);
    }

    #[test]
    fn parity_equals_exponential_of_number() {
        let layout = l(1, &[7, 3]);
        let n = number::<f64>(&layout, 0).unwrap();
        let p = parity::<f64>(&layout, 0).unwrap();
        let e = n.scale(cplx(0.0, std::f64::consts::PI)).exp();
        assert!(e.distance_max(&p).unwrap() < 1e-10);
        assert_eq!(p.involution_residual(), 0.0);
        assert!(p.is_hermitian() && p.is_unitary());
    }

    #[test]
    fn displacement_vacuum_overlap() {
        let layout = l(0, &[20]);
        let alpha = cplx(0.3, 0.0);
        let d = displacement::<f64>(&layout, 0, alpha).unwrap();
        // series oracle for <0|exp(αa† − αa)|0> = e^{-|α|²/2}
        let expected = (-0.045f64).exp();
        assert!((d.matrix()[(0, 0)].re - expected).abs() < 1e-8);
        let dm = displacement::<f64>(&layout, 0, -alpha).unwrap();
        let prod = d.compose(&dm).unwrap();
        assert!(prod.distance_max(&TruncatedOperator::identity(&layout)).unwrap() < 1e-10);
        assert!(displacement::<f64>(&layout, 0, cplx(0.0, 0.0))
            .unwrap()
            .distance_max(&TruncatedOperator::identity(&layout))
            .unwrap()
            < 1e-15);
    }

    #[test]
    fn beam_splitter_sign_convention() {
        let layout = l(0, &[4, 4]);
        let b = beam_splitter_5050::<f64>(&layout, 0, 1).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let out = b.apply(&basis_vector(&layout, &[1, 0]));
        assert!((out[layout.index_of(&[1, 0])].re - s).abs() < 1e-14);
        assert!((out[layout.index_of(&[0, 1])].re + s).abs() < 1e-14);
        let out = b.apply(&basis_vector(&layout, &[0, 1]));
        assert!((out[layout.index_of(&[1, 0])].re - s).abs() < 1e-14);
        assert!((out[layout.index_of(&[0, 1])].re - s).abs() < 1e-14);
        let vac = basis_vector::<f64>(&layout, &[0, 0]);
        assert!((b.apply(&vac) - vac).norm() < 1e-15);
    }

    #[test]
    fn beam_splitter_matches_full_generator_exponential() {
        let layout = l(0, &[5, 5]);
        let a1 = annihilation::<f64>(&layout, 0).unwrap();
        let a2 = annihilation::<f64>(&layout, 1).unwrap();
        let g = a2
            .compose(&a1.adjoint())
            .unwrap()
            .sub(&a2.adjoint().compose(&a1).unwrap())
            .unwrap()
            .scale(creal(std::f64::consts::FRAC_PI_4));
        let b = beam_splitter_5050::<f64>(&layout, 0, 1).unwrap();
        assert!(g.exp().distance_max(&b).unwrap() < 1e-12);
        let n = total_number::<f64>(&layout);
        assert!(b.commutator(&n).unwrap().max_abs() < 1e-12);
        assert!(b.is_unitary());
    }

    #[test]
    fn swap_exchanges_labels_and_ladders() {
        let layout = l(0, &[6, 6]);
        let s = two_mode_swap::<f64>(&layout, 0, 1).unwrap();
        let v = s.apply(&basis_vector(&layout, &[2, 5]));
        assert_eq!(v[layout.index_of(&[5, 2])], creal(1.0));
        let a1 = annihilation::<f64>(&layout, 0).unwrap();
        let a2 = annihilation::<f64>(&layout, 1).unwrap();
        assert!(s.conjugate(&a1).unwrap().distance_max(&a2).unwrap() < 1e-12);
        assert_eq!(s.involution_residual(), 0.0);
        let n = total_number::<f64>(&layout);
        assert!(s.commutator(&n).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn controlled_parity_blocks() {
        let layout = l(1, &[5]);
        let c = controlled_parity::<f64>(&layout, 0, 0).unwrap();
        let v = basis_vector::<f64>(&layout, &[0, 3]);
        assert_eq!(c.apply(&v), v);
        let v = basis_vector::<f64>(&layout, &[1, 3]);
        assert_eq!(c.apply(&v), -v.clone());
        assert_eq!(c.involution_residual(), 0.0);
        // same operator from the exponential form
        let z = pauli::<f64>(&layout, 0, Pauli::Z).unwrap();
        let n = number::<f64>(&layout, 0).unwrap();
        let gen = z
            .affine_identity(creal(1.0), creal(-1.0))
            .compose(&n)
            .unwrap()
            .scale(cplx(0.0, std::f64::consts::FRAC_PI_2));
        assert!(gen.exp().distance_max(&c).unwrap() < 1e-10);
    }

    #[test]
    fn rotation_is_exponential_of_pauli() {
        let layout = l(2, &[2]);
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            let r = qubit_rotation::<f64>(&layout, 1, p, 0.37).unwrap();
            let e = pauli::<f64>(&layout, 1, p).unwrap().scale(cplx(0.0, 0.37)).exp();
            assert!(r.distance_max(&e).unwrap() < 1e-13);
        }
    }

    #[test]
    fn index_errors() {
        let layout = l(1, &[3, 4]);
        assert!(matches!(
            annihilation::<f64>(&layout, 2),
            Err(Error::InvalidMode { .. })
        ));
        assert!(matches!(
            beam_splitter_5050::<f64>(&layout, 0, 0),
            Err(Error::SameMode(0))
        ));
        assert!(matches!(
            two_mode_swap::<f64>(&layout, 0, 1),
            Err(Error::CutoffMismatch { .. })
        ));
        assert!(matches!(
            controlled_parity::<f64>(&layout, 1, 0),
            Err(Error::InvalidQubit { .. })
        ));
        assert!(max_abs(&Pauli::I.matrix::<f64>()) == 1.0);
    }
}
