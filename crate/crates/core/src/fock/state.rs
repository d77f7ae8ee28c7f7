use nalgebra::{DMatrix, DVector};

use super::layout::SpaceLayout;
use super::local::LinearMap;
use super::operator::TruncatedOperator;
use crate::error::{Error, Result};
use crate::scalar::{lit, max_abs, sandwich, to_f64, CMatrix, CVector, Real, C};

/// Allowed deviation of the trace (or norm²) from one after preparation.
pub const NORM_TOL: f64 = 1e-8;
/// Most negative eigenvalue accepted for a density matrix.
pub const PSD_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum Representation<T: Real> {
    Pure(CVector<T>),
    Density(CMatrix<T>),
}

/// Pure or mixed state on a hybrid space.
///
/// `truncation_tail` is the largest probability ever observed on the top
/// Fock level of any mode, plus any weight discarded while preparing the
/// state. Operations only ever raise it.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridState<T: Real> {
    layout: SpaceLayout,
    repr: Representation<T>,
    truncation_tail: T,
}

/// Checks Hermiticity, unit trace and positivity of `rho`.
pub fn check_density<T: Real>(rho: &CMatrix<T>) -> Result<()> {
    let herm = max_abs(&(rho - rho.adjoint()));
    if to_f64(herm) > super::operator::HERMITIAN_TOL {
        return Err(Error::NotDensityMatrix(format!(
            "Hermiticity residual {:e}",
            to_f64(herm)
        )));
    }
    let trace = to_f64(rho.trace().re);
    if (trace - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized(trace));
    }
    let min = min_eigenvalue(rho);
    if to_f64(min) < -PSD_TOL {
        return Err(Error::NotDensityMatrix(format!(
            "negative eigenvalue {:e}",
            to_f64(min)
        )));
    }
    Ok(())
}

/// Spectrum of a Hermitian matrix (the anti-Hermitian part is ignored).
pub fn hermitian_eigenvalues<T: Real>(m: &CMatrix<T>) -> DVector<T> {
    let sym = (m + m.adjoint()) * C::new(lit::<T>(0.5), T::zero());
    sym.symmetric_eigenvalues()
}

fn min_eigenvalue<T: Real>(m: &CMatrix<T>) -> T {
    hermitian_eigenvalues(m)
        .iter()
        .fold(T::one(), |acc, &x| acc.min(x))
}

impl<T: Real> HybridState<T> {
    pub fn from_pure(layout: &SpaceLayout, v: CVector<T>) -> Result<Self> {
        check_len(layout, v.len())?;
        let n2 = to_f64(v.norm_squared());
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n2));
        }
        Ok(Self::new_unchecked(layout.clone(), Representation::Pure(v)))
    }

    pub fn from_density(layout: &SpaceLayout, rho: CMatrix<T>) -> Result<Self> {
        check_len(layout, rho.nrows())?;
        check_len(layout, rho.ncols())?;
        check_density(&rho)?;
        Ok(Self::new_unchecked(layout.clone(), Representation::Density(rho)))
    }

    pub(crate) fn new_unchecked(layout: SpaceLayout, repr: Representation<T>) -> Self {
        let mut s = Self {
            layout,
            repr,
            truncation_tail: T::zero(),
        };
        s.truncation_tail = s.edge_population();
        s
    }

    /// Basis state `|digits⟩`.
    pub fn fock(layout: &SpaceLayout, digits: &[usize]) -> Result<Self> {
        let dims = layout.factor_dims();
        if digits.len() != dims.len() || digits.iter().zip(&dims).any(|(&x, &d)| x >= d) {
            return Err(Error::InvalidParameter(format!(
                "digits {digits:?} do not fit factor dimensions {dims:?}"
            )));
        }
        let v = super::ops::basis_vector(layout, digits);
        Ok(Self::new_unchecked(layout.clone(), Representation::Pure(v)))
    }

    /// Adds weight discarded outside the represented space.
    pub fn with_discarded_tail(mut self, tail: T) -> Self {
        self.truncation_tail += tail;
        self
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn representation(&self) -> &Representation<T> {
        &self.repr
    }

    pub fn truncation_tail(&self) -> T {
        self.truncation_tail
    }

    pub fn is_pure_vector(&self) -> bool {
        matches!(self.repr, Representation::Pure(_))
    }

    pub fn vector(&self) -> Option<&CVector<T>> {
        match &self.repr {
            Representation::Pure(v) => Some(v),
            Representation::Density(_) => None,
        }
    }

    pub fn density(&self) -> CMatrix<T> {
        match &self.repr {
            Representation::Pure(v) => v * v.adjoint(),
            Representation::Density(rho) => rho.clone(),
        }
    }

    pub fn to_density(&self) -> Self {
        Self {
            layout: self.layout.clone(),
            repr: Representation::Density(self.density()),
            truncation_tail: self.truncation_tail,
        }
    }

    /// Probabilities of the computational basis states.
    pub fn populations(&self) -> Vec<T> {
        match &self.repr {
            Representation::Pure(v) => v.iter().map(|z| z.norm_sqr()).collect(),
            Representation::Density(rho) => rho.diagonal().iter().map(|z| z.re).collect(),
        }
    }

    pub fn trace(&self) -> T {
        match &self.repr {
            Representation::Pure(v) => v.norm_squared(),
            Representation::Density(rho) => rho.trace().re,
        }
    }

    /// `Tr(A ρ)`.
    pub fn expectation(&self, op: &TruncatedOperator<T>) -> Result<C<T>> {
        self.check_layout(op.layout())?;
        Ok(match &self.repr {
            Representation::Pure(v) => v.dotc(&op.apply(v)),
            Representation::Density(rho) => (op.matrix() * rho).trace(),
        })
    }

    /// `Tr(A ρ)` for any map that can act on vectors.
    pub fn expectation_map<M: LinearMap<T>>(&self, op: &M) -> Result<C<T>> {
        self.check_layout(op.layout())?;
        Ok(match &self.repr {
            Representation::Pure(v) => v.dotc(&op.apply_vector(v)),
            Representation::Density(rho) => {
                let mut acc = C::new(T::zero(), T::zero());
                for j in 0..rho.ncols() {
                    let col = op.apply_vector(&rho.column(j).into_owned());
                    acc += col[j];
                }
                acc
            }
        })
    }

    /// `U ρ U†` (or `U|ψ⟩`).
    pub fn apply_unitary(&self, u: &TruncatedOperator<T>) -> Result<Self> {
        self.check_layout(u.layout())?;
        let repr = match &self.repr {
            Representation::Pure(v) => Representation::Pure(u.apply(v)),
            Representation::Density(rho) => {
                Representation::Density(sandwich(u.matrix(), rho))
            }
        };
        Ok(self.evolved(repr))
    }

    /// Same as [`apply_unitary`](Self::apply_unitary) without forming the
    /// dense full-space matrix.
    pub fn apply_map<M: LinearMap<T>>(&self, u: &M) -> Result<Self> {
        self.check_layout(u.layout())?;
        let repr = match &self.repr {
            Representation::Pure(v) => Representation::Pure(u.apply_vector(v)),
            Representation::Density(rho) => Representation::Density(conjugate_by_map(u, rho)),
        };
        Ok(self.evolved(repr))
    }

    fn evolved(&self, repr: Representation<T>) -> Self {
        let mut s = Self {
            layout: self.layout.clone(),
            repr,
            truncation_tail: self.truncation_tail,
        };
        s.truncation_tail = s.truncation_tail.max(s.edge_population());
        s
    }

    /// Probability on the top Fock level of any mode.
    pub fn edge_population(&self) -> T {
        let q = self.layout.qubit_count();
        let cutoffs = self.layout.mode_cutoffs();
        self.populations()
            .into_iter()
            .enumerate()
            .filter(|&(i, _)| {
                self.layout.digits_of(i)[q..]
                    .iter()
                    .zip(cutoffs)
                    .any(|(&n, &d)| n == d - 1)
            })
            .fold(T::zero(), |acc, (_, p)| acc + p)
    }

    /// Projects qubit `qubit` onto `|outcome⟩` and renormalises, returning
    /// the post-measurement state (qubit kept) and the outcome probability.
    pub fn project_qubit(&self, qubit: usize, outcome: bool) -> Result<(Self, T)> {
        let f = self.layout.qubit_factor(qubit)?;
        let keep: Vec<bool> = (0..self.layout.dim())
            .map(|i| (self.layout.digits_of(i)[f] == 1) == outcome)
            .collect();
        self.project_mask(&keep)
    }

    /// Projection onto the basis states flagged in `keep`.
    pub fn project_mask(&self, keep: &[bool]) -> Result<(Self, T)> {
        let zero = C::new(T::zero(), T::zero());
        let (repr, p) = match &self.repr {
            Representation::Pure(v) => {
                let w = DVector::from_fn(v.len(), |i, _| if keep[i] { v[i] } else { zero });
                let p = w.norm_squared();
                (Representation::Pure(w), p)
            }
            Representation::Density(rho) => {
                let m = DMatrix::from_fn(rho.nrows(), rho.ncols(), |r, c| {
                    if keep[r] && keep[c] {
                        rho[(r, c)]
                    } else {
                        zero
                    }
                });
                let p = m.trace().re;
                (Representation::Density(m), p)
            }
        };
        let total = self.trace();
        let p = p / total;
        if to_f64(p) < 1e-12 {
            return Err(Error::EmptyBranch(to_f64(p)));
        }
        let repr = match repr {
            Representation::Pure(v) => Representation::Pure(v.unscale(p.sqrt() * total.sqrt())),
            Representation::Density(m) => Representation::Density(m.unscale(p * total)),
        };
        Ok((
            Self {
                layout: self.layout.clone(),
                repr,
                truncation_tail: self.truncation_tail,
            },
            p,
        ))
    }

    /// Product state `self ⊗ other` in the layout `self.layout.tensor(other.layout)`.
    pub fn tensor(&self, other: &Self) -> Self {
        let layout = self.layout.tensor(&other.layout);
        let qa = self.layout.qubit_count();
        let qb = other.layout.qubit_count();
        let ma = self.layout.mode_count();
        // map combined index -> (index in self, index in other)
        let split = |i: usize| {
            let digits = layout.digits_of(i);
            let mut da: Vec<usize> = digits[..qa].to_vec();
            da.extend_from_slice(&digits[qa + qb..qa + qb + ma]);
            let mut db: Vec<usize> = digits[qa..qa + qb].to_vec();
            db.extend_from_slice(&digits[qa + qb + ma..]);
            (self.layout.index_of(&da), other.layout.index_of(&db))
        };
        let dim = layout.dim();
        let pairs: Vec<(usize, usize)> = (0..dim).map(split).collect();
        let repr = match (&self.repr, &other.repr) {
            (Representation::Pure(a), Representation::Pure(b)) => Representation::Pure(
                DVector::from_fn(dim, |i, _| a[pairs[i].0] * b[pairs[i].1]),
            ),
            _ => {
                let (ra, rb) = (self.density(), other.density());
                Representation::Density(DMatrix::from_fn(dim, dim, |r, c| {
                    ra[(pairs[r].0, pairs[c].0)] * rb[(pairs[r].1, pairs[c].1)]
                }))
            }
        };
        Self {
            layout,
            repr,
            truncation_tail: self.truncation_tail + other.truncation_tail,
        }
    }

    /// Reduced density matrix with all qubits traced out.
    pub fn trace_out_qubits(&self) -> Result<Self> {
        let q = self.layout.qubit_count();
        let modes = SpaceLayout::modes(self.layout.mode_cutoffs().to_vec())?;
        let block = modes.dim();
        let rho = self.density();
        let mut out = DMatrix::zeros(block, block);
        for k in 0..(1usize << q) {
            out += rho.view((k * block, k * block), (block, block));
        }
        Ok(Self {
            layout: modes,
            repr: Representation::Density(out),
            truncation_tail: self.truncation_tail,
        })
    }

    /// Checks every state invariant (norm, Hermiticity, positivity).
    pub fn validate(&self) -> Result<()> {
        match &self.repr {
            Representation::Pure(v) => {
                let n2 = to_f64(v.norm_squared());
                if (n2 - 1.0).abs() > NORM_TOL {
                    return Err(Error::NotNormalized(n2));
                }
                Ok(())
            }
            Representation::Density(rho) => check_density(rho),
        }
    }

    fn check_layout(&self, other: &SpaceLayout) -> Result<()> {
        if &self.layout == other {
            Ok(())
        } else {
            Err(Error::LayoutMismatch(format!(
                "state {:?} vs operator {:?}",
                self.layout, other
            )))
        }
    }
}

fn check_len(layout: &SpaceLayout, n: usize) -> Result<()> {
    if n == layout.dim() {
        Ok(())
    } else {
        Err(Error::ShapeMismatch {
            rows: n,
            cols: n,
            dim: layout.dim(),
        })
    }
}

/// `U ρ U†` using only matrix-vector actions of `U`.
pub fn conjugate_by_map<T: Real, M: LinearMap<T>>(u: &M, rho: &CMatrix<T>) -> CMatrix<T> {
    let n = rho.nrows();
    let mut left = DMatrix::zeros(n, n);
    for j in 0..n {
        left.set_column(j, &u.apply_vector(&rho.column(j).into_owned()));
    }
    // (U (Uρ)†)† = U ρ U†
    let left_h = left.adjoint();
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        out.set_column(j, &u.apply_vector(&left_h.column(j).into_owned()));
    }
    out.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::ops::{controlled_parity_local, parity, Pauli, pauli};
    use crate::scalar::{cplx, creal};

    fn plus_and_mode(d: usize, psi: &[C<f64>]) -> (SpaceLayout, CVector<f64>) {
        let layout = SpaceLayout::new(1, vec![d]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = DVector::from_fn(2 * d, |i, _| psi[i % d] * s);
        (layout, v)
    }

    #[test]
    fn density_checks() {
        let layout = SpaceLayout::modes(vec![2]).unwrap();
        let good = DMatrix::from_diagonal(&DVector::from_vec(vec![creal(0.5), creal(0.5)]));
        assert!(HybridState::from_density(&layout, good).is_ok());
        let bad = DMatrix::from_diagonal(&DVector::from_vec(vec![creal(1.2), creal(-0.2)]));
        assert!(matches!(
            HybridState::from_density(&layout, bad),
            Err(Error::NotDensityMatrix(_))
        ));
        let unnorm = DMatrix::from_diagonal(&DVector::from_vec(vec![creal(0.5), creal(0.4)]));
        assert!(matches!(
            HybridState::from_density(&layout, unnorm),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn map_and_dense_application_agree() {
        let d = 5;
        let psi: Vec<C<f64>> = (0..d).map(|n| cplx(1.0 / (n as f64 + 1.0), 0.1 * n as f64)).collect();
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let psi: Vec<C<f64>> = psi.iter().map(|z| z / norm).collect();
        let (layout, v) = plus_and_mode(d, &psi);
        let state = HybridState::from_pure(&layout, v).unwrap().to_density();
        let local = controlled_parity_local::<f64>(&layout, 0, 0).unwrap();
        let a = state.apply_map(&local).unwrap();
        let b = state.apply_unitary(&local.embed()).unwrap();
        assert!(max_abs(&(a.density() - b.density())) < 1e-14);
    }

    #[test]
    fn controlled_parity_splits_parity_branches() {
        // C|+>|Ψ> = |+>(I+P)|Ψ>/2 + |->(I−P)|Ψ>/2
        let d = 16;
        let mut seed = 11u64;
        let mut rnd = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let psi: Vec<C<f64>> = (0..d).map(|_| cplx(rnd(), rnd())).collect();
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let psi: Vec<C<f64>> = psi.iter().map(|z| z / norm).collect();
        let (layout, v) = plus_and_mode(d, &psi);
        let out = controlled_parity_local::<f64>(&layout, 0, 0)
            .unwrap()
            .apply_vector(&v);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for n in 0..d {
            let even = if n % 2 == 0 { psi[n] } else { creal(0.0) };
            let odd = psi[n] - even;
            // |+> ⊗ even + |-> ⊗ odd, in the computational ancilla basis
            let expect0 = (even + odd) * s;
            let expect1 = (even - odd) * s;
            assert!((out[n] - expect0).norm() < 1e-14);
            assert!((out[d + n] - expect1).norm() < 1e-14);
        }
    }

    #[test]
    fn projection_and_tensor() {
        let layout = SpaceLayout::new(1, vec![3]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = DVector::zeros(6);
        v[1] = creal(s);
        v[5] = creal(s);
        let st = HybridState::from_pure(&layout, v).unwrap();
        assert!((st.edge_population() - 0.5).abs() < 1e-15);
        let (proj, p) = st.project_qubit(0, true).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert!((proj.trace() - 1.0).abs() < 1e-15);
        let z = pauli::<f64>(&layout, 0, Pauli::Z).unwrap();
        assert!((proj.expectation(&z).unwrap().re + 1.0).abs() < 1e-15);
        let dm = st.to_density();
        let (pd, pp) = dm.project_qubit(0, false).unwrap();
        assert!((pp - 0.5).abs() < 1e-15);
        assert!((pd.expectation(&z).unwrap().re - 1.0).abs() < 1e-15);

        let other = HybridState::<f64>::fock(&SpaceLayout::modes(vec![2]).unwrap(), &[1]).unwrap();
        let joint = st.tensor(&other);
        assert_eq!(joint.layout().mode_cutoffs(), &[3, 2]);
        let p2 = parity::<f64>(joint.layout(), 1).unwrap();
        assert!((joint.expectation(&p2).unwrap().re + 1.0).abs() < 1e-15);
        let mixed = dm.tensor(&other.to_density());
        assert!(max_abs(&(mixed.density() - joint.density())) < 1e-15);
        let reduced = joint.trace_out_qubits().unwrap();
        assert!((reduced.trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_branch_is_an_error() {
        let layout = SpaceLayout::new(1, vec![2]).unwrap();
        let st = HybridState::<f64>::fock(&layout, &[0, 1]).unwrap();
        assert!(matches!(st.project_qubit(0, true), Err(Error::EmptyBranch(_))));
    }
}
