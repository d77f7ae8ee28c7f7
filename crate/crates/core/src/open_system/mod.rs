//! Damped-mode dynamics: the Lindblad equation
//! `ρ̇ = −i[H,ρ] + (ν/Q)(N_th+1)D[a]ρ + (ν/Q)N_th D[a†]ρ`,
//! its quantum-jump unravelling, the controlled-parity fidelity and the closed-form
//! error estimates.

mod estimates;
mod fidelity;
mod master;
mod trajectory;

pub use estimates::{
    cooling_comparison, cooling_rate, epsilon_tqp, epsilon_tqp_trajectory, CoolingReport, EpsilonTqp,
    TrajectoryCount,
};
pub use fidelity::{protocol_cutoff, figure3_fidelity, FidelityPoint, ParityGate, PROTOCOL_TAIL, DEGENERATE_BRANCH};
pub use master::{evolve_master, trace_distance, MasterRun, CERTIFY_TOL, MAX_HALVINGS, SUPEROPERATOR_MAX_DIM};
pub use trajectory::{jump_probability, jump_unravelling, JumpEnsemble, JumpProbability, PureMixture};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::ops::annihilation;
use crate::fock::{HybridState, SpaceLayout, TruncatedOperator};
use crate::pulse::HybridHamiltonianParams;
use crate::scalar::{cmatmul, cplx, creal, lit, sandwich, CMatrix, Real, C};

/// Bath and cooling-drive parameters, rates in units of `ν`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseParams {
    #[serde(default = "one")]
    pub nu: f64,
    #[serde(default)]
    pub eta: f64,
    /// Quality factor; `None` switches the bath off.
    #[serde(default)]
    pub q_factor: Option<f64>,
    #[serde(default)]
    pub n_th: f64,
    #[serde(default)]
    pub gamma_dc: f64,
    #[serde(default)]
    pub gamma_dp: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub omega: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            nu: 1.0,
            eta: 0.0,
            q_factor: None,
            n_th: 0.0,
            gamma_dc: 0.0,
            gamma_dp: 0.0,
            delta: 0.0,
            omega: 0.0,
        }
    }
}

impl NoiseParams {
    /// No bath.
    pub fn closed(eta: f64) -> Self {
        Self { eta, ..Self::default() }
    }

    pub fn bath(eta: f64, q_factor: f64, n_th: f64) -> Self {
        Self {
            eta,
            q_factor: Some(q_factor),
            n_th,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("nu", self.nu),
            ("eta", self.eta),
            ("n_th", self.n_th),
            ("gamma_dc", self.gamma_dc),
            ("gamma_dp", self.gamma_dp),
            ("delta", self.delta),
            ("omega", self.omega),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.nu <= 0.0 {
            return Err(Error::InvalidParameter("nu must be positive".into()));
        }
        if let Some(q) = self.q_factor {
            if !(q.is_finite() && q > 0.0) {
                return Err(Error::InvalidParameter(format!("Q must be positive, got {q}")));
            }
        }
        Ok(())
    }

    pub fn hybrid(&self) -> Result<HybridHamiltonianParams> {
        let p = HybridHamiltonianParams {
            nu: self.nu,
            eta: self.eta,
            coupling_axis: crate::fock::Pauli::Z,
        };
        p.validate()?;
        Ok(p)
    }

    /// `ν/Q`, zero without a bath.
    pub fn damping(&self) -> f64 {
        self.q_factor.map_or(0.0, |q| self.nu / q)
    }

    /// Rate of the `a` channel, `(ν/Q)(N_th + 1)`.
    pub fn rate_down(&self) -> f64 {
        self.damping() * (self.n_th + 1.0)
    }

    /// Rate of the `a†` channel, `(ν/Q)N_th`.
    pub fn rate_up(&self) -> f64 {
        self.damping() * self.n_th
    }

    pub fn is_closed(&self) -> bool {
        self.damping() == 0.0
    }
}

/// `D[O]ρ = OρO† − ½O†Oρ − ½ρO†O`.
pub fn dissipator<T: Real>(o: &CMatrix<T>, rho: &CMatrix<T>) -> CMatrix<T> {
    let od = o.adjoint();
    let odo = &od * o;
    let half = creal(lit::<T>(0.5));
    o * rho * &od - (&odo * rho + rho * &odo) * half
}

/// Jump channels `(rate, L)` on every mode of `layout`.
pub(crate) fn channels<T: Real>(layout: &SpaceLayout, noise: &NoiseParams) -> Result<Vec<(T, CMatrix<T>)>> {
    let mut out = Vec::new();
    for mode in 0..layout.mode_count() {
        let a = annihilation::<T>(layout, mode)?.into_matrix();
        if noise.rate_down() > 0.0 {
            out.push((lit(noise.rate_down()), a.clone()));
        }
        if noise.rate_up() > 0.0 {
            out.push((lit(noise.rate_up()), a.adjoint()));
        }
    }
    Ok(out)
}

/// Right-hand side of the master equation for a density-matrix state.
pub fn lindblad_rhs<T: Real>(state: &HybridState<T>, h: &TruncatedOperator<T>, noise: &NoiseParams) -> Result<CMatrix<T>> {
    noise.validate()?;
    if h.layout() != state.layout() {
        return Err(Error::LayoutMismatch("Hamiltonian and state layouts differ".into()));
    }
    let rho = state.density();
    let mi = cplx(T::zero(), -T::one());
    let mut out = (h.matrix() * &rho - &rho * h.matrix()) * mi;
    for (rate, l) in channels::<T>(state.layout(), noise)? {
        out += dissipator(&l, &rho) * creal(rate);
    }
    Ok(out)
}

/// Lindblad generator split as `L = L₀ + L₁`, `L₀ = −i[H₀,·]` with `H₀`
/// diagonal, integrated in the interaction picture of `L₀` by a fourth-order
/// Lawson Runge-Kutta step.
#[derive(Clone, Debug)]
pub(crate) struct Stepper<T: Real> {
    h0: Vec<T>,
    channels: Vec<(T, CMatrix<T>)>,
    /// `Σ γ L†L`.
    ldl: CMatrix<T>,
}

impl<T: Real> Stepper<T> {
    /// `H₀ = ν Σ_k a_k†a_k`.
    pub fn new(layout: &SpaceLayout, noise: &NoiseParams) -> Result<Self> {
        let channels = channels::<T>(layout, noise)?;
        let dim = layout.dim();
        let mut ldl = DMatrix::zeros(dim, dim);
        for (rate, l) in &channels {
            ldl += l.adjoint() * l * creal(*rate);
        }
        let q = layout.qubit_count();
        let h0 = (0..dim)
            .map(|i| lit::<T>(noise.nu * layout.digits_of(i)[q..].iter().sum::<usize>() as f64))
            .collect();
        Ok(Self { h0, channels, ldl })
    }

    pub fn h0_matrix(&self) -> CMatrix<T> {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.h0.len(),
            self.h0.iter().map(|&x| creal(x)),
        ))
    }

    fn l1(&self, h1: &CMatrix<T>, rho: &CMatrix<T>) -> CMatrix<T> {
        let mi = cplx(T::zero(), -T::one());
        let mut out = (cmatmul(h1, rho) - cmatmul(rho, h1)) * mi;
        if !self.channels.is_empty() {
            let half = creal(lit::<T>(0.5));
            out -= (cmatmul(&self.ldl, rho) + cmatmul(rho, &self.ldl)) * half;
            for (rate, l) in &self.channels {
                out += sandwich(l, rho) * creal(*rate);
            }
        }
        out
    }

    fn phase(&self, rho: &CMatrix<T>, tau: T) -> CMatrix<T> {
        CMatrix::from_fn(rho.nrows(), rho.ncols(), |i, j| {
            let angle = -tau * (self.h0[i] - self.h0[j]);
            rho[(i, j)] * cplx(angle.cos(), angle.sin())
        })
    }

    pub fn step(&self, h1: &CMatrix<T>, rho: &CMatrix<T>, h: T) -> CMatrix<T> {
        let half = h * lit(0.5);
        let ch = creal(h);
        let chalf = creal(half);
        let k1 = self.l1(h1, rho);
        let k2 = self.l1(h1, &self.phase(&(rho + &k1 * chalf), half));
        let k3 = self.l1(h1, &(self.phase(rho, half) + &k2 * chalf));
        let k4 = self.l1(h1, &(self.phase(rho, h) + self.phase(&k3, half) * ch));
        let incr = self.phase(&k1, h) + self.phase(&(k2 + k3), half) * creal(lit::<T>(2.0)) + k4;
        self.phase(rho, h) + incr * (ch / creal(lit::<T>(6.0)))
    }

    /// Matrix of one step acting on column-major `vec(ρ)`.
    pub fn step_superoperator(&self, h1: &CMatrix<T>, h: T) -> CMatrix<T> {
        let d = self.h0.len();
        let mut out = DMatrix::zeros(d * d, d * d);
        let zero = C::new(T::zero(), T::zero());
        for c in 0..d * d {
            let mut e = DMatrix::from_element(d, d, zero);
            e[(c % d, c / d)] = creal(T::one());
            let s = self.step(h1, &e, h);
            out.column_mut(c).copy_from_slice(s.as_slice());
        }
        out
    }
}
