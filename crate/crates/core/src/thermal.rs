//! Thermal and parity-projected initial states and their entropies.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::state::{hermitian_eigenvalues, Representation, PSD_TOL};
use crate::fock::{HybridState, SpaceLayout};
use crate::scalar::{creal, lit, max_abs, to_f64, CMatrix, Real};

pub const DEFAULT_CUTOFF: usize = 20;
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-8;
/// Eigenvalues below this are treated as exact zeros.
pub const EIGEN_CUT: f64 = 1e-14;

/// Thermal occupation of a single mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalSpec {
    pub mean_excitation: f64,
    /// Fixed cutoff. When absent the cutoff is the smallest value (at least
    /// [`DEFAULT_CUTOFF`]) meeting the tail tolerance.
    #[serde(default)]
    pub cutoff: Option<usize>,
    #[serde(default = "default_tail")]
    pub tail_tolerance: f64,
}

fn default_tail() -> f64 {
    DEFAULT_TAIL_TOLERANCE
}

impl ThermalSpec {
    pub fn new(mean_excitation: f64) -> Result<Self> {
        let spec = Self {
            mean_excitation,
            cutoff: None,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_cutoff(mut self, d: usize) -> Self {
        self.cutoff = Some(d);
        self
    }

    pub fn with_tail_tolerance(mut self, tol: f64) -> Self {
        self.tail_tolerance = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mean_excitation.is_finite() && self.mean_excitation >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mean excitation must be finite and non-negative, got {}",
                self.mean_excitation
            )));
        }
        if !(self.tail_tolerance > 0.0 && self.tail_tolerance < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "tail tolerance must lie in (0, 1), got {}",
                self.tail_tolerance
            )));
        }
        if let Some(d) = self.cutoff {
            if d < 2 {
                return Err(Error::CutoffTooLow(d));
            }
        }
        Ok(())
    }

    /// Boltzmann ratio `e^{−β} = ⟨n⟩/(⟨n⟩+1)`.
    pub fn ratio(&self) -> f64 {
        boltzmann_ratio(self.mean_excitation)
    }

    /// `β`, infinite at zero temperature.
    pub fn beta(&self) -> f64 {
        -self.ratio().ln()
    }

    /// Weight on levels `n ≥ d`.
    pub fn tail(&self, d: usize) -> f64 {
        self.ratio().powi(d as i32)
    }

    /// Cutoff honouring the tail tolerance, or an error if a fixed cutoff
    /// is too small.
    pub fn resolve_cutoff(&self) -> Result<usize> {
        self.validate()?;
        match self.cutoff {
            Some(d) => {
                let tail = self.tail(d);
                if tail >= self.tail_tolerance {
                    Err(Error::CutoffTooSmall {
                        mean: self.mean_excitation,
                        cutoff: d,
                        tail,
                        tolerance: self.tail_tolerance,
                    })
                } else {
                    Ok(d)
                }
            }
            // even, so the parity components see the same tail as the full state
            None => {
                let d = minimal_cutoff(self.mean_excitation, self.tail_tolerance).max(DEFAULT_CUTOFF);
                Ok(d + d % 2)
            }
        }
    }
}

pub fn boltzmann_ratio(mean: f64) -> f64 {
    mean / (mean + 1.0)
}

/// Smallest `d ≥ 2` with `q^d` below `tol`.
pub fn minimal_cutoff(mean: f64, tol: f64) -> usize {
    let q = boltzmann_ratio(mean);
    if q == 0.0 {
        return 2;
    }
    let mut d = ((tol.ln() / q.ln()).floor() as usize).max(2);
    while q.powi(d as i32) >= tol {
        d += 1;
    }
    d
}

/// Truncated geometric populations `(1−r) r^k` placed on levels
/// `offset, offset + step, …` below `d`, renormalised; returns the
/// populations and the discarded weight.
fn geometric_levels(r: f64, offset: usize, step: usize, d: usize) -> (Vec<f64>, f64) {
    let mut pops = vec![0.0; d];
    let mut kept = 0.0;
    let mut k = 0;
    let mut level = offset;
    while level < d {
        let p = (1.0 - r) * r.powi(k);
        pops[level] = p;
        kept += p;
        k += 1;
        level += step;
    }
    let tail = r.powi(k);
    for p in &mut pops {
        *p /= kept;
    }
    (pops, tail)
}

fn diagonal_state<T: Real>(layout: SpaceLayout, pops: &[f64], tail: f64) -> HybridState<T> {
    let diag = DVector::from_iterator(pops.len(), pops.iter().map(|&p| creal(lit::<T>(p))));
    HybridState::new_unchecked(layout, Representation::Density(DMatrix::from_diagonal(&diag)))
        .with_discarded_tail(lit(tail))
}

fn check_tail(spec: &ThermalSpec, d: usize, tail: f64) -> Result<()> {
    if tail >= spec.tail_tolerance {
        Err(Error::CutoffTooSmall {
            mean: spec.mean_excitation,
            cutoff: d,
            tail,
            tolerance: spec.tail_tolerance,
        })
    } else {
        Ok(())
    }
}

/// Single-mode thermal density matrix.
pub fn thermal_state<T: Real>(spec: &ThermalSpec) -> Result<HybridState<T>> {
    let d = spec.resolve_cutoff()?;
    let (pops, tail) = geometric_levels(spec.ratio(), 0, 1, d);
    check_tail(spec, d, tail)?;
    Ok(diagonal_state(SpaceLayout::modes(vec![d])?, &pops, tail))
}

/// `Π ρ Π / Tr(Π ρ)` with `Π = (I ± P)/2` on one mode.
pub fn parity_project<T: Real>(
    state: &HybridState<T>,
    mode: usize,
    even: bool,
) -> Result<(HybridState<T>, T)> {
    let layout = state.layout();
    let f = layout.mode_factor(mode)?;
    let trace = to_f64(state.trace());
    if (trace - 1.0).abs() > crate::fock::state::NORM_TOL {
        return Err(Error::NotNormalized(trace));
    }
    let keep: Vec<bool> = (0..layout.dim())
        .map(|i| (layout.digits_of(i)[f] % 2 == 0) == even)
        .collect();
    state.project_mask(&keep)
}

/// Odd-parity component of a thermal mode: ratio `q²` on levels `2n+1`.
pub fn odd_thermal<T: Real>(spec: &ThermalSpec) -> Result<HybridState<T>> {
    let d = spec.resolve_cutoff()?;
    let q = spec.ratio();
    let (pops, tail) = geometric_levels(q * q, 1, 2, d);
    check_tail(spec, d, tail)?;
    Ok(diagonal_state(SpaceLayout::modes(vec![d])?, &pops, tail))
}

/// Even-parity component of a thermal mode: ratio `q²` on levels `2n`.
pub fn even_thermal<T: Real>(spec: &ThermalSpec) -> Result<HybridState<T>> {
    let d = spec.resolve_cutoff()?;
    let q = spec.ratio();
    let (pops, tail) = geometric_levels(q * q, 0, 2, d);
    check_tail(spec, d, tail)?;
    Ok(diagonal_state(SpaceLayout::modes(vec![d])?, &pops, tail))
}

/// Logical `|0_L⟩` of one TQP qubit: `ρ_odd ⊗ ρ_even` on two modes.
pub fn tqp_initial_state<T: Real>(spec: &ThermalSpec) -> Result<HybridState<T>> {
    Ok(odd_thermal::<T>(spec)?.tensor(&even_thermal::<T>(spec)?))
}

/// Spectrum of a state (the non-negligible part of it).
pub fn spectrum<T: Real>(state: &HybridState<T>) -> Result<Vec<T>> {
    let rho = match state.representation() {
        Representation::Pure(_) => return Ok(vec![state.trace()]),
        Representation::Density(rho) => rho,
    };
    let values = if is_diagonal(rho) {
        rho.diagonal().iter().map(|z| z.re).collect::<Vec<_>>()
    } else {
        hermitian_eigenvalues(rho).iter().copied().collect()
    };
    if let Some(&min) = values.iter().find(|&&x| to_f64(x) < -PSD_TOL) {
        return Err(Error::NotDensityMatrix(format!(
            "negative eigenvalue {:e}",
            to_f64(min)
        )));
    }
    Ok(values)
}

fn is_diagonal<T: Real>(m: &CMatrix<T>) -> bool {
    m.iter()
        .enumerate()
        .all(|(k, z)| k % (m.nrows() + 1) == 0 || (z.re == T::zero() && z.im == T::zero()))
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy<T: Real>(state: &HybridState<T>) -> Result<T> {
    Ok(entropy_of_spectrum(&spectrum(state)?))
}

/// `−Σ λ log₂ λ` over eigenvalues above [`EIGEN_CUT`].
pub fn entropy_of_spectrum<T: Real>(values: &[T]) -> T {
    let cut = lit::<T>(EIGEN_CUT);
    values
        .iter()
        .filter(|&&l| l > cut)
        .fold(T::zero(), |acc, &l| acc - l * l.log2())
}

/// `(n+1) log₂(n+1) − n log₂ n`.
pub fn thermal_entropy_bits(mean: f64) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    (mean + 1.0) * (mean + 1.0).log2() - mean * mean.log2()
}

/// `ñ = n²/(2n+1)`, the mean excitation of each parity component.
pub fn n_tilde(mean: f64) -> f64 {
    mean * mean / (2.0 * mean + 1.0)
}

/// Closed-form entropy of `ρ_odd ⊗ ρ_even`.
pub fn tqp_entropy_bits(mean: f64) -> f64 {
    2.0 * thermal_entropy_bits(n_tilde(mean))
}

/// Entropy bookkeeping for one value of `⟨n⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub mean_excitation: f64,
    pub cutoff: usize,
    pub s_thermal: f64,
    pub s_tqp: f64,
    /// Entropy of the constructed two-mode state from its spectrum.
    pub s_tqp_spectral: f64,
    pub n_tilde: f64,
    pub crossover_flag: bool,
    /// In units of `k_B T ln 2`.
    pub landauer_pure: f64,
    pub landauer_tqp: f64,
    pub truncation_tail: f64,
}

impl EntropyReport {
    pub fn spectral_deviation(&self) -> f64 {
        (self.s_tqp - self.s_tqp_spectral).abs()
    }
}

pub fn entropy_report(spec: &ThermalSpec) -> Result<EntropyReport> {
    let n = spec.mean_excitation;
    let cutoff = spec.resolve_cutoff()?;
    // spectral route through the two factors; the product spectrum's entropy
    // is additive, so each d×d factor is diagonalised separately
    let odd = odd_thermal::<f64>(spec)?;
    let even = even_thermal::<f64>(spec)?;
    let s_spec = entropy_of_spectrum(&dense_spectrum(&odd)?) + entropy_of_spectrum(&dense_spectrum(&even)?);
    let s_thermal = thermal_entropy_bits(n);
    let s_tqp = tqp_entropy_bits(n);
    Ok(EntropyReport {
        mean_excitation: n,
        cutoff,
        s_thermal,
        s_tqp,
        s_tqp_spectral: s_spec,
        n_tilde: n_tilde(n),
        crossover_flag: s_tqp > s_thermal,
        landauer_pure: s_thermal,
        landauer_tqp: 2.0 * s_thermal - s_tqp,
        truncation_tail: odd.truncation_tail() + even.truncation_tail(),
    })
}

/// Spectrum through a Hermitian eigensolver, whatever the matrix structure.
fn dense_spectrum(state: &HybridState<f64>) -> Result<Vec<f64>> {
    let rho = state.density();
    let values: Vec<f64> = hermitian_eigenvalues(&rho).iter().copied().collect();
    if values.iter().any(|&x| x < -PSD_TOL) {
        return Err(Error::NotDensityMatrix("negative eigenvalue".into()));
    }
    Ok(values)
}

/// Root of `S(ρ₀) − S(ρ_th)` in `⟨n⟩` by bisection.
pub fn entropy_crossover(lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let f = |n: f64| tqp_entropy_bits(n) - thermal_entropy_bits(n);
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (f(a), f(b));
    if fa.signum() == fb.signum() {
        return Err(Error::InvalidParameter(format!(
            "crossover not bracketed by [{lo}, {hi}]"
        )));
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        if f(m).signum() == fa.signum() {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Largest off-diagonal modulus, used by tests on diagonal states.
pub fn off_diagonal_max<T: Real>(m: &CMatrix<T>) -> T {
    let mut off = m.clone();
    off.fill_diagonal(creal(T::zero()));
    max_abs(&off)
}
