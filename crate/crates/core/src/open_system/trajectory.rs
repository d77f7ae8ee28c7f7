use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{channels, NoiseParams};
use crate::error::{Error, Result};
use crate::fock::{expm, HybridState, Representation, SpaceLayout, TruncatedOperator};
use crate::pulse::{resolve_schedule, PulseSchedule, ResolvedSegment};
use crate::scalar::{cplx, creal, lit, to_f64, CMatrix, CVector, Real};

/// Longest stretch of no-jump evolution between norm checks once a jump is
/// known to fall inside a segment, in units of `1/ν`.
pub const JUMP_TIME_RESOLUTION: f64 = 0.05;
/// Eigenvalues of the input density below this are not sampled.
const WEIGHT_FLOOR: f64 = 1e-14;

/// Convex decomposition of a state into pure states.
#[derive(Clone, Debug)]
pub struct PureMixture<T: Real> {
    pub layout: SpaceLayout,
    pub weights: Vec<f64>,
    pub vectors: Vec<CVector<T>>,
}

impl<T: Real> PureMixture<T> {
    /// Eigen-decomposition of the density matrix.
    pub fn from_state(state: &HybridState<T>) -> Self {
        let layout = state.layout().clone();
        if let Representation::Pure(v) = state.representation() {
            let n = v.norm();
            return Self {
                layout,
                weights: vec![1.0],
                vectors: vec![v.unscale(n)],
            };
        }
        let rho = state.density();
        let sym = (&rho + rho.adjoint()) * creal(lit::<T>(0.5));
        let eig = sym.symmetric_eigen();
        let (mut weights, mut vectors) = (Vec::new(), Vec::new());
        for (k, &w) in eig.eigenvalues.iter().enumerate() {
            let w = to_f64(w);
            if w > WEIGHT_FLOOR {
                weights.push(w);
                vectors.push(eig.eigenvectors.column(k).into_owned());
            }
        }
        Self { layout, weights, vectors }
    }
}

/// Ensemble average of quantum-jump trajectories.
#[derive(Clone, Debug)]
pub struct JumpEnsemble<T: Real> {
    pub density: CMatrix<T>,
    pub jump_counts: Vec<usize>,
    pub seed: u64,
}

impl<T: Real> JumpEnsemble<T> {
    pub fn n_traj(&self) -> usize {
        self.jump_counts.len()
    }

    pub fn mean_jumps(&self) -> f64 {
        self.jump_counts.iter().sum::<usize>() as f64 / self.n_traj() as f64
    }

    /// Standard error of [`Self::mean_jumps`].
    pub fn jump_std_error(&self) -> f64 {
        let n = self.n_traj() as f64;
        let m = self.mean_jumps();
        let var = self.jump_counts.iter().map(|&k| (k as f64 - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        (var / n).sqrt()
    }
}

enum Step<T: Real> {
    Instant(CMatrix<T>),
    Evolve { prop: usize },
}

struct Propagator<T: Real> {
    full: CMatrix<T>,
    chunk: CMatrix<T>,
    chunks: usize,
}

/// `H − (i/2) Σ γ L†L`.
fn effective_hamiltonian<T: Real>(h: &CMatrix<T>, channels: &[(T, CMatrix<T>)]) -> CMatrix<T> {
    let mut out = h.clone();
    for (rate, l) in channels {
        out -= l.adjoint() * l * cplx(T::zero(), *rate * lit(0.5));
    }
    out
}

fn propagator<T: Real>(heff: &CMatrix<T>, t: f64) -> CMatrix<T> {
    expm(&(heff * cplx(T::zero(), lit(-t))))
}

/// Monte-Carlo wavefunction unravelling of the master equation through
/// `schedule`. Trajectory `i` draws from its own ChaCha8 stream `i` of
/// `seed`, so the result does not depend on the thread count.
pub fn jump_unravelling<T: Real>(
    state: &HybridState<T>,
    schedule: &PulseSchedule,
    noise: &NoiseParams,
    seed: u64,
    n_traj: usize,
) -> Result<JumpEnsemble<T>> {
    noise.validate()?;
    if n_traj == 0 {
        return Err(Error::InvalidParameter("need at least one trajectory".into()));
    }
    let params = noise.hybrid()?;
    let layout = state.layout();
    let chans = channels::<T>(layout, noise)?;
    let mixture = PureMixture::from_state(state);
    let picker = WeightedIndex::new(&mixture.weights).map_err(|e| Error::InvalidParameter(e.to_string()))?;

    let mut props: Vec<Propagator<T>> = Vec::new();
    let mut index: HashMap<(usize, u64), usize> = HashMap::new();
    let mut hams: Vec<CMatrix<T>> = Vec::new();
    let mut steps = Vec::new();
    for seg in resolve_schedule::<T>(&params, layout, schedule)? {
        match seg {
            ResolvedSegment::Instant(u) => steps.push(Step::Instant(u.into_matrix())),
            ResolvedSegment::Evolve { hamiltonian, duration } => {
                if duration <= 0.0 {
                    continue;
                }
                let h = hamiltonian.into_matrix();
                let hi = match hams.iter().position(|x| x == &h) {
                    Some(i) => i,
                    None => {
                        hams.push(h);
                        hams.len() - 1
                    }
                };
                let key = (hi, duration.to_bits());
                let prop = *index.entry(key).or_insert_with(|| {
                    let heff = effective_hamiltonian(&hams[hi], &chans);
                    let chunks = (duration / (JUMP_TIME_RESOLUTION / noise.nu)).ceil().max(1.0) as usize;
                    props.push(Propagator {
                        full: propagator(&heff, duration),
                        chunk: propagator(&heff, duration / chunks as f64),
                        chunks,
                    });
                    props.len() - 1
                });
                steps.push(Step::Evolve { prop });
            }
        }
    }

    let run = |i: usize| -> (CVector<T>, usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let mut psi = mixture.vectors[picker.sample(&mut rng)].clone();
        let mut r: f64 = rng.gen();
        let mut jumps = 0;
        for step in &steps {
            match step {
                Step::Instant(u) => psi = u * &psi,
                Step::Evolve { prop } => {
                    let p = &props[*prop];
                    let cand = &p.full * &psi;
                    if chans.is_empty() || to_f64(cand.norm_squared()) >= r {
                        psi = cand;
                        continue;
                    }
                    for _ in 0..p.chunks {
                        psi = &p.chunk * &psi;
                        if to_f64(psi.norm_squared()) < r {
                            psi = jump(&psi, &chans, &mut rng);
                            jumps += 1;
                            r = rng.gen();
                        }
                    }
                }
            }
        }
        let n = psi.norm();
        (psi.unscale(n), jumps)
    };
    let results: Vec<(CVector<T>, usize)> = (0..n_traj).into_par_iter().map(run).collect();
    let dim = layout.dim();
    let mut density = DMatrix::zeros(dim, dim);
    let mut jump_counts = Vec::with_capacity(n_traj);
    for (psi, k) in &results {
        density += psi * psi.adjoint();
        jump_counts.push(*k);
    }
    density /= creal(lit::<T>(n_traj as f64));
    Ok(JumpEnsemble {
        density,
        jump_counts,
        seed,
    })
}

/// Applies a randomly chosen channel, weighted by `γ_k ‖L_k ψ‖²`, and
/// renormalises.
fn jump<T: Real>(psi: &CVector<T>, chans: &[(T, CMatrix<T>)], rng: &mut ChaCha8Rng) -> CVector<T> {
    let out: Vec<CVector<T>> = chans.iter().map(|(_, l)| l * psi).collect();
    let weights: Vec<f64> = chans
        .iter()
        .zip(&out)
        .map(|((rate, _), v)| to_f64(*rate) * to_f64(v.norm_squared()))
        .collect();
    let k = match WeightedIndex::new(&weights) {
        Ok(w) => w.sample(rng),
        Err(_) => 0,
    };
    let n = out[k].norm();
    if to_f64(n) == 0.0 {
        return psi.unscale(psi.norm());
    }
    out[k].unscale(n)
}

/// Short-time jump probability from the no-jump norm decay, next to
/// `(2N_th⟨n⟩ + N_th + ⟨n⟩)(ν/Q)dt`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JumpProbability {
    pub mean_n: f64,
    pub dt: f64,
    pub simulated: f64,
    pub formula: f64,
    pub relative_error: f64,
}

pub fn jump_probability<T: Real>(
    state: &HybridState<T>,
    h: &TruncatedOperator<T>,
    noise: &NoiseParams,
    dt: f64,
) -> Result<JumpProbability> {
    noise.validate()?;
    let layout = state.layout();
    let chans = channels::<T>(layout, noise)?;
    let p = propagator(&effective_hamiltonian(h.matrix(), &chans), dt);
    let rho = state.density();
    let survive = to_f64((&p * &rho * p.adjoint()).trace().re) / to_f64(rho.trace().re);
    let mut mean_n = 0.0;
    for mode in 0..layout.mode_count() {
        let n = crate::fock::ops::number_local::<T>(layout, mode)?;
        mean_n += to_f64(state.expectation_map(&n)?.re);
    }
    let formula = (2.0 * noise.n_th * mean_n + noise.n_th + mean_n) * noise.damping() * dt;
    let simulated = 1.0 - survive;
    Ok(JumpProbability {
        mean_n,
        dt,
        simulated,
        formula,
        relative_error: if formula > 0.0 { (simulated - formula).abs() / formula } else { simulated.abs() },
    })
}
