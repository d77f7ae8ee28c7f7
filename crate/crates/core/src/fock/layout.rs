use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tensor structure of a hybrid space: `qubit_count` two-level factors
/// followed by one truncated Fock factor per mode.
///
/// Basis indices are row-major over the factor list, so the first qubit is
/// the most significant digit and the last mode the least significant.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceLayout {
    qubit_count: usize,
    mode_cutoffs: Vec<usize>,
}

impl SpaceLayout {
    pub fn new(qubit_count: usize, mode_cutoffs: Vec<usize>) -> Result<Self> {
        if let Some(&d) = mode_cutoffs.iter().find(|&&d| d < 2) {
            return Err(Error::CutoffTooLow(d));
        }
        Ok(Self {
            qubit_count,
            mode_cutoffs,
        })
    }

    /// Qumodes only.
    pub fn modes(mode_cutoffs: Vec<usize>) -> Result<Self> {
        Self::new(0, mode_cutoffs)
    }

    /// `count` modes sharing cutoff `d`, preceded by `qubits` qubits.
    pub fn uniform(qubits: usize, count: usize, d: usize) -> Result<Self> {
        Self::new(qubits, vec![d; count])
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn mode_count(&self) -> usize {
        self.mode_cutoffs.len()
    }

    pub fn mode_cutoffs(&self) -> &[usize] {
        &self.mode_cutoffs
    }

    pub fn cutoff(&self, mode: usize) -> Result<usize> {
        self.check_mode(mode)?;
        Ok(self.mode_cutoffs[mode])
    }

    /// Total Hilbert-space dimension `2^q · Π d_i`.
    pub fn dim(&self) -> usize {
        (1usize << self.qubit_count) * self.mode_cutoffs.iter().product::<usize>()
    }

    pub fn factor_count(&self) -> usize {
        self.qubit_count + self.mode_cutoffs.len()
    }

    /// Dimension of every tensor factor in order.
    pub fn factor_dims(&self) -> Vec<usize> {
        std::iter::repeat(2)
            .take(self.qubit_count)
            .chain(self.mode_cutoffs.iter().copied())
            .collect()
    }

    pub fn factor_dim(&self, factor: usize) -> usize {
        if factor < self.qubit_count {
            2
        } else {
            self.mode_cutoffs[factor - self.qubit_count]
        }
    }

    pub fn check_mode(&self, mode: usize) -> Result<()> {
        if mode < self.mode_cutoffs.len() {
            Ok(())
        } else {
            Err(Error::InvalidMode {
                index: mode,
                count: self.mode_cutoffs.len(),
            })
        }
    }

    pub fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit < self.qubit_count {
            Ok(())
        } else {
            Err(Error::InvalidQubit {
                index: qubit,
                count: self.qubit_count,
            })
        }
    }

    pub fn qubit_factor(&self, qubit: usize) -> Result<usize> {
        self.check_qubit(qubit)?;
        Ok(qubit)
    }

    pub fn mode_factor(&self, mode: usize) -> Result<usize> {
        self.check_mode(mode)?;
        Ok(self.qubit_count + mode)
    }

    /// Checks that `a` and `b` are distinct modes with equal cutoffs.
    pub fn check_mode_pair(&self, a: usize, b: usize) -> Result<usize> {
        self.check_mode(a)?;
        self.check_mode(b)?;
        if a == b {
            return Err(Error::SameMode(a));
        }
        let (da, db) = (self.mode_cutoffs[a], self.mode_cutoffs[b]);
        if da != db {
            return Err(Error::CutoffMismatch { a, b, da, db });
        }
        Ok(da)
    }

    pub fn strides(&self) -> Vec<usize> {
        let dims = self.factor_dims();
        let mut strides = vec![1; dims.len()];
        for f in (0..dims.len().saturating_sub(1)).rev() {
            strides[f] = strides[f + 1] * dims[f + 1];
        }
        strides
    }

    /// Flat index of a basis state given one digit per factor.
    pub fn index_of(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.factor_count());
        digits
            .iter()
            .zip(self.factor_dims())
            .fold(0, |acc, (&digit, dim)| acc * dim + digit)
    }

    /// Factor digits of a flat basis index.
    pub fn digits_of(&self, mut index: usize) -> Vec<usize> {
        let dims = self.factor_dims();
        let mut digits = vec![0; dims.len()];
        for f in (0..dims.len()).rev() {
            digits[f] = index % dims[f];
            index /= dims[f];
        }
        digits
    }

    /// Layout with one qubit removed.
    pub fn without_qubit(&self, qubit: usize) -> Result<Self> {
        self.check_qubit(qubit)?;
        Ok(Self {
            qubit_count: self.qubit_count - 1,
            mode_cutoffs: self.mode_cutoffs.clone(),
        })
    }

    /// Layout with `extra` qubits prepended.
    pub fn with_qubits(&self, extra: usize) -> Self {
        Self {
            qubit_count: self.qubit_count + extra,
            mode_cutoffs: self.mode_cutoffs.clone(),
        }
    }

    /// Combined layout of two spaces: qubits of `self`, qubits of `other`,
    /// modes of `self`, modes of `other`.
    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            qubit_count: self.qubit_count + other.qubit_count,
            mode_cutoffs: self
                .mode_cutoffs
                .iter()
                .chain(other.mode_cutoffs.iter())
                .copied()
                .collect(),
        }
    }
}
