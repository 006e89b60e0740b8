use faer::{Mat, Side};

use crate::error::{invalid, Result};
use crate::linalg::C64;
use crate::params::Parity;

/// Reduced density matrix σ_{αβ} in the Floquet basis of the retained states.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    data: Mat<C64>,
}

impl DensityMatrix {
    pub fn new(data: Mat<C64>) -> Result<Self> {
        if data.nrows() != data.ncols() || data.nrows() == 0 {
            return Err(invalid("density_matrix", "must be a non-empty square matrix"));
        }
        Ok(Self { data })
    }

    /// |ψ⟩⟨ψ| for a normalized coefficient vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(crate::error::Error::Unnormalized(norm));
        }
        let n = psi.len();
        Self::new(Mat::from_fn(n, n, |i, j| psi[i] * psi[j].conj()))
    }

    pub fn from_real_pure(psi: &[f64]) -> Result<Self> {
        Self::pure(&psi.iter().map(|&v| C64::new(v, 0.0)).collect::<Vec<_>>())
    }

    /// Diagonal density matrix with the given populations.
    pub fn diagonal(populations: &[f64]) -> Result<Self> {
        let n = populations.len();
        Self::new(Mat::from_fn(n, n, |i, j| if i == j { C64::new(populations[i], 0.0) } else { C64::new(0.0, 0.0) }))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &Mat<C64> {
        &self.data
    }

    pub fn get(&self, a: usize, b: usize) -> C64 {
        self.data[(a, b)]
    }

    /// Row-major vectorization, index a·M + b.
    pub fn to_vec(&self) -> Vec<C64> {
        let m = self.dim();
        (0..m * m).map(|i| self.data[(i / m, i % m)]).collect()
    }

    pub fn from_vec(v: &[C64], m: usize) -> Self {
        Self { data: Mat::from_fn(m, m, |a, b| v[a * m + b]) }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.data[(i, i)]).sum()
    }

    /// tr σ² = Σ_{αβ} |σ_{αβ}|² for Hermitian σ.
    pub fn purity(&self) -> f64 {
        let m = self.dim();
        let mut s = C64::new(0.0, 0.0);
        for a in 0..m {
            for b in 0..m {
                s += self.data[(a, b)] * self.data[(b, a)];
            }
        }
        s.re
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.data[(i, i)].re).collect()
    }

    /// max |σ_{αβ} − σ*_{βα}|.
    pub fn hermiticity_error(&self) -> f64 {
        let m = self.dim();
        let mut e = 0.0f64;
        for a in 0..m {
            for b in a..m {
                e = e.max((self.data[(a, b)] - self.data[(b, a)].conj()).norm());
            }
        }
        e
    }

    /// ⟨v|σ|v⟩ for a coefficient vector over the retained states.
    pub fn projection(&self, v: &[C64]) -> f64 {
        let m = self.dim();
        let mut s = C64::new(0.0, 0.0);
        for a in 0..m {
            if v[a] == C64::new(0.0, 0.0) {
                continue;
            }
            for b in 0..m {
                s += v[a].conj() * self.data[(a, b)] * v[b];
            }
        }
        s.re
    }

    /// Largest |σ_{αβ}| between states of opposite parity.
    pub fn parity_offblock(&self, parities: &[Parity]) -> f64 {
        let m = self.dim();
        let mut e = 0.0f64;
        for a in 0..m {
            for b in 0..m {
                if parities[a] != parities[b] {
                    e = e.max(self.data[(a, b)].norm());
                }
            }
        }
        e
    }

    /// Replaces σ by its Hermitian part and rescales to unit trace.
    pub fn hermitize(&mut self) {
        let m = self.dim();
        let d = &self.data;
        let h = Mat::from_fn(m, m, |a, b| 0.5 * (d[(a, b)] + d[(b, a)].conj()));
        let tr: f64 = (0..m).map(|i| h[(i, i)].re).sum();
        self.data = Mat::from_fn(m, m, |a, b| h[(a, b)] / tr);
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.dim();
        let h = Mat::from_fn(m, m, |a, b| 0.5 * (self.data[(a, b)] + self.data[(b, a)].conj()));
        h.self_adjoint_eigenvalues(Side::Lower)
            .map(|v| v.into_iter().fold(f64::INFINITY, f64::min))
            .unwrap_or(f64::NAN)
    }
}
