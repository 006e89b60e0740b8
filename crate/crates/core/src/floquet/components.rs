use serde::{Deserialize, Serialize};

use super::Sector;

/// Real Fourier components c_{n,k} over a contiguous sideband range.
///
/// The Floquet matrix is real symmetric, so its eigenvectors can be chosen real.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierComponents {
    first_sideband: i64,
    blocks: usize,
    retained: usize,
    data: Vec<f64>,
}

impl FourierComponents {
    pub fn zeros(first_sideband: i64, blocks: usize, retained: usize) -> Self {
        Self { first_sideband, blocks, retained, data: vec![0.0; blocks * retained] }
    }

    pub fn first_sideband(&self) -> i64 {
        self.first_sideband
    }

    pub fn last_sideband(&self) -> i64 {
        self.first_sideband + self.blocks as i64 - 1
    }

    pub fn retained(&self) -> usize {
        self.retained
    }

    pub fn sidebands(&self) -> impl Iterator<Item = i64> {
        self.first_sideband..=self.last_sideband()
    }

    pub fn block(&self, n: i64) -> Option<&[f64]> {
        if n < self.first_sideband || n > self.last_sideband() {
            return None;
        }
        let b = (n - self.first_sideband) as usize;
        Some(&self.data[b * self.retained..(b + 1) * self.retained])
    }

    pub fn get(&self, n: i64, k: usize) -> f64 {
        self.block(n).map_or(0.0, |b| b[k])
    }

    pub fn set(&mut self, n: i64, k: usize, v: f64) {
        let b = (n - self.first_sideband) as usize;
        self.data[b * self.retained + k] = v;
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// (n, Σ_k |c_{n,k}|²) for every stored sideband.
    pub fn sideband_weights(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.data
            .chunks(self.retained)
            .enumerate()
            .map(move |(b, c)| (self.first_sideband + b as i64, c.iter().map(|v| v * v).sum()))
    }

    /// Σ_k |c_{0,k}|².
    pub fn central_weight(&self) -> f64 {
        self.block(0).map_or(0.0, |b| b.iter().map(|v| v * v).sum())
    }

    /// Weight on sidebands with |n| ≥ `outer`.
    pub fn edge_weight(&self, outer: i64) -> f64 {
        self.sideband_weights().filter(|(n, _)| n.abs() >= outer).map(|(_, w)| w).sum()
    }

    /// Class representative relabelled by n → n + m (quasienergy λ − mω).
    pub fn shifted(&self, m: i64) -> Self {
        Self { first_sideband: self.first_sideband + m, ..self.clone() }
    }

    /// Index class of the nonzero entries, if any.
    pub fn sector(&self) -> Option<Sector> {
        for (b, chunk) in self.data.chunks(self.retained).enumerate() {
            for (k, v) in chunk.iter().enumerate() {
                if *v != 0.0 {
                    return Some(Sector::of(self.first_sideband + b as i64, k));
                }
            }
        }
        None
    }

    /// Σ_{n,k} c_{n,k} d_{n,k} over the common sideband range.
    pub fn overlap(&self, other: &Self) -> f64 {
        let lo = self.first_sideband.max(other.first_sideband);
        let hi = self.last_sideband().min(other.last_sideband());
        let mut s = 0.0;
        for n in lo..=hi {
            let (a, b) = (self.block(n).unwrap(), other.block(n).unwrap());
            s += a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        }
        s
    }

    /// max over j ∈ {−1, 0, 1} of |overlap| after shifting `other` by j.
    pub fn shift_tolerant_overlap(&self, other: &Self) -> f64 {
        (-1..=1).map(|j| self.overlap(&other.shifted(j)).abs()).fold(0.0, f64::max)
    }

    /// Σ_n c_{n,k}: the state at t = 0 in the H₀ basis.
    pub fn summed_over_sidebands(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.retained];
        for chunk in self.data.chunks(self.retained) {
            for (o, v) in out.iter_mut().zip(chunk) {
                *o += v;
            }
        }
        out
    }

    /// Linear combination Σ_i a_i c_i on the union of sideband ranges.
    pub fn combine(parts: &[(f64, &FourierComponents)]) -> Self {
        let k = parts[0].1.retained;
        let lo = parts.iter().map(|p| p.1.first_sideband).min().unwrap();
        let hi = parts.iter().map(|p| p.1.last_sideband()).max().unwrap();
        let mut out = Self::zeros(lo, (hi - lo + 1) as usize, k);
        for &(a, c) in parts {
            for n in c.sidebands() {
                for (kk, v) in c.block(n).unwrap().iter().enumerate() {
                    let cur = out.get(n, kk);
                    out.set(n, kk, cur + a * v);
                }
            }
        }
        out
    }

    /// Action of the generalized parity x → −x, t → t + π/ω: c_{n,k} → (−1)^{n+k} c_{n,k}.
    pub fn apply_generalized_parity(&self) -> Self {
        let mut out = self.clone();
        for n in self.sidebands() {
            for k in 0..self.retained {
                if Sector::of(n, k) == Sector::Minus {
                    let v = out.get(n, k);
                    out.set(n, k, -v);
                }
            }
        }
        out
    }
}
