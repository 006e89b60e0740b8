//! Floquet–Markov master equation for the driven double well coupled to an Ohmic bath.

mod density;
mod kernel;
mod propagate;
mod timescales;

use faer::Mat;

use crate::error::{Error, Result};
use crate::floquet::{FloquetSpectrum, FloquetState};
use crate::params::BathParams;

pub use density::DensityMatrix;
pub use kernel::{
    assemble_periodic_generator, assemble_rwa_kernel, DissipativeKernel, KernelKind, PeriodicGenerator,
};
pub use propagate::{propagate_periodic, propagate_rwa, Trajectory, TrajectoryDiagnostics};
pub use timescales::{
    asymptotic_state, decoherence_time, generator_spectrum, purity_by_beats, relaxation_time, write_attractor_csv,
    write_trajectory_csv, DissipationSummary, PurityTrace, TunnelingProjections,
    DECOHERENCE_THRESHOLD,
};

/// Rate density N(ε) = γ ε n_th(ε) of the Ohmic bath, with N(0) = γ k_BT.
pub fn bath_weight(eps: f64, bath: &BathParams) -> f64 {
    let g = bath.damping();
    let t = bath.temperature();
    if t == 0.0 {
        return if eps < 0.0 { -g * eps } else { 0.0 };
    }
    let y = eps / t;
    if y.abs() < 1e-300 {
        return g * t;
    }
    if y > 700.0 {
        return 0.0;
    }
    g * eps / y.exp_m1()
}

/// Fourier coefficients X_{αβ,n} of ⟨φ_α(t)|x|φ_β(t)⟩ = Σ_n X_{αβ,n} e^{inωt}.
#[derive(Debug, Clone)]
pub struct XCoefficients {
    m: usize,
    range: i64,
    data: Vec<f64>,
}

impl XCoefficients {
    pub fn states(&self) -> usize {
        self.m
    }

    /// Largest |n| stored.
    pub fn range(&self) -> i64 {
        self.range
    }

    pub fn get(&self, a: usize, b: usize, n: i64) -> f64 {
        if n.abs() > self.range {
            return 0.0;
        }
        self.data[(a * self.m + b) * self.width() + (n + self.range) as usize]
    }

    fn width(&self) -> usize {
        (2 * self.range + 1) as usize
    }

    pub(crate) fn row(&self, a: usize, b: usize) -> &[f64] {
        let w = self.width();
        &self.data[(a * self.m + b) * w..(a * self.m + b + 1) * w]
    }

    /// Σ_n X_{αβ,n}: the matrix element at t = 0.
    pub fn at_zero(&self, a: usize, b: usize) -> f64 {
        self.row(a, b).iter().sum()
    }

    /// Weight of the coefficients with |n| > `cutoff` relative to the total.
    pub fn tail_weight(&self, cutoff: i64) -> f64 {
        let mut tail = 0.0;
        let mut total = 0.0;
        for ab in 0..self.m * self.m {
            for (i, v) in self.data[ab * self.width()..(ab + 1) * self.width()].iter().enumerate() {
                let n = i as i64 - self.range;
                total += v * v;
                if n.abs() > cutoff {
                    tail += v * v;
                }
            }
        }
        if total == 0.0 {
            0.0
        } else {
            tail / total
        }
    }

    /// Coefficients restricted to a subset of the states.
    pub fn restricted(&self, idx: &[usize]) -> Self {
        let m = idx.len();
        let w = self.width();
        let mut data = vec![0.0; m * m * w];
        for (i, &a) in idx.iter().enumerate() {
            for (j, &b) in idx.iter().enumerate() {
                data[(i * m + j) * w..(i * m + j + 1) * w].copy_from_slice(self.row(a, b));
            }
        }
        Self { m, range: self.range, data }
    }
}

/// X_{αβ,n} = Σ_m Σ_{k,k'} c^α_{m,k} x_{kk'} c^β_{m−n,k'}.
pub fn x_fourier_coefficients(states: &[&FloquetState], x: &Mat<f64>) -> Result<XCoefficients> {
    let m = states.len();
    if m == 0 {
        return Err(Error::TruncationMismatch("no states".into()));
    }
    let k = states[0].components.retained();
    if states.iter().any(|s| s.components.retained() != k) || x.nrows() != k {
        return Err(Error::TruncationMismatch(format!(
            "states and position matrix disagree on the number of H0 states ({} vs {})",
            k,
            x.nrows()
        )));
    }
    let lo = states.iter().map(|s| s.components.first_sideband()).min().unwrap();
    let hi = states.iter().map(|s| s.components.last_sideband()).max().unwrap();
    let range = hi - lo;
    let width = (2 * range + 1) as usize;
    // x applied to every sideband block of every state.
    let xc: Vec<Vec<(i64, Vec<f64>)>> = states
        .iter()
        .map(|s| {
            s.components
                .sidebands()
                .map(|n| {
                    let c = s.components.block(n).unwrap();
                    let v = (0..k).map(|i| (0..k).map(|j| x[(i, j)] * c[j]).sum()).collect();
                    (n, v)
                })
                .collect()
        })
        .collect();
    let mut data = vec![0.0; m * m * width];
    for a in 0..m {
        for b in a..m {
            let ca = &states[a].components;
            for (nb, xb) in &xc[b] {
                for na in ca.sidebands() {
                    let blk = ca.block(na).unwrap();
                    let v: f64 = blk.iter().zip(xb).map(|(p, q)| p * q).sum();
                    if v == 0.0 {
                        continue;
                    }
                    let n = na - nb;
                    data[(a * m + b) * width + (n + range) as usize] += v;
                    if a != b {
                        data[(b * m + a) * width + (range - n) as usize] += v;
                    }
                }
            }
        }
    }
    // The diagonal blocks were accumulated once per (na, nb) pair; symmetrize the
    // n ↔ −n halves so that X_{αα,n} = X_{αα,−n} holds exactly.
    for a in 0..m {
        let base = (a * m + a) * width;
        for i in 0..(range as usize) {
            let j = width - 1 - i;
            let s = 0.5 * (data[base + i] + data[base + j]);
            data[base + i] = s;
            data[base + j] = s;
        }
    }
    Ok(XCoefficients { m, range, data })
}

/// Indices of the `m` lowest-mean-energy states of a spectrum (already sorted).
pub fn retain_lowest(spectrum: &FloquetSpectrum, m: usize) -> Result<Vec<usize>> {
    if m > spectrum.len() {
        return Err(Error::Truncation { requested: m, available: spectrum.len() });
    }
    Ok((0..m).collect())
}

/// Kernel over a chosen subset of spectrum states (e.g. a crossing triple).
pub fn restrict_to_three_levels(
    spectrum: &FloquetSpectrum,
    x: &Mat<f64>,
    bath: &BathParams,
    labels: [usize; 3],
    kind: KernelKind,
) -> Result<DissipativeKernel> {
    for &l in &labels {
        if l >= spectrum.len() {
            return Err(Error::LabelNotFound(l));
        }
    }
    let states: Vec<&FloquetState> = labels.iter().map(|&l| &spectrum.states[l]).collect();
    let xc = x_fourier_coefficients(&states, x)?;
    Ok(assemble_rwa_kernel(&states, &xc, bath, spectrum.omega(), kind))
}
