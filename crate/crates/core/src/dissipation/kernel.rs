use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bath_weight, DensityMatrix, XCoefficients};
use crate::floquet::FloquetState;
use crate::linalg::C64;
use crate::params::{BathParams, Parity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// Full period-averaged kernel including coherence transfer.
    #[default]
    Moderate,
    /// Only population transfer σ_αα → σ_α'α' and pure decay of coherences.
    DiagonalRates,
}

/// Time-independent generator dσ/dt = −i(ε_α − ε_β)σ_αβ + Σ L_{αβ,α'β'} σ_α'β'.
#[derive(Debug, Clone)]
pub struct DissipativeKernel {
    m: usize,
    /// L[(a·M + b)·M² + c·M + d], real.
    rates: Vec<f64>,
    quasienergies: Vec<f64>,
    parities: Vec<Parity>,
    damping: f64,
}

/// N_{αβ,n} = N(ε_α − ε_β + nω) on the sideband range of `x`.
fn bath_table(eps: &[f64], x: &XCoefficients, bath: &BathParams, omega: f64) -> Vec<f64> {
    let m = eps.len();
    let r = x.range();
    let w = (2 * r + 1) as usize;
    let mut out = vec![0.0; m * m * w];
    for a in 0..m {
        for b in 0..m {
            for i in 0..w {
                let n = i as i64 - r;
                out[(a * m + b) * w + i] = bath_weight(eps[a] - eps[b] + n as f64 * omega, bath);
            }
        }
    }
    out
}

/// Period-averaged (moderate rotating-wave) kernel.
pub fn assemble_rwa_kernel(
    states: &[&FloquetState],
    x: &XCoefficients,
    bath: &BathParams,
    omega: f64,
    kind: KernelKind,
) -> DissipativeKernel {
    let m = states.len();
    assert_eq!(m, x.states(), "X coefficients built for a different state set");
    let eps: Vec<f64> = states.iter().map(|s| s.quasienergy).collect();
    let w = (2 * x.range() + 1) as usize;
    let nt = bath_table(&eps, x, bath, omega);
    let nrow = |a: usize, b: usize| &nt[(a * m + b) * w..(a * m + b + 1) * w];
    // X_{αβ,−n} is the reversed row.
    let dot_rev = |p: &[f64], q: &[f64], r: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..w {
            s += p[i] * q[i] * r[w - 1 - i];
        }
        s
    };

    // Loss matrix G_{αα'} = Σ_{e,n} N_{eα',n} X_{αe,−n} X_{eα',n}.
    let g: Vec<f64> = (0..m * m)
        .into_par_iter()
        .map(|ac| {
            let (a, c) = (ac / m, ac % m);
            (0..m).map(|e| dot_rev(nrow(e, c), x.row(e, c), x.row(a, e))).sum()
        })
        .collect();

    let m2 = m * m;
    let mut rates = vec![0.0; m2 * m2];
    rates.par_chunks_mut(m2).enumerate().for_each(|(ab, row)| {
        let (a, b) = (ab / m, ab % m);
        for c in 0..m {
            for d in 0..m {
                let keep = match kind {
                    KernelKind::Moderate => true,
                    KernelKind::DiagonalRates => (a == b && c == d) || (a == c && b == d),
                };
                if !keep {
                    continue;
                }
                // Gain: Σ_n (N_{αα',n} + N_{ββ',n}) X_{αα',n} X_{β'β,−n}.
                let (nac, nbd) = (nrow(a, c), nrow(b, d));
                let (xac, xdb) = (x.row(a, c), x.row(d, b));
                let mut v = 0.0;
                for i in 0..w {
                    v += (nac[i] + nbd[i]) * xac[i] * xdb[w - 1 - i];
                }
                if b == d {
                    v -= g[a * m + c];
                }
                if a == c {
                    v -= g[b * m + d];
                }
                row[c * m + d] = v;
            }
        }
    });
    DissipativeKernel {
        m,
        rates,
        quasienergies: eps,
        parities: states.iter().map(|s| s.parity).collect(),
        damping: bath.damping(),
    }
}

impl DissipativeKernel {
    pub fn states(&self) -> usize {
        self.m
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }

    pub fn quasienergies(&self) -> &[f64] {
        &self.quasienergies
    }

    pub fn parities(&self) -> &[Parity] {
        &self.parities
    }

    /// L_{αβ,α'β'}.
    pub fn entry(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let m = self.m;
        self.rates[(a * m + b) * m * m + c * m + d]
    }

    /// Direct transition rate α' → α, i.e. L_{αα,α'α'}.
    pub fn transition_rate(&self, to: usize, from: usize) -> f64 {
        self.entry(to, to, from, from)
    }

    /// The full generator as an M² × M² complex matrix (row-major vec index).
    pub fn generator(&self) -> Mat<C64> {
        let m = self.m;
        let m2 = m * m;
        Mat::from_fn(m2, m2, |i, j| {
            let mut v = C64::new(self.rates[i * m2 + j], 0.0);
            if i == j {
                let (a, b) = (i / m, i % m);
                v += C64::new(0.0, -(self.quasienergies[a] - self.quasienergies[b]));
            }
            v
        })
    }

    /// dσ/dt for the time-independent generator.
    pub fn apply(&self, sigma: &DensityMatrix) -> DensityMatrix {
        let m = self.m;
        let m2 = m * m;
        let v = sigma.to_vec();
        let out: Vec<C64> = (0..m2)
            .map(|i| {
                let row = &self.rates[i * m2..(i + 1) * m2];
                let mut s: C64 = row.iter().zip(&v).map(|(r, x)| x * *r).sum();
                let (a, b) = (i / m, i % m);
                s += C64::new(0.0, -(self.quasienergies[a] - self.quasienergies[b])) * v[i];
                s
            })
            .collect();
        DensityMatrix::from_vec(&out, m)
    }
}

/// The time-periodic Born–Markov generator
/// D(σ) = AσX − XAσ + XσA† − σA†X − i[ε, σ] with
/// X(t) = Σ_n X_n e^{inωt} and A(t) = Σ_n N_n ∘ X_n e^{inωt}.
#[derive(Debug, Clone)]
pub struct PeriodicGenerator {
    m: usize,
    range: i64,
    omega: f64,
    x: Vec<f64>,
    a: Vec<f64>,
    quasienergies: Vec<f64>,
    parities: Vec<Parity>,
}

impl PeriodicGenerator {
    pub fn new(states: &[&FloquetState], x: &XCoefficients, bath: &BathParams, omega: f64) -> Self {
        let m = states.len();
        let eps: Vec<f64> = states.iter().map(|s| s.quasienergy).collect();
        let nt = bath_table(&eps, x, bath, omega);
        let w = (2 * x.range() + 1) as usize;
        let mut xs = vec![0.0; m * m * w];
        let mut a = vec![0.0; m * m * w];
        for ab in 0..m * m {
            let row = x.row(ab / m, ab % m);
            for i in 0..w {
                xs[ab * w + i] = row[i];
                a[ab * w + i] = nt[ab * w + i] * row[i];
            }
        }
        Self {
            m,
            range: x.range(),
            omega,
            x: xs,
            a,
            quasienergies: eps,
            parities: states.iter().map(|s| s.parity).collect(),
        }
    }

    pub fn states(&self) -> usize {
        self.m
    }

    pub fn parities(&self) -> &[Parity] {
        &self.parities
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega
    }

    /// Largest |n| appearing in the products of the generator.
    pub fn bandwidth(&self) -> i64 {
        2 * self.range
    }

    fn matrices_at(&self, t: f64) -> (Mat<C64>, Mat<C64>) {
        let m = self.m;
        let w = (2 * self.range + 1) as usize;
        let phases: Vec<C64> =
            (0..w).map(|i| C64::from_polar(1.0, (i as i64 - self.range) as f64 * self.omega * t)).collect();
        let sum = |src: &[f64], ab: usize| -> C64 { (0..w).map(|i| phases[i] * src[ab * w + i]).sum() };
        let xt = Mat::from_fn(m, m, |a, b| sum(&self.x, a * m + b));
        let at = Mat::from_fn(m, m, |a, b| sum(&self.a, a * m + b));
        (xt, at)
    }

    /// dσ/dt at time t.
    pub fn apply(&self, t: f64, sigma: &Mat<C64>) -> Mat<C64> {
        let (xt, at) = self.matrices_at(t);
        let adag = at.adjoint().to_owned();
        let s_x = sigma * &xt;
        let x_s = &xt * sigma;
        let mut out = &at * &s_x - &xt * (&at * sigma) + &x_s * &adag - sigma * (&adag * &xt);
        for a in 0..self.m {
            for b in 0..self.m {
                out[(a, b)] += C64::new(0.0, -(self.quasienergies[a] - self.quasienergies[b])) * sigma[(a, b)];
            }
        }
        out
    }
}

/// The periodic generator at time t as an M² × M² superoperator.
pub fn assemble_periodic_generator(gen: &PeriodicGenerator, t: f64) -> Mat<C64> {
    let m = gen.m;
    let (xt, at) = gen.matrices_at(t);
    let xa = &xt * &at;
    let adag_x = at.adjoint() * &xt;
    let m2 = m * m;
    Mat::from_fn(m2, m2, |i, j| {
        let (a, b) = (i / m, i % m);
        let (c, d) = (j / m, j % m);
        let mut v = at[(a, c)] * xt[(d, b)] + xt[(a, c)] * at[(b, d)].conj();
        if b == d {
            v -= xa[(a, c)];
        }
        if a == c {
            v -= adag_x[(d, b)];
        }
        if i == j {
            v += C64::new(0.0, -(gen.quasienergies[a] - gen.quasienergies[b]));
        }
        v
    })
}
