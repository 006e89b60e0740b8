//! Spectrum of the undriven double well in a harmonic-oscillator ladder basis.

use std::io::Write;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::export::{csv_writer, fmt};
use crate::linalg::{residual_norms, symmetric_eigen};
use crate::params::{Parity, SystemParams};

/// Numerical settings for [`solve_h0`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisSettings {
    /// Number of oscillator states in the computational basis.
    pub computational_size: usize,
    /// Number of retained H₀ eigenstates K.
    pub retained: usize,
    /// Oscillator frequency of the ladder basis.
    pub oscillator_frequency: f64,
}

impl Default for BasisSettings {
    fn default() -> Self {
        Self { computational_size: 300, retained: 60, oscillator_frequency: 1.0 }
    }
}

#[derive(Debug, Clone)]
pub struct H0Spectrum {
    energies: Vec<f64>,
    parities: Vec<Parity>,
    position: Mat<f64>,
    x2_diagonal: Vec<f64>,
    /// Columns are eigenvectors in the oscillator basis.
    vectors: Mat<f64>,
    oscillator_frequency: f64,
    residuals: Vec<f64>,
}

/// Ladder-basis matrices x and p², assembled in `n + 4` states so that the
/// products needed for x⁴ are exact in the leading `n × n` block.
fn ladder_matrices(n: usize, w0: f64) -> (Mat<f64>, Mat<f64>) {
    let m = n + 4;
    let xs = (2.0 * w0).sqrt().recip();
    let x = Mat::from_fn(m, m, |i, j| {
        if j == i + 1 {
            xs * (j as f64).sqrt()
        } else if i == j + 1 {
            xs * (i as f64).sqrt()
        } else {
            0.0
        }
    });
    // p² = (w0/2)(2N + 1 − a² − a†²)
    let p2 = Mat::from_fn(m, m, |i, j| {
        let h = 0.5 * w0;
        if i == j {
            h * (2.0 * i as f64 + 1.0)
        } else if j == i + 2 {
            -h * ((i + 1) as f64 * (i + 2) as f64).sqrt()
        } else if i == j + 2 {
            -h * ((j + 1) as f64 * (j + 2) as f64).sqrt()
        } else {
            0.0
        }
    });
    (x, p2)
}

fn fix_sign(v: &mut Mat<f64>, col: usize) {
    let mut best = 0.0f64;
    for r in 0..v.nrows() {
        if v[(r, col)].abs() > best.abs() + 1e-14 {
            best = v[(r, col)];
        }
    }
    if best < 0.0 {
        for r in 0..v.nrows() {
            v[(r, col)] = -v[(r, col)];
        }
    }
}

/// Diagonalizes H₀ = p²/2 − x²/4 + x⁴/(64D) and returns the lowest `retained` states.
pub fn solve_h0(params: &SystemParams, settings: &BasisSettings) -> Result<H0Spectrum> {
    let n = settings.computational_size;
    let k = settings.retained;
    let w0 = settings.oscillator_frequency;
    if !(w0 > 0.0) {
        return Err(invalid("oscillator_frequency", "must be positive"));
    }
    if k < 2 {
        return Err(invalid("retained", "need at least two states"));
    }
    if n < 2 * k {
        return Err(Error::Truncation { requested: k, available: n / 2 });
    }
    let min_k = 2 * params.barrier_height().ceil() as usize;
    if k < min_k {
        return Err(invalid(
            "retained",
            format!("K = {k} does not cover both ladders below the barrier (need ≥ {min_k})"),
        ));
    }

    let (x, p2) = ladder_matrices(n, w0);
    let x2 = &x * &x;
    let x4 = &x2 * &x2;
    let d = params.barrier_height();
    let h = Mat::from_fn(n, n, |i, j| 0.5 * p2[(i, j)] - 0.25 * x2[(i, j)] + x4[(i, j)] / (64.0 * d));

    // H₀ conserves oscillator parity, so the even and odd ladders decouple.
    let ne = n.div_ceil(2);
    let no = n / 2;
    let he = Mat::from_fn(ne, ne, |i, j| h[(2 * i, 2 * j)]);
    let ho = Mat::from_fn(no, no, |i, j| h[(2 * i + 1, 2 * j + 1)]);
    let (ve, ue) = symmetric_eigen(&he, "even H0 block")?;
    let (vo, uo) = symmetric_eigen(&ho, "odd H0 block")?;
    let res_e = residual_norms(&he, &ve, &ue);
    let res_o = residual_norms(&ho, &vo, &uo);

    let mut energies = Vec::with_capacity(k);
    let mut parities = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    let mut vectors = Mat::<f64>::zeros(n, k);
    for s in 0..k {
        let half = s / 2;
        let (e, u, offset, r, parity) = if s % 2 == 0 {
            (ve[half], &ue, 0, res_e[half], Parity::Even)
        } else {
            (vo[half], &uo, 1, res_o[half], Parity::Odd)
        };
        energies.push(e);
        parities.push(parity);
        residuals.push(r);
        for i in 0..u.nrows() {
            vectors[(2 * i + offset, s)] = u[(i, half)];
        }
        fix_sign(&mut vectors, s);
    }

    let scale = energies.iter().fold(1.0f64, |m, e| m.max(e.abs()));
    let (worst_state, max_residual) = residuals
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |acc, (i, r)| if r > acc.1 { (i, r) } else { acc });
    if max_residual > 1e-8 * scale {
        return Err(Error::NotConverged { max_residual, worst_state });
    }
    for w in energies.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Eigensolver { context: "H0 spectrum not strictly increasing" });
        }
    }

    let xn = Mat::from_fn(n, n, |i, j| x[(i, j)]);
    let xv = &xn * &vectors;
    let mut position = Mat::<f64>::zeros(k, k);
    for a in 0..k {
        for b in (a + 1)..k {
            if parities[a] == parities[b] {
                continue;
            }
            let v: f64 = (0..n).map(|r| vectors[(r, a)] * xv[(r, b)]).sum();
            position[(a, b)] = v;
            position[(b, a)] = v;
        }
    }
    let x2v = Mat::from_fn(n, n, |i, j| x2[(i, j)]) * &vectors;
    let x2_diagonal = (0..k).map(|a| (0..n).map(|r| vectors[(r, a)] * x2v[(r, a)]).sum()).collect();

    Ok(H0Spectrum { energies, parities, position, x2_diagonal, vectors, oscillator_frequency: w0, residuals })
}

impl H0Spectrum {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn parities(&self) -> &[Parity] {
        &self.parities
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    /// ⟨Ψ_k|x²|Ψ_k⟩ evaluated in the full computational basis.
    pub fn x2_expectation(&self, k: usize) -> f64 {
        self.x2_diagonal[k]
    }

    /// Keeps only the lowest `k` states.
    pub fn truncated(&self, k: usize) -> Result<H0Spectrum> {
        if k > self.len() {
            return Err(Error::Truncation { requested: k, available: self.len() });
        }
        Ok(H0Spectrum {
            energies: self.energies[..k].to_vec(),
            parities: self.parities[..k].to_vec(),
            position: Mat::from_fn(k, k, |i, j| self.position[(i, j)]),
            x2_diagonal: self.x2_diagonal[..k].to_vec(),
            vectors: Mat::from_fn(self.vectors.nrows(), k, |i, j| self.vectors[(i, j)]),
            oscillator_frequency: self.oscillator_frequency,
            residuals: self.residuals[..k].to_vec(),
        })
    }

    /// Energy of the lowest state above the barrier top V(0) = 0.
    pub fn states_below_barrier(&self) -> usize {
        self.energies.iter().filter(|&&e| e < 0.0).count()
    }

    /// Eigenfunction Ψ_k(x), evaluated from the oscillator expansion.
    pub fn wavefunction(&self, k: usize, x: f64) -> f64 {
        self.wavefunction_and_slope(k, x).0
    }

    /// Ψ_k(x) and Ψ_k'(x).
    pub fn wavefunction_and_slope(&self, k: usize, x: f64) -> (f64, f64) {
        let w0 = self.oscillator_frequency;
        let y = x * w0.sqrt();
        // Normalized Hermite functions by the stable three-term recurrence;
        // φ_n' = √ω₀ (√(n/2) φ_{n−1} − √((n+1)/2) φ_{n+1}).
        let n = self.vectors.nrows();
        let mut phi = Vec::with_capacity(n + 1);
        phi.push((w0 / std::f64::consts::PI).powf(0.25) * (-0.5 * y * y).exp());
        for m in 1..=n {
            let prev = if m >= 2 { phi[m - 2] } else { 0.0 };
            phi.push((2.0 / m as f64).sqrt() * y * phi[m - 1] - ((m as f64 - 1.0) / m as f64).sqrt() * prev);
        }
        let (mut value, mut slope) = (0.0, 0.0);
        for m in 0..n {
            let c = self.vectors[(m, k)];
            let down = if m > 0 { (m as f64 / 2.0).sqrt() * phi[m - 1] } else { 0.0 };
            value += c * phi[m];
            slope += c * w0.sqrt() * (down - ((m as f64 + 1.0) / 2.0).sqrt() * phi[m + 1]);
        }
        (value, slope)
    }

    /// Splitting E_{2j+1} − E_{2j} of the j-th doublet from the flux identity
    /// ΔE = Ψ₊(0) Ψ₋'(0) / (2 ∫₀^∞ Ψ₊Ψ₋ dx), which avoids subtracting two
    /// nearly equal eigenvalues.
    pub fn doublet_splitting(&self, j: usize) -> f64 {
        let (e, o) = (2 * j, 2 * j + 1);
        let (psi_e, _) = self.wavefunction_and_slope(e, 0.0);
        let (_, slope_o) = self.wavefunction_and_slope(o, 0.0);
        // Trapezoid rule out to where both states are negligible.
        let reach = 4.0 * self.x2_expectation(o).max(self.x2_expectation(e)).sqrt() + 4.0;
        let steps = (reach / 5e-3).ceil() as usize;
        let h = reach / steps as f64;
        let overlap: f64 = (1..=steps)
            .map(|i| {
                let x = i as f64 * h;
                let f = self.wavefunction(e, x) * self.wavefunction(o, x);
                if i == steps { 0.5 * f } else { f }
            })
            .sum::<f64>()
            * h;
        psi_e * slope_o / (2.0 * overlap)
    }

    pub fn write_csv<W: Write>(&self, out: W, comment: Option<&str>) -> Result<()> {
        let mut w = csv_writer(out, "h0-spectrum", comment)?;
        w.write_record(["k", "energy", "parity"])?;
        for (k, (e, p)) in self.energies.iter().zip(&self.parities).enumerate() {
            w.write_record([k.to_string(), fmt(*e), p.sign().to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Position matrix elements x_{kk'} = ⟨Ψ_k|x|Ψ_k'⟩ in the retained eigenbasis.
pub fn position_matrix(spectrum: &H0Spectrum) -> &Mat<f64> {
    &spectrum.position
}

/// Largest relative change of the retained energies when the computational
/// basis grows by 50%.
pub fn convergence_change(params: &SystemParams, settings: &BasisSettings) -> Result<f64> {
    let a = solve_h0(params, settings)?;
    let bigger = BasisSettings { computational_size: settings.computational_size * 3 / 2, ..*settings };
    let b = solve_h0(params, &bigger)?;
    Ok(a.energies
        .iter()
        .zip(&b.energies)
        .map(|(x, y)| (x - y).abs() / x.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max))
}
