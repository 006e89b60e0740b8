//! Floquet matrix problem in the H₀ eigenbasis, split by generalized parity.

mod components;
mod crossing;
mod sweep;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::basis::{position_matrix, H0Spectrum};
use crate::error::{invalid, Error, Result};
use crate::linalg::symmetric_eigen;
use crate::params::{Parity, SystemParams};

pub use components::FourierComponents;
pub use crossing::{
    classify_configuration, detect_crossings, Configuration, ConfigurationReport, CrossingKind, CrossingReport,
    CrossingSettings,
};
pub use sweep::{sweep_amplitude, Sweep, SweepPoint, SweepSettings};

/// Index class of the extended (n, k) space: the sign of (−1)^{n+k}.
///
/// The Floquet matrix never couples the two classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sector {
    Plus,
    Minus,
}

impl Sector {
    pub fn of(n: i64, k: usize) -> Self {
        if (n + k as i64).rem_euclid(2) == 0 {
            Sector::Plus
        } else {
            Sector::Minus
        }
    }

    pub fn contains(self, n: i64, k: usize) -> bool {
        Sector::of(n, k) == self
    }

    /// Generalized-parity label of a state whose Brillouin-zone representative
    /// lives in this index class.
    ///
    /// Labels are assigned with the sign opposite to (−1)^{n+k}. With this choice
    /// the chaotic singlet of the D = 4, ω = 0.982 crossing and its regular
    /// partner carry the odd label and the flat spectator the even one.
    pub fn label(self) -> Parity {
        match self {
            Sector::Plus => Parity::Odd,
            Sector::Minus => Parity::Even,
        }
    }

    pub fn of_label(p: Parity) -> Self {
        match p {
            Parity::Odd => Sector::Plus,
            Parity::Even => Sector::Minus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloquetSettings {
    /// Sidebands n ∈ [−N_F, N_F].
    pub sidebands: usize,
    /// Quasienergy window for recognizing two eigenpairs as the same class.
    pub class_tolerance: f64,
}

impl Default for FloquetSettings {
    fn default() -> Self {
        Self { sidebands: 16, class_tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FloquetState {
    /// ε ∈ [−ω/2, ω/2).
    pub quasienergy: f64,
    pub parity: Parity,
    /// Fourier components of the Brillouin-zone representative.
    pub components: FourierComponents,
    pub mean_energy: f64,
    /// Central-sideband weight of the eigenvector this representative came from.
    pub central_weight: f64,
    /// Weight on the outermost sidebands of the truncated matrix.
    pub edge_weight: f64,
    /// Set when class deduplication could not pick a unique representative.
    pub ambiguous: bool,
}

#[derive(Debug, Clone)]
pub struct FloquetSpectrum {
    /// Sorted by mean energy.
    pub states: Vec<FloquetState>,
    pub params: SystemParams,
    pub retained: usize,
    pub sidebands: usize,
    pub warnings: Vec<String>,
}

/// Brillouin-zone reduction: returns (ε, m) with ε = λ − mω ∈ [−ω/2, ω/2).
pub fn reduce_quasienergy(lambda: f64, omega: f64) -> (f64, i64) {
    let m = ((lambda + 0.5 * omega) / omega).floor();
    let mut eps = lambda - m * omega;
    let mut m = m as i64;
    if eps >= 0.5 * omega {
        eps -= omega;
        m += 1;
    } else if eps < -0.5 * omega {
        eps += omega;
        m -= 1;
    }
    (eps, m)
}

/// Quasienergy difference wrapped into [−ω/2, ω/2).
pub fn wrapped_difference(a: f64, b: f64, omega: f64) -> f64 {
    reduce_quasienergy(a - b, omega).0
}

/// Row/column layout of a sector matrix: the (n, k) pair of every index.
pub fn sector_indices(retained: usize, sidebands: usize, sector: Sector) -> Vec<(i64, usize)> {
    let nf = sidebands as i64;
    let mut idx = Vec::new();
    for n in -nf..=nf {
        for k in 0..retained {
            if sector.contains(n, k) {
                idx.push((n, k));
            }
        }
    }
    idx
}

/// H_{n,k;n',k'} = (E_k − nω)δ_{nn'}δ_{kk'} + (S/2)x_{kk'}(δ_{n−1,n'} + δ_{n+1,n'})
/// restricted to one index class.
pub fn assemble_floquet_matrix(
    h0: &H0Spectrum,
    params: &SystemParams,
    sidebands: usize,
    sector: Sector,
) -> Result<(Mat<f64>, Vec<(i64, usize)>)> {
    if sidebands < 1 {
        return Err(invalid("sidebands", "need N_F ≥ 1"));
    }
    let k = h0.len();
    let idx = sector_indices(k, sidebands, sector);
    let x = position_matrix(h0);
    let half_s = 0.5 * params.amplitude();
    let omega = params.frequency();
    let dim = idx.len();
    let block = |n: i64| -> usize {
        // Position of the first sector index in sideband n.
        let nf = sidebands as i64;
        idx.partition_point(|&(m, _)| m < n.clamp(-nf, nf + 1))
    };
    let mut h = Mat::<f64>::zeros(dim, dim);
    for (i, &(n, kk)) in idx.iter().enumerate() {
        if !sector.contains(n, kk) {
            return Err(Error::TruncationMismatch(format!("index ({n}, {kk}) outside sector {sector:?}")));
        }
        h[(i, i)] = h0.energies()[kk] - n as f64 * omega;
        if half_s == 0.0 {
            continue;
        }
        for dn in [-1i64, 1] {
            let m = n + dn;
            if m.abs() > sidebands as i64 {
                continue;
            }
            let start = block(m);
            let end = block(m + 1);
            for j in start..end {
                let (_, kp) = idx[j];
                let v = x[(kk, kp)];
                if v != 0.0 {
                    h[(i, j)] = half_s * v;
                }
            }
        }
    }
    Ok((h, idx))
}

/// Full matrix over all (n, k), without sector splitting.
pub fn assemble_full_matrix(h0: &H0Spectrum, params: &SystemParams, sidebands: usize) -> Mat<f64> {
    let k = h0.len();
    let nf = sidebands as i64;
    let dim = k * (2 * sidebands + 1);
    let x = position_matrix(h0);
    let pos = |n: i64, kk: usize| ((n + nf) as usize) * k + kk;
    let mut h = Mat::<f64>::zeros(dim, dim);
    for n in -nf..=nf {
        for a in 0..k {
            h[(pos(n, a), pos(n, a))] = h0.energies()[a] - n as f64 * params.frequency();
            for m in [n - 1, n + 1] {
                if m.abs() > nf {
                    continue;
                }
                for b in 0..k {
                    h[(pos(n, a), pos(m, b))] = 0.5 * params.amplitude() * x[(a, b)];
                }
            }
        }
    }
    h
}

/// One eigenpair of a sector matrix before class deduplication.
#[derive(Debug, Clone)]
pub struct SectorEigenpair {
    pub eigenvalue: f64,
    pub sector: Sector,
    /// Eigenvector components in the original sideband indexing.
    pub components: FourierComponents,
}

/// Diagonalizes one sector matrix.
pub fn solve_sector(
    matrix: &Mat<f64>,
    indices: &[(i64, usize)],
    retained: usize,
    sidebands: usize,
    sector: Sector,
) -> Result<Vec<SectorEigenpair>> {
    let (vals, vecs) = symmetric_eigen(matrix, "Floquet sector")?;
    let nf = sidebands as i64;
    Ok(vals
        .iter()
        .enumerate()
        .map(|(col, &lambda)| {
            let mut c = FourierComponents::zeros(-nf, 2 * sidebands + 1, retained);
            for (row, &(n, k)) in indices.iter().enumerate() {
                c.set(n, k, vecs[(row, col)]);
            }
            SectorEigenpair { eigenvalue: lambda, sector, components: c }
        })
        .collect())
}

/// Mean energy E = Σ_n (ε + nω)⟨c_n|c_n⟩.
pub fn mean_energy(quasienergy: f64, components: &FourierComponents, omega: f64) -> Result<f64> {
    let norm = components.norm_sqr();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::Unnormalized(norm));
    }
    Ok(components
        .sideband_weights()
        .map(|(n, w)| (quasienergy + n as f64 * omega) * w)
        .sum())
}

/// Removes sideband-shifted copies of the same Floquet class, keeping the
/// copy with the largest central-sideband weight, and stops after `keep` classes.
pub fn deduplicate_classes(
    mut pairs: Vec<SectorEigenpair>,
    omega: f64,
    keep: usize,
    tolerance: f64,
    sidebands: usize,
) -> (Vec<FloquetState>, Vec<String>) {
    pairs.sort_by(|a, b| {
        b.components.central_weight().total_cmp(&a.components.central_weight())
    });
    let mut kept: Vec<FloquetState> = Vec::with_capacity(keep);
    let mut warnings = Vec::new();
    for p in pairs {
        if kept.len() >= keep {
            break;
        }
        let (eps, m) = reduce_quasienergy(p.eigenvalue, omega);
        let cw = p.components.central_weight();
        let edge = p.components.edge_weight(sidebands as i64);
        let shifted = p.components.shifted(m);
        let mut duplicate_of = None;
        for (i, s) in kept.iter().enumerate() {
            if wrapped_difference(eps, s.quasienergy, omega).abs() > tolerance {
                continue;
            }
            if shifted.overlap(&s.components).abs() > 0.5 {
                duplicate_of = Some(i);
                break;
            }
        }
        match duplicate_of {
            None => {
                let index_class = shifted.sector().unwrap_or(p.sector);
                let mean = shifted
                    .sideband_weights()
                    .map(|(n, w)| (eps + n as f64 * omega) * w)
                    .sum::<f64>()
                    / shifted.norm_sqr();
                kept.push(FloquetState {
                    quasienergy: eps,
                    parity: index_class.label(),
                    components: shifted,
                    mean_energy: mean,
                    central_weight: cw,
                    edge_weight: edge,
                    ambiguous: false,
                });
            }
            Some(i) => {
                let other = kept[i].central_weight;
                if (other - cw).abs() <= 1e-9 * other.max(1e-300) {
                    warnings.push(format!(
                        "class deduplication ambiguous at ε = {eps:.10}: central weights {other:.12} and {cw:.12}; keeping both"
                    ));
                    kept[i].ambiguous = true;
                    kept.push(FloquetState {
                        quasienergy: eps,
                        parity: shifted.sector().unwrap_or(p.sector).label(),
                        mean_energy: kept[i].mean_energy,
                        components: shifted,
                        central_weight: cw,
                        edge_weight: edge,
                        ambiguous: true,
                    });
                }
            }
        }
    }
    (kept, warnings)
}

/// Solves both sectors and returns the K Floquet classes sorted by mean energy.
pub fn solve_floquet(h0: &H0Spectrum, params: &SystemParams, settings: &FloquetSettings) -> Result<FloquetSpectrum> {
    let nf = settings.sidebands;
    let k = h0.len();
    let run = |sector| -> Result<Vec<SectorEigenpair>> {
        let (m, idx) = assemble_floquet_matrix(h0, params, nf, sector)?;
        solve_sector(&m, &idx, k, nf, sector)
    };
    let (plus, minus) = rayon::join(|| run(Sector::Plus), || run(Sector::Minus));
    let mut pairs = plus?;
    pairs.extend(minus?);
    let (mut states, mut warnings) =
        deduplicate_classes(pairs, params.frequency(), k, settings.class_tolerance, nf);
    states.sort_by(|a, b| a.mean_energy.total_cmp(&b.mean_energy));
    for (i, s) in states.iter().enumerate().take(k / 2) {
        if s.edge_weight > 1e-6 {
            warnings.push(format!(
                "state {i} (E = {:.4}) has weight {:.2e} on the outermost sidebands; increase N_F",
                s.mean_energy, s.edge_weight
            ));
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(FloquetSpectrum { states, params: *params, retained: k, sidebands: nf, warnings })
}

impl FloquetSpectrum {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn omega(&self) -> f64 {
        self.params.frequency()
    }

    /// CSV columns: index, parity, quasienergy, mean_energy, central_weight.
    pub fn write_csv<W: std::io::Write>(&self, out: W, comment: Option<&str>) -> Result<()> {
        let mut w = crate::export::csv_writer(out, "floquet-spectrum", comment)?;
        w.write_record(["index", "parity", "quasienergy", "mean_energy", "central_weight"])?;
        for (i, s) in self.states.iter().enumerate() {
            w.write_record([
                i.to_string(),
                s.parity.as_str().to_string(),
                crate::export::fmt(s.quasienergy),
                crate::export::fmt(s.mean_energy),
                crate::export::fmt(s.central_weight),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Index of the state with the largest overlap with `target`, allowing a
    /// sideband shift of up to one. Returns (index, |overlap|).
    pub fn best_match(&self, target: &FourierComponents, exclude: &[usize]) -> Option<(usize, f64)> {
        self.states
            .iter()
            .enumerate()
            .filter(|(i, _)| !exclude.contains(i))
            .map(|(i, s)| (i, target.shift_tolerant_overlap(&s.components)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Right- and left-localized superpositions of an even state with one or more
/// odd partners, as coefficient vectors over `[even, odd...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizedStates {
    pub right: Vec<f64>,
    pub left: Vec<f64>,
    /// ⟨x⟩ of the right state at t = 0.
    pub x_right: f64,
}

/// x matrix element between two Floquet states at t = 0, X_{αβ}(0) = Σ_n X_{αβ,n}.
pub fn position_at_zero(a: &FourierComponents, b: &FourierComponents, x: &Mat<f64>) -> f64 {
    let ta = a.summed_over_sidebands();
    let tb = b.summed_over_sidebands();
    let k = ta.len();
    let mut s = 0.0;
    for i in 0..k {
        if ta[i] == 0.0 {
            continue;
        }
        for j in 0..k {
            s += ta[i] * x[(i, j)] * tb[j];
        }
    }
    s
}

/// (|ψ⁺⟩ ± Σ_j a_j|ψ_j⁻⟩)/√2 with a chosen to maximize ⟨x⟩ at t = 0 for the
/// right state. With a single odd partner this is (|ψ⁺⟩ ± |ψ⁻⟩)/√2.
pub fn localized_superpositions(even: &FloquetState, odd: &[&FloquetState], x: &Mat<f64>) -> Result<LocalizedStates> {
    if odd.is_empty() || odd.iter().any(|o| o.parity == even.parity) {
        return Err(invalid("odd", "need at least one partner of opposite parity"));
    }
    let xe: Vec<f64> = odd.iter().map(|o| position_at_zero(&even.components, &o.components, x)).collect();
    let norm = xe.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < 1e-8 {
        return Err(Error::NotLocalized(norm));
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut right = vec![r];
    let mut left = vec![r];
    for v in &xe {
        right.push(r * v / norm);
        left.push(-r * v / norm);
    }
    let basis: Vec<&FourierComponents> =
        std::iter::once(&even.components).chain(odd.iter().map(|o| &o.components)).collect();
    let mut x_right = 0.0;
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            x_right += right[i] * right[j] * position_at_zero(a, b, x);
        }
    }
    Ok(LocalizedStates { right, left, x_right })
}

#[cfg(test)]
mod tests;
