use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{DensityMatrix, DissipativeKernel, Trajectory};
use crate::error::{Error, Result};
use crate::export::{csv_writer, fmt};
use crate::floquet::{FloquetState, LocalizedStates};
use crate::linalg::{eigenvalues, expm, matvec, norm1, solve, C64};

/// Purity threshold that defines "decayed substantially".
pub const DECOHERENCE_THRESHOLD: f64 = 0.9;

/// Purity sampled along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct PurityTrace {
    pub times: Vec<f64>,
    pub purities: Vec<f64>,
    pub damping: f64,
}

impl From<&Trajectory> for PurityTrace {
    fn from(t: &Trajectory) -> Self {
        Self { times: t.times.clone(), purities: t.purities(), damping: t.damping }
    }
}

/// RWA propagation sampled at whole beat periods n·T_beat, stopping at the first
/// sample that reaches the decoherence threshold or after `max_beats`.
pub fn purity_by_beats(
    kernel: &DissipativeKernel,
    sigma0: &DensityMatrix,
    beat_period: f64,
    max_beats: usize,
) -> Result<PurityTrace> {
    if !(beat_period > 0.0) || !beat_period.is_finite() {
        return Err(crate::error::invalid("beat_period", "must be positive and finite"));
    }
    super::propagate::check_initial(sigma0, kernel.states())?;
    let mut trace = PurityTrace { times: vec![0.0], purities: vec![sigma0.purity()], damping: kernel.damping() };
    if kernel.damping() == 0.0 {
        return Ok(trace);
    }
    let step = expm(&(&kernel.generator() * faer::Scale(C64::new(beat_period, 0.0))));
    let m = kernel.states();
    let mut v = sigma0.to_vec();
    for n in 1..=max_beats {
        v = matvec(&step, &v);
        let p = DensityMatrix::from_vec(&v, m).purity();
        trace.times.push(n as f64 * beat_period);
        trace.purities.push(p);
        if p <= DECOHERENCE_THRESHOLD {
            break;
        }
    }
    Ok(trace)
}

/// 1/t_decoh = (tr ρ²(0) − tr ρ²(t))/t at the first sample whose purity falls to the
/// threshold. `None` when there is no damping.
pub fn decoherence_time(trace: &PurityTrace) -> Result<Option<f64>> {
    if trace.damping == 0.0 {
        return Ok(None);
    }
    let p0 = trace.purities[0];
    for (&t, &p) in trace.times.iter().zip(&trace.purities).skip(1) {
        if p <= DECOHERENCE_THRESHOLD {
            return Ok(Some(t / (p0 - p)));
        }
    }
    let reached = trace.purities.iter().cloned().fold(f64::INFINITY, f64::min);
    Err(Error::InsufficientPropagation { reached })
}

/// Eigenvalues of the full generator ordered by decreasing real part.
pub fn generator_spectrum(kernel: &DissipativeKernel) -> Result<Vec<C64>> {
    let mut ev = eigenvalues(&kernel.generator(), "dissipative generator")?;
    ev.sort_by(|a, b| b.re.total_cmp(&a.re));
    Ok(ev)
}

fn zero_cutoff(kernel: &DissipativeKernel) -> f64 {
    1e-3 * kernel.damping()
}

/// t_relax = 1/min|Re λ| over eigenvalues above the numerical-zero cutoff.
pub fn relaxation_time(kernel: &DissipativeKernel) -> Result<f64> {
    let cutoff = zero_cutoff(kernel);
    let gap = generator_spectrum(kernel)?
        .iter()
        .map(|l| l.re.abs())
        .filter(|&r| r > cutoff)
        .fold(f64::INFINITY, f64::min);
    if !gap.is_finite() {
        return Err(Error::NoRelaxation { cutoff });
    }
    Ok(1.0 / gap)
}

/// Stationary state of the RWA generator, normalized to unit trace.
///
/// The null space is counted against numerical zero (relative to the generator norm);
/// genuine slow modes between that and the relaxation cutoff are only logged.
pub fn asymptotic_state(kernel: &DissipativeKernel) -> Result<DensityMatrix> {
    let m = kernel.states();
    let spectrum = generator_spectrum(kernel)?;
    let zero = 1e-12 * norm1(&kernel.generator());
    let null = spectrum.iter().filter(|l| l.norm() <= zero).count();
    if null != 1 {
        return Err(Error::DegenerateAttractor(null));
    }
    let cutoff = zero_cutoff(kernel);
    let slow = spectrum.iter().filter(|l| l.norm() > zero && l.re.abs() <= cutoff).count();
    if slow > 0 {
        log::warn!("{slow} generator modes relax more slowly than the cutoff {cutoff:e}");
    }
    let gen = kernel.generator();
    let m2 = m * m;
    // Replace the first equation (redundant by trace conservation) with tr σ = 1.
    let mut a = gen.clone();
    for j in 0..m2 {
        a[(0, j)] = C64::new(0.0, 0.0);
    }
    for k in 0..m {
        a[(0, k * m + k)] = C64::new(1.0, 0.0);
    }
    let mut rhs = faer::Mat::<C64>::zeros(m2, 1);
    rhs[(0, 0)] = C64::new(1.0, 0.0);
    let x = solve(&a, &rhs);
    let v: Vec<C64> = (0..m2).map(|i| x[(i, 0)]).collect();
    if v.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::Singular("asymptotic state"));
    }
    let residual = matvec(&gen, &v).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if residual > 1e-10 {
        return Err(Error::NotStationary(residual));
    }
    let mut s = DensityMatrix::from_vec(&v, m);
    s.hermitize();
    Ok(s)
}

/// Projectors onto the localized states and the chaotic state in the retained basis.
#[derive(Debug, Clone)]
pub struct TunnelingProjections {
    pub right: Vec<C64>,
    pub left: Vec<C64>,
    /// The odd combination orthogonal to the regular one, when two odd partners enter.
    pub chaotic: Option<Vec<C64>>,
}

impl TunnelingProjections {
    /// `even` and `odd` index the retained states that enter `localized`, in the same
    /// order as its coefficients.
    pub fn new(states: usize, even: usize, odd: &[usize], localized: &LocalizedStates) -> Result<Self> {
        if odd.len() + 1 != localized.right.len() {
            return Err(Error::TruncationMismatch(format!(
                "{} partner states but {} localized coefficients",
                odd.len(),
                localized.right.len().saturating_sub(1)
            )));
        }
        let idx: Vec<usize> = std::iter::once(even).chain(odd.iter().copied()).collect();
        if let Some(&bad) = idx.iter().find(|&&i| i >= states) {
            return Err(Error::LabelNotFound(bad));
        }
        let embed = |c: &[f64]| {
            let mut v = vec![C64::new(0.0, 0.0); states];
            for (&i, &ci) in idx.iter().zip(c) {
                v[i] = C64::new(ci, 0.0);
            }
            v
        };
        let chaotic = (odd.len() == 2).then(|| {
            let (a, b) = (localized.right[1], localized.right[2]);
            let n = a.hypot(b);
            embed(&[0.0, -b / n, a / n])
        });
        Ok(Self { right: embed(&localized.right), left: embed(&localized.left), chaotic })
    }

    /// (P_R, P_L, P_c).
    pub fn probabilities(&self, sigma: &DensityMatrix) -> (f64, f64, f64) {
        let pc = self.chaotic.as_ref().map_or(0.0, |c| sigma.projection(c));
        (sigma.projection(&self.right), sigma.projection(&self.left), pc)
    }
}

pub fn write_trajectory_csv<W: Write>(
    out: W,
    comment: Option<&str>,
    trajectory: &Trajectory,
    projections: &TunnelingProjections,
) -> Result<()> {
    let mut w = csv_writer(out, "trajectory", comment)?;
    w.write_record(["t", "P_R", "P_L", "P_c", "purity"])?;
    for (t, s) in trajectory.times.iter().zip(&trajectory.states) {
        let (r, l, c) = projections.probabilities(s);
        w.write_record([fmt(*t), fmt(r), fmt(l), fmt(c), fmt(s.purity())])?;
    }
    w.flush()?;
    Ok(())
}

/// Attractor populations per retained state; the purity goes into the header comment.
pub fn write_attractor_csv<W: Write>(
    out: W,
    comment: Option<&str>,
    states: &[&FloquetState],
    labels: &[usize],
    attractor: &DensityMatrix,
) -> Result<()> {
    let head = format!("purity={}{}", fmt(attractor.purity()), comment.map(|c| format!(" {c}")).unwrap_or_default());
    let mut w = csv_writer(out, "attractor", Some(&head))?;
    w.write_record(["label", "parity", "mean_energy", "population"])?;
    for (i, s) in states.iter().enumerate() {
        w.write_record([
            labels.get(i).copied().unwrap_or(i).to_string(),
            s.parity.to_string(),
            fmt(s.mean_energy),
            fmt(attractor.get(i, i).re),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipationSummary {
    pub amplitude: f64,
    pub temperature: f64,
    pub damping: f64,
    pub decoherence_time: Option<f64>,
    pub relaxation_time: Option<f64>,
    pub attractor_purity: Option<f64>,
}
