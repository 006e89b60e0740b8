use faer::Mat;
use log::warn;

use super::{DensityMatrix, DissipativeKernel, PeriodicGenerator};
use crate::error::{invalid, Error, Result};
use crate::linalg::{expm, matvec, C64};
use crate::params::Parity;

/// Worst-case drift of the conserved quantities along a trajectory.
#[derive(Debug, Clone, Default)]
pub struct TrajectoryDiagnostics {
    pub trace_drift: f64,
    pub hermiticity_drift: f64,
    /// Largest off-block (mixed operator parity) entry seen.
    pub offblock_leakage: f64,
    pub min_eigenvalue: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub damping: f64,
    pub diagnostics: TrajectoryDiagnostics,
}

impl Trajectory {
    pub fn purities(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.purity()).collect()
    }

    pub fn last(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory has at least the initial state")
    }
}

pub(super) fn check_initial(sigma0: &DensityMatrix, m: usize) -> Result<()> {
    if sigma0.dim() != m {
        return Err(Error::TruncationMismatch(format!(
            "initial state has dimension {} but the generator acts on {m} states",
            sigma0.dim()
        )));
    }
    if (sigma0.trace() - C64::new(1.0, 0.0)).norm() > 1e-9 {
        return Err(invalid("sigma0", "trace must be 1"));
    }
    if sigma0.hermiticity_error() > 1e-9 {
        return Err(invalid("sigma0", "must be Hermitian"));
    }
    Ok(())
}

struct Monitor<'a> {
    parities: &'a [Parity],
    initial_offblock: f64,
    diag: TrajectoryDiagnostics,
}

impl<'a> Monitor<'a> {
    fn new(parities: &'a [Parity], sigma0: &DensityMatrix) -> Self {
        Self {
            parities,
            initial_offblock: sigma0.parity_offblock(parities),
            diag: TrajectoryDiagnostics { min_eigenvalue: f64::INFINITY, ..Default::default() },
        }
    }

    fn record(&mut self, t: f64, s: &DensityMatrix) -> Result<()> {
        let tr = s.trace();
        if !tr.re.is_finite() {
            return Err(Error::StepUnderflow(t));
        }
        let d = &mut self.diag;
        d.trace_drift = d.trace_drift.max((tr - C64::new(1.0, 0.0)).norm());
        d.hermiticity_drift = d.hermiticity_drift.max(s.hermiticity_error());
        if self.initial_offblock == 0.0 {
            d.offblock_leakage = d.offblock_leakage.max(s.parity_offblock(self.parities));
        }
        let lam = s.min_eigenvalue();
        if lam < -1e-6 && d.min_eigenvalue >= -1e-6 {
            let msg = format!("density matrix lost positivity at t = {t:e} (eigenvalue {lam:e})");
            warn!("{msg}");
            d.warnings.push(msg);
        }
        d.min_eigenvalue = d.min_eigenvalue.min(lam);
        Ok(())
    }
}

/// Propagates with the time-independent kernel, σ(t) = exp(L t)σ₀, at the requested
/// (non-decreasing) sampling times.
pub fn propagate_rwa(kernel: &DissipativeKernel, sigma0: &DensityMatrix, times: &[f64]) -> Result<Trajectory> {
    let m = kernel.states();
    check_initial(sigma0, m)?;
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(invalid("times", "sampling times must be non-negative and non-decreasing"));
    }
    let gen = kernel.generator();
    let mut cache: Vec<(f64, Mat<C64>)> = Vec::new();
    let mut monitor = Monitor::new(kernel.parities(), sigma0);
    let mut v = sigma0.to_vec();
    let mut t = 0.0;
    let mut out_t = Vec::with_capacity(times.len());
    let mut out_s = Vec::with_capacity(times.len());
    for &target in times {
        let dt = target - t;
        if dt > 0.0 {
            let prop = match cache.iter().position(|(h, _)| (h - dt).abs() <= 1e-12 * dt) {
                Some(i) => &cache[i].1,
                None => {
                    cache.push((dt, expm(&(&gen * faer::Scale(C64::new(dt, 0.0))))));
                    if cache.len() > 8 {
                        cache.remove(0);
                    }
                    &cache.last().unwrap().1
                }
            };
            v = matvec(prop, &v);
            t = target;
        }
        let s = DensityMatrix::from_vec(&v, m);
        monitor.record(t, &s)?;
        out_t.push(t);
        out_s.push(s);
    }
    Ok(Trajectory { times: out_t, states: out_s, damping: kernel.damping(), diagnostics: monitor.diag })
}

/// Integrates the time-periodic generator with classical RK4 at step T/`steps_per_period`,
/// sampling every `sample_every` steps, for `periods` driving periods.
pub fn propagate_periodic(
    generator: &PeriodicGenerator,
    sigma0: &DensityMatrix,
    periods: usize,
    steps_per_period: usize,
    sample_every: usize,
) -> Result<Trajectory> {
    let m = generator.states();
    check_initial(sigma0, m)?;
    if steps_per_period == 0 || sample_every == 0 {
        return Err(invalid("steps_per_period", "must be positive"));
    }
    let h = generator.period() / steps_per_period as f64;
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::StepUnderflow(0.0));
    }
    let hc = |f: f64| faer::Scale(C64::new(f, 0.0));
    let mut monitor = Monitor::new(generator.parities(), sigma0);
    let mut s = sigma0.matrix().clone();
    let mut out_t = vec![0.0];
    let mut out_s = vec![sigma0.clone()];
    monitor.record(0.0, sigma0)?;
    let total = periods * steps_per_period;
    for step in 0..total {
        let t = step as f64 * h;
        let k1 = generator.apply(t, &s);
        let k2 = generator.apply(t + 0.5 * h, &(&s + &k1 * hc(0.5 * h)));
        let k3 = generator.apply(t + 0.5 * h, &(&s + &k2 * hc(0.5 * h)));
        let k4 = generator.apply(t + h, &(&s + &k3 * hc(h)));
        s = &s + (&k1 + &k2 * hc(2.0) + &k3 * hc(2.0) + &k4) * hc(h / 6.0);
        if (step + 1) % sample_every == 0 || step + 1 == total {
            let tn = (step + 1) as f64 * h;
            let d = DensityMatrix::new(s.clone())?;
            monitor.record(tn, &d)?;
            out_t.push(tn);
            out_s.push(d);
        }
    }
    Ok(Trajectory { times: out_t, states: out_s, damping: f64::NAN, diagnostics: monitor.diag })
}
