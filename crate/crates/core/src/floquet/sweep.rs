use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{solve_floquet, FloquetSettings, FloquetSpectrum, FloquetState};
use crate::basis::H0Spectrum;
use crate::error::{invalid, Result};
use crate::export::{csv_writer, fmt};
use crate::params::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    /// Number of lowest-mean-energy states labelled at the first grid point.
    pub tracked: usize,
    /// Minimum overlap accepted between consecutive points before refining.
    pub min_overlap: f64,
    /// Maximum number of interval bisections when the overlap is too small.
    pub max_refinement_depth: u32,
    pub floquet: FloquetSettings,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self { tracked: 24, min_overlap: 0.5, max_refinement_depth: 6, floquet: FloquetSettings::default() }
    }
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub amplitude: f64,
    pub spectrum: FloquetSpectrum,
    /// `labels[l]` is the index into `spectrum.states` carrying continuity label `l`.
    pub labels: Vec<usize>,
    /// Overlap with the previous point for each label (1 at the first point).
    pub overlaps: Vec<f64>,
}

impl SweepPoint {
    pub fn state(&self, label: usize) -> &FloquetState {
        &self.spectrum.states[self.labels[label]]
    }
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub points: Vec<SweepPoint>,
    /// Intervals in F where no labelling with overlap above threshold was found.
    pub continuity_gaps: Vec<(f64, f64)>,
    pub h0: H0Spectrum,
    pub params: SystemParams,
    pub settings: SweepSettings,
}

/// Greedy maximal-overlap assignment of the labels of `prev` to states of `next`.
fn match_labels(prev: &SweepPoint, next: &FloquetSpectrum) -> (Vec<usize>, Vec<f64>) {
    let nl = prev.labels.len();
    let mut cand = Vec::with_capacity(nl * next.len());
    for l in 0..nl {
        let c = &prev.state(l).components;
        for (j, s) in next.states.iter().enumerate() {
            cand.push((c.shift_tolerant_overlap(&s.components), l, j));
        }
    }
    cand.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut labels = vec![usize::MAX; nl];
    let mut overlaps = vec![0.0; nl];
    let mut taken = vec![false; next.len()];
    for (o, l, j) in cand {
        if labels[l] == usize::MAX && !taken[j] {
            labels[l] = j;
            overlaps[l] = o;
            taken[j] = true;
        }
    }
    (labels, overlaps)
}

struct Tracker<'a> {
    h0: &'a H0Spectrum,
    params: SystemParams,
    settings: SweepSettings,
    gaps: Vec<(f64, f64)>,
}

impl Tracker<'_> {
    fn spectrum_at(&self, f: f64) -> Result<FloquetSpectrum> {
        solve_floquet(self.h0, &self.params.with_rescaled(f)?, &self.settings.floquet)
    }

    /// Labels `next` from `prev`, inserting midpoints while the overlap is too small.
    fn advance(&mut self, prev: &SweepPoint, f: f64, next: FloquetSpectrum, depth: u32, out: &mut Vec<SweepPoint>) -> Result<()> {
        let (labels, overlaps) = match_labels(prev, &next);
        let worst = overlaps.iter().copied().fold(1.0, f64::min);
        if worst >= self.settings.min_overlap || depth >= self.settings.max_refinement_depth {
            if worst < self.settings.min_overlap {
                log::warn!("continuity gap between F = {} and F = {f}: overlap {worst:.3}", prev.amplitude);
                self.gaps.push((prev.amplitude, f));
            }
            out.push(SweepPoint { amplitude: f, spectrum: next, labels, overlaps });
            return Ok(());
        }
        let mid = 0.5 * (prev.amplitude + f);
        let mid_spec = self.spectrum_at(mid)?;
        self.advance(prev, mid, mid_spec, depth + 1, out)?;
        let mid_point = out[out.len() - 1].clone();
        self.advance(&mid_point, f, next, depth + 1, out)
    }
}

/// Floquet spectra on a monotone grid of rescaled amplitudes F, with states
/// labelled continuously by maximal overlap of their Fourier components.
pub fn sweep_amplitude(
    h0: &H0Spectrum,
    params: &SystemParams,
    grid: &[f64],
    settings: &SweepSettings,
) -> Result<Sweep> {
    if grid.is_empty() {
        return Err(invalid("F_grid", "empty amplitude grid"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("F_grid", "amplitude grid must be strictly increasing"));
    }
    let spectra: Vec<FloquetSpectrum> = grid
        .par_iter()
        .map(|&f| solve_floquet(h0, &params.with_rescaled(f)?, &settings.floquet))
        .collect::<Result<_>>()?;
    let mut tracker = Tracker { h0, params: *params, settings: *settings, gaps: Vec::new() };
    let mut spectra = spectra.into_iter();
    let first = spectra.next().unwrap();
    let n = settings.tracked.min(first.len());
    let mut points = vec![SweepPoint {
        amplitude: grid[0],
        spectrum: first,
        labels: (0..n).collect(),
        overlaps: vec![1.0; n],
    }];
    for (&f, spec) in grid[1..].iter().zip(spectra) {
        let prev = points[points.len() - 1].clone();
        tracker.advance(&prev, f, spec, 0, &mut points)?;
    }
    let gaps = tracker.gaps;
    Ok(Sweep { points, continuity_gaps: gaps, h0: h0.clone(), params: *params, settings: *settings })
}

impl Sweep {
    pub fn tracked(&self) -> usize {
        self.points[0].labels.len()
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.amplitude).collect()
    }

    pub fn series(&self, label: usize) -> impl Iterator<Item = (f64, &FloquetState)> + '_ {
        self.points.iter().map(move |p| (p.amplitude, p.state(label)))
    }

    /// Point closest to the given amplitude.
    pub fn nearest(&self, f: f64) -> &SweepPoint {
        self.points
            .iter()
            .min_by(|a, b| (a.amplitude - f).abs().total_cmp(&(b.amplitude - f).abs()))
            .unwrap()
    }

    /// Solves at an arbitrary amplitude and labels the states from the nearest grid point.
    pub fn point_at(&self, f: f64) -> Result<SweepPoint> {
        let near = self.nearest(f);
        if near.amplitude == f {
            return Ok(near.clone());
        }
        let spectrum = solve_floquet(&self.h0, &self.params.with_rescaled(f)?, &self.settings.floquet)?;
        let (labels, overlaps) = match_labels(near, &spectrum);
        Ok(SweepPoint { amplitude: f, spectrum, labels, overlaps })
    }

    /// CSV columns: F, label, parity, quasienergy, mean_energy.
    pub fn write_csv<W: Write>(&self, out: W, comment: Option<&str>) -> Result<()> {
        let mut w = csv_writer(out, "sweep", comment)?;
        w.write_record(["F", "label", "parity", "quasienergy", "mean_energy"])?;
        for p in &self.points {
            for l in 0..p.labels.len() {
                let s = p.state(l);
                w.write_record([
                    fmt(p.amplitude),
                    l.to_string(),
                    s.parity.as_str().to_string(),
                    fmt(s.quasienergy),
                    fmt(s.mean_energy),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
