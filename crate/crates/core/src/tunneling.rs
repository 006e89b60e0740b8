//! Localized initial states and dissipative observables around a singlet-doublet crossing.

use std::f64::consts::PI;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::dissipation::{
    asymptotic_state, assemble_rwa_kernel, decoherence_time, purity_by_beats, relaxation_time, x_fourier_coefficients,
    DensityMatrix, DissipationSummary, DissipativeKernel, KernelKind, PeriodicGenerator, TunnelingProjections,
    XCoefficients,
};
use crate::error::{Error, Result};
use crate::floquet::{
    localized_superpositions, position_at_zero, wrapped_difference, FloquetSpectrum, FloquetState, LocalizedStates, Sweep, SweepPoint,
};
use crate::three_state::CrossingSample;
use crate::params::{BathParams, Parity};

/// Continuity labels of the crossing partners: the even member of the ground doublet,
/// its odd partner and the chaotic singlet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossingTriple {
    pub even: usize,
    pub odd: usize,
    pub chaotic: usize,
}

impl CrossingTriple {
    /// The labels at the default parameters, as found by the crossing detector.
    pub const DEFAULT: Self = Self { even: 0, odd: 1, chaotic: 13 };

    /// Spectrum indices of the triple at a sweep point.
    pub fn resolve(&self, point: &SweepPoint) -> Result<[usize; 3]> {
        let get = |l: usize| point.labels.get(l).copied().ok_or(Error::LabelNotFound(l));
        Ok([get(self.even)?, get(self.odd)?, get(self.chaotic)?])
    }
}

/// Picks the crossing partners from a single spectrum, among the lowest `within`
/// states: the lowest even state, the odd state with the largest x matrix
/// element to it, and the other odd state nearest to that one in quasienergy.
pub fn select_triple(spectrum: &FloquetSpectrum, x: &Mat<f64>, within: usize) -> Result<[usize; 3]> {
    let within = within.min(spectrum.len());
    let states = &spectrum.states[..within];
    let of_parity = |p: Parity| (0..within).filter(move |&j| states[j].parity == p);
    let e = of_parity(Parity::Even).next().ok_or(Error::LabelNotFound(0))?;
    let o = of_parity(Parity::Odd)
        .map(|j| (j, position_at_zero(&states[e].components, &states[j].components, x).abs()))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Error::LabelNotFound(1))?
        .0;
    let distance = |j: usize| wrapped_difference(states[j].quasienergy, states[o].quasienergy, spectrum.omega()).abs();
    let c = of_parity(Parity::Odd)
        .filter(|&j| j != o)
        .min_by(|&a, &b| distance(a).total_cmp(&distance(b)))
        .ok_or(Error::LabelNotFound(2))?;
    Ok([e, o, c])
}

/// Sweep points inside `window` in the form expected by the three-state fit.
pub fn crossing_samples(sweep: &Sweep, triple: CrossingTriple, window: (f64, f64)) -> Vec<CrossingSample> {
    let w = sweep.params.frequency();
    sweep
        .points
        .iter()
        .filter(|p| p.amplitude >= window.0 && p.amplitude <= window.1)
        .map(|p| {
            let (e, o, c) = (p.state(triple.even), p.state(triple.odd), p.state(triple.chaotic));
            CrossingSample {
                amplitude: p.amplitude,
                odd_relative: (
                    wrapped_difference(o.quasienergy, e.quasienergy, w),
                    wrapped_difference(c.quasienergy, e.quasienergy, w),
                ),
                mean_energies: (e.mean_energy, o.mean_energy, c.mean_energy),
            }
        })
        .collect()
}

/// The retained Floquet states together with everything needed to propagate a
/// right-localized initial state.
#[derive(Debug, Clone)]
pub struct TunnelingSetup {
    pub amplitude: f64,
    pub omega: f64,
    pub states: Vec<FloquetState>,
    pub x: XCoefficients,
    /// Positions of (even, odd, chaotic) within `states`.
    pub triple: [usize; 3],
    pub localized: LocalizedStates,
    pub projections: TunnelingProjections,
}

impl TunnelingSetup {
    pub fn from_point(point: &SweepPoint, x: &Mat<f64>, triple: CrossingTriple, retained: usize) -> Result<Self> {
        let idx = triple.resolve(point)?;
        Self::from_spectrum(&point.spectrum, x, idx, retained, point.amplitude)
    }

    /// `indices` are spectrum indices of (even, odd, chaotic); the `retained` states of
    /// lowest mean energy are kept and must contain all three.
    pub fn from_spectrum(
        spectrum: &FloquetSpectrum,
        x: &Mat<f64>,
        indices: [usize; 3],
        retained: usize,
        amplitude: f64,
    ) -> Result<Self> {
        if retained > spectrum.len() {
            return Err(Error::Truncation { requested: retained, available: spectrum.len() });
        }
        if let Some(&i) = indices.iter().find(|&&i| i >= retained) {
            return Err(Error::Truncation { requested: i + 1, available: retained });
        }
        let states: Vec<FloquetState> = spectrum.states[..retained].to_vec();
        let refs: Vec<&FloquetState> = states.iter().collect();
        let xc = x_fourier_coefficients(&refs, x)?;
        let [e, o, c] = indices;
        let localized = localized_superpositions(&states[e], &[&states[o], &states[c]], x)?;
        let projections = TunnelingProjections::new(retained, e, &[o, c], &localized)?;
        Ok(Self { amplitude, omega: spectrum.omega(), states, x: xc, triple: indices, localized, projections })
    }

    pub fn state_refs(&self) -> Vec<&FloquetState> {
        self.states.iter().collect()
    }

    pub fn kernel(&self, bath: &BathParams, kind: KernelKind) -> DissipativeKernel {
        assemble_rwa_kernel(&self.state_refs(), &self.x, bath, self.omega, kind)
    }

    /// Kernel over the crossing triple only.
    pub fn three_level_kernel(&self, bath: &BathParams, kind: KernelKind) -> DissipativeKernel {
        let refs: Vec<&FloquetState> = self.triple.iter().map(|&i| &self.states[i]).collect();
        assemble_rwa_kernel(&refs, &self.x.restricted(&self.triple), bath, self.omega, kind)
    }

    pub fn periodic_generator(&self, bath: &BathParams) -> PeriodicGenerator {
        PeriodicGenerator::new(&self.state_refs(), &self.x, bath, self.omega)
    }

    /// |ψ_R⟩⟨ψ_R| at t = 0.
    pub fn initial_state(&self) -> Result<DensityMatrix> {
        DensityMatrix::pure(&self.projections.right)
    }

    /// 2π over the quasienergy difference of the two odd states.
    pub fn beat_period(&self) -> f64 {
        let [_, o, c] = self.triple;
        2.0 * PI / wrapped_difference(self.states[c].quasienergy, self.states[o].quasienergy, self.omega).abs()
    }

    /// Quasienergy splitting of the regular doublet.
    pub fn tunnel_splitting(&self) -> f64 {
        let [e, o, _] = self.triple;
        wrapped_difference(self.states[o].quasienergy, self.states[e].quasienergy, self.omega).abs()
    }
}

/// t_decoh, t_relax and the attractor purity at one bath setting.
pub fn dissipation_summary(setup: &TunnelingSetup, bath: &BathParams, max_beats: usize) -> Result<DissipationSummary> {
    let kernel = setup.kernel(bath, KernelKind::Moderate);
    let trace = purity_by_beats(&kernel, &setup.initial_state()?, setup.beat_period(), max_beats)?;
    let t_decoh = decoherence_time(&trace)?;
    let t_relax = match relaxation_time(&kernel) {
        Ok(t) => Some(t),
        Err(Error::NoRelaxation { .. }) => None,
        Err(e) => return Err(e),
    };
    let purity = if bath.damping() > 0.0 { Some(asymptotic_state(&kernel)?.purity()) } else { None };
    Ok(DissipationSummary {
        amplitude: setup.amplitude,
        temperature: bath.temperature(),
        damping: bath.damping(),
        decoherence_time: t_decoh,
        relaxation_time: t_relax,
        attractor_purity: purity,
    })
}
