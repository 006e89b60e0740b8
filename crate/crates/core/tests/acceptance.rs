//! Acceptance suite: one PASS/FAIL line per primary criterion.
//!
//! Run with `cargo test -p ddw-core --test acceptance`. Expensive intermediate
//! results (H0 basis, amplitude sweep, crossing fit) are shared between criteria.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ddw_core::basis::{position_matrix, solve_h0, BasisSettings, H0Spectrum};
use ddw_core::classical::{determinant, period_map_jacobian, stroboscopic_orbit, visits_both_wells, PhasePoint};
use ddw_core::dissipation::{
    asymptotic_state, decoherence_time, propagate_rwa, purity_by_beats, relaxation_time, DensityMatrix, KernelKind,
};
use ddw_core::floquet::{
    detect_crossings, reduce_quasienergy, solve_floquet, sweep_amplitude, wrapped_difference, CrossingKind,
    CrossingReport, CrossingSettings, FloquetSettings, Sweep, SweepSettings,
};
use ddw_core::signal::spectral_peaks;
use ddw_core::three_state::{
    eigensystem, fit_from_spectrum, locate_crossing_center, propagate_numerically, tunneling_probabilities,
    ThreeStateFit, ThreeStateParams,
};
use ddw_core::tunneling::{crossing_samples, CrossingTriple, TunnelingSetup};
use ddw_core::{BathParams, Parity, SystemParams};

const AVOIDED_F: f64 = 0.015029;
const EXACT_F: f64 = 0.013;
const RETAINED: usize = 20;

type Outcome = Result<(bool, String), String>;

struct Context {
    h0: OnceLock<H0Spectrum>,
    sweep: OnceLock<Sweep>,
    crossings: OnceLock<Vec<CrossingReport>>,
    fit: OnceLock<ThreeStateFit>,
}

impl Context {
    fn params() -> SystemParams {
        SystemParams::default()
    }

    fn h0(&self) -> &H0Spectrum {
        self.h0.get_or_init(|| solve_h0(&Self::params(), &BasisSettings::default()).expect("H0 basis"))
    }

    fn sweep(&self) -> &Sweep {
        self.sweep.get_or_init(|| {
            let grid: Vec<f64> = (0..=40).map(|i| 0.010 + 2e-4 * i as f64).collect();
            sweep_amplitude(self.h0(), &Self::params(), &grid, &SweepSettings::default()).expect("sweep")
        })
    }

    fn crossings(&self) -> &[CrossingReport] {
        self.crossings.get_or_init(|| detect_crossings(self.sweep(), &CrossingSettings::default()).expect("crossings"))
    }

    fn avoided(&self) -> Option<&CrossingReport> {
        self.crossings().iter().find(|c| {
            c.kind == CrossingKind::Avoided && c.parities == (Parity::Odd, Parity::Odd) && near(c.amplitude, AVOIDED_F)
        })
    }

    fn exact(&self) -> Option<&CrossingReport> {
        self.crossings().iter().find(|c| c.kind == CrossingKind::Exact && near(c.amplitude, EXACT_F))
    }

    fn fit(&self) -> &ThreeStateFit {
        self.fit.get_or_init(|| {
            let center = self.avoided().map_or(AVOIDED_F, |c| c.amplitude);
            let samples = crossing_samples(self.sweep(), self.triple(), (center - 8e-4, center + 8e-4));
            fit_from_spectrum(&samples).expect("three-state fit")
        })
    }

    fn triple(&self) -> CrossingTriple {
        match self.avoided() {
            Some(c) => CrossingTriple { even: 0, odd: c.labels.0.min(c.labels.1), chaotic: c.labels.0.max(c.labels.1) },
            None => CrossingTriple::DEFAULT,
        }
    }

    fn setup(&self, f: f64) -> Result<TunnelingSetup, String> {
        let point = self.sweep().point_at(f).map_err(|e| e.to_string())?;
        TunnelingSetup::from_point(&point, position_matrix(self.h0()), self.triple(), RETAINED).map_err(|e| e.to_string())
    }
}

fn near(f: f64, target: f64) -> bool {
    (f / target - 1.0).abs() <= 0.10
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn undriven_reduction(_: &Context) -> Outcome {
    let p = Context::params();
    let h0 = solve_h0(&p, &BasisSettings::default()).map_err(|e| e.to_string())?;
    let spec = solve_floquet(&h0, &p, &FloquetSettings::default()).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let mut multi = 0;
    for (k, s) in spec.states.iter().enumerate() {
        let (eps, _) = reduce_quasienergy(h0.energies()[k], p.frequency());
        worst = worst.max(rel(s.quasienergy, eps).min((s.quasienergy - eps).abs() / h0.energies()[k].abs()));
        if s.components.sideband_weights().filter(|&(_, w)| w != 0.0).count() != 1 {
            multi += 1;
        }
    }
    Ok((worst < 1e-8 && multi == 0, format!("max relative deviation {worst:.2e}, states with >1 Fourier block: {multi}")))
}

fn three_state_oracle(_: &Context) -> Outcome {
    let base = ThreeStateParams::new(1.2e-5, 0.0, 1.2e-4).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for j in -10..=10 {
        let p = base.with_detuning(j as f64 * base.coupling);
        let e = eigensystem(&p);
        let freqs = [(e.upper - e.lower).abs(), (e.upper - e.even).abs(), (e.lower - e.even).abs()];
        let slowest = freqs.iter().cloned().filter(|&f| f > 1e-12).fold(f64::INFINITY, f64::min);
        let span = 10.0 * 2.0 * PI / slowest;
        for i in 0..=400 {
            let t = span * i as f64 / 400.0;
            let (a, b) = (tunneling_probabilities(&p, t), propagate_numerically(&p, t));
            worst = worst.max((a.right - b.right).abs()).max((a.left - b.left).abs()).max((a.chaotic - b.chaotic).abs());
        }
    }
    let center = locate_crossing_center(&base, (-4.0 * base.splitting, 4.0 * base.splitting), 4001).map_err(|e| e.to_string())?;
    Ok((
        worst < 1e-10,
        format!(
            "max deviation {worst:.2e}; two-frequency point at Δc = {:.3}Δ (stated −Δ/2 gives {} frequencies)",
            center.numerical / base.splitting,
            center.count_at_stated
        ),
    ))
}

fn crossing_reproduction(ctx: &Context) -> Outcome {
    let sweep = ctx.sweep();
    let avoided: Vec<_> = ctx
        .crossings()
        .iter()
        .filter(|c| c.kind == CrossingKind::Avoided && c.parities == (Parity::Odd, Parity::Odd) && near(c.amplitude, AVOIDED_F))
        .collect();
    let exact: Vec<_> =
        ctx.crossings().iter().filter(|c| c.kind == CrossingKind::Exact && near(c.amplitude, EXACT_F)).collect();
    let (Some(a), Some(x)) = (avoided.first(), exact.first()) else {
        return Ok((false, format!("crossings found: {:?}", ctx.crossings())));
    };
    let (lo, hi) = (a.labels.0.min(a.labels.1), a.labels.0.max(a.labels.1));
    let (first, last) = (&sweep.points[0], sweep.points.last().unwrap());
    let exchanged = first.state(lo).mean_energy < first.state(hi).mean_energy
        && last.state(lo).mean_energy > last.state(hi).mean_energy;
    let pass = avoided.len() == 1 && exact.len() == 1 && exchanged && sweep.continuity_gaps.is_empty();
    Ok((
        pass,
        format!(
            "avoided F = {:.6} (labels {lo}/{hi}, gap {:.3e}), exact F = {:.6}; mean energy of label {lo}: {:.3} -> {:.3}, label {hi}: {:.3} -> {:.3}",
            a.amplitude,
            a.min_gap.unwrap_or(f64::NAN),
            x.amplitude,
            first.state(lo).mean_energy,
            last.state(lo).mean_energy,
            first.state(hi).mean_energy,
            last.state(hi).mean_energy
        ),
    ))
}

struct Beats {
    peaks: Vec<f64>,
    mismatch: f64,
    max_chaotic: f64,
}

fn coherent_beats(setup: &TunnelingSetup, span: f64) -> Result<Beats, String> {
    let kernel = setup.kernel(&BathParams::decoupled(0.0), KernelKind::Moderate);
    let n = 4096;
    let dt = span / n as f64;
    let times: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
    let traj = propagate_rwa(&kernel, &setup.initial_state().map_err(|e| e.to_string())?, &times).map_err(|e| e.to_string())?;
    let (mut pr, mut pc) = (Vec::new(), 0.0f64);
    for s in &traj.states {
        let (r, _, c) = setup.projections.probabilities(s);
        pr.push(r);
        pc = pc.max(c);
    }
    let peaks = spectral_peaks(&pr, dt, 0.01).map_err(|e| e.to_string())?;
    let [e, o, c] = setup.triple;
    let eps = |i: usize| setup.states[i].quasienergy;
    let diffs = [(o, e), (c, e), (c, o)].map(|(a, b)| wrapped_difference(eps(a), eps(b), setup.omega).abs());
    let mismatch = peaks
        .iter()
        .map(|p| diffs.iter().map(|d| rel(p.frequency, *d)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    Ok(Beats { peaks: peaks.iter().map(|p| p.frequency).collect(), mismatch, max_chaotic: pc })
}

fn beats(ctx: &Context) -> Outcome {
    let off = ctx.setup(0.0145)?;
    let on = ctx.setup(AVOIDED_F)?;
    let delta = off.tunnel_splitting();
    let b_off = coherent_beats(&off, 10.0 * 2.0 * PI / delta)?;
    let fit = ctx.fit();
    let beta = eigensystem(&fit.params_at(AVOIDED_F)).mixing_angle;
    let expected_pc = 2.0 * beta.cos().powi(2) * beta.sin().powi(2);
    let fastest_on = on.tunnel_splitting().max(2.0 * PI / on.beat_period());
    let b_on = coherent_beats(&on, 10.0 * 2.0 * PI / on.tunnel_splitting().min(2.0 * PI / on.beat_period()))?;
    let dominant_off = b_off.peaks[0];
    let dominant_on = b_on.peaks[0];
    let pass = rel(dominant_off, delta) < 0.01
        && b_off.max_chaotic < 0.05
        && b_off.mismatch < 0.01
        && b_on.mismatch < 0.01
        && dominant_on > 5.0 * dominant_off
        && b_on.max_chaotic / expected_pc > 0.5
        && b_on.max_chaotic / expected_pc < 2.0;
    Ok((
        pass,
        format!(
            "F=0.0145: dominant {dominant_off:.4e} vs Δ {delta:.4e}, max P_c {:.3}; F=0.015029: peaks {:?} (fastest difference {fastest_on:.4e}), max P_c {:.3} vs 2cos²β sin²β = {expected_pc:.3}; worst frequency mismatch {:.2e}",
            b_off.max_chaotic,
            b_on.peaks.iter().map(|f| format!("{f:.4e}")).collect::<Vec<_>>(),
            b_on.max_chaotic,
            b_off.mismatch.max(b_on.mismatch)
        ),
    ))
}

fn conservation(ctx: &Context) -> Outcome {
    let setup = ctx.setup(AVOIDED_F)?;
    let bath = BathParams::new(1e-6, 1e-4).map_err(|e| e.to_string())?;
    let kernel = setup.kernel(&bath, KernelKind::Moderate);
    // ½(|R⟩⟨R| + |L⟩⟨L|) has no mixed-parity entries.
    let r = DensityMatrix::pure(&setup.projections.right).map_err(|e| e.to_string())?;
    let l = DensityMatrix::pure(&setup.projections.left).map_err(|e| e.to_string())?;
    let m = r.dim();
    let v: Vec<_> = r.to_vec().iter().zip(l.to_vec()).map(|(a, b)| 0.5 * (a + b)).collect();
    let s0 = DensityMatrix::from_vec(&v, m);
    let period = 2.0 * PI / setup.omega;
    let times: Vec<f64> = (1..=1000).map(|i| i as f64 * 1e3 * period).collect();
    let traj = propagate_rwa(&kernel, &s0, &times).map_err(|e| e.to_string())?;
    let d = &traj.diagnostics;
    Ok((
        d.trace_drift < 1e-9 && d.hermiticity_drift < 1e-9 && d.offblock_leakage < 1e-12,
        format!(
            "10^6 periods: trace drift {:.2e}, Hermiticity drift {:.2e}, off-block leakage {:.2e}, min eigenvalue {:.2e}",
            d.trace_drift, d.hermiticity_drift, d.offblock_leakage, d.min_eigenvalue
        ),
    ))
}

fn detailed_balance(ctx: &Context) -> Outcome {
    let p = Context::params();
    let spec = solve_floquet(ctx.h0(), &p, &FloquetSettings::default()).map_err(|e| e.to_string())?;
    let states: Vec<_> = spec.states[..RETAINED].iter().collect();
    let xc = ddw_core::dissipation::x_fourier_coefficients(&states, position_matrix(ctx.h0())).map_err(|e| e.to_string())?;
    let e = ctx.h0().energies();
    let mut rate_err = 0.0f64;
    let mut weight_err = 0.0f64;
    let mut negligible = 0.0f64;
    for t in [1e-4, 1e-2] {
        let bath = BathParams::new(1e-6, t).map_err(|e| e.to_string())?;
        let k = ddw_core::dissipation::assemble_rwa_kernel(&states, &xc, &bath, spec.omega(), KernelKind::Moderate);
        for a in 0..RETAINED {
            for c in 0..RETAINED {
                let (fw, bw) = (k.transition_rate(a, c), k.transition_rate(c, a));
                if a != c && fw > 0.0 && bw > 0.0 {
                    rate_err = rate_err.max(rel(fw / bw, (-(e[a] - e[c]) / t).exp()));
                }
            }
        }
        let pop = asymptotic_state(&k).map_err(|e| e.to_string())?.populations();
        for a in 1..RETAINED {
            let want = (-(e[a] - e[0]) / t).exp();
            if want > 1e-12 {
                weight_err = weight_err.max(rel(pop[a] / pop[0], want));
            } else {
                negligible = negligible.max(pop[a].abs());
            }
        }
    }
    Ok((
        rate_err < 1e-6 && weight_err < 1e-6 && negligible < 1e-12,
        format!("rate-ratio error {rate_err:.2e}, Boltzmann weight-ratio error {weight_err:.2e}, largest suppressed population {negligible:.1e}"),
    ))
}

fn driven_attractor(ctx: &Context) -> Outcome {
    let setup = ctx.setup(0.013)?;
    let bath = BathParams::new(1e-6, 0.0).map_err(|e| e.to_string())?;
    let s = asymptotic_state(&setup.kernel(&bath, KernelKind::Moderate)).map_err(|e| e.to_string())?;
    let pop = s.populations();
    let [e, o, _] = setup.triple;
    let purity = s.purity();
    let pass = (pop[e] - 0.5).abs() <= 0.05 && (pop[o] - 0.5).abs() <= 0.05 && (purity - 0.5).abs() <= 0.1;
    Ok((pass, format!("k_BT = 0: doublet populations {:.3} / {:.3}, tr ρ∞² = {purity:.3}", pop[e], pop[o])))
}

const ATTRACTOR_TEMPERATURES: [f64; 4] = [1e-6, 1e-4, 1e-3, 1e-2];

fn attractor_purities(ctx: &Context) -> Result<Vec<(f64, f64, f64)>, String> {
    let setup = ctx.setup(AVOIDED_F)?;
    ATTRACTOR_TEMPERATURES
        .iter()
        .map(|&t| {
            let bath = BathParams::new(1e-6, t).map_err(|e| e.to_string())?;
            let full = asymptotic_state(&setup.kernel(&bath, KernelKind::Moderate)).map_err(|e| e.to_string())?;
            let three = asymptotic_state(&setup.three_level_kernel(&bath, KernelKind::Moderate)).map_err(|e| e.to_string())?;
            Ok((t, full.purity(), three.purity()))
        })
        .collect()
}

fn coherence_incoherence(ctx: &Context) -> Outcome {
    let b = ctx.fit().coupling;
    let rows = attractor_purities(ctx)?;
    let cold = rows.iter().filter(|r| r.0 < 0.1 * b).all(|r| r.1 > 0.8);
    let hot = rows.iter().filter(|r| r.0 > 10.0 * b).all(|r| r.1 < 0.4);
    let has_both = rows.iter().any(|r| r.0 < 0.1 * b) && rows.iter().any(|r| r.0 > 10.0 * b);
    let monotone = rows.windows(2).all(|w| w[1].1 <= w[0].1);
    Ok((
        cold && hot && has_both && monotone,
        format!(
            "b = {b:.3e}; tr ρ∞² at k_BT {}",
            rows.iter().map(|r| format!("{:.0e}: {:.3}", r.0, r.1)).collect::<Vec<_>>().join(", ")
        ),
    ))
}

fn three_level_failure(ctx: &Context) -> Outcome {
    let rows = attractor_purities(ctx)?;
    let worst = rows.iter().map(|r| (r.1 - r.2).abs()).fold(0.0, f64::max);
    Ok((
        worst > 0.1,
        format!(
            "full vs three-level tr ρ∞²: {}",
            rows.iter().map(|r| format!("{:.0e}: {:.3}/{:.3}", r.0, r.1, r.2)).collect::<Vec<_>>().join(", ")
        ),
    ))
}

fn time_scales(ctx: &Context) -> Outcome {
    let avoided = ctx.avoided().map(|c| c.amplitude).ok_or("no avoided crossing detected")?;
    let exact = ctx.exact().map(|c| c.amplitude).ok_or("no exact crossing detected")?;
    let temps = [1e-4, 1e-3, 1e-2];
    let mut rows = Vec::new();
    for f in [avoided, exact] {
        let setup = ctx.setup(f)?;
        for t in temps {
            let bath = BathParams::new(1e-6, t).map_err(|e| e.to_string())?;
            let k = setup.kernel(&bath, KernelKind::Moderate);
            let trace = purity_by_beats(&k, &setup.initial_state().map_err(|e| e.to_string())?, setup.beat_period(), 200_000)
                .map_err(|e| e.to_string())?;
            let td = decoherence_time(&trace).map_err(|e| e.to_string())?.ok_or("no damping")?;
            let tr = relaxation_time(&k).map_err(|e| e.to_string())?;
            rows.push((f, t, td, tr));
        }
    }
    let center: Vec<f64> = rows[..3].iter().map(|r| r.2).collect();
    let spread = center.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / center.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
    let increasing = rows[3..].windows(2).all(|w| w[1].2 > w[0].2);
    let ordered = rows.iter().all(|r| r.3 >= r.2);
    Ok((
        spread < 0.2 && increasing && ordered,
        format!(
            "avoided F={avoided:.6}: t_decoh spread {:.1}%; exact F={exact:.6}: t_decoh increasing = {increasing}; t_relax ≥ t_decoh everywhere = {ordered}; (F, k_BT, t_decoh, t_relax): {}",
            100.0 * spread,
            rows.iter().map(|r| format!("({:.5}, {:.0e}, {:.3e}, {:.3e})", r.0, r.1, r.2, r.3)).collect::<Vec<_>>().join(" ")
        ),
    ))
}

fn classical_portrait(_: &Context) -> Outcome {
    let p = SystemParams::from_rescaled(4.0, 0.982, 0.015).map_err(|e| e.to_string())?;
    let bottom = stroboscopic_orbit(PhasePoint::new(p.well_position(), 0.0, 0.0), 10_000, &p).map_err(|e| e.to_string())?;
    let confined = bottom.iter().all(|s| s.x > 0.0);
    let layer = stroboscopic_orbit(PhasePoint::new(0.5, 0.0, 0.0), 10_000, &p).map_err(|e| e.to_string())?;
    let both = visits_both_wells(&layer);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let s = PhasePoint::new(rng.gen_range(-8.0..8.0), rng.gen_range(-1.0..1.0), 0.0);
        let j = period_map_jacobian(s, &p, 1e-4).map_err(|e| e.to_string())?;
        worst = worst.max((determinant(&j) - 1.0).abs());
    }
    Ok((
        confined && both && worst < 1e-8,
        format!("well-bottom orbit confined: {confined}; separatrix orbit visits both wells: {both}; max |det J − 1| = {worst:.2e}"),
    ))
}

fn main() -> ExitCode {
    let ctx = Context { h0: OnceLock::new(), sweep: OnceLock::new(), crossings: OnceLock::new(), fit: OnceLock::new() };
    let criteria: [(u32, &str, fn(&Context) -> Outcome); 11] = [
        (1, "undriven reduction", undriven_reduction),
        (2, "three-state oracle equivalence", three_state_oracle),
        (3, "crossing reproduction", crossing_reproduction),
        (4, "coherent beats", beats),
        (5, "master-equation conservation laws", conservation),
        (6, "detailed balance", detailed_balance),
        (7, "driven attractor off crossing", driven_attractor),
        (8, "chaos-induced coherence/incoherence", coherence_incoherence),
        (9, "three-level-model failure", three_level_failure),
        (10, "time-scale phenomenology", time_scales),
        (11, "classical portrait", classical_portrait),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match run(&ctx) {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {id:>2} ({name}): {detail} [{:.1} s]",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("{failed} criteria failed");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
