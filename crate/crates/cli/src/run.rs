use std::f64::consts::PI;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

use ddw_core::basis::{convergence_change, position_matrix, solve_h0, BasisSettings, H0Spectrum};
use ddw_core::classical::{portrait, seed_grid, write_portrait_csv};
use ddw_core::dissipation::{
    asymptotic_state, decoherence_time, propagate_periodic, propagate_rwa, purity_by_beats, relaxation_time,
    write_attractor_csv, write_trajectory_csv, KernelKind, Trajectory,
};
use ddw_core::floquet::{
    detect_crossings, solve_floquet, sweep_amplitude, wrapped_difference, CrossingKind, CrossingSettings,
    FloquetSettings, FloquetSpectrum, SweepSettings,
};
use ddw_core::signal::spectral_peaks;
use ddw_core::three_state::fit_from_spectrum;
use ddw_core::tunneling::{crossing_samples, select_triple, CrossingTriple, TunnelingSetup};
use ddw_core::{BathParams, Parity, SystemParams};

use crate::config::{Generator, ScenarioConfig, Task};
use crate::error::{CliError, Result};

trait Numerics<T> {
    fn during(self, task: Task) -> Result<T>;
}

impl<T> Numerics<T> for ddw_core::Result<T> {
    fn during(self, task: Task) -> Result<T> {
        self.map_err(|source| CliError::Numerics { task: task.name(), source })
    }
}

#[derive(Serialize)]
struct ArtifactEntry {
    file: String,
    sha256: String,
}

/// Collects artifacts in memory order and writes the manifest last.
struct Artifacts {
    dir: PathBuf,
    task: Task,
    hash: String,
    entries: Vec<ArtifactEntry>,
}

impl Artifacts {
    fn new(dir: PathBuf, task: Task, hash: String) -> Result<Self> {
        std::fs::create_dir_all(&dir).map_err(|source| CliError::Output { path: dir.clone(), source })?;
        Ok(Self { dir, task, hash, entries: Vec::new() })
    }

    fn comment(&self) -> String {
        format!("config={}", self.hash)
    }

    fn write(&mut self, name: &str, bytes: Vec<u8>) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, &bytes).map_err(|source| CliError::Output { path, source })?;
        let sha256 = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        self.entries.push(ArtifactEntry { file: name.to_string(), sha256 });
        log::info!("wrote {}", self.dir.join(name).display());
        Ok(())
    }

    fn csv(&mut self, name: &str, emit: impl FnOnce(&mut Vec<u8>, &str) -> ddw_core::Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        emit(&mut buf, &self.comment()).during(self.task)?;
        self.write(name, buf)
    }

    fn json(&mut self, name: &str, schema: &str, body: Value) -> Result<()> {
        let mut doc = json!({ "schema": format!("{schema}/v{}", ddw_core::export::CSV_SCHEMA_VERSION), "config_hash": self.hash });
        if let (Some(d), Value::Object(b)) = (doc.as_object_mut(), body) {
            d.extend(b);
        }
        let mut bytes = serde_json::to_vec_pretty(&doc)?;
        bytes.push(b'\n');
        self.write(name, bytes)
    }

    fn finish(self, config: &ScenarioConfig) -> Result<PathBuf> {
        let created = OffsetDateTime::now_utc().format(&Rfc3339).unwrap_or_default();
        let manifest = json!({
            "tool": "ddw",
            "version": env!("CARGO_PKG_VERSION"),
            "task": self.task.name(),
            "config_hash": self.hash,
            "created": created,
            "config": config,
            "artifacts": self.entries,
        });
        let path = self.dir.join("manifest.json");
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        std::fs::write(&path, bytes).map_err(|source| CliError::Output { path: path.clone(), source })?;
        Ok(path)
    }
}

fn system(cfg: &ScenarioConfig) -> Result<SystemParams> {
    let s = &cfg.system;
    SystemParams::from_rescaled(s.barrier_height, s.omega, s.amplitude).during(cfg.task)
}

fn bath(cfg: &ScenarioConfig, temperature: f64) -> Result<BathParams> {
    BathParams::new(cfg.bath.damping, temperature).during(cfg.task)
}

fn basis(cfg: &ScenarioConfig, params: &SystemParams) -> Result<H0Spectrum> {
    let t = &cfg.truncation;
    let settings = BasisSettings { computational_size: t.computational, retained: t.retained, ..Default::default() };
    solve_h0(params, &settings).during(cfg.task)
}

fn floquet_settings(cfg: &ScenarioConfig) -> FloquetSettings {
    FloquetSettings { sidebands: cfg.truncation.sidebands, ..Default::default() }
}

fn spectrum_at(cfg: &ScenarioConfig) -> Result<(H0Spectrum, FloquetSpectrum)> {
    let p = system(cfg)?;
    let h0 = basis(cfg, &p)?;
    let spectrum = solve_floquet(&h0, &p, &floquet_settings(cfg)).during(cfg.task)?;
    Ok((h0, spectrum))
}

fn tunneling_setup(cfg: &ScenarioConfig) -> Result<TunnelingSetup> {
    let (h0, spectrum) = spectrum_at(cfg)?;
    let x = position_matrix(&h0);
    let m = cfg.truncation.states;
    let triple = match cfg.propagation.triple {
        Some(t) => t,
        None => select_triple(&spectrum, x, m).during(cfg.task)?,
    };
    log::info!("crossing partners (even, odd, chaotic) = {triple:?}");
    TunnelingSetup::from_spectrum(&spectrum, x, triple, m, cfg.system.amplitude).during(cfg.task)
}

/// Smallest quasienergy gap between the crossing partners.
fn partner_gap(setup: &TunnelingSetup) -> f64 {
    let [e, o, c] = setup.triple.map(|i| setup.states[i].quasienergy);
    [(e, o), (o, c), (e, c)].iter().map(|&(a, b)| wrapped_difference(a, b, setup.omega).abs()).fold(f64::INFINITY, f64::min)
}

fn time_grid(cfg: &ScenarioConfig, setup: &TunnelingSetup) -> Vec<f64> {
    let p = &cfg.propagation;
    let t_end = p.t_end.unwrap_or(p.beats * setup.beat_period());
    let n = p.samples - 1;
    (0..=n).map(|i| t_end * i as f64 / n as f64).collect()
}

fn partners_json(setup: &TunnelingSetup) -> Value {
    let [e, o, c] = setup.triple;
    let describe = |i: usize| {
        let s = &setup.states[i];
        json!({ "index": i, "parity": s.parity, "quasienergy": s.quasienergy, "mean_energy": s.mean_energy })
    };
    json!({ "even": describe(e), "odd": describe(o), "chaotic": describe(c) })
}

fn diagnostics_json(t: &Trajectory) -> Value {
    let d = &t.diagnostics;
    json!({
        "trace_drift": d.trace_drift,
        "hermiticity_drift": d.hermiticity_drift,
        "offblock_leakage": d.offblock_leakage,
        "min_eigenvalue": d.min_eigenvalue,
        "warnings": d.warnings,
    })
}

fn run_spectrum(cfg: &ScenarioConfig, out: &mut Artifacts) -> Result<()> {
    let (h0, spectrum) = spectrum_at(cfg)?;
    let p = system(cfg)?;
    let t = &cfg.truncation;
    let change = convergence_change(
        &p,
        &BasisSettings { computational_size: t.computational, retained: t.retained, ..Default::default() },
    )
    .during(cfg.task)?;
    let doublets = h0.states_below_barrier() / 2;
    let splittings: Vec<f64> = (0..doublets).map(|j| h0.doublet_splitting(j)).collect();
    let triple = select_triple(&spectrum, position_matrix(&h0), t.states).ok();
    out.csv("h0_spectrum.csv", |w, c| h0.write_csv(w, Some(c)))?;
    out.csv("floquet_spectrum.csv", |w, c| spectrum.write_csv(w, Some(c)))?;
    out.json(
        "spectrum.json",
        "spectrum",
        json!({
            "states_below_barrier": h0.states_below_barrier(),
            "doublet_splittings": splittings,
            "h0_convergence_change": change,
            "crossing_partners": triple,
            "floquet_warnings": spectrum.warnings,
        }),
    )
}

fn run_sweep(cfg: &ScenarioConfig, out: &mut Artifacts) -> Result<()> {
    let grid = cfg.sweep.grid();
    let p = system(cfg)?.with_rescaled(grid[0]).during(cfg.task)?;
    let h0 = basis(cfg, &p)?;
    let settings = SweepSettings { tracked: cfg.sweep.tracked, floquet: floquet_settings(cfg), ..Default::default() };
    let sweep = sweep_amplitude(&h0, &p, &grid, &settings).during(cfg.task)?;
    let crossings = detect_crossings(&sweep, &CrossingSettings::default()).during(cfg.task)?;

    let first = &sweep.points[0];
    let even = (0..sweep.tracked()).find(|&l| first.state(l).parity == Parity::Even);
    let fit = crossings
        .iter()
        .find(|c| c.kind == CrossingKind::Avoided && c.parities == (Parity::Odd, Parity::Odd))
        .zip(even)
        .and_then(|(c, even)| {
            let (a, b) = c.labels;
            let triple = CrossingTriple { even, odd: a.min(b), chaotic: a.max(b) };
            let w = cfg.sweep.fit_window;
            let samples = crossing_samples(&sweep, triple, (c.amplitude - w, c.amplitude + w));
            match fit_from_spectrum(&samples) {
                Ok(fit) => Some(json!({ "labels": triple, "fit": fit, "gap": fit.gap() })),
                Err(e) => {
                    log::warn!("three-state fit around F = {}: {e}", c.amplitude);
                    None
                }
            }
        });

    out.csv("sweep.csv", |w, c| sweep.write_csv(w, Some(c)))?;
    out.json(
        "crossings.json",
        "crossings",
        json!({ "crossings": crossings, "continuity_gaps": sweep.continuity_gaps, "three_state": fit }),
    )
}

fn run_tunnel(cfg: &ScenarioConfig, out: &mut Artifacts) -> Result<()> {
    let setup = tunneling_setup(cfg)?;
    let times = time_grid(cfg, &setup);
    let kernel = setup.kernel(&BathParams::decoupled(0.0), KernelKind::Moderate);
    let traj = propagate_rwa(&kernel, &setup.initial_state().during(cfg.task)?, &times).during(cfg.task)?;
    let right: Vec<f64> = traj.states.iter().map(|s| setup.projections.probabilities(s).0).collect();
    let peaks = spectral_peaks(&right, times[1] - times[0], 0.05).during(cfg.task)?;
    out.csv("tunnel.csv", |w, c| write_trajectory_csv(w, Some(c), &traj, &setup.projections))?;
    out.json(
        "tunnel.json",
        "tunnel",
        json!({
            "amplitude": setup.amplitude,
            "partners": partners_json(&setup),
            "x_right": setup.localized.x_right,
            "tunnel_splitting": setup.tunnel_splitting(),
            "beat_period": setup.beat_period(),
            "peaks": peaks.iter().map(|p| json!({ "frequency": p.frequency, "relative_amplitude": p.relative_amplitude })).collect::<Vec<_>>(),
            "diagnostics": diagnostics_json(&traj),
        }),
    )
}

fn run_dissipate(cfg: &ScenarioConfig, out: &mut Artifacts) -> Result<()> {
    let setup = tunneling_setup(cfg)?;
    let bath = bath(cfg, cfg.bath.temperature)?;
    let sigma0 = setup.initial_state().during(cfg.task)?;
    let times = time_grid(cfg, &setup);
    let kernel = setup.kernel(&bath, KernelKind::Moderate);
    let traj = match cfg.propagation.generator {
        Generator::Rwa => propagate_rwa(&kernel, &sigma0, &times).during(cfg.task)?,
        Generator::Periodic => {
            let steps = cfg.propagation.steps_per_period;
            let period = 2.0 * PI / setup.omega;
            let periods = (times[times.len() - 1] / period).ceil().max(1.0) as usize;
            let every = (periods * steps / (times.len() - 1)).max(1);
            propagate_periodic(&setup.periodic_generator(&bath), &sigma0, periods, steps, every).during(cfg.task)?
        }
    };

    let mut warnings = bath.weak_coupling_warnings(Some(partner_gap(&setup)));
    let trace = purity_by_beats(&kernel, &sigma0, setup.beat_period(), cfg.propagation.max_beats).during(cfg.task)?;
    let t_decoh = match decoherence_time(&trace) {
        Ok(t) => t,
        Err(ddw_core::Error::InsufficientPropagation { reached }) => {
            warnings.push(format!("purity only fell to {reached:.4} within {} beats", cfg.propagation.max_beats));
            None
        }
        Err(e) => return Err(CliError::Numerics { task: cfg.task.name(), source: e }),
    };
    let t_relax = match relaxation_time(&kernel) {
        Ok(t) => Some(t),
        Err(ddw_core::Error::NoRelaxation { .. }) => None,
        Err(e) => return Err(CliError::Numerics { task: cfg.task.name(), source: e }),
    };
    let attractor = asymptotic_state(&kernel).during(cfg.task)?;
    for w in &warnings {
        log::warn!("{w}");
    }

    out.csv("trajectory.csv", |w, c| write_trajectory_csv(w, Some(c), &traj, &setup.projections))?;
    out.json(
        "dissipation.json",
        "dissipation",
        json!({
            "amplitude": setup.amplitude,
            "damping": bath.damping(),
            "temperature": bath.temperature(),
            "generator": cfg.propagation.generator,
            "partners": partners_json(&setup),
            "beat_period": setup.beat_period(),
            "decoherence_time": t_decoh,
            "relaxation_time": t_relax,
            "attractor_purity": attractor.purity(),
            "diagnostics": diagnostics_json(&traj),
            "warnings": warnings,
        }),
    )
}

fn run_attractor(cfg: &ScenarioConfig, out: &mut Artifacts) -> Result<()> {
    let setup = tunneling_setup(cfg)?;
    let refs = setup.state_refs();
    let labels: Vec<usize> = (0..refs.len()).collect();
    let [e, o, c] = setup.triple;
    let mut rows = Vec::new();
    for (i, &temp) in cfg.attractor.temperatures.iter().enumerate() {
        let bath = bath(cfg, temp)?;
        let full = asymptotic_state(&setup.kernel(&bath, KernelKind::Moderate)).during(cfg.task)?;
        let three = asymptotic_state(&setup.three_level_kernel(&bath, KernelKind::Moderate)).during(cfg.task)?;
        let file = format!("attractor_{i:02}.csv");
        out.csv(&file, |w, c| write_attractor_csv(w, Some(c), &refs, &labels, &full))?;
        let pop = full.populations();
        rows.push(json!({
            "temperature": temp,
            "purity": full.purity(),
            "three_level_purity": three.purity(),
            "partner_populations": [pop[e], pop[o], pop[c]],
            "file": file,
        }));
    }
    out.json(
        "attractor.json",
        "attractor",
        json!({ "amplitude": setup.amplitude, "damping": cfg.bath.damping, "partners": partners_json(&setup), "temperatures": rows }),
    )
}

fn run_classical(cfg: &ScenarioConfig, out: &mut Artifacts) -> Result<()> {
    let c = &cfg.classical;
    let seeds = seed_grid((c.x_range[0], c.x_range[1]), (c.p_range[0], c.p_range[1]), c.nx, c.np);
    let points = portrait(&seeds, c.periods, &system(cfg)?).during(cfg.task)?;
    out.csv("portrait.csv", |w, h| write_portrait_csv(w, Some(h), &points))
}

/// Runs the configured task and returns the manifest path.
pub fn run(cfg: &ScenarioConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let mut out = Artifacts::new(cfg.output_dir(), cfg.task, cfg.hash())?;
    match cfg.task {
        Task::Spectrum => run_spectrum(cfg, &mut out)?,
        Task::Sweep => run_sweep(cfg, &mut out)?,
        Task::Tunnel => run_tunnel(cfg, &mut out)?,
        Task::Dissipate => run_dissipate(cfg, &mut out)?,
        Task::Attractor => run_attractor(cfg, &mut out)?,
        Task::Classical => run_classical(cfg, &mut out)?,
    }
    out.finish(cfg)
}

#[derive(Debug, Default, Serialize)]
pub struct ValidationReport {
    pub config_hash: String,
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
}

/// Dry run: checks the configuration without propagating. Tasks that use the
/// bath solve one Floquet spectrum to compare γ with the partner gaps.
pub fn validate(cfg: &ScenarioConfig) -> ValidationReport {
    let mut report = ValidationReport { config_hash: cfg.hash(), ..Default::default() };
    if let Err(e) = cfg.validate() {
        report.errors.push(e.to_string());
        return report;
    }
    if cfg.task.uses_bath() {
        let temperatures: Vec<f64> = match cfg.task {
            Task::Attractor => cfg.attractor.temperatures.clone(),
            _ => vec![cfg.bath.temperature],
        };
        let gap = match tunneling_setup(cfg) {
            Ok(setup) => Some(partner_gap(&setup)),
            Err(e) => {
                report.errors.push(e.to_string());
                None
            }
        };
        for t in temperatures {
            if let Ok(b) = BathParams::new(cfg.bath.damping, t) {
                for w in b.weak_coupling_warnings(gap) {
                    if !report.warnings.contains(&w) {
                        report.warnings.push(w);
                    }
                }
            }
            if t == 0.0 && cfg.task == Task::Attractor {
                report.notes.push("k_BT = 0: upward transition rates vanish; the attractor is set by drive-induced transitions alone".into());
            }
        }
    }
    report
}
