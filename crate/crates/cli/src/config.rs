use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Spectrum,
    #[default]
    Sweep,
    Tunnel,
    Dissipate,
    Attractor,
    Classical,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Self::Spectrum => "spectrum",
            Self::Sweep => "sweep",
            Self::Tunnel => "tunnel",
            Self::Dissipate => "dissipate",
            Self::Attractor => "attractor",
            Self::Classical => "classical",
        }
    }

    pub fn uses_bath(self) -> bool {
        matches!(self, Self::Dissipate | Self::Attractor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    /// Time-independent kernel after the rotating-wave average.
    #[default]
    Rwa,
    /// Full time-periodic master equation.
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub barrier_height: f64,
    pub omega: f64,
    /// Rescaled amplitude F = S/√(8D).
    pub amplitude: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self { barrier_height: 4.0, omega: 0.982, amplitude: 0.015029 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BathSection {
    pub damping: f64,
    pub temperature: f64,
}

impl Default for BathSection {
    fn default() -> Self {
        Self { damping: 1e-6, temperature: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationSection {
    pub computational: usize,
    pub retained: usize,
    pub sidebands: usize,
    pub states: usize,
}

impl Default for TruncationSection {
    fn default() -> Self {
        Self { computational: 300, retained: 60, sidebands: 16, states: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub f_start: f64,
    pub f_stop: f64,
    pub f_step: f64,
    pub tracked: usize,
    pub fit_window: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { f_start: 0.010, f_stop: 0.018, f_step: 2e-4, tracked: 24, fit_window: 8e-4 }
    }
}

impl SweepSection {
    pub fn grid(&self) -> Vec<f64> {
        let n = ((self.f_stop - self.f_start) / self.f_step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.f_start + i as f64 * self.f_step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagationSection {
    /// Time span in units of the beat period, unless `t_end` is given.
    pub beats: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    pub samples: usize,
    pub generator: Generator,
    pub steps_per_period: usize,
    /// Beat periods propagated at most when measuring the decoherence time.
    pub max_beats: usize,
    /// Spectrum indices (even, odd, chaotic); selected automatically when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub triple: Option<[usize; 3]>,
}

impl Default for PropagationSection {
    fn default() -> Self {
        Self { beats: 3.0, t_end: None, samples: 601, generator: Generator::Rwa, steps_per_period: 64, max_beats: 4000, triple: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttractorSection {
    pub temperatures: Vec<f64>,
}

impl Default for AttractorSection {
    fn default() -> Self {
        Self { temperatures: vec![1e-6, 1e-4, 1e-3, 1e-2] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassicalSection {
    pub x_range: [f64; 2],
    pub p_range: [f64; 2],
    pub nx: usize,
    pub np: usize,
    pub periods: usize,
}

impl Default for ClassicalSection {
    fn default() -> Self {
        Self { x_range: [-9.0, 9.0], p_range: [-3.0, 3.0], nx: 15, np: 7, periods: 400 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub task: Task,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Worker threads for sweeps and kernel assembly; 0 uses every core.
    pub threads: usize,
    pub system: SystemSection,
    pub bath: BathSection,
    pub truncation: TruncationSection,
    pub sweep: SweepSection,
    pub propagation: PropagationSection,
    pub attractor: AttractorSection,
    pub classical: ClassicalSection,
}

const REFERENCE: &[(&str, &str)] = &[
    ("task", "spectrum | sweep | tunnel | dissipate | attractor | classical"),
    ("output_dir", "artifact directory; default $DDW_OUTPUT_ROOT/<task>, else ddw-output/<task>"),
    ("threads", "worker threads; 0 uses every core"),
    ("system.barrier_height", "D, barrier height in units of ħω₀"),
    ("system.omega", "driving frequency ω"),
    ("system.amplitude", "rescaled driving amplitude F = S/√(8D)"),
    ("bath.damping", "γ, ohmic damping constant (> 0)"),
    ("bath.temperature", "k_BT (≥ 0)"),
    ("truncation.computational", "oscillator basis size used to diagonalize H₀ (≥ 2K)"),
    ("truncation.retained", "K, H₀ eigenstates kept in the Floquet matrix"),
    ("truncation.sidebands", "N_F, Fourier sidebands n ∈ [−N_F, N_F]"),
    ("truncation.states", "M, lowest-mean-energy Floquet states in the master equation"),
    ("sweep.f_start", "first amplitude of the sweep grid"),
    ("sweep.f_stop", "last amplitude of the sweep grid"),
    ("sweep.f_step", "grid spacing in F"),
    ("sweep.tracked", "states labelled by continuity"),
    ("sweep.fit_window", "half-width in F of the three-state fit around an avoided crossing"),
    ("propagation.beats", "time span in beat periods 2π/|ε_c − ε_o|"),
    ("propagation.t_end", "explicit time span; overrides beats"),
    ("propagation.samples", "output samples including t = 0"),
    ("propagation.generator", "rwa | periodic"),
    ("propagation.steps_per_period", "RK4 steps per driving period for the periodic generator"),
    ("propagation.max_beats", "beat periods propagated at most when measuring t_decoh"),
    ("propagation.triple", "[even, odd, chaotic] spectrum indices; automatic when absent"),
    ("attractor.temperatures", "k_BT values, strictly increasing"),
    ("classical.x_range", "seed grid in x"),
    ("classical.p_range", "seed grid in p"),
    ("classical.nx", "seeds along x"),
    ("classical.np", "seeds along p"),
    ("classical.periods", "stroboscopic images per seed"),
];

/// Documented defaults, as printed by `ddw defaults`.
pub fn reference_page() -> String {
    let mut out = String::from("# ddw scenario reference\n#\n");
    let width = REFERENCE.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    for (key, doc) in REFERENCE {
        let _ = writeln!(out, "#   {key:<width$}  {doc}");
    }
    out.push_str("#\n# Defaults:\n\n");
    out.push_str(&toml::to_string(&ScenarioConfig::default()).expect("default config serializes"));
    out
}

#[cfg(test)]
fn reference_keys() -> impl Iterator<Item = &'static str> {
    REFERENCE.iter().map(|(k, _)| *k)
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::invalid(field, format!("must be positive, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::invalid(field, format!("must be non-negative, got {v}")))
    }
}

fn increasing(field: &str, lo: f64, hi: f64) -> Result<()> {
    if lo.is_finite() && hi.is_finite() && lo < hi {
        Ok(())
    } else {
        Err(CliError::invalid(field, format!("range [{lo}, {hi}] must be non-empty and increasing")))
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::ReadConfig { path: path.into(), source })?;
        toml::from_str(&text).map_err(|e| CliError::ParseConfig { path: path.into(), source: Box::new(e) })
    }

    /// Checks every field; the first violation is returned with its dotted name.
    pub fn validate(&self) -> Result<()> {
        let s = &self.system;
        positive("system.barrier_height", s.barrier_height)?;
        positive("system.omega", s.omega)?;
        non_negative("system.amplitude", s.amplitude)?;
        positive("bath.damping", self.bath.damping)?;
        non_negative("bath.temperature", self.bath.temperature)?;

        let t = &self.truncation;
        let min_k = 2 * s.barrier_height.ceil() as usize;
        if t.retained < min_k.max(2) {
            return Err(CliError::invalid("truncation.retained", format!("K = {} is below 2·ceil(D) = {min_k}", t.retained)));
        }
        if t.computational < 2 * t.retained {
            return Err(CliError::invalid(
                "truncation.computational",
                format!("{} is below 2K = {}", t.computational, 2 * t.retained),
            ));
        }
        if t.sidebands == 0 {
            return Err(CliError::invalid("truncation.sidebands", "must be positive"));
        }
        if t.states < 3 || t.states > t.retained {
            return Err(CliError::invalid("truncation.states", format!("M = {} must lie in [3, K = {}]", t.states, t.retained)));
        }

        let w = &self.sweep;
        increasing("sweep.f_start", w.f_start, w.f_stop)?;
        non_negative("sweep.f_start", w.f_start)?;
        positive("sweep.f_step", w.f_step)?;
        positive("sweep.fit_window", w.fit_window)?;
        if w.tracked < 2 || w.tracked > t.retained {
            return Err(CliError::invalid("sweep.tracked", format!("{} must lie in [2, K = {}]", w.tracked, t.retained)));
        }

        let p = &self.propagation;
        positive("propagation.beats", p.beats)?;
        if let Some(t_end) = p.t_end {
            positive("propagation.t_end", t_end)?;
        }
        if p.samples < 2 {
            return Err(CliError::invalid("propagation.samples", "need at least two samples"));
        }
        if p.steps_per_period == 0 {
            return Err(CliError::invalid("propagation.steps_per_period", "must be positive"));
        }
        if p.max_beats == 0 {
            return Err(CliError::invalid("propagation.max_beats", "must be positive"));
        }
        if let Some(tr) = p.triple {
            if let Some(&i) = tr.iter().find(|&&i| i >= t.states) {
                return Err(CliError::invalid("propagation.triple", format!("index {i} is outside the M = {} retained states", t.states)));
            }
            if tr[0] == tr[1] || tr[1] == tr[2] || tr[0] == tr[2] {
                return Err(CliError::invalid("propagation.triple", "indices must be distinct"));
            }
        }

        let temps = &self.attractor.temperatures;
        if temps.is_empty() {
            return Err(CliError::invalid("attractor.temperatures", "list is empty"));
        }
        for &k in temps {
            non_negative("attractor.temperatures", k)?;
        }
        if temps.windows(2).any(|x| !(x[1] > x[0])) {
            return Err(CliError::invalid("attractor.temperatures", "must be strictly increasing"));
        }

        let c = &self.classical;
        increasing("classical.x_range", c.x_range[0], c.x_range[1])?;
        increasing("classical.p_range", c.p_range[0], c.p_range[1])?;
        for (field, n) in [("classical.nx", c.nx), ("classical.np", c.np), ("classical.periods", c.periods)] {
            if n == 0 {
                return Err(CliError::invalid(field, "must be positive"));
            }
        }
        Ok(())
    }

    /// SHA-256 of the settings that influence results (output location and
    /// thread count excluded).
    pub fn hash(&self) -> String {
        let physics = Self { output_dir: None, threads: 0, ..self.clone() };
        let bytes = serde_json::to_vec(&physics).expect("config serializes");
        Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn output_dir(&self) -> PathBuf {
        if let Some(dir) = &self.output_dir {
            return dir.clone();
        }
        let root = std::env::var_os("DDW_OUTPUT_ROOT").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("ddw-output"));
        root.join(self.task.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let c = ScenarioConfig::default();
        c.validate().unwrap();
        let back: ScenarioConfig = toml::from_str(&toml::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn reference_page_documents_every_key() {
        let value: toml::Table = toml::from_str(&toml::to_string(&ScenarioConfig::default()).unwrap()).unwrap();
        let mut keys = Vec::new();
        for (k, v) in &value {
            match v.as_table() {
                Some(t) => keys.extend(t.keys().map(|sub| format!("{k}.{sub}"))),
                None => keys.push(k.clone()),
            }
        }
        let documented: Vec<&str> = reference_keys().collect();
        for k in keys {
            assert!(documented.contains(&k.as_str()), "{k} missing from the reference page");
        }
    }

    #[test]
    fn hash_ignores_output_location() {
        let a = ScenarioConfig::default();
        let b = ScenarioConfig { output_dir: Some("elsewhere".into()), threads: 3, ..a.clone() };
        assert_eq!(a.hash(), b.hash());
        let c = ScenarioConfig { bath: BathSection { temperature: 1e-3, ..a.bath.clone() }, ..a.clone() };
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn sweep_grid_is_inclusive() {
        let g = SweepSection::default().grid();
        assert_eq!(g.len(), 41);
        assert!((g[40] - 0.018).abs() < 1e-15);
    }

    #[test]
    fn unknown_field_is_named() {
        let err = toml::from_str::<ScenarioConfig>("[bath]\ndampin = 1e-6\n").unwrap_err().to_string();
        assert!(err.contains("dampin"), "{err}");
        assert!(err.contains("line 2"), "{err}");
    }
}
