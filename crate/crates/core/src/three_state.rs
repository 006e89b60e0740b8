//! Three-level model of a singlet-doublet crossing.

use std::io::Write;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::export::{csv_writer, fmt};
use crate::linalg::{expm, solve, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeStateParams {
    /// ε_r⁺, quasienergy of the even regular state.
    pub base_quasienergy: f64,
    /// Doublet splitting Δ > 0.
    pub splitting: f64,
    /// Detuning Δ_c of the chaotic singlet.
    pub detuning: f64,
    /// Coupling b > 0 between the odd regular state and the singlet.
    pub coupling: f64,
    pub mean_energy_even: f64,
    pub mean_energy_odd: f64,
    pub mean_energy_chaotic: f64,
}

impl ThreeStateParams {
    pub fn new(splitting: f64, detuning: f64, coupling: f64) -> Result<Self> {
        if !(splitting > 0.0) {
            return Err(invalid("splitting", format!("Δ must be positive, got {splitting}")));
        }
        if !(coupling > 0.0) {
            return Err(invalid("coupling", format!("b must be positive, got {coupling}")));
        }
        Ok(Self {
            base_quasienergy: 0.0,
            splitting,
            detuning,
            coupling,
            mean_energy_even: 0.0,
            mean_energy_odd: 0.0,
            mean_energy_chaotic: 0.0,
        })
    }

    pub fn with_detuning(&self, detuning: f64) -> Self {
        Self { detuning, ..*self }
    }

    pub fn with_mean_energies(&self, even: f64, odd: f64, chaotic: f64) -> Self {
        Self { mean_energy_even: even, mean_energy_odd: odd, mean_energy_chaotic: chaotic, ..*self }
    }

    /// Checks Δ ≪ b ≪ ω and E_r⁻ − E_r⁺ ≪ E_c⁻ − E_r^±; "≪" means a factor of 3.
    pub fn hierarchy_warnings(&self, omega: f64) -> Vec<String> {
        let mut w = Vec::new();
        if self.splitting * 3.0 > self.coupling {
            w.push(format!("Δ = {:e} is not small against b = {:e}", self.splitting, self.coupling));
        }
        if self.coupling * 3.0 > omega {
            w.push(format!("b = {:e} is not small against ω = {omega}", self.coupling));
        }
        let doublet = (self.mean_energy_odd - self.mean_energy_even).abs();
        let gap = (self.mean_energy_chaotic - self.mean_energy_even.max(self.mean_energy_odd)).abs();
        if gap > 0.0 && doublet * 3.0 > gap {
            w.push("doublet mean energies are not well separated from the chaotic state".into());
        }
        w
    }

    /// The 3×3 Hamiltonian over {φ_r⁺, φ_r⁻, φ_c⁻}.
    pub fn hamiltonian(&self) -> [[f64; 3]; 3] {
        let e = self.base_quasienergy;
        [
            [e, 0.0, 0.0],
            [0.0, e + self.splitting, self.coupling],
            [0.0, self.coupling, e + self.splitting + self.detuning],
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigensystem {
    pub even: f64,
    pub lower: f64,
    pub upper: f64,
    pub mixing_angle: f64,
}

/// Quasienergies ε₀⁺, ε₁⁻, ε₂⁻ and mixing angle β ∈ (0, π/2).
pub fn eigensystem(p: &ThreeStateParams) -> Eigensystem {
    let root = p.detuning.hypot(2.0 * p.coupling);
    let mid = p.base_quasienergy + p.splitting + 0.5 * p.detuning;
    Eigensystem {
        even: p.base_quasienergy,
        lower: mid - 0.5 * root,
        upper: mid + 0.5 * root,
        mixing_angle: 0.5 * (2.0 * p.coupling).atan2(p.detuning),
    }
}

/// Mean energies (E₀⁺, E₁⁻, E₂⁻) at mixing angle β.
pub fn mean_energies(p: &ThreeStateParams, mixing_angle: f64) -> (f64, f64, f64) {
    let (s, c) = mixing_angle.sin_cos();
    let (s2, c2) = (s * s, c * c);
    (
        p.mean_energy_even,
        p.mean_energy_odd * c2 + p.mean_energy_chaotic * s2,
        p.mean_energy_odd * s2 + p.mean_energy_chaotic * c2,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probabilities {
    pub right: f64,
    pub left: f64,
    pub chaotic: f64,
}

/// Closed-form P_R, P_L, P_c for the state initially localized on the right,
/// with quasienergies taken relative to ε₀⁺.
pub fn tunneling_probabilities(p: &ThreeStateParams, t: f64) -> Probabilities {
    let es = eigensystem(p);
    let e1 = es.lower - es.even;
    let e2 = es.upper - es.even;
    let (s, c) = es.mixing_angle.sin_cos();
    let (s2, c2) = (s * s, c * c);
    let beat = ((e1 - e2) * t).cos() - 1.0;
    let osc = (e1 * t).cos() * c2 + (e2 * t).cos() * s2;
    Probabilities {
        right: 0.5 * (1.0 + osc + beat * c2 * s2),
        left: 0.5 * (1.0 - osc + beat * c2 * s2),
        chaotic: -beat * c2 * s2,
    }
}

/// Propagates (|φ_r⁺⟩ + |φ_r⁻⟩)/√2 with exp(−iHt) of the 3×3 Hamiltonian.
pub fn propagate_numerically(p: &ThreeStateParams, t: f64) -> Probabilities {
    let h = p.hamiltonian();
    let gen = Mat::from_fn(3, 3, |i, j| C64::new(0.0, -h[i][j] * t));
    let u = expm(&gen);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let psi: Vec<C64> = (0..3).map(|i| (u[(i, 0)] + u[(i, 1)]) * r).collect();
    let right = ((psi[0] + psi[1]) * r).norm_sqr();
    let left = ((psi[0] - psi[1]) * r).norm_sqr();
    Probabilities { right, left, chaotic: psi[2].norm_sqr() }
}

/// The three beat frequencies |ε₁−ε₀|, |ε₂−ε₀|, |ε₂−ε₁| present in P_R(t).
pub fn beat_frequencies(p: &ThreeStateParams) -> [f64; 3] {
    let es = eigensystem(p);
    [(es.lower - es.even).abs(), (es.upper - es.even).abs(), (es.upper - es.lower).abs()]
}

/// Number of distinct beat frequencies, two being equal within `rel_tol`.
pub fn distinct_frequency_count(p: &ThreeStateParams, rel_tol: f64) -> usize {
    let mut f = beat_frequencies(p).to_vec();
    f.sort_by(f64::total_cmp);
    1 + f.windows(2).filter(|w| (w[1] - w[0]) > rel_tol * w[1]).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingCenter {
    /// Detuning where the beat-frequency count drops to two, located numerically.
    pub numerical: f64,
    /// The value −Δ/2 quoted in the literature.
    pub stated: f64,
    /// Frequency count at the stated value.
    pub count_at_stated: usize,
}

/// Scans Δ_c over `range` for the point where |ε₁⁻ − ε₀⁺| = |ε₂⁻ − ε₀⁺|, which
/// reduces the number of distinct frequencies in P_R from three to two.
pub fn locate_crossing_center(p: &ThreeStateParams, range: (f64, f64), steps: usize) -> Result<CrossingCenter> {
    let g = |dc: f64| {
        let f = beat_frequencies(&p.with_detuning(dc));
        f[0] - f[1]
    };
    let grid: Vec<f64> =
        (0..=steps).map(|i| range.0 + (range.1 - range.0) * i as f64 / steps as f64).collect();
    let bracket = grid
        .windows(2)
        .find(|w| g(w[0]).signum() != g(w[1]).signum())
        .ok_or_else(|| invalid("range", "no change in the beat-frequency count inside the scan range"))?;
    let (mut lo, mut hi) = (bracket[0], bracket[1]);
    let g_lo = g(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid).signum() == g_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * p.splitting.max(hi.abs()) {
            break;
        }
    }
    let stated = -0.5 * p.splitting;
    Ok(CrossingCenter {
        numerical: 0.5 * (lo + hi),
        stated,
        count_at_stated: distinct_frequency_count(&p.with_detuning(stated), 1e-9),
    })
}

/// CSV columns: t, P_R, P_L, P_c.
pub fn write_probabilities_csv<W: Write>(
    out: W,
    comment: Option<&str>,
    rows: &[(f64, Probabilities)],
) -> Result<()> {
    let mut w = csv_writer(out, "tunneling", comment)?;
    w.write_record(["t", "P_R", "P_L", "P_c"])?;
    for (t, p) in rows {
        w.write_record([fmt(*t), fmt(p.right), fmt(p.left), fmt(p.chaotic)])?;
    }
    w.flush()?;
    Ok(())
}

/// One amplitude of a numerical sweep near a singlet-doublet crossing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingSample {
    pub amplitude: f64,
    /// Quasienergies of the two odd states relative to the even one.
    pub odd_relative: (f64, f64),
    /// Mean energies (even, odd a, odd b) in the same order.
    pub mean_energies: (f64, f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeStateFit {
    pub splitting: f64,
    pub coupling: f64,
    /// Δ_c = slope·(F − center).
    pub detuning_slope: f64,
    pub center_amplitude: f64,
    /// RMS deviation of the two fitted branches.
    pub residual: f64,
    pub mean_energy_even: f64,
    pub mean_energy_odd: f64,
    pub mean_energy_chaotic: f64,
}

impl ThreeStateFit {
    pub fn params_at(&self, amplitude: f64) -> ThreeStateParams {
        ThreeStateParams {
            base_quasienergy: 0.0,
            splitting: self.splitting,
            detuning: self.detuning_slope * (amplitude - self.center_amplitude),
            coupling: self.coupling,
            mean_energy_even: self.mean_energy_even,
            mean_energy_odd: self.mean_energy_odd,
            mean_energy_chaotic: self.mean_energy_chaotic,
        }
    }

    pub fn gap(&self) -> f64 {
        2.0 * self.coupling
    }
}

fn linear_lstsq(rows: &[Vec<f64>], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = rows[0].len();
    let ata = Mat::from_fn(n, n, |i, j| C64::new(rows.iter().map(|r| r[i] * r[j]).sum(), 0.0));
    let atb = Mat::from_fn(n, 1, |i, _| C64::new(rows.iter().zip(rhs).map(|(r, y)| r[i] * y).sum(), 0.0));
    let x = solve(&ata, &atb);
    let out: Vec<f64> = (0..n).map(|i| x[(i, 0)].re).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("least-squares normal equations"));
    }
    Ok(out)
}

fn branches(theta: &[f64; 4], f: f64) -> (f64, f64) {
    let [delta, b, slope, center] = *theta;
    let dc = slope * (f - center);
    let root = dc.hypot(2.0 * b);
    (delta + 0.5 * dc - 0.5 * root, delta + 0.5 * dc + 0.5 * root)
}

fn residuals(theta: &[f64; 4], data: &[(f64, f64, f64)]) -> Vec<f64> {
    data.iter()
        .flat_map(|&(f, lo, hi)| {
            let (m1, m2) = branches(theta, f);
            [lo - m1, hi - m2]
        })
        .collect()
}

/// Least-squares fit of Δ, b and a linear map F ↦ Δ_c to the two odd branches.
pub fn fit_from_spectrum(samples: &[CrossingSample]) -> Result<ThreeStateFit> {
    if samples.len() < 5 {
        return Err(Error::ThreeStateFit("need at least five samples".into()));
    }
    let data: Vec<(f64, f64, f64)> = samples
        .iter()
        .map(|s| {
            let (a, b) = s.odd_relative;
            (s.amplitude, a.min(b), a.max(b))
        })
        .collect();
    let f_mean = data.iter().map(|d| d.0).sum::<f64>() / data.len() as f64;
    let f_scale = data.iter().map(|d| (d.0 - f_mean).abs()).fold(0.0, f64::max);
    let u = |f: f64| (f - f_mean) / f_scale;

    // Starting point: the squared gap is quadratic and the branch sum linear in F.
    let quad = linear_lstsq(
        &data.iter().map(|d| vec![u(d.0) * u(d.0), u(d.0), 1.0]).collect::<Vec<_>>(),
        &data.iter().map(|d| (d.2 - d.1).powi(2)).collect::<Vec<_>>(),
    )?;
    let lin = linear_lstsq(
        &data.iter().map(|d| vec![u(d.0), 1.0]).collect::<Vec<_>>(),
        &data.iter().map(|d| d.1 + d.2).collect::<Vec<_>>(),
    )?;
    let (qa, qb, qc) = (quad[0], quad[1], quad[2]);
    if !(qa > 0.0) {
        return Err(Error::ThreeStateFit("gap has no minimum in the window".into()));
    }
    let u0 = -qb / (2.0 * qa);
    let four_b2 = qc - qb * qb / (4.0 * qa);
    if !(four_b2 > 0.0) || u0.abs() > 1.0 {
        return Err(Error::ThreeStateFit("no avoided crossing inside the window".into()));
    }
    let slope_u = qa.sqrt() * lin[0].signum();
    let center = f_mean + u0 * f_scale;
    let delta0 = 0.5 * (lin[1] + lin[0] * u0);
    let mut theta = [delta0, 0.5 * four_b2.sqrt(), slope_u / f_scale, center];

    // Levenberg–Marquardt refinement.
    let cost = |t: &[f64; 4]| residuals(t, &data).iter().map(|r| r * r).sum::<f64>();
    let mut lambda = 1e-3;
    let mut c0 = cost(&theta);
    for _ in 0..200 {
        let r = residuals(&theta, &data);
        let mut jac = vec![[0.0; 4]; r.len()];
        for p in 0..4 {
            let h = 1e-7 * theta[p].abs().max(if p == 3 { f_scale } else { 1e-12 });
            let mut tp = theta;
            tp[p] += h;
            let mut tm = theta;
            tm[p] -= h;
            let (rp, rm) = (residuals(&tp, &data), residuals(&tm, &data));
            for i in 0..r.len() {
                // Residual is data − model, so the model Jacobian is its negative.
                jac[i][p] = -(rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let jtj: Vec<Vec<f64>> =
            (0..4).map(|i| (0..4).map(|j| jac.iter().map(|row| row[i] * row[j]).sum()).collect()).collect();
        let jtr: Vec<f64> = (0..4).map(|i| jac.iter().zip(&r).map(|(row, ri)| row[i] * ri).sum()).collect();
        let mut improved = false;
        for _ in 0..20 {
            let a = Mat::from_fn(4, 4, |i, j| {
                let v = jtj[i][j] + if i == j { lambda * jtj[i][i].max(1e-300) } else { 0.0 };
                C64::new(v, 0.0)
            });
            let b = Mat::from_fn(4, 1, |i, _| C64::new(jtr[i], 0.0));
            let step = solve(&a, &b);
            let mut trial = theta;
            for p in 0..4 {
                trial[p] += step[(p, 0)].re;
            }
            let c1 = cost(&trial);
            if c1.is_finite() && c1 < c0 {
                let rel = (c0 - c1) / c0.max(1e-300);
                theta = trial;
                c0 = c1;
                lambda = (lambda * 0.3).max(1e-12);
                improved = rel > 1e-14;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    theta[1] = theta[1].abs();
    let residual = (c0 / (2.0 * data.len() as f64)).sqrt();
    if !(theta[0] > 0.0) {
        return Err(Error::ThreeStateFit(format!("fitted splitting {:e} is not positive", theta[0])));
    }
    if residual > 0.1 * 2.0 * theta[1] {
        return Err(Error::ThreeStateFit(format!(
            "fit residual {residual:e} exceeds 10% of the gap {:e}",
            2.0 * theta[1]
        )));
    }

    // Mean energies: E_a, E_b are mixtures of E_r⁻ and E_c⁻ with weights cos²β, sin²β.
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    let mut even = 0.0;
    for s in samples {
        let (a, _) = s.odd_relative;
        let p = ThreeStateParams {
            splitting: theta[0],
            coupling: theta[1],
            detuning: theta[2] * (s.amplitude - theta[3]),
            ..ThreeStateParams::new(1.0, 0.0, 1.0)?
        };
        let es = eigensystem(&p);
        let (sn, cs) = es.mixing_angle.sin_cos();
        let a_is_lower = (a - es.lower + es.even).abs() <= (a - es.upper + es.even).abs();
        let (ea, eb) = (s.mean_energies.1, s.mean_energies.2);
        let (e_lower, e_upper) = if a_is_lower { (ea, eb) } else { (eb, ea) };
        rows.push(vec![cs * cs, sn * sn]);
        rhs.push(e_lower);
        rows.push(vec![sn * sn, cs * cs]);
        rhs.push(e_upper);
        even += s.mean_energies.0;
    }
    let me = linear_lstsq(&rows, &rhs)?;
    Ok(ThreeStateFit {
        splitting: theta[0],
        coupling: theta[1],
        detuning_slope: theta[2],
        center_amplitude: theta[3],
        residual,
        mean_energy_even: even / samples.len() as f64,
        mean_energy_odd: me[0],
        mean_energy_chaotic: me[1],
    })
}
