//! Classical stroboscopic dynamics of the driven double well.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::export::{csv_writer, fmt};
use crate::params::SystemParams;

/// Integration steps per driving period.
pub const STEPS_PER_PERIOD: usize = 256;

// Yoshida's sixth-order composition of the symmetric leapfrog step.
const W1: f64 = -1.177_679_984_178_87;
const W2: f64 = 0.235_573_213_359_357;
const W3: f64 = 0.784_513_610_477_560;
const W0: f64 = 1.0 - 2.0 * (W1 + W2 + W3);
const STAGES: [f64; 7] = [W3, W2, W1, W0, W1, W2, W3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: f64,
    pub p: f64,
    pub t: f64,
}

impl PhasePoint {
    pub fn new(x: f64, p: f64, t: f64) -> Self {
        Self { x, p, t }
    }

    /// Undriven energy p²/2 + V(x).
    pub fn energy(&self, params: &SystemParams) -> f64 {
        0.5 * self.p * self.p + params.potential(self.x)
    }

    /// Image under the generalized parity x → −x, p → −p, t → t + T/2.
    pub fn reflected(&self, params: &SystemParams) -> Self {
        Self { x: -self.x, p: -self.p, t: self.t + 0.5 * params.period() }
    }
}

fn force(params: &SystemParams, x: f64, t: f64) -> f64 {
    params.static_force(x) - params.amplitude() * (params.frequency() * t).cos()
}

fn escape_bound(params: &SystemParams) -> f64 {
    1e3 * params.well_position().max(1.0)
}

/// One symmetric drift–kick–drift step; time advances with the drift.
fn leapfrog(params: &SystemParams, s: &mut PhasePoint, h: f64) {
    s.x += 0.5 * h * s.p;
    s.t += 0.5 * h;
    s.p += h * force(params, s.x, s.t);
    s.x += 0.5 * h * s.p;
    s.t += 0.5 * h;
}

fn step(params: &SystemParams, s: &mut PhasePoint, h: f64) {
    for w in STAGES {
        leapfrog(params, s, w * h);
    }
}

fn integrate(params: &SystemParams, mut s: PhasePoint, h: f64, steps: usize) -> Result<PhasePoint> {
    let bound = escape_bound(params);
    for _ in 0..steps {
        step(params, &mut s, h);
        if !s.x.is_finite() || !s.p.is_finite() || s.x.abs() > bound {
            return Err(Error::Escape { x: s.x, t: s.t });
        }
    }
    Ok(s)
}

/// Integrates ẋ = p, ṗ = x/2 − x³/(16D) − S cos ωt for `duration` (which may be negative).
pub fn flow(point: PhasePoint, duration: f64, params: &SystemParams) -> Result<PhasePoint> {
    if !duration.is_finite() {
        return Err(invalid("duration", "must be finite"));
    }
    if duration == 0.0 {
        return Ok(point);
    }
    let h_max = params.period() / STEPS_PER_PERIOD as f64;
    let steps = (duration.abs() / h_max).ceil() as usize;
    integrate(params, point, duration / steps as f64, steps)
}

/// One driving period.
pub fn period_map(point: PhasePoint, params: &SystemParams) -> Result<PhasePoint> {
    integrate(params, point, params.period() / STEPS_PER_PERIOD as f64, STEPS_PER_PERIOD)
}

/// Seed followed by its images after 1..=n_periods periods. Points share the seed's
/// driving phase, so seeds with t = 0 give the ωt = 2πn section.
pub fn stroboscopic_orbit(seed: PhasePoint, n_periods: usize, params: &SystemParams) -> Result<Vec<PhasePoint>> {
    if n_periods == 0 {
        return Err(invalid("n_periods", "must be at least 1"));
    }
    let mut out = Vec::with_capacity(n_periods + 1);
    out.push(seed);
    let mut s = seed;
    for _ in 0..n_periods {
        s = period_map(s, params)?;
        out.push(s);
    }
    Ok(out)
}

/// Finite-difference Jacobian ∂(x', p')/∂(x, p) of the period map (fourth-order stencil).
pub fn period_map_jacobian(point: PhasePoint, params: &SystemParams, eps: f64) -> Result<[[f64; 2]; 2]> {
    let image = |dx: f64, dp: f64| period_map(PhasePoint { x: point.x + dx, p: point.p + dp, t: point.t }, params);
    let mut j = [[0.0; 2]; 2];
    for (col, (ux, up)) in [(1.0, 0.0), (0.0, 1.0)].into_iter().enumerate() {
        let mut d = [0.0; 2];
        for (k, w) in [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)] {
            let s = image(k * eps * ux, k * eps * up)?;
            d[0] += w * s.x;
            d[1] += w * s.p;
        }
        j[0][col] = d[0] / (12.0 * eps);
        j[1][col] = d[1] / (12.0 * eps);
    }
    Ok(j)
}

pub fn determinant(j: &[[f64; 2]; 2]) -> f64 {
    j[0][0] * j[1][1] - j[0][1] * j[1][0]
}

/// Whether an orbit has points on both sides of the barrier.
pub fn visits_both_wells(orbit: &[PhasePoint]) -> bool {
    orbit.iter().any(|s| s.x > 0.0) && orbit.iter().any(|s| s.x < 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortraitPoint {
    pub seed_id: usize,
    pub n: usize,
    pub x: f64,
    pub p: f64,
}

/// Uniform nx × np grid of seeds at phase zero.
pub fn seed_grid(x_range: (f64, f64), p_range: (f64, f64), nx: usize, np: usize) -> Vec<PhasePoint> {
    let lerp = |(a, b): (f64, f64), i: usize, n: usize| if n <= 1 { 0.5 * (a + b) } else { a + (b - a) * i as f64 / (n - 1) as f64 };
    (0..nx).flat_map(|i| (0..np).map(move |j| PhasePoint::new(lerp(x_range, i, nx), lerp(p_range, j, np), 0.0))).collect()
}

/// Stroboscopic orbits of all seeds, concatenated in seed order.
pub fn portrait(seeds: &[PhasePoint], n_periods: usize, params: &SystemParams) -> Result<Vec<PortraitPoint>> {
    if seeds.is_empty() {
        return Err(invalid("seeds", "grid is empty"));
    }
    let orbits: Vec<Vec<PhasePoint>> =
        seeds.par_iter().map(|&s| stroboscopic_orbit(s, n_periods, params)).collect::<Result<_>>()?;
    Ok(orbits
        .into_iter()
        .enumerate()
        .flat_map(|(id, o)| o.into_iter().enumerate().map(move |(n, s)| PortraitPoint { seed_id: id, n, x: s.x, p: s.p }))
        .collect())
}

pub fn write_portrait_csv<W: Write>(out: W, comment: Option<&str>, points: &[PortraitPoint]) -> Result<()> {
    let mut w = csv_writer(out, "portrait", comment)?;
    w.write_record(["seed_id", "n", "x", "p"])?;
    for pt in points {
        w.write_record([pt.seed_id.to_string(), pt.n.to_string(), fmt(pt.x), fmt(pt.p)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn undriven() -> SystemParams {
        SystemParams::default()
    }

    fn driven() -> SystemParams {
        SystemParams::from_rescaled(4.0, 0.982, 0.015).unwrap()
    }

    #[test]
    fn energy_conserved_without_driving() {
        let p = undriven();
        let seed = PhasePoint::new(p.well_position() + 1.5, 0.0, 0.0);
        let e0 = seed.energy(&p);
        assert!(e0 < 0.0);
        let orbit = stroboscopic_orbit(seed, 1000, &p).unwrap();
        let drift = orbit.iter().map(|s| (s.energy(&p) - e0).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-10, "energy drift {drift:e}");
    }

    #[test]
    fn undriven_fixed_points() {
        let p = undriven();
        let xw = (8.0 * p.barrier_height()).sqrt();
        for x in [-xw, 0.0, xw] {
            let s = flow(PhasePoint::new(x, 0.0, 0.0), 50.0, &p).unwrap();
            assert!(s.x.abs() - x.abs() < 1e-12 && s.p.abs() < 1e-12, "{s:?}");
            assert!(p.static_force(x).abs() < 1e-14);
        }
    }

    #[test]
    fn period_map_is_area_preserving() {
        let p = driven();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let s = PhasePoint::new(rng.gen_range(-8.0..8.0), rng.gen_range(-1.0..1.0), 0.0);
            let j = period_map_jacobian(s, &p, 1e-4).unwrap();
            assert!((determinant(&j) - 1.0).abs() < 1e-8, "{:e} at {s:?}", determinant(&j) - 1.0);
        }
    }

    #[test]
    fn forward_backward_returns() {
        let p = driven();
        let s = PhasePoint::new(3.0, 0.4, 0.3);
        let f = flow(s, 20.0 * p.period(), &p).unwrap();
        let b = flow(f, -20.0 * p.period(), &p).unwrap();
        assert!((b.x - s.x).abs() < 1e-8 && (b.p - s.p).abs() < 1e-8 && (b.t - s.t).abs() < 1e-9);
    }

    #[test]
    fn generalized_parity_equivariance() {
        let p = driven();
        let s = PhasePoint::new(2.0, -0.3, 0.0);
        let a = flow(s, 3.0 * p.period(), &p).unwrap();
        let b = flow(s.reflected(&p), 3.0 * p.period(), &p).unwrap();
        assert!((a.x + b.x).abs() < 1e-9 && (a.p + b.p).abs() < 1e-9);
    }

    #[test]
    fn well_bottom_seed_stays_in_its_well() {
        let p = driven();
        let orbit = stroboscopic_orbit(PhasePoint::new(p.well_position(), 0.0, 0.0), 2000, &p).unwrap();
        assert!(orbit.iter().all(|s| s.x > 0.0));
    }

    #[test]
    fn separatrix_seed_crosses_barrier() {
        let p = driven();
        let orbit = stroboscopic_orbit(PhasePoint::new(0.5, 0.0, 0.0), 2000, &p).unwrap();
        assert!(visits_both_wells(&orbit));
    }

    #[test]
    fn undriven_section_lies_on_energy_contour() {
        let p = undriven();
        let seed = PhasePoint::new(-7.0, 0.2, 0.0);
        let e0 = seed.energy(&p);
        for s in stroboscopic_orbit(seed, 50, &p).unwrap() {
            assert!((s.energy(&p) - e0).abs() < 1e-10);
        }
    }

    #[test]
    fn portrait_labels_and_csv() {
        let p = driven();
        let seeds = seed_grid((-8.0, 8.0), (-1.0, 1.0), 3, 2);
        assert_eq!(seeds.len(), 6);
        let pts = portrait(&seeds, 4, &p).unwrap();
        assert_eq!(pts.len(), 30);
        assert_eq!(pts[5].seed_id, 1);
        assert_eq!(pts[5].n, 0);
        let mut buf = Vec::new();
        write_portrait_csv(&mut buf, None, &pts).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap() == "seed_id,n,x,p");
        assert!(portrait(&[], 4, &p).is_err());
        assert!(stroboscopic_orbit(seeds[0], 0, &p).is_err());
    }
}
