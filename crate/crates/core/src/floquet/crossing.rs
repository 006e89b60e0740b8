use serde::{Deserialize, Serialize};

use super::{solve_floquet, wrapped_difference, FloquetSpectrum, FourierComponents, Sweep};
use crate::error::Result;
use crate::params::Parity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrossingKind {
    Exact,
    Avoided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub kind: CrossingKind,
    /// Rescaled amplitude F* of the crossing.
    pub amplitude: f64,
    pub labels: (usize, usize),
    pub parities: (Parity, Parity),
    /// Minimal quasienergy gap (avoided crossings).
    pub min_gap: Option<f64>,
    /// Final bisection bracket in F (exact crossings).
    pub bracket: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingSettings {
    /// Only pairs containing at least one of these labels are examined; empty
    /// means all tracked labels.
    pub focus: Vec<usize>,
    /// Exact crossings are bisected to this relative width in F.
    pub relative_width: f64,
    /// A gap minimum counts as an avoided crossing only if it is below this
    /// fraction of the gap at both ends of the sweep.
    pub depth_ratio: f64,
}

impl Default for CrossingSettings {
    fn default() -> Self {
        Self { focus: vec![0, 1], relative_width: 1e-6, depth_ratio: 0.5 }
    }
}

struct Refiner<'a> {
    sweep: &'a Sweep,
}

impl Refiner<'_> {
    fn spectrum(&self, f: f64) -> Result<FloquetSpectrum> {
        solve_floquet(&self.sweep.h0, &self.sweep.params.with_rescaled(f)?, &self.sweep.settings.floquet)
    }

    /// Quasienergy of the state matching `reference` within the given parity.
    fn follow(spec: &FloquetSpectrum, reference: &FourierComponents, parity: Parity) -> f64 {
        spec.states
            .iter()
            .filter(|s| s.parity == parity)
            .max_by(|a, b| {
                reference
                    .shift_tolerant_overlap(&a.components)
                    .total_cmp(&reference.shift_tolerant_overlap(&b.components))
            })
            .map(|s| s.quasienergy)
            .unwrap_or(f64::NAN)
    }

    /// Gap between the two states spanning the same subspace as the references.
    fn pair_gap(spec: &FloquetSpectrum, a: &FourierComponents, b: &FourierComponents, parity: Parity) -> f64 {
        let mut scored: Vec<(f64, f64)> = spec
            .states
            .iter()
            .filter(|s| s.parity == parity)
            .map(|s| {
                let w = (-1..=1)
                    .map(|j| {
                        let c = s.components.shifted(j);
                        a.overlap(&c).powi(2) + b.overlap(&c).powi(2)
                    })
                    .fold(0.0, f64::max);
                (w, s.quasienergy)
            })
            .collect();
        scored.sort_by(|x, y| y.0.total_cmp(&x.0));
        if scored.len() < 2 {
            return f64::NAN;
        }
        wrapped_difference(scored[0].1, scored[1].1, spec.omega()).abs()
    }

    fn bisect_exact(&self, lo_idx: usize, la: usize, lb: usize, rel: f64) -> Result<CrossingReport> {
        let p = &self.sweep.points[lo_idx];
        let q = &self.sweep.points[lo_idx + 1];
        let (sa, sb) = (p.state(la), p.state(lb));
        let omega = self.sweep.params.frequency();
        let (ra, rb) = (sa.components.clone(), sb.components.clone());
        let (pa, pb) = (sa.parity, sb.parity);
        let mut lo = p.amplitude;
        let mut hi = q.amplitude;
        let d_lo = wrapped_difference(sa.quasienergy, sb.quasienergy, omega);
        while (hi - lo) > rel * 0.5 * (hi + lo).abs() {
            let mid = 0.5 * (lo + hi);
            let spec = self.spectrum(mid)?;
            let d = wrapped_difference(Self::follow(&spec, &ra, pa), Self::follow(&spec, &rb, pb), omega);
            if d.signum() == d_lo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(CrossingReport {
            kind: CrossingKind::Exact,
            amplitude: 0.5 * (lo + hi),
            labels: (la, lb),
            parities: (pa, pb),
            min_gap: None,
            bracket: Some((lo, hi)),
        })
    }

    fn golden_avoided(&self, idx: usize, la: usize, lb: usize, rel: f64) -> Result<CrossingReport> {
        let pts = &self.sweep.points;
        let center = &pts[idx];
        let (sa, sb) = (center.state(la), center.state(lb));
        let parity = sa.parity;
        let (ra, rb) = (sa.components.clone(), sb.components.clone());
        let gap = |f: f64| -> Result<f64> { Ok(Self::pair_gap(&self.spectrum(f)?, &ra, &rb, parity)) };
        let invphi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (pts[idx - 1].amplitude, pts[idx + 1].amplitude);
        let mut c = b - invphi * (b - a);
        let mut d = a + invphi * (b - a);
        let (mut gc, mut gd) = (gap(c)?, gap(d)?);
        while (b - a) > rel * 0.5 * (a + b).abs() {
            if gc < gd {
                b = d;
                d = c;
                gd = gc;
                c = b - invphi * (b - a);
                gc = gap(c)?;
            } else {
                a = c;
                c = d;
                gc = gd;
                d = a + invphi * (b - a);
                gd = gap(d)?;
            }
        }
        let (f, g) = if gc < gd { (c, gc) } else { (d, gd) };
        let grid_gap = wrapped_difference(sa.quasienergy, sb.quasienergy, center.spectrum.omega()).abs();
        let (f, g) = if grid_gap < g { (center.amplitude, grid_gap) } else { (f, g) };
        Ok(CrossingReport {
            kind: CrossingKind::Avoided,
            amplitude: f,
            labels: (la, lb),
            parities: (parity, parity),
            min_gap: Some(g),
            bracket: None,
        })
    }
}

/// Avoided crossings are local minima of same-parity gaps refined by golden
/// section; exact crossings are sign changes of opposite-parity quasienergy
/// differences refined by bisection.
pub fn detect_crossings(sweep: &Sweep, settings: &CrossingSettings) -> Result<Vec<CrossingReport>> {
    let n = sweep.tracked();
    let omega = sweep.params.frequency();
    let pts = &sweep.points;
    let refiner = Refiner { sweep };
    let mut out = Vec::new();
    for la in 0..n {
        for lb in (la + 1)..n {
            if !settings.focus.is_empty() && !settings.focus.contains(&la) && !settings.focus.contains(&lb) {
                continue;
            }
            let d: Vec<f64> = pts
                .iter()
                .map(|p| wrapped_difference(p.state(la).quasienergy, p.state(lb).quasienergy, omega))
                .collect();
            let pa = pts[0].state(la).parity;
            let same = pts.iter().all(|p| p.state(la).parity == p.state(lb).parity);
            let opposite = pts.iter().all(|p| p.state(la).parity != p.state(lb).parity);
            if opposite {
                for i in 0..d.len().saturating_sub(1) {
                    let wrap = d[i].abs() > 0.25 * omega || d[i + 1].abs() > 0.25 * omega;
                    if !wrap && d[i] != 0.0 && d[i].signum() != d[i + 1].signum() {
                        out.push(refiner.bisect_exact(i, la, lb, settings.relative_width)?);
                    }
                }
            } else if same && d.len() >= 3 {
                let g: Vec<f64> = d.iter().map(|v| v.abs()).collect();
                let ends = g[0].min(g[g.len() - 1]);
                for i in 1..g.len() - 1 {
                    if g[i] < g[i - 1] && g[i] <= g[i + 1] && g[i] < settings.depth_ratio * ends {
                        out.push(refiner.golden_avoided(i, la, lb, settings.relative_width)?);
                    }
                }
            } else {
                log::debug!("labels {la}/{lb} change relative parity ({pa}); skipped");
            }
        }
    }
    out.sort_by(|a, b| a.amplitude.total_cmp(&b.amplitude));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Configuration {
    /// The doublet order is the same on both sides.
    OrderRestored,
    /// The doublet order is reversed across the crossing.
    OrderReversed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigurationReport {
    pub configuration: Configuration,
    /// Signed doublet splitting ε_odd − ε_even at the first and last sweep point.
    pub splitting_left: f64,
    pub splitting_right: f64,
    /// Exact crossings between the even state and either odd state.
    pub exact_crossings: Vec<f64>,
}

/// Classifies a singlet-doublet crossing from the doublet order on both sides
/// of the sweep window. The odd doublet member at each end is the odd state
/// closest in quasienergy to the even one.
pub fn classify_configuration(
    sweep: &Sweep,
    even_label: usize,
    avoided: &CrossingReport,
    crossings: &[CrossingReport],
) -> ConfigurationReport {
    let omega = sweep.params.frequency();
    let splitting = |p: &super::SweepPoint| {
        let e = p.state(even_label).quasienergy;
        let (a, b) = avoided.labels;
        let da = wrapped_difference(p.state(a).quasienergy, e, omega);
        let db = wrapped_difference(p.state(b).quasienergy, e, omega);
        if da.abs() < db.abs() {
            da
        } else {
            db
        }
    };
    let left = splitting(&sweep.points[0]);
    let right = splitting(&sweep.points[sweep.points.len() - 1]);
    let (a, b) = avoided.labels;
    let exact_crossings = crossings
        .iter()
        .filter(|c| c.kind == CrossingKind::Exact)
        .filter(|c| {
            let (x, y) = c.labels;
            (x == even_label && (y == a || y == b)) || (y == even_label && (x == a || x == b))
        })
        .map(|c| c.amplitude)
        .collect();
    let configuration =
        if left.signum() == right.signum() { Configuration::OrderRestored } else { Configuration::OrderReversed };
    ConfigurationReport { configuration, splitting_left: left, splitting_right: right, exact_crossings }
}
