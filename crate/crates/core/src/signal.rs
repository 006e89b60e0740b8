//! Spectral peaks of uniformly sampled real signals.

use rustfft::{num_complex::Complex64, FftPlanner};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    /// Angular frequency.
    pub frequency: f64,
    /// Windowed amplitude relative to the strongest peak.
    pub relative_amplitude: f64,
}

fn hann(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos()).collect()
}

/// |Σ_j w_j y_j e^{−iνj dt}| at an arbitrary angular frequency ν.
fn dtft(y: &[f64], dt: f64, nu: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (j, v) in y.iter().enumerate() {
        let ph = nu * j as f64 * dt;
        re += v * ph.cos();
        im -= v * ph.sin();
    }
    re.hypot(im)
}

/// Local maxima of the Hann-windowed spectrum above `threshold` times the largest one,
/// refined off the FFT grid by golden-section search on the continuous transform.
/// The mean is removed first.
pub fn spectral_peaks(signal: &[f64], dt: f64, threshold: f64) -> Result<Vec<Peak>> {
    let n = signal.len();
    if n < 16 {
        return Err(invalid("signal", "need at least 16 samples"));
    }
    if !(dt > 0.0) {
        return Err(invalid("dt", "sampling interval must be positive"));
    }
    let mean = signal.iter().sum::<f64>() / n as f64;
    let y: Vec<f64> = signal.iter().zip(hann(n)).map(|(v, w)| (v - mean) * w).collect();
    let mut buf: Vec<Complex64> = y.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mag: Vec<f64> = buf[..n / 2].iter().map(|c| c.norm()).collect();
    let dnu = 2.0 * std::f64::consts::PI / (n as f64 * dt);
    let mut peaks = Vec::new();
    for k in 1..mag.len() - 1 {
        if mag[k] > mag[k - 1] && mag[k] >= mag[k + 1] {
            let (mut a, mut b) = ((k as f64 - 1.0) * dnu, (k as f64 + 1.0) * dnu);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..60 {
                let (c, d) = (b - g * (b - a), a + g * (b - a));
                if dtft(&y, dt, c) > dtft(&y, dt, d) {
                    b = d;
                } else {
                    a = c;
                }
            }
            let nu = 0.5 * (a + b);
            peaks.push(Peak { frequency: nu, relative_amplitude: dtft(&y, dt, nu) });
        }
    }
    let top = peaks.iter().map(|p| p.relative_amplitude).fold(0.0, f64::max);
    if top == 0.0 {
        return Ok(Vec::new());
    }
    let mut peaks: Vec<Peak> = peaks
        .into_iter()
        .map(|p| Peak { relative_amplitude: p.relative_amplitude / top, ..p })
        .filter(|p| p.relative_amplitude >= threshold)
        .collect();
    peaks.sort_by(|a, b| b.relative_amplitude.total_cmp(&a.relative_amplitude));
    Ok(peaks)
}
