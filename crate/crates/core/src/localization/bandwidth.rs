use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::scene_sim::MultichannelSignal;

/// Shortest frame [`estimate_bandwidth`] accepts.
pub const MIN_BANDWIDTH_FRAME: usize = 64;

/// Fraction of total power excluded on each side of the occupied band.
const TAIL_FRACTION: f64 = 0.025;

/// Width of the band holding the central 95% of the channel-averaged power
/// spectrum (Hann-windowed periodogram). An all-zero frame has bandwidth 0.
pub fn estimate_bandwidth(frame: &MultichannelSignal) -> Result<f64> {
    let n = frame.len();
    if n < MIN_BANDWIDTH_FRAME {
        return Err(Error::Shape(format!(
            "bandwidth estimation needs at least {MIN_BANDWIDTH_FRAME} samples, got {n}"
        )));
    }
    let window: Vec<f64> = (0..n)
        .map(|i| 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / n as f64).cos())
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let half = n / 2 + 1;
    let mut power = vec![0.0; half];
    for channel in frame.channels() {
        let mut buf: Vec<Complex64> = channel
            .iter()
            .zip(&window)
            .map(|(v, w)| Complex64::new(v * w, 0.0))
            .collect();
        fft.process(&mut buf);
        for (p, x) in power.iter_mut().zip(&buf) {
            *p += x.norm_sqr();
        }
    }
    let total: f64 = power.iter().sum();
    if total <= 0.0 {
        return Ok(0.0);
    }
    let bin_hz = frame.sample_rate() / n as f64;
    let mut cumulative = 0.0;
    let mut lo = None;
    let mut hi = half - 1;
    for (k, p) in power.iter().enumerate() {
        cumulative += p;
        if lo.is_none() && cumulative >= TAIL_FRACTION * total {
            lo = Some(k);
        }
        if cumulative >= (1.0 - TAIL_FRACTION) * total {
            hi = k;
            break;
        }
    }
    let lo = lo.unwrap_or(0);
    Ok((hi - lo) as f64 * bin_hz)
}
