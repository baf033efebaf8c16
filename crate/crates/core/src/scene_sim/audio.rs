use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::array::{distance, MicArray};
use super::scene::{SceneDescription, SignalKind};
use crate::error::{Error, Result};

/// Default sampling rate; 4 kHz is one eighth of it.
pub const DEFAULT_SAMPLE_RATE: f64 = 32_000.0;

/// Half-width of the windowed-sinc fractional-delay kernel (8 taps total).
const SINC_HALF_WIDTH: i64 = 4;

/// Path lengths are rounded to this grid (1 nm) before computing delay and gain.
const PATH_QUANTUM: f64 = 1e-9;

/// Synchronously sampled channels, one row per microphone.
#[derive(Debug, Clone, PartialEq)]
pub struct MultichannelSignal {
    sample_rate: f64,
    channels: Vec<Vec<f64>>,
}

impl MultichannelSignal {
    pub fn new(sample_rate: f64, channels: Vec<Vec<f64>>) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::Shape(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        let Some(first) = channels.first() else {
            return Err(Error::Shape("signal has no channels".into()));
        };
        let n = first.len();
        if n == 0 {
            return Err(Error::Shape("channels are empty".into()));
        }
        if let Some(bad) = channels.iter().position(|c| c.len() != n) {
            return Err(Error::Shape(format!(
                "channel {bad} has {} samples, channel 0 has {n}",
                channels[bad].len()
            )));
        }
        Ok(Self {
            sample_rate,
            channels,
        })
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Samples `start..start + len` of every channel.
    pub fn slice(&self, start: usize, len: usize) -> Result<MultichannelSignal> {
        if start + len > self.len() {
            return Err(Error::Bounds(format!(
                "slice {start}..{} exceeds {} samples",
                start + len,
                self.len()
            )));
        }
        MultichannelSignal::new(
            self.sample_rate,
            self.channels
                .iter()
                .map(|c| c[start..start + len].to_vec())
                .collect(),
        )
    }

    /// Interleaved little-endian `f32` bytes plus the JSON sidecar text.
    pub fn to_interleaved_f32(&self) -> (Vec<u8>, String) {
        let mut bytes = Vec::with_capacity(self.len() * self.channel_count() * 4);
        for n in 0..self.len() {
            for ch in &self.channels {
                bytes.extend_from_slice(&(ch[n] as f32).to_le_bytes());
            }
        }
        let sidecar = AudioSidecar {
            sample_rate: self.sample_rate,
            channels: self.channel_count(),
            frames: self.len(),
            format: "f32le-interleaved".into(),
        };
        (
            bytes,
            serde_json::to_string_pretty(&sidecar).expect("sidecar serializes"),
        )
    }

    pub fn from_interleaved_f32(bytes: &[u8], sidecar: &str) -> Result<Self> {
        let meta: AudioSidecar = serde_json::from_str(sidecar)
            .map_err(|e| Error::Config(format!("audio sidecar: {e}")))?;
        if meta.channels == 0 || bytes.len() != meta.channels * meta.frames * 4 {
            return Err(Error::Format(format!(
                "expected {} bytes for {} channels x {} frames, got {}",
                meta.channels * meta.frames * 4,
                meta.channels,
                meta.frames,
                bytes.len()
            )));
        }
        let mut channels = vec![Vec::with_capacity(meta.frames); meta.channels];
        for (i, chunk) in bytes.chunks_exact(4).enumerate() {
            let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
            channels[i % meta.channels].push(f64::from(v));
        }
        Self::new(meta.sample_rate, channels)
    }

    /// Writes `<stem>.f32` and `<stem>.json` next to each other.
    pub fn save(&self, data_path: impl AsRef<Path>) -> Result<()> {
        let data_path = data_path.as_ref();
        let (bytes, sidecar) = self.to_interleaved_f32();
        fs::write(data_path, bytes).map_err(|e| Error::io(data_path, e))?;
        let side = data_path.with_extension("json");
        fs::write(&side, sidecar).map_err(|e| Error::io(&side, e))
    }

    pub fn load(data_path: impl AsRef<Path>) -> Result<Self> {
        let data_path = data_path.as_ref();
        let bytes = fs::read(data_path).map_err(|e| Error::io(data_path, e))?;
        let side = data_path.with_extension("json");
        let sidecar = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        Self::from_interleaved_f32(&bytes, &sidecar)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct AudioSidecar {
    sample_rate: f64,
    channels: usize,
    frames: usize,
    #[serde(default)]
    format: String,
}

/// Hann-windowed sinc taps for a delay of `frac` ∈ [0, 1) samples.
///
/// Tap `t` multiplies input sample `n - int_delay - (t - 3)`.
fn fractional_delay_taps(frac: f64) -> [f64; 8] {
    let mut taps = [0.0; 8];
    if frac == 0.0 {
        taps[3] = 1.0;
        return taps;
    }
    let half = SINC_HALF_WIDTH as f64;
    for (t, tap) in taps.iter_mut().enumerate() {
        let x = (t as f64 - 3.0) - frac;
        let sinc = if x == 0.0 {
            1.0
        } else {
            (std::f64::consts::PI * x).sin() / (std::f64::consts::PI * x)
        };
        let window = if x.abs() < half {
            0.5 * (1.0 + (std::f64::consts::PI * x / half).cos())
        } else {
            0.0
        };
        *tap = sinc * window;
    }
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Source samples over the index range `first..first + len`.
struct SourceBuffer {
    first: i64,
    samples: Vec<f64>,
}

impl SourceBuffer {
    fn at(&self, index: i64) -> f64 {
        let i = index - self.first;
        if i < 0 || i as usize >= self.samples.len() {
            0.0
        } else {
            self.samples[i as usize]
        }
    }
}

fn source_samples(
    kind: &SignalKind,
    first: i64,
    len: usize,
    sample_rate: f64,
    rng: &mut ChaCha8Rng,
) -> Result<SourceBuffer> {
    let samples = match kind {
        SignalKind::Sine { freq_hz } => {
            let w = std::f64::consts::TAU * freq_hz / sample_rate;
            (0..len)
                .map(|i| (w * (first + i as i64) as f64).sin())
                .collect()
        }
        SignalKind::WhiteNoise => (0..len)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect(),
        SignalKind::Sample { path } => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            let data: Vec<f64> = bytes
                .chunks_exact(4)
                .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
                .collect();
            if data.is_empty() {
                return Err(Error::InvalidScene(format!(
                    "sample file {} holds no samples",
                    path.display()
                )));
            }
            (0..len)
                .map(|i| data[(first + i as i64).rem_euclid(data.len() as i64) as usize])
                .collect()
        }
    };
    Ok(SourceBuffer { first, samples })
}

fn quantized_distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (distance(a, b) / PATH_QUANTUM).round() * PATH_QUANTUM
}

/// Free-field rendering of every source onto every microphone, without noise.
fn render_clean(
    scene: &SceneDescription,
    array: &MicArray,
    sample_rate: f64,
    n: usize,
) -> Result<Vec<Vec<f64>>> {
    let c = scene.speed_of_sound;
    let mut out = vec![vec![0.0; n]; array.len()];
    for (s_idx, src) in scene.sources.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(scene.seed);
        rng.set_stream(s_idx as u64 + 1);

        // (delay in samples, gain) per mic and path
        let paths: Vec<Vec<(f64, f64)>> = array
            .mics()
            .iter()
            .map(|mic| {
                let r = quantized_distance(&src.position, mic);
                let direct = (r / c * sample_rate, src.level / r);
                std::iter::once(direct)
                    .chain(
                        src.echoes
                            .iter()
                            .map(|e| ((r / c + e.delay_s) * sample_rate, src.level * e.gain / r)),
                    )
                    .collect()
            })
            .collect();
        let max_delay = paths
            .iter()
            .flatten()
            .map(|p| p.0)
            .fold(0.0_f64, f64::max)
            .ceil() as i64;
        let first = -max_delay - SINC_HALF_WIDTH - 1;
        let len = (n as i64 - first + SINC_HALF_WIDTH + 1) as usize;
        let buffer = source_samples(&src.signal, first, len, sample_rate, &mut rng)?;

        for (channel, mic_paths) in out.iter_mut().zip(&paths) {
            for &(delay, gain) in mic_paths {
                let whole = delay.floor();
                let taps = fractional_delay_taps(delay - whole);
                let whole = whole as i64;
                for (i, sample) in channel.iter_mut().enumerate() {
                    let base = i as i64 - whole;
                    let mut acc = 0.0;
                    for (t, tap) in taps.iter().enumerate() {
                        if *tap != 0.0 {
                            acc += tap * buffer.at(base - (t as i64 - 3));
                        }
                    }
                    *sample += gain * acc;
                }
            }
        }
    }
    Ok(out)
}

fn sample_count(sample_rate: f64, duration: f64) -> Result<usize> {
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(Error::InvalidScene(format!(
            "sample rate must be positive, got {sample_rate}"
        )));
    }
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::InvalidScene(format!(
            "duration must be positive, got {duration}"
        )));
    }
    Ok(((duration * sample_rate).round() as usize).max(1))
}

/// Standard deviation of the additive sensor noise for a clean rendering.
fn noise_sigma(scene: &SceneDescription, clean: &[Vec<f64>]) -> f64 {
    let Some(snr_db) = scene.snr_db else {
        return 0.0;
    };
    if scene.sources.is_empty() {
        return 1.0;
    }
    let total: usize = clean.iter().map(Vec::len).sum();
    let power = clean.iter().flatten().map(|v| v * v).sum::<f64>() / total as f64;
    (power / 10f64.powf(snr_db / 10.0)).sqrt()
}

fn add_noise(channels: &mut [Vec<f64>], sigma: f64, seed: u64) {
    if sigma == 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    for channel in channels {
        for v in channel.iter_mut() {
            *v += sigma * rng.sample::<f64, _>(StandardNormal);
        }
    }
}

/// Renders a scene onto an array: each source reaches each microphone
/// delayed by `r / c` and attenuated by `1 / r`, then independent white
/// noise is added at the scene's SNR. Fully determined by `scene.seed`.
pub fn synthesize_scene(
    scene: &SceneDescription,
    array: &MicArray,
    sample_rate: f64,
    duration: f64,
) -> Result<MultichannelSignal> {
    scene.validate()?;
    let n = sample_count(sample_rate, duration)?;
    let mut channels = render_clean(scene, array, sample_rate, n)?;
    let sigma = noise_sigma(scene, &channels);
    add_noise(&mut channels, sigma, scene.seed);
    MultichannelSignal::new(sample_rate, channels)
}

/// Noise-only counterpart of [`synthesize_scene`]: same noise level as the
/// full scene would receive, with the sources silenced.
pub fn synthesize_silence(
    scene: &SceneDescription,
    array: &MicArray,
    sample_rate: f64,
    duration: f64,
) -> Result<MultichannelSignal> {
    scene.validate()?;
    let n = sample_count(sample_rate, duration)?;
    let clean = render_clean(scene, array, sample_rate, n)?;
    let sigma = noise_sigma(scene, &clean);
    let mut channels = vec![vec![0.0; n]; array.len()];
    add_noise(&mut channels, sigma, scene.seed);
    MultichannelSignal::new(sample_rate, channels)
}
