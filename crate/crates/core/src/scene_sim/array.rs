use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Point or direction in meters. The array plane is z = 0.
pub type Vec3 = [f64; 3];

/// Dry air at 20 °C.
pub const SPEED_OF_SOUND: f64 = 343.0;

/// Minimum permitted spacing between two microphones (1 mm).
const MIN_MIC_SPACING: f64 = 1e-3;

pub fn distance(a: &Vec3, b: &Vec3) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Microphone positions of a planar array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicArray {
    name: String,
    mics: Vec<Vec3>,
}

impl MicArray {
    pub fn new(name: impl Into<String>, mics: Vec<Vec3>) -> Result<Self> {
        if mics.is_empty() {
            return Err(Error::InvalidGeometry("array has no microphones".into()));
        }
        if let Some(bad) = mics.iter().position(|m| m.iter().any(|c| !c.is_finite())) {
            return Err(Error::InvalidGeometry(format!(
                "microphone {bad} has a non-finite coordinate"
            )));
        }
        for i in 0..mics.len() {
            for j in i + 1..mics.len() {
                if distance(&mics[i], &mics[j]) < MIN_MIC_SPACING {
                    return Err(Error::InvalidGeometry(format!(
                        "microphones {i} and {j} are closer than 1 mm"
                    )));
                }
            }
        }
        Ok(Self {
            name: name.into(),
            mics,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn mics(&self) -> &[Vec3] {
        &self.mics
    }

    pub fn len(&self) -> usize {
        self.mics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mics.is_empty()
    }

    /// All unordered index pairs `(a, b)` with `a < b`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.mics.len();
        (0..n).flat_map(move |a| (a + 1..n).map(move |b| (a, b)))
    }

    /// Smallest inter-microphone distance, `None` for a single microphone.
    pub fn min_pair_distance(&self) -> Option<f64> {
        self.pairs()
            .map(|(a, b)| distance(&self.mics[a], &self.mics[b]))
            .min_by(f64::total_cmp)
    }

    /// The 7 + 9 double ring with 0.2 m / 0.4 m diameters.
    pub fn default_double_ring() -> Self {
        DoubleRingParams::default()
            .build()
            .expect("default ring geometry is valid")
    }
}

/// Parameters of [`build_double_ring_array`], as they appear in config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DoubleRingParams {
    pub inner_diameter: f64,
    pub outer_diameter: f64,
    pub n_inner: usize,
    pub n_outer: usize,
    pub angular_offset: f64,
}

impl Default for DoubleRingParams {
    fn default() -> Self {
        Self {
            inner_diameter: 0.2,
            outer_diameter: 0.4,
            n_inner: 7,
            n_outer: 9,
            angular_offset: 0.0,
        }
    }
}

impl DoubleRingParams {
    pub fn build(&self) -> Result<MicArray> {
        build_double_ring_array(
            self.inner_diameter,
            self.outer_diameter,
            self.n_inner,
            self.n_outer,
            self.angular_offset,
        )
    }
}

/// Two concentric rings of evenly spaced microphones in the z = 0 plane.
///
/// Ring `k`'s first microphone sits at polar angle `angular_offset`; the
/// offset rotates the whole array rigidly.
pub fn build_double_ring_array(
    inner_diameter: f64,
    outer_diameter: f64,
    n_inner: usize,
    n_outer: usize,
    angular_offset: f64,
) -> Result<MicArray> {
    let finite = [inner_diameter, outer_diameter, angular_offset]
        .iter()
        .all(|v| v.is_finite());
    if !finite || inner_diameter <= 0.0 || outer_diameter <= 0.0 {
        return Err(Error::InvalidGeometry(
            "ring diameters must be positive and finite".into(),
        ));
    }
    if outer_diameter <= inner_diameter {
        return Err(Error::InvalidGeometry(format!(
            "outer diameter {outer_diameter} must exceed inner diameter {inner_diameter}"
        )));
    }
    if n_inner == 0 && n_outer == 0 {
        return Err(Error::InvalidGeometry("both rings are empty".into()));
    }

    let ring = |diameter: f64, count: usize| {
        let radius = diameter / 2.0;
        (0..count).map(move |k| {
            let angle = angular_offset + std::f64::consts::TAU * k as f64 / count as f64;
            [radius * angle.cos(), radius * angle.sin(), 0.0]
        })
    };
    let mics = ring(inner_diameter, n_inner)
        .chain(ring(outer_diameter, n_outer))
        .collect();
    MicArray::new(format!("double-ring-{n_inner}+{n_outer}"), mics)
}

/// Highest frequency free of spatial aliasing for the closest microphone
/// pair: `c / (2 d_min)`.
pub fn spatial_alias_limit(array: &MicArray) -> Result<f64> {
    let d_min = array.min_pair_distance().ok_or(Error::InsufficientArray {
        needed: 2,
        got: array.len(),
    })?;
    Ok(SPEED_OF_SOUND / (2.0 * d_min))
}

/// Time difference of arrival for the pair `(a, b)`:
/// `(|point - mic_a| - |point - mic_b|) / c`.
///
/// Positive when the wavefront reaches `mic_b` first.
pub fn expected_tdoa(array: &MicArray, pair: (usize, usize), point: &Vec3, c: f64) -> Result<f64> {
    let (a, b) = pair;
    let n = array.len();
    if a >= n || b >= n {
        return Err(Error::Bounds(format!(
            "pair ({a}, {b}) out of range for {n} microphones"
        )));
    }
    if point.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidGeometry(
            "steering point is not finite".into(),
        ));
    }
    let mics = array.mics();
    Ok((distance(point, &mics[a]) - distance(point, &mics[b])) / c)
}
