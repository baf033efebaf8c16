use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::bandwidth::estimate_bandwidth;
use super::gcc::{ChannelSpectra, GccFunction, Weighting};
use crate::error::{Error, Result};
use crate::image::RgbImage;
use crate::scene_sim::{distance, MicArray, MultichannelSignal, Vec3, SPEED_OF_SOUND};

/// Bandwidth below which the constant-weighted SRP is used.
pub const DEFAULT_BANDWIDTH_THRESHOLD: f64 = 4_000.0;

/// Which beamformer produced a map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SrpMode {
    #[serde(rename = "SRP_PHAT")]
    SrpPhat,
    #[serde(rename = "SRP_CONST")]
    SrpConst,
}

impl SrpMode {
    pub fn weighting(self) -> Weighting {
        match self {
            SrpMode::SrpPhat => Weighting::Phat,
            SrpMode::SrpConst => Weighting::Const,
        }
    }

    pub fn from_weighting(w: Weighting) -> Self {
        match w {
            Weighting::Phat => SrpMode::SrpPhat,
            Weighting::Const => SrpMode::SrpConst,
        }
    }
}

/// Cell index: `row` runs along the grid's v axis, `col` along its u axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GridCell {
    pub row: usize,
    pub col: usize,
}

impl GridCell {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    /// Chebyshev distance in cells.
    pub fn chebyshev(&self, other: &GridCell) -> usize {
        self.row
            .abs_diff(other.row)
            .max(self.col.abs_diff(other.col))
    }

    pub fn euclidean(&self, other: &GridCell) -> f64 {
        let dr = self.row as f64 - other.row as f64;
        let dc = self.col as f64 - other.col as f64;
        (dr * dr + dc * dc).sqrt()
    }
}

/// Planar patch of steering points: `origin` is one corner, `u_axis` and
/// `v_axis` span the full patch, split into `n_u` × `n_v` cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringGrid {
    origin: Vec3,
    u_axis: Vec3,
    v_axis: Vec3,
    n_u: usize,
    n_v: usize,
}

fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl SteeringGrid {
    pub fn new(origin: Vec3, u_axis: Vec3, v_axis: Vec3, n_u: usize, n_v: usize) -> Result<Self> {
        if n_u == 0 || n_v == 0 {
            return Err(Error::InvalidGeometry(
                "grid cell counts must be at least 1".into(),
            ));
        }
        if origin
            .iter()
            .chain(&u_axis)
            .chain(&v_axis)
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidGeometry("grid vectors must be finite".into()));
        }
        let cross = [
            u_axis[1] * v_axis[2] - u_axis[2] * v_axis[1],
            u_axis[2] * v_axis[0] - u_axis[0] * v_axis[2],
            u_axis[0] * v_axis[1] - u_axis[1] * v_axis[0],
        ];
        let scale = dot(&u_axis, &u_axis).sqrt() * dot(&v_axis, &v_axis).sqrt();
        if scale == 0.0 || dot(&cross, &cross).sqrt() <= 1e-12 * scale {
            return Err(Error::InvalidGeometry(
                "grid axes are parallel or zero".into(),
            ));
        }
        Ok(Self {
            origin,
            u_axis,
            v_axis,
            n_u,
            n_v,
        })
    }

    /// Plane z = `distance` parallel to the array, `half_width` × `half_height`
    /// either side of the array axis. Row 0 is the top (+y) edge, column 0 the
    /// left (-x) edge, as seen by a camera at the array center.
    pub fn camera_plane(
        distance: f64,
        half_width: f64,
        half_height: f64,
        n_u: usize,
        n_v: usize,
    ) -> Result<Self> {
        Self::new(
            [-half_width, half_height, distance],
            [2.0 * half_width, 0.0, 0.0],
            [0.0, -2.0 * half_height, 0.0],
            n_u,
            n_v,
        )
    }

    /// 64 × 48 cells over ±1.5 m × ±1.125 m at z = 2 m.
    pub fn default_camera() -> Self {
        Self::camera_plane(2.0, 1.5, 1.125, 64, 48).expect("default grid is valid")
    }

    pub fn n_u(&self) -> usize {
        self.n_u
    }

    pub fn n_v(&self) -> usize {
        self.n_v
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn u_axis(&self) -> Vec3 {
        self.u_axis
    }

    pub fn v_axis(&self) -> Vec3 {
        self.v_axis
    }

    pub fn cell_count(&self) -> usize {
        self.n_u * self.n_v
    }

    pub fn contains(&self, cell: GridCell) -> bool {
        cell.row < self.n_v && cell.col < self.n_u
    }

    /// Point at fractional plane coordinates `(a, b)` ∈ [0, 1]².
    pub fn point_at(&self, a: f64, b: f64) -> Vec3 {
        let (o, u, v) = (self.origin, self.u_axis, self.v_axis);
        std::array::from_fn(|k| o[k] + a * u[k] + b * v[k])
    }

    pub fn cell_center(&self, cell: GridCell) -> Result<Vec3> {
        if !self.contains(cell) {
            return Err(Error::Bounds(format!(
                "cell ({}, {}) outside {}x{} grid",
                cell.row, cell.col, self.n_v, self.n_u
            )));
        }
        Ok(self.point_at(
            (cell.col as f64 + 0.5) / self.n_u as f64,
            (cell.row as f64 + 0.5) / self.n_v as f64,
        ))
    }

    /// Fractional plane coordinates of the projection of `point`.
    pub fn plane_coordinates(&self, point: &Vec3) -> (f64, f64) {
        let d = [
            point[0] - self.origin[0],
            point[1] - self.origin[1],
            point[2] - self.origin[2],
        ];
        let uu = dot(&self.u_axis, &self.u_axis);
        let vv = dot(&self.v_axis, &self.v_axis);
        let uv = dot(&self.u_axis, &self.v_axis);
        let du = dot(&self.u_axis, &d);
        let dv = dot(&self.v_axis, &d);
        let det = uu * vv - uv * uv;
        ((du * vv - dv * uv) / det, (dv * uu - du * uv) / det)
    }

    /// Cell containing the projection of `point`, if it falls on the grid.
    pub fn cell_of(&self, point: &Vec3) -> Option<GridCell> {
        let (a, b) = self.plane_coordinates(point);
        if !(0.0..1.0).contains(&a) || !(0.0..1.0).contains(&b) {
            return None;
        }
        Some(GridCell::new(
            ((b * self.n_v as f64) as usize).min(self.n_v - 1),
            ((a * self.n_u as f64) as usize).min(self.n_u - 1),
        ))
    }
}

/// Steered response power over a [`SteeringGrid`], stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeredPowerMap {
    pub grid: SteeringGrid,
    power: Vec<f64>,
    pub mode_used: SrpMode,
}

impl SteeredPowerMap {
    pub fn new(grid: SteeringGrid, power: Vec<f64>, mode_used: SrpMode) -> Result<Self> {
        if power.len() != grid.cell_count() {
            return Err(Error::Shape(format!(
                "{} power values for a {}-cell grid",
                power.len(),
                grid.cell_count()
            )));
        }
        if power.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Shape(
                "power values must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            grid,
            power,
            mode_used,
        })
    }

    pub fn power(&self) -> &[f64] {
        &self.power
    }

    pub fn at(&self, cell: GridCell) -> f64 {
        self.power[cell.row * self.grid.n_u + cell.col]
    }

    pub fn max(&self) -> f64 {
        self.power.iter().copied().fold(0.0, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.power.iter().sum::<f64>() / self.power.len() as f64
    }

    pub fn median(&self) -> f64 {
        let mut sorted = self.power.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        }
    }

    /// Blue → green → red ramp over [min, max] power, one pixel per cell.
    pub fn to_color_image(&self) -> RgbImage {
        let lo = self.power.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.power.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        let pixels = self
            .power
            .iter()
            .map(|&p| {
                let t = if span > 0.0 { (p - lo) / span } else { 0.0 };
                color_ramp(t)
            })
            .collect();
        RgbImage {
            width: self.grid.n_u,
            height: self.grid.n_v,
            pixels,
        }
    }

    /// Raw power matrix as JSON rows (row 0 first).
    pub fn to_matrix_json(&self) -> String {
        #[derive(Serialize)]
        struct Matrix<'a> {
            mode: SrpMode,
            n_u: usize,
            n_v: usize,
            power: Vec<&'a [f64]>,
        }
        let rows = self.power.chunks(self.grid.n_u).collect();
        serde_json::to_string(&Matrix {
            mode: self.mode_used,
            n_u: self.grid.n_u,
            n_v: self.grid.n_v,
            power: rows,
        })
        .expect("matrix serializes")
    }
}

fn color_ramp(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    let to_u8 = |v: f64| (v * 255.0).round() as u8;
    if t < 0.5 {
        let s = 2.0 * t;
        [0, to_u8(s), to_u8(1.0 - s)]
    } else {
        let s = 2.0 * t - 1.0;
        [to_u8(s), to_u8(1.0 - s), 0]
    }
}

/// [`srp_map`] with an explicit speed of sound.
pub fn srp_map_with_speed(
    signal: &MultichannelSignal,
    array: &MicArray,
    grid: &SteeringGrid,
    weighting: Weighting,
    speed_of_sound: f64,
) -> Result<SteeredPowerMap> {
    if signal.channel_count() != array.len() {
        return Err(Error::Shape(format!(
            "{} channels for {} microphones",
            signal.channel_count(),
            array.len()
        )));
    }
    if array.len() < 2 {
        return Err(Error::InsufficientArray {
            needed: 2,
            got: array.len(),
        });
    }
    let fs = signal.sample_rate();
    let mics = array.mics();
    let pairs: Vec<(usize, usize)> = array.pairs().collect();
    let max_spacing = pairs
        .iter()
        .map(|&(a, b)| distance(&mics[a], &mics[b]))
        .fold(0.0, f64::max);
    let max_lag = (max_spacing / speed_of_sound * fs).ceil() as usize + 1;

    let channels: Vec<&[f64]> = signal.channels().iter().map(Vec::as_slice).collect();
    let spectra = ChannelSpectra::new(&channels);
    let mut planner = FftPlanner::new();
    let correlations: Vec<GccFunction> = pairs
        .iter()
        .map(|&(a, b)| spectra.correlate(a, b, weighting, max_lag, &mut planner))
        .collect();
    let self_power: f64 = (0..array.len())
        .map(|a| spectra.zero_lag_energy(a, weighting))
        .sum();

    let scale = fs / speed_of_sound;
    let power: Vec<f64> = (0..grid.cell_count())
        .into_par_iter()
        .map(|idx| {
            let cell = GridCell::new(idx / grid.n_u, idx % grid.n_u);
            let p = grid.cell_center(cell).expect("cell index in range");
            let dist: Vec<f64> = mics.iter().map(|m| distance(&p, m)).collect();
            let cross: f64 = pairs
                .iter()
                .zip(&correlations)
                .map(|(&(a, b), g)| {
                    // delay of mic b relative to mic a, in samples
                    let lag = ((dist[b] - dist[a]) * scale).round() as i64;
                    g.value_at(lag)
                })
                .sum();
            (self_power + 2.0 * cross).max(0.0)
        })
        .collect();
    SteeredPowerMap::new(grid.clone(), power, SrpMode::from_weighting(weighting))
}

/// Steered response power at every grid cell: the delay-and-sum output power
/// assembled from pairwise weighted cross-correlations looked up at the
/// nearest integer lag of each cell's expected TDOA.
pub fn srp_map(
    signal: &MultichannelSignal,
    array: &MicArray,
    grid: &SteeringGrid,
    weighting: Weighting,
) -> Result<SteeredPowerMap> {
    srp_map_with_speed(signal, array, grid, weighting, SPEED_OF_SOUND)
}

/// Picks SRP-PHAT for wideband frames and constant-weighted SRP for frames
/// narrower than `bandwidth_threshold`. A bandwidth exactly at the threshold
/// counts as wideband.
pub fn select_mode(signal: &MultichannelSignal, bandwidth_threshold: f64) -> Result<SrpMode> {
    let bandwidth = estimate_bandwidth(signal)?;
    Ok(if bandwidth < bandwidth_threshold {
        SrpMode::SrpConst
    } else {
        SrpMode::SrpPhat
    })
}

pub fn combined_srp_map(
    signal: &MultichannelSignal,
    array: &MicArray,
    grid: &SteeringGrid,
    bandwidth_threshold: f64,
) -> Result<SteeredPowerMap> {
    combined_srp_map_with_speed(signal, array, grid, bandwidth_threshold, SPEED_OF_SOUND)
}

pub fn combined_srp_map_with_speed(
    signal: &MultichannelSignal,
    array: &MicArray,
    grid: &SteeringGrid,
    bandwidth_threshold: f64,
    speed_of_sound: f64,
) -> Result<SteeredPowerMap> {
    if signal.channel_count() != array.len() {
        return Err(Error::Shape(format!(
            "{} channels for {} microphones",
            signal.channel_count(),
            array.len()
        )));
    }
    let mode = select_mode(signal, bandwidth_threshold)?;
    srp_map_with_speed(signal, array, grid, mode.weighting(), speed_of_sound)
}

/// Location of the map's maximum if it reaches `floor`.
///
/// Ties go to the lowest `(row, col)`.
pub fn find_peak(map: &SteeredPowerMap, floor: f64) -> Option<(GridCell, f64)> {
    let mut best = 0;
    for (i, p) in map.power.iter().enumerate() {
        if *p > map.power[best] {
            best = i;
        }
    }
    let value = map.power[best];
    (value >= floor).then(|| {
        (
            GridCell::new(best / map.grid.n_u, best % map.grid.n_u),
            value,
        )
    })
}
