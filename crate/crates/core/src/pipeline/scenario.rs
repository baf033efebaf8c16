use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ModeChoice, Scenario};
use super::overlay::render_overlay;
use crate::detection::{
    detect_multiscale, Detection, DEFAULT_MIN_NEIGHBORS, DEFAULT_SCALE_FACTOR, DEFAULT_STEP,
};
use crate::error::{Error, Result};
use crate::fusion::{
    fuse, map_grid_to_pixels, AcousticPeak, FaceObservation, FaceTrack, FusionOutcome, OutcomeKind,
    OutcomeRecord,
};
use crate::image::GrayImage;
use crate::localization::{
    combined_srp_map_with_speed, find_peak, srp_map_with_speed, GridCell, SrpMode, SteeredPowerMap,
    Weighting,
};
use crate::recognition::{knn_classify, preprocess_face, RecognitionResult};
use crate::scene_sim::{
    render_synthetic_frame, synthesize_scene, synthesize_silence, PixelBox, SceneDescription,
};

/// Multiple of the silence median a peak must reach to count as a source.
pub const PEAK_FLOOR_FACTOR: f64 = 3.0;

/// Per-frame seed: a fixed mix of the run seed, the scene seed and the frame
/// index, so frames are independent of scheduling.
pub fn frame_seed(run_seed: u64, scene_seed: u64, frame: usize) -> u64 {
    let mut z = run_seed
        ^ scene_seed.rotate_left(21)
        ^ (frame as u64)
            .wrapping_add(1)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15);
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Minimum peak power per weighting, from a noise-only frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakFloors {
    pub phat: f64,
    pub constant: f64,
}

impl PeakFloors {
    pub fn for_mode(&self, mode: SrpMode) -> f64 {
        match mode {
            SrpMode::SrpPhat => self.phat,
            SrpMode::SrpConst => self.constant,
        }
    }
}

/// Everything computed for one frame before tracking.
#[derive(Debug, Clone)]
pub struct FrameAnalysis {
    pub frame: usize,
    pub image: GrayImage,
    pub map: SteeredPowerMap,
    pub peak: Option<(GridCell, f64)>,
    /// Peak mapped into image pixels.
    pub peak_px: Option<[f64; 2]>,
    pub detections: Vec<Detection>,
    pub faces: Vec<RecognitionResult>,
    /// Ground-truth grid cell of the first source, if any.
    pub truth_cell: Option<GridCell>,
}

/// Per-frame outcome after tracking and fusion.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutcome {
    pub frame: usize,
    pub mode: SrpMode,
    pub outcome: FusionOutcome,
    pub localization_error_cells: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalizationStats {
    pub frames_with_truth: usize,
    pub frames_with_peak: usize,
    pub median_error_cells: Option<f64>,
    pub mean_error_cells: Option<f64>,
    pub max_error_cells: Option<f64>,
}

/// Contents of `summary.json`. Holds no timing so repeated runs match byte
/// for byte.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSummary {
    pub frames: usize,
    pub seed: u64,
    pub image_size: [usize; 2],
    pub peak_floors: PeakFloors,
    pub modes: BTreeMap<String, usize>,
    pub outcomes: BTreeMap<String, usize>,
    /// Sprite identity closest to the first source, if within colocation
    /// distance.
    pub expected_speaker: Option<String>,
    pub identified_correctly: usize,
    pub localization: LocalizationStats,
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub outcomes: Vec<FrameOutcome>,
    pub summary: ScenarioSummary,
    pub artifacts: Vec<PathBuf>,
    pub elapsed_secs: f64,
}

impl ScenarioReport {
    pub fn frames_per_second(&self) -> f64 {
        if self.elapsed_secs > 0.0 {
            self.outcomes.len() as f64 / self.elapsed_secs
        } else {
            f64::INFINITY
        }
    }
}

fn frame_scene(scenario: &Scenario, frame: usize) -> SceneDescription {
    let mut scene = scenario.scene.clone();
    scene.seed = frame_seed(scenario.settings.seed, scenario.scene.seed, frame);
    scene
}

fn frame_duration(scenario: &Scenario) -> f64 {
    scenario.settings.frame_len as f64 / scenario.settings.sample_rate
}

fn compute_map(
    scenario: &Scenario,
    signal: &crate::scene_sim::MultichannelSignal,
    mode: ModeChoice,
) -> Result<SteeredPowerMap> {
    let c = scenario.scene.speed_of_sound;
    match mode {
        ModeChoice::Auto => combined_srp_map_with_speed(
            signal,
            &scenario.array,
            &scenario.grid,
            scenario.settings.bandwidth_threshold,
            c,
        ),
        ModeChoice::Phat => {
            srp_map_with_speed(signal, &scenario.array, &scenario.grid, Weighting::Phat, c)
        }
        ModeChoice::Const => {
            srp_map_with_speed(signal, &scenario.array, &scenario.grid, Weighting::Const, c)
        }
    }
}

/// Peak floors from a noise-only frame at the scene's noise level. An exactly
/// silent calibration frame yields the smallest positive floor, so an all-zero
/// map never reports a peak.
pub fn calibrate_floors(scenario: &Scenario) -> Result<PeakFloors> {
    let mut scene = scenario.scene.clone();
    scene.seed = frame_seed(
        scenario.settings.seed ^ 0x5A5A,
        scenario.scene.seed,
        usize::MAX,
    );
    let silence = synthesize_silence(
        &scene,
        &scenario.array,
        scenario.settings.sample_rate,
        frame_duration(scenario),
    )?;
    let floor = |w: ModeChoice| -> Result<f64> {
        let median = compute_map(scenario, &silence, w)?.median();
        Ok((PEAK_FLOOR_FACTOR * median).max(f64::MIN_POSITIVE))
    };
    Ok(PeakFloors {
        phat: floor(ModeChoice::Phat)?,
        constant: floor(ModeChoice::Const)?,
    })
}

/// Localization, detection and recognition for one frame. Pure function of
/// the scenario and the frame index.
pub fn analyze_frame(
    scenario: &Scenario,
    floors: &PeakFloors,
    frame: usize,
) -> Result<FrameAnalysis> {
    let s = &scenario.settings;
    let scene = frame_scene(scenario, frame);
    let signal = synthesize_scene(
        &scene,
        &scenario.array,
        s.sample_rate,
        frame_duration(scenario),
    )?;
    let map = compute_map(scenario, &signal, s.mode)?;
    let peak = find_peak(&map, floors.for_mode(map.mode_used));
    let peak_px = match peak {
        Some((cell, _)) => Some(map_grid_to_pixels(cell, &scenario.grid, s.image_size)?),
        None => None,
    };
    let truth_cell = scene
        .sources
        .first()
        .and_then(|src| scenario.grid.cell_of(&src.position));

    let (image, _) = render_synthetic_frame(&scene, s.image_size.0, s.image_size.1)?;
    let detections = detect_multiscale(
        &image,
        &scenario.cascade,
        DEFAULT_SCALE_FACTOR,
        DEFAULT_STEP,
        DEFAULT_MIN_NEIGHBORS,
    )?;
    let mut faces = Vec::with_capacity(detections.len());
    for det in &detections {
        let bbox = det.to_pixel_box();
        // a detection whose eyes cannot be located is not a usable face
        let face = match preprocess_face(&image, &bbox, None) {
            Ok(face) => face,
            Err(Error::PreprocessingFailed(_)) => continue,
            Err(e) => return Err(e),
        };
        let mut result = knn_classify(&scenario.face_model, &face, s.knn_k, s.unknown_threshold)?;
        result.position = Some(bbox);
        faces.push(result);
    }
    Ok(FrameAnalysis {
        frame,
        image,
        map,
        peak,
        peak_px,
        detections,
        faces,
        truth_cell,
    })
}

fn box_center(b: &PixelBox) -> [f64; 2] {
    b.center()
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// The face handed to the tracker: nearest to the acoustic peak when there is
/// one, else the largest.
pub fn select_face(
    faces: &[RecognitionResult],
    peak_px: Option<[f64; 2]>,
) -> Option<FaceObservation> {
    let with_pos = faces.iter().filter_map(|f| f.position.map(|p| (f, p)));
    let chosen = match peak_px {
        Some(peak) => with_pos
            .min_by(|a, b| dist2(box_center(&a.1), peak).total_cmp(&dist2(box_center(&b.1), peak))),
        None => with_pos.max_by(|a, b| a.1.area().total_cmp(&b.1.area())),
    }?;
    Some(FaceObservation {
        label: chosen.0.label.clone(),
        position: box_center(&chosen.1),
    })
}

fn expected_speaker(scenario: &Scenario) -> Option<String> {
    let src = scenario.scene.sources.first()?;
    let (a, b) = scenario.grid.plane_coordinates(&src.position);
    let (w, h) = scenario.settings.image_size;
    let px = [a * w as f64, b * h as f64];
    scenario
        .scene
        .face_sprites
        .iter()
        .map(|s| (s, dist2([s.x, s.y], px)))
        .filter(|(_, d)| d.sqrt() <= scenario.settings.colocate_px())
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(s, _)| s.identity.clone())
}

fn mode_name(mode: SrpMode) -> &'static str {
    match mode {
        SrpMode::SrpPhat => "SRP_PHAT",
        SrpMode::SrpConst => "SRP_CONST",
    }
}

fn median(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2]),
        _ => Some(0.5 * (sorted[n / 2 - 1] + sorted[n / 2])),
    }
}

/// Runs every frame and writes `frame_NNNN.ppm`, `outcomes.jsonl` and
/// `summary.json` under `out`.
pub fn run_scenario(scenario: &Scenario, out: &Path) -> Result<ScenarioReport> {
    let start = Instant::now();
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let floors = calibrate_floors(scenario)?;

    // rayon keeps index order; the first failing frame is reported
    let results: Vec<Result<FrameAnalysis>> = (0..scenario.settings.frames)
        .into_par_iter()
        .map(|f| analyze_frame(scenario, &floors, f))
        .collect();
    let mut analyses = Vec::with_capacity(results.len());
    for (frame, r) in results.into_iter().enumerate() {
        analyses.push(r.map_err(|e| Error::Frame {
            frame,
            source: Box::new(e),
        })?);
    }

    let colocate = scenario.settings.colocate_px();
    let proximity = scenario.settings.proximity_px();
    let mut track = FaceTrack::new();
    let mut outcomes = Vec::with_capacity(analyses.len());
    let mut lines = String::new();
    let mut artifacts = Vec::new();
    for a in &analyses {
        let obs = select_face(&a.faces, a.peak_px);
        let confirmed = track.update(obs, proximity);
        let acoustic = a
            .peak
            .zip(a.peak_px)
            .map(|((_, power), position)| AcousticPeak { position, power });
        let outcome = fuse(acoustic.as_ref(), confirmed.as_ref(), colocate);
        let localization_error_cells = match (a.peak, a.truth_cell) {
            (Some((cell, _)), Some(truth)) => Some(cell.euclidean(&truth)),
            _ => None,
        };

        let overlay = render_overlay(&a.image, &a.map, &a.detections, &outcome);
        let path = out.join(format!("frame_{:04}.ppm", a.frame));
        overlay.save_ppm(&path)?;
        artifacts.push(path);

        lines.push_str(&OutcomeRecord::new(a.frame as u64, &outcome).to_json_line());
        lines.push('\n');
        outcomes.push(FrameOutcome {
            frame: a.frame,
            mode: a.map.mode_used,
            outcome,
            localization_error_cells,
        });
    }
    let outcomes_path = out.join("outcomes.jsonl");
    fs::write(&outcomes_path, lines).map_err(|e| Error::io(&outcomes_path, e))?;
    artifacts.push(outcomes_path);

    let summary = summarize(scenario, &floors, &analyses, &outcomes);
    let summary_path = out.join("summary.json");
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(&summary_path, text + "\n").map_err(|e| Error::io(&summary_path, e))?;
    artifacts.push(summary_path);

    Ok(ScenarioReport {
        outcomes,
        summary,
        artifacts,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

fn summarize(
    scenario: &Scenario,
    floors: &PeakFloors,
    analyses: &[FrameAnalysis],
    outcomes: &[FrameOutcome],
) -> ScenarioSummary {
    let mut modes = BTreeMap::new();
    let mut kinds: BTreeMap<String, usize> = OutcomeKind::ALL
        .iter()
        .map(|k| (k.as_str().to_string(), 0))
        .collect();
    for o in outcomes {
        *modes.entry(mode_name(o.mode).to_string()).or_insert(0) += 1;
        *kinds
            .entry(o.outcome.kind.as_str().to_string())
            .or_insert(0) += 1;
    }
    let expected = expected_speaker(scenario);
    let identified_correctly = outcomes
        .iter()
        .filter(|o| o.outcome.kind == OutcomeKind::IdentifiedSpeaker)
        .filter(|o| expected.is_some() && o.outcome.face_identity == expected)
        .count();
    let mut errors: Vec<f64> = outcomes
        .iter()
        .filter_map(|o| o.localization_error_cells)
        .collect();
    errors.sort_by(f64::total_cmp);
    let localization = LocalizationStats {
        frames_with_truth: analyses.iter().filter(|a| a.truth_cell.is_some()).count(),
        frames_with_peak: analyses.iter().filter(|a| a.peak.is_some()).count(),
        median_error_cells: median(&errors),
        mean_error_cells: (!errors.is_empty())
            .then(|| errors.iter().sum::<f64>() / errors.len() as f64),
        max_error_cells: errors.last().copied(),
    };
    ScenarioSummary {
        frames: outcomes.len(),
        seed: scenario.settings.seed,
        image_size: [
            scenario.settings.image_size.0,
            scenario.settings.image_size.1,
        ],
        peak_floors: *floors,
        modes,
        outcomes: kinds,
        expected_speaker: expected,
        identified_correctly,
        localization,
    }
}
