use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use speakerid_core::detection::{
    detect_multiscale, toy_face_cascade, write_detections, CascadeModel,
};
use speakerid_core::fusion::{
    fuse, AcousticPeak, FaceObservation, FaceTrack, OutcomeRecord, COLOCATE_FRACTION,
    PROXIMITY_FRACTION,
};
use speakerid_core::image::GrayImage;
use speakerid_core::localization::{
    combined_srp_map_with_speed, find_peak, srp_map_with_speed, Weighting,
    DEFAULT_BANDWIDTH_THRESHOLD, DEFAULT_FRAME_LEN,
};
use speakerid_core::pipeline::{
    frame_seed, run_experiment, run_scenario, ExperimentParams, GridParams, ModeChoice,
    ScenarioConfig,
};
use speakerid_core::recognition::{
    knn_classify, preprocess_face, synthetic_dataset, FaceDataset, FaceModel, LbphParams,
    TrainSpec, DEFAULT_COMPONENTS,
};
use speakerid_core::scene_sim::{
    render_synthetic_frame, synthesize_scene, DoubleRingParams, MultichannelSignal,
    SceneDescription, SpriteTruth, DEFAULT_SAMPLE_RATE,
};
use speakerid_core::{Error, Result};

use crate::args::{
    DetectArgs, ExperimentArgs, FuseArgs, LocalizeArgs, ModelKind, RecognizeArgs, ScenarioArgs,
    SimulateArgs, TrainArgs,
};

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn load_cascade(path: Option<&Path>) -> Result<CascadeModel> {
    match path {
        Some(p) => CascadeModel::load(p),
        None => Ok(toy_face_cascade()),
    }
}

fn array_params(path: Option<&Path>) -> Result<DoubleRingParams> {
    path.map_or_else(|| Ok(DoubleRingParams::default()), read_json)
}

fn grid_params(path: Option<&Path>) -> Result<GridParams> {
    path.map_or_else(|| Ok(GridParams::default()), read_json)
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("plain data serializes")
}

pub fn scenario_config(args: &ScenarioArgs) -> Result<ScenarioConfig> {
    let mut cfg = match &args.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(p) = &args.scene {
        cfg.scene = Some(p.clone());
    }
    if let Some(p) = &args.array {
        cfg.array = read_json(p)?;
    }
    if let Some(p) = &args.grid {
        cfg.grid = read_json(p)?;
    }
    if let Some(p) = &args.cascade {
        cfg.cascade = Some(p.clone());
    }
    if let Some(p) = &args.face_model {
        cfg.face_model = Some(p.clone());
    }
    if let Some(v) = args.frames {
        cfg.frames = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = &args.out {
        cfg.out = v.clone();
    }
    if let Some(v) = args.mode {
        cfg.mode = v.into();
    }
    if let Some(v) = args.components {
        cfg.components = v;
    }
    if let Some(v) = args.knn_k {
        cfg.knn_k = v;
    }
    if args.unknown_threshold.is_some() {
        cfg.unknown_threshold = args.unknown_threshold;
    }
    if let Some(v) = args.width {
        cfg.image_width = v;
    }
    if let Some(v) = args.height {
        cfg.image_height = v;
    }
    Ok(cfg)
}

pub fn demo(args: &ScenarioArgs) -> Result<()> {
    let cfg = scenario_config(args)?;
    let scenario = cfg.resolve()?;
    let report = run_scenario(&scenario, &cfg.out)?;
    let s = &report.summary;
    for (kind, n) in &s.outcomes {
        println!("{kind:<26}{n}");
    }
    if let Some(name) = &s.expected_speaker {
        println!(
            "correctly identified {name}: {}/{}",
            s.identified_correctly, s.frames
        );
    }
    if let Some(m) = s.localization.median_error_cells {
        println!("median localization error: {m:.2} cells");
    }
    println!(
        "{} frames in {:.2} s ({:.1} frames/s)",
        s.frames,
        report.elapsed_secs,
        report.frames_per_second()
    );
    println!("artifacts written to {}", cfg.out.display());
    Ok(())
}

#[derive(Serialize)]
struct TruthRecord<'a> {
    frame: usize,
    seed: u64,
    sprites: &'a [SpriteTruth],
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    if args.frames == 0 {
        return Err(Error::Config("frames must be at least 1".into()));
    }
    let scene = SceneDescription::load(&args.scene)?;
    let array = array_params(args.array.as_deref())?.build()?;
    create_dir(&args.out)?;
    let duration = DEFAULT_FRAME_LEN as f64 / DEFAULT_SAMPLE_RATE;
    let mut truth = String::new();
    for f in 0..args.frames {
        let mut s = scene.clone();
        s.seed = frame_seed(args.seed, scene.seed, f);
        let signal = synthesize_scene(&s, &array, DEFAULT_SAMPLE_RATE, duration)?;
        signal.save(args.out.join(format!("audio_{f:04}.f32")))?;
        let (img, sprites) = render_synthetic_frame(&s, args.width, args.height)?;
        img.save_pgm(args.out.join(format!("frame_{f:04}.pgm")))?;
        truth.push_str(&to_json(&TruthRecord {
            frame: f,
            seed: s.seed,
            sprites: &sprites,
        }));
        truth.push('\n');
    }
    write_file(&args.out.join("truth.jsonl"), truth)?;
    println!("{} frames written to {}", args.frames, args.out.display());
    Ok(())
}

#[derive(Serialize)]
struct PeakRecord {
    mode: speakerid_core::localization::SrpMode,
    row: Option<usize>,
    col: Option<usize>,
    power: Option<f64>,
}

pub fn localize(args: &LocalizeArgs) -> Result<()> {
    let array = array_params(args.array.as_deref())?.build()?;
    let grid = grid_params(args.grid.as_deref())?.build()?;
    let (signal, c) = match (&args.audio, &args.scene) {
        (Some(p), _) => (
            MultichannelSignal::load(p)?,
            speakerid_core::scene_sim::SPEED_OF_SOUND,
        ),
        (None, Some(p)) => {
            let mut scene = SceneDescription::load(p)?;
            scene.seed = frame_seed(args.seed, scene.seed, 0);
            let duration = DEFAULT_FRAME_LEN as f64 / DEFAULT_SAMPLE_RATE;
            (
                synthesize_scene(&scene, &array, DEFAULT_SAMPLE_RATE, duration)?,
                scene.speed_of_sound,
            )
        }
        (None, None) => {
            return Err(Error::Config(
                "either --audio or --scene is required".into(),
            ))
        }
    };
    let map = match ModeChoice::from(args.mode) {
        ModeChoice::Auto => {
            combined_srp_map_with_speed(&signal, &array, &grid, DEFAULT_BANDWIDTH_THRESHOLD, c)?
        }
        ModeChoice::Phat => srp_map_with_speed(&signal, &array, &grid, Weighting::Phat, c)?,
        ModeChoice::Const => srp_map_with_speed(&signal, &array, &grid, Weighting::Const, c)?,
    };
    create_dir(&args.out)?;
    map.to_color_image().save_ppm(args.out.join("map.ppm"))?;
    write_file(&args.out.join("map.json"), map.to_matrix_json())?;
    let peak = find_peak(&map, args.floor);
    let record = PeakRecord {
        mode: map.mode_used,
        row: peak.map(|(c, _)| c.row),
        col: peak.map(|(c, _)| c.col),
        power: peak.map(|(_, p)| p),
    };
    let line = to_json(&record);
    write_file(&args.out.join("peak.json"), format!("{line}\n"))?;
    println!("{line}");
    Ok(())
}

pub fn detect(args: &DetectArgs) -> Result<()> {
    let img = GrayImage::load_pgm(&args.image)?;
    let cascade = load_cascade(args.cascade.as_deref())?;
    let dets = detect_multiscale(
        &img,
        &cascade,
        args.scale_factor,
        args.step,
        args.min_neighbors,
    )?;
    create_dir(&args.out)?;
    let mut buf = Vec::new();
    write_detections(&mut buf, &dets).expect("writing to memory");
    let path = args.out.join("detections.jsonl");
    write_file(&path, &buf)?;
    std::io::stdout()
        .write_all(&buf)
        .map_err(|e| io_err(Path::new("<stdout>"), e))?;
    Ok(())
}

#[derive(Serialize)]
struct FaceRecord {
    label: String,
    distance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    bbox: Option<[f64; 4]>,
}

pub fn recognize(args: &RecognizeArgs) -> Result<()> {
    let img = GrayImage::load_pgm(&args.image)?;
    let model = FaceModel::load(&args.face_model)?;
    if args.aligned {
        let r = knn_classify(&model, &img, args.knn_k, args.unknown_threshold)?;
        println!(
            "{}",
            to_json(&FaceRecord {
                label: r.label_or_unknown().to_string(),
                distance: r.distance,
                bbox: None,
            })
        );
        return Ok(());
    }
    let cascade = load_cascade(args.cascade.as_deref())?;
    let dets = detect_multiscale(&img, &cascade, 1.1, 2, 3)?;
    for d in dets {
        let bbox = d.to_pixel_box();
        let face = match preprocess_face(&img, &bbox, None) {
            Ok(f) => f,
            Err(Error::PreprocessingFailed(msg)) => {
                eprintln!("skipping detection at ({:.0}, {:.0}): {msg}", d.x, d.y);
                continue;
            }
            Err(e) => return Err(e),
        };
        let r = knn_classify(&model, &face, args.knn_k, args.unknown_threshold)?;
        println!(
            "{}",
            to_json(&FaceRecord {
                label: r.label_or_unknown().to_string(),
                distance: r.distance,
                bbox: Some([d.x, d.y, d.w, d.h]),
            })
        );
    }
    Ok(())
}

fn load_face_dir(dir: &Path) -> Result<FaceDataset> {
    let mut classes: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    classes.sort();
    let mut samples = Vec::new();
    for class in classes {
        let name = class
            .file_name()
            .unwrap_or_default()
            .to_string_lossy()
            .into_owned();
        let mut files: Vec<PathBuf> = fs::read_dir(&class)
            .map_err(|e| io_err(&class, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "pgm"))
            .collect();
        files.sort();
        for f in files {
            samples.push((GrayImage::load_pgm(&f)?, name.clone()));
        }
    }
    if samples.is_empty() {
        return Err(Error::InvalidTraining(format!(
            "no PGM faces under {}",
            dir.display()
        )));
    }
    FaceDataset::from_named(samples)
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let data = match &args.data {
        Some(dir) => load_face_dir(dir)?,
        None => {
            let ids: Vec<&str> = args.identities.iter().map(String::as_str).collect();
            synthetic_dataset(&ids, args.per_class, 1.0, args.seed)?
        }
    };
    let spec = match args.kind {
        ModelKind::Eigen => TrainSpec::Eigen {
            components: args.components.unwrap_or(DEFAULT_COMPONENTS),
            skip_leading: 0,
        },
        ModelKind::Fisher => TrainSpec::Fisher {
            components: args.components,
        },
        ModelKind::Lbph => TrainSpec::Lbph(LbphParams::default()),
    };
    let model = FaceModel::train(&data, &spec)?;
    create_dir(&args.out)?;
    let path = args.out.join("face_model.json");
    model.save(&path)?;
    println!(
        "{} model over {} classes ({} images) written to {}",
        model.recognizer.kind(),
        data.class_count(),
        data.len(),
        path.display()
    );
    Ok(())
}

#[derive(Deserialize)]
struct FuseInput {
    frame: u64,
    #[serde(default)]
    acoustic: Option<AcousticPeak>,
    #[serde(default)]
    face: Option<FaceObservation>,
}

pub fn fuse_lines(args: &FuseArgs) -> Result<()> {
    let text = fs::read_to_string(&args.input).map_err(|e| io_err(&args.input, e))?;
    let colocate = COLOCATE_FRACTION * args.width as f64;
    let proximity = PROXIMITY_FRACTION * args.width as f64;
    let mut track = FaceTrack::new();
    let mut out = String::new();
    for (i, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let input: FuseInput = serde_json::from_str(line)
            .map_err(|e| Error::Config(format!("{} line {}: {e}", args.input.display(), i + 1)))?;
        let confirmed = track.update(input.face, proximity);
        let outcome = fuse(input.acoustic.as_ref(), confirmed.as_ref(), colocate);
        out.push_str(&OutcomeRecord::new(input.frame, &outcome).to_json_line());
        out.push('\n');
    }
    create_dir(&args.out)?;
    write_file(&args.out.join("outcomes.jsonl"), &out)?;
    print!("{out}");
    Ok(())
}

pub fn experiment(args: &ExperimentArgs) -> Result<()> {
    let params = ExperimentParams {
        seed: args.seed,
        trials: args.trials,
        max_components: args.components,
        ..ExperimentParams::default()
    };
    let table = run_experiment(&args.name, &params)?;
    let text = table.to_text();
    create_dir(&args.out)?;
    write_file(&args.out.join(format!("{}.tsv", table.name)), &text)?;
    print!("{text}");
    Ok(())
}
