use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use speakerid_core::image::GrayImage;
use speakerid_core::recognition::*;
use speakerid_core::scene_sim::{render_synthetic_frame, FaceSprite, PixelBox, SceneDescription};
use speakerid_core::Error;

fn random_dataset(
    rng: &mut ChaCha8Rng,
    w: usize,
    h: usize,
    labels: &[usize],
    classes: usize,
) -> FaceDataset {
    let images = labels
        .iter()
        .map(|_| GrayImage::from_fn(w, h, |_, _| rng.random::<u8>()).unwrap())
        .collect();
    FaceDataset::new(
        images,
        labels.to_vec(),
        (0..classes).map(|c| format!("c{c}")).collect(),
    )
    .unwrap()
}

fn centered_matrix(data: &FaceDataset) -> DMatrix<f64> {
    let v = data.vectors();
    let d = v[0].len();
    let r = v.len();
    let mut a = DMatrix::from_fn(d, r, |i, j| v[j][i]);
    for i in 0..d {
        let m = a.row(i).mean();
        a.row_mut(i).add_scalar_mut(-m);
    }
    a
}

#[test]
fn eigenfaces_match_dense_covariance_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let data = random_dataset(&mut rng, 3, 3, &[0, 1, 2, 3], 4);
        let model = train_eigenfaces(&data, 4).unwrap();
        let a = centered_matrix(&data);
        let cov = &a * a.transpose();
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..9).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        // R = 4 centered images span at most 3 dimensions
        assert_eq!(model.component_count(), 3);
        for (k, u) in model.components.iter().enumerate() {
            let col = eig.eigenvectors.column(order[k]);
            let d: f64 = u.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
            let sign = d.signum();
            for (x, y) in u.iter().zip(col.iter()) {
                assert!((x - sign * y).abs() < 1e-6, "component {k}");
            }
            assert!(
                (model.eigenvalues[k] - eig.eigenvalues[order[k]]).abs()
                    < 1e-6 * eig.eigenvalues[order[0]]
            );
        }
    }
}

#[test]
fn projection_equals_least_squares_coefficients() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let data = random_dataset(&mut rng, 5, 4, &[0, 0, 1, 1, 2, 2], 3);
    let model = train_eigenfaces(&data, 4).unwrap();
    let d = model.mean.len();
    let u = DMatrix::from_fn(d, model.component_count(), |i, k| model.components[k][i]);
    for _ in 0..5 {
        let img = GrayImage::from_fn(5, 4, |_, _| rng.random::<u8>()).unwrap();
        let phi = DVector::from_iterator(
            d,
            img.to_f64_vec().iter().zip(&model.mean).map(|(g, m)| g - m),
        );
        let normal = u.transpose() * &u;
        let rhs = u.transpose() * phi;
        let ls = normal.lu().solve(&rhs).unwrap();
        let omega = model.project(&img).unwrap();
        for (a, b) in omega.iter().zip(ls.iter()) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}

#[test]
fn reconstruction_improves_with_components_and_is_exact_at_full_rank() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let data = random_dataset(&mut rng, 6, 6, &[0, 1, 2, 3, 4, 5, 6], 7);
    let full = train_eigenfaces(&data, 7).unwrap();
    let rank = full.component_count();
    for img in data.images() {
        let gamma = img.to_f64_vec();
        let norm: f64 = gamma.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut last = f64::INFINITY;
        for e in 1..=data.len() {
            let m = full.truncated(e);
            let rec = m.reconstruct(&m.project(img).unwrap()).unwrap();
            let err: f64 = gamma
                .iter()
                .zip(&rec)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(err <= last + 1e-9);
            last = err;
            if e >= rank {
                assert!(err <= 1e-5 * norm);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]
    #[test]
    fn eigenfaces_are_orthonormal_and_sorted(seed in 0u64..10_000, r in 2usize..9, side in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<usize> = (0..r).collect();
        let data = random_dataset(&mut rng, side, side, &labels, r);
        let m = train_eigenfaces(&data, 50).unwrap();
        prop_assert!(m.component_count() <= r);
        for (i, a) in m.components.iter().enumerate() {
            for (j, b) in m.components.iter().enumerate() {
                let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((d - want).abs() < 1e-6);
            }
        }
        prop_assert!(m.eigenvalues.iter().all(|&l| l >= 0.0));
        prop_assert!(m.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn vote_ignores_positive_scaling(
        dists in prop::collection::vec((0.0f64..100.0, 0usize..4), 1..20),
        k_frac in 0.0f64..1.0,
        scale in 0.01f64..100.0,
        threshold in 0.0f64..120.0,
    ) {
        let k = 1 + ((dists.len() - 1) as f64 * k_frac) as usize;
        let scaled: Vec<(f64, usize)> = dists.iter().map(|&(d, l)| (d * scale, l)).collect();
        let a = vote(&dists, k, Some(threshold)).unwrap();
        let b = vote(&scaled, k, Some(threshold * scale)).unwrap();
        prop_assert_eq!(a.label, b.label);
    }

    #[test]
    fn lbph_cells_sum_to_pixel_counts(seed in 0u64..1000, w in 12usize..40, h in 12usize..40, gx in 1usize..4, gy in 1usize..4, p4 in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let img = GrayImage::from_fn(w, h, |_, _| rng.random::<u8>()).unwrap();
        let params = LbphParams { neighbors: if p4 { 4 } else { 8 }, radius: 1.0, grid_x: gx, grid_y: gy };
        let hist = lbph_descriptor(&img, &params).unwrap();
        let bins = params.bins();
        let (cw, ch) = (w - 2, h - 2);
        for cy in 0..gy {
            for cx in 0..gx {
                // independent count of the pixels assigned to this cell
                let xs = (0..cw).filter(|x| x * gx / cw == cx).count();
                let ys = (0..ch).filter(|y| y * gy / ch == cy).count();
                let cell = &hist[(cy * gx + cx) * bins..(cy * gx + cx + 1) * bins];
                prop_assert_eq!(cell.iter().sum::<f64>(), (xs * ys) as f64);
            }
        }
    }

    #[test]
    fn lbph_lattice_codes_invariant_to_monotone_maps(seed in 0u64..1000, levels in 2usize..100) {
        // strictly increasing 8-bit curve restricted to the image's levels
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let palette = sorted_sample(&mut rng, levels);
        let curve = sorted_sample(&mut rng, levels);
        let img = GrayImage::from_fn(20, 20, |_, _| palette[rng.random_range(0..levels)]).unwrap();
        let toned = img.map(|p| curve[palette.binary_search(&p).unwrap()]);
        let params = LbphParams { neighbors: 4, radius: 2.0, grid_x: 2, grid_y: 2 };
        prop_assert_eq!(lbph_descriptor(&img, &params).unwrap(), lbph_descriptor(&toned, &params).unwrap());
    }

    #[test]
    fn lbph_interpolated_codes_invariant_to_affine_maps(seed in 0u64..1000, offset in 0u8..50) {
        // even pixels under v -> offset + v / 2 keep the affine map exact in 8 bits
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let img = GrayImage::from_fn(16, 16, |_, _| 2 * rng.random_range(0u8..100)).unwrap();
        let toned = img.map(|p| offset + p / 2);
        for radius in [1.0, 2.0] {
            let params = LbphParams { neighbors: 8, radius, grid_x: 2, grid_y: 2 };
            prop_assert_eq!(lbph_descriptor(&img, &params).unwrap(), lbph_descriptor(&toned, &params).unwrap());
        }
    }
}

fn sorted_sample(rng: &mut ChaCha8Rng, k: usize) -> Vec<u8> {
    let mut all: Vec<u8> = (0..=255).collect();
    for i in 0..k {
        let j = rng.random_range(i..256);
        all.swap(i, j);
    }
    let mut out = all[..k].to_vec();
    out.sort_unstable();
    out
}

fn blob_dataset(classes: usize, per_class: usize, dims: usize, seed: u64) -> FaceDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 12.0).unwrap();
    let centers: Vec<Vec<f64>> = (0..classes)
        .map(|_| {
            (0..dims * dims)
                .map(|_| rng.random_range(60.0..190.0))
                .collect()
        })
        .collect();
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..per_class {
            let px = center
                .iter()
                .map(|m| (m + noise.sample(&mut rng)).round().clamp(0.0, 255.0) as u8)
                .collect();
            images.push(GrayImage::new(dims, dims, px).unwrap());
            labels.push(c);
        }
    }
    FaceDataset::new(
        images,
        labels,
        (0..classes).map(|c| format!("c{c}")).collect(),
    )
    .unwrap()
}

#[test]
fn fisher_rank_is_classes_minus_one() {
    for c in [2, 3, 5] {
        let data = blob_dataset(c, 6, 4, c as u64);
        let m = train_fisherfaces(&data).unwrap();
        assert_eq!(m.component_count(), c - 1);
        for extra in [c - 1, c, 10 * c] {
            let capped = train_fisherfaces_with(&data, Some(extra)).unwrap();
            assert_eq!(capped, m);
        }
    }
}

fn scatter(data: &FaceDataset) -> (DMatrix<f64>, DMatrix<f64>) {
    let v = data.vectors();
    let d = v[0].len();
    let x = DMatrix::from_fn(d, v.len(), |i, j| v[j][i]);
    let mean = x.column_mean();
    let mut sb = DMatrix::zeros(d, d);
    let mut sw = DMatrix::zeros(d, d);
    for c in 0..data.class_count() {
        let idx: Vec<usize> = (0..v.len()).filter(|&j| data.labels()[j] == c).collect();
        let mut mu = DVector::zeros(d);
        for &j in &idx {
            mu += x.column(j);
        }
        mu /= idx.len() as f64;
        let dm = &mu - &mean;
        sb += idx.len() as f64 * &dm * dm.transpose();
        for &j in &idx {
            let e = x.column(j) - &mu;
            sw += &e * e.transpose();
        }
    }
    (sb, sw)
}

fn trace_ratio(w: &DMatrix<f64>, sb: &DMatrix<f64>, sw: &DMatrix<f64>) -> f64 {
    let b = w.transpose() * sb * w;
    let a = w.transpose() * sw * w;
    (a.try_inverse().unwrap() * b).trace()
}

#[test]
fn fisher_criterion_beats_random_projections() {
    let data = blob_dataset(3, 12, 4, 77);
    let model = train_fisherfaces(&data).unwrap();
    let (sb, sw) = scatter(&data);
    let d = model.mean.len();
    let w = DMatrix::from_fn(d, 2, |i, k| model.projection[k][i]);
    let best = trace_ratio(&w, &sb, &sw);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let g = Normal::new(0.0, 1.0).unwrap();
    for _ in 0..100 {
        let r = DMatrix::from_fn(d, 2, |_, _| g.sample(&mut rng));
        assert!(best > trace_ratio(&r, &sb, &sw));
    }
}

#[test]
fn fisher_errors() {
    let flat = FaceDataset::new(
        vec![GrayImage::filled(3, 3, 5).unwrap(); 4],
        vec![0, 0, 1, 1],
        vec!["a".into(), "b".into()],
    )
    .unwrap();
    assert!(matches!(
        train_fisherfaces(&flat),
        Err(Error::DegenerateModel(_))
    ));
    let one_class = blob_dataset(1, 5, 3, 0);
    assert!(matches!(
        train_fisherfaces(&one_class),
        Err(Error::InvalidTraining(_))
    ));
}

#[test]
fn lbph_flat_and_single_cell() {
    let flat = GrayImage::filled(24, 24, 200).unwrap();
    let params = LbphParams {
        grid_x: 1,
        grid_y: 1,
        ..Default::default()
    };
    let h = lbph_descriptor(&flat, &params).unwrap();
    assert_eq!(h.len(), 256);
    assert_eq!(h[255], 22.0 * 22.0);
    assert_eq!(h.iter().sum::<f64>(), 22.0 * 22.0);
}

fn canonical_frame(brightness: u8) -> (GrayImage, PixelBox) {
    let scene = SceneDescription {
        seed: 4,
        face_sprites: vec![FaceSprite {
            identity: "quinn".into(),
            x: 32.0,
            y: 32.0,
            scale: 64.0 / 48.0,
            rotation_deg: 0.0,
        }],
        ..Default::default()
    };
    let (img, truth) = render_synthetic_frame(&scene, 64, 64).unwrap();
    (img.map(|p| p + brightness), truth[0].bbox)
}

#[test]
fn canonical_input_is_nearly_unchanged() {
    let (img, bbox) = canonical_frame(0);
    let targets = canonical_eyes(CANONICAL_SIZE);
    let given = preprocess_face(&img, &bbox, Some(targets)).unwrap();
    assert_eq!(given, mask_and_equalize(&img));

    let found = preprocess_face_detailed(&img, &bbox, None, CANONICAL_SIZE).unwrap();
    for (e, t) in [(found.eyes.0, targets.0), (found.eyes.1, targets.1)] {
        assert!((e[0] - t[0]).hypot(e[1] - t[1]) < 0.5, "{e:?} vs {t:?}");
    }
    let reference = mask_and_equalize(&img);
    let mse = found
        .face
        .pixels()
        .iter()
        .zip(reference.pixels())
        .map(|(a, b)| (f64::from(*a) - f64::from(*b)).powi(2))
        .sum::<f64>()
        / (64.0 * 64.0);
    assert!(mse < 40.0, "mse {mse}");
}

#[test]
fn brightness_offset_does_not_change_output() {
    let (img, bbox) = canonical_frame(0);
    let headroom = 255 - *img.pixels().iter().max().unwrap();
    assert!(headroom >= 10);
    for c in [1, 7, headroom] {
        let (bright, _) = canonical_frame(c);
        assert_eq!(
            preprocess_face(&bright, &bbox, None).unwrap(),
            preprocess_face(&img, &bbox, None).unwrap()
        );
    }
}

#[test]
fn rotated_faces_align_eyes_within_a_pixel() {
    let targets = canonical_eyes(CANONICAL_SIZE);
    for (i, name) in ["ana", "ben", "cy", "dee", "eli"].iter().enumerate() {
        for rotation_deg in [-10.0, 10.0] {
            let scene = SceneDescription {
                seed: i as u64,
                face_sprites: vec![FaceSprite {
                    identity: name.to_string(),
                    x: 60.0,
                    y: 55.0,
                    scale: 1.4,
                    rotation_deg,
                }],
                ..Default::default()
            };
            let (img, truth) = render_synthetic_frame(&scene, 120, 110).unwrap();
            let p = preprocess_face_detailed(&img, &truth[0].bbox, None, CANONICAL_SIZE).unwrap();
            for (eye, t) in [
                (truth[0].left_eye, targets.0),
                (truth[0].right_eye, targets.1),
            ] {
                let out = p.alignment.invert(eye);
                assert!(
                    (out[0] - t[0]).hypot(out[1] - t[1]) <= 1.0,
                    "{name} {rotation_deg}: {out:?}"
                );
            }
        }
    }
}

#[test]
fn knn_on_gallery_members() {
    let data = blob_dataset(3, 4, 4, 5);
    let model = FaceModel::new(
        Recognizer::Eigen(train_eigenfaces(&data, 5).unwrap()),
        Some(1.0),
    );
    for (img, &l) in data.images().iter().zip(data.labels()) {
        let r = knn_classify(&model, img, 1, None).unwrap();
        assert_eq!(r.label.as_deref(), Some(data.class_names()[l].as_str()));
        assert!(r.distance < 1e-9);
    }
    let stranger = GrayImage::filled(4, 4, 0).unwrap();
    let r = knn_classify(&model, &stranger, 1, None).unwrap();
    assert!(r.is_unknown());
    assert_eq!(r.label_or_unknown(), "UNKNOWN");
    assert!(knn_classify(&model, &stranger, 99, Some(f64::INFINITY)).is_err());
}

#[test]
fn face_model_files_are_deterministic() {
    let data = blob_dataset(3, 4, 8, 9);
    let dir = tempfile::tempdir().unwrap();
    for spec in [
        TrainSpec::Eigen {
            components: 4,
            skip_leading: 0,
        },
        TrainSpec::Fisher { components: None },
        TrainSpec::Lbph(LbphParams {
            grid_x: 1,
            grid_y: 1,
            ..Default::default()
        }),
    ] {
        let a = FaceModel::train(&data, &spec).unwrap();
        let b = FaceModel::train(&data, &spec).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let path = dir.path().join("m.json");
        a.save(&path).unwrap();
        let back = FaceModel::load(&path).unwrap();
        assert_eq!(back, a);
        assert_eq!(back.to_json(), a.to_json());
    }
    let bad = FaceModel::train(&data, &TrainSpec::Fisher { components: None })
        .unwrap()
        .to_json()
        .replacen("\"version\":1", "\"version\":2", 1);
    assert!(matches!(FaceModel::from_json(&bad), Err(Error::Format(_))));
}

fn closed_set_accuracy(model: &FaceModel, test: &FaceDataset) -> f64 {
    let ok = test
        .images()
        .iter()
        .zip(test.labels())
        .filter(|(img, &l)| {
            knn_classify(model, img, 1, Some(f64::INFINITY))
                .unwrap()
                .label
                .as_deref()
                == Some(test.class_names()[l].as_str())
        })
        .count();
    ok as f64 / test.len() as f64
}

#[test]
fn eigen_accuracy_rises_to_a_plateau() {
    let names = ["alice", "bob", "carol", "dave", "erin"];
    let es = [1, 2, 4, 8, 16, 32, 49];
    let mut per_e: Vec<Vec<f64>> = vec![Vec::new(); es.len()];
    for seed in 0..3 {
        let train = synthetic_dataset(&names, 10, 1.0, 100 + seed).unwrap();
        let test = synthetic_dataset(&names, 10, 1.0, 200 + seed).unwrap();
        let full = train_eigenfaces(&train, 50).unwrap();
        for (i, &e) in es.iter().enumerate() {
            let m = FaceModel::new(Recognizer::Eigen(full.truncated(e)), None);
            per_e[i].push(closed_set_accuracy(&m, &test));
        }
    }
    let median: Vec<f64> = per_e
        .iter_mut()
        .map(|v| {
            v.sort_by(f64::total_cmp);
            v[1]
        })
        .collect();
    // non-decreasing within one test image of noise per step
    for w in median.windows(2) {
        assert!(w[1] >= w[0] - 0.1, "{median:?}");
    }
    assert!(median.last().unwrap() >= &0.9, "{median:?}");
    assert!(median.last().unwrap() > &median[0], "{median:?}");
}
