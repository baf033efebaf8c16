//! Independent oracles shared by the integration test binaries.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use speakerid_core::fusion::{
    AcousticPeak, ConfirmedFace, FaceObservation, FusionOutcome, OutcomeKind,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_noise(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
}

/// `sum_n x1[n] * x2[n + lag]` by direct summation.
pub fn naive_xcorr(x1: &[f64], x2: &[f64], lag: i64) -> f64 {
    let n = x1.len() as i64;
    (0..n)
        .filter(|&i| i + lag >= 0 && i + lag < n)
        .map(|i| x1[i as usize] * x2[(i + lag) as usize])
        .sum()
}

/// `x` delayed by `d` whole samples, zero filled.
pub fn delayed(x: &[f64], d: usize) -> Vec<f64> {
    (0..x.len())
        .map(|i| if i >= d { x[i - d] } else { 0.0 })
        .collect()
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Number of placements of a layout of `a × b` unit cells, every cell
/// size, inside a `w × h` window: the horizontal and vertical choices are
/// independent, and with cell width `i` there are `w + 1 - a·i` positions.
pub fn haar_placements(w: usize, h: usize, a: usize, b: usize) -> usize {
    let axis = |len: usize, cells: usize| {
        let n = len / cells;
        n * (len + 1) - cells * n * (n + 1) / 2
    };
    axis(w, a) * axis(h, b)
}

/// Total over the two-, three- and four-rectangle layouts.
pub fn haar_count_formula(w: usize, h: usize) -> usize {
    [(2, 1), (1, 2), (3, 1), (1, 3), (2, 2)]
        .iter()
        .map(|&(a, b)| haar_placements(w, h, a, b))
        .sum()
}

/// Where the fused speaker position comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeakerFrom {
    Nowhere,
    Face,
    Source,
}

/// The decision table written out case by case.
pub fn fusion_table(
    acoustic: bool,
    face: Option<bool>,
    colocated: bool,
) -> (OutcomeKind, SpeakerFrom) {
    use OutcomeKind::*;
    use SpeakerFrom::*;
    // face: None = no face, Some(true) = known identity, Some(false) = UNKNOWN
    match (acoustic, face, colocated) {
        (false, None, _) => (NoResult, Nowhere),
        (false, Some(_), _) => (FaceOnly, Face),
        (true, None, _) => (UnknownSource, Source),
        (true, Some(true), true) => (IdentifiedSpeaker, Face),
        (true, Some(true), false) => (SourceAndFaceSeparate, Nowhere),
        (true, Some(false), true) => (UnknownSource, Face),
        (true, Some(false), false) => (UnknownSource, Source),
    }
}

/// Full expected outcome for one lattice case.
pub fn fusion_oracle(
    acoustic: Option<&AcousticPeak>,
    face: Option<&ConfirmedFace>,
    colocate: f64,
) -> FusionOutcome {
    let colocated = match (acoustic, face) {
        (Some(a), Some(f)) => {
            let dx = a.position[0] - f.position[0];
            let dy = a.position[1] - f.position[1];
            (dx * dx + dy * dy).sqrt() <= colocate
        }
        _ => false,
    };
    let (kind, from) = fusion_table(
        acoustic.is_some(),
        face.map(|f| f.label.is_some()),
        colocated,
    );
    let speaker_position = match from {
        SpeakerFrom::Nowhere => None,
        SpeakerFrom::Face => face.map(|f| f.position),
        SpeakerFrom::Source => acoustic.map(|a| a.position),
    };
    // the face is reported unless it was an UNKNOWN face far from the source
    let face_shown = match kind {
        OutcomeKind::FaceOnly
        | OutcomeKind::IdentifiedSpeaker
        | OutcomeKind::SourceAndFaceSeparate => true,
        OutcomeKind::UnknownSource => from == SpeakerFrom::Face,
        OutcomeKind::NoResult => false,
    };
    FusionOutcome {
        kind,
        speaker_position,
        face_identity: if face_shown {
            face.and_then(|f| f.label.clone())
        } else {
            None
        },
        face_position: if face_shown {
            face.map(|f| f.position)
        } else {
            None
        },
        source_position: acoustic.map(|a| a.position),
    }
}

/// Confirmation of the newest observation given up to two earlier frames
/// (oldest first): the same label three times in a row, or the same label
/// as an earlier observation that is also close by.
pub fn track_oracle(
    previous: &[Option<FaceObservation>],
    current: &Option<FaceObservation>,
    proximity: f64,
) -> Option<ConfirmedFace> {
    let cur = current.as_ref()?;
    let same_label = |o: &Option<FaceObservation>| o.as_ref().is_some_and(|p| p.label == cur.label);
    let close = |o: &Option<FaceObservation>| {
        o.as_ref().is_some_and(|p| {
            let d = ((p.position[0] - cur.position[0]).powi(2)
                + (p.position[1] - cur.position[1]).powi(2))
            .sqrt();
            d <= proximity
        })
    };
    let three_in_a_row =
        previous.len() == 2 && same_label(&previous[0]) && same_label(&previous[1]);
    let close_match = previous.iter().any(|o| same_label(o) && close(o));
    (three_in_a_row || close_match).then(|| cur.clone())
}
