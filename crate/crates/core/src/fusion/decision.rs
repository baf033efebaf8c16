use std::fmt;

use serde::{Deserialize, Serialize};

use super::track::ConfirmedFace;
use crate::error::{Error, Result};
use crate::localization::{GridCell, SteeringGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OutcomeKind {
    NoResult,
    IdentifiedSpeaker,
    FaceOnly,
    UnknownSource,
    SourceAndFaceSeparate,
}

impl OutcomeKind {
    pub const ALL: [OutcomeKind; 5] = [
        OutcomeKind::NoResult,
        OutcomeKind::IdentifiedSpeaker,
        OutcomeKind::FaceOnly,
        OutcomeKind::UnknownSource,
        OutcomeKind::SourceAndFaceSeparate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeKind::NoResult => "NO_RESULT",
            OutcomeKind::IdentifiedSpeaker => "IDENTIFIED_SPEAKER",
            OutcomeKind::FaceOnly => "FACE_ONLY",
            OutcomeKind::UnknownSource => "UNKNOWN_SOURCE",
            OutcomeKind::SourceAndFaceSeparate => "SOURCE_AND_FACE_SEPARATE",
        }
    }
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Acoustic map maximum registered onto the camera image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcousticPeak {
    pub position: [f64; 2],
    pub power: f64,
}

/// Combined localization and identification for one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionOutcome {
    pub kind: OutcomeKind,
    /// The localization result: the face position whenever a face is
    /// involved (it is more precise than the acoustic peak), empty for
    /// NO_RESULT and SOURCE_AND_FACE_SEPARATE.
    pub speaker_position: Option<[f64; 2]>,
    pub face_identity: Option<String>,
    pub face_position: Option<[f64; 2]>,
    pub source_position: Option<[f64; 2]>,
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Decision tree combining the acoustic peak and the confirmed face.
/// Positions closer than `colocate_px` (inclusive) count as the same place.
pub fn fuse(
    acoustic: Option<&AcousticPeak>,
    face: Option<&ConfirmedFace>,
    colocate_px: f64,
) -> FusionOutcome {
    let mut out = FusionOutcome {
        kind: OutcomeKind::NoResult,
        speaker_position: None,
        face_identity: None,
        face_position: None,
        source_position: acoustic.map(|a| a.position),
    };
    match (acoustic, face) {
        (None, None) => {}
        (None, Some(f)) => {
            out.kind = OutcomeKind::FaceOnly;
            out.face_identity = f.label.clone();
            out.face_position = Some(f.position);
            out.speaker_position = Some(f.position);
        }
        (Some(a), None) => {
            out.kind = OutcomeKind::UnknownSource;
            out.speaker_position = Some(a.position);
        }
        (Some(a), Some(f)) => {
            let together = distance(a.position, f.position) <= colocate_px;
            match (&f.label, together) {
                (Some(label), true) => {
                    out.kind = OutcomeKind::IdentifiedSpeaker;
                    out.face_identity = Some(label.clone());
                    out.face_position = Some(f.position);
                    out.speaker_position = Some(f.position);
                }
                (Some(label), false) => {
                    out.kind = OutcomeKind::SourceAndFaceSeparate;
                    out.face_identity = Some(label.clone());
                    out.face_position = Some(f.position);
                }
                (None, true) => {
                    // unknown speaker: the face still localizes better
                    out.kind = OutcomeKind::UnknownSource;
                    out.face_position = Some(f.position);
                    out.speaker_position = Some(f.position);
                }
                (None, false) => {
                    out.kind = OutcomeKind::UnknownSource;
                    out.speaker_position = Some(a.position);
                }
            }
        }
    }
    out
}

/// Center of `cell` on an image covering the grid edge to edge.
pub fn map_grid_to_pixels(
    cell: GridCell,
    grid: &SteeringGrid,
    image: (usize, usize),
) -> Result<[f64; 2]> {
    if !grid.contains(cell) {
        return Err(Error::Bounds(format!(
            "cell ({}, {}) outside {}x{} grid",
            cell.row,
            cell.col,
            grid.n_v(),
            grid.n_u()
        )));
    }
    Ok([
        (cell.col as f64 + 0.5) * image.0 as f64 / grid.n_u() as f64,
        (cell.row as f64 + 0.5) * image.1 as f64 / grid.n_v() as f64,
    ])
}

/// Point of the steering plane seen at pixel `(x, y)`; inverse of
/// [`map_grid_to_pixels`] for continuous coordinates.
pub fn pixel_to_grid_point(
    pixel: [f64; 2],
    grid: &SteeringGrid,
    image: (usize, usize),
) -> [f64; 3] {
    grid.point_at(pixel[0] / image.0 as f64, pixel[1] / image.1 as f64)
}

/// One line of the per-frame outcome log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub frame: u64,
    pub kind: OutcomeKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub identity: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub speaker_xy: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub source_xy: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub face_xy: Option<[f64; 2]>,
}

impl OutcomeRecord {
    pub fn new(frame: u64, outcome: &FusionOutcome) -> Self {
        Self {
            frame,
            kind: outcome.kind,
            identity: outcome.face_identity.clone(),
            speaker_xy: outcome.speaker_position,
            source_xy: outcome.source_position,
            face_xy: outcome.face_position,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn face(label: Option<&str>, x: f64) -> ConfirmedFace {
        ConfirmedFace {
            label: label.map(str::to_string),
            position: [x, 10.0],
        }
    }

    fn peak(x: f64) -> AcousticPeak {
        AcousticPeak {
            position: [x, 10.0],
            power: 1.0,
        }
    }

    #[test]
    fn table_examples() {
        let o = fuse(Some(&peak(100.0)), Some(&face(Some("A"), 104.0)), 10.0);
        assert_eq!(o.kind, OutcomeKind::IdentifiedSpeaker);
        assert_eq!(o.speaker_position, Some([104.0, 10.0]));
        assert_eq!(o.face_identity.as_deref(), Some("A"));

        let o = fuse(None, Some(&face(Some("A"), 30.0)), 10.0);
        assert_eq!(
            (o.kind, o.face_position),
            (OutcomeKind::FaceOnly, Some([30.0, 10.0]))
        );

        let o = fuse(Some(&peak(7.0)), None, 10.0);
        assert_eq!(
            (o.kind, o.speaker_position),
            (OutcomeKind::UnknownSource, Some([7.0, 10.0]))
        );

        let o = fuse(Some(&peak(0.0)), Some(&face(Some("A"), 50.0)), 10.0);
        assert_eq!(o.kind, OutcomeKind::SourceAndFaceSeparate);
        assert_eq!(o.speaker_position, None);
        assert_ne!(o.face_position, o.source_position);

        assert_eq!(fuse(None, None, 10.0).kind, OutcomeKind::NoResult);
    }

    #[test]
    fn unknown_face_near_source() {
        let o = fuse(Some(&peak(0.0)), Some(&face(None, 3.0)), 10.0);
        assert_eq!(o.kind, OutcomeKind::UnknownSource);
        assert_eq!(o.speaker_position, Some([3.0, 10.0]));
    }

    #[test]
    fn grid_to_pixels() {
        let g = SteeringGrid::default_camera();
        assert_eq!(
            map_grid_to_pixels(GridCell::new(0, 0), &g, (640, 480)).unwrap(),
            [5.0, 5.0]
        );
        let c = map_grid_to_pixels(GridCell::new(24, 32), &g, (640, 480)).unwrap();
        assert!((c[0] - 320.0).abs() <= 5.0 && (c[1] - 240.0).abs() <= 5.0);
        assert!(map_grid_to_pixels(GridCell::new(48, 0), &g, (640, 480)).is_err());
        let p = pixel_to_grid_point([5.0, 5.0], &g, (640, 480));
        assert_eq!(g.cell_of(&p), Some(GridCell::new(0, 0)));
    }

    #[test]
    fn record_fields_in_stable_order() {
        let o = fuse(Some(&peak(100.0)), Some(&face(Some("A"), 104.0)), 10.0);
        let line = OutcomeRecord::new(3, &o).to_json_line();
        assert!(line.starts_with(
            "{\"frame\":3,\"kind\":\"IDENTIFIED_SPEAKER\",\"identity\":\"A\",\"speaker_xy\""
        ));
        let none = OutcomeRecord::new(0, &fuse(None, None, 1.0)).to_json_line();
        assert_eq!(none, "{\"frame\":0,\"kind\":\"NO_RESULT\"}");
    }
}
