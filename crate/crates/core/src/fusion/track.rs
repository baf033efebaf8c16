use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

/// One recognized face in one frame; `label` is `None` for UNKNOWN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceObservation {
    pub label: Option<String>,
    pub position: [f64; 2],
}

/// A face that passed the three-frame consistency check.
pub type ConfirmedFace = FaceObservation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackEntry {
    pub frame: u64,
    /// `None` records a frame without a face.
    pub observation: Option<FaceObservation>,
}

/// The last three frames of recognition results and the latest confirmation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FaceTrack {
    history: VecDeque<TrackEntry>,
    next_frame: u64,
    confirmed: Option<ConfirmedFace>,
}

pub const TRACK_LENGTH: usize = 3;

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl FaceTrack {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn history(&self) -> impl Iterator<Item = &TrackEntry> {
        self.history.iter()
    }

    /// Confirmation produced by the most recent update.
    pub fn confirmed(&self) -> Option<&ConfirmedFace> {
        self.confirmed.as_ref()
    }

    /// Records the next frame and returns the face to surface, if any:
    /// either the last three observations share one label (confirmed at the
    /// newest position), or the new label matches one of the two previous
    /// observations lying within `proximity_px` of the new position.
    pub fn update(
        &mut self,
        obs: Option<FaceObservation>,
        proximity_px: f64,
    ) -> Option<ConfirmedFace> {
        let previous: Vec<Option<&FaceObservation>> = self
            .history
            .iter()
            .rev()
            .take(TRACK_LENGTH - 1)
            .map(|e| e.observation.as_ref())
            .collect();
        let confirmed = obs.as_ref().and_then(|cur| {
            let same = |o: &Option<&FaceObservation>| o.is_some_and(|p| p.label == cur.label);
            let all_three = previous.len() == TRACK_LENGTH - 1 && previous.iter().all(same);
            let near_match = previous.iter().flatten().any(|p| {
                p.label == cur.label && distance(p.position, cur.position) <= proximity_px
            });
            (all_three || near_match).then(|| cur.clone())
        });
        self.history.push_back(TrackEntry {
            frame: self.next_frame,
            observation: obs,
        });
        if self.history.len() > TRACK_LENGTH {
            self.history.pop_front();
        }
        self.next_frame += 1;
        self.confirmed = confirmed.clone();
        confirmed
    }
}

/// Functional form of [`FaceTrack::update`].
pub fn update_face_track(
    track: &FaceTrack,
    obs: Option<FaceObservation>,
    proximity_px: f64,
) -> (FaceTrack, Option<ConfirmedFace>) {
    let mut next = track.clone();
    let c = next.update(obs, proximity_px);
    (next, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ob(label: &str, x: f64) -> Option<FaceObservation> {
        Some(FaceObservation {
            label: Some(label.into()),
            position: [x, 0.0],
        })
    }

    fn feed(seq: &[Option<FaceObservation>]) -> Option<ConfirmedFace> {
        let mut t = FaceTrack::new();
        let mut last = None;
        for o in seq {
            last = t.update(o.clone(), 10.0);
        }
        last
    }

    #[test]
    fn three_same_labels_confirm_anywhere() {
        let c = feed(&[ob("A", 0.0), ob("A", 100.0), ob("A", 300.0)]).unwrap();
        assert_eq!(c.position, [300.0, 0.0]);
    }

    #[test]
    fn nearby_match_with_one_of_two() {
        assert!(feed(&[ob("A", 0.0), ob("B", 50.0), ob("A", 5.0)]).is_some());
        assert!(feed(&[ob("A", 0.0), ob("B", 50.0), ob("A", 30.0)]).is_none());
    }

    #[test]
    fn new_label_is_ignored() {
        assert!(feed(&[ob("A", 0.0), ob("B", 0.0), ob("C", 0.0)]).is_none());
        assert!(feed(&[ob("A", 0.0), None, ob("B", 0.0)]).is_none());
        assert!(feed(&[ob("A", 0.0), ob("A", 0.0), None]).is_none());
    }

    #[test]
    fn history_is_bounded_and_ordered() {
        let mut t = FaceTrack::new();
        for i in 0..7 {
            t.update(ob("A", i as f64), 1.0);
        }
        let frames: Vec<u64> = t.history().map(|e| e.frame).collect();
        assert_eq!(frames, vec![4, 5, 6]);
    }
}
