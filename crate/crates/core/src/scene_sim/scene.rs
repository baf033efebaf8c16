use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::array::{Vec3, SPEED_OF_SOUND};
use crate::error::{Error, Result};

/// What a source emits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalKind {
    Sine {
        freq_hz: f64,
    },
    WhiteNoise,
    /// Mono little-endian `f32` samples, looped to the requested length.
    Sample {
        path: PathBuf,
    },
}

/// A discrete reflection: an extra copy delayed by `delay_s` and scaled by `gain`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EchoTap {
    pub delay_s: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub position: Vec3,
    pub signal: SignalKind,
    #[serde(default = "unit_level")]
    pub level: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub echoes: Vec<EchoTap>,
}

fn unit_level() -> f64 {
    1.0
}

/// A face placed in the camera frame, centered at pixel (`x`, `y`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceSprite {
    pub identity: String,
    pub x: f64,
    pub y: f64,
    #[serde(default = "unit_level")]
    pub scale: f64,
    #[serde(default)]
    pub rotation_deg: f64,
}

/// Ground truth for one synthetic frame: acoustic sources and visible faces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDescription {
    #[serde(default)]
    pub sources: Vec<SourceSpec>,
    /// Signal-to-noise ratio in dB; `None` disables sensor noise.
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub face_sprites: Vec<FaceSprite>,
    #[serde(default = "default_speed_of_sound")]
    pub speed_of_sound: f64,
}

fn default_speed_of_sound() -> f64 {
    SPEED_OF_SOUND
}

impl Default for SceneDescription {
    fn default() -> Self {
        Self {
            sources: Vec::new(),
            snr_db: None,
            seed: 0,
            face_sprites: Vec::new(),
            speed_of_sound: SPEED_OF_SOUND,
        }
    }
}

impl SceneDescription {
    /// Checks the acoustic part of the scene.
    pub fn validate(&self) -> Result<()> {
        if !(self.speed_of_sound.is_finite() && self.speed_of_sound > 0.0) {
            return Err(Error::InvalidScene(format!(
                "speed_of_sound must be positive, got {}",
                self.speed_of_sound
            )));
        }
        if let Some(snr) = self.snr_db {
            if snr.is_nan() {
                return Err(Error::InvalidScene("snr_db is NaN".into()));
            }
        }
        for (i, src) in self.sources.iter().enumerate() {
            if src.position.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidScene(format!(
                    "sources[{i}].position is not finite"
                )));
            }
            if src.position[2] <= 0.0 {
                return Err(Error::InvalidScene(format!(
                    "sources[{i}] lies behind the array plane (z = {})",
                    src.position[2]
                )));
            }
            if !src.level.is_finite() {
                return Err(Error::InvalidScene(format!(
                    "sources[{i}].level is not finite"
                )));
            }
            if let SignalKind::Sine { freq_hz } = src.signal {
                if !(freq_hz.is_finite() && freq_hz >= 0.0) {
                    return Err(Error::InvalidScene(format!(
                        "sources[{i}].signal.freq_hz must be non-negative"
                    )));
                }
            }
            for (k, echo) in src.echoes.iter().enumerate() {
                if !(echo.delay_s.is_finite() && echo.delay_s >= 0.0 && echo.gain.is_finite()) {
                    return Err(Error::InvalidScene(format!(
                        "sources[{i}].echoes[{k}] must have a non-negative delay and finite gain"
                    )));
                }
            }
        }
        for (i, sprite) in self.face_sprites.iter().enumerate() {
            if !(sprite.scale.is_finite() && sprite.scale > 0.0) {
                return Err(Error::InvalidScene(format!(
                    "face_sprites[{i}].scale must be positive"
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let scene: SceneDescription =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("scene: {e}")))?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_scene_with_defaults() {
        let scene = SceneDescription::from_json(
            r#"{"sources":[{"position":[0.5,0.2,2.0],"signal":{"kind":"sine","freq_hz":1000}}],
                "snr_db":20,"seed":7}"#,
        )
        .unwrap();
        assert_eq!(scene.sources[0].level, 1.0);
        assert_eq!(scene.speed_of_sound, 343.0);
        assert_eq!(
            scene.sources[0].signal,
            SignalKind::Sine { freq_hz: 1000.0 }
        );
        assert!(scene.face_sprites.is_empty());
    }

    #[test]
    fn rejects_source_behind_array() {
        let err = SceneDescription::from_json(
            r#"{"sources":[{"position":[0,0,-1],"signal":{"kind":"white_noise"}}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidScene(_)));
    }

    #[test]
    fn schema_violation_names_the_field() {
        let err = SceneDescription::from_json(r#"{"sources":[{"signal":{"kind":"white_noise"}}]}"#)
            .unwrap_err();
        assert!(err.to_string().contains("position"), "{err}");
    }
}
