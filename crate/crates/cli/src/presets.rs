//! Synthetic scene presets.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use rfscene_core::scene::{axis_wall, Bounds, Scatterer, Scene};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Two parallel walls and a floor with box-shaped clutter.
    Corridor,
    /// Four walls, nothing inside.
    Room,
    /// The room with 10 to 30 point scatterers inside.
    Cluttered,
}

impl FromStr for Preset {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "corridor" => Ok(Self::Corridor),
            "room" => Ok(Self::Room),
            "cluttered" => Ok(Self::Cluttered),
            other => Err(CliError::UnknownPreset(other.to_string())),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Corridor => "corridor",
            Self::Room => "room",
            Self::Cluttered => "cluttered",
        })
    }
}

// room interior, meters
pub const ROOM_X: f64 = 3.0;
pub const ROOM_Y: [f64; 2] = [-1.5, 6.0];
pub const ROOM_Z: f64 = 1.5;

pub const CLUTTER_MIN: usize = 10;
pub const CLUTTER_MAX: usize = 30;

const CORRIDOR_HALF_WIDTH: f64 = 1.2;
const CORRIDOR_Y: [f64; 2] = [-1.0, 9.0];
const CORRIDOR_HALF_HEIGHT: f64 = 1.25;

pub fn generate(preset: Preset, seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match preset {
        Preset::Room => room(),
        Preset::Cluttered => {
            let mut scene = room();
            let n = rng.random_range(CLUTTER_MIN..=CLUTTER_MAX);
            for _ in 0..n {
                scene.scatterers.push(Scatterer {
                    position: Vector3::new(
                        rng.random_range(-2.5..2.5),
                        rng.random_range(0.8..5.2),
                        rng.random_range(-1.2..1.2),
                    ),
                    reflectivity: rng.random_range(0.5..1.0),
                });
            }
            scene
        }
        Preset::Corridor => corridor(&mut rng),
    }
}

fn room() -> Scene {
    let cy = (ROOM_Y[0] + ROOM_Y[1]) / 2.0;
    let half_y = (ROOM_Y[1] - ROOM_Y[0]) / 2.0;
    let mut scene = Scene::empty(Bounds {
        min: Vector3::new(-ROOM_X, ROOM_Y[0], -ROOM_Z),
        max: Vector3::new(ROOM_X, ROOM_Y[1], ROOM_Z),
    });
    scene.walls = vec![
        axis_wall(Vector3::new(-ROOM_X, cy, 0.0), Vector3::x(), [half_y, ROOM_Z], 0.7),
        axis_wall(Vector3::new(ROOM_X, cy, 0.0), -Vector3::x(), [half_y, ROOM_Z], 0.7),
        axis_wall(Vector3::new(0.0, ROOM_Y[1], 0.0), -Vector3::y(), [ROOM_X, ROOM_Z], 0.7),
        axis_wall(Vector3::new(0.0, ROOM_Y[0], 0.0), Vector3::y(), [ROOM_X, ROOM_Z], 0.7),
    ];
    scene
}

fn corridor(rng: &mut ChaCha8Rng) -> Scene {
    let (w, h) = (CORRIDOR_HALF_WIDTH, CORRIDOR_HALF_HEIGHT);
    let cy = (CORRIDOR_Y[0] + CORRIDOR_Y[1]) / 2.0;
    let half_y = (CORRIDOR_Y[1] - CORRIDOR_Y[0]) / 2.0;
    let mut scene = Scene::empty(Bounds {
        min: Vector3::new(-w, CORRIDOR_Y[0], -h),
        max: Vector3::new(w, CORRIDOR_Y[1], h),
    });
    scene.walls = vec![
        axis_wall(Vector3::new(-w, cy, 0.0), Vector3::x(), [half_y, h], 0.6),
        axis_wall(Vector3::new(w, cy, 0.0), -Vector3::x(), [half_y, h], 0.6),
        axis_wall(Vector3::new(0.0, cy, -h), Vector3::z(), [w, half_y], 0.4),
    ];
    // boxes resting on the floor, represented by their corners and the
    // centers of their top faces
    let n_boxes = rng.random_range(3..=6);
    for _ in 0..n_boxes {
        let size = Vector3::new(rng.random_range(0.3..0.6), rng.random_range(0.3..0.6), rng.random_range(0.3..0.8));
        let x = rng.random_range(-w + size.x / 2.0 + 0.05..w - size.x / 2.0 - 0.05);
        let y = rng.random_range(1.0..8.0);
        let lo = Vector3::new(x - size.x / 2.0, y - size.y / 2.0, -h);
        for corner in 0..8 {
            let p = lo
                + Vector3::new(
                    if corner & 1 == 0 { 0.0 } else { size.x },
                    if corner & 2 == 0 { 0.0 } else { size.y },
                    if corner & 4 == 0 { 0.0 } else { size.z },
                );
            scene.scatterers.push(Scatterer {
                position: p,
                reflectivity: 0.8,
            });
        }
        scene.scatterers.push(Scatterer {
            position: lo + Vector3::new(size.x / 2.0, size.y / 2.0, size.z),
            reflectivity: 0.8,
        });
    }
    scene
}

/// Scene serialized exactly as `scene gen` writes it.
pub fn scene_json(scene: &Scene) -> String {
    let mut s = serde_json::to_string_pretty(scene).expect("scene serializes");
    s.push('\n');
    s
}
