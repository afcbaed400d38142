//! Pipeline configuration: strict JSON with explicit defaults.

use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rfscene_core::fusion::{DensifyParams, EncoderParams, FusionParams};
use rfscene_core::imaging::ProjectionParams;
use rfscene_core::metrics::LossWeights;
use rfscene_core::ofdm::OfdmConfig;
use rfscene_core::reconstruct::HeadParams;
use rfscene_core::scene::{gen_trajectory, PathParams, RenderParams, Scene, Trajectory, TrajectoryKind};
use rfscene_core::{AntennaArray, DirectionFormula, Fov, GridSpec, Pose, SphericalGrid};

use crate::error::{CliError, Result};
use crate::presets::{self, Preset};
use crate::seeds;

/// Where the scene comes from: `{"path": "scene.json"}` or
/// `{"preset": "corridor"}`. Preset scenes draw from the `scene` seed stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SceneSource {
    Path(PathBuf),
    Preset(Preset),
}

impl Default for SceneSource {
    fn default() -> Self {
        Self::Preset(Preset::Corridor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StartPose {
    pub position: [f64; 3],
    /// Yaw, pitch, roll in degrees.
    pub yaw_pitch_roll_deg: [f64; 3],
}

impl Default for StartPose {
    fn default() -> Self {
        Self {
            position: [0.0, -1.0, 0.0],
            yaw_pitch_roll_deg: [0.0, 0.0, 0.0],
        }
    }
}

impl StartPose {
    pub fn pose(&self) -> Pose {
        let [yaw, pitch, roll] = self.yaw_pitch_roll_deg;
        Pose::from_euler_deg(yaw, pitch, roll, Vector3::from(self.position))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectorySpec {
    pub kind: TrajectoryKind,
    pub n_frames: usize,
    /// Seconds between frames.
    pub spacing: f64,
    /// Meters per second.
    pub speed: f64,
    pub start: StartPose,
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        Self {
            kind: TrajectoryKind::Line,
            n_frames: 5,
            spacing: 0.5,
            speed: 1.0,
            start: StartPose::default(),
        }
    }
}

/// Field of view in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FovDeg {
    pub azimuth: [f64; 2],
    pub elevation: [f64; 2],
}

impl Default for FovDeg {
    fn default() -> Self {
        Self {
            azimuth: [-60.0, 60.0],
            elevation: [-30.0, 30.0],
        }
    }
}

impl FovDeg {
    pub fn fov(&self) -> Fov {
        Fov::from_degrees(self.azimuth[0], self.azimuth[1], self.elevation[0], self.elevation[1])
    }
}

/// Sensing geometry shared by path enumeration, imaging and ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensingSpec {
    pub fov: FovDeg,
    pub angular_pitch_deg: f64,
    pub max_range: f64,
    pub wall_pitch: f64,
    pub sphere_radius: f64,
    pub direction_formula: DirectionFormula,
}

impl Default for SensingSpec {
    fn default() -> Self {
        Self {
            fov: FovDeg::default(),
            angular_pitch_deg: 2.0,
            max_range: 7.0,
            wall_pitch: rfscene_core::scene::DEFAULT_WALL_PITCH,
            sphere_radius: rfscene_core::scene::DEFAULT_SPHERE_RADIUS,
            direction_formula: DirectionFormula::Unit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub scene: SceneSource,
    pub trajectory: TrajectorySpec,
    pub ofdm: OfdmConfig,
    pub array: AntennaArray,
    pub sensing: SensingSpec,
    pub grid: GridSpec,
    pub projection: ProjectionParams,
    pub encoder: EncoderParams,
    pub fusion: FusionParams,
    pub densify: DensifyParams,
    pub heads: HeadParams,
    pub loss: LossWeights,
    pub seed: u64,
    pub output: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            scene: SceneSource::default(),
            trajectory: TrajectorySpec::default(),
            ofdm: OfdmConfig {
                noise_snr_db: Some(20.0),
                ..OfdmConfig::default()
            },
            array: AntennaArray::default_60ghz(),
            sensing: SensingSpec::default(),
            grid: GridSpec::default(),
            projection: ProjectionParams::default(),
            encoder: EncoderParams::default(),
            fusion: FusionParams::default(),
            densify: DensifyParams::default(),
            heads: HeadParams::default(),
            loss: LossWeights::default(),
            seed: 0,
            output: PathBuf::from("run"),
        }
    }
}

fn field_error(path: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Config {
        path: path.to_string(),
        message: e.to_string(),
    }
}

impl PipelineConfig {
    /// Parses and validates; relative scene paths resolve against `base`.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| field_error("<root>", e))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|e| field_error(&path.display().to_string(), e))?;
        if let SceneSource::Path(p) = &cfg.scene {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.scene = SceneSource::Path(dir.join(p));
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// Hex sha256 of the canonical serialization.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    /// Checks every field against its module invariants; the error names
    /// the offending field.
    pub fn validate(&self) -> Result<()> {
        if let SceneSource::Path(p) = &self.scene {
            if !p.is_file() {
                return Err(field_error("scene.path", format!("{} does not exist", p.display())));
            }
        }
        let t = &self.trajectory;
        if t.n_frames == 0 {
            return Err(field_error("trajectory.n_frames", "must be >= 1"));
        }
        if !(t.spacing > 0.0) {
            return Err(field_error("trajectory.spacing", "must be > 0"));
        }
        if !(t.speed >= 0.0) {
            return Err(field_error("trajectory.speed", "must be >= 0"));
        }
        self.ofdm.validate().map_err(|e| field_error("ofdm", e))?;
        self.array.validate().map_err(|e| field_error("array", e))?;
        let s = &self.sensing;
        s.fov.fov().validate().map_err(|e| field_error("sensing.fov", e))?;
        if !(s.max_range > 0.0) {
            return Err(field_error("sensing.max_range", "must be > 0"));
        }
        if !(s.wall_pitch > 0.0) {
            return Err(field_error("sensing.wall_pitch", "must be > 0"));
        }
        if !(s.sphere_radius > 0.0) {
            return Err(field_error("sensing.sphere_radius", "must be > 0"));
        }
        self.spherical_grid().map_err(|e| field_error("sensing", e))?;
        self.grid.validate().map_err(|e| field_error("grid", e))?;
        if !self.projection.range_gain.is_finite() {
            return Err(field_error("projection.range_gain", "must be finite"));
        }
        if !(self.encoder.a.is_finite() && self.encoder.b.is_finite()) {
            return Err(field_error("encoder", "a and b must be finite"));
        }
        self.fusion.validate().map_err(|e| field_error("fusion", e))?;
        if !(self.densify.sigma > 0.0) {
            return Err(field_error("densify.sigma", "must be > 0"));
        }
        self.heads.validate().map_err(|e| field_error("heads", e))?;
        if !(self.loss.lambda_v >= 0.0 && self.loss.lambda_d >= 0.0) {
            return Err(field_error("loss", "weights must be >= 0"));
        }
        Ok(())
    }

    pub fn fov(&self) -> Fov {
        self.sensing.fov.fov()
    }

    pub fn spherical_grid(&self) -> rfscene_core::Result<SphericalGrid> {
        let mut g = SphericalGrid::uniform(
            &self.fov(),
            self.sensing.angular_pitch_deg,
            self.sensing.max_range,
            self.ofdm.bandwidth,
        )?;
        g.direction_formula = self.sensing.direction_formula;
        Ok(g)
    }

    pub fn path_params(&self) -> PathParams {
        PathParams {
            max_range: self.sensing.max_range,
            wall_pitch: self.sensing.wall_pitch,
            fov: self.fov(),
        }
    }

    pub fn render_params(&self) -> RenderParams {
        RenderParams {
            sphere_radius: self.sensing.sphere_radius,
            max_range: self.sensing.max_range,
        }
    }

    pub fn load_scene(&self) -> Result<Scene> {
        let scene = match &self.scene {
            SceneSource::Path(p) => rfscene_core::io::read_json(p)?,
            SceneSource::Preset(preset) => presets::generate(*preset, seeds::substream(self.seed, seeds::SCENE)),
        };
        scene.validate().map_err(|e| field_error("scene", e))?;
        Ok(scene)
    }

    pub fn trajectory(&self) -> Result<Trajectory> {
        let t = &self.trajectory;
        Ok(gen_trajectory(
            t.kind,
            &t.start.pose(),
            t.n_frames,
            t.spacing,
            t.speed,
            seeds::substream(self.seed, seeds::TRAJECTORY),
        )?)
    }
}

/// Command-line overrides applied on top of a loaded config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub frames: Option<usize>,
    pub no_noise: bool,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output = out.clone();
        }
        if let Some(n) = self.frames {
            cfg.trajectory.n_frames = n;
        }
        if self.no_noise {
            cfg.ofdm.noise_snr_db = None;
        }
    }
}

/// Loads `path` (defaults when `None`), applies the overrides and validates.
pub fn resolve(path: Option<&Path>, overrides: &Overrides) -> Result<PipelineConfig> {
    let mut cfg = match path {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}
