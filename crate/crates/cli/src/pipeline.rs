//! Stage functions and the end-to-end run.

use std::path::{Path, PathBuf};

use rfscene_core::fusion::{densify, encode, fuse, ConfidenceVolume, FeatureVolume, FusionInput};
use rfscene_core::imaging::{beamform_with_table, to_cartesian, CartesianVolume, RadioFrame, SteeringTable};
use rfscene_core::io;
use rfscene_core::metrics::{error_cdf, evaluate, EvalReport};
use rfscene_core::ofdm::{cir_tensor, qpsk_symbols, synthesize_rx, CirTensor};
use rfscene_core::reconstruct::{depth_head, voxel_head, DepthMap, VoxelGrid};
use rfscene_core::scene::{enumerate_paths, render_gt_depth, voxelize_gt, Scene, Trajectory};
use rfscene_core::{Pose, SphericalGrid};

use crate::config::PipelineConfig;
use crate::error::{CliError, Result};
use crate::manifest::{Manifest, RunStatus};
use crate::seeds;

pub const CDF_BINS: usize = 100;

/// Noisy (per config) CIR of one frame. Symbols and noise come from the
/// frame's own seed streams.
pub fn simulate_frame(cfg: &PipelineConfig, scene: &Scene, pose: &Pose, frame: usize) -> Result<CirTensor> {
    let paths = enumerate_paths(scene, pose, &cfg.array, &cfg.path_params());
    let x = qpsk_symbols(&cfg.ofdm, seeds::substream(cfg.seed, &seeds::symbols(frame)));
    let y = synthesize_rx(&paths, &x, &cfg.ofdm, &cfg.array, seeds::substream(cfg.seed, &seeds::noise(frame)))?;
    Ok(cir_tensor(&y, &x, &cfg.ofdm)?)
}

pub struct Imager {
    pub grid: SphericalGrid,
    table: SteeringTable,
}

impl Imager {
    pub fn new(cfg: &PipelineConfig) -> Result<Self> {
        let grid = cfg.spherical_grid()?;
        let table = SteeringTable::new(&cfg.array, &grid);
        Ok(Self { grid, table })
    }

    pub fn image(&self, cfg: &PipelineConfig, cir: &CirTensor, pose: Pose) -> Result<(RadioFrame, CartesianVolume)> {
        let radio = beamform_with_table(cir, &cfg.array, &self.grid, &self.table, pose)?;
        let cart = to_cartesian(&radio, &cfg.grid, &cfg.projection)?;
        Ok((radio, cart))
    }
}

pub struct EncodedFrame {
    pub features: FeatureVolume,
    pub confidence: ConfidenceVolume,
    pub pose: Pose,
}

pub fn encode_frame(cfg: &PipelineConfig, cart: &CartesianVolume, pose: Pose) -> EncodedFrame {
    let (features, confidence) = encode(cart, &cfg.encoder, pose);
    EncodedFrame {
        features,
        confidence,
        pose,
    }
}

/// Fuses `frames` into the frame at position `reference` of the slice,
/// using `poses` in place of the frames' own poses when given.
pub fn fuse_frames(cfg: &PipelineConfig, frames: &[&EncodedFrame], poses: Option<&[Pose]>, reference: usize) -> Result<FeatureVolume> {
    let inputs: Vec<FusionInput<'_>> = frames
        .iter()
        .enumerate()
        .map(|(k, f)| FusionInput {
            features: &f.features,
            confidence: &f.confidence,
            pose: poses.map_or(f.pose, |p| p[k]),
        })
        .collect();
    Ok(fuse(&inputs, reference, &cfg.fusion)?)
}

pub struct Reconstruction {
    pub dense: FeatureVolume,
    pub voxels: VoxelGrid,
    pub depth: DepthMap,
}

pub fn reconstruct(cfg: &PipelineConfig, fused: &FeatureVolume) -> Result<Reconstruction> {
    let dense = densify(fused, &cfg.densify);
    let voxels = voxel_head(&dense);
    let h = &cfg.heads;
    let depth = depth_head(&dense, &cfg.fov(), h.height, h.width, h.tau_d)?;
    Ok(Reconstruction { dense, voxels, depth })
}

pub struct GroundTruth {
    pub voxels: VoxelGrid,
    pub depth: DepthMap,
}

pub fn ground_truth(cfg: &PipelineConfig, scene: &Scene, pose: &Pose) -> GroundTruth {
    let h = &cfg.heads;
    GroundTruth {
        voxels: voxelize_gt(scene, pose, &cfg.grid, cfg.sensing.sphere_radius),
        depth: render_gt_depth(scene, pose, h.height, h.width, &cfg.fov(), &cfg.render_params()),
    }
}

/// Records every file written below `root` so the manifest can list them.
pub struct RunWriter {
    pub root: PathBuf,
    files: Vec<PathBuf>,
}

impl RunWriter {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    /// Absolute path for `rel`, creating parent directories.
    fn prepare(&self, rel: &str) -> Result<PathBuf> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        Ok(path)
    }

    fn record(&mut self, rel: &str) {
        self.files.push(PathBuf::from(rel));
    }

    /// For raw tensors: records the data file and its sidecar.
    fn record_raw(&mut self, rel: &str) {
        self.record(rel);
        let side = io::sidecar_path(Path::new(rel));
        self.files.push(side);
    }

    pub fn text(&mut self, rel: &str, text: &str) -> Result<()> {
        let path = self.prepare(rel)?;
        io::write_text(&path, text)?;
        self.record(rel);
        Ok(())
    }

    pub fn bytes(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.prepare(rel)?;
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.record(rel);
        Ok(())
    }

    pub fn json<T: serde::Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value).expect("serializable");
        s.push('\n');
        self.text(rel, &s)
    }

    pub fn raw(&mut self, rel: &str, write: impl FnOnce(&Path) -> rfscene_core::Result<()>) -> Result<()> {
        let path = self.prepare(rel)?;
        write(&path)?;
        self.record_raw(rel);
        Ok(())
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }
}

pub fn frame_dir(k: usize) -> String {
    format!("frames/{k:02}")
}

pub fn ref_dir(k: usize) -> String {
    format!("refs/{k:02}")
}

/// Runs `f` on a private rayon pool of `threads` workers (all cores when
/// `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().map_err(|e| CliError::ThreadPool(e.to_string()))?;
    Ok(pool.install(f))
}

// Stages hand the next stage what they stored (f32), not their f64 working
// values, so a run split across stage commands matches a single pipeline run.

/// Scene, trajectory and CIR of every frame.
pub fn stage_simulate(cfg: &PipelineConfig, w: &mut RunWriter) -> Result<(Scene, Trajectory, Vec<CirTensor>)> {
    let scene = cfg.load_scene()?;
    w.text("scene.json", &crate::presets::scene_json(&scene))?;
    let traj = cfg.trajectory()?;
    w.text("trajectory.csv", &traj.to_csv())?;
    w.json("poses.json", &traj.poses)?;
    let mut cirs = Vec::with_capacity(traj.len());
    for (k, pose) in traj.poses.iter().enumerate() {
        let cir = simulate_frame(cfg, &scene, pose, k)?;
        let rel = format!("{}/cir.f32", frame_dir(k));
        w.raw(&rel, |p| io::write_cir(p, &cir))?;
        cirs.push(io::read_cir(&w.root.join(rel))?);
    }
    Ok((scene, traj, cirs))
}

pub fn stage_image(cfg: &PipelineConfig, w: &mut RunWriter, cirs: &[CirTensor], poses: &[Pose]) -> Result<Vec<CartesianVolume>> {
    let imager = Imager::new(cfg)?;
    let mut out = Vec::with_capacity(cirs.len());
    for (k, (cir, pose)) in cirs.iter().zip(poses).enumerate() {
        let (radio, cart) = imager.image(cfg, cir, *pose)?;
        let dir = frame_dir(k);
        w.raw(&format!("{dir}/radio.f32"), |p| io::write_radio_frame(p, &radio))?;
        let rel = format!("{dir}/cartesian.f32");
        w.raw(&rel, |p| io::write_cartesian(p, &cart, Some(*pose)))?;
        out.push(io::read_cartesian(&w.root.join(rel))?);
    }
    Ok(out)
}

/// Fuses every frame once as the reference.
pub fn stage_fuse(cfg: &PipelineConfig, w: &mut RunWriter, carts: &[CartesianVolume], poses: &[Pose]) -> Result<Vec<FeatureVolume>> {
    let encoded: Vec<EncodedFrame> = carts.iter().zip(poses).map(|(c, p)| encode_frame(cfg, c, *p)).collect();
    let refs: Vec<&EncodedFrame> = encoded.iter().collect();
    let mut out = Vec::with_capacity(refs.len());
    for r in 0..refs.len() {
        let fused = fuse_frames(cfg, &refs, None, r)?;
        let rel = format!("{}/fused.f32", ref_dir(r));
        w.raw(&rel, |p| io::write_features(p, &fused))?;
        out.push(io::read_features(&w.root.join(rel))?);
    }
    Ok(out)
}

pub fn stage_reconstruct(cfg: &PipelineConfig, w: &mut RunWriter, fused: &[FeatureVolume]) -> Result<Vec<Reconstruction>> {
    let mut out = Vec::with_capacity(fused.len());
    for (r, f) in fused.iter().enumerate() {
        let rec = reconstruct(cfg, f)?;
        let dir = ref_dir(r);
        w.raw(&format!("{dir}/voxels.f32"), |p| io::write_voxels(p, &rec.voxels))?;
        w.raw(&format!("{dir}/depth.f32"), |p| io::write_depth(p, &rec.depth))?;
        w.bytes(&format!("{dir}/depth.pgm"), &io::depth_pgm16(&rec.depth))?;
        w.text(&format!("{dir}/depth.csv"), &io::depth_csv(&rec.depth))?;
        w.text(&format!("{dir}/points.ply"), &io::ascii_ply(&rec.voxels.occupied_points(cfg.heads.tau_occ)))?;
        out.push(rec);
    }
    Ok(out)
}

/// Writes ground truth next to each reference and evaluates against it.
/// Returns the per-reference reports and their mean.
pub fn stage_eval(
    cfg: &PipelineConfig,
    w: &mut RunWriter,
    scene: &Scene,
    poses: &[Pose],
    recs: &[Reconstruction],
) -> Result<(Vec<EvalReport>, EvalReport)> {
    let mut reports = Vec::with_capacity(recs.len());
    for (r, (rec, pose)) in recs.iter().zip(poses).enumerate() {
        let gt = ground_truth(cfg, scene, pose);
        let dir = ref_dir(r);
        w.raw(&format!("{dir}/gt/voxels.f32"), |p| io::write_voxels(p, &gt.voxels))?;
        w.raw(&format!("{dir}/gt/depth.f32"), |p| io::write_depth(p, &gt.depth))?;
        w.bytes(&format!("{dir}/gt/depth.pgm"), &io::depth_pgm16(&gt.depth))?;
        let report = evaluate(&rec.voxels, &gt.voxels, &rec.depth, &gt.depth, cfg.heads.tau_occ, &cfg.loss)?;
        let cdfs = error_cdf(&rec.depth, &gt.depth, CDF_BINS)?;
        w.json(&format!("{dir}/report.json"), &report)?;
        w.text(&format!("{dir}/cdf_abs.csv"), &cdfs.absolute.to_csv())?;
        w.text(&format!("{dir}/cdf_rel.csv"), &cdfs.relative.to_csv())?;
        reports.push(report);
    }
    let mean = mean_report(&reports);
    w.json("report.json", &mean)?;
    Ok((reports, mean))
}

pub fn mean_report(reports: &[EvalReport]) -> EvalReport {
    let n = reports.len() as f64;
    let avg = |f: fn(&EvalReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    EvalReport {
        abs_rel: avg(|r| r.abs_rel),
        mae: avg(|r| r.mae),
        rmse: avg(|r| r.rmse),
        cd: avg(|r| r.cd),
        cd_diag: avg(|r| r.cd_diag),
        bce: avg(|r| r.bce),
        depth_l1: avg(|r| r.depth_l1),
        composite: avg(|r| r.composite),
        n_valid_pixels: reports.iter().map(|r| r.n_valid_pixels).sum(),
    }
}

pub struct RunSummary {
    pub dir: PathBuf,
    pub report: EvalReport,
    pub per_reference: Vec<EvalReport>,
}

fn run_stages(cfg: &PipelineConfig, w: &mut RunWriter) -> Result<RunSummary> {
    let (scene, traj, cirs) = stage_simulate(cfg, w)?;
    let carts = stage_image(cfg, w, &cirs, &traj.poses)?;
    drop(cirs);
    let fused = stage_fuse(cfg, w, &carts, &traj.poses)?;
    let recs = stage_reconstruct(cfg, w, &fused)?;
    let (per_reference, report) = stage_eval(cfg, w, &scene, &traj.poses, &recs)?;
    Ok(RunSummary {
        dir: w.root.clone(),
        report,
        per_reference,
    })
}

/// Full run into `out`: config, every stage's artifacts and a manifest.
/// On failure the files written so far stay in place and the manifest
/// records the error.
pub fn run_pipeline(cfg: &PipelineConfig, out: &Path, threads: Option<usize>) -> Result<RunSummary> {
    cfg.validate()?;
    with_threads(threads, || {
        let mut w = RunWriter::create(out)?;
        w.text("config.json", &cfg.to_json())?;
        let result = run_stages(cfg, &mut w);
        let status = match &result {
            Ok(_) => RunStatus::Ok,
            Err(e) => RunStatus::Error(e.to_string()),
        };
        Manifest::build(cfg, &w.root, w.files(), status)?.write(&w.root)?;
        result
    })?
}

/// A pipeline step run on its own against a run directory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Simulate,
    Image,
    Fuse,
    Reconstruct,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Simulate => "simulate",
            Stage::Image => "image",
            Stage::Fuse => "fuse",
            Stage::Reconstruct => "reconstruct",
        }
    }

    /// File name of the manifest listing this stage's outputs.
    pub fn manifest_name(self) -> String {
        format!("manifest.{}.json", self.name())
    }
}

fn require(path: PathBuf) -> Result<PathBuf> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(CliError::MissingInput(path))
    }
}

fn read_poses(dir: &Path) -> Result<Vec<Pose>> {
    Ok(io::read_json(&require(dir.join("poses.json"))?)?)
}

fn run_stage(cfg: &PipelineConfig, dir: &Path, stage: Stage) -> Result<Vec<PathBuf>> {
    let mut w = RunWriter::create(dir)?;
    match stage {
        Stage::Simulate => {
            w.text("config.json", &cfg.to_json())?;
            stage_simulate(cfg, &mut w)?;
        }
        Stage::Image => {
            let poses = read_poses(dir)?;
            let cirs = (0..poses.len())
                .map(|k| Ok(io::read_cir(&require(dir.join(frame_dir(k)).join("cir.f32"))?)?))
                .collect::<Result<Vec<_>>>()?;
            stage_image(cfg, &mut w, &cirs, &poses)?;
        }
        Stage::Fuse => {
            let poses = read_poses(dir)?;
            let carts = (0..poses.len())
                .map(|k| Ok(io::read_cartesian(&require(dir.join(frame_dir(k)).join("cartesian.f32"))?)?))
                .collect::<Result<Vec<_>>>()?;
            stage_fuse(cfg, &mut w, &carts, &poses)?;
        }
        Stage::Reconstruct => {
            let poses = read_poses(dir)?;
            let fused = (0..poses.len())
                .map(|r| Ok(io::read_features(&require(dir.join(ref_dir(r)).join("fused.f32"))?)?))
                .collect::<Result<Vec<_>>>()?;
            stage_reconstruct(cfg, &mut w, &fused)?;
        }
    }
    Ok(w.files().to_vec())
}

/// Runs one stage in `dir`, reading what earlier stages left there, and
/// writes `manifest.<stage>.json` for the files it produced.
pub fn run_single_stage(cfg: &PipelineConfig, dir: &Path, stage: Stage, threads: Option<usize>) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    with_threads(threads, || {
        let files = run_stage(cfg, dir, stage)?;
        Manifest::build(cfg, dir, &files, RunStatus::Ok)?.write_as(dir, &stage.manifest_name())?;
        Ok(files)
    })?
}
