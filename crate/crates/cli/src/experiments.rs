//! Trend experiments on seeded cluttered scenes: reconstruction quality and
//! ghost suppression versus the number of fused frames, and sensitivity to
//! rotation versus translation pose noise.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use rfscene_core::fusion::FeatureVolume;
use rfscene_core::metrics::chamfer_distance;
use rfscene_core::reconstruct::VoxelGrid;
use rfscene_core::scene::{enumerate_paths, random_axis, voxelize_gt, PathKind, Scene};
use rfscene_core::Pose;

use crate::config::{PipelineConfig, SceneSource};
use crate::error::Result;
use crate::pipeline::{encode_frame, fuse_frames, reconstruct, simulate_frame, EncodedFrame, Imager};
use crate::presets::Preset;
use crate::seeds;

#[derive(Debug, Clone)]
pub struct TrendSetup {
    pub n_scenes: usize,
    pub base_seed: u64,
    /// Template config; the seed is replaced per scene.
    pub config: PipelineConfig,
    /// Index of the reference frame every window is centered on.
    pub reference: usize,
    pub window_sizes: Vec<usize>,
    pub rotation_deg: [f64; 2],
    pub translation_m: [f64; 2],
}

impl Default for TrendSetup {
    fn default() -> Self {
        let mut config = PipelineConfig {
            scene: SceneSource::Preset(Preset::Cluttered),
            ..PipelineConfig::default()
        };
        config.ofdm.noise_snr_db = Some(20.0);
        Self {
            n_scenes: 10,
            base_seed: 2024,
            config,
            reference: 2,
            window_sizes: vec![1, 3, 5],
            rotation_deg: [5.0, 10.0],
            translation_m: [0.05, 0.10],
        }
    }
}

impl TrendSetup {
    pub fn scene_config(&self, k: usize) -> PipelineConfig {
        let mut cfg = self.config.clone();
        cfg.seed = seeds::substream(self.base_seed, &format!("trend/{k}"));
        cfg
    }
}

/// Encoded frames of one scene along its trajectory, plus what the
/// reference frame should see.
pub struct SceneStack {
    pub config: PipelineConfig,
    pub scene: Scene,
    pub frames: Vec<EncodedFrame>,
    pub reference: usize,
    pub gt: VoxelGrid,
    pub gt_points: Vec<Vector3<f64>>,
    pub ghost_voxels: Vec<[usize; 3]>,
    pub surface_voxels: Vec<[usize; 3]>,
}

impl SceneStack {
    pub fn poses(&self) -> Vec<Pose> {
        self.frames.iter().map(|f| f.pose).collect()
    }
}

/// Where a point appears to a planar array at the sensor origin: the panel
/// cannot tell front from back, so returns from behind fold forward.
pub fn apparent_position(p: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(p.x, p.y.abs(), p.z)
}

pub fn build_stack(setup: &TrendSetup, k: usize) -> Result<SceneStack> {
    let cfg = setup.scene_config(k);
    let scene = cfg.load_scene()?;
    let traj = cfg.trajectory()?;
    let imager = Imager::new(&cfg)?;
    let mut frames = Vec::with_capacity(traj.len());
    for (i, pose) in traj.poses.iter().enumerate() {
        let cir = simulate_frame(&cfg, &scene, pose, i)?;
        let (_, cart) = imager.image(&cfg, &cir, *pose)?;
        frames.push(encode_frame(&cfg, &cart, *pose));
    }
    let reference = setup.reference.min(frames.len() - 1);
    let ref_pose = traj.poses[reference];
    let grid = cfg.grid;
    let gt = voxelize_gt(&scene, &ref_pose, &grid, cfg.sensing.sphere_radius);
    let gt_points = gt.occupied_points(0.5);

    let occupied = |idx: [usize; 3]| gt.values[(idx[0], idx[1], idx[2])] > 0.0;
    let near_surface = |idx: [usize; 3]| {
        let lo = idx.map(|v| v.saturating_sub(1));
        (lo[0]..=(idx[0] + 1).min(grid.dims[0] - 1)).any(|x| {
            (lo[1]..=(idx[1] + 1).min(grid.dims[1] - 1))
                .any(|y| (lo[2]..=(idx[2] + 1).min(grid.dims[2] - 1)).any(|z| occupied([x, y, z])))
        })
    };
    let to_ref = ref_pose.inverse();
    let mut ghost_voxels: Vec<[usize; 3]> = enumerate_paths(&scene, &ref_pose, &cfg.array, &cfg.path_params())
        .iter()
        .filter(|p| p.kind == PathKind::FirstOrderSpecular)
        .filter_map(|p| grid.locate(&apparent_position(&to_ref.transform_point(&p.ghost_position))))
        .filter(|&idx| !near_surface(idx))
        .collect();
    ghost_voxels.sort();
    ghost_voxels.dedup();

    let fov = cfg.fov();
    let surface_voxels = gt
        .values
        .indexed_iter()
        .filter(|(_, &v)| v > 0.0)
        .map(|((x, y, z), _)| [x, y, z])
        .filter(|&idx| {
            let c = grid.voxel_center(idx);
            fov.contains(&c) && c.norm() <= cfg.sensing.max_range
        })
        .collect();

    Ok(SceneStack {
        config: cfg,
        scene,
        frames,
        reference,
        gt,
        gt_points,
        ghost_voxels,
        surface_voxels,
    })
}

pub fn build_stacks(setup: &TrendSetup) -> Result<Vec<SceneStack>> {
    (0..setup.n_scenes).map(|k| build_stack(setup, k)).collect()
}

/// `n` consecutive frame indices centered on `reference`, shifted to stay
/// inside `0..total`.
pub fn window(n: usize, reference: usize, total: usize) -> Vec<usize> {
    let n = n.min(total);
    let start = reference.saturating_sub(n / 2).min(total - n);
    (start..start + n).collect()
}

/// Fused features of a window, optionally with substituted poses for the
/// window's frames.
pub fn fuse_window(stack: &SceneStack, indices: &[usize], poses: Option<&[Pose]>) -> Result<(FeatureVolume, usize)> {
    let frames: Vec<&EncodedFrame> = indices.iter().map(|&i| &stack.frames[i]).collect();
    let reference = indices.iter().position(|&i| i == stack.reference).expect("window holds the reference");
    Ok((fuse_frames(&stack.config, &frames, poses, reference)?, reference))
}

/// Chamfer distance of the thresholded occupancy head against ground truth.
pub fn window_cd(stack: &SceneStack, fused: &FeatureVolume) -> Result<f64> {
    let rec = reconstruct(&stack.config, fused)?;
    let pred = rec.voxels.occupied_points(stack.config.heads.tau_occ);
    Ok(chamfer_distance(&pred, &stack.gt_points)?)
}

/// Mean fused channel-0 value at ghost voxels over its mean at visible
/// true-surface voxels.
pub fn ghost_ratio(stack: &SceneStack, fused: &FeatureVolume) -> Option<f64> {
    let mean = |idx: &[[usize; 3]]| {
        if idx.is_empty() {
            return None;
        }
        Some(idx.iter().map(|i| fused.values[(i[0], i[1], i[2], 0)]).sum::<f64>() / idx.len() as f64)
    };
    let g = mean(&stack.ghost_voxels)?;
    let s = mean(&stack.surface_voxels)?;
    (s > 0.0).then_some(g / s)
}

#[derive(Debug, Clone)]
pub struct FrameCountTrend {
    pub window_sizes: Vec<usize>,
    /// Mean over scenes, one entry per window size.
    pub cd: Vec<f64>,
    pub ghost_ratio: Vec<f64>,
    /// Scenes that had both ghost and surface voxels.
    pub ghost_scenes: usize,
    pub per_scene_cd: Vec<Vec<f64>>,
}

impl FrameCountTrend {
    pub fn cd_strictly_decreasing(&self) -> bool {
        self.cd.windows(2).all(|w| w[1] < w[0])
    }

    pub fn ghost_strictly_decreasing(&self) -> bool {
        self.ghost_scenes > 0 && self.ghost_ratio.windows(2).all(|w| w[1] < w[0])
    }
}

pub fn frame_count_trend(setup: &TrendSetup, stacks: &[SceneStack]) -> Result<FrameCountTrend> {
    let rows: Vec<(Vec<f64>, Option<Vec<f64>>)> = stacks
        .par_iter()
        .map(|stack| {
            let mut cds = Vec::new();
            let mut ratios = Vec::new();
            for &n in &setup.window_sizes {
                let idx = window(n, stack.reference, stack.frames.len());
                let (fused, _) = fuse_window(stack, &idx, None)?;
                cds.push(window_cd(stack, &fused)?);
                ratios.push(ghost_ratio(stack, &fused));
            }
            let ratios: Option<Vec<f64>> = ratios.into_iter().collect();
            Ok((cds, ratios))
        })
        .collect::<Result<_>>()?;
    let m = setup.window_sizes.len();
    let mut cd = vec![0.0; m];
    let mut ghost = vec![0.0; m];
    let mut ghost_scenes = 0;
    for (cds, ratios) in &rows {
        for j in 0..m {
            cd[j] += cds[j] / rows.len() as f64;
        }
        if let Some(r) = ratios {
            ghost_scenes += 1;
            for j in 0..m {
                ghost[j] += r[j];
            }
        }
    }
    if ghost_scenes > 0 {
        ghost.iter_mut().for_each(|v| *v /= ghost_scenes as f64);
    }
    Ok(FrameCountTrend {
        window_sizes: setup.window_sizes.clone(),
        cd,
        ghost_ratio: ghost,
        ghost_scenes,
        per_scene_cd: rows.into_iter().map(|(c, _)| c).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoseNoise {
    Rotation,
    Translation,
}

/// Perturbs every pose except the reference in its own sensor frame:
/// either a rotation about a random axis by an angle uniform in
/// `rotation_deg`, or a shift in a random direction by a length uniform in
/// `translation_m`.
pub fn perturb_poses(poses: &[Pose], reference: usize, kind: PoseNoise, setup: &TrendSetup, seed: u64) -> Vec<Pose> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    poses
        .iter()
        .enumerate()
        .map(|(i, p)| {
            if i == reference {
                return *p;
            }
            let axis = random_axis(&mut rng);
            let delta = match kind {
                PoseNoise::Rotation => {
                    let [lo, hi] = setup.rotation_deg;
                    Pose::from_axis_angle(axis, rng.random_range(lo..=hi).to_radians(), Vector3::zeros())
                }
                PoseNoise::Translation => {
                    let [lo, hi] = setup.translation_m;
                    Pose::from_translation(axis * rng.random_range(lo..=hi))
                }
            };
            p.compose(&delta)
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct PoseNoiseTrend {
    pub clean_cd: f64,
    pub rotation_cd: f64,
    pub translation_cd: f64,
}

impl PoseNoiseTrend {
    pub fn rotation_factor(&self) -> f64 {
        self.rotation_cd / self.clean_cd
    }

    pub fn translation_factor(&self) -> f64 {
        self.translation_cd / self.clean_cd
    }
}

/// Mean CD over scenes with the largest window, clean and under each noise.
pub fn pose_noise_trend(setup: &TrendSetup, stacks: &[SceneStack]) -> Result<PoseNoiseTrend> {
    let n = *setup.window_sizes.iter().max().expect("window sizes");
    let rows: Vec<[f64; 3]> = stacks
        .par_iter()
        .map(|stack| {
            let idx = window(n, stack.reference, stack.frames.len());
            let poses: Vec<Pose> = idx.iter().map(|&i| stack.frames[i].pose).collect();
            let r = idx.iter().position(|&i| i == stack.reference).expect("reference in window");
            let seed = seeds::substream(stack.config.seed, "pose_noise");
            let mut out = [0.0; 3];
            for (slot, kind) in [(1, PoseNoise::Rotation), (2, PoseNoise::Translation)] {
                let noisy = perturb_poses(&poses, r, kind, setup, seed);
                let (fused, _) = fuse_window(stack, &idx, Some(&noisy))?;
                out[slot] = window_cd(stack, &fused)?;
            }
            let (fused, _) = fuse_window(stack, &idx, None)?;
            out[0] = window_cd(stack, &fused)?;
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let k = rows.len() as f64;
    let mean = |j: usize| rows.iter().map(|r| r[j]).sum::<f64>() / k;
    Ok(PoseNoiseTrend {
        clean_cd: mean(0),
        rotation_cd: mean(1),
        translation_cd: mean(2),
    })
}
