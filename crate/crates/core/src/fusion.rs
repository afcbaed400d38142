//! Per-frame feature extraction and spatially adaptive multi-frame fusion.
//!
//! Every source voxel of every frame is carried into the reference frame by
//! its rigid relative transform and deposited onto the integer target voxels
//! within a Chebyshev radius `R` of its continuous landing point. The deposit
//! weight is a Gaussian proximity kernel times a sharpened reliability
//! `softplus(c)^η` of the source confidence logit, and the fused volume is the
//! per-target normalized weighted average of the deposited features.

use ndarray::{Array3, Array4, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{relative_transform, Pose};
use crate::grid::GridSpec;
use crate::imaging::CartesianVolume;

/// Number of feature channels produced by [`encode`].
pub const ENCODED_CHANNELS: usize = 3;

/// Sources whose features are all zero and whose reliability weight is
/// below this floor do not deposit anything.
pub const SKIP_WEIGHT_FLOOR: f64 = 1e-12;

/// Per-voxel feature vectors, shape `(x, y, z, channels)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVolume {
    pub values: Array4<f64>,
    pub grid: GridSpec,
    pub pose: Pose,
}

impl FeatureVolume {
    pub fn channels(&self) -> usize {
        self.values.dim().3
    }

    /// Copy of one channel as a 3-D array.
    pub fn channel(&self, c: usize) -> Array3<f64> {
        self.values.index_axis(Axis(3), c).to_owned()
    }
}

/// Unbounded per-voxel confidence logits.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceVolume {
    pub logits: Array3<f64>,
}

/// Affine intensity-to-logit map of the deterministic encoder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderParams {
    pub a: f64,
    pub b: f64,
}

impl Default for EncoderParams {
    fn default() -> Self {
        Self { a: 8.0, b: -4.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FusionParams {
    /// Gaussian kernel width, in voxels.
    pub sigma: f64,
    /// Chebyshev neighborhood radius, in voxels.
    pub radius: usize,
    /// Confidence sharpness exponent.
    pub eta: f64,
    pub epsilon: f64,
}

impl Default for FusionParams {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            radius: 2,
            eta: 3.0,
            epsilon: 1e-8,
        }
    }
}

impl FusionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("fusion sigma must be > 0, got {}", self.sigma)));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidConfig(format!("fusion eta must be >= 0, got {}", self.eta)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "fusion epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// `log(1 + e^c)`, evaluated without overflow.
pub fn softplus(c: f64) -> f64 {
    c.max(0.0) + (-c.abs()).exp().ln_1p()
}

/// Sharpened reliability `softplus(c)^η`.
pub fn reliability(c: f64, eta: f64) -> f64 {
    softplus(c).powf(eta)
}

pub fn gaussian_kernel(dist_sq: f64, sigma: f64) -> f64 {
    (-dist_sq / (2.0 * sigma * sigma)).exp()
}

/// Deterministic encoder: channels `[v, mean of 3³ neighborhood, max of 3³
/// neighborhood]` (zero outside the grid) and logits `a·v + b`.
pub fn encode(volume: &CartesianVolume, params: &EncoderParams, pose: Pose) -> (FeatureVolume, ConfidenceVolume) {
    let grid = volume.grid;
    let (nx, ny, nz) = grid.shape();
    let v = &volume.values;
    let feats: Vec<[f64; ENCODED_CHANNELS]> = (0..grid.len())
        .into_par_iter()
        .map(|flat| {
            let [x, y, z] = grid.unflat(flat);
            let mut sum = 0.0;
            let mut max = 0.0f64;
            for ix in x.saturating_sub(1)..=(x + 1).min(nx - 1) {
                for iy in y.saturating_sub(1)..=(y + 1).min(ny - 1) {
                    for iz in z.saturating_sub(1)..=(z + 1).min(nz - 1) {
                        let s = v[(ix, iy, iz)];
                        sum += s;
                        max = max.max(s);
                    }
                }
            }
            [v[(x, y, z)], sum / 27.0, max]
        })
        .collect();
    let values = Array4::from_shape_vec(
        (nx, ny, nz, ENCODED_CHANNELS),
        feats.into_iter().flatten().collect(),
    )
    .expect("grid-sized feature buffer");
    let logits = v.mapv(|s| params.a * s + params.b);
    (
        FeatureVolume { values, grid, pose },
        ConfidenceVolume { logits },
    )
}

/// One weighted deposit of a source voxel onto a target voxel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contribution {
    pub source: [usize; 3],
    pub target: [usize; 3],
    /// Continuous landing point of the source voxel in target voxel
    /// coordinates (integers are voxel centers).
    pub landing: [f64; 3],
    pub weight: f64,
}

/// Landing coordinates closer than this to an integer are moved onto it.
pub const SNAP_TOLERANCE: f64 = 1e-9;

/// Moves near-integer landing coordinates onto the integer, so voxel-aligned
/// transforms (the reference frame itself, whole-voxel shifts) land exactly
/// on centers and include the `R` shell regardless of rounding noise.
pub fn snap_landing(mut c: [f64; 3]) -> [f64; 3] {
    for v in &mut c {
        let n = v.round();
        if (*v - n).abs() < SNAP_TOLERANCE {
            *v = n;
        }
    }
    c
}

/// Calls `emit(source_flat, landing, target_flat, weight)` for every deposit of
/// `source` into `target` under `transform`, in canonical order: source
/// voxels by flat index, then targets lexicographically.
fn scatter_frame(
    features: &FeatureVolume,
    confidence: &ConfidenceVolume,
    transform: &Pose,
    target: &GridSpec,
    params: &FusionParams,
    mut emit: impl FnMut(usize, [f64; 3], usize, f64),
) {
    let src_grid = &features.grid;
    let channels = features.channels();
    let feats = features.values.as_slice().expect("standard layout");
    let logits = confidence.logits.as_slice().expect("standard layout");
    let r = params.radius as i64;
    let mut kern = [[0.0f64; 16]; 3];
    let mut base = [0i64; 3];
    let mut count = [0usize; 3];

    for src in 0..src_grid.len() {
        let rel = reliability(logits[src], params.eta);
        let f = &feats[src * channels..(src + 1) * channels];
        if rel < SKIP_WEIGHT_FLOOR && f.iter().all(|&v| v == 0.0) {
            continue;
        }
        let p = transform.transform_point(&src_grid.voxel_center(src_grid.unflat(src)));
        let c = snap_landing(target.to_continuous(&p));
        let mut empty = false;
        for a in 0..3 {
            // targets exactly R away are decided by the same difference the
            // kernel uses
            let within = |t: i64| (t as f64 - c[a]).abs() <= r as f64;
            let mut lo = (c[a] - r as f64).ceil() as i64;
            while !within(lo) && lo <= c[a] as i64 {
                lo += 1;
            }
            while within(lo - 1) {
                lo -= 1;
            }
            let mut hi = (c[a] + r as f64).floor() as i64;
            while !within(hi) && hi >= c[a] as i64 {
                hi -= 1;
            }
            while within(hi + 1) {
                hi += 1;
            }
            let lo = lo.max(0);
            let hi = hi.min(target.dims[a] as i64 - 1);
            if lo > hi {
                empty = true;
                break;
            }
            base[a] = lo;
            count[a] = (hi - lo + 1) as usize;
            for k in 0..count[a] {
                let d = (lo + k as i64) as f64 - c[a];
                kern[a][k] = gaussian_kernel(d * d, params.sigma);
            }
        }
        if empty {
            continue;
        }
        for i in 0..count[0] {
            let wx = kern[0][i] * rel;
            let tx = (base[0] + i as i64) as usize;
            for j in 0..count[1] {
                let wxy = wx * kern[1][j];
                let ty = (base[1] + j as i64) as usize;
                let row = (tx * target.dims[1] + ty) * target.dims[2];
                for k in 0..count[2] {
                    let tz = (base[2] + k as i64) as usize;
                    emit(src, c, row + tz, wxy * kern[2][k]);
                }
            }
        }
    }
}

/// Collects every deposit of one source frame into the target grid.
pub fn warp_contributions(
    features: &FeatureVolume,
    confidence: &ConfidenceVolume,
    transform: &Pose,
    target: &GridSpec,
    params: &FusionParams,
) -> Result<Vec<Contribution>> {
    check_frame(features, confidence)?;
    check_warp(transform, &features.grid, target, params)?;
    let mut out = Vec::new();
    scatter_frame(features, confidence, transform, target, params, |src, landing, tgt, weight| {
        out.push(Contribution {
            source: features.grid.unflat(src),
            target: target.unflat(tgt),
            landing,
            weight,
        })
    });
    Ok(out)
}

fn check_frame(features: &FeatureVolume, confidence: &ConfidenceVolume) -> Result<()> {
    let (x, y, z, c) = features.values.dim();
    if (x, y, z) != features.grid.shape() || confidence.logits.dim() != (x, y, z) || c == 0 {
        return Err(Error::ShapeMismatch(format!(
            "features {:?} / logits {:?} do not match grid {:?}",
            features.values.dim(),
            confidence.logits.dim(),
            features.grid.dims
        )));
    }
    if !features.values.is_standard_layout() || !confidence.logits.is_standard_layout() {
        return Err(Error::ShapeMismatch("volumes must be in standard row-major layout".into()));
    }
    Ok(())
}

fn check_warp(transform: &Pose, source: &GridSpec, target: &GridSpec, params: &FusionParams) -> Result<()> {
    params.validate()?;
    if params.radius > 7 {
        return Err(Error::InvalidConfig(format!(
            "fusion radius {} exceeds the supported maximum of 7",
            params.radius
        )));
    }
    if !transform.is_rigid() {
        return Err(Error::NonRigidTransform(transform.rigidity_error()));
    }
    if source.voxel_size != target.voxel_size {
        return Err(Error::ShapeMismatch(format!(
            "source voxel size {} differs from target {}",
            source.voxel_size, target.voxel_size
        )));
    }
    Ok(())
}

/// One frame offered to [`fuse`]: features, logits and the frame's world pose.
#[derive(Debug, Clone, Copy)]
pub struct FusionInput<'a> {
    pub features: &'a FeatureVolume,
    pub confidence: &'a ConfidenceVolume,
    pub pose: Pose,
}

/// Fused features in the reference frame together with the total deposited
/// weight per target voxel.
#[derive(Debug, Clone)]
pub struct FusionOutput {
    pub fused: FeatureVolume,
    pub weight_mass: Array3<f64>,
}

/// Normalized weighted average of all frames' deposits in the frame
/// `reference`.
pub fn fuse(frames: &[FusionInput<'_>], reference: usize, params: &FusionParams) -> Result<FeatureVolume> {
    fuse_with_weights(frames, reference, params).map(|o| o.fused)
}

/// [`fuse`], also returning the per-voxel weight mass `Σ w`.
///
/// Each frame is accumulated into its own buffers (frames run in parallel),
/// and the buffers are summed in frame order, so the result does not depend
/// on the thread count.
pub fn fuse_with_weights(frames: &[FusionInput<'_>], reference: usize, params: &FusionParams) -> Result<FusionOutput> {
    params.validate()?;
    let first = frames
        .first()
        .ok_or_else(|| Error::ShapeMismatch("fuse needs at least one frame".into()))?;
    if reference >= frames.len() {
        return Err(Error::ShapeMismatch(format!(
            "reference index {reference} out of range for {} frames",
            frames.len()
        )));
    }
    let target = frames[reference].features.grid;
    let channels = first.features.channels();
    for f in frames {
        check_frame(f.features, f.confidence)?;
        if !f.features.grid.same_geometry(&target) || f.features.channels() != channels {
            return Err(Error::ShapeMismatch(
                "all frames must share grid shape, voxel size and channel count".into(),
            ));
        }
    }
    let reference_pose = frames[reference].pose;
    let transforms: Vec<Pose> = frames
        .iter()
        .map(|f| relative_transform(&reference_pose, &f.pose))
        .collect();
    for t in &transforms {
        check_warp(t, &target, &target, params)?;
    }

    let n = target.len();
    let partials: Vec<(Vec<f64>, Vec<f64>)> = frames
        .par_iter()
        .zip(transforms.par_iter())
        .map(|(frame, transform)| {
            let mut num = vec![0.0; n * channels];
            let mut den = vec![0.0; n];
            let feats = frame.features.values.as_slice().expect("standard layout");
            scatter_frame(frame.features, frame.confidence, transform, &target, params, |src, _, tgt, w| {
                den[tgt] += w;
                let f = &feats[src * channels..(src + 1) * channels];
                let acc = &mut num[tgt * channels..(tgt + 1) * channels];
                for (a, v) in acc.iter_mut().zip(f) {
                    *a += w * v;
                }
            });
            (num, den)
        })
        .collect();

    let mut num = vec![0.0; n * channels];
    let mut den = vec![0.0; n];
    for (pn, pd) in &partials {
        num.iter_mut().zip(pn).for_each(|(a, b)| *a += b);
        den.iter_mut().zip(pd).for_each(|(a, b)| *a += b);
    }
    for (t, &d) in den.iter().enumerate() {
        let acc = &mut num[t * channels..(t + 1) * channels];
        if d > 0.0 {
            let norm = d + params.epsilon;
            acc.iter_mut().for_each(|v| *v /= norm);
        } else {
            acc.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    let (x, y, z) = target.shape();
    Ok(FusionOutput {
        fused: FeatureVolume {
            values: Array4::from_shape_vec((x, y, z, channels), num).expect("grid-sized buffer"),
            grid: target,
            pose: reference_pose,
        },
        weight_mass: Array3::from_shape_vec((x, y, z), den).expect("grid-sized buffer"),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensifyParams {
    pub passes: usize,
    /// Smoothing kernel width, in voxels.
    pub sigma: f64,
    /// Kernel support radius, in voxels.
    pub radius: usize,
}

impl Default for DensifyParams {
    fn default() -> Self {
        Self {
            passes: 1,
            sigma: 1.0,
            radius: 2,
        }
    }
}

/// Rounds of truncated Gaussian smoothing, each followed by per-channel
/// rescaling so that every channel keeps its pre-smoothing maximum.
pub fn densify(z: &FeatureVolume, params: &DensifyParams) -> FeatureVolume {
    let mut out = z.clone();
    if params.passes == 0 {
        return out;
    }
    let taps = smoothing_taps(params.sigma, params.radius);
    for _ in 0..params.passes {
        for c in 0..out.channels() {
            let before = out.values.index_axis(Axis(3), c).iter().copied().fold(0.0, f64::max);
            let mut ch = out.channel(c);
            for axis in 0..3 {
                ch = convolve_axis(&ch, &taps, axis);
            }
            let after = ch.iter().copied().fold(0.0, f64::max);
            if after > 0.0 && before > 0.0 {
                let s = before / after;
                ch.mapv_inplace(|v| v * s);
            }
            out.values.index_axis_mut(Axis(3), c).assign(&ch);
        }
    }
    out
}

/// Normalized 1-D Gaussian taps on `[-radius, radius]`.
pub fn smoothing_taps(sigma: f64, radius: usize) -> Vec<f64> {
    let r = radius as i64;
    let raw: Vec<f64> = (-r..=r).map(|d| gaussian_kernel((d * d) as f64, sigma)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

fn convolve_axis(input: &Array3<f64>, taps: &[f64], axis: usize) -> Array3<f64> {
    let r = (taps.len() / 2) as i64;
    let dims = input.dim();
    let len = [dims.0, dims.1, dims.2][axis] as i64;
    Array3::from_shape_fn(dims, |(x, y, z)| {
        let pos = [x, y, z];
        let mut acc = 0.0;
        for (k, w) in taps.iter().enumerate() {
            let q = pos[axis] as i64 + k as i64 - r;
            if q < 0 || q >= len {
                continue;
            }
            let mut idx = pos;
            idx[axis] = q as usize;
            acc += w * input[(idx[0], idx[1], idx[2])];
        }
        acc
    })
}
