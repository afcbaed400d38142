//! Depth, occupancy and point-cloud evaluation measures.

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reconstruct::{DepthMap, VoxelGrid};

/// Probability clamp applied before taking logarithms.
pub const BCE_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub abs_rel: f64,
    pub mae: f64,
    pub rmse: f64,
    pub cd: f64,
    pub cd_diag: f64,
    pub bce: f64,
    pub depth_l1: f64,
    pub composite: f64,
    pub n_valid_pixels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossWeights {
    pub lambda_v: f64,
    pub lambda_d: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_v: 1.0,
            lambda_d: 1.0,
        }
    }
}

/// Mean binary cross-entropy over all voxels.
pub fn voxel_bce(pred: &VoxelGrid, gt: &VoxelGrid) -> Result<f64> {
    if pred.values.dim() != gt.values.dim() {
        return Err(Error::ShapeMismatch(format!(
            "prediction {:?} vs ground truth {:?}",
            pred.values.dim(),
            gt.values.dim()
        )));
    }
    let n = pred.values.len();
    let total: f64 = pred
        .values
        .iter()
        .zip(gt.values.iter())
        .map(|(&p, &g)| {
            let p = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
            g * p.ln() + (1.0 - g) * (1.0 - p).ln()
        })
        .sum();
    Ok(-total / n as f64)
}

/// `(predicted, ground truth)` pairs where both pixels are valid.
fn common_valid(pred: &DepthMap, gt: &DepthMap) -> Result<Vec<(f64, f64)>> {
    if pred.shape() != gt.shape() {
        return Err(Error::ShapeMismatch(format!(
            "depth maps {:?} vs {:?}",
            pred.shape(),
            gt.shape()
        )));
    }
    let pairs: Vec<(f64, f64)> = pred
        .values
        .iter()
        .zip(gt.values.iter())
        .filter(|(&p, &g)| DepthMap::is_valid(p) && DepthMap::is_valid(g))
        .map(|(&p, &g)| (p, g))
        .collect();
    if pairs.is_empty() {
        return Err(Error::EmptyValidSet);
    }
    Ok(pairs)
}

/// Mean absolute depth error over pixels valid in both maps.
pub fn depth_l1(pred: &DepthMap, gt: &DepthMap) -> Result<f64> {
    let pairs = common_valid(pred, gt)?;
    Ok(pairs.iter().map(|(p, g)| (p - g).abs()).sum::<f64>() / pairs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthMetrics {
    pub abs_rel: f64,
    pub mae: f64,
    pub rmse: f64,
    pub n_valid: usize,
}

/// AbsRel, MAE and RMSE over pixels valid in both maps. Ground-truth
/// zeros are left out of AbsRel only.
pub fn depth_metrics(pred: &DepthMap, gt: &DepthMap) -> Result<DepthMetrics> {
    let pairs = common_valid(pred, gt)?;
    let n = pairs.len() as f64;
    let mae = pairs.iter().map(|(p, g)| (p - g).abs()).sum::<f64>() / n;
    let rmse = (pairs.iter().map(|(p, g)| (p - g) * (p - g)).sum::<f64>() / n).sqrt();
    let rel: Vec<f64> = pairs
        .iter()
        .filter(|(_, g)| *g != 0.0)
        .map(|(p, g)| (p - g).abs() / g)
        .collect();
    let abs_rel = if rel.is_empty() {
        0.0
    } else {
        rel.iter().sum::<f64>() / rel.len() as f64
    };
    Ok(DepthMetrics {
        abs_rel,
        mae,
        rmse,
        n_valid: pairs.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chamfer {
    pub cd: f64,
    pub cd_diag: f64,
}

fn nearest_distances(from: &[Vector3<f64>], to: &[Vector3<f64>]) -> Vec<f64> {
    from.par_iter()
        .map(|p| {
            to.iter()
                .map(|q| (p - q).norm_squared())
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect()
}

/// Symmetric Chamfer distance (mean of both directed averages) without the
/// diagonal normalization.
pub fn chamfer_distance(pred: &[Vector3<f64>], gt: &[Vector3<f64>]) -> Result<f64> {
    if pred.is_empty() || gt.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let forward: f64 = nearest_distances(pred, gt).iter().sum::<f64>() / pred.len() as f64;
    let backward: f64 = nearest_distances(gt, pred).iter().sum::<f64>() / gt.len() as f64;
    Ok(0.5 * (forward + backward))
}

/// Chamfer distance plus its ratio to the ground-truth bounding-box diagonal.
pub fn chamfer(pred: &[Vector3<f64>], gt: &[Vector3<f64>]) -> Result<Chamfer> {
    let cd = chamfer_distance(pred, gt)?;
    let diag = bbox_diagonal(gt);
    if !(diag > 0.0) {
        return Err(Error::DegenerateBoundingBox(diag));
    }
    Ok(Chamfer { cd, cd_diag: cd / diag })
}

pub fn bbox_diagonal(points: &[Vector3<f64>]) -> f64 {
    let lo = points.iter().fold(Vector3::repeat(f64::INFINITY), |m, p| m.inf(p));
    let hi = points.iter().fold(Vector3::repeat(f64::NEG_INFINITY), |m, p| m.sup(p));
    (hi - lo).norm()
}

/// Empirical CDF sampled at `bins + 1` evenly spaced error levels from 0 to
/// the largest error.
#[derive(Debug, Clone, PartialEq)]
pub struct Cdf {
    pub levels: Vec<f64>,
    pub fractions: Vec<f64>,
}

impl Cdf {
    fn from_errors(mut errors: Vec<f64>, bins: usize) -> Self {
        errors.sort_by(f64::total_cmp);
        let max = *errors.last().expect("non-empty");
        let n = errors.len() as f64;
        let mut levels = Vec::with_capacity(bins + 1);
        let mut fractions = Vec::with_capacity(bins + 1);
        for k in 0..=bins {
            let level = if k == bins { max } else { max * k as f64 / bins as f64 };
            let count = errors.partition_point(|&e| e <= level);
            levels.push(level);
            fractions.push(count as f64 / n);
        }
        Self { levels, fractions }
    }

    /// Smallest tabulated level at which the CDF reaches `q`.
    pub fn quantile(&self, q: f64) -> f64 {
        self.levels
            .iter()
            .zip(&self.fractions)
            .find(|(_, &f)| f >= q)
            .map(|(&l, _)| l)
            .unwrap_or(f64::NAN)
    }

    /// Two-column CSV `error,cumulative_fraction`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("error,cumulative_fraction\n");
        for (l, f) in self.levels.iter().zip(&self.fractions) {
            out.push_str(&format!("{l},{f}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCdfs {
    pub absolute: Cdf,
    pub relative: Cdf,
}

/// CDFs of absolute and relative depth error over common-valid pixels.
pub fn error_cdf(pred: &DepthMap, gt: &DepthMap, bins: usize) -> Result<ErrorCdfs> {
    if bins == 0 {
        return Err(Error::InvalidConfig("error_cdf needs at least one bin".into()));
    }
    let pairs = common_valid(pred, gt)?;
    let abs: Vec<f64> = pairs.iter().map(|(p, g)| (p - g).abs()).collect();
    let mut rel: Vec<f64> = pairs
        .iter()
        .filter(|(_, g)| *g != 0.0)
        .map(|(p, g)| (p - g).abs() / g)
        .collect();
    if rel.is_empty() {
        rel.push(0.0);
    }
    Ok(ErrorCdfs {
        absolute: Cdf::from_errors(abs, bins),
        relative: Cdf::from_errors(rel, bins),
    })
}

/// All measures for one prediction/ground-truth pair.
pub fn evaluate(
    pred_voxels: &VoxelGrid,
    gt_voxels: &VoxelGrid,
    pred_depth: &DepthMap,
    gt_depth: &DepthMap,
    tau_occ: f64,
    weights: &LossWeights,
) -> Result<EvalReport> {
    let dm = depth_metrics(pred_depth, gt_depth)?;
    let l1 = depth_l1(pred_depth, gt_depth)?;
    let bce = voxel_bce(pred_voxels, gt_voxels)?;
    let ch = chamfer(&pred_voxels.occupied_points(tau_occ), &gt_voxels.occupied_points(0.5))?;
    Ok(EvalReport {
        abs_rel: dm.abs_rel,
        mae: dm.mae,
        rmse: dm.rmse,
        cd: ch.cd,
        cd_diag: ch.cd_diag,
        bce,
        depth_l1: l1,
        composite: weights.lambda_v * bce + weights.lambda_d * l1,
        n_valid_pixels: dm.n_valid,
    })
}
