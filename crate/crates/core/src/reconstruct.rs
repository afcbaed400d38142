//! Occupancy and depth heads over the fused feature volume.

use nalgebra::Vector3;
use ndarray::{Array2, Array3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::FeatureVolume;
use crate::geometry::{direction_vector, Fov};
use crate::grid::GridSpec;

/// Depth value of pixels without a return.
pub const INVALID_DEPTH: f64 = -1.0;

/// Occupancy probabilities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub values: Array3<f64>,
    pub grid: GridSpec,
}

impl VoxelGrid {
    /// Centers of voxels whose value is at least `threshold`, in the
    /// sensor frame, in flat-index order.
    pub fn occupied_points(&self, threshold: f64) -> Vec<Vector3<f64>> {
        self.values
            .indexed_iter()
            .filter(|(_, &v)| v >= threshold)
            .map(|((x, y, z), _)| self.grid.voxel_center([x, y, z]))
            .collect()
    }
}

/// Range image; each pixel holds meters or [`INVALID_DEPTH`].
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub values: Array2<f64>,
    pub fov: Fov,
    pub max_range: f64,
}

impl DepthMap {
    pub fn is_valid(v: f64) -> bool {
        v != INVALID_DEPTH
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.dim()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadParams {
    /// Occupancy threshold for point-cloud export.
    pub tau_occ: f64,
    /// First-crossing threshold of the depth head.
    pub tau_d: f64,
    pub height: usize,
    pub width: usize,
}

impl Default for HeadParams {
    fn default() -> Self {
        Self {
            tau_occ: 0.5,
            tau_d: 0.35,
            height: 30,
            width: 60,
        }
    }
}

impl HeadParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_occ > 0.0 && self.tau_occ <= 1.0) {
            return Err(Error::InvalidConfig(format!("tau_occ must be in (0, 1], got {}", self.tau_occ)));
        }
        if !(self.tau_d > 0.0 && self.tau_d < 1.0) {
            return Err(Error::InvalidConfig(format!("tau_d must be in (0, 1), got {}", self.tau_d)));
        }
        if self.height == 0 || self.width == 0 {
            return Err(Error::InvalidConfig("depth map size must be at least 1x1".into()));
        }
        Ok(())
    }
}

/// Channel 0 clamped to `[0, 1]`.
pub fn voxel_head(h: &FeatureVolume) -> VoxelGrid {
    VoxelGrid {
        values: h.channel(0).mapv(|v| v.clamp(0.0, 1.0)),
        grid: h.grid,
    }
}

/// Trilinear sample of a volume at a sensor-frame point, clamping to the
/// outermost voxel centers. `None` outside the grid box.
pub fn trilinear(values: &Array3<f64>, grid: &GridSpec, p: &Vector3<f64>) -> Option<f64> {
    let hi = grid.max_corner();
    for a in 0..3 {
        if p[a] < grid.origin[a] || p[a] > hi[a] {
            return None;
        }
    }
    let c = grid.to_continuous(p);
    let mut i0 = [0usize; 3];
    let mut frac = [0.0f64; 3];
    for a in 0..3 {
        let top = (grid.dims[a] - 1) as f64;
        let x = c[a].clamp(0.0, top);
        let f = x.floor().min((grid.dims[a].saturating_sub(2)) as f64).max(0.0);
        i0[a] = f as usize;
        frac[a] = if grid.dims[a] == 1 { 0.0 } else { x - f };
    }
    let at = |dx: usize, dy: usize, dz: usize| {
        let ix = (i0[0] + dx).min(grid.dims[0] - 1);
        let iy = (i0[1] + dy).min(grid.dims[1] - 1);
        let iz = (i0[2] + dz).min(grid.dims[2] - 1);
        values[(ix, iy, iz)]
    };
    let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
    let c00 = lerp(at(0, 0, 0), at(1, 0, 0), frac[0]);
    let c10 = lerp(at(0, 1, 0), at(1, 1, 0), frac[0]);
    let c01 = lerp(at(0, 0, 1), at(1, 0, 1), frac[0]);
    let c11 = lerp(at(0, 1, 1), at(1, 1, 1), frac[0]);
    let c0 = lerp(c00, c10, frac[1]);
    let c1 = lerp(c01, c11, frac[1]);
    Some(lerp(c0, c1, frac[2]))
}

/// First range along `dir` from the sensor origin, marched at `step`
/// meters, where the interpolated channel-0 value reaches `tau_d`.
pub fn first_crossing(values: &Array3<f64>, grid: &GridSpec, dir: &Vector3<f64>, step: f64, tau_d: f64) -> Option<f64> {
    let mut k = 1usize;
    loop {
        let r = k as f64 * step;
        let v = trilinear(values, grid, &(dir * r))?;
        if v >= tau_d {
            return Some(r);
        }
        k += 1;
    }
}

/// First-return depth image from channel 0, marched at quarter-voxel steps.
pub fn depth_head(h: &FeatureVolume, fov: &Fov, height: usize, width: usize, tau_d: f64) -> Result<DepthMap> {
    if !(tau_d > 0.0 && tau_d < 1.0) {
        return Err(Error::InvalidConfig(format!("tau_d must be in (0, 1), got {tau_d}")));
    }
    let values = h.channel(0);
    let grid = h.grid;
    let step = grid.voxel_size / 4.0;
    let depth: Vec<f64> = (0..height * width)
        .into_par_iter()
        .map(|k| {
            let (theta, phi) = fov.pixel_angles(height, width, k / width, k % width);
            first_crossing(&values, &grid, &direction_vector(theta, phi), step, tau_d).unwrap_or(INVALID_DEPTH)
        })
        .collect();
    Ok(DepthMap {
        values: Array2::from_shape_vec((height, width), depth).expect("h*w values"),
        fov: *fov,
        max_range: max_reach(&grid),
    })
}

/// Largest distance from the sensor origin to any point of the grid box.
pub fn max_reach(grid: &GridSpec) -> f64 {
    let hi = grid.max_corner();
    let mut best = 0.0f64;
    for corner in 0..8 {
        let p = Vector3::new(
            if corner & 1 == 0 { grid.origin[0] } else { hi.x },
            if corner & 2 == 0 { grid.origin[1] } else { hi.y },
            if corner & 4 == 0 { grid.origin[2] } else { hi.z },
        );
        best = best.max(p.norm());
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose;
    use ndarray::Array4;

    fn volume_from(ch0: Array3<f64>, grid: GridSpec) -> FeatureVolume {
        let (x, y, z) = ch0.dim();
        let mut values = Array4::zeros((x, y, z, 1));
        values.index_axis_mut(ndarray::Axis(3), 0).assign(&ch0);
        FeatureVolume {
            values,
            grid,
            pose: Pose::identity(),
        }
    }

    fn slab(grid: GridSpec, row: usize) -> FeatureVolume {
        let ch = Array3::from_shape_fn(grid.shape(), |(_, y, _)| if y == row { 1.0 } else { 0.0 });
        volume_from(ch, grid)
    }

    #[test]
    fn voxel_head_cases() {
        let grid = GridSpec::centered([4, 4, 4], 0.12);
        let zero = voxel_head(&volume_from(Array3::zeros((4, 4, 4)), grid));
        assert!(zero.values.iter().all(|&v| v == 0.0));

        let mut ch = Array3::zeros((4, 4, 4));
        ch[(1, 2, 3)] = 0.7;
        ch[(0, 0, 0)] = 1.3;
        ch[(3, 3, 3)] = -0.2;
        let v = voxel_head(&volume_from(ch, grid));
        assert_eq!(v.values[(1, 2, 3)], 0.7);
        assert_eq!(v.values[(0, 0, 0)], 1.0);
        assert_eq!(v.values[(3, 3, 3)], 0.0);
        let twice = voxel_head(&volume_from(v.values.clone(), grid));
        assert_eq!(twice.values, v.values);
    }

    #[test]
    fn empty_volume_has_no_depth() {
        let grid = GridSpec::default();
        let d = depth_head(&volume_from(Array3::zeros(grid.shape()), grid), &Fov::default(), 6, 8, 0.35).unwrap();
        assert!(d.values.iter().all(|&v| v == INVALID_DEPTH));
    }

    #[test]
    fn slab_boresight_and_oblique() {
        let grid = GridSpec::default();
        let h = slab(grid, 25); // y in [3.0, 3.12)
        let fov = Fov::default();
        let d = depth_head(&h, &fov, 31, 61, 0.35).unwrap();
        assert!((d.values[(15, 30)] - 3.0).abs() <= 0.06, "{}", d.values[(15, 30)]);
        // column whose azimuth is closest to 30 degrees
        let col = (0..61)
            .min_by(|&a, &b| {
                let ta = fov.pixel_angles(31, 61, 15, a).0 - 30f64.to_radians();
                let tb = fov.pixel_angles(31, 61, 15, b).0 - 30f64.to_radians();
                ta.abs().total_cmp(&tb.abs())
            })
            .unwrap();
        let theta = fov.pixel_angles(31, 61, 15, col).0;
        assert!((d.values[(15, col)] - 3.0 / theta.cos()).abs() <= 0.07);
    }

    #[test]
    fn invalid_tau_rejected() {
        let grid = GridSpec::centered([2, 2, 2], 0.1);
        assert!(depth_head(&volume_from(Array3::zeros((2, 2, 2)), grid), &Fov::default(), 2, 2, 1.0).is_err());
    }

    #[test]
    fn trilinear_hits_centers() {
        let grid = GridSpec::centered([3, 3, 3], 0.5);
        let ch = Array3::from_shape_fn((3, 3, 3), |(x, y, z)| (x * 9 + y * 3 + z) as f64);
        for x in 0..3 {
            for y in 0..3 {
                for z in 0..3 {
                    let v = trilinear(&ch, &grid, &grid.voxel_center([x, y, z])).unwrap();
                    assert!((v - ch[(x, y, z)]).abs() < 1e-12);
                }
            }
        }
        // linear field is reproduced exactly between centers
        let mid = (grid.voxel_center([0, 1, 1]) + grid.voxel_center([1, 1, 1])) / 2.0;
        assert!((trilinear(&ch, &grid, &mid).unwrap() - 8.5).abs() < 1e-12);
    }
}
