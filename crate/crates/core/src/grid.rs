//! Axis-aligned Cartesian voxel grid in the sensor frame.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Voxel `(ix, iy, iz)` covers the half-open box
/// `[origin + i·voxel_size, origin + (i+1)·voxel_size)` on each axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dims: [usize; 3],
    pub voxel_size: f64,
    pub origin: [f64; 3],
}

impl Default for GridSpec {
    /// 64 × 64 × 32 voxels of 12 cm, centered laterally and vertically on
    /// the sensor and extending forward from the panel.
    fn default() -> Self {
        Self::centered([64, 64, 32], 0.12)
    }
}

impl GridSpec {
    /// Grid whose x and z extents are centered on the sensor and whose y
    /// extent starts at the panel.
    pub fn centered(dims: [usize; 3], voxel_size: f64) -> Self {
        Self {
            dims,
            voxel_size,
            origin: [
                -(dims[0] as f64) * voxel_size / 2.0,
                0.0,
                -(dims[2] as f64) * voxel_size / 2.0,
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.contains(&0) {
            return Err(Error::InvalidGrid(format!("grid dims must be >= 1, got {:?}", self.dims)));
        }
        if !(self.voxel_size > 0.0 && self.voxel_size.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "voxel size must be positive, got {}",
                self.voxel_size
            )));
        }
        if !self.origin.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidGrid("grid origin must be finite".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.dims[0], self.dims[1], self.dims[2])
    }

    /// Row-major flat index (x slowest, z fastest).
    #[inline]
    pub fn flat(&self, idx: [usize; 3]) -> usize {
        (idx[0] * self.dims[1] + idx[1]) * self.dims[2] + idx[2]
    }

    #[inline]
    pub fn unflat(&self, flat: usize) -> [usize; 3] {
        let z = flat % self.dims[2];
        let rest = flat / self.dims[2];
        [rest / self.dims[1], rest % self.dims[1], z]
    }

    #[inline]
    pub fn voxel_center(&self, idx: [usize; 3]) -> Vector3<f64> {
        Vector3::new(
            self.origin[0] + (idx[0] as f64 + 0.5) * self.voxel_size,
            self.origin[1] + (idx[1] as f64 + 0.5) * self.voxel_size,
            self.origin[2] + (idx[2] as f64 + 0.5) * self.voxel_size,
        )
    }

    /// Lower corner of a voxel.
    #[inline]
    pub fn voxel_min(&self, idx: [usize; 3]) -> Vector3<f64> {
        Vector3::new(
            self.origin[0] + idx[0] as f64 * self.voxel_size,
            self.origin[1] + idx[1] as f64 * self.voxel_size,
            self.origin[2] + idx[2] as f64 * self.voxel_size,
        )
    }

    /// Continuous voxel coordinates of a metric point; integer values are
    /// voxel centers.
    #[inline]
    pub fn to_continuous(&self, p: &Vector3<f64>) -> [f64; 3] {
        [
            (p.x - self.origin[0]) / self.voxel_size - 0.5,
            (p.y - self.origin[1]) / self.voxel_size - 0.5,
            (p.z - self.origin[2]) / self.voxel_size - 0.5,
        ]
    }

    /// Voxel containing a metric point, if inside the grid.
    #[inline]
    pub fn locate(&self, p: &Vector3<f64>) -> Option<[usize; 3]> {
        let mut idx = [0usize; 3];
        for a in 0..3 {
            let f = ((p[a] - self.origin[a]) / self.voxel_size).floor();
            if !(f >= 0.0 && f < self.dims[a] as f64) {
                return None;
            }
            idx[a] = f as usize;
        }
        Some(idx)
    }

    /// Metric upper corner of the whole grid.
    pub fn max_corner(&self) -> Vector3<f64> {
        Vector3::new(
            self.origin[0] + self.dims[0] as f64 * self.voxel_size,
            self.origin[1] + self.dims[1] as f64 * self.voxel_size,
            self.origin[2] + self.dims[2] as f64 * self.voxel_size,
        )
    }

    pub fn same_geometry(&self, other: &GridSpec) -> bool {
        self.dims == other.dims && self.voxel_size == other.voxel_size && self.origin == other.origin
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_extent() {
        let g = GridSpec::default();
        assert_eq!(g.len(), 64 * 64 * 32);
        let hi = g.max_corner();
        assert!((hi.x - 3.84).abs() < 1e-12);
        assert!((hi.y - 7.68).abs() < 1e-12);
        assert!((hi.z - 1.92).abs() < 1e-12);
    }

    #[test]
    fn flat_round_trip() {
        let g = GridSpec::centered([5, 7, 3], 0.1);
        for f in 0..g.len() {
            assert_eq!(g.flat(g.unflat(f)), f);
        }
    }

    #[test]
    fn locate_and_center_agree() {
        let g = GridSpec::default();
        let idx = [10, 25, 7];
        assert_eq!(g.locate(&g.voxel_center(idx)), Some(idx));
        let c = g.to_continuous(&g.voxel_center(idx));
        for a in 0..3 {
            assert!((c[a] - idx[a] as f64).abs() < 1e-9);
        }
        assert_eq!(g.locate(&Vector3::new(0.0, -0.01, 0.0)), None);
        // y = 3.0 falls in row 25 of the default grid
        assert_eq!(g.locate(&Vector3::new(0.0, 3.0, 0.0)).unwrap()[1], 25);
    }
}
