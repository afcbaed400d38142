//! Delay-and-sum beamforming of CIR tensors into radio frames and their
//! projection into sensor-frame Cartesian volumes.

use ndarray::Array3;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AntennaArray, Pose, SphericalGrid};
use crate::grid::GridSpec;
use crate::ofdm::CirTensor;

/// Beamformed signal strengths `s(n, θ, φ)`, shape `(taps, azimuths, elevations)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadioFrame {
    pub values: Array3<f64>,
    pub grid: SphericalGrid,
    pub pose: Pose,
}

impl RadioFrame {
    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Real-valued sensor-frame volume.
#[derive(Debug, Clone, PartialEq)]
pub struct CartesianVolume {
    pub values: Array3<f64>,
    pub grid: GridSpec,
}

impl CartesianVolume {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            values: Array3::zeros(grid.shape()),
            grid,
        }
    }
}

/// Steering weights for every `(θ, φ)` direction and antenna pair, laid out
/// direction-major (`θ` slowest), pair-minor (`i` major, `j` minor).
#[derive(Debug, Clone)]
pub struct SteeringTable {
    weights: Vec<Complex64>,
    n_pairs: usize,
    n_az: usize,
    n_el: usize,
}

impl SteeringTable {
    pub fn new(array: &AntennaArray, grid: &SphericalGrid) -> Self {
        let (n_az, n_el) = (grid.azimuths.len(), grid.elevations.len());
        let n_pairs = array.n_pairs();
        let mut weights = Vec::with_capacity(n_az * n_el * n_pairs);
        for &theta in &grid.azimuths {
            for &phi in &grid.elevations {
                for i in 0..array.n_tx() {
                    for j in 0..array.n_rx() {
                        weights.push(array.steering_weight_with(grid.direction_formula, i, j, theta, phi));
                    }
                }
            }
        }
        Self {
            weights,
            n_pairs,
            n_az,
            n_el,
        }
    }

    fn direction(&self, az: usize, el: usize) -> &[Complex64] {
        let start = (az * self.n_el + el) * self.n_pairs;
        &self.weights[start..start + self.n_pairs]
    }
}

/// `s(n,θ,φ) = |Σ_i Σ_j w_ij(θ,φ)·ĥ_ij(n)|`, summed `i`-major, `j`-minor.
pub fn beamform_frame(cir: &CirTensor, array: &AntennaArray, grid: &SphericalGrid, pose: Pose) -> Result<RadioFrame> {
    let table = SteeringTable::new(array, grid);
    beamform_with_table(cir, array, grid, &table, pose)
}

/// As [`beamform_frame`], reusing a precomputed steering table.
pub fn beamform_with_table(
    cir: &CirTensor,
    array: &AntennaArray,
    grid: &SphericalGrid,
    table: &SteeringTable,
    pose: Pose,
) -> Result<RadioFrame> {
    cir.validate(array)?;
    grid.validate()?;
    let (n_taps, n_az, n_el) = grid.shape();
    if table.n_az != n_az || table.n_el != n_el || table.n_pairs != array.n_pairs() {
        return Err(Error::ShapeMismatch("steering table does not match grid/array".into()));
    }
    if let Some(&bad) = grid.range_taps.iter().find(|&&n| n >= cir.config.fft_size) {
        return Err(Error::InvalidGrid(format!("tap {bad} exceeds the CIR length")));
    }

    // gather the taps of interest pair-contiguous: taps[n][pair]
    let n_rx = array.n_rx();
    let taps: Vec<Vec<Complex64>> = grid
        .range_taps
        .iter()
        .map(|&n| {
            (0..array.n_pairs())
                .map(|p| cir.taps[(p / n_rx, p % n_rx, n)])
                .collect()
        })
        .collect();

    let per_direction: Vec<Vec<f64>> = (0..n_az * n_el)
        .into_par_iter()
        .map(|d| {
            let w = table.direction(d / n_el, d % n_el);
            taps.iter()
                .map(|h| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (wp, hp) in w.iter().zip(h) {
                        acc += wp * hp;
                    }
                    acc.norm()
                })
                .collect()
        })
        .collect();

    let mut values = Array3::zeros((n_taps, n_az, n_el));
    for (d, col) in per_direction.into_iter().enumerate() {
        for (n, v) in col.into_iter().enumerate() {
            values[(n, d / n_el, d % n_el)] = v;
        }
    }
    Ok(RadioFrame {
        values,
        grid: grid.clone(),
        pose,
    })
}

/// Options for [`to_cartesian`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionParams {
    /// Each cell is multiplied by `r^range_gain` before projection;
    /// 0 leaves the beamformed strengths untouched.
    pub range_gain: f64,
}

impl Default for ProjectionParams {
    fn default() -> Self {
        Self { range_gain: 0.0 }
    }
}

/// Scatters each spherical cell to the voxel containing `r·u(θ,φ)`,
/// max-combining collisions, then divides by the largest retained value so
/// the volume lies in `[0, 1]`.
pub fn to_cartesian(frame: &RadioFrame, spec: &GridSpec, params: &ProjectionParams) -> Result<CartesianVolume> {
    spec.validate()?;
    let mut vol = CartesianVolume::zeros(*spec);
    let grid = &frame.grid;
    for (ti, &n) in grid.range_taps.iter().enumerate() {
        let r = grid.range_of_tap(n);
        let gain = if params.range_gain == 0.0 { 1.0 } else { r.powf(params.range_gain) };
        for (ai, &theta) in grid.azimuths.iter().enumerate() {
            for (ei, &phi) in grid.elevations.iter().enumerate() {
                let p = grid.direction(theta, phi) * r;
                if let Some(idx) = spec.locate(&p) {
                    let s = frame.values[(ti, ai, ei)] * gain;
                    let cell = &mut vol.values[(idx[0], idx[1], idx[2])];
                    if s > *cell {
                        *cell = s;
                    }
                }
            }
        }
    }
    let max = vol.values.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        vol.values.mapv_inplace(|v| v / max);
    }
    Ok(vol)
}
