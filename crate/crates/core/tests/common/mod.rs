#![allow(dead_code)]

pub mod oracles;

use nalgebra::Vector3;
use ndarray::{Array3, Array4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rfscene_core::fusion::{ConfidenceVolume, FeatureVolume};
use rfscene_core::ofdm::{cir_tensor, qpsk_symbols, synthesize_rx, CirTensor, OfdmConfig};
use rfscene_core::scene::{enumerate_paths, Bounds, PathParams, Scatterer, Scene};
use rfscene_core::{AntennaArray, GridSpec, Pose};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn big_bounds() -> Bounds {
    Bounds {
        min: Vector3::repeat(-100.0),
        max: Vector3::repeat(100.0),
    }
}

pub fn scatterer_scene(points: &[Vector3<f64>]) -> Scene {
    Scene {
        scatterers: points
            .iter()
            .map(|&position| Scatterer {
                position,
                reflectivity: 1.0,
            })
            .collect(),
        walls: vec![],
        bounds: big_bounds(),
    }
}

/// Scene → paths → received symbols → CIR, noiseless unless the config
/// carries an SNR.
pub fn simulate_cir(scene: &Scene, pose: &Pose, array: &AntennaArray, config: &OfdmConfig, seed: u64) -> CirTensor {
    let paths = enumerate_paths(scene, pose, array, &PathParams::default());
    let x = qpsk_symbols(config, seed);
    let y = synthesize_rx(&paths, &x, config, array, seed).unwrap();
    cir_tensor(&y, &x, config).unwrap()
}

pub fn random_pose(rng: &mut impl Rng, max_angle: f64, max_shift: f64) -> Pose {
    let axis = rfscene_core::scene::random_axis(rng);
    let angle = rng.random_range(-max_angle..=max_angle);
    let t = Vector3::new(
        rng.random_range(-max_shift..=max_shift),
        rng.random_range(-max_shift..=max_shift),
        rng.random_range(-max_shift..=max_shift),
    );
    Pose::from_axis_angle(axis, angle, t)
}

/// Random sparse frame: roughly `density` of the voxels carry features in
/// `[0, 1]`, logits uniform in `[-4, 4]` everywhere.
pub fn random_frame(rng: &mut impl Rng, grid: GridSpec, channels: usize, density: f64, pose: Pose) -> (FeatureVolume, ConfidenceVolume) {
    let (x, y, z) = grid.shape();
    let mut values = Array4::zeros((x, y, z, channels));
    for ix in 0..x {
        for iy in 0..y {
            for iz in 0..z {
                if rng.random::<f64>() < density {
                    for c in 0..channels {
                        values[(ix, iy, iz, c)] = rng.random::<f64>();
                    }
                }
            }
        }
    }
    let logits = Array3::from_shape_fn((x, y, z), |_| rng.random_range(-4.0..4.0));
    (FeatureVolume { values, grid, pose }, ConfidenceVolume { logits })
}
