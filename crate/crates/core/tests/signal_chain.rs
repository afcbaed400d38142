mod common;

use nalgebra::Vector3;
use ndarray::Array3;
use rand::Rng;

use common::oracles::{naive_beamform, scatter_max};
use common::{rng, scatterer_scene, simulate_cir};
use rfscene_core::geometry::{direction_vector, tap_spacing};
use rfscene_core::imaging::{beamform_frame, to_cartesian, ProjectionParams, RadioFrame};
use rfscene_core::ofdm::{compute_cir, OfdmConfig};
use rfscene_core::{AntennaArray, Fov, GridSpec, Pose, SphericalGrid};

fn argmax(v: &[num_complex::Complex64]) -> usize {
    v.iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .unwrap()
        .0
}

#[test]
fn end_to_end_integer_ranges() {
    let array = AntennaArray::default_60ghz();
    let config = OfdmConfig::default();
    for r in 1..=6 {
        let r = r as f64;
        let scene = scatterer_scene(&[Vector3::new(0.0, r, 0.0)]);
        let cir = simulate_cir(&scene, &Pose::identity(), &array, &config, 3);
        let expected = (2.0 * r * config.bandwidth / rfscene_core::SPEED_OF_LIGHT).round() as usize;
        let taps: Vec<_> = cir.taps.slice(ndarray::s![0, 0, ..]).to_vec();
        assert_eq!(argmax(&taps), expected, "range {r}");
    }
}

#[test]
fn off_grid_ranges_land_on_neighbor_taps() {
    let array = AntennaArray::default_60ghz();
    let config = OfdmConfig::default();
    let mut g = rng(20);
    for _ in 0..20 {
        let r: f64 = g.random_range(0.5..6.0);
        let theta = g.random_range(-0.8..0.8);
        let phi = g.random_range(-0.4..0.4);
        let scene = scatterer_scene(&[direction_vector(theta, phi) * r]);
        let cir = simulate_cir(&scene, &Pose::identity(), &array, &config, 5);
        let exact = r / tap_spacing(config.bandwidth);
        for i in 0..array.n_tx() {
            for j in 0..array.n_rx() {
                let taps: Vec<_> = cir.taps.slice(ndarray::s![i, j, ..]).to_vec();
                let n = argmax(&taps) as f64;
                assert!(n == exact.floor() || n == exact.ceil(), "r={r} tap {n} vs {exact}");
            }
        }
    }
}

#[test]
fn shifted_impulse_sidelobes() {
    let config = OfdmConfig::default().all_valid();
    let k = config.fft_size;
    let h: Vec<_> = (0..k)
        .map(|m| num_complex::Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * (m * 20) as f64 / k as f64))
        .collect();
    let cir = compute_cir(&h, &config).unwrap();
    assert_eq!(argmax(&cir), 20);
    let peak = cir[20].norm();
    for (n, v) in cir.iter().enumerate() {
        if n != 20 {
            assert!(20.0 * (peak / v.norm().max(1e-300)).log10() >= 20.0);
        }
    }
}

fn sweep_directions(grid: &SphericalGrid) -> Vec<(usize, usize)> {
    let pick = |n: usize| -> Vec<usize> { (1..=5).map(|k| k * (n - 1) / 6).collect() };
    let (az, el) = (pick(grid.azimuths.len()), pick(grid.elevations.len()));
    az.iter().flat_map(|&a| el.iter().map(move |&e| (a, e))).collect()
}

#[test]
fn doa_sweep_and_naive_oracle() {
    let array = AntennaArray::default_60ghz();
    let config = OfdmConfig::default();
    let grid = SphericalGrid::default_grid();
    let n0 = 25;
    let ti = grid.range_taps.iter().position(|&n| n == n0).unwrap();
    let r = n0 as f64 * tap_spacing(config.bandwidth);
    let mut hits = 0;
    for (k, (ai, ei)) in sweep_directions(&grid).into_iter().enumerate() {
        let p = direction_vector(grid.azimuths[ai], grid.elevations[ei]) * r;
        let cir = simulate_cir(&scatterer_scene(&[p]), &Pose::identity(), &array, &config, 11);
        let frame = beamform_frame(&cir, &array, &grid, Pose::identity()).unwrap();
        let slice = frame.values.index_axis(ndarray::Axis(0), ti);
        let best = slice
            .indexed_iter()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(idx, _)| idx)
            .unwrap();
        if best == (ai, ei) {
            hits += 1;
        }
        // the oracle is slow; compare a few directions in full
        if k % 8 == 0 {
            let naive = naive_beamform(&cir, &array, &grid);
            assert!(
                naive.iter().zip(frame.values.iter()).all(|(a, b)| a.to_bits() == b.to_bits()),
                "beamformer differs from the naive oracle"
            );
        }
    }
    assert_eq!(hits, 25);
}

#[test]
fn beamforming_independent_of_symbols() {
    let array = AntennaArray::default_60ghz();
    let config = OfdmConfig::default();
    let grid = SphericalGrid::uniform(&Fov::default(), 6.0, 5.0, config.bandwidth).unwrap();
    let scene = scatterer_scene(&[Vector3::new(0.7, 2.5, -0.3), Vector3::new(-1.0, 4.0, 0.5)]);
    let a = beamform_frame(&simulate_cir(&scene, &Pose::identity(), &array, &config, 1), &array, &grid, Pose::identity()).unwrap();
    let b = beamform_frame(&simulate_cir(&scene, &Pose::identity(), &array, &config, 99), &array, &grid, Pose::identity()).unwrap();
    let peak = a.max_value();
    for (x, y) in a.values.iter().zip(b.values.iter()) {
        assert!((x - y).abs() <= 1e-9 * peak);
    }
}

#[test]
fn dense_frame_matches_scatter_max_oracle() {
    let grid = SphericalGrid::default_grid();
    let spec = GridSpec::default();
    let mut g = rng(7);
    let values = Array3::from_shape_fn(grid.shape(), |_| g.random::<f64>());
    let frame = RadioFrame {
        values,
        grid: grid.clone(),
        pose: Pose::identity(),
    };
    let vol = to_cartesian(&frame, &spec, &ProjectionParams::default()).unwrap();
    let oracle = scatter_max(&frame.values, &grid, &spec);
    assert_eq!(vol.values, oracle);
    assert_eq!(vol.values.iter().copied().fold(0.0, f64::max), 1.0);
}
