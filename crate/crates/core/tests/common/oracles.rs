//! Slow, direct reference implementations used to check the optimized
//! kernels.

#![allow(dead_code)]

use nalgebra::Vector3;
use ndarray::{Array2, Array3, Array4};
use num_complex::Complex64;

use rfscene_core::fusion::{snap_landing, softplus, ConfidenceVolume, FeatureVolume, FusionParams, SKIP_WEIGHT_FLOOR};
use rfscene_core::geometry::{direction_vector, relative_transform};
use rfscene_core::ofdm::CirTensor;
use rfscene_core::scene::Scene;
use rfscene_core::{AntennaArray, Fov, GridSpec, Pose, SphericalGrid};

/// Triple loop over cells, steering weights recomputed for every cell.
pub fn naive_beamform(cir: &CirTensor, array: &AntennaArray, grid: &SphericalGrid) -> Array3<f64> {
    let mut out = Array3::zeros(grid.shape());
    for (ti, &n) in grid.range_taps.iter().enumerate() {
        for (ai, &theta) in grid.azimuths.iter().enumerate() {
            for (ei, &phi) in grid.elevations.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..array.n_tx() {
                    for j in 0..array.n_rx() {
                        let w = array.steering_weight_with(grid.direction_formula, i, j, theta, phi);
                        acc += w * cir.taps[(i, j, n)];
                    }
                }
                out[(ti, ai, ei)] = acc.norm();
            }
        }
    }
    out
}

/// Cell-by-cell scatter with max, then division by the largest voxel.
pub fn scatter_max(values: &Array3<f64>, grid: &SphericalGrid, spec: &GridSpec) -> Array3<f64> {
    let ts = rfscene_core::geometry::tap_spacing(grid.bandwidth);
    let mut out = Array3::<f64>::zeros(spec.shape());
    for (ti, &n) in grid.range_taps.iter().enumerate() {
        for (ai, &theta) in grid.azimuths.iter().enumerate() {
            for (ei, &phi) in grid.elevations.iter().enumerate() {
                let p = direction_vector(theta, phi) * (n as f64 * ts);
                let mut idx = [0usize; 3];
                let mut inside = true;
                for a in 0..3 {
                    let f = ((p[a] - spec.origin[a]) / spec.voxel_size).floor();
                    if f < 0.0 || f >= spec.dims[a] as f64 {
                        inside = false;
                    } else {
                        idx[a] = f as usize;
                    }
                }
                if inside {
                    let cell = &mut out[(idx[0], idx[1], idx[2])];
                    *cell = cell.max(values[(ti, ai, ei)]);
                }
            }
        }
    }
    let max = out.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        out.mapv_inplace(|v| v / max);
    }
    out
}

/// Mean of the 3³ neighborhood with zero padding.
pub fn neighborhood_mean(v: &Array3<f64>) -> Array3<f64> {
    let (nx, ny, nz) = v.dim();
    Array3::from_shape_fn((nx, ny, nz), |(x, y, z)| {
        let mut s = 0.0;
        for dx in -1i64..=1 {
            for dy in -1i64..=1 {
                for dz in -1i64..=1 {
                    let (a, b, c) = (x as i64 + dx, y as i64 + dy, z as i64 + dz);
                    if a >= 0 && b >= 0 && c >= 0 && (a as usize) < nx && (b as usize) < ny && (c as usize) < nz {
                        s += v[(a as usize, b as usize, c as usize)];
                    }
                }
            }
        }
        s / 27.0
    })
}

/// Quadruple loop over (target voxel, frame, source voxel): weights are
/// computed from the full squared distance rather than per-axis factors.
pub fn brute_force_fuse(
    frames: &[(&FeatureVolume, &ConfidenceVolume, Pose)],
    reference: usize,
    params: &FusionParams,
) -> Array4<f64> {
    let grid = frames[reference].0.grid;
    let channels = frames[0].0.values.dim().3;
    let (nx, ny, nz) = grid.shape();
    let r = params.radius as f64;

    // landing points of every source voxel, per frame
    let landings: Vec<Vec<Option<[f64; 3]>>> = frames
        .iter()
        .map(|(f, c, pose)| {
            let t = relative_transform(&frames[reference].2, pose);
            (0..grid.len())
                .map(|flat| {
                    let idx = grid.unflat(flat);
                    let rel = softplus(c.logits[(idx[0], idx[1], idx[2])]).powf(params.eta);
                    let zero = (0..channels).all(|ch| f.values[(idx[0], idx[1], idx[2], ch)] == 0.0);
                    if zero && rel < SKIP_WEIGHT_FLOOR {
                        return None;
                    }
                    let p = t.transform_point(&f.grid.voxel_center(idx));
                    Some(snap_landing([
                        (p.x - grid.origin[0]) / grid.voxel_size - 0.5,
                        (p.y - grid.origin[1]) / grid.voxel_size - 0.5,
                        (p.z - grid.origin[2]) / grid.voxel_size - 0.5,
                    ]))
                })
                .collect()
        })
        .collect();

    let mut out = Array4::zeros((nx, ny, nz, channels));
    for x in 0..nx {
        for y in 0..ny {
            for z in 0..nz {
                let target = [x as f64, y as f64, z as f64];
                let mut num = vec![0.0; channels];
                let mut den = 0.0;
                for (fi, (f, c, _)) in frames.iter().enumerate() {
                    for flat in 0..grid.len() {
                        let Some(land) = landings[fi][flat] else { continue };
                        if (0..3).any(|a| (land[a] - target[a]).abs() > r) {
                            continue;
                        }
                        let d2: f64 = (0..3).map(|a| (land[a] - target[a]).powi(2)).sum();
                        let idx = grid.unflat(flat);
                        let w = (-d2 / (2.0 * params.sigma * params.sigma)).exp()
                            * softplus(c.logits[(idx[0], idx[1], idx[2])]).powf(params.eta);
                        den += w;
                        for (ch, acc) in num.iter_mut().enumerate() {
                            *acc += w * f.values[(idx[0], idx[1], idx[2], ch)];
                        }
                    }
                }
                if den > 0.0 {
                    for (ch, acc) in num.iter().enumerate() {
                        out[(x, y, z, ch)] = acc / (den + params.epsilon);
                    }
                }
            }
        }
    }
    out
}

/// Full 3-D truncated Gaussian convolution with zero padding; taps are the
/// normalized 1-D kernel's outer product.
pub fn dense_convolution(v: &Array3<f64>, sigma: f64, radius: usize) -> Array3<f64> {
    let r = radius as i64;
    let raw: Vec<f64> = (-r..=r).map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = raw.iter().sum();
    let k: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let (nx, ny, nz) = v.dim();
    Array3::from_shape_fn((nx, ny, nz), |(x, y, z)| {
        let mut acc = 0.0;
        for dx in -r..=r {
            for dy in -r..=r {
                for dz in -r..=r {
                    let (a, b, c) = (x as i64 + dx, y as i64 + dy, z as i64 + dz);
                    if a < 0 || b < 0 || c < 0 || a >= nx as i64 || b >= ny as i64 || c >= nz as i64 {
                        continue;
                    }
                    let w = k[(dx + r) as usize] * k[(dy + r) as usize] * k[(dz + r) as usize];
                    acc += w * v[(a as usize, b as usize, c as usize)];
                }
            }
        }
        acc
    })
}

/// Whether a world point lies inside a scatterer sphere.
fn inside_sphere(scene: &Scene, p: &Vector3<f64>, sphere_radius: f64) -> bool {
    scene.scatterers.iter().any(|s| (p - s.position).norm() <= sphere_radius)
}

/// Marches each pixel ray at `step` meters; a wall is detected by a sign
/// change of its plane distance with the crossing inside the rectangle.
pub fn ray_march_depth(
    scene: &Scene,
    pose: &Pose,
    h: usize,
    w: usize,
    fov: &Fov,
    sphere_radius: f64,
    max_range: f64,
    step: f64,
) -> Array2<f64> {
    let mut out = Array2::from_elem((h, w), -1.0);
    for row in 0..h {
        for col in 0..w {
            let (theta, phi) = fov.pixel_angles(h, w, row, col);
            let dir = pose.rotation * direction_vector(theta, phi);
            let o = pose.translation;
            let mut prev: Vec<f64> = scene.walls.iter().map(|wl| (o - wl.point).dot(&wl.normal)).collect();
            let mut t = step;
            let mut hit_at = None;
            while t <= max_range + step {
                let p = o + dir * t;
                if inside_sphere(scene, &p, sphere_radius) {
                    hit_at = Some(t);
                }
                for (k, wl) in scene.walls.iter().enumerate() {
                    let d = (p - wl.point).dot(&wl.normal);
                    if d == 0.0 || d.signum() != prev[k].signum() {
                        // linear interpolation of the plane distance between samples
                        let tc = t - step * d / (d - prev[k]);
                        let (u, v) = wl.axes();
                        let q = o + dir * tc - wl.point;
                        if q.dot(&u).abs() <= wl.extent[0] && q.dot(&v).abs() <= wl.extent[1] {
                            hit_at = Some(hit_at.map_or(tc, |h: f64| h.min(tc)));
                        }
                    }
                    prev[k] = d;
                }
                if let Some(h) = hit_at {
                    if h <= max_range {
                        out[(row, col)] = h;
                    }
                    break;
                }
                t += step;
            }
        }
    }
    out
}

/// Occupancy from dense sampling: spheres by testing `n³` points per voxel,
/// walls by rasterizing a lattice of points on the rectangle at
/// `voxel_size / n` pitch.
pub fn supersampled_occupancy(scene: &Scene, pose: &Pose, grid: &GridSpec, sphere_radius: f64, n: usize) -> Array3<f64> {
    let local = scene.transformed(&pose.inverse());
    let mut out = Array3::zeros(grid.shape());
    let sub = grid.voxel_size / n as f64;
    for x in 0..grid.dims[0] {
        for y in 0..grid.dims[1] {
            for z in 0..grid.dims[2] {
                let lo = grid.voxel_min([x, y, z]);
                let near = local
                    .scatterers
                    .iter()
                    .any(|s| (grid.voxel_center([x, y, z]) - s.position).norm() < sphere_radius + grid.voxel_size);
                if !near {
                    continue;
                }
                'search: for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            let p = lo + Vector3::new(a as f64 + 0.5, b as f64 + 0.5, c as f64 + 0.5) * sub;
                            if local.scatterers.iter().any(|s| (p - s.position).norm() < sphere_radius) {
                                out[(x, y, z)] = 1.0;
                                break 'search;
                            }
                        }
                    }
                }
            }
        }
    }
    for wl in &local.walls {
        let (u, v) = wl.axes();
        let nu = (2.0 * wl.extent[0] / sub).ceil() as i64;
        let nv = (2.0 * wl.extent[1] / sub).ceil() as i64;
        for a in 0..=nu {
            for b in 0..=nv {
                let su = -wl.extent[0] + 2.0 * wl.extent[0] * a as f64 / nu.max(1) as f64;
                let sv = -wl.extent[1] + 2.0 * wl.extent[1] * b as f64 / nv.max(1) as f64;
                let p = wl.point + u * su + v * sv;
                if let Some(idx) = grid.locate(&p) {
                    out[(idx[0], idx[1], idx[2])] = 1.0;
                }
            }
        }
    }
    out
}

pub fn chamfer_all_pairs(p: &[Vector3<f64>], q: &[Vector3<f64>]) -> f64 {
    let directed = |a: &[Vector3<f64>], b: &[Vector3<f64>]| {
        let mut total = 0.0;
        for x in a {
            let mut best = f64::INFINITY;
            for y in b {
                let d = ((x.x - y.x).powi(2) + (x.y - y.y).powi(2) + (x.z - y.z).powi(2)).sqrt();
                if d < best {
                    best = d;
                }
            }
            total += best;
        }
        total / a.len() as f64
    };
    0.5 * (directed(p, q) + directed(q, p))
}

/// `(abs_rel, mae, rmse)` by plain loops over common-valid pixels.
pub fn depth_loops(pred: &Array2<f64>, gt: &Array2<f64>) -> (f64, f64, f64) {
    let (mut n, mut abs, mut sq, mut rel, mut nrel) = (0usize, 0.0, 0.0, 0.0, 0usize);
    for (p, g) in pred.iter().zip(gt.iter()) {
        if *p == -1.0 || *g == -1.0 {
            continue;
        }
        n += 1;
        abs += (p - g).abs();
        sq += (p - g) * (p - g);
        if *g != 0.0 {
            rel += (p - g).abs() / g;
            nrel += 1;
        }
    }
    (rel / nrel as f64, abs / n as f64, (sq / n as f64).sqrt())
}

pub fn bce_loop(pred: &Array3<f64>, gt: &Array3<f64>) -> f64 {
    let mut total = 0.0;
    for (p, g) in pred.iter().zip(gt.iter()) {
        let p = p.max(1e-7).min(1.0 - 1e-7);
        total -= g * p.ln() + (1.0 - g) * (1.0 - p).ln();
    }
    total / pred.len() as f64
}
