//! Synthetic scenes, sensor trajectories, propagation-path enumeration and
//! ground-truth rendering.

use nalgebra::Vector3;
use ndarray::Array3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{direction_vector, AntennaArray, Fov, Pose, SPEED_OF_LIGHT};
use crate::grid::GridSpec;
use crate::reconstruct::{DepthMap, VoxelGrid, INVALID_DEPTH};

/// Default radius of a scatterer when rendered as a solid (half a voxel).
pub const DEFAULT_SPHERE_RADIUS: f64 = 0.06;
/// Default lattice pitch used to sample walls into point reflectors.
pub const DEFAULT_WALL_PITCH: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scatterer {
    pub position: Vector3<f64>,
    pub reflectivity: f64,
}

/// Planar rectangle centered on `point`. `extent` holds the half-sizes along
/// the wall's in-plane axes (see [`Wall::axes`]). `u_axis`, when present,
/// fixes the first in-plane axis; rigid transforms always set it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Wall {
    pub point: Vector3<f64>,
    pub normal: Vector3<f64>,
    pub extent: [f64; 2],
    pub reflectivity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_axis: Option<Vector3<f64>>,
}

impl Wall {
    /// In-plane unit axes `(u, v)`. Without `u_axis`, `u` is horizontal
    /// (`n × ẑ`) unless the wall is itself horizontal, in which case
    /// `u = x̂`; `v = u × n`.
    pub fn axes(&self) -> (Vector3<f64>, Vector3<f64>) {
        let n = self.normal;
        let c = n.cross(&Vector3::z());
        let projected = self.u_axis.map(|a| a - n * a.dot(&n)).filter(|a| a.norm() > 1e-9);
        let u = if let Some(a) = projected {
            a.normalize()
        } else if c.norm() > 1e-9 {
            c.normalize()
        } else {
            Vector3::x()
        };
        let v = u.cross(&n).normalize();
        (u, v)
    }

    pub fn corners(&self) -> [Vector3<f64>; 4] {
        let (u, v) = self.axes();
        let (a, b) = (u * self.extent[0], v * self.extent[1]);
        [
            self.point + a + b,
            self.point + a - b,
            self.point - a + b,
            self.point - a - b,
        ]
    }

    pub fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        (p - self.point).dot(&self.normal)
    }

    /// Mirror image of `p` across the wall plane.
    pub fn mirror(&self, p: &Vector3<f64>) -> Vector3<f64> {
        p - self.normal * (2.0 * self.signed_distance(p))
    }

    /// Whether an in-plane point lies inside the rectangle.
    fn contains_planar(&self, p: &Vector3<f64>, u: &Vector3<f64>, v: &Vector3<f64>) -> bool {
        let d = p - self.point;
        d.dot(u).abs() <= self.extent[0] && d.dot(v).abs() <= self.extent[1]
    }

    fn transformed(&self, pose: &Pose) -> Wall {
        Wall {
            point: pose.transform_point(&self.point),
            normal: pose.transform_vector(&self.normal),
            extent: self.extent,
            reflectivity: self.reflectivity,
            u_axis: Some(pose.transform_vector(&self.axes().0)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Bounds {
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        const TOL: f64 = 1e-9;
        (0..3).all(|a| p[a] >= self.min[a] - TOL && p[a] <= self.max[a] + TOL)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub scatterers: Vec<Scatterer>,
    pub walls: Vec<Wall>,
    pub bounds: Bounds,
}

impl Scene {
    pub fn empty(bounds: Bounds) -> Self {
        Self {
            scatterers: Vec::new(),
            walls: Vec::new(),
            bounds,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (k, s) in self.scatterers.iter().enumerate() {
            if !self.bounds.contains(&s.position) {
                return Err(Error::InvalidScene(format!("scatterer {k} lies outside the scene bounds")));
            }
            if !(s.reflectivity >= 0.0 && s.reflectivity.is_finite()) {
                return Err(Error::InvalidScene(format!("scatterer {k} has negative reflectivity")));
            }
        }
        for (k, w) in self.walls.iter().enumerate() {
            if (w.normal.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidScene(format!("wall {k} normal is not unit length")));
            }
            if !(w.reflectivity >= 0.0 && w.reflectivity.is_finite()) {
                return Err(Error::InvalidScene(format!("wall {k} has negative reflectivity")));
            }
            if !(w.extent[0] >= 0.0 && w.extent[1] >= 0.0) {
                return Err(Error::InvalidScene(format!("wall {k} has negative extent")));
            }
            if !w.corners().iter().all(|c| self.bounds.contains(c)) {
                return Err(Error::InvalidScene(format!("wall {k} extends outside the scene bounds")));
            }
        }
        Ok(())
    }

    /// Applies a rigid transform to every entity (bounds become the AABB of
    /// the transformed box).
    pub fn transformed(&self, pose: &Pose) -> Scene {
        let mut lo = Vector3::repeat(f64::INFINITY);
        let mut hi = Vector3::repeat(f64::NEG_INFINITY);
        for corner in 0..8 {
            let c = Vector3::new(
                if corner & 1 == 0 { self.bounds.min.x } else { self.bounds.max.x },
                if corner & 2 == 0 { self.bounds.min.y } else { self.bounds.max.y },
                if corner & 4 == 0 { self.bounds.min.z } else { self.bounds.max.z },
            );
            let t = pose.transform_point(&c);
            lo = lo.inf(&t);
            hi = hi.sup(&t);
        }
        Scene {
            scatterers: self
                .scatterers
                .iter()
                .map(|s| Scatterer {
                    position: pose.transform_point(&s.position),
                    reflectivity: s.reflectivity,
                })
                .collect(),
            walls: self.walls.iter().map(|w| w.transformed(pose)).collect(),
            bounds: Bounds { min: lo, max: hi },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    Direct,
    FirstOrderSpecular,
}

/// One propagation path with its per-antenna-pair round-trip delays.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationPath {
    pub kind: PathKind,
    pub amplitude: f64,
    /// Row-major `(tx, rx)` delays in seconds.
    pub delays: Vec<f64>,
    /// Apparent reflector position in the world frame. Equal to the true
    /// reflector for direct paths, the mirror image for specular paths.
    pub ghost_position: Vector3<f64>,
    /// Scatterer index for scatterer-derived paths, `None` for wall samples.
    pub scatterer: Option<usize>,
    /// Wall index: the sampled wall for wall returns, the mirror for ghosts.
    pub wall: Option<usize>,
}

impl PropagationPath {
    pub fn mean_delay(&self) -> f64 {
        self.delays.iter().sum::<f64>() / self.delays.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathParams {
    pub max_range: f64,
    pub wall_pitch: f64,
    pub fov: Fov,
}

impl Default for PathParams {
    fn default() -> Self {
        Self {
            max_range: 7.0,
            wall_pitch: DEFAULT_WALL_PITCH,
            fov: Fov::default(),
        }
    }
}

struct WorldArray {
    tx: Vec<Vector3<f64>>,
    rx: Vec<Vector3<f64>>,
    tx_center: Vector3<f64>,
    rx_center: Vector3<f64>,
}

impl WorldArray {
    fn new(array: &AntennaArray, pose: &Pose) -> Self {
        let tx: Vec<_> = array.tx_positions.iter().map(|p| pose.transform_point(p)).collect();
        let rx: Vec<_> = array.rx_positions.iter().map(|p| pose.transform_point(p)).collect();
        let centroid = |v: &[Vector3<f64>]| v.iter().sum::<Vector3<f64>>() / v.len() as f64;
        Self {
            tx_center: centroid(&tx),
            rx_center: centroid(&rx),
            tx,
            rx,
        }
    }

    fn delays(&self, target: &Vector3<f64>) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.tx.len() * self.rx.len());
        for p in &self.tx {
            let d_tx = (p - target).norm();
            for q in &self.rx {
                out.push((d_tx + (target - q).norm()) / SPEED_OF_LIGHT);
            }
        }
        out
    }

    /// Radar-equation amplitude `ρ / (d_tx · d_rx)`.
    fn amplitude(&self, reflectivity: f64, target: &Vector3<f64>) -> f64 {
        reflectivity / ((target - self.tx_center).norm() * (target - self.rx_center).norm())
    }
}

/// Enumerates direct returns from scatterers and wall samples inside the
/// field of view and range, plus first-order specular ghosts of every
/// scatterer in every wall. Paths are sorted by mean delay.
pub fn enumerate_paths(
    scene: &Scene,
    sensor_pose: &Pose,
    array: &AntennaArray,
    params: &PathParams,
) -> Vec<PropagationPath> {
    let world = WorldArray::new(array, sensor_pose);
    let to_sensor = sensor_pose.inverse();
    let origin = sensor_pose.translation;
    let in_view = |p: &Vector3<f64>| {
        (p - origin).norm() <= params.max_range && params.fov.contains(&to_sensor.transform_point(p))
    };

    let mut paths = Vec::new();
    for (k, s) in scene.scatterers.iter().enumerate() {
        if in_view(&s.position) {
            paths.push(PropagationPath {
                kind: PathKind::Direct,
                amplitude: world.amplitude(s.reflectivity, &s.position),
                delays: world.delays(&s.position),
                ghost_position: s.position,
                scatterer: Some(k),
                wall: None,
            });
        }
    }

    for (wk, wall) in scene.walls.iter().enumerate() {
        for point in wall_samples(wall, &origin, params.max_range, params.wall_pitch) {
            if in_view(&point) {
                paths.push(PropagationPath {
                    kind: PathKind::Direct,
                    amplitude: world.amplitude(wall.reflectivity, &point),
                    delays: world.delays(&point),
                    ghost_position: point,
                    scatterer: None,
                    wall: Some(wk),
                });
            }
        }
    }

    for (k, s) in scene.scatterers.iter().enumerate() {
        for (wk, wall) in scene.walls.iter().enumerate() {
            if let Some(image) = specular_image(wall, &s.position, &origin, params.max_range) {
                paths.push(PropagationPath {
                    kind: PathKind::FirstOrderSpecular,
                    amplitude: world.amplitude(s.reflectivity * wall.reflectivity, &image),
                    delays: world.delays(&image),
                    ghost_position: image,
                    scatterer: Some(k),
                    wall: Some(wk),
                });
            }
        }
    }

    paths.sort_by(|a, b| a.mean_delay().total_cmp(&b.mean_delay()));
    paths
}

/// Mirror image of `target` in `wall` as seen from `sensor`, if the
/// reflection is geometrically realizable: both points on the same side of
/// the plane, the specular point on the rectangle and the image within range.
pub fn specular_image(
    wall: &Wall,
    target: &Vector3<f64>,
    sensor: &Vector3<f64>,
    max_range: f64,
) -> Option<Vector3<f64>> {
    let ds = wall.signed_distance(target);
    let dsensor = wall.signed_distance(sensor);
    if ds * dsensor <= 0.0 {
        return None;
    }
    let image = wall.mirror(target);
    if (image - sensor).norm() > max_range {
        return None;
    }
    let t = dsensor / (dsensor + ds);
    let specular = sensor + (image - sensor) * t;
    let (u, v) = wall.axes();
    wall.contains_planar(&specular, &u, &v).then_some(image)
}

/// Regular lattice of points on the wall within `max_range` of `sensor`.
fn wall_samples(wall: &Wall, sensor: &Vector3<f64>, max_range: f64, pitch: f64) -> Vec<Vector3<f64>> {
    let (u, v) = wall.axes();
    let rel = sensor - wall.point;
    let (su, sv) = (rel.dot(&u), rel.dot(&v));
    let axis_range = |half: f64, s: f64| -> Option<(i64, i64, f64)> {
        let n = (2.0 * half / pitch + 1e-9).floor() as i64 + 1;
        let mid = (n - 1) as f64 / 2.0;
        let lo = (((s - max_range) / pitch + mid).ceil() as i64).max(0);
        let hi = (((s + max_range) / pitch + mid).floor() as i64).min(n - 1);
        (lo <= hi).then_some((lo, hi, mid))
    };
    let (Some((ulo, uhi, umid)), Some((vlo, vhi, vmid))) =
        (axis_range(wall.extent[0], su), axis_range(wall.extent[1], sv))
    else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for a in ulo..=uhi {
        for b in vlo..=vhi {
            let p = wall.point + u * ((a as f64 - umid) * pitch) + v * ((b as f64 - vmid) * pitch);
            if (p - sensor).norm() <= max_range {
                out.push(p);
            }
        }
    }
    out
}

/// Nearest positive ray parameter at which the ray hits a wall or a
/// scatterer sphere.
fn first_hit(scene: &Scene, origin: &Vector3<f64>, dir: &Vector3<f64>, sphere_radius: f64) -> Option<f64> {
    let mut best = f64::INFINITY;
    for wall in &scene.walls {
        let denom = dir.dot(&wall.normal);
        if denom.abs() < 1e-12 {
            continue;
        }
        let t = (wall.point - origin).dot(&wall.normal) / denom;
        if t > 1e-9 && t < best {
            let (u, v) = wall.axes();
            if wall.contains_planar(&(origin + dir * t), &u, &v) {
                best = t;
            }
        }
    }
    let r2 = sphere_radius * sphere_radius;
    for s in &scene.scatterers {
        let oc = origin - s.position;
        let b = oc.dot(dir);
        let c = oc.norm_squared() - r2;
        let disc = b * b - c;
        if disc < 0.0 {
            continue;
        }
        let sq = disc.sqrt();
        for t in [-b - sq, -b + sq] {
            if t > 1e-9 && t < best {
                best = t;
                break;
            }
        }
    }
    best.is_finite().then_some(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderParams {
    pub sphere_radius: f64,
    /// Hits beyond this range are reported as invalid.
    pub max_range: f64,
}

impl Default for RenderParams {
    fn default() -> Self {
        Self {
            sphere_radius: DEFAULT_SPHERE_RADIUS,
            max_range: 7.0,
        }
    }
}

/// Ground-truth first-surface range image from `sensor_pose`.
pub fn render_gt_depth(
    scene: &Scene,
    sensor_pose: &Pose,
    h: usize,
    w: usize,
    fov: &Fov,
    params: &RenderParams,
) -> DepthMap {
    let origin = sensor_pose.translation;
    let values: Vec<f64> = (0..h * w)
        .into_par_iter()
        .map(|k| {
            let (theta, phi) = fov.pixel_angles(h, w, k / w, k % w);
            let dir = sensor_pose.transform_vector(&direction_vector(theta, phi));
            match first_hit(scene, &origin, &dir, params.sphere_radius) {
                Some(t) if t <= params.max_range => t,
                _ => INVALID_DEPTH,
            }
        })
        .collect();
    DepthMap {
        values: ndarray::Array2::from_shape_vec((h, w), values).expect("h*w values"),
        fov: *fov,
        max_range: params.max_range,
    }
}

/// Binary surface occupancy of the scene in the sensor-frame grid.
pub fn voxelize_gt(scene: &Scene, sensor_pose: &Pose, grid: &GridSpec, sphere_radius: f64) -> VoxelGrid {
    let local = scene.transformed(&sensor_pose.inverse());
    let mut occ = vec![false; grid.len()];
    let half = grid.voxel_size / 2.0;

    for wall in &local.walls {
        let corners = wall.corners();
        let lo = corners.iter().fold(Vector3::repeat(f64::INFINITY), |m, c| m.inf(c));
        let hi = corners.iter().fold(Vector3::repeat(f64::NEG_INFINITY), |m, c| m.sup(c));
        let Some(range) = index_range(grid, &lo, &hi) else { continue };
        let (u, v) = wall.axes();
        let rect = Rect {
            center: wall.point,
            u,
            v,
            n: wall.normal,
            half: wall.extent,
        };
        for_range(range, |idx| {
            let flat = grid.flat(idx);
            if !occ[flat] && rect.overlaps_voxel(&grid.voxel_min(idx), grid.voxel_size) {
                occ[flat] = true;
            }
        });
    }

    let r2 = sphere_radius * sphere_radius;
    for s in &local.scatterers {
        let r = Vector3::repeat(sphere_radius);
        let Some(range) = index_range(grid, &(s.position - r), &(s.position + r)) else { continue };
        for_range(range, |idx| {
            let c = grid.voxel_center(idx);
            let d2: f64 = (0..3)
                .map(|a| {
                    let d = ((s.position[a] - c[a]).abs() - half).max(0.0);
                    d * d
                })
                .sum();
            if d2 < r2 {
                occ[grid.flat(idx)] = true;
            }
        });
    }

    let values = Array3::from_shape_vec(grid.shape(), occ.iter().map(|&o| if o { 1.0 } else { 0.0 }).collect())
        .expect("grid-sized buffer");
    VoxelGrid { values, grid: *grid }
}

type IndexRange = [(usize, usize); 3];

fn index_range(grid: &GridSpec, lo: &Vector3<f64>, hi: &Vector3<f64>) -> Option<IndexRange> {
    let mut out = [(0usize, 0usize); 3];
    for a in 0..3 {
        let l = ((lo[a] - grid.origin[a]) / grid.voxel_size).floor() - 1.0;
        let h = ((hi[a] - grid.origin[a]) / grid.voxel_size).floor() + 1.0;
        let l = l.max(0.0);
        let h = h.min(grid.dims[a] as f64 - 1.0);
        if l > h {
            return None;
        }
        out[a] = (l as usize, h as usize);
    }
    Some(out)
}

fn for_range(range: IndexRange, mut f: impl FnMut([usize; 3])) {
    for x in range[0].0..=range[0].1 {
        for y in range[1].0..=range[1].1 {
            for z in range[2].0..=range[2].1 {
                f([x, y, z]);
            }
        }
    }
}

struct Rect {
    center: Vector3<f64>,
    u: Vector3<f64>,
    v: Vector3<f64>,
    n: Vector3<f64>,
    half: [f64; 2],
}

impl Rect {
    /// Separating-axis test of the rectangle against the half-open voxel
    /// `[min, min + size)`.
    fn overlaps_voxel(&self, min: &Vector3<f64>, size: f64) -> bool {
        let h = size / 2.0;
        let center = min + Vector3::repeat(h);
        let axes_box = [Vector3::x(), Vector3::y(), Vector3::z()];
        let mut axes: Vec<Vector3<f64>> = Vec::with_capacity(15);
        axes.extend_from_slice(&axes_box);
        axes.extend_from_slice(&[self.u, self.v, self.n]);
        for e in &axes_box {
            for r in [&self.u, &self.v] {
                let c = e.cross(r);
                if c.norm() > 1e-9 {
                    axes.push(c.normalize());
                }
            }
        }
        for (k, l) in axes.iter().enumerate() {
            let rc = self.center.dot(l);
            let rr = self.half[0] * self.u.dot(l).abs() + self.half[1] * self.v.dot(l).abs();
            let bc = center.dot(l);
            let br = h * (l.x.abs() + l.y.abs() + l.z.abs());
            if k < 3 {
                // box faces: half-open along the grid axes
                let (bmin, bmax) = (min[k], min[k] + size);
                if rc + rr < bmin || rc - rr >= bmax {
                    return false;
                }
            } else if rc + rr < bc - br || rc - rr > bc + br {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    Line,
    Arc,
    RandomWalk,
}

impl std::str::FromStr for TrajectoryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "line" => Ok(Self::Line),
            "arc" => Ok(Self::Arc),
            "random_walk" | "random-walk" => Ok(Self::RandomWalk),
            other => Err(Error::InvalidConfig(format!("unknown trajectory kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub poses: Vec<Pose>,
    pub timestamps: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    /// CSV with header `t,x,y,z,yaw,pitch,roll` (angles in degrees).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,y,z,yaw,pitch,roll\n");
        for (t, p) in self.timestamps.iter().zip(&self.poses) {
            let (yaw, pitch, roll) = p.euler_deg();
            let tr = p.translation;
            out.push_str(&format!(
                "{t},{},{},{},{yaw},{pitch},{roll}\n",
                tr.x, tr.y, tr.z
            ));
        }
        out
    }
}

/// Per-step heading change for `Arc` trajectories (degrees).
pub const ARC_TURN_DEG: f64 = 8.0;
/// Maximum per-step heading perturbation for `RandomWalk` trajectories (degrees).
pub const RANDOM_WALK_TURN_DEG: f64 = 15.0;

/// Planar sensor trajectory starting at `start`. Consecutive poses are
/// `speed · spacing` meters apart along the current heading.
pub fn gen_trajectory(
    kind: TrajectoryKind,
    start: &Pose,
    n_frames: usize,
    spacing: f64,
    speed: f64,
    seed: u64,
) -> Result<Trajectory> {
    if n_frames == 0 {
        return Err(Error::InvalidConfig("trajectory needs at least one frame".into()));
    }
    if !(spacing > 0.0) || !(speed >= 0.0) {
        return Err(Error::InvalidConfig(
            "trajectory spacing must be > 0 and speed >= 0".into(),
        ));
    }
    let step = speed * spacing;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut poses = Vec::with_capacity(n_frames);
    let mut pose = *start;
    poses.push(pose);
    for _ in 1..n_frames {
        let turn = match kind {
            TrajectoryKind::Line => 0.0,
            TrajectoryKind::Arc => ARC_TURN_DEG.to_radians(),
            TrajectoryKind::RandomWalk => {
                rng.random_range(-RANDOM_WALK_TURN_DEG..=RANDOM_WALK_TURN_DEG).to_radians()
            }
        };
        // move along the heading bisecting the old and new yaw
        let half = Pose::from_axis_angle(Vector3::z(), turn / 2.0, Vector3::zeros());
        let heading = half.rotation * pose.rotation * Vector3::y();
        let yaw = Pose::from_axis_angle(Vector3::z(), turn, Vector3::zeros());
        pose = Pose {
            rotation: yaw.rotation * pose.rotation,
            translation: pose.translation + heading * step,
        };
        poses.push(pose);
    }
    let timestamps = (0..n_frames).map(|k| k as f64 * spacing).collect();
    Ok(Trajectory { poses, timestamps })
}

/// Axis-aligned wall helper: a rectangle facing `normal` (one of the
/// coordinate axes, either sign).
pub fn axis_wall(point: Vector3<f64>, normal: Vector3<f64>, extent: [f64; 2], reflectivity: f64) -> Wall {
    Wall {
        point,
        normal: normal.normalize(),
        extent,
        reflectivity,
        u_axis: None,
    }
}

/// Uniformly distributed random unit vector (rejection sampling).
pub fn random_axis(rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}
