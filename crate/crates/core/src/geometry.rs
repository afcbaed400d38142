//! Rigid poses, antenna-array layout, the spherical imaging grid and
//! delay-and-sum steering weights.
//!
//! Sensor-frame convention: the antenna panel is the x–z plane, `+y` is
//! boresight, `+x` is to the right (positive azimuth) and `+z` is up
//! (positive elevation).

use std::f64::consts::PI;

use nalgebra::{Matrix3, Rotation3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum (m/s). Every range/tap conversion uses this value.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

const RIGID_TOL: f64 = 1e-9;

/// Rigid SE(3) transform. Maps points from the local frame into the parent
/// frame: `x_parent = rotation * x_local + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    /// Builds a pose, rejecting rotations that are not proper orthonormal
    /// matrices within 1e-9 per entry.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let pose = Self {
            rotation,
            translation,
        };
        let err = pose.rigidity_error();
        if err > RIGID_TOL || !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidPose(format!(
                "rotation is not orthonormal with det +1 (error {err:.3e})"
            )));
        }
        Ok(pose)
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: t,
        }
    }

    /// Rotation about a (not necessarily normalized) axis by `angle` radians.
    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64, translation: Vector3<f64>) -> Self {
        let axis = nalgebra::Unit::new_normalize(axis);
        Self {
            rotation: Rotation3::from_axis_angle(&axis, angle).into_inner(),
            translation,
        }
    }

    /// Yaw about `+z`, then pitch about `+x`, then roll about `+y`, all in
    /// degrees: `R = Rz(yaw) · Rx(pitch) · Ry(roll)`.
    pub fn from_euler_deg(yaw: f64, pitch: f64, roll: f64, translation: Vector3<f64>) -> Self {
        let rz = Rotation3::from_axis_angle(&Vector3::z_axis(), yaw.to_radians());
        let rx = Rotation3::from_axis_angle(&Vector3::x_axis(), pitch.to_radians());
        let ry = Rotation3::from_axis_angle(&Vector3::y_axis(), roll.to_radians());
        Self {
            rotation: (rz * rx * ry).into_inner(),
            translation,
        }
    }

    /// Inverse of [`Pose::from_euler_deg`]; returns `(yaw, pitch, roll)` in degrees.
    pub fn euler_deg(&self) -> (f64, f64, f64) {
        let r = &self.rotation;
        let pitch = r[(2, 1)].clamp(-1.0, 1.0).asin();
        let roll = (-r[(2, 0)]).atan2(r[(2, 2)]);
        let yaw = (-r[(0, 1)]).atan2(r[(1, 1)]);
        (yaw.to_degrees(), pitch.to_degrees(), roll.to_degrees())
    }

    /// Largest deviation of `RᵀR` from identity, or of `det R` from 1.
    pub fn rigidity_error(&self) -> f64 {
        let r = &self.rotation;
        let gram = r.transpose() * r - Matrix3::identity();
        let ortho = gram.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let det = (r.determinant() - 1.0).abs();
        if ortho.is_nan() || det.is_nan() {
            return f64::INFINITY;
        }
        ortho.max(det)
    }

    pub fn is_rigid(&self) -> bool {
        self.rigidity_error() <= RIGID_TOL
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }
}

/// Relative transform `G_r⁻¹ · G_i`, mapping coordinates of the `source`
/// frame into the `reference` frame.
pub fn relative_transform(reference: &Pose, source: &Pose) -> Pose {
    reference.inverse().compose(source)
}

/// Angle parameterization used to turn `(θ, φ)` into a pointing vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionFormula {
    /// `[sinθ·cosφ, cosθ·cosφ, sinφ]`, unit norm, boresight along `+y`.
    #[default]
    Unit,
    /// `[cosθ·cosφ, cosθ·sinφ, sinφ]` exactly as commonly printed; not unit
    /// norm in general. Kept for comparison only.
    PaperLiteral,
}

/// Unit pointing vector for azimuth `theta` and elevation `phi` (radians).
pub fn direction_vector(theta: f64, phi: f64) -> Vector3<f64> {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vector3::new(st * cp, ct * cp, sp)
}

pub fn direction_with(formula: DirectionFormula, theta: f64, phi: f64) -> Vector3<f64> {
    match formula {
        DirectionFormula::Unit => direction_vector(theta, phi),
        DirectionFormula::PaperLiteral => {
            let ct = theta.cos();
            let (sp, cp) = phi.sin_cos();
            Vector3::new(ct * cp, ct * sp, sp)
        }
    }
}

/// Azimuth/elevation of a sensor-frame point, inverse of [`direction_vector`].
pub fn angles_of(p: &Vector3<f64>) -> (f64, f64) {
    let theta = p.x.atan2(p.y);
    let phi = p.z.atan2((p.x * p.x + p.y * p.y).sqrt());
    (theta, phi)
}

/// Angular field of view (radians).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fov {
    pub az_min: f64,
    pub az_max: f64,
    pub el_min: f64,
    pub el_max: f64,
}

impl Default for Fov {
    /// `[-60°, 60°]` azimuth by `[-30°, 30°]` elevation.
    fn default() -> Self {
        Self::from_degrees(-60.0, 60.0, -30.0, 30.0)
    }
}

impl Fov {
    pub fn from_degrees(az_min: f64, az_max: f64, el_min: f64, el_max: f64) -> Self {
        Self {
            az_min: az_min.to_radians(),
            az_max: az_max.to_radians(),
            el_min: el_min.to_radians(),
            el_max: el_max.to_radians(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let half = PI / 2.0;
        let ok = self.az_min < self.az_max
            && self.el_min < self.el_max
            && self.az_min >= -half
            && self.az_max <= half
            && self.el_min >= -half
            && self.el_max <= half;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidGrid(format!("bad field of view {self:?}")))
        }
    }

    /// Whether a sensor-frame point lies in front of the panel and inside the FoV.
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        if p.y <= 0.0 {
            return false;
        }
        let (theta, phi) = angles_of(p);
        theta >= self.az_min && theta <= self.az_max && phi >= self.el_min && phi <= self.el_max
    }

    /// Pixel-center angles for an `h × w` image: columns sweep azimuth left
    /// to right, rows sweep elevation top to bottom.
    pub fn pixel_angles(&self, h: usize, w: usize, row: usize, col: usize) -> (f64, f64) {
        let theta = self.az_min + (col as f64 + 0.5) / w as f64 * (self.az_max - self.az_min);
        let phi = self.el_max - (row as f64 + 0.5) / h as f64 * (self.el_max - self.el_min);
        (theta, phi)
    }
}

/// Tx/Rx element positions on the `y = 0` panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AntennaArray {
    pub tx_positions: Vec<Vector3<f64>>,
    pub rx_positions: Vec<Vector3<f64>>,
    pub wavelength: f64,
}

impl AntennaArray {
    pub fn new(
        tx_positions: Vec<Vector3<f64>>,
        rx_positions: Vec<Vector3<f64>>,
        wavelength: f64,
    ) -> Result<Self> {
        let array = Self {
            tx_positions,
            rx_positions,
            wavelength,
        };
        array.validate()?;
        Ok(array)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(Error::InvalidArray(format!(
                "wavelength must be positive, got {}",
                self.wavelength
            )));
        }
        if self.tx_positions.is_empty() || self.rx_positions.is_empty() {
            return Err(Error::InvalidArray("tx and rx lists must be non-empty".into()));
        }
        let off_panel = self
            .tx_positions
            .iter()
            .chain(&self.rx_positions)
            .any(|p| p.y != 0.0 || !p.iter().all(|v| v.is_finite()));
        if off_panel {
            return Err(Error::InvalidArray(
                "every element must lie on the y = 0 panel".into(),
            ));
        }
        Ok(())
    }

    /// Virtual aperture of `n_horizontal × n_vertical` elements at
    /// half-wavelength spacing, realized as a 2×2 Tx grid and a
    /// `(n_h/2) × (n_v/2)` Rx grid whose pairwise sums tile the aperture.
    /// Both dimensions must be even.
    pub fn virtual_rectangular(n_horizontal: usize, n_vertical: usize, wavelength: f64) -> Result<Self> {
        if n_horizontal < 2 || n_vertical < 2 || n_horizontal % 2 != 0 || n_vertical % 2 != 0 {
            return Err(Error::InvalidArray(format!(
                "virtual aperture {n_horizontal}x{n_vertical} must have even dimensions >= 2"
            )));
        }
        let d = wavelength / 2.0;
        let rx_h = n_horizontal / 2;
        let rx_v = n_vertical / 2;
        let cx = (n_horizontal - 1) as f64 * d / 2.0;
        let cz = (n_vertical - 1) as f64 * d / 2.0;
        // Tx centered on half the aperture offset, Rx carries the rest so
        // that p_i + q_j is centered on the origin.
        let tx = [(0usize, 0usize), (1, 0), (0, 1), (1, 1)]
            .iter()
            .map(|&(a, b)| {
                Vector3::new(
                    (a * rx_h) as f64 * d - cx / 2.0,
                    0.0,
                    (b * rx_v) as f64 * d - cz / 2.0,
                )
            })
            .collect();
        let mut rx = Vec::with_capacity(rx_h * rx_v);
        for b in 0..rx_v {
            for a in 0..rx_h {
                rx.push(Vector3::new(
                    a as f64 * d - cx / 2.0,
                    0.0,
                    b as f64 * d - cz / 2.0,
                ));
            }
        }
        Self::new(tx, rx, wavelength)
    }

    /// 8 × 4 virtual elements at half-wavelength spacing for a 60 GHz carrier.
    pub fn default_60ghz() -> Self {
        Self::virtual_rectangular(8, 4, SPEED_OF_LIGHT / 60e9).expect("default array is valid")
    }

    pub fn n_tx(&self) -> usize {
        self.tx_positions.len()
    }

    pub fn n_rx(&self) -> usize {
        self.rx_positions.len()
    }

    pub fn n_pairs(&self) -> usize {
        self.n_tx() * self.n_rx()
    }

    pub fn steering_weight(&self, i: usize, j: usize, theta: f64, phi: f64) -> Complex64 {
        self.steering_weight_with(DirectionFormula::Unit, i, j, theta, phi)
    }

    /// `exp(−j·(2π/λ)·⟨u(θ,φ), p_i + q_j⟩)`.
    pub fn steering_weight_with(
        &self,
        formula: DirectionFormula,
        i: usize,
        j: usize,
        theta: f64,
        phi: f64,
    ) -> Complex64 {
        let u = direction_with(formula, theta, phi);
        let sum = self.tx_positions[i] + self.rx_positions[j];
        let phase = -2.0 * PI / self.wavelength * u.dot(&sum);
        Complex64::from_polar(1.0, phase)
    }
}

/// Range taps and angular samples of a radio frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphericalGrid {
    pub range_taps: Vec<usize>,
    pub azimuths: Vec<f64>,
    pub elevations: Vec<f64>,
    pub bandwidth: f64,
    #[serde(default)]
    pub direction_formula: DirectionFormula,
}

impl SphericalGrid {
    pub fn new(
        range_taps: Vec<usize>,
        azimuths: Vec<f64>,
        elevations: Vec<f64>,
        bandwidth: f64,
    ) -> Result<Self> {
        let grid = Self {
            range_taps,
            azimuths,
            elevations,
            bandwidth,
            direction_formula: DirectionFormula::Unit,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Uniform grid over `fov` at `pitch_deg`, with every tap whose range is
    /// in `(0, max_range]`.
    pub fn uniform(fov: &Fov, pitch_deg: f64, max_range: f64, bandwidth: f64) -> Result<Self> {
        if !(pitch_deg > 0.0) {
            return Err(Error::InvalidGrid(format!("angular pitch must be > 0, got {pitch_deg}")));
        }
        let samples = |lo: f64, hi: f64| -> Vec<f64> {
            let (lo_d, hi_d) = (lo.to_degrees(), hi.to_degrees());
            let n = ((hi_d - lo_d) / pitch_deg + 1e-9).floor() as usize + 1;
            (0..n).map(|k| (lo_d + k as f64 * pitch_deg).to_radians()).collect()
        };
        let max_tap = (max_range / tap_spacing(bandwidth)).floor() as usize;
        Self::new(
            (1..=max_tap).collect(),
            samples(fov.az_min, fov.az_max),
            samples(fov.el_min, fov.el_max),
            bandwidth,
        )
    }

    /// 2° pitch over the default FoV, taps up to 7 m, 1.2288 GHz bandwidth.
    pub fn default_grid() -> Self {
        Self::uniform(&Fov::default(), 2.0, 7.0, 1.2288e9).expect("default grid is valid")
    }

    pub fn validate(&self) -> Result<()> {
        let half = PI / 2.0 + 1e-12;
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        let in_domain = |v: &[f64]| v.iter().all(|a| a.abs() <= half);
        if self.range_taps.is_empty() || self.azimuths.is_empty() || self.elevations.is_empty() {
            return Err(Error::InvalidGrid("spherical grid axes must be non-empty".into()));
        }
        if !(increasing(&self.azimuths) && in_domain(&self.azimuths)) {
            return Err(Error::InvalidGrid(
                "azimuths must be strictly increasing within [-pi/2, pi/2]".into(),
            ));
        }
        if !(increasing(&self.elevations) && in_domain(&self.elevations)) {
            return Err(Error::InvalidGrid(
                "elevations must be strictly increasing within [-pi/2, pi/2]".into(),
            ));
        }
        if !(self.bandwidth > 0.0) {
            return Err(Error::InvalidGrid("bandwidth must be positive".into()));
        }
        if self.range_taps.contains(&0) {
            return Err(Error::InvalidGrid("tap 0 has zero range".into()));
        }
        Ok(())
    }

    pub fn range_of_tap(&self, n: usize) -> f64 {
        n as f64 * tap_spacing(self.bandwidth)
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.range_taps.len(), self.azimuths.len(), self.elevations.len())
    }

    pub fn direction(&self, theta: f64, phi: f64) -> Vector3<f64> {
        direction_with(self.direction_formula, theta, phi)
    }
}

/// Range covered by one CIR tap, `c / (2B)`.
pub fn tap_spacing(bandwidth: f64) -> f64 {
    SPEED_OF_LIGHT / (2.0 * bandwidth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pose(rng: &mut ChaCha8Rng) -> Pose {
        let axis = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ) + Vector3::new(1e-3, 0.0, 0.0);
        let t = Vector3::new(
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
        );
        Pose::from_axis_angle(axis, rng.random_range(-PI..PI), t)
    }

    fn random_point(rng: &mut ChaCha8Rng) -> Vector3<f64> {
        Vector3::new(
            rng.random_range(-10.0..10.0),
            rng.random_range(-10.0..10.0),
            rng.random_range(-10.0..10.0),
        )
    }

    fn assert_pose_eq(a: &Pose, b: &Pose, tol: f64) {
        for (x, y) in a.rotation.iter().zip(b.rotation.iter()) {
            assert_abs_diff_eq!(x, y, epsilon = tol);
        }
        for (x, y) in a.translation.iter().zip(b.translation.iter()) {
            assert_abs_diff_eq!(x, y, epsilon = tol);
        }
    }

    #[test]
    fn compose_identity_and_inverse() {
        let id = Pose::identity();
        assert_eq!(id.compose(&id), id);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_pose(&mut rng);
        assert_pose_eq(&a.compose(&a.inverse()), &id, 1e-9);
    }

    #[test]
    fn compose_matches_sequential_application() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_pose(&mut rng);
        let b = random_pose(&mut rng);
        let ab = a.compose(&b);
        for _ in 0..100 {
            let p = random_point(&mut rng);
            let seq = a.transform_point(&b.transform_point(&p));
            assert!((ab.transform_point(&p) - seq).norm() < 1e-9);
        }
    }

    #[test]
    fn relative_transform_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_pose(&mut rng);
        assert_pose_eq(&relative_transform(&g, &g), &Pose::identity(), 1e-9);
        assert_eq!(relative_transform(&Pose::identity(), &g), g);

        // frame i -> world -> frame r
        let gr = random_pose(&mut rng);
        let gi = random_pose(&mut rng);
        let t = relative_transform(&gr, &gi);
        for _ in 0..100 {
            let p = random_point(&mut rng);
            let world = gi.transform_point(&p);
            let expected = gr.inverse().transform_point(&world);
            assert!((t.transform_point(&p) - expected).norm() < 1e-9);
        }
    }

    #[test]
    fn direction_axes() {
        assert_abs_diff_eq!(direction_vector(0.0, 0.0), Vector3::new(0.0, 1.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(direction_vector(PI / 2.0, 0.0), Vector3::new(1.0, 0.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(direction_vector(0.0, PI / 2.0), Vector3::new(0.0, 0.0, 1.0), epsilon = 1e-15);
    }

    #[test]
    fn paper_literal_formula_is_not_unit() {
        let u = direction_with(DirectionFormula::PaperLiteral, 0.5, 0.4);
        assert!((u.norm() - 1.0).abs() > 1e-3);
    }

    #[test]
    fn angles_invert_direction() {
        let (t, p) = angles_of(&(direction_vector(0.3, -0.2) * 4.0));
        assert_abs_diff_eq!(t, 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(p, -0.2, epsilon = 1e-12);
    }

    #[test]
    fn steering_weight_cases() {
        let lambda = 0.005;
        let origin = AntennaArray::new(vec![Vector3::zeros()], vec![Vector3::zeros()], lambda).unwrap();
        let w = origin.steering_weight(0, 0, 0.4, 0.1);
        assert_eq!(w, Complex64::new(1.0, 0.0));

        // p + q along x, u at boresight: orthogonal
        let orth = AntennaArray::new(
            vec![Vector3::new(0.01, 0.0, 0.0)],
            vec![Vector3::new(0.0, 0.0, 0.02)],
            lambda,
        )
        .unwrap();
        let w = orth.steering_weight(0, 0, 0.0, 0.0);
        assert_abs_diff_eq!(w.re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.im, 0.0, epsilon = 1e-12);

        // p + q = (λ/2)·u with u = +x (θ = π/2)
        let half = AntennaArray::new(
            vec![Vector3::new(lambda / 4.0, 0.0, 0.0)],
            vec![Vector3::new(lambda / 4.0, 0.0, 0.0)],
            lambda,
        )
        .unwrap();
        let w = half.steering_weight(0, 0, PI / 2.0, 0.0);
        assert_abs_diff_eq!(w.re, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn default_array_virtual_aperture() {
        let array = AntennaArray::default_60ghz();
        assert_eq!(array.n_pairs(), 32);
        let d = array.wavelength / 2.0;
        let mut sums: Vec<(i64, i64)> = Vec::new();
        for p in &array.tx_positions {
            for q in &array.rx_positions {
                let s = p + q;
                sums.push(((s.x / d * 2.0).round() as i64, (s.z / d * 2.0).round() as i64));
            }
        }
        sums.sort();
        sums.dedup();
        // 8 x 4 distinct, centered virtual positions (in half-spacing units)
        assert_eq!(sums.len(), 32);
        let xs: Vec<i64> = sums.iter().map(|s| s.0).collect();
        assert_eq!(*xs.iter().min().unwrap(), -7);
        assert_eq!(*xs.iter().max().unwrap(), 7);
        assert_abs_diff_eq!(array.wavelength, 4.99654e-3, epsilon = 1e-8);
    }

    #[test]
    fn array_validation() {
        assert!(AntennaArray::new(vec![Vector3::new(0.0, 0.1, 0.0)], vec![Vector3::zeros()], 0.005).is_err());
        assert!(AntennaArray::new(vec![], vec![Vector3::zeros()], 0.005).is_err());
        assert!(AntennaArray::new(vec![Vector3::zeros()], vec![Vector3::zeros()], 0.0).is_err());
    }

    #[test]
    fn default_grid_shape() {
        let g = SphericalGrid::default_grid();
        assert_eq!(g.shape(), (57, 61, 31));
        assert_abs_diff_eq!(g.azimuths[30], 0.0, epsilon = 1e-15);
        assert!(g.range_of_tap(57) <= 7.0);
        assert!(g.range_of_tap(58) > 7.0);
    }

    #[test]
    fn grid_validation() {
        assert!(SphericalGrid::new(vec![1], vec![0.1, 0.0], vec![0.0], 1e9).is_err());
        assert!(SphericalGrid::new(vec![0], vec![0.0], vec![0.0], 1e9).is_err());
        assert!(SphericalGrid::new(vec![1], vec![2.0], vec![0.0], 1e9).is_err());
    }

    #[test]
    fn euler_round_trip() {
        let p = Pose::from_euler_deg(30.0, -10.0, 5.0, Vector3::new(1.0, 2.0, 3.0));
        let (y, pi, r) = p.euler_deg();
        assert_abs_diff_eq!(y, 30.0, epsilon = 1e-9);
        assert_abs_diff_eq!(pi, -10.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r, 5.0, epsilon = 1e-9);
        // yaw turns boresight toward -x
        let fwd = p.transform_vector(&Vector3::y());
        assert!(Pose::from_euler_deg(90.0, 0.0, 0.0, Vector3::zeros())
            .transform_vector(&Vector3::y())
            .x
            < -0.99);
        assert!(fwd.norm() > 0.99);
    }

    #[test]
    fn non_rigid_rejected() {
        let m = Matrix3::new(1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(Pose::new(m, Vector3::zeros()).is_err());
        let reflect = Matrix3::new(-1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(Pose::new(reflect, Vector3::zeros()).is_err());
    }

    proptest! {
        #[test]
        fn direction_is_unit(theta in -PI / 2.0..=PI / 2.0, phi in -PI / 2.0..=PI / 2.0) {
            prop_assert!((direction_vector(theta, phi).norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn steering_is_unit_modulus(theta in -PI / 2.0..=PI / 2.0, phi in -PI / 2.0..=PI / 2.0, i in 0usize..4, j in 0usize..8) {
            let array = AntennaArray::default_60ghz();
            prop_assert!((array.steering_weight(i, j, theta, phi).norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn compose_associative_and_isometric(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (a, b, c) = (random_pose(&mut rng), random_pose(&mut rng), random_pose(&mut rng));
            let left = a.compose(&b).compose(&c);
            let right = a.compose(&b.compose(&c));
            for (x, y) in left.rotation.iter().zip(right.rotation.iter()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
            for (x, y) in left.translation.iter().zip(right.translation.iter()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
            let rel = relative_transform(&a, &a);
            prop_assert!((rel.rotation - Matrix3::identity()).abs().max() < 1e-9);
            prop_assert!(rel.translation.norm() < 1e-9);

            let (p, q) = (random_point(&mut rng), random_point(&mut rng));
            let d0 = (p - q).norm();
            let d1 = (a.transform_point(&p) - a.transform_point(&q)).norm();
            prop_assert!((d0 - d1).abs() < 1e-9);
        }
    }
}
