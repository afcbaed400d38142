mod common;

use nalgebra::Vector3;
use rand::Rng;

use common::oracles::{ray_march_depth, supersampled_occupancy};
use common::{big_bounds, random_pose, rng};
use rfscene_core::geometry::relative_transform;
use rfscene_core::scene::{
    axis_wall, enumerate_paths, gen_trajectory, render_gt_depth, voxelize_gt, PathKind, PathParams, RenderParams,
    Scatterer, Scene, TrajectoryKind, Wall,
};
use rfscene_core::{AntennaArray, Fov, GridSpec, Pose};

fn composite_scene() -> Scene {
    Scene {
        scatterers: vec![
            Scatterer { position: Vector3::new(0.4, 2.2, 0.1), reflectivity: 1.0 },
            Scatterer { position: Vector3::new(-1.1, 3.1, -0.4), reflectivity: 0.8 },
            Scatterer { position: Vector3::new(1.5, 2.8, 0.6), reflectivity: 0.5 },
        ],
        walls: vec![
            axis_wall(Vector3::new(0.0, 4.5, 0.0), -Vector3::y(), [3.0, 1.5], 0.6),
            axis_wall(Vector3::new(2.2, 3.0, 0.0), -Vector3::x(), [1.5, 1.5], 0.6),
            axis_wall(Vector3::new(0.0, 3.0, -1.2), Vector3::z(), [2.0, 1.5], 0.4),
            Wall {
                point: Vector3::new(-1.6, 2.5, 0.3),
                normal: Vector3::new(1.0, -0.4, 0.2).normalize(),
                extent: [0.6, 0.5],
                reflectivity: 0.5,
                u_axis: None,
            },
        ],
        bounds: big_bounds(),
    }
}

#[test]
fn depth_matches_ray_march() {
    let scene = composite_scene();
    let fov = Fov::default();
    let params = RenderParams::default();
    for pose in [Pose::identity(), Pose::from_euler_deg(8.0, -3.0, 2.0, Vector3::new(0.1, -0.2, 0.05))] {
        let d = render_gt_depth(&scene, &pose, 15, 30, &fov, &params);
        let oracle = ray_march_depth(&scene, &pose, 15, 30, &fov, params.sphere_radius, params.max_range, 0.01);
        for (a, b) in d.values.iter().zip(oracle.iter()) {
            if *b == -1.0 {
                assert_eq!(*a, -1.0);
            } else {
                assert!((a - b).abs() <= 0.01, "{a} vs {b}");
            }
        }
    }
}

#[test]
fn infinite_wall_depth() {
    let mut scene = Scene::empty(big_bounds());
    scene.walls.push(axis_wall(Vector3::new(0.0, 3.0, 0.0), -Vector3::y(), [50.0, 50.0], 1.0));
    let fov = Fov::default();
    let d = render_gt_depth(&scene, &Pose::identity(), 31, 61, &fov, &RenderParams::default());
    assert_eq!(d.values[(15, 30)], 3.0);
    for col in 0..61 {
        let (theta, phi) = fov.pixel_angles(31, 61, 15, col);
        assert!(phi.abs() < 1e-12);
        assert!((d.values[(15, col)] - 3.0 / theta.cos()).abs() < 1e-9);
    }
    let empty = render_gt_depth(&Scene::empty(big_bounds()), &Pose::identity(), 4, 4, &fov, &RenderParams::default());
    assert!(empty.values.iter().all(|&v| v == -1.0));
}

#[test]
fn depth_is_pose_consistent() {
    let scene = composite_scene();
    let fov = Fov::default();
    let params = RenderParams::default();
    let mut g = rng(12);
    for _ in 0..3 {
        let pose = random_pose(&mut g, 0.2, 0.3);
        let a = render_gt_depth(&scene, &pose, 12, 24, &fov, &params);
        let local = scene.transformed(&pose.inverse());
        let b = render_gt_depth(&local, &Pose::identity(), 12, 24, &fov, &params);
        for (x, y) in a.values.iter().zip(b.values.iter()) {
            assert!((x - y).abs() <= 1e-6, "{x} vs {y}");
        }
    }
}

#[test]
fn voxels_match_supersampling() {
    let grid = GridSpec::centered([40, 40, 24], 0.12);
    let mut g = rng(13);
    for _ in 0..3 {
        let mut scene = composite_scene();
        for _ in 0..10 {
            scene.scatterers.push(Scatterer {
                position: Vector3::new(g.random_range(-2.0..2.0), g.random_range(0.5..4.5), g.random_range(-1.2..1.2)),
                reflectivity: 1.0,
            });
        }
        let pose = random_pose(&mut g, 0.1, 0.1);
        let v = voxelize_gt(&scene, &pose, &grid, 0.06);
        let oracle = supersampled_occupancy(&scene, &pose, &grid, 0.06, 10);
        let agree = v.values.iter().zip(oracle.iter()).filter(|(a, b)| a == b).count();
        let frac = agree as f64 / grid.len() as f64;
        assert!(frac >= 0.99, "agreement {frac}");
    }
}

#[test]
fn slab_occupies_one_row() {
    let grid = GridSpec::default();
    let mut scene = Scene::empty(big_bounds());
    scene.walls.push(axis_wall(Vector3::new(0.0, 3.0, 0.0), -Vector3::y(), [20.0, 20.0], 1.0));
    let v = voxelize_gt(&scene, &Pose::identity(), &grid, 0.06);
    for ((_, y, _), &o) in v.values.indexed_iter() {
        assert_eq!(o, if y == 25 { 1.0 } else { 0.0 });
    }
}

#[test]
fn coarser_voxels_cover_at_least_as_much_volume() {
    let scene = composite_scene();
    let fine = GridSpec::centered([64, 64, 32], 0.06);
    let coarse = GridSpec::centered([32, 32, 16], 0.12);
    let occupied = |grid: &GridSpec| {
        let v = voxelize_gt(&scene, &Pose::identity(), grid, 0.06);
        v.values.iter().filter(|&&o| o > 0.0).count() as f64 * grid.voxel_size.powi(3)
    };
    assert!(occupied(&coarse) >= occupied(&fine));
}

#[test]
fn ghost_geometry() {
    let array = AntennaArray::default_60ghz();
    let scene = composite_scene();
    let paths = enumerate_paths(&scene, &Pose::identity(), &array, &PathParams::default());
    let ghosts: Vec<_> = paths.iter().filter(|p| p.kind == PathKind::FirstOrderSpecular).collect();
    assert!(!ghosts.is_empty());
    for gp in ghosts {
        let s = scene.scatterers[gp.scatterer.unwrap()].position;
        let wall = &scene.walls[gp.wall.unwrap()];
        assert!((wall.mirror(&gp.ghost_position) - s).norm() <= 1e-9);
        let direct_delay = 2.0 * s.norm() / rfscene_core::SPEED_OF_LIGHT;
        assert!(gp.mean_delay() > direct_delay);
    }
    assert!(paths.windows(2).all(|w| w[0].mean_delay() <= w[1].mean_delay()));
    assert!(paths.iter().all(|p| p.delays.iter().all(|&d| d > 0.0)));
}

#[test]
fn pose_algebra_against_points() {
    let mut g = rng(14);
    let a = random_pose(&mut g, 3.0, 2.0);
    let b = random_pose(&mut g, 3.0, 2.0);
    let ab = a.compose(&b);
    for _ in 0..100 {
        let p = Vector3::new(g.random_range(-5.0..5.0), g.random_range(-5.0..5.0), g.random_range(-5.0..5.0));
        assert!((ab.transform_point(&p) - a.transform_point(&b.transform_point(&p))).norm() <= 1e-9);
        // frame i coordinates -> world -> frame r coordinates
        let t = relative_transform(&a, &b);
        let world = b.transform_point(&p);
        assert!((t.transform_point(&p) - a.inverse().transform_point(&world)).norm() <= 1e-9);
    }
    assert_eq!(relative_transform(&Pose::identity(), &b), b);
}

#[test]
fn line_trajectory_spacing() {
    let t = gen_trajectory(TrajectoryKind::Line, &Pose::identity(), 5, 2.0, 0.5, 1).unwrap();
    for w in t.poses.windows(2) {
        assert!(((w[1].translation - w[0].translation).norm() - 1.0).abs() < 1e-12);
    }
    for kind in [TrajectoryKind::Arc, TrajectoryKind::RandomWalk] {
        let a = gen_trajectory(kind, &Pose::identity(), 6, 2.0, 0.5, 9).unwrap();
        let b = gen_trajectory(kind, &Pose::identity(), 6, 2.0, 0.5, 9).unwrap();
        assert_eq!(a, b);
        for w in a.poses.windows(2) {
            assert!(((w[1].translation - w[0].translation).norm() - 1.0).abs() < 1e-9);
        }
    }
}
