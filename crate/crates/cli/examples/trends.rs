//! Prints the frame-count and pose-noise trends.
//!
//! Usage: `trends [n_scenes]`. ENC_A, ENC_B, ETA, GAIN, TAU, SPACING and
//! KIND override the corresponding settings of the default setup.

use std::time::Instant;

use rfscene_cli::experiments::{build_stacks, frame_count_trend, pose_noise_trend, TrendSetup};

fn main() {
    let mut setup = TrendSetup::default();
    if let Some(n) = std::env::args().nth(1) {
        setup.n_scenes = n.parse().expect("scene count");
    }
    let env = |k: &str| std::env::var(k).ok().map(|v| v.parse::<f64>().expect(k));
    let c = &mut setup.config;
    if let Some(v) = env("ENC_A") {
        c.encoder.a = v;
    }
    if let Some(v) = env("ENC_B") {
        c.encoder.b = v;
    }
    if let Some(v) = env("ETA") {
        c.fusion.eta = v;
    }
    if let Some(v) = env("GAIN") {
        c.projection.range_gain = v;
    }
    if let Some(v) = env("TAU") {
        c.heads.tau_occ = v;
    }
    if let Some(v) = env("SPACING") {
        c.trajectory.spacing = v;
    }
    if let Ok(k) = std::env::var("KIND") {
        c.trajectory.kind = k.parse().expect("trajectory kind");
    }

    let t = Instant::now();
    let stacks = build_stacks(&setup).expect("simulation");
    println!("simulated {} scenes in {:.1?}", stacks.len(), t.elapsed());
    let t = Instant::now();
    let fc = frame_count_trend(&setup, &stacks).expect("frame-count trend");
    println!("frame count {:?} ({:.1?})", fc.window_sizes, t.elapsed());
    println!("  cd          {:?}", fc.cd);
    println!("  ghost ratio {:?} over {} scenes", fc.ghost_ratio, fc.ghost_scenes);
    let t = Instant::now();
    let pn = pose_noise_trend(&setup, &stacks).expect("pose-noise trend");
    println!("pose noise ({:.1?})", t.elapsed());
    println!(
        "  clean {:.4}  rotation {:.4} (x{:.3})  translation {:.4} (x{:.3})",
        pn.clean_cd,
        pn.rotation_cd,
        pn.rotation_factor(),
        pn.translation_cd,
        pn.translation_factor()
    );
}
