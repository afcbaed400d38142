//! Named seed sub-streams. Every stage draws from its own stream so adding a
//! stage never shifts another stage's draws.

use sha2::{Digest, Sha256};

/// First eight bytes (little endian) of `sha256(seed_le || name)`.
pub fn substream(seed: u64, name: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(name.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

pub const SCENE: &str = "scene";
pub const TRAJECTORY: &str = "trajectory";

pub fn symbols(frame: usize) -> String {
    format!("symbols/{frame}")
}

pub fn noise(frame: usize) -> String {
    format!("noise/{frame}")
}
