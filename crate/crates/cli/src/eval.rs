//! Evaluation of a prediction directory against a ground-truth directory.
//! Both hold `voxels.f32` and `depth.f32` with sidecars.

use std::path::Path;

use rfscene_core::io::{read_depth, read_voxels, write_json, write_text};
use rfscene_core::metrics::{error_cdf, evaluate, ErrorCdfs, EvalReport, LossWeights};

use crate::error::{CliError, Result};
use crate::pipeline::CDF_BINS;

pub const VOXELS: &str = "voxels.f32";
pub const DEPTH: &str = "depth.f32";

pub fn eval_dirs(pred: &Path, gt: &Path, tau_occ: f64, weights: &LossWeights) -> Result<(EvalReport, ErrorCdfs)> {
    let load = |dir: &Path, name: &str| {
        let p = dir.join(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(CliError::MissingInput(p))
        }
    };
    let pv = read_voxels(&load(pred, VOXELS)?)?;
    let gv = read_voxels(&load(gt, VOXELS)?)?;
    let pd = read_depth(&load(pred, DEPTH)?)?;
    let gd = read_depth(&load(gt, DEPTH)?)?;
    let report = evaluate(&pv, &gv, &pd, &gd, tau_occ, weights)?;
    let cdfs = error_cdf(&pd, &gd, CDF_BINS)?;
    Ok((report, cdfs))
}

/// Writes `report.json`, `cdf_abs.csv` and `cdf_rel.csv` into `out`.
pub fn cmd_eval(pred: &Path, gt: &Path, out: &Path, tau_occ: f64, weights: &LossWeights) -> Result<EvalReport> {
    let (report, cdfs) = eval_dirs(pred, gt, tau_occ, weights)?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    write_json(&out.join("report.json"), &report)?;
    write_text(&out.join("cdf_abs.csv"), &cdfs.absolute.to_csv())?;
    write_text(&out.join("cdf_rel.csv"), &cdfs.relative.to_csv())?;
    Ok(report)
}
