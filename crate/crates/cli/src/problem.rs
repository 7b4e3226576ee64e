//! A problem directory: `u.txt`, `sigma.txt`, `v.txt`, optional `mask.txt`
//! and `meta.json`.

use std::path::{Path, PathBuf};

use grasscomp_core::{GroundTruth, Matrix, ObservationMask, PartialProblem, SubspacePoint};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::format::{self, dense_to_string, mask_to_string};
use crate::manifest::Recorder;

pub const U_FILE: &str = "u.txt";
pub const SIGMA_FILE: &str = "sigma.txt";
pub const V_FILE: &str = "v.txt";
pub const MASK_FILE: &str = "mask.txt";
pub const META_FILE: &str = "meta.json";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProblemMeta {
    pub name: String,
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub sigma: Vec<f64>,
    /// Nominal sampling probability of `mask.txt`; absent means the observed fraction.
    pub p: Option<f64>,
}

pub struct Problem {
    pub gt: GroundTruth,
    pub observed: Option<PartialProblem>,
}

pub fn write_problem(
    rec: &mut Recorder,
    meta: &ProblemMeta,
    gt: &GroundTruth,
    mask: Option<(&ObservationMask, &[f64])>,
) -> CliResult<()> {
    rec.write(U_FILE, &dense_to_string(gt.u().rep()))?;
    let sigma = Matrix::from_column_slice(gt.rank(), 1, gt.sigma());
    rec.write(SIGMA_FILE, &dense_to_string(&sigma))?;
    rec.write(V_FILE, &dense_to_string(gt.v()))?;
    if let Some((mask, values)) = mask {
        rec.write(MASK_FILE, &mask_to_string(mask, values))?;
    }
    let text = serde_json::to_string_pretty(meta).expect("meta serializes") + "\n";
    rec.write(META_FILE, &text)
}

fn corrupt(path: &Path, e: impl ToString) -> CliError {
    CliError::io(path, e)
}

/// Loads a problem directory, recording every file read as an input.
pub fn load_problem(dir: &Path, rec: &mut Recorder) -> CliResult<Problem> {
    let file = |name: &str| -> PathBuf { dir.join(name) };
    let meta_path = file(META_FILE);
    let meta: Option<ProblemMeta> = if meta_path.exists() {
        let text = format::read_text(&meta_path)?;
        rec.input(&meta_path)?;
        Some(serde_json::from_str(&text).map_err(|e| corrupt(&meta_path, e))?)
    } else {
        None
    };

    let mut read = |name: &str| -> CliResult<Matrix> {
        let path = file(name);
        let a = format::read_dense(&path)?;
        rec.input(&path)?;
        Ok(a)
    };
    let u_path = file(U_FILE);
    let u = SubspacePoint::new(read(U_FILE)?).map_err(|e| corrupt(&u_path, e))?;
    let sigma_path = file(SIGMA_FILE);
    let sigma_m = read(SIGMA_FILE)?;
    if sigma_m.ncols() != 1 {
        return Err(corrupt(&sigma_path, "sigma must be a single column"));
    }
    let sigma: Vec<f64> = sigma_m.iter().copied().collect();
    let v_path = file(V_FILE);
    let v = read(V_FILE)?;
    let gt = GroundTruth::new(u, sigma, v).map_err(|e| corrupt(&v_path, e))?;

    let mask_path = file(MASK_FILE);
    let observed = if mask_path.exists() {
        let (m, n, entries, values) =
            format::parse_mask(&format::read_text(&mask_path)?).map_err(|e| corrupt(&mask_path, e))?;
        rec.input(&mask_path)?;
        let p = meta.as_ref().and_then(|meta| meta.p);
        let mask = ObservationMask::new(m, n, entries, p).map_err(|e| corrupt(&mask_path, e))?;
        Some(PartialProblem::with_values(gt.clone(), mask, values).map_err(|e| corrupt(&mask_path, e))?)
    } else {
        None
    };
    Ok(Problem { gt, observed })
}
