//! Scenario generators and Monte Carlo drivers for landscape studies.
//!
//! Every random choice flows from one [`SeedStream`]: the complement basis
//! used to place grid points, the probe points, and one mask per trial. The
//! same masks are shared by every cell and point of a run (common random
//! numbers), so differences between cells are not blurred by mask noise.
//! With the `parallel` feature trials are evaluated concurrently and then
//! reduced in trial order, which keeps results bit-for-bit reproducible.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use rand::Rng;

use crate::error::{Error, Result};
use crate::fullcost::{cost_full, GroundTruth};
use crate::grassmann::{complement_basis, point_with_angles, point_with_angles_in, SubspacePoint};
use crate::partialcost::{cost_partial, sample_mask, PartialProblem};
use crate::rng::SeedStream;
use crate::Matrix;

/// Interior of a landscape grid used for comparisons: both angles in this range.
pub const INTERIOR: (f64, f64) = (0.2, 1.35);

/// A synthetic problem configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub m: usize,
    pub n: usize,
    pub r: usize,
    /// Singular values, descending.
    pub sigma: Vec<f64>,
    /// Sampling probability the setting is usually run at.
    pub p: f64,
    /// Probabilities for sweeps.
    pub p_values: Vec<f64>,
}

impl Scenario {
    pub fn ground_truth(&self, seeds: &SeedStream) -> Result<GroundTruth> {
        GroundTruth::random(self.m, self.n, self.sigma.clone(), seeds)
    }
}

/// Desk-runnable shrink factor for each setting.
pub fn default_scale(which: u8) -> usize {
    if which == 2 {
        100
    } else {
        10
    }
}

fn descending(mut sigma: Vec<f64>) -> Vec<f64> {
    sigma.sort_by(|a, b| b.total_cmp(a));
    sigma
}

/// Settings 1–3 with `m` and `n` divided by `scale` (rank, Σ profile and `p` kept).
///
/// 1. rectangular: 1000 × 30000, r = 6, Σ = diag(1, 1.2, …, 2), p = 0.026
/// 2. high dimension: 10000 × 10000, r = 10, Σ = diag(1, 1 + 1/9, …, 2), p = 0.006
/// 3. bad conditioning: 1000 × 1000, r = 10, Σ = √(mn)·diag(e^{5k/9}), p = 0.01
pub fn make_scenario(which: u8, scale: usize) -> Result<Scenario> {
    if scale == 0 {
        return Err(Error::invalid("scale must be positive"));
    }
    let (name, m, n, r, p) = match which {
        1 => ("setting1", 1000, 30_000, 6, 0.026),
        2 => ("setting2", 10_000, 10_000, 10, 0.006),
        3 => ("setting3", 1000, 1000, 10, 0.01),
        _ => return Err(Error::invalid("setting must be 1, 2 or 3")),
    };
    let (m, n) = (m / scale, n / scale);
    if m < 2 * r {
        return Err(Error::InsufficientDim { m, r });
    }
    let sigma = match which {
        1 => (0..r).map(|k| 1.0 + 0.2 * k as f64).collect(),
        2 => (0..r).map(|k| 1.0 + k as f64 / 9.0).collect(),
        _ => {
            let s = libm::sqrt(m as f64 * n as f64);
            (0..r).map(|k| s * libm::exp(5.0 * k as f64 / 9.0)).collect()
        }
    };
    Ok(Scenario {
        name: name.into(),
        m,
        n,
        r,
        sigma: descending(sigma),
        p,
        p_values: vec![1.0, 0.5, 0.2, 0.1],
    })
}

/// The two-block illustration: 100 × 200, Σ = diag(1.4, 1.4, 1.4, 1, 1, 1).
pub fn figure_scenario() -> Scenario {
    Scenario {
        name: "figure".into(),
        m: 100,
        n: 200,
        r: 6,
        sigma: vec![1.4, 1.4, 1.4, 1.0, 1.0, 1.0],
        p: 0.1,
        p_values: vec![1.0, 0.1, 0.01],
    }
}

/// Partition of the column indices `0..r` into the two grid axes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupAssignment {
    first: Vec<usize>,
    second: Vec<usize>,
}

impl GroupAssignment {
    pub fn new(r: usize, mut first: Vec<usize>, mut second: Vec<usize>) -> Result<Self> {
        first.sort_unstable();
        second.sort_unstable();
        let mut all: Vec<usize> = first.iter().chain(&second).copied().collect();
        all.sort_unstable();
        if first.is_empty() || second.is_empty() || all != (0..r).collect::<Vec<_>>() {
            return Err(Error::invalid("groups must partition 0..r into two non-empty sets"));
        }
        Ok(Self { first, second })
    }

    /// First axis on the trailing (smallest-σ) half, second axis on the rest.
    pub fn halves(r: usize) -> Result<Self> {
        let split = r / 2;
        Self::new(r, (split..r).collect(), (0..split).collect())
    }

    pub fn first(&self) -> &[usize] {
        &self.first
    }

    pub fn second(&self) -> &[usize] {
        &self.second
    }

    pub fn rank(&self) -> usize {
        self.first.len() + self.second.len()
    }

    pub fn swapped(&self) -> Self {
        Self {
            first: self.second.clone(),
            second: self.first.clone(),
        }
    }

    fn angles(&self, a: f64, b: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.rank()];
        for &i in &self.first {
            out[i] = a;
        }
        for &i in &self.second {
            out[i] = b;
        }
        out
    }
}

/// Evenly spaced angles on `[lo, hi]`.
pub fn angle_axis(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeGrid {
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    pub groups: GroupAssignment,
    /// `values[(a, b)]` is the cost at angle `axis1[a]` on the first group and
    /// `axis2[b]` on the second.
    pub values: Matrix,
    pub p: f64,
    pub trials: usize,
}

impl LandscapeGrid {
    fn interior_cells(&self, range: (f64, f64)) -> impl Iterator<Item = (usize, usize)> + '_ {
        let inside = move |t: f64| t >= range.0 - 1e-12 && t <= range.1 + 1e-12;
        self.axis1.iter().enumerate().filter(move |(_, &a)| inside(a)).flat_map(move |(i, _)| {
            self.axis2
                .iter()
                .enumerate()
                .filter(move |(_, &b)| inside(b))
                .map(move |(j, _)| (i, j))
        })
    }

    /// `max |self − reference| / |reference|` over interior cells.
    pub fn max_relative_deviation(&self, reference: &LandscapeGrid, range: (f64, f64)) -> Result<f64> {
        if self.values.shape() != reference.values.shape() {
            return Err(Error::ShapeMismatch {
                expected: reference.values.shape(),
                found: self.values.shape(),
            });
        }
        Ok(self
            .interior_cells(range)
            .map(|(i, j)| {
                let r = reference.values[(i, j)];
                (self.values[(i, j)] - r).abs() / r.abs()
            })
            .fold(0.0, f64::max))
    }

    /// Same deviation after dividing each grid by its interior mean: compares
    /// the shape of the landscapes and ignores a uniform rescaling.
    pub fn max_shape_deviation(&self, reference: &LandscapeGrid, range: (f64, f64)) -> Result<f64> {
        let mean = |g: &LandscapeGrid| {
            let (sum, count) = g
                .interior_cells(range)
                .fold((0.0, 0usize), |(s, c), (i, j)| (s + g.values[(i, j)], c + 1));
            sum / count.max(1) as f64
        };
        let (a, b) = (mean(self), mean(reference));
        let mut scaled = self.clone();
        scaled.values *= b / a;
        scaled.max_relative_deviation(reference, range)
    }
}

/// Evaluates `job(i)` for `i in 0..count`, returning results in index order.
fn indexed<T, F>(count: usize, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(job).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(job).collect()
    }
}

fn trial_mask_seed(seeds: &SeedStream, p: f64, trial: usize) -> u64 {
    seeds.child("mask", p.to_bits()).child("trial", trial as u64).root()
}

fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
    (mean, libm::sqrt(var))
}

fn grid_points(
    gt: &GroundTruth,
    axis1: &[f64],
    axis2: &[f64],
    groups: &GroupAssignment,
    seeds: &SeedStream,
) -> Result<Vec<SubspacePoint>> {
    if groups.rank() != gt.rank() {
        return Err(Error::ShapeMismatch {
            expected: (gt.rank(), 1),
            found: (groups.rank(), 1),
        });
    }
    let w = complement_basis(gt.u(), seeds.seed("grid.complement"))?;
    let mut points = Vec::with_capacity(axis1.len() * axis2.len());
    for &a in axis1 {
        for &b in axis2 {
            points.push(point_with_angles_in(gt.u(), &groups.angles(a, b), &w)?);
        }
    }
    Ok(points)
}

/// Costs of `points`, one row per trial. At `p = 1` the cost is deterministic
/// and a single row of full costs is returned.
fn trial_costs(
    gt: &GroundTruth,
    points: &[SubspacePoint],
    p: f64,
    trials: usize,
    seeds: &SeedStream,
) -> Result<Vec<Vec<f64>>> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid("sampling probability must lie in (0, 1]"));
    }
    if p == 1.0 {
        let row = points.iter().map(|x| cost_full(gt, x)).collect::<Result<Vec<_>>>()?;
        return Ok(vec![row]);
    }
    if trials == 0 {
        return Err(Error::invalid("partial costs need at least one trial"));
    }
    indexed(trials, |t| {
        let mask = sample_mask(gt.m(), gt.n(), p, trial_mask_seed(seeds, p, t))?;
        let problem = PartialProblem::synthetic(gt.clone(), mask)?;
        points.iter().map(|x| cost_partial(&problem, x)).collect()
    })
}

/// Cost on the grid `axis1 × axis2`: the point for cell `(a, b)` is
/// `U cosΘ + W sinΘ` with angle `a` on the first group and `b` on the second,
/// so its principal frame is the frame of `U` and `Ξ = Σ²`. Partial costs are
/// averaged over `trials` masks.
pub fn landscape_grid(
    gt: &GroundTruth,
    p: f64,
    axis1: &[f64],
    axis2: &[f64],
    groups: &GroupAssignment,
    trials: usize,
    seeds: &SeedStream,
) -> Result<LandscapeGrid> {
    let points = grid_points(gt, axis1, axis2, groups, seeds)?;
    let rows = trial_costs(gt, &points, p, trials, seeds)?;
    let (mean, _) = column_stats(&rows);
    Ok(LandscapeGrid {
        axis1: axis1.to_vec(),
        axis2: axis2.to_vec(),
        groups: groups.clone(),
        values: Matrix::from_row_slice(axis1.len(), axis2.len(), &mean),
        p,
        trials: if p == 1.0 { 1 } else { trials },
    })
}

fn column_stats(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let cols = rows.first().map_or(0, Vec::len);
    let mut means = Vec::with_capacity(cols);
    let mut stds = Vec::with_capacity(cols);
    let mut column = Vec::with_capacity(rows.len());
    for c in 0..cols {
        column.clear();
        column.extend(rows.iter().map(|row| row[c]));
        let (m, s) = mean_and_std(&column);
        means.push(m);
        stds.push(s);
    }
    (means, stds)
}

/// `count` points whose principal angles to `U` are drawn uniformly from
/// `[π/4, π/2]` (substream `probe.angles`, one placement seed per point).
pub fn probe_points(gt: &GroundTruth, count: usize, seeds: &SeedStream) -> Result<Vec<SubspacePoint>> {
    let mut rng = seeds.rng("probe.angles");
    (0..count)
        .map(|k| {
            let angles: Vec<f64> =
                (0..gt.rank()).map(|_| rng.random_range(FRAC_PI_4..=FRAC_PI_2)).collect();
            point_with_angles(gt.u(), &angles, seeds.child("probe.place", k as u64).root())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: usize,
    pub p: f64,
    pub mean: f64,
    pub std: f64,
    pub trials: usize,
}

/// Mean and sample standard deviation of the partial cost at each point for
/// each `p` (rows ordered by `p`, then point).
pub fn sweep_p(
    gt: &GroundTruth,
    points: &[SubspacePoint],
    p_list: &[f64],
    trials: usize,
    seeds: &SeedStream,
) -> Result<Vec<SweepRow>> {
    if trials < 2 {
        return Err(Error::invalid("a sweep needs at least two trials"));
    }
    let mut out = Vec::with_capacity(points.len() * p_list.len());
    for &p in p_list {
        let rows = trial_costs(gt, points, p, trials, seeds)?;
        let (mean, std) = column_stats(&rows);
        for (k, (&mean, &std)) in mean.iter().zip(&std).enumerate() {
            out.push(SweepRow {
                point: k,
                p,
                mean,
                std,
                trials: rows.len(),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Comparison {
    /// Grids in the order of the requested `p` values.
    pub grids: Vec<LandscapeGrid>,
    /// The `p = 1` grid every other grid is compared with.
    pub reference: LandscapeGrid,
    /// `(p, max relative deviation, max shape deviation)` on interior cells.
    pub deviations: Vec<(f64, f64, f64)>,
}

/// One grid per `p`, each compared with the fully observed grid.
pub fn compare_p(
    gt: &GroundTruth,
    axis1: &[f64],
    axis2: &[f64],
    groups: &GroupAssignment,
    p_list: &[f64],
    trials: usize,
    seeds: &SeedStream,
) -> Result<Comparison> {
    let reference = landscape_grid(gt, 1.0, axis1, axis2, groups, 1, seeds)?;
    let mut grids = Vec::with_capacity(p_list.len());
    let mut deviations = Vec::with_capacity(p_list.len());
    for &p in p_list {
        let grid = if p == 1.0 {
            reference.clone()
        } else {
            landscape_grid(gt, p, axis1, axis2, groups, trials, seeds)?
        };
        deviations.push((
            p,
            grid.max_relative_deviation(&reference, INTERIOR)?,
            grid.max_shape_deviation(&reference, INTERIOR)?,
        ));
        grids.push(grid);
    }
    Ok(Comparison {
        grids,
        reference,
        deviations,
    })
}
