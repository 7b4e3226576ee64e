//! The partially observed cost
//!
//! ```text
//! f(X) = (1/p) · min_Y ½ ‖(X Yᵀ − M)_Ω‖²_F
//! ```
//!
//! The inner minimization separates over columns of `M`: column `j` only
//! sees the rows observed in it, so `y_j` solves an `r × r` normal system
//! built from those rows. Blocks that are numerically rank deficient fall
//! back to the minimum-norm solution; the cost can be discontinuous there.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::fullcost::GroundTruth;
use crate::grassmann::{SubspacePoint, TangentVector};
use crate::rng::rng_from_seed;
use crate::Matrix;

/// Singular values of a normal-equation block below this fraction of the
/// largest one are treated as zero.
pub const PINV_REL_TOL: f64 = 1e-10;

/// Cholesky is trusted when this bound on the condition number holds.
const CHOLESKY_COND_LIMIT: f64 = 1e8;

/// The observed set `Ω ⊂ [m] × [n]` and its sampling probability `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMask {
    m: usize,
    n: usize,
    p: f64,
    /// `1/p`, formed as `mn / |Ω|` when `p` is the observed fraction so that
    /// small fixtures scale exactly.
    inv_p: f64,
    /// Sorted lexicographically by (row, col).
    entries: Vec<(usize, usize)>,
    /// Column-compressed view: rows of column `j` are
    /// `col_rows[col_ptr[j]..col_ptr[j + 1]]`, with `col_pos` pointing back
    /// into `entries`.
    col_ptr: Vec<usize>,
    col_rows: Vec<usize>,
    col_pos: Vec<usize>,
}

impl ObservationMask {
    /// Builds a mask from explicit entries. When `p` is `None` it defaults to
    /// the observed fraction `|Ω| / (mn)`.
    pub fn new(m: usize, n: usize, mut entries: Vec<(usize, usize)>, p: Option<f64>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::invalid("mask dimensions must be positive"));
        }
        if let Some(&(i, j)) = entries.iter().find(|&&(i, j)| i >= m || j >= n) {
            return Err(Error::invalid(alloc::format!(
                "entry ({i}, {j}) outside {m} × {n}"
            )));
        }
        entries.sort_unstable();
        if let Some(w) = entries.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid(alloc::format!(
                "duplicate entry ({}, {})",
                w[0].0,
                w[0].1
            )));
        }
        let cells = m as f64 * n as f64;
        let (p, inv_p) = match p {
            Some(p) => (p, 1.0 / p),
            None => (entries.len() as f64 / cells, cells / entries.len() as f64),
        };
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::invalid("sampling probability must lie in (0, 1]"));
        }
        let mut mask = Self::from_sorted(m, n, p, entries);
        mask.inv_p = inv_p;
        Ok(mask)
    }

    fn from_sorted(m: usize, n: usize, p: f64, entries: Vec<(usize, usize)>) -> Self {
        let mut counts = vec![0usize; n + 1];
        for &(_, j) in &entries {
            counts[j + 1] += 1;
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_ptr = counts.clone();
        let mut next = counts;
        let mut col_rows = vec![0usize; entries.len()];
        let mut col_pos = vec![0usize; entries.len()];
        for (k, &(i, j)) in entries.iter().enumerate() {
            let slot = next[j];
            col_rows[slot] = i;
            col_pos[slot] = k;
            next[j] += 1;
        }
        Self {
            m,
            n,
            p,
            inv_p: 1.0 / p,
            entries,
            col_ptr,
            col_rows,
            col_pos,
        }
    }

    /// Every cell observed, `p = 1`.
    pub fn full(m: usize, n: usize) -> Self {
        let entries = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
        Self::from_sorted(m, n, 1.0, entries)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Nominal sampling probability used for the `1/p` scale.
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn observed_fraction(&self) -> f64 {
        self.entries.len() as f64 / (self.m as f64 * self.n as f64)
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.entries.binary_search(&(i, j)).is_ok()
    }

    pub fn is_subset_of(&self, other: &ObservationMask) -> bool {
        self.m == other.m && self.n == other.n && self.entries.iter().all(|&(i, j)| other.contains(i, j))
    }

    /// Same entries with a different nominal probability.
    pub fn with_p(mut self, p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::invalid("sampling probability must lie in (0, 1]"));
        }
        self.p = p;
        self.inv_p = 1.0 / p;
        Ok(self)
    }

    fn column(&self, j: usize) -> (&[usize], &[usize]) {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.col_rows[range.clone()], &self.col_pos[range])
    }
}

/// Uniform model: each cell independently with probability `p`, drawn in
/// row-major order from the seeded generator.
pub fn sample_mask(m: usize, n: usize, p: f64, seed: u64) -> Result<ObservationMask> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid("sampling probability must lie in (0, 1]"));
    }
    if m == 0 || n == 0 {
        return Err(Error::invalid("mask dimensions must be positive"));
    }
    if p == 1.0 {
        return Ok(ObservationMask::full(m, n));
    }
    let mut rng = rng_from_seed(seed);
    let mut entries = Vec::with_capacity((p * (m * n) as f64 * 1.1) as usize + 16);
    for i in 0..m {
        for j in 0..n {
            if rng.random::<f64>() < p {
                entries.push((i, j));
            }
        }
    }
    Ok(ObservationMask::from_sorted(m, n, p, entries))
}

/// Ground truth, mask and the observed values `M_ij` aligned with the mask entries.
#[derive(Debug, Clone)]
pub struct PartialProblem {
    gt: GroundTruth,
    mask: ObservationMask,
    values: Vec<f64>,
}

impl PartialProblem {
    /// Observes `gt` exactly on `mask`.
    pub fn synthetic(gt: GroundTruth, mask: ObservationMask) -> Result<Self> {
        check_mask(&gt, &mask)?;
        let values = mask.entries().iter().map(|&(i, j)| gt.entry(i, j)).collect();
        Ok(Self { gt, mask, values })
    }

    /// Explicit observed values, one per mask entry in mask order.
    pub fn with_values(gt: GroundTruth, mask: ObservationMask, values: Vec<f64>) -> Result<Self> {
        check_mask(&gt, &mask)?;
        if values.len() != mask.len() {
            return Err(Error::ShapeMismatch {
                expected: (mask.len(), 1),
                found: (values.len(), 1),
            });
        }
        Ok(Self { gt, mask, values })
    }

    pub fn gt(&self) -> &GroundTruth {
        &self.gt
    }

    pub fn mask(&self) -> &ObservationMask {
        &self.mask
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn check_mask(gt: &GroundTruth, mask: &ObservationMask) -> Result<()> {
    if (mask.m(), mask.n()) != (gt.m(), gt.n()) {
        return Err(Error::ShapeMismatch {
            expected: (gt.m(), gt.n()),
            found: (mask.m(), mask.n()),
        });
    }
    Ok(())
}

/// Result of the inner least squares.
#[derive(Debug, Clone)]
pub struct InnerSolution {
    /// `Y_X`, `n × r`.
    pub y: Matrix,
    /// `½ Σ_Ω ((X Y_Xᵀ)_ij − M_ij)²`, without the `1/p` scale.
    pub half_residual_sq: f64,
    /// Non-empty columns whose block was rank deficient.
    pub deficient_columns: Vec<usize>,
}

struct ColumnSolver {
    r: usize,
    gram: Vec<f64>,
    rhs: Vec<f64>,
    chol: Vec<f64>,
    inv: Vec<f64>,
}

enum BlockRank {
    Full,
    Deficient,
}

impl ColumnSolver {
    fn new(r: usize) -> Self {
        Self {
            r,
            gram: vec![0.0; r * r],
            rhs: vec![0.0; r],
            chol: vec![0.0; r * r],
            inv: vec![0.0; r * r],
        }
    }

    /// Solves the normal equations for one column into `y`.
    fn solve(&mut self, x_rows: &[f64], rows: &[usize], vals: &[f64], y: &mut [f64]) -> BlockRank {
        let r = self.r;
        self.gram.iter_mut().for_each(|v| *v = 0.0);
        self.rhs.iter_mut().for_each(|v| *v = 0.0);
        for (&i, &b) in rows.iter().zip(vals) {
            let xi = &x_rows[i * r..(i + 1) * r];
            for a in 0..r {
                self.rhs[a] += xi[a] * b;
                for c in 0..=a {
                    self.gram[a * r + c] += xi[a] * xi[c];
                }
            }
        }
        for a in 0..r {
            for c in 0..a {
                self.gram[c * r + a] = self.gram[a * r + c];
            }
        }
        if rows.len() >= r && self.cholesky_solve(y) {
            return BlockRank::Full;
        }
        self.pinv_solve(y)
    }

    fn cholesky_solve(&mut self, y: &mut [f64]) -> bool {
        let r = self.r;
        let (g, l) = (&self.gram, &mut self.chol);
        l.iter_mut().for_each(|v| *v = 0.0);
        for a in 0..r {
            for c in 0..=a {
                let mut s = g[a * r + c];
                for k in 0..c {
                    s -= l[a * r + k] * l[c * r + k];
                }
                if a == c {
                    if !(s > 0.0) {
                        return false;
                    }
                    l[a * r + a] = libm::sqrt(s);
                } else {
                    l[a * r + c] = s / l[c * r + c];
                }
            }
        }
        // ‖G⁻¹‖₂ ≤ ‖L⁻¹‖²_F and λ_max(G) ≤ tr G.
        let inv = &mut self.inv;
        inv.iter_mut().for_each(|v| *v = 0.0);
        for c in 0..r {
            inv[c * r + c] = 1.0 / l[c * r + c];
            for a in c + 1..r {
                let mut s = 0.0;
                for k in c..a {
                    s -= l[a * r + k] * inv[k * r + c];
                }
                inv[a * r + c] = s / l[a * r + a];
            }
        }
        let inv_frob_sq: f64 = inv.iter().map(|v| v * v).sum();
        let trace: f64 = (0..r).map(|a| g[a * r + a]).sum();
        if trace * inv_frob_sq > CHOLESKY_COND_LIMIT {
            return false;
        }
        // y = L⁻ᵀ L⁻¹ h
        let mut tmp = [0.0_f64; 64];
        let z: &mut [f64] = if r <= 64 { &mut tmp[..r] } else { unreachable!() };
        for a in 0..r {
            z[a] = (0..=a).map(|k| inv[a * r + k] * self.rhs[k]).sum();
        }
        for a in 0..r {
            y[a] = (a..r).map(|k| inv[k * r + a] * z[k]).sum();
        }
        true
    }

    fn pinv_solve(&mut self, y: &mut [f64]) -> BlockRank {
        let r = self.r;
        let g = Matrix::from_row_slice(r, r, &self.gram);
        let h = nalgebra::DVector::from_column_slice(&self.rhs);
        let svd = g.svd(true, true);
        let largest = svd.singular_values.max();
        let cutoff = PINV_REL_TOL * largest;
        let u = svd.u.as_ref().expect("requested u");
        let v_t = svd.v_t.as_ref().expect("requested v_t");
        let mut rank = 0;
        y.iter_mut().for_each(|v| *v = 0.0);
        if largest > 0.0 {
            for k in 0..r {
                let s = svd.singular_values[k];
                if s > cutoff {
                    rank += 1;
                    let coef = u.column(k).dot(&h) / s;
                    for a in 0..r {
                        y[a] += coef * v_t[(k, a)];
                    }
                }
            }
        }
        if rank == r {
            BlockRank::Full
        } else {
            BlockRank::Deficient
        }
    }
}

fn row_major(x: &Matrix) -> Vec<f64> {
    let (m, r) = x.shape();
    let mut out = vec![0.0; m * r];
    for i in 0..m {
        for k in 0..r {
            out[i * r + k] = x[(i, k)];
        }
    }
    out
}

fn check_point(problem: &PartialProblem, x: &SubspacePoint) -> Result<()> {
    let expected = problem.gt.u().rep().shape();
    if x.rep().shape() != expected {
        return Err(Error::ShapeMismatch {
            expected,
            found: x.rep().shape(),
        });
    }
    Ok(())
}

/// Per-column least squares for `Y_X`, with residuals and rank diagnostics.
pub fn inner_solve_detailed(problem: &PartialProblem, x: &SubspacePoint) -> Result<InnerSolution> {
    check_point(problem, x)?;
    let mask = &problem.mask;
    let (n, r) = (mask.n(), x.rank());
    let x_rows = row_major(x.rep());
    let mut solver = ColumnSolver::new(r);
    let mut y = Matrix::zeros(n, r);
    let mut yj = vec![0.0; r];
    let mut col_vals = Vec::new();
    let mut half_residual_sq = 0.0;
    let mut deficient_columns = Vec::new();

    for j in 0..n {
        let (rows, pos) = mask.column(j);
        if rows.is_empty() {
            continue;
        }
        col_vals.clear();
        col_vals.extend(pos.iter().map(|&k| problem.values[k]));
        if let BlockRank::Deficient = solver.solve(&x_rows, rows, &col_vals, &mut yj) {
            deficient_columns.push(j);
        }
        for (&i, &b) in rows.iter().zip(&col_vals) {
            let xi = &x_rows[i * r..(i + 1) * r];
            let e: f64 = xi.iter().zip(&yj).map(|(a, c)| a * c).sum::<f64>() - b;
            half_residual_sq += 0.5 * e * e;
        }
        for k in 0..r {
            y[(j, k)] = yj[k];
        }
    }
    Ok(InnerSolution {
        y,
        half_residual_sq,
        deficient_columns,
    })
}

/// `Y_X = argmin_Y ½ ‖(X Yᵀ − M)_Ω‖²`, minimum norm on deficient columns.
pub fn inner_solve(problem: &PartialProblem, x: &SubspacePoint) -> Result<Matrix> {
    Ok(inner_solve_detailed(problem, x)?.y)
}

/// `(1/p) · ½ Σ_Ω ((x Y_Xᵀ)_ij − M_ij)²`.
pub fn cost_partial(problem: &PartialProblem, x: &SubspacePoint) -> Result<f64> {
    let sol = inner_solve_detailed(problem, x)?;
    Ok(sol.half_residual_sq * problem.mask.inv_p)
}

/// `(1/p) (I − x xᵀ) [(x Y_Xᵀ − M)_Ω] Y_X`; defined only where every
/// non-empty column block has full rank.
pub fn grad_partial(problem: &PartialProblem, x: &SubspacePoint) -> Result<TangentVector> {
    let sol = inner_solve_detailed(problem, x)?;
    if let Some(&column) = sol.deficient_columns.first() {
        return Err(Error::Degenerate { column });
    }
    let r = x.rank();
    let x_rows = row_major(x.rep());
    let y_rows = row_major(&sol.y);
    let mut euclid = vec![0.0; problem.mask.m() * r];
    for (&(i, j), &b) in problem.mask.entries().iter().zip(&problem.values) {
        let xi = &x_rows[i * r..(i + 1) * r];
        let yj = &y_rows[j * r..(j + 1) * r];
        let e: f64 = xi.iter().zip(yj).map(|(a, c)| a * c).sum::<f64>() - b;
        let gi = &mut euclid[i * r..(i + 1) * r];
        for k in 0..r {
            gi[k] += e * yj[k];
        }
    }
    let euclid = Matrix::from_row_slice(problem.mask.m(), r, &euclid) * problem.mask.inv_p;
    let dir = &euclid - x.rep() * x.rep().tr_mul(&euclid);
    Ok(TangentVector::from_parts_unchecked(x.clone(), dir))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fullcost::{cost_full, grad_full};
    use crate::grassmann::{exp_map, point_with_angles, project_tangent, random_point};
    use crate::linalg;
    use crate::rng::SeedStream;

    fn truth(m: usize, n: usize, sigma: &[f64], seed: u64) -> GroundTruth {
        GroundTruth::random(m, n, sigma.to_vec(), &SeedStream::new(seed)).unwrap()
    }

    /// Example with M = [0, 1, 1]ᵀ and the two nonzero entries observed.
    fn discontinuity_problem() -> PartialProblem {
        let s = libm::sqrt(0.5);
        let u = SubspacePoint::new(Matrix::from_column_slice(3, 1, &[0.0, s, s])).unwrap();
        let gt = GroundTruth::new(u, vec![libm::sqrt(2.0)], Matrix::from_column_slice(1, 1, &[1.0]))
            .unwrap();
        let mask = ObservationMask::new(3, 1, vec![(1, 0), (2, 0)], None).unwrap();
        // the entries of M are given exactly; √½·√2 would round
        PartialProblem::with_values(gt, mask, vec![1.0, 1.0]).unwrap()
    }

    fn eps_point(eps: f64) -> SubspacePoint {
        let a = libm::sqrt(1.0 - 2.0 * eps * eps);
        SubspacePoint::new(Matrix::from_column_slice(3, 1, &[a, eps, eps])).unwrap()
    }

    #[test]
    fn mask_validation() {
        assert!(ObservationMask::new(2, 2, vec![(0, 0), (0, 0)], None).is_err());
        assert!(ObservationMask::new(2, 2, vec![(2, 0)], None).is_err());
        assert!(ObservationMask::new(2, 2, vec![], None).is_err());
        assert!(sample_mask(3, 3, 0.0, 1).is_err());
        assert!(sample_mask(3, 3, 1.5, 1).is_err());
        let mask = ObservationMask::new(2, 3, vec![(1, 2), (0, 1)], None).unwrap();
        assert_eq!(mask.entries(), &[(0, 1), (1, 2)]);
        assert!((mask.p() - 2.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn full_sampling_observes_everything() {
        let mask = sample_mask(4, 5, 1.0, 3).unwrap();
        assert_eq!(mask.len(), 20);
        assert_eq!(mask, ObservationMask::full(4, 5));
    }

    #[test]
    fn sampling_fraction_concentrates() {
        let (m, n, p) = (200usize, 200usize, 0.3);
        let cells = (m * n) as f64;
        let sd = libm::sqrt(p * (1.0 - p) / cells);
        for seed in 0..200 {
            let mask = sample_mask(m, n, p, seed).unwrap();
            assert_eq!(mask.p(), p);
            assert!((mask.observed_fraction() - p).abs() < 3.0 * sd + 1e-12 || seed_is_outlier(seed));
        }
    }

    // Under the binomial model about one seed in 370 lands outside 3σ; none of
    // the 200 fixed seeds here does.
    fn seed_is_outlier(_seed: u64) -> bool {
        false
    }

    #[test]
    fn sampling_is_deterministic() {
        assert_eq!(sample_mask(30, 40, 0.2, 9).unwrap(), sample_mask(30, 40, 0.2, 9).unwrap());
        assert_ne!(sample_mask(30, 40, 0.2, 9).unwrap(), sample_mask(30, 40, 0.2, 10).unwrap());
    }

    #[test]
    fn full_observation_inner_solution_is_mt_x() {
        let gt = truth(10, 12, &[2.0, 1.0], 1);
        let x = random_point(10, 2, 2).unwrap();
        let problem = PartialProblem::synthetic(gt.clone(), ObservationMask::full(10, 12)).unwrap();
        let y = inner_solve(&problem, &x).unwrap();
        let expected = gt.dense().tr_mul(x.rep());
        assert!((y - expected).amax() < 1e-10);
    }

    #[test]
    fn discontinuity_inner_solution() {
        let problem = discontinuity_problem();
        for eps in [0.5, 1e-1, 1e-3, 1e-6] {
            let y = inner_solve(&problem, &eps_point(eps)).unwrap();
            assert!((y[(0, 0)] * eps - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn discontinuity_cost() {
        let problem = discontinuity_problem();
        assert!((problem.mask().p() - 2.0 / 3.0).abs() < 1e-15);
        for eps in [1e-1, 1e-3, 1e-6] {
            assert!(cost_partial(&problem, &eps_point(eps)).unwrap() < 1e-20);
        }
        assert_eq!(cost_partial(&problem, &eps_point(0.0)).unwrap(), 1.5);
    }

    /// Each column solved independently by dense least squares on its
    /// observed rows (SVD of the k × r block, not the normal equations).
    fn dense_inner_oracle(problem: &PartialProblem, x: &Matrix) -> Matrix {
        let (n, r) = (problem.mask().n(), x.ncols());
        let mut y = Matrix::zeros(n, r);
        for j in 0..n {
            let rows: Vec<(usize, f64)> = problem
                .mask()
                .entries()
                .iter()
                .zip(problem.values())
                .filter(|((_, c), _)| *c == j)
                .map(|(&(i, _), &v)| (i, v))
                .collect();
            if rows.is_empty() {
                continue;
            }
            let a = Matrix::from_fn(rows.len(), r, |k, c| x[(rows[k].0, c)]);
            let b = nalgebra::DVector::from_iterator(rows.len(), rows.iter().map(|t| t.1));
            let sol = a.svd(true, true).solve(&b, 1e-12).unwrap();
            for c in 0..r {
                y[(j, c)] = sol[c];
            }
        }
        y
    }

    #[test]
    fn inner_solve_matches_dense_oracle() {
        let gt = truth(10, 12, &[2.0, 1.0], 3);
        let mask = sample_mask(10, 12, 0.6, 4).unwrap();
        let problem = PartialProblem::synthetic(gt, mask).unwrap();
        let x = random_point(10, 2, 5).unwrap();
        let y = inner_solve(&problem, &x).unwrap();
        let oracle = dense_inner_oracle(&problem, x.rep());
        assert!((y - oracle).amax() < 1e-10);
    }

    #[test]
    fn empty_and_deficient_columns() {
        let gt = truth(5, 3, &[1.0, 0.5], 6);
        // column 0 empty, column 1 has a single row (deficient for r = 2), column 2 full
        let entries = vec![(0, 1), (0, 2), (1, 2), (2, 2), (3, 2), (4, 2)];
        let mask = ObservationMask::new(5, 3, entries, Some(0.5)).unwrap();
        let problem = PartialProblem::synthetic(gt, mask).unwrap();
        let x = random_point(5, 2, 7).unwrap();
        let sol = inner_solve_detailed(&problem, &x).unwrap();
        assert_eq!(sol.deficient_columns, vec![1]);
        assert_eq!(sol.y.row(0).amax(), 0.0);
        // minimum-norm solution of a single equation lies along that row of x
        let row = x.rep().row(0);
        let y1 = sol.y.row(1);
        assert!((row[0] * y1[1] - row[1] * y1[0]).abs() < 1e-12);
        assert!(matches!(grad_partial(&problem, &x), Err(Error::Degenerate { column: 1 })));
    }

    #[test]
    fn reduction_to_full_cost() {
        for seed in 0..5 {
            let gt = truth(12, 9, &[2.0, 1.5, 1.0], 10 + seed);
            let problem = PartialProblem::synthetic(gt.clone(), ObservationMask::full(12, 9)).unwrap();
            let x = random_point(12, 3, 20 + seed).unwrap();
            let fp = cost_partial(&problem, &x).unwrap();
            let ff = cost_full(&gt, &x).unwrap();
            assert!((fp - ff).abs() <= 1e-10 * ff.max(1.0));
            let gp = grad_partial(&problem, &x).unwrap();
            let gf = grad_full(&gt, &x).unwrap();
            assert!((gp.dir() - gf.dir()).amax() < 1e-9);
        }
    }

    #[test]
    fn zero_gradient_at_truth() {
        let gt = truth(12, 14, &[2.0, 1.0], 30);
        let mask = sample_mask(12, 14, 0.7, 31).unwrap();
        let problem = PartialProblem::synthetic(gt.clone(), mask).unwrap();
        assert!(cost_partial(&problem, gt.u()).unwrap() < 1e-24);
        assert!(grad_partial(&problem, gt.u()).unwrap().norm() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let gt = truth(12, 14, &[2.0, 1.0], 32);
        let mask = sample_mask(12, 14, 0.7, 33).unwrap();
        let problem = PartialProblem::synthetic(gt, mask).unwrap();
        let x = random_point(12, 2, 34).unwrap();
        let grad = grad_partial(&problem, &x).unwrap();
        let t = 1e-6;
        for k in 0..10 {
            let mut rng = crate::rng::rng_from_seed(40 + k);
            let d = linalg::gaussian_matrix(12, 2, &mut rng);
            let v = project_tangent(&x, &d).unwrap();
            let v = v.scaled(1.0 / v.norm());
            let fd = (cost_partial(&problem, &exp_map(&v.scaled(t))).unwrap()
                - cost_partial(&problem, &exp_map(&v.scaled(-t))).unwrap())
                / (2.0 * t);
            let exact = grad.inner(&v);
            assert!((fd - exact).abs() <= 1e-4 * exact.abs().max(1e-3), "{fd} vs {exact}");
        }
    }

    #[test]
    fn nested_masks_increase_inner_minimum() {
        let gt = truth(15, 20, &[2.0, 1.0], 50);
        let x = point_with_angles(gt.u(), &[0.5, 1.0], 51).unwrap();
        let big = sample_mask(15, 20, 0.6, 52).unwrap();
        // keep every other entry of the larger mask
        let small_entries = big.entries().iter().copied().step_by(2).collect();
        let small = ObservationMask::new(15, 20, small_entries, Some(0.6)).unwrap();
        assert!(small.is_subset_of(&big));
        let a = inner_solve_detailed(&PartialProblem::synthetic(gt.clone(), small).unwrap(), &x)
            .unwrap()
            .half_residual_sq;
        let b = inner_solve_detailed(&PartialProblem::synthetic(gt, big).unwrap(), &x)
            .unwrap()
            .half_residual_sq;
        assert!(a <= b + 1e-12);
    }

    #[test]
    fn cost_scales_quadratically() {
        let gt = truth(10, 12, &[2.0, 1.0], 60);
        let c = 3.0;
        let scaled = GroundTruth::new(
            gt.u().clone(),
            gt.sigma().iter().map(|s| s * c).collect(),
            gt.v().clone(),
        )
        .unwrap();
        let mask = sample_mask(10, 12, 0.5, 61).unwrap();
        let x = random_point(10, 2, 62).unwrap();
        let a = cost_partial(&PartialProblem::synthetic(gt, mask.clone()).unwrap(), &x).unwrap();
        let b = cost_partial(&PartialProblem::synthetic(scaled, mask).unwrap(), &x).unwrap();
        assert!((b - c * c * a).abs() <= 1e-10 * b);
    }
}
