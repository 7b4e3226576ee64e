//! Points, tangent vectors and geodesics on the Grassmann manifold `Gr(m, r)`.
//!
//! A point `[X]` is the column space of an `m × r` matrix with orthonormal
//! columns; `X` and `X·O` for orthogonal `O` are the same point. Every
//! quantity exported here (angles, distances, costs built on top) is invariant
//! under that change of representative.
//!
//! The tangent space at `X` is `{Δ : XᵀΔ = 0}` with metric `tr(Δ₁ᵀΔ₂)`.
//!
//! Principal angles are computed from both the cosines (singular values of
//! `XᵀY`) and the sines (column norms of the aligned normal component), using
//! the sine for angles below π/4 and the cosine above. The arccosine alone
//! loses half the digits near zero.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use crate::error::{Error, Result};
use crate::linalg::{self, diag_mul_right};
use crate::rng::rng_from_seed;
use crate::Matrix;

/// Orthonormality tolerance accepted for a representative.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Columns of `Δ_p` whose sine falls below this are left undetermined by the
/// alignment equation and are filled from the orthogonal complement instead.
pub const SINE_FLOOR: f64 = 1e-9;

/// Geodesics need every principal angle at most `π/2 − UNIQUENESS_MARGIN`.
pub const UNIQUENESS_MARGIN: f64 = 1e-9;

/// An `m × r` orthonormal representative of a point of `Gr(m, r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspacePoint {
    rep: Matrix,
}

impl SubspacePoint {
    /// Wraps an orthonormal matrix, checking `repᵀrep = I` to [`ORTHONORMAL_TOL`].
    pub fn new(rep: Matrix) -> Result<Self> {
        check_dims(rep.nrows(), rep.ncols())?;
        let residual = linalg::orthonormality_residual(&rep);
        if residual > ORTHONORMAL_TOL {
            return Err(Error::NotOrthonormal { residual });
        }
        Ok(Self { rep })
    }

    pub(crate) fn from_rep_unchecked(rep: Matrix) -> Self {
        debug_assert!(linalg::orthonormality_residual(&rep) < 1e-8);
        Self { rep }
    }

    pub fn rep(&self) -> &Matrix {
        &self.rep
    }

    pub fn into_rep(self) -> Matrix {
        self.rep
    }

    pub fn ambient_dim(&self) -> usize {
        self.rep.nrows()
    }

    pub fn rank(&self) -> usize {
        self.rep.ncols()
    }

    /// Same manifold point with representative `rep · o` (`o` orthogonal).
    pub fn with_rotation(&self, o: &Matrix) -> Result<Self> {
        if o.nrows() != self.rank() || o.ncols() != self.rank() {
            return Err(Error::ShapeMismatch {
                expected: (self.rank(), self.rank()),
                found: (o.nrows(), o.ncols()),
            });
        }
        SubspacePoint::new(&self.rep * o)
    }

    fn check_same_shape(&self, other: &SubspacePoint) -> Result<()> {
        if self.rep.shape() != other.rep.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.rep.shape(),
                found: other.rep.shape(),
            });
        }
        Ok(())
    }
}

fn check_dims(m: usize, r: usize) -> Result<()> {
    if r == 0 || m == 0 {
        return Err(Error::invalid("Grassmann dimensions must be positive"));
    }
    if r > m {
        return Err(Error::invalid("rank exceeds ambient dimension"));
    }
    Ok(())
}

/// A direction `dir` in the tangent space at `at`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    at: SubspacePoint,
    dir: Matrix,
}

/// Factored view of a tangent direction: `dir · rotation = basis · diag(magnitudes)`
/// with `basis` orthonormal. Read at the representative `at · rotation`, the
/// direction is `Δ̄ · sin Φ` whenever every magnitude is at most one.
#[derive(Debug, Clone)]
pub struct FactoredDirection {
    pub basis: Matrix,
    pub magnitudes: Vec<f64>,
    pub rotation: Matrix,
}

impl FactoredDirection {
    /// The angles `Φ`, when the direction is short enough to have them.
    pub fn angles(&self) -> Option<Vec<f64>> {
        self.magnitudes
            .iter()
            .map(|&s| (s <= 1.0).then(|| libm::asin(s)))
            .collect()
    }
}

impl TangentVector {
    /// Checks `atᵀ·dir = 0` within `1e-10 · max(1, ‖dir‖)`.
    pub fn new(at: SubspacePoint, dir: Matrix) -> Result<Self> {
        if dir.shape() != at.rep.shape() {
            return Err(Error::ShapeMismatch {
                expected: at.rep.shape(),
                found: dir.shape(),
            });
        }
        let normal = at.rep.tr_mul(&dir).amax();
        if normal > 1e-10 * dir.norm().max(1.0) {
            return Err(Error::invalid("direction is not tangent at the base point"));
        }
        Ok(Self { at, dir })
    }

    pub(crate) fn from_parts_unchecked(at: SubspacePoint, dir: Matrix) -> Self {
        Self { at, dir }
    }

    pub fn zero(at: SubspacePoint) -> Self {
        let dir = Matrix::zeros(at.ambient_dim(), at.rank());
        Self { at, dir }
    }

    pub fn at(&self) -> &SubspacePoint {
        &self.at
    }

    pub fn dir(&self) -> &Matrix {
        &self.dir
    }

    pub fn norm(&self) -> f64 {
        self.dir.norm()
    }

    /// Riemannian metric `tr(selfᵀ other)`; both must sit at the same representative.
    pub fn inner(&self, other: &TangentVector) -> f64 {
        linalg::frob_dot(&self.dir, &other.dir)
    }

    pub fn scaled(&self, factor: f64) -> TangentVector {
        TangentVector {
            at: self.at.clone(),
            dir: &self.dir * factor,
        }
    }

    pub fn factored(&self) -> FactoredDirection {
        let svd = linalg::thin_svd(&self.dir);
        FactoredDirection {
            basis: svd.u,
            magnitudes: svd.s,
            rotation: svd.v,
        }
    }

    /// The same tangent vector expressed at another representative of the
    /// same point: if `target = at · O` then the direction becomes `dir · O`.
    pub fn at_representative(&self, target: &SubspacePoint) -> Result<TangentVector> {
        self.at.check_same_shape(target)?;
        let o = self.at.rep.tr_mul(&target.rep);
        if linalg::orthonormality_residual(&o) > 1e-8 {
            return Err(Error::invalid("target representative spans a different subspace"));
        }
        Ok(TangentVector {
            at: target.clone(),
            dir: &self.dir * o,
        })
    }
}

/// Principal angles sorted ascending, each in `[0, π/2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSpectrum {
    angles: Vec<f64>,
}

impl AngleSpectrum {
    /// Sorts `angles` ascending; every entry must lie in `[0, π/2]`.
    pub fn new(mut angles: Vec<f64>) -> Result<Self> {
        if angles.iter().any(|a| !(0.0..=FRAC_PI_2).contains(a)) {
            return Err(Error::invalid("principal angles must lie in [0, π/2]"));
        }
        angles.sort_by(f64::total_cmp);
        Ok(Self { angles })
    }

    fn from_paired(mut angles: Vec<f64>) -> Self {
        // Rounding can break monotonicity by an ulp; the pairing with the
        // alignment columns must not change, so clamp instead of sorting.
        for i in 0..angles.len() {
            angles[i] = angles[i].clamp(0.0, FRAC_PI_2);
            if i > 0 && angles[i] < angles[i - 1] {
                angles[i] = angles[i - 1];
            }
        }
        Self { angles }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.angles.last().copied().unwrap_or(0.0)
    }

    pub fn cosines(&self) -> Vec<f64> {
        self.angles.iter().map(|&t| libm::cos(t)).collect()
    }

    pub fn sines(&self) -> Vec<f64> {
        self.angles.iter().map(|&t| libm::sin(t)).collect()
    }

    /// `‖Θ‖_F`.
    pub fn frob_norm(&self) -> f64 {
        libm::sqrt(self.angles.iter().map(|t| t * t).sum())
    }
}

/// Representatives of `[X]` and `[U]` put in principal position.
///
/// `X_p = X·P`, `U_p = U·Q` with `X_pᵀU_p = cos Θ`, the orthonormal normal
/// component `Δ_p` with `Δ_p sin Θ = (I − X_p X_pᵀ) U_p`, and `Ξ = QᵀΣ²Q`.
#[derive(Debug, Clone)]
pub struct PrincipalAlignment {
    x_aligned: SubspacePoint,
    u_aligned: SubspacePoint,
    theta: AngleSpectrum,
    delta: Matrix,
    p: Matrix,
    q: Matrix,
    xi: Matrix,
    xi_diag: Vec<f64>,
}

impl PrincipalAlignment {
    pub fn x_aligned(&self) -> &SubspacePoint {
        &self.x_aligned
    }

    pub fn u_aligned(&self) -> &SubspacePoint {
        &self.u_aligned
    }

    pub fn theta(&self) -> &AngleSpectrum {
        &self.theta
    }

    /// `Δ_p`, orthonormal and orthogonal to `X_p` (when `m ≥ 2r`).
    pub fn delta(&self) -> &Matrix {
        &self.delta
    }

    /// Rotation taking the caller's `x` to `X_p`.
    pub fn p(&self) -> &Matrix {
        &self.p
    }

    /// Rotation with `U_p = U·Q`.
    pub fn q(&self) -> &Matrix {
        &self.q
    }

    /// `Ξ = QᵀΣ²Q`.
    pub fn xi(&self) -> &Matrix {
        &self.xi
    }

    /// Diagonal entries `ξ_i` of `Ξ`.
    pub fn xi_diag(&self) -> &[f64] {
        &self.xi_diag
    }
}

struct PairAlignment {
    p: Matrix,
    q: Matrix,
    x_p: Matrix,
    y_p: Matrix,
    theta: AngleSpectrum,
    delta: Matrix,
}

fn align_pair(x: &SubspacePoint, y: &SubspacePoint) -> Result<PairAlignment> {
    x.check_same_shape(y)?;
    let cross = x.rep.tr_mul(&y.rep);
    let svd = linalg::thin_svd(&cross);
    let x_p = &x.rep * &svd.u;
    let y_p = &y.rep * &svd.v;

    let normal = &y_p - &x_p * x_p.tr_mul(&y_p);
    let sines: Vec<f64> = (0..normal.ncols()).map(|j| normal.column(j).norm()).collect();
    let angles: Vec<f64> = svd
        .s
        .iter()
        .zip(&sines)
        .map(|(&c, &s)| {
            if c >= FRAC_1_SQRT_2 {
                libm::asin(s.min(1.0))
            } else {
                libm::acos(c.clamp(0.0, 1.0))
            }
        })
        .collect();
    let theta = AngleSpectrum::from_paired(angles);
    let delta = normal_basis(&x_p, &normal, &sines);

    Ok(PairAlignment {
        p: svd.u,
        q: svd.v,
        x_p,
        y_p,
        theta,
        delta,
    })
}

/// Orthonormal `Δ` with `Δ_i ∝ normal_i` wherever the sine is above
/// [`SINE_FLOOR`]; the remaining columns are completed deterministically from
/// the standard basis, orthogonal to `x_p` and to the columns already chosen.
fn normal_basis(x_p: &Matrix, normal: &Matrix, sines: &[f64]) -> Matrix {
    let (m, r) = normal.shape();
    let mut delta = Matrix::zeros(m, r);
    let mut taken: Vec<usize> = Vec::with_capacity(r);

    // Largest sines first: they are the best conditioned directions.
    let mut order: Vec<usize> = (0..r).filter(|&j| sines[j] > SINE_FLOOR).collect();
    order.sort_by(|&a, &b| sines[b].total_cmp(&sines[a]).then(a.cmp(&b)));

    for &j in &order {
        let mut col = normal.column(j).into_owned() / sines[j];
        for _ in 0..2 {
            let proj = x_p.tr_mul(&col);
            col -= x_p * proj;
            for &k in &taken {
                let d = delta.column(k).dot(&col);
                col -= delta.column(k) * d;
            }
        }
        let norm = col.norm();
        if norm > 0.0 {
            delta.set_column(j, &(col / norm));
            taken.push(j);
        }
    }

    for j in 0..r {
        if taken.contains(&j) {
            continue;
        }
        if let Some(col) = complement_direction(x_p, &delta, &taken) {
            delta.set_column(j, &col);
            taken.push(j);
        }
    }
    delta
}

fn complement_direction(
    x_p: &Matrix,
    delta: &Matrix,
    taken: &[usize],
) -> Option<nalgebra::DVector<f64>> {
    let m = x_p.nrows();
    let mut best: Option<(f64, nalgebra::DVector<f64>)> = None;
    for k in 0..m {
        let mut col = nalgebra::DVector::<f64>::zeros(m);
        col[k] = 1.0;
        for _ in 0..2 {
            let proj = x_p.tr_mul(&col);
            col -= x_p * proj;
            for &t in taken {
                let d = delta.column(t).dot(&col);
                col -= delta.column(t) * d;
            }
        }
        let norm = col.norm();
        if best.as_ref().is_none_or(|(b, _)| norm > *b) {
            best = Some((norm, col));
        }
        if norm >= FRAC_1_SQRT_2 {
            break;
        }
    }
    match best {
        Some((norm, col)) if norm > 1e-6 => Some(col / norm),
        _ => None,
    }
}

/// Orthonormal basis of `col(a)`; `a` must have full column rank.
///
/// Uses Householder QR with a positive `R` diagonal, so inputs that are
/// already orthonormal are returned unchanged up to rounding.
pub fn orthonormalize(a: &Matrix) -> Result<SubspacePoint> {
    check_dims(a.nrows(), a.ncols())?;
    let s = linalg::singular_values(a);
    let largest = s.first().copied().unwrap_or(0.0);
    let rank = s.iter().filter(|&&v| v > 1e-12 * largest).count();
    if largest == 0.0 || rank < a.ncols() {
        return Err(Error::RankDeficient {
            rank: if largest == 0.0 { 0 } else { rank },
            cols: a.ncols(),
        });
    }
    Ok(SubspacePoint::from_rep_unchecked(linalg::qr_orthonormal(a)))
}

/// `(I − x xᵀ) d`.
pub fn project_tangent(x: &SubspacePoint, d: &Matrix) -> Result<TangentVector> {
    if d.shape() != x.rep.shape() {
        return Err(Error::ShapeMismatch {
            expected: x.rep.shape(),
            found: d.shape(),
        });
    }
    let dir = d - &x.rep * x.rep.tr_mul(d);
    Ok(TangentVector::from_parts_unchecked(x.clone(), dir))
}

pub fn principal_angles(x: &SubspacePoint, y: &SubspacePoint) -> Result<AngleSpectrum> {
    Ok(align_pair(x, y)?.theta)
}

/// Aligns `x` to the ground-truth subspace `u` whose singular values are `sigma`.
pub fn principal_align(
    x: &SubspacePoint,
    u: &SubspacePoint,
    sigma: &[f64],
) -> Result<PrincipalAlignment> {
    if sigma.len() != u.rank() {
        return Err(Error::ShapeMismatch {
            expected: (u.rank(), 1),
            found: (sigma.len(), 1),
        });
    }
    let pair = align_pair(x, u)?;
    let sigma_sq: Vec<f64> = sigma.iter().map(|s| s * s).collect();
    // Ξ = Qᵀ Σ² Q
    let xi = pair.q.tr_mul(&linalg::diag_mul_left(&sigma_sq, &pair.q));
    let xi = (&xi + xi.transpose()) * 0.5;
    let xi_diag = (0..xi.nrows()).map(|i| xi[(i, i)]).collect();
    Ok(PrincipalAlignment {
        x_aligned: SubspacePoint::from_rep_unchecked(pair.x_p),
        u_aligned: SubspacePoint::from_rep_unchecked(pair.y_p),
        theta: pair.theta,
        delta: pair.delta,
        p: pair.p,
        q: pair.q,
        xi,
        xi_diag,
    })
}

/// Arc-length, chordal and projection distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distances {
    pub arc: f64,
    pub chordal: f64,
    pub projection: f64,
}

impl Distances {
    pub fn from_angles(theta: &AngleSpectrum) -> Self {
        let mut arc = 0.0;
        let mut chordal = 0.0;
        let mut projection = 0.0;
        for &t in theta.as_slice() {
            let half = 2.0 * libm::sin(t / 2.0);
            let s = libm::sin(t);
            arc += t * t;
            chordal += half * half;
            projection += s * s;
        }
        Self {
            arc: libm::sqrt(arc),
            chordal: libm::sqrt(chordal),
            projection: libm::sqrt(projection),
        }
    }
}

pub fn distances(x: &SubspacePoint, y: &SubspacePoint) -> Result<Distances> {
    Ok(Distances::from_angles(&principal_angles(x, y)?))
}

/// The shortest geodesic `G(t) = X_p cos(tΘ) + Δ_p sin(tΘ)` between two points.
#[derive(Debug, Clone)]
pub struct GeodesicSegment {
    start_aligned: Matrix,
    delta: Matrix,
    theta: AngleSpectrum,
}

impl GeodesicSegment {
    pub fn start_aligned(&self) -> &Matrix {
        &self.start_aligned
    }

    pub fn delta(&self) -> &Matrix {
        &self.delta
    }

    pub fn theta(&self) -> &AngleSpectrum {
        &self.theta
    }

    /// Length of the segment, `‖Θ‖_F`.
    pub fn length(&self) -> f64 {
        self.theta.frob_norm()
    }

    /// Point at parameter `t`; values outside `[0, 1]` extend the geodesic.
    pub fn eval(&self, t: f64) -> SubspacePoint {
        let cos: Vec<f64> = self.theta.as_slice().iter().map(|&a| libm::cos(t * a)).collect();
        let sin: Vec<f64> = self.theta.as_slice().iter().map(|&a| libm::sin(t * a)).collect();
        let g = diag_mul_right(&self.start_aligned, &cos) + diag_mul_right(&self.delta, &sin);
        SubspacePoint::from_rep_unchecked(reorthonormalize(g))
    }

    /// True when `t` lies on the segment proper rather than its extension.
    pub fn is_within_segment(t: f64) -> bool {
        (0.0..=1.0).contains(&t)
    }
}

fn reorthonormalize(g: Matrix) -> Matrix {
    if linalg::orthonormality_residual(&g) > 1e-12 {
        linalg::qr_orthonormal(&g)
    } else {
        g
    }
}

/// Shortest geodesic from `x` to `y`; unique only while every principal angle
/// stays below π/2.
pub fn geodesic(x: &SubspacePoint, y: &SubspacePoint) -> Result<GeodesicSegment> {
    let pair = align_pair(x, y)?;
    let max_angle = pair.theta.max();
    if max_angle >= FRAC_PI_2 - UNIQUENESS_MARGIN {
        return Err(Error::NotUnique { max_angle });
    }
    Ok(GeodesicSegment {
        start_aligned: pair.x_p,
        delta: pair.delta,
        theta: pair.theta,
    })
}

pub fn eval_geodesic(g: &GeodesicSegment, t: f64) -> SubspacePoint {
    g.eval(t)
}

/// Exponential map: with `dir = W S Rᵀ`, returns `at R cos(S) Rᵀ + W sin(S) Rᵀ`.
pub fn exp_map(v: &TangentVector) -> SubspacePoint {
    let svd = linalg::thin_svd(&v.dir);
    let cos: Vec<f64> = svd.s.iter().map(|&s| libm::cos(s)).collect();
    let sin: Vec<f64> = svd.s.iter().map(|&s| libm::sin(s)).collect();
    let moved =
        diag_mul_right(&(&v.at.rep * &svd.v), &cos) + diag_mul_right(&svd.u, &sin);
    let out = moved * svd.v.transpose();
    SubspacePoint::from_rep_unchecked(reorthonormalize(out))
}

/// Inverse of [`exp_map`] on the injectivity domain: the tangent vector at `x`
/// (in the caller's representative) whose geodesic reaches `y` at time one.
pub fn log_map(x: &SubspacePoint, y: &SubspacePoint) -> Result<TangentVector> {
    let pair = align_pair(x, y)?;
    let max_angle = pair.theta.max();
    if max_angle >= FRAC_PI_2 - UNIQUENESS_MARGIN {
        return Err(Error::NotUnique { max_angle });
    }
    // Δ_p Θ lives at X_p = x P; at x it reads Δ_p Θ Pᵀ.
    let dir = diag_mul_right(&pair.delta, pair.theta.as_slice()) * pair.p.transpose();
    let dir = &dir - &x.rep * x.rep.tr_mul(&dir);
    Ok(TangentVector::from_parts_unchecked(x.clone(), dir))
}

/// Membership in `N(u, φ)`: every principal angle between `x` and `u` is at most `φ`.
pub fn cap_contains(u: &SubspacePoint, x: &SubspacePoint, phi: f64) -> Result<bool> {
    u.check_same_shape(x)?;
    if !(0.0..FRAC_PI_2).contains(&phi) {
        return Err(Error::invalid("cap radius must lie in [0, π/2)"));
    }
    let s = linalg::singular_values(&x.rep.tr_mul(&u.rep));
    let smallest = s.last().copied().unwrap_or(1.0);
    Ok(smallest >= libm::cos(phi) - 1e-12)
}

/// Seeded orthonormal `m × r` basis inside the orthogonal complement of `col(u)`.
pub fn complement_basis(u: &SubspacePoint, seed: u64) -> Result<Matrix> {
    let (m, r) = u.rep.shape();
    if m - r < r {
        return Err(Error::InsufficientDim { m, r });
    }
    let mut rng = rng_from_seed(seed);
    let g = linalg::gaussian_matrix(m, r, &mut rng);
    let w = linalg::project_out(&u.rep, &g);
    Ok(linalg::qr_orthonormal(&w))
}

/// `u cos Θ + w sin Θ` for a complement basis `w` (see [`complement_basis`]).
/// The angle in column `i` is `target[i]`; `target` need not be sorted.
pub fn point_with_angles_in(u: &SubspacePoint, target: &[f64], w: &Matrix) -> Result<SubspacePoint> {
    if target.len() != u.rank() {
        return Err(Error::ShapeMismatch {
            expected: (u.rank(), 1),
            found: (target.len(), 1),
        });
    }
    if w.shape() != u.rep.shape() {
        return Err(Error::ShapeMismatch {
            expected: u.rep.shape(),
            found: w.shape(),
        });
    }
    if target.iter().any(|a| !(0.0..=FRAC_PI_2).contains(a)) {
        return Err(Error::invalid("target angles must lie in [0, π/2]"));
    }
    let cos: Vec<f64> = target.iter().map(|&t| libm::cos(t)).collect();
    let sin: Vec<f64> = target.iter().map(|&t| libm::sin(t)).collect();
    let x = diag_mul_right(&u.rep, &cos) + diag_mul_right(w, &sin);
    Ok(SubspacePoint::from_rep_unchecked(reorthonormalize(x)))
}

/// A point whose principal angles to `u` are exactly `target`.
pub fn point_with_angles(u: &SubspacePoint, target: &[f64], seed: u64) -> Result<SubspacePoint> {
    let w = complement_basis(u, seed)?;
    point_with_angles_in(u, target, &w)
}

/// Uniformly distributed point of `Gr(m, r)`: orthonormalized Gaussian matrix.
pub fn random_point(m: usize, r: usize, seed: u64) -> Result<SubspacePoint> {
    check_dims(m, r)?;
    let mut rng = rng_from_seed(seed);
    let g = linalg::gaussian_matrix(m, r, &mut rng);
    orthonormalize(&g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, FRAC_PI_8, PI};

    fn line(angle: f64) -> SubspacePoint {
        SubspacePoint::new(Matrix::from_column_slice(2, 1, &[libm::cos(angle), libm::sin(angle)]))
            .unwrap()
    }

    fn projector(a: &Matrix) -> Matrix {
        a * a.transpose()
    }

    #[test]
    fn orthonormalize_keeps_orthonormal_input() {
        let a = Matrix::identity(3, 2);
        let x = orthonormalize(&a).unwrap();
        assert!((x.rep() - &a).amax() < 1e-15);
    }

    #[test]
    fn orthonormalize_removes_column_scaling() {
        let a = Matrix::from_row_slice(3, 2, &[2.0, 0.0, 0.0, 3.0, 0.0, 0.0]);
        let x = orthonormalize(&a).unwrap();
        let expected = Matrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!((x.rep() - expected).amax() < 1e-15);
    }

    #[test]
    fn orthonormalize_matches_normal_equation_projector() {
        let mut rng = rng_from_seed(3);
        let a = linalg::gaussian_matrix(8, 3, &mut rng);
        let x = orthonormalize(&a).unwrap();
        assert!(linalg::orthonormality_residual(x.rep()) < 1e-12);
        let gram_inv = a.tr_mul(&a).try_inverse().unwrap();
        let oracle = &a * gram_inv * a.transpose();
        assert!((projector(x.rep()) - oracle).amax() < 1e-12);
    }

    #[test]
    fn orthonormalize_rejects_rank_deficiency() {
        let a = Matrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        assert!(matches!(orthonormalize(&a), Err(Error::RankDeficient { rank: 1, cols: 2 })));
        assert!(matches!(
            orthonormalize(&Matrix::zeros(4, 2)),
            Err(Error::RankDeficient { rank: 0, .. })
        ));
    }

    #[test]
    fn new_rejects_non_orthonormal() {
        let a = Matrix::from_row_slice(2, 1, &[1.0, 1.0]);
        assert!(matches!(SubspacePoint::new(a), Err(Error::NotOrthonormal { .. })));
    }

    #[test]
    fn tangent_projection_cases() {
        let x = random_point(6, 2, 1).unwrap();
        let inside = x.rep() * Matrix::from_row_slice(2, 2, &[1.0, 2.0, -3.0, 0.5]);
        assert!(project_tangent(&x, &inside).unwrap().dir().amax() < 1e-14);

        let mut rng = rng_from_seed(2);
        let d = linalg::gaussian_matrix(6, 2, &mut rng);
        let v = project_tangent(&x, &d).unwrap();
        assert!(x.rep().tr_mul(v.dir()).amax() < 1e-14);
        // d − dir lies in col(x)
        let rest = &d - v.dir();
        assert!((&rest - projector(x.rep()) * &rest).amax() < 1e-14);

        let again = project_tangent(&x, v.dir()).unwrap();
        assert!((again.dir() - v.dir()).amax() < 1e-14);
    }

    #[test]
    fn tangent_vector_rejects_normal_component() {
        let x = random_point(5, 2, 4).unwrap();
        assert!(TangentVector::new(x.clone(), x.rep().clone()).is_err());
    }

    #[test]
    fn planar_angle() {
        let theta = principal_angles(&line(0.0), &line(FRAC_PI_4)).unwrap();
        assert!((theta.as_slice()[0] - FRAC_PI_4).abs() < 1e-15);
        let same = principal_angles(&line(0.3), &line(0.3)).unwrap();
        assert_eq!(same.as_slice(), &[0.0]);
    }

    /// Brute-force maximization of |⟨x a, y b⟩| over unit coefficient vectors,
    /// then deflation for the second angle. Gr(4, 2) only.
    fn variational_angles(x: &Matrix, y: &Matrix) -> [f64; 2] {
        let unit = |t: f64| nalgebra::DVector::from_vec(alloc::vec![libm::cos(t), libm::sin(t)]);
        let objective = |a: f64, b: f64| (x * unit(a)).dot(&(y * unit(b))).abs();

        let search = |f: &dyn Fn(f64, f64) -> f64| {
            let n = 400;
            let (mut best, mut ba, mut bb) = (-1.0, 0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    let (a, b) = (PI * i as f64 / n as f64, PI * j as f64 / n as f64);
                    let v = f(a, b);
                    if v > best {
                        (best, ba, bb) = (v, a, b);
                    }
                }
            }
            let mut step = PI / n as f64;
            while step > 1e-13 {
                let mut improved = false;
                for (da, db) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
                    let v = f(ba + da, bb + db);
                    if v > best {
                        (best, ba, bb) = (v, ba + da, bb + db);
                        improved = true;
                    }
                }
                if !improved {
                    step *= 0.5;
                }
            }
            (best, ba, bb)
        };

        let (c1, a1, b1) = search(&objective);
        // The second pair is orthogonal to the first within each subspace.
        let (a2, b2) = (a1 + PI / 2.0, b1 + PI / 2.0);
        let c2 = objective(a2, b2);
        [libm::acos(c1.min(1.0)), libm::acos(c2.min(1.0))]
    }

    #[test]
    fn angles_match_variational_oracle() {
        for seed in 0..5 {
            let x = random_point(4, 2, 10 + seed).unwrap();
            let y = random_point(4, 2, 20 + seed).unwrap();
            let theta = principal_angles(&x, &y).unwrap();
            let oracle = variational_angles(x.rep(), y.rep());
            for (a, b) in theta.as_slice().iter().zip(oracle) {
                assert!((a - b).abs() < 1e-6, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn alignment_of_identical_points() {
        let x = random_point(7, 3, 5).unwrap();
        let al = principal_align(&x, &x, &[3.0, 2.0, 1.0]).unwrap();
        assert!(al.theta().as_slice().iter().all(|&t| t < 1e-14));
        let p = al.p();
        assert!((al.x_aligned().rep() - x.rep() * p).amax() < 1e-14);
        assert!((al.u_aligned().rep() - x.rep() * al.q()).amax() < 1e-14);
        // Ξ similar to Σ²: same trace and same eigenvalues
        let mut eig: Vec<f64> = al.xi().clone().symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        for (a, b) in eig.iter().zip([1.0, 4.0, 9.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn alignment_orthogonal_rank_one() {
        let x = SubspacePoint::new(Matrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0])).unwrap();
        let u = SubspacePoint::new(Matrix::from_column_slice(3, 1, &[0.0, 0.0, 1.0])).unwrap();
        let al = principal_align(&x, &u, &[libm::sqrt(2.0)]).unwrap();
        assert!((al.theta().as_slice()[0] - FRAC_PI_2).abs() < 1e-15);
        assert!((al.delta() - al.u_aligned().rep()).amax() < 1e-15);
        assert!((al.delta().abs() - u.rep()).amax() < 1e-15);
        assert!((al.xi_diag()[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn alignment_invariants_random() {
        let sigma = [2.0, 1.5, 1.0];
        let x = random_point(10, 3, 8).unwrap();
        let u = random_point(10, 3, 9).unwrap();
        let al = principal_align(&x, &u, &sigma).unwrap();
        let cos = al.theta().cosines();
        let sin = al.theta().sines();
        let cross = al.x_aligned().rep().tr_mul(al.u_aligned().rep());
        assert!((cross - Matrix::from_diagonal(&nalgebra::DVector::from_vec(cos.clone()))).amax() < 1e-9);
        let rebuilt = diag_mul_right(al.x_aligned().rep(), &cos) + diag_mul_right(al.delta(), &sin);
        assert!((rebuilt - al.u_aligned().rep()).amax() < 1e-9);
        assert!(linalg::orthonormality_residual(al.delta()) < 1e-12);
        assert!(al.x_aligned().rep().tr_mul(al.delta()).amax() < 1e-12);
        for &xi in al.xi_diag() {
            assert!((1.0 - 1e-12..=4.0 + 1e-12).contains(&xi));
        }
    }

    #[test]
    fn zero_angle_columns_are_completed() {
        let u = random_point(8, 3, 1).unwrap();
        let x = point_with_angles(&u, &[0.0, 0.0, 0.7], 2).unwrap();
        let al = principal_align(&x, &u, &[1.0, 1.0, 1.0]).unwrap();
        assert!(linalg::orthonormality_residual(al.delta()) < 1e-12);
        assert!(al.x_aligned().rep().tr_mul(al.delta()).amax() < 1e-12);
    }

    #[test]
    fn distances_known_values() {
        let d = distances(&line(0.0), &line(0.0)).unwrap();
        assert_eq!((d.arc, d.chordal, d.projection), (0.0, 0.0, 0.0));
        let d = distances(&line(0.0), &line(FRAC_PI_2)).unwrap();
        assert!((d.arc - FRAC_PI_2).abs() < 1e-15);
        assert!((d.chordal - libm::sqrt(2.0)).abs() < 1e-15);
        assert!((d.projection - 1.0).abs() < 1e-15);
    }

    #[test]
    fn distance_ordering_and_symmetry() {
        for seed in 0..100 {
            let x = random_point(6, 3, 1000 + seed).unwrap();
            let y = random_point(6, 3, 2000 + seed).unwrap();
            let a = distances(&x, &y).unwrap();
            let b = distances(&y, &x).unwrap();
            assert!(a.projection <= a.chordal + 1e-15 && a.chordal <= a.arc + 1e-15);
            assert!(a.arc <= libm::sqrt(3.0) * FRAC_PI_2);
            assert!((a.arc - b.arc).abs() < 1e-12);
            assert!((a.chordal - b.chordal).abs() < 1e-12);
            assert!((a.projection - b.projection).abs() < 1e-12);
        }
    }

    #[test]
    fn geodesic_planar_midpoint() {
        let g = geodesic(&line(0.0), &line(FRAC_PI_3)).unwrap();
        let mid = eval_geodesic(&g, 0.5);
        let theta = principal_angles(&mid, &line(FRAC_PI_6)).unwrap();
        assert!(theta.as_slice()[0] < 1e-12);
        let start = principal_angles(&eval_geodesic(&g, 0.0), &line(0.0)).unwrap();
        let end = principal_angles(&eval_geodesic(&g, 1.0), &line(FRAC_PI_3)).unwrap();
        assert!(start.max() < 1e-14 && end.max() < 1e-14);
    }

    #[test]
    fn constant_geodesic() {
        let x = random_point(5, 2, 4).unwrap();
        let g = geodesic(&x, &x).unwrap();
        assert!(g.length() < 1e-14);
        assert!(principal_angles(&eval_geodesic(&g, 0.6), &x).unwrap().max() < 1e-12);
    }

    #[test]
    fn geodesic_rejects_orthogonal_endpoints() {
        assert!(matches!(
            geodesic(&line(0.0), &line(FRAC_PI_2)),
            Err(Error::NotUnique { .. })
        ));
    }

    #[test]
    fn geodesic_polyline_length() {
        let x = random_point(8, 2, 30).unwrap();
        let y = point_with_angles(&x, &[0.4, 1.1], 31).unwrap();
        let g = geodesic(&x, &y).unwrap();
        let steps = 1000;
        let mut length = 0.0;
        let mut prev = eval_geodesic(&g, 0.0);
        for k in 1..=steps {
            let next = eval_geodesic(&g, k as f64 / steps as f64);
            length += distances(&prev, &next).unwrap().chordal;
            prev = next;
        }
        assert!((length - distances(&x, &y).unwrap().arc).abs() < 1e-4);
    }

    #[test]
    fn geodesic_midpoint_halves_angles() {
        let x = random_point(4, 2, 40).unwrap();
        let y = point_with_angles(&x, &[0.3, 0.9], 41).unwrap();
        let g = geodesic(&x, &y).unwrap();
        let mid = principal_angles(&eval_geodesic(&g, 0.5), &x).unwrap();
        for (a, b) in mid.as_slice().iter().zip(g.theta().as_slice()) {
            assert!((a - b / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exp_map_cases() {
        let x = random_point(5, 2, 50).unwrap();
        let same = exp_map(&TangentVector::zero(x.clone()));
        assert!((same.rep() - x.rep()).amax() < 1e-15);

        let base = line(0.0);
        let theta = 0.8;
        let v = TangentVector::new(base, Matrix::from_column_slice(2, 1, &[0.0, theta])).unwrap();
        let moved = exp_map(&v);
        assert!(principal_angles(&moved, &line(theta)).unwrap().max() < 1e-12);
    }

    #[test]
    fn log_map_cases() {
        let x = random_point(6, 2, 60).unwrap();
        assert!(log_map(&x, &x).unwrap().norm() < 1e-14);
        let theta = 0.9;
        assert!((log_map(&line(0.0), &line(theta)).unwrap().norm() - theta).abs() < 1e-14);

        for seed in 0..20 {
            let x = random_point(6, 2, 100 + seed).unwrap();
            let y = random_point(6, 2, 200 + seed).unwrap();
            let log = log_map(&x, &y).unwrap();
            assert!((log.norm() - distances(&x, &y).unwrap().arc).abs() < 1e-9);
            assert!(x.rep().tr_mul(log.dir()).amax() < 1e-12);
            let back = exp_map(&log);
            assert!(distances(&back, &y).unwrap().arc < 1e-8);
        }
    }

    #[test]
    fn cap_membership() {
        let x = random_point(5, 2, 70).unwrap();
        assert!(cap_contains(&x, &x, 0.0).unwrap());

        let u = line(FRAC_PI_2);
        let x = line(FRAC_PI_8);
        assert!(cap_contains(&u, &x, 3.0 * FRAC_PI_8).unwrap());
        assert!(!cap_contains(&u, &x, FRAC_PI_4).unwrap());

        let u = random_point(8, 2, 71).unwrap();
        let x = point_with_angles(&u, &[PI / 6.0, PI / 5.0], 72).unwrap();
        assert!(cap_contains(&u, &x, FRAC_PI_4).unwrap());
        assert!(!cap_contains(&u, &x, PI / 6.0 - 0.01).unwrap());
    }

    #[test]
    fn point_with_angles_cases() {
        let u = random_point(10, 2, 80).unwrap();
        let same = point_with_angles(&u, &[0.0, 0.0], 81).unwrap();
        assert!(principal_angles(&same, &u).unwrap().max() < 1e-14);
        let orth = point_with_angles(&u, &[FRAC_PI_2, FRAC_PI_2], 82).unwrap();
        assert!(orth.rep().tr_mul(u.rep()).amax() < 1e-14);
        let x = point_with_angles(&u, &[PI / 6.0, PI / 3.0], 83).unwrap();
        let theta = principal_angles(&x, &u).unwrap();
        assert!((theta.as_slice()[0] - PI / 6.0).abs() < 1e-9);
        assert!((theta.as_slice()[1] - PI / 3.0).abs() < 1e-9);

        let small = random_point(3, 2, 84).unwrap();
        assert!(matches!(
            point_with_angles(&small, &[0.1, 0.2], 1),
            Err(Error::InsufficientDim { m: 3, r: 2 })
        ));
    }

    #[test]
    fn random_point_is_deterministic_and_orthonormal() {
        let a = random_point(1000, 6, 99).unwrap();
        let b = random_point(1000, 6, 99).unwrap();
        assert_eq!(a, b);
        assert!(linalg::orthonormality_residual(a.rep()) < 1e-12);
    }

    #[test]
    fn random_point_second_moment() {
        let samples = 2000;
        let mut mean = Matrix::zeros(4, 4);
        for seed in 0..samples {
            let x = random_point(4, 1, 5000 + seed).unwrap();
            mean += projector(x.rep());
        }
        mean /= samples as f64;
        assert!((mean - Matrix::identity(4, 4) * 0.25).amax() < 0.05);
    }

    #[test]
    fn representative_invariance() {
        let x = random_point(7, 3, 90).unwrap();
        let y = random_point(7, 3, 91).unwrap();
        let o = random_point(3, 3, 92).unwrap().into_rep();
        let xo = x.with_rotation(&o).unwrap();
        let a = principal_angles(&x, &y).unwrap();
        let b = principal_angles(&xo, &y).unwrap();
        for (s, t) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((s - t).abs() < 1e-10);
        }
        let da = distances(&x, &y).unwrap();
        let db = distances(&xo, &y).unwrap();
        assert!((da.arc - db.arc).abs() < 1e-10);
    }
}
