//! The fully observed cost `f̄(X) = ½‖(I − XXᵀ)M‖²_F` and its Riemannian calculus.
//!
//! Two independent routes are provided for every quantity: the embedded
//! formulas that only use `X` and the factors of `M`, and the compact
//! expressions in terms of the principal alignment `(X_p, U_p, Θ, Δ_p, Ξ)`:
//!
//! ```text
//! f̄(X)             = ½ tr[sin²Θ Ξ]
//! grad f̄(X_p)      = −Δ_p sinΘ Ξ cosΘ
//! hess f̄(X_p)[Δ,Δ] = tr[cosΘ ΔᵀΔ cosΘ Ξ] − tr[sinΘ Δ_pᵀΔ ΔᵀΔ_p sinΘ Ξ]
//! ```
//!
//! Since `V` has orthonormal columns, `‖A Vᵀ‖_F = ‖A‖_F`, so every embedded
//! evaluation works with the `m × r` factor `UΣ` instead of the dense `M`.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use crate::error::{Error, Result};
use crate::grassmann::{
    self, cap_contains, distances, log_map, principal_align, PrincipalAlignment, SubspacePoint,
    TangentVector,
};
use crate::linalg::{self, diag_mul_left, diag_mul_right};
use crate::rng::SeedStream;
use crate::Matrix;

/// Relative criticality tolerance: a point is critical when
/// `‖grad‖_F ≤ CRITICAL_GRAD_TOL · σ_max²`.
pub const CRITICAL_GRAD_TOL: f64 = 1e-8;

/// Distance (radians) within which a critical angle is rounded to 0 or π/2.
pub const ANGLE_ROUNDING: f64 = 0.1;

/// Ground truth `M = U Σ Vᵀ` with orthonormal `U` (`m × r`) and `V` (`n × r`).
#[derive(Debug, Clone)]
pub struct GroundTruth {
    u: SubspacePoint,
    sigma: Vec<f64>,
    v: Matrix,
    /// `U Σ`, the only part of `M` the fully observed cost depends on.
    left: Matrix,
}

impl GroundTruth {
    /// `sigma` must be strictly positive and sorted descending.
    pub fn new(u: SubspacePoint, sigma: Vec<f64>, v: Matrix) -> Result<Self> {
        let r = u.rank();
        if sigma.len() != r || v.ncols() != r {
            return Err(Error::ShapeMismatch {
                expected: (v.nrows(), r),
                found: (v.nrows(), v.ncols().min(sigma.len())),
            });
        }
        if sigma.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::invalid("singular values must be positive and finite"));
        }
        if sigma.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::invalid("singular values must be sorted descending"));
        }
        // V must be orthonormal for Σ to be the singular values of M.
        let v = SubspacePoint::new(v)?.into_rep();
        let left = diag_mul_right(u.rep(), &sigma);
        Ok(Self { u, sigma, v, left })
    }

    /// `U` and `V` drawn uniformly (substreams `truth.u` and `truth.v`).
    pub fn random(m: usize, n: usize, sigma: Vec<f64>, seeds: &SeedStream) -> Result<Self> {
        let r = sigma.len();
        let u = grassmann::random_point(m, r, seeds.seed("truth.u"))?;
        let v = grassmann::random_point(n, r, seeds.seed("truth.v"))?;
        GroundTruth::new(u, sigma, v.into_rep())
    }

    pub fn u(&self) -> &SubspacePoint {
        &self.u
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn v(&self) -> &Matrix {
        &self.v
    }

    pub fn m(&self) -> usize {
        self.u.ambient_dim()
    }

    pub fn n(&self) -> usize {
        self.v.nrows()
    }

    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn sigma_min(&self) -> f64 {
        *self.sigma.last().expect("rank ≥ 1")
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma[0]
    }

    /// `U Σ`.
    pub fn left_factor(&self) -> &Matrix {
        &self.left
    }

    /// `M_ij`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.left.row(i).dot(&self.v.row(j))
    }

    /// Dense `M`; only sensible for small problems.
    pub fn dense(&self) -> Matrix {
        &self.left * self.v.transpose()
    }

    /// `‖M‖²_F = Σ σ_i²`.
    pub fn frob_norm_sq(&self) -> f64 {
        self.sigma.iter().map(|s| s * s).sum()
    }

    /// Principal alignment of `x` against `[U]`.
    pub fn align(&self, x: &SubspacePoint) -> Result<PrincipalAlignment> {
        principal_align(x, &self.u, &self.sigma)
    }

    fn check_point(&self, x: &SubspacePoint) -> Result<()> {
        if x.rep().shape() != self.u.rep().shape() {
            return Err(Error::ShapeMismatch {
                expected: self.u.rep().shape(),
                found: x.rep().shape(),
            });
        }
        Ok(())
    }
}

/// `(I − XXᵀ) U Σ`.
fn normal_residual(gt: &GroundTruth, x: &Matrix) -> Matrix {
    let left = gt.left_factor();
    left - x * x.tr_mul(left)
}

/// `½ ‖(I − x xᵀ) M‖²_F`.
pub fn cost_full(gt: &GroundTruth, x: &SubspacePoint) -> Result<f64> {
    gt.check_point(x)?;
    Ok(0.5 * linalg::frob_norm_sq(&normal_residual(gt, x.rep())))
}

/// `½ tr[sin²Θ Ξ]`.
pub fn cost_full_compact(align: &PrincipalAlignment) -> f64 {
    let sines = align.theta().sines();
    0.5 * sines
        .iter()
        .zip(align.xi_diag())
        .map(|(s, xi)| s * s * xi)
        .sum::<f64>()
}

/// `−(I − x xᵀ) M Mᵀ x`.
pub fn grad_full(gt: &GroundTruth, x: &SubspacePoint) -> Result<TangentVector> {
    gt.check_point(x)?;
    let residual = normal_residual(gt, x.rep());
    // (I − xxᵀ) UΣ · (UΣ)ᵀ x
    let dir = -(residual * gt.left_factor().tr_mul(x.rep()));
    Ok(TangentVector::from_parts_unchecked(x.clone(), dir))
}

/// `−Δ_p sinΘ Ξ cosΘ`, a tangent vector at `X_p`.
pub fn grad_full_compact(align: &PrincipalAlignment) -> TangentVector {
    let sin = align.theta().sines();
    let cos = align.theta().cosines();
    let inner = diag_mul_right(&diag_mul_left(&sin, align.xi()), &cos);
    let dir = -(align.delta() * inner);
    TangentVector::from_parts_unchecked(align.x_aligned().clone(), dir)
}

/// Bounds `(σ_min⁴/4 ‖sin 2Θ‖², σ_max⁴/4 ‖sin 2Θ‖²)` on `‖grad f̄‖²`.
pub fn grad_norm_sq_bounds(gt: &GroundTruth, align: &PrincipalAlignment) -> (f64, f64) {
    let s2: f64 = align
        .theta()
        .as_slice()
        .iter()
        .map(|&t| {
            let s = libm::sin(2.0 * t);
            s * s
        })
        .sum();
    let lo = gt.sigma_min() * gt.sigma_min();
    let hi = gt.sigma_max() * gt.sigma_max();
    (lo * lo / 4.0 * s2, hi * hi / 4.0 * s2)
}

/// `−2⟨ΔΔᵀM, (I−XXᵀ)M⟩ + ‖(ΔXᵀ + XΔᵀ)M‖²_F` at the base point of `v`.
pub fn hess_quadform(gt: &GroundTruth, v: &TangentVector) -> Result<f64> {
    let x = v.at().rep();
    gt.check_point(v.at())?;
    let d = v.dir();
    let left = gt.left_factor();
    let residual = normal_residual(gt, x);
    let dt_left = d.tr_mul(left);
    let first = -2.0 * linalg::frob_dot(&(d * &dt_left), &residual);
    let sym = d * x.tr_mul(left) + x * &dt_left;
    Ok(first + linalg::frob_norm_sq(&sym))
}

/// Compact Hessian quadratic form. `v` may sit at any representative of the
/// aligned point; it is rotated to `X_p` first.
pub fn hess_compact(align: &PrincipalAlignment, v: &TangentVector) -> Result<f64> {
    let at_p = v.at_representative(align.x_aligned())?;
    let d = at_p.dir();
    let cos = align.theta().cosines();
    let sin = align.theta().sines();
    let xi = align.xi();

    let gram = d.tr_mul(d);
    let first = diag_mul_right(&diag_mul_left(&cos, &gram), &cos);
    let proj = align.delta().tr_mul(d); // Δ_pᵀΔ
    let second = diag_mul_right(&diag_mul_left(&sin, &(&proj * proj.transpose())), &sin);
    Ok(linalg::frob_dot(&first, xi) - linalg::frob_dot(&second, xi))
}

/// A Hessian evaluation along `direction`, by both routes.
#[derive(Debug, Clone)]
pub struct HessianReport {
    pub value: f64,
    pub compact_value: f64,
    pub direction: TangentVector,
}

impl HessianReport {
    pub fn agree(&self, rel_tol: f64) -> bool {
        let scale = self.value.abs().max(self.compact_value.abs()).max(f64::MIN_POSITIVE);
        (self.value - self.compact_value).abs() <= rel_tol * scale
    }
}

pub fn hessian_report(gt: &GroundTruth, direction: TangentVector) -> Result<HessianReport> {
    let align = gt.align(direction.at())?;
    let value = hess_quadform(gt, &direction)?;
    let compact_value = hess_compact(&align, &direction)?;
    Ok(HessianReport {
        value,
        compact_value,
        direction,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalKind {
    GlobalMin,
    StrictSaddle,
    NonCritical,
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub kind: CriticalKind,
    pub grad_norm: f64,
    /// Principal angles to `[U]`, ascending.
    pub angles: Vec<f64>,
    /// Angles rounded to `{0, π/2}` for critical points.
    pub pattern: Option<Vec<f64>>,
}

/// Default tolerance for [`classify_point`]: `1e-8 · σ_max²`.
pub fn default_grad_tol(gt: &GroundTruth) -> f64 {
    CRITICAL_GRAD_TOL * gt.sigma_max() * gt.sigma_max()
}

/// Critical points are exactly those with every angle in `{0, π/2}`; the
/// ones with an angle at π/2 are strict saddles.
pub fn classify_point(gt: &GroundTruth, x: &SubspacePoint, grad_tol: f64) -> Result<Classification> {
    if !(grad_tol > 0.0) {
        return Err(Error::invalid("gradient tolerance must be positive"));
    }
    let grad_norm = grad_full(gt, x)?.norm();
    let angles = grassmann::principal_angles(x, gt.u())?.as_slice().to_vec();
    if grad_norm > grad_tol {
        return Ok(Classification {
            kind: CriticalKind::NonCritical,
            grad_norm,
            angles,
            pattern: None,
        });
    }
    let mut pattern = Vec::with_capacity(angles.len());
    for &a in &angles {
        if a <= ANGLE_ROUNDING {
            pattern.push(0.0);
        } else if a >= FRAC_PI_2 - ANGLE_ROUNDING {
            pattern.push(FRAC_PI_2);
        } else {
            return Err(Error::AmbiguousCritical { angle: a });
        }
    }
    let kind = if angles.iter().all(|&a| a < FRAC_PI_4) {
        CriticalKind::GlobalMin
    } else {
        CriticalKind::StrictSaddle
    };
    Ok(Classification {
        kind,
        grad_norm,
        angles,
        pattern: Some(pattern),
    })
}

/// `Δ_crit = U_p sinΘ` at `X_p`: keeps the columns of `U_p` whose angle is π/2.
/// At a critical point the Hessian along it is `−tr[sin²Θ Ξ]`.
pub fn escaping_direction(align: &PrincipalAlignment) -> Result<TangentVector> {
    if align.theta().max() < FRAC_PI_2 - ANGLE_ROUNDING {
        return Err(Error::NotASaddle);
    }
    let raw = diag_mul_right(align.u_aligned().rep(), &align.theta().sines());
    grassmann::project_tangent(align.x_aligned(), &raw)
}

/// Outside the convex region: for the largest angle `θ_i > π/4`, the
/// direction `Δ_p e_i e_iᵀ` at `X_p` has Hessian `Ξ_ii (cos²θ_i − sin²θ_i) < 0`.
/// Returns the direction with that predicted value, or `None` when every
/// angle is at most π/4 (up to a rounding slack of 1e-9).
pub fn negative_curvature_direction(align: &PrincipalAlignment) -> Option<(TangentVector, f64)> {
    let theta = align.theta().as_slice();
    let (i, &t) = theta
        .iter()
        .enumerate()
        .filter(|(_, &t)| t > FRAC_PI_4 + 1e-9)
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    let x = align.x_aligned();
    let mut dir = Matrix::zeros(x.ambient_dim(), x.rank());
    dir.set_column(i, &align.delta().column(i));
    let (c, s) = (libm::cos(t), libm::sin(t));
    let predicted = align.xi_diag()[i] * (c * c - s * s);
    Some((TangentVector::from_parts_unchecked(x.clone(), dir), predicted))
}

/// `μ = σ_min² (cos²φ − sin²φ)`.
pub fn strong_convexity_modulus(gt: &GroundTruth, phi: f64) -> f64 {
    let (c, s) = (libm::cos(phi), libm::sin(phi));
    gt.sigma_min() * gt.sigma_min() * (c * c - s * s)
}

#[derive(Debug, Clone, Copy)]
pub struct ConvexityCertificate {
    /// `f̄(y)`.
    pub lhs: f64,
    /// `f̄(x) + ⟨grad f̄(x), log_x(y)⟩ + μ/2 · d_arc(x, y)²`.
    pub rhs: f64,
    pub holds: bool,
    pub mu: f64,
    /// Same bound with the first-order term `⟨grad f̄(X_p), (I − X_pX_pᵀ)Y_p⟩`
    /// for the principal-aligned pair; reported, not certified.
    pub aligned_rhs: f64,
}

/// Rounding slack for [`ConvexityCertificate::holds`], relative to the magnitudes involved.
pub const CERTIFICATE_SLACK: f64 = 1e-12;

/// Checks the strong geodesic convexity inequality on `N(U, φ)` for `φ < π/4`.
pub fn convexity_certificate(
    gt: &GroundTruth,
    x: &SubspacePoint,
    y: &SubspacePoint,
    phi: f64,
) -> Result<ConvexityCertificate> {
    if !(0.0..FRAC_PI_4).contains(&phi) {
        return Err(Error::invalid("cap radius must lie in [0, π/4)"));
    }
    if !cap_contains(gt.u(), x, phi)? {
        return Err(Error::OutsideCap { which: "x", phi });
    }
    if !cap_contains(gt.u(), y, phi)? {
        return Err(Error::OutsideCap { which: "y", phi });
    }
    let mu = strong_convexity_modulus(gt, phi);
    let fx = cost_full(gt, x)?;
    let fy = cost_full(gt, y)?;
    let grad = grad_full(gt, x)?;
    let log = log_map(x, y)?;
    let d_arc = distances(x, y)?.arc;
    let quad = 0.5 * mu * d_arc * d_arc;
    let rhs = fx + grad.inner(&log) + quad;

    let pair = principal_align(x, y, &alloc::vec![1.0; x.rank()])?;
    let x_p = pair.x_aligned().rep();
    let y_p = pair.u_aligned().rep();
    let grad_p = grad.dir() * pair.p();
    let normal = y_p - x_p * x_p.tr_mul(y_p);
    let aligned_rhs = fx + linalg::frob_dot(&grad_p, &normal) + quad;

    let slack = CERTIFICATE_SLACK * (1.0 + fy.abs() + rhs.abs());
    Ok(ConvexityCertificate {
        lhs: fy,
        rhs,
        holds: fy >= rhs - slack,
        mu,
        aligned_rhs,
    })
}
