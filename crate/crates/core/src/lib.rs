//! Matrix completion viewed as optimization over the Grassmann manifold.
//!
//! A rank-`r` matrix `M = U Σ Vᵀ` of size `m × n` is recovered by searching
//! over `r`-dimensional subspaces `[X] ∈ Gr(m, r)`. The right factor is
//! eliminated in closed form (or by per-column least squares when only the
//! entries in a mask `Ω` are observed), which leaves a cost on the manifold:
//!
//! ```text
//! f̄(X) = ½ ‖(I − X Xᵀ) M‖²_F                    (full observation)
//! f(X)  = (1/p) · min_Y ½ ‖(X Yᵀ − M)_Ω‖²        (partial observation)
//! ```
//!
//! The crate is organised bottom-up:
//!
//! - [`grassmann`]: representatives, tangent vectors, principal angles,
//!   principal alignment, distances, geodesics, exp/log maps, angle caps.
//! - [`fullcost`]: the fully observed cost with its gradient and Hessian in
//!   both the embedded form and the compact principal-angle form, critical
//!   point classification, escaping directions and convexity certificates.
//! - [`partialcost`]: observation masks and the partially observed cost.
//! - [`optimizer`]: fixed-step Riemannian gradient descent.
//! - [`experiments`]: landscape grids and sampling-probability sweeps.
//!
//! The crate is `no_std` (it needs `alloc`). The `std` feature only forwards
//! to dependencies; `parallel` evaluates Monte Carlo trials with rayon while
//! keeping results in index order.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod experiments;
pub mod fullcost;
pub mod grassmann;
mod linalg;
pub mod optimizer;
pub mod partialcost;
pub mod rng;

pub use error::{Error, Result};
pub use fullcost::GroundTruth;
pub use grassmann::{AngleSpectrum, PrincipalAlignment, SubspacePoint, TangentVector};
pub use partialcost::{ObservationMask, PartialProblem};

/// Dense column-major matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
