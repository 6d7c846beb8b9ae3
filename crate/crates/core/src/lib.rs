//! Monte Carlo laboratory for the mean outer radii of random polytopes.
//!
//! A random polytope `K_N` is the convex hull of `N` independent uniform
//! points of an isotropic convex body `K ⊂ R^n`. Its `k`-th mean outer
//! radius `R̃_k(K_N)` averages the outer radius of the projection of `K_N`
//! onto a Haar-random `k`-dimensional subspace, and is of order
//! `max{√k, √log N} L_K`. This crate provides:
//!
//! * [`bodies`]: exact volume-one isotropic cube, ball, cross-polytope and
//!   simplex models with closed-form `L_K`, support functions and radii;
//! * [`grassmann`]: Haar subspaces and flags, sphere marginal moments;
//! * [`radii`]: estimators of projected and mean outer radii;
//! * [`moments`]: the moment functionals `I_q(K, F)`, `w_p`, `h_{Z_q}` and
//!   the ratio checks built on them;
//! * [`gaussian`]: an exact quadrature oracle for `E max_j |G_j|`;
//! * [`harness`]: sweeps, reports, CSV/SVG output behind the CLI.
//!
//! Every numeric routine is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`. All randomness flows from
//! [`StreamKey`]s, so results are bit-reproducible for any thread count.

// `!(x > 0)` rejects NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bodies;
pub mod error;
pub mod estimate;
pub mod gaussian;
pub mod grassmann;
pub mod harness;
pub mod ks;
pub mod linalg;
pub mod moments;
pub mod quadrature;
pub mod radii;
pub mod scalar;
pub mod special;
pub mod stream;

pub use bodies::{make_body, BodyKind};
pub use error::{Error, Result};
pub use estimate::mean_and_stderr;
pub use scalar::Scalar;
pub use stream::{derive_stream, standard_normal, StreamKey};

pub type Body = bodies::Body<f64>;
pub type Body32 = bodies::Body<f32>;
pub type Estimate = estimate::Estimate<f64>;
pub type Estimate32 = estimate::Estimate<f32>;
pub type Matrix = linalg::Matrix<f64>;
pub type Subspace = grassmann::Subspace<f64>;
pub type Subspace32 = grassmann::Subspace<f32>;
pub type Flag = grassmann::Flag<f64>;
pub type PointCloud = radii::PointCloud<f64>;
pub type PointCloud32 = radii::PointCloud<f32>;
pub type RadiusProfile = radii::RadiusProfile<f64>;
