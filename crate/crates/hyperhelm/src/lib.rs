//! Numerical laboratory for linear and nonlinear Helmholtz equations on
//! hyperbolic space and rotationally symmetric manifolds.
//!
//! The radial reduction of -Delta - kappa^2/4 - lambda^2 on such a manifold
//! is an ODE in the geodesic radius; this crate solves it, evaluates the
//! associated Green kernels and the limiting-absorption resolvent, builds
//! small nonlinear solutions by contraction and larger ones by a dual
//! variational search, and measures the L^r ball-norm growth that separates
//! r <= 2 from r > 2.

// negated float comparisons (`!(x > 0.0)`) are deliberate: they reject NaN
// along with the out-of-range sign, which `x <= 0.0` would let through
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// finite-difference stencils and dense-output tableaus read clearest with
// explicit indexing
#![allow(clippy::needless_range_loop)]
// `n % 2 == 0` is the ordinary parity test
#![allow(clippy::manual_is_multiple_of)]

pub mod config;
pub mod dopri;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod greens;
pub mod harness;
pub mod hypotheses;
pub mod interp;
pub mod nonlinear;
pub mod normscan;
pub mod profile;
pub mod quad;
pub mod report;
pub mod resolvent;
pub mod solver;

pub use error::{Error, Result};
pub use geometry::RadialGeometry;
pub use profile::{CoefficientProfile, RadialProfile};
pub use solver::{solve_radial_ivp, RadialSolution};
