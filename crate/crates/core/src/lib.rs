//! Numerical toolkit for nonlinear resolvents of holomorphic generators on the
//! unit disk.
//!
//! A generator vanishing at the origin has the form `f(z) = z p(z)` with
//! `Re p >= 0`. Its resolvent `G_r = (Id + r f)^{-1}` is a univalent self-map of
//! the disk. This crate builds generators from boundary measures, solves the
//! resolvent equation pointwise, integrates the generated semigroups, and
//! checks the distortion, covering, starlikeness and squeezing bounds that
//! hold for these families.
//!
//! The modules are layered bottom-up:
//!
//! - [`herglotz`]: Herglotz functions, generators and reference starlike maps.
//! - [`resolvent`]: Newton-with-continuation solver for `w + r f(w) = z`.
//! - [`geometry`]: radii, order estimates and bound margin checks.
//! - [`ode`] and [`semigroup`]: semigroup trajectories and the exponential formula.
//! - [`verifier`]: seeded generator sampling and the check suite.

pub mod format;
pub mod geometry;
pub mod grid;
pub mod herglotz;
pub mod ode;
pub mod resolvent;
pub mod semigroup;
pub mod verifier;

pub use num_complex::Complex64;

pub use geometry::{
    amplitude_a, class_radii, estimate_orders, r0, resolvent_radii, shape_ratio,
    theoretical_orders, ClassRadii, GeometryError, OrderEstimate, ResolventRadii,
    TheoreticalOrders,
};
pub use grid::Grid;
pub use herglotz::{
    BoundaryAtom, Generator, GeneratorSpec, HerglotzError, HerglotzFn, ReferenceMap,
};
pub use resolvent::{
    extension_radius, resolvent_grid, solve_resolvent, ResolventError, ResolventValue,
    SolverOptions,
};
pub use semigroup::{flow, exponential_formula, FlowError, SqueezeCertificate, Trajectory};
pub use verifier::{run_suite, sample_generator, SuiteConfig, VerificationReport};
