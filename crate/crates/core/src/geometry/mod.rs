//! Geometric quantities of resolvents: radii of univalence and covering,
//! starlikeness orders, and margin checks of the associated bounds.

mod checks;
mod orders;
mod radii;
pub mod winding;

use num_complex::Complex64;
use thiserror::Error;

use crate::herglotz::HerglotzError;
use crate::resolvent::ResolventError;

pub use checks::{
    check_disk_containment, check_distortion_covering, check_half_plane, disk_containment_from,
    half_plane_from, min_re_shape_ratio, shape_ratio_field, CoveringReport, ProbeSummary,
    CURVE_FRACTION, CURVE_SAMPLES, PROBE_COUNT, PROBE_FRACTION,
};
pub use orders::{
    estimate_orders, orders_from_ratios, shape_ratio, shape_ratio_from, FnMap, OrderEstimate, ResolventMap,
    StarlikeMap,
};
pub use radii::{
    amplitude_a, amplitude_checked, class_radii, r0, r0_by_bisection, r0_closed_form,
    resolvent_radii, theoretical_orders, ClassRadii, ResolventRadii, TheoreticalOrders,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("x = {x} is at or below the threshold {threshold}")]
    BelowThreshold { x: f64, threshold: f64 },
    #[error("A({x}) = {value} is a pole or lies outside (0, 1)")]
    PoleOrNegative { x: f64, value: f64 },
    #[error("theta = {theta} exceeds the admissible bound {bound}")]
    ThetaOutOfRange { theta: f64, bound: f64 },
    #[error("class parameters need Re(alpha conj(beta)) > 0, got alpha = {alpha}, beta = {beta}")]
    BadClass { alpha: Complex64, beta: Complex64 },
    #[error("map vanishes at the nonzero node z = {z}")]
    ZeroDivision { z: Complex64 },
    #[error("image curve passes within {distance} of probe {probe}")]
    WindingAmbiguous { probe: Complex64, distance: f64 },
    #[error("power base has nonpositive real part at z = {z}")]
    BranchAmbiguous { z: Complex64 },
    #[error(transparent)]
    Solver(#[from] ResolventError),
    #[error(transparent)]
    Map(#[from] HerglotzError),
}
