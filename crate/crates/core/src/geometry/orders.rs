use std::f64::consts::FRAC_2_PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::GeometryError;
use crate::grid::Grid;
use crate::herglotz::{Generator, ReferenceMap};
use crate::resolvent::{solve_resolvent, ResolventValue, SolverOptions};

/// `w G_r'(w) / G_r(w)` from an already solved resolvent value, written through
/// `p` so that it stays regular at the origin:
///
/// ```text
/// S = (1 + r p(G)) / (1 + r (p(G) + G p'(G)))
/// ```
pub fn shape_ratio_from(gen: &Generator, r: f64, value: &ResolventValue) -> Complex64 {
    let g = value.w;
    if g == Complex64::new(0.0, 0.0) {
        return Complex64::new(1.0, 0.0);
    }
    let (p, dp) = gen.eval_p_unchecked(g);
    (1.0 + r * p) / (1.0 + r * (p + g * dp))
}

/// Shape ratio `w G_r'(w) / G_r(w)` at a point of the disk.
pub fn shape_ratio(
    gen: &Generator,
    r: f64,
    w: Complex64,
    opts: &SolverOptions,
) -> Result<Complex64, GeometryError> {
    crate::herglotz::check_in_disk(w)?;
    let value = solve_resolvent(gen, r, w, opts)?;
    Ok(shape_ratio_from(gen, r, &value))
}

/// A map `h` with `h(0) = 0`, `h'(0) != 0` whose starlikeness is being measured.
pub trait StarlikeMap: Sync {
    /// `h(z)` and `h'(z)`.
    fn eval(&self, z: Complex64) -> Result<(Complex64, Complex64), GeometryError>;

    /// `z h'(z) / h(z)` at a nonzero point.
    fn ratio(&self, z: Complex64) -> Result<Complex64, GeometryError> {
        let (h, dh) = self.eval(z)?;
        if h == Complex64::new(0.0, 0.0) || !h.is_finite() {
            return Err(GeometryError::ZeroDivision { z });
        }
        Ok(z * dh / h)
    }
}

impl StarlikeMap for ReferenceMap {
    fn eval(&self, z: Complex64) -> Result<(Complex64, Complex64), GeometryError> {
        Ok(ReferenceMap::eval(self, z)?)
    }
}

/// Closure-backed map.
pub struct FnMap<F>(pub F);

impl<F> StarlikeMap for FnMap<F>
where
    F: Fn(Complex64) -> (Complex64, Complex64) + Sync,
{
    fn eval(&self, z: Complex64) -> Result<(Complex64, Complex64), GeometryError> {
        Ok((self.0)(z))
    }
}

/// The resolvent `G_r` viewed as a map of the disk.
pub struct ResolventMap<'a> {
    pub gen: &'a Generator,
    pub r: f64,
    pub opts: SolverOptions,
}

impl StarlikeMap for ResolventMap<'_> {
    fn eval(&self, z: Complex64) -> Result<(Complex64, Complex64), GeometryError> {
        let v = solve_resolvent(self.gen, self.r, z, &self.opts)?;
        Ok((v.w, v.deriv))
    }

    fn ratio(&self, z: Complex64) -> Result<Complex64, GeometryError> {
        let v = solve_resolvent(self.gen, self.r, z, &self.opts)?;
        if v.w == Complex64::new(0.0, 0.0) {
            return Err(GeometryError::ZeroDivision { z });
        }
        Ok(shape_ratio_from(self.gen, self.r, &v))
    }
}

/// Grid estimates of the starlikeness orders of a map. These are extrema over
/// the grid nodes, not over the whole disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderEstimate {
    /// `min Re(z h'/h)`.
    pub starlike_order: f64,
    /// `(2/pi) max |arg(z h'/h)|`.
    pub strong_order: f64,
    pub theta: f64,
    /// `min Re(e^{-i theta} z h'/h) / cos theta`; `None` when `cos theta <= 0`.
    pub spirallike_order: Option<f64>,
    pub grid: Grid,
}

/// Reduces a field of shape-ratio values to order estimates.
pub fn orders_from_ratios(ratios: &[Complex64], theta: f64, grid: Grid) -> OrderEstimate {
    let rot = Complex64::from_polar(1.0, -theta);
    let ct = theta.cos();
    let mut starlike = f64::INFINITY;
    let mut strong = 0.0_f64;
    let mut spiral = f64::INFINITY;
    for s in ratios {
        starlike = starlike.min(s.re);
        strong = strong.max(s.arg().abs());
        spiral = spiral.min((rot * s).re);
    }
    OrderEstimate {
        starlike_order: starlike,
        strong_order: FRAC_2_PI * strong,
        theta,
        spirallike_order: (ct > 0.0).then(|| spiral / ct),
        grid,
    }
}

pub fn estimate_orders<M: StarlikeMap + ?Sized>(
    map: &M,
    grid: &Grid,
    theta: f64,
) -> Result<OrderEstimate, GeometryError> {
    let ratios = (0..grid.len())
        .into_par_iter()
        .map(|i| map.ratio(grid.node(i)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(orders_from_ratios(&ratios, theta, *grid))
}
