//! Pointwise solution of the resolvent equation `w + r f(w) = z`.
//!
//! The solver runs damped Newton on `F(w) = w + r f(w) - z` inside a
//! continuation along the segment `[0, z]`. Each continuation step is seeded
//! with the tangent predictor `w_prev + dz / (1 + r f'(w_prev))`, which at the
//! origin reduces to the linearization `z / (1 + r q)`. Steps that fail are
//! halved down to `2^-20` of the segment.
//!
//! Inside the unit disk the root in the disk is unique, so any converged
//! Newton iterate is the resolvent value. On the extended disk `|z| >= 1`
//! (available when `r Re q > 2`) a step is also required to land close to its
//! predictor, which keeps the path on the branch through the origin.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Grid;
use crate::herglotz::Generator;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResolventError {
    #[error("resolvent parameter must be positive and finite, got r = {r}")]
    BadParameter { r: f64 },
    #[error("|z| = {modulus} is outside the admissible radius {bound}")]
    OutsideDomain { modulus: f64, bound: f64 },
    #[error("Newton continuation did not converge at z = {z}")]
    NoConvergence { z: Complex64 },
    #[error("solver iterate left the unit disk while solving at z = {z}")]
    DomainEscape { z: Complex64 },
    #[error("extension radius needs r Re q > 2, got {x}")]
    BelowThreshold { x: f64 },
    #[error("grid node {index} (z = {z}): {source}")]
    Node {
        index: usize,
        z: Complex64,
        #[source]
        source: Box<ResolventError>,
    },
}

/// Margin kept from the extension radius, the solver never goes closer.
pub const EXTENSION_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_newton: usize,
    /// Smallest continuation step is `1 / max_subdivisions` of the segment.
    pub max_subdivisions: u32,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_newton: 100,
            max_subdivisions: 1 << 20,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// Value `w = G_r(z)` with derivative and solve diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolventValue {
    pub w: Complex64,
    pub deriv: Complex64,
    pub residual: f64,
    pub iterations: usize,
}

/// `rho(x) = (sqrt(2x) - sqrt(x - 1))^2` for `x = r Re q > 2`.
pub fn extension_radius(x: f64) -> Result<f64, ResolventError> {
    if !(x > 2.0) || !x.is_finite() {
        return Err(ResolventError::BelowThreshold { x });
    }
    let d = (2.0 * x).sqrt() - (x - 1.0).sqrt();
    Ok(d * d)
}

/// Largest `|z|` accepted by [`solve_resolvent`] for this generator and `r`.
pub fn admissible_radius(gen: &Generator, r: f64) -> f64 {
    match extension_radius(r * gen.q().re) {
        Ok(rho) => rho - EXTENSION_MARGIN,
        Err(_) => 1.0,
    }
}

enum StepFailure {
    Diverged,
    Escaped,
}

struct Newton<'a> {
    gen: &'a Generator,
    r: f64,
    opts: SolverOptions,
}

impl Newton<'_> {
    fn residual(&self, w: Complex64, target: Complex64) -> (Complex64, Complex64) {
        let (f, df) = self.gen.eval_unchecked(w);
        (w + self.r * f - target, 1.0 + self.r * df)
    }

    /// Damped Newton from `w`. Returns the root and the iteration count.
    fn solve(
        &self,
        mut w: Complex64,
        target: Complex64,
    ) -> Result<(Complex64, usize), StepFailure> {
        if w.norm() >= 1.0 {
            return Err(StepFailure::Escaped);
        }
        let tol = self.opts.tol;
        let (mut res, mut jac) = self.residual(w, target);
        for iter in 1..=self.opts.max_newton {
            let delta = res / jac;
            if !delta.is_finite() {
                return Err(StepFailure::Diverged);
            }
            let res_norm = res.norm();
            if res_norm <= tol && delta.norm() <= tol * (1.0 + w.norm()) {
                return Ok((w, iter - 1));
            }
            let mut lambda = 1.0;
            let mut escaped: bool;
            loop {
                let cand = w - lambda * delta;
                if cand.norm() < 1.0 {
                    let (cres, cjac) = self.residual(cand, target);
                    let cnorm = cres.norm();
                    if cnorm < (1.0 - 1e-4 * lambda) * res_norm || cnorm <= tol {
                        w = cand;
                        res = cres;
                        jac = cjac;
                        break;
                    }
                    escaped = false;
                } else {
                    escaped = true;
                }
                lambda *= 0.5;
                if lambda < 1e-8 {
                    // no decrease possible: either at the rounding floor or stuck
                    if res_norm <= tol {
                        return Ok((w, iter));
                    }
                    return Err(if escaped {
                        StepFailure::Escaped
                    } else {
                        StepFailure::Diverged
                    });
                }
            }
        }
        let delta = res / jac;
        if res.norm() <= tol && delta.norm() <= tol * (1.0 + w.norm()) {
            Ok((w, self.opts.max_newton))
        } else {
            Err(StepFailure::Diverged)
        }
    }
}

/// Solves `w + r f(w) = z` for the branch with `w(0) = 0`.
///
/// `z` may lie in the unit disk, or in the extended disk of radius
/// `rho(r Re q) - 1e-6` when `r Re q > 2`.
pub fn solve_resolvent(
    gen: &Generator,
    r: f64,
    z: Complex64,
    opts: &SolverOptions,
) -> Result<ResolventValue, ResolventError> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(ResolventError::BadParameter { r });
    }
    let modulus = z.norm();
    if !(modulus < 1.0) {
        let bound = admissible_radius(gen, r);
        // grid nodes on the outer circle may exceed the bound by rounding
        if !(modulus <= bound * (1.0 + 4.0 * f64::EPSILON) && bound > 1.0) {
            return Err(ResolventError::OutsideDomain { modulus, bound });
        }
    }
    let newton = Newton {
        gen,
        r,
        opts: *opts,
    };

    let min_step = 1.0 / f64::from(opts.max_subdivisions.max(1));
    let mut s = 0.0_f64;
    let mut h = 1.0_f64;
    let mut w = Complex64::new(0.0, 0.0);
    let mut z_prev = Complex64::new(0.0, 0.0);
    let mut deriv = 1.0 / (1.0 + r * gen.q());
    let mut iterations = 0usize;
    let mut escaped = false;

    while s < 1.0 {
        let s_next = if s + h >= 1.0 { 1.0 } else { s + h };
        let z_next = if s_next == 1.0 { z } else { z * s_next };
        let predictor = w + (z_next - z_prev) * deriv;
        let attempt = newton.solve(predictor, z_next).and_then(|(w_new, its)| {
            // on the extended disk, insist on staying near the predicted branch
            if z_next.norm() >= 1.0 {
                let jump = (w_new - predictor).norm();
                let stride = (predictor - w).norm();
                if jump > 0.5 * stride + 1e-10 {
                    return Err(StepFailure::Diverged);
                }
            }
            Ok((w_new, its))
        });
        match attempt {
            Ok((w_new, its)) => {
                iterations += its;
                let (_, df) = gen.eval_unchecked(w_new);
                w = w_new;
                deriv = 1.0 / (1.0 + r * df);
                z_prev = z_next;
                s = s_next;
                h = (2.0 * h).min(1.0);
            }
            Err(failure) => {
                escaped |= matches!(failure, StepFailure::Escaped);
                h *= 0.5;
                if h < min_step {
                    return Err(if escaped {
                        ResolventError::DomainEscape { z }
                    } else {
                        ResolventError::NoConvergence { z }
                    });
                }
            }
        }
    }

    let (f, df) = gen.eval_unchecked(w);
    Ok(ResolventValue {
        w,
        deriv: 1.0 / (1.0 + r * df),
        residual: (w + r * f - z).norm(),
        iterations,
    })
}

/// Resolvent values on every node of a grid, in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventField {
    pub grid: Grid,
    pub r: f64,
    pub values: Vec<ResolventValue>,
}

impl ResolventField {
    pub fn iter(&self) -> impl Iterator<Item = (Complex64, &ResolventValue)> + '_ {
        self.grid.nodes().zip(&self.values)
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().map(|v| v.w.norm()).fold(0.0, f64::max)
    }
}

/// Solves the resolvent at every grid node (in parallel, deterministic order).
pub fn resolvent_grid(
    gen: &Generator,
    r: f64,
    grid: &Grid,
    opts: &SolverOptions,
) -> Result<ResolventField, ResolventError> {
    let results: Vec<Result<ResolventValue, ResolventError>> = (0..grid.len())
        .into_par_iter()
        .map(|i| solve_resolvent(gen, r, grid.node(i), opts))
        .collect();
    let mut values = Vec::with_capacity(results.len());
    for (index, res) in results.into_iter().enumerate() {
        match res {
            Ok(v) => values.push(v),
            Err(e) => {
                return Err(ResolventError::Node {
                    index,
                    z: grid.node(index),
                    source: Box::new(e),
                })
            }
        }
    }
    Ok(ResolventField {
        grid: *grid,
        r,
        values,
    })
}
