//! Semigroups generated by `f` (or by a resolvent `G_r`), integrated along rays
//! in the complex time plane, plus the exponential formula and the squeezing
//! and sector checks.
//!
//! Complex time `t = |t| e^{i phi}` is handled by rotating the vector field:
//! `u(t, z)` solves `du/ds = -e^{i phi} F(u)` for `s in [0, |t|]`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::format::fmt17;
use crate::geometry::{amplitude_checked, GeometryError};
use crate::grid::Grid;
use crate::herglotz::{check_in_disk, Generator, HerglotzError};
use crate::ode::{integrate, IntegrationError, OdeOptions};
use crate::resolvent::{solve_resolvent, ResolventError, SolverOptions};

/// Accepted states beyond this modulus count as leaving the disk.
pub const ESCAPE_RADIUS: f64 = 1.0 - 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("trajectory left the disk at s = {s} (|u| = {modulus}); t is outside the analyticity sector")]
    DomainEscape { s: f64, modulus: f64 },
    #[error("trajectory left the disk within the first steps (s = {s}); check the start point and ray")]
    EarlyEscape { s: f64 },
    #[error("step size underflow at s = {s}")]
    StepUnderflow { s: f64 },
    #[error("squeezing ratio must be positive, got {kappa}")]
    BadKappa { kappa: f64 },
    #[error("need r Re q >= 6, got {x}")]
    BelowThreshold { x: f64 },
    #[error(transparent)]
    Map(#[from] HerglotzError),
    #[error(transparent)]
    Solver(#[from] ResolventError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// The vector field driving a semigroup: a generator `f`, or the resolvent
/// `G_r` of a generator used as a generator in its own right.
#[derive(Debug, Clone, Copy)]
pub enum FlowField<'a> {
    Generator(&'a Generator),
    Resolvent {
        gen: &'a Generator,
        r: f64,
        opts: SolverOptions,
    },
}

impl<'a> FlowField<'a> {
    pub fn resolvent(gen: &'a Generator, r: f64) -> Self {
        Self::Resolvent {
            gen,
            r,
            opts: SolverOptions::default(),
        }
    }

    /// The field value at `u`, `|u| < 1`.
    pub fn eval(&self, u: Complex64) -> Result<Complex64, FlowError> {
        check_in_disk(u)?;
        match self {
            Self::Generator(g) => Ok(g.eval_unchecked(u).0),
            Self::Resolvent { gen, r, opts } => Ok(solve_resolvent(gen, *r, u, opts)?.w),
        }
    }

    /// `p(u) = F(u) / u`; at the origin this is `F'(0)`.
    pub fn p(&self, u: Complex64) -> Result<Complex64, FlowError> {
        check_in_disk(u)?;
        match self {
            Self::Generator(g) => Ok(g.eval_p_unchecked(u).0),
            Self::Resolvent { gen, r, opts } => {
                if u == Complex64::new(0.0, 0.0) {
                    return Ok(1.0 / (1.0 + *r * gen.q()));
                }
                Ok(solve_resolvent(gen, *r, u, opts)?.w / u)
            }
        }
    }
}

/// Sampled trajectory `s -> u(s e^{i phi}, z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub ray_angle: f64,
    pub generator_id: String,
    pub start: Complex64,
    pub samples: Vec<(f64, Complex64)>,
}

impl Trajectory {
    pub fn end(&self) -> Complex64 {
        self.samples.last().map_or(self.start, |s| s.1)
    }

    /// CSV with header `s,re_u,im_u,abs_u`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "s,re_u,im_u,abs_u")?;
        for (s, u) in &self.samples {
            writeln!(
                out,
                "{},{},{},{}",
                fmt17(*s),
                fmt17(u.re),
                fmt17(u.im),
                fmt17(u.norm())
            )?;
        }
        Ok(())
    }
}

fn run_flow(
    field: &FlowField<'_>,
    t: Complex64,
    z: Complex64,
    opts: &OdeOptions,
    mut record: impl FnMut(f64, Complex64),
) -> Result<Complex64, FlowError> {
    check_in_disk(z)?;
    let length = t.norm();
    let rot = if length > 0.0 {
        t / length
    } else {
        Complex64::new(1.0, 0.0)
    };
    let mut accepted = 0usize;
    let res = integrate(
        |u| field.eval(u).map(|v| -rot * v),
        z,
        length,
        opts,
        |s, u| {
            let modulus = u.norm();
            if modulus > ESCAPE_RADIUS {
                return Err(if accepted <= 2 {
                    FlowError::EarlyEscape { s }
                } else {
                    FlowError::DomainEscape { s, modulus }
                });
            }
            accepted += 1;
            record(s, u);
            Ok(())
        },
    );
    res.map_err(|e| match e {
        IntegrationError::StepUnderflow { s, .. } => FlowError::StepUnderflow { s },
        IntegrationError::Stopped { source, .. } => source,
        IntegrationError::Rhs { s, source } => match source {
            // stages pushed outside the disk until the step underflowed
            FlowError::Map(HerglotzError::OutsideDisk { z }) => {
                if accepted <= 2 {
                    FlowError::EarlyEscape { s }
                } else {
                    FlowError::DomainEscape {
                        s,
                        modulus: z.norm(),
                    }
                }
            }
            other => other,
        },
    })
}

/// `u(t, z)` for complex `t`, integrated along the ray through `t`.
pub fn flow(
    field: &FlowField<'_>,
    t: Complex64,
    z: Complex64,
    opts: &OdeOptions,
) -> Result<Complex64, FlowError> {
    run_flow(field, t, z, opts, |_, _| {})
}

/// Like [`flow`] but keeps every accepted step.
pub fn trajectory(
    field: &FlowField<'_>,
    t: Complex64,
    z: Complex64,
    opts: &OdeOptions,
    generator_id: impl Into<String>,
) -> Result<Trajectory, FlowError> {
    let mut samples = Vec::new();
    run_flow(field, t, z, opts, |s, u| samples.push((s, u)))?;
    Ok(Trajectory {
        ray_angle: t.arg(),
        generator_id: generator_id.into(),
        start: z,
        samples,
    })
}

/// `n`-fold iterate of the resolvent `G_{t/n}` applied to `z`.
pub fn exponential_formula(
    gen: &Generator,
    t: f64,
    z: Complex64,
    n: usize,
    opts: &SolverOptions,
) -> Result<Complex64, ResolventError> {
    let r = t / n as f64;
    let mut w = z;
    for _ in 0..n {
        w = solve_resolvent(gen, r, w, opts)?.w;
    }
    Ok(w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqueezeCertificate {
    pub kappa: f64,
    /// `max |u(t,z)| e^{kappa t} / |z|` over the samples.
    pub worst_ratio: f64,
    /// `max (|u(t,z)| - |z| e^{-kappa t})` over the samples.
    pub worst_excess: f64,
    /// Sample attaining `worst_ratio`.
    pub worst_sample: (f64, Complex64),
    pub pass: bool,
    /// Grid minimum of `Re p`, the other side of the squeezing equivalence.
    pub min_re_p: f64,
    /// Whether the trajectory side and the `Re p >= kappa` side agree.
    pub sides_agree: bool,
}

pub const SQUEEZE_SLACK: f64 = 1e-8;

/// Grid minimum of `Re p` for a flow field.
pub fn min_re_p(field: &FlowField<'_>, grid: &Grid) -> Result<f64, FlowError> {
    let vals = (0..grid.len())
        .into_par_iter()
        .map(|i| field.p(grid.node(i)).map(|p| p.re))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(vals.into_iter().fold(f64::INFINITY, f64::min))
}

/// Checks `|u(t,z)| <= |z| e^{-kappa t}` on the samples `(t, z)`.
pub fn squeezing_margin(
    field: &FlowField<'_>,
    kappa: f64,
    samples: &[(f64, Complex64)],
    p_grid: &Grid,
    opts: &OdeOptions,
) -> Result<SqueezeCertificate, FlowError> {
    if !(kappa > 0.0) {
        return Err(FlowError::BadKappa { kappa });
    }
    let results = samples
        .par_iter()
        .map(|&(t, z)| {
            let u = flow(field, Complex64::new(t, 0.0), z, opts)?;
            let ratio = u.norm() * (kappa * t).exp() / z.norm();
            let excess = u.norm() - z.norm() * (-kappa * t).exp();
            Ok((ratio, excess, (t, z)))
        })
        .collect::<Result<Vec<_>, FlowError>>()?;
    let mut worst_ratio = f64::NEG_INFINITY;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_sample = (0.0, Complex64::new(0.0, 0.0));
    for (ratio, excess, sample) in results {
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst_sample = sample;
        }
        worst_excess = worst_excess.max(excess);
    }
    let pass = worst_ratio <= 1.0 + SQUEEZE_SLACK;
    let min_re_p = min_re_p(field, p_grid)?;
    Ok(SqueezeCertificate {
        kappa,
        worst_ratio,
        worst_excess,
        worst_sample,
        pass,
        min_re_p,
        sides_agree: pass == (min_re_p >= kappa - SQUEEZE_SLACK),
    })
}

/// `count` samples with `t` evenly spaced on `(0, t_max]` and start points spread
/// over the disk of radius `radius` along the golden angle.
pub fn squeeze_samples(count: usize, t_max: f64, radius: f64) -> Vec<(f64, Complex64)> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|k| {
            let t = t_max * (k + 1) as f64 / count as f64;
            let rho = radius * (0.5 + 0.5 * ((k % 7) as f64 + 1.0) / 7.0);
            (t, Complex64::from_polar(rho, golden * k as f64))
        })
        .collect()
}

/// Samples aimed at a squeezing violation: start at the grid node minimizing
/// `Re p`, times log-spaced on `[t_max 1e-4, t_max]`.
pub fn probing_samples(
    field: &FlowField<'_>,
    grid: &Grid,
    count: usize,
    t_max: f64,
) -> Result<Vec<(f64, Complex64)>, FlowError> {
    let vals = (0..grid.len())
        .into_par_iter()
        .map(|i| field.p(grid.node(i)).map(|p| (p.re, i)))
        .collect::<Result<Vec<_>, _>>()?;
    let (_, idx) = vals
        .into_iter()
        .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a });
    let z = grid.node(idx);
    Ok((0..count)
        .map(|k| {
            let frac = if count > 1 {
                k as f64 / (count - 1) as f64
            } else {
                1.0
            };
            (t_max * 10f64.powf(-4.0 * (1.0 - frac)), z)
        })
        .collect())
}

/// Admissible sector `arg t in (-alpha_max, beta_max)` estimated from the
/// grid range of `arg p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorEstimate {
    pub alpha_max: f64,
    pub beta_max: f64,
}

pub fn sector_estimate(field: &FlowField<'_>, grid: &Grid) -> Result<SectorEstimate, FlowError> {
    let args = (0..grid.len())
        .into_par_iter()
        .map(|i| field.p(grid.node(i)).map(|p| p.arg()))
        .collect::<Result<Vec<_>, _>>()?;
    let lo = args.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = args.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(SectorEstimate {
        alpha_max: (FRAC_PI_2 + lo).clamp(0.0, FRAC_PI_2),
        beta_max: (FRAC_PI_2 - hi).clamp(0.0, FRAC_PI_2),
    })
}

/// Squeezing ratio of the semigroup generated by `G_r`, evaluated exactly as
/// `(Re (1+rq)^{1/gamma})^gamma / (2^{1-gamma} |1+rq|^2)` with the principal branch.
pub fn resolvent_kappa(r: f64, q: Complex64) -> Result<(f64, f64), FlowError> {
    let x = r * q.re;
    if !(x >= 6.0) {
        return Err(FlowError::BelowThreshold { x });
    }
    let a = amplitude_checked(x)?;
    let gamma = (1.0 - a) / (1.0 + a);
    let beta = 1.0 + r * q;
    let num = beta.powf(1.0 / gamma).re.powf(gamma);
    let kappa = num / (2f64.powf(1.0 - gamma) * beta.norm_sqr());
    Ok((kappa, gamma))
}

/// Outcome of integrating along one ray of complex time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayProbe {
    pub angle: f64,
    pub start: Complex64,
    pub length: f64,
    pub escaped: bool,
    /// `|u|` at the end of the ray (or where integration stopped).
    pub final_modulus: f64,
    pub error: Option<String>,
}

pub fn ray_probe(
    field: &FlowField<'_>,
    angle: f64,
    start: Complex64,
    length: f64,
    opts: &OdeOptions,
) -> RayProbe {
    let mut last = start;
    let res = run_flow(field, Complex64::from_polar(length, angle), start, opts, |_, u| last = u);
    let (escaped, error) = match res {
        Ok(_) => (false, None),
        Err(e @ (FlowError::DomainEscape { .. } | FlowError::EarlyEscape { .. })) => {
            (true, Some(e.to_string()))
        }
        Err(e) => (false, Some(e.to_string())),
    };
    RayProbe {
        angle,
        start,
        length,
        escaped,
        final_modulus: last.norm(),
        error,
    }
}

/// Offset from the sector edge for probes that must stay inside.
pub const SECTOR_INSET: f64 = 0.05;
/// Offset past the sector edge for informational outside probes.
pub const SECTOR_OUTSET: f64 = 0.3;
pub const RAY_LENGTH: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventSemigroupReport {
    pub r: f64,
    pub q: Complex64,
    pub gamma_r: f64,
    pub kappa: f64,
    /// `1 / (2^{1-gamma}(1+rq))`, present for real `q`.
    pub kappa_real_q: Option<f64>,
    /// `pi gamma_r`.
    pub sector_opening: f64,
    /// `pi (x - 6)/(x + 6)`, a lower bound for the opening.
    pub sector_opening_lower: f64,
    pub squeeze: SqueezeCertificate,
    pub inside_probes: Vec<RayProbe>,
    pub outside_probes: Vec<RayProbe>,
    /// `min |G_r(z)|` over `|z| = 1 - 1e-3`.
    pub boundary_min_modulus: f64,
}

impl ResolventSemigroupReport {
    pub fn inside_escapes(&self) -> usize {
        self.inside_probes.iter().filter(|p| p.escaped || p.error.is_some()).count()
    }
}

/// Start points for the ray probes.
pub fn ray_starts() -> Vec<Complex64> {
    (0..8)
        .map(|k| Complex64::from_polar(0.9, TAU * k as f64 / 8.0))
        .collect()
}

pub fn resolvent_semigroup_check(
    gen: &Generator,
    r: f64,
    samples: &[(f64, Complex64)],
    p_grid: &Grid,
    opts: &OdeOptions,
) -> Result<ResolventSemigroupReport, FlowError> {
    let q = gen.q();
    let x = r * q.re;
    let (kappa, gamma_r) = resolvent_kappa(r, q)?;
    let beta = 1.0 + r * q;
    let kappa_real_q =
        (q.im == 0.0).then(|| 1.0 / (2f64.powf(1.0 - gamma_r) * beta.re));
    let field = FlowField::resolvent(gen, r);
    let squeeze = squeezing_margin(&field, kappa, samples, p_grid, opts)?;

    let center = beta.arg();
    let half = PI * gamma_r / 2.0;
    let starts = ray_starts();
    let probes = |offset: f64| -> Vec<RayProbe> {
        let jobs: Vec<(f64, Complex64)> = [center + offset, center - offset]
            .into_iter()
            .flat_map(|a| starts.iter().map(move |&z| (a, z)))
            .collect();
        jobs.par_iter()
            .map(|&(a, z)| ray_probe(&field, a, z, RAY_LENGTH, opts))
            .collect()
    };
    let inside_probes = probes(half - SECTOR_INSET);
    let outside_probes = probes(half + SECTOR_OUTSET);

    let sopts = SolverOptions::default();
    let boundary_min_modulus = (0..1024)
        .into_par_iter()
        .map(|k| {
            let z = Complex64::from_polar(1.0 - 1e-3, TAU * k as f64 / 1024.0);
            solve_resolvent(gen, r, z, &sopts).map(|v| v.w.norm())
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);

    Ok(ResolventSemigroupReport {
        r,
        q,
        gamma_r,
        kappa,
        kappa_real_q,
        sector_opening: PI * gamma_r,
        sector_opening_lower: PI * (x - 6.0) / (x + 6.0),
        squeeze,
        inside_probes,
        outside_probes,
        boundary_min_modulus,
    })
}

/// `max |(1 + rq) G_r(z) - z|` over the grid.
pub fn normalized_deviation(
    gen: &Generator,
    r: f64,
    grid: &Grid,
    opts: &SolverOptions,
) -> Result<f64, ResolventError> {
    let scale = 1.0 + r * gen.q();
    let field = crate::resolvent::resolvent_grid(gen, r, grid, opts)?;
    Ok(field
        .iter()
        .map(|(z, v)| (scale * v.w - z).norm())
        .fold(0.0, f64::max))
}
