//! Seeded generator sampling and the check suite.
//!
//! Every check produces a [`VerificationReport`] with a signed margin: a
//! nonnegative margin means the bound held on the sampled nodes. Checks are
//! independent jobs run in parallel; reports come back sorted by
//! `(check_id, seed)` with the parameter sweep order preserved inside each key.

use std::cell::OnceCell;
use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::io::Write;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::format::fmt17;
use crate::geometry::{
    amplitude_a, check_distortion_covering, class_radii, disk_containment_from, half_plane_from,
    orders_from_ratios, r0, r0_by_bisection, resolvent_radii, shape_ratio_from, theoretical_orders,
    FnMap, GeometryError, StarlikeMap,
};
use crate::grid::Grid;
use crate::herglotz::{BoundaryAtom, Generator, HerglotzError};
use crate::ode::OdeOptions;
use crate::resolvent::{resolvent_grid, solve_resolvent, ResolventError, ResolventField, SolverOptions};
use crate::semigroup::{
    exponential_formula, flow, normalized_deviation, probing_samples, resolvent_kappa,
    resolvent_semigroup_check, squeeze_samples, FlowError, FlowField,
};

/// Reports with a margin at or above this count as passing.
pub const PASS_THRESHOLD: f64 = -1e-8;

/// Value the `r0` check compares against, with its tolerance.
pub const R0_QUOTED: f64 = 5.92434;
pub const R0_TOLERANCE: f64 = 5e-5;
/// Quoted squeezing ratio at `q = 1, r = 10` and the tolerance used for it.
pub const KAPPA10_QUOTED: f64 = 0.0553480;
pub const KAPPA10_TOLERANCE: f64 = 5e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check_id: String,
    pub parameters: BTreeMap<String, Value>,
    pub margin: f64,
    pub pass: bool,
    pub runtime_ms: u64,
    pub seed: u64,
    /// The bound being checked, in words.
    pub reference: String,
}

impl VerificationReport {
    fn new(
        check: Check,
        seed: u64,
        parameters: BTreeMap<String, Value>,
        margin: f64,
        started: Instant,
    ) -> Self {
        Self {
            check_id: check.id().to_string(),
            parameters,
            margin,
            pass: margin >= PASS_THRESHOLD,
            runtime_ms: started.elapsed().as_millis() as u64,
            seed,
            reference: check.reference().to_string(),
        }
    }

    /// The `x = r Re q` parameter, when the check has one.
    pub fn x(&self) -> Option<f64> {
        self.parameters.get("x").and_then(Value::as_f64)
    }
}

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("unknown check id {0:?}")]
    UnknownCheck(String),
    #[error("check {check_id} (seed {seed}) failed to run: {message}")]
    Infrastructure {
        check_id: String,
        seed: u64,
        message: String,
    },
    #[error(transparent)]
    Sampler(#[from] HerglotzError),
}

/// Every check the suite knows about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Check {
    R0,
    ClassRadiiUnit,
    RadiiConsistency,
    OrderCalibration,
    ResolventClosedForm,
    ExponentialFormula,
    SemigroupLaw,
    TrivialFlow,
    KappaFormula,
    Distortion,
    DiskBound,
    Covering,
    StarlikeHalf,
    StarlikeOrder,
    DiskContainment,
    OrderBounds,
    HalfPlane,
    Squeezing,
    SectorProbe,
    BoundaryFixedPoint,
    UniformConvergence,
    NormalizedConvergence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scope {
    Global,
    PerX,
    PerSeed,
}

impl Check {
    pub const ALL: [Check; 22] = [
        Check::R0,
        Check::ClassRadiiUnit,
        Check::RadiiConsistency,
        Check::OrderCalibration,
        Check::ResolventClosedForm,
        Check::ExponentialFormula,
        Check::SemigroupLaw,
        Check::TrivialFlow,
        Check::KappaFormula,
        Check::Distortion,
        Check::DiskBound,
        Check::Covering,
        Check::StarlikeHalf,
        Check::StarlikeOrder,
        Check::DiskContainment,
        Check::OrderBounds,
        Check::HalfPlane,
        Check::Squeezing,
        Check::SectorProbe,
        Check::BoundaryFixedPoint,
        Check::UniformConvergence,
        Check::NormalizedConvergence,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Check::R0 => "r0",
            Check::ClassRadiiUnit => "class-radii-unit",
            Check::RadiiConsistency => "radii-consistency",
            Check::OrderCalibration => "order-calibration",
            Check::ResolventClosedForm => "resolvent-closed-form",
            Check::ExponentialFormula => "exponential-formula",
            Check::SemigroupLaw => "semigroup-law",
            Check::TrivialFlow => "trivial-flow",
            Check::KappaFormula => "kappa-formula",
            Check::Distortion => "distortion",
            Check::DiskBound => "disk-bound",
            Check::Covering => "covering",
            Check::StarlikeHalf => "starlike-half",
            Check::StarlikeOrder => "starlike-order",
            Check::DiskContainment => "disk-containment",
            Check::OrderBounds => "order-bounds",
            Check::HalfPlane => "half-plane",
            Check::Squeezing => "squeezing",
            Check::SectorProbe => "sector-probe",
            Check::BoundaryFixedPoint => "boundary-fixed-point",
            Check::UniformConvergence => "uniform-convergence",
            Check::NormalizedConvergence => "normalized-convergence",
        }
    }

    pub fn reference(self) -> &'static str {
        match self {
            Check::R0 => "root of A(x) = 1, quoted as 5.92434",
            Check::ClassRadiiUnit => "class radii at alpha = beta = 1: R = 1/2, R1 = 1, R2 = 1/(2+sqrt 3)",
            Check::RadiiConsistency => "rho and rho1 equal the class radii R, R1 at alpha = 2x, beta = 1+x",
            Check::OrderCalibration => "estimator calibration on z/(1-z) and z/(2+z)",
            Check::ResolventClosedForm => "Newton solutions against quadratic-formula resolvents",
            Check::ExponentialFormula => "n-fold resolvent iterates converge to the flow",
            Check::SemigroupLaw => "u(t+s) = u(t, u(s))",
            Check::TrivialFlow => "f = qz flows as exp(-qt) z along admissible rays",
            Check::KappaFormula => "squeezing ratio formula against its real-q simplification",
            Check::Distortion => "|G_r| <= rho1 on the extended disk of radius rho",
            Check::DiskBound => "|G_r| <= 3/(1+x) on the unit disk",
            Check::Covering => "G_r covers the disks of radius rho2 and rho4",
            Check::StarlikeHalf => "Re(w G_r'/G_r) >= 1/2",
            Check::StarlikeOrder => "Re(w G_r'/G_r) >= x/(6+x) for x >= 6",
            Check::DiskContainment => "w G_r'/G_r lies in the disk centered 1/(1-A^2) of radius A/(1-A^2)",
            Check::OrderBounds => "starlike, strong and spirallike orders of G_r against alpha_r, beta_r, alpha_r_theta",
            Check::HalfPlane => "Re[((1+rq) G_r/z)^(1/(1-gamma_r))] > 1/2",
            Check::Squeezing => "|u(t,z)| <= |z| exp(-kappa t) for the semigroup generated by G_r",
            Check::SectorProbe => "no escape along rays inside the sector |arg t - arg(1+rq)| < pi gamma_r/2",
            Check::BoundaryFixedPoint => "G_r stays away from zero near the boundary, so no boundary regular fixed point",
            Check::UniformConvergence => "|u(3/kappa, z)| <= exp(-3) on |z| = 0.999",
            Check::NormalizedConvergence => "(1+rq) G_r(z) -> z on compacta as r grows",
        }
    }

    pub fn from_id(id: &str) -> Option<Check> {
        Check::ALL.into_iter().find(|c| c.id() == id)
    }

    fn scope(self) -> Scope {
        match self {
            Check::R0
            | Check::ClassRadiiUnit
            | Check::RadiiConsistency
            | Check::OrderCalibration
            | Check::ResolventClosedForm
            | Check::ExponentialFormula
            | Check::SemigroupLaw
            | Check::TrivialFlow
            | Check::KappaFormula => Scope::Global,
            Check::NormalizedConvergence => Scope::PerSeed,
            _ => Scope::PerX,
        }
    }

    /// Whether a per-x check applies at `x`.
    fn applies(self, x: f64) -> bool {
        match self {
            Check::Distortion | Check::DiskBound | Check::Covering => x > 2.0,
            Check::DiskContainment | Check::OrderBounds => x > r0(),
            Check::StarlikeOrder
            | Check::HalfPlane
            | Check::Squeezing
            | Check::SectorProbe
            | Check::BoundaryFixedPoint
            | Check::UniformConvergence => x >= 6.0,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    /// Check ids to run; empty means all.
    pub checks: Vec<String>,
    pub seeds: Vec<u64>,
    /// Values of `x = r Re q`.
    pub xs: Vec<f64>,
    pub q: Complex64,
    pub n_atoms: usize,
    /// Grid dimensions; the radius is chosen per check.
    pub grid: Grid,
    /// Trajectories per squeezing check.
    pub squeeze_samples: usize,
    pub solver: SolverOptions,
    pub ode: OdeOptions,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            checks: Vec::new(),
            seeds: (1..=20).collect(),
            xs: vec![2.5, 5.0, 8.0, 10.0, 50.0],
            q: Complex64::new(1.0, 0.0),
            n_atoms: 3,
            grid: Grid::new(64, 256, 0.999),
            squeeze_samples: 20,
            solver: SolverOptions::default(),
            ode: OdeOptions::default(),
        }
    }
}

impl SuiteConfig {
    pub fn with_checks<S: Into<String>>(checks: impl IntoIterator<Item = S>) -> Self {
        Self {
            checks: checks.into_iter().map(Into::into).collect(),
            ..Self::default()
        }
    }

    fn selected(&self) -> Result<Vec<Check>, SuiteError> {
        if self.checks.is_empty() {
            return Ok(Check::ALL.to_vec());
        }
        let mut out = Vec::new();
        for id in &self.checks {
            let c = Check::from_id(id).ok_or_else(|| SuiteError::UnknownCheck(id.clone()))?;
            if !out.contains(&c) {
                out.push(c);
            }
        }
        Ok(out)
    }
}

/// Random generator with `n_atoms` boundary atoms. Angles are uniform on
/// `[0, 2 pi)`, masses a symmetric Dirichlet(1) draw scaled to `Re q`, and
/// `gamma = Im q`, so that `p(0) = q`.
pub fn sample_generator(seed: u64, n_atoms: usize, q: Complex64) -> Result<Generator, HerglotzError> {
    if !(q.re > 0.0) || !q.im.is_finite() {
        return Err(HerglotzError::BadQ { q });
    }
    if n_atoms == 0 {
        return Err(HerglotzError::EmptyMeasure);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut angles = Vec::with_capacity(n_atoms);
    let mut weights = Vec::with_capacity(n_atoms);
    for _ in 0..n_atoms {
        angles.push(rng.random_range(0.0..TAU));
        let w: f64 = Exp1.sample(&mut rng);
        weights.push(w);
    }
    let total: f64 = weights.iter().sum();
    let atoms = angles
        .into_iter()
        .zip(weights)
        .map(|(a, w)| BoundaryAtom::new(a, q.re * w / total))
        .collect();
    Generator::herglotz(atoms, q.im)
}

type Params = BTreeMap<String, Value>;

fn params<const N: usize>(entries: [(&str, Value); N]) -> Params {
    entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Error carried out of a single check.
#[derive(Debug, Error)]
enum CheckError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Solver(#[from] ResolventError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Map(#[from] HerglotzError),
}

/// Deterministic point in the disk of radius `radius`, uniform by area.
fn disk_point(rng: &mut ChaCha8Rng, radius: f64) -> Complex64 {
    let rho = radius * rng.random::<f64>().sqrt();
    Complex64::from_polar(rho, rng.random_range(0.0..TAU))
}

/// Closed-form resolvent of the Koebe-type generator `f(z) = z (1+z)/(1-z)`:
/// the root of `(r-1) w^2 + (1+r+z) w - z = 0` that vanishes at `z = 0`.
pub fn koebe_resolvent_oracle(r: f64, z: Complex64) -> Complex64 {
    let a = r - 1.0;
    let b = 1.0 + r + z;
    if a == 0.0 {
        return z / b;
    }
    let mut disc = (b * b + 4.0 * a * z).sqrt();
    if (disc * b.conj()).re < 0.0 {
        disc = -disc;
    }
    // stable form of (-b + disc) / (2a)
    2.0 * z / (b + disc)
}

/// Koebe-type flow from `u/(1+u)^2 = e^{-t} z/(1+z)^2`.
pub fn koebe_flow_oracle(t: f64, z: Complex64) -> Complex64 {
    let k = (-t).exp() * z / ((1.0 + z) * (1.0 + z));
    let b = 2.0 * k - 1.0;
    let mut disc = (b * b - 4.0 * k * k).sqrt();
    if (disc * b.conj()).re > 0.0 {
        disc = -disc;
    }
    2.0 * k / (-b + disc)
}

struct Global<'a> {
    cfg: &'a SuiteConfig,
}

impl Global<'_> {
    fn run(&self, check: Check) -> Result<Vec<VerificationReport>, CheckError> {
        let started = Instant::now();
        let one = |p: Params, margin: f64| vec![VerificationReport::new(check, 0, p, margin, started)];
        Ok(match check {
            Check::R0 => {
                let root = r0();
                let defect = (amplitude_a(root) - 1.0).abs();
                let margin = (R0_TOLERANCE - (root - R0_QUOTED).abs()).min(1e-10 - defect);
                one(
                    params([
                        ("r0", json!(root)),
                        ("r0_bisection", json!(r0_by_bisection())),
                        ("amplitude_defect", json!(defect)),
                    ]),
                    margin,
                )
            }
            Check::ClassRadiiUnit => {
                let one_c = Complex64::new(1.0, 0.0);
                let c = class_radii(one_c, one_c)?;
                let err = (c.r - 0.5)
                    .abs()
                    .max((c.r1 - 1.0).abs())
                    .max((c.r2 - 1.0 / (2.0 + 3f64.sqrt())).abs());
                one(
                    params([("R", json!(c.r)), ("R1", json!(c.r1)), ("R2", json!(c.r2))]),
                    1e-12 - err,
                )
            }
            Check::RadiiConsistency => {
                let mut out = Vec::new();
                for &x in self.cfg.xs.iter().filter(|&&x| x > 2.0) {
                    let started = Instant::now();
                    let q = self.cfg.q;
                    let r = x / q.re;
                    let rad = resolvent_radii(r, q)?;
                    let cls = class_radii(Complex64::new(2.0 * x, 0.0), Complex64::new(1.0 + x, 0.0))?;
                    let (rho, rho1) = (rad.rho.unwrap_or(f64::NAN), rad.rho1.unwrap_or(f64::NAN));
                    let err = ((rho - cls.r).abs() / cls.r).max((rho1 - cls.r1).abs() / cls.r1);
                    out.push(VerificationReport::new(
                        check,
                        0,
                        params([
                            ("x", json!(x)),
                            ("rho", json!(rho)),
                            ("rho1", json!(rho1)),
                            ("class_r", json!(cls.r)),
                            ("class_r1", json!(cls.r1)),
                        ]),
                        1e-12 - err,
                        started,
                    ));
                }
                out
            }
            Check::OrderCalibration => {
                let grid = Grid::new(self.cfg.grid.radius_count, self.cfg.grid.angle_count, 0.999);
                let one_c = Complex64::new(1.0, 0.0);
                let half = ratios(&FnMap(|z: Complex64| (z / (1.0 - z), one_c / ((1.0 - z) * (1.0 - z)))), &grid)?;
                let half = orders_from_ratios(&half, 0.0, grid);
                let koebe = ratios(&FnMap(|z: Complex64| (z / (2.0 + z), 2.0 / ((2.0 + z) * (2.0 + z)))), &grid)?;
                let koebe = orders_from_ratios(&koebe, 0.0, grid);
                let err = (half.starlike_order - 0.5)
                    .abs()
                    .max((koebe.starlike_order - 2.0 / 3.0).abs())
                    .max((koebe.strong_order - 1.0 / 3.0).abs());
                one(
                    params([
                        ("half_starlike", json!(half.starlike_order)),
                        ("half_strong", json!(half.strong_order)),
                        ("koebe_starlike", json!(koebe.starlike_order)),
                        ("koebe_strong", json!(koebe.strong_order)),
                    ]),
                    1e-3 - err,
                )
            }
            Check::ResolventClosedForm => {
                let (lin, koe) = closed_form_errors(&self.cfg.solver, 1000)?;
                one(
                    params([("linear_max_error", json!(lin)), ("koebe_max_error", json!(koe))]),
                    1e-10 - lin.max(koe),
                )
            }
            Check::ExponentialFormula => {
                let errors = exponential_errors(&self.cfg.solver, 100)?;
                let monotone = errors
                    .windows(2)
                    .map(|w| 1.1 * w[0].1 - w[1].1)
                    .fold(f64::INFINITY, f64::min);
                let at256 = errors.iter().find(|e| e.0 == 256).map_or(f64::NAN, |e| e.1);
                let p = errors
                    .iter()
                    .map(|(n, e)| (format!("error_n{n}"), json!(e)))
                    .collect();
                one(p, (1e-2 - at256).min(monotone))
            }
            Check::SemigroupLaw => {
                let defect = semigroup_law_defect(&self.cfg.ode, 50)?;
                one(params([("max_defect", json!(defect))]), 1e-8 - defect)
            }
            Check::TrivialFlow => {
                let defect = trivial_flow_defect(&self.cfg.ode)?;
                one(params([("max_error", json!(defect))]), 1e-10 - defect)
            }
            Check::KappaFormula => {
                let (kappa, gamma) = resolvent_kappa(10.0, Complex64::new(1.0, 0.0))?;
                let real = 1.0 / (2f64.powf(1.0 - gamma) * 11.0);
                let margin = (1e-12 - (kappa - real).abs())
                    .min(KAPPA10_TOLERANCE - (kappa - KAPPA10_QUOTED).abs());
                one(
                    params([
                        ("kappa", json!(kappa)),
                        ("kappa_real_q", json!(real)),
                        ("gamma_r", json!(gamma)),
                    ]),
                    margin,
                )
            }
            _ => unreachable!("not a global check"),
        })
    }
}

fn ratios<M: StarlikeMap>(map: &M, grid: &Grid) -> Result<Vec<Complex64>, GeometryError> {
    (0..grid.len()).into_par_iter().map(|i| map.ratio(grid.node(i))).collect()
}

/// Max errors of the solver against closed forms for `f = qz` and the
/// Koebe-type generator, over `points` random points and `r in {0.5, 1, 3, 10}`.
pub fn closed_form_errors(opts: &SolverOptions, points: usize) -> Result<(f64, f64), ResolventError> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let q = Complex64::new(1.3, -0.4);
    let linear = Generator::linear(q).map_err(|_| ResolventError::BadParameter { r: q.re })?;
    let koebe = Generator::koebe();
    let zs: Vec<Complex64> = (0..points).map(|_| disk_point(&mut rng, 0.999)).collect();
    let mut lin = 0.0_f64;
    let mut koe = 0.0_f64;
    for r in [0.5, 1.0, 3.0, 10.0] {
        let (a, b) = zs
            .par_iter()
            .map(|&z| {
                let wl = solve_resolvent(&linear, r, z, opts)?.w;
                let wk = solve_resolvent(&koebe, r, z, opts)?.w;
                Ok(((wl - z / (1.0 + r * q)).norm(), (wk - koebe_resolvent_oracle(r, z)).norm()))
            })
            .collect::<Result<Vec<_>, ResolventError>>()?
            .into_iter()
            .fold((0.0_f64, 0.0_f64), |acc, e| (acc.0.max(e.0), acc.1.max(e.1)));
        lin = lin.max(a);
        koe = koe.max(b);
    }
    Ok((lin, koe))
}

/// `(n, max |G_{1/n}^[n](z) - u(1, z)|)` for the Koebe-type generator over
/// `points` points of the disk of radius 0.9 and `n = 16, 32, ..., 512`.
pub fn exponential_errors(opts: &SolverOptions, points: usize) -> Result<Vec<(usize, f64)>, ResolventError> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xe4b);
    let zs: Vec<Complex64> = (0..points).map(|_| disk_point(&mut rng, 0.9)).collect();
    let koebe = Generator::koebe();
    let mut out = Vec::new();
    for n in [16usize, 32, 64, 128, 256, 512] {
        let err = zs
            .par_iter()
            .map(|&z| Ok((exponential_formula(&koebe, 1.0, z, n, opts)? - koebe_flow_oracle(1.0, z)).norm()))
            .collect::<Result<Vec<f64>, ResolventError>>()?
            .into_iter()
            .fold(0.0, f64::max);
        out.push((n, err));
    }
    Ok(out)
}

/// Max of `|u(t+s, z) - u(t, u(s, z))|` over random `t, s in (0, 5]`,
/// `z` in the disk of radius 0.9, for a sampled generator and the Koebe one.
pub fn semigroup_law_defect(opts: &OdeOptions, samples: usize) -> Result<f64, FlowError> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e9);
    let sampled = sample_generator(7, 3, Complex64::new(1.0, 0.3))?;
    let koebe = Generator::koebe();
    let jobs: Vec<(f64, f64, Complex64)> = (0..samples)
        .map(|_| {
            let t = 5.0 * (1.0 - rng.random::<f64>());
            let s = 5.0 * (1.0 - rng.random::<f64>());
            (t, s, disk_point(&mut rng, 0.9))
        })
        .collect();
    let defects = jobs
        .par_iter()
        .map(|&(t, s, z)| {
            let mut worst = 0.0_f64;
            for g in [&sampled, &koebe] {
                let field = FlowField::Generator(g);
                let real = |v: f64| Complex64::new(v, 0.0);
                let joint = flow(&field, real(t + s), z, opts)?;
                let split = flow(&field, real(t), flow(&field, real(s), z, opts)?, opts)?;
                worst = worst.max((joint - split).norm());
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>, FlowError>>()?;
    Ok(defects.into_iter().fold(0.0, f64::max))
}

/// Max error of the flow of `f = qz` against `exp(-qt) z` for `|t| <= 10` on
/// rays with `|arg t| <= pi/2 - 0.05`.
pub fn trivial_flow_defect(opts: &OdeOptions) -> Result<f64, FlowError> {
    let q = Complex64::new(1.0, 0.5);
    let g = Generator::linear(q)?;
    let field = FlowField::Generator(&g);
    // admissible rays keep Re(q e^{i phi}) >= 0
    let lo = -std::f64::consts::FRAC_PI_2 - q.arg() + 0.05;
    let hi = std::f64::consts::FRAC_PI_2 - q.arg() - 0.05;
    let mut jobs = Vec::new();
    for k in 0..9 {
        let phi = lo + (hi - lo) * k as f64 / 8.0;
        for len in [0.5, 3.0, 10.0] {
            for z in [Complex64::new(0.5, 0.0), Complex64::new(-0.3, 0.8)] {
                jobs.push((Complex64::from_polar(len, phi), z));
            }
        }
    }
    let errs = jobs
        .par_iter()
        .map(|&(t, z)| Ok((flow(&field, t, z, opts)? - (-q * t).exp() * z).norm()))
        .collect::<Result<Vec<f64>, FlowError>>()?;
    Ok(errs.into_iter().fold(0.0, f64::max))
}

struct Case<'a> {
    cfg: &'a SuiteConfig,
    seed: u64,
    x: f64,
    r: f64,
    gen: Generator,
    disk: OnceCell<ResolventField>,
}

impl Case<'_> {
    fn base(&self) -> Params {
        params([
            ("x", json!(self.x)),
            ("r", json!(self.r)),
            ("q_re", json!(self.cfg.q.re)),
            ("q_im", json!(self.cfg.q.im)),
        ])
    }

    fn disk_field(&self) -> Result<&ResolventField, ResolventError> {
        if let Some(f) = self.disk.get() {
            return Ok(f);
        }
        let grid = Grid::new(self.cfg.grid.radius_count, self.cfg.grid.angle_count, 0.999);
        let field = resolvent_grid(&self.gen, self.r, &grid, &self.cfg.solver)?;
        Ok(self.disk.get_or_init(|| field))
    }

    fn shape_ratios(&self) -> Result<Vec<Complex64>, ResolventError> {
        let field = self.disk_field()?;
        Ok(field.values.iter().map(|v| shape_ratio_from(&self.gen, self.r, v)).collect())
    }

    fn run(&self, checks: &[Check]) -> Result<Vec<VerificationReport>, (Check, CheckError)> {
        let mut out = Vec::new();
        let mut covering = None;
        for &check in checks {
            if !check.applies(self.x) {
                continue;
            }
            let started = Instant::now();
            let mut p = self.base();
            let margin = self
                .margin(check, &mut p, &mut covering)
                .map_err(|e| (check, e))?;
            out.push(VerificationReport::new(check, self.seed, p, margin, started));
        }
        Ok(out)
    }

    fn margin(
        &self,
        check: Check,
        p: &mut Params,
        covering: &mut Option<crate::geometry::CoveringReport>,
    ) -> Result<f64, CheckError> {
        let mut covering_report = || -> Result<crate::geometry::CoveringReport, CheckError> {
            if covering.is_none() {
                *covering = Some(check_distortion_covering(&self.gen, self.r, &self.cfg.grid, &self.cfg.solver)?);
            }
            Ok(covering.clone().expect("just set"))
        };
        Ok(match check {
            Check::Distortion => {
                let rep = covering_report()?;
                p.insert("rho".into(), json!(rep.radii.rho));
                p.insert("rho1".into(), json!(rep.radii.rho1));
                p.insert("sup".into(), json!(rep.extended_sup));
                rep.distortion_margin.unwrap_or(f64::NAN)
            }
            Check::DiskBound => {
                let rep = covering_report()?;
                p.insert("rho3".into(), json!(rep.radii.rho3));
                p.insert("sup".into(), json!(rep.disk_sup));
                rep.disk_bound_margin.unwrap_or(f64::NAN)
            }
            Check::Covering => {
                let rep = covering_report()?;
                let ext = rep.extended_covering.as_ref();
                let failures = rep.disk_covering.failures() + ext.map_or(0, |e| e.failures());
                p.insert("rho2".into(), json!(rep.radii.rho2));
                p.insert("rho4".into(), json!(rep.radii.rho4));
                p.insert("disk_failures".into(), json!(rep.disk_covering.failures()));
                p.insert("extended_failures".into(), json!(ext.map(|e| e.failures())));
                p.insert("disk_min_distance".into(), json!(rep.disk_covering.min_distance));
                p.insert("extended_min_distance".into(), json!(ext.map(|e| e.min_distance)));
                0.0 - failures as f64
            }
            Check::StarlikeHalf => {
                let m = min_re(&self.shape_ratios()?);
                p.insert("min_re_s".into(), json!(m));
                m - 0.5
            }
            Check::StarlikeOrder => {
                let m = min_re(&self.shape_ratios()?);
                let bound = self.x / (6.0 + self.x);
                p.insert("min_re_s".into(), json!(m));
                p.insert("bound".into(), json!(bound));
                m - bound
            }
            Check::DiskContainment => {
                let m = disk_containment_from(&self.gen, self.disk_field()?)?;
                p.insert("amplitude".into(), json!(amplitude_a(self.x)));
                m
            }
            Check::OrderBounds => {
                let field = self.disk_field()?;
                let theta = 0.5 * (6.0 / self.x).min(1.0).acos();
                let est = orders_from_ratios(&self.shape_ratios()?, theta, field.grid);
                let th = theoretical_orders(self.x, theta)?;
                p.insert("theta".into(), json!(theta));
                p.insert("starlike_estimate".into(), json!(est.starlike_order));
                p.insert("alpha_r".into(), json!(th.alpha_r));
                p.insert("strong_estimate".into(), json!(est.strong_order));
                p.insert("beta_r".into(), json!(th.beta_r));
                p.insert("spirallike_estimate".into(), json!(est.spirallike_order));
                p.insert("alpha_r_theta".into(), json!(th.alpha_r_theta));
                let mut m = (est.starlike_order - th.alpha_r).min(th.beta_r - est.strong_order);
                if let (Some(e), Some(t)) = (est.spirallike_order, th.alpha_r_theta) {
                    m = m.min(e - t);
                }
                m
            }
            Check::HalfPlane => half_plane_from(&self.gen, self.disk_field()?)?,
            Check::Squeezing | Check::SectorProbe | Check::BoundaryFixedPoint => {
                let p_grid = Grid::new(self.cfg.grid.radius_count, self.cfg.grid.angle_count, 0.999);
                let field = FlowField::resolvent(&self.gen, self.r);
                let mut samples = squeeze_samples(self.cfg.squeeze_samples, 20.0, 0.99);
                samples.extend(probing_samples(&field, &p_grid, 4, 20.0)?);
                let rep = resolvent_semigroup_check(&self.gen, self.r, &samples, &p_grid, &self.cfg.ode)?;
                p.insert("kappa".into(), json!(rep.kappa));
                p.insert("gamma_r".into(), json!(rep.gamma_r));
                match check {
                    Check::Squeezing => {
                        p.insert("worst_ratio".into(), json!(rep.squeeze.worst_ratio));
                        p.insert("min_re_p".into(), json!(rep.squeeze.min_re_p));
                        p.insert("sides_agree".into(), json!(rep.squeeze.sides_agree));
                        p.insert("samples".into(), json!(samples.len()));
                        1.0 - rep.squeeze.worst_ratio
                    }
                    Check::SectorProbe => {
                        let outside = rep.outside_probes.iter().filter(|r| r.escaped).count();
                        p.insert("sector_opening".into(), json!(rep.sector_opening));
                        p.insert("inside_probes".into(), json!(rep.inside_probes.len()));
                        p.insert("outside_probes".into(), json!(rep.outside_probes.len()));
                        p.insert("outside_escapes".into(), json!(outside));
                        0.0 - rep.inside_escapes() as f64
                    }
                    _ => {
                        p.insert("boundary_min_modulus".into(), json!(rep.boundary_min_modulus));
                        rep.boundary_min_modulus
                    }
                }
            }
            Check::UniformConvergence => {
                let (kappa, _) = resolvent_kappa(self.r, self.cfg.q)?;
                let t = 3.0 / kappa;
                let field = FlowField::resolvent(&self.gen, self.r);
                let sup = (0..64)
                    .into_par_iter()
                    .map(|k| {
                        let z = Complex64::from_polar(0.999, TAU * k as f64 / 64.0);
                        flow(&field, Complex64::new(t, 0.0), z, &self.cfg.ode).map(|u| u.norm())
                    })
                    .collect::<Result<Vec<_>, _>>()?
                    .into_iter()
                    .fold(0.0, f64::max);
                p.insert("t".into(), json!(t));
                p.insert("sup".into(), json!(sup));
                (-3f64).exp() + 1e-6 - sup
            }
            _ => unreachable!("not a per-x check"),
        })
    }
}

fn min_re(values: &[Complex64]) -> f64 {
    values.iter().map(|s| s.re).fold(f64::INFINITY, f64::min)
}

fn normalized_convergence(cfg: &SuiteConfig, seed: u64) -> Result<VerificationReport, CheckError> {
    let started = Instant::now();
    let gen = sample_generator(seed, cfg.n_atoms, cfg.q)?;
    let compact = Grid::new(cfg.grid.radius_count / 4 + 1, cfg.grid.angle_count / 4 + 1, 0.9);
    let whole = Grid::new(cfg.grid.radius_count / 4 + 1, cfg.grid.angle_count / 4 + 1, 0.999);
    let rs = [10.0, 100.0, 1000.0, 10000.0];
    let mut p = params([("q_re", json!(cfg.q.re)), ("q_im", json!(cfg.q.im))]);
    let mut devs = Vec::new();
    for r in rs {
        let d = normalized_deviation(&gen, r, &compact, &cfg.solver)?;
        let w = normalized_deviation(&gen, r, &whole, &cfg.solver)?;
        p.insert(format!("compact_r{r}"), json!(d));
        p.insert(format!("whole_r{r}"), json!(w));
        devs.push(d);
    }
    let margin = devs.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
    Ok(VerificationReport::new(Check::NormalizedConvergence, seed, p, margin, started))
}

/// `r` with `r Re p(0) >= x`; the sampled masses only sum to `Re q` up to rounding.
fn radius_for(gen: &Generator, x: f64) -> f64 {
    let q = gen.q().re;
    let mut r = x / q;
    while r * q < x {
        r = r.next_up();
    }
    r
}

fn infra(check: Check, seed: u64, e: impl std::fmt::Display) -> SuiteError {
    SuiteError::Infrastructure {
        check_id: check.id().to_string(),
        seed,
        message: e.to_string(),
    }
}

enum Job {
    Global(Check),
    Case(u64, f64),
    Seed(u64),
}

/// Runs the configured checks. Individual bound violations show up as
/// failing reports; errors that stop a check from running abort the suite.
pub fn run_suite(config: &SuiteConfig) -> Result<Vec<VerificationReport>, SuiteError> {
    let checks = config.selected()?;
    let per_x: Vec<Check> = checks.iter().copied().filter(|c| c.scope() == Scope::PerX).collect();
    let mut jobs: Vec<Job> = checks
        .iter()
        .filter(|c| c.scope() == Scope::Global)
        .map(|&c| Job::Global(c))
        .collect();
    if !per_x.is_empty() {
        for &seed in &config.seeds {
            for &x in &config.xs {
                jobs.push(Job::Case(seed, x));
            }
        }
    }
    if checks.contains(&Check::NormalizedConvergence) {
        jobs.extend(config.seeds.iter().map(|&s| Job::Seed(s)));
    }
    if !(config.q.re > 0.0) {
        return Err(HerglotzError::BadQ { q: config.q }.into());
    }

    let batches = jobs
        .par_iter()
        .map(|job| match *job {
            Job::Global(check) => Global { cfg: config }.run(check).map_err(|e| infra(check, 0, e)),
            Job::Case(seed, x) => {
                let gen = sample_generator(seed, config.n_atoms, config.q)?;
                let case = Case {
                    cfg: config,
                    seed,
                    x,
                    r: radius_for(&gen, x),
                    gen,
                    disk: OnceCell::new(),
                };
                case.run(&per_x).map_err(|(c, e)| infra(c, seed, e))
            }
            Job::Seed(seed) => normalized_convergence(config, seed)
                .map(|r| vec![r])
                .map_err(|e| infra(Check::NormalizedConvergence, seed, e)),
        })
        .collect::<Result<Vec<_>, SuiteError>>()?;
    let mut reports: Vec<VerificationReport> = batches.into_iter().flatten().collect();
    reports.sort_by(|a, b| a.check_id.cmp(&b.check_id).then(a.seed.cmp(&b.seed)));
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub total: usize,
    pub failed: usize,
    pub min_margin: f64,
    pub worst_check: Option<String>,
}

impl SuiteSummary {
    pub fn all_pass(&self) -> bool {
        self.failed == 0
    }
}

pub fn summarize(reports: &[VerificationReport]) -> SuiteSummary {
    let worst = reports
        .iter()
        .filter(|r| !r.margin.is_nan())
        .min_by(|a, b| a.margin.total_cmp(&b.margin));
    SuiteSummary {
        total: reports.len(),
        failed: reports.iter().filter(|r| !r.pass).count(),
        min_margin: worst.map_or(f64::NAN, |r| r.margin),
        worst_check: worst.map(|r| r.check_id.clone()),
    }
}

/// One JSON object per line.
pub fn write_jsonl<W: Write>(reports: &[VerificationReport], mut out: W) -> std::io::Result<()> {
    for r in reports {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Summary CSV with columns `check_id,seed,x,margin,pass`.
pub fn write_csv<W: Write>(reports: &[VerificationReport], mut out: W) -> std::io::Result<()> {
    writeln!(out, "check_id,seed,x,margin,pass")?;
    for r in reports {
        let x = r.x().map(fmt17).unwrap_or_default();
        writeln!(out, "{},{},{},{},{}", r.check_id, r.seed, x, fmt17(r.margin), r.pass)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_atom_normalized() {
        let g = sample_generator(1, 1, c(1.0, 0.0)).unwrap();
        match &g {
            Generator::Herglotz(h) => {
                assert_eq!(h.atoms().len(), 1);
                assert_eq!(h.atoms()[0].mass, 1.0);
            }
            _ => panic!("expected a measure generator"),
        }
        assert!((g.q() - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn sampler_is_deterministic() {
        let a = sample_generator(1, 4, c(1.0, 0.2)).unwrap();
        let b = sample_generator(1, 4, c(1.0, 0.2)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_generator(2, 4, c(1.0, 0.2)).unwrap());
    }

    #[test]
    fn sampler_contract() {
        let g = sample_generator(2, 5, c(1.0, 0.5)).unwrap();
        let Generator::Herglotz(h) = &g else { panic!() };
        assert!((h.total_mass() - 1.0).abs() < 1e-15);
        assert_eq!(h.gamma(), 0.5);
        assert!(h.atoms().iter().all(|a| (0.0..TAU).contains(&a.angle)));
        assert!(matches!(sample_generator(1, 3, c(0.0, 1.0)), Err(HerglotzError::BadQ { .. })));
        assert!(matches!(sample_generator(1, 0, c(1.0, 0.0)), Err(HerglotzError::EmptyMeasure)));
    }

    #[test]
    fn koebe_resolvent_oracle_solves_equation() {
        for r in [0.5, 1.0, 3.0, 10.0] {
            for z in [c(0.5, 0.0), c(-0.9, 0.1), c(0.3, -0.7)] {
                let w = koebe_resolvent_oracle(r, z);
                let f = w * (1.0 + w) / (1.0 - w);
                assert!((w + r * f - z).norm() < 1e-14);
                assert!(w.norm() < 1.0);
            }
        }
        assert!((koebe_resolvent_oracle(1.0, c(0.5, 0.0)) - c(0.2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn r0_check_only() {
        let reports = run_suite(&SuiteConfig::with_checks(["r0"])).unwrap();
        assert_eq!(reports.len(), 1);
        assert!(reports[0].pass);
        assert!(reports[0].margin >= 0.0 && reports[0].margin <= 5e-5);
    }

    #[test]
    fn unknown_check_rejected() {
        assert!(matches!(
            run_suite(&SuiteConfig::with_checks(["nope"])),
            Err(SuiteError::UnknownCheck(_))
        ));
    }

    #[test]
    fn unit_class_check() {
        let reports = run_suite(&SuiteConfig::with_checks(["class-radii-unit"])).unwrap();
        let r = &reports[0];
        assert!(r.pass);
        assert!((r.parameters["R"].as_f64().unwrap() - 0.5).abs() < 1e-12);
        assert!((r.parameters["R2"].as_f64().unwrap() - 1.0 / (2.0 + 3f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn report_roundtrip_and_csv() {
        let mut cfg = SuiteConfig::with_checks(["starlike-half", "r0"]);
        cfg.seeds = vec![3, 1];
        cfg.xs = vec![2.5, 8.0];
        cfg.grid = Grid::new(4, 16, 0.999);
        let reports = run_suite(&cfg).unwrap();
        let ids: Vec<(&str, u64)> = reports.iter().map(|r| (r.check_id.as_str(), r.seed)).collect();
        assert_eq!(
            ids,
            vec![("r0", 0), ("starlike-half", 1), ("starlike-half", 1), ("starlike-half", 3), ("starlike-half", 3)]
        );
        let mut buf = Vec::new();
        write_jsonl(&reports, &mut buf).unwrap();
        let back: Vec<VerificationReport> = String::from_utf8(buf)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(back, reports);
        let mut csv = Vec::new();
        write_csv(&reports, &mut csv).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        assert!(csv.starts_with("check_id,seed,x,margin,pass\n"));
        assert!(csv.lines().nth(2).unwrap().starts_with("starlike-half,1,2.5,"));
    }

    #[test]
    fn pass_threshold() {
        let p = Params::new();
        let r = VerificationReport::new(Check::R0, 0, p.clone(), -1e-8, Instant::now());
        assert!(r.pass);
        let r = VerificationReport::new(Check::R0, 0, p, -1.1e-8, Instant::now());
        assert!(!r.pass);
    }

    #[test]
    fn summary_counts() {
        let p = Params::new();
        let reports = vec![
            VerificationReport::new(Check::R0, 0, p.clone(), 0.1, Instant::now()),
            VerificationReport::new(Check::Covering, 1, p, -2.0, Instant::now()),
        ];
        let s = summarize(&reports);
        assert_eq!(s.failed, 1);
        assert_eq!(s.min_margin, -2.0);
        assert_eq!(s.worst_check.as_deref(), Some("covering"));
    }
}
