//! Signed-margin checks of the distortion, covering, starlikeness and
//! half-plane bounds for resolvents. A nonnegative margin means the bound
//! holds on the sampled nodes.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::radii::{amplitude_checked, r0, resolvent_radii, ResolventRadii};
use super::shape_ratio_from;
use super::winding::{circle_probes, winding_numbers, Winding};
use super::GeometryError;
use crate::grid::Grid;
use crate::herglotz::Generator;
use crate::resolvent::{
    resolvent_grid, solve_resolvent, ResolventField, SolverOptions, EXTENSION_MARGIN,
};

pub const CURVE_SAMPLES: usize = 4096;
pub const PROBE_COUNT: usize = 64;
pub const PROBE_FRACTION: f64 = 0.99;
/// Image curves are traced at this fraction of the domain radius.
pub const CURVE_FRACTION: f64 = 1.0 - 1e-3;

/// `w G_r'(w) / G_r(w)` at every grid node.
pub fn shape_ratio_field(
    gen: &Generator,
    r: f64,
    grid: &Grid,
    opts: &SolverOptions,
) -> Result<Vec<Complex64>, GeometryError> {
    let field = resolvent_grid(gen, r, grid, opts)?;
    Ok(field
        .values
        .par_iter()
        .map(|v| shape_ratio_from(gen, r, v))
        .collect())
}

/// Grid minimum of `Re(w G_r'/G_r)`.
pub fn min_re_shape_ratio(
    gen: &Generator,
    r: f64,
    grid: &Grid,
    opts: &SolverOptions,
) -> Result<f64, GeometryError> {
    Ok(shape_ratio_field(gen, r, grid, opts)?
        .iter()
        .map(|s| s.re)
        .fold(f64::INFINITY, f64::min))
}

/// Margin of the disk bound `|S - 1/(1-A^2)| <= A/(1-A^2)` with `A = A(r Re q)`.
pub fn check_disk_containment(
    gen: &Generator,
    r: f64,
    grid: &Grid,
    opts: &SolverOptions,
) -> Result<f64, GeometryError> {
    containment_threshold(gen, r)?;
    disk_containment_from(gen, &resolvent_grid(gen, r, grid, opts)?)
}

fn containment_threshold(gen: &Generator, r: f64) -> Result<f64, GeometryError> {
    let x = r * gen.q().re;
    let threshold = r0();
    if !(x > threshold) {
        return Err(GeometryError::BelowThreshold { x, threshold });
    }
    amplitude_checked(x)
}

/// [`check_disk_containment`] on an already solved field.
pub fn disk_containment_from(
    gen: &Generator,
    field: &ResolventField,
) -> Result<f64, GeometryError> {
    let a = containment_threshold(gen, field.r)?;
    let denom = 1.0 - a * a;
    let center = Complex64::new(1.0 / denom, 0.0);
    let radius = a / denom;
    Ok(field
        .values
        .iter()
        .map(|v| radius - (shape_ratio_from(gen, field.r, v) - center).norm())
        .fold(f64::INFINITY, f64::min))
}

/// Winding numbers of an image curve about probes on one circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSummary {
    pub curve_radius: f64,
    pub probe_radius: f64,
    pub windings: Vec<i64>,
    pub max_integer_defect: f64,
    pub min_distance: f64,
}

impl ProbeSummary {
    fn from_windings(curve_radius: f64, probe_radius: f64, w: &[Winding]) -> Self {
        Self {
            curve_radius,
            probe_radius,
            windings: w.iter().map(|w| w.winding).collect(),
            max_integer_defect: w
                .iter()
                .map(|w| (w.raw - w.winding as f64).abs())
                .fold(0.0, f64::max),
            min_distance: w.iter().map(|w| w.min_distance).fold(f64::INFINITY, f64::min),
        }
    }

    /// Every probe is enclosed exactly once.
    pub fn covered(&self) -> bool {
        self.windings.iter().all(|&w| w == 1)
    }

    pub fn failures(&self) -> usize {
        self.windings.iter().filter(|&&w| w != 1).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringReport {
    pub radii: ResolventRadii,
    /// Grid supremum of `|G_r|` on the unit disk.
    pub disk_sup: f64,
    /// `rho3 - disk_sup` when `x > 2`.
    pub disk_bound_margin: Option<f64>,
    /// Grid supremum of `|G_r|` on the extended disk.
    pub extended_sup: Option<f64>,
    /// `rho1 - extended_sup`.
    pub distortion_margin: Option<f64>,
    /// Image of the unit circle around probes at `0.99 rho4`.
    pub disk_covering: ProbeSummary,
    /// Image of the extended circle around probes at `0.99 rho2`.
    pub extended_covering: Option<ProbeSummary>,
}

impl CoveringReport {
    pub fn covered(&self) -> bool {
        self.disk_covering.covered()
            && self.extended_covering.as_ref().is_none_or(ProbeSummary::covered)
    }
}

fn covering_summary(
    gen: &Generator,
    r: f64,
    curve_radius: f64,
    probe_radius: f64,
    opts: &SolverOptions,
) -> Result<ProbeSummary, GeometryError> {
    let probes = circle_probes(probe_radius, PROBE_COUNT);
    let curve = |t: f64| -> Result<Complex64, GeometryError> {
        Ok(solve_resolvent(gen, r, Complex64::from_polar(curve_radius, t), opts)?.w)
    };
    let w = winding_numbers(curve, CURVE_SAMPLES, &probes)?;
    Ok(ProbeSummary::from_windings(curve_radius, probe_radius, &w))
}

/// Distortion and covering of `G_r`. The grid supplies the sampling density;
/// the disk grid reaches `0.999` and the extended grid `rho - 1e-6`.
pub fn check_distortion_covering(
    gen: &Generator,
    r: f64,
    grid: &Grid,
    opts: &SolverOptions,
) -> Result<CoveringReport, GeometryError> {
    let radii = resolvent_radii(r, gen.q())?;
    let disk_grid = Grid::new(grid.radius_count, grid.angle_count, 0.999);
    let disk_sup = resolvent_grid(gen, r, &disk_grid, opts)?.max_modulus();
    let disk_covering =
        covering_summary(gen, r, CURVE_FRACTION, PROBE_FRACTION * radii.rho4, opts)?;

    let mut report = CoveringReport {
        radii,
        disk_sup,
        disk_bound_margin: radii.rho3.map(|b| b - disk_sup),
        extended_sup: None,
        distortion_margin: None,
        disk_covering,
        extended_covering: None,
    };
    if let (Some(rho), Some(rho1), Some(rho2)) = (radii.rho, radii.rho1, radii.rho2) {
        let ext_grid = Grid::new(grid.radius_count, grid.angle_count, rho - EXTENSION_MARGIN);
        let sup = resolvent_grid(gen, r, &ext_grid, opts)?.max_modulus();
        report.extended_sup = Some(sup);
        report.distortion_margin = Some(rho1 - sup);
        report.extended_covering = Some(covering_summary(
            gen,
            r,
            CURVE_FRACTION * rho,
            PROBE_FRACTION * rho2,
            opts,
        )?);
    }
    Ok(report)
}

/// Margin of `Re[((1 + rq) G_r(z) / z)^{1/(1 - gamma_r)}] > 1/2`, valid for `x >= 6`.
pub fn check_half_plane(
    gen: &Generator,
    r: f64,
    grid: &Grid,
    opts: &SolverOptions,
) -> Result<f64, GeometryError> {
    half_plane_exponent(gen, r)?;
    half_plane_from(gen, &resolvent_grid(gen, r, grid, opts)?)
}

fn half_plane_exponent(gen: &Generator, r: f64) -> Result<f64, GeometryError> {
    let x = r * gen.q().re;
    if !(x >= 6.0) {
        return Err(GeometryError::BelowThreshold { x, threshold: 6.0 });
    }
    let a = amplitude_checked(x)?;
    let gamma = (1.0 - a) / (1.0 + a);
    Ok(1.0 / (1.0 - gamma))
}

/// [`check_half_plane`] on an already solved field.
pub fn half_plane_from(gen: &Generator, field: &ResolventField) -> Result<f64, GeometryError> {
    let exponent = half_plane_exponent(gen, field.r)?;
    let scale = 1.0 + field.r * gen.q();
    let mut min = f64::INFINITY;
    for (z, v) in field.iter() {
        let base = scale * v.w / z;
        if !(base.re > 0.0) {
            return Err(GeometryError::BranchAmbiguous { z });
        }
        min = min.min(base.powf(exponent).re);
    }
    Ok(min - 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn containment_linear_x10() {
        let g = Generator::linear(c(1.0, 0.0)).unwrap();
        let m = check_disk_containment(&g, 10.0, &Grid::new(8, 16, 0.999), &opts()).unwrap();
        let a = 660.0 / 1184.0;
        assert!((m - a / (1.0 + a)).abs() < 1e-12);
        assert!((m - 0.3579).abs() < 1e-4);
    }

    #[test]
    fn containment_below_threshold() {
        let g = Generator::linear(c(1.0, 0.0)).unwrap();
        assert!(matches!(
            check_disk_containment(&g, 5.0, &Grid::new(2, 2, 0.5), &opts()),
            Err(GeometryError::BelowThreshold { .. })
        ));
    }

    #[test]
    fn half_plane_linear() {
        let g = Generator::linear(c(1.0, 0.0)).unwrap();
        let m = check_half_plane(&g, 10.0, &Grid::new(4, 8, 0.999), &opts()).unwrap();
        assert!((m - 0.5).abs() < 1e-12);
        assert!(matches!(
            check_half_plane(&g, 4.0, &Grid::new(4, 8, 0.999), &opts()),
            Err(GeometryError::BelowThreshold { .. })
        ));
    }

    #[test]
    fn covering_linear_r10() {
        let g = Generator::linear(c(1.0, 0.0)).unwrap();
        let rep = check_distortion_covering(&g, 10.0, &Grid::new(16, 64, 1.0), &opts()).unwrap();
        let rho = rep.radii.rho.unwrap();
        let ext = rep.extended_sup.unwrap();
        assert!((ext - (rho - 1e-6) / 11.0).abs() < 1e-12);
        assert!((rho / 11.0 - 0.1970168).abs() < 1e-7);
        assert!(ext <= rep.radii.rho1.unwrap());
        assert!((rep.disk_sup - 0.999 / 11.0).abs() < 1e-12);
        assert!(rep.disk_bound_margin.unwrap() > 0.0);
        assert!(rep.covered());
    }

    #[test]
    fn covering_koebe_r1() {
        let rep =
            check_distortion_covering(&Generator::koebe(), 1.0, &Grid::new(8, 32, 1.0), &opts())
                .unwrap();
        assert!(rep.extended_covering.is_none());
        assert!((rep.disk_covering.probe_radius - 0.99 / (2.0 + 3f64.sqrt())).abs() < 1e-15);
        assert!(rep.disk_covering.covered());
        assert!(rep.disk_covering.max_integer_defect < 1e-6);
    }
}
