//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use rayon::prelude::*;
use resolvent_core::ode::OdeOptions;
use resolvent_core::semigroup::{resolvent_kappa, resolvent_semigroup_check, squeeze_samples};
use resolvent_core::verifier::{KAPPA10_QUOTED, KAPPA10_TOLERANCE, PASS_THRESHOLD};
use resolvent_core::{
    run_suite, sample_generator, Complex64, Generator, Grid, SuiteConfig, VerificationReport,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn min_margin<'a>(reports: impl IntoIterator<Item = &'a VerificationReport>) -> (usize, f64) {
    reports
        .into_iter()
        .fold((0, f64::INFINITY), |(n, m), r| (n + 1, m.min(r.margin)))
}

fn select<'a>(
    reports: &'a [VerificationReport],
    id: &'a str,
    xs: &'a [f64],
) -> impl Iterator<Item = &'a VerificationReport> + 'a {
    reports
        .iter()
        .filter(move |r| r.check_id == id && r.x().is_none_or(|x| xs.contains(&x)))
}

/// Every selected report passes; `n` must be as expected.
fn all_of(reports: &[VerificationReport], ids: &[&str], xs: &[f64], expected: usize) -> Outcome {
    let mut total = 0;
    let mut worst = f64::INFINITY;
    let mut failed = 0;
    for id in ids {
        let (n, m) = min_margin(select(reports, id, xs));
        failed += select(reports, id, xs).filter(|r| !r.pass).count();
        total += n;
        worst = worst.min(m);
    }
    Outcome {
        pass: failed == 0 && total == expected,
        detail: format!("{total} reports (expected {expected}), {failed} failed, min margin {worst:.3e}"),
    }
}

fn global<'a>(reports: &'a [VerificationReport], id: &str) -> &'a VerificationReport {
    reports
        .iter()
        .find(|r| r.check_id == id)
        .unwrap_or_else(|| panic!("missing report {id}"))
}

fn param(r: &VerificationReport, key: &str) -> String {
    r.parameters
        .get(key)
        .map_or_else(|| "-".into(), |v| v.to_string())
}

fn squeezing_at_ten(ode: &OdeOptions) -> Outcome {
    let q = Complex64::new(1.0, 0.0);
    let (kappa, gamma) = resolvent_kappa(10.0, q).expect("x = 10 is in range");
    let real_q = 1.0 / (2f64.powf(1.0 - gamma) * 11.0);
    let formula_ok = (kappa - real_q).abs() <= 1e-12;
    let quoted_ok = (kappa - KAPPA10_QUOTED).abs() <= KAPPA10_TOLERANCE;

    let mut gens = vec![Generator::koebe()];
    gens.extend((1..=20).map(|s| sample_generator(s, 3, q).expect("valid sampler input")));
    let samples = squeeze_samples(100, 20.0, 0.99);
    let p_grid = Grid::new(16, 64, 0.999);
    let excess = gens
        .par_iter()
        .map(|g| {
            resolvent_semigroup_check(g, 10.0, &samples, &p_grid, ode)
                .map(|rep| rep.squeeze.worst_excess)
        })
        .collect::<Result<Vec<_>, _>>();
    let (squeeze_ok, worst) = match excess {
        Ok(v) => {
            let w = v.into_iter().fold(f64::NEG_INFINITY, f64::max);
            (w <= 1e-8, format!("{w:.3e}"))
        }
        Err(e) => (false, format!("error: {e}")),
    };
    Outcome {
        pass: formula_ok && quoted_ok && squeeze_ok,
        detail: format!(
            "kappa(10) = {kappa:.16} (real-q form {real_q:.16}, quoted {KAPPA10_QUOTED}), \
             worst |u| - |z|e^(-kappa t) over 21 generators x 100 samples = {worst}"
        ),
    }
}

fn sector_probes(ode: &OdeOptions) -> Outcome {
    let cases = [(Complex64::new(1.0, 0.0), 10.0), (Complex64::new(1.0, 0.5), 12.0)];
    let p_grid = Grid::new(8, 32, 0.999);
    let samples = squeeze_samples(4, 5.0, 0.9);
    let mut pass = true;
    let mut parts = Vec::new();
    for (q, r) in cases {
        let mut gens = vec![Generator::omega(q, Complex64::new(1.0, 0.0), 1).expect("valid")];
        gens.extend((1..=5).map(|s| sample_generator(s, 3, q).expect("valid sampler input")));
        let mut inside = 0;
        let mut escapes = 0;
        let mut outside = 0;
        let mut outside_escapes = 0;
        for g in &gens {
            match resolvent_semigroup_check(g, r, &samples, &p_grid, ode) {
                Ok(rep) => {
                    inside += rep.inside_probes.len();
                    escapes += rep.inside_escapes();
                    outside += rep.outside_probes.len();
                    outside_escapes += rep.outside_probes.iter().filter(|p| p.escaped).count();
                }
                Err(e) => {
                    pass = false;
                    parts.push(format!("q={q} r={r}: error {e}"));
                }
            }
        }
        pass &= escapes == 0;
        parts.push(format!(
            "q={q} r={r}: {escapes}/{inside} inside rays escaped, {outside_escapes}/{outside} outside rays escaped (informational)"
        ));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn main() -> ExitCode {
    let started = Instant::now();
    let ode = OdeOptions::default();

    let globals = run_suite(&SuiteConfig::with_checks([
        "resolvent-closed-form",
        "r0",
        "class-radii-unit",
        "order-calibration",
        "exponential-formula",
        "kappa-formula",
        "semigroup-law",
        "trivial-flow",
    ]))
    .expect("global checks run");

    let sweep_xs = [2.5, 5.0, 8.0, 10.0, 50.0];
    let containment_xs = [6.0, 8.0, 20.0, 100.0];
    let all_xs = [0.1, 0.5, 1.0, 2.0, 2.5, 5.0, 6.0, 8.0, 10.0, 20.0, 50.0, 100.0];
    let mut cfg = SuiteConfig::with_checks([
        "distortion",
        "disk-bound",
        "covering",
        "disk-containment",
        "starlike-half",
        "starlike-order",
        "half-plane",
    ]);
    cfg.xs = all_xs.to_vec();
    let sweep = run_suite(&cfg).expect("sweep runs");
    let seeds = cfg.seeds.len();

    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let single = |r: &VerificationReport, detail: String| Outcome {
        pass: r.pass,
        detail: format!("{detail}, margin {:.3e}", r.margin),
    };

    let cf = global(&globals, "resolvent-closed-form");
    results.push((
        1,
        "closed-form resolvents to 1e-10",
        single(
            cf,
            format!(
                "linear max error {}, Koebe-type max error {}",
                param(cf, "linear_max_error"),
                param(cf, "koebe_max_error")
            ),
        ),
    ));

    let r0 = global(&globals, "r0");
    results.push((
        2,
        "r0 within 5e-5 of 5.92434 and |A(r0) - 1| <= 1e-10",
        single(r0, format!("r0 = {}, |A - 1| = {}", param(r0, "r0"), param(r0, "amplitude_defect"))),
    ));

    let cr = global(&globals, "class-radii-unit");
    results.push((
        3,
        "class radii at (1, 1) to 1e-12",
        single(cr, format!("R = {}, R1 = {}, R2 = {}", param(cr, "R"), param(cr, "R1"), param(cr, "R2"))),
    ));

    let n_sweep = seeds * sweep_xs.len();
    results.push((
        4,
        "distortion sup |G_r| <= rho1 + 1e-8 on the extended disk",
        all_of(&sweep, &["distortion"], &sweep_xs, n_sweep),
    ));
    results.push((
        5,
        "disk bound sup |G_r| <= 3/(1+x) + 1e-8",
        all_of(&sweep, &["disk-bound"], &sweep_xs, n_sweep),
    ));
    results.push((
        6,
        "covering winding numbers all equal 1",
        all_of(&sweep, &["covering"], &sweep_xs, n_sweep),
    ));

    let n_cont = seeds * containment_xs.len();
    let containment = all_of(&sweep, &["disk-containment"], &containment_xs, n_cont);
    let half = all_of(&sweep, &["starlike-half"], &all_xs, seeds * all_xs.len());
    let order_xs: Vec<f64> = all_xs.iter().copied().filter(|&x| x >= 6.0).collect();
    let order = all_of(&sweep, &["starlike-order"], &order_xs, seeds * order_xs.len());
    results.push((
        7,
        "disk containment, Re S >= 1/2 for all x, Re S >= x/(6+x) for x >= 6",
        Outcome {
            pass: containment.pass && half.pass && order.pass,
            detail: format!(
                "containment: {}; half: {}; x/(6+x): {}",
                containment.detail, half.detail, order.detail
            ),
        },
    ));

    let oc = global(&globals, "order-calibration");
    results.push((
        8,
        "order estimator calibration within 1e-3",
        single(
            oc,
            format!(
                "z/(1-z) starlike {}, G_1 starlike {}, G_1 strong {}",
                param(oc, "half_starlike"),
                param(oc, "koebe_starlike"),
                param(oc, "koebe_strong")
            ),
        ),
    ));

    let ef = global(&globals, "exponential-formula");
    results.push((
        9,
        "exponential formula error <= 1e-2 at n = 256, nonincreasing within 10%",
        single(
            ef,
            format!(
                "errors n=16 {}, n=256 {}, n=512 {}",
                param(ef, "error_n16"),
                param(ef, "error_n256"),
                param(ef, "error_n512")
            ),
        ),
    ));

    let kf = global(&globals, "kappa-formula");
    let mut sq = squeezing_at_ten(&ode);
    sq.pass &= kf.pass;
    results.push((10, "squeezing |u(t,z)| <= |z| e^(-kappa t) + 1e-8 at q = 1, r = 10", sq));

    results.push((11, "no escape on rays inside the sector up to |t| = 10", sector_probes(&ode)));

    let hp_xs: Vec<f64> = all_xs.iter().copied().filter(|&x| x >= 6.0).collect();
    results.push((
        12,
        "half-plane margin >= -1e-8 for x >= 6",
        all_of(&sweep, &["half-plane"], &hp_xs, seeds * hp_xs.len()),
    ));

    let sl = global(&globals, "semigroup-law");
    let tf = global(&globals, "trivial-flow");
    results.push((
        13,
        "semigroup law <= 1e-8 and trivial flow <= 1e-10",
        Outcome {
            pass: sl.pass && tf.pass,
            detail: format!(
                "semigroup defect {}, trivial flow error {}",
                param(sl, "max_defect"),
                param(tf, "max_error")
            ),
        },
    ));

    let mut failed = 0;
    for (n, name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!("{tag} criterion {n}: {name} ({})", o.detail);
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1}s (pass threshold {PASS_THRESHOLD:e})",
        results.len() - failed,
        results.len(),
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
