//! Runtime validation suite: re-checks every structural invariant of the
//! configured model with measured margins. One `CheckResult` per
//! invariant; the `validate` subcommand writes them as CSV and fails on
//! the first broken check.

use std::path::Path;

use halfspace_core::boundary::{build_bar_k, build_boundary_ops, pk_check, weighted_norm_estimate};
use halfspace_core::linalg::sym_eig;
use halfspace_core::models::ModelKind;
use halfspace_core::quadrature::{
    gaussian_full_moment, gaussian_half_moment, MeasureId, QuadratureRule,
};
use halfspace_core::rng::SplitMix64;

use crate::config::RunConfig;
use crate::driver::{build, build_with_overrides, x_grid_for};
use crate::output::{fmt_f64, write_atomic, Csv};
use crate::CliError;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    /// Measured margin; the meaning is check-specific but always satisfies
    /// `pass == (measured <= threshold)`.
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckResult {
    fn new(name: &'static str, measured: f64, threshold: f64) -> Self {
        CheckResult { name, measured, threshold, pass: measured <= threshold }
    }
}

/// Moments of the truncated Gaussian weight by an independent fine
/// composite rule (200 panels x 24 points, unrelated to the Stieltjes
/// discretization used to build the rules under test). The closed-form
/// untruncated moments drift away from the truncated ones at high degree.
fn truncated_gaussian_moment(k: usize, cutoff: f64, full: bool) -> f64 {
    let lo = if full { -cutoff } else { 0.0 };
    let panel = halfspace_core::quadrature::gauss_legendre(24, 0.0, 1.0);
    let panels = 200;
    let h = (cutoff - lo) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let pa = lo + h * p as f64;
        for (t, w) in panel.nodes.iter().zip(panel.weights.iter()) {
            let x: f64 = pa + h * t;
            acc += h * w * x.powi(k as i32) * (-0.5 * x * x).exp();
        }
    }
    acc
}

fn moment_of(measure: &MeasureId, k: usize) -> Option<f64> {
    match measure {
        MeasureId::Lebesgue { a, b } => {
            Some((b.powi(k as i32 + 1) - a.powi(k as i32 + 1)) / (k as f64 + 1.0))
        }
        MeasureId::GaussianHalf { cutoff } => Some(truncated_gaussian_moment(k, *cutoff, false)),
        MeasureId::GaussianFull { cutoff } => Some(truncated_gaussian_moment(k, *cutoff, true)),
        MeasureId::TrapezoidOmega { .. } => None,
    }
}

fn domain_mass(measure: &MeasureId) -> f64 {
    match measure {
        MeasureId::Lebesgue { a, b } | MeasureId::TrapezoidOmega { a, b } => b - a,
        MeasureId::GaussianHalf { .. } => gaussian_half_moment(0),
        MeasureId::GaussianFull { .. } => gaussian_full_moment(0),
    }
}

/// Max relative exactness error of a rule over monomials up to its design
/// degree (degree 1 for the trapezoidal rule).
fn exactness_error(rule: &QuadratureRule) -> f64 {
    let max_degree = match rule.measure {
        MeasureId::TrapezoidOmega { .. } => 1,
        _ => 2 * rule.len() - 1,
    };
    let mut worst = 0.0_f64;
    for k in 0..=max_degree {
        let Some(exact) = moment_of(&rule.measure, k) else { continue };
        let got = rule.integrate(|x| x.powi(k as i32));
        let scale = rule.integrate(|x| x.abs().powi(k as i32)).max(1.0);
        worst = worst.max((got - exact).abs() / scale);
    }
    worst
}

/// Run every invariant check for a configuration.
pub fn run_validate(cfg: &RunConfig) -> Result<Vec<CheckResult>, CliError> {
    let problem = build(cfg)?;
    let grid = problem.model.grid();
    let mut checks = Vec::new();

    // Quadrature exactness and total mass.
    {
        let mut worst = exactness_error(grid.mu_half_rule());
        if let Some(rule) = grid.transverse_rule() {
            worst = worst.max(exactness_error(rule));
        }
        checks.push(CheckResult::new("quadrature_exactness", worst, 1e-11));

        let half = grid.mu_half_rule();
        let mut mass_err =
            (half.total_weight() - domain_mass(&half.measure)).abs() / domain_mass(&half.measure);
        if let Some(rule) = grid.transverse_rule() {
            mass_err = mass_err.max(
                (rule.total_weight() - domain_mass(&rule.measure)).abs()
                    / domain_mass(&rule.measure),
            );
        }
        checks.push(CheckResult::new("quadrature_total_mass", mass_err, 1e-12));
    }

    // Tensor basis Gram identity on the discrete measure.
    {
        let v = &problem.v_full;
        let n_flat = problem.tb.n_flat();
        let mut worst = 0.0_f64;
        let mut gram = vec![0.0; n_flat * n_flat];
        for t in 0..grid.n_nodes() {
            let w = grid.weight_of(t);
            let row = v.row(t);
            for a in 0..n_flat {
                let va = w * row[a];
                if va == 0.0 {
                    continue;
                }
                for (b, vb) in row.iter().enumerate() {
                    gram[a * n_flat + b] += va * vb;
                }
            }
        }
        for a in 0..n_flat {
            for b in 0..n_flat {
                let expect = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((gram[a * n_flat + b] - expect).abs());
            }
        }
        checks.push(CheckResult::new("basis_gram_identity", worst, 1e-12));
    }

    // mu times an even basis function stays inside the first 2n+1.
    {
        let family = &problem.tb.mu;
        let full = grid.mu_full_rule();
        let v = family.evaluate(&full.nodes);
        let mut worst = 0.0_f64;
        for n in 1..=family.count() / 2 {
            let even_idx = 2 * n - 1;
            let target: Vec<f64> =
                (0..full.len()).map(|p| full.nodes[p] * v[(p, even_idx)]).collect();
            let mut coeff = vec![0.0; family.count()];
            for (j, c) in coeff.iter_mut().enumerate() {
                *c = (0..full.len()).map(|p| full.weights[p] * target[p] * v[(p, j)]).sum();
            }
            for c in coeff.iter().skip(2 * n + 1) {
                worst = worst.max(c.abs());
            }
            let mut err2 = 0.0;
            for p in 0..full.len() {
                let recon: f64 =
                    coeff.iter().enumerate().map(|(j, c)| c * v[(p, j)]).sum();
                err2 += full.weights[p] * (target[p] - recon) * (target[p] - recon);
            }
            worst = worst.max(err2.sqrt());
        }
        checks.push(CheckResult::new("basis_mu_span", worst, 1e-12));
    }

    // Collision operator: self-adjointness and nonnegativity on random
    // nodal functions.
    {
        let mut rng = SplitMix64::new(cfg.seed);
        let mut asym = 0.0_f64;
        let mut most_negative = 0.0_f64;
        for _ in 0..50 {
            let f: Vec<f64> = (0..grid.n_nodes()).map(|_| rng.next_symmetric()).collect();
            let g: Vec<f64> = (0..grid.n_nodes()).map(|_| rng.next_symmetric()).collect();
            let lf = problem.model.apply_collision(&f);
            let lg = problem.model.apply_collision(&g);
            let scale = grid.norm(&f) * grid.norm(&g);
            asym = asym.max((grid.inner(&f, &lg) - grid.inner(&lf, &g)).abs() / scale);
            most_negative = most_negative.min(grid.inner(&f, &lf));
        }
        checks.push(CheckResult::new("collision_self_adjoint", asym, 1e-11));
        checks.push(CheckResult::new("collision_nonnegative", -most_negative, 1e-11));
    }

    // Null-space residuals.
    {
        let nsi = &problem.nsi;
        let mut worst = 0.0_f64;
        for x in nsi.x_zero.iter().chain(nsi.x_plus.iter()).chain(nsi.x_minus.iter()) {
            worst = worst.max(grid.norm(&problem.model.apply_collision(x)));
        }
        for xi in &nsi.x_zero {
            for xj in &nsi.x_zero {
                worst = worst.max(grid.inner_mu(xi, xj).abs());
            }
        }
        for (linv, x0) in nsi.linv_mu_x0.iter().zip(nsi.x_zero.iter()) {
            let lhs = problem.model.apply_collision(linv);
            let target = grid.mul_mu(x0);
            let mut err2 = 0.0;
            for t in 0..grid.n_nodes() {
                let d = lhs[t] - target[t];
                err2 += grid.weight_of(t) * d * d;
            }
            worst = worst.max(err2.sqrt());
        }
        checks.push(CheckResult::new("null_space_residuals", worst, 1e-10));
    }

    // Reflection energy bound.
    {
        let report = pk_check(&problem.model, &problem.spec, cfg.trials, cfg.seed)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        checks.push(CheckResult::new("reflection_energy_bound", report.max_violation, 1e-11));
    }

    // Norm bound and quadratic-form bound of the reflected operators.
    {
        let bark = build_bar_k(&problem.model, &problem.spec);
        let norm = weighted_norm_estimate(&problem.model, &bark);
        let alpha_r = problem.spec.alpha_r();
        checks.push(CheckResult::new("reflected_norm_bound", norm - alpha_r, 1e-10));

        let beta1 = (1.0 - alpha_r * alpha_r) / ((1.0 + alpha_r) * (1.0 + alpha_r));
        let mut rng = SplitMix64::new(cfg.seed ^ 0x5ca1e);
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..cfg.trials.max(1) {
            let f: Vec<f64> = (0..grid.n_positive()).map(|_| rng.next_symmetric()).collect();
            let cf = problem.ops.combo.apply(&f);
            let margin = grid.half_inner_mu(&f, &cf) - beta1 * grid.half_inner_mu(&f, &f);
            worst = worst.max(-margin);
        }
        checks.push(CheckResult::new("combo_quadratic_form", worst, 1e-12));

        // Closed forms against dense inversion (identity when no
        // reflection, so the deviation is zero by construction there).
        let ops2 = build_boundary_ops(&problem.model, &problem.spec)?;
        let n = grid.n_positive();
        let mut dev = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                dev = dev
                    .max((ops2.combo.matrix[(i, j)] - problem.ops.combo.matrix[(i, j)]).abs());
            }
        }
        checks.push(CheckResult::new("boundary_inverse_crossval", dev, 1e-10));
    }

    // Coercivity at the configured damping (no halving allowed) and the
    // structural mode counts.
    {
        let halved = if problem.system.alpha == problem.system.alpha_requested {
            0.0
        } else {
            1.0
        };
        checks.push(CheckResult::new("damped_coercivity_at_alpha", halved, 0.0));

        let k_tot = problem.tb.transverse_dim();
        let expected = (
            problem.tb.species * problem.tb.n_half() * k_tot,
            problem.tb.species * problem.tb.n_half() * k_tot,
            problem.tb.species * k_tot,
        );
        let found =
            (problem.system.counts.growing, problem.system.counts.decaying, problem.system.counts.degenerate);
        let count_dev = (found.0 as f64 - expected.0 as f64).abs()
            + (found.1 as f64 - expected.1 as f64).abs()
            + (found.2 as f64 - expected.2 as f64).abs();
        checks.push(CheckResult::new("mode_counts", count_dev, 0.0));
        checks.push(CheckResult::new(
            "pencil_residual",
            problem.system.max_pencil_residual,
            1e-8,
        ));

        // Degenerate count equals the kernel dimension of the flux matrix.
        let (eigs, _) = sym_eig(&problem.system.amat)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        let scale = eigs.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
        let kernel = eigs.iter().filter(|e| e.abs() <= 1e-12 * scale).count();
        checks.push(CheckResult::new(
            "flux_matrix_kernel",
            (kernel as f64 - problem.system.counts.degenerate as f64).abs(),
            0.0,
        ));
    }

    // Model-specific invariants.
    match problem.model.kind() {
        ModelKind::Bgk2d => {
            // <f, Lf> >= (1 - 1e-9) |P_perp f|^2: the projection structure
            // makes the coercivity constant exactly one.
            let mut rng = SplitMix64::new(cfg.seed ^ 0xb6b);
            let mut worst = f64::NEG_INFINITY;
            for _ in 0..50 {
                let f: Vec<f64> = (0..grid.n_nodes()).map(|_| rng.next_symmetric()).collect();
                let lf = problem.model.apply_collision(&f);
                let margin =
                    grid.inner(&f, &lf) - (1.0 - 1e-9) * grid.inner(&lf, &lf);
                worst = worst.max(-margin);
            }
            checks.push(CheckResult::new("projection_coercivity", worst, 1e-12));
        }
        ModelKind::Phonon => {
            let ones = vec![1.0; grid.n_nodes()];
            let mass = grid.inner(&ones, &ones);
            checks.push(CheckResult::new("probability_measure", (mass - 1.0).abs(), 1e-14));
        }
        ModelKind::Rte2 => {}
    }

    // Solve-level invariants: flux invariance of the recovered solution and
    // damping independence.
    {
        let (_, recovered) = problem.solve_recover()?;
        let x_grid = x_grid_for(cfg, &problem);
        let mut spread = 0.0_f64;
        for (_, fluxes) in problem.flux_table(&recovered, &x_grid) {
            let lo = fluxes.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = fluxes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            spread = spread.max(hi - lo);
        }
        checks.push(CheckResult::new("recovered_flux_invariance", spread, 1e-8));
        checks.push(CheckResult::new(
            "recovery_residual",
            recovered.recovery_residual,
            1e-8 * (1.0 + recovered.coefficients.iter().map(|c| c.abs()).sum::<f64>()),
        ));

        let halved = build_with_overrides(cfg, None, Some(cfg.alpha / 2.0))?;
        let (_, recovered_half) = halved.solve_recover()?;
        let mut diff = 0.0_f64;
        for &x in &x_grid {
            let a = recovered.nodal_at(x, &problem.v_full);
            let b = recovered_half.nodal_at(x, &halved.v_full);
            for (u, w) in a.iter().zip(b.iter()) {
                diff = diff.max((u - w).abs());
            }
        }
        checks.push(CheckResult::new("damping_independence", diff, 1e-7));
    }

    Ok(checks)
}

/// Write validation.csv; returns the first failed check, if any.
pub fn write_report(out_dir: &Path, checks: &[CheckResult]) -> Result<Option<String>, CliError> {
    let mut csv = Csv::new(&["check", "measured", "threshold", "pass"]);
    for c in checks {
        csv.row(&[
            c.name.to_string(),
            fmt_f64(c.measured),
            fmt_f64(c.threshold),
            if c.pass { "true".to_string() } else { "false".to_string() },
        ]);
    }
    write_atomic(&out_dir.join("validation.csv"), &csv.finish())?;
    Ok(checks.iter().find(|c| !c.pass).map(|c| c.name.to_string()))
}
