//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line with its measured margin (run with `-- --nocapture` to see them).

use std::time::Instant;

use halfspace_core::boundary::{
    build_bar_k, build_boundary_ops, weighted_norm_estimate, BoundarySpec, IncomingData, ModeRef,
};
use halfspace_core::models::{build_bgk2d, build_phonon, build_rte2, quad_points_for};
use halfspace_core::quadrature::DEFAULT_GAUSSIAN_CUTOFF;
use halfspace_core::rng::SplitMix64;
use halfspace_core::solver::{build_problem, Problem, DEFAULT_ALPHA};
use halfspace_cli::{config, driver, report};

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn verdict(criterion: &str, pass: bool, detail: &str) {
    println!("acceptance {criterion}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn bgk2d_problem_31x15(alpha_d: f64, alpha_s: f64) -> Problem {
    let model = build_bgk2d(quad_points_for(16), quad_points_for(15), DEFAULT_GAUSSIAN_CUTOFF).unwrap();
    let spec = BoundarySpec::new(alpha_d, alpha_s, IncomingData::Zero).unwrap();
    build_problem(model, 15, Some(15), spec, DEFAULT_ALPHA).unwrap()
}

fn solve_recover_with(p: &Problem, incoming: IncomingData) -> halfspace_core::solver::RecoveredSolution {
    let spec =
        BoundarySpec::new(p.spec.alpha_d(), p.spec.alpha_s(), incoming).unwrap();
    let q = Problem { spec, ..p.clone() };
    let (_, recovered) = q.solve_recover().unwrap();
    recovered
}

/// Criterion 1: bgk2d with pure incoming data (31 mu functions x 15
/// transverse), h in {X_0,1, X_0,2, X_+} is reproduced to 1e-6 at every
/// node, each case within 30 seconds.
#[test]
fn criterion_1_bgk2d_incoming_reproduction() {
    let build_start = Instant::now();
    let p = bgk2d_problem_31x15(0.0, 0.0);
    let build_time = build_start.elapsed().as_secs_f64();

    let cases = [
        ("X_0,1", IncomingData::Mode(ModeRef::Zero(0)), p.nsi.x_zero[0].clone()),
        ("X_0,2", IncomingData::Mode(ModeRef::Zero(1)), p.nsi.x_zero[1].clone()),
        ("X_+", IncomingData::Mode(ModeRef::Plus(0)), p.nsi.x_plus[0].clone()),
    ];
    let mut worst_err = 0.0_f64;
    let mut worst_case_time = 0.0_f64;
    for (name, incoming, target) in cases {
        let case_start = Instant::now();
        let recovered = solve_recover_with(&p, incoming);
        worst_case_time = worst_case_time.max(case_start.elapsed().as_secs_f64());
        let eta = recovered.nodal_at(0.0, &p.v_full);
        let err = max_abs_diff(&eta, &target);
        worst_err = worst_err.max(err);
        println!("  bgk2d incoming {name}: max node error {err:.3e}");
    }
    let runtime = build_time + worst_case_time;
    verdict(
        "1 (bgk2d incoming null/plus reproduction)",
        worst_err <= 1e-6 && runtime <= 30.0,
        &format!("max error {worst_err:.3e} <= 1e-6, runtime {runtime:.1}s <= 30s"),
    );
}

/// Criterion 2: bgk2d with Maxwell accommodation (0.3, 0.4) and shifted
/// data h = X - K(X|_{mu<0}) reproduces X at all nodes to 1e-6.
#[test]
fn criterion_2_bgk2d_maxwell_reproduction() {
    let p = bgk2d_problem_31x15(0.3, 0.4);
    let cases = [
        ("X_0,1", IncomingData::Shifted(ModeRef::Zero(0)), p.nsi.x_zero[0].clone()),
        ("X_0,2", IncomingData::Shifted(ModeRef::Zero(1)), p.nsi.x_zero[1].clone()),
        ("X_+", IncomingData::Shifted(ModeRef::Plus(0)), p.nsi.x_plus[0].clone()),
    ];
    let mut worst = 0.0_f64;
    for (name, incoming, target) in cases {
        let recovered = solve_recover_with(&p, incoming);
        for x in [0.0, 1.0] {
            let eta = recovered.nodal_at(x, &p.v_full);
            let err = max_abs_diff(&eta, &target);
            worst = worst.max(err);
            println!("  bgk2d maxwell {name} at x={x}: max node error {err:.3e}");
        }
    }
    verdict(
        "2 (bgk2d Maxwell shifted reproduction)",
        worst <= 1e-6,
        &format!("max error {worst:.3e} <= 1e-6"),
    );
}

/// Criterion 3: incoming data equal to the decaying-direction mode X_- is
/// not reproduced.
#[test]
fn criterion_3_minus_mode_not_reproduced() {
    let p = bgk2d_problem_31x15(0.0, 0.0);
    let recovered = solve_recover_with(&p, IncomingData::Mode(ModeRef::Minus(0)));
    let eta = recovered.nodal_at(0.0, &p.v_full);
    let err = max_abs_diff(&eta, &p.nsi.x_minus[0]);
    verdict(
        "3 (minus mode non-reproduction)",
        err >= 1e-2,
        &format!("max node deviation {err:.3e} >= 1e-2"),
    );
}

/// Criterion 4: rte2 with h = (2 mu, mu): Q-component boundary errors for
/// n in {4, 8, 16} against the n = 32 reference decrease strictly with a
/// fitted algebraic rate above 0.5.
#[test]
fn criterion_4_rte2_convergence() {
    let cfg = config::parse(
        "[model]\nkind = rte2\n[boundary]\nincoming = polynomial 0 2 ; 0 1\n",
    )
    .unwrap();
    let run = driver::run_convergence(&cfg, &[4, 8, 16, 32]).unwrap();
    let q_errors: Vec<f64> = run.errors.iter().map(|e| e[1]).collect();
    let decreasing = q_errors.windows(2).all(|w| w[0] > w[1]);
    let rate = run.rates[1];
    for (n, e) in run.n_values.iter().zip(q_errors.iter()) {
        println!("  rte2 Q-component boundary error at n={n}: {e:.6e}");
    }
    verdict(
        "4 (rte2 algebraic convergence)",
        decreasing && rate > 0.5,
        &format!("errors strictly decreasing = {decreasing}, fitted rate {rate:.3} > 0.5"),
    );
}

/// Criterion 5: phonon defaults (profile omega exp(-omega/1000),
/// beta = 1/omega, 8 frequency points, 31 mu functions): equilibrium-mode
/// data is reproduced for both pure incoming and Maxwell (0.3, 0.4) walls.
#[test]
fn criterion_5_phonon_reproduction() {
    let model = || {
        build_phonon(8, 1.0, 8.0, |w| w * (-w / 1000.0).exp(), |w| 1.0 / w, quad_points_for(16))
            .unwrap()
    };
    let spec = BoundarySpec::new(0.0, 0.0, IncomingData::Mode(ModeRef::Zero(0))).unwrap();
    let p = build_problem(model(), 15, None, spec, DEFAULT_ALPHA).unwrap();
    let (_, recovered) = p.solve_recover().unwrap();
    let err_incoming = max_abs_diff(&recovered.nodal_at(0.0, &p.v_full), &p.nsi.x_zero[0]);
    println!("  phonon incoming equilibrium mode: max node error {err_incoming:.3e}");

    let spec = BoundarySpec::new(0.3, 0.4, IncomingData::Shifted(ModeRef::Zero(0))).unwrap();
    let p = build_problem(model(), 15, None, spec, DEFAULT_ALPHA).unwrap();
    let (_, recovered) = p.solve_recover().unwrap();
    let err_maxwell = max_abs_diff(&recovered.nodal_at(0.0, &p.v_full), &p.nsi.x_zero[0]);
    println!("  phonon Maxwell shifted equilibrium mode: max node error {err_maxwell:.3e}");

    let worst = err_incoming.max(err_maxwell);
    verdict(
        "5 (phonon equilibrium-mode reproduction)",
        worst <= 1e-6,
        &format!("max error {worst:.3e} <= 1e-6"),
    );
}

/// Criterion 6: exact mode counts (growing, decaying, degenerate) =
/// (m N K^{d-1}, m N K^{d-1}, m K^{d-1}) across the four stated
/// configurations.
#[test]
fn criterion_6_mode_counts() {
    let spec = || BoundarySpec::new(0.0, 0.0, IncomingData::Zero).unwrap();
    let mut pass = true;
    let mut detail = String::new();

    let mut check = |label: &str, got: (usize, usize, usize), expect: (usize, usize, usize)| {
        let ok = got == expect;
        pass &= ok;
        println!("  {label}: counts {got:?}, expected {expect:?}");
        if !ok {
            detail = format!("{label} mismatch");
        }
    };

    for (n, expect) in [(4usize, (8, 8, 2)), (16, (32, 32, 2))] {
        let p =
            build_problem(build_rte2(quad_points_for(n + 1)), n, None, spec(), DEFAULT_ALPHA)
                .unwrap();
        let c = p.system.counts;
        check(&format!("rte2 n={n}"), (c.growing, c.decaying, c.degenerate), expect);
    }
    {
        let model = build_bgk2d(quad_points_for(9), quad_points_for(8), DEFAULT_GAUSSIAN_CUTOFF).unwrap();
        let p = build_problem(model, 8, Some(8), spec(), DEFAULT_ALPHA).unwrap();
        let c = p.system.counts;
        check("bgk2d n=8 k=8", (c.growing, c.decaying, c.degenerate), (64, 64, 8));
    }
    {
        let model = build_phonon(
            8,
            1.0,
            8.0,
            |w| w * (-w / 1000.0).exp(),
            |w| 1.0 / w,
            quad_points_for(16),
        )
        .unwrap();
        let p = build_problem(model, 15, None, spec(), DEFAULT_ALPHA).unwrap();
        let c = p.system.counts;
        check("phonon n=15 m=8", (c.growing, c.decaying, c.degenerate), (120, 120, 8));
    }
    let detail = if pass { "all four configurations exact".to_string() } else { detail };
    verdict("6 (mode counts)", pass, &detail);
}

/// Criterion 7: reflected-operator norm bound |Kbar| <= alpha_r + 1e-10
/// and the quadratic-form lower bound with beta_1 = (1 - a_r^2)(1 + a_r)^-2
/// on 100 seeded random half-range functions, per model and accommodation
/// pair.
#[test]
fn criterion_7_boundary_operator_bounds() {
    let models = [
        build_rte2(quad_points_for(9)),
        build_bgk2d(quad_points_for(9), quad_points_for(8), DEFAULT_GAUSSIAN_CUTOFF).unwrap(),
        build_phonon(8, 1.0, 8.0, |w| w * (-w / 1000.0).exp(), |w| 1.0 / w, quad_points_for(9))
            .unwrap(),
    ];
    let mut worst_norm_excess = f64::NEG_INFINITY;
    let mut worst_quadform = f64::NEG_INFINITY;
    for model in &models {
        let grid = model.grid();
        for (ad, as_) in [(0.0, 0.0), (0.3, 0.4), (0.5, 0.2)] {
            let spec = BoundarySpec::new(ad, as_, IncomingData::Zero).unwrap();
            let bark = build_bar_k(model, &spec);
            let norm = weighted_norm_estimate(model, &bark);
            worst_norm_excess = worst_norm_excess.max(norm - (ad + as_));

            let ops = build_boundary_ops(model, &spec).unwrap();
            let ar: f64 = ad + as_;
            let beta1 = (1.0 - ar * ar) / ((1.0 + ar) * (1.0 + ar));
            let mut rng = SplitMix64::new(2024);
            for _ in 0..100 {
                let f: Vec<f64> =
                    (0..grid.n_positive()).map(|_| rng.next_symmetric()).collect();
                let cf = ops.combo.apply(&f);
                let margin =
                    grid.half_inner_mu(&f, &cf) - beta1 * grid.half_inner_mu(&f, &f);
                worst_quadform = worst_quadform.max(-margin);
            }
        }
    }
    println!("  worst norm excess over alpha_r: {worst_norm_excess:.3e}");
    println!("  worst quadratic-form deficit: {worst_quadform:.3e}");
    verdict(
        "7 (boundary operator bounds)",
        worst_norm_excess <= 1e-10 && worst_quadform <= 1e-12,
        &format!(
            "norm excess {worst_norm_excess:.3e} <= 1e-10, quadform deficit \
             {worst_quadform:.3e} <= 1e-12"
        ),
    );
}

/// Criterion 8: the full structural suite passes for the default
/// configuration of every model (basis Gram, quadrature exactness,
/// self-adjointness, coercivity at the default damping, flux invariance,
/// damping independence, and the rest).
#[test]
fn criterion_8_structural_suites() {
    let configs = [
        ("rte2", "[model]\nkind = rte2\n[discretization]\nn = 16\n[boundary]\nincoming = polynomial 0 2 ; 0 1\n"),
        ("bgk2d", "[model]\nkind = bgk2d\n[discretization]\nn = 8\nk = 8\n[boundary]\nalpha_d = 0.3\nalpha_s = 0.4\nincoming = shifted_plus_mode 1\n"),
        ("phonon", "[model]\nkind = phonon\n[discretization]\nn = 15\n[boundary]\nincoming = null_mode 1\n"),
    ];
    let mut pass = true;
    let mut detail = String::from("all checks green");
    for (name, text) in configs {
        let cfg = config::parse(text).unwrap();
        let checks = report::run_validate(&cfg).unwrap();
        for c in &checks {
            if !c.pass {
                pass = false;
                detail = format!("{name}: {} measured {:.3e}", c.name, c.measured);
            }
        }
        let worst = checks
            .iter()
            .max_by(|a, b| {
                (a.measured / a.threshold.max(1e-300))
                    .partial_cmp(&(b.measured / b.threshold.max(1e-300)))
                    .unwrap()
            })
            .unwrap();
        println!(
            "  {name}: {} checks, tightest = {} ({:.3e} vs {:.3e})",
            checks.len(),
            worst.name,
            worst.measured,
            worst.threshold
        );
    }
    verdict("8 (structural suites)", pass, &detail);
}

/// Criterion 9: two runs of the solve command with the same config produce
/// byte-identical outputs.
#[test]
fn criterion_9_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.cfg");
    std::fs::write(
        &cfg_path,
        "[model]\nkind = rte2\n[discretization]\nn = 16\n[boundary]\n\
         incoming = polynomial 0 2 ; 0 1\n[output]\nseed = 7\n",
    )
    .unwrap();
    let out1 = dir.path().join("a");
    let out2 = dir.path().join("b");
    for out in [&out1, &out2] {
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_halfspace"))
            .args(["solve", "--config"])
            .arg(&cfg_path)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let mut pass = true;
    for name in ["solution.csv", "boundary_slice.csv", "endstate.csv", "diagnostics.json"] {
        let a = std::fs::read(out1.join(name)).unwrap();
        let b = std::fs::read(out2.join(name)).unwrap();
        let same = a == b;
        println!("  {name}: {} bytes, identical = {same}", a.len());
        pass &= same;
    }
    verdict("9 (byte-identical reruns)", pass, "all four output files compared");
}
