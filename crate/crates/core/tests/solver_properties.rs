//! Cross-module solver properties: exact reproduction of null-space
//! solutions, flux invariance of the recovered solution, independence of
//! the damping coefficient, and structural mode counts.

use halfspace_core::boundary::{BoundarySpec, IncomingData, ModeRef};
use halfspace_core::models::{build_bgk2d, build_phonon, build_rte2, quad_points_for};
use halfspace_core::quadrature::DEFAULT_GAUSSIAN_CUTOFF;
use halfspace_core::rng::SplitMix64;
use halfspace_core::solver::{build_problem, default_x_grid, ModeCounts, Problem, DEFAULT_ALPHA};

fn rte2_problem(n_half: usize, spec: BoundarySpec, alpha: f64) -> Problem {
    let model = build_rte2(quad_points_for(n_half + 1));
    build_problem(model, n_half, None, spec, alpha).unwrap()
}

fn bgk2d_problem(n_half: usize, k: usize, spec: BoundarySpec, alpha: f64) -> Problem {
    let model = build_bgk2d(quad_points_for(n_half + 1), quad_points_for(k), DEFAULT_GAUSSIAN_CUTOFF).unwrap();
    build_problem(model, n_half, Some(k), spec, alpha).unwrap()
}

fn phonon_problem(n_half: usize, n_omega: usize, spec: BoundarySpec, alpha: f64) -> Problem {
    let model = build_phonon(
        n_omega,
        1.0,
        8.0,
        |w| w * (-w / 1000.0).exp(),
        |w| 1.0 / w,
        quad_points_for(n_half + 1),
    )
    .unwrap();
    build_problem(model, n_half, None, spec, alpha).unwrap()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Any combination X of H+ and H0 modes solves the undamped equation with
/// boundary data X - K(X|_{mu<0}); the recovered solution must reproduce X
/// at every node and position.
#[test]
fn constant_solutions_are_reproduced() {
    let mut rng = SplitMix64::new(0xC0FFEE);
    let cases: Vec<(&str, Problem)> = vec![
        ("rte2 incoming", rte2_problem(8, BoundarySpec::new(0.0, 0.0, IncomingData::Zero).unwrap(), DEFAULT_ALPHA)),
        ("rte2 maxwell", rte2_problem(8, BoundarySpec::new(0.3, 0.4, IncomingData::Zero).unwrap(), DEFAULT_ALPHA)),
        ("bgk2d incoming", bgk2d_problem(6, 6, BoundarySpec::new(0.0, 0.0, IncomingData::Zero).unwrap(), DEFAULT_ALPHA)),
        ("bgk2d maxwell", bgk2d_problem(6, 6, BoundarySpec::new(0.5, 0.2, IncomingData::Zero).unwrap(), DEFAULT_ALPHA)),
        ("phonon maxwell", phonon_problem(8, 6, BoundarySpec::new(0.3, 0.4, IncomingData::Zero).unwrap(), DEFAULT_ALPHA)),
    ];
    for (name, base) in cases {
        let grid = base.model.grid();
        // Random element of span(H+ u H0), synthesized as tabulated data
        // h = X - K(X) so the exact solution is X itself.
        let mut x = vec![0.0; grid.n_nodes()];
        for mode in base.nsi.x_zero.iter().chain(base.nsi.x_plus.iter()) {
            let c = rng.next_symmetric();
            for (xi, mi) in x.iter_mut().zip(mode.iter()) {
                *xi += c * mi;
            }
        }
        let kx = halfspace_core::boundary::apply_k_negative(
            &base.model,
            base.spec.alpha_d(),
            base.spec.alpha_s(),
            &x,
        );
        let h: Vec<f64> = grid
            .positive()
            .iter()
            .enumerate()
            .map(|(k, &t)| x[t] - kx[k])
            .collect();
        let spec = BoundarySpec::new(
            base.spec.alpha_d(),
            base.spec.alpha_s(),
            IncomingData::Tabulated(h),
        )
        .unwrap();
        let p = Problem { spec, ..base };
        let (_, recovered) = p.solve_recover().unwrap();
        for x_pos in [0.0, 0.7, 3.0] {
            let eta = recovered.nodal_at(x_pos, &p.v_full);
            let err = max_abs_diff(&eta, &x);
            assert!(err <= 1e-6, "{name} at x={x_pos}: max error {err:e}");
        }
    }
}

/// Incoming data equal to a decaying-direction mode is not reproduced:
/// the solution is genuinely different from its boundary data.
#[test]
fn minus_mode_is_not_reproduced() {
    let spec = BoundarySpec::new(0.0, 0.0, IncomingData::Mode(ModeRef::Minus(0))).unwrap();
    let p = bgk2d_problem(6, 6, spec, DEFAULT_ALPHA);
    let (_, recovered) = p.solve_recover().unwrap();
    let eta0 = recovered.nodal_at(0.0, &p.v_full);
    let err = max_abs_diff(&eta0, &p.nsi.x_minus[0]);
    assert!(err >= 1e-2, "err = {err:e}");
}

/// <mu X, eta(x)> is constant in x for every null mode X.
#[test]
fn recovered_fluxes_are_invariant() {
    let spec = BoundarySpec::new(
        0.0,
        0.0,
        IncomingData::Polynomial(vec![vec![0.0, 2.0], vec![0.0, 1.0]]),
    )
    .unwrap();
    let p = rte2_problem(12, spec, DEFAULT_ALPHA);
    let (_, recovered) = p.solve_recover().unwrap();
    let x_grid = default_x_grid(p.system.lambda_max(), 31);
    for (label, fluxes) in p.flux_table(&recovered, &x_grid) {
        let lo = fluxes.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = fluxes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(hi - lo <= 1e-8, "{label}: spread {:e}", hi - lo);
    }

    // Maxwell boundary, bgk2d.
    let spec = BoundarySpec::new(0.3, 0.4, IncomingData::Polynomial(vec![vec![0.1, 1.0, 0.5]]))
        .unwrap();
    let p = bgk2d_problem(6, 6, spec, DEFAULT_ALPHA);
    let (_, recovered) = p.solve_recover().unwrap();
    let x_grid = default_x_grid(p.system.lambda_max(), 31);
    for (label, fluxes) in p.flux_table(&recovered, &x_grid) {
        let lo = fluxes.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = fluxes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(hi - lo <= 1e-8, "bgk2d {label}: spread {:e}", hi - lo);
    }
}

/// The recovery cancels the damping: halving alpha leaves the recovered
/// solution unchanged to 1e-7.
#[test]
fn recovery_is_damping_independent() {
    let mk_spec = || {
        BoundarySpec::new(
            0.2,
            0.3,
            IncomingData::Polynomial(vec![vec![0.0, 2.0], vec![0.0, 1.0]]),
        )
        .unwrap()
    };
    let p_full = rte2_problem(10, mk_spec(), DEFAULT_ALPHA);
    let p_half = rte2_problem(10, mk_spec(), DEFAULT_ALPHA / 2.0);
    let (_, r_full) = p_full.solve_recover().unwrap();
    let (_, r_half) = p_half.solve_recover().unwrap();
    for x in [0.0, 0.5, 2.0, 8.0] {
        let a = r_full.nodal_at(x, &p_full.v_full);
        let b = r_half.nodal_at(x, &p_half.v_full);
        let err = max_abs_diff(&a, &b);
        assert!(err <= 1e-7, "x={x}: {err:e}");
    }
}

/// Structural mode counts (growing, decaying, degenerate) =
/// (m N K^{d-1}, m N K^{d-1}, m K^{d-1}).
#[test]
fn mode_counts_all_models() {
    let spec = || BoundarySpec::new(0.0, 0.0, IncomingData::Zero).unwrap();
    let p = rte2_problem(4, spec(), DEFAULT_ALPHA);
    assert_eq!(p.system.counts, ModeCounts { growing: 8, decaying: 8, degenerate: 2 });
    let p = rte2_problem(16, spec(), DEFAULT_ALPHA);
    assert_eq!(p.system.counts, ModeCounts { growing: 32, decaying: 32, degenerate: 2 });
    let p = bgk2d_problem(8, 8, spec(), DEFAULT_ALPHA);
    assert_eq!(p.system.counts, ModeCounts { growing: 64, decaying: 64, degenerate: 8 });
    let p = phonon_problem(15, 8, spec(), DEFAULT_ALPHA);
    assert_eq!(p.system.counts, ModeCounts { growing: 120, decaying: 120, degenerate: 8 });
}

/// With incoming data equal to a null mode and no reflection, the damped
/// solution coincides with the special solution, the recovery coefficient
/// is exactly 1, and the recovered solution is the mode itself.
#[test]
fn null_mode_boundary_data_recovers_the_mode() {
    let spec = BoundarySpec::new(0.0, 0.0, IncomingData::Mode(ModeRef::Zero(0))).unwrap();
    let p = phonon_problem(10, 8, spec, DEFAULT_ALPHA);
    let (_, recovered) = p.solve_recover().unwrap();
    assert!((recovered.coefficients[0] - 1.0).abs() <= 1e-9);
    let eta = recovered.nodal_at(0.0, &p.v_full);
    let err = max_abs_diff(&eta, &p.nsi.x_zero[0]);
    assert!(err <= 1e-6, "{err:e}");
    assert!(recovered.recovery_residual <= 1e-10);
}
