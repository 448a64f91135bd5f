//! Experiment drivers: build a solver problem from a run configuration,
//! execute the subcommands, and emit their output files.

use std::path::Path;

use serde::Serialize;

use halfspace_core::boundary::{incoming_values, BoundarySpec, IncomingData, ModeRef};
use halfspace_core::models::{
    build_bgk2d, build_phonon, build_rte2, quad_points_for, ModelKind, ModelOperator,
};
use halfspace_core::solver::{
    build_problem, default_x_grid, DampedSolution, Problem, RecoveredSolution,
};

use crate::config::{IncomingSpec, ModeClass, ModelKindConfig, ProfileSpec, RunConfig};
use crate::output::{fmt_f64, read_csv, write_atomic, Csv};
use crate::CliError;

/// Tolerance for matching tabulated coordinates to grid nodes.
const NODE_MATCH_TOL: f64 = 1e-9;

fn profile_fn(
    spec: &ProfileSpec,
    key: &str,
    omega_min: f64,
    omega_max: f64,
) -> Result<Box<dyn Fn(f64) -> f64>, CliError> {
    match spec {
        ProfileSpec::Preset(name) => match (name.as_str(), key) {
            ("example431", "c_over_tau") => Ok(Box::new(|w: f64| w * (-w / 1000.0).exp())),
            ("example431", "beta") => Ok(Box::new(|w: f64| 1.0 / w)),
            (other, _) => Err(CliError::Config(format!("unknown {key} preset '{other}'"))),
        },
        ProfileSpec::Table(path) => {
            let (header, rows) = read_csv(path)?;
            if header != ["omega", "value"] {
                return Err(CliError::Config(format!(
                    "{}: profile tables need header 'omega,value'",
                    path.display()
                )));
            }
            let mut table: Vec<(f64, f64)> = Vec::with_capacity(rows.len());
            for row in &rows {
                if row.len() != 2 {
                    return Err(CliError::Config(format!("{}: ragged row", path.display())));
                }
                let w = row[0].parse::<f64>().map_err(|_| {
                    CliError::Config(format!("{}: bad omega '{}'", path.display(), row[0]))
                })?;
                let v = row[1].parse::<f64>().map_err(|_| {
                    CliError::Config(format!("{}: bad value '{}'", path.display(), row[1]))
                })?;
                table.push((w, v));
            }
            table.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            if table.len() < 2 {
                return Err(CliError::Config(format!(
                    "{}: need at least two table points",
                    path.display()
                )));
            }
            if table.first().unwrap().0 > omega_min || table.last().unwrap().0 < omega_max {
                return Err(CliError::Config(format!(
                    "{}: table does not cover [{omega_min}, {omega_max}]",
                    path.display()
                )));
            }
            Ok(Box::new(move |w: f64| {
                let idx = table.partition_point(|(x, _)| *x <= w).clamp(1, table.len() - 1);
                let (x0, y0) = table[idx - 1];
                let (x1, y1) = table[idx];
                y0 + (y1 - y0) * (w - x0) / (x1 - x0)
            }))
        }
    }
}

/// Build the kinetic model for a configuration, optionally overriding the
/// mu basis half-count (used by convergence sweeps).
pub fn build_model(cfg: &RunConfig, n_override: Option<usize>) -> Result<ModelOperator, CliError> {
    let n = n_override.unwrap_or(cfg.n);
    let mu_points = cfg.quad_points.unwrap_or_else(|| quad_points_for(n + 1));
    match cfg.kind {
        ModelKindConfig::Rte2 => Ok(build_rte2(mu_points)),
        ModelKindConfig::Bgk2d => {
            Ok(build_bgk2d(mu_points, quad_points_for(cfg.k), cfg.cutoff)?)
        }
        ModelKindConfig::Phonon => {
            let c_over_tau =
                profile_fn(&cfg.c_over_tau, "c_over_tau", cfg.omega_min, cfg.omega_max)?;
            let beta = profile_fn(&cfg.beta, "beta", cfg.omega_min, cfg.omega_max)?;
            Ok(build_phonon(
                cfg.n_omega,
                cfg.omega_min,
                cfg.omega_max,
                &*c_over_tau,
                &*beta,
                mu_points,
            )?)
        }
    }
}

fn resolve_incoming(cfg: &RunConfig, model: &ModelOperator) -> Result<IncomingData, CliError> {
    match &cfg.incoming {
        IncomingSpec::Zero => Ok(IncomingData::Zero),
        IncomingSpec::Mode { class, index, shifted } => {
            let mref = match class {
                ModeClass::Zero => ModeRef::Zero(index - 1),
                ModeClass::Plus => ModeRef::Plus(index - 1),
                ModeClass::Minus => ModeRef::Minus(index - 1),
            };
            Ok(if *shifted { IncomingData::Shifted(mref) } else { IncomingData::Mode(mref) })
        }
        IncomingSpec::Polynomial(lists) => Ok(IncomingData::Polynomial(lists.clone())),
        IncomingSpec::Tabulated(path) => {
            Ok(IncomingData::Tabulated(read_tabulated(path, model)?))
        }
    }
}

/// Read tabulated incoming data and match each row to a positive-mu grid
/// node. Expected header: `mu[,vy|omega],species,value` with 1-based
/// species; every outgoing node must be covered exactly once.
fn read_tabulated(path: &Path, model: &ModelOperator) -> Result<Vec<f64>, CliError> {
    let grid = model.grid();
    let (header, rows) = read_csv(path)?;
    let expected: &[&str] = match model.kind() {
        ModelKind::Rte2 => &["mu", "species", "value"],
        ModelKind::Bgk2d => &["mu", "vy", "species", "value"],
        ModelKind::Phonon => &["mu", "omega", "species", "value"],
    };
    if header != expected {
        return Err(CliError::Config(format!(
            "{}: expected header '{}', found '{}'",
            path.display(),
            expected.join(","),
            header.join(",")
        )));
    }

    let close = |a: f64, b: f64| (a - b).abs() <= NODE_MATCH_TOL * b.abs().max(1.0);
    let mut values: Vec<Option<f64>> = vec![None; grid.n_positive()];
    for (row_idx, row) in rows.iter().enumerate() {
        if row.len() != expected.len() {
            return Err(CliError::Config(format!(
                "{}: row {} has {} cells, expected {}",
                path.display(),
                row_idx + 2,
                row.len(),
                expected.len()
            )));
        }
        let parse = |cell: &str| -> Result<f64, CliError> {
            cell.parse::<f64>().map_err(|_| {
                CliError::Config(format!("{}: bad number '{cell}'", path.display()))
            })
        };
        let mu = parse(&row[0])?;
        let value = parse(row.last().unwrap())?;
        let species: usize = row[expected.len() - 2].parse().map_err(|_| {
            CliError::Config(format!("{}: bad species '{}'", path.display(), row[expected.len() - 2]))
        })?;
        if species == 0 || species > grid.n_species() {
            return Err(CliError::Config(format!(
                "{}: species {species} out of range (1..={})",
                path.display(),
                grid.n_species()
            )));
        }
        let second = if expected.len() == 4 { Some(parse(&row[1])?) } else { None };

        let mut matched = false;
        for (k, &t) in grid.positive().iter().enumerate() {
            if grid.species_of(t) + 1 != species || !close(mu, grid.mu_of(t)) {
                continue;
            }
            if let Some(sec) = second {
                let node_sec = match model.kind() {
                    ModelKind::Bgk2d => grid.trans_of(t),
                    ModelKind::Phonon => model.omega_nodes().unwrap()[grid.species_of(t)],
                    ModelKind::Rte2 => unreachable!(),
                };
                if !close(sec, node_sec) {
                    continue;
                }
            }
            if values[k].is_some() {
                return Err(CliError::Config(format!(
                    "{}: duplicate entry for node (row {})",
                    path.display(),
                    row_idx + 2
                )));
            }
            values[k] = Some(value);
            matched = true;
            break;
        }
        if !matched {
            return Err(CliError::Config(format!(
                "{}: row {} does not match any outgoing node (run `modes` to dump the grid)",
                path.display(),
                row_idx + 2
            )));
        }
    }
    let missing = values.iter().filter(|v| v.is_none()).count();
    if missing > 0 {
        return Err(CliError::Config(format!(
            "{}: {missing} outgoing nodes have no tabulated value",
            path.display()
        )));
    }
    Ok(values.into_iter().map(|v| v.unwrap()).collect())
}

/// Build the fully assembled problem for a configuration.
pub fn build(cfg: &RunConfig) -> Result<Problem, CliError> {
    build_with_overrides(cfg, None, None)
}

/// Build with optional overrides of the basis half-count and damping.
pub fn build_with_overrides(
    cfg: &RunConfig,
    n_override: Option<usize>,
    alpha_override: Option<f64>,
) -> Result<Problem, CliError> {
    let model = build_model(cfg, n_override)?;
    let incoming = resolve_incoming(cfg, &model)?;
    let spec = BoundarySpec::new(cfg.alpha_d, cfg.alpha_s, incoming)?;
    let k_trans = match cfg.kind {
        ModelKindConfig::Bgk2d => Some(cfg.k),
        _ => None,
    };
    let problem = build_problem(
        model,
        n_override.unwrap_or(cfg.n),
        k_trans,
        spec,
        alpha_override.unwrap_or(cfg.alpha),
    )?;
    Ok(problem)
}

/// Evaluation positions: explicit grid, or geometric ramp to
/// `x_max`/automatic ten decay lengths.
pub fn x_grid_for(cfg: &RunConfig, problem: &Problem) -> Vec<f64> {
    if let Some(grid) = &cfg.x_grid {
        return grid.clone();
    }
    match cfg.x_max {
        Some(x_max) => {
            let lambda = -10.0 / x_max;
            default_x_grid(lambda, cfg.x_points)
        }
        None => default_x_grid(problem.system.lambda_max(), cfg.x_points),
    }
}

#[derive(Debug, Serialize)]
pub struct CountsJson {
    pub growing: usize,
    pub decaying: usize,
    pub degenerate: usize,
}

#[derive(Debug, Serialize)]
pub struct ModeValue {
    pub mode: String,
    pub value: f64,
}

#[derive(Debug, Serialize)]
pub struct Diagnostics {
    pub model: String,
    pub n: usize,
    pub k: Option<usize>,
    pub n_omega: Option<usize>,
    pub alpha_requested: f64,
    pub alpha_used: f64,
    pub alpha_d: f64,
    pub alpha_s: f64,
    pub counts: CountsJson,
    pub lambda_max: f64,
    pub damped_solve_residual: f64,
    pub recovery_residual: f64,
    pub max_pencil_residual: f64,
    pub end_state: Vec<ModeValue>,
    pub flux_spread: Vec<ModeValue>,
    pub seed: u64,
}

pub struct SolveRun {
    pub problem: Problem,
    pub damped: DampedSolution,
    pub recovered: RecoveredSolution,
    pub h_pos: Vec<f64>,
    pub x_grid: Vec<f64>,
    pub diagnostics: Diagnostics,
}

/// Solve the configured problem and recover the undamped solution.
pub fn run_solve(cfg: &RunConfig) -> Result<SolveRun, CliError> {
    let problem = build(cfg)?;
    let (damped, recovered) = problem.solve_recover()?;
    let h_pos = incoming_values(&problem.model, &problem.nsi, &problem.spec)?;
    let x_grid = x_grid_for(cfg, &problem);

    let flux = problem.flux_table(&recovered, &x_grid);
    let flux_spread: Vec<ModeValue> = flux
        .iter()
        .map(|(label, values)| {
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            ModeValue { mode: label.clone(), value: hi - lo }
        })
        .collect();
    let end_state: Vec<ModeValue> = recovered
        .special_labels
        .iter()
        .zip(recovered.coefficients.iter())
        .map(|(label, c)| ModeValue { mode: label.clone(), value: *c })
        .collect();

    let diagnostics = Diagnostics {
        model: problem.model.kind().name().to_string(),
        n: cfg.n,
        k: matches!(cfg.kind, ModelKindConfig::Bgk2d).then_some(cfg.k),
        n_omega: matches!(cfg.kind, ModelKindConfig::Phonon).then_some(cfg.n_omega),
        alpha_requested: problem.system.alpha_requested,
        alpha_used: problem.system.alpha,
        alpha_d: cfg.alpha_d,
        alpha_s: cfg.alpha_s,
        counts: CountsJson {
            growing: problem.system.counts.growing,
            decaying: problem.system.counts.decaying,
            degenerate: problem.system.counts.degenerate,
        },
        lambda_max: problem.system.lambda_max(),
        damped_solve_residual: damped.residual,
        recovery_residual: recovered.recovery_residual,
        max_pencil_residual: problem.system.max_pencil_residual,
        end_state,
        flux_spread,
        seed: cfg.seed,
    };

    Ok(SolveRun { problem, damped, recovered, h_pos, x_grid, diagnostics })
}

fn coord_header(model: &ModelOperator) -> Vec<&'static str> {
    match model.kind() {
        ModelKind::Rte2 => vec!["mu", "species"],
        ModelKind::Bgk2d => vec!["mu", "vy", "species"],
        ModelKind::Phonon => vec!["mu", "omega", "species"],
    }
}

fn coord_cells(model: &ModelOperator, node: usize) -> Vec<String> {
    let grid = model.grid();
    let species = grid.species_of(node) + 1;
    match model.kind() {
        ModelKind::Rte2 => vec![fmt_f64(grid.mu_of(node)), species.to_string()],
        ModelKind::Bgk2d => vec![
            fmt_f64(grid.mu_of(node)),
            fmt_f64(grid.trans_of(node)),
            species.to_string(),
        ],
        ModelKind::Phonon => vec![
            fmt_f64(grid.mu_of(node)),
            fmt_f64(model.omega_nodes().unwrap()[grid.species_of(node)]),
            species.to_string(),
        ],
    }
}

/// Write solution.csv, boundary_slice.csv, endstate.csv and
/// diagnostics.json into `out_dir`.
pub fn write_solve(out_dir: &Path, run: &SolveRun) -> Result<(), CliError> {
    let model = &run.problem.model;
    let grid = model.grid();
    let v = &run.problem.v_full;

    // solution.csv over the full x grid.
    let mut header = vec!["x"];
    header.extend(coord_header(model));
    header.extend(["f_damped", "f_recovered"]);
    let mut csv = Csv::new(&header);
    for &x in &run.x_grid {
        let damped = run.damped.nodal_at(x, v);
        let eta = run.recovered.nodal_at(x, v);
        for t in 0..grid.n_nodes() {
            let mut cells = vec![fmt_f64(x)];
            cells.extend(coord_cells(model, t));
            cells.push(fmt_f64(damped[t]));
            cells.push(fmt_f64(eta[t]));
            csv.row(&cells);
        }
    }
    write_atomic(&out_dir.join("solution.csv"), &csv.finish())?;

    // boundary_slice.csv at x = 0, with the incoming data on outgoing nodes.
    let mut pos_index: Vec<Option<usize>> = vec![None; grid.n_nodes()];
    for (k, &t) in grid.positive().iter().enumerate() {
        pos_index[t] = Some(k);
    }
    let mut header = coord_header(model);
    header.extend(["h", "f_damped", "f_recovered"]);
    let mut csv = Csv::new(&header);
    let damped0 = run.damped.nodal_at(0.0, v);
    let eta0 = run.recovered.nodal_at(0.0, v);
    for t in 0..grid.n_nodes() {
        let mut cells = coord_cells(model, t);
        cells.push(pos_index[t].map_or_else(String::new, |k| fmt_f64(run.h_pos[k])));
        cells.push(fmt_f64(damped0[t]));
        cells.push(fmt_f64(eta0[t]));
        csv.row(&cells);
    }
    write_atomic(&out_dir.join("boundary_slice.csv"), &csv.finish())?;

    // endstate.csv: coefficients of the recovered end state.
    let mut csv = Csv::new(&["mode", "coefficient"]);
    for (label, c) in
        run.recovered.special_labels.iter().zip(run.recovered.coefficients.iter())
    {
        csv.row(&[label.clone(), fmt_f64(*c)]);
    }
    write_atomic(&out_dir.join("endstate.csv"), &csv.finish())?;

    let json = serde_json::to_string_pretty(&run.diagnostics)
        .expect("diagnostics serialization cannot fail");
    write_atomic(&out_dir.join("diagnostics.json"), &(json + "\n"))?;
    Ok(())
}

pub struct ConvergenceRun {
    /// Non-reference basis half-counts.
    pub n_values: Vec<usize>,
    pub reference_n: usize,
    /// errors[i][s] = L2 boundary error of species s at n_values[i].
    pub errors: Vec<Vec<f64>>,
    /// Fitted algebraic rate per species: error ~ C n^{-rate}.
    pub rates: Vec<f64>,
}

/// Sweep the mu basis half-count, comparing each recovered boundary slice
/// against the largest entry of the list on that reference's grid.
pub fn run_convergence(cfg: &RunConfig, n_list: &[usize]) -> Result<ConvergenceRun, CliError> {
    if n_list.len() < 2 {
        return Err(CliError::Config("convergence needs at least two basis sizes".into()));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Config("convergence n list must be strictly ascending".into()));
    }
    let reference_n = *n_list.last().unwrap();

    let reference = build_with_overrides(cfg, Some(reference_n), None)?;
    let ref_grid = reference.model.grid();
    let m = ref_grid.n_species();
    let (_, ref_recovered) = reference.solve_recover()?;
    let ref_eta = ref_recovered.nodal_at(0.0, &reference.v_full);

    let mut n_values = Vec::new();
    let mut errors = Vec::new();
    for &n in &n_list[..n_list.len() - 1] {
        let problem = build_with_overrides(cfg, Some(n), None)?;
        let (_, recovered) = problem.solve_recover()?;
        // Evaluate this run's basis on the reference grid.
        let v_on_ref = problem.tb.value_matrix(ref_grid);
        let eta = recovered.nodal_at(0.0, &v_on_ref);
        let mut per_species = vec![0.0; m];
        for t in 0..ref_grid.n_nodes() {
            let d = eta[t] - ref_eta[t];
            per_species[ref_grid.species_of(t)] += ref_grid.weight_of(t) * d * d;
        }
        for e in per_species.iter_mut() {
            *e = e.sqrt();
        }
        n_values.push(n);
        errors.push(per_species);
    }

    // Log-log least squares fit per species.
    let mut rates = vec![0.0; m];
    for (s, rate) in rates.iter_mut().enumerate() {
        let points: Vec<(f64, f64)> = n_values
            .iter()
            .zip(errors.iter())
            .map(|(n, e)| ((*n as f64).ln(), e[s].max(1e-300).ln()))
            .collect();
        let len = points.len() as f64;
        let sx: f64 = points.iter().map(|p| p.0).sum();
        let sy: f64 = points.iter().map(|p| p.1).sum();
        let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
        let slope = (len * sxy - sx * sy) / (len * sxx - sx * sx);
        *rate = -slope;
    }

    Ok(ConvergenceRun { n_values, reference_n, errors, rates })
}

pub fn write_convergence(out_dir: &Path, run: &ConvergenceRun) -> Result<(), CliError> {
    let mut csv = Csv::new(&["n", "species", "l2_error", "rate"]);
    for (n, errs) in run.n_values.iter().zip(run.errors.iter()) {
        for (s, e) in errs.iter().enumerate() {
            csv.row(&[
                n.to_string(),
                (s + 1).to_string(),
                fmt_f64(*e),
                fmt_f64(run.rates[s]),
            ]);
        }
    }
    write_atomic(&out_dir.join("convergence.csv"), &csv.finish())
}

/// Write modes.csv and nullspace.csv (plus optional basis/quadrature
/// dumps) for the configured system.
pub fn write_modes(out_dir: &Path, problem: &Problem, dump_basis: bool) -> Result<(), CliError> {
    let sys = &problem.system;
    let mut csv = Csv::new(&["index", "lambda", "classification"]);
    let mut index = 0usize;
    for lambda in &sys.decaying_lambdas {
        csv.row(&[index.to_string(), fmt_f64(*lambda), "decaying".to_string()]);
        index += 1;
    }
    for lambda in &sys.growing_lambdas {
        csv.row(&[index.to_string(), fmt_f64(*lambda), "growing".to_string()]);
        index += 1;
    }
    for _ in 0..sys.counts.degenerate {
        csv.row(&[index.to_string(), String::new(), "degenerate".to_string()]);
        index += 1;
    }
    write_atomic(&out_dir.join("modes.csv"), &csv.finish())?;

    // Null-space report: eigenvalue of every mode plus its nodal values.
    let model = &problem.model;
    let grid = model.grid();
    let mut header = vec!["mode", "p1_eigenvalue"];
    header.extend(coord_header(model));
    header.push("value");
    let mut csv = Csv::new(&header);
    let nsi = &problem.nsi;
    let entries: Vec<(String, f64, &Vec<f64>)> = nsi
        .x_zero
        .iter()
        .enumerate()
        .map(|(i, x)| (format!("zero_{}", i + 1), nsi.eig_zero[i], x))
        .chain(
            nsi.x_plus
                .iter()
                .enumerate()
                .map(|(i, x)| (format!("plus_{}", i + 1), nsi.eig_plus[i], x)),
        )
        .chain(
            nsi.x_minus
                .iter()
                .enumerate()
                .map(|(i, x)| (format!("minus_{}", i + 1), nsi.eig_minus[i], x)),
        )
        .collect();
    for (label, eig, mode) in entries {
        for (t, value) in mode.iter().enumerate() {
            let mut cells = vec![label.clone(), fmt_f64(eig)];
            cells.extend(coord_cells(model, t));
            cells.push(fmt_f64(*value));
            csv.row(&cells);
        }
    }
    write_atomic(&out_dir.join("nullspace.csv"), &csv.finish())?;

    if dump_basis {
        let mut csv = Csv::new(&["family", "index", "alpha", "beta"]);
        let (alpha, beta) = problem.tb.mu.recurrence();
        for (i, (a, b)) in alpha.iter().zip(beta.iter()).enumerate() {
            csv.row(&["mu".to_string(), i.to_string(), fmt_f64(*a), fmt_f64(*b)]);
        }
        for family in &problem.tb.transverse {
            let (alpha, beta) = family.recurrence();
            for (i, (a, b)) in alpha.iter().zip(beta.iter()).enumerate() {
                csv.row(&["transverse".to_string(), i.to_string(), fmt_f64(*a), fmt_f64(*b)]);
            }
        }
        write_atomic(&out_dir.join("basis_recurrence.csv"), &csv.finish())?;

        let mut csv = Csv::new(&["direction", "node", "weight"]);
        let mu = grid.mu_full_rule();
        for (x, w) in mu.nodes.iter().zip(mu.weights.iter()) {
            csv.row(&["mu".to_string(), fmt_f64(*x), fmt_f64(*w)]);
        }
        if let Some(rule) = grid.transverse_rule() {
            for (x, w) in rule.nodes.iter().zip(rule.weights.iter()) {
                csv.row(&["transverse".to_string(), fmt_f64(*x), fmt_f64(*w)]);
            }
        }
        if let Some(omega) = model.omega_nodes() {
            // Weight column carries the discrete frequency measure (the
            // trapezoid weight folded with the profile normalization).
            for (x, w) in omega.iter().zip(grid.species_weights().iter()) {
                csv.row(&["omega".to_string(), fmt_f64(*x), fmt_f64(*w)]);
            }
        }
        write_atomic(&out_dir.join("quadrature.csv"), &csv.finish())?;
    }
    Ok(())
}
