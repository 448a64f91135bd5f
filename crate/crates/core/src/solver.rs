//! Damped Galerkin system assembly, decaying-mode decomposition, boundary
//! solve, and recovery of the undamped solution.
//!
//! The Galerkin coefficients a(x) of the damped problem satisfy the linear
//! ODE system `Amat a' = Bmat a` with `Amat` the mu-weighted Gram matrix
//! and `-Bmat` the (damped) collision matrix. Damping adds one symmetric
//! rank-one term per null-space direction, which makes `-Bmat` positive
//! definite, so the pencil reduces to a single symmetric eigenproblem
//! through its Cholesky factor: `L^-1 Amat L^-T w = theta w` with
//! `lambda = -1/theta`. Solutions decaying at infinity live on the modes
//! with `lambda < 0`; their count matches the number of boundary rows, so
//! the coefficient solve is square.
//!
//! Recovery: the damped problems with boundary data `X - K(X|_{mu<0})` for
//! each null mode X in H0 and H+ provide special solutions g. Matching the
//! mu-weighted null-space averages of f and the g-combination at x = 0
//! (they obey the same autonomous ODE in x, so matching at the wall
//! propagates) yields coefficients that cancel the damping exactly; the
//! recovered solution is f - g plus the matched combination of the modes
//! themselves, and that combination is the end state at infinity.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::basis::{build_full_family, build_halfspace_family, BasisError, TensorBasis};
use crate::boundary::{
    assemble_bc_rows, build_boundary_ops, incoming_values, BoundaryError, BoundaryOps,
    BoundarySpec, IncomingData, ModeRef,
};
use crate::linalg::{
    cholesky, lu_factor, norm2, solve_lower, solve_lower_transpose, sym_eig, DenseMatrix,
    LinalgError,
};
use crate::models::{ModelError, ModelOperator, NullSpaceInfo};

/// Default damping coefficient; halved on coercivity failure.
pub const DEFAULT_ALPHA: f64 = 0.5;
/// Halving attempts before giving up.
const ALPHA_RETRIES: usize = 6;
/// The damping terms must not dominate the collision matrix: past this
/// ratio the pencil is numerically damping-only and the damped operator
/// no longer controls the collision scales.
const DAMPING_DOMINANCE_LIMIT: f64 = 100.0;
/// Relative threshold classifying reduced eigenvalues as degenerate.
const THETA_ZERO_REL: f64 = 1e-12;
/// Per-mode pencil residual bound.
const PENCIL_RESIDUAL_REL: f64 = 1e-8;
/// Boundary coefficient solve residual bound, relative to |rhs|.
const SOLVE_RESIDUAL_REL: f64 = 1e-9;
/// Recovery constraint residual bound, relative to 1 + |averages of f|.
const RECOVERY_RESIDUAL_REL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum SolverError {
    /// The damped collision matrix failed its positive-definiteness gate at
    /// every attempted damping coefficient.
    Coercivity { final_alpha: f64 },
    CountMismatch { found: (usize, usize, usize), expected: (usize, usize, usize) },
    PencilResidual { residual: f64, tolerance: f64 },
    SolveResidual { residual: f64, tolerance: f64 },
    RecoveryResidual { residual: f64, tolerance: f64 },
    Linalg(LinalgError),
    Basis(BasisError),
    Boundary(BoundaryError),
    Model(ModelError),
}

impl fmt::Display for SolverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverError::Coercivity { final_alpha } => write!(
                f,
                "damped collision operator is not coercive (last damping tried: {final_alpha})"
            ),
            SolverError::CountMismatch { found, expected } => write!(
                f,
                "mode counts (growing, decaying, degenerate) = {found:?}, expected {expected:?}"
            ),
            SolverError::PencilResidual { residual, tolerance } => {
                write!(f, "pencil eigenpair residual {residual:e} exceeds {tolerance:e}")
            }
            SolverError::SolveResidual { residual, tolerance } => {
                write!(f, "boundary solve residual {residual:e} exceeds {tolerance:e}")
            }
            SolverError::RecoveryResidual { residual, tolerance } => {
                write!(f, "recovery constraint residual {residual:e} exceeds {tolerance:e}")
            }
            SolverError::Linalg(e) => write!(f, "solver linear algebra error: {e}"),
            SolverError::Basis(e) => write!(f, "solver basis error: {e}"),
            SolverError::Boundary(e) => write!(f, "solver boundary error: {e}"),
            SolverError::Model(e) => write!(f, "solver model error: {e}"),
        }
    }
}

impl From<LinalgError> for SolverError {
    fn from(e: LinalgError) -> Self {
        SolverError::Linalg(e)
    }
}

impl From<BasisError> for SolverError {
    fn from(e: BasisError) -> Self {
        SolverError::Basis(e)
    }
}

impl From<BoundaryError> for SolverError {
    fn from(e: BoundaryError) -> Self {
        SolverError::Boundary(e)
    }
}

impl From<ModelError> for SolverError {
    fn from(e: ModelError) -> Self {
        SolverError::Model(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeCounts {
    pub growing: usize,
    pub decaying: usize,
    pub degenerate: usize,
}

/// Assembled pencil with its decaying-mode decomposition.
#[derive(Debug, Clone)]
pub struct SpectralSystem {
    pub amat: DenseMatrix,
    pub bmat: DenseMatrix,
    /// Damping coefficient actually used (after any halving).
    pub alpha: f64,
    pub alpha_requested: f64,
    /// Cholesky factor of -Bmat.
    chol: DenseMatrix,
    pub decaying_lambdas: Vec<f64>,
    /// Columns are the decaying-mode coefficient vectors.
    pub decaying_vectors: DenseMatrix,
    pub growing_lambdas: Vec<f64>,
    pub counts: ModeCounts,
    pub max_pencil_residual: f64,
}

impl SpectralSystem {
    /// Slowest decay rate (the decaying lambda closest to zero).
    pub fn lambda_max(&self) -> f64 {
        self.decaying_lambdas.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Norm induced by -Bmat (the damped collision energy); the decaying
    /// modes are orthonormal in it, so damped solutions contract exactly
    /// like exp(lambda_max x) in this norm.
    pub fn energy_norm(&self, a: &[f64]) -> f64 {
        let n = self.chol.rows();
        debug_assert_eq!(a.len(), n);
        let mut acc = 0.0;
        for j in 0..n {
            // (L^T a)_j
            let mut s = 0.0;
            for i in j..n {
                s += self.chol[(i, j)] * a[i];
            }
            acc += s * s;
        }
        acc.sqrt()
    }
}

/// Assemble the pencil: `Amat` from the mu-weighted Gram matrix and
/// `-Bmat` from the collision matrix plus one rank-one damping update per
/// null direction. `-Bmat` must pass Cholesky; on failure the damping is
/// halved up to six times before giving up.
pub fn assemble(
    tb: &TensorBasis,
    model: &ModelOperator,
    nsi: &NullSpaceInfo,
    v_full: &DenseMatrix,
    alpha: f64,
) -> Result<SpectralSystem, SolverError> {
    let grid = model.grid();
    let n_flat = tb.n_flat();
    let n_nodes = grid.n_nodes();
    debug_assert_eq!(v_full.rows(), n_nodes);
    debug_assert_eq!(v_full.cols(), n_flat);

    // Amat[a][b] = <mu Phi_a, Phi_b>; exactly zero between equal parities.
    let mut amat = DenseMatrix::zeros(n_flat, n_flat);
    for t in 0..n_nodes {
        let wmu = grid.weight_of(t) * grid.mu_of(t);
        if wmu == 0.0 {
            continue;
        }
        let row_v = v_full.row(t);
        for a in 0..n_flat {
            let va = wmu * row_v[a];
            if va == 0.0 {
                continue;
            }
            let out = amat.row_mut(a);
            for (b, vb) in row_v.iter().enumerate() {
                out[b] += va * vb;
            }
        }
    }
    amat.symmetrize();
    // Entries between equal mu-parities vanish identically (odd integrand
    // on a symmetric measure); zero the summation round-off.
    for a in 0..n_flat {
        for b in 0..n_flat {
            if tb.flat_is_odd(a) == tb.flat_is_odd(b) {
                amat[(a, b)] = 0.0;
            }
        }
    }

    // Collision Galerkin matrix K[a][b] = <Phi_a, L Phi_b>.
    let mut lv = DenseMatrix::zeros(n_nodes, n_flat);
    let mut col = vec![0.0; n_nodes];
    for b in 0..n_flat {
        for t in 0..n_nodes {
            col[t] = v_full[(t, b)];
        }
        let lcol = model.apply_collision(&col);
        for t in 0..n_nodes {
            lv[(t, b)] = lcol[t];
        }
    }
    let mut kmat = DenseMatrix::zeros(n_flat, n_flat);
    for t in 0..n_nodes {
        let w = grid.weight_of(t);
        let row_v = v_full.row(t);
        let row_lv = lv.row(t);
        for a in 0..n_flat {
            let va = w * row_v[a];
            if va == 0.0 {
                continue;
            }
            let out = kmat.row_mut(a);
            for (b, lvb) in row_lv.iter().enumerate() {
                out[b] += va * lvb;
            }
        }
    }
    kmat.symmetrize();

    // Galerkin coefficients of the damping directions mu Y.
    let damping = nsi.damping_vectors(grid);
    let mut u_vectors: Vec<Vec<f64>> = Vec::with_capacity(damping.len());
    for y in &damping {
        let mut u = vec![0.0; n_flat];
        for (a, slot) in u.iter_mut().enumerate() {
            let mut acc = 0.0;
            for t in 0..n_nodes {
                acc += grid.weight_of(t) * v_full[(t, a)] * y[t];
            }
            *slot = acc;
        }
        u_vectors.push(u);
    }
    let max_u2 =
        u_vectors.iter().map(|u| u.iter().map(|v| v * v).sum::<f64>()).fold(0.0, f64::max);
    let kscale = kmat.max_abs().max(f64::MIN_POSITIVE);

    let mut alpha_try = alpha;
    for _attempt in 0..=ALPHA_RETRIES {
        // The damping scale must stay comparable to the collision scale:
        // a dominating damping term drowns the collision operator in
        // round-off even though the matrix stays formally definite.
        if alpha_try * max_u2 <= DAMPING_DOMINANCE_LIMIT * kscale {
            let mut neg_b = kmat.clone();
            for u in &u_vectors {
                neg_b.add_scaled_outer(alpha_try, u);
            }
            neg_b.symmetrize();
            if let Ok(chol) = cholesky(&neg_b) {
                let mut bmat = neg_b;
                for a in 0..n_flat {
                    for b in 0..n_flat {
                        bmat[(a, b)] = -bmat[(a, b)];
                    }
                }
                return Ok(SpectralSystem {
                    amat,
                    bmat,
                    alpha: alpha_try,
                    alpha_requested: alpha,
                    chol,
                    decaying_lambdas: Vec::new(),
                    decaying_vectors: DenseMatrix::zeros(n_flat, 0),
                    growing_lambdas: Vec::new(),
                    counts: ModeCounts { growing: 0, decaying: 0, degenerate: 0 },
                    max_pencil_residual: 0.0,
                });
            }
        }
        alpha_try *= 0.5;
    }
    Err(SolverError::Coercivity { final_alpha: alpha_try })
}

/// Decompose the pencil into modes through the Cholesky reduction and keep
/// the decaying ones. Verifies the structural count identity
/// (growing, decaying, degenerate) = (m N K^{d-1}, m N K^{d-1}, m K^{d-1}).
pub fn decaying_modes(
    mut sys: SpectralSystem,
    tb: &TensorBasis,
) -> Result<SpectralSystem, SolverError> {
    let n = sys.amat.rows();
    // W = L^-1 Amat L^-T, symmetric.
    let mut w = DenseMatrix::zeros(n, n);
    let mut col = vec![0.0; n];
    for j in 0..n {
        for i in 0..n {
            col[i] = sys.amat[(i, j)];
        }
        let y = solve_lower(&sys.chol, &col);
        for i in 0..n {
            w[(i, j)] = y[i];
        }
    }
    // Right-multiply by L^-T: solve L z = row for every row.
    for i in 0..n {
        let row: Vec<f64> = (0..n).map(|j| w[(i, j)]).collect();
        let z = solve_lower(&sys.chol, &row);
        for j in 0..n {
            w[(i, j)] = z[j];
        }
    }
    w.symmetrize();

    let (thetas, wvecs) = sym_eig(&w)?;
    let theta_scale = thetas.iter().fold(0.0_f64, |m, t| m.max(t.abs()));
    let tol = THETA_ZERO_REL * theta_scale;

    let mut decaying: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut growing: Vec<f64> = Vec::new();
    let mut degenerate = 0usize;
    for (j, theta) in thetas.iter().enumerate() {
        if theta.abs() <= tol {
            degenerate += 1;
            continue;
        }
        let lambda = -1.0 / theta;
        if *theta > 0.0 {
            let wcol = wvecs.col(j);
            let mut v = solve_lower_transpose(&sys.chol, &wcol);
            let norm = norm2(&v);
            for x in v.iter_mut() {
                *x /= norm;
            }
            // Deterministic orientation.
            let mut pivot = 0;
            let mut best = 0.0;
            for (i, x) in v.iter().enumerate() {
                if x.abs() > best {
                    best = x.abs();
                    pivot = i;
                }
            }
            if v[pivot] < 0.0 {
                for x in v.iter_mut() {
                    *x = -*x;
                }
            }
            decaying.push((lambda, v));
        } else {
            growing.push(lambda);
        }
    }
    decaying.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    growing.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let k_tot = tb.transverse_dim();
    let expected =
        (tb.species * tb.n_half() * k_tot, tb.species * tb.n_half() * k_tot, tb.species * k_tot);
    let found = (growing.len(), decaying.len(), degenerate);
    if found != expected {
        return Err(SolverError::CountMismatch { found, expected });
    }

    let mut vectors = DenseMatrix::zeros(n, decaying.len());
    let mut lambdas = Vec::with_capacity(decaying.len());
    for (j, (lambda, v)) in decaying.iter().enumerate() {
        lambdas.push(*lambda);
        vectors.set_col(j, v);
    }

    // Pencil residual per decaying mode: |Bmat v - lambda Amat v|.
    let mut max_residual = 0.0_f64;
    for (j, lambda) in lambdas.iter().enumerate() {
        let v = vectors.col(j);
        let bv = sys.bmat.matvec(&v);
        let av = sys.amat.matvec(&v);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            let r = bv[i] - lambda * av[i];
            num += r * r;
            den += bv[i] * bv[i];
        }
        let rel = num.sqrt() / den.sqrt().max(f64::MIN_POSITIVE);
        max_residual = max_residual.max(rel);
    }
    if max_residual > PENCIL_RESIDUAL_REL {
        return Err(SolverError::PencilResidual {
            residual: max_residual,
            tolerance: PENCIL_RESIDUAL_REL,
        });
    }

    sys.decaying_lambdas = lambdas;
    sys.decaying_vectors = vectors;
    sys.growing_lambdas = growing;
    sys.counts =
        ModeCounts { growing: expected.0, decaying: expected.1, degenerate: expected.2 };
    sys.max_pencil_residual = max_residual;
    Ok(sys)
}

/// Solution of the damped problem: coefficients over the decaying modes.
#[derive(Debug, Clone)]
pub struct DampedSolution {
    pub lambdas: Vec<f64>,
    /// n_flat x n_modes.
    pub vectors: DenseMatrix,
    pub coefficients: Vec<f64>,
    pub residual: f64,
}

impl DampedSolution {
    /// Flat Galerkin coefficients at position x.
    pub fn flat_at(&self, x: f64) -> Vec<f64> {
        let n = self.vectors.rows();
        let mut out = vec![0.0; n];
        for (j, (lambda, c)) in self.lambdas.iter().zip(self.coefficients.iter()).enumerate() {
            let amp = c * (lambda * x).exp();
            if amp == 0.0 {
                continue;
            }
            for i in 0..n {
                out[i] += amp * self.vectors[(i, j)];
            }
        }
        out
    }

    /// Nodal values at position x.
    pub fn nodal_at(&self, x: f64, v_full: &DenseMatrix) -> Vec<f64> {
        v_full.matvec(&self.flat_at(x))
    }
}

/// Solve the square boundary system over the decaying modes, with one step
/// of iterative refinement.
pub fn solve_damped(
    sys: &SpectralSystem,
    rows: &DenseMatrix,
    rhs: &[f64],
) -> Result<DampedSolution, SolverError> {
    assert_eq!(
        rows.rows(),
        sys.decaying_lambdas.len(),
        "boundary row count must match the decaying mode count"
    );
    let square = rows.matmul(&sys.decaying_vectors);
    let lu = lu_factor(&square)?;
    let mut c = lu.solve(rhs);
    // One refinement pass keeps the residual at the rhs scale even for
    // moderately conditioned boundary systems.
    let mut r: Vec<f64> = square
        .matvec(&c)
        .iter()
        .zip(rhs.iter())
        .map(|(a, b)| b - a)
        .collect();
    let dc = lu.solve(&r);
    for (ci, di) in c.iter_mut().zip(dc.iter()) {
        *ci += di;
    }
    r = square.matvec(&c).iter().zip(rhs.iter()).map(|(a, b)| b - a).collect();
    let residual = norm2(&r);
    let rhs_norm = norm2(rhs);
    if residual > SOLVE_RESIDUAL_REL * rhs_norm.max(f64::MIN_POSITIVE) && rhs_norm > 0.0 {
        return Err(SolverError::SolveResidual {
            residual,
            tolerance: SOLVE_RESIDUAL_REL * rhs_norm,
        });
    }
    Ok(DampedSolution {
        lambdas: sys.decaying_lambdas.clone(),
        vectors: sys.decaying_vectors.clone(),
        coefficients: c,
        residual,
    })
}

/// Undamped solution recovered from the damped one, with its end state.
#[derive(Debug, Clone)]
pub struct RecoveredSolution {
    pub damped: DampedSolution,
    pub specials: Vec<DampedSolution>,
    pub special_labels: Vec<String>,
    /// Coefficients of the special solutions (H0 modes first, then H+).
    pub coefficients: Vec<f64>,
    /// Nodal end state: the recovered solution's limit at infinity.
    pub end_state: Vec<f64>,
    pub recovery_residual: f64,
}

impl RecoveredSolution {
    /// Nodal values of the recovered solution at position x.
    pub fn nodal_at(&self, x: f64, v_full: &DenseMatrix) -> Vec<f64> {
        let mut out = self.damped.nodal_at(x, v_full);
        for (g, c) in self.specials.iter().zip(self.coefficients.iter()) {
            let gx = g.nodal_at(x, v_full);
            for (o, gv) in out.iter_mut().zip(gx.iter()) {
                *o -= c * gv;
            }
        }
        for (o, e) in out.iter_mut().zip(self.end_state.iter()) {
            *o += e;
        }
        out
    }
}

/// Everything assembled for one configuration; the expensive parts (mode
/// decomposition, boundary operators) are shared across all right-hand
/// sides solved against it.
#[derive(Debug, Clone)]
pub struct Problem {
    pub model: ModelOperator,
    pub nsi: NullSpaceInfo,
    pub tb: TensorBasis,
    pub v_full: DenseMatrix,
    pub spec: BoundarySpec,
    pub ops: BoundaryOps,
    pub system: SpectralSystem,
}

/// Build basis, null space, boundary operators and the decomposed system
/// for a model. `k_trans` is the transverse basis count (models with a
/// transverse direction only).
pub fn build_problem(
    model: ModelOperator,
    n_half: usize,
    k_trans: Option<usize>,
    spec: BoundarySpec,
    alpha: f64,
) -> Result<Problem, SolverError> {
    let nsi = crate::models::null_space(&model)?;
    let mu = build_halfspace_family(n_half, model.grid().mu_half_rule())?;
    let transverse = match (k_trans, model.grid().transverse_rule()) {
        (Some(k), Some(rule)) => vec![build_full_family(k, rule)?],
        (None, None) => Vec::new(),
        (Some(_), None) => {
            return Err(SolverError::Model(ModelError::Config {
                reason: String::from("model has no transverse direction"),
            }))
        }
        (None, Some(_)) => {
            return Err(SolverError::Model(ModelError::Config {
                reason: String::from("model needs a transverse basis count"),
            }))
        }
    };
    let tb = TensorBasis::new(mu, transverse, model.grid().species_weights());
    let v_full = tb.value_matrix(model.grid());
    let ops = build_boundary_ops(&model, &spec)?;
    let system = assemble(&tb, &model, &nsi, &v_full, alpha)?;
    let system = decaying_modes(system, &tb)?;
    Ok(Problem { model, nsi, tb, v_full, spec, ops, system })
}

impl Problem {
    /// Solve the damped problem with the configured incoming data.
    pub fn solve(&self) -> Result<DampedSolution, SolverError> {
        self.solve_with(&self.spec)
    }

    fn solve_with(&self, spec: &BoundarySpec) -> Result<DampedSolution, SolverError> {
        let h = incoming_values(&self.model, &self.nsi, spec)?;
        let (rows, rhs) = assemble_bc_rows(&self.tb, &self.model, &self.v_full, &self.ops, &h);
        solve_damped(&self.system, &rows, &rhs)
    }

    /// Recover the undamped solution: solve the special problems for every
    /// H0 and H+ mode, match the null-space averages at the wall by least
    /// squares over the full redundant constraint set, and superpose.
    pub fn recover(&self, damped: DampedSolution) -> Result<RecoveredSolution, SolverError> {
        let grid = self.model.grid();
        let (nu_plus, _, nu_zero) = self.nsi.dims();

        let mut specials = Vec::with_capacity(nu_zero + nu_plus);
        let mut special_labels = Vec::with_capacity(nu_zero + nu_plus);
        let mut special_modes: Vec<&Vec<f64>> = Vec::with_capacity(nu_zero + nu_plus);
        for i in 0..nu_zero {
            let spec_g = BoundarySpec::new(
                self.spec.alpha_d(),
                self.spec.alpha_s(),
                IncomingData::Shifted(ModeRef::Zero(i)),
            )?;
            specials.push(self.solve_with(&spec_g)?);
            special_labels.push(format!("zero_{}", i + 1));
            special_modes.push(&self.nsi.x_zero[i]);
        }
        for j in 0..nu_plus {
            let spec_g = BoundarySpec::new(
                self.spec.alpha_d(),
                self.spec.alpha_s(),
                IncomingData::Shifted(ModeRef::Plus(j)),
            )?;
            specials.push(self.solve_with(&spec_g)?);
            special_labels.push(format!("plus_{}", j + 1));
            special_modes.push(&self.nsi.x_plus[j]);
        }

        // Constraint system: mu-weighted averages against mu X_+, mu X_-,
        // mu X_0 and mu L^-1(mu X_0), matched between f and the g's at the
        // wall. The set is redundant but consistent; least squares with a
        // residual gate is robust to near-degenerate mode geometry.
        let functionals = self.nsi.damping_vectors(grid);
        let n_con = functionals.len();
        let n_special = specials.len();
        let f0 = damped.nodal_at(0.0, &self.v_full);
        let g0: Vec<Vec<f64>> =
            specials.iter().map(|g| g.nodal_at(0.0, &self.v_full)).collect();

        let (coefficients, recovery_residual) = if n_special == 0 {
            (Vec::new(), 0.0)
        } else {
            let mut gmat = DenseMatrix::zeros(n_con, n_special);
            let mut b = vec![0.0; n_con];
            for (r, func) in functionals.iter().enumerate() {
                b[r] = grid.inner(func, &f0);
                for (cidx, g) in g0.iter().enumerate() {
                    gmat[(r, cidx)] = grid.inner(func, g);
                }
            }
            let (c, residual) = crate::linalg::least_squares(&gmat, &b)?;
            let tolerance = RECOVERY_RESIDUAL_REL * (1.0 + norm2(&b));
            if residual > tolerance {
                return Err(SolverError::RecoveryResidual { residual, tolerance });
            }
            (c, residual)
        };

        let mut end_state = vec![0.0; grid.n_nodes()];
        for (c, x) in coefficients.iter().zip(special_modes.iter()) {
            for (e, xv) in end_state.iter_mut().zip(x.iter()) {
                *e += c * xv;
            }
        }

        Ok(RecoveredSolution {
            damped,
            specials,
            special_labels,
            coefficients,
            end_state,
            recovery_residual,
        })
    }

    /// Convenience: solve and recover in one call.
    pub fn solve_recover(&self) -> Result<(DampedSolution, RecoveredSolution), SolverError> {
        let damped = self.solve()?;
        let recovered = self.recover(damped.clone())?;
        Ok((damped, recovered))
    }

    /// Flux table of the recovered solution: <mu X, eta(x)> for every
    /// null-space mode over the given positions. Constant columns certify
    /// that eta solves the undamped equation.
    pub fn flux_table(
        &self,
        recovered: &RecoveredSolution,
        x_grid: &[f64],
    ) -> Vec<(String, Vec<f64>)> {
        let grid = self.model.grid();
        let mut labels: Vec<String> = Vec::new();
        let mut modes: Vec<&Vec<f64>> = Vec::new();
        for (i, x) in self.nsi.x_zero.iter().enumerate() {
            labels.push(format!("zero_{}", i + 1));
            modes.push(x);
        }
        for (i, x) in self.nsi.x_plus.iter().enumerate() {
            labels.push(format!("plus_{}", i + 1));
            modes.push(x);
        }
        for (i, x) in self.nsi.x_minus.iter().enumerate() {
            labels.push(format!("minus_{}", i + 1));
            modes.push(x);
        }
        let mut table: Vec<(String, Vec<f64>)> =
            labels.into_iter().map(|l| (l, Vec::with_capacity(x_grid.len()))).collect();
        for &x in x_grid {
            let eta = recovered.nodal_at(x, &self.v_full);
            for ((_, fluxes), mode) in table.iter_mut().zip(modes.iter()) {
                fluxes.push(grid.inner_mu(mode, &eta));
            }
        }
        table
    }
}

/// Default evaluation grid: 0 plus a geometric ramp up to ten decay
/// lengths of the slowest mode.
pub fn default_x_grid(lambda_max: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2);
    assert!(lambda_max < 0.0);
    let x_max = 10.0 / lambda_max.abs();
    let mut grid = Vec::with_capacity(points);
    grid.push(0.0);
    let inner = points - 1;
    let ratio_span = 1e-4_f64;
    for i in 0..inner {
        let exponent = if inner == 1 {
            0.0
        } else {
            (inner - 1 - i) as f64 / (inner - 1) as f64
        };
        grid.push(x_max * ratio_span.powf(exponent));
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_bgk2d, build_rte2, quad_points_for};

    fn rte2_problem(n_half: usize, spec: BoundarySpec, alpha: f64) -> Problem {
        let model = build_rte2(quad_points_for(n_half + 1));
        build_problem(model, n_half, None, spec, alpha).unwrap()
    }

    #[test]
    fn rte2_counts_small() {
        let spec = BoundarySpec::new(0.0, 0.0, IncomingData::Zero).unwrap();
        let p = rte2_problem(4, spec, DEFAULT_ALPHA);
        assert_eq!(
            p.system.counts,
            ModeCounts { growing: 8, decaying: 8, degenerate: 2 }
        );
        for l in &p.system.decaying_lambdas {
            assert!(*l < 0.0);
        }
    }

    #[test]
    fn bgk2d_counts() {
        let model = build_bgk2d(quad_points_for(9), quad_points_for(8), 12.0).unwrap();
        let spec = BoundarySpec::new(0.0, 0.0, IncomingData::Zero).unwrap();
        let p = build_problem(model, 8, Some(8), spec, DEFAULT_ALPHA).unwrap();
        assert_eq!(
            p.system.counts,
            ModeCounts { growing: 64, decaying: 64, degenerate: 8 }
        );
    }

    #[test]
    fn degenerate_count_is_amat_kernel_dimension() {
        let spec = BoundarySpec::new(0.0, 0.0, IncomingData::Zero).unwrap();
        let p = rte2_problem(4, spec, DEFAULT_ALPHA);
        let (eigs, _) = sym_eig(&p.system.amat).unwrap();
        let scale = eigs.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
        let kernel = eigs.iter().filter(|e| e.abs() <= 1e-12 * scale).count();
        assert_eq!(kernel, p.system.counts.degenerate);
    }

    #[test]
    fn amat_vanishes_between_equal_parities() {
        let spec = BoundarySpec::new(0.0, 0.0, IncomingData::Zero).unwrap();
        let p = rte2_problem(6, spec, DEFAULT_ALPHA);
        let n = p.tb.n_flat();
        for a in 0..n {
            for b in 0..n {
                if p.tb.flat_is_odd(a) == p.tb.flat_is_odd(b) {
                    assert_eq!(p.system.amat[(a, b)], 0.0, "({a},{b})");
                }
            }
        }
    }

    #[test]
    fn zero_damping_fails_coercivity() {
        let model = build_rte2(quad_points_for(5));
        let spec = BoundarySpec::new(0.0, 0.0, IncomingData::Zero).unwrap();
        match build_problem(model, 4, None, spec, 0.0) {
            Err(SolverError::Coercivity { .. }) => {}
            other => panic!("expected coercivity failure, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn absurd_damping_fails_coercivity() {
        let model = build_rte2(quad_points_for(5));
        let spec = BoundarySpec::new(0.0, 0.0, IncomingData::Zero).unwrap();
        match build_problem(model, 4, None, spec, 1e6) {
            Err(SolverError::Coercivity { .. }) => {}
            other => panic!("expected coercivity failure, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn zero_incoming_data_gives_zero_solution() {
        let spec = BoundarySpec::new(0.0, 0.0, IncomingData::Zero).unwrap();
        let p = rte2_problem(6, spec, DEFAULT_ALPHA);
        let damped = p.solve().unwrap();
        for c in &damped.coefficients {
            assert_eq!(*c, 0.0);
        }
    }

    #[test]
    fn rte2_scalar_recovery_formula() {
        // With one H0 mode the least squares coefficient collapses to
        // c = <mu X0, f> / <mu X0, g0>.
        let spec = BoundarySpec::new(
            0.0,
            0.0,
            IncomingData::Polynomial(alloc::vec![alloc::vec![0.0, 2.0], alloc::vec![0.0, 1.0]]),
        )
        .unwrap();
        let p = rte2_problem(8, spec, DEFAULT_ALPHA);
        let (damped, recovered) = p.solve_recover().unwrap();
        let grid = p.model.grid();
        let mu_x0 = grid.mul_mu(&p.nsi.x_zero[0]);
        let f0 = damped.nodal_at(0.0, &p.v_full);
        let g0 = recovered.specials[0].nodal_at(0.0, &p.v_full);
        let expect = grid.inner(&mu_x0, &f0) / grid.inner(&mu_x0, &g0);
        assert!((recovered.coefficients[0] - expect).abs() <= 1e-9 * expect.abs().max(1.0));
    }

    #[test]
    fn decay_bound_holds() {
        let spec = BoundarySpec::new(
            0.0,
            0.0,
            IncomingData::Polynomial(alloc::vec![alloc::vec![0.0, 2.0], alloc::vec![0.0, 1.0]]),
        )
        .unwrap();
        let p = rte2_problem(8, spec, DEFAULT_ALPHA);
        let damped = p.solve().unwrap();
        let lambda_max = p.system.lambda_max();
        // Decaying modes are orthonormal in the damped collision energy
        // norm, where the contraction bound is exact.
        let f0 = p.system.energy_norm(&damped.flat_at(0.0));
        for x in [0.5, 1.0, 3.0, 10.0] {
            let fx = p.system.energy_norm(&damped.flat_at(x));
            assert!(fx <= f0 * (lambda_max * x).exp() * (1.0 + 1e-9), "x={x}");
        }
        // Deep decay: below 1e-8 at fifty decay lengths.
        let far = 50.0 / lambda_max.abs();
        assert!(norm2(&damped.nodal_at(far, &p.v_full)) <= 1e-8);
    }

    #[test]
    fn x_grid_shape() {
        let g = default_x_grid(-2.0, 61);
        assert_eq!(g.len(), 61);
        assert_eq!(g[0], 0.0);
        assert!((g[60] - 5.0).abs() < 1e-12);
        for i in 1..61 {
            assert!(g[i] > g[i - 1]);
        }
    }
}
