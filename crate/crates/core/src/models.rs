//! The three kinetic models: collision operator, measure, and null-space
//! structure.
//!
//! * `rte2`: two-species radiative transfer with Rayleigh scattering and
//!   polarization (intensity I and intensity difference Q), mu on [-1, 1]
//!   with Lebesgue measure.
//! * `bgk2d`: linearized BGK with velocity (mu, v_y) in R^2 against the
//!   normalized Gaussian measure; the collision operator subtracts the
//!   projection onto span{1, mu, v_y, |v|^2}.
//! * `phonon`: multi-frequency relaxation model; after discretizing the
//!   frequency by the trapezoidal rule each frequency node becomes a
//!   species and the total measure is a probability measure.
//!
//! The null space of each collision operator is split into H+/H-/H0 by the
//! sign of the eigenvalues of the symmetric operator f -> P(mu f) on the
//! null space. Modes are always re-orthonormalized against the discrete
//! measure and H+/H- recomputed from that eigenproblem rather than trusting
//! listed closed forms; analytic formulas only seed the spanning set and
//! the preimages L^{-1}(mu X_0), and every derived quantity is verified
//! numerically before use.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{sym_eig, DenseMatrix, LinalgError};
use crate::phase::PhaseGrid;
use crate::quadrature::{
    gauss_legendre, gauss_weighted, trapezoid, GaussianKind, QuadratureError,
};

/// Quadrature sizing rule: enough nodes that every assembled Gram or
/// collision integral of polynomial integrands is exact to round-off.
pub fn quad_points_for(basis_count: usize) -> usize {
    2 * basis_count + 8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Rte2,
    Bgk2d,
    Phonon,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Rte2 => "rte2",
            ModelKind::Bgk2d => "bgk2d",
            ModelKind::Phonon => "phonon",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    Config { reason: String },
    Quadrature(QuadratureError),
    Linalg(LinalgError),
    NullSpaceResidual { mode: usize, residual: f64 },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::Config { reason } => write!(f, "model configuration error: {reason}"),
            ModelError::Quadrature(e) => write!(f, "model quadrature error: {e}"),
            ModelError::Linalg(e) => write!(f, "model linear algebra error: {e}"),
            ModelError::NullSpaceResidual { mode, residual } => {
                write!(f, "null-space verification failed for mode {mode} (residual {residual:e})")
            }
        }
    }
}

impl From<QuadratureError> for ModelError {
    fn from(e: QuadratureError) -> Self {
        ModelError::Quadrature(e)
    }
}

impl From<LinalgError> for ModelError {
    fn from(e: LinalgError) -> Self {
        ModelError::Linalg(e)
    }
}

#[derive(Debug, Clone)]
enum ModelData {
    Rte2 {
        /// Second Legendre polynomial at the mu nodes.
        p2: Vec<f64>,
    },
    Bgk2d {
        /// Orthonormalized collision invariants {1, mu, v_y, |v|^2} as
        /// nodal vectors.
        invariants: Vec<Vec<f64>>,
    },
    Phonon {
        omega: Vec<f64>,
        beta: Vec<f64>,
        theta0: f64,
    },
}

/// A kinetic model: discrete measure, collision action and null-space
/// seeds. Immutable after construction.
#[derive(Debug, Clone)]
pub struct ModelOperator {
    kind: ModelKind,
    grid: PhaseGrid,
    data: ModelData,
}

/// Two-species transport model; `mu_half_points` nodes per half interval.
pub fn build_rte2(mu_half_points: usize) -> ModelOperator {
    let half = gauss_legendre(mu_half_points, 0.0, 1.0);
    let grid = PhaseGrid::new(vec![1.0, 1.0], half, None);
    let p2 = grid.mu_nodes().iter().map(|m| 1.5 * m * m - 0.5).collect();
    ModelOperator { kind: ModelKind::Rte2, grid, data: ModelData::Rte2 { p2 } }
}

/// Linearized 2D BGK model. The Gaussian normalization 1/(2 pi) is folded
/// into the species weight so the quadrature rules keep the raw weight
/// exp(-v^2/2).
pub fn build_bgk2d(
    mu_half_points: usize,
    trans_points: usize,
    cutoff: f64,
) -> Result<ModelOperator, ModelError> {
    let half = gauss_weighted(mu_half_points, GaussianKind::Half, cutoff)?;
    let trans = gauss_weighted(trans_points, GaussianKind::Full, cutoff)?;
    let scale = 1.0 / (2.0 * core::f64::consts::PI);
    let grid = PhaseGrid::new(vec![scale], half, Some(trans));

    let n = grid.n_nodes();
    let raw: Vec<Vec<f64>> = vec![
        vec![1.0; n],
        (0..n).map(|t| grid.mu_of(t)).collect(),
        (0..n).map(|t| grid.trans_of(t)).collect(),
        (0..n)
            .map(|t| {
                let mu = grid.mu_of(t);
                let vy = grid.trans_of(t);
                mu * mu + vy * vy
            })
            .collect(),
    ];
    let invariants = orthonormalize(&grid, &raw);
    Ok(ModelOperator { kind: ModelKind::Bgk2d, grid, data: ModelData::Bgk2d { invariants } })
}

/// Multi-frequency phonon model. `c_over_tau` and `beta` are sampled on the
/// trapezoidal frequency grid; the normalization Theta0 is computed from
/// the same discrete rule so the total measure is exactly 1.
pub fn build_phonon(
    omega_nodes: usize,
    omega_min: f64,
    omega_max: f64,
    c_over_tau: impl Fn(f64) -> f64,
    beta: impl Fn(f64) -> f64,
    mu_half_points: usize,
) -> Result<ModelOperator, ModelError> {
    if omega_nodes < 2 {
        return Err(ModelError::Config { reason: String::from("need at least 2 frequency nodes") });
    }
    if !(omega_min < omega_max) {
        return Err(ModelError::Config { reason: String::from("empty frequency interval") });
    }
    let omega_rule = trapezoid(omega_nodes, omega_min, omega_max);
    let mut beta_vals = Vec::with_capacity(omega_nodes);
    let mut c_vals = Vec::with_capacity(omega_nodes);
    for w in &omega_rule.nodes {
        let b = beta(*w);
        if !(b > 0.0) || !b.is_finite() {
            return Err(ModelError::Config {
                reason: alloc::format!("beta(omega) must be positive, got {b} at omega = {w}"),
            });
        }
        beta_vals.push(b);
        let c = c_over_tau(*w);
        if !(c > 0.0) || !c.is_finite() {
            return Err(ModelError::Config {
                reason: alloc::format!("C/tau profile must be positive, got {c} at omega = {w}"),
            });
        }
        c_vals.push(c);
    }
    // Theta0 = integral of C/tau over mu and omega; the mu integral is 2.
    let theta0: f64 =
        2.0 * omega_rule.weights.iter().zip(c_vals.iter()).map(|(w, c)| w * c).sum::<f64>();
    let species_weights: Vec<f64> = omega_rule
        .weights
        .iter()
        .zip(c_vals.iter())
        .map(|(w, c)| w * c / theta0)
        .collect();

    let half = gauss_legendre(mu_half_points, 0.0, 1.0);
    let grid = PhaseGrid::new(species_weights, half, None);
    Ok(ModelOperator {
        kind: ModelKind::Phonon,
        grid,
        data: ModelData::Phonon { omega: omega_rule.nodes, beta: beta_vals, theta0 },
    })
}

impl ModelOperator {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn n_species(&self) -> usize {
        self.grid.n_species()
    }

    /// Velocity dimension (1 plus the number of transverse directions).
    pub fn dim(&self) -> usize {
        if self.grid.transverse_rule().is_some() {
            2
        } else {
            1
        }
    }

    /// Frequency grid of the phonon model.
    pub fn omega_nodes(&self) -> Option<&[f64]> {
        match &self.data {
            ModelData::Phonon { omega, .. } => Some(omega),
            _ => None,
        }
    }

    pub fn phonon_beta(&self) -> Option<&[f64]> {
        match &self.data {
            ModelData::Phonon { beta, .. } => Some(beta),
            _ => None,
        }
    }

    pub fn phonon_theta0(&self) -> Option<f64> {
        match &self.data {
            ModelData::Phonon { theta0, .. } => Some(*theta0),
            _ => None,
        }
    }

    /// Apply the collision operator to a nodal function.
    pub fn apply_collision(&self, f: &[f64]) -> Vec<f64> {
        let grid = &self.grid;
        debug_assert_eq!(f.len(), grid.n_nodes());
        match &self.data {
            ModelData::Rte2 { p2 } => {
                let n_mu = grid.n_mu();
                let wmu = &grid.mu_full_rule().weights;
                // Moments of the scattering kernel: a = <I>, b = <p2 I>,
                // c = <(1 - p2) Q>.
                let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
                for idx in 0..n_mu {
                    let i_val = f[grid.node_index(0, idx, 0)];
                    let q_val = f[grid.node_index(1, idx, 0)];
                    a += wmu[idx] * i_val;
                    b += wmu[idx] * p2[idx] * i_val;
                    c += wmu[idx] * (1.0 - p2[idx]) * q_val;
                }
                let mut out = vec![0.0; f.len()];
                for idx in 0..n_mu {
                    let ti = grid.node_index(0, idx, 0);
                    let tq = grid.node_index(1, idx, 0);
                    out[ti] = f[ti] - 0.5 * a - 0.25 * p2[idx] * b + 0.25 * p2[idx] * c;
                    out[tq] = f[tq] + 0.25 * (1.0 - p2[idx]) * b - 0.25 * (1.0 - p2[idx]) * c;
                }
                out
            }
            ModelData::Bgk2d { invariants } => {
                let mut out = f.to_vec();
                for e in invariants {
                    let m = grid.inner(f, e);
                    for (o, v) in out.iter_mut().zip(e.iter()) {
                        *o -= m * v;
                    }
                }
                out
            }
            ModelData::Phonon { beta, .. } => {
                let mut s = 0.0;
                for t in 0..grid.n_nodes() {
                    let b = beta[grid.species_of(t)];
                    s += grid.weight_of(t) * f[t] / b.sqrt();
                }
                (0..grid.n_nodes())
                    .map(|t| {
                        let b = beta[grid.species_of(t)];
                        f[t] / b - s / b.sqrt()
                    })
                    .collect()
            }
        }
    }

    /// Analytic spanning set of the collision operator's null space
    /// (un-normalized nodal vectors).
    pub fn null_spanning_set(&self) -> Vec<Vec<f64>> {
        let grid = &self.grid;
        let n = grid.n_nodes();
        match &self.data {
            ModelData::Rte2 { .. } => {
                let mut x = vec![0.0; n];
                for idx in 0..grid.n_mu() {
                    x[grid.node_index(0, idx, 0)] = 1.0;
                }
                vec![x]
            }
            ModelData::Bgk2d { .. } => vec![
                vec![1.0; n],
                (0..n).map(|t| grid.mu_of(t)).collect(),
                (0..n).map(|t| grid.trans_of(t)).collect(),
                (0..n)
                    .map(|t| {
                        let mu = grid.mu_of(t);
                        let vy = grid.trans_of(t);
                        mu * mu + vy * vy
                    })
                    .collect(),
            ],
            ModelData::Phonon { beta, .. } => {
                vec![(0..n).map(|t| beta[grid.species_of(t)].sqrt()).collect()]
            }
        }
    }

    /// Analytic preimage L^{-1}(mu x0) for a null mode x0, orthogonal to
    /// the null space.
    pub fn linv_mu(&self, x0: &[f64]) -> Vec<f64> {
        let grid = &self.grid;
        match &self.data {
            ModelData::Rte2 { .. } | ModelData::Bgk2d { .. } => {
                (0..grid.n_nodes()).map(|t| grid.mu_of(t) * x0[t]).collect()
            }
            ModelData::Phonon { beta, .. } => (0..grid.n_nodes())
                .map(|t| grid.mu_of(t) * beta[grid.species_of(t)] * x0[t])
                .collect(),
        }
    }
}

/// Modified Gram-Schmidt against the grid inner product, two passes.
fn orthonormalize(grid: &PhaseGrid, raw: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(raw.len());
    for r in raw {
        let mut v = r.clone();
        for _ in 0..2 {
            for q in &out {
                let c = grid.inner(&v, q);
                for (vi, qi) in v.iter_mut().zip(q.iter()) {
                    *vi -= c * qi;
                }
            }
        }
        let norm = grid.norm(&v);
        assert!(norm > 0.0, "null spanning set is degenerate");
        for vi in v.iter_mut() {
            *vi /= norm;
        }
        out.push(v);
    }
    out
}

/// Classification threshold: eigenvalues of f -> P(mu f) below this
/// magnitude count as zero (the models have order-one gaps).
const P1_ZERO_TOL: f64 = 1e-10;
/// Verification residuals beyond this are hard errors.
const NULLSPACE_VERIFY_TOL: f64 = 1e-8;

/// Null-space data: H0/H+/H- modes (orthonormal nodal vectors), their
/// eigenvalues under f -> P(mu f), and the preimages L^{-1}(mu X_0).
#[derive(Debug, Clone)]
pub struct NullSpaceInfo {
    pub x_zero: Vec<Vec<f64>>,
    pub x_plus: Vec<Vec<f64>>,
    pub x_minus: Vec<Vec<f64>>,
    pub eig_zero: Vec<f64>,
    pub eig_plus: Vec<f64>,
    pub eig_minus: Vec<f64>,
    pub linv_mu_x0: Vec<Vec<f64>>,
}

impl NullSpaceInfo {
    /// (nu_plus, nu_minus, nu_zero).
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.x_plus.len(), self.x_minus.len(), self.x_zero.len())
    }

    /// All eigenvalues of f -> P(mu f) in ascending order.
    pub fn p1_eigenvalues(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self
            .eig_minus
            .iter()
            .chain(self.eig_zero.iter())
            .chain(self.eig_plus.iter())
            .copied()
            .collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        all
    }

    /// Damping directions mu X_+, mu X_-, mu X_0, mu L^{-1}(mu X_0), as
    /// nodal vectors in that order. The same list serves as the recovery
    /// constraint functionals.
    pub fn damping_vectors(&self, grid: &PhaseGrid) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for x in self.x_plus.iter().chain(self.x_minus.iter()).chain(self.x_zero.iter()) {
            out.push(grid.mul_mu(x));
        }
        for l in &self.linv_mu_x0 {
            out.push(grid.mul_mu(l));
        }
        out
    }
}

/// Build the null-space decomposition of a model: orthonormalize the
/// declared spanning set, assemble the matrix of f -> P(mu f), split its
/// eigenvectors by eigenvalue sign, and verify every stored identity.
pub fn null_space(model: &ModelOperator) -> Result<NullSpaceInfo, ModelError> {
    let grid = model.grid();
    let basis = orthonormalize(grid, &model.null_spanning_set());
    let dim = basis.len();

    // P1[a][b] = <X_a, mu X_b>.
    let mut p1 = DenseMatrix::zeros(dim, dim);
    for a in 0..dim {
        for b in 0..dim {
            p1[(a, b)] = grid.inner_mu(&basis[a], &basis[b]);
        }
    }
    p1.symmetrize();
    let (eigs, vecs) = sym_eig(&p1)?;

    let mut info = NullSpaceInfo {
        x_zero: Vec::new(),
        x_plus: Vec::new(),
        x_minus: Vec::new(),
        eig_zero: Vec::new(),
        eig_plus: Vec::new(),
        eig_minus: Vec::new(),
        linv_mu_x0: Vec::new(),
    };
    for (j, lambda) in eigs.iter().enumerate() {
        let mut mode = vec![0.0; grid.n_nodes()];
        for (i, x) in basis.iter().enumerate() {
            let c = vecs[(i, j)];
            for (m, v) in mode.iter_mut().zip(x.iter()) {
                *m += c * v;
            }
        }
        if lambda.abs() < P1_ZERO_TOL {
            info.x_zero.push(mode);
            info.eig_zero.push(*lambda);
        } else if *lambda > 0.0 {
            info.x_plus.push(mode);
            info.eig_plus.push(*lambda);
        } else {
            info.x_minus.push(mode);
            info.eig_minus.push(*lambda);
        }
    }

    for x0 in &info.x_zero {
        info.linv_mu_x0.push(model.linv_mu(x0));
    }

    verify_null_space(model, &info)?;
    Ok(info)
}

fn verify_null_space(model: &ModelOperator, info: &NullSpaceInfo) -> Result<(), ModelError> {
    let grid = model.grid();
    let all_modes: Vec<&Vec<f64>> =
        info.x_minus.iter().chain(info.x_zero.iter()).chain(info.x_plus.iter()).collect();

    // Every stored mode is annihilated by the collision operator.
    for (mode_idx, x) in all_modes.iter().enumerate() {
        let lx = model.apply_collision(x);
        let residual = grid.norm(&lx);
        if residual > NULLSPACE_VERIFY_TOL {
            return Err(ModelError::NullSpaceResidual { mode: mode_idx, residual });
        }
    }
    // <mu X_0i, X_0j> = 0 within tolerance.
    for (i, xi) in info.x_zero.iter().enumerate() {
        for xj in info.x_zero.iter() {
            let v = grid.inner_mu(xi, xj);
            if v.abs() > 1e-11 {
                return Err(ModelError::NullSpaceResidual { mode: i, residual: v.abs() });
            }
        }
    }
    // Sign pattern of <mu X, X> matches the labels.
    for (i, x) in info.x_plus.iter().enumerate() {
        if grid.inner_mu(x, x) <= 0.0 {
            return Err(ModelError::NullSpaceResidual { mode: i, residual: grid.inner_mu(x, x) });
        }
    }
    for (i, x) in info.x_minus.iter().enumerate() {
        if grid.inner_mu(x, x) >= 0.0 {
            return Err(ModelError::NullSpaceResidual { mode: i, residual: grid.inner_mu(x, x) });
        }
    }
    // L applied to the preimage reproduces mu X_0, and the preimage is
    // orthogonal to the null space.
    for (k, (linv, x0)) in info.linv_mu_x0.iter().zip(info.x_zero.iter()).enumerate() {
        let lhs = model.apply_collision(linv);
        let target = grid.mul_mu(x0);
        let mut err2 = 0.0;
        for t in 0..grid.n_nodes() {
            let d = lhs[t] - target[t];
            err2 += grid.weight_of(t) * d * d;
        }
        let residual = err2.sqrt();
        if residual > NULLSPACE_VERIFY_TOL {
            return Err(ModelError::NullSpaceResidual { mode: k, residual });
        }
        for x in &all_modes {
            let c = grid.inner(linv, x);
            if c.abs() > NULLSPACE_VERIFY_TOL {
                return Err(ModelError::NullSpaceResidual { mode: k, residual: c.abs() });
            }
        }
    }
    Ok(())
}
