//! Quadrature rules for the measures used by the kinetic models.
//!
//! Three constructions cover everything: Gauss-Legendre on an interval
//! (Golub-Welsch on the shifted Legendre recurrence), Gauss rules for the
//! truncated Gaussian weight `exp(-x^2/2)` on a half line or full line
//! (Stieltjes recurrence computed against a fine composite Gauss-Legendre
//! discretization, then Golub-Welsch), and the trapezoidal rule for the
//! frequency variable. Raw half-range Gaussian moment matrices are
//! catastrophically ill-conditioned past n ~ 12, hence the Stieltjes path.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{sym_eig, DenseMatrix};

/// Default truncation of the Gaussian weight. The tail mass beyond 8 is
/// about exp(-32), far below the 1e-12 mass tolerance, and keeping the
/// domain this tight also caps the dynamic range of high-degree basis
/// polynomials at the outermost quadrature nodes (their squared values sum
/// to the reciprocal Christoffel weight there), which keeps node-wise
/// solution errors at the round-off scale.
pub const DEFAULT_GAUSSIAN_CUTOFF: f64 = 8.0;
/// Default panel count for the Stieltjes discretization. 40 panels of 20
/// points already resolve rules up to n ~ 40; the doubled default keeps
/// high moments of large rules at full accuracy.
pub const DEFAULT_STIELTJES_PANELS: usize = 80;
/// Points per panel in the Stieltjes discretization.
const STIELTJES_PANEL_POINTS: usize = 20;

/// Which measure a rule discretizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureId {
    /// Lebesgue measure on [a, b].
    Lebesgue { a: f64, b: f64 },
    /// exp(-x^2/2) dx on [0, cutoff].
    GaussianHalf { cutoff: f64 },
    /// exp(-x^2/2) dx on [-cutoff, cutoff].
    GaussianFull { cutoff: f64 },
    /// Trapezoidal discretization of Lebesgue measure on [a, b].
    TrapezoidOmega { a: f64, b: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaussianKind {
    Half,
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub enum QuadratureError {
    /// A Stieltjes recurrence norm came out non-positive: the requested
    /// size exceeds what the discretization resolves. Raise the panel
    /// count.
    RecurrenceBreakdown { index: usize },
}

impl fmt::Display for QuadratureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuadratureError::RecurrenceBreakdown { index } => {
                write!(f, "orthogonal polynomial recurrence broke down at index {index}")
            }
        }
    }
}

/// Nodes and positive weights discretizing one measure; nodes strictly
/// increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub measure: MeasureId,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(self.weights.iter())
            .map(|(x, w)| w * f(*x))
            .sum()
    }

    /// Reflect a half-range rule through the origin, producing a symmetric
    /// rule whose nodes come in +/- pairs with equal weights. Node `a` and
    /// node `len-1-a` mirror each other exactly.
    pub fn mirrored(&self) -> QuadratureRule {
        let n = self.len();
        let mut nodes = Vec::with_capacity(2 * n);
        let mut weights = Vec::with_capacity(2 * n);
        for i in (0..n).rev() {
            nodes.push(-self.nodes[i]);
            weights.push(self.weights[i]);
        }
        nodes.extend_from_slice(&self.nodes);
        weights.extend_from_slice(&self.weights);
        let measure = match self.measure {
            MeasureId::Lebesgue { a, b } => {
                debug_assert!(a >= 0.0);
                MeasureId::Lebesgue { a: -b, b }
            }
            MeasureId::GaussianHalf { cutoff } => MeasureId::GaussianFull { cutoff },
            other => other,
        };
        QuadratureRule { nodes, weights, measure }
    }
}

/// n-point Gauss-Legendre rule on [a, b]; exact for polynomials of degree
/// <= 2n-1.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> QuadratureRule {
    assert!(n >= 1, "need at least one node");
    assert!(a < b, "interval must be nonempty");
    // Monic recurrence of shifted Legendre polynomials on [0, 1].
    let mut alpha = vec![0.5; n];
    let mut beta = vec![0.0; n];
    beta[0] = 1.0;
    for (k, b_k) in beta.iter_mut().enumerate().skip(1) {
        let kf = k as f64;
        *b_k = kf * kf / (4.0 * (4.0 * kf * kf - 1.0));
    }
    let (mut nodes, mut weights) = golub_welsch(&alpha, &beta);
    alpha.clear();
    for (x, w) in nodes.iter_mut().zip(weights.iter_mut()) {
        *x = a + (b - a) * *x;
        *w *= b - a;
    }
    QuadratureRule { nodes, weights, measure: MeasureId::Lebesgue { a, b } }
}

/// Gauss rule for the truncated Gaussian weight exp(-x^2/2) with the
/// default Stieltjes discretization.
pub fn gauss_weighted(
    n: usize,
    kind: GaussianKind,
    cutoff: f64,
) -> Result<QuadratureRule, QuadratureError> {
    gauss_weighted_with_panels(n, kind, cutoff, DEFAULT_STIELTJES_PANELS)
}

/// Same as [`gauss_weighted`], with an explicit panel count for the fine
/// discretization (raise it if the recurrence breaks down).
pub fn gauss_weighted_with_panels(
    n: usize,
    kind: GaussianKind,
    cutoff: f64,
    panels: usize,
) -> Result<QuadratureRule, QuadratureError> {
    assert!(n >= 1, "need at least one node");
    assert!(cutoff > 0.0, "cutoff must be positive");
    assert!(panels >= 1);

    let lo = match kind {
        GaussianKind::Half => 0.0,
        GaussianKind::Full => -cutoff,
    };
    let hi = cutoff;

    // Fine composite discretization of the weight.
    let panel_rule = gauss_legendre(STIELTJES_PANEL_POINTS, 0.0, 1.0);
    let mut fine_nodes = Vec::with_capacity(panels * STIELTJES_PANEL_POINTS);
    let mut fine_weights = Vec::with_capacity(panels * STIELTJES_PANEL_POINTS);
    let h = (hi - lo) / panels as f64;
    for p in 0..panels {
        let pa = lo + h * p as f64;
        for (t, w) in panel_rule.nodes.iter().zip(panel_rule.weights.iter()) {
            let x = pa + h * t;
            fine_nodes.push(x);
            fine_weights.push(h * w * (-0.5 * x * x).exp());
        }
    }

    let (mut alpha, beta) = stieltjes(&fine_nodes, &fine_weights, n)?;
    if kind == GaussianKind::Full {
        // The weight is even, so the recurrence diagonal vanishes exactly.
        for a in alpha.iter_mut() {
            *a = 0.0;
        }
    }
    let (mut nodes, mut weights) = golub_welsch(&alpha, &beta);
    if kind == GaussianKind::Full {
        symmetrize_rule(&mut nodes, &mut weights);
    }
    let measure = match kind {
        GaussianKind::Half => MeasureId::GaussianHalf { cutoff },
        GaussianKind::Full => MeasureId::GaussianFull { cutoff },
    };
    Ok(QuadratureRule { nodes, weights, measure })
}

/// Composite trapezoidal rule with n uniformly spaced nodes on [a, b].
pub fn trapezoid(n: usize, a: f64, b: f64) -> QuadratureRule {
    assert!(n >= 2, "trapezoid needs at least two nodes");
    assert!(a < b, "interval must be nonempty");
    let h = (b - a) / (n - 1) as f64;
    let nodes: Vec<f64> = (0..n).map(|i| a + h * i as f64).collect();
    let weights: Vec<f64> = (0..n)
        .map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h })
        .collect();
    QuadratureRule { nodes, weights, measure: MeasureId::TrapezoidOmega { a, b } }
}

/// Monic three-term recurrence (alpha, beta) of the first `n` orthogonal
/// polynomials of a discrete measure; beta[0] is the total mass.
pub(crate) fn stieltjes(
    nodes: &[f64],
    weights: &[f64],
    n: usize,
) -> Result<(Vec<f64>, Vec<f64>), QuadratureError> {
    let m = nodes.len();
    assert_eq!(m, weights.len());
    if n > m {
        // A discrete measure with m atoms carries only m orthogonal
        // polynomials.
        return Err(QuadratureError::RecurrenceBreakdown { index: m });
    }
    let mut alpha = vec![0.0; n];
    let mut beta = vec![0.0; n];

    let mass: f64 = weights.iter().sum();
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(QuadratureError::RecurrenceBreakdown { index: 0 });
    }
    beta[0] = mass;

    // Carry the *normalized* polynomial values and reorthogonalize each new
    // one against all predecessors: the monic recurrence loses digits from
    // the huge dynamic range of high-degree values, this form does not.
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    basis.push(vec![1.0 / mass.sqrt(); m]);

    for k in 0..n {
        let cur = basis[k].clone();
        alpha[k] = (0..m).map(|i| weights[i] * nodes[i] * cur[i] * cur[i]).sum();
        if k + 1 == n {
            break;
        }

        let mut r: Vec<f64> = (0..m).map(|i| (nodes[i] - alpha[k]) * cur[i]).collect();
        if k > 0 {
            let bk = beta[k].sqrt();
            for i in 0..m {
                r[i] -= bk * basis[k - 1][i];
            }
        }
        // Two Gram-Schmidt passes against the stored family.
        for _ in 0..2 {
            for q in &basis {
                let c: f64 = (0..m).map(|i| weights[i] * r[i] * q[i]).sum();
                for i in 0..m {
                    r[i] -= c * q[i];
                }
            }
        }

        let norm2: f64 = (0..m).map(|i| weights[i] * r[i] * r[i]).sum();
        if !(norm2 > 0.0) || !norm2.is_finite() {
            return Err(QuadratureError::RecurrenceBreakdown { index: k + 1 });
        }
        beta[k + 1] = norm2;
        // A collapse of beta by ~eps^2 relative to the variance scale means
        // the discretization no longer resolves this degree.
        if k + 1 >= 2 && beta[k + 1] < 1e-24 * beta[1] {
            return Err(QuadratureError::RecurrenceBreakdown { index: k + 1 });
        }
        let inv = 1.0 / norm2.sqrt();
        basis.push(r.iter().map(|v| v * inv).collect());
    }
    Ok((alpha, beta))
}

/// Gauss nodes/weights from a monic recurrence. Eigenvalues of the Jacobi
/// matrix seed the nodes, a couple of Newton steps on the monic polynomial
/// polish them to machine precision, and the weights come from the
/// Christoffel function w_j = 1 / sum_k phat_k(x_j)^2, which keeps small
/// weights accurate in a relative sense (the squared-first-eigenvector
/// formula does not).
fn golub_welsch(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = alpha.len();
    let mut jac = DenseMatrix::zeros(n, n);
    for i in 0..n {
        jac[(i, i)] = alpha[i];
        if i + 1 < n {
            let off = beta[i + 1].sqrt();
            jac[(i, i + 1)] = off;
            jac[(i + 1, i)] = off;
        }
    }
    let (mut nodes, _) = sym_eig(&jac).expect("Jacobi matrix eigensolve");

    let mut weights = vec![0.0; n];
    for (x, w) in nodes.iter_mut().zip(weights.iter_mut()) {
        for _ in 0..3 {
            let (p, dp) = monic_eval(alpha, beta, *x);
            if dp == 0.0 {
                break;
            }
            let step = p / dp;
            *x -= step;
            if step.abs() <= 4.0 * f64::EPSILON * x.abs() {
                break;
            }
        }
        *w = 1.0 / orthonormal_sq_sum(alpha, beta, *x);
    }
    (nodes, weights)
}

/// Value and derivative of the monic degree-n polynomial at x.
fn monic_eval(alpha: &[f64], beta: &[f64], x: f64) -> (f64, f64) {
    let (mut p_prev, mut p) = (0.0, 1.0);
    let (mut d_prev, mut d) = (0.0, 0.0);
    for k in 0..alpha.len() {
        let b = if k == 0 { 0.0 } else { beta[k] };
        let p_next = (x - alpha[k]) * p - b * p_prev;
        let d_next = p + (x - alpha[k]) * d - b * d_prev;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    (p, d)
}

/// sum_{k=0}^{n-1} phat_k(x)^2 for the orthonormal family.
fn orthonormal_sq_sum(alpha: &[f64], beta: &[f64], x: f64) -> f64 {
    let n = alpha.len();
    let mut prev = 0.0;
    let mut cur = 1.0 / beta[0].sqrt();
    let mut sum = cur * cur;
    for k in 0..(n - 1) {
        let bk = if k == 0 { 0.0 } else { beta[k].sqrt() };
        let next = ((x - alpha[k]) * cur - bk * prev) / beta[k + 1].sqrt();
        prev = cur;
        cur = next;
        sum += cur * cur;
    }
    sum
}

/// Force exact +/- node pairing of a rule for an even weight.
fn symmetrize_rule(nodes: &mut [f64], weights: &mut [f64]) {
    let n = nodes.len();
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let mag = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -mag;
        nodes[j] = mag;
        let w = 0.5 * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
}

/// Closed-form moments of the half-line Gaussian weight exp(-x^2/2):
/// m0 = sqrt(pi/2), m1 = 1, m_k = (k-1) m_{k-2}.
pub fn gaussian_half_moment(k: usize) -> f64 {
    let m0 = (core::f64::consts::PI / 2.0).sqrt();
    match k {
        0 => m0,
        1 => 1.0,
        _ => (k as f64 - 1.0) * gaussian_half_moment(k - 2),
    }
}

/// Closed-form moments of the full-line Gaussian weight.
pub fn gaussian_full_moment(k: usize) -> f64 {
    if k % 2 == 1 {
        0.0
    } else {
        2.0 * gaussian_half_moment(k)
    }
}
