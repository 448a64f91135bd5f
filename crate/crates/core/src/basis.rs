//! Orthonormal polynomial families and the tensor-product Galerkin basis.
//!
//! Two kinds of 1D family are used. For the propagation direction `mu` the
//! solution may jump at mu = 0, so the family is built from polynomials
//! orthonormal on the *half* domain and extended to the symmetric domain
//! by odd and even reflection; with 1-based indexing, functions at odd
//! positions are odd in mu and functions at even positions are even, and
//! `mu * (even function 2n)` stays inside the span of the first `2n + 1`
//! functions. For transverse velocity directions the solution is smooth
//! and a plain full-line family is used.
//!
//! Orthogonalization always runs against the discrete quadrature inner
//! product (Stieltjes), never symbolic moments: one code path for the
//! Legendre and Hermite weights, and no ill-conditioned moment matrices.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::DenseMatrix;
use crate::phase::PhaseGrid;
use crate::quadrature::{stieltjes, MeasureId, QuadratureError, QuadratureRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    /// Even/odd extensions of a half-domain family, interleaved odd-first.
    HalfspaceExtended,
    /// Plain orthonormal family on a symmetric full domain.
    FullLine,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BasisError {
    Recurrence(QuadratureError),
    OutOfRange { what: &'static str, index: usize, limit: usize },
}

impl fmt::Display for BasisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisError::Recurrence(e) => write!(f, "basis orthogonalization failed: {e}"),
            BasisError::OutOfRange { what, index, limit } => {
                write!(f, "{what} index {index} out of range (limit {limit})")
            }
        }
    }
}

impl From<QuadratureError> for BasisError {
    fn from(e: QuadratureError) -> Self {
        BasisError::Recurrence(e)
    }
}

/// One orthonormal 1D family, stored as the three-term recurrence of its
/// underlying polynomials. Functions are always evaluated through the
/// recurrence, never by monomial expansion.
#[derive(Debug, Clone)]
pub struct BasisFamily {
    kind: FamilyKind,
    /// Number of exposed basis functions (2N+1 for extended families).
    count: usize,
    /// Monic recurrence of the underlying orthonormal polynomials;
    /// beta[0] holds the measure mass.
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// Domain tag of the quadrature rule the family was built against.
    measure: MeasureId,
    /// 1/sqrt(2) for extensions (the symmetric measure doubles the mass),
    /// 1 for full-line families.
    extension_scale: f64,
}

/// Build the `2 n_half + 1` extended basis functions: odd extensions of
/// the first `n_half + 1` half-domain orthonormal polynomials interleaved
/// with even extensions of the first `n_half`, each scaled to unit norm on
/// the symmetric domain.
pub fn build_halfspace_family(
    n_half: usize,
    half_rule: &QuadratureRule,
) -> Result<BasisFamily, BasisError> {
    assert!(n_half >= 1, "need at least one even/odd pair");
    let underlying = n_half + 1;
    let (alpha, beta) = stieltjes(&half_rule.nodes, &half_rule.weights, underlying)?;
    Ok(BasisFamily {
        kind: FamilyKind::HalfspaceExtended,
        count: 2 * n_half + 1,
        alpha,
        beta,
        measure: half_rule.measure,
        extension_scale: core::f64::consts::FRAC_1_SQRT_2,
    })
}

/// Build a plain orthonormal family of `count` functions on a full-line
/// rule.
pub fn build_full_family(
    count: usize,
    full_rule: &QuadratureRule,
) -> Result<BasisFamily, BasisError> {
    assert!(count >= 1);
    let (alpha, beta) = stieltjes(&full_rule.nodes, &full_rule.weights, count)?;
    Ok(BasisFamily {
        kind: FamilyKind::FullLine,
        count,
        alpha,
        beta,
        measure: full_rule.measure,
        extension_scale: 1.0,
    })
}

impl BasisFamily {
    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    /// Number of exposed basis functions.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn measure(&self) -> MeasureId {
        self.measure
    }

    /// Recurrence coefficients of the underlying family (monic alpha_k,
    /// beta_k with beta_0 the measure mass).
    pub fn recurrence(&self) -> (&[f64], &[f64]) {
        (&self.alpha, &self.beta)
    }

    /// With the 1-based indexing of extended families, is the 0-based
    /// function `index` odd in mu?
    pub fn index_is_odd(index: usize) -> bool {
        index.is_multiple_of(2)
    }

    /// Values of the underlying orthonormal polynomials at `x`
    /// (half-domain polynomials for extended families).
    fn eval_underlying(&self, x: f64, out: &mut [f64]) {
        let n = self.alpha.len();
        debug_assert_eq!(out.len(), n);
        let mut prev = 0.0;
        let mut cur = 1.0 / self.beta[0].sqrt();
        out[0] = cur;
        for k in 0..(n - 1) {
            let bk = if k == 0 { 0.0 } else { self.beta[k].sqrt() };
            let next = ((x - self.alpha[k]) * cur - bk * prev) / self.beta[k + 1].sqrt();
            prev = cur;
            cur = next;
            out[k + 1] = cur;
        }
    }

    /// Values of all exposed basis functions at one point.
    pub fn eval_point(&self, x: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.count);
        match self.kind {
            FamilyKind::FullLine => self.eval_underlying(x, out),
            FamilyKind::HalfspaceExtended => {
                let mut half = vec![0.0; self.alpha.len()];
                self.eval_underlying(x.abs(), &mut half);
                let sign = if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                for (j, slot) in out.iter_mut().enumerate() {
                    *slot = if Self::index_is_odd(j) {
                        sign * half[j / 2] * self.extension_scale
                    } else {
                        half[(j - 1) / 2] * self.extension_scale
                    };
                }
            }
        }
    }

    /// Value matrix V with V[p][j] = phi_j(points[p]).
    pub fn evaluate(&self, points: &[f64]) -> DenseMatrix {
        let mut v = DenseMatrix::zeros(points.len(), self.count);
        for (p, x) in points.iter().enumerate() {
            self.eval_point(*x, v.row_mut(p));
        }
        v
    }
}

/// Tensor-product Galerkin basis over (species, transverse, mu).
///
/// Flat ordering is species-major, then transverse, then the mu index
/// fastest. Species factors carry a normalization `1/sqrt(s_i)` against
/// the per-species measure weight `s_i`, so the flat basis has identity
/// Gram matrix on the discrete phase-space measure.
#[derive(Debug, Clone)]
pub struct TensorBasis {
    pub mu: BasisFamily,
    pub transverse: Vec<BasisFamily>,
    pub species: usize,
    pub species_norms: Vec<f64>,
}

impl TensorBasis {
    pub fn new(mu: BasisFamily, transverse: Vec<BasisFamily>, species_weights: &[f64]) -> Self {
        let species_norms = species_weights.iter().map(|s| 1.0 / s.sqrt()).collect();
        TensorBasis { mu, transverse, species: species_weights.len(), species_norms }
    }

    /// Product of transverse family sizes (1 when there is none).
    pub fn transverse_dim(&self) -> usize {
        self.transverse.iter().map(|f| f.count()).product()
    }

    pub fn n_flat(&self) -> usize {
        self.species * self.transverse_dim() * self.mu.count()
    }

    /// Half-count N of the mu family (count = 2N + 1).
    pub fn n_half(&self) -> usize {
        (self.mu.count() - 1) / 2
    }

    pub fn flat_index(
        &self,
        species: usize,
        trans: &[usize],
        mu_idx: usize,
    ) -> Result<usize, BasisError> {
        if species >= self.species {
            return Err(BasisError::OutOfRange {
                what: "species",
                index: species,
                limit: self.species,
            });
        }
        if trans.len() != self.transverse.len() {
            return Err(BasisError::OutOfRange {
                what: "transverse rank",
                index: trans.len(),
                limit: self.transverse.len(),
            });
        }
        let mut t_flat = 0;
        for (t, family) in trans.iter().zip(self.transverse.iter()) {
            if *t >= family.count() {
                return Err(BasisError::OutOfRange {
                    what: "transverse",
                    index: *t,
                    limit: family.count(),
                });
            }
            t_flat = t_flat * family.count() + t;
        }
        if mu_idx >= self.mu.count() {
            return Err(BasisError::OutOfRange {
                what: "mu",
                index: mu_idx,
                limit: self.mu.count(),
            });
        }
        Ok((species * self.transverse_dim() + t_flat) * self.mu.count() + mu_idx)
    }

    /// Inverse of [`TensorBasis::flat_index`].
    pub fn split_index(&self, flat: usize) -> Result<(usize, Vec<usize>, usize), BasisError> {
        if flat >= self.n_flat() {
            return Err(BasisError::OutOfRange { what: "flat", index: flat, limit: self.n_flat() });
        }
        let mu_idx = flat % self.mu.count();
        let rest = flat / self.mu.count();
        let mut t_flat = rest % self.transverse_dim();
        let species = rest / self.transverse_dim();
        let mut trans = vec![0usize; self.transverse.len()];
        for i in (0..self.transverse.len()).rev() {
            let k = self.transverse[i].count();
            trans[i] = t_flat % k;
            t_flat /= k;
        }
        Ok((species, trans, mu_idx))
    }

    /// Is flat index `flat` odd in mu?
    pub fn flat_is_odd(&self, flat: usize) -> bool {
        BasisFamily::index_is_odd(flat % self.mu.count())
    }

    /// Species of flat index `flat`.
    pub fn species_of(&self, flat: usize) -> usize {
        flat / (self.transverse_dim() * self.mu.count())
    }

    /// Value matrix over a phase grid: V[node][flat]. Basis functions
    /// vanish at nodes of other species.
    pub fn value_matrix(&self, grid: &PhaseGrid) -> DenseMatrix {
        assert!(self.transverse.len() <= 1, "grids carry at most one transverse direction");
        assert_eq!(self.species, grid.n_species());
        let n_mu = grid.n_mu();
        let n_tr = grid.n_trans();
        let k_tot = self.transverse_dim();

        let v_mu = self.mu.evaluate(grid.mu_nodes());
        let v_tr = self.transverse.first().map(|family| family.evaluate(grid.trans_nodes()));

        let mut v = DenseMatrix::zeros(grid.n_nodes(), self.n_flat());
        for i in 0..self.species {
            let c = self.species_norms[i];
            for a in 0..n_mu {
                for b in 0..n_tr {
                    let node = grid.node_index(i, a, b);
                    let row = v.row_mut(node);
                    for n in 0..k_tot {
                        let t_val = v_tr.as_ref().map_or(1.0, |m| m[(b, n)]);
                        let base = (i * k_tot + n) * self.mu.count();
                        for k in 0..self.mu.count() {
                            row[base + k] = c * t_val * v_mu[(a, k)];
                        }
                    }
                }
            }
        }
        v
    }
}
