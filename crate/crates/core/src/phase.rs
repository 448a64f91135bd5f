//! Discrete phase-space grid shared by the models, boundary operators and
//! solver.
//!
//! A nodal function is a flat vector over (species, mu node, transverse
//! node) with species-major ordering and the transverse index fastest.
//! The mu rule is always the mirror image of a half-range rule, so nodes
//! come in exact +/- pairs: specular reflection is an index permutation
//! and half-range integrals are sums over the positive block.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::quadrature::QuadratureRule;

#[derive(Debug, Clone)]
pub struct PhaseGrid {
    /// Measure weight per species (includes any global normalization of
    /// the velocity measure).
    species_weights: Vec<f64>,
    /// Half-range mu rule (positive nodes, ascending).
    mu_half: QuadratureRule,
    /// Mirrored full-range mu rule.
    mu_full: QuadratureRule,
    transverse: Option<QuadratureRule>,
    /// Flat indices of the nodes with mu > 0, ordered (species, mu, trans).
    positive: Vec<usize>,
}

impl PhaseGrid {
    pub fn new(
        species_weights: Vec<f64>,
        mu_half: QuadratureRule,
        transverse: Option<QuadratureRule>,
    ) -> Self {
        let mu_full = mu_half.mirrored();
        let mut grid = PhaseGrid { species_weights, mu_half, mu_full, transverse, positive: Vec::new() };
        let half = grid.n_mu() / 2;
        let mut positive = Vec::with_capacity(grid.n_species() * half * grid.n_trans());
        for i in 0..grid.n_species() {
            for a in half..grid.n_mu() {
                for b in 0..grid.n_trans() {
                    positive.push(grid.node_index(i, a, b));
                }
            }
        }
        grid.positive = positive;
        grid
    }

    pub fn n_species(&self) -> usize {
        self.species_weights.len()
    }

    pub fn species_weights(&self) -> &[f64] {
        &self.species_weights
    }

    pub fn n_mu(&self) -> usize {
        self.mu_full.len()
    }

    pub fn n_trans(&self) -> usize {
        self.transverse.as_ref().map_or(1, |t| t.len())
    }

    pub fn n_nodes(&self) -> usize {
        self.n_species() * self.n_mu() * self.n_trans()
    }

    pub fn mu_half_rule(&self) -> &QuadratureRule {
        &self.mu_half
    }

    pub fn mu_full_rule(&self) -> &QuadratureRule {
        &self.mu_full
    }

    pub fn transverse_rule(&self) -> Option<&QuadratureRule> {
        self.transverse.as_ref()
    }

    pub fn mu_nodes(&self) -> &[f64] {
        &self.mu_full.nodes
    }

    /// Transverse nodes; empty slice when there is no transverse direction.
    pub fn trans_nodes(&self) -> &[f64] {
        self.transverse.as_ref().map_or(&[], |t| &t.nodes)
    }

    pub fn node_index(&self, species: usize, mu_idx: usize, trans_idx: usize) -> usize {
        debug_assert!(species < self.n_species());
        debug_assert!(mu_idx < self.n_mu());
        debug_assert!(trans_idx < self.n_trans());
        (species * self.n_mu() + mu_idx) * self.n_trans() + trans_idx
    }

    pub fn species_of(&self, node: usize) -> usize {
        node / (self.n_mu() * self.n_trans())
    }

    pub fn mu_index_of(&self, node: usize) -> usize {
        (node / self.n_trans()) % self.n_mu()
    }

    pub fn trans_index_of(&self, node: usize) -> usize {
        node % self.n_trans()
    }

    pub fn mu_of(&self, node: usize) -> f64 {
        self.mu_full.nodes[self.mu_index_of(node)]
    }

    /// Transverse coordinate of a node (0 when there is none).
    pub fn trans_of(&self, node: usize) -> f64 {
        self.transverse.as_ref().map_or(0.0, |t| t.nodes[self.trans_index_of(node)])
    }

    /// Full measure weight of a node.
    pub fn weight_of(&self, node: usize) -> f64 {
        let s = self.species_weights[self.species_of(node)];
        let wm = self.mu_full.weights[self.mu_index_of(node)];
        let wt = self.transverse.as_ref().map_or(1.0, |t| t.weights[self.trans_index_of(node)]);
        s * wm * wt
    }

    /// Node with mu replaced by -mu (exact: nodes are mirrored pairs).
    pub fn reflect(&self, node: usize) -> usize {
        let i = self.species_of(node);
        let a = self.mu_index_of(node);
        let b = self.trans_index_of(node);
        self.node_index(i, self.n_mu() - 1 - a, b)
    }

    /// <f, g> against the discrete phase-space measure.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n_nodes());
        debug_assert_eq!(g.len(), self.n_nodes());
        (0..self.n_nodes()).map(|t| self.weight_of(t) * f[t] * g[t]).sum()
    }

    /// <mu f, g>.
    pub fn inner_mu(&self, f: &[f64], g: &[f64]) -> f64 {
        (0..self.n_nodes()).map(|t| self.weight_of(t) * self.mu_of(t) * f[t] * g[t]).sum()
    }

    pub fn norm(&self, f: &[f64]) -> f64 {
        self.inner(f, f).sqrt()
    }

    /// Nodal product mu * f.
    pub fn mul_mu(&self, f: &[f64]) -> Vec<f64> {
        (0..self.n_nodes()).map(|t| self.mu_of(t) * f[t]).collect()
    }

    /// Flat indices of the positive-mu nodes, in (species, mu, trans) order.
    pub fn positive(&self) -> &[usize] {
        &self.positive
    }

    pub fn n_positive(&self) -> usize {
        self.positive.len()
    }

    /// Restrict a full nodal function to the positive-mu block.
    pub fn restrict_positive(&self, f: &[f64]) -> Vec<f64> {
        self.positive.iter().map(|&t| f[t]).collect()
    }

    /// <mu f, g>_{mu > 0} for functions given on the positive block.
    pub fn half_inner_mu(&self, f_pos: &[f64], g_pos: &[f64]) -> f64 {
        debug_assert_eq!(f_pos.len(), self.n_positive());
        debug_assert_eq!(g_pos.len(), self.n_positive());
        self.positive
            .iter()
            .enumerate()
            .map(|(k, &t)| self.weight_of(t) * self.mu_of(t) * f_pos[k] * g_pos[k])
            .sum()
    }

    /// Norm induced by the mu-weighted half-range inner product.
    pub fn half_norm_mu(&self, f_pos: &[f64]) -> f64 {
        self.half_inner_mu(f_pos, f_pos).sqrt()
    }
}
