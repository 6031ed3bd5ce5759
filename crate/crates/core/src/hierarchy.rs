//! Complete k-ary community hierarchy with trader leaves.
//!
//! Community nodes are stored level by level (root first) in one contiguous
//! array, so the parent of node `i` is `(i - 1) / k` and its children are
//! `k * i + 1 ..= k * i + k`. Global indices at or above the community count
//! address trader leaves.

use std::ops::{Add, Div, Mul};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::TraderRole;

/// Shape and influence parameters of the community network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HierarchyParams {
    /// Number of levels, counting the trader level.
    pub levels: usize,
    /// Children per community.
    pub branching: usize,
    /// Weight of the parent community in the forward pass.
    pub diffusion: f64,
    /// Contribution of an optimist leaf to its community.
    pub optimist_influence: f64,
    /// Contribution of a pessimist leaf to its community.
    pub pessimist_influence: f64,
    /// Weight of local opinion in the optimist/pessimist pressure.
    pub strength: f64,
}

impl Default for HierarchyParams {
    fn default() -> Self {
        HierarchyParams {
            levels: 5,
            branching: 5,
            diffusion: 0.5,
            optimist_influence: 1.0,
            pessimist_influence: 1.0,
            strength: 0.0,
        }
    }
}

impl HierarchyParams {
    pub fn validate(&self) -> Result<()> {
        if self.levels < 2 {
            return Err(Error::invalid("levels", "must be at least 2"));
        }
        if self.branching < 2 {
            return Err(Error::invalid("branching", "must be at least 2"));
        }
        for (key, v) in [
            ("diffusion", self.diffusion),
            ("optimist_influence", self.optimist_influence),
            ("pessimist_influence", self.pessimist_influence),
            ("strength", self.strength),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(key, format!("must be finite and non-negative, got {v}")));
            }
        }
        counts(self).map(|_| ())
    }
}

/// Number of trader leaves and community nodes of a complete tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeCounts {
    pub traders: usize,
    pub communities: usize,
}

/// `N_t = k^(L-1)` traders and `(k^L - 1)/(k - 1) - N_t` communities.
pub fn counts(params: &HierarchyParams) -> Result<TreeCounts> {
    let (l, k) = (params.levels, params.branching);
    if l < 2 || k < 2 {
        return Err(Error::invalid("levels/branching", "need levels >= 2 and branching >= 2"));
    }
    let overflow = || Error::HierarchyOverflow {
        levels: l,
        branching: k,
    };
    let exp = u32::try_from(l).map_err(|_| overflow())?;
    let all_plus = k.checked_pow(exp).ok_or_else(overflow)?;
    let traders = k.checked_pow(exp - 1).ok_or_else(overflow)?;
    let total = (all_plus - 1) / (k - 1);
    Ok(TreeCounts {
        traders,
        communities: total - traders,
    })
}

/// Optimist, pessimist and fundamentalist mass of a community.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CommunityState {
    pub optimist: f64,
    pub pessimist: f64,
    pub fundamentalist: f64,
}

impl CommunityState {
    pub const ZERO: CommunityState = CommunityState::new(0.0, 0.0, 0.0);

    pub const fn new(optimist: f64, pessimist: f64, fundamentalist: f64) -> Self {
        CommunityState {
            optimist,
            pessimist,
            fundamentalist,
        }
    }

    pub fn total(&self) -> f64 {
        self.optimist + self.pessimist + self.fundamentalist
    }

    /// Homogeneous leaf vector of a trader with the given role.
    pub fn leaf(role: TraderRole, optimist_influence: f64, pessimist_influence: f64) -> Self {
        match role {
            TraderRole::Optimist => CommunityState::new(optimist_influence, 0.0, 0.0),
            TraderRole::Pessimist => CommunityState::new(0.0, pessimist_influence, 0.0),
            TraderRole::Fundamentalist => CommunityState::new(0.0, 0.0, 1.0),
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.optimist, self.pessimist, self.fundamentalist]
    }
}

impl Add for CommunityState {
    type Output = CommunityState;

    fn add(self, rhs: CommunityState) -> CommunityState {
        CommunityState::new(
            self.optimist + rhs.optimist,
            self.pessimist + rhs.pessimist,
            self.fundamentalist + rhs.fundamentalist,
        )
    }
}

impl Div<f64> for CommunityState {
    type Output = CommunityState;

    fn div(self, c: f64) -> CommunityState {
        CommunityState::new(self.optimist / c, self.pessimist / c, self.fundamentalist / c)
    }
}

impl Mul<f64> for CommunityState {
    type Output = CommunityState;

    fn mul(self, c: f64) -> CommunityState {
        CommunityState::new(self.optimist * c, self.pessimist * c, self.fundamentalist * c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyTree {
    levels: usize,
    branching: usize,
    nodes: Vec<CommunityState>,
    roles: Vec<TraderRole>,
    /// Start index of each community level, plus one past the last node.
    level_starts: Vec<usize>,
}

impl HierarchyTree {
    /// Builds a tree with every community at the zero state.
    pub fn new(params: &HierarchyParams, roles: Vec<TraderRole>) -> Result<Self> {
        let c = counts(params)?;
        if roles.len() != c.traders {
            return Err(Error::LengthMismatch {
                left: roles.len(),
                right: c.traders,
            });
        }
        let mut level_starts = Vec::with_capacity(params.levels);
        let mut start = 0;
        let mut width = 1;
        for _ in 0..params.levels - 1 {
            level_starts.push(start);
            start += width;
            width *= params.branching;
        }
        level_starts.push(start);
        debug_assert_eq!(start, c.communities);
        Ok(HierarchyTree {
            levels: params.levels,
            branching: params.branching,
            nodes: vec![CommunityState::ZERO; c.communities],
            roles,
            level_starts,
        })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn branching(&self) -> usize {
        self.branching
    }

    pub fn community_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn trader_count(&self) -> usize {
        self.roles.len()
    }

    pub fn nodes(&self) -> &[CommunityState] {
        &self.nodes
    }

    pub fn nodes_mut(&mut self) -> &mut [CommunityState] {
        &mut self.nodes
    }

    pub fn node(&self, id: usize) -> CommunityState {
        self.nodes[id]
    }

    pub fn roles(&self) -> &[TraderRole] {
        &self.roles
    }

    pub fn roles_mut(&mut self) -> &mut [TraderRole] {
        &mut self.roles
    }

    /// Node ids of community level `level` (0 is the root).
    pub fn level_range(&self, level: usize) -> std::ops::Range<usize> {
        self.level_starts[level]..self.level_starts[level + 1]
    }

    /// Community level of a node id.
    pub fn level_of(&self, node: usize) -> usize {
        self.level_starts.partition_point(|&s| s <= node) - 1
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        (node > 0).then(|| (node - 1) / self.branching)
    }

    /// Global ids of the children of a community; ids at or above
    /// `community_count()` are trader leaves.
    pub fn children(&self, node: usize) -> std::ops::Range<usize> {
        let first = self.branching * node + 1;
        first..first + self.branching
    }

    /// Community that a trader leaf belongs to.
    pub fn leaf_parent(&self, leaf: usize) -> usize {
        (self.nodes.len() + leaf - 1) / self.branching
    }

    /// Leaves of a bottom-level community.
    pub fn leaves_of(&self, node: usize) -> std::ops::Range<usize> {
        let first = self.branching * node + 1 - self.nodes.len();
        first..first + self.branching
    }

    /// Whether `node` lies in the subtree rooted at `root` (inclusive).
    pub fn is_descendant(&self, mut node: usize, root: usize) -> bool {
        loop {
            if node == root {
                return true;
            }
            match self.parent(node) {
                Some(p) if node > root => node = p,
                _ => return false,
            }
        }
    }

    /// Bottom-up averaging with the plain leaf vectors `[ω,0,0]`, `[0,υ,0]`, `[0,0,1]`.
    pub fn backward_pass(&mut self, params: &HierarchyParams) {
        let (w, u) = (params.optimist_influence, params.pessimist_influence);
        self.backward_pass_with(|role, _| CommunityState::leaf(role, w, u));
    }

    /// Bottom-up averaging where each leaf vector is produced by `leaf_vector`,
    /// which also sees the parent's state from before this pass.
    pub fn backward_pass_with<F>(&mut self, mut leaf_vector: F)
    where
        F: FnMut(TraderRole, &CommunityState) -> CommunityState,
    {
        let k = self.branching as f64;
        let bottom = self.levels - 2;
        for node in self.level_range(bottom) {
            let previous = self.nodes[node];
            let mut acc = CommunityState::ZERO;
            for leaf in self.leaves_of(node) {
                acc = acc + leaf_vector(self.roles[leaf], &previous);
            }
            self.nodes[node] = acc / k;
        }
        for level in (0..bottom).rev() {
            for node in self.level_range(level) {
                let mut acc = CommunityState::ZERO;
                for child in self.children(node) {
                    acc = acc + self.nodes[child];
                }
                self.nodes[node] = acc / k;
            }
        }
    }

    /// Top-down blending `C' = C/2 + φ·Q`; the root keeps its state.
    pub fn forward_pass(&mut self, diffusion: f64) {
        self.forward_pass_with(diffusion, |_, q| *q);
    }

    /// Forward pass where `emission(parent_id, parent_state)` gives the vector
    /// a parent conveys to its children.
    pub fn forward_pass_with<F>(&mut self, diffusion: f64, emission: F)
    where
        F: Fn(usize, &CommunityState) -> CommunityState,
    {
        let k = self.branching;
        // level order guarantees parents are already updated
        for node in 1..self.nodes.len() {
            let parent = (node - 1) / k;
            let q = emission(parent, &self.nodes[parent]);
            self.nodes[node] = self.nodes[node] * 0.5 + q * diffusion;
        }
    }

    /// `(C_o, C_p)` of the trader's community.
    pub fn local_opinion(&self, leaf: usize) -> (f64, f64) {
        let s = self.nodes[self.leaf_parent(leaf)];
        (s.optimist, s.pessimist)
    }

    /// Recomputes every community from scratch with the plain leaf vectors
    /// and a plain forward pass.
    pub fn refresh(&mut self, params: &HierarchyParams) {
        self.backward_pass(params);
        self.forward_pass(params.diffusion);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::TraderRole::{Fundamentalist as F, Optimist as O, Pessimist as P};

    fn params(levels: usize, branching: usize) -> HierarchyParams {
        HierarchyParams {
            levels,
            branching,
            ..HierarchyParams::default()
        }
    }

    #[test]
    fn counts_match_known_shapes() {
        let c = counts(&params(5, 5)).unwrap();
        assert_eq!((c.traders, c.communities), (625, 156));
        let c = counts(&params(2, 2)).unwrap();
        assert_eq!((c.traders, c.communities), (2, 1));
        let c = counts(&params(3, 4)).unwrap();
        assert_eq!((c.traders, c.communities), (16, 5));
    }

    #[test]
    fn counts_reject_overflow_and_degenerate_shapes() {
        assert!(matches!(
            counts(&params(80, 10)),
            Err(Error::HierarchyOverflow { .. })
        ));
        assert!(counts(&params(1, 5)).is_err());
        assert!(counts(&params(3, 1)).is_err());
    }

    #[test]
    fn index_arithmetic() {
        let t = HierarchyTree::new(&params(4, 3), vec![F; 27]).unwrap();
        assert_eq!(t.community_count(), 13);
        assert_eq!(t.level_range(0), 0..1);
        assert_eq!(t.level_range(1), 1..4);
        assert_eq!(t.level_range(2), 4..13);
        assert_eq!(t.level_of(0), 0);
        assert_eq!(t.level_of(3), 1);
        assert_eq!(t.level_of(12), 2);
        assert_eq!(t.leaf_parent(0), 4);
        assert_eq!(t.leaf_parent(26), 12);
        assert_eq!(t.leaves_of(4), 0..3);
        assert!(t.is_descendant(12, 3));
        assert!(!t.is_descendant(12, 1));
        assert!(t.is_descendant(5, 0));
        for node in 1..13 {
            let p = t.parent(node).unwrap();
            assert!(t.children(p).contains(&node));
        }
    }

    #[test]
    fn homogeneous_community_averages_to_leaf_vector() {
        let mut t = HierarchyTree::new(&params(2, 5), vec![O; 5]).unwrap();
        t.backward_pass(&params(2, 5));
        assert_eq!(t.node(0), CommunityState::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn mixed_community_average() {
        let mut t = HierarchyTree::new(&params(2, 5), vec![O, P, F, F, O]).unwrap();
        t.backward_pass(&params(2, 5));
        let s = t.node(0);
        assert!((s.optimist - 0.4).abs() < 1e-15);
        assert!((s.pessimist - 0.2).abs() < 1e-15);
        assert!((s.fundamentalist - 0.4).abs() < 1e-15);
    }

    #[test]
    fn forward_pass_blends_with_parent() {
        let hp = params(3, 2);
        let mut t = HierarchyTree::new(&hp, vec![F; 4]).unwrap();
        t.nodes_mut()[0] = CommunityState::new(0.0, 1.0, 0.0);
        t.nodes_mut()[1] = CommunityState::new(1.0, 0.0, 0.0);
        t.nodes_mut()[2] = CommunityState::new(0.4, 0.2, 0.4);
        t.forward_pass(0.5);
        assert_eq!(t.node(0), CommunityState::new(0.0, 1.0, 0.0));
        assert_eq!(t.node(1), CommunityState::new(0.5, 0.5, 0.0));

        let mut t = HierarchyTree::new(&hp, vec![F; 4]).unwrap();
        let s = CommunityState::new(0.4, 0.2, 0.4);
        t.nodes_mut().fill(s);
        t.forward_pass(0.5);
        for n in t.nodes() {
            for (a, b) in n.as_array().iter().zip(s.as_array()) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_diffusion_halves_non_root_nodes() {
        let hp = params(3, 3);
        let mut t = HierarchyTree::new(&hp, vec![O, P, F, O, O, O, P, P, F]).unwrap();
        t.backward_pass(&hp);
        let before = t.nodes().to_vec();
        t.forward_pass(0.0);
        assert_eq!(t.node(0), before[0]);
        for i in 1..before.len() {
            assert_eq!(t.node(i), before[i] * 0.5);
        }
    }

    #[test]
    fn local_opinion_reads_parent() {
        let hp = params(2, 2);
        let mut t = HierarchyTree::new(&hp, vec![O, O]).unwrap();
        t.nodes_mut()[0] = CommunityState::new(0.5, 0.5, 0.0);
        assert_eq!(t.local_opinion(1), (0.5, 0.5));
        t.nodes_mut()[0] = CommunityState::new(0.0, 0.0, 1.0);
        assert_eq!(t.local_opinion(0), (0.0, 0.0));
    }

    #[test]
    fn mismatched_leaf_count_is_rejected() {
        assert!(HierarchyTree::new(&params(3, 2), vec![F; 3]).is_err());
    }
}
