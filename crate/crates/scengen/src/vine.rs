//! Regular-vine structures and d-vine sampling.
//!
//! A vine on n variables is a nested set of trees T_1..T_{n-1}: the edges
//! of tree j become the nodes of tree j+1, and two edges may be joined
//! only if they share a common node (the proximity condition). A d-vine
//! is the special case whose first tree is a path, which admits a
//! sequential sampler built from nested inverse conditional CDFs. Pair
//! copulas on the edges are Gaussian, parameterized by conditional rank
//! correlations mapped through σ = 2 sin(π ρ/6).

use std::collections::{BTreeSet, HashMap};

use nalgebra::DMatrix;

use crate::dependence::{
    copula_sigma_to_rank, min_eigenvalue, rank_to_copula_sigma, RankCorrelationMatrix,
    PSD_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::gaussian::{h_gauss_inner, h_gauss_inv_inner};
use crate::matrix::SampleMatrix;
use crate::rng::SeededRng;

/// Guard against conditioning on a (nearly) deterministic pair inside the
/// partial-correlation recursion.
const DEGENERATE_TOLERANCE: f64 = 1e-12;

/// An edge of a vine tree: the conditioned pair and its conditioning set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VineEdge {
    pub conditioned: (usize, usize),
    /// Sorted conditioning variables; empty in the first tree.
    pub conditioning: Vec<usize>,
}

impl VineEdge {
    pub fn new(a: usize, b: usize, conditioning: impl Into<Vec<usize>>) -> Self {
        let mut conditioning = conditioning.into();
        conditioning.sort_unstable();
        Self {
            conditioned: (a, b),
            conditioning,
        }
    }

    /// All variables touched by this edge (conditioned plus conditioning).
    fn constraint(&self) -> BTreeSet<usize> {
        let mut s: BTreeSet<usize> = self.conditioning.iter().copied().collect();
        s.insert(self.conditioned.0);
        s.insert(self.conditioned.1);
        s
    }
}

/// A (claimed) vine: trees T_1..T_{n-1}, each a set of edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VineStructure {
    pub n_vars: usize,
    pub trees: Vec<Vec<VineEdge>>,
}

/// Check the regular-vine conditions, returning a description of the
/// first violated one.
///
/// Tree j must have n - j edges whose conditioning sets have size j - 1;
/// every node of tree j+1 must be an edge of tree j; and two edges may be
/// joined only if they share a common node.
pub fn validate_regular_vine(v: &VineStructure) -> std::result::Result<(), String> {
    let n = v.n_vars;
    if n < 2 {
        return Err(format!("a vine requires at least 2 variables, got {n}"));
    }
    if v.trees.len() != n - 1 {
        return Err(format!("expected {} trees, found {}", n - 1, v.trees.len()));
    }

    // Constraint sets of the previous tree's edges, used for the nesting
    // check, plus their endpoint sets for the proximity check.
    let mut prev_constraints: Vec<BTreeSet<usize>> = Vec::new();
    let mut prev_endpoints: HashMap<Vec<usize>, [Vec<usize>; 2]> = HashMap::new();

    for (level, tree) in v.trees.iter().enumerate() {
        let j = level + 1;
        if tree.len() != n - j {
            return Err(format!(
                "tree {j} has {} edges, expected {}",
                tree.len(),
                n - j
            ));
        }
        let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
        let mut components = DisjointSet::new();
        let mut constraints: Vec<BTreeSet<usize>> = Vec::new();
        let mut endpoints: HashMap<Vec<usize>, [Vec<usize>; 2]> = HashMap::new();

        for edge in tree {
            let (a, b) = edge.conditioned;
            if a == b {
                return Err(format!("tree {j}: edge conditions variable {a} on itself"));
            }
            if a >= n || b >= n || edge.conditioning.iter().any(|&d| d >= n) {
                return Err(format!("tree {j}: edge references a variable out of range"));
            }
            if edge.conditioning.contains(&a) || edge.conditioning.contains(&b) {
                return Err(format!(
                    "tree {j}: conditioned pair ({a}, {b}) overlaps its conditioning set"
                ));
            }
            if edge.conditioning.len() != j - 1 {
                return Err(format!(
                    "tree {j}: edge ({a}, {b}) has a conditioning set of size {}, expected {}",
                    edge.conditioning.len(),
                    j - 1
                ));
            }
            let constraint: Vec<usize> = edge.constraint().into_iter().collect();
            if !seen.insert(constraint.clone()) {
                return Err(format!(
                    "tree {j}: duplicate edge over variables {constraint:?}"
                ));
            }

            if j == 1 {
                components.union(a, b);
                endpoints.insert(constraint.clone(), [vec![a], vec![b]]);
            } else {
                // In a regular vine the two endpoint nodes of an edge with
                // constraint set S and conditioned pair {a, b} are the
                // previous-tree edges with constraint sets S \ {a} and
                // S \ {b}.
                let mut node_ids = [0usize; 2];
                let mut node_keys: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
                for (slot, drop) in [(0, a), (1, b)] {
                    let key: Vec<usize> =
                        constraint.iter().copied().filter(|&x| x != drop).collect();
                    match prev_constraints.iter().position(|c| {
                        c.len() == key.len() && c.iter().copied().eq(key.iter().copied())
                    }) {
                        Some(idx) => {
                            node_ids[slot] = idx;
                            node_keys[slot] = key;
                        }
                        None => {
                            return Err(format!(
                                "tree {j}: node {key:?} of edge ({a}, {b} | {:?}) is not an \
                                 edge of tree {}",
                                edge.conditioning,
                                j - 1
                            ));
                        }
                    }
                }
                // Proximity: the two endpoint edges must share a node of
                // the previous tree.
                let pa = &prev_endpoints[&node_keys[0]];
                let pb = &prev_endpoints[&node_keys[1]];
                let share = pa.iter().any(|x| pb.iter().any(|y| x == y));
                if !share {
                    return Err(format!(
                        "tree {j}: edge ({a}, {b} | {:?}) joins nodes that do not share a \
                         common node",
                        edge.conditioning
                    ));
                }
                components.union(node_ids[0], node_ids[1]);
                endpoints.insert(
                    constraint.clone(),
                    [node_keys[0].clone(), node_keys[1].clone()],
                );
            }
            constraints.push(edge.constraint());
        }

        // n - j + 1 nodes joined by n - j distinct edges form a tree iff
        // they are acyclic.
        let node_count = n - j + 1;
        if components.cycles() > 0 || components.union_count() != node_count.saturating_sub(1) {
            return Err(format!("tree {j}: edges contain a cycle"));
        }

        prev_constraints = constraints;
        prev_endpoints = endpoints;
    }
    Ok(())
}

/// Union-find over arbitrary usize ids, tracking cycle-forming unions.
struct DisjointSet {
    parent: HashMap<usize, usize>,
    cycles: usize,
    unions: usize,
}

impl DisjointSet {
    fn new() -> Self {
        Self {
            parent: HashMap::new(),
            cycles: 0,
            unions: 0,
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let p = *self.parent.entry(x).or_insert(x);
        if p == x {
            return x;
        }
        let root = self.find(p);
        self.parent.insert(x, root);
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            self.cycles += 1;
        } else {
            self.parent.insert(ra, rb);
            self.unions += 1;
        }
    }

    fn cycles(&self) -> usize {
        self.cycles
    }

    fn union_count(&self) -> usize {
        self.unions
    }
}

/// A d-vine ready for sampling: a variable ordering plus conditional rank
/// correlations (and their copula-scale σ values) for every edge of every
/// tree level.
///
/// Level j (1-based) holds n - j entries; entry s parameterizes the edge
/// between path positions s and s + j conditioned on everything between.
#[derive(Debug, Clone, PartialEq)]
pub struct DVineSpec {
    order: Vec<usize>,
    edge_rank_corrs: Vec<Vec<f64>>,
    edge_sigmas: Vec<Vec<f64>>,
}

impl DVineSpec {
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn n_vars(&self) -> usize {
        self.order.len()
    }

    pub fn edge_rank_corrs(&self) -> &[Vec<f64>] {
        &self.edge_rank_corrs
    }

    pub fn edge_sigmas(&self) -> &[Vec<f64>] {
        &self.edge_sigmas
    }

    /// σ for the edge joining path positions (s, s + level) at the given
    /// 1-based tree level.
    #[inline]
    fn sigma(&self, level: usize, s: usize) -> f64 {
        self.edge_sigmas[level - 1][s]
    }

    /// Expand into an explicit vine structure (variable indices, not path
    /// positions), e.g. for validation or display.
    pub fn to_structure(&self) -> VineStructure {
        let n = self.n_vars();
        let mut trees = Vec::with_capacity(n - 1);
        for j in 1..n {
            let mut tree = Vec::with_capacity(n - j);
            for s in 0..(n - j) {
                let conditioning: Vec<usize> = ((s + 1)..(s + j)).map(|p| self.order[p]).collect();
                tree.push(VineEdge::new(
                    self.order[s],
                    self.order[s + j],
                    conditioning,
                ));
            }
            trees.push(tree);
        }
        VineStructure { n_vars: n, trees }
    }
}

fn validate_order(order: &[usize]) -> Result<usize> {
    let n = order.len();
    if n < 2 {
        return Err(Error::Data(format!(
            "a d-vine requires at least 2 variables, got {n}"
        )));
    }
    let mut seen = vec![false; n];
    for &v in order {
        if v >= n || seen[v] {
            return Err(Error::Data(format!(
                "order {order:?} is not a permutation of 0..{n}"
            )));
        }
        seen[v] = true;
    }
    Ok(n)
}

/// Build a d-vine from a variable ordering and per-level conditional rank
/// correlations. Level j must supply n - j values in [-1, 1].
pub fn build_dvine(order: &[usize], rank_corrs: &[Vec<f64>]) -> Result<DVineSpec> {
    let n = validate_order(order)?;
    if rank_corrs.len() != n - 1 {
        return Err(Error::Data(format!(
            "expected {} correlation levels, got {}",
            n - 1,
            rank_corrs.len()
        )));
    }
    let mut edge_sigmas = Vec::with_capacity(n - 1);
    for (level, corrs) in rank_corrs.iter().enumerate() {
        let j = level + 1;
        if corrs.len() != n - j {
            return Err(Error::Data(format!(
                "level {j} has {} correlations, expected {}",
                corrs.len(),
                n - j
            )));
        }
        let sigmas: Vec<f64> = corrs
            .iter()
            .map(|&rho| rank_to_copula_sigma(rho))
            .collect::<Result<_>>()?;
        edge_sigmas.push(sigmas);
    }
    Ok(DVineSpec {
        order: order.to_vec(),
        edge_rank_corrs: rank_corrs.to_vec(),
        edge_sigmas,
    })
}

/// Sample uniforms from a d-vine (the four-variable nested-inverse-CDF
/// scheme generalized to n variables).
///
/// Each row consumes one uniform per path position; position t of row i
/// uses draw index `i * n + t`, and the value sampled at path position t
/// lands in output column `order[t]`. All-zero edge correlations
/// therefore reproduce the raw draws bitwise, and for n = 2 the output is
/// bit-identical to [`crate::gaussian::sample_bivariate_copula`] under the
/// same stream.
pub fn sample_dvine(spec: &DVineSpec, count: usize, rng: &SeededRng) -> Result<SampleMatrix> {
    if count == 0 {
        return Err(Error::Data("sample count must be positive".into()));
    }
    let n = spec.n_vars();
    let mut out = SampleMatrix::zeros(count, n);
    out.par_fill_rows(|i, row| {
        let base = (i * n) as u64;
        // x[t]: sampled uniform at path position t.
        // cond[k]: F(x_k | x_{k+1}, .., x_{t-1}), updated as t advances.
        // fwd[k]: F(x_t | x_{k+1}, .., x_{t-1}) collected while peeling.
        let mut x = vec![0.0; n];
        let mut cond = vec![0.0; n];
        let mut fwd = vec![0.0; n];
        x[0] = rng.uniform_at(base);
        cond[0] = x[0];
        for t in 1..n {
            let mut value = rng.uniform_at(base + t as u64);
            for k in 0..t {
                value = h_gauss_inv_inner(value, cond[k], spec.sigma(t - k, k));
                fwd[k] = value;
            }
            x[t] = value;
            if t + 1 < n {
                for k in 0..t {
                    cond[k] = h_gauss_inner(cond[k], fwd[k], spec.sigma(t - k, k));
                }
            }
            cond[t] = x[t];
        }
        for (t, &value) in x.iter().enumerate() {
            row[spec.order[t]] = value;
        }
    });
    Ok(out)
}

/// Partial correlation of path positions (i, j) given the contiguous
/// range a..=b, by the recursion that eliminates the top of the range.
/// `memo` is keyed on (i, j, a, b) with i < j; an empty range is encoded
/// as a > b.
fn partial_correlation(
    m: &DMatrix<f64>,
    i: usize,
    j: usize,
    a: usize,
    b: usize,
    memo: &mut HashMap<(usize, usize, usize, usize), f64>,
) -> Result<f64> {
    if a > b {
        return Ok(m[(i, j)]);
    }
    let key = (i.min(j), i.max(j), a, b);
    if let Some(&v) = memo.get(&key) {
        return Ok(v);
    }
    let (sub_a, sub_b) = if a == b { (1, 0) } else { (a, b - 1) };
    let s_ij = partial_correlation(m, i, j, sub_a, sub_b, memo)?;
    let s_ik = partial_correlation(m, i, b, sub_a, sub_b, memo)?;
    let s_jk = partial_correlation(m, j, b, sub_a, sub_b, memo)?;
    let di = 1.0 - s_ik * s_ik;
    let dj = 1.0 - s_jk * s_jk;
    if di <= DEGENERATE_TOLERANCE || dj <= DEGENERATE_TOLERANCE {
        return Err(Error::Model(format!(
            "degenerate conditioning: |correlation| reaches 1 while conditioning \
             position {b} on range {a}..{}",
            b.saturating_sub(1)
        )));
    }
    let value = ((s_ij - s_ik * s_jk) / (di * dj).sqrt()).clamp(-1.0, 1.0);
    memo.insert(key, value);
    Ok(value)
}

/// Derive a d-vine whose sampler reproduces the given rank-correlation
/// matrix, using the Gaussian partial-correlation recursion to place
/// conditional correlations on the edges.
///
/// The copula-scale image of `r` must be PSD without repair; a matrix
/// that needs repair is refused so that data-quality issues surface
/// explicitly.
pub fn dvine_from_rank_matrix(r: &RankCorrelationMatrix, order: &[usize]) -> Result<DVineSpec> {
    let n = validate_order(order)?;
    if r.n_vars() != n {
        return Err(Error::Data(format!(
            "order has {n} entries but the matrix has {}",
            r.n_vars()
        )));
    }
    // Copula scale, without repair.
    let mut sigma = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sigma[(i, j)] = rank_to_copula_sigma(r.get(i, j))?;
            }
        }
    }
    let lambda = min_eigenvalue(&sigma);
    if lambda < PSD_TOLERANCE {
        return Err(Error::Data(format!(
            "the copula-scale correlation matrix is not PSD (minimum eigenvalue \
             {lambda:.3e}); repair it (to_copula_matrix) and refit before building a d-vine"
        )));
    }
    // Permute to path order.
    let mut path = DMatrix::identity(n, n);
    for p in 0..n {
        for q in 0..n {
            path[(p, q)] = sigma[(order[p], order[q])];
        }
    }
    let mut memo = HashMap::new();
    let mut edge_ranks = Vec::with_capacity(n - 1);
    for j in 1..n {
        let mut level = Vec::with_capacity(n - j);
        for s in 0..(n - j) {
            if j == 1 {
                // Unconditional edges carry the input rank correlation
                // as-is; converting through sigma and back would cost an
                // ulp for nothing.
                level.push(r.get(order[s], order[s + 1]));
            } else {
                let sig = partial_correlation(&path, s, s + j, s + 1, s + j - 1, &mut memo)?;
                level.push(copula_sigma_to_rank(sig)?);
            }
        }
        edge_ranks.push(level);
    }
    build_dvine(order, &edge_ranks)
}

/// The copula-scale correlation matrix implied by a d-vine, obtained by
/// unwinding the partial-correlation recursion level by level. Entries
/// are indexed by variable (not path position).
pub fn implied_copula_matrix(spec: &DVineSpec) -> Result<DMatrix<f64>> {
    let n = spec.n_vars();
    let mut path = DMatrix::identity(n, n);
    let mut memo = HashMap::new();
    for gap in 1..n {
        // Entries with smaller gaps are final before this level runs, so
        // the memo built on them stays valid.
        for s in 0..(n - gap) {
            let t = s + gap;
            let mut value = spec.sigma(gap, s);
            // Un-condition from the top of the range down.
            for k in ((s + 1)..t).rev() {
                let (a, b) = if k == s + 1 { (1, 0) } else { (s + 1, k - 1) };
                let s_ik = partial_correlation(&path, s, k, a, b, &mut memo)?;
                let s_jk = partial_correlation(&path, t, k, a, b, &mut memo)?;
                let di = 1.0 - s_ik * s_ik;
                let dj = 1.0 - s_jk * s_jk;
                if di <= DEGENERATE_TOLERANCE || dj <= DEGENERATE_TOLERANCE {
                    return Err(Error::Model(
                        "degenerate conditioning while expanding the d-vine".into(),
                    ));
                }
                value = (value * (di * dj).sqrt() + s_ik * s_jk).clamp(-1.0, 1.0);
            }
            path[(s, t)] = value;
            path[(t, s)] = value;
        }
    }
    // Back to variable indexing.
    let mut out = DMatrix::identity(n, n);
    for p in 0..n {
        for q in 0..n {
            out[(spec.order[p], spec.order[q])] = path[(p, q)];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dependence::spearman;
    use crate::gaussian::{joint_normal_transform, sample_bivariate_copula, GaussianCopulaModel};
    use approx::assert_relative_eq;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("v{i}")).collect()
    }

    fn rank_matrix(n: usize, entries: &[(usize, usize, f64)]) -> RankCorrelationMatrix {
        let mut m = DMatrix::identity(n, n);
        for &(i, j, v) in entries {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        RankCorrelationMatrix::new(names(n), m).unwrap()
    }

    #[test]
    fn four_variable_dvine_structure_is_a_regular_vine() {
        // The canonical path 1-2-3-4 written with 0-based indices.
        let v = VineStructure {
            n_vars: 4,
            trees: vec![
                vec![
                    VineEdge::new(0, 1, vec![]),
                    VineEdge::new(1, 2, vec![]),
                    VineEdge::new(2, 3, vec![]),
                ],
                vec![VineEdge::new(0, 2, vec![1]), VineEdge::new(1, 3, vec![2])],
                vec![VineEdge::new(0, 3, vec![1, 2])],
            ],
        };
        assert_eq!(validate_regular_vine(&v), Ok(()));
    }

    #[test]
    fn smallest_vine_is_valid() {
        let v = VineStructure {
            n_vars: 2,
            trees: vec![vec![VineEdge::new(0, 1, vec![])]],
        };
        assert_eq!(validate_regular_vine(&v), Ok(()));
    }

    #[test]
    fn missing_shared_node_is_a_proximity_violation() {
        // Tree 2 tries to join edges (0,1) and (2,3): the node {0,1,3}\{0}
        // = {1,3}... any such edge needs an endpoint that is not an edge
        // of tree 1.
        let v = VineStructure {
            n_vars: 4,
            trees: vec![
                vec![
                    VineEdge::new(0, 1, vec![]),
                    VineEdge::new(1, 2, vec![]),
                    VineEdge::new(2, 3, vec![]),
                ],
                vec![VineEdge::new(0, 2, vec![1]), VineEdge::new(0, 3, vec![1])],
                vec![VineEdge::new(1, 3, vec![0, 2])],
            ],
        };
        let err = validate_regular_vine(&v).unwrap_err();
        assert!(err.contains("not an edge of tree 1"), "{err}");
    }

    #[test]
    fn wrong_edge_count_is_reported() {
        let v = VineStructure {
            n_vars: 3,
            trees: vec![
                vec![VineEdge::new(0, 1, vec![])],
                vec![VineEdge::new(0, 2, vec![1])],
            ],
        };
        let err = validate_regular_vine(&v).unwrap_err();
        assert!(err.contains("tree 1 has 1 edges, expected 2"), "{err}");
    }

    #[test]
    fn cycle_in_first_tree_is_reported() {
        let v = VineStructure {
            n_vars: 4,
            trees: vec![
                vec![
                    VineEdge::new(0, 1, vec![]),
                    VineEdge::new(1, 2, vec![]),
                    VineEdge::new(2, 0, vec![]),
                ],
                vec![VineEdge::new(0, 2, vec![1]), VineEdge::new(1, 0, vec![2])],
                vec![VineEdge::new(0, 3, vec![1, 2])],
            ],
        };
        assert!(validate_regular_vine(&v).is_err());
    }

    #[test]
    fn build_dvine_produces_the_path_edges() {
        let spec = build_dvine(
            &[0, 1, 2, 3],
            &[vec![0.5, 0.4, 0.3], vec![0.2, 0.1], vec![0.05]],
        )
        .unwrap();
        let s = spec.to_structure();
        assert_eq!(
            s.trees[0],
            vec![
                VineEdge::new(0, 1, vec![]),
                VineEdge::new(1, 2, vec![]),
                VineEdge::new(2, 3, vec![]),
            ]
        );
        assert_eq!(
            s.trees[1],
            vec![VineEdge::new(0, 2, vec![1]), VineEdge::new(1, 3, vec![2])]
        );
        assert_eq!(s.trees[2], vec![VineEdge::new(0, 3, vec![1, 2])]);
        assert_eq!(validate_regular_vine(&s), Ok(()));
    }

    #[test]
    fn build_dvine_validates_inputs() {
        assert!(build_dvine(&[0, 1, 1], &[vec![0.1, 0.1], vec![0.1]]).is_err());
        assert!(build_dvine(&[0, 1, 2], &[vec![0.1], vec![0.1]]).is_err());
        assert!(build_dvine(&[0, 1], &[vec![1.5]]).is_err());
        assert!(build_dvine(&[0], &[]).is_err());
    }

    #[test]
    fn built_dvines_always_validate() {
        for n in 2..=6 {
            let order: Vec<usize> = (0..n).rev().collect();
            let corrs: Vec<Vec<f64>> = (1..n)
                .map(|j| (0..(n - j)).map(|s| 0.3 / (j + s) as f64).collect())
                .collect();
            let spec = build_dvine(&order, &corrs).unwrap();
            assert_eq!(validate_regular_vine(&spec.to_structure()), Ok(()));
        }
    }

    #[test]
    fn zero_correlations_reproduce_raw_uniforms_bitwise() {
        let spec = build_dvine(&[0, 1, 2, 3], &[vec![0.0; 3], vec![0.0; 2], vec![0.0]]).unwrap();
        let rng = SeededRng::new(77, 0);
        let m = sample_dvine(&spec, 500, &rng).unwrap();
        for i in 0..500 {
            for t in 0..4 {
                let expected = rng.uniform_at((i * 4 + t) as u64);
                assert_eq!(m.get(i, t).to_bits(), expected.to_bits());
            }
        }
    }

    #[test]
    fn two_variable_dvine_matches_bivariate_sampler_bitwise() {
        for rho in [-1.0, -0.6, 0.0, 0.37, 0.95, 1.0] {
            let spec = build_dvine(&[0, 1], &[vec![rho]]).unwrap();
            let rng = SeededRng::new(123, 5);
            let a = sample_dvine(&spec, 2000, &rng).unwrap();
            let b = sample_bivariate_copula(rho, 2000, &rng).unwrap();
            assert_eq!(a, b, "rho = {rho}");
        }
    }

    #[test]
    fn dvine_from_identity_matrix_has_zero_edges() {
        let r = rank_matrix(3, &[]);
        let spec = dvine_from_rank_matrix(&r, &[0, 1, 2]).unwrap();
        assert!(spec.edge_rank_corrs().iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn dvine_from_2x2_matrix_copies_the_entry() {
        let r = rank_matrix(2, &[(0, 1, 0.42)]);
        let spec = dvine_from_rank_matrix(&r, &[0, 1]).unwrap();
        assert_eq!(spec.edge_rank_corrs()[0][0], 0.42);
    }

    #[test]
    fn dvine_conditional_correlation_matches_recursion_by_hand() {
        let r = rank_matrix(3, &[(0, 1, 0.5), (1, 2, 0.5), (0, 2, 0.25)]);
        let spec = dvine_from_rank_matrix(&r, &[0, 1, 2]).unwrap();
        let sigma_13_given_2 = spec.edge_sigmas()[1][0];
        assert_relative_eq!(sigma_13_given_2, -0.009421214920756188, epsilon = 1e-9);
    }

    #[test]
    fn dvine_refuses_matrices_that_need_repair() {
        let r = rank_matrix(3, &[(0, 1, 0.9), (0, 2, 0.9), (1, 2, -0.9)]);
        let err = dvine_from_rank_matrix(&r, &[0, 1, 2]).unwrap_err();
        assert!(err.to_string().contains("repair"), "{err}");
    }

    /// Independent oracle for partial correlations: invert the block
    /// correlation matrix; the partial correlation of the two outer
    /// variables given everything between is read from the precision
    /// matrix.
    fn pcor_by_inversion(m: &DMatrix<f64>, s: usize, t: usize) -> f64 {
        let k = t - s + 1;
        let block = m.view((s, s), (k, k)).into_owned();
        let inv = block.try_inverse().unwrap();
        -inv[(0, k - 1)] / (inv[(0, 0)] * inv[(k - 1, k - 1)]).sqrt()
    }

    #[test]
    fn recursion_agrees_with_matrix_inversion_oracle() {
        let r = rank_matrix(
            5,
            &[
                (0, 1, 0.55),
                (0, 2, 0.30),
                (0, 3, 0.10),
                (0, 4, 0.05),
                (1, 2, 0.45),
                (1, 3, 0.25),
                (1, 4, 0.15),
                (2, 3, 0.50),
                (2, 4, 0.20),
                (3, 4, 0.35),
            ],
        );
        let order: Vec<usize> = (0..5).collect();
        let spec = dvine_from_rank_matrix(&r, &order).unwrap();
        // Rebuild the sigma matrix and compare each deep edge against the
        // inversion oracle.
        let mut sigma = DMatrix::identity(5, 5);
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    sigma[(i, j)] = rank_to_copula_sigma(r.get(i, j)).unwrap();
                }
            }
        }
        for j in 2..5 {
            for s in 0..(5 - j) {
                let got = spec.edge_sigmas()[j - 1][s];
                let want = pcor_by_inversion(&sigma, s, s + j);
                assert_relative_eq!(got, want, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn implied_matrix_round_trips_the_input() {
        let r = rank_matrix(
            4,
            &[
                (0, 1, 0.6),
                (0, 2, 0.3),
                (0, 3, 0.1),
                (1, 2, 0.5),
                (1, 3, 0.2),
                (2, 3, 0.4),
            ],
        );
        for order in [vec![0, 1, 2, 3], vec![2, 0, 3, 1]] {
            let spec = dvine_from_rank_matrix(&r, &order).unwrap();
            let implied = implied_copula_matrix(&spec).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    let want = rank_to_copula_sigma(r.get(i, j)).unwrap();
                    assert_relative_eq!(implied[(i, j)], want, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn three_variable_dvine_matches_joint_normal_transform() {
        let r = rank_matrix(3, &[(0, 1, 0.5), (1, 2, 0.5), (0, 2, 0.25)]);
        let spec = dvine_from_rank_matrix(&r, &[0, 1, 2]).unwrap();
        let vine_sample = sample_dvine(&spec, 200_000, &SeededRng::new(31, 0)).unwrap();

        let copula = crate::dependence::to_copula_matrix(&r).unwrap();
        assert!(!copula.psd_repaired());
        let model = GaussianCopulaModel::new(copula).unwrap();
        let jnt_sample = joint_normal_transform(&model, 200_000, &SeededRng::new(32, 0)).unwrap();

        for i in 0..3 {
            for j in (i + 1)..3 {
                let target = r.get(i, j);
                let s_vine = spearman(&vine_sample.column(i), &vine_sample.column(j)).unwrap();
                let s_jnt = spearman(&jnt_sample.column(i), &jnt_sample.column(j)).unwrap();
                assert!(
                    (s_vine - target).abs() < 0.02,
                    "vine ({i},{j}): {s_vine} vs {target}"
                );
                assert!(
                    (s_vine - s_jnt).abs() < 0.02,
                    "vine vs jnt ({i},{j}): {s_vine} vs {s_jnt}"
                );
            }
        }
    }

    #[test]
    fn dvine_columns_are_marginally_uniform() {
        let r = rank_matrix(3, &[(0, 1, 0.7), (1, 2, 0.4), (0, 2, 0.3)]);
        let spec = dvine_from_rank_matrix(&r, &[0, 1, 2]).unwrap();
        let m = sample_dvine(&spec, 100_000, &SeededRng::new(41, 0)).unwrap();
        for c in 0..3 {
            let mut col = m.column(c);
            col.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n = col.len() as f64;
            let mut d: f64 = 0.0;
            for (i, &u) in col.iter().enumerate() {
                d = d.max(((i + 1) as f64 / n - u).abs());
                d = d.max((u - i as f64 / n).abs());
            }
            assert!(d < 0.01, "column {c}: KS {d}");
        }
    }

    #[test]
    fn gaussian_consistency_for_multiple_orderings() {
        let r = rank_matrix(
            4,
            &[
                (0, 1, 0.6),
                (0, 2, 0.3),
                (0, 3, 0.15),
                (1, 2, 0.45),
                (1, 3, 0.25),
                (2, 3, 0.5),
            ],
        );
        for (seed, order) in [(51u64, vec![0, 1, 2, 3]), (52, vec![3, 1, 0, 2])] {
            let spec = dvine_from_rank_matrix(&r, &order).unwrap();
            let m = sample_dvine(&spec, 200_000, &SeededRng::new(seed, 0)).unwrap();
            for i in 0..4 {
                for j in (i + 1)..4 {
                    let s = spearman(&m.column(i), &m.column(j)).unwrap();
                    assert!(
                        (s - r.get(i, j)).abs() < 0.02,
                        "order {order:?}, pair ({i},{j}): {s} vs {}",
                        r.get(i, j)
                    );
                }
            }
        }
    }

    #[test]
    fn five_variable_target_is_recovered_for_two_orderings() {
        let r = rank_matrix(
            5,
            &[
                (0, 1, 0.55),
                (0, 2, 0.30),
                (0, 3, 0.10),
                (0, 4, 0.05),
                (1, 2, 0.45),
                (1, 3, 0.25),
                (1, 4, 0.15),
                (2, 3, 0.50),
                (2, 4, 0.20),
                (3, 4, 0.35),
            ],
        );
        for (seed, order) in [(61u64, vec![0, 1, 2, 3, 4]), (62, vec![4, 2, 0, 1, 3])] {
            let spec = dvine_from_rank_matrix(&r, &order).unwrap();
            let m = sample_dvine(&spec, 200_000, &SeededRng::new(seed, 0)).unwrap();
            for i in 0..5 {
                for j in (i + 1)..5 {
                    let s = spearman(&m.column(i), &m.column(j)).unwrap();
                    assert!(
                        (s - r.get(i, j)).abs() < 0.02,
                        "order {order:?}, pair ({i},{j}): {s} vs {}",
                        r.get(i, j)
                    );
                }
            }
        }
    }

    #[test]
    fn c_vine_structures_are_representable_and_validate() {
        // Star first tree (hub 0); no sampler exists for this shape, but
        // the structure type covers it.
        let v = VineStructure {
            n_vars: 4,
            trees: vec![
                vec![
                    VineEdge::new(0, 1, vec![]),
                    VineEdge::new(0, 2, vec![]),
                    VineEdge::new(0, 3, vec![]),
                ],
                vec![VineEdge::new(1, 2, vec![0]), VineEdge::new(1, 3, vec![0])],
                vec![VineEdge::new(2, 3, vec![0, 1])],
            ],
        };
        assert_eq!(validate_regular_vine(&v), Ok(()));
    }

    #[test]
    fn sample_dvine_rejects_zero_count() {
        let spec = build_dvine(&[0, 1], &[vec![0.3]]).unwrap();
        assert!(sample_dvine(&spec, 0, &SeededRng::new(1, 0)).is_err());
    }

    #[test]
    fn sampling_respects_non_trivial_order() {
        // With order [1, 0], the driver draw lands in column 1.
        let spec = build_dvine(&[1, 0], &[vec![0.8]]).unwrap();
        let rng = SeededRng::new(9, 0);
        let m = sample_dvine(&spec, 100, &rng).unwrap();
        for i in 0..100 {
            assert_eq!(
                m.get(i, 1).to_bits(),
                rng.uniform_at(2 * i as u64).to_bits()
            );
        }
    }
}
