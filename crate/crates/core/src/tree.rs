//! Cannings trees, their lattice-path encodings and k-point subtrees.
//!
//! Vertex `(s, i)` is the `i`-th vertex of generation `s` in lexicographic
//! order. Generation 0 holds only the artificial root. Only parent arrays are
//! stored; since they are nondecreasing, child ranges are recovered from
//! per-generation offsets.

use std::cmp::Ordering;
use std::io::{self, Write};

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::offspring::{sample_offspring_into, OffspringLaw};
use crate::profile::DiscreteProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex {
    pub generation: usize,
    pub index: usize,
}

impl Vertex {
    pub const ROOT: Vertex = Vertex {
        generation: 0,
        index: 0,
    };

    pub fn new(generation: usize, index: usize) -> Self {
        Self { generation, index }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CanningsTree {
    profile: DiscreteProfile,
    // parents[s][i]: parent index (generation s - 1) of vertex (s, i); parents[0] is empty
    parents: Vec<Vec<u32>>,
}

/// Draws one offspring vector per generation and groups children under their
/// parents in lexicographic order.
pub fn build_tree<R: Rng + ?Sized>(
    profile: &DiscreteProfile,
    law: &OffspringLaw,
    rng: &mut R,
) -> Result<CanningsTree> {
    law.check_profile(profile)?;
    let h_q = profile.extinction();
    let mut parents = Vec::with_capacity(h_q);
    parents.push(Vec::new());
    parents.push(vec![0; profile.q(1) as usize]);
    let mut nu = Vec::new();
    for s in 1..h_q - 1 {
        sample_offspring_into(law, profile.q(s), profile.q(s + 1), rng, &mut nu)?;
        parents.push(expand(&nu));
    }
    Ok(CanningsTree {
        profile: profile.clone(),
        parents,
    })
}

fn expand(nu: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(nu.iter().map(|&v| v as usize).sum());
    for (i, &v) in nu.iter().enumerate() {
        out.extend(std::iter::repeat_n(i as u32, v as usize));
    }
    out
}

/// Depth-first encodings of a tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Traversal {
    /// vertices in lexicographic order
    pub order: Vec<Vertex>,
    pub height: Vec<u32>,
    pub contour: Vec<u32>,
    pub first_visit: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    Height,
    Contour,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticePath {
    pub kind: PathKind,
    pub values: Vec<u32>,
}

impl LatticePath {
    /// Checks the structural constraints of the path kind against a tree with
    /// `vertices` vertices and extinction generation `h_q`.
    pub fn check(&self, vertices: usize, h_q: usize) -> std::result::Result<(), String> {
        let v = &self.values;
        match self.kind {
            PathKind::Contour => {
                if v.len() != 2 * (vertices - 1) + 1 {
                    return Err(format!("contour length {} for {vertices} vertices", v.len()));
                }
                if v[0] != 0 || v[v.len() - 1] != 0 {
                    return Err("contour must start and end at 0".into());
                }
                if let Some(j) = v.windows(2).position(|w| w[0].abs_diff(w[1]) != 1) {
                    return Err(format!("contour step {j} is not +-1"));
                }
            }
            PathKind::Height => {
                if v.len() != vertices || v[0] != 0 {
                    return Err("height path must list every vertex from the root".into());
                }
                if v.iter().any(|&x| x as usize > h_q) {
                    return Err("height exceeds the extinction generation".into());
                }
            }
        }
        Ok(())
    }

    /// One value per row under a `value` header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "value")?;
        for x in &self.values {
            writeln!(w, "{x}")?;
        }
        Ok(())
    }
}

impl CanningsTree {
    /// Builds a tree from given offspring vectors `nu^1, ..., nu^{h_q - 2}`
    /// (the root's vector is implied).
    pub fn from_offspring(profile: &DiscreteProfile, offspring: &[Vec<u32>]) -> Result<Self> {
        let h_q = profile.extinction();
        if offspring.len() + 2 != h_q.max(2) {
            return Err(Error::InvalidParameter(format!(
                "expected {} offspring vectors, got {}",
                h_q.saturating_sub(2),
                offspring.len()
            )));
        }
        let mut parents = vec![Vec::new(), vec![0; profile.q(1) as usize]];
        for (j, nu) in offspring.iter().enumerate() {
            let s = j + 1;
            let total: u64 = nu.iter().map(|&v| v as u64).sum();
            if nu.len() as u64 != profile.q(s) || total != profile.q(s + 1) {
                return Err(Error::InvalidParameter(format!(
                    "offspring vector of generation {s} does not match the profile"
                )));
            }
            parents.push(expand(nu));
        }
        Ok(Self {
            profile: profile.clone(),
            parents,
        })
    }

    pub fn profile(&self) -> &DiscreteProfile {
        &self.profile
    }

    pub fn extinction(&self) -> usize {
        self.profile.extinction()
    }

    /// Number of vertices including the root.
    pub fn vertex_count(&self) -> usize {
        1 + self.profile.total() as usize
    }

    pub fn generation_size(&self, s: usize) -> usize {
        self.profile.q(s) as usize
    }

    /// Parent array of generation `s >= 1`.
    pub fn parents(&self, s: usize) -> &[u32] {
        &self.parents[s]
    }

    pub fn parent(&self, v: Vertex) -> Option<Vertex> {
        (v.generation > 0).then(|| Vertex::new(v.generation - 1, self.parents[v.generation][v.index] as usize))
    }

    /// Offspring counts of generation `s`, recovered from the parent arrays.
    pub fn offspring(&self, s: usize) -> Vec<u32> {
        let mut nu = vec![0; self.generation_size(s)];
        if s + 1 < self.extinction() {
            for &p in &self.parents[s + 1] {
                nu[p as usize] += 1;
            }
        }
        nu
    }

    /// `starts[s][i]..starts[s][i + 1]` are the children of `(s, i)`.
    fn child_starts(&self) -> Vec<Vec<u32>> {
        (0..self.extinction())
            .map(|s| {
                let mut starts = Vec::with_capacity(self.generation_size(s) + 1);
                starts.push(0u32);
                let mut acc = 0;
                for c in self.offspring(s) {
                    acc += c;
                    starts.push(acc);
                }
                starts
            })
            .collect()
    }

    pub fn traverse(&self) -> Traversal {
        let starts = self.child_starts();
        let n_v = self.vertex_count();
        let mut order = Vec::with_capacity(n_v);
        let mut height = Vec::with_capacity(n_v);
        let mut first_visit = Vec::with_capacity(n_v);
        let mut contour = Vec::with_capacity(2 * n_v - 1);
        order.push(Vertex::ROOT);
        height.push(0);
        first_visit.push(0);
        contour.push(0);
        // (vertex, next child index)
        let mut stack: Vec<(Vertex, u32)> = vec![(Vertex::ROOT, 0)];
        while let Some(top) = stack.last_mut() {
            let (v, next) = *top;
            let end = starts[v.generation][v.index + 1];
            if next < end {
                top.1 += 1;
                let child = Vertex::new(v.generation + 1, next as usize);
                let d = child.generation as u32;
                contour.push(d);
                first_visit.push(contour.len() - 1);
                order.push(child);
                height.push(d);
                stack.push((child, starts[child.generation][child.index]));
            } else {
                stack.pop();
                if let Some(&(p, _)) = stack.last() {
                    contour.push(p.generation as u32);
                }
            }
        }
        Traversal {
            order,
            height,
            contour,
            first_visit,
        }
    }

    pub fn height_function(&self) -> LatticePath {
        LatticePath {
            kind: PathKind::Height,
            values: self.traverse().height,
        }
    }

    pub fn contour_function(&self) -> LatticePath {
        LatticePath {
            kind: PathKind::Contour,
            values: self.traverse().contour,
        }
    }

    pub fn first_visit_times(&self) -> Vec<usize> {
        self.traverse().first_visit
    }

    pub fn ancestor(&self, mut v: Vertex, generation: usize) -> Vertex {
        while v.generation > generation {
            v = self.parent(v).expect("non-root vertex");
        }
        v
    }

    /// Generation of the lowest common ancestor.
    pub fn lca_generation(&self, a: Vertex, b: Vertex) -> usize {
        let g = a.generation.min(b.generation);
        let (mut a, mut b) = (self.ancestor(a, g), self.ancestor(b, g));
        while a != b {
            a = self.parent(a).expect("distinct roots");
            b = self.parent(b).expect("distinct roots");
        }
        a.generation
    }

    /// Lexicographic order; an ancestor precedes its descendants.
    pub fn lex_cmp(&self, a: Vertex, b: Vertex) -> Ordering {
        let g = a.generation.min(b.generation);
        let (la, lb) = (self.ancestor(a, g), self.ancestor(b, g));
        la.index
            .cmp(&lb.index)
            .then(a.generation.cmp(&b.generation))
    }

    /// Vertex with position `rank` in generation-major numbering (root = 0).
    fn vertex_at(&self, mut rank: usize) -> Vertex {
        for s in 0..self.extinction() {
            let size = self.generation_size(s);
            if rank < size {
                return Vertex::new(s, rank);
            }
            rank -= size;
        }
        panic!("rank out of range")
    }

    /// `k` distinct uniformly chosen vertices, in lexicographic order.
    pub fn sample_vertices<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Result<Vec<Vertex>> {
        let total = self.vertex_count();
        if k == 0 || k > total {
            return Err(Error::KTooLarge { k, vertices: total });
        }
        let mut vs: Vec<Vertex> = index::sample(rng, total, k)
            .into_iter()
            .map(|r| self.vertex_at(r))
            .collect();
        vs.sort_by(|&a, &b| self.lex_cmp(a, b));
        Ok(vs)
    }

    /// Subtree spanned by the root and `k` uniform vertices, heights scaled by `1/n`.
    pub fn sample_k_point_subtree<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Result<KPointTree> {
        let vs = self.sample_vertices(k, rng)?;
        Ok(self.k_point_subtree(&vs))
    }

    /// Subtree spanned by the root and the given vertices.
    pub fn k_point_subtree(&self, vertices: &[Vertex]) -> KPointTree {
        let mut vs = vertices.to_vec();
        vs.sort_by(|&a, &b| self.lex_cmp(a, b));
        let scale = self.profile.scale() as f64;
        let leaves = vs.iter().map(|v| v.generation as f64 / scale).collect();
        let branches = vs
            .windows(2)
            .map(|w| self.lca_generation(w[0], w[1]) as f64 / scale)
            .collect::<Vec<_>>();
        KPointTree::from_branch_heights(leaves, &branches)
    }

    /// Maximal distance from a vertex to the subtree spanned by the root and
    /// `k` uniform vertices, scaled by `1/n`.
    pub fn net_radius<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Result<f64> {
        let vs = self.sample_vertices(k, rng)?;
        Ok(self.net_radius_of(&vs))
    }

    pub fn net_radius_of(&self, vertices: &[Vertex]) -> f64 {
        let mut marked: Vec<Vec<bool>> = (0..self.extinction())
            .map(|s| vec![false; self.generation_size(s)])
            .collect();
        marked[0][0] = true;
        for &v in vertices {
            let mut cur = Some(v);
            while let Some(u) = cur {
                if marked[u.generation][u.index] && u.generation > 0 {
                    break;
                }
                marked[u.generation][u.index] = true;
                cur = self.parent(u);
            }
        }
        // the spanned set is ancestor-closed, so the nearest point is the deepest marked ancestor
        let mut dist = vec![0u32];
        let mut worst = 0;
        for (parents, marked) in self.parents.iter().zip(&marked).skip(1) {
            let next: Vec<u32> = parents
                .iter()
                .zip(marked)
                .map(|(&p, &m)| if m { 0 } else { dist[p as usize] + 1 })
                .collect();
            worst = worst.max(next.iter().copied().max().unwrap_or(0));
            dist = next;
        }
        worst as f64 / self.profile.scale() as f64
    }

    /// Number of distinct generation-`j` ancestors of `vertices`, for `j` from
    /// their common generation down to 0.
    pub fn lineage_counts(&self, generation: usize, indices: &[usize]) -> Vec<u64> {
        let mut current: Vec<usize> = indices.to_vec();
        current.sort_unstable();
        current.dedup();
        let mut counts = vec![current.len() as u64];
        for s in (1..=generation).rev() {
            let mut next: Vec<usize> = current
                .iter()
                .map(|&i| self.parents[s][i] as usize)
                .collect();
            next.dedup();
            counts.push(next.len() as u64);
            current = next;
        }
        counts
    }

    /// Rows `generation,child_index,parent_index` for every non-root vertex.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "generation,child_index,parent_index")?;
        for (s, ps) in self.parents.iter().enumerate().skip(1) {
            for (i, p) in ps.iter().enumerate() {
                writeln!(w, "{s},{i},{p}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub height: f64,
    pub left: usize,
    pub right: usize,
    pub id: usize,
}

/// Rooted ordered geometric tree on `k` leaves. Leaves carry cluster ids
/// `0..k` in left-to-right order; merge `j` creates cluster `k + j`. Clusters
/// still separate above height 0 gather at the root in `root_order`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KPointTree {
    pub leaves: Vec<f64>,
    pub merges: Vec<Merge>,
    pub root_order: Vec<usize>,
}

impl KPointTree {
    /// Rebuilds the tree from leaf heights in tree order and the heights of
    /// the branch points of consecutive leaves. Non-positive branch heights
    /// mean the leaves only meet at the root.
    pub fn from_branch_heights(leaves: Vec<f64>, branches: &[f64]) -> Self {
        let k = leaves.len();
        assert_eq!(branches.len() + 1, k.max(1), "need k - 1 branch heights");
        let mut gaps: Vec<usize> = (0..branches.len()).filter(|&g| branches[g] > 0.0).collect();
        gaps.sort_by(|&a, &b| branches[b].total_cmp(&branches[a]).then(a.cmp(&b)));
        // (last leaf, cluster id), in left-to-right order
        let mut clusters: Vec<(usize, usize)> = (0..k).map(|i| (i, i)).collect();
        let mut merges = Vec::with_capacity(gaps.len());
        for g in gaps {
            let c = clusters
                .iter()
                .position(|&(hi, _)| hi == g)
                .expect("gap closes a cluster");
            let (left, right) = (clusters[c].1, clusters[c + 1].1);
            let id = k + merges.len();
            merges.push(Merge {
                height: branches[g],
                left,
                right,
                id,
            });
            clusters[c] = (clusters[c + 1].0, id);
            clusters.remove(c + 1);
        }
        Self {
            leaves,
            merges,
            root_order: clusters.into_iter().map(|(_, id)| id).collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.leaves.len()
    }

    /// Leaf ranges `[lo, hi]` of every cluster id.
    fn ranges(&self) -> Vec<(usize, usize)> {
        let k = self.k();
        let mut ranges: Vec<(usize, usize)> = (0..k).map(|i| (i, i)).collect();
        for m in &self.merges {
            ranges.push((ranges[m.left].0, ranges[m.right].1));
        }
        ranges
    }

    /// Heights of the branch points of consecutive leaves (0 at the root).
    pub fn branch_heights(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.k().saturating_sub(1)];
        let ranges = self.ranges();
        for m in &self.merges {
            out[ranges[m.left].1] = m.height;
        }
        out
    }

    /// Distance vector of the fidi metric: for each leaf `i`, the root-to-branch
    /// distance of `b_i` and the distance from `b_{i-1}` to leaf `i`, where
    /// `b_0 = b_k` is the root.
    pub fn fidis_vector(&self) -> Vec<f64> {
        let b = self.branch_heights();
        let k = self.k();
        let mut out = Vec::with_capacity(2 * k);
        for i in 0..k {
            out.push(if i + 1 < k { b[i] } else { 0.0 });
            let prev = if i == 0 { 0.0 } else { b[i - 1] };
            out.push(self.leaves[i] - prev);
        }
        out
    }

    pub fn fidis_distance(&self, other: &KPointTree) -> f64 {
        self.fidis_vector()
            .iter()
            .zip(other.fidis_vector())
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    /// Structural checks. With `strict`, every merge lies strictly below the
    /// leaves it joins; discrete trees may merge exactly at a sampled ancestor.
    pub fn check_invariants(&self, strict: bool) -> std::result::Result<(), String> {
        let k = self.k();
        if self.leaves.iter().any(|&h| !h.is_finite() || h < 0.0) {
            return Err("leaf heights must be finite and nonnegative".into());
        }
        let mut used = vec![false; k + self.merges.len()];
        let mut min_leaf: Vec<f64> = self.leaves.clone();
        let mut prev_height = f64::INFINITY;
        for (j, m) in self.merges.iter().enumerate() {
            if m.id != k + j || m.left >= m.id || m.right >= m.id {
                return Err(format!("merge {j} has inconsistent ids"));
            }
            if used[m.left] || used[m.right] {
                return Err(format!("merge {j} reuses a cluster"));
            }
            used[m.left] = true;
            used[m.right] = true;
            if m.height.is_nan() || m.height <= 0.0 {
                return Err(format!("merge {j} is not above the root"));
            }
            if m.height > prev_height {
                return Err(format!("merge {j} is above an earlier merge"));
            }
            prev_height = m.height;
            let floor = min_leaf[m.left].min(min_leaf[m.right]);
            if m.height > floor || (strict && m.height == floor) {
                return Err(format!("merge {j} at {} is not below its leaves ({floor})", m.height));
            }
            min_leaf.push(floor);
        }
        let ranges = self.ranges();
        for m in &self.merges {
            if ranges[m.left].1 + 1 != ranges[m.right].0 {
                return Err("merged clusters are not adjacent".into());
            }
        }
        let mut expect = 0;
        for &c in &self.root_order {
            if c >= used.len() || used[c] {
                return Err("root order lists a merged or unknown cluster".into());
            }
            if ranges[c].0 != expect {
                return Err("root order is not left to right".into());
            }
            expect = ranges[c].1 + 1;
        }
        if expect != k {
            return Err("root order does not cover every leaf".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::offspring::sample_offspring;
    use crate::rng::stream;

    fn fixed_23() -> CanningsTree {
        let profile = DiscreteProfile::new(vec![2, 3]).unwrap();
        CanningsTree::from_offspring(&profile, &[vec![2, 1]]).unwrap()
    }

    fn cherry() -> CanningsTree {
        CanningsTree::from_offspring(&DiscreteProfile::new(vec![2]).unwrap(), &[]).unwrap()
    }

    fn path2() -> CanningsTree {
        CanningsTree::from_offspring(&DiscreteProfile::new(vec![1, 1]).unwrap(), &[vec![1]]).unwrap()
    }

    #[test]
    fn small_builds() {
        let mut rng = stream(1, 0);
        let t = build_tree(&DiscreteProfile::new(vec![1]).unwrap(), &OffspringLaw::WrightFisher, &mut rng)
            .unwrap();
        assert_eq!(t.vertex_count(), 2);
        assert_eq!(fixed_23().parents(2), &[0, 0, 1]);
    }

    #[test]
    fn encodings_by_hand() {
        assert_eq!(cherry().height_function().values, vec![0, 1, 1]);
        assert_eq!(cherry().contour_function().values, vec![0, 1, 0, 1, 0]);
        assert_eq!(cherry().first_visit_times(), vec![0, 1, 3]);
        assert_eq!(path2().height_function().values, vec![0, 1, 2]);
        assert_eq!(path2().contour_function().values, vec![0, 1, 2, 1, 0]);
        assert_eq!(path2().first_visit_times(), vec![0, 1, 2]);
        let t = fixed_23();
        assert_eq!(t.height_function().values, vec![0, 1, 2, 2, 1, 2]);
        assert_eq!(
            t.contour_function().values,
            vec![0, 1, 2, 1, 2, 1, 0, 1, 2, 1, 0]
        );
    }

    #[test]
    fn wf_sibling_probability_on_2_2() {
        let profile = DiscreteProfile::new(vec![2, 2]).unwrap();
        let reps = 40_000;
        let mut shared = 0;
        for r in 0..reps {
            let t = build_tree(&profile, &OffspringLaw::WrightFisher, &mut stream(2, r)).unwrap();
            shared += (t.parents(2)[0] == t.parents(2)[1]) as usize;
        }
        let p = shared as f64 / reps as f64;
        assert!((p - 0.5).abs() < 3.0 * (0.25 / reps as f64).sqrt(), "{p}");
    }

    #[test]
    fn parent_arrays_reproduce_drawn_offspring() {
        let profile = DiscreteProfile::new(vec![3, 5, 4, 6]).unwrap();
        let law = OffspringLaw::DirichletMultinomial { theta: 0.7 };
        let t = build_tree(&profile, &law, &mut stream(3, 0)).unwrap();
        let mut rng = stream(3, 0);
        for s in 1..4 {
            let nu = sample_offspring(&law, profile.q(s), profile.q(s + 1), &mut rng).unwrap();
            assert_eq!(t.offspring(s), nu);
            assert!(t.parents(s + 1).windows(2).all(|w| w[0] <= w[1]));
        }
        assert_eq!(t.offspring(0), vec![3]);
    }

    #[test]
    fn k_point_subtree_examples() {
        let t = cherry();
        let kt = t.k_point_subtree(&[Vertex::ROOT, Vertex::new(1, 0), Vertex::new(1, 1)]);
        assert_eq!(kt.leaves, vec![0.0, 1.0, 1.0]);
        assert!(kt.merges.is_empty());
        assert_eq!(kt.root_order, vec![0, 1, 2]);

        let kt = t.k_point_subtree(&[Vertex::new(1, 1)]);
        assert_eq!(kt.k(), 1);
        assert!(kt.merges.is_empty());

        // vertices 3 and 6 (1-based lexicographic) of the fixed tree
        let t = fixed_23();
        let order = t.traverse().order;
        let kt = t.k_point_subtree(&[order[2], order[5]]);
        assert!(kt.merges.is_empty());
        assert_eq!(kt.branch_heights(), vec![0.0]);
        assert_eq!(kt.root_order, vec![0, 1]);

        let kt = t.k_point_subtree(&[order[3], order[2]]);
        assert_eq!(kt.merges.len(), 1);
        assert_eq!(kt.merges[0].height, 1.0);
        kt.check_invariants(true).unwrap();
        assert!(matches!(
            t.sample_k_point_subtree(7, &mut stream(0, 0)),
            Err(Error::KTooLarge { k: 7, vertices: 6 })
        ));
    }

    #[test]
    fn net_radius_examples() {
        let t = fixed_23();
        let all = t.traverse().order;
        assert_eq!(t.net_radius_of(&all), 0.0);
        let edge = CanningsTree::from_offspring(&DiscreteProfile::new(vec![1]).unwrap(), &[]).unwrap();
        assert_eq!(edge.net_radius_of(&[Vertex::ROOT]), 1.0);
        let path = path2();
        assert_eq!(path.net_radius_of(&[Vertex::new(2, 0)]), 0.0);
        assert_eq!(path.net_radius_of(&[Vertex::ROOT]), 2.0);
        // (2, 2) hangs two edges below the root via (1, 1)
        assert_eq!(t.net_radius_of(&[Vertex::new(2, 0)]), 2.0);
    }

    #[test]
    fn lex_order_matches_traversal() {
        let profile = DiscreteProfile::new(vec![3, 4, 2, 5]).unwrap();
        let t = build_tree(&profile, &OffspringLaw::WrightFisher, &mut stream(9, 1)).unwrap();
        let order = t.traverse().order;
        for w in order.windows(2) {
            assert_eq!(t.lex_cmp(w[0], w[1]), Ordering::Less);
        }
    }

    #[test]
    fn lineage_counts_on_fixed_tree() {
        let t = fixed_23();
        assert_eq!(t.lineage_counts(2, &[0, 1, 2]), vec![3, 2, 1]);
        assert_eq!(t.lineage_counts(2, &[0, 1]), vec![2, 1, 1]);
    }

    #[test]
    fn from_branch_heights_round_trip() {
        let leaves = vec![0.9, 0.7, 0.8, 0.4, 0.6];
        let branches = [0.5, 0.0, 0.3, 0.2];
        let kt = KPointTree::from_branch_heights(leaves.clone(), &branches);
        kt.check_invariants(true).unwrap();
        assert_eq!(kt.branch_heights(), branches);
        assert_eq!(kt.root_order.len(), 2);
        let fv = kt.fidis_vector();
        assert_eq!(fv.len(), 10);
        assert_eq!(fv[0], 0.5);
        assert_eq!(fv[1], 0.9);
        assert_eq!(fv[3], 0.7 - 0.5);
        assert_eq!(kt.fidis_distance(&kt), 0.0);
        let json = serde_json::to_string(&kt).unwrap();
        assert!(json.starts_with("{\"leaves\":["));
        assert_eq!(serde_json::from_str::<KPointTree>(&json).unwrap(), kt);
    }

    #[test]
    fn invariant_checker_rejects_bad_trees() {
        let mut kt = KPointTree::from_branch_heights(vec![0.5, 0.5], &[0.6]);
        assert!(kt.check_invariants(false).is_err());
        kt = KPointTree::from_branch_heights(vec![0.5, 0.5], &[0.5]);
        assert!(kt.check_invariants(false).is_ok());
        assert!(kt.check_invariants(true).is_err());
    }

    #[test]
    fn tree_csv_columns() {
        let mut buf = Vec::new();
        fixed_23().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "generation,child_index,parent_index\n1,0,0\n1,1,0\n2,0,0\n2,1,0\n2,2,1\n"
        );
    }
}
