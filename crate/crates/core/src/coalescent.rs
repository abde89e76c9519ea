//! Backward lineage-count dynamics.
//!
//! Going from generation `j` to `j - 1`, the `m` current lineages sit on `m`
//! uniformly chosen distinct children of a freshly drawn offspring vector; the
//! new lineages are their distinct parents. Placement uses sequential
//! hypergeometric draws, one per parent.

use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Geometric, Hypergeometric};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::offspring::{sample_offspring_into, CounterexampleParams, OffspringLaw};
use crate::profile::DiscreteProfile;
use crate::tree::{CanningsTree, KPointTree};

/// Lineage counts `counts[j] = X_j` for `j = 0..=h_star`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoalescentTrace {
    pub h_star: usize,
    pub k: u64,
    pub counts: Vec<u64>,
}

impl CoalescentTrace {
    pub fn at(&self, j: usize) -> u64 {
        self.counts[j]
    }

    /// Rows `j,x` from `h_star` down to 0.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "j,x")?;
        for j in (0..=self.h_star).rev() {
            writeln!(w, "{j},{}", self.counts[j])?;
        }
        Ok(())
    }
}

/// Blocks of generation `generation + 1` whose lineages share a parent in
/// `generation`. Groups list the labels of the merging blocks; a merged block
/// keeps its smallest label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeEvent {
    pub generation: usize,
    pub blocks_before: u64,
    pub blocks_after: u64,
    pub groups: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkedTrace {
    pub trace: CoalescentTrace,
    pub events: Vec<MergeEvent>,
}

/// Group sizes per occupied parent, or `None` when every lineage keeps its
/// own parent without drawing a full vector.
fn transition_groups<R: Rng + ?Sized>(
    law: &OffspringLaw,
    q_prev: u64,
    q_cur: u64,
    m: u64,
    rng: &mut R,
    nu: &mut Vec<u32>,
) -> Result<Option<Vec<u64>>> {
    if m == 0 || m > q_cur {
        return Err(Error::InfeasibleCount { m, size: q_cur });
    }
    if q_prev == 1 {
        return Ok(Some(vec![m]));
    }
    if let OffspringLaw::Counterexample { alpha } = *law {
        if q_prev != q_cur {
            return Err(Error::LawProfileMismatch(
                "counterexample law requires constant profile".into(),
            ));
        }
        let params = CounterexampleParams::new(alpha, q_cur)?;
        if !params.draw_nontrivial(rng) {
            return Ok(None);
        }
        return Ok(Some(hub_groups(&params, m, rng)));
    }
    if m * SPARSE_FACTOR <= q_prev {
        if let Some(groups) = sparse_groups(law, q_prev, m, rng) {
            return Ok(Some(groups));
        }
    }
    placed_groups(law, q_prev, q_cur, m, rng, nu).map(Some)
}

/// Below `q_prev / SPARSE_FACTOR` lineages, laws with conditionally i.i.d.
/// parent choices are sampled per lineage instead of per parent.
const SPARSE_FACTOR: u64 = 4;

/// Parents of `m` distinct children for Wright-Fisher (i.i.d. uniform) and
/// Dirichlet-multinomial (Polya urn); `None` for other laws. Groups are listed
/// in parent order.
fn sparse_groups<R: Rng + ?Sized>(
    law: &OffspringLaw,
    q_prev: u64,
    m: u64,
    rng: &mut R,
) -> Option<Vec<u64>> {
    let mut parents: Vec<u64> = Vec::with_capacity(m as usize);
    match *law {
        OffspringLaw::WrightFisher => {
            parents.extend((0..m).map(|_| rng.random_range(0..q_prev)));
        }
        OffspringLaw::DirichletMultinomial { theta } => {
            let total = q_prev as f64 * theta;
            for t in 0..m as usize {
                let u = rng.random::<f64>() * (total + t as f64);
                // each earlier child carries weight 1, each parent weight theta
                if u < t as f64 {
                    parents.push(parents[u as usize]);
                } else {
                    parents.push(rng.random_range(0..q_prev));
                }
            }
        }
        OffspringLaw::Counterexample { .. } => return None,
    }
    parents.sort_unstable();
    let mut groups = Vec::new();
    let mut i = 0;
    while i < parents.len() {
        let j = parents[i..].iter().take_while(|&&p| p == parents[i]).count();
        groups.push(j as u64);
        i += j;
    }
    Some(groups)
}

/// Draws a full offspring vector and places the lineages on uniformly chosen
/// distinct children by sequential hypergeometric draws.
fn placed_groups<R: Rng + ?Sized>(
    law: &OffspringLaw,
    q_prev: u64,
    q_cur: u64,
    m: u64,
    rng: &mut R,
    nu: &mut Vec<u32>,
) -> Result<Vec<u64>> {
    sample_offspring_into(law, q_prev, q_cur, rng, nu)?;
    let mut groups = Vec::new();
    let (mut children_left, mut lineages_left) = (q_cur, m);
    for &v in nu.iter() {
        if lineages_left == 0 {
            break;
        }
        let v = v as u64;
        if v == 0 {
            continue;
        }
        let c = if v == children_left {
            lineages_left
        } else if lineages_left == children_left {
            v
        } else {
            Hypergeometric::new(children_left, v, lineages_left)
                .expect("valid hypergeometric")
                .sample(rng)
        };
        children_left -= v;
        lineages_left -= c;
        if c > 0 {
            groups.push(c);
        }
    }
    Ok(groups)
}

/// Non-trivial counterexample generation: `c` lineages sit on the hub's
/// `r_n` children and merge; the others keep distinct parents.
fn hub_groups<R: Rng + ?Sized>(params: &CounterexampleParams, m: u64, rng: &mut R) -> Vec<u64> {
    let c = hub_hits(params, m, rng);
    let mut groups = Vec::with_capacity((m - c + 1) as usize);
    if c > 0 {
        groups.push(c);
    }
    groups.extend(std::iter::repeat_n(1, (m - c) as usize));
    groups
}

fn hub_hits<R: Rng + ?Sized>(params: &CounterexampleParams, m: u64, rng: &mut R) -> u64 {
    if params.r == params.n {
        return m;
    }
    Hypergeometric::new(params.n, params.r, m)
        .expect("valid hypergeometric")
        .sample(rng)
}

/// One backward step: the partition of lineage labels `0..m` by shared parent,
/// blocks sorted by their smallest label.
pub fn transition_sample<R: Rng + ?Sized>(
    law: &OffspringLaw,
    q_prev: u64,
    q_cur: u64,
    m: u64,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>> {
    let groups = transition_groups(law, q_prev, q_cur, m, rng, &mut Vec::new())?;
    let mut labels: Vec<usize> = (0..m as usize).collect();
    let mut blocks: Vec<Vec<usize>> = match groups {
        None => labels.into_iter().map(|l| vec![l]).collect(),
        Some(groups) => {
            labels.shuffle(rng);
            let mut pos = 0;
            groups
                .iter()
                .map(|&g| {
                    let mut b = labels[pos..pos + g as usize].to_vec();
                    pos += g as usize;
                    b.sort_unstable();
                    b
                })
                .collect()
        }
    };
    blocks.sort_unstable_by_key(|b| b[0]);
    Ok(blocks)
}

fn check_start(profile: &DiscreteProfile, law: &OffspringLaw, h_star: usize, k: u64) -> Result<()> {
    law.check_profile(profile)?;
    if h_star >= profile.extinction() {
        return Err(Error::InfeasibleCount { m: k, size: 0 });
    }
    let size = profile.q(h_star);
    if k == 0 || k > size {
        return Err(Error::InfeasibleCount { m: k, size });
    }
    Ok(())
}

/// Lineage counts of `k` uniform generation-`h_star` vertices, without
/// building the tree.
pub fn simulate_trace<R: Rng + ?Sized>(
    profile: &DiscreteProfile,
    law: &OffspringLaw,
    h_star: usize,
    k: u64,
    rng: &mut R,
) -> Result<CoalescentTrace> {
    check_start(profile, law, h_star, k)?;
    let mut counts = vec![0; h_star + 1];
    counts[h_star] = k;
    if let OffspringLaw::Counterexample { alpha } = *law {
        if h_star >= 2 {
            let params = CounterexampleParams::new(alpha, profile.q(1))?;
            fill_counterexample_trace(&params, &mut counts, rng);
        }
        counts[0] = 1;
        return Ok(CoalescentTrace { h_star, k, counts });
    }
    let mut nu = Vec::new();
    let mut m = k;
    for j in (1..=h_star).rev() {
        if m > 1 {
            m = match transition_groups(law, profile.q(j - 1), profile.q(j), m, rng, &mut nu)? {
                Some(groups) => groups.len() as u64,
                None => m,
            };
        }
        counts[j - 1] = m;
    }
    Ok(CoalescentTrace { h_star, k, counts })
}

/// Skips runs of trivial generations with one geometric draw each.
fn fill_counterexample_trace<R: Rng + ?Sized>(
    params: &CounterexampleParams,
    counts: &mut [u64],
    rng: &mut R,
) {
    let h_star = counts.len() - 1;
    let gaps = (params.p < 1.0).then(|| Geometric::new(params.p).expect("p in (0, 1)"));
    let mut m = counts[h_star];
    // transitions j -> j - 1 for j = h_star..=2 use the law
    let mut j = h_star;
    while j >= 2 {
        let skip = gaps.as_ref().map_or(0, |g| g.sample(rng));
        let hit = (j as u64).saturating_sub(skip);
        let stop = if hit >= 2 { hit as usize } else { 1 };
        for slot in counts.iter_mut().take(j).skip(stop) {
            *slot = m;
        }
        if stop == 1 {
            break;
        }
        if m > 1 {
            let c = hub_hits(params, m, rng);
            if c > 0 {
                m = m - c + 1;
            }
        }
        counts[stop - 1] = m;
        j = stop - 1;
    }
}

/// Lineage block carried by the marked trace: its leaves in tree order and
/// the branch heights between consecutive leaves.
struct Block {
    label: usize,
    leaves: Vec<usize>,
    gaps: Vec<f64>,
    leaf_here: bool,
}

impl Block {
    fn append(&mut self, other: Block, height: f64) {
        self.label = self.label.min(other.label);
        self.gaps.push(height);
        self.gaps.extend(other.gaps);
        self.leaves.extend(other.leaves);
    }
}

/// Marked trace of `k` uniform generation-`h_star` vertices and the induced
/// k-point subtree.
pub fn simulate_marked_trace<R: Rng + ?Sized>(
    profile: &DiscreteProfile,
    law: &OffspringLaw,
    h_star: usize,
    k: usize,
    rng: &mut R,
) -> Result<(MarkedTrace, KPointTree)> {
    simulate_marked_trace_from(profile, law, &vec![h_star; k], rng)
}

/// As [`simulate_marked_trace`] with one leaf per entry of
/// `leaf_generations`; each leaf is a uniform vertex of its generation, and
/// leaves in the same generation are distinct. A leaf landing on an ancestor
/// of deeper leaves branches off at its own height.
pub fn simulate_marked_trace_from<R: Rng + ?Sized>(
    profile: &DiscreteProfile,
    law: &OffspringLaw,
    leaf_generations: &[usize],
    rng: &mut R,
) -> Result<(MarkedTrace, KPointTree)> {
    law.check_profile(profile)?;
    let k = leaf_generations.len();
    let top = *leaf_generations
        .iter()
        .max()
        .ok_or_else(|| Error::InvalidParameter("no leaves to trace".into()))?;
    if top >= profile.extinction() {
        return Err(Error::InfeasibleCount { m: k as u64, size: 0 });
    }
    let mut per_gen = vec![Vec::new(); top + 1];
    for (id, &g) in leaf_generations.iter().enumerate() {
        per_gen[g].push(id);
    }
    for (g, ids) in per_gen.iter().enumerate() {
        if ids.len() as u64 > profile.q(g) {
            return Err(Error::InfeasibleCount {
                m: ids.len() as u64,
                size: profile.q(g),
            });
        }
    }
    let scale = profile.scale() as f64;
    let mut blocks: Vec<Block> = Vec::new();
    let mut counts = vec![0; top + 1];
    let mut events = Vec::new();
    let mut nu = Vec::new();
    for j in (0..=top).rev() {
        let height = j as f64 / scale;
        for b in blocks.iter_mut() {
            b.leaf_here = false;
        }
        for (placed, &id) in per_gen[j].iter().enumerate() {
            let eligible: Vec<usize> = (0..blocks.len()).filter(|&b| !blocks[b].leaf_here).collect();
            let free = profile.q(j) - placed as u64;
            let u = rng.random_range(0..free);
            if (u as usize) < eligible.len() {
                // the leaf is the current vertex of an existing lineage
                let b = &mut blocks[eligible[u as usize]];
                b.leaves.insert(0, id);
                b.gaps.insert(0, height);
                b.label = b.label.min(id);
                b.leaf_here = true;
            } else {
                blocks.push(Block {
                    label: id,
                    leaves: vec![id],
                    gaps: Vec::new(),
                    leaf_here: true,
                });
            }
        }
        counts[j] = blocks.len() as u64;
        if j == 0 {
            break;
        }
        let m = blocks.len() as u64;
        if m == 0 {
            continue;
        }
        let groups = transition_groups(law, profile.q(j - 1), profile.q(j), m, rng, &mut nu)?;
        let Some(groups) = groups else { continue };
        if groups.len() as u64 == m {
            continue;
        }
        blocks.shuffle(rng);
        let parent_height = (j - 1) as f64 / scale;
        let mut merged = Vec::with_capacity(groups.len());
        let mut labels = Vec::new();
        let mut iter = blocks.into_iter();
        for &g in &groups {
            let mut head = iter.next().expect("group sizes sum to m");
            if g > 1 {
                let mut group_labels = vec![head.label];
                for _ in 1..g {
                    let next = iter.next().expect("group sizes sum to m");
                    group_labels.push(next.label);
                    head.append(next, parent_height);
                }
                group_labels.sort_unstable();
                labels.push(group_labels);
            }
            merged.push(head);
        }
        labels.sort_unstable();
        events.push(MergeEvent {
            generation: j - 1,
            blocks_before: m,
            blocks_after: groups.len() as u64,
            groups: labels,
        });
        blocks = merged;
    }
    debug_assert_eq!(blocks.len(), 1);
    let root = blocks.pop().expect("the root block");
    let leaves = root
        .leaves
        .iter()
        .map(|&id| leaf_generations[id] as f64 / scale)
        .collect();
    let tree = KPointTree::from_branch_heights(leaves, &root.gaps);
    let trace = CoalescentTrace {
        h_star: top,
        k: k as u64,
        counts,
    };
    Ok((MarkedTrace { trace, events }, tree))
}

/// Number of delta-coalescent vertices: with `w = floor(delta n)` and
/// `H = floor(h_q / w)`, the sum over `s = 1..=H - 2` of the number of
/// generation-`s w` ancestors of generation `(s + 1) w`.
pub fn delta_coalescent_count(tree: &CanningsTree, delta: f64) -> Result<u64> {
    let n = tree.profile().scale() as f64;
    let h_q = tree.extinction();
    if !(delta > 0.0 && delta < h_q as f64 / n) {
        return Err(Error::DeltaOutOfRange(delta));
    }
    let w = (delta * n).floor() as usize;
    if w == 0 {
        return Err(Error::DeltaOutOfRange(delta));
    }
    let big_h = h_q / w;
    let mut total = 0;
    for s in 1..big_h.saturating_sub(1) {
        let upper = (s + 1) * w;
        let all: Vec<usize> = (0..tree.generation_size(upper)).collect();
        total += tree.lineage_counts(upper, &all)[w];
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::tree::{build_tree, Vertex};

    const WF: OffspringLaw = OffspringLaw::WrightFisher;

    #[test]
    fn sparse_and_placed_transitions_agree() {
        use crate::verify::chi_square_homogeneity;
        let laws = [WF, OffspringLaw::DirichletMultinomial { theta: 0.7 }];
        for (i, law) in laws.iter().enumerate() {
            let mut rng = stream(40 + i as u64, 0);
            let (mut sparse, mut placed) = (vec![0u64; 9], vec![0u64; 9]);
            let mut nu = Vec::new();
            for _ in 0..20_000 {
                sparse[sparse_groups(law, 40, 8, &mut rng).unwrap().len()] += 1;
                placed[placed_groups(law, 40, 45, 8, &mut rng, &mut nu).unwrap().len()] += 1;
            }
            let r = chi_square_homogeneity(&sparse, &placed);
            assert!(r.p_value > 0.001, "{law:?}: {r:?}");
        }
    }

    #[test]
    fn transition_examples() {
        let mut rng = stream(1, 0);
        assert_eq!(transition_sample(&WF, 1, 5, 4, &mut rng).unwrap(), vec![vec![0, 1, 2, 3]]);
        for _ in 0..20 {
            assert_eq!(transition_sample(&WF, 7, 9, 1, &mut rng).unwrap(), vec![vec![0]]);
        }
        let reps = 40_000;
        let merged = (0..reps)
            .filter(|_| transition_sample(&WF, 2, 2, 2, &mut rng).unwrap().len() == 1)
            .count();
        let p = merged as f64 / reps as f64;
        assert!((p - 0.5).abs() < 3.0 * (0.25 / reps as f64).sqrt(), "{p}");
        assert!(matches!(
            transition_sample(&WF, 2, 3, 4, &mut rng),
            Err(Error::InfeasibleCount { m: 4, size: 3 })
        ));
    }

    #[test]
    fn trace_examples() {
        let mut rng = stream(2, 0);
        let ones = DiscreteProfile::new(vec![1; 6]).unwrap();
        assert_eq!(simulate_trace(&ones, &WF, 5, 1, &mut rng).unwrap().counts, vec![1; 6]);
        let flat = DiscreteProfile::constant(10, 6).unwrap();
        assert_eq!(simulate_trace(&flat, &WF, 6, 1, &mut rng).unwrap().counts, vec![1; 7]);

        let n = 10;
        let reps = 50_000;
        let hits = (0..reps)
            .filter(|_| simulate_trace(&flat, &WF, 6, 2, &mut rng).unwrap().at(5) == 1)
            .count();
        let p = hits as f64 / reps as f64;
        let want = 1.0 / n as f64;
        assert!((p - want).abs() < 3.0 * (want * (1.0 - want) / reps as f64).sqrt());
    }

    #[test]
    fn trace_shape_invariants() {
        let profile = DiscreteProfile::new(vec![3, 7, 12, 9, 20, 20]).unwrap();
        for law in [WF, OffspringLaw::DirichletMultinomial { theta: 0.4 }] {
            for r in 0..200 {
                let t = simulate_trace(&profile, &law, 6, 15, &mut stream(3, r)).unwrap();
                assert_eq!(t.counts.len(), 7);
                assert_eq!(t.counts[6], 15);
                assert_eq!(t.counts[0], 1);
                assert!(t.counts.windows(2).all(|w| w[0] <= w[1]));
                for j in 0..=6 {
                    assert!(t.counts[j] <= profile.q(j));
                }
            }
        }
    }

    #[test]
    fn counterexample_fast_path_matches_generic_steps() {
        // the skip-ahead trace and step-by-step transitions agree in law
        let n = 64;
        let law = OffspringLaw::Counterexample { alpha: 0.5 };
        let profile = DiscreteProfile::constant(n, n as usize).unwrap();
        let reps = 4000;
        let mut fast = vec![0u64; n as usize + 1];
        let mut slow = vec![0u64; n as usize + 1];
        for r in 0..reps {
            let t = simulate_trace(&profile, &law, 40, n, &mut stream(4, r)).unwrap();
            fast[t.at(1) as usize] += 1;
            let mut rng = stream(5, r);
            let mut m = n;
            for _ in 2..=40 {
                m = transition_sample(&law, n, n, m, &mut rng).unwrap().len() as u64;
            }
            slow[m as usize] += 1;
        }
        let mean = |h: &[u64]| {
            h.iter().enumerate().map(|(x, c)| x as f64 * *c as f64).sum::<f64>() / reps as f64
        };
        let (a, b) = (mean(&fast), mean(&slow));
        assert!((a - b).abs() < 0.1 * a, "{a} vs {b}");
    }

    #[test]
    fn marked_trace_examples() {
        let mut rng = stream(6, 0);
        let two = DiscreteProfile::constant(2, 1).unwrap();
        let (mt, kt) = simulate_marked_trace(&two, &WF, 1, 2, &mut rng).unwrap();
        assert_eq!(mt.trace.counts, vec![1, 2]);
        assert!(kt.merges.is_empty());
        assert_eq!(kt.root_order.len(), 2);

        // WF q = N: the pair merge height is geometric below h_star
        let n = 8u64;
        let profile = DiscreteProfile::constant(n, 6).unwrap();
        let reps = 40_000;
        let mut at_root = 0;
        let mut first_step = 0;
        for _ in 0..reps {
            let (mt, kt) = simulate_marked_trace(&profile, &WF, 6, 2, &mut rng).unwrap();
            kt.check_invariants(true).unwrap();
            assert_eq!(mt.events.len(), 1);
            if kt.merges.is_empty() {
                at_root += 1;
            } else if kt.merges[0].height == 5.0 / 8.0 {
                first_step += 1;
            }
        }
        let p_root = (1.0 - 1.0 / n as f64).powi(5);
        let se = (p_root * (1.0 - p_root) / reps as f64).sqrt();
        assert!((at_root as f64 / reps as f64 - p_root).abs() < 3.0 * se);
        let p1 = 1.0 / n as f64;
        let se = (p1 * (1.0 - p1) / reps as f64).sqrt();
        assert!((first_step as f64 / reps as f64 - p1).abs() < 3.0 * se);
    }

    #[test]
    fn marked_trace_events_record_decreases() {
        let profile = DiscreteProfile::constant(6, 8).unwrap();
        let (mt, kt) = simulate_marked_trace(&profile, &WF, 8, 5, &mut stream(7, 1)).unwrap();
        let mut blocks = 5;
        for e in &mt.events {
            assert_eq!(e.blocks_before, blocks);
            assert!(e.blocks_after < e.blocks_before);
            assert_eq!(mt.trace.counts[e.generation], e.blocks_after);
            blocks = e.blocks_after;
        }
        assert_eq!(blocks, 1);
        assert_eq!(kt.merges.len() + kt.root_order.len(), 5);
        let json = serde_json::to_string(&mt.events).unwrap();
        assert!(json.contains("\"blocks_before\""));
    }

    #[test]
    fn injected_leaf_can_be_an_ancestor() {
        // one vertex per generation: the shallow leaf is the deep leaf's ancestor
        let profile = DiscreteProfile::new(vec![1, 1, 1]).unwrap();
        let (_, kt) = simulate_marked_trace_from(&profile, &WF, &[3, 1], &mut stream(8, 0)).unwrap();
        assert_eq!(kt.leaves, vec![1.0, 3.0]);
        assert_eq!(kt.merges.len(), 1);
        assert_eq!(kt.merges[0].height, 1.0);
        kt.check_invariants(false).unwrap();
    }

    #[test]
    fn delta_count_examples() {
        let ones = DiscreteProfile::new(vec![1; 11]).unwrap().with_scale(4);
        let t = build_tree(&ones, &WF, &mut stream(9, 0)).unwrap();
        // w = 1, H = 12
        assert_eq!(delta_coalescent_count(&t, 0.25).unwrap(), 10);
        // w = 4, H = 3
        assert_eq!(delta_coalescent_count(&t, 1.0).unwrap(), 1);
        // w = 7, H = 1: empty union
        assert_eq!(delta_coalescent_count(&t, 1.75).unwrap(), 0);
        assert!(delta_coalescent_count(&t, 0.1).is_err());
        assert!(delta_coalescent_count(&t, 3.0).is_err());
    }

    #[test]
    fn delta_count_matches_direct_enumeration() {
        let profile = DiscreteProfile::new(vec![2, 2, 2, 2]).unwrap();
        let t = build_tree(&profile, &WF, &mut stream(10, 3)).unwrap();
        // w = 1, h_q = 5, H = 5: s = 1, 2, 3
        let mut want = 0;
        for s in 1..=3usize {
            let mut ancestors: Vec<Vertex> = (0..2)
                .map(|i| t.ancestor(Vertex::new(s + 1, i), s))
                .collect();
            ancestors.dedup();
            want += ancestors.len() as u64;
        }
        assert_eq!(delta_coalescent_count(&t, 1.0).unwrap(), want);
    }

    #[test]
    fn trace_csv() {
        let t = CoalescentTrace {
            h_star: 2,
            k: 2,
            counts: vec![1, 1, 2],
        };
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "j,x\n2,2\n1,1\n0,1\n");
    }
}
