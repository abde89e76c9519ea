//! Samplers for the limiting k-point subtree and the continuous block-count
//! process.
//!
//! Each pair of lineages merges at rate `r(s) = 4 / ell_sigma(s)` while the
//! sweep moves down in height. Waiting heights come from inverting the
//! cumulative hazard, which is exact on each linear segment of `ell_sigma`.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::profile::{ell_sigma, ContinuousProfile, ProfilePair, DEFAULT_REFINEMENT};
use crate::tree::KPointTree;

/// Lowest height of the hazard grid when the rate diverges at 0.
pub const HAZARD_FLOOR: f64 = 1e-12;
/// Absolute height tolerance of the clock inversion.
pub const INVERT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PairRateClock {
    // ell_sigma knots, scaled by 1 / rate multiplier
    xs: Vec<f64>,
    vs: Vec<f64>,
    // cumulative hazard from `floor` up to each knot
    cum: Vec<f64>,
    floor: f64,
}

impl PairRateClock {
    /// Clock with pair rate `4 / ell_sigma`.
    pub fn from_ell_sigma(ell_sigma: &ContinuousProfile) -> Self {
        let xs = ell_sigma.positions().to_vec();
        let vs = ell_sigma.values().to_vec();
        let floor = if vs[0] > 0.0 { 0.0 } else { HAZARD_FLOOR.min(xs[1] / 2.0) };
        let mut clock = Self {
            xs,
            vs,
            cum: Vec::new(),
            floor,
        };
        clock.rebuild();
        clock
    }

    pub fn from_pair(pair: &ProfilePair) -> Result<Self> {
        Ok(Self::from_ell_sigma(&ell_sigma(pair, DEFAULT_REFINEMENT)?))
    }

    /// Constant pair rate on `[0, h)`.
    pub fn constant(rate: f64, h: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidParameter(format!("pair rate must be positive, got {rate}")));
        }
        Ok(Self::from_ell_sigma(&ContinuousProfile::constant(4.0 / rate, h)?))
    }

    /// Multiplies the pair rate by `factor`.
    pub fn scaled(mut self, factor: f64) -> Self {
        for v in &mut self.vs {
            *v /= factor;
        }
        self.rebuild();
        self
    }

    fn rebuild(&mut self) {
        let mut cum = vec![0.0; self.xs.len()];
        for i in 1..self.xs.len() {
            let lo = self.xs[i - 1].max(self.floor);
            cum[i] = cum[i - 1]
                + if lo < self.xs[i] {
                    self.segment_hazard(i - 1, lo, self.xs[i])
                } else {
                    0.0
                };
        }
        self.cum = cum;
    }

    pub fn extinction_height(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    fn segment(&self, x: f64) -> usize {
        self.xs.partition_point(|&p| p <= x).clamp(1, self.xs.len() - 1) - 1
    }

    fn value(&self, i: usize, x: f64) -> f64 {
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        self.vs[i] + (self.vs[i + 1] - self.vs[i]) * (x - x0) / (x1 - x0)
    }

    /// `int_a^b 4 / L(s) ds` on segment `i` where `L` is linear.
    fn segment_hazard(&self, i: usize, a: f64, b: f64) -> f64 {
        let (va, vb) = (self.value(i, a), self.value(i, b));
        let slope = (self.vs[i + 1] - self.vs[i]) / (self.xs[i + 1] - self.xs[i]);
        let rel = (vb - va).abs() / va.max(vb);
        if rel < 1e-10 {
            4.0 * (b - a) * 2.0 / (va + vb)
        } else {
            4.0 * (vb / va).ln() / slope
        }
    }

    /// Pair rate `r(s)` at an interior height.
    pub fn rate(&self, s: f64) -> f64 {
        let i = self.segment(s);
        4.0 / self.value(i, s)
    }

    /// Largest rate on the knots at or above the floor.
    pub fn max_rate(&self) -> f64 {
        let at_floor = self.rate(self.floor.max(f64::MIN_POSITIVE));
        self.vs
            .iter()
            .filter(|&&v| v > 0.0)
            .map(|v| 4.0 / v)
            .fold(at_floor, f64::max)
    }

    /// Cumulative hazard from the floor up to `x`.
    fn cumulative(&self, x: f64) -> f64 {
        let x = x.clamp(self.floor, self.extinction_height());
        let i = self.segment(x);
        let lo = self.xs[i].max(self.floor);
        self.cum[i] + if x > lo { self.segment_hazard(i, lo, x) } else { 0.0 }
    }

    /// `Lambda(a, b)`, with `a` raised to the floor.
    pub fn hazard(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        (self.cumulative(b) - self.cumulative(a)).max(0.0)
    }

    /// Height `b < start` with `Lambda(b, start) = hazard`, by bisection to
    /// [`INVERT_TOL`]; 0 when the hazard available above the floor is smaller.
    pub fn invert(&self, start: f64, hazard: f64) -> f64 {
        if hazard <= 0.0 {
            return start;
        }
        let top = self.cumulative(start);
        if hazard > top {
            return 0.0;
        }
        let target = top - hazard;
        let (mut lo, mut hi) = (self.floor, start);
        while hi - lo > INVERT_TOL {
            let mid = 0.5 * (lo + hi);
            if self.cumulative(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Height reached from `start` after consuming `hazard`.
pub fn kingman_clock_invert(clock: &PairRateClock, start: f64, hazard: f64) -> f64 {
    clock.invert(start, hazard)
}

struct Cluster {
    leaves: Vec<usize>,
    gaps: Vec<f64>,
}

impl Cluster {
    fn join(mut left: Cluster, right: Cluster, height: f64) -> Cluster {
        left.gaps.push(height);
        left.gaps.extend(right.gaps);
        left.leaves.extend(right.leaves);
        left
    }
}

fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

/// Downward sweep over `leaf_heights`: Kingman merging between consecutive
/// leaf heights, one new lineage per leaf, fair left/right coins at merges and
/// a uniform order of the clusters gathering at the root.
pub fn piecewise_kingman_tree<R: Rng + ?Sized>(
    clock: &PairRateClock,
    leaf_heights: &[f64],
    rng: &mut R,
) -> Result<KPointTree> {
    let h = clock.extinction_height();
    if leaf_heights.is_empty() {
        return Err(Error::InvalidParameter("need at least one leaf".into()));
    }
    if let Some(&bad) = leaf_heights.iter().find(|&&x| !(x > 0.0 && x < h)) {
        return Err(Error::HeightOutOfRange(bad));
    }
    let mut order: Vec<usize> = (0..leaf_heights.len()).collect();
    order.sort_by(|&a, &b| leaf_heights[b].total_cmp(&leaf_heights[a]));

    let mut clusters: Vec<Cluster> = Vec::with_capacity(order.len());
    let mut current = leaf_heights[order[0]];
    for step in 0..=order.len() {
        if step < order.len() {
            let leaf = order[step];
            let level = leaf_heights[leaf];
            current = coalesce_down(clock, &mut clusters, current, level, rng);
            clusters.push(Cluster {
                leaves: vec![leaf],
                gaps: Vec::new(),
            });
        } else {
            coalesce_down(clock, &mut clusters, current, 0.0, rng);
        }
    }
    clusters.shuffle(rng);
    let mut iter = clusters.into_iter();
    let mut root = iter.next().expect("at least one cluster");
    for c in iter {
        root = Cluster::join(root, c, 0.0);
    }
    let leaves = root.leaves.iter().map(|&i| leaf_heights[i]).collect();
    Ok(KPointTree::from_branch_heights(leaves, &root.gaps))
}

/// Runs Kingman merging from `start` down to `level`; returns `level`.
fn coalesce_down<R: Rng + ?Sized>(
    clock: &PairRateClock,
    clusters: &mut Vec<Cluster>,
    start: f64,
    level: f64,
    rng: &mut R,
) -> f64 {
    let mut current = start;
    while clusters.len() >= 2 && current > level {
        let b = clusters.len();
        let pairs = (b * (b - 1) / 2) as f64;
        let next = clock.invert(current, exp1(rng) / pairs);
        if next <= level {
            break;
        }
        let i = rng.random_range(0..b);
        let mut j = rng.random_range(0..b - 1);
        if j >= i {
            j += 1;
        }
        let (hi, lo) = (i.max(j), i.min(j));
        let a = clusters.swap_remove(hi);
        let c = clusters.swap_remove(lo);
        let joined = if rng.random::<bool>() {
            Cluster::join(a, c, next)
        } else {
            Cluster::join(c, a, next)
        };
        clusters.push(joined);
        current = next;
    }
    level
}

/// Draws leaf heights with density `ell / I(ell)` and builds the subtree.
#[derive(Debug, Clone)]
pub struct LimitSampler {
    ell: ContinuousProfile,
    clock: PairRateClock,
}

impl LimitSampler {
    pub fn new(pair: &ProfilePair) -> Result<Self> {
        Ok(Self {
            ell: pair.ell.clone(),
            clock: PairRateClock::from_pair(pair)?,
        })
    }

    /// Multiplies the pair rate by `factor`.
    pub fn with_rate_multiplier(mut self, factor: f64) -> Self {
        self.clock = self.clock.scaled(factor);
        self
    }

    pub fn clock(&self) -> &PairRateClock {
        &self.clock
    }

    pub fn sample_heights<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Vec<f64> {
        let h = self.ell.extinction_height();
        (0..k)
            .map(|_| loop {
                let x = self.ell.sample_height(rng.random::<f64>());
                if x > 0.0 && x < h {
                    break x;
                }
            })
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Result<KPointTree> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        let heights = self.sample_heights(k, rng);
        piecewise_kingman_tree(&self.clock, &heights, rng)
    }
}

pub fn sample_limit_subtree<R: Rng + ?Sized>(
    pair: &ProfilePair,
    k: usize,
    rng: &mut R,
) -> Result<KPointTree> {
    LimitSampler::new(pair)?.sample(k, rng)
}

/// Jump times and block counts of the block-count process started with `k`
/// blocks at time 0 (height `h_star`) and stopped at time `h_star`. The first
/// entry is `(0, k)`.
pub fn continuous_block_count<R: Rng + ?Sized>(
    clock: &PairRateClock,
    h_star: f64,
    k: u64,
    rng: &mut R,
) -> Result<Vec<(f64, u64)>> {
    if !(h_star > 0.0 && h_star < clock.extinction_height()) {
        return Err(Error::HeightOutOfRange(h_star));
    }
    let mut out = vec![(0.0, k)];
    let mut blocks = k;
    let mut height = h_star;
    while blocks >= 2 {
        let pairs = (blocks * (blocks - 1) / 2) as f64;
        let next = clock.invert(height, exp1(rng) / pairs);
        if next <= 0.0 {
            break;
        }
        blocks -= 1;
        height = next;
        out.push((h_star - height, blocks));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn unit_pair(sigma: f64) -> ProfilePair {
        ProfilePair::new(
            ContinuousProfile::constant(1.0, 1.0).unwrap(),
            ContinuousProfile::constant(sigma, 1.0).unwrap(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn invert_examples() {
        let one = PairRateClock::constant(1.0, 2.0).unwrap();
        assert!((one.invert(1.0, 0.3) - 0.7).abs() < 1e-9);
        assert_eq!(one.invert(1.0, 0.0), 1.0);
        let two = PairRateClock::constant(2.0, 2.0).unwrap();
        assert_eq!(two.invert(0.5, 2.0), 0.0);
    }

    #[test]
    fn hazard_on_linear_profile() {
        // ell_sigma(s) = 1 + s: Lambda(a, b) = 4 ln((1 + b) / (1 + a))
        let es = ContinuousProfile::new(vec![(0.0, 1.0), (2.0, 3.0)]).unwrap();
        let clock = PairRateClock::from_ell_sigma(&es);
        let want = 4.0 * (1.7f64 / 1.2).ln();
        assert!((clock.hazard(0.2, 0.7) - want).abs() < 1e-12);
        let b = clock.invert(0.7, 1.0);
        assert!((clock.hazard(b, 0.7) - 1.0).abs() <= clock.max_rate() * INVERT_TOL);
    }

    #[test]
    fn vanishing_profile_uses_floor() {
        // ell_sigma(s) = s: the hazard diverges logarithmically at 0
        let es = ContinuousProfile::new(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap();
        let clock = PairRateClock::from_ell_sigma(&es);
        assert_eq!(clock.floor(), HAZARD_FLOOR);
        let total = clock.hazard(0.0, 0.5);
        assert!((total - 4.0 * (0.5f64 / HAZARD_FLOOR).ln()).abs() < 1e-6);
        assert_eq!(clock.invert(0.5, total + 1.0), 0.0);
        assert!(clock.invert(0.5, 1.0) > 0.0);
    }

    #[test]
    fn single_leaf_gathers_at_root() {
        let clock = PairRateClock::constant(1.0, 1.0).unwrap();
        let kt = piecewise_kingman_tree(&clock, &[0.4], &mut stream(1, 0)).unwrap();
        assert_eq!(kt.leaves, vec![0.4]);
        assert!(kt.merges.is_empty());
        assert_eq!(kt.root_order, vec![0]);
        assert!(matches!(
            piecewise_kingman_tree(&clock, &[1.0], &mut stream(1, 0)),
            Err(Error::HeightOutOfRange(_))
        ));
    }

    #[test]
    fn two_leaves_merge_probability() {
        // the lower leaf at ln 2 leaves hazard ln 2 for the pair
        let clock = PairRateClock::constant(1.0, 1.0).unwrap();
        let heights = [0.9, std::f64::consts::LN_2];
        let reps = 100_000;
        let mut rng = stream(2, 0);
        let hits = (0..reps)
            .filter(|_| {
                !piecewise_kingman_tree(&clock, &heights, &mut rng)
                    .unwrap()
                    .merges
                    .is_empty()
            })
            .count();
        let p = hits as f64 / reps as f64;
        assert!((p - 0.5).abs() < 3.0 * (0.25 / reps as f64).sqrt(), "{p}");
    }

    #[test]
    fn three_lineages_merge_uniform_pairs() {
        // leaves identified by height; count first merges with all three alive
        let clock = PairRateClock::constant(20.0, 1.0).unwrap();
        let heights = [0.9, 0.8999, 0.8998];
        let mut rng = stream(3, 0);
        let mut counts = [0usize; 3];
        for _ in 0..30_000 {
            let kt = piecewise_kingman_tree(&clock, &heights, &mut rng).unwrap();
            let Some(m) = kt.merges.first() else { continue };
            if m.height >= 0.8998 {
                continue;
            }
            let g = kt.branch_heights().iter().position(|&b| b == m.height).unwrap();
            let id = |h: f64| heights.iter().position(|&x| x == h).unwrap();
            let (a, b) = (id(kt.leaves[g]), id(kt.leaves[g + 1]));
            // pair {a, b} indexed by the missing leaf
            counts[3 - a - b] += 1;
        }
        let total: usize = counts.iter().sum();
        let expect = total as f64 / 3.0;
        let stat: f64 = counts.iter().map(|&c| (c as f64 - expect).powi(2) / expect).sum();
        // chi-square with 2 degrees of freedom, p > 0.001
        assert!(stat < 13.8, "{counts:?}");
    }

    #[test]
    fn limit_samples_satisfy_invariants() {
        let pair = ProfilePair::new(
            ContinuousProfile::new(vec![(0.0, 0.0), (0.4, 1.5), (1.0, 0.5)]).unwrap(),
            ContinuousProfile::new(vec![(0.0, 0.0), (0.5, 1.0), (1.0, 1.2)]).unwrap(),
            Some(0.3),
        )
        .unwrap();
        let sampler = LimitSampler::new(&pair).unwrap();
        let mut rng = stream(4, 0);
        for _ in 0..2000 {
            let kt = sampler.sample(6, &mut rng).unwrap();
            kt.check_invariants(true).unwrap();
            assert_eq!(kt.k(), 6);
        }
    }

    #[test]
    fn k2_atom_at_zero_matches_quadrature() {
        // P(branch height > 0) = 1 - 2 int_0^1 (1 - u) e^{-u} du = 1 - 2 / e
        let sampler = LimitSampler::new(&unit_pair(1.0)).unwrap();
        let mut rng = stream(5, 0);
        let reps = 100_000;
        let hits = (0..reps)
            .filter(|_| !sampler.sample(2, &mut rng).unwrap().merges.is_empty())
            .count();
        let want = 1.0 - 2.0 / std::f64::consts::E;
        let p = hits as f64 / reps as f64;
        assert!((p - want).abs() < 3.0 * (want * (1.0 - want) / reps as f64).sqrt(), "{p}");
    }

    #[test]
    fn larger_sigma_merges_higher() {
        let slow = LimitSampler::new(&unit_pair(1.0)).unwrap();
        let fast = LimitSampler::new(&unit_pair(2.0)).unwrap();
        let mean_branch = |s: &LimitSampler, seed| {
            let mut rng = stream(seed, 0);
            (0..10_000)
                .map(|_| s.sample(2, &mut rng).unwrap().branch_heights()[0])
                .sum::<f64>()
                / 10_000.0
        };
        assert!(mean_branch(&fast, 6) > mean_branch(&slow, 6) + 0.02);
    }

    #[test]
    fn block_count_examples() {
        let clock = PairRateClock::constant(1.0, 2.0).unwrap();
        let mut rng = stream(7, 0);
        assert_eq!(continuous_block_count(&clock, 1.0, 1, &mut rng).unwrap(), vec![(0.0, 1)]);
        let reps = 100_000;
        let no_jump = (0..reps)
            .filter(|_| continuous_block_count(&clock, 1.0, 2, &mut rng).unwrap().len() == 1)
            .count();
        let want = (-1.0f64).exp();
        let p = no_jump as f64 / reps as f64;
        assert!((p - want).abs() < 3.0 * (want * (1.0 - want) / reps as f64).sqrt());

        let path = continuous_block_count(&clock, 1.5, 5, &mut rng).unwrap();
        assert!(path.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 + 1 == w[0].1));
        assert!(path.last().unwrap().0 < 1.5);
    }

    #[test]
    fn rate_multiplier_scales_hazard() {
        let clock = PairRateClock::constant(1.0, 1.0).unwrap().scaled(2.0);
        assert!((clock.hazard(0.25, 0.75) - 1.0).abs() < 1e-12);
    }
}
