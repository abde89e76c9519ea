use cannings_core::coalescent::simulate_marked_trace;
use cannings_core::limit::LimitSampler;
use cannings_core::profile::discretize;
use cannings_core::rng::stream;
use cannings_core::tree::build_tree;
use cannings_core::{CanningsTree, ContinuousProfile, DiscreteProfile, OffspringLaw, ProfilePair};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn profile_strategy() -> impl Strategy<Value = ContinuousProfile> {
    (
        prop::collection::vec(0.05f64..2.0, 1..6),
        prop::collection::vec(0.1f64..5.0, 2..7),
        any::<bool>(),
    )
        .prop_map(|(steps, mut values, extinct)| {
            let mut x = 0.0;
            let mut positions = vec![0.0];
            for s in &steps {
                x += s;
                positions.push(x);
            }
            values.resize(positions.len(), 1.0);
            if extinct {
                *values.last_mut().unwrap() = 0.0;
            }
            ContinuousProfile::new(positions.into_iter().zip(values).collect()).unwrap()
        })
}

fn tree_strategy() -> impl Strategy<Value = (CanningsTree, Vec<Vec<u32>>)> {
    (prop::collection::vec(1u64..12, 1..9), any::<u64>(), 0usize..3).prop_map(
        |(sizes, seed, law)| {
            let law = match law {
                0 => OffspringLaw::WrightFisher,
                _ => OffspringLaw::DirichletMultinomial { theta: 0.5 },
            };
            let profile = DiscreteProfile::new(sizes).unwrap();
            let tree = build_tree(&profile, &law, &mut stream(seed, 0)).unwrap();
            let offspring = (1..tree.extinction() - 1).map(|s| tree.offspring(s)).collect();
            (tree, offspring)
        },
    )
}

/// Preorder depths and contour from explicit child lists, by recursion.
fn oracle_traversal(tree: &CanningsTree) -> (Vec<u32>, Vec<u32>) {
    let h_q = tree.extinction();
    let mut children: Vec<Vec<Vec<usize>>> = (0..h_q)
        .map(|s| vec![Vec::new(); tree.generation_size(s)])
        .collect();
    for s in 1..h_q {
        for (i, &p) in tree.parents(s).iter().enumerate() {
            children[s - 1][p as usize].push(i);
        }
    }
    fn visit(
        children: &[Vec<Vec<usize>>],
        s: usize,
        i: usize,
        heights: &mut Vec<u32>,
        contour: &mut Vec<u32>,
    ) {
        heights.push(s as u32);
        contour.push(s as u32);
        for &c in &children[s][i] {
            visit(children, s + 1, c, heights, contour);
            contour.push(s as u32);
        }
    }
    let (mut heights, mut contour) = (Vec::new(), Vec::new());
    visit(&children, 0, 0, &mut heights, &mut contour);
    (heights, contour)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn integral_is_additive_and_nonnegative(
        ell in profile_strategy(),
        fracs in prop::collection::vec(0.0f64..1.0, 3),
    ) {
        let h = ell.extinction_height();
        let mut cuts: Vec<f64> = fracs.iter().map(|f| f * h).collect();
        cuts.sort_by(f64::total_cmp);
        let (a, b, c) = (cuts[0], cuts[1], cuts[2]);
        let left = ell.integral_between(a, b);
        let right = ell.integral_between(b, c);
        prop_assert!(left >= 0.0 && right >= 0.0);
        prop_assert!((left + right - ell.integral_between(a, c)).abs() <= 1e-12 * (1.0 + ell.integral()));
    }

    #[test]
    fn discretize_tracks_the_profile(ell in profile_strategy(), n in 2u64..400) {
        let q = discretize(&ell, n).unwrap();
        let nf = n as f64;
        for s in 1..q.extinction() {
            let target = ell.eval(s as f64 / nf);
            prop_assert!((q.q(s) as f64 / nf - target).abs() <= 1.0 / nf + 1e-12,
                "s={s} q={} target={target}", q.q(s));
        }
    }

    #[test]
    fn sample_height_is_monotone(ell in profile_strategy(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let (lo, hi) = if u <= v { (u, v) } else { (v, u) };
        let (x, y) = (ell.sample_height(lo), ell.sample_height(hi));
        prop_assert!(x <= y);
        prop_assert!(x >= 0.0 && y <= ell.extinction_height());
    }

    #[test]
    fn traversal_identities((tree, offspring) in tree_strategy()) {
        let t = tree.traverse();
        let vertices = tree.vertex_count();
        tree.contour_function().check(vertices, tree.extinction()).unwrap();
        tree.height_function().check(vertices, tree.extinction()).unwrap();
        for i in 0..vertices {
            prop_assert_eq!(t.first_visit[i] + t.height[i] as usize, 2 * i);
            prop_assert_eq!(t.contour[t.first_visit[i]], t.height[i]);
        }
        let (heights, contour) = oracle_traversal(&tree);
        prop_assert_eq!(&t.height, &heights);
        prop_assert_eq!(&t.contour, &contour);
        for w in t.order.windows(2) {
            prop_assert!(tree.lex_cmp(w[0], w[1]).is_lt());
        }
        let rebuilt = CanningsTree::from_offspring(tree.profile(), &offspring).unwrap();
        for s in 1..tree.extinction() {
            prop_assert_eq!(rebuilt.parents(s), tree.parents(s));
            prop_assert!(tree.parents(s).windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn discrete_subtrees_are_valid((tree, _) in tree_strategy(), seed in any::<u64>(), k in 1usize..6) {
        let mut rng = stream(seed, 1);
        let k = k.min(tree.vertex_count());
        let sub = tree.sample_k_point_subtree(k, &mut rng).unwrap();
        prop_assert_eq!(sub.k(), k);
        sub.check_invariants(false).map_err(TestCaseError::fail)?;
        let again = tree.sample_k_point_subtree(k, &mut stream(seed, 1)).unwrap();
        prop_assert_eq!(sub, again);
    }

    #[test]
    fn limit_subtrees_are_strictly_valid(ell in profile_strategy(), seed in any::<u64>(), k in 1usize..8) {
        let pair = ProfilePair::unit_variance(ell).unwrap();
        let tree = LimitSampler::new(&pair).unwrap().sample(k, &mut stream(seed, 0)).unwrap();
        tree.check_invariants(true).map_err(TestCaseError::fail)?;
        prop_assert!(tree.leaves.iter().all(|&h| h > 0.0 && h < pair.extinction_height()));
    }

    #[test]
    fn marked_trace_matches_its_counts(sizes in prop::collection::vec(2u64..10, 2..8), seed in any::<u64>(), k in 1usize..5) {
        let profile = DiscreteProfile::new(sizes).unwrap();
        let h_star = profile.extinction() - 1;
        let k = k.min(profile.q(h_star) as usize);
        let (marked, sub) = simulate_marked_trace(
            &profile, &OffspringLaw::WrightFisher, h_star, k, &mut stream(seed, 0)).unwrap();
        sub.check_invariants(false).map_err(TestCaseError::fail)?;
        prop_assert_eq!(marked.trace.counts[h_star], k as u64);
        prop_assert_eq!(marked.trace.counts[0], 1);
        prop_assert!(marked.trace.counts.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn lineage_counts_are_monotone_in_the_sample(
        (tree, _) in tree_strategy(),
        seed in any::<u64>(),
    ) {
        let top = tree.extinction() - 1;
        let mut idx: Vec<usize> = (0..tree.generation_size(top)).collect();
        idx.shuffle(&mut stream(seed, 2));
        let mut prev: Option<Vec<u64>> = None;
        for k in 1..=idx.len() {
            let counts = tree.lineage_counts(top, &idx[..k]);
            prop_assert_eq!(counts[0], k as u64);
            prop_assert_eq!(*counts.last().unwrap(), 1);
            if let Some(p) = &prev {
                prop_assert!(p.iter().zip(&counts).all(|(a, b)| a <= b));
            }
            prev = Some(counts);
        }
    }
}
