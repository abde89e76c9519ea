use cannings_core::verify::{
    appendix_a_check, discrepancy_table, limit_self_comparison, Population, TestKind, Thresholds,
};
use cannings_core::{ContinuousProfile, OffspringLaw, ProfilePair};

#[test]
fn limit_against_itself_rarely_rejects() {
    let pair = ProfilePair::unit_variance(ContinuousProfile::constant(1.0, 1.0).unwrap()).unwrap();
    let seeds = 20;
    let clean = (0..seeds)
        .filter(|&seed| {
            let r = limit_self_comparison(&pair, 2, 5000, seed, Thresholds::default()).unwrap();
            r.marginals
                .iter()
                .filter(|m| matches!(m.kind, TestKind::Ks | TestKind::AtomZ))
                .all(|m| m.adjusted_p > 0.01)
        })
        .count();
    assert!(clean >= 19, "{clean} of {seeds} seeds clean");
}

#[test]
fn three_lineages_merge_three_times_faster() {
    let r = appendix_a_check(&OffspringLaw::WrightFisher, 256, 3, 5000, 21, Thresholds::default())
        .unwrap();
    let mean = r.marginals.iter().find(|m| m.kind == TestKind::MeanZ).unwrap();
    assert!(mean.statistic.abs() < 3.0, "{}", r.table());
    assert!(r.pass, "{}", r.table());
}

#[test]
fn discrepancy_shrinks_with_n() {
    let ell = ContinuousProfile::constant(1.0, 1.0).unwrap();
    let rows = discrepancy_table(
        &OffspringLaw::WrightFisher,
        &Population::Discretized(ell),
        &[64, 256],
        50,
        22,
    )
    .unwrap();
    assert!(rows[1].median < rows[0].median, "{} vs {}", rows[0].median, rows[1].median);
}
