use jbw_core::bench::bench_generation;
use jbw_core::presets;

#[test]
fn doubling_mh_iterations_roughly_halves_throughput() {
    let mut config = presets::load("table2_3").unwrap();
    config.mh_iterations = 20_000;
    let base = bench_generation(&config, 8);
    config.mh_iterations = 40_000;
    let doubled = bench_generation(&config, 8);
    let ratio = base.patches_per_second / doubled.patches_per_second;
    assert!((1.0..=4.0).contains(&ratio), "throughput ratio {ratio}");
}

#[test]
fn single_patch_bench_reports_every_item_type() {
    let config = presets::load("table2_3").unwrap();
    let report = bench_generation(&config, 1);
    assert_eq!(report.patches, 1);
    assert!(report.patches_per_second > 0.0);
    assert_eq!(report.items_per_patch.len(), config.item_count());
    assert!(report.items_per_patch.iter().all(|s| s.std_dev == 0.0));
}
