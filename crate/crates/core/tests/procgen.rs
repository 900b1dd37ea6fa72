mod common;

use common::{enumerate, piecewise_box, sample_histogram, tiny_config, total_variation};
use jbw_core::bench::bench_generation;
use jbw_core::procgen::Item;
use jbw_core::Position;

#[test]
fn three_by_three_single_type_matches_enumeration() {
    let config = tiny_config(3, r#"[{"name": "A", "scent": [1], "color": [1], "intensity": "Constant[0]",
        "interactions": {"A": "PiecewiseBox[2,5,1,-2]"}}]"#);
    let exact = enumerate(3, 1, |items| {
        let mut e = 0.0;
        for (i, a) in items.iter().enumerate() {
            for (j, b) in items.iter().enumerate() {
                if i != j {
                    e += piecewise_box(a.0, b.0, 2.0, 5.0, 1.0, -2.0);
                }
            }
        }
        e
    });
    let sampled = sample_histogram(&config, &[], 200_000, 10_000, 10, 1);
    let tv = total_variation(&exact, &sampled);
    assert!(tv < 0.05, "tv = {tv}");
}

#[test]
fn two_by_two_two_types_with_context_matches_enumeration() {
    let config = tiny_config(
        2,
        r#"[{"name": "A", "scent": [1], "color": [1], "intensity": "Constant[0.5]",
             "interactions": {"A": "PiecewiseBox[2,5,-1,0.5]", "B": "PiecewiseBox[2,5,1,0]"}},
            {"name": "B", "scent": [1], "color": [1], "intensity": "Constant[-0.3]",
             "interactions": {"A": "PiecewiseBox[2,5,0.7,0]"}}]"#,
    );
    let context = [Item::new(Position::new(2, 1), 1, 0), Item::new(Position::new(-1, -1), 0, 0)];
    let intensity = [0.5, -0.3];
    let g = |a: (Position, u32), b: (Position, u32)| match (a.1, b.1) {
        (0, 0) => piecewise_box(a.0, b.0, 2.0, 5.0, -1.0, 0.5),
        (0, 1) => piecewise_box(a.0, b.0, 2.0, 5.0, 1.0, 0.0),
        (1, 0) => piecewise_box(a.0, b.0, 2.0, 5.0, 0.7, 0.0),
        _ => 0.0,
    };
    let exact = enumerate(2, 2, |items| {
        let mut e = 0.0;
        for (i, &a) in items.iter().enumerate() {
            e += intensity[a.1 as usize];
            for (j, &b) in items.iter().enumerate() {
                if i != j {
                    e += g(a, b);
                }
            }
            for c in &context {
                e += g(a, (c.position, c.item_type));
            }
        }
        e
    });
    let sampled = sample_histogram(&config, &context, 200_000, 5_000, 10, 2);
    let tv = total_variation(&exact, &sampled);
    assert!(tv < 0.03, "tv = {tv}");
}

#[test]
fn item_counts_per_patch_regression_band() {
    // Captured once from this implementation: seed 0, 100 patches along the
    // bench spiral. Mean and standard deviation per item type.
    let golden = [
        ("JellyBean", 59.69, 5.586940128549797),
        ("Banana", 50.74, 6.450767396209538),
        ("Onion", 1995.21, 399.19599935370087),
        ("Wall", 0.0, 0.0),
        ("Tree", 195.39, 16.920339831102684),
        ("Truffle", 14.13, 2.9720531623778195),
    ];
    let config = jbw_core::testing::table_2_3();
    let report = bench_generation(&config, 100);
    for ((name, mean, sd), got) in golden.iter().zip(&report.items_per_patch) {
        assert_eq!(&got.name, name);
        assert!((got.mean - mean).abs() < 1e-9 && (got.std_dev - sd).abs() < 1e-9, "{name}: {} ± {}", got.mean, got.std_dev);
    }
}
