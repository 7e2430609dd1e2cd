//! Values frozen from scipy 1.x (`scipy.stats.shapiro`, `ttest_1samp`).

use spice_analytics::{paired_t, shapiro_wilk, StatsError};

struct Fixture {
    name: &'static str,
    x: &'static [f64],
    w: f64,
    p: f64,
}

const FIXTURES: &[Fixture] = &[
    Fixture { name: "n3", x: &[1.0, 2.0, 4.0], w: 0.9642857142857142, p: 0.6368868450289689 },
    Fixture { name: "n5", x: &[2.1, 3.4, 1.9, 5.6, 4.2], w: 0.9346878701487367, p: 0.6286673975160455 },
    Fixture {
        name: "n10",
        x: &[12.058, 13.284, 12.293, 8.054, 7.214, 10.134, 11.723, 11.018, 13.621, 11.502],
        w: 0.9139092650618298,
        p: 0.3089371979517328,
    },
    Fixture {
        name: "linear10",
        x: &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0],
        w: 0.9701646110856056,
        p: 0.8923673061902978,
    },
    Fixture {
        name: "skewed10",
        x: &[1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 100.0],
        w: 0.36572062769765235,
        p: 1.0036928213864587e-07,
    },
    Fixture {
        name: "n11",
        x: &[0.585, 0.42, 0.403, 0.944, 0.048, 0.326, 0.519, 0.598, 0.042, 0.241, 0.054],
        w: 0.9322583176388467,
        p: 0.4341483058373792,
    },
    Fixture {
        name: "n12",
        x: &[0.008, 0.322, 0.407, 0.859, 0.013, 0.716, 0.457, 0.589, 0.146, 0.802, 0.379, 0.41],
        w: 0.9468238017569556,
        p: 0.5911134129637735,
    },
    Fixture {
        name: "n20",
        x: &[
            3.062, 1.167, 1.31, 2.161, 0.005, 0.354, 13.859, 9.532, 1.431, 1.385, 0.211, 9.219,
            4.906, 3.343, 0.857, 0.817, 10.496, 1.218, 1.188, 0.363,
        ],
        w: 0.7473548542737661,
        p: 0.00015648296996129506,
    },
    Fixture {
        name: "n30",
        x: &[
            -0.431, 0.272, 0.057, 0.425, 0.225, 1.658, -0.664, 1.199, -0.403, -0.958, 1.211,
            -0.44, -0.388, -1.389, -2.098, 0.634, -1.165, 0.778, 1.848, -0.115, -1.127, 0.394,
            0.762, -0.262, 0.017, 1.335, 1.265, 0.71, -0.866, -0.054,
        ],
        w: 0.9871868582293007,
        p: 0.96837383519412,
    },
    Fixture {
        name: "n50",
        x: &[
            2.91, 1.995, 3.809, 1.122, 1.533, 0.892, 2.289, 0.921, 6.582, 1.592, 2.225, 1.604,
            1.082, 0.079, 1.757, 0.336, 0.386, 1.933, 1.424, 1.906, 1.699, 0.821, 0.746, 1.817,
            3.107, 1.166, 1.483, 1.284, 3.392, 5.475, 0.322, 1.473, 1.031, 2.825, 3.209, 3.436,
            1.504, 3.1, 2.009, 4.247, 1.96, 1.866, 3.091, 0.46, 1.367, 5.043, 0.207, 1.459,
            2.204, 2.567,
        ],
        w: 0.9076514934273547,
        p: 0.0008682358982236733,
    },
];

#[test]
fn shapiro_wilk_matches_reference() {
    for f in FIXTURES {
        let r = shapiro_wilk(f.x).unwrap();
        assert!((r.w - f.w).abs() < 1e-3, "{}: W {} vs {}", f.name, r.w, f.w);
        assert!((r.p_value - f.p).abs() < 1e-3, "{}: p {} vs {}", f.name, r.p_value, f.p);
        assert!(r.w > 0.0 && r.w <= 1.0);
    }
}

#[test]
fn shapiro_wilk_tracks_reference_closely() {
    // tighter than the contract: the same algorithm should agree to ~1e-6
    for f in FIXTURES {
        let r = shapiro_wilk(f.x).unwrap();
        assert!((r.w - f.w).abs() < 1e-6, "{}: W {} vs {}", f.name, r.w, f.w);
        assert!(
            (r.p_value - f.p).abs() < 1e-5 * f.p.max(1e-3),
            "{}: p {} vs {}",
            f.name,
            r.p_value,
            f.p
        );
    }
}

#[test]
fn skewed_sample_is_non_normal() {
    let r = shapiro_wilk(&[1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 100.0]).unwrap();
    assert!(r.p_value < 0.05);
}

#[test]
fn constant_sample_rejected() {
    assert_eq!(shapiro_wilk(&[2.0; 5]), Err(StatsError::ZeroVariance));
}

#[test]
fn paired_t_reference() {
    let r = paired_t(&[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert!((r.statistic - 3.872983346207417).abs() < 1e-12);
    assert!((r.p_value - 0.030466291662170977).abs() < 1e-6);
}
