use std::fs::File;

use proptest::prelude::*;

use detcount::asymptotics::report;
use detcount::casework::{region_sum_g, region_sum_j, RegionG, RegionJ};
use detcount::divisor_tables::{build_tau_table, product_count, shifted_sum, TauTable};
use detcount::exact_count::{fast_count, sign_class_count, SignClass};
use detcount::hyperbola::{count_box, count_under_curve, CurveBound, CurveQuery, HyperbolaQuery};
use detcount::sweep::read_fixtures_csv;
use detcount::{Budget, Count};

fn brute_d2(h: i64, delta: i64) -> Count {
    let mut n = 0;
    for a in -h..=h {
        for b in -h..=h {
            for c in -h..=h {
                for d in -h..=h {
                    if a * d - b * c == delta {
                        n += 1;
                    }
                }
            }
        }
    }
    n
}

#[test]
fn casework_fixtures_reproduce() {
    let path = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/fixtures/casework_regions.csv"
    );
    let rows = read_fixtures_csv(File::open(path).unwrap()).unwrap();
    assert_eq!(rows.len(), 24);
    for row in rows {
        let got = match row.region.parse::<RegionG>() {
            Ok(r) => region_sum_g(row.h, row.delta, r).unwrap(),
            Err(_) => {
                region_sum_j(row.h, row.delta, row.region.parse::<RegionJ>().unwrap()).unwrap()
            }
        };
        assert_eq!(got, row.count, "{row:?}");
    }
}

/// Values computed by an independent vectorised prototype of the
/// product-count convolution.
#[test]
fn large_reference_values() {
    let b = Budget::default();
    assert_eq!(fast_count(2000, 1, &b).unwrap(), 38_930_804);
    assert_eq!(fast_count(4000, 0, &b).unwrap(), 1_481_997_441);
    let t = build_tau_table(4000, &b).unwrap();
    assert_eq!(t.moment(2).unwrap(), 153_245_680);
    assert_eq!(t.shifted_sum(1).unwrap(), 19_446_406);
}

#[test]
fn shifted_sum_is_the_mixed_sign_class() {
    let b = Budget::default();
    for h in [3u64, 7, 12, 20] {
        for delta in [1i64, 2, 5, 12, (h * h) as i64 - 1] {
            let s = shifted_sum(h, delta as u64, &b).unwrap();
            assert_eq!(
                s,
                sign_class_count(h, delta, SignClass::PPN).unwrap(),
                "H={h} Δ={delta}"
            );
        }
    }
}

#[test]
fn tau_table_file_round_trip() {
    let b = Budget::default();
    let t = build_tau_table(300, &b).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tau.bin");
    t.write_to(File::create(&path).unwrap()).unwrap();
    let back = TauTable::read_from(File::open(&path).unwrap(), &b).unwrap();
    assert_eq!(back, t);
}

#[test]
fn budget_surfaces_as_error() {
    let tight = Budget {
        max_cells: 1000,
        max_enumeration: 1000,
    };
    assert!(matches!(
        product_count(100, &tight),
        Err(detcount::Error::Budget { .. })
    ));
    assert!(matches!(
        detcount::exact_count::naive_count(3, 0, 2, &tight),
        Err(detcount::Error::Budget { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fast_count_matches_four_loop(h in 1i64..=5, delta in -60i64..=60) {
        let b = Budget::default();
        prop_assert_eq!(fast_count(h as u64, delta, &b).unwrap(), brute_d2(h, delta));
    }

    #[test]
    fn report_symmetric_in_delta(h in 1u64..=40, delta in 1i64..=500) {
        let b = Budget::default();
        let plus = report(h, delta, 0.1, &b).unwrap();
        let minus = report(h, -delta, 0.1, &b).unwrap();
        prop_assert_eq!(plus.exact, minus.exact);
        prop_assert_eq!(plus.main, minus.main);
    }

    #[test]
    fn support_is_bounded(h in 1u64..=30, extra in 1i64..=50) {
        let b = Budget::default();
        let edge = 2 * (h * h) as i64;
        prop_assert!(fast_count(h, edge, &b).unwrap() > 0);
        prop_assert_eq!(fast_count(h, edge + extra, &b).unwrap(), 0);
    }

    #[test]
    fn box_counts_match_enumeration(
        k in -500i64..500,
        q in 1u64..60,
        u in -20.0f64..50.0,
        v in -20.0f64..50.0,
        x in 0.0f64..40.0,
        y in 0.0f64..40.0,
    ) {
        let query = HyperbolaQuery { k, q, u, v, x, y };
        let mut brute: Count = 0;
        for uu in (u.floor() as i64 + 1)..=((u + x).floor() as i64) {
            for vv in (v.floor() as i64 + 1)..=((v + y).floor() as i64) {
                if (uu * vv - k).rem_euclid(q as i64) == 0 {
                    brute += 1;
                }
            }
        }
        prop_assert_eq!(count_box(&query).unwrap(), brute);
    }

    #[test]
    fn curve_counts_match_enumeration(
        k in -500i64..500,
        q in 1u64..60,
        u in 0.0f64..30.0,
        x in 0.0f64..40.0,
        a in 0u32..3000,
    ) {
        let query = CurveQuery { k, q, u, x, bound: CurveBound::Hyperbolic { a: f64::from(a) } };
        let mut brute: Count = 0;
        for uu in (u.floor() as i64 + 1)..=((u + x).floor() as i64) {
            for vv in 1..=(i64::from(a) / uu) {
                if (uu * vv - k).rem_euclid(q as i64) == 0 {
                    brute += 1;
                }
            }
        }
        prop_assert_eq!(count_under_curve(&query).unwrap(), brute);
    }

    #[test]
    fn casework_regions_sum_to_sign_classes(h in 1u64..=15, delta in 1i64..=300) {
        let g: Count = RegionG::ALL.iter().map(|r| region_sum_g(h, delta, *r).unwrap()).sum();
        let j: Count = RegionJ::ALL.iter().map(|r| region_sum_j(h, delta, *r).unwrap()).sum();
        prop_assert_eq!(g, sign_class_count(h, delta, SignClass::PPP).unwrap());
        prop_assert_eq!(j, sign_class_count(h, delta, SignClass::PPN).unwrap());
    }
}
