use std::collections::{BTreeSet, HashMap};

use hpmtl::data::{generate_synthetic, Dataset, MonthRange, SampleCounts, SyntheticConfig};
use hpmtl::tasks::{define_tasks, filter_min_samples, quartile_bins, window_counts, TaskDefinition, TaskSet};
use proptest::prelude::*;

fn small(n_tasks: usize, seed: u64) -> Dataset {
    let cfg = SyntheticConfig {
        n_tasks,
        n_features: 8,
        months: 4,
        shared_support_size: 2,
        samples: SampleCounts {
            min_per_month: 1,
            max_per_month: 4,
            ..SampleCounts::default()
        },
        seed,
        ..SyntheticConfig::default()
    };
    generate_synthetic(&cfg).unwrap().0
}

fn def(s: &str) -> TaskDefinition {
    s.parse().unwrap()
}

fn assert_partition(ds: &Dataset, ts: &TaskSet) {
    let mut seen = vec![0u8; ds.len()];
    for t in &ts.tasks {
        assert!(!t.members.is_empty());
        for &i in &t.members {
            seen[i] += 1;
        }
    }
    for &i in &ts.unassigned {
        seen[i] += 1;
    }
    assert!(seen.iter().all(|&c| c == 1), "records must be covered exactly once");
}

const DEFINITIONS: &[&str] = &[
    "region:SA3",
    "region:SA4",
    "region:POSTCODE",
    "school:primary:1-250",
    "school:secondary:1-100",
    "station:1500",
    "facility:1:market",
    "facility:2:shop,gp",
    "intersect(region:SA4, station:3000)",
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_definition_partitions(n in 4usize..12, seed in 0u64..1000) {
        let ds = small(n, seed);
        for d in DEFINITIONS {
            let ts = define_tasks(&ds, &def(d)).unwrap();
            assert_partition(&ds, &ts);
            if d.starts_with("region") || d.starts_with("facility") {
                prop_assert!(ts.unassigned.is_empty());
            }
        }
    }

    #[test]
    fn intersection_refines_both_sides(n in 4usize..12, seed in 0u64..1000) {
        let ds = small(n, seed);
        let a = define_tasks(&ds, &def("region:SA3")).unwrap();
        let b = define_tasks(&ds, &def("facility:1:market")).unwrap();
        let both = define_tasks(&ds, &def("intersect(region:SA3, facility:1:market)")).unwrap();
        let owner = |ts: &TaskSet| {
            let mut m = HashMap::new();
            for t in &ts.tasks {
                for &i in &t.members {
                    m.insert(i, t.id.clone());
                }
            }
            m
        };
        let (oa, ob) = (owner(&a), owner(&b));
        for t in &both.tasks {
            let ids_a: BTreeSet<_> = t.members.iter().map(|i| &oa[i]).collect();
            let ids_b: BTreeSet<_> = t.members.iter().map(|i| &ob[i]).collect();
            prop_assert_eq!(ids_a.len(), 1);
            prop_assert_eq!(ids_b.len(), 1);
        }
        prop_assert!(both.n_tasks() >= a.n_tasks().max(b.n_tasks()));
    }

    #[test]
    fn station_threshold_is_monotone(seed in 0u64..1000, d1 in 100u32..3000, extra in 1u32..3000) {
        let ds = small(6, seed);
        let assigned = |d: u32| {
            define_tasks(&ds, &def(&format!("station:{d}")))
                .map(|ts| ts.tasks.iter().map(|t| t.members.len()).sum::<usize>())
                .unwrap_or(0)
        };
        prop_assert!(assigned(d1) <= assigned(d1 + extra));
    }

    #[test]
    fn definition_is_deterministic(seed in 0u64..1000) {
        let ds = small(5, seed);
        for d in DEFINITIONS {
            let a = define_tasks(&ds, &def(d)).unwrap();
            let b = define_tasks(&ds, &def(d)).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn quartile_bins_match_cumulative_share(counts in proptest::collection::vec(0usize..30, 4..40)) {
        let (bounds, bins) = quartile_bins(&counts).unwrap();
        let (q, g) = brute_quartiles(&counts);
        prop_assert_eq!(bounds, q);
        prop_assert_eq!(bins, g);
    }
}

/// Boundary k is the smallest observed count whose cumulative share reaches
/// k/4; a count belongs to the group whose interval (k/4, (k+1)/4] holds its
/// cumulative share.
fn brute_quartiles(counts: &[usize]) -> ((usize, usize, usize), Vec<usize>) {
    let n = counts.len();
    let le = |v: usize| counts.iter().filter(|&&c| c <= v).count();
    let boundary = |k: usize| *counts.iter().filter(|&&v| 4 * le(v) >= k * n).min().unwrap();
    let groups = counts
        .iter()
        .map(|&c| (0..4).find(|&k| k * n < 4 * le(c) && 4 * le(c) <= (k + 1) * n).unwrap())
        .collect();
    ((boundary(1), boundary(2), boundary(3)), groups)
}

#[test]
fn seventeen_task_quartiles() {
    let counts = [3, 9, 1, 12, 7, 7, 20, 5, 15, 2, 7, 11, 30, 8, 4, 6, 18];
    let (bounds, bins) = quartile_bins(&counts).unwrap();
    let (want_b, want_g) = brute_quartiles(&counts);
    assert_eq!(bounds, want_b);
    assert_eq!(bins, want_g);
    let mut sizes = [0; 4];
    for g in &bins {
        sizes[*g] += 1;
    }
    assert_eq!(sizes.iter().sum::<usize>(), 17);
    // ties share a group
    let sevens: BTreeSet<_> = counts.iter().zip(&bins).filter(|(c, _)| **c == 7).map(|(_, g)| g).collect();
    assert_eq!(sevens.len(), 1);
}

#[test]
fn fewer_than_four_tasks_have_no_quartiles() {
    assert!(quartile_bins(&[1, 2, 3]).is_none());
}

#[test]
fn first_quartile_filter_on_twenty_tasks() {
    let cfg = SyntheticConfig {
        n_tasks: 20,
        months: 6,
        samples: SampleCounts {
            min_per_month: 1,
            max_per_month: 12,
            ..SampleCounts::default()
        },
        seed: 4,
        ..SyntheticConfig::default()
    };
    let ds = generate_synthetic(&cfg).unwrap().0;
    let ts = define_tasks(&ds, &def("region:SA3")).unwrap();
    let window: MonthRange = ds.month_range();
    let counts = window_counts(&ds, &ts, window);
    // recount from raw records
    for (t, c) in ts.tasks.iter().zip(&counts) {
        assert_eq!(*c, t.members.len());
    }
    let (bounds, _) = brute_quartiles(&counts);
    let kept = filter_min_samples(&ds, &ts, window, bounds.0);
    let want: Vec<&str> = ts
        .tasks
        .iter()
        .zip(&counts)
        .filter(|(_, c)| **c >= bounds.0)
        .map(|(t, _)| t.id.as_str())
        .collect();
    assert_eq!(kept.task_ids(), want);
    assert!(kept.n_tasks() >= 15);
    assert_partition(&ds, &kept);
}

#[test]
fn sa4_groups_four_sa3_regions() {
    let cfg = SyntheticConfig {
        n_tasks: 68,
        n_features: 3,
        shared_support_size: 2,
        months: 2,
        samples: SampleCounts {
            min_per_month: 1,
            max_per_month: 2,
            ..SampleCounts::default()
        },
        ..SyntheticConfig::default()
    };
    let ds = generate_synthetic(&cfg).unwrap().0;
    assert_eq!(define_tasks(&ds, &def("region:SA3")).unwrap().n_tasks(), 68);
    assert_eq!(define_tasks(&ds, &def("region:SA4")).unwrap().n_tasks(), 17);
}

#[test]
fn school_rank_band_keeps_only_ranked_districts() {
    let ds = small(8, 3);
    let schema = ds.schema();
    let rank = schema.feature_index("PRI_RANK").unwrap();
    let ts = define_tasks(&ds, &def("school:primary:1-250")).unwrap();
    for t in &ts.tasks {
        for &i in &t.members {
            let r = ds.record(i).num(rank);
            assert!((1.0..=250.0).contains(&r));
        }
    }
    for &i in &ts.unassigned {
        assert!(ds.record(i).num(rank) > 250.0);
    }
}
