//! Row accounting of the experiment runners on the synthetic stand-in.

use cybertwin_cli::config::Config;
use cybertwin_cli::experiments::{delay_delivery, detect_bench, resource};

#[test]
fn resource_offloads_detection_to_the_twin() {
    let mut cfg = Config::default();
    for (gamma, expect_twin) in [(80.0, 0.8), (100.0, 1.0)] {
        cfg.resource.gamma = gamma;
        let rows = resource::run(&cfg).unwrap();
        let (without, with) = (&rows[0], &rows[1]);
        assert_eq!((without.mode, with.mode), ("without_twin", "with_twin"));
        assert_eq!((with.rsu_rows, with.rsu_cost), (0, 0));
        assert_eq!(without.twin_ram_bytes, 0);
        assert_eq!(
            with.twin_rows,
            (expect_twin * without.rsu_rows as f64).round() as u64
        );
        assert_eq!(
            with.twin_cost * without.rsu_rows,
            without.rsu_cost * with.twin_rows
        );
        if gamma == 100.0 {
            assert_eq!(with.detection_rate, without.detection_rate);
        }
    }
}

#[test]
fn detect_bench_has_one_row_per_dataset_and_method() {
    let bench = detect_bench::run(&Config::default()).unwrap();
    assert_eq!(bench.rows.len(), 6);
    assert_eq!(bench.ps_variants.len(), 4);
    assert!(!bench.real_data);
    for d in ["dataset-1", "dataset-2"] {
        for m in ["PS", "KNN", "SVM"] {
            assert!(bench.row(d, m).is_some(), "{d} {m}");
        }
    }
}

#[test]
fn unbounded_lifetime_delivers_everything() {
    let mut cfg = Config::default();
    cfg.delay_delivery.duration = 2000.0;
    cfg.delay_delivery.lifetimes = vec![0.5, f64::INFINITY];
    let rows = delay_delivery::run(&cfg).unwrap();
    assert_eq!(rows.len(), 6);
    for r in rows.iter().filter(|r| r.lifetime.is_infinite()) {
        assert_eq!(r.delivery_rate, 1.0);
        assert_eq!(r.dropped, 0);
    }
    assert!(delay_delivery::ops_per_row(&cfg, "PS") < delay_delivery::ops_per_row(&cfg, "KNN"));
}
