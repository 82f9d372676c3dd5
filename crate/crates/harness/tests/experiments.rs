use spiked_amp_harness::config::{Experiment, ExperimentConfig, InitKind};
use spiked_amp_harness::{run_experiment, run_scan, Metric};

fn cfg(exp: Experiment, n: usize, lambda: f64, t: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(exp);
    c.n = Some(n);
    c.lambda = Some(lambda);
    c.t_max = Some(t);
    c
}

#[test]
fn z2_records_cover_every_iteration() {
    let mut c = cfg(Experiment::Z2, 200, 1.5, 5);
    c.trials = 2;
    let recs = run_experiment(&c).unwrap();
    for id in 0..2 {
        for t in 1..=5 {
            for m in [Metric::Alpha, Metric::AlphaSq, Metric::TauT, Metric::Overlap] {
                assert_eq!(recs.iter().filter(|r| r.trial_id == id && r.t == t && r.metric == m).count(), 1);
            }
        }
        assert!(recs.iter().any(|r| r.trial_id == id && r.metric == Metric::LambdaMax));
    }
    let tau1 = recs.iter().find(|r| r.metric == Metric::TauT && r.t == 1).unwrap().value;
    assert!((tau1 - 1.25).abs() < 1e-15);
    // records are in trial order
    assert!(recs.windows(2).all(|w| w[0].trial_id <= w[1].trial_id));
}

#[test]
fn same_seed_same_records() {
    let mut c = cfg(Experiment::DecompAudit, 120, 1.4, 4);
    c.trials = 2;
    c.seed = 5;
    assert_eq!(run_experiment(&c).unwrap(), run_experiment(&c).unwrap());
    c.seed = 6;
    let other = run_experiment(&c).unwrap();
    c.seed = 5;
    assert_ne!(run_experiment(&c).unwrap(), other);
}

#[test]
fn decomp_audit_reports_exact_identity() {
    let mut c = cfg(Experiment::DecompAudit, 150, 1.5, 5);
    c.init = Some(InitKind::Informative);
    let recs = run_experiment(&c).unwrap();
    let recon: Vec<f64> = recs.iter().filter(|r| r.metric == Metric::ReconErr).map(|r| r.value).collect();
    assert_eq!(recon.len(), 4);
    assert!(recon.iter().all(|e| *e < 1e-10));
    assert_eq!(recs.iter().filter(|r| r.metric == Metric::PhiVar).count(), 4);
}

#[test]
fn sparse_inits_produce_their_metrics() {
    for (init, extra) in [
        (InitKind::Informative, Metric::AlphaSe),
        (InitKind::DiagMax, Metric::Overlap),
        (InitKind::Split, Metric::Score),
    ] {
        let mut c = cfg(Experiment::Sparse, 400, 3.0, 4);
        c.k = Some(8);
        c.init = Some(init);
        let recs = run_experiment(&c).unwrap();
        assert!(recs.iter().all(|r| r.metric != Metric::ErrorCode), "{init:?}: {recs:?}");
        assert!(recs.iter().any(|r| r.metric == extra), "{init:?}");
        assert_eq!(recs.iter().filter(|r| r.metric == Metric::L2Err).count(), 4);
    }
}

#[test]
fn numeric_failures_become_error_rows() {
    let mut c = cfg(Experiment::Sparse, 100, 0.0, 3);
    c.k = Some(2);
    c.c_tau = Some(1000.0);
    c.trials = 2;
    let recs = run_experiment(&c).unwrap();
    let errs: Vec<_> = recs.iter().filter(|r| r.metric == Metric::ErrorCode).collect();
    assert_eq!(errs.len(), 2);
    assert!(errs.iter().all(|r| r.value == 6.0));
}

#[test]
fn scans_cover_the_grid() {
    let mut c = ExperimentConfig::new(Experiment::KappaScan);
    c.lambda_grid = Some(vec![1.05, 1.1]);
    c.tau_points = Some(7);
    let rows = run_scan(&c).unwrap();
    assert_eq!(rows.len(), 14);
    assert!((rows[0].tau - (1.05f64 * 1.05 - 1.0)).abs() < 1e-15);
    assert!((rows[6].tau - 1.05 * 1.05).abs() < 1e-12);
    assert!(rows.iter().all(|r| r.pass));
    assert!(run_experiment(&c).is_err());
}
