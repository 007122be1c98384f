use cloudcache::config::NetworkConfig;
use cloudcache::experiments::{
    emit_csv, read_csv, run_sweep, EvalMethod, PolicyKind, SweepSpec, SweepVariable,
};
use cloudcache::hitprob::Strategy;

fn analytic(figure: u32) -> SweepSpec {
    SweepSpec {
        methods: vec![EvalMethod::Exact, EvalMethod::Approx],
        policies: vec![PolicyKind::Optimized],
        ..SweepSpec::figure(figure).unwrap()
    }
}

#[test]
fn threshold_sweep_is_nonincreasing() {
    let out = run_sweep(&NetworkConfig::reference(), &analytic(2)).unwrap();
    assert!(out.errors.is_empty());
    for strategy in ["closest", "best"] {
        for method in ["exact", "approx"] {
            let hits: Vec<f64> = out
                .rows
                .iter()
                .filter(|r| r.strategy == strategy && r.method == method)
                .map(|r| r.hit)
                .collect();
            assert_eq!(hits.len(), 13);
            assert!(
                hits.windows(2).all(|w| w[1] <= w[0] + 1e-12),
                "{strategy}/{method}: {hits:?}"
            );
        }
    }
}

#[test]
fn csv_round_trip() {
    let spec = SweepSpec {
        values: vec![2.0, 4.0],
        ..analytic(6)
    };
    let out = run_sweep(&NetworkConfig::reference(), &spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.csv");
    emit_csv(&out.rows, &path).unwrap();
    assert_eq!(read_csv(&path).unwrap(), out.rows);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.lines().all(|l| l.split(',').count() == 9));
    assert!(!text.contains('\r'));
}

#[test]
fn simulated_rows_cover_exact_rows() {
    let spec = SweepSpec {
        variable: SweepVariable::Distance,
        values: vec![0.0, 25.0, 30.0],
        strategies: vec![Strategy::Closest, Strategy::Best],
        methods: vec![EvalMethod::Exact, EvalMethod::MonteCarlo],
        policies: vec![PolicyKind::Optimized, PolicyKind::MostPopular],
        trials: 20_000,
        seed: 11,
        timings: false,
    };
    let out = run_sweep(&NetworkConfig::reference(), &spec).unwrap();
    assert!(out.errors.is_empty());
    for pair in out.rows.chunks(2) {
        let (exact, mc) = (&pair[0], &pair[1]);
        assert_eq!((exact.method.as_str(), mc.method.as_str()), ("exact", "mc"));
        // Three standard errors, so that the twelve comparisons are jointly safe.
        let sigma = mc.ci_halfwidth / 1.959963984540054;
        assert!(
            (exact.hit - mc.hit).abs() <= 3.0 * sigma,
            "{} {} {}: exact {} vs {} ± {}",
            exact.value,
            exact.strategy,
            exact.policy,
            exact.hit,
            mc.hit,
            mc.ci_halfwidth
        );
    }
}

#[test]
fn interval_coverage_is_calibrated() {
    // Fifty independent short runs; their 95% intervals should cover the
    // exact value about 47.5 times. Fewer than 42 has probability < 1%.
    let spec = SweepSpec {
        variable: SweepVariable::BetaDb,
        values: vec![10.0],
        strategies: vec![Strategy::Closest],
        methods: vec![EvalMethod::Exact, EvalMethod::MonteCarlo],
        policies: vec![PolicyKind::Optimized],
        trials: 2_000,
        seed: 0,
        timings: false,
    };
    let cfg = NetworkConfig::reference();
    let mut covered = 0;
    for seed in 0..50 {
        let out = run_sweep(
            &cfg,
            &SweepSpec {
                seed,
                ..spec.clone()
            },
        )
        .unwrap();
        let (exact, mc) = (&out.rows[0], &out.rows[1]);
        if (exact.hit - mc.hit).abs() <= mc.ci_halfwidth {
            covered += 1;
        }
    }
    assert!(covered >= 42, "covered {covered} of 50");
}
