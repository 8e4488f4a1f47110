use pooltest::ensemble::SystemParams;
use pooltest::montecarlo::{run_noiseless_trials, run_noisy_trials, validate_lemma2, GraphMode, TrialConfig, Z_GATE};

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn h(p: f64) -> f64 {
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

#[test]
fn same_seed_same_report() {
    let params = SystemParams::new(3, 6, 16, 0.12, 0.05).unwrap();
    for mode in [GraphMode::Fresh, GraphMode::Fixed] {
        let mut config = TrialConfig::new(params, 1500, 31);
        config.graph_mode = mode;
        let a = run_noisy_trials(&config).unwrap();
        let b = run_noisy_trials(&config).unwrap();
        assert_eq!((a.errors, a.events), (b.errors, b.events));
        config.seed = 32;
        let c = run_noisy_trials(&config).unwrap();
        assert_eq!(c.trials, a.trials);
    }
}

#[test]
fn thread_count_does_not_change_counts() {
    let config = TrialConfig::new(SystemParams::new(3, 6, 16, 0.1, 0.0).unwrap(), 3000, 8);
    let run_with = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_noiseless_trials(&config).unwrap())
    };
    let one = run_with(1);
    for threads in [2, 3, 8] {
        let many = run_with(threads);
        assert_eq!(
            (one.errors, one.events),
            (many.errors, many.events),
            "{threads} threads"
        );
    }
}

#[test]
fn atypical_input_frequency_matches_binomial_tail() {
    let (n, p, eps) = (18usize, 0.2, 0.1);
    let trials = 40_000u64;
    let config = TrialConfig::new(SystemParams::new(3, 6, n, p, 0.0).unwrap(), trials, 404);
    let report = run_noiseless_trials(&config).unwrap();
    // independent membership: rate of a weight-w sequence against h(p) +- eps
    let atypical: f64 = (0..=n)
        .filter(|&w| {
            let rate = -(w as f64 * p.log2() + (n - w) as f64 * (1.0 - p).log2()) / n as f64;
            (rate - h(p)).abs() > eps + 1e-12
        })
        .map(|w| binomial(n, w) * p.powi(w as i32) * (1.0 - p).powi((n - w) as i32))
        .sum();
    let empirical = report.events.event_i as f64 / trials as f64;
    let sd = (atypical * (1.0 - atypical) / trials as f64).sqrt();
    let z = (empirical - atypical) / sd;
    assert!(
        z.abs() <= Z_GATE,
        "event I frequency {empirical} vs exact {atypical} (z = {z})"
    );
}

#[test]
fn fair_noise_always_errs() {
    let config = TrialConfig::new(SystemParams::new(3, 6, 12, 0.1, 0.5).unwrap(), 2000, 3);
    let report = run_noisy_trials(&config).unwrap();
    assert!(report.error_rate.unwrap() > 0.99, "{:?}", report.error_rate);
    let ev = report.events;
    assert_eq!(report.errors, ev.event_i + ev.event_ii + ev.event_iii.unwrap());
}

#[test]
fn small_ensemble_probability_is_confirmed() {
    let params = SystemParams::shape(2, 4, 8).unwrap();
    for (w, s) in [(1, 1), (2, 2), (3, 3)] {
        let rec = validate_lemma2(&params, w, s, 50_000, 17).unwrap();
        assert!(rec.pass, "w={w} s={s}: {rec:?}");
    }
}

#[test]
fn report_serializes_config_and_protocol() {
    let config = TrialConfig::new(SystemParams::new(3, 6, 12, 0.1, 0.0).unwrap(), 100, 1);
    let json = serde_json::to_value(run_noiseless_trials(&config).unwrap()).unwrap();
    assert_eq!(json["config"]["graph_mode"], "fresh");
    assert_eq!(json["seed"], 1);
    assert!(json["protocol"].as_str().unwrap().contains("ChaCha8"));
    assert!(json["events"].get("event_iii").is_none());
}
