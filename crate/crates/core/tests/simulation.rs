use hraid_core::analytic::d_max;
use hraid_core::oracle::markov_mttdl;
use hraid_core::simulator::{estimate_mttdl, run_trials, sweep, sweep_csv, trace_trials};
use hraid_core::{FailureModel, HraidConfig};

fn cfg(k: usize, l: usize) -> HraidConfig {
    HraidConfig::new(12, 12, k, l).unwrap()
}

#[test]
fn intervals_cover_the_oracle_at_the_nominal_rate() {
    // 32 cells of 10^5 trials each: count interval misses and bound every z-score.
    let mut misses = 0;
    let mut worst: f64 = 0.0;
    for gamma in [0.0, 1e-6] {
        let rates = FailureModel::new(1e-6, gamma).unwrap();
        let table = sweep(12, 12, &rates, 100_000, 2024).unwrap();
        for cell in &table.cells {
            let exact = markov_mttdl(&cell.config, &rates);
            let e = &cell.estimate;
            let z = (e.mean_hours - exact) / (e.std_dev_hours / (e.trials as f64).sqrt());
            worst = worst.max(z.abs());
            if !e.contains(exact) {
                misses += 1;
            }
        }
    }
    // P(X >= 7) for X ~ Bin(32, 0.05) is below 0.3%.
    assert!(misses <= 6, "{misses} of 32 intervals miss");
    assert!(worst < 4.0, "max |z| = {worst}");
}

#[test]
fn interval_miss_rate_over_many_seeds() {
    let c = cfg(1, 1);
    let rates = FailureModel::default();
    let exact = markov_mttdl(&c, &rates);
    let misses = (0..200u64)
        .filter(|&s| !estimate_mttdl(&c, &rates, 2_000, s).unwrap().contains(exact))
        .count();
    // Bin(200, 0.05) has mean 10; [1, 22] holds with probability > 99.9%.
    assert!((1..=22).contains(&misses), "{misses} misses out of 200");
}

#[test]
fn controller_failures_lower_every_cell() {
    let calm = sweep(12, 12, &FailureModel::default(), 20_000, 11).unwrap();
    let rough = sweep(12, 12, &FailureModel::new(1e-6, 1e-6).unwrap(), 20_000, 11).unwrap();
    for (a, b) in calm.cells.iter().zip(&rough.cells) {
        assert_eq!(a.config, b.config);
        assert_eq!(a.estimate.seed, b.estimate.seed);
        assert!(
            b.estimate.mean_hours < a.estimate.mean_hours,
            "{}: {} vs {}",
            a.config,
            b.estimate.mean_hours,
            a.estimate.mean_hours
        );
    }
}

#[test]
fn disk_failures_per_trial_within_bounds() {
    let rates = FailureModel::default();
    for k in 0..=3 {
        for l in 0..=3 {
            let c = cfg(k, l);
            for o in run_trials(&c, &rates, 5_000, 3) {
                assert!(o.disk_failures >= (k + 1) * (l + 1), "{c}: {}", o.disk_failures);
                assert!(o.disk_failures <= d_max(&c) + 1, "{c}: {}", o.disk_failures);
            }
        }
    }
}

#[test]
fn parallelism_does_not_change_results() {
    let c = cfg(2, 1);
    let rates = FailureModel::new(1e-6, 2e-6).unwrap();
    let estimates: Vec<_> = [1, 3, 16]
        .into_iter()
        .map(|threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| estimate_mttdl(&c, &rates, 30_000, 5).unwrap())
        })
        .collect();
    assert!(estimates.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn scaling_rates_scales_the_mean() {
    let c = cfg(1, 2);
    let base = FailureModel::new(1e-6, 1e-6).unwrap();
    let a = estimate_mttdl(&c, &base, 10_000, 8).unwrap();
    let b = estimate_mttdl(&c, &base.scaled(4.0).unwrap(), 10_000, 8).unwrap();
    assert_eq!(a.mean_hours / 4.0, b.mean_hours);
}

#[test]
fn traces_replay_estimate_trials() {
    let c = cfg(1, 1);
    let rates = FailureModel::default();
    let outcomes = run_trials(&c, &rates, 10, 77);
    let traces = trace_trials(&c, &rates, 77, 10);
    for (o, t) in outcomes.iter().zip(&traces) {
        assert_eq!(o.time_hours, t.time_hours);
        assert_eq!(t.trace.len(), o.disk_failures);
    }
}

#[test]
fn json_round_trip_is_exact() {
    let table = sweep(12, 12, &FailureModel::new(1e-6, 1e-6).unwrap(), 500, 3).unwrap();
    let text = serde_json::to_string(&table).unwrap();
    let back: hraid_core::simulator::SweepTable = serde_json::from_str(&text).unwrap();
    assert_eq!(back, table);
    assert_eq!(sweep_csv(&back.cells), sweep_csv(&table.cells));
}
