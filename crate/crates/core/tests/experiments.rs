use spinchain_core::experiments::{
    alpha_sweep, auto_alpha, disorder_average, realization_yield, time_sweep, DisorderSpec, DisorderStudy,
    Evaluation, OctSettings, Protocol, SweepMode,
};
use spinchain_core::propagate::{first_arrival_window, free_peak};
use spinchain_core::{Actuators, ChainSpec, DisorderScope};

fn free_study(amplitudes: Vec<f64>, realizations: usize) -> DisorderStudy {
    let spec = ChainSpec::new(8, 0.7).unwrap();
    let peak = free_peak(&spec, first_arrival_window(8), 0.05).unwrap();
    DisorderStudy {
        spec,
        protocol: Protocol::Free { t: peak.t_peak },
        amplitudes,
        realizations,
        master_seed: 2024,
        evaluation: Evaluation::AtFixedT,
        scope: DisorderScope::AllCouplings,
    }
}

#[test]
fn clean_free_baseline_matches_peak() {
    let study = free_study(vec![0.0], 10);
    let peak = free_peak(&study.spec, first_arrival_window(8), 0.05).unwrap();
    let s = disorder_average(&study).unwrap()[0];
    assert!((s.mean - peak.p_peak).abs() < 1e-10);
    assert_eq!(s.std_error, 0.0);
}

#[test]
fn degradation_is_monotone() {
    let stats = disorder_average(&free_study(vec![0.0, 0.05, 0.1, 0.2, 0.5], 300)).unwrap();
    for w in stats.windows(2) {
        assert!(w[1].mean <= w[0].mean + 3.0 * w[0].combined_error(&w[1]));
    }
    assert!(stats.iter().all(|s| (0.0..=1.0).contains(&s.mean) && s.std_error >= 0.0));
}

#[test]
fn averages_do_not_depend_on_order_or_threads() {
    let study = free_study(vec![0.3], 64);
    let forward: Vec<f64> = (0..64).map(|m| realization_yield(&study, 0.3, m).unwrap()).collect();
    let backward: Vec<f64> = (0..64).rev().map(|m| realization_yield(&study, 0.3, m).unwrap()).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!((mean(&forward) - mean(&backward)).abs() < 1e-14);

    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| disorder_average(&study).unwrap())
    };
    assert_eq!(run(1), run(3));
    assert!((run(1)[0].mean - mean(&forward)).abs() < 1e-14);
}

#[test]
fn bulk_only_scope_is_less_damaging_at_the_boundary() {
    let mut study = free_study(vec![0.0, 0.2], 200);
    let all = disorder_average(&study).unwrap();
    study.scope = DisorderScope::BulkOnly;
    let bulk = disorder_average(&study).unwrap();
    assert_eq!(all[0], bulk[0]);
    assert_ne!(all[1].mean, bulk[1].mean);
}

#[test]
fn invalid_studies_are_rejected() {
    assert!(disorder_average(&free_study(vec![0.1], 0)).is_err());
    assert!(disorder_average(&free_study(vec![-0.1], 5)).is_err());
}

#[test]
fn sweep_rows_regenerate_in_isolation() {
    let grid = [0.4, 0.6, 0.8];
    let disorder = Some(DisorderSpec {
        amplitude: 0.1,
        realizations: 50,
        master_seed: 5,
        scope: DisorderScope::AllCouplings,
    });
    let mode = SweepMode::Free { t_max: 24.0 };
    let full = alpha_sweep(6, &grid, mode, disorder, &OctSettings::default()).unwrap();
    let single = alpha_sweep(6, &[0.6], mode, disorder, &OctSettings::default()).unwrap();
    assert_eq!(full.rows[1], single.rows[0]);
    let table = full.table();
    assert_eq!(table.rows.len(), 3);
    assert_eq!(table.column("alpha").unwrap(), grid.to_vec());
}

#[test]
fn time_sweep_below_speed_limit_stays_near_free_value() {
    let n = 10;
    let (alpha, _) = auto_alpha(n).unwrap();
    let spec = ChainSpec::new(n, alpha).unwrap();
    let sweep = time_sweep(spec, &[0.1 * n as f64], Actuators::LeftOnly, &OctSettings::one_actuator(n)).unwrap();
    let row = &sweep.rows[0];
    assert!(row.yield_ < 0.05, "{}", row.yield_);
    assert!((row.yield_ - row.free_population).abs() < 0.05);
    assert_eq!(sweep.table().rows.len(), 1);
}
