//! Experiment dispatch.

use serde_json::json;
use spinchain_core::experiments::{
    alpha_sweep, disorder_average, length_scaling, solve_multistart, time_sweep, DisorderSpec, DisorderStudy,
    Evaluation, Protocol, Solved, SweepMode, SweepTable,
};
use spinchain_core::oct::{reduced_fluence, stationarity_defect, symmetry_defect};
use spinchain_core::propagate::{evolve_controlled, FreeTransfer};
use spinchain_core::{Actuators, StateVector, TimeGrid};

use crate::config::{EvaluationChoice, Experiment, ProtocolChoice, Resolved};
use crate::error::CliError;
use crate::output::{convergence_table, pulses_table, trajectory_table};

/// What a run produced, before anything is written.
pub struct RunOutput {
    pub results: serde_json::Value,
    pub tables: Vec<(&'static str, SweepTable)>,
    pub summary: String,
}

pub fn run(r: &Resolved) -> Result<RunOutput, CliError> {
    match r.experiment {
        Experiment::FreeEvolve => free_evolve(r),
        Experiment::Optimize => optimize(r),
        Experiment::TimeSweep => run_time_sweep(r),
        Experiment::AlphaSweep => run_alpha_sweep(r),
        Experiment::DisorderSweep => disorder_sweep(r),
        Experiment::LengthScaling => run_length_scaling(r),
    }
}

fn free_evolve(r: &Resolved) -> Result<RunOutput, CliError> {
    let h = r.spec.hamiltonian();
    let peak = FreeTransfer::new(&h).peak(r.window, r.config.coarse_dt)?;
    let grid = match r.config.dt {
        Some(dt) => TimeGrid::with_max_dt(r.window, dt)?,
        None => TimeGrid::with_default_dt(r.window)?,
    };
    let traj = evolve_controlled(&h, None, None, &StateVector::site(r.spec.n_sites(), 0), &grid)?;
    Ok(RunOutput {
        results: json!({
            "t_peak": peak.t_peak,
            "p_peak": peak.p_peak,
            "at_window_edge": peak.at_window_edge,
            "max_norm_error": traj.max_norm_error(),
        }),
        tables: vec![("trajectory.csv", trajectory_table(&traj))],
        summary: format!(
            "N={} alpha={} P_peak={:.6} at T_peak={:.4}",
            r.spec.n_sites(),
            r.alpha,
            peak.p_peak,
            peak.t_peak
        ),
    })
}

fn solve(r: &Resolved, actuators: Actuators) -> Result<Solved, CliError> {
    Ok(solve_multistart(r.spec, r.t, actuators, &r.settings_for(actuators)?, None)?)
}

fn optimize(r: &Resolved) -> Result<RunOutput, CliError> {
    let actuators = r.actuators();
    let solved = solve(r, actuators)?;
    let res = &solved.result;
    let symmetry = match actuators {
        Actuators::Both => Some(symmetry_defect(&res.left_pulse, &res.right_pulse)?),
        Actuators::LeftOnly => None,
    };
    let free = FreeTransfer::new(&r.spec.hamiltonian()).population(r.t);
    Ok(RunOutput {
        results: json!({
            "yield": res.yield_,
            "free_population_at_t": free,
            "fluence_left": res.fluences.0,
            "fluence_right": res.fluences.1,
            "reduced_fluence": reduced_fluence(res),
            "j": res.best_j(),
            "converged": res.converged,
            "iterations": res.iterations,
            "rejected_steps": res.rejected_steps,
            "start": solved.start,
            "stationarity_defect": stationarity_defect(&solved.problem, res)?,
            "symmetry_defect": symmetry,
            "max_norm_error": res.final_trajectory.max_norm_error(),
        }),
        tables: vec![
            ("pulses.csv", pulses_table(&res.left_pulse, &res.right_pulse)),
            ("trajectory.csv", trajectory_table(&res.final_trajectory)),
            ("convergence.csv", convergence_table(res)),
        ],
        summary: format!(
            "N={} alpha={} T={:.4} yield={:.6} fluence={:.4} converged={} iterations={}",
            r.spec.n_sites(),
            r.alpha,
            r.t,
            res.yield_,
            res.total_fluence(),
            res.converged,
            res.iterations
        ),
    })
}

fn run_time_sweep(r: &Resolved) -> Result<RunOutput, CliError> {
    let n = r.spec.n_sites() as f64;
    let ts: Vec<f64> = r.config.t_over_n.iter().map(|f| f * n).collect();
    let sweep = time_sweep(r.spec, &ts, r.actuators(), &r.settings()?)?;
    let best = sweep
        .rows
        .iter()
        .map(|row| row.yield_)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(RunOutput {
        results: json!({ "rows": sweep.rows }),
        tables: vec![("sweep.csv", sweep.table())],
        summary: format!("{} operation times, best yield {best:.6}", sweep.rows.len()),
    })
}

fn run_alpha_sweep(r: &Resolved) -> Result<RunOutput, CliError> {
    let mode = match r.protocol() {
        ProtocolChoice::Free => SweepMode::Free { t_max: r.window },
        ProtocolChoice::Left => SweepMode::OneActuator { t: r.t },
        ProtocolChoice::Both => SweepMode::TwoActuators { t: r.t },
    };
    let actuators = match r.protocol() {
        ProtocolChoice::Both => Actuators::Both,
        _ => Actuators::LeftOnly,
    };
    let disorder = r.amplitudes().first().map(|&amplitude| DisorderSpec {
        amplitude,
        realizations: r.config.realizations,
        master_seed: r.config.seed,
        scope: r.config.disorder_scope.into(),
    });
    let sweep = alpha_sweep(
        r.spec.n_sites(),
        &r.config.alphas,
        mode,
        disorder,
        &r.settings_for(actuators)?,
    )?;
    let best = sweep
        .rows
        .iter()
        .fold(&sweep.rows[0], |b, row| if row.clean_yield > b.clean_yield { row } else { b });
    let mut table = sweep.table();
    table.master_seed = disorder.map(|d| d.master_seed);
    Ok(RunOutput {
        results: json!({ "best_alpha": best.alpha, "best_clean_yield": best.clean_yield, "rows": sweep.rows }),
        tables: vec![("sweep.csv", table)],
        summary: format!(
            "{} couplings, best alpha={} with yield {:.6}",
            sweep.rows.len(),
            best.alpha,
            best.clean_yield
        ),
    })
}

fn disorder_sweep(r: &Resolved) -> Result<RunOutput, CliError> {
    let (protocol, solved) = match r.protocol() {
        ProtocolChoice::Free => (Protocol::Free { t: r.t }, None),
        choice => {
            let actuators = if choice == ProtocolChoice::Both {
                Actuators::Both
            } else {
                Actuators::LeftOnly
            };
            let solved = solve(r, actuators)?;
            (Protocol::from_result(&solved.result, actuators), Some(solved))
        }
    };
    let evaluation = match r.config.evaluation {
        EvaluationChoice::Fixed => Evaluation::AtFixedT,
        EvaluationChoice::Peak => Evaluation::AtPeak {
            window: r.window.max(r.t),
        },
    };
    let stats = disorder_average(&DisorderStudy {
        spec: r.spec,
        protocol,
        amplitudes: r.amplitudes().to_vec(),
        realizations: r.config.realizations,
        master_seed: r.config.seed,
        evaluation,
        scope: r.config.disorder_scope.into(),
    })?;
    let table = SweepTable {
        axis: "A".into(),
        columns: vec!["mean".into(), "std_error".into(), "realizations".into()],
        rows: stats
            .iter()
            .map(|s| vec![s.amplitude, s.mean, s.std_error, s.realizations as f64])
            .collect(),
        master_seed: Some(r.config.seed),
    };
    let mut tables = vec![("disorder.csv", table)];
    let mut results = json!({ "stats": stats });
    if let Some(s) = &solved {
        tables.push(("pulses.csv", pulses_table(&s.result.left_pulse, &s.result.right_pulse)));
        results["clean_yield"] = json!(s.result.yield_);
        results["converged"] = json!(s.result.converged);
    }
    Ok(RunOutput {
        results,
        tables,
        summary: stats
            .iter()
            .map(|s| format!("A={} <P>={:.5}±{:.5}", s.amplitude, s.mean, s.std_error))
            .collect::<Vec<_>>()
            .join("\n"),
    })
}

fn run_length_scaling(r: &Resolved) -> Result<RunOutput, CliError> {
    let ls = length_scaling(
        &r.config.lengths,
        r.actuators(),
        r.amplitudes(),
        r.config.realizations,
        r.config.seed,
        r.config.disorder_scope.into(),
        &r.settings()?,
    )?;
    let fit = ls.peak_time_fit();
    let min_yield = ls.rows.iter().map(|row| row.yield_).fold(f64::INFINITY, f64::min);
    Ok(RunOutput {
        results: json!({ "peak_time_fit": fit, "rows": ls.rows }),
        tables: vec![("sweep.csv", ls.table())],
        summary: format!(
            "{} lengths, min yield {min_yield:.6}, T_peak slope {:.4} (R2 {:.5})",
            ls.rows.len(),
            fit.slope,
            fit.r_squared
        ),
    })
}

/// Pre-run diagnostics and warnings for `validate`.
pub fn diagnostics(r: &Resolved) -> (Vec<String>, Vec<String>) {
    let n = r.spec.n_sites();
    let dt = r.config.dt.unwrap_or(spinchain_core::propagate::DEFAULT_MAX_DT);
    let grid = TimeGrid::with_max_dt(r.t, dt).ok();
    let steps = grid.map_or(0, |g| g.n_steps());
    let mut info = vec![
        format!("experiment: {}", r.experiment.name()),
        format!("N: {n}"),
        format!("alpha: {}", r.alpha),
        format!("T: {:.6}", r.t),
        format!("dt: {:.6}", grid.map_or(dt, |g| g.dt())),
        format!("steps: {steps}"),
        format!("penalties: alpha_L={} alpha_R={}", r.config.alpha_l.unwrap_or(0.0), r.config.alpha_r.unwrap_or(0.0)),
    ];
    // forward and backward sweep, four stages each, one tridiagonal product per stage
    let flops = 2 * steps * 4 * 8 * n;
    info.push(format!("cost per iteration: ~{flops} flops"));
    let mut warnings = vec![];
    let mut times = vec![r.t];
    if r.experiment == Experiment::TimeSweep {
        times = r.config.t_over_n.iter().map(|f| f * n as f64).collect();
    }
    for t in times {
        if t < 0.5 * n as f64 {
            warnings.push(format!(
                "T={t:.4} is below 0.5N: transfer is expected to fail below the speed limit"
            ));
        }
    }
    if let Some(dt) = r.config.dt {
        if dt > 0.01 {
            warnings.push(format!(
                "dt={dt} exceeds 0.01: agreement with the exact propagator is not guaranteed"
            ));
        }
    }
    (info, warnings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{resolve, RunConfig, Setting};

    #[test]
    fn free_evolve_reports_peak() {
        let r = resolve(RunConfig::default(), Experiment::FreeEvolve).unwrap();
        let out = run(&r).unwrap();
        let p = out.results["p_peak"].as_f64().unwrap();
        assert!((p - 0.976).abs() < 0.01);
        assert_eq!(out.tables[0].1.header(), vec!["t", "P_target", "norm_error"]);
    }

    #[test]
    fn default_config_has_no_warnings() {
        let r = resolve(RunConfig::default(), Experiment::Optimize).unwrap();
        assert!(diagnostics(&r).1.is_empty());
    }

    #[test]
    fn short_times_and_coarse_steps_warn() {
        let c = RunConfig {
            t: Setting::Value(4.0),
            dt: Some(0.05),
            ..RunConfig::default()
        };
        let (_, warnings) = diagnostics(&resolve(c, Experiment::Optimize).unwrap());
        assert_eq!(warnings.len(), 2);
    }
}
