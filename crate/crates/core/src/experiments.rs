//! Disorder averages and parameter sweeps built on top of [`crate::oct`].
//!
//! Pulses are always designed on the clean chain and then replayed, unchanged,
//! on disordered copies of it. Realization `m` of a study with master seed `s`
//! uses the seed `realization_seed(s, m)` for every amplitude, so results do
//! not depend on evaluation order or thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{require, Result};
use crate::model::{apply_disorder_in, ChainSpec, DisorderRealization, DisorderScope, SingleExcHamiltonian, StateVector};
use crate::oct::{
    optimize, symmetry_defect, Actuators, InitialGuess, OctProblem, OctResult, DEFAULT_MAX_ITERS, DEFAULT_MIXING,
    DEFAULT_PENALTY, DEFAULT_STATIONARITY_TOL, DEFAULT_TOL,
};
use crate::propagate::{
    default_alpha_grid, evolve_controlled, first_arrival_window, optimal_alpha, target_population, FreePeak,
    FreeTransfer, Pulse, TimeGrid, DEFAULT_COARSE_DT,
};

pub const DEFAULT_REALIZATIONS: usize = 2000;

/// Penalty per site for single-actuator runs; see [`OctSettings::one_actuator`].
pub const ONE_ACTUATOR_PENALTY_PER_SITE: f64 = 0.005;

pub const TWO_ACTUATOR_PENALTY: f64 = 0.003;

/// Optimizer configuration shared by every run of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OctSettings {
    pub alpha_l: f64,
    pub alpha_r: f64,
    pub mixing: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub stationarity_tol: f64,
    /// Overrides the default step `min(0.01, T/2000)`.
    pub max_dt: Option<f64>,
    /// Cold starts tried at every point; the run with the largest `J` wins.
    pub guesses: Vec<InitialGuess>,
}

impl Default for OctSettings {
    fn default() -> Self {
        Self {
            alpha_l: DEFAULT_PENALTY,
            alpha_r: DEFAULT_PENALTY,
            mixing: DEFAULT_MIXING,
            tol: DEFAULT_TOL,
            max_iters: DEFAULT_MAX_ITERS,
            stationarity_tol: DEFAULT_STATIONARITY_TOL,
            max_dt: None,
            guesses: vec![InitialGuess::Zero, InitialGuess::default()],
        }
    }
}

impl OctSettings {
    pub fn with_penalty(penalty: f64) -> Self {
        Self {
            alpha_l: penalty,
            alpha_r: penalty,
            ..Self::default()
        }
    }

    /// Single-actuator preset: penalty `0.005·N`, which keeps the fluence per
    /// unit length roughly fixed across chain lengths.
    pub fn one_actuator(n_sites: usize) -> Self {
        Self::with_penalty(ONE_ACTUATOR_PENALTY_PER_SITE * n_sites as f64)
    }

    /// Two-actuator preset: weak penalty, zero initial pulses.
    pub fn two_actuators() -> Self {
        Self {
            guesses: vec![InitialGuess::Zero],
            ..Self::with_penalty(TWO_ACTUATOR_PENALTY)
        }
    }

    pub fn for_actuators(actuators: Actuators, n_sites: usize) -> Self {
        match actuators {
            Actuators::LeftOnly => Self::one_actuator(n_sites),
            Actuators::Both => Self::two_actuators(),
        }
    }

    pub fn grid(&self, t_final: f64) -> Result<TimeGrid> {
        match self.max_dt {
            Some(dt) => TimeGrid::with_max_dt(t_final, dt),
            None => TimeGrid::with_default_dt(t_final),
        }
    }

    pub fn problem(&self, spec: ChainSpec, t_final: f64, actuators: Actuators, guess: InitialGuess) -> Result<OctProblem> {
        Ok(OctProblem {
            spec,
            grid: self.grid(t_final)?,
            actuators,
            alpha_l: self.alpha_l,
            alpha_r: self.alpha_r,
            initial_guess: guess,
            max_iters: self.max_iters,
            tol: self.tol,
            mixing: self.mixing,
            stationarity_tol: self.stationarity_tol,
        })
    }
}

/// Where the winning run of a multi-start optimization came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Start {
    /// Index into [`OctSettings::guesses`].
    Cold(usize),
    Warm,
}

#[derive(Debug, Clone)]
pub struct Solved {
    pub problem: OctProblem,
    pub result: OctResult,
    pub start: Start,
}

/// Optimizes from every cold guess and, when given, from `warm` stretched to
/// `t_final`; keeps the run with the largest `J`. Earlier candidates win ties.
pub fn solve_multistart(
    spec: ChainSpec,
    t_final: f64,
    actuators: Actuators,
    settings: &OctSettings,
    warm: Option<&OctResult>,
) -> Result<Solved> {
    let mut starts: Vec<(Start, InitialGuess)> = settings
        .guesses
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, g)| (Start::Cold(i), g))
        .collect();
    if let Some(w) = warm {
        starts.push((
            Start::Warm,
            InitialGuess::WarmStart {
                left: w.left_pulse.clone(),
                right: w.right_pulse.clone(),
            },
        ));
    }
    if starts.is_empty() {
        starts.push((Start::Cold(0), InitialGuess::default()));
    }
    let mut best: Option<Solved> = None;
    for (start, guess) in starts {
        let problem = settings.problem(spec, t_final, actuators, guess)?;
        let result = optimize(&problem)?;
        if best
            .as_ref()
            .map_or(true, |b| result.best_j().total > b.result.best_j().total)
        {
            best = Some(Solved { problem, result, start });
        }
    }
    Ok(best.expect("at least one start"))
}

/// Boundary coupling maximizing the free first-arrival peak for `n_sites`,
/// searched on the 0.01…1.00 grid.
pub fn auto_alpha(n_sites: usize) -> Result<(f64, FreePeak)> {
    let opt = optimal_alpha(n_sites, &default_alpha_grid(), first_arrival_window(n_sites))?;
    Ok((opt.alpha, opt.peak))
}

/// How a transfer is carried out on a (possibly disordered) chain.
#[derive(Debug, Clone, PartialEq)]
pub enum Protocol {
    /// No control; the excitation evolves freely.
    Free { t: f64 },
    /// Fixed pulses designed on the clean chain.
    Controlled { left: Pulse, right: Option<Pulse> },
}

impl Protocol {
    pub fn from_result(result: &OctResult, actuators: Actuators) -> Self {
        Protocol::Controlled {
            left: result.left_pulse.clone(),
            right: (actuators == Actuators::Both).then(|| result.right_pulse.clone()),
        }
    }

    pub fn duration(&self) -> f64 {
        match self {
            Protocol::Free { t } => *t,
            Protocol::Controlled { left, .. } => left.grid().t_final(),
        }
    }
}

/// When the receiver population is read out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Evaluation {
    /// At the protocol's own duration.
    AtFixedT,
    /// Maximum over `[0, window]`; controls are off after the pulse ends.
    AtPeak { window: f64 },
}

/// Receiver population for one set of couplings.
pub fn transfer_yield(couplings: &[f64], protocol: &Protocol, evaluation: Evaluation) -> Result<f64> {
    let h = SingleExcHamiltonian::from_couplings(couplings)?;
    match (protocol, evaluation) {
        (Protocol::Free { t }, Evaluation::AtFixedT) => Ok(FreeTransfer::new(&h).population(*t)),
        (Protocol::Free { .. }, Evaluation::AtPeak { window }) => {
            Ok(FreeTransfer::new(&h).peak(window, DEFAULT_COARSE_DT)?.p_peak)
        }
        (Protocol::Controlled { left, right }, evaluation) => {
            let psi0 = StateVector::site(h.n_sites(), 0);
            let traj = evolve_controlled(&h, Some(left), right.as_ref(), &psi0, left.grid())?;
            match evaluation {
                Evaluation::AtFixedT => Ok(target_population(traj.final_state())),
                Evaluation::AtPeak { window } => {
                    let during = traj.target_populations().into_iter().fold(0.0, f64::max);
                    let remaining = window - left.grid().t_final();
                    if remaining > 0.0 {
                        let after = FreeTransfer::from_state(&h, traj.final_state()).peak(remaining, DEFAULT_COARSE_DT)?;
                        Ok(during.max(after.p_peak))
                    } else {
                        Ok(during)
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisorderStudy {
    pub spec: ChainSpec,
    pub protocol: Protocol,
    pub amplitudes: Vec<f64>,
    pub realizations: usize,
    pub master_seed: u64,
    pub evaluation: Evaluation,
    pub scope: DisorderScope,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderStats {
    pub amplitude: f64,
    pub mean: f64,
    /// Sample standard deviation over √M.
    pub std_error: f64,
    pub realizations: usize,
}

impl DisorderStats {
    /// `√(se₁² + se₂²)`.
    pub fn combined_error(&self, other: &DisorderStats) -> f64 {
        self.std_error.hypot(other.std_error)
    }
}

/// Receiver population of realization `index` at one amplitude.
pub fn realization_yield(study: &DisorderStudy, amplitude: f64, index: u64) -> Result<f64> {
    let clean = study.spec.couplings();
    let real = DisorderRealization::for_realization(clean.len(), amplitude, study.master_seed, index)?;
    transfer_yield(
        &apply_disorder_in(&clean, &real, study.scope)?,
        &study.protocol,
        study.evaluation,
    )
}

/// Mean and standard error of the receiver population over `M` realizations
/// for every amplitude. Realizations are evaluated in parallel and reduced in
/// index order.
pub fn disorder_average(study: &DisorderStudy) -> Result<Vec<DisorderStats>> {
    require(
        study.realizations >= 1,
        "realizations",
        ">= 1",
        study.realizations as f64,
    )?;
    study
        .amplitudes
        .iter()
        .map(|&amplitude| {
            require(
                amplitude.is_finite() && amplitude >= 0.0,
                "disorder amplitude",
                "finite and >= 0",
                amplitude,
            )?;
            if amplitude == 0.0 {
                let y = transfer_yield(&study.spec.couplings(), &study.protocol, study.evaluation)?;
                return Ok(DisorderStats {
                    amplitude,
                    mean: y,
                    std_error: 0.0,
                    realizations: study.realizations,
                });
            }
            let yields = (0..study.realizations as u64)
                .into_par_iter()
                .map(|m| realization_yield(study, amplitude, m))
                .collect::<Result<Vec<f64>>>()?;
            let (mean, std_error) = mean_and_error(&yields);
            Ok(DisorderStats {
                amplitude,
                mean,
                std_error,
                realizations: study.realizations,
            })
        })
        .collect()
}

/// Sample mean and standard error of the mean.
pub fn mean_and_error(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Disorder parameters for sweeps that also report disordered yields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec {
    pub amplitude: f64,
    pub realizations: usize,
    pub master_seed: u64,
    pub scope: DisorderScope,
}

/// A plot-ready table: one axis column followed by value columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub axis: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub master_seed: Option<u64>,
}

impl SweepTable {
    pub fn header(&self) -> Vec<String> {
        std::iter::once(self.axis.clone())
            .chain(self.columns.iter().cloned())
            .collect()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header().iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn start_code(s: Start) -> f64 {
    match s {
        Start::Cold(i) => i as f64,
        Start::Warm => -1.0,
    }
}

// ---------------------------------------------------------------------------
// Operation-time sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSweepRow {
    pub t: f64,
    pub t_over_n: f64,
    pub yield_: f64,
    pub fluence_left: f64,
    pub fluence_right: f64,
    pub reduced_fluence: f64,
    /// Free receiver population at the same T.
    pub free_population: f64,
    pub converged: bool,
    pub iterations: usize,
    pub start: Start,
}

#[derive(Debug, Clone)]
pub struct TimeSweep {
    pub spec: ChainSpec,
    pub rows: Vec<TimeSweepRow>,
    pub results: Vec<OctResult>,
}

/// One optimization per operation time, in ascending T. Each point also
/// tries the previous point's pulses stretched to the new T.
pub fn time_sweep(spec: ChainSpec, t_grid: &[f64], actuators: Actuators, settings: &OctSettings) -> Result<TimeSweep> {
    let mut ts = t_grid.to_vec();
    ts.sort_by(f64::total_cmp);
    let free = FreeTransfer::new(&spec.hamiltonian());
    let n = spec.n_sites() as f64;
    let mut rows = Vec::with_capacity(ts.len());
    let mut results: Vec<OctResult> = Vec::with_capacity(ts.len());
    for &t in &ts {
        require(t.is_finite() && t > 0.0, "T", "finite and > 0", t)?;
        let solved = solve_multistart(spec, t, actuators, settings, results.last())?;
        let r = &solved.result;
        rows.push(TimeSweepRow {
            t,
            t_over_n: t / n,
            yield_: r.yield_,
            fluence_left: r.fluences.0,
            fluence_right: r.fluences.1,
            reduced_fluence: r.total_fluence() / t,
            free_population: free.population(t),
            converged: r.converged,
            iterations: r.iterations,
            start: solved.start,
        });
        results.push(solved.result);
    }
    Ok(TimeSweep { spec, rows, results })
}

impl TimeSweep {
    pub fn table(&self) -> SweepTable {
        SweepTable {
            axis: "T".into(),
            columns: [
                "T_over_N",
                "yield",
                "fluence_left",
                "fluence_right",
                "reduced_fluence",
                "free_population",
                "converged",
                "iterations",
                "start",
            ]
            .map(String::from)
            .to_vec(),
            rows: self
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.t,
                        r.t_over_n,
                        r.yield_,
                        r.fluence_left,
                        r.fluence_right,
                        r.reduced_fluence,
                        r.free_population,
                        flag(r.converged),
                        r.iterations as f64,
                        start_code(r.start),
                    ]
                })
                .collect(),
            master_seed: None,
        }
    }
}

// ---------------------------------------------------------------------------
// Boundary-coupling sweep

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SweepMode {
    /// Free evolution read out at its own peak within `[0, t_max]`.
    Free { t_max: f64 },
    OneActuator { t: f64 },
    TwoActuators { t: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSweepRow {
    pub alpha: f64,
    /// Operation time: the free peak time in free mode, else the fixed T.
    pub t: f64,
    pub clean_yield: f64,
    pub free_peak: FreePeak,
    pub fluence: f64,
    pub converged: bool,
    pub disorder: Option<DisorderStats>,
}

#[derive(Debug, Clone)]
pub struct AlphaSweep {
    pub n_sites: usize,
    pub mode: SweepMode,
    pub rows: Vec<AlphaSweepRow>,
}

/// Clean (and optionally disorder-averaged) yield per boundary coupling.
/// OCT modes re-optimize at every α, in ascending order, also trying the
/// neighbouring α's pulses as a warm start.
pub fn alpha_sweep(
    n_sites: usize,
    alpha_grid: &[f64],
    mode: SweepMode,
    disorder: Option<DisorderSpec>,
    settings: &OctSettings,
) -> Result<AlphaSweep> {
    require(!alpha_grid.is_empty(), "alpha grid length", ">= 1", 0.0)?;
    let mut alphas = alpha_grid.to_vec();
    alphas.sort_by(f64::total_cmp);
    let window = match mode {
        SweepMode::Free { t_max } => t_max,
        _ => first_arrival_window(n_sites),
    };
    let mut rows = Vec::with_capacity(alphas.len());
    let mut previous: Option<OctResult> = None;
    for alpha in alphas {
        let spec = ChainSpec::new(n_sites, alpha)?;
        let peak = FreeTransfer::new(&spec.hamiltonian()).peak(window, DEFAULT_COARSE_DT)?;
        let (t, clean_yield, fluence, converged, protocol) = match mode {
            SweepMode::Free { .. } => (
                peak.t_peak,
                peak.p_peak,
                0.0,
                true,
                Protocol::Free { t: peak.t_peak },
            ),
            SweepMode::OneActuator { t } | SweepMode::TwoActuators { t } => {
                let actuators = if matches!(mode, SweepMode::OneActuator { .. }) {
                    Actuators::LeftOnly
                } else {
                    Actuators::Both
                };
                let solved = solve_multistart(spec, t, actuators, settings, previous.as_ref())?;
                let protocol = Protocol::from_result(&solved.result, actuators);
                let out = (
                    t,
                    solved.result.yield_,
                    solved.result.total_fluence(),
                    solved.result.converged,
                    protocol,
                );
                previous = Some(solved.result);
                out
            }
        };
        let disorder = match disorder {
            Some(d) => Some(
                disorder_average(&DisorderStudy {
                    spec,
                    protocol,
                    amplitudes: vec![d.amplitude],
                    realizations: d.realizations,
                    master_seed: d.master_seed,
                    evaluation: Evaluation::AtFixedT,
                    scope: d.scope,
                })?[0],
            ),
            None => None,
        };
        rows.push(AlphaSweepRow {
            alpha,
            t,
            clean_yield,
            free_peak: peak,
            fluence,
            converged,
            disorder,
        });
    }
    Ok(AlphaSweep { n_sites, mode, rows })
}

impl AlphaSweep {
    pub fn table(&self) -> SweepTable {
        let nan = f64::NAN;
        SweepTable {
            axis: "alpha".into(),
            columns: [
                "T",
                "clean_yield",
                "free_T_peak",
                "free_P_peak",
                "peak_at_window_edge",
                "fluence",
                "converged",
                "disorder_A",
                "disorder_mean",
                "disorder_std_error",
            ]
            .map(String::from)
            .to_vec(),
            rows: self
                .rows
                .iter()
                .map(|r| {
                    let d = r.disorder;
                    vec![
                        r.alpha,
                        r.t,
                        r.clean_yield,
                        r.free_peak.t_peak,
                        r.free_peak.p_peak,
                        flag(r.free_peak.at_window_edge),
                        r.fluence,
                        flag(r.converged),
                        d.map_or(nan, |d| d.amplitude),
                        d.map_or(nan, |d| d.mean),
                        d.map_or(nan, |d| d.std_error),
                    ]
                })
                .collect(),
            master_seed: None,
        }
    }
}

// ---------------------------------------------------------------------------
// Chain-length scaling

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthRow {
    pub n_sites: usize,
    pub alpha: f64,
    pub t_peak: f64,
    pub free_p_peak: f64,
    pub yield_: f64,
    pub fluences: (f64, f64),
    pub symmetry_defect: f64,
    pub converged: bool,
    pub start: Start,
    pub oct_disorder: Vec<DisorderStats>,
    pub free_disorder: Vec<DisorderStats>,
}

#[derive(Debug, Clone)]
pub struct LengthScaling {
    pub actuators: Actuators,
    pub rows: Vec<LengthRow>,
    pub results: Vec<OctResult>,
    pub master_seed: u64,
}

/// Per chain length: optimal α, optimization at the free peak time, and
/// disorder averages of the optimized and free protocols. Each N starts from
/// the previous N's pulses; the cold guesses are used for the first N and
/// whenever the warm start does not converge.
pub fn length_scaling(
    n_grid: &[usize],
    actuators: Actuators,
    amplitudes: &[f64],
    realizations: usize,
    master_seed: u64,
    scope: DisorderScope,
    settings: &OctSettings,
) -> Result<LengthScaling> {
    let mut ns = n_grid.to_vec();
    ns.sort_unstable();
    let mut rows = Vec::with_capacity(ns.len());
    let mut results: Vec<OctResult> = Vec::with_capacity(ns.len());
    for n in ns {
        let (alpha, peak) = auto_alpha(n)?;
        let spec = ChainSpec::new(n, alpha)?;
        let t = peak.t_peak;
        let solved = match results.last() {
            Some(prev) => {
                let warm_only = OctSettings {
                    guesses: vec![],
                    ..settings.clone()
                };
                let problem = warm_only.problem(
                    spec,
                    t,
                    actuators,
                    InitialGuess::WarmStart {
                        left: prev.left_pulse.clone(),
                        right: prev.right_pulse.clone(),
                    },
                )?;
                let result = optimize(&problem)?;
                let warm = Solved {
                    problem,
                    result,
                    start: Start::Warm,
                };
                if warm.result.converged {
                    warm
                } else {
                    let cold = solve_multistart(spec, t, actuators, settings, None)?;
                    if cold.result.best_j().total > warm.result.best_j().total {
                        cold
                    } else {
                        warm
                    }
                }
            }
            None => solve_multistart(spec, t, actuators, settings, None)?,
        };
        let r = &solved.result;
        let oct_disorder = disorder_average(&DisorderStudy {
            spec,
            protocol: Protocol::from_result(r, actuators),
            amplitudes: amplitudes.to_vec(),
            realizations,
            master_seed,
            evaluation: Evaluation::AtFixedT,
            scope,
        })?;
        let free_disorder = disorder_average(&DisorderStudy {
            spec,
            protocol: Protocol::Free { t },
            amplitudes: amplitudes.to_vec(),
            realizations,
            master_seed,
            evaluation: Evaluation::AtFixedT,
            scope,
        })?;
        rows.push(LengthRow {
            n_sites: n,
            alpha,
            t_peak: t,
            free_p_peak: peak.p_peak,
            yield_: r.yield_,
            fluences: r.fluences,
            symmetry_defect: if actuators == Actuators::Both {
                symmetry_defect(&r.left_pulse, &r.right_pulse)?
            } else {
                f64::NAN
            },
            converged: r.converged,
            start: solved.start,
            oct_disorder,
            free_disorder,
        });
        results.push(solved.result);
    }
    Ok(LengthScaling {
        actuators,
        rows,
        results,
        master_seed,
    })
}

impl LengthScaling {
    pub fn table(&self) -> SweepTable {
        let mut columns: Vec<String> = [
            "alpha",
            "T_peak",
            "free_P_peak",
            "yield",
            "fluence_left",
            "fluence_right",
            "symmetry_defect",
            "converged",
            "start",
        ]
        .map(String::from)
        .to_vec();
        if let Some(first) = self.rows.first() {
            for d in &first.oct_disorder {
                columns.push(format!("oct_mean_A{}", d.amplitude));
                columns.push(format!("oct_se_A{}", d.amplitude));
                columns.push(format!("free_mean_A{}", d.amplitude));
                columns.push(format!("free_se_A{}", d.amplitude));
            }
        }
        SweepTable {
            axis: "N".into(),
            columns,
            rows: self
                .rows
                .iter()
                .map(|r| {
                    let mut v = vec![
                        r.n_sites as f64,
                        r.alpha,
                        r.t_peak,
                        r.free_p_peak,
                        r.yield_,
                        r.fluences.0,
                        r.fluences.1,
                        r.symmetry_defect,
                        flag(r.converged),
                        start_code(r.start),
                    ];
                    for (o, f) in r.oct_disorder.iter().zip(&r.free_disorder) {
                        v.extend([o.mean, o.std_error, f.mean, f.std_error]);
                    }
                    v
                })
                .collect(),
            master_seed: Some(self.master_seed),
        }
    }

    /// Least-squares line through (N, T_peak).
    pub fn peak_time_fit(&self) -> LinearFit {
        let x: Vec<f64> = self.rows.iter().map(|r| r.n_sites as f64).collect();
        let y: Vec<f64> = self.rows.iter().map(|r| r.t_peak).collect();
        linear_fit(&x, &y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared: if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) },
    }
}
