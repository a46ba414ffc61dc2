//! Forward-backward optimal control of the boundary couplings.
//!
//! The objective is `J = J₁ + J₂` with the yield `J₁ = |⟨φ_F|Ψ(T)⟩|²` and the
//! fluence penalty `J₂ = −α_L ∫F² − α_R ∫G²`. Each iteration propagates Ψ
//! forward from site 1 under the current pulses, seeds the costate
//! `χ(T) = |φ_F⟩⟨φ_F|Ψ(T)⟩`, propagates χ backward under the same pulses and
//! forms the candidate field `F(t) = −Im⟨χ(t)|ĥ_L|Ψ(t)⟩ / α_L` (likewise G
//! with ĥ_R). The pulses are then mixed with the candidate,
//! `F ← (1−η)F + η F_cand`, which leaves the fixed points of the control
//! equations unchanged.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{require, Error, Result};
use crate::model::{realization_seed, ChainSpec, ControlOperator, Side, SingleExcHamiltonian, StateVector};
use crate::propagate::{evolve_backward, evolve_controlled, Pulse, TimeGrid, Trajectory};

pub const DEFAULT_PENALTY: f64 = 0.05;
pub const DEFAULT_MIXING: f64 = 0.5;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITERS: usize = 5000;
pub const DEFAULT_GUESS_AMPLITUDE: f64 = 0.5;
pub const DEFAULT_STATIONARITY_TOL: f64 = 5e-4;
const MIN_MIXING: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Actuators {
    LeftOnly,
    Both,
}

/// Starting pulses for the iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitialGuess {
    Zero,
    Constant(f64),
    /// Independent uniform samples in `[−amplitude, amplitude]` at every node.
    Random { seed: u64, amplitude: f64 },
    /// `amplitude · sin(ω t)`.
    Monochromatic { amplitude: f64, omega: f64 },
    /// `amplitude · [sin(ω₁ t) + sin(ω₂ t)] / 2`.
    TwoHarmonic { amplitude: f64, omega1: f64, omega2: f64 },
    /// Pulses of a previous run, stretched onto the new operation time.
    WarmStart { left: Pulse, right: Pulse },
}

impl Default for InitialGuess {
    fn default() -> Self {
        InitialGuess::Constant(DEFAULT_GUESS_AMPLITUDE)
    }
}

impl InitialGuess {
    fn pulse(&self, grid: TimeGrid, side: Side) -> Pulse {
        match self {
            InitialGuess::Zero => Pulse::zeros(grid),
            InitialGuess::Constant(c) => Pulse::constant(grid, *c),
            InitialGuess::Random { seed, amplitude } => {
                let stream = match side {
                    Side::Left => 0,
                    Side::Right => 1,
                };
                let mut rng = ChaCha8Rng::seed_from_u64(realization_seed(*seed, stream));
                let a = amplitude.abs();
                let values = (0..grid.n_nodes())
                    .map(|_| if a == 0.0 { 0.0 } else { rng.gen_range(-a..=a) })
                    .collect();
                Pulse::new(grid, values).expect("length matches grid")
            }
            InitialGuess::Monochromatic { amplitude, omega } => {
                Pulse::from_fn(grid, |t| amplitude * (omega * t).sin())
            }
            InitialGuess::TwoHarmonic {
                amplitude,
                omega1,
                omega2,
            } => Pulse::from_fn(grid, |t| 0.5 * amplitude * ((omega1 * t).sin() + (omega2 * t).sin())),
            InitialGuess::WarmStart { left, right } => match side {
                Side::Left => left.rescaled(grid),
                Side::Right => right.rescaled(grid),
            },
        }
    }
}

/// Everything needed to run one optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OctProblem {
    pub spec: ChainSpec,
    pub grid: TimeGrid,
    pub actuators: Actuators,
    pub alpha_l: f64,
    pub alpha_r: f64,
    pub initial_guess: InitialGuess,
    pub max_iters: usize,
    pub tol: f64,
    pub mixing: f64,
    /// Relative L² gap between pulses and their candidates required for
    /// convergence, in addition to `|ΔJ| < tol`.
    pub stationarity_tol: f64,
}

impl OctProblem {
    /// Problem on the default time grid with default penalties and schedule.
    pub fn new(spec: ChainSpec, t_final: f64, actuators: Actuators) -> Result<Self> {
        Ok(Self {
            spec,
            grid: TimeGrid::with_default_dt(t_final)?,
            actuators,
            alpha_l: DEFAULT_PENALTY,
            alpha_r: DEFAULT_PENALTY,
            initial_guess: InitialGuess::default(),
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
            mixing: DEFAULT_MIXING,
            stationarity_tol: DEFAULT_STATIONARITY_TOL,
        })
    }

    pub fn validate(&self) -> Result<()> {
        require(
            self.alpha_l.is_finite() && self.alpha_l > 0.0,
            "alpha_l",
            "finite and > 0",
            self.alpha_l,
        )?;
        if self.actuators == Actuators::Both {
            require(
                self.alpha_r.is_finite() && self.alpha_r > 0.0,
                "alpha_r",
                "finite and > 0",
                self.alpha_r,
            )?;
        }
        require(
            self.mixing > 0.0 && self.mixing <= 1.0,
            "mixing",
            "in (0, 1]",
            self.mixing,
        )?;
        require(self.tol >= 0.0, "tol", ">= 0", self.tol)?;
        require(self.max_iters >= 1, "max_iters", ">= 1", self.max_iters as f64)?;
        require(
            self.stationarity_tol > 0.0,
            "stationarity_tol",
            "> 0",
            self.stationarity_tol,
        )?;
        Ok(())
    }

    pub fn initial_state(&self) -> StateVector {
        StateVector::site(self.spec.n_sites(), 0)
    }

    pub fn target_state(&self) -> StateVector {
        let n = self.spec.n_sites();
        StateVector::site(n, n - 1)
    }

    fn right_active(&self) -> bool {
        self.actuators == Actuators::Both
    }
}

/// Complex costate vector χ(t).
pub type CostateVector = StateVector;

/// One evaluation of the objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JValues {
    pub j1: f64,
    pub j2: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OctResult {
    pub left_pulse: Pulse,
    /// Identically zero for [`Actuators::LeftOnly`].
    pub right_pulse: Pulse,
    pub yield_: f64,
    pub fluences: (f64, f64),
    pub j_history: Vec<JValues>,
    /// Forward propagations performed, including rejected trial steps.
    pub iterations: usize,
    /// Trial steps that lowered `J` and were retried with less mixing.
    pub rejected_steps: usize,
    pub converged: bool,
    /// Index into `j_history` of the returned iterate.
    pub best_iteration: usize,
    pub final_trajectory: Trajectory,
}

impl OctResult {
    pub fn t_final(&self) -> f64 {
        self.left_pulse.grid().t_final()
    }

    pub fn total_fluence(&self) -> f64 {
        self.fluences.0 + self.fluences.1
    }

    pub fn best_j(&self) -> JValues {
        self.j_history[self.best_iteration]
    }
}

/// `(J₁, J₂, J₁+J₂)` for a trajectory driven by the given pulses.
pub fn functional(traj: &Trajectory, left: &Pulse, right: &Pulse, problem: &OctProblem) -> Result<JValues> {
    if traj.grid() != left.grid() || left.grid() != right.grid() {
        return Err(Error::GridMismatch);
    }
    let overlap = problem.target_state().inner(traj.final_state());
    let j1 = overlap.norm_sqr();
    let mut j2 = -problem.alpha_l * left.fluence();
    if problem.right_active() {
        j2 -= problem.alpha_r * right.fluence();
    }
    Ok(JValues { j1, j2, total: j1 + j2 })
}

/// `χ(T) = |φ_F⟩⟨φ_F|Ψ(T)⟩`.
pub fn terminal_costate(psi_t: &StateVector, target: &StateVector) -> CostateVector {
    let overlap = target.inner(psi_t);
    StateVector::new(target.amplitudes().iter().map(|a| a * overlap).collect())
}

/// `−Im⟨χ|ĥ|Ψ⟩ / penalty` at one node.
pub fn pulse_update(chi: &CostateVector, psi: &StateVector, op: &ControlOperator, penalty: f64) -> f64 {
    -op.matrix_element(chi.amplitudes(), psi.amplitudes()).im / penalty
}

/// Candidate pulse from the control equations at every node.
fn candidate(chis: &[StateVector], traj: &Trajectory, op: &ControlOperator, penalty: f64) -> Vec<f64> {
    chis.iter()
        .zip(traj.states())
        .map(|(c, p)| pulse_update(c, p, op, penalty))
        .collect()
}

/// Propagates the costate backward from `χ(T)` under the given pulses.
pub fn costate_trajectory(
    problem: &OctProblem,
    left: &Pulse,
    right: &Pulse,
    traj: &Trajectory,
) -> Result<Vec<CostateVector>> {
    let h0 = problem.spec.hamiltonian();
    let chi_t = terminal_costate(traj.final_state(), &problem.target_state());
    let right = problem.right_active().then_some(right);
    evolve_backward(&h0, Some(left), right, &chi_t, &problem.grid)
}

fn forward(h0: &SingleExcHamiltonian, problem: &OctProblem, left: &Pulse, right: &Pulse) -> Result<Trajectory> {
    let right = problem.right_active().then_some(right);
    evolve_controlled(h0, Some(left), right, &problem.initial_state(), &problem.grid)
}

/// Runs the forward-backward iteration and returns the best iterate seen.
///
/// A mixing step that lowers `J` is rejected and retried with half the
/// mixing factor; after each accepted step the factor grows by 25% up to
/// `problem.mixing`. The run converges once `|ΔJ| < tol` and the relative L²
/// gap between the pulses and their candidates is below
/// `problem.stationarity_tol`. `max_iters` bounds the number of forward
/// propagations.
pub fn optimize(problem: &OctProblem) -> Result<OctResult> {
    problem.validate()?;
    let n = problem.spec.n_sites();
    let grid = problem.grid;
    let h0 = problem.spec.hamiltonian();
    let op_l = ControlOperator::new(Side::Left, n)?;
    let op_r = ControlOperator::new(Side::Right, n)?;

    let mut left = problem.initial_guess.pulse(grid, Side::Left);
    let mut right = if problem.right_active() {
        problem.initial_guess.pulse(grid, Side::Right)
    } else {
        Pulse::zeros(grid)
    };
    if left.values().iter().chain(right.values()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial guess".into()));
    }

    let mut traj = forward(&h0, problem, &left, &right)?;
    let mut j = functional(&traj, &left, &right, problem)?;
    if !j.total.is_finite() {
        return Err(Error::NonFinite("objective of the initial guess".into()));
    }
    let mut history = vec![j];
    let mut evaluations = 1;
    let mut rejected = 0;
    let mut eta = problem.mixing;
    let mut converged = false;

    'outer: while evaluations < problem.max_iters {
        let chis = costate_trajectory(problem, &left, &right, &traj)?;
        let cand_l = candidate(&chis, &traj, &op_l, problem.alpha_l);
        let cand_r = problem
            .right_active()
            .then(|| candidate(&chis, &traj, &op_r, problem.alpha_r));

        let gap = relative_gap(&left, &cand_l, &right, cand_r.as_deref(), grid.dt());
        let delta = history.len() > 1 && (j.total - history[history.len() - 2].total).abs() < problem.tol;
        if delta && gap < problem.stationarity_tol {
            converged = true;
            break;
        }

        loop {
            let mut trial_l = left.clone();
            mix(trial_l.values_mut(), &cand_l, eta);
            let mut trial_r = right.clone();
            if let Some(c) = &cand_r {
                mix(trial_r.values_mut(), c, eta);
            }
            if trial_l.values().iter().chain(trial_r.values()).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("pulse update after {evaluations} propagations")));
            }
            let trial_traj = forward(&h0, problem, &trial_l, &trial_r)?;
            let trial_j = functional(&trial_traj, &trial_l, &trial_r, problem)?;
            evaluations += 1;
            if !trial_j.total.is_finite() {
                return Err(Error::NonFinite(format!("objective after {evaluations} propagations")));
            }
            if trial_j.total >= j.total {
                left = trial_l;
                right = trial_r;
                traj = trial_traj;
                j = trial_j;
                history.push(j);
                eta = (eta * 1.25).min(problem.mixing);
                break;
            }
            rejected += 1;
            eta *= 0.5;
            if eta < MIN_MIXING || evaluations >= problem.max_iters {
                break 'outer;
            }
        }
    }

    let fluences = (left.fluence(), if problem.right_active() { right.fluence() } else { 0.0 });
    Ok(OctResult {
        yield_: j.j1,
        fluences,
        iterations: evaluations,
        rejected_steps: rejected,
        best_iteration: history.len() - 1,
        j_history: history,
        converged,
        left_pulse: left,
        right_pulse: right,
        final_trajectory: traj,
    })
}

fn relative_gap(left: &Pulse, cand_l: &[f64], right: &Pulse, cand_r: Option<&[f64]>, dt: f64) -> f64 {
    let sq_diff = |a: &[f64], b: &[f64]| -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).collect();
        crate::propagate::trapezoid(&d, dt)
    };
    let mut num = sq_diff(left.values(), cand_l);
    let mut den = left.fluence();
    if let Some(c) = cand_r {
        num += sq_diff(right.values(), c);
        den += right.fluence();
    }
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

fn mix(current: &mut [f64], candidate: &[f64], eta: f64) {
    for (c, n) in current.iter_mut().zip(candidate) {
        *c = (1.0 - eta) * *c + eta * n;
    }
}

/// Total fluence divided by the operation time.
pub fn reduced_fluence(result: &OctResult) -> f64 {
    result.total_fluence() / result.t_final()
}

/// Relative L² mirror defect `‖G(t) − F(T−t)‖ / ‖F‖`.
pub fn symmetry_defect(left: &Pulse, right: &Pulse) -> Result<f64> {
    if left.grid() != right.grid() {
        return Err(Error::GridMismatch);
    }
    let mirrored = left.reversed();
    let diff: Vec<f64> = right
        .values()
        .iter()
        .zip(mirrored.values())
        .map(|(g, f)| (g - f).powi(2))
        .collect();
    let dt = left.grid().dt();
    let num = crate::propagate::trapezoid(&diff, dt).sqrt();
    let den = left.fluence().sqrt();
    Ok(if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    })
}

/// Relative L² distance between the returned pulses and the pulses the
/// control equations produce from the returned Ψ and its costate. Zero at an
/// exact fixed point.
pub fn stationarity_defect(problem: &OctProblem, result: &OctResult) -> Result<f64> {
    let traj = &result.final_trajectory;
    let chis = costate_trajectory(problem, &result.left_pulse, &result.right_pulse, traj)?;
    let n = problem.spec.n_sites();
    let cand_l = candidate(&chis, traj, &ControlOperator::new(Side::Left, n)?, problem.alpha_l);
    let cand_r = if problem.right_active() {
        Some(candidate(&chis, traj, &ControlOperator::new(Side::Right, n)?, problem.alpha_r))
    } else {
        None
    };
    Ok(relative_gap(
        &result.left_pulse,
        &cand_l,
        &result.right_pulse,
        cand_r.as_deref(),
        problem.grid.dt(),
    ))
}

/// Largest deviation of `⟨χ(t)|Ψ(t)⟩` from its value at `T`.
pub fn costate_overlap_drift(chis: &[CostateVector], traj: &Trajectory) -> f64 {
    let reference: C64 = chis.last().expect("non-empty").inner(traj.final_state());
    chis.iter()
        .zip(traj.states())
        .map(|(c, p)| (c.inner(p) - reference).norm())
        .fold(0.0, f64::max)
}
