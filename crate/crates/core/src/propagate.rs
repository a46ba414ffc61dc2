//! Time evolution in the one-excitation sector.
//!
//! Controlled dynamics use fixed-step classic RK4 with the pulses linearly
//! interpolated between grid nodes. Free dynamics use the exact
//! eigendecomposition, which also serves as the reference for the
//! integrator.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{require, Error, Result};
use crate::model::{ChainSpec, SingleExcHamiltonian, Side, StateVector};

/// Largest step the default grid will use.
pub const DEFAULT_MAX_DT: f64 = 0.01;
/// The default grid never has fewer steps than this.
pub const DEFAULT_MIN_STEPS: usize = 2000;
/// Coarse scan step used by [`free_peak`] when the caller has no preference.
pub const DEFAULT_COARSE_DT: f64 = 0.05;
/// Tolerance used when checking that an input state is normalized.
pub const NORM_TOLERANCE: f64 = 1e-8;

const PEAK_RESOLUTION: f64 = 1e-7;
/// Refined peaks closer than this in population are treated as equal.
const PEAK_TIE: f64 = 1e-9;

/// Uniform time grid on `[0, T]` with `n_steps` intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_final: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, n_steps: usize) -> Result<Self> {
        require(t_final.is_finite() && t_final > 0.0, "T", "finite and > 0", t_final)?;
        require(n_steps >= 1, "n_steps", ">= 1", n_steps as f64)?;
        Ok(Self { t_final, n_steps })
    }

    /// Smallest uniform grid whose step does not exceed `max_dt`.
    pub fn with_max_dt(t_final: f64, max_dt: f64) -> Result<Self> {
        require(max_dt.is_finite() && max_dt > 0.0, "dt", "finite and > 0", max_dt)?;
        require(t_final.is_finite() && t_final > 0.0, "T", "finite and > 0", t_final)?;
        let n = (t_final / max_dt - 1e-9).ceil().max(1.0) as usize;
        Self::new(t_final, n)
    }

    /// Default resolution: `dt = min(0.01, T/2000)`.
    pub fn with_default_dt(t_final: f64) -> Result<Self> {
        require(t_final.is_finite() && t_final > 0.0, "T", "finite and > 0", t_final)?;
        Self::with_max_dt(t_final, DEFAULT_MAX_DT.min(t_final / DEFAULT_MIN_STEPS as f64))
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.t_final
        } else {
            k as f64 * self.dt()
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_steps).map(|k| self.time(k))
    }
}

/// A control field sampled at the nodes of a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl Pulse {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::LengthMismatch {
                expected: grid.n_nodes(),
                actual: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: TimeGrid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.n_nodes()],
        }
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid,
            values: grid.times().map(f).collect(),
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Linear interpolation between nodes; clamped outside `[0, T]`.
    pub fn value_at(&self, t: f64) -> f64 {
        let dt = self.grid.dt();
        let x = (t / dt).clamp(0.0, self.grid.n_steps as f64);
        let k = (x.floor() as usize).min(self.grid.n_steps - 1);
        let w = x - k as f64;
        self.values[k] * (1.0 - w) + self.values[k + 1] * w
    }

    /// `∫ F² dt` by the trapezoidal rule on the node samples.
    pub fn fluence(&self) -> f64 {
        let sq: Vec<f64> = self.values.iter().map(|v| v * v).collect();
        trapezoid(&sq, self.grid.dt())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `t -> F(T − t)` on the same grid.
    pub fn reversed(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self {
            grid: self.grid,
            values,
        }
    }

    /// Stretches the pulse onto `grid`: the new pulse at `t` is the old one at
    /// `t · T_old / T_new`.
    pub fn rescaled(&self, grid: TimeGrid) -> Self {
        let scale = self.grid.t_final / grid.t_final;
        Self::from_fn(grid, |t| self.value_at(t * scale))
    }
}

pub(crate) fn trapezoid(samples: &[f64], dt: f64) -> f64 {
    match samples.len() {
        0 | 1 => 0.0,
        n => dt * (samples[1..n - 1].iter().sum::<f64>() + 0.5 * (samples[0] + samples[n - 1])),
    }
}

/// States at every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    states: Vec<StateVector>,
}

impl Trajectory {
    /// Wraps externally computed node states.
    pub fn from_states(grid: TimeGrid, states: Vec<StateVector>) -> Result<Self> {
        if states.len() != grid.n_nodes() {
            return Err(Error::LengthMismatch {
                expected: grid.n_nodes(),
                actual: states.len(),
            });
        }
        Ok(Self { grid, states })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn initial(&self) -> &StateVector {
        &self.states[0]
    }

    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("trajectory has at least one node")
    }

    /// Receiver population `|c_N(t)|²` at every node.
    pub fn target_populations(&self) -> Vec<f64> {
        self.states.iter().map(target_population).collect()
    }

    /// `‖Ψ(t)‖ − 1` at every node.
    pub fn norm_errors(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.norm() - 1.0).collect()
    }

    pub fn max_norm_error(&self) -> f64 {
        self.norm_errors().into_iter().fold(0.0, |m, e| m.max(e.abs()))
    }
}

/// Population of the last site.
pub fn target_population(state: &StateVector) -> f64 {
    state.population(state.len() - 1)
}

/// `e^{−iHt} ψ₀` through the full eigendecomposition of `H`.
pub fn evolve_eigen(h: &SingleExcHamiltonian, psi0: &StateVector, t: f64) -> Result<StateVector> {
    let n = h.n_sites();
    if psi0.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: psi0.len(),
        });
    }
    let eig = h.eigen();
    let v = &eig.eigenvectors;
    let psi = psi0.amplitudes();
    let mut out = vec![C64::new(0.0, 0.0); n];
    for k in 0..n {
        let proj: C64 = (0..n).map(|i| psi[i] * v[(i, k)]).sum();
        let c = proj * C64::from_polar(1.0, -eig.eigenvalues[k] * t);
        for (i, o) in out.iter_mut().enumerate() {
            *o += c * v[(i, k)];
        }
    }
    Ok(StateVector::new(out))
}

/// Drift plus the (optional) boundary controls, applied as `H(t)ψ` with the
/// controlled bonds shifted by `−F(t)` and `−G(t)`.
struct Generator<'a> {
    drift: &'a [f64],
    left: Option<&'a [f64]>,
    right: Option<&'a [f64]>,
    left_bond: usize,
    right_bond: usize,
    work: Vec<f64>,
}

impl<'a> Generator<'a> {
    fn new(h0: &'a SingleExcHamiltonian, left: Option<&'a Pulse>, right: Option<&'a Pulse>) -> Self {
        let n = h0.n_sites();
        Self {
            drift: h0.off_diagonal(),
            left: left.map(|p| p.values()),
            right: right.map(|p| p.values()),
            left_bond: Side::Left.bond(n),
            right_bond: Side::Right.bond(n),
            work: h0.off_diagonal().to_vec(),
        }
    }

    /// Loads the bond couplings at the interpolation point `w ∈ [0,1]`
    /// between nodes `k` and `k+1`.
    fn load(&mut self, k: usize, w: f64) {
        let lerp = |v: &[f64]| {
            if w == 0.0 {
                v[k]
            } else if w == 1.0 {
                v[k + 1]
            } else {
                v[k] * (1.0 - w) + v[k + 1] * w
            }
        };
        self.work[self.left_bond] = self.drift[self.left_bond];
        self.work[self.right_bond] = self.drift[self.right_bond];
        if let Some(f) = self.left {
            self.work[self.left_bond] -= lerp(f);
        }
        if let Some(g) = self.right {
            self.work[self.right_bond] -= lerp(g);
        }
    }

    /// `out = −i·s·H·psi`, with `s` the signed step.
    fn deriv(&self, psi: &[C64], out: &mut [C64], step: f64) {
        let n = psi.len();
        let h = &self.work;
        let mi = C64::new(0.0, -step);
        out[0] = mi * (h[0] * psi[1]);
        for i in 1..n - 1 {
            out[i] = mi * (h[i - 1] * psi[i - 1] + h[i] * psi[i + 1]);
        }
        out[n - 1] = mi * (h[n - 2] * psi[n - 2]);
    }
}

struct Rk4 {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); n];
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }

    /// Advances `psi` across interval `k` (between nodes k and k+1) with
    /// signed step `step`: forward when positive, backward when negative.
    fn step(&mut self, gen: &mut Generator<'_>, k: usize, step: f64, psi: &mut [C64]) {
        let (w_start, w_end) = if step > 0.0 { (0.0, 1.0) } else { (1.0, 0.0) };
        gen.load(k, w_start);
        gen.deriv(psi, &mut self.k1, step);
        gen.load(k, 0.5);
        for ((t, p), k1) in self.tmp.iter_mut().zip(psi.iter()).zip(&self.k1) {
            *t = p + 0.5 * k1;
        }
        gen.deriv(&self.tmp, &mut self.k2, step);
        for ((t, p), k2) in self.tmp.iter_mut().zip(psi.iter()).zip(&self.k2) {
            *t = p + 0.5 * k2;
        }
        gen.deriv(&self.tmp, &mut self.k3, step);
        gen.load(k, w_end);
        for ((t, p), k3) in self.tmp.iter_mut().zip(psi.iter()).zip(&self.k3) {
            *t = p + k3;
        }
        gen.deriv(&self.tmp, &mut self.k4, step);
        for (i, p) in psi.iter_mut().enumerate() {
            *p += (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]) / 6.0;
        }
    }
}

fn check_inputs(
    h0: &SingleExcHamiltonian,
    left: Option<&Pulse>,
    right: Option<&Pulse>,
    state: &StateVector,
    grid: &TimeGrid,
) -> Result<()> {
    if state.len() != h0.n_sites() {
        return Err(Error::LengthMismatch {
            expected: h0.n_sites(),
            actual: state.len(),
        });
    }
    for p in [left, right].into_iter().flatten() {
        if p.grid() != grid {
            return Err(Error::GridMismatch);
        }
    }
    Ok(())
}

/// Integrates `i dΨ/dt = [H₀ − ĥ_L F(t) − ĥ_R G(t)] Ψ` forward over `grid`,
/// storing Ψ at every node. Missing pulses are identically zero.
pub fn evolve_controlled(
    h0: &SingleExcHamiltonian,
    left: Option<&Pulse>,
    right: Option<&Pulse>,
    psi0: &StateVector,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    check_inputs(h0, left, right, psi0, grid)?;
    let norm = psi0.norm();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::NotNormalized(norm));
    }
    let mut gen = Generator::new(h0, left, right);
    let mut rk = Rk4::new(h0.n_sites());
    let dt = grid.dt();
    let mut psi = psi0.amplitudes().to_vec();
    let mut states = Vec::with_capacity(grid.n_nodes());
    states.push(psi0.clone());
    for k in 0..grid.n_steps() {
        rk.step(&mut gen, k, dt, &mut psi);
        states.push(StateVector::new(psi.clone()));
    }
    let last = states.last().expect("non-empty");
    if !last.is_finite() {
        return Err(Error::NonFinite("forward propagation".into()));
    }
    Ok(Trajectory {
        grid: *grid,
        states,
    })
}

/// Integrates the same equation backward from `state_at_t` (given at the
/// final node) down to `t = 0`. The returned states are indexed by node, so
/// `result[grid.n_steps()]` is the input. No normalization is required.
pub fn evolve_backward(
    h0: &SingleExcHamiltonian,
    left: Option<&Pulse>,
    right: Option<&Pulse>,
    state_at_t: &StateVector,
    grid: &TimeGrid,
) -> Result<Vec<StateVector>> {
    check_inputs(h0, left, right, state_at_t, grid)?;
    let mut gen = Generator::new(h0, left, right);
    let mut rk = Rk4::new(h0.n_sites());
    let dt = grid.dt();
    let mut psi = state_at_t.amplitudes().to_vec();
    let mut states = vec![StateVector::zeros(0); grid.n_nodes()];
    states[grid.n_steps()] = state_at_t.clone();
    for k in (0..grid.n_steps()).rev() {
        rk.step(&mut gen, k, -dt, &mut psi);
        states[k] = StateVector::new(psi.clone());
    }
    if !states[0].is_finite() {
        return Err(Error::NonFinite("backward propagation".into()));
    }
    Ok(states)
}

/// Closed-form receiver amplitude of free evolution,
/// `c_N(t) = Σ_k v_k(N) ⟨v_k|ψ₀⟩ e^{−iE_k t}`. For `ψ₀ = |1⟩` the weights are
/// the real products `v_k(N) v_k(1)`.
#[derive(Debug, Clone)]
pub struct FreeTransfer {
    energies: Vec<f64>,
    weights: Vec<C64>,
}

impl FreeTransfer {
    /// Transfer from site 1.
    pub fn new(h: &SingleExcHamiltonian) -> Self {
        Self::from_state(h, &StateVector::site(h.n_sites(), 0))
    }

    /// Receiver amplitude starting from an arbitrary state of matching size.
    pub fn from_state(h: &SingleExcHamiltonian, psi0: &StateVector) -> Self {
        let eig = h.eigen();
        let n = h.n_sites();
        let weights = (0..n)
            .map(|k| {
                let proj: C64 = (0..n).map(|i| psi0.amplitudes()[i] * eig.eigenvectors[(i, k)]).sum();
                proj * eig.eigenvectors[(n - 1, k)]
            })
            .collect();
        Self {
            energies: eig.eigenvalues.iter().copied().collect(),
            weights,
        }
    }

    pub fn amplitude(&self, t: f64) -> C64 {
        self.energies
            .iter()
            .zip(&self.weights)
            .map(|(&e, &w)| w * C64::from_polar(1.0, -e * t))
            .sum()
    }

    pub fn population(&self, t: f64) -> f64 {
        self.amplitude(t).norm_sqr()
    }

    /// Global maximum of the population over `[0, t_max]`. Every local
    /// maximum of a coarse scan is refined by golden-section search; maxima
    /// within `PEAK_TIE` of the best count as ties and the earliest wins.
    pub fn peak(&self, t_max: f64, coarse_dt: f64) -> Result<FreePeak> {
        require(t_max.is_finite() && t_max > 0.0, "t_max", "finite and > 0", t_max)?;
        require(
            coarse_dt.is_finite() && coarse_dt > 0.0,
            "coarse_dt",
            "finite and > 0",
            coarse_dt,
        )?;
        let n_coarse = (t_max / coarse_dt).ceil() as usize;
        let grid = TimeGrid::new(t_max, n_coarse.max(1))?;
        let dt = grid.dt();
        let samples: Vec<f64> = grid.times().map(|t| self.population(t)).collect();
        let last = samples.len() - 1;
        let refined: Vec<(f64, f64)> = (0..=last)
            .filter(|&k| (k == 0 || samples[k] >= samples[k - 1]) && (k == last || samples[k] >= samples[k + 1]))
            .map(|k| {
                let t0 = grid.time(k);
                let (t, p) = golden_max(
                    |t| self.population(t),
                    (t0 - dt).max(0.0),
                    (t0 + dt).min(t_max),
                    PEAK_RESOLUTION,
                );
                if p >= samples[k] {
                    (t, p)
                } else {
                    (t0, samples[k])
                }
            })
            .collect();
        let best = refined.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
        let &(t_peak, p_peak) = refined
            .iter()
            .find(|r| r.1 >= best - PEAK_TIE)
            .expect("a coarse scan always has a local maximum");
        Ok(FreePeak {
            t_peak,
            p_peak,
            at_window_edge: t_max - t_peak < dt,
        })
    }
}

/// Location and height of the free-evolution transfer maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreePeak {
    pub t_peak: f64,
    pub p_peak: f64,
    /// The maximum sits within one coarse step of `t_max`, so a larger
    /// window may find a different peak.
    pub at_window_edge: bool,
}

/// Global maximum of the free receiver population over `[0, t_max]`.
pub fn free_peak(spec: &ChainSpec, t_max: f64, coarse_dt: f64) -> Result<FreePeak> {
    free_peak_of(&spec.hamiltonian(), t_max, coarse_dt)
}

/// [`free_peak`] for an arbitrary (possibly disordered) Hamiltonian.
pub fn free_peak_of(h: &SingleExcHamiltonian, t_max: f64, coarse_dt: f64) -> Result<FreePeak> {
    FreeTransfer::new(h).peak(t_max, coarse_dt)
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    (t, f(t))
}

/// Best boundary coupling on a grid, judged by the free-evolution peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaOptimum {
    pub alpha: f64,
    pub peak: FreePeak,
}

/// Scans `alpha_grid` and returns the maximizer of the free peak population.
/// Values within 1e-12 count as ties and go to the smaller α.
pub fn optimal_alpha(n_sites: usize, alpha_grid: &[f64], t_max: f64) -> Result<AlphaOptimum> {
    optimal_alpha_with(n_sites, alpha_grid, t_max, DEFAULT_COARSE_DT)
}

pub fn optimal_alpha_with(
    n_sites: usize,
    alpha_grid: &[f64],
    t_max: f64,
    coarse_dt: f64,
) -> Result<AlphaOptimum> {
    if alpha_grid.is_empty() {
        return Err(Error::LengthMismatch {
            expected: 1,
            actual: 0,
        });
    }
    let mut sorted = alpha_grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best: Option<AlphaOptimum> = None;
    for alpha in sorted {
        let spec = ChainSpec::new(n_sites, alpha)?;
        let peak = free_peak(&spec, t_max, coarse_dt)?;
        if best.map_or(true, |b| peak.p_peak > b.peak.p_peak + 1e-12) {
            best = Some(AlphaOptimum { alpha, peak });
        }
    }
    Ok(best.expect("non-empty grid"))
}

/// Search window that contains the first arrival of the excitation at the
/// receiver (group velocity ≈ 2J) and excludes late revivals.
pub fn first_arrival_window(n_sites: usize) -> f64 {
    1.5 * n_sites as f64
}

/// The standard α grid used when α is resolved automatically:
/// 0.01, 0.02, …, 1.00.
pub fn default_alpha_grid() -> Vec<f64> {
    (1..=100).map(|k| k as f64 / 100.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn default_grid_resolution() {
        let g = TimeGrid::with_default_dt(18.0).unwrap();
        assert!(g.dt() <= 0.01 + 1e-15);
        assert_eq!(g.n_steps(), 2000);
        let g = TimeGrid::with_default_dt(40.0).unwrap();
        assert_eq!(g.n_steps(), 4000);
        let g = TimeGrid::with_default_dt(1.0).unwrap();
        assert_eq!(g.n_steps(), 2000);
        assert!(TimeGrid::new(0.0, 10).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
        assert_eq!(g.time(g.n_steps()), 1.0);
    }

    #[test]
    fn pulse_fluence_and_interpolation() {
        let g = TimeGrid::new(2.0, 20).unwrap();
        assert_relative_eq!(Pulse::constant(g, 1.0).fluence(), 2.0, epsilon = 1e-14);
        assert_eq!(Pulse::zeros(g).fluence(), 0.0);
        let p = Pulse::from_fn(g, |t| 3.0 * t);
        assert_relative_eq!(p.value_at(0.55), 1.65, epsilon = 1e-12);
        assert_relative_eq!(p.value_at(2.0), 6.0, epsilon = 1e-12);
        assert_relative_eq!(p.reversed().value_at(0.5), 4.5, epsilon = 1e-12);
        assert!(Pulse::new(g, vec![0.0; 3]).is_err());
    }

    #[test]
    fn rescaling_stretches_time() {
        let g1 = TimeGrid::new(1.0, 100).unwrap();
        let g2 = TimeGrid::new(2.0, 200).unwrap();
        let p = Pulse::from_fn(g1, |t| t * t);
        let q = p.rescaled(g2);
        assert_relative_eq!(q.value_at(1.0), 0.25, epsilon = 1e-4);
        assert_relative_eq!(q.value_at(2.0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn target_population_examples() {
        assert_eq!(target_population(&StateVector::site(5, 0)), 0.0);
        assert_eq!(target_population(&StateVector::site(5, 4)), 1.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = StateVector::zeros(5);
        v.amplitudes_mut()[0] = C64::new(s, 0.0);
        v.amplitudes_mut()[4] = C64::new(s, 0.0);
        assert_relative_eq!(target_population(&v), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn eigen_evolution_identity_and_rabi() {
        let h = ChainSpec::new(6, 0.4).unwrap().hamiltonian();
        let psi = StateVector::site(6, 0);
        let out = evolve_eigen(&h, &psi, 0.0).unwrap();
        for (a, b) in out.amplitudes().iter().zip(psi.amplitudes()) {
            assert!((a - b).norm() < 1e-14);
        }
        let h2 = ChainSpec::new(2, 1.0).unwrap().hamiltonian();
        let out = evolve_eigen(&h2, &StateVector::site(2, 0), FRAC_PI_2).unwrap();
        assert_relative_eq!(target_population(&out), 1.0, epsilon = 1e-14);
        assert!(evolve_eigen(&h2, &StateVector::site(3, 0), 1.0).is_err());
    }

    #[test]
    fn controlled_rejects_bad_inputs() {
        let h = ChainSpec::new(4, 0.5).unwrap().hamiltonian();
        let g = TimeGrid::new(1.0, 100).unwrap();
        let other = TimeGrid::new(1.0, 50).unwrap();
        let psi = StateVector::site(4, 0);
        let p = Pulse::zeros(other);
        assert_eq!(
            evolve_controlled(&h, Some(&p), None, &psi, &g),
            Err(Error::GridMismatch)
        );
        let mut bad = psi.clone();
        bad.amplitudes_mut()[1] = C64::new(0.5, 0.0);
        assert!(matches!(
            evolve_controlled(&h, None, None, &bad, &g),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn two_site_peak_is_rabi() {
        let spec = ChainSpec::new(2, 1.0).unwrap();
        let pk = free_peak(&spec, 8.0, DEFAULT_COARSE_DT).unwrap();
        assert_relative_eq!(pk.t_peak, FRAC_PI_2, epsilon = 1e-4);
        assert_relative_eq!(pk.p_peak, 1.0, epsilon = 1e-12);
        assert!(!pk.at_window_edge);
    }

    #[test]
    fn alpha_ties_go_to_smaller_value() {
        let opt = optimal_alpha(2, &[1.0, 0.5, 0.25], 8.0).unwrap();
        assert_eq!(opt.alpha, 0.25);
        assert_relative_eq!(opt.peak.p_peak, 1.0, epsilon = 1e-12);
        let opt = optimal_alpha(5, &[0.0], 20.0).unwrap();
        assert_eq!(opt.alpha, 0.0);
        assert!(opt.peak.p_peak < 1e-20);
        assert!(optimal_alpha(5, &[], 20.0).is_err());
    }

    #[test]
    fn golden_section_finds_parabola_top() {
        let (t, f) = golden_max(|x| 1.0 - (x - 0.3).powi(2), 0.0, 1.0, 1e-9);
        assert_relative_eq!(t, 0.3, epsilon = 1e-8);
        assert_relative_eq!(f, 1.0, epsilon = 1e-15);
    }
}
