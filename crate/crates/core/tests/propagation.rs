use num_complex::Complex64 as C64;
use proptest::prelude::*;
use spinchain_core::model::Side;
use spinchain_core::propagate::{evolve_backward, evolve_controlled, evolve_eigen, target_population, FreeTransfer};
use spinchain_core::{ChainSpec, Pulse, SingleExcHamiltonian, StateVector, TimeGrid};
use std::f64::consts::PI;

fn max_diff(a: &StateVector, b: &StateVector) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn smooth_pulse(grid: TimeGrid, coeffs: &[f64]) -> Pulse {
    let t_final = grid.t_final();
    Pulse::from_fn(grid, |t| {
        coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * ((k + 1) as f64 * PI * t / t_final).sin())
            .sum()
    })
}

/// `e^{−iHt}` applied after shifting both boundary bonds by constant fields.
fn static_oracle(h0: &SingleExcHamiltonian, f: f64, g: f64, psi: &StateVector, t: f64) -> StateVector {
    let h = h0.with_static_control(Side::Left, f).with_static_control(Side::Right, g);
    evolve_eigen(&h, psi, t).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn norm_is_conserved(
        n in 2usize..14,
        alpha in 0.1f64..1.5,
        t in 0.5f64..12.0,
        coeffs in prop::collection::vec(-1.5f64..1.5, 1..4),
    ) {
        let h = ChainSpec::new(n, alpha).unwrap().hamiltonian();
        let grid = TimeGrid::with_default_dt(t).unwrap();
        let f = smooth_pulse(grid, &coeffs);
        let g = f.reversed();
        let traj = evolve_controlled(&h, Some(&f), Some(&g), &StateVector::site(n, 0), &grid).unwrap();
        prop_assert!(traj.max_norm_error() < 1e-8);
    }

    #[test]
    fn constant_fields_match_eigen_oracle(
        n in 2usize..12,
        alpha in 0.1f64..1.5,
        f in -1.0f64..1.0,
        g in -1.0f64..1.0,
        t in 0.5f64..10.0,
    ) {
        let h = ChainSpec::new(n, alpha).unwrap().hamiltonian();
        let grid = TimeGrid::with_default_dt(t).unwrap();
        let psi0 = StateVector::site(n, 0);
        let traj = evolve_controlled(
            &h,
            Some(&Pulse::constant(grid, f)),
            Some(&Pulse::constant(grid, g)),
            &psi0,
            &grid,
        ).unwrap();
        let exact = static_oracle(&h, f, g, &psi0, t);
        prop_assert!(max_diff(traj.final_state(), &exact) < 1e-7);
    }

    #[test]
    fn piecewise_constant_fields_match_eigen_oracle(
        n in 3usize..10,
        levels in prop::collection::vec((-1.0f64..1.0, 0.3f64..3.0), 1..5),
    ) {
        let h = ChainSpec::new(n, 0.7).unwrap().hamiltonian();
        let mut rk = StateVector::site(n, 0);
        let mut exact = rk.clone();
        for (f, dt) in levels {
            let grid = TimeGrid::with_default_dt(dt).unwrap();
            let traj = evolve_controlled(&h, Some(&Pulse::constant(grid, f)), None, &rk, &grid).unwrap();
            rk = traj.final_state().clone();
            let norm = rk.norm();
            rk = StateVector::new(rk.amplitudes().iter().map(|c| c / norm).collect());
            exact = static_oracle(&h, f, 0.0, &exact, dt);
        }
        prop_assert!(max_diff(&rk, &exact) < 1e-7);
    }

    #[test]
    fn backward_undoes_forward(
        n in 2usize..10,
        t in 0.5f64..8.0,
        coeffs in prop::collection::vec(-1.0f64..1.0, 1..4),
    ) {
        let h = ChainSpec::new(n, 0.6).unwrap().hamiltonian();
        let grid = TimeGrid::with_default_dt(t).unwrap();
        let f = smooth_pulse(grid, &coeffs);
        let psi0 = StateVector::site(n, 0);
        let traj = evolve_controlled(&h, Some(&f), None, &psi0, &grid).unwrap();
        let back = evolve_backward(&h, Some(&f), None, traj.final_state(), &grid).unwrap();
        prop_assert!(max_diff(&back[0], &psi0) < 1e-8);
    }

    #[test]
    fn spectrum_is_symmetric(n in 2usize..20, alpha in 0.05f64..2.0) {
        let e = ChainSpec::new(n, alpha).unwrap().hamiltonian().spectrum();
        for (a, b) in e.iter().zip(e.iter().rev()) {
            prop_assert!((a + b).abs() < 1e-10);
        }
    }

    #[test]
    fn transfer_is_mirror_symmetric(n in 2usize..16, alpha in 0.1f64..1.5, t in 0.0f64..20.0) {
        let h = ChainSpec::new(n, alpha).unwrap().hamiltonian();
        let forward = evolve_eigen(&h, &StateVector::site(n, 0), t).unwrap();
        let mirrored = evolve_eigen(&h, &StateVector::site(n, n - 1), t).unwrap();
        prop_assert!((forward.population(n - 1) - mirrored.population(0)).abs() < 1e-10);
    }

    #[test]
    fn closed_form_matches_eigen_evolution(n in 2usize..16, alpha in 0.1f64..1.5, t in 0.0f64..30.0) {
        let h = ChainSpec::new(n, alpha).unwrap().hamiltonian();
        let exact = target_population(&evolve_eigen(&h, &StateVector::site(n, 0), t).unwrap());
        prop_assert!((FreeTransfer::new(&h).population(t) - exact).abs() < 1e-10);
    }
}

#[test]
fn fourth_order_convergence() {
    let n = 6;
    let h = ChainSpec::new(n, 0.6).unwrap().hamiltonian();
    let psi0 = StateVector::site(n, 0);
    let t = 5.0;
    let exact = static_oracle(&h, 0.4, 0.0, &psi0, t);
    let error = |steps: usize| {
        let grid = TimeGrid::new(t, steps).unwrap();
        let traj = evolve_controlled(&h, Some(&Pulse::constant(grid, 0.4)), None, &psi0, &grid).unwrap();
        max_diff(traj.final_state(), &exact)
    };
    let ratio = error(50) / error(100);
    assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn two_site_rabi() {
    let h = ChainSpec::new(2, 1.0).unwrap().hamiltonian();
    let grid = TimeGrid::with_default_dt(3.0).unwrap();
    let traj = evolve_controlled(&h, None, None, &StateVector::site(2, 0), &grid).unwrap();
    for (t, p) in grid.times().zip(traj.target_populations()) {
        assert!((p - t.sin().powi(2)).abs() < 1e-8, "t={t}");
    }
}

#[test]
fn constant_field_closes_two_site_gap() {
    // α = 0 decouples the sites; F = 1 restores a unit coupling.
    let h = ChainSpec::new(2, 0.0).unwrap().hamiltonian();
    let grid = TimeGrid::with_default_dt(PI / 2.0).unwrap();
    let f = Pulse::constant(grid, 1.0);
    let traj = evolve_controlled(&h, Some(&f), None, &StateVector::site(2, 0), &grid).unwrap();
    assert!((target_population(traj.final_state()) - 1.0).abs() < 1e-8);
}

#[test]
fn perfect_transfer_chain() {
    let n = 5;
    let lambda = 0.25;
    let couplings: Vec<f64> = (1..n).map(|i| lambda * ((i * (n - i)) as f64).sqrt()).collect();
    let h = SingleExcHamiltonian::from_couplings(&couplings).unwrap();
    let t = PI / (2.0 * lambda);
    let psi0 = StateVector::site(n, 0);
    assert!((target_population(&evolve_eigen(&h, &psi0, t).unwrap()) - 1.0).abs() < 1e-10);
    let grid = TimeGrid::with_default_dt(t).unwrap();
    let traj = evolve_controlled(&h, None, None, &psi0, &grid).unwrap();
    assert!((target_population(traj.final_state()) - 1.0).abs() < 1e-8);
}

#[test]
fn complex_initial_states_are_supported() {
    let h = ChainSpec::new(4, 0.8).unwrap().hamiltonian();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let psi0 = StateVector::new(vec![C64::new(s, 0.0), C64::new(0.0, s), C64::default(), C64::default()]);
    let grid = TimeGrid::with_default_dt(4.0).unwrap();
    let traj = evolve_controlled(&h, None, None, &psi0, &grid).unwrap();
    let exact = evolve_eigen(&h, &psi0, 4.0).unwrap();
    assert!(max_diff(traj.final_state(), &exact) < 1e-7);
    let closed = FreeTransfer::from_state(&h, &psi0).population(4.0);
    assert!((closed - target_population(&exact)).abs() < 1e-10);
}
