use num_complex::Complex64;
use pilotwave::observables::*;
use pilotwave::trajectories::*;
use pilotwave::wavefield::*;
use proptest::prelude::*;

fn line(lo: f64, hi: f64, n: usize) -> Grid {
    Grid::line(lo, hi, n).unwrap()
}

fn chirped(g: &Grid) -> Wavefunction {
    Wavefunction::from_fn_1d(g, |x| Complex64::new(-(x - 1.0).powi(2) / 2.0, 1.5 * x + 0.3 * x * x).exp()).normalized().unwrap()
}

fn oscillator(g: &Grid) -> Hamiltonian {
    build_hamiltonian(&HamiltonianSpec::new(vec![1.0], PotentialSpec::subsystem(|x| 0.5 * x * x)), g).unwrap()
}

/// Exact eigenvector of the walled three-point Laplacian.
fn box_ground_state(g: &Grid) -> Wavefunction {
    let ax = g.axis(0);
    let l = ax.max - ax.min;
    Wavefunction::from_fn_1d(g, |x| Complex64::new((std::f64::consts::PI * (x - ax.min) / l).sin(), 0.0)).normalized().unwrap()
}

#[test]
fn diagonal_operator_local_value_is_the_function() {
    let g = line(-10.0, 10.0, 801);
    let psi = chirped(&g);
    let b = OperatorRep::diagonal(&g, |p| p[0].sin() + p[0] * p[0], "f").unwrap();
    let field = local_expectation(&psi, &b).unwrap();
    for k in 0..g.len() {
        if !field.flags[k] {
            let x = g.point(k)[0];
            assert!((field.real[k] - (x.sin() + x * x)).abs() < 1e-12);
            assert!(field.complex[k].im.abs() < 1e-12);
        }
    }
}

#[test]
fn eigenstates_have_flat_local_expectation() {
    let g = line(-5.0, 5.0, 401);
    let h = build_hamiltonian(&HamiltonianSpec::new(vec![1.0], PotentialSpec::free()), &g).unwrap();
    let hop = OperatorRep::hamiltonian(&h).unwrap();
    let ground = local_expectation(&box_ground_state(&g), &hop).unwrap();
    let dx = g.axis(0).spacing();
    let e = (1.0 - (std::f64::consts::PI * dx / 10.0).cos()) / (dx * dx);
    assert!(ground.unflagged_variance() <= 1e-10, "{}", ground.unflagged_variance());
    let k = g.len() / 3;
    assert!((ground.real[k] - e).abs() < 1e-9);
    let packet = local_expectation(&chirped(&g), &hop).unwrap();
    assert!(packet.unflagged_variance() > 1e-4);
}

#[test]
fn momentum_local_value_is_mass_times_velocity() {
    let g = line(-10.0, 10.0, 801);
    let psi = chirped(&g);
    let m = 2.5;
    let field = local_expectation(&psi, &OperatorRep::momentum(&g, 0, 1.0).unwrap()).unwrap();
    let v = velocity_field(&psi, &[m], 1.0);
    for k in 0..g.len() {
        if !field.flags[k] {
            assert!((field.real[k] - m * v.components[0][k]).abs() < 1e-10);
        }
    }
}

#[test]
fn hamiltonian_local_value_is_bohmian_energy() {
    let g = line(-10.0, 10.0, 1601);
    let psi = chirped(&g);
    let h = oscillator(&g);
    let field = local_expectation(&psi, &OperatorRep::hamiltonian(&h).unwrap()).unwrap();
    let v = velocity_field(&psi, &[1.0], 1.0);
    let q = quantum_potential(&psi, &[1.0], 1.0);
    for k in 0..g.len() {
        let x = g.point(k)[0];
        if (x - 1.0).abs() < 4.0 {
            let bohm = 0.5 * v.components[0][k].powi(2) + 0.5 * x * x + q.values[k];
            assert!((field.real[k] - bohm).abs() < 1e-3 * (1.0 + bohm.abs()), "x={x}: {} vs {bohm}", field.real[k]);
        }
    }
}

#[test]
fn weighted_local_values_reproduce_expectations() {
    let g = line(-10.0, 10.0, 801);
    let psi = chirped(&g);
    let h = oscillator(&g);
    let ops = [
        OperatorRep::position(&g, 0).unwrap(),
        OperatorRep::momentum(&g, 0, 1.0).unwrap(),
        OperatorRep::hamiltonian(&h).unwrap(),
        OperatorRep::kinetic(&g, vec![1.0], 1.0).unwrap(),
        OperatorRep::diagonal(&g, |p| (p[0] * 0.7).cos(), "cos").unwrap(),
    ];
    let ensemble = sample_initial(&psi, 10_000, 11).unwrap();
    for b in &ops {
        let field = local_expectation(&psi, b).unwrap();
        let exact = b.expectation(psi.amplitudes());
        let integral = field.weighted_integral(&psi);
        assert!((integral.re - exact.re).abs() < 1e-6, "{}", b.label);
        assert!(integral.im.abs() < 1e-6, "{}", b.label);
        let est = ensemble_expectation(&ensemble, &field, 0).unwrap();
        assert!(est.agrees_with(exact.re, 4.0), "{}: {est:?} vs {exact}", b.label);
        assert_eq!(est.n + est.flagged, 10_000);
    }
    let one = local_expectation(&psi, &OperatorRep::identity(&g).unwrap()).unwrap();
    let est = ensemble_expectation(&ensemble, &one, 0).unwrap();
    assert_eq!(est.value, 1.0);
    assert_eq!(est.std_error, 0.0);
}

#[test]
fn non_hermitian_or_mismatched_operators_are_rejected() {
    let g = line(-5.0, 5.0, 101);
    let mut m = nalgebra::DMatrix::<Complex64>::zeros(2, 2);
    m[(0, 1)] = Complex64::new(1.0, 0.0);
    assert!(OperatorRep::level_matrix(m, "raise").is_err());
    let other = line(-5.0, 5.0, 103);
    let psi = chirped(&g);
    assert!(local_expectation(&psi, &OperatorRep::position(&other, 0).unwrap()).is_err());
    let h = oscillator(&g).with_absorber(Absorber { width: 1.0, strength: 1.0 });
    assert!(OperatorRep::hamiltonian(&h).is_err());
}

/// Evolves the chirped packet freely and keeps the wavefunctions at `keep`.
fn free_run(g: &Grid, count: usize, dt: f64, steps: usize, keep: &[usize]) -> (Ensemble, Vec<Wavefunction>) {
    let psi0 = chirped(g);
    let h = build_hamiltonian(&HamiltonianSpec::new(vec![1.0], PotentialSpec::free()), g).unwrap();
    let ens = sample_initial(&psi0, count, 5).unwrap();
    let mut stored = Vec::new();
    let (_, ens) = evolve_with_trajectories(&psi0, &h, dt, steps, ens, 1, |n, psi| {
        if keep.contains(&n) {
            stored.push(psi.clone());
        }
    })
    .unwrap();
    (ens, stored)
}

#[test]
fn two_time_correlation_matches_direct_evaluation() {
    let g = line(-15.0, 15.0, 601);
    let (ens, stored) = free_run(&g, 2000, 0.01, 100, &[0, 100]);
    let x2 = local_expectation(&stored[1], &OperatorRep::position(&g, 0).unwrap()).unwrap();
    let p1 = local_expectation(&stored[0], &OperatorRep::momentum(&g, 0, 1.0).unwrap()).unwrap();
    let lib = two_time_correlation(&ens, &x2, 100, &p1, 0).unwrap();
    assert_eq!(lib.flagged, 0);

    // Independent evaluation: nodal momentum from the raw amplitudes and
    // hand-rolled linear interpolation.
    let a = stored[0].amplitudes();
    let dx = g.axis(0).spacing();
    let nodal: Vec<f64> =
        (0..a.len()).map(|k| if k == 0 || k + 1 == a.len() { 0.0 } else { ((a[k + 1] - a[k - 1]) / (a[k] * 2.0 * dx)).im }).collect();
    let interp = |x: f64| {
        let s = (x + 15.0) / dx;
        let i = (s.floor() as usize).min(a.len() - 2);
        let f = s - i as f64;
        (1.0 - f) * nodal[i] + f * nodal[i + 1]
    };
    let direct = ens.trajectories.iter().map(|t| t.position(100)[0] * interp(t.position(0)[0])).sum::<f64>() / ens.len() as f64;
    assert!((lib.value - direct).abs() < 1e-10, "{} vs {direct}", lib.value);

    // Equal times reduce to the single-time moment.
    let x0 = local_expectation(&stored[0], &OperatorRep::position(&g, 0).unwrap()).unwrap();
    let same = two_time_correlation(&ens, &x0, 0, &x0, 0).unwrap();
    assert!(same.agrees_with(stored[0].expect_fn(|p| p[0] * p[0]), 4.0));
    assert!(two_time_correlation(&ens, &x0, 0, &x2, 100).is_err());
}

#[test]
fn work_vanishes_for_eigenstates_and_telescopes() {
    let g = line(-5.0, 5.0, 201);
    let h = build_hamiltonian(&HamiltonianSpec::new(vec![1.0], PotentialSpec::free()), &g).unwrap();
    let hop = OperatorRep::hamiltonian(&h).unwrap();
    let psi0 = box_ground_state(&g);
    let mut fields = Vec::new();
    let ens = sample_initial(&psi0, 200, 3).unwrap();
    let (_, ens) = evolve_with_trajectories(&psi0, &h, 0.01, 20, ens, 1, |_, psi| fields.push(local_expectation(psi, &hop).unwrap())).unwrap();
    let (per, est) = ensemble_work(&ens, &fields[0], 0, &fields[20], 20).unwrap();
    assert!(per.iter().flatten().all(|w| w.abs() < 1e-8));
    assert!(est.value.abs() < 1e-8);

    let g = line(-15.0, 15.0, 601);
    let h = oscillator(&g);
    let hop = OperatorRep::hamiltonian(&h).unwrap();
    let psi0 = chirped(&g);
    let mut fields = Vec::new();
    let ens = sample_initial(&psi0, 4000, 9).unwrap();
    let (_, ens) = evolve_with_trajectories(&psi0, &h, 0.01, 100, ens, 1, |_, psi| fields.push(local_expectation(psi, &hop).unwrap())).unwrap();
    for t in ens.trajectories.iter().take(50) {
        assert_eq!(bohmian_work(t, &fields[40], 40, &fields[40], 40).unwrap(), 0.0);
        let a = bohmian_work(t, &fields[0], 0, &fields[40], 40).unwrap();
        let b = bohmian_work(t, &fields[40], 40, &fields[100], 100).unwrap();
        let c = bohmian_work(t, &fields[0], 0, &fields[100], 100).unwrap();
        assert!((a + b - c).abs() < 1e-12);
    }
    // Energy is conserved on average under a static Hamiltonian.
    let (_, est) = ensemble_work(&ens, &fields[0], 0, &fields[100], 100).unwrap();
    assert!(est.agrees_with(0.0, 4.0), "{est:?}");
    assert!(est.std_error > 1e-3);
}

/// Free packet crossing a region: returns the ensemble and the occupancy of
/// `region` at every stored sample.
fn crossing(count: usize, region: &[(f64, f64)]) -> (Grid, Ensemble, Vec<f64>, RegionSpec) {
    let g = line(-30.0, 80.0, 2201);
    let psi0 = Wavefunction::from_fn_1d(&g, |x| Complex64::new(-(x + 10.0).powi(2) / (4.0 * 2.25), 5.0 * x).exp()).normalized().unwrap();
    let h = build_hamiltonian(&HamiltonianSpec::new(vec![1.0], PotentialSpec::free()), &g).unwrap();
    let region = RegionSpec::new(region.to_vec(), &g).unwrap();
    let ens = sample_initial(&psi0, count, 21).unwrap();
    let mut occupancy = Vec::new();
    let (_, ens) = evolve_with_trajectories(&psi0, &h, 0.01, 1200, ens, 1, |_, psi| occupancy.push(region.probability(psi))).unwrap();
    (g, ens, occupancy, region)
}

#[test]
fn dwell_time_of_a_ballistic_crossing() {
    let (g, ens, occupancy, region) = crossing(2000, &[(10.0, 30.0)]);
    let report = expected_dwell(&ens, &occupancy, &region).unwrap();
    assert!((report.trajectory.value - 4.0).abs() < 0.05 * 4.0, "{report:?}");
    assert!(report.relative_difference < 0.02, "{report:?}");
    assert!(report.warnings.is_empty());
    let everything = RegionSpec::new(vec![(g.axis(0).min, g.axis(0).max)], &g).unwrap();
    let horizon = ens.time(ens.steps() - 1) - ens.time(0);
    for t in ens.trajectories.iter().take(20) {
        assert!((dwell_time(t, ens.dt, &everything) - horizon).abs() < 1e-9);
    }
    // A region still occupied at the horizon triggers a warning.
    let late = RegionSpec::new(vec![(40.0, 70.0)], &g).unwrap();
    let occ: Vec<f64> = occupancy.iter().map(|_| 0.5).collect();
    assert!(!expected_dwell(&ens, &occ, &late).unwrap().warnings.is_empty());
    assert!(RegionSpec::new(vec![(90.0, 95.0)], &g).is_err());
}

fn straight(positions: Vec<f64>) -> Trajectory {
    let mut t = Trajectory::start(0, 0, 0.0, [positions[0], 0.0]);
    t.positions = positions.into_iter().map(|x| [x, 0.0]).collect();
    t
}

fn synthetic(trajectories: Vec<Trajectory>, dt: f64) -> Ensemble {
    let mut e = Ensemble::new(1, trajectories, "synthetic", 0);
    e.dt = dt;
    e
}

#[test]
fn static_charges_carry_no_current_and_a_crossing_carries_one_charge() {
    let device = Device::new(10.0, 2.0, -1.6).unwrap();
    let still = synthetic(vec![straight(vec![3.0; 50]), straight(vec![7.5; 50])], 0.1);
    for s in [2.5, 5.0, 7.5] {
        let i = total_current(&still, s, &device).unwrap();
        assert!(i.mean.iter().all(|v| *v == 0.0));
        let j = gauss_current(&still, s, &device).unwrap();
        assert!(j.mean.iter().all(|v| v.abs() < 1e-12));
    }
    let moving = synthetic(vec![straight((0..=120).map(|n| -1.0 + 0.1 * n as f64).collect())], 0.05);
    let i = total_current(&moving, 5.0, &device).unwrap();
    assert!((i.transferred_charge(0, 0.05) - device.charge).abs() < 1e-12);
    let j = gauss_current(&moving, 5.0, &device).unwrap();
    assert!((j.transferred_charge(0, 0.05) - device.charge).abs() < 1e-12);
    assert!(total_current(&moving, 11.0, &device).is_err());
    assert!(Device::new(0.0, 1.0, 1.0).is_err());
}

#[test]
fn ramo_shockley_matches_gauss_law_at_every_surface() {
    let (_, ens, _, _) = crossing(500, &[(10.0, 30.0)]);
    let device = Device::new(40.0, 1.0, 1.0).unwrap();
    let rs = total_current(&ens, 20.0, &device).unwrap();
    let peak = rs.mean.iter().copied().fold(0.0, f64::max);
    assert!(peak > 0.0);
    for s in [10.0, 20.0, 30.0] {
        let gauss = gauss_current(&ens, s, &device).unwrap();
        for (a, b) in rs.mean.iter().zip(&gauss.mean) {
            assert!((a - b).abs() <= 0.02 * peak);
        }
    }
    // Trajectories that traverse the whole device transfer exactly one charge.
    for (k, t) in ens.trajectories.iter().enumerate() {
        if t.position(0)[0] < 0.0 && t.last()[0] > 40.0 {
            assert!((rs.transferred_charge(k, ens.dt) - 1.0).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weighted_local_expectation_is_exact(k in -2.0f64..2.0, c in -0.5f64..0.5, x0 in -2.0f64..2.0, w in 0.5f64..2.0) {
        let g = line(-12.0, 12.0, 481);
        let psi = Wavefunction::from_fn_1d(&g, |x| Complex64::new(-(x - x0).powi(2) / (2.0 * w * w), k * x + c * x * x).exp())
            .normalized()
            .unwrap();
        let h = oscillator(&g);
        for b in [OperatorRep::momentum(&g, 0, 1.0).unwrap(), OperatorRep::hamiltonian(&h).unwrap()] {
            let field = local_expectation(&psi, &b).unwrap();
            let exact = b.expectation(psi.amplitudes());
            let integral = field.weighted_integral(&psi);
            prop_assert!((integral - exact).norm() < 1e-6);
            prop_assert!(integral.im.abs() < 1e-6);
        }
    }

    #[test]
    fn current_oracles_agree_on_random_paths(steps in proptest::collection::vec(-0.4f64..0.6, 10..60), s in 0.5f64..9.5) {
        let mut x = -0.5;
        let mut path = vec![x];
        for d in steps {
            x += d;
            path.push(x);
        }
        let e = synthetic(vec![straight(path)], 0.1);
        let device = Device::new(10.0, 1.5, 2.0).unwrap();
        let a = total_current(&e, s, &device).unwrap();
        let b = gauss_current(&e, s, &device).unwrap();
        for (u, v) in a.mean.iter().zip(&b.mean) {
            prop_assert!((u - v).abs() < 1e-9);
        }
    }
}
