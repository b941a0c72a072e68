use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use pilotwave::linalg::{projector, trace_distance};
use pilotwave::openquantum::*;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ket(a: Complex64, b: Complex64) -> DVector<Complex64> {
    DVector::from_vec(vec![a, b])
}

fn excited() -> DVector<Complex64> {
    ket(c(0.0, 0.0), c(1.0, 0.0))
}

fn sigma_x(omega: f64) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(omega, 0.0), c(omega, 0.0), c(0.0, 0.0)])
}

fn no_drift() -> DMatrix<Complex64> {
    DMatrix::zeros(2, 2)
}

fn identity_collisions(drift: DMatrix<Complex64>) -> CollisionSpec {
    CollisionSpec::new(ket(c(1.0, 0.0), c(0.0, 0.0)), DMatrix::identity(4, 4), DMatrix::identity(2, 2), 0.1, drift).unwrap()
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

#[test]
fn kraus_families_of_simple_collisions() {
    let k = kraus_from_collision(&identity_collisions(no_drift())).unwrap();
    assert!(max_abs(&(&k.operators[0] - DMatrix::identity(2, 2))) < 1e-15);
    assert!(max_abs(&k.operators[1]) < 1e-15);

    // Full swap: every outcome leaves the system in the ancilla's state.
    let swap = CollisionSpec::partial_swap(std::f64::consts::FRAC_PI_2, 0.1, no_drift()).unwrap();
    let k = kraus_from_collision(&swap).unwrap();
    let psi = ket(c(0.6, 0.0), c(0.0, 0.8));
    for (phi, p) in k.branches(&psi) {
        if p > 1e-15 {
            let post = &phi / c(p.sqrt(), 0.0);
            assert!((post[0].norm() - 1.0).abs() < 1e-12);
        }
    }

    // Partial swap at π/7 against hand-computed blocks.
    let theta = std::f64::consts::PI / 7.0;
    let k = kraus_from_collision(&CollisionSpec::partial_swap(theta, 0.1, no_drift()).unwrap()).unwrap();
    let m0 = DMatrix::from_row_slice(2, 2, &[c(0.0, theta).exp(), c(0.0, 0.0), c(0.0, 0.0), c(theta.cos(), 0.0)]);
    let m1 = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, theta.sin()), c(0.0, 0.0), c(0.0, 0.0)]);
    assert!(max_abs(&(&k.operators[0] - m0)) < 1e-12);
    assert!(max_abs(&(&k.operators[1] - m1)) < 1e-12);
    assert!(k.completeness_defect() < 1e-12);
}

#[test]
fn invalid_collision_specs_are_rejected() {
    let anc = ket(c(1.0, 0.0), c(0.0, 0.0));
    let not_unitary = DMatrix::identity(4, 4) * c(1.1, 0.0);
    assert!(CollisionSpec::new(anc.clone(), not_unitary, DMatrix::identity(2, 2), 0.1, no_drift()).is_err());
    let bad_basis = DMatrix::from_element(2, 2, c(1.0, 0.0));
    assert!(CollisionSpec::new(anc.clone(), DMatrix::identity(4, 4), bad_basis, 0.1, no_drift()).is_err());
    assert!(CollisionSpec::new(anc, DMatrix::identity(4, 4), DMatrix::identity(2, 2), 0.0, no_drift()).is_err());
    let spec = identity_collisions(no_drift());
    assert!(unravel(&spec, &excited(), 0.25, 4, 1).is_err());
}

#[test]
fn identity_collisions_reproduce_drift() {
    let spec = identity_collisions(sigma_x(0.7));
    let psi0 = ket(c(0.6, 0.0), c(0.0, 0.8));
    let records = unravel(&spec, &psi0, 1.0, 20, 3).unwrap();
    let oracle = partial_trace_oracle(&spec, &psi0, 1.0, DEFAULT_ORACLE_CAP).unwrap();
    let rho = reduced_density(&records).unwrap();
    let u = spec.drift_propagator();
    let mut psi = psi0.clone();
    for n in 0..=10 {
        for r in &records {
            assert!((r.history[n].state.dotc(&psi).norm() - 1.0).abs() < 1e-12);
        }
        assert!(trace_distance(&rho.states[n], &projector(&psi)) < 1e-12);
        assert!(trace_distance(&oracle.states[n], &projector(&psi)) < 1e-12);
        psi = &u * psi;
    }
}

#[test]
fn records_stay_normalized_and_timestamps_increase() {
    let spec = CollisionSpec::partial_swap(0.9, 0.2, sigma_x(1.3)).unwrap();
    let records = unravel(&spec, &ket(c(0.3, 0.1), c(0.5, -0.2)), 4.0, 200, 17).unwrap();
    let distinct: std::collections::HashSet<Vec<usize>> = records.iter().map(|r| r.noise.outcomes.clone()).collect();
    assert!(distinct.len() > 10);
    for r in &records {
        assert_eq!(r.noise.outcomes.len(), 20);
        assert!(r.noise.times.windows(2).all(|w| w[1] > w[0]));
        assert!(r.history.iter().all(|s| (s.state.norm() - 1.0).abs() <= STATE_NORM_TOLERANCE));
    }
    let one = reduced_density(&records[..1]).unwrap();
    assert!(max_abs(&(&one.states[20] - projector(&records[0].history[20].state))) < 1e-15);
    let all = reduced_density(&records).unwrap();
    for rho in &all.states {
        let (herm, trace, min_eig) = density_sanity(rho);
        assert!(herm < 1e-12 && trace < 1e-10 && min_eig > -1e-10);
    }
}

#[test]
fn damping_population_follows_contraction_factor() {
    let theta = 0.3;
    let spec = CollisionSpec::partial_swap(theta, 0.1, no_drift()).unwrap();
    let n_rec = 5000;
    let records = unravel(&spec, &excited(), 2.0, n_rec, 5).unwrap();
    for n in [1, 5, 10, 20] {
        let pops: Vec<f64> = records.iter().map(|r| r.history[n].state[1].norm_sqr()).collect();
        let mean = pops.iter().sum::<f64>() / n_rec as f64;
        let var = pops.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n_rec as f64 - 1.0);
        let exact = theta.cos().powi(2 * n as i32);
        assert!((mean - exact).abs() <= 4.0 * (var / n_rec as f64).sqrt() + 1e-12, "step {n}: {mean} vs {exact}");
    }
    let oracle = partial_trace_oracle(&spec, &excited(), 1.0, DEFAULT_ORACLE_CAP).unwrap();
    for (n, rho) in oracle.states.iter().enumerate() {
        assert!((rho[(1, 1)].re - theta.cos().powi(2 * n as i32)).abs() < 1e-12);
    }
}

#[test]
fn oracle_limits_and_sanity() {
    let swap = CollisionSpec::partial_swap(std::f64::consts::FRAC_PI_2, 0.5, no_drift()).unwrap();
    let psi0 = ket(c(0.6, 0.0), c(0.0, 0.8));
    let once = partial_trace_oracle(&swap, &psi0, 0.5, DEFAULT_ORACLE_CAP).unwrap();
    assert!(trace_distance(&once.states[1], &projector(&ket(c(1.0, 0.0), c(0.0, 0.0)))) < 1e-12);

    let chain = CollisionSpec::partial_swap(0.7, 0.25, sigma_x(0.9)).unwrap();
    let series = partial_trace_oracle(&chain, &psi0, 2.0, DEFAULT_ORACLE_CAP).unwrap();
    assert_eq!(series.states.len(), 9);
    for rho in &series.states {
        let (herm, trace, min_eig) = density_sanity(rho);
        assert!(herm < 1e-12 && trace < 1e-12 && min_eig > -1e-12);
    }
    let err = partial_trace_oracle(&chain, &psi0, 4.0, DEFAULT_ORACLE_CAP).unwrap_err();
    assert!(matches!(err, pilotwave::Error::Resource(_)), "{err}");
    assert!(partial_trace_oracle(&chain, &psi0, 4.0, 1 << 17).is_ok());
}

#[test]
fn fresh_ancillas_are_reconstructed_and_recycling_is_detected() {
    let spec = CollisionSpec::partial_swap(std::f64::consts::PI / 8.0, 0.1, no_drift()).unwrap();
    let report = markovianity_diagnostic(&spec, &excited(), 1.2, 5000, 13, DEFAULT_ORACLE_CAP).unwrap();
    assert!(report.fresh_within_bound, "{:?}", report.fresh_gap);
    assert!(report.witness >= 3.0, "{}", report.witness);

    let idle = identity_collisions(sigma_x(0.4));
    let report = markovianity_diagnostic(&idle, &excited(), 1.0, 50, 2, DEFAULT_ORACLE_CAP).unwrap();
    assert!(report.fresh_gap.iter().chain(&report.recycled_gap).all(|g| *g < 1e-10));
}

#[test]
fn reconstruction_error_falls_as_inverse_square_root() {
    let spec = CollisionSpec::partial_swap(0.4, 0.1, sigma_x(0.5)).unwrap();
    let psi0 = ket(c(0.6, 0.0), c(0.0, 0.8));
    let oracle = partial_trace_oracle(&spec, &psi0, 1.0, DEFAULT_ORACLE_CAP).unwrap();
    let sizes = [1250usize, 2500, 5000];
    let gaps: Vec<f64> = sizes
        .iter()
        .map(|&n| {
            (0..8u64)
                .map(|s| {
                    let rho = reduced_density(&unravel(&spec, &psi0, 1.0, n, 100 + s).unwrap()).unwrap();
                    let g = series_gap(&rho, &oracle).unwrap();
                    g.iter().sum::<f64>() / g.len() as f64
                })
                .sum::<f64>()
                / 8.0
        })
        .collect();
    let x: Vec<f64> = sizes.iter().map(|n| (*n as f64).ln()).collect();
    let y: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
    let (mx, my) = (x.iter().sum::<f64>() / 3.0, y.iter().sum::<f64>() / 3.0);
    let slope = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / x.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
    assert!((-0.7..=-0.3).contains(&slope), "{slope} {gaps:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn one_collision_channel_equals_oracle(theta in 0.0f64..1.5, omega in -1.0f64..1.0, a in -1.0f64..1.0, ph in 0.0f64..6.0) {
        let spec = CollisionSpec::partial_swap(theta, 0.3, sigma_x(omega)).unwrap();
        let psi0 = ket(c(a, 0.2), c(0.0, ph).exp());
        let psi0 = &psi0 / c(psi0.norm(), 0.0);
        let oracle = partial_trace_oracle(&spec, &psi0, 0.3, DEFAULT_ORACLE_CAP).unwrap();
        let k = kraus_from_collision(&spec).unwrap();
        let drifted = spec.drift_propagator() * &psi0;
        prop_assert!(trace_distance(&k.channel(&projector(&drifted)), &oracle.states[1]) < 1e-12);
    }
}
