use nalgebra::Matrix2;
use qtopo_core::interval_domain::BoundaryUnitary;
use qtopo_core::linalg::haar_unitary;
use qtopo_core::spectral_solver::{finite_difference_hamiltonian, solve_modes, solve_spectrum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn haar(rng: &mut ChaCha8Rng) -> BoundaryUnitary {
    let m = haar_unitary(2, rng);
    BoundaryUnitary::new(Matrix2::from_fn(|i, j| m[(i, j)])).unwrap()
}

#[test]
fn haar_spectra_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for trial in 0..20 {
        let u = haar(&mut rng);
        let exact = solve_spectrum(&u, 10, 1e-10).unwrap().eigenvalues;
        let fd = finite_difference_hamiltonian(&u, 2048).unwrap().lowest_eigenvalues(10);
        for (a, b) in exact.iter().zip(&fd) {
            assert!((a - b).abs() <= 2e-3 * a.abs() + 1e-9, "trial {trial}: {exact:?} vs {fd:?}");
        }
        assert!(exact.iter().all(|l| *l >= -1e-10));
    }
}

#[test]
fn eigenfunctions_meet_their_boundary_conditions() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..10 {
        let u = haar(&mut rng);
        for (mode, _) in solve_modes(&u, 12, 1e-10).unwrap() {
            assert!(mode.boundary_residual(&u) < 1e-7);
        }
    }
}

#[test]
fn eigenvalues_grow_quadratically() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut family = vec![BoundaryUnitary::case_a(0.0, 0.0), BoundaryUnitary::case_b(0.0, 0.0), BoundaryUnitary::hadamard()];
    family.push(haar(&mut rng));
    for u in family {
        let eigs = solve_spectrum(&u, 100, 1e-10).unwrap().eigenvalues;
        for n in 20..=100 {
            let ratio = eigs[n - 1] / (n * n) as f64;
            assert!((1.0 / 32.0..1.0 / 8.0).contains(&ratio), "λ_{n}/n² = {ratio}");
        }
    }
}
