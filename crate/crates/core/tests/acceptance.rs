//! Acceptance criteria, one line each, at pinned tolerances.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use qtopo_core::bc_dynamics::{topology_change_experiment, ExperimentConfig, ExperimentRow};
use qtopo_core::gelfand::{cstar_norm, fuzzy_torus, gelfand_transform, joint_spectrum, torus_root, Expr, MatrixAlgebraPresentation};
use qtopo_core::interval_domain::{boundary_form, in_domain, BoundaryUnitary, Grid, WaveField};
use qtopo_core::linalg::{haar_unitary, max_abs, random_unit_vector};
use qtopo_core::measurement::{order_asymmetry, sequential_probability, ObservablePair};
use qtopo_core::spectral_geometry::{circle_laplacian, connes_distance, estimate_dimension, path_hopping, DistanceProblem};
use qtopo_core::spectral_solver::{finite_difference_hamiltonian, solve_modes, solve_spectrum};
use qtopo_core::topology_reconstruct::{classify_topology, smoothness_degradation, TopologyKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

/// Name, check and time limit in seconds.
type Criterion = (&'static str, fn() -> Outcome, u64);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn topology_triple() -> Outcome {
    let cases = [("case_a", TopologyKind::Circle), ("case_b", TopologyKind::TwoCircles), ("hadamard", TopologyKind::TwoIntervals)];
    let mut got = Vec::new();
    let mut slowest = Duration::ZERO;
    for (name, want) in cases {
        let start = Instant::now();
        let kind = classify_topology(&BoundaryUnitary::from_preset(name).unwrap(), 12, 2, 1e-5).map_err(err)?.kind;
        slowest = slowest.max(start.elapsed());
        if kind != want {
            return Err(format!("{name} classified as {kind:?}"));
        }
        got.push(format!("{kind:?}"));
    }
    ensure(slowest < Duration::from_secs(10), format!("{} (slowest {:.2} s)", got.join("/"), slowest.as_secs_f64()))
}

fn spectrum_oracles() -> Outcome {
    let circle: Vec<f64> = [0, 1, 1, 2, 2, 3, 3, 4, 4, 5].iter().map(|m| (*m as f64).powi(2) / 4.0).collect();
    let two: Vec<f64> = [0, 0, 1, 1, 1, 1, 2, 2, 2, 2].iter().map(|n| (*n as f64).powi(2)).collect();
    let mut worst_exact: f64 = 0.0;
    let mut worst_fd: f64 = 0.0;
    for (u, want, mult) in [
        (BoundaryUnitary::case_a(0.0, 0.0), &circle, vec![1, 2, 2, 2, 2, 2, 2, 2, 2, 2]),
        (BoundaryUnitary::case_b(0.0, 0.0), &two, vec![2, 2, 4, 4, 4, 4, 4, 4, 4, 4]),
    ] {
        let s = solve_spectrum(&u, 10, 1e-10).map_err(err)?;
        if s.multiplicities != mult {
            return Err(format!("multiplicities {:?}", s.multiplicities));
        }
        for (a, b) in s.eigenvalues.iter().zip(want.iter()) {
            worst_exact = worst_exact.max((a - b).abs());
        }
        let fd = finite_difference_hamiltonian(&u, 2048).map_err(err)?.lowest_eigenvalues(10);
        for (a, b) in fd.iter().zip(want.iter()) {
            worst_fd = worst_fd.max((a - b).abs() / b.max(1.0));
        }
    }
    ensure(
        worst_exact < 1e-8 && worst_fd < 2e-3,
        format!("secular error {worst_exact:.1e} (< 1e-8), finite-difference error {worst_fd:.1e} (< 2e-3)"),
    )
}

fn random_domain_field(modes: &[qtopo_core::spectral_solver::Mode], grid: Grid, rng: &mut ChaCha8Rng) -> WaveField {
    let mut f = WaveField::zeros(grid);
    for m in modes {
        let c = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        f = f.add(&m.sample(grid).scaled(c)).unwrap();
    }
    f.normalized()
}

fn self_adjointness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let grid = Grid::new(2001).map_err(err)?;
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for _ in 0..20 {
        let m = haar_unitary(2, &mut rng);
        let u = BoundaryUnitary::new(nalgebra::Matrix2::from_fn(|i, j| m[(i, j)])).map_err(err)?;
        let modes: Vec<_> = solve_modes(&u, 6, 1e-10).map_err(err)?.into_iter().map(|(m, _)| m).collect();
        for _ in 0..5 {
            let psi = random_domain_field(&modes, grid, &mut rng);
            let chi = random_domain_field(&modes, grid, &mut rng);
            if !(in_domain(&psi, &u, 1e-8) && in_domain(&chi, &u, 1e-8)) {
                return Err("sampled field fails the domain test at 1e-8".into());
            }
            worst = worst.max(boundary_form(&psi, &chi).map_err(err)?.norm());
            pairs += 1;
        }
    }
    ensure(worst < 1e-6, format!("max |B| = {worst:.1e} over {pairs} pairs (< 1e-6)"))
}

fn dimension_recovery() -> Outcome {
    let s = solve_spectrum(&BoundaryUnitary::case_b(0.0, 0.0), 100, 1e-10).map_err(err)?;
    let fit = estimate_dimension(&s.eigenvalues, 2, 20..=100).map_err(err)?;
    ensure((fit.d - 1.0).abs() < 0.05, format!("d = {:.4} (1 within 5%)", fit.d))
}

fn metric_recovery() -> Outcome {
    let (n, h) = (16, 0.3);
    let prob = DistanceProblem::new(path_hopping(n, 1.0 / h), 1).map_err(err)?;
    let mut worst: f64 = 0.0;
    for y in 1..n {
        worst = worst.max((connes_distance(&prob, 0, y).map_err(err)? - y as f64 * h).abs());
    }
    let ring = DistanceProblem::new(circle_laplacian(64, 2.0 * PI), 2).map_err(err)?;
    let d = connes_distance(&ring, 0, 32).map_err(err)?;
    ensure(
        worst < 1e-6 && (d / PI - 1.0).abs() < 0.05,
        format!("path error {worst:.1e} (< 1e-6), ring antipodes {d:.4} (π within 5%)"),
    )
}

fn conserved(rows: &[ExperimentRow]) -> (f64, f64) {
    let e0 = rows[0].energy;
    rows.iter().fold((0.0, 0.0), |(n, e), r| (f64::max(n, (r.norm - 1.0).abs()), f64::max(e, ((r.energy - e0) / e0).abs())))
}

fn topology_change() -> Outcome {
    let mut norm_drift: f64 = 0.0;
    let mut energy_drift: f64 = 0.0;
    let mut track = |rows: &[ExperimentRow]| {
        let (n, e) = conserved(rows);
        norm_drift = norm_drift.max(n);
        energy_drift = energy_drift.max(e);
    };
    let localize = ExperimentConfig::preset("localize_large_I").unwrap();
    let rows = topology_change_experiment(&localize).map_err(err)?;
    track(&rows);
    let p_large = rows.last().unwrap().p_a;

    let mut ladder = Vec::new();
    for inertia in [1.0, 10.0, 100.0] {
        let mut c = localize.clone();
        c.inertia = inertia;
        c.init.sigma = (2.0 * (12.0f64 * inertia).sqrt()).powf(-0.5);
        let rows = topology_change_experiment(&c).map_err(err)?;
        track(&rows);
        ladder.push(rows.last().unwrap().p_a);
    }
    let monotone = ladder.windows(2).all(|w| w[1] >= w[0]);

    let transition = ExperimentConfig::preset("transition").unwrap();
    let rows = topology_change_experiment(&transition).map_err(err)?;
    track(&rows);
    let crossing = rows.iter().find(|r| r.p_b > r.p_a).map(|r| r.t);

    let detail = format!(
        "P_a(T) = {p_large:.3} (≥ 0.9), P_a over I = 1/10/100: {:.3}/{:.3}/{:.3}, P_b > P_a at t = {}, norm drift {norm_drift:.1e}, energy drift {energy_drift:.1e}",
        ladder[0],
        ladder[1],
        ladder[2],
        crossing.map_or("never".to_string(), |t| format!("{t:.2}")),
    );
    ensure(p_large >= 0.9 && monotone && crossing.is_some() && norm_drift < 1e-8 && energy_drift < 1e-6, detail)
}

fn measurement_asymmetry() -> Outcome {
    let c = |x: f64| C64::new(x, 0.0);
    let sz = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
    let sx = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
    let up = nalgebra::DVector::from_vec(vec![c(1.0), c(0.0)]);
    let zx = sequential_probability(&ObservablePair::new(sz.clone(), sx.clone()).map_err(err)?, &up, 1.0, 1.0).map_err(err)?;
    let xz = sequential_probability(&ObservablePair::new(sx, sz).map_err(err)?, &up, 1.0, 1.0).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(2..6);
        let u = haar_unitary(n, &mut rng);
        let diag = |rng: &mut ChaCha8Rng| {
            DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| c(rng.random_range(-2i32..=2) as f64)))
        };
        let (da, db) = (diag(&mut rng), diag(&mut rng));
        let herm = |d: &DMatrix<C64>| {
            let m = &u * d * u.adjoint();
            (&m + m.adjoint()) * c(0.5)
        };
        let pair = ObservablePair::new(herm(&da), herm(&db)).map_err(err)?;
        worst = worst.max(order_asymmetry(&pair, &random_unit_vector(n, &mut rng)).map_err(err)?);
    }
    ensure(
        (zx - 0.5).abs() < 1e-12 && (xz - 0.25).abs() < 1e-12 && worst < 1e-12,
        format!("P = {zx} then {xz} reversed, commuting asymmetry {worst:.1e} (< 1e-12)"),
    )
}

fn gelfand_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut cstar: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(1..7);
        let a = DMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let norm = cstar_norm(&a);
        cstar = cstar.max((cstar_norm(&(a.adjoint() * &a)) - norm * norm).abs() / norm.powi(2).max(1.0));
    }
    let mut relation: f64 = 0.0;
    for k in 1..=64 {
        let t = fuzzy_torus(k).map_err(err)?;
        let (u1, u2) = (&t.generators[0], &t.generators[1]);
        relation = relation.max(max_abs(&(u1 * u2 - u2 * u1 * torus_root(k))));
    }
    let u = haar_unitary(4, &mut rng);
    let rotate = |d: DMatrix<C64>| &u * d * u.adjoint();
    let g1 = rotate(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(1.0, 1.0), C64::new(-1.0, 0.0), C64::new(1.0, 1.0), C64::new(0.0, 2.0)])));
    let g2 = rotate(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(0.5, 0.0), C64::new(2.0, 0.0), C64::new(-1.0, 0.0), C64::new(0.5, 0.0)])));
    let alg = MatrixAlgebraPresentation::unlabelled(vec![g1, g2]).map_err(err)?;
    let points = joint_spectrum(&alg, 1e-10).map_err(err)?;
    let a = Expr::generator(0).plus(Expr::generator(1).adjoint());
    let b = Expr::generator(1).pow(2).plus(Expr::scalar(C64::new(0.0, 1.0)));
    let (ta, tb) = (gelfand_transform(&a, &points).map_err(err)?, gelfand_transform(&b, &points).map_err(err)?);
    let ab = a.clone().times(b.clone());
    let m_ab = ab.eval_matrix(&alg).map_err(err)?;
    let mut mult: f64 = 0.0;
    for ((p, x), y) in points.points.iter().zip(&ta).zip(&tb) {
        let v = p.basis.column(0);
        let on_space = v.dotc(&(&m_ab * v));
        mult = mult.max((x * y - on_space).norm());
    }
    ensure(
        cstar < 1e-10 && relation < 1e-13 && mult < 1e-10,
        format!("C*-identity {cstar:.1e} (< 1e-10), torus relation {relation:.1e} (< 1e-13), multiplicativity {mult:.1e} (< 1e-10)"),
    )
}

fn smoothness() -> Outcome {
    let u = BoundaryUnitary::case_a(0.0, 0.0);
    let orders: Vec<usize> = [6.0, 2.0, 0.6]
        .iter()
        .map(|p| smoothness_degradation(&u, *p, 4))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    ensure(orders.windows(2).all(|w| w[1] <= w[0]), format!("orders for decay 6/2/0.6: {orders:?}"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("topology classification triple", topology_triple, 10),
        ("spectrum oracles", spectrum_oracles, 30),
        ("self-adjointness of in-domain pairs", self_adjointness, 10),
        ("dimension recovery", dimension_recovery, 5),
        ("metric recovery", metric_recovery, 60),
        ("topology-change dynamics", topology_change, 300),
        ("measurement asymmetry", measurement_asymmetry, 5),
        ("Gel'fand suite", gelfand_suite, 10),
        ("smoothness degradation", smoothness, 30),
    ];
    let mut failures = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let in_time = secs < *limit as f64;
        let (ok, detail) = match outcome {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        failures += usize::from(!ok);
        println!(
            "{} {}. {name}: {detail} [{secs:.2} s of {limit} s]",
            if ok { "PASS" } else { "FAIL" },
            i + 1
        );
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
