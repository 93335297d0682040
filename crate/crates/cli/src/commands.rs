use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use qtopo_core::bc_dynamics::{topology_change_experiment, write_experiment_csv, ExperimentConfig};
use qtopo_core::interval_domain::{BoundaryUnitary, Grid};
use qtopo_core::linalg::{commutator, matrix_from_json, max_abs, vector_from_json};
use qtopo_core::measurement::{order_asymmetry, outcome_table, ObservablePair};
use qtopo_core::spectral_geometry::{distance_matrix, estimate_dimension, path_hopping, DistanceProblem};
use qtopo_core::spectral_solver::{solve_spectrum, solve_spectrum_on};
use qtopo_core::tolerances;
use qtopo_core::topology_reconstruct::{classify_topology, TopologyKind};
use serde_json::{json, Value};

use crate::output::{emit, json_bytes, write_atomic};
use crate::{read_text, CliError};

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn parse_json(text: &str, what: &str) -> Result<Value, CliError> {
    serde_json::from_str(text).map_err(|e| invalid(format!("{what}: {e}")))
}

fn read_json(path: &PathBuf) -> Result<Value, CliError> {
    parse_json(&read_text(path)?, &path.display().to_string())
}

/// Preset name, path to a JSON file, or an inline JSON matrix.
fn parse_unitary(arg: &str) -> Result<BoundaryUnitary, CliError> {
    if let Some(u) = BoundaryUnitary::from_preset(arg) {
        return Ok(u);
    }
    let path = Path::new(arg);
    let value = if path.is_file() { read_json(&path.to_path_buf())? } else { parse_json(arg, "boundary unitary")? };
    Ok(BoundaryUnitary::from_json_value(&value)?)
}

fn positive(n: i64, name: &str) -> Result<usize, CliError> {
    usize::try_from(n).ok().filter(|n| *n > 0).ok_or_else(|| invalid(format!("{name} must be a positive integer, got {n}")))
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    /// Boundary unitary: case_a, case_b, hadamard, a JSON file, or an inline JSON 2x2 matrix.
    #[arg(long)]
    u: String,
    /// Number of eigenvalues.
    #[arg(long, allow_hyphen_values = true)]
    n: i64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Grid points used to sample eigenfunctions.
    #[arg(long, default_value_t = tolerances::DEFAULT_NX)]
    grid: usize,
    /// JSON output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory receiving one CSV per eigenfunction.
    #[arg(long)]
    eigenfunctions: Option<PathBuf>,
}

pub fn spectrum(a: SpectrumArgs) -> Result<(), CliError> {
    let u = parse_unitary(&a.u)?;
    let n = positive(a.n, "--n")?;
    if a.tol.is_nan() || a.tol <= 0.0 {
        return Err(invalid("--tol must be positive"));
    }
    let grid = Grid::new(a.grid)?;
    let result = solve_spectrum_on(&u, n, a.tol, grid)?;
    if let Some(dir) = &a.eigenfunctions {
        for (i, f) in result.eigenfunctions.iter().enumerate() {
            let mut buf = Vec::new();
            f.write_csv(&mut buf).map_err(|e| CliError::io(dir, e))?;
            write_atomic(&dir.join(format!("psi_{i:03}.csv")), &buf)?;
        }
    }
    emit(a.out.as_deref(), &json_bytes(&result.to_json()))
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    u: String,
    /// Number of low-lying states whose densities are compared.
    #[arg(long, default_value_t = 12)]
    n_states: usize,
    /// Highest derivative order checked at the endpoints.
    #[arg(long = "order", short = 'D', default_value_t = 2)]
    order: usize,
    #[arg(long, default_value_t = tolerances::GLUING_REL)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn reconstruct(a: ReconstructArgs) -> Result<(), CliError> {
    let u = parse_unitary(&a.u)?;
    let space = classify_topology(&u, a.n_states, a.order, a.tol)?;
    let mut value = serde_json::to_value(&space).expect("topology serializes");
    value["schema"] = json!(1);
    value["diagram"] = json!(space.diagram());
    eprintln!("{}", space.diagram());
    emit(a.out.as_deref(), &json_bytes(&value))
}

#[derive(Debug, Args)]
pub struct DimensionArgs {
    /// Eigenvalue file: spectrum JSON, a JSON array, or numbers separated by whitespace or commas.
    #[arg(long)]
    input: PathBuf,
    /// Power of the operator whose eigenvalues are given.
    #[arg(long, default_value_t = 2)]
    order: u32,
    /// One-based inclusive index window, e.g. 20..100.
    #[arg(long)]
    window: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_eigenvalues(path: &PathBuf) -> Result<Vec<f64>, CliError> {
    let text = read_text(path)?;
    let trimmed = text.trim_start();
    let values: Vec<f64> = if trimmed.starts_with('{') || trimmed.starts_with('[') {
        let v = parse_json(&text, &path.display().to_string())?;
        let arr = v.get("eigenvalues").unwrap_or(&v);
        arr.as_array()
            .ok_or_else(|| invalid("eigenvalue JSON must be an array or contain \"eigenvalues\""))?
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| invalid(format!("non-numeric eigenvalue {x}"))))
            .collect::<Result<_, _>>()?
    } else {
        text.lines()
            .filter(|l| !l.trim_start().starts_with('#'))
            .flat_map(|l| l.split(|c: char| c.is_whitespace() || c == ','))
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|_| invalid(format!("non-numeric eigenvalue {t:?}"))))
            .collect::<Result<_, _>>()?
    };
    if values.is_empty() {
        return Err(invalid(format!("{} holds no eigenvalues", path.display())));
    }
    Ok(values)
}

fn parse_window(text: &str) -> Result<(usize, usize), CliError> {
    let (lo, hi) = text
        .split_once("..=")
        .or_else(|| text.split_once(".."))
        .ok_or_else(|| invalid(format!("window {text:?} must look like 20..100")))?;
    let lo = lo.trim().parse().map_err(|_| invalid(format!("bad window start {lo:?}")))?;
    let hi = hi.trim().parse().map_err(|_| invalid(format!("bad window end {hi:?}")))?;
    Ok((lo, hi))
}

pub fn dimension(a: DimensionArgs) -> Result<(), CliError> {
    let eigs = read_eigenvalues(&a.input)?;
    let (lo, hi) = match &a.window {
        Some(w) => parse_window(w)?,
        None if eigs.len() >= 40 => (20, eigs.len().min(100)),
        None => (eigs.len().div_ceil(2).max(1), eigs.len()),
    };
    let fit = estimate_dimension(&eigs, a.order, lo..=hi)?;
    let mut value = serde_json::to_value(&fit).expect("fit serializes");
    value["schema"] = json!(1);
    value["order"] = json!(a.order);
    emit(a.out.as_deref(), &json_bytes(&value))
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    /// Hamiltonian as a JSON matrix (entries are numbers or [re, im]).
    #[arg(long)]
    hamiltonian: PathBuf,
    #[arg(long, default_value_t = 1)]
    order: u32,
    /// Comma-separated zero-based point indices; all points when absent.
    #[arg(long, value_delimiter = ',')]
    points: Vec<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn distance(a: DistanceArgs) -> Result<(), CliError> {
    if a.order == 0 {
        return Err(invalid("--order must be at least 1"));
    }
    let h = matrix_from_json(&read_json(&a.hamiltonian)?)?;
    if !h.is_square() {
        return Err(invalid(format!("Hamiltonian is {}x{}, not square", h.nrows(), h.ncols())));
    }
    let mut prob = DistanceProblem::new(h, a.order)?.with_seed(a.seed);
    if let Some(r) = a.restarts {
        prob = prob.with_restarts(r.max(1));
    }
    if let Some(p) = a.points.iter().find(|&&p| p >= prob.dim()) {
        return Err(invalid(format!("point {p} outside 0..{}", prob.dim())));
    }
    let pts: Vec<usize> = if a.points.is_empty() { (0..prob.dim()).collect() } else { a.points.clone() };
    let d = distance_matrix(&prob, &pts)?;
    let mut csv = String::new();
    let header: Vec<String> = pts.iter().map(|p| p.to_string()).collect();
    writeln!(csv, "point,{}", header.join(",")).unwrap();
    for (i, p) in pts.iter().enumerate() {
        let row: Vec<String> = (0..pts.len())
            .map(|j| if d[(i, j)].is_infinite() { "inf".to_string() } else { format!("{:.12}", d[(i, j)]) })
            .collect();
        writeln!(csv, "{p},{}", row.join(",")).unwrap();
    }
    emit(a.out.as_deref(), csv.as_bytes())
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    /// TOML config file or bundled preset name.
    #[arg(long)]
    config: String,
    /// CSV output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_config(arg: &str) -> Result<ExperimentConfig, CliError> {
    let path = Path::new(arg);
    if path.is_file() {
        return Ok(ExperimentConfig::from_toml(&read_text(&path.to_path_buf())?)?);
    }
    ExperimentConfig::preset(arg).ok_or_else(|| {
        invalid(format!("{arg:?} is neither a config file nor one of {:?}", ExperimentConfig::preset_names()))
    })
}

pub fn evolve(a: EvolveArgs) -> Result<(), CliError> {
    let config = load_config(&a.config)?;
    let rows = topology_change_experiment(&config)?;
    let mut buf = Vec::new();
    write_experiment_csv(&rows, &mut buf).map_err(|e| CliError::io(Path::new("<buffer>"), e))?;
    if let (Some(first), Some(last)) = (rows.first(), rows.last()) {
        eprintln!(
            "t = {:.3}: P_a = {:.4}, P_b = {:.4}, P_other = {:.4}, norm drift = {:.2e}, energy drift = {:.2e}",
            last.t,
            last.p_a,
            last.p_b,
            last.p_other,
            (last.norm - 1.0).abs(),
            ((last.energy - first.energy) / first.energy).abs()
        );
    }
    emit(a.out.as_deref(), &buf)
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    /// Observable measured first, as a JSON matrix.
    #[arg(long)]
    a: PathBuf,
    /// Observable measured second.
    #[arg(long)]
    b: PathBuf,
    /// State vector as a JSON array.
    #[arg(long)]
    state: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn measure(a: MeasureArgs) -> Result<(), CliError> {
    let ma = matrix_from_json(&read_json(&a.a)?)?;
    let mb = matrix_from_json(&read_json(&a.b)?)?;
    let psi = vector_from_json(&read_json(&a.state)?)?;
    let commutator_norm = if ma.shape() == mb.shape() { max_abs(&commutator(&ma, &mb)) } else { f64::NAN };
    let pair = ObservablePair::new(ma, mb)?;
    let table = outcome_table(&pair, &psi)?;
    let value = json!({
        "schema": 1,
        "table": table,
        "order_asymmetry": order_asymmetry(&pair, &psi)?,
        "commutator_norm": commutator_norm,
    });
    emit(a.out.as_deref(), &json_bytes(&value))
}

type Check = (&'static str, fn() -> Result<bool, CliError>);

fn levels_match(u: BoundaryUnitary, expect: &[f64]) -> Result<bool, CliError> {
    let s = solve_spectrum(&u, expect.len(), 1e-10)?;
    Ok(s.eigenvalues.iter().zip(expect).all(|(a, b)| (a - b).abs() < 1e-8))
}

fn check_case_a() -> Result<bool, CliError> {
    levels_match(BoundaryUnitary::case_a(0.0, 0.0), &[0.0, 0.25, 0.25, 1.0, 1.0, 2.25, 2.25, 4.0, 4.0, 6.25])
}

fn check_case_b() -> Result<bool, CliError> {
    levels_match(BoundaryUnitary::case_b(0.0, 0.0), &[0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 4.0, 4.0, 4.0, 4.0])
}

fn check_topologies() -> Result<bool, CliError> {
    let cases = [("case_a", TopologyKind::Circle), ("case_b", TopologyKind::TwoCircles), ("hadamard", TopologyKind::TwoIntervals)];
    for (name, kind) in cases {
        let u = BoundaryUnitary::from_preset(name).expect("preset exists");
        if classify_topology(&u, 12, 2, tolerances::GLUING_REL)?.kind != kind {
            return Ok(false);
        }
    }
    Ok(true)
}

fn check_path_distance() -> Result<bool, CliError> {
    let (n, h) = (8, 0.5);
    let prob = DistanceProblem::new(path_hopping(n, 1.0 / h), 1)?;
    let d = distance_matrix(&prob, &[0, n - 1])?;
    Ok((d[(0, 1)] - (n - 1) as f64 * h).abs() < 1e-6)
}

fn check_measurement() -> Result<bool, CliError> {
    let sz = matrix_from_json(&json!([[1, 0], [0, -1]]))?;
    let sx = matrix_from_json(&json!([[0, 1], [1, 0]]))?;
    let up = vector_from_json(&json!([1, 0]))?;
    let pair = ObservablePair::new(sz, sx)?;
    let asym = order_asymmetry(&pair, &up)?;
    Ok((asym - 0.25).abs() < 1e-12)
}

pub fn selftest() -> Result<(), CliError> {
    let checks: [Check; 5] = [
        ("circle spectrum", check_case_a),
        ("two-circle spectrum", check_case_b),
        ("topology triple", check_topologies),
        ("path-graph distance", check_path_distance),
        ("measurement order asymmetry", check_measurement),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let ok = matches!(check(), Ok(true));
        failed += usize::from(!ok);
        println!("{} {name} ({:.2} s)", if ok { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
    }
    if failed > 0 {
        return Err(CliError::Numerical(format!("{failed} self-test check(s) failed")));
    }
    Ok(())
}
