//! Joint spectra of commuting matrix algebras, Gel'fand transforms, the C*
//! norm, and the clock/shift generators of the fuzzy torus.

use nalgebra::{DMatrix, Schur, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::{commutator, max_abs, C64, ONE, ZERO};
use crate::tolerances;

/// An algebra given by generating matrices of a common size.
#[derive(Debug, Clone)]
pub struct MatrixAlgebraPresentation {
    pub generators: Vec<DMatrix<C64>>,
    pub labels: Vec<String>,
}

impl MatrixAlgebraPresentation {
    pub fn new(generators: Vec<DMatrix<C64>>, labels: Vec<String>) -> Result<Self> {
        let Some(first) = generators.first() else {
            return Err(Error::InvalidInput("an algebra needs at least one generator".into()));
        };
        let k = first.nrows();
        if generators.iter().any(|g| g.nrows() != k || g.ncols() != k) {
            return Err(Error::InvalidInput("generators must be square and of equal size".into()));
        }
        if labels.len() != generators.len() {
            return Err(Error::InvalidInput("one label per generator".into()));
        }
        Ok(Self { generators, labels })
    }

    /// Generators labelled `g0, g1, …`.
    pub fn unlabelled(generators: Vec<DMatrix<C64>>) -> Result<Self> {
        let labels = (0..generators.len()).map(|i| format!("g{i}")).collect();
        Self::new(generators, labels)
    }

    pub fn dim(&self) -> usize {
        self.generators[0].nrows()
    }
}

/// One character with its multiplicity and an orthonormal basis of the
/// joint eigenspace (columns).
#[derive(Debug, Clone)]
pub struct SpectrumPoint {
    pub character: Vec<C64>,
    pub multiplicity: usize,
    pub basis: DMatrix<C64>,
}

#[derive(Debug, Clone)]
pub struct SpectrumPointSet {
    pub points: Vec<SpectrumPoint>,
}

impl SpectrumPointSet {
    pub fn total_multiplicity(&self) -> usize {
        self.points.iter().map(|p| p.multiplicity).sum()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Euclidean distances between characters in `ℂ^m`.
    pub fn distance_matrix(&self) -> DMatrix<f64> {
        let n = self.points.len();
        DMatrix::from_fn(n, n, |i, j| character_distance(&self.points[i].character, &self.points[j].character))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let pts: Vec<serde_json::Value> = self
            .points
            .iter()
            .map(|p| {
                let ch: Vec<[f64; 2]> = p.character.iter().map(|z| [z.re, z.im]).collect();
                serde_json::json!({ "character": ch, "multiplicity": p.multiplicity })
            })
            .collect();
        serde_json::json!({ "schema": 1, "points": pts })
    }
}

fn character_distance(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

fn split_by_generator(q: &DMatrix<C64>, g: &DMatrix<C64>, cluster: f64) -> Vec<DMatrix<C64>> {
    let b = q.adjoint() * g * q;
    let d = b.nrows();
    if d == 1 {
        return vec![q.clone()];
    }
    let (z, t) = Schur::new(b).unpack();
    let eig: Vec<C64> = (0..d).map(|i| t[(i, i)]).collect();
    // single-linkage clustering of the eigenvalues
    let mut label: Vec<usize> = (0..d).collect();
    for i in 0..d {
        for j in 0..i {
            if (eig[i] - eig[j]).norm() < cluster {
                let (li, lj) = (label[i], label[j]);
                for l in label.iter_mut() {
                    if *l == li {
                        *l = lj;
                    }
                }
            }
        }
    }
    let mut groups: Vec<usize> = label.clone();
    groups.sort_unstable();
    groups.dedup();
    groups
        .into_iter()
        .map(|gid| {
            let cols: Vec<usize> = (0..d).filter(|&i| label[i] == gid).collect();
            let sub = z.select_columns(&cols);
            q * sub
        })
        .collect()
}

/// Simultaneous diagonalization of commuting normal generators.
pub fn joint_spectrum(alg: &MatrixAlgebraPresentation, tol: f64) -> Result<SpectrumPointSet> {
    for (index, g) in alg.generators.iter().enumerate() {
        let defect = max_abs(&commutator(g, &g.adjoint()));
        if defect > tol.max(1e-10) {
            return Err(Error::NotNormal { index, defect });
        }
    }
    for i in 0..alg.generators.len() {
        for j in (i + 1)..alg.generators.len() {
            let defect = max_abs(&commutator(&alg.generators[i], &alg.generators[j]));
            if defect > tol {
                return Err(Error::NotCommuting { i, j, defect });
            }
        }
    }
    let k = alg.dim();
    let mut blocks = vec![DMatrix::<C64>::identity(k, k)];
    for g in &alg.generators {
        let cluster = tolerances::POINT_MERGE * max_abs(g).max(1.0);
        blocks = blocks.iter().flat_map(|q| split_by_generator(q, g, cluster)).collect();
    }
    let mut points: Vec<SpectrumPoint> = Vec::new();
    for q in blocks {
        let d = q.ncols();
        let character: Vec<C64> = alg.generators.iter().map(|g| (q.adjoint() * g * &q).trace() / d as f64).collect();
        if let Some(p) = points
            .iter_mut()
            .find(|p| character_distance(&p.character, &character) < tolerances::POINT_MERGE)
        {
            let mut basis = DMatrix::zeros(k, p.multiplicity + d);
            basis.columns_mut(0, p.multiplicity).copy_from(&p.basis);
            basis.columns_mut(p.multiplicity, d).copy_from(&q);
            p.basis = basis;
            p.multiplicity += d;
        } else {
            points.push(SpectrumPoint { character, multiplicity: d, basis: q });
        }
    }
    points.sort_by(|a, b| {
        let key = |p: &SpectrumPoint| p.character.iter().flat_map(|z| [z.re, z.im]).collect::<Vec<f64>>();
        key(a).partial_cmp(&key(b)).unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(SpectrumPointSet { points })
}

/// Polynomial expression in the generators of an algebra.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Identity,
    Gen(usize),
    Scalar(C64),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Adjoint(Box<Expr>),
    Pow(Box<Expr>, u32),
}

impl Expr {
    pub fn generator(i: usize) -> Self {
        Expr::Gen(i)
    }

    pub fn scalar(z: C64) -> Self {
        Expr::Scalar(z)
    }

    pub fn plus(self, other: Expr) -> Self {
        Expr::Add(Box::new(self), Box::new(other))
    }

    pub fn times(self, other: Expr) -> Self {
        Expr::Mul(Box::new(self), Box::new(other))
    }

    pub fn adjoint(self) -> Self {
        Expr::Adjoint(Box::new(self))
    }

    pub fn pow(self, n: u32) -> Self {
        Expr::Pow(Box::new(self), n)
    }

    /// The matrix this expression denotes.
    pub fn eval_matrix(&self, alg: &MatrixAlgebraPresentation) -> Result<DMatrix<C64>> {
        let k = alg.dim();
        Ok(match self {
            Expr::Identity => DMatrix::identity(k, k),
            Expr::Gen(i) => alg
                .generators
                .get(*i)
                .cloned()
                .ok_or_else(|| Error::InvalidInput(format!("no generator {i}")))?,
            Expr::Scalar(z) => DMatrix::identity(k, k) * *z,
            Expr::Add(a, b) => a.eval_matrix(alg)? + b.eval_matrix(alg)?,
            Expr::Mul(a, b) => a.eval_matrix(alg)? * b.eval_matrix(alg)?,
            Expr::Adjoint(a) => a.eval_matrix(alg)?.adjoint(),
            Expr::Pow(a, n) => {
                let m = a.eval_matrix(alg)?;
                (0..*n).fold(DMatrix::identity(k, k), |acc, _| acc * &m)
            }
        })
    }

    /// Value at a character.
    pub fn eval_character(&self, character: &[C64]) -> Result<C64> {
        Ok(match self {
            Expr::Identity => ONE,
            Expr::Gen(i) => *character.get(*i).ok_or_else(|| Error::InvalidInput(format!("no generator {i}")))?,
            Expr::Scalar(z) => *z,
            Expr::Add(a, b) => a.eval_character(character)? + b.eval_character(character)?,
            Expr::Mul(a, b) => a.eval_character(character)? * b.eval_character(character)?,
            Expr::Adjoint(a) => a.eval_character(character)?.conj(),
            Expr::Pow(a, n) => a.eval_character(character)?.powu(*n),
        })
    }
}

/// `a_c(x)` at every point of the spectrum.
pub fn gelfand_transform(a: &Expr, spectrum: &SpectrumPointSet) -> Result<Vec<C64>> {
    spectrum.points.iter().map(|p| a.eval_character(&p.character)).collect()
}

/// `√λ_max(a^† a)`.
pub fn cstar_norm(a: &DMatrix<C64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let ata = a.adjoint() * a;
    let eig = SymmetricEigen::new(ata).eigenvalues;
    eig.iter().cloned().fold(0.0, f64::max).max(0.0).sqrt()
}

/// Clock `U₁ = diag(ω^j)` and cyclic shift `U₂` with `ω = e^{2πi/K}`.
pub fn fuzzy_torus(k: usize) -> Result<MatrixAlgebraPresentation> {
    if k == 0 {
        return Err(Error::InvalidInput("fuzzy torus needs K >= 1".into()));
    }
    let omega = std::f64::consts::TAU / k as f64;
    let clock = DMatrix::from_fn(k, k, |i, j| if i == j { C64::from_polar(1.0, omega * i as f64) } else { ZERO });
    let shift = DMatrix::from_fn(k, k, |i, j| if i == (j + 1) % k { ONE } else { ZERO });
    MatrixAlgebraPresentation::new(vec![clock, shift], vec!["U1".into(), "U2".into()])
}

/// `ω = e^{2πi/K}` for [`fuzzy_torus`].
pub fn torus_root(k: usize) -> C64 {
    C64::from_polar(1.0, std::f64::consts::TAU / k as f64)
}

/// Spectrum of the single clock unitary of size `n_trunc`: evenly spaced
/// points on the unit circle.
pub fn circle_from_truncated_algebra(n_trunc: usize) -> Result<SpectrumPointSet> {
    if n_trunc < 4 {
        return Err(Error::InvalidInput(format!("truncation must be at least 4, got {n_trunc}")));
    }
    let torus = fuzzy_torus(n_trunc)?;
    let clock = MatrixAlgebraPresentation::new(vec![torus.generators[0].clone()], vec!["U".into()])?;
    joint_spectrum(&clock, 1e-10)
}

/// Largest gap between consecutive arguments of single-generator points.
pub fn max_angular_gap(spectrum: &SpectrumPointSet) -> f64 {
    let mut angles: Vec<f64> = spectrum.points.iter().map(|p| p.character[0].arg().rem_euclid(std::f64::consts::TAU)).collect();
    angles.sort_by(f64::total_cmp);
    let n = angles.len();
    if n == 0 {
        return std::f64::consts::TAU;
    }
    let wrap = angles[0] + std::f64::consts::TAU - angles[n - 1];
    angles.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::max)
}
