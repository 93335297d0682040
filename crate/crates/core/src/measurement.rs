//! Sequential instantaneous measurements of two observables.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gelfand::{gelfand_transform, joint_spectrum, Expr, MatrixAlgebraPresentation, SpectrumPointSet};
use crate::linalg::{hermiticity_defect, max_abs, C64};
use crate::tolerances::PROJECTOR_CLUSTER;

/// Distinct eigenvalues of a hermitian matrix with their eigenspace projectors.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub projectors: Vec<DMatrix<C64>>,
    scale: f64,
}

impl SpectralDecomposition {
    pub fn new(m: &DMatrix<C64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::InvalidInput(format!("observable must be square and non-empty, got {}x{}", m.nrows(), m.ncols())));
        }
        let defect = hermiticity_defect(m);
        if defect > 1e-12 * max_abs(m).max(1.0) {
            return Err(Error::NotHermitian { defect });
        }
        let eig = m.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..m.nrows()).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let scale = eig.eigenvalues.iter().fold(1.0f64, |s, x| s.max(x.abs()));
        let mut clusters: Vec<Vec<usize>> = Vec::new();
        for &i in &order {
            match clusters.last_mut() {
                Some(c) if eig.eigenvalues[i] - eig.eigenvalues[*c.last().unwrap()] <= PROJECTOR_CLUSTER * scale => c.push(i),
                _ => clusters.push(vec![i]),
            }
        }
        let eigenvalues = clusters
            .iter()
            .map(|c| c.iter().map(|&i| eig.eigenvalues[i]).sum::<f64>() / c.len() as f64)
            .collect();
        let projectors = clusters
            .iter()
            .map(|c| {
                let v = eig.eigenvectors.select_columns(c.iter());
                &v * v.adjoint()
            })
            .collect();
        Ok(Self { eigenvalues, projectors, scale })
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].nrows()
    }

    /// Index of the eigenvalue closest to `value`.
    pub fn find(&self, value: f64) -> Result<usize> {
        self.eigenvalues
            .iter()
            .position(|e| (e - value).abs() <= 1e-8 * self.scale)
            .ok_or(Error::EigenvalueNotFound(value))
    }

    /// `max |Σ Π − 1|`.
    pub fn resolution_defect(&self) -> f64 {
        let n = self.dim();
        let sum = self.projectors.iter().fold(DMatrix::zeros(n, n), |acc, p| acc + p);
        max_abs(&(sum - DMatrix::identity(n, n)))
    }
}

#[derive(Debug, Clone)]
pub struct ObservablePair {
    pub a: DMatrix<C64>,
    pub b: DMatrix<C64>,
    pub spec_a: SpectralDecomposition,
    pub spec_b: SpectralDecomposition,
}

impl ObservablePair {
    pub fn new(a: DMatrix<C64>, b: DMatrix<C64>) -> Result<Self> {
        if a.shape() != b.shape() {
            return Err(Error::InvalidInput(format!("observables have shapes {:?} and {:?}", a.shape(), b.shape())));
        }
        let spec_a = SpectralDecomposition::new(&a)?;
        let spec_b = SpectralDecomposition::new(&b)?;
        Ok(Self { a, b, spec_a, spec_b })
    }

    /// The same observables measured in the opposite order.
    pub fn swapped(&self) -> Self {
        Self { a: self.b.clone(), b: self.a.clone(), spec_a: self.spec_b.clone(), spec_b: self.spec_a.clone() }
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

fn check_state(psi: &DVector<C64>, dim: usize) -> Result<()> {
    if psi.len() != dim {
        return Err(Error::InvalidInput(format!("state has dimension {}, observables {dim}", psi.len())));
    }
    let n2 = psi.norm_squared();
    if (n2.sqrt() - 1.0).abs() > 1e-10 {
        return Err(Error::UnnormalizedState(n2));
    }
    Ok(())
}

fn sequential_by_index(pair: &ObservablePair, psi: &DVector<C64>, ia: usize, ib: usize) -> f64 {
    (&pair.spec_b.projectors[ib] * (&pair.spec_a.projectors[ia] * psi)).norm_squared()
}

/// Probability of finding `alpha` for `a` and then `beta` for `b`:
/// `‖Π_β Π_α ψ‖²`.
pub fn sequential_probability(pair: &ObservablePair, psi: &DVector<C64>, alpha: f64, beta: f64) -> Result<f64> {
    check_state(psi, pair.dim())?;
    let ia = pair.spec_a.find(alpha)?;
    let ib = pair.spec_b.find(beta)?;
    Ok(sequential_by_index(pair, psi, ia, ib))
}

/// One row of the outcome table: `p_ab` measures `a` first, `p_ba` measures `b` first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutcomeRow {
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "P_ab")]
    pub p_ab: f64,
    #[serde(rename = "P_ba")]
    pub p_ba: f64,
}

pub fn outcome_table(pair: &ObservablePair, psi: &DVector<C64>) -> Result<Vec<OutcomeRow>> {
    check_state(psi, pair.dim())?;
    let rev = pair.swapped();
    let mut rows = Vec::new();
    for (ia, &alpha) in pair.spec_a.eigenvalues.iter().enumerate() {
        for (ib, &beta) in pair.spec_b.eigenvalues.iter().enumerate() {
            rows.push(OutcomeRow {
                alpha,
                beta,
                p_ab: sequential_by_index(pair, psi, ia, ib),
                p_ba: sequential_by_index(&rev, psi, ib, ia),
            });
        }
    }
    Ok(rows)
}

/// Largest change of an outcome probability under reversal of the order.
pub fn order_asymmetry(pair: &ObservablePair, psi: &DVector<C64>) -> Result<f64> {
    Ok(outcome_table(pair, psi)?.iter().map(|r| (r.p_ab - r.p_ba).abs()).fold(0.0, f64::max))
}

/// A state restricted to a commutative algebra: weights on its joint spectrum.
#[derive(Debug, Clone)]
pub struct ClassicalDistribution {
    pub spectrum: SpectrumPointSet,
    pub weights: Vec<f64>,
}

impl ClassicalDistribution {
    /// `Σ_x w(x) b_c(x)`.
    pub fn expectation(&self, b: &Expr) -> Result<C64> {
        let values = gelfand_transform(b, &self.spectrum)?;
        Ok(values.iter().zip(&self.weights).map(|(v, w)| v * *w).sum())
    }
}

pub fn classical_distribution(alg: &MatrixAlgebraPresentation, psi: &DVector<C64>) -> Result<ClassicalDistribution> {
    check_state(psi, alg.dim())?;
    let spectrum = joint_spectrum(alg, 1e-10)?;
    let weights = spectrum.points.iter().map(|p| (p.basis.adjoint() * psi).norm_squared()).collect();
    Ok(ClassicalDistribution { spectrum, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ONE, ZERO};

    fn sz() -> DMatrix<C64> {
        DMatrix::from_diagonal(&DVector::from_vec(vec![ONE, -ONE]))
    }

    fn sx() -> DMatrix<C64> {
        DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    fn up() -> DVector<C64> {
        DVector::from_vec(vec![ONE, ZERO])
    }

    #[test]
    fn qubit_examples() {
        let same = ObservablePair::new(sz(), sz()).unwrap();
        assert!((sequential_probability(&same, &up(), 1.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
        let zx = ObservablePair::new(sz(), sx()).unwrap();
        assert!((sequential_probability(&zx, &up(), 1.0, 1.0).unwrap() - 0.5).abs() < 1e-14);
        let xz = ObservablePair::new(sx(), sz()).unwrap();
        assert!((sequential_probability(&xz, &up(), 1.0, 1.0).unwrap() - 0.25).abs() < 1e-14);
        assert!((order_asymmetry(&zx, &up()).unwrap() - 0.25).abs() < 1e-14);
        assert_eq!(order_asymmetry(&same, &up()).unwrap(), 0.0);
    }

    #[test]
    fn errors() {
        let zx = ObservablePair::new(sz(), sx()).unwrap();
        assert_eq!(sequential_probability(&zx, &up(), 3.0, 1.0), Err(Error::EigenvalueNotFound(3.0)));
        let long = DVector::from_vec(vec![ONE, ONE]);
        assert!(matches!(sequential_probability(&zx, &long, 1.0, 1.0), Err(Error::UnnormalizedState(_))));
        let skew = DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        assert!(matches!(ObservablePair::new(skew, sz()), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn degenerate_projectors_resolve_identity() {
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![ONE * 5.0, ONE * 5.0, ONE * 7.0]));
        let s = SpectralDecomposition::new(&b).unwrap();
        assert_eq!(s.eigenvalues.len(), 2);
        assert!(s.resolution_defect() < 1e-10);
    }

    #[test]
    fn classical_weights_for_sigma_z() {
        let alg = MatrixAlgebraPresentation::unlabelled(vec![sz()]).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let psi = DVector::from_vec(vec![ONE * r, ONE * r]);
        let d = classical_distribution(&alg, &psi).unwrap();
        assert_eq!(d.weights.len(), 2);
        assert!(d.weights.iter().all(|w| (w - 0.5).abs() < 1e-12));
        let id = MatrixAlgebraPresentation::unlabelled(vec![DMatrix::identity(2, 2)]).unwrap();
        let d = classical_distribution(&id, &psi).unwrap();
        assert_eq!(d.weights.len(), 1);
        assert!((d.weights[0] - 1.0).abs() < 1e-12);
        let noncommuting = MatrixAlgebraPresentation::unlabelled(vec![sz(), sx()]).unwrap();
        assert!(matches!(classical_distribution(&noncommuting, &psi), Err(Error::NotCommuting { .. })));
    }
}
