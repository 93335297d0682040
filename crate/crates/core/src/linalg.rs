//! Small dense and banded linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn commutator(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a * b - b * a
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(0.0_f64, |acc, &s| acc.max(s))
}

/// Haar-distributed unitary via QR of a complex Ginibre matrix with the
/// diagonal phases of R divided out.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<C64> {
    let z = DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im) / std::f64::consts::SQRT_2
    });
    let qr = z.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random hermitian matrix with standard-normal entries (GUE-like).
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<C64> {
    let z = DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    });
    (&z + z.adjoint()) * C64::new(0.5, 0.0)
}

/// Random complex unit vector.
pub fn random_unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> nalgebra::DVector<C64> {
    let v = nalgebra::DVector::from_fn(n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    });
    let n = v.norm();
    v / C64::new(n, 0.0)
}

/// Finite-difference weights (Fornberg 1988) for derivatives 0..=m at `z`
/// from samples at `xs`. Returns `w[d][j]`.
pub fn fornberg_weights(z: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - z;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Hermitian band matrix stored by lower diagonals: `lower[d][i] = A[i + d][i]`.
#[derive(Debug, Clone)]
pub struct HermitianBand {
    n: usize,
    lower: Vec<Vec<C64>>,
}

impl HermitianBand {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self {
            n,
            lower: (0..=bandwidth).map(|d| vec![ZERO; n.saturating_sub(d)]).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.lower.len() - 1
    }

    /// Accumulate `value` at (row, col); the mirrored entry is implied.
    /// Entries above the diagonal are stored conjugated.
    pub fn add(&mut self, row: usize, col: usize, value: C64) {
        let (r, c, v) = if row >= col { (row, col, value) } else { (col, row, value.conj()) };
        let d = r - c;
        assert!(d < self.lower.len(), "entry ({row},{col}) outside band");
        self.lower[d][c] += v;
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        let (r, c, conj) = if row >= col { (row, col, false) } else { (col, row, true) };
        let d = r - c;
        if d >= self.lower.len() {
            return ZERO;
        }
        let v = self.lower[d][c];
        if conj {
            v.conj()
        } else {
            v
        }
    }

    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let b = self.bandwidth();
        for i in 0..self.n {
            let mut radius = 0.0;
            for j in i.saturating_sub(b)..(i + b + 1).min(self.n) {
                if j != i {
                    radius += self.get(i, j).norm();
                }
            }
            let d = self.get(i, i).re;
            lo = lo.min(d - radius);
            hi = hi.max(d + radius);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `sigma`, by Sylvester inertia of
    /// an unpivoted LDL^† factorization of `A - sigma`.
    pub fn count_below(&self, sigma: f64) -> usize {
        let n = self.n;
        let b = self.bandwidth();
        let scale = {
            let (lo, hi) = self.gershgorin();
            lo.abs().max(hi.abs()).max(1.0)
        };
        let tiny = f64::EPSILON * scale * 1e-3;
        // l[j][d] = L[j + d][j]; only the window of the last b columns is live.
        let mut d_piv = vec![0.0_f64; n];
        let mut l: Vec<Vec<C64>> = vec![vec![ZERO; b + 1]; n];
        let mut negatives = 0;
        for j in 0..n {
            let mut dj = self.get(j, j).re - sigma;
            for k in j.saturating_sub(b)..j {
                let ljk = l[k][j - k];
                dj -= ljk.norm_sqr() * d_piv[k];
            }
            if dj.abs() < tiny {
                dj = -tiny;
            }
            d_piv[j] = dj;
            if dj < 0.0 {
                negatives += 1;
            }
            for i in (j + 1)..(j + b + 1).min(n) {
                let mut v = self.get(i, j);
                for k in i.saturating_sub(b)..j {
                    if j - k <= b {
                        v -= l[k][i - k] * l[k][j - k].conj() * d_piv[k];
                    }
                }
                l[j][i - j] = v / dj;
            }
        }
        negatives
    }

    /// The `count` smallest eigenvalues by bisection on the inertia count.
    pub fn lowest_eigenvalues(&self, count: usize, abs_tol: f64) -> Vec<f64> {
        let (lo, hi) = self.gershgorin();
        let count = count.min(self.n);
        (0..count)
            .map(|idx| {
                let (mut a, mut b) = (lo - 1e-9, hi + 1e-9);
                while b - a > abs_tol.max(f64::EPSILON * b.abs().max(a.abs()) * 4.0) {
                    let mid = 0.5 * (a + b);
                    if self.count_below(mid) > idx {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                0.5 * (a + b)
            })
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }
}

/// A complex number written as a JSON number or a `[re, im]` pair.
pub fn complex_from_json(e: &serde_json::Value) -> Result<C64> {
    if let Some(x) = e.as_f64() {
        return Ok(C64::new(x, 0.0));
    }
    match e.as_array().map(|a| a.as_slice()) {
        Some([re, im]) => match (re.as_f64(), im.as_f64()) {
            (Some(re), Some(im)) => Ok(C64::new(re, im)),
            _ => Err(Error::InvalidInput(format!("bad complex entry {e}"))),
        },
        _ => Err(Error::InvalidInput(format!("bad complex entry {e}"))),
    }
}

/// A matrix written as a JSON array of equal-length rows.
pub fn matrix_from_json(v: &serde_json::Value) -> Result<DMatrix<C64>> {
    let rows = v
        .as_array()
        .filter(|r| !r.is_empty())
        .ok_or_else(|| Error::InvalidInput("matrix must be a non-empty JSON array of rows".into()))?;
    let ncols = rows[0].as_array().map_or(0, |r| r.len());
    let mut m = DMatrix::zeros(rows.len(), ncols);
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .filter(|r| r.len() == ncols && ncols > 0)
            .ok_or_else(|| Error::InvalidInput(format!("matrix row {i} is not an array of length {ncols}")))?;
        for (j, e) in row.iter().enumerate() {
            m[(i, j)] = complex_from_json(e)?;
        }
    }
    Ok(m)
}

pub fn vector_from_json(v: &serde_json::Value) -> Result<DVector<C64>> {
    let entries = v
        .as_array()
        .filter(|r| !r.is_empty())
        .ok_or_else(|| Error::InvalidInput("vector must be a non-empty JSON array".into()))?;
    let values = entries.iter().map(complex_from_json).collect::<Result<Vec<_>>>()?;
    Ok(DVector::from_vec(values))
}

pub fn matrix_to_json(m: &DMatrix<C64>) -> serde_json::Value {
    let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect();
    serde_json::json!(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fornberg_reproduces_classic_stencils() {
        let w = fornberg_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert!((w[1][0] + 0.5).abs() < 1e-15 && (w[1][2] - 0.5).abs() < 1e-15);
        assert!((w[2][0] - 1.0).abs() < 1e-15 && (w[2][1] + 2.0).abs() < 1e-15);
        // one-sided first derivative, 3 points: (-3, 4, -1)/2
        let w = fornberg_weights(0.0, &[0.0, 1.0, 2.0], 1);
        assert!((w[1][0] + 1.5).abs() < 1e-15);
        assert!((w[1][1] - 2.0).abs() < 1e-15);
        assert!((w[1][2] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 2, 5] {
            let u = haar_unitary(n, &mut rng);
            let defect = max_abs(&(&u * u.adjoint() - DMatrix::identity(n, n)));
            assert!(defect < 1e-13);
        }
    }

    #[test]
    fn band_sturm_matches_dense_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 30;
        let bw = 3;
        let mut band = HermitianBand::zeros(n, bw);
        for i in 0..n {
            band.add(i, i, C64::new(rng.random_range(-2.0..2.0), 0.0));
            for d in 1..=bw {
                if i + d < n {
                    band.add(i + d, i, C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
                }
            }
        }
        let dense = band.to_dense();
        assert!(hermiticity_defect(&dense) < 1e-15);
        let mut exact: Vec<f64> = dense.symmetric_eigen().eigenvalues.iter().copied().collect();
        exact.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let sturm = band.lowest_eigenvalues(n, 1e-12);
        for (a, b) in exact.iter().zip(&sturm) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn json_matrices_and_vectors() {
        let m = matrix_from_json(&serde_json::json!([[1, [0, 2]], [[0, -2], 3.5]])).unwrap();
        assert_eq!(m[(0, 1)], C64::new(0.0, 2.0));
        assert_eq!(m[(1, 1)], C64::new(3.5, 0.0));
        assert_eq!(matrix_from_json(&matrix_to_json(&m)).unwrap(), m);
        assert!(matrix_from_json(&serde_json::json!([[1, 2], [3]])).is_err());
        assert_eq!(vector_from_json(&serde_json::json!([1, [0, 1]])).unwrap().len(), 2);
        assert!(vector_from_json(&serde_json::json!([])).is_err());
    }
}
