//! Spectrum of `H = -d²/dx²` on two intervals under a boundary unitary.
//!
//! Each eigenfunction is a pair of plane-wave combinations
//! `ψ_i(x) = a_i e^{ikx} + b_i e^{-ikx}` whose coefficients span the kernel of
//! a 4×4 secular matrix; eigenvalues are `λ = k²`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix4, Vector4};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval_domain::{BoundaryUnitary, Grid, WaveField, TWO_PI};
use crate::linalg::{HermitianBand, C64, I, ZERO};
use crate::tolerances;

/// One eigenfunction in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mode {
    pub k: f64,
    pub a: [C64; 2],
    pub b: [C64; 2],
}

impl Mode {
    pub fn eigenvalue(&self) -> f64 {
        self.k * self.k
    }

    pub fn value(&self, x: f64) -> [C64; 2] {
        self.derivative(x, 0)
    }

    /// `d^m ψ / dx^m` at `x`.
    pub fn derivative(&self, x: f64, m: u32) -> [C64; 2] {
        let ik = I * self.k;
        let fa = ik.powu(m) * C64::from_polar(1.0, self.k * x);
        let fb = (-ik).powu(m) * C64::from_polar(1.0, -self.k * x);
        [self.a[0] * fa + self.b[0] * fb, self.a[1] * fa + self.b[1] * fb]
    }

    pub fn sample(&self, grid: Grid) -> WaveField {
        WaveField::from_fn(grid, |x| self.value(x))
    }

    /// Exact `L²` inner product `(self, other)`.
    pub fn inner(&self, other: &Mode) -> C64 {
        let (k, q) = (self.k, other.k);
        let mut s = ZERO;
        for i in 0..2 {
            s += self.a[i].conj() * other.a[i] * phase_integral(q - k)
                + self.a[i].conj() * other.b[i] * phase_integral(-q - k)
                + self.b[i].conj() * other.a[i] * phase_integral(q + k)
                + self.b[i].conj() * other.b[i] * phase_integral(k - q);
        }
        s
    }

    fn combine(&self, other: &Mode, c: C64) -> Mode {
        Mode {
            k: self.k,
            a: [self.a[0] + c * other.a[0], self.a[1] + c * other.a[1]],
            b: [self.b[0] + c * other.b[0], self.b[1] + c * other.b[1]],
        }
    }

    fn scale(&self, c: C64) -> Mode {
        Mode { k: self.k, a: [self.a[0] * c, self.a[1] * c], b: [self.b[0] * c, self.b[1] * c] }
    }

    /// Largest matching-condition defect for values and scaled derivatives.
    pub fn boundary_residual(&self, u: &BoundaryUnitary) -> f64 {
        let scale = 1.0 + self.k;
        let mut worst = 0.0_f64;
        for m in 0..2 {
            let end = self.derivative(TWO_PI, m);
            let start = u.apply(self.derivative(0.0, m));
            let r = (end[0] - start[0]).norm().max((end[1] - start[1]).norm());
            worst = worst.max(if m == 0 { r } else { r / scale });
        }
        worst
    }
}

/// `∫_0^{2π} e^{iqx} dx`.
fn phase_integral(q: f64) -> C64 {
    if q.abs() < 1e-300 {
        return C64::new(TWO_PI, 0.0);
    }
    let num = C64::new(-2.0 * (PI * q).sin().powi(2), (TWO_PI * q).sin());
    num / (I * q)
}

/// Eigenvalues, multiplicities and eigenfunctions of one boundary condition.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub u: BoundaryUnitary,
    /// Sorted, repeated according to multiplicity.
    pub eigenvalues: Vec<f64>,
    /// Multiplicity of the level each entry of `eigenvalues` belongs to.
    pub multiplicities: Vec<usize>,
    pub modes: Vec<Mode>,
    pub eigenfunctions: Vec<WaveField>,
}

impl SpectrumResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Distinct levels with their full multiplicities.
    pub fn levels(&self) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for (&l, &m) in self.eigenvalues.iter().zip(&self.multiplicities) {
            if out.last().is_none_or(|&(p, _)| (l - p).abs() > tolerances::LEVEL_MERGE) {
                out.push((l, m));
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema": 1,
            "u": self.u.to_json_value(),
            "eigenvalues": self.eigenvalues,
            "multiplicities": self.multiplicities,
        })
    }
}

/// Matrix whose kernel holds the coefficients `(a₁, b₁, a₂, b₂)` of
/// plane-wave pairs meeting the boundary condition at wave number `k`.
/// Derivative rows are divided by `ik`.
pub fn secular_matrix(u: &BoundaryUnitary, k: f64) -> Matrix4<C64> {
    let z = C64::from_polar(1.0, TWO_PI * k);
    let zb = z.conj();
    let um = u.matrix();
    let mut m = Matrix4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let d = if i == j { 1.0 } else { 0.0 };
            let uij = um[(i, j)];
            // value rows
            m[(i, 2 * j)] = z * d - uij;
            m[(i, 2 * j + 1)] = zb * d - uij;
            // derivative rows
            m[(2 + i, 2 * j)] = z * d - uij;
            m[(2 + i, 2 * j + 1)] = -zb * d + uij;
        }
    }
    m
}

/// Real secular function: `det M(k)` rotated by the phase of `det u`.
pub fn secular_function(u: &BoundaryUnitary, k: f64) -> f64 {
    let det_u = u.matrix().determinant();
    (secular_matrix(u, k).determinant() * det_u.conj()).re
}

fn sorted_svd(m: &Matrix4<C64>) -> (Vec<f64>, Vec<Vector4<C64>>) {
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested right singular vectors");
    let mut idx: Vec<usize> = (0..4).collect();
    idx.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let sv = idx.iter().map(|&i| svd.singular_values[i]).collect();
    let vecs = idx.iter().map(|&i| vt.row(i).adjoint().into_owned()).collect();
    (sv, vecs)
}

/// At a fully degenerate root every singular value vanishes, so the kernel
/// threshold is taken relative to at least unit norm.
fn kernel_scale(norm: f64) -> f64 {
    norm.max(1.0)
}

fn sigma_min(u: &BoundaryUnitary, k: f64) -> (f64, f64) {
    let m = secular_matrix(u, k);
    let sv = m.singular_values();
    let lo = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = sv.iter().cloned().fold(0.0, f64::max);
    (lo, kernel_scale(hi))
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    while b - a > tolerances::ROOT_REFINE {
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

fn golden_min(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tolerances::ROOT_REFINE {
        if fc < fd {
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
    0.5 * (a + b)
}

/// All positive roots of the secular function below `k_end`.
fn scan_roots(u: &BoundaryUnitary, k_end: f64, kernel_tol: f64) -> Vec<f64> {
    let g = |k: f64| secular_function(u, k);
    let step = tolerances::ROOT_SCAN_STEP;
    let k0 = 1e-6;
    let n = ((k_end - k0) / step).ceil() as usize + 1;
    let ks: Vec<f64> = (0..n).map(|j| k0 + j as f64 * step).collect();
    let gs: Vec<f64> = ks.iter().map(|&k| g(k)).collect();
    let mut roots = Vec::new();
    for j in 0..n - 1 {
        if (gs[j] < 0.0) != (gs[j + 1] < 0.0) {
            roots.push(bisect(&g, ks[j], ks[j + 1], gs[j]));
        }
    }
    for j in 1..n - 1 {
        let (l, c, r) = (gs[j - 1].abs(), gs[j].abs(), gs[j + 1].abs());
        if !(c <= l && c <= r) {
            continue;
        }
        // a dip in |g|: look for close pairs of sign changes, then for a touching root
        let (a, b) = (ks[j - 1], ks[j + 1]);
        let fine = 200;
        let mut found = false;
        let mut prev = (a, g(a));
        for t in 1..=fine {
            let k = a + (b - a) * t as f64 / fine as f64;
            let gk = g(k);
            if (gk < 0.0) != (prev.1 < 0.0) {
                roots.push(bisect(&g, prev.0, k, prev.1));
                found = true;
            }
            prev = (k, gk);
        }
        if !found {
            let k = golden_min(&|k| sigma_min(u, k).0, a, b);
            let (lo, hi) = sigma_min(u, k);
            if lo < kernel_tol * hi {
                roots.push(k);
            }
        }
    }
    roots.retain(|&k| k > 1e-7);
    roots.sort_by(f64::total_cmp);
    let mut merged: Vec<f64> = Vec::new();
    for k in roots {
        match merged.last() {
            Some(&p) if (k * k - p * p).abs() < tolerances::LEVEL_MERGE || k - p < 1e-9 => {}
            _ => merged.push(k),
        }
    }
    merged
}

/// Orthonormalize modes of one level with the exact inner product.
fn orthonormalize(modes: Vec<Mode>) -> Vec<Mode> {
    let mut out: Vec<Mode> = Vec::new();
    for mut m in modes {
        for _ in 0..2 {
            for q in &out {
                m = m.combine(q, -q.inner(&m));
            }
        }
        let n = m.inner(&m).re.sqrt();
        if n > 1e-10 {
            out.push(m.scale(C64::new(1.0 / n, 0.0)));
        }
    }
    out
}

fn zero_modes(u: &BoundaryUnitary, tol: f64) -> Vec<Mode> {
    // constants fixed by u; the linear part of A + Bx is forced to vanish
    let (vals, w) = u.eigen();
    let modes = (0..2)
        .filter(|&j| (vals[j] - C64::new(1.0, 0.0)).norm() < tol.max(1e-12))
        .map(|j| Mode { k: 0.0, a: [w[(0, j)], w[(1, j)]], b: [ZERO; 2] })
        .collect();
    orthonormalize(modes)
}

fn level_modes(u: &BoundaryUnitary, k: f64, tol: f64) -> Vec<Mode> {
    let (sv, vecs) = sorted_svd(&secular_matrix(u, k));
    let top = kernel_scale(sv[3]);
    let modes = sv
        .iter()
        .zip(vecs)
        .filter(|(&s, _)| s < tol * top)
        .map(|(_, v)| Mode { k, a: [v[0], v[2]], b: [v[1], v[3]] })
        .collect();
    orthonormalize(modes)
}

/// The `n_max` lowest eigenpairs, sampled on the default grid.
pub fn solve_spectrum(u: &BoundaryUnitary, n_max: usize, tol: f64) -> Result<SpectrumResult> {
    solve_spectrum_on(u, n_max, tol, Grid::new(tolerances::DEFAULT_NX)?)
}

pub fn solve_spectrum_on(u: &BoundaryUnitary, n_max: usize, tol: f64, grid: Grid) -> Result<SpectrumResult> {
    let modes_and_mult = solve_modes(u, n_max, tol)?;
    let mut eigenvalues = Vec::with_capacity(n_max);
    let mut multiplicities = Vec::with_capacity(n_max);
    let mut modes = Vec::with_capacity(n_max);
    for (m, mult) in modes_and_mult {
        eigenvalues.push(m.eigenvalue());
        multiplicities.push(mult);
        modes.push(m);
    }
    let eigenfunctions = modes.iter().map(|m| m.sample(grid)).collect();
    Ok(SpectrumResult { u: *u, eigenvalues, multiplicities, modes, eigenfunctions })
}

/// Lowest `n_max` modes with the multiplicity of their level.
pub fn solve_modes(u: &BoundaryUnitary, n_max: usize, tol: f64) -> Result<Vec<(Mode, usize)>> {
    if n_max == 0 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    let mut levels: Vec<Vec<Mode>> = Vec::new();
    let zm = zero_modes(u, tol);
    let k_cap = n_max as f64 / 2.0 + 16.0;
    let mut k_end = (n_max as f64 / 4.0 + 2.0).min(k_cap);
    loop {
        levels.clear();
        if !zm.is_empty() {
            levels.push(zm.clone());
        }
        for k in scan_roots(u, k_end, tol) {
            let modes = level_modes(u, k, tol);
            if !modes.is_empty() {
                levels.push(modes);
            }
        }
        // only roots safely inside the scanned window are trusted
        let mut count = 0;
        let mut reached = false;
        for lv in &levels {
            if lv[0].k > k_end - 2.0 * tolerances::ROOT_SCAN_STEP {
                break;
            }
            count += lv.len();
            if count >= n_max {
                reached = true;
                break;
            }
        }
        if reached {
            break;
        }
        if k_end >= k_cap {
            return Err(Error::RootScanExhausted { found: count, wanted: n_max, k_max: k_end });
        }
        k_end = (k_end * 2.0).min(k_cap);
    }
    let mut out = Vec::with_capacity(n_max);
    'outer: for lv in &levels {
        let mult = lv.len();
        for m in lv {
            if out.len() == n_max {
                break 'outer;
            }
            out.push((*m, mult));
        }
    }
    for (m, _) in &out {
        let r = m.boundary_residual(u);
        if !(r < 1e-7) {
            return Err(Error::ToleranceFailure(format!("boundary residual {r:.3e} at k = {}", m.k)));
        }
    }
    check_orthonormal(out.iter().map(|(m, _)| m))?;
    Ok(out)
}

fn check_orthonormal<'a>(modes: impl Iterator<Item = &'a Mode>) -> Result<()> {
    let modes: Vec<&Mode> = modes.collect();
    for (i, a) in modes.iter().enumerate() {
        for (j, b) in modes.iter().enumerate().skip(i) {
            if (a.k - b.k).abs() > 1e-6 {
                continue;
            }
            let target = if i == j { 1.0 } else { 0.0 };
            let d = (a.inner(b) - target).norm();
            if d > 1e-8 {
                return Err(Error::ToleranceFailure(format!("orthonormality defect {d:.3e}")));
            }
        }
    }
    Ok(())
}

/// `‖Hφ − λφ‖ / ‖φ‖` on interior grid points, with exact derivatives.
pub fn residual(mode: &Mode, grid: Grid) -> f64 {
    let lam = mode.eigenvalue();
    let (mut num, mut den) = (0.0, 0.0);
    for j in 1..grid.n_x - 1 {
        let x = grid.x(j);
        let d2 = mode.derivative(x, 2);
        let v = mode.value(x);
        for i in 0..2 {
            num += (-d2[i] - v[i] * lam).norm_sqr();
            den += v[i].norm_sqr();
        }
    }
    if den == 0.0 {
        return 0.0;
    }
    (num / den).sqrt()
}

/// Second-order finite-difference Laplacian on a twisted ring: each component
/// has `n_x - 1` points and the wrap-around couples through `u`.
#[derive(Debug, Clone)]
pub struct FdHamiltonian {
    pub u: BoundaryUnitary,
    pub n_x: usize,
}

impl FdHamiltonian {
    pub fn points(&self) -> usize {
        self.n_x - 1
    }

    pub fn dim(&self) -> usize {
        2 * self.points()
    }

    pub fn step(&self) -> f64 {
        TWO_PI / self.points() as f64
    }

    /// Nonzero entries `(row, col, value)` in natural ordering
    /// `row = point + component * points`.
    pub fn entries(&self) -> Vec<(usize, usize, C64)> {
        let n = self.points();
        let h2 = self.step() * self.step();
        let um = self.u.matrix();
        let idx = |p: usize, c: usize| p + c * n;
        let mut out = Vec::new();
        for c in 0..2 {
            for p in 0..n {
                out.push((idx(p, c), idx(p, c), C64::new(2.0 / h2, 0.0)));
                if p + 1 < n {
                    out.push((idx(p, c), idx(p + 1, c), C64::new(-1.0 / h2, 0.0)));
                    out.push((idx(p + 1, c), idx(p, c), C64::new(-1.0 / h2, 0.0)));
                }
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                let v = -um[(i, j)] / h2;
                out.push((idx(n - 1, i), idx(0, j), v));
                out.push((idx(0, j), idx(n - 1, i), v.conj()));
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (r, c, v) in self.entries() {
            m[(r, c)] += v;
        }
        m
    }

    /// Same operator reordered so that the ring folds into a band of width 7.
    pub fn to_band(&self) -> HermitianBand {
        let n = self.points();
        let folded = |row: usize| {
            let (p, c) = (row % n, row / n);
            let level = p.min(n - 1 - p);
            let side = usize::from(p > n - 1 - p);
            4 * level + 2 * side + c
        };
        let mut band = HermitianBand::zeros(self.dim(), 7);
        for (r, c, v) in self.entries() {
            let (fr, fc) = (folded(r), folded(c));
            if fr >= fc {
                band.add(fr, fc, v);
            }
        }
        band
    }

    pub fn lowest_eigenvalues(&self, count: usize) -> Vec<f64> {
        self.to_band().lowest_eigenvalues(count, 1e-10)
    }
}

pub fn finite_difference_hamiltonian(u: &BoundaryUnitary, n_x: usize) -> Result<FdHamiltonian> {
    if n_x < 16 {
        return Err(Error::InvalidInput(format!("finite-difference grid needs n_x >= 16, got {n_x}")));
    }
    Ok(FdHamiltonian { u: *u, n_x })
}

/// Outcome of the smoothness classification of a coefficient sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SobolevClass {
    /// Highest order `K` whose weighted series converges.
    Finite(usize),
    Infinite,
    /// Not even the `K = 0` series converges.
    NotSquareSummable,
}

/// Least-squares slope of `log t_n` against `log n` over the last quarter of
/// positive terms; `None` when the tail is identically zero.
pub(crate) fn tail_slope(terms: &[f64]) -> Option<f64> {
    let n = terms.len();
    let start = n - n / 4;
    let pts: Vec<(f64, f64)> = (start..n)
        .filter(|&j| terms[j] > 0.0 && terms[j].is_finite())
        .map(|j| (((j + 1) as f64).ln(), terms[j].ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

pub(crate) fn series_converges(terms: &[f64]) -> bool {
    if terms.iter().any(|t| !t.is_finite()) {
        return false;
    }
    match tail_slope(terms) {
        None => true,
        Some(s) => s < -1.0 - tolerances::CONVERGENCE_MARGIN,
    }
}

pub fn sobolev_class(coefficients: &[C64], eigenvalues: &[f64], k_max: usize) -> Result<SobolevClass> {
    let n = coefficients.len();
    if eigenvalues.len() != n {
        return Err(Error::InvalidInput(format!("{n} coefficients but {} eigenvalues", eigenvalues.len())));
    }
    if n < 32 {
        return Err(Error::InsufficientData(format!("need at least 32 terms, got {n}")));
    }
    let mut best = None;
    for k in 0..=k_max {
        let terms: Vec<f64> = coefficients
            .iter()
            .zip(eigenvalues)
            .map(|(a, e)| a.norm_sqr() * e.abs().powi(k as i32))
            .collect();
        if !series_converges(&terms) {
            break;
        }
        best = Some(k);
    }
    Ok(match best {
        None => SobolevClass::NotSquareSummable,
        Some(k) if k == k_max => SobolevClass::Infinite,
        Some(k) => SobolevClass::Finite(k),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix2;

    fn swap() -> BoundaryUnitary {
        BoundaryUnitary::case_a(0.0, 0.0)
    }

    #[test]
    fn secular_determinant_examples() {
        let id = BoundaryUnitary::identity();
        assert!(secular_matrix(&id, 1.0).determinant().norm() < 1e-12);
        assert!(secular_matrix(&id, 0.5).determinant().norm() > 1.0);
        assert!(secular_matrix(&swap(), 0.5).determinant().norm() < 1e-12);
    }

    #[test]
    fn secular_function_is_real_up_to_rounding() {
        let u = BoundaryUnitary::hadamard();
        for j in 1..200 {
            let k = 0.037 * j as f64;
            let d = secular_matrix(&u, k).determinant() * u.matrix().determinant().conj();
            assert!(d.im.abs() < 1e-12 * (1.0 + d.re.abs()), "k = {k}: {d}");
        }
    }

    #[test]
    fn phase_integral_limits() {
        assert_eq!(phase_integral(0.0), C64::new(TWO_PI, 0.0));
        assert!(phase_integral(1.0).norm() < 1e-14);
        assert!((phase_integral(1e-9) - C64::new(TWO_PI, 0.0)).norm() < 1e-7);
    }

    #[test]
    fn zero_modes_are_the_fixed_constants() {
        assert_eq!(zero_modes(&BoundaryUnitary::identity(), 1e-8).len(), 2);
        assert_eq!(zero_modes(&swap(), 1e-8).len(), 1);
        assert!(zero_modes(&BoundaryUnitary::hadamard(), 1e-8).is_empty());
    }

    #[test]
    fn two_circle_spectrum() {
        let s = solve_spectrum(&BoundaryUnitary::identity(), 18, 1e-8).unwrap();
        let expect = [0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 4.0, 4.0, 4.0, 4.0, 9.0, 9.0, 9.0, 9.0, 16.0, 16.0, 16.0, 16.0];
        for (a, b) in s.eigenvalues.iter().zip(expect) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        assert_eq!(&s.multiplicities[..6], &[2, 2, 4, 4, 4, 4]);
    }

    #[test]
    fn one_circle_spectrum() {
        let s = solve_spectrum(&swap(), 9, 1e-8).unwrap();
        let expect = [0.0, 0.25, 0.25, 1.0, 1.0, 2.25, 2.25, 4.0, 4.0];
        for (a, b) in s.eigenvalues.iter().zip(expect) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        assert_eq!(s.multiplicities[0], 1);
        assert_eq!(s.multiplicities[1], 2);
    }

    #[test]
    fn sampled_eigenfunctions_are_orthonormal() {
        let s = solve_spectrum(&BoundaryUnitary::hadamard(), 12, 1e-8).unwrap();
        for (i, a) in s.eigenfunctions.iter().enumerate() {
            for (j, b) in s.eigenfunctions.iter().enumerate() {
                let p = crate::interval_domain::scalar_product(a, b).unwrap();
                let t = if i == j { 1.0 } else { 0.0 };
                assert!((p - t).norm() < 1e-8, "({i},{j}) -> {p}");
            }
            assert!(residual(&s.modes[i], a.grid()) < 1e-6);
        }
    }

    #[test]
    fn fd_is_hermitian_and_band_matches_dense() {
        let u = BoundaryUnitary::new(Matrix2::new(
            C64::new(0.6, 0.0),
            C64::new(0.0, 0.8),
            C64::new(0.0, 0.8),
            C64::new(0.6, 0.0),
        ))
        .unwrap();
        let fd = finite_difference_hamiltonian(&u, 41).unwrap();
        let dense = fd.to_dense();
        assert!(crate::linalg::hermiticity_defect(&dense) < 1e-12);
        let mut ev: Vec<f64> = dense.symmetric_eigen().eigenvalues.iter().cloned().collect();
        ev.sort_by(f64::total_cmp);
        let band = fd.lowest_eigenvalues(8);
        for (a, b) in band.iter().zip(&ev) {
            assert!((a - b).abs() < 1e-8 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn fd_lowest_nonzero_levels() {
        let fd = finite_difference_hamiltonian(&BoundaryUnitary::identity(), 512).unwrap();
        let ev = fd.lowest_eigenvalues(3);
        assert!((ev[2] - 1.0).abs() < 1e-4);
        let fd = finite_difference_hamiltonian(&swap(), 512).unwrap();
        let ev = fd.lowest_eigenvalues(2);
        assert!((ev[1] - 0.25).abs() < 1e-4);
        assert!(finite_difference_hamiltonian(&swap(), 8).is_err());
    }

    #[test]
    fn sobolev_examples() {
        let n = 64;
        let e: Vec<f64> = (1..=n).map(|j| (j * j) as f64).collect();
        let geo: Vec<C64> = (1..=n).map(|j| C64::new((-(j as f64)).exp(), 0.0)).collect();
        assert_eq!(sobolev_class(&geo, &e, 6).unwrap(), SobolevClass::Infinite);
        let harm: Vec<C64> = (1..=n).map(|j| C64::new(1.0 / j as f64, 0.0)).collect();
        assert_eq!(sobolev_class(&harm, &e, 6).unwrap(), SobolevClass::Finite(0));
        let p: Vec<C64> = (1..=n).map(|j| C64::new((j as f64).powf(-2.5), 0.0)).collect();
        assert_eq!(sobolev_class(&p, &e, 6).unwrap(), SobolevClass::Finite(1));
        let slow: Vec<C64> = (1..=n).map(|j| C64::new((j as f64).powf(-0.5), 0.0)).collect();
        assert_eq!(sobolev_class(&slow, &e, 6).unwrap(), SobolevClass::NotSquareSummable);
        assert!(matches!(sobolev_class(&geo[..16], &e[..16], 3), Err(Error::InsufficientData(_))));
    }
}
