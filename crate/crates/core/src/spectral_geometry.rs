//! Dimension from the growth of eigenvalues, and distances between the points
//! of a diagonal algebra from the iterated-commutator bound
//!
//! ```text
//! d(x, y) = sup { a_x − a_y : (1/N!) ‖[a, [a, … [a, H]…]]‖ ≤ 1 }.
//! ```

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::RangeInclusive;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{hermiticity_defect, C64, I, ZERO};

/// Least-squares fit `log λ_n ≈ slope · log n + intercept`, `d = N / slope`.
#[derive(Debug, Clone, Serialize)]
pub struct DimensionFit {
    pub d: f64,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in log space.
    pub residual: f64,
    /// One-based inclusive index range used.
    pub window: (usize, usize),
}

/// Fit over the one-based indices in `window`.
pub fn estimate_dimension(eigenvalues: &[f64], order: u32, window: RangeInclusive<usize>) -> Result<DimensionFit> {
    let (lo, hi) = (*window.start(), *window.end());
    if lo == 0 || hi > eigenvalues.len() || lo > hi {
        return Err(Error::InvalidInput(format!(
            "window {lo}..={hi} outside 1..={} eigenvalues",
            eigenvalues.len()
        )));
    }
    if hi - lo + 1 < 20 {
        return Err(Error::InsufficientData(format!("{} eigenvalues in window, need 20", hi - lo + 1)));
    }
    let pts: Vec<(f64, f64)> = (lo..=hi).map(|n| ((n as f64).ln(), eigenvalues[n - 1])).collect();
    if let Some(&(_, l)) = pts.iter().find(|p| !(p.1 > 0.0)) {
        return Err(Error::InvalidInput(format!("eigenvalue {l} in window is not positive")));
    }
    let pts: Vec<(f64, f64)> = pts.into_iter().map(|(x, l)| (x, l.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    if !(slope > 0.0) {
        return Err(Error::DegenerateFit { slope });
    }
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum::<f64>() / m).sqrt();
    Ok(DimensionFit { d: order as f64 / slope, slope, intercept, residual, window: (lo, hi) })
}

/// `ad_a^N(H)` for diagonal `a`: entries `(a_j − a_k)^N H_jk`.
pub fn iterated_commutator(a: &[f64], h: &DMatrix<C64>, order: u32) -> Result<DMatrix<C64>> {
    if h.nrows() != a.len() || h.ncols() != a.len() {
        return Err(Error::InvalidInput(format!("diagonal of length {} against {}x{} matrix", a.len(), h.nrows(), h.ncols())));
    }
    Ok(DMatrix::from_fn(a.len(), a.len(), |j, k| h[(j, k)] * (a[j] - a[k]).powi(order as i32)))
}

#[derive(Debug, Clone)]
pub struct DistanceProblem {
    pub h: DMatrix<C64>,
    pub order: u32,
    /// Restarts of the ascent for `order ≥ 2`.
    pub restarts: usize,
    /// Iteration cap per restart.
    pub steps: usize,
    pub seed: u64,
}

/// Result of one distance evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct DistanceReport {
    pub distance: f64,
    /// Standard deviation of the restart values (0 for the exact solver).
    pub dispersion: f64,
    pub restart_values: Vec<f64>,
}

impl DistanceProblem {
    pub fn new(h: DMatrix<C64>, order: u32) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidInput("commutator order must be at least 1".into()));
        }
        if h.nrows() != h.ncols() {
            return Err(Error::InvalidInput("H must be square".into()));
        }
        let defect = hermiticity_defect(&h);
        if defect > 1e-12 * h.iter().map(|z| z.norm()).fold(1.0, f64::max) {
            return Err(Error::NotHermitian { defect });
        }
        Ok(Self { h, order, restarts: 32, steps: 200, seed: 0x5eed })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts.max(1);
        self
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    fn coupled(&self, j: usize, k: usize) -> bool {
        j != k && self.h[(j, k)].norm() > 1e-14 * self.scale()
    }

    fn scale(&self) -> f64 {
        self.h.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Shortest-path distances from `source` with edge lengths `|H_jk|^{-1/N}`.
    pub fn geodesic_from(&self, source: usize) -> Vec<f64> {
        let n = self.dim();
        let mut dist = vec![f64::INFINITY; n];
        dist[source] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Node(0.0, source));
        while let Some(Node(d, j)) = heap.pop() {
            if d > dist[j] {
                continue;
            }
            for k in 0..n {
                if self.coupled(j, k) {
                    let w = self.h[(j, k)].norm().powf(-1.0 / self.order as f64);
                    if d + w < dist[k] {
                        dist[k] = d + w;
                        heap.push(Node(d + w, k));
                    }
                }
            }
        }
        dist
    }

    /// `(1/N!) ‖ad_a^N H‖₂`.
    pub fn constraint(&self, a: &[f64]) -> f64 {
        let c = iterated_commutator(a, &self.h, self.order).expect("dimension checked");
        crate::linalg::spectral_norm(&c) / factorial(self.order)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Node(f64, usize);

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(self.1.cmp(&other.1))
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Distance between diagonal points `x` and `y`.
pub fn connes_distance(prob: &DistanceProblem, x: usize, y: usize) -> Result<f64> {
    Ok(connes_distance_report(prob, x, y)?.distance)
}

pub fn connes_distance_report(prob: &DistanceProblem, x: usize, y: usize) -> Result<DistanceReport> {
    let n = prob.dim();
    if x >= n || y >= n {
        return Err(Error::InvalidInput(format!("point index out of range 0..{n}")));
    }
    let exact = |d: f64| DistanceReport { distance: d, dispersion: 0.0, restart_values: vec![d] };
    if x == y {
        return Ok(exact(0.0));
    }
    let geo = prob.geodesic_from(x);
    if geo[y].is_infinite() {
        return Ok(exact(f64::INFINITY));
    }
    if prob.order == 1 {
        // with the commutator norm bounded edge by edge the optimum is the
        // graph distance with edge lengths 1/|H_jk|
        return Ok(exact(geo[y]));
    }
    Ok(ascent(prob, x, y, &geo))
}

/// Ratio objective over the Hermitian form of `ad_a^N H` (times `i` for odd N).
struct Objective<'a> {
    prob: &'a DistanceProblem,
    x: usize,
    y: usize,
    /// Real form available: H real and N even.
    real: bool,
}

impl<'a> Objective<'a> {
    fn new(prob: &'a DistanceProblem, x: usize, y: usize) -> Self {
        let real = prob.order.is_multiple_of(2) && prob.h.iter().all(|z| z.im == 0.0);
        Self { prob, x, y, real }
    }

    fn phase(&self) -> C64 {
        if self.prob.order.is_multiple_of(2) {
            C64::new(1.0, 0.0)
        } else {
            I
        }
    }

    fn hermitian_form(&self, a: &[f64]) -> DMatrix<C64> {
        let n = self.prob.order as i32;
        let s = self.phase();
        DMatrix::from_fn(a.len(), a.len(), |j, k| s * self.prob.h[(j, k)] * (a[j] - a[k]).powi(n))
    }

    fn real_form(&self, a: &[f64]) -> DMatrix<f64> {
        let n = self.prob.order as i32;
        DMatrix::from_fn(a.len(), a.len(), |j, k| self.prob.h[(j, k)].re * (a[j] - a[k]).powi(n))
    }

    fn eigenvalues(&self, a: &[f64]) -> Vec<f64> {
        if self.real {
            self.real_form(a).symmetric_eigenvalues().iter().cloned().collect()
        } else {
            self.hermitian_form(a).symmetric_eigenvalues().iter().cloned().collect()
        }
    }

    fn eigen(&self, a: &[f64]) -> (Vec<f64>, DMatrix<C64>) {
        if self.real {
            let e = SymmetricEigen::new(self.real_form(a));
            (e.eigenvalues.iter().cloned().collect(), e.eigenvectors.map(|v| C64::new(v, 0.0)))
        } else {
            let e = SymmetricEigen::new(self.hermitian_form(a));
            (e.eigenvalues.iter().cloned().collect(), e.eigenvectors)
        }
    }

    /// Feasible value `(a_x − a_y)(N!/‖ad_a^N H‖)^{1/N}`.
    fn value(&self, a: &[f64]) -> f64 {
        let g = self.eigenvalues(a).iter().map(|l| l.abs()).fold(0.0, f64::max);
        if g <= 0.0 {
            return f64::INFINITY;
        }
        (a[self.x] - a[self.y]) * (factorial(self.prob.order) / g).powf(1.0 / self.prob.order as f64)
    }

    /// Gradient of `log(a_x − a_y) − (1/N) log ‖ad_a^N H‖` with the top of the
    /// spectrum smoothed by softmax weights.
    fn log_gradient(&self, a: &[f64]) -> Vec<f64> {
        let n = a.len();
        let order = self.prob.order as i32;
        let s = self.phase();
        let (vals, vecs) = self.eigen(a);
        let mags: Vec<f64> = vals.iter().map(|l| l.abs()).collect();
        let g = mags.iter().cloned().fold(0.0, f64::max);
        let tau = 1e-2 * g;
        let w: Vec<f64> = mags.iter().map(|m| ((m - g) / tau).exp()).collect();
        let wsum: f64 = w.iter().sum();
        let mut grad_g = vec![0.0; n];
        for (i, &wi) in w.iter().enumerate() {
            if wi / wsum < 1e-8 {
                continue;
            }
            let v = vecs.column(i);
            let weight = vals[i].signum() * wi / wsum;
            for j in 0..n {
                for k in 0..n {
                    let hjk = self.prob.h[(j, k)];
                    if j == k || hjk == ZERO {
                        continue;
                    }
                    let e = s * hjk * (order as f64) * (a[j] - a[k]).powi(order - 1);
                    let t = (v[j].conj() * e * v[k]).re * weight;
                    grad_g[j] += t;
                    grad_g[k] -= t;
                }
            }
        }
        let gap = a[self.x] - a[self.y];
        let mut grad: Vec<f64> = grad_g.iter().map(|d| -d / (self.prob.order as f64 * g)).collect();
        grad[self.x] += 1.0 / gap;
        grad[self.y] -= 1.0 / gap;
        grad
    }
}

fn ascent(prob: &DistanceProblem, x: usize, y: usize, geo: &[f64]) -> DistanceReport {
    let obj = Objective::new(prob, x, y);
    let n = prob.dim();
    let diam = geo.iter().cloned().filter(|d| d.is_finite()).fold(1.0, f64::max);
    let values: Vec<f64> = (0..prob.restarts)
        .into_par_iter()
        .map(|r| {
            let mut a: Vec<f64> = if r == 0 {
                // geodesic seed: distance to y, capped outside y's component
                prob.geodesic_from(y).iter().map(|d| if d.is_finite() { *d } else { diam }).collect()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(prob.seed.wrapping_add(r as u64));
                (0..n).map(|_| rng.random_range(-diam..=diam)).collect()
            };
            if a[x] - a[y] <= 0.0 {
                a[x] = a[y] + diam;
            }
            climb(&obj, a, prob.steps)
        })
        .collect();
    let best = values.iter().cloned().filter(|v| v.is_finite()).fold(0.0, f64::max);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let dispersion = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64).sqrt();
    DistanceReport { distance: best, dispersion, restart_values: values }
}

fn climb(obj: &Objective, mut a: Vec<f64>, steps: usize) -> f64 {
    let mut best = obj.value(&a);
    let mut eta = 0.1;
    let mut history = vec![best];
    for step in 0..steps {
        if step >= 10 && best - history[step - 10] < 1e-6 * best {
            break;
        }
        let g = obj.log_gradient(&a);
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(gnorm > 0.0) {
            break;
        }
        let span = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - a.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut improved = false;
        while eta > 1e-9 {
            let trial: Vec<f64> = a.iter().zip(&g).map(|(ai, gi)| ai + eta * span * gi / gnorm).collect();
            let v = obj.value(&trial);
            if trial[obj.x] > trial[obj.y] && v > best {
                a = trial;
                best = v;
                improved = true;
                eta *= 1.5;
                break;
            }
            eta *= 0.5;
        }
        if !improved {
            break;
        }
        // rescale onto the constraint boundary
        let t = best / (a[obj.x] - a[obj.y]);
        let mean = a.iter().sum::<f64>() / a.len() as f64;
        for ai in a.iter_mut() {
            *ai = (*ai - mean) * t;
        }
        history.push(best);
    }
    best
}

/// Distances between all listed points, or all pairs when `points` is empty.
pub fn distance_matrix(prob: &DistanceProblem, points: &[usize]) -> Result<DMatrix<f64>> {
    let pts: Vec<usize> = if points.is_empty() { (0..prob.dim()).collect() } else { points.to_vec() };
    let m = pts.len();
    let mut out = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let d = connes_distance(prob, pts[i], pts[j])?;
            out[(i, j)] = d;
            out[(j, i)] = d;
        }
    }
    Ok(out)
}

/// Nearest-neighbour hopping with amplitude `t` on an open path of `n` sites.
pub fn path_hopping(n: usize, t: f64) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |j, k| if j.abs_diff(k) == 1 { C64::new(t, 0.0) } else { ZERO })
}

/// `−d²/dx²` by central differences on a ring of `n` sites and given circumference.
pub fn circle_laplacian(n: usize, circumference: f64) -> DMatrix<C64> {
    let h = circumference / n as f64;
    let inv = 1.0 / (h * h);
    DMatrix::from_fn(n, n, |j, k| {
        if j == k {
            C64::new(2.0 * inv, 0.0)
        } else if (j + 1) % n == k || (k + 1) % n == j {
            C64::new(-inv, 0.0)
        } else {
            ZERO
        }
    })
}

/// Graph Dirac operator on edge-doubled space: one 2×2 block
/// `[[0, |H_jk|], [|H_jk|, 0]]` per coupled pair, with `a` acting as
/// `diag(a_j, a_k)` on the block.
#[derive(Debug, Clone)]
pub struct EdgeDirac {
    pub dirac: DMatrix<C64>,
    /// Vertex carried by each basis vector.
    pub sites: Vec<usize>,
}

impl EdgeDirac {
    pub fn new(h: &DMatrix<C64>) -> Self {
        let n = h.nrows();
        let mut edges = Vec::new();
        for j in 0..n {
            for k in (j + 1)..n {
                if h[(j, k)].norm() > 0.0 {
                    edges.push((j, k, h[(j, k)].norm()));
                }
            }
        }
        let m = 2 * edges.len();
        let mut dirac = DMatrix::zeros(m, m);
        let mut sites = Vec::with_capacity(m);
        for (e, &(j, k, w)) in edges.iter().enumerate() {
            dirac[(2 * e, 2 * e + 1)] = C64::new(w, 0.0);
            dirac[(2 * e + 1, 2 * e)] = C64::new(w, 0.0);
            sites.push(j);
            sites.push(k);
        }
        Self { dirac, sites }
    }

    /// `‖[π(a), D]‖₂` by singular values.
    pub fn commutator_norm(&self, a: &[f64]) -> f64 {
        let pa: Vec<f64> = self.sites.iter().map(|&s| a[s]).collect();
        let c = iterated_commutator(&pa, &self.dirac, 1).expect("sizes agree");
        crate::linalg::spectral_norm(&c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, max_abs, random_hermitian};

    #[test]
    fn power_law_dimensions() {
        let sq: Vec<f64> = (1..=200).map(|n| (n * n) as f64).collect();
        assert!((estimate_dimension(&sq, 2, 20..=100).unwrap().d - 1.0).abs() < 1e-6);
        let lin: Vec<f64> = (1..=200).map(|n| n as f64).collect();
        assert!((estimate_dimension(&lin, 2, 20..=100).unwrap().d - 2.0).abs() < 1e-6);
        assert!((estimate_dimension(&lin, 1, 20..=100).unwrap().d - 1.0).abs() < 1e-6);
        let scaled: Vec<f64> = lin.iter().map(|l| 7.5 * l).collect();
        assert!((estimate_dimension(&scaled, 1, 20..=100).unwrap().d - 1.0).abs() < 1e-6);
        let flat = vec![1.0; 200];
        assert!(matches!(estimate_dimension(&flat, 2, 20..=100), Err(Error::DegenerateFit { .. })));
        assert!(matches!(estimate_dimension(&lin, 2, 20..=30), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn commutator_examples() {
        let sx = DMatrix::from_row_slice(2, 2, &[ZERO, C64::new(1.0, 0.0), C64::new(1.0, 0.0), ZERO]);
        let c = iterated_commutator(&[0.0, 1.0], &sx, 1).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[ZERO, C64::new(-1.0, 0.0), C64::new(1.0, 0.0), ZERO]);
        assert!(max_abs(&(c - expect)) < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = random_hermitian(6, &mut rng);
        assert!(max_abs(&iterated_commutator(&[2.5; 6], &h, 3).unwrap()) == 0.0);
        let a: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let am = DMatrix::from_fn(6, 6, |i, j| if i == j { C64::new(a[i], 0.0) } else { ZERO });
        let mut nested = h.clone();
        for n in 1..=4 {
            nested = commutator(&am, &nested);
            let fast = iterated_commutator(&a, &h, n).unwrap();
            assert!(max_abs(&(fast - &nested)) < 1e-12);
        }
    }

    #[test]
    fn path_distances_are_geodesic() {
        for n in [2, 5, 17, 32] {
            let h = 0.25;
            let prob = DistanceProblem::new(path_hopping(n, 1.0 / h), 1).unwrap();
            let d = connes_distance(&prob, 0, n - 1).unwrap();
            assert!((d - (n - 1) as f64 * h).abs() < 1e-12);
            let scaled = DistanceProblem::new(path_hopping(n, 3.0 / h), 1).unwrap();
            assert!((connes_distance(&scaled, 0, n - 1).unwrap() - d / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn edge_dirac_matches_edgewise_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let h = random_hermitian(5, &mut rng);
        let dirac = EdgeDirac::new(&h);
        let prob = DistanceProblem::new(h.clone(), 1).unwrap();
        // the geodesic potential saturates every edge bound without exceeding it
        let a = prob.geodesic_from(2);
        assert!((dirac.commutator_norm(&a) - 1.0).abs() < 1e-10);
        for _ in 0..20 {
            let a: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut edge_max: f64 = 0.0;
            for j in 0..5 {
                for k in 0..5 {
                    edge_max = edge_max.max((a[j] - a[k]).abs() * h[(j, k)].norm());
                }
            }
            assert!((dirac.commutator_norm(&a) - edge_max).abs() < 1e-10);
        }
    }

    #[test]
    fn disconnected_points_are_infinitely_far() {
        let mut h = path_hopping(4, 1.0);
        h[(1, 2)] = ZERO;
        h[(2, 1)] = ZERO;
        for order in [1, 2] {
            let prob = DistanceProblem::new(h.clone(), order).unwrap();
            assert_eq!(connes_distance(&prob, 0, 3).unwrap(), f64::INFINITY);
            assert_eq!(connes_distance(&prob, 1, 1).unwrap(), 0.0);
        }
    }

    #[test]
    fn laplacian_antipodes_small_ring() {
        let n = 16;
        let prob = DistanceProblem::new(circle_laplacian(n, std::f64::consts::TAU), 2).unwrap().with_restarts(8);
        let r = connes_distance_report(&prob, 0, n / 2).unwrap();
        assert!((r.distance - std::f64::consts::PI).abs() < 0.05 * std::f64::consts::PI, "{r:?}");
        let tent: Vec<f64> = (0..n).map(|j| (j.min(n - j) as f64) * std::f64::consts::TAU / n as f64).collect();
        assert!((prob.constraint(&tent) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = DMatrix::from_row_slice(2, 2, &[ZERO, C64::new(1.0, 0.0), ZERO, ZERO]);
        assert!(matches!(DistanceProblem::new(m, 1), Err(Error::NotHermitian { .. })));
    }
}
