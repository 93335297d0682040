//! The configuration space of two intervals `[0, 2π] ⊔ [0, 2π]`, two-component
//! wave fields on it, the U(2) family of boundary conditions
//!
//! ```text
//! ψ_i(2π) = u_ij ψ_j(0),   ψ_i'(2π) = u_ij ψ_j'(0)
//! ```
//!
//! together with the boundary form of `-d²/dx²` and the gauge map that moves
//! the boundary unitary into a constant connection.

use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, Write};

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{complex_from_json, fornberg_weights, C64, I, ZERO};
use crate::tolerances;

pub const TWO_PI: f64 = 2.0 * PI;

/// Algebraic shape of a boundary unitary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitaryForm {
    /// Zero diagonal: the intervals are glued into one circle.
    OffDiagonal,
    /// Zero off-diagonal: each interval closes on itself.
    Diagonal,
    Generic,
}

/// A validated 2×2 unitary parametrizing the domain of the Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryUnitary {
    matrix: Matrix2<C64>,
    form: UnitaryForm,
}

impl BoundaryUnitary {
    pub fn new(matrix: Matrix2<C64>) -> Result<Self> {
        Self::with_tolerance(matrix, tolerances::UNITARITY)
    }

    pub fn with_tolerance(matrix: Matrix2<C64>, tol: f64) -> Result<Self> {
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        let defect = (matrix * matrix.adjoint() - Matrix2::identity())
            .iter()
            .fold(0.0_f64, |a, z| a.max(z.norm()));
        if defect > tol {
            return Err(Error::NonUnitary { defect });
        }
        let t = tolerances::FORM_TAG;
        let form = if matrix[(0, 0)].norm() <= t && matrix[(1, 1)].norm() <= t {
            UnitaryForm::OffDiagonal
        } else if matrix[(0, 1)].norm() <= t && matrix[(1, 0)].norm() <= t {
            UnitaryForm::Diagonal
        } else {
            UnitaryForm::Generic
        };
        Ok(Self { matrix, form })
    }

    pub fn from_rows(rows: [[C64; 2]; 2]) -> Result<Self> {
        Self::new(Matrix2::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1]))
    }

    /// Off-diagonal phases: a single circle of circumference 4π.
    pub fn case_a(theta12: f64, theta21: f64) -> Self {
        Self::from_rows([[ZERO, C64::from_polar(1.0, theta12)], [C64::from_polar(1.0, theta21), ZERO]])
            .expect("phase matrix is unitary")
    }

    /// Diagonal phases: two circles of circumference 2π.
    pub fn case_b(theta11: f64, theta22: f64) -> Self {
        Self::from_rows([[C64::from_polar(1.0, theta11), ZERO], [ZERO, C64::from_polar(1.0, theta22)]])
            .expect("phase matrix is unitary")
    }

    /// `[[1, 1], [-1, 1]] / √2`, which glues nothing.
    pub fn hadamard() -> Self {
        let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::from_rows([[s, s], [-s, s]]).expect("rotation is unitary")
    }

    pub fn identity() -> Self {
        Self::case_b(0.0, 0.0)
    }

    /// `exp(i φ σ_x)`.
    pub fn x_rotation(phi: f64) -> Self {
        let c = C64::new(phi.cos(), 0.0);
        let s = C64::new(0.0, phi.sin());
        Self::from_rows([[c, s], [s, c]]).expect("rotation is unitary")
    }

    pub fn from_preset(name: &str) -> Option<Self> {
        match name {
            "case_a" => Some(Self::case_a(0.0, 0.0)),
            "case_b" => Some(Self::case_b(0.0, 0.0)),
            "hadamard" => Some(Self::hadamard()),
            _ => None,
        }
    }

    pub fn matrix(&self) -> &Matrix2<C64> {
        &self.matrix
    }

    pub fn form(&self) -> UnitaryForm {
        self.form
    }

    pub fn inverse(&self) -> Matrix2<C64> {
        self.matrix.adjoint()
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        apply2(&self.matrix, v)
    }

    pub fn with_global_phase(&self, alpha: f64) -> Self {
        Self::new(self.matrix * C64::from_polar(1.0, alpha)).expect("phase preserves unitarity")
    }

    /// Eigenvalues and a unitary matrix of eigenvectors (columns).
    pub fn eigen(&self) -> ([C64; 2], Matrix2<C64>) {
        normal_eigen2(&self.matrix)
    }

    /// Parse from JSON: a 2×2 array whose entries are numbers or `[re, im]` pairs.
    pub fn from_json_value(v: &serde_json::Value) -> Result<Self> {
        let bad = || Error::InvalidInput("boundary unitary must be a 2x2 JSON array".into());
        let rows = v.as_array().filter(|r| r.len() == 2).ok_or_else(bad)?;
        let mut m = Matrix2::zeros();
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_array().filter(|r| r.len() == 2).ok_or_else(bad)?;
            for (j, e) in row.iter().enumerate() {
                m[(i, j)] = complex_from_json(e)?;
            }
        }
        Self::new(m)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let rows: Vec<Vec<[f64; 2]>> = (0..2)
            .map(|i| (0..2).map(|j| [self.matrix[(i, j)].re, self.matrix[(i, j)].im]).collect())
            .collect();
        serde_json::json!(rows)
    }
}

impl Serialize for BoundaryUnitary {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json_value().serialize(s)
    }
}

impl<'de> Deserialize<'de> for BoundaryUnitary {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        Self::from_json_value(&v).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for BoundaryUnitary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.matrix;
        write!(
            f,
            "[[{:.6}, {:.6}], [{:.6}, {:.6}]] ({:?})",
            m[(0, 0)],
            m[(0, 1)],
            m[(1, 0)],
            m[(1, 1)],
            self.form
        )
    }
}

pub(crate) fn apply2(m: &Matrix2<C64>, v: [C64; 2]) -> [C64; 2] {
    [m[(0, 0)] * v[0] + m[(0, 1)] * v[1], m[(1, 0)] * v[0] + m[(1, 1)] * v[1]]
}

/// Eigen-decomposition of a normal 2×2 matrix with orthonormal eigenvectors.
pub(crate) fn normal_eigen2(m: &Matrix2<C64>) -> ([C64; 2], Matrix2<C64>) {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let tr = a + d;
    let disc = ((a - d) * (a - d) + 4.0 * b * c).sqrt();
    let l1 = (tr + disc) * 0.5;
    let l2 = (tr - disc) * 0.5;
    let scale = m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm())).max(1.0);
    if disc.norm() <= 1e-14 * scale {
        return ([l1, l2], Matrix2::identity());
    }
    // eigenvector for l1 from whichever row is better conditioned
    let v1 = [b, l1 - a];
    let v2 = [l1 - d, c];
    let n1 = (v1[0].norm_sqr() + v1[1].norm_sqr()).sqrt();
    let n2 = (v2[0].norm_sqr() + v2[1].norm_sqr()).sqrt();
    let (x, y) = if n1 >= n2 { (v1[0] / n1, v1[1] / n1) } else { (v2[0] / n2, v2[1] / n2) };
    // second eigenvector is orthogonal for a normal matrix
    let w = Matrix2::new(x, -y.conj(), y, x.conj());
    ([l1, l2], w)
}

/// Uniform grid on `[0, 2π]` with both endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub n_x: usize,
}

impl Grid {
    pub fn new(n_x: usize) -> Result<Self> {
        if n_x < 2 {
            return Err(Error::InvalidInput(format!("grid needs at least 2 points, got {n_x}")));
        }
        Ok(Self { n_x })
    }

    pub fn step(&self) -> f64 {
        TWO_PI / (self.n_x - 1) as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        if j == self.n_x - 1 {
            TWO_PI
        } else {
            j as f64 * self.step()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_x).map(|j| self.x(j))
    }

    /// Trapezoidal quadrature weights.
    pub fn weight(&self, j: usize) -> f64 {
        if j == 0 || j == self.n_x - 1 {
            0.5 * self.step()
        } else {
            self.step()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Endpoint {
    /// `x = 0`
    Start,
    /// `x = 2π`
    End,
}

/// Two-component complex field sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    grid: Grid,
    components: [Vec<C64>; 2],
    /// Expansion coefficients against an eigenbasis, when known.
    pub coefficients: Option<Vec<C64>>,
}

impl WaveField {
    pub fn new(grid: Grid, first: Vec<C64>, second: Vec<C64>) -> Result<Self> {
        if first.len() != grid.n_x || second.len() != grid.n_x {
            return Err(Error::GridMismatch(format!(
                "component lengths {} and {} for grid of {}",
                first.len(),
                second.len(),
                grid.n_x
            )));
        }
        Ok(Self { grid, components: [first, second], coefficients: None })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> [C64; 2]) -> Self {
        let (mut a, mut b) = (Vec::with_capacity(grid.n_x), Vec::with_capacity(grid.n_x));
        for x in grid.points() {
            let [p, q] = f(x);
            a.push(p);
            b.push(q);
        }
        Self { grid, components: [a, b], coefficients: None }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::from_fn(grid, |_| [ZERO, ZERO])
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn component(&self, i: usize) -> &[C64] {
        &self.components[i]
    }

    pub fn value(&self, endpoint: Endpoint) -> [C64; 2] {
        let j = match endpoint {
            Endpoint::Start => 0,
            Endpoint::End => self.grid.n_x - 1,
        };
        [self.components[0][j], self.components[1][j]]
    }

    pub fn norm(&self) -> f64 {
        scalar_product(self, self).map(|z| z.re.max(0.0).sqrt()).unwrap_or(0.0)
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            for c in self.components.iter_mut() {
                for z in c.iter_mut() {
                    *z /= n;
                }
            }
        }
        self
    }

    pub fn scaled(&self, s: C64) -> Self {
        let mut out = self.clone();
        for c in out.components.iter_mut() {
            for z in c.iter_mut() {
                *z *= s;
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_grids(self, other)?;
        let mut out = self.clone();
        for i in 0..2 {
            for (z, w) in out.components[i].iter_mut().zip(&other.components[i]) {
                *z += *w;
            }
        }
        out.coefficients = None;
        Ok(out)
    }

    /// Derivatives of order `0..=max_order` of component `i` at an endpoint
    /// using one-sided stencils.
    pub fn endpoint_derivatives(&self, i: usize, endpoint: Endpoint, max_order: usize) -> Result<Vec<C64>> {
        one_sided_derivatives(&self.components[i], self.grid.step(), endpoint, max_order)
    }

    /// Write as CSV with columns `x, re1, im1, re2, im2`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,re1,im1,re2,im2")?;
        for j in 0..self.grid.n_x {
            let (a, b) = (self.components[0][j], self.components[1][j]);
            writeln!(w, "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}", self.grid.x(j), a.re, a.im, b.re, b.im)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut first = Vec::new();
        let mut second = Vec::new();
        let mut xs = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::InvalidInput(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with('x')) {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidInput(format!("line {}: {e}", lineno + 1)))?;
            if vals.len() != 5 {
                return Err(Error::InvalidInput(format!("line {}: expected 5 columns", lineno + 1)));
            }
            xs.push(vals[0]);
            first.push(C64::new(vals[1], vals[2]));
            second.push(C64::new(vals[3], vals[4]));
        }
        let grid = Grid::new(xs.len())?;
        for (j, x) in xs.iter().enumerate() {
            if (x - grid.x(j)).abs() > 1e-9 {
                return Err(Error::GridMismatch(format!("row {j}: x = {x} is not on the uniform grid")));
            }
        }
        Self::new(grid, first, second)
    }
}

fn check_grids(a: &WaveField, b: &WaveField) -> Result<()> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch(format!("{} vs {} points", a.grid.n_x, b.grid.n_x)));
    }
    Ok(())
}

/// One-sided finite-difference derivatives at an endpoint. The stencil for
/// order `m` has `m + STENCIL_ACCURACY` points; its spacing is a multiple of
/// the grid step chosen to balance truncation against round-off.
pub fn one_sided_derivatives(values: &[C64], h: f64, endpoint: Endpoint, max_order: usize) -> Result<Vec<C64>> {
    let n = values.len();
    let at = |j: usize| match endpoint {
        Endpoint::Start => values[j],
        Endpoint::End => values[n - 1 - j],
    };
    let mut out = Vec::with_capacity(max_order + 1);
    out.push(at(0));
    for m in 1..=max_order {
        let points = m + tolerances::STENCIL_ACCURACY;
        if points > n {
            return Err(Error::GridTooCoarse { needed: points, available: n });
        }
        let ideal = f64::EPSILON.powf(1.0 / points as f64);
        let mut stride = ((ideal / h).floor() as usize).max(1);
        while stride > 1 && (points - 1) * stride + 1 > n {
            stride -= 1;
        }
        let hs = h * stride as f64;
        let sign = match endpoint {
            Endpoint::Start => 1.0,
            Endpoint::End => -1.0,
        };
        let xs: Vec<f64> = (0..points).map(|j| sign * j as f64 * hs).collect();
        let w = fornberg_weights(0.0, &xs, m);
        let d = (0..points).fold(ZERO, |acc, j| acc + at(j * stride) * w[m][j]);
        out.push(d);
    }
    Ok(out)
}

/// `(ψ, χ) = ∫ Σ_i ψ_i^* χ_i dx` by the trapezoidal rule.
pub fn scalar_product(psi: &WaveField, chi: &WaveField) -> Result<C64> {
    check_grids(psi, chi)?;
    let g = psi.grid;
    let mut acc = ZERO;
    for j in 0..g.n_x {
        let w = g.weight(j);
        for i in 0..2 {
            acc += psi.components[i][j].conj() * chi.components[i][j] * w;
        }
    }
    Ok(acc)
}

/// `B_H(ψ, χ) = Σ_i [ -ψ_i^* χ_i' + ψ_i^*' χ_i ]_0^{2π}`.
pub fn boundary_form(psi: &WaveField, chi: &WaveField) -> Result<C64> {
    check_grids(psi, chi)?;
    let mut total = ZERO;
    for i in 0..2 {
        for (endpoint, sign) in [(Endpoint::End, 1.0), (Endpoint::Start, -1.0)] {
            let p = psi.endpoint_derivatives(i, endpoint, 1)?;
            let c = chi.endpoint_derivatives(i, endpoint, 1)?;
            total += (-p[0].conj() * c[1] + p[1].conj() * c[0]) * sign;
        }
    }
    Ok(total)
}

/// Residuals `(|ψ(2π) - uψ(0)|_max, |ψ'(2π) - uψ'(0)|_max)`.
pub fn boundary_residuals(psi: &WaveField, u: &BoundaryUnitary) -> Result<(f64, f64)> {
    let mut start = [[ZERO; 2]; 2];
    let mut end = [[ZERO; 2]; 2];
    for i in 0..2 {
        let s = psi.endpoint_derivatives(i, Endpoint::Start, 1)?;
        let e = psi.endpoint_derivatives(i, Endpoint::End, 1)?;
        for m in 0..2 {
            start[m][i] = s[m];
            end[m][i] = e[m];
        }
    }
    let res = |m: usize| {
        let mapped = u.apply(start[m]);
        (end[m][0] - mapped[0]).norm().max((end[m][1] - mapped[1]).norm())
    };
    Ok((res(0), res(1)))
}

/// Whether `ψ` satisfies both matching conditions of the u-domain within `tol`.
pub fn in_domain(psi: &WaveField, u: &BoundaryUnitary, tol: f64) -> bool {
    match boundary_residuals(psi, u) {
        Ok((v, d)) => v <= tol && d <= tol,
        Err(_) => false,
    }
}

/// `V(x) = exp(x X)` with `exp(2π X) = u^{-1}`, `X` anti-hermitian.
#[derive(Debug, Clone, Copy)]
pub struct GaugeMap {
    u: BoundaryUnitary,
    basis: Matrix2<C64>,
    /// Real rates `β_j`: `X = W diag(i β_j) W^†`.
    rates: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

impl GaugeMap {
    pub fn new(u: BoundaryUnitary) -> Self {
        let (vals, w) = u.eigen();
        let rates = vals.map(|mu| {
            // eigenvalue of u^{-1} is conj(mu); principal log with the cut
            // rotated slightly so that -1 maps to +iπ
            let mut arg = mu.conj().arg();
            if arg <= -PI + tolerances::LOG_BRANCH_SHIFT {
                arg += TWO_PI;
            }
            arg / TWO_PI
        });
        Self { u, basis: w, rates }
    }

    pub fn unitary(&self) -> &BoundaryUnitary {
        &self.u
    }

    pub fn generator(&self) -> Matrix2<C64> {
        let d = Matrix2::new(I * self.rates[0], ZERO, ZERO, I * self.rates[1]);
        self.basis * d * self.basis.adjoint()
    }

    /// The connection `A = V d/dx V^{-1} = -X`, constant in x.
    pub fn connection(&self) -> Matrix2<C64> {
        -self.generator()
    }

    pub fn eval(&self, x: f64) -> Matrix2<C64> {
        let d = Matrix2::new(
            C64::from_polar(1.0, x * self.rates[0]),
            ZERO,
            ZERO,
            C64::from_polar(1.0, x * self.rates[1]),
        );
        self.basis * d * self.basis.adjoint()
    }

    pub fn eval_inverse(&self, x: f64) -> Matrix2<C64> {
        self.eval(x).adjoint()
    }
}

/// Forward: `φ = V ψ` (u-domain to periodic); inverse: `ψ = V^{-1} φ`.
pub fn gauge_transform(psi: &WaveField, g: &GaugeMap, direction: Direction) -> WaveField {
    let grid = psi.grid;
    let mut out = WaveField::zeros(grid);
    for j in 0..grid.n_x {
        let x = grid.x(j);
        let v = match direction {
            Direction::Forward => g.eval(x),
            Direction::Inverse => g.eval_inverse(x),
        };
        let r = apply2(&v, [psi.components[0][j], psi.components[1][j]]);
        out.components[0][j] = r[0];
        out.components[1][j] = r[1];
    }
    out
}

/// `||u u^† - 1||_max` for an arbitrary 2×2 matrix.
pub fn unitarity_defect(m: &Matrix2<C64>) -> f64 {
    (m * m.adjoint() - Matrix2::identity()).iter().fold(0.0_f64, |a, z| a.max(z.norm()))
}
