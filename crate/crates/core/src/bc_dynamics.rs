//! Boundary conditions as a quantum degree of freedom.
//!
//! The boundary unitary runs along the path `u(φ) = exp(iφσ_x)`, from two
//! circles at `φ_b = 0` to one circle at `φ_a = π/2`. After the gauge map the
//! particle sees periodic fields and the constant connection
//! `A(φ) = iφσ_x/(2π)`, so the joint Hamiltonian is
//!
//! ```text
//! Ĥ = −(∂_x + A(φ))² − (1/2I) ∂²_φ + W(φ)
//! ```
//!
//! on `[0, 2π) × {1, 2} × (−Φ, Φ)` with Dirichlet walls in φ. In the Fourier
//! basis in x and the σ_x eigenbasis, every pair (momentum p, sign s) is an
//! independent real symmetric tridiagonal block in φ with diagonal
//! `(p + sφ/2π)² + W(φ)`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;
use std::sync::Arc;

use nalgebra::Matrix2;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval_domain::{BoundaryUnitary, GaugeMap, TWO_PI};
use crate::linalg::{C64, I, ZERO};

/// One-circle marker on the rotor path.
pub const PHI_A: f64 = FRAC_PI_2;
/// Two-circle marker on the rotor path.
pub const PHI_B: f64 = 0.0;

/// `φ ↦ exp(iφσ_x)` with its markers and connection.
#[derive(Debug, Clone, Copy, Default)]
pub struct RotorPath;

impl RotorPath {
    pub fn unitary(&self, phi: f64) -> BoundaryUnitary {
        BoundaryUnitary::x_rotation(phi)
    }

    /// `A(φ) = iφσ_x/(2π)`.
    pub fn connection(&self, phi: f64) -> Matrix2<C64> {
        let a = I * (phi / TWO_PI);
        Matrix2::new(ZERO, a, a, ZERO)
    }

    pub fn gauge(&self, phi: f64) -> GaugeMap {
        GaugeMap::new(self.unitary(phi))
    }
}

/// Confining or tilting potential on φ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Potential {
    #[default]
    None,
    /// `½ κ (φ − c)²`.
    Harmonic { center: f64, stiffness: f64 },
    /// Quartic double well with minima at `φ_b` and `φ_a`:
    /// `16 h s²(1 − s)² + tilt · s`, `s = (φ − φ_b)/(φ_a − φ_b)`.
    DoubleWell { height: f64, tilt: f64 },
}

impl Potential {
    pub fn eval(&self, phi: f64) -> f64 {
        match *self {
            Potential::None => 0.0,
            Potential::Harmonic { center, stiffness } => 0.5 * stiffness * (phi - center).powi(2),
            Potential::DoubleWell { height, tilt } => {
                let s = (phi - PHI_B) / (PHI_A - PHI_B);
                16.0 * height * s * s * (1.0 - s).powi(2) + tilt * s
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Potential::None => true,
            Potential::Harmonic { center, stiffness } => center.is_finite() && stiffness.is_finite() && stiffness >= 0.0,
            Potential::DoubleWell { height, tilt } => height.is_finite() && tilt.is_finite() && height >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid potential {self:?}")))
        }
    }
}

/// Discretized joint Hamiltonian, stored block by block.
#[derive(Debug, Clone)]
pub struct JointHamiltonian {
    pub n_x: usize,
    pub n_phi: usize,
    pub phi_max: f64,
    /// Moment of inertia; `f64::INFINITY` switches the rotor kinetic term off.
    pub inertia: f64,
    pub potential: Potential,
    /// With `false` the connection is frozen at zero.
    pub coupling: bool,
}

impl JointHamiltonian {
    pub fn dphi(&self) -> f64 {
        2.0 * self.phi_max / (self.n_phi + 1) as f64
    }

    /// Interior φ nodes; the walls sit at `±Φ`.
    pub fn phi(&self, l: usize) -> f64 {
        -self.phi_max + (l + 1) as f64 * self.dphi()
    }

    pub fn phis(&self) -> Vec<f64> {
        (0..self.n_phi).map(|l| self.phi(l)).collect()
    }

    /// Momentum carried by FFT index `j`.
    pub fn momentum(&self, j: usize) -> f64 {
        if j < self.n_x.div_ceil(2) {
            j as f64
        } else {
            j as f64 - self.n_x as f64
        }
    }

    pub fn blocks(&self) -> usize {
        2 * self.n_x
    }

    /// Block `b = 2·j + t` has momentum index `j` and σ_x sign `+1` for `t = 0`.
    pub fn block_label(&self, b: usize) -> (f64, f64) {
        (self.momentum(b / 2), if b.is_multiple_of(2) { 1.0 } else { -1.0 })
    }

    fn kinetic_phi(&self) -> f64 {
        if self.inertia.is_infinite() {
            0.0
        } else {
            1.0 / (2.0 * self.inertia * self.dphi() * self.dphi())
        }
    }

    /// Diagonal of block `b`.
    pub fn block_diagonal(&self, b: usize) -> Vec<f64> {
        let (p, s) = self.block_label(b);
        let c = self.kinetic_phi();
        (0..self.n_phi)
            .map(|l| {
                let phi = self.phi(l);
                let shift = if self.coupling { s * phi / TWO_PI } else { 0.0 };
                (p + shift).powi(2) + self.potential.eval(phi) + 2.0 * c
            })
            .collect()
    }

    /// Off-diagonal entry shared by every block.
    pub fn block_offdiagonal(&self) -> f64 {
        -self.kinetic_phi()
    }

    /// Lowest eigenvalues of the particle sector with φ frozen.
    pub fn x_sector_spectrum(&self, phi: f64, count: usize) -> Vec<f64> {
        let mut ev: Vec<f64> = (0..self.blocks())
            .map(|b| {
                let (p, s) = self.block_label(b);
                let shift = if self.coupling { s * phi / TWO_PI } else { 0.0 };
                (p + shift).powi(2)
            })
            .collect();
        ev.sort_by(f64::total_cmp);
        ev.truncate(count);
        ev
    }

    /// `Ĥψ` in the block representation.
    pub fn apply(&self, state: &RotorState) -> RotorState {
        let mut out = state.clone();
        let off = self.block_offdiagonal();
        for b in 0..self.blocks() {
            let d = self.block_diagonal(b);
            let v = &state.blocks[b];
            let w = &mut out.blocks[b];
            for l in 0..self.n_phi {
                let mut acc = v[l] * d[l];
                if l > 0 {
                    acc += v[l - 1] * off;
                }
                if l + 1 < self.n_phi {
                    acc += v[l + 1] * off;
                }
                w[l] = acc;
            }
        }
        out
    }

    /// Expectation value `⟨ψ|Ĥ|ψ⟩`.
    pub fn energy(&self, state: &RotorState) -> f64 {
        state.inner(&self.apply(state)).re
    }
}

pub fn build_joint_hamiltonian(
    n_x: usize,
    n_phi: usize,
    phi_max: f64,
    inertia: f64,
    potential: Potential,
) -> Result<JointHamiltonian> {
    if n_x < 32 || n_phi < 32 {
        return Err(Error::InvalidInput(format!("grid {n_x}x{n_phi} below the 32x32 minimum")));
    }
    if !(inertia > 0.0) {
        return Err(Error::InvalidInput(format!("moment of inertia must be positive, got {inertia}")));
    }
    if !(phi_max > 0.0 && phi_max.is_finite()) {
        return Err(Error::InvalidInput(format!("rotor half-range must be positive, got {phi_max}")));
    }
    potential.validate()?;
    Ok(JointHamiltonian { n_x, n_phi, phi_max, inertia, potential, coupling: true })
}

/// Wave function stored as Fourier/σ_x coefficients, block by block.
#[derive(Debug, Clone, PartialEq)]
pub struct RotorState {
    pub n_x: usize,
    pub n_phi: usize,
    /// Quadrature weight `(2π/n_x)·Δφ`.
    pub weight: f64,
    /// `blocks[b][l]`.
    pub blocks: Vec<Vec<C64>>,
}

impl RotorState {
    pub fn zeros(h: &JointHamiltonian) -> Self {
        Self {
            n_x: h.n_x,
            n_phi: h.n_phi,
            weight: TWO_PI / h.n_x as f64 * h.dphi(),
            blocks: vec![vec![ZERO; h.n_phi]; h.blocks()],
        }
    }

    pub fn inner(&self, other: &Self) -> C64 {
        let mut s = ZERO;
        for (a, b) in self.blocks.iter().zip(&other.blocks) {
            for (x, y) in a.iter().zip(b) {
                s += x.conj() * y;
            }
        }
        s * self.weight
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            for v in self.blocks.iter_mut().flatten() {
                *v /= n;
            }
        }
    }

    /// Particle ground state of the frozen rotor at `center` times a
    /// Gaussian in φ whose density has standard deviation `sigma`.
    pub fn gaussian_product(h: &JointHamiltonian, center: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidInput(format!("packet width must be positive, got {sigma}")));
        }
        let mut state = Self::zeros(h);
        let b = ground_block(h, center);
        for l in 0..h.n_phi {
            let z = (h.phi(l) - center) / sigma;
            state.blocks[b][l] = C64::new((-0.25 * z * z).exp(), 0.0);
        }
        state.normalize();
        Ok(state)
    }

    /// Probability density in φ at the interior nodes.
    pub fn phi_density(&self) -> Vec<f64> {
        let wx = self.weight_x();
        (0..self.n_phi).map(|l| self.blocks.iter().map(|v| v[l].norm_sqr()).sum::<f64>() * wx).collect()
    }

    fn weight_x(&self) -> f64 {
        TWO_PI / self.n_x as f64
    }

    /// Position-space amplitudes `Ψ_i(x_j, φ_l)` indexed `[l][i][j]`.
    pub fn to_position(&self) -> Vec<[Vec<C64>; 2]> {
        let n = self.n_x;
        let fft = inverse_fft(n);
        let scale = 1.0 / (n as f64).sqrt();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        (0..self.n_phi)
            .map(|l| {
                let mut plus: Vec<C64> = (0..n).map(|j| self.blocks[2 * j][l] * scale).collect();
                let mut minus: Vec<C64> = (0..n).map(|j| self.blocks[2 * j + 1][l] * scale).collect();
                fft.process(&mut plus);
                fft.process(&mut minus);
                let first = plus.iter().zip(&minus).map(|(a, b)| (a + b) * r).collect();
                let second = plus.iter().zip(&minus).map(|(a, b)| (a - b) * r).collect();
                [first, second]
            })
            .collect()
    }

    pub fn from_position(h: &JointHamiltonian, field: &[[Vec<C64>; 2]]) -> Result<Self> {
        if field.len() != h.n_phi || field.iter().any(|c| c[0].len() != h.n_x || c[1].len() != h.n_x) {
            return Err(Error::GridMismatch("position field does not match the Hamiltonian grid".into()));
        }
        let n = h.n_x;
        let fft = FftPlanner::new().plan_fft_forward(n);
        let scale = 1.0 / (n as f64).sqrt();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut state = Self::zeros(h);
        for (l, comps) in field.iter().enumerate() {
            let mut plus: Vec<C64> = comps[0].iter().zip(&comps[1]).map(|(a, b)| (a + b) * r * scale).collect();
            let mut minus: Vec<C64> = comps[0].iter().zip(&comps[1]).map(|(a, b)| (a - b) * r * scale).collect();
            fft.process(&mut plus);
            fft.process(&mut minus);
            for j in 0..n {
                state.blocks[2 * j][l] = plus[j];
                state.blocks[2 * j + 1][l] = minus[j];
            }
        }
        Ok(state)
    }
}

fn inverse_fft(n: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_inverse(n)
}

/// Block holding the particle ground state at frozen `phi`; ties go to
/// momentum 0 and the `+` sign.
pub fn ground_block(h: &JointHamiltonian, phi: f64) -> usize {
    let energy = |b: usize| {
        let (p, s) = h.block_label(b);
        let shift = if h.coupling { s * phi / TWO_PI } else { 0.0 };
        (p + shift).powi(2)
    };
    let mut best = 0;
    for b in 1..h.blocks() {
        if energy(b) < energy(best) - 1e-12 {
            best = b;
        }
    }
    best
}

/// Crank–Nicolson propagator with factorized tridiagonal blocks.
#[derive(Debug, Clone)]
pub struct Propagator {
    pub hamiltonian: JointHamiltonian,
    pub dt: f64,
    factors: Vec<Thomas>,
}

/// LU factors of `1 + i dt/2 · T` for a real symmetric tridiagonal `T`.
#[derive(Debug, Clone)]
struct Thomas {
    diag: Vec<f64>,
    off: f64,
    /// Modified upper coefficients and pivots of the forward sweep.
    upper: Vec<C64>,
    pivot: Vec<C64>,
}

impl Thomas {
    fn new(diag: Vec<f64>, off: f64, dt: f64) -> Result<Self> {
        let n = diag.len();
        let half = I * (0.5 * dt);
        let a = |l: usize| C64::new(1.0, 0.0) + half * diag[l];
        let c = half * off;
        let mut upper = vec![ZERO; n];
        let mut pivot = vec![ZERO; n];
        for l in 0..n {
            let p = if l == 0 { a(0) } else { a(l) - c * upper[l - 1] };
            if p.norm() < 1e-14 {
                return Err(Error::LinearSolveFailure(format!("vanishing pivot at row {l}")));
            }
            pivot[l] = p;
            upper[l] = c / p;
        }
        Ok(Self { diag, off, upper, pivot })
    }

    /// Overwrite `v` with `(1 + i dt/2 T)^{-1} (1 − i dt/2 T) v`.
    fn step(&self, v: &mut [C64], dt: f64) {
        let n = v.len();
        let half = I * (0.5 * dt);
        let c = half * self.off;
        let rhs: Vec<C64> = (0..n)
            .map(|l| {
                let mut t = v[l] * self.diag[l];
                if l > 0 {
                    t += v[l - 1] * self.off;
                }
                if l + 1 < n {
                    t += v[l + 1] * self.off;
                }
                v[l] - half * t
            })
            .collect();
        for l in 0..n {
            let prev = if l == 0 { ZERO } else { c * v[l - 1] };
            v[l] = (rhs[l] - prev) / self.pivot[l];
        }
        for l in (0..n.saturating_sub(1)).rev() {
            let next = v[l + 1];
            v[l] -= self.upper[l] * next;
        }
    }
}

impl Propagator {
    pub fn new(hamiltonian: JointHamiltonian, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
        }
        let off = hamiltonian.block_offdiagonal();
        let factors = (0..hamiltonian.blocks())
            .map(|b| Thomas::new(hamiltonian.block_diagonal(b), off, dt))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { hamiltonian, dt, factors })
    }

    /// One step; blocks that are identically zero stay zero and are skipped.
    pub fn step(&self, state: &mut RotorState) {
        for (f, v) in self.factors.iter().zip(state.blocks.iter_mut()) {
            if v.iter().all(|z| *z == ZERO) {
                continue;
            }
            f.step(v, self.dt);
        }
    }
}

/// Crank–Nicolson evolution sampled every `sample_every` steps (the initial
/// state is the first sample).
pub fn evolve(
    state: &RotorState,
    hamiltonian: &JointHamiltonian,
    dt: f64,
    n_steps: usize,
    sample_every: usize,
) -> Result<Vec<(f64, RotorState)>> {
    let prop = Propagator::new(hamiltonian.clone(), dt)?;
    let every = sample_every.max(1);
    let mut psi = state.clone();
    let mut out = vec![(0.0, psi.clone())];
    for n in 1..=n_steps {
        prop.step(&mut psi);
        if n % every == 0 || n == n_steps {
            out.push((n as f64 * dt, psi.clone()));
        }
    }
    Ok(out)
}

/// Probability weight near each marker of the rotor path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TopologyWeights {
    pub p_a: f64,
    pub p_b: f64,
    pub p_other: f64,
}

/// `∫` over `[lo, hi]` of the piecewise-cubic Lagrange interpolant through
/// values on the uniform grid `x0 + k·h`.
fn integrate_cubic(x0: f64, h: f64, vals: &[f64], lo: f64, hi: f64) -> f64 {
    let n = vals.len();
    let g = 0.5 / 3f64.sqrt();
    let mut total = 0.0;
    for w in 0..n - 1 {
        let (a, b) = ((x0 + w as f64 * h).max(lo), (x0 + (w + 1) as f64 * h).min(hi));
        if b <= a {
            continue;
        }
        let s = w.saturating_sub(1).min(n.saturating_sub(4));
        let eval = |x: f64| {
            let t = (x - x0) / h - s as f64;
            (0..4.min(n))
                .map(|j| {
                    let basis: f64 = (0..4.min(n)).filter(|&m| m != j).map(|m| (t - m as f64) / (j as f64 - m as f64)).product();
                    basis * vals[s + j]
                })
                .sum::<f64>()
        };
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        total += half * (eval(mid - 2.0 * g * half) + eval(mid + 2.0 * g * half));
    }
    total
}

pub fn topology_probability(state: &RotorState, hamiltonian: &JointHamiltonian, epsilon: f64) -> Result<TopologyWeights> {
    if !(epsilon > 0.0 && epsilon < PI / 4.0) {
        return Err(Error::InvalidInput(format!("window half-width {epsilon} outside (0, π/4)")));
    }
    let (x0, h) = (-hamiltonian.phi_max, hamiltonian.dphi());
    let mut vals = vec![0.0];
    vals.extend(state.phi_density());
    vals.push(0.0);
    let total = integrate_cubic(x0, h, &vals, f64::NEG_INFINITY, f64::INFINITY);
    let p_a = (integrate_cubic(x0, h, &vals, PHI_A - epsilon, PHI_A + epsilon) / total).clamp(0.0, 1.0);
    let p_b = (integrate_cubic(x0, h, &vals, PHI_B - epsilon, PHI_B + epsilon) / total).clamp(0.0, 1.0);
    Ok(TopologyWeights { p_a, p_b, p_other: (1.0 - p_a - p_b).clamp(0.0, 1.0) })
}

/// Mean and variance of φ under the node density.
pub fn phi_moments(state: &RotorState, hamiltonian: &JointHamiltonian) -> (f64, f64) {
    let rho = state.phi_density();
    let phis = hamiltonian.phis();
    let mass: f64 = rho.iter().sum();
    let mean = rho.iter().zip(&phis).map(|(r, p)| r * p).sum::<f64>() / mass;
    let var = rho.iter().zip(&phis).map(|(r, p)| r * (p - mean).powi(2)).sum::<f64>() / mass;
    (mean, var)
}

fn default_n() -> usize {
    64
}
fn default_phi_max() -> f64 {
    PI
}
fn default_inertia() -> f64 {
    10.0
}
fn default_dt() -> f64 {
    1e-3
}
fn default_epsilon() -> f64 {
    0.3
}
fn default_true() -> bool {
    true
}
fn default_samples() -> usize {
    200
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialPacket {
    pub center: f64,
    pub sigma: f64,
}

/// Settings of one topology-change run, as read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_n")]
    pub n_x: usize,
    #[serde(default = "default_n")]
    pub n_phi: usize,
    #[serde(rename = "Phi", default = "default_phi_max")]
    pub phi_max: f64,
    #[serde(rename = "I", default = "default_inertia")]
    pub inertia: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_max: f64,
    #[serde(rename = "W", default)]
    pub potential: Potential,
    pub init: InitialPacket,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Recorded with the run; the Gaussian initial state is deterministic.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub coupling: bool,
    /// Approximate number of rows in the output series.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))
    }

    pub fn preset(name: &str) -> Option<Self> {
        let text = match name {
            "localize_large_I" => include_str!("../configs/localize_large_I.toml"),
            "transition" => include_str!("../configs/transition.toml"),
            "disintegrate_small_I" => include_str!("../configs/disintegrate_small_I.toml"),
            _ => return None,
        };
        Some(Self::from_toml(text).expect("bundled config parses"))
    }

    pub fn preset_names() -> &'static [&'static str] {
        &["localize_large_I", "transition", "disintegrate_small_I"]
    }

    pub fn hamiltonian(&self) -> Result<JointHamiltonian> {
        let mut h = build_joint_hamiltonian(self.n_x, self.n_phi, self.phi_max, self.inertia, self.potential)?;
        h.coupling = self.coupling;
        Ok(h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub t: f64,
    pub p_a: f64,
    pub p_b: f64,
    pub p_other: f64,
    pub energy: f64,
    pub norm: f64,
}

/// Prepare the packet, evolve it, and record the topology weights.
pub fn topology_change_experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    if !(config.t_max >= 0.0 && config.t_max.is_finite()) {
        return Err(Error::InvalidInput(format!("run time must be non-negative, got {}", config.t_max)));
    }
    let h = config.hamiltonian()?;
    let mut psi = RotorState::gaussian_product(&h, config.init.center, config.init.sigma)?;
    let prop = Propagator::new(h.clone(), config.dt)?;
    let steps = (config.t_max / config.dt).round() as usize;
    let every = (steps / config.samples.max(1)).max(1);
    let row = |t: f64, psi: &RotorState| -> Result<ExperimentRow> {
        let w = topology_probability(psi, &h, config.epsilon)?;
        Ok(ExperimentRow { t, p_a: w.p_a, p_b: w.p_b, p_other: w.p_other, energy: h.energy(psi), norm: psi.norm() })
    };
    let mut rows = vec![row(0.0, &psi)?];
    for n in 1..=steps {
        prop.step(&mut psi);
        if n % every == 0 || n == steps {
            rows.push(row(n as f64 * config.dt, &psi)?);
        }
    }
    Ok(rows)
}

pub fn write_experiment_csv<W: Write>(rows: &[ExperimentRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "t,P_a,P_b,P_other,energy,norm")?;
    for r in rows {
        writeln!(w, "{:.6},{:.10},{:.10},{:.10},{:.12e},{:.14}", r.t, r.p_a, r.p_b, r.p_other, r.energy, r.norm)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_solver::solve_spectrum;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use statrs::function::erf::erf;

    fn random_state(h: &JointHamiltonian, seed: u64) -> RotorState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = RotorState::zeros(h);
        for v in s.blocks.iter_mut().take(8).flatten() {
            *v = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        s.normalize();
        s
    }

    #[test]
    fn path_markers_and_gauge() {
        let path = RotorPath;
        assert_eq!(path.unitary(0.0).form(), crate::interval_domain::UnitaryForm::Diagonal);
        assert_eq!(path.unitary(PHI_A).form(), crate::interval_domain::UnitaryForm::OffDiagonal);
        for phi in [-2.0, 0.3, PHI_A, 2.9] {
            let u = path.unitary(phi);
            let g = path.gauge(phi);
            assert!((g.eval(TWO_PI) - u.inverse()).iter().all(|z| z.norm() < 1e-12));
            assert!((g.connection() - path.connection(phi)).iter().all(|z| z.norm() < 1e-12));
        }
    }

    #[test]
    fn frozen_sector_matches_boundary_spectrum() {
        let mut h = build_joint_hamiltonian(64, 32, PI, f64::INFINITY, Potential::None).unwrap();
        for phi in [0.2, 0.9, PHI_A, 1.3] {
            let s = solve_spectrum(&RotorPath.unitary(phi), 10, 1e-8).unwrap();
            for (a, b) in h.x_sector_spectrum(phi, 10).iter().zip(&s.eigenvalues) {
                assert!((a - b).abs() < 1e-3, "φ={phi}: {a} vs {b}");
            }
        }
        h.coupling = false;
        let free = h.x_sector_spectrum(0.7, 5);
        assert_eq!(free, vec![0.0, 0.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn zero_angle_decouples() {
        let h = build_joint_hamiltonian(32, 33, PI, 1.0, Potential::None).unwrap();
        let mid = 16;
        assert!(h.phi(mid).abs() < 1e-12);
        for b in 0..h.blocks() {
            let (p, _) = h.block_label(b);
            let d = h.block_diagonal(b);
            assert!((d[mid] - p * p - 2.0 * h.kinetic_phi()).abs() < 1e-12);
        }
    }

    #[test]
    fn hamiltonian_is_hermitian_through_position_space() {
        let h = build_joint_hamiltonian(32, 32, PI, 2.0, Potential::Harmonic { center: 0.4, stiffness: 3.0 }).unwrap();
        let (a, b) = (random_state(&h, 1), random_state(&h, 2));
        let lhs = a.inner(&h.apply(&b));
        let rhs = h.apply(&a).inner(&b);
        assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0));
        let back = RotorState::from_position(&h, &a.to_position()).unwrap();
        for (x, y) in back.blocks.iter().flatten().zip(a.blocks.iter().flatten()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn crank_nicolson_conserves_norm_and_energy() {
        let h = build_joint_hamiltonian(32, 48, PI, 1.0, Potential::Harmonic { center: 1.0, stiffness: 2.0 }).unwrap();
        let psi = random_state(&h, 7);
        let traj = evolve(&psi, &h, 1e-3, 1000, 1000).unwrap();
        let (e0, e1) = (h.energy(&traj[0].1), h.energy(&traj[1].1));
        assert!((traj[1].1.norm() - 1.0).abs() < 1e-8);
        assert!(((e1 - e0) / e0).abs() < 1e-6);
    }

    #[test]
    fn probability_windows() {
        let h = build_joint_hamiltonian(32, 127, PI, 1.0, Potential::None).unwrap();
        let mut delta = RotorState::zeros(&h);
        let l = (0..h.n_phi).min_by(|&a, &b| (h.phi(a) - PHI_A).abs().total_cmp(&(h.phi(b) - PHI_A).abs())).unwrap();
        delta.blocks[0][l] = C64::new(1.0, 0.0);
        delta.normalize();
        assert!((topology_probability(&delta, &h, 0.3).unwrap().p_a - 1.0).abs() < 1e-12);

        let mut flat = RotorState::zeros(&h);
        for v in flat.blocks[0].iter_mut() {
            *v = C64::new(1.0, 0.0);
        }
        flat.normalize();
        let w = topology_probability(&flat, &h, 0.3).unwrap();
        assert!((w.p_a - 0.6 / (2.0 * PI)).abs() < h.dphi() / PI);

        let sigma = 0.3;
        let g = RotorState::gaussian_product(&h, PHI_A, sigma).unwrap();
        let w = topology_probability(&g, &h, 0.3).unwrap();
        let expect = erf(0.3 / (sigma * 2f64.sqrt()));
        assert!((w.p_a - expect).abs() < 1e-3, "{} vs {expect}", w.p_a);
        assert!(topology_probability(&g, &h, 1.0).is_err());
    }

    #[test]
    fn config_parses_with_defaults() {
        let c = ExperimentConfig::from_toml(
            "T = 1.0\nI = 5.0\n[W]\nkind = \"harmonic\"\nparams = { center = 1.0, stiffness = 2.0 }\n[init]\ncenter = 1.0\nsigma = 0.2\n",
        )
        .unwrap();
        assert_eq!(c.n_x, 64);
        assert_eq!(c.potential, Potential::Harmonic { center: 1.0, stiffness: 2.0 });
        assert!(ExperimentConfig::from_toml("T = 1.0\nbogus = 3\n[init]\ncenter = 0\nsigma = 1\n").is_err());
        for name in ExperimentConfig::preset_names() {
            assert!(ExperimentConfig::preset(name).is_some());
        }
    }
}
