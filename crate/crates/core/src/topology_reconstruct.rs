//! Recovering how the two intervals are glued from the continuity of the
//! densities `ψ_i^* χ_i` and their derivatives at the endpoints.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::interval_domain::{BoundaryUnitary, Endpoint, WaveField};
use crate::linalg::{C64, ZERO};
use crate::spectral_solver::{self, Mode};
use crate::tolerances;

/// Derivatives `d^m/dx^m (ψ^* χ)_i` at both endpoints, `m = 0..=order`.
#[derive(Debug, Clone, PartialEq)]
pub struct EndpointProfile {
    pub order: usize,
    /// Indexed `[component][endpoint][m]` with endpoint 0 = start, 1 = end.
    pub values: [[Vec<C64>; 2]; 2],
}

fn endpoint_index(e: Endpoint) -> usize {
    match e {
        Endpoint::Start => 0,
        Endpoint::End => 1,
    }
}

impl EndpointProfile {
    pub fn get(&self, component: usize, endpoint: Endpoint, m: usize) -> C64 {
        self.values[component][endpoint_index(endpoint)][m]
    }

    /// Largest magnitude of order `m` across components and endpoints.
    pub fn magnitude(&self, m: usize) -> f64 {
        self.values.iter().flatten().map(|v| v[m].norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().flatten().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for v in out.values.iter_mut().flatten().flatten() {
            *v *= s;
        }
        out
    }
}

/// Profile from sampled fields by one-sided finite differences.
pub fn endpoint_profile(psi: &WaveField, chi: &WaveField, order: usize) -> Result<EndpointProfile> {
    if psi.grid() != chi.grid() {
        return Err(Error::GridMismatch(format!("{} vs {} points", psi.grid().n_x, chi.grid().n_x)));
    }
    if order > 6 {
        return Err(Error::InvalidInput(format!("derivative order {order} exceeds 6")));
    }
    let h = psi.grid().step();
    let mut values: [[Vec<C64>; 2]; 2] = Default::default();
    for (i, comp) in values.iter_mut().enumerate() {
        let rho: Vec<C64> = psi.component(i).iter().zip(chi.component(i)).map(|(p, c)| p.conj() * c).collect();
        for e in [Endpoint::Start, Endpoint::End] {
            comp[endpoint_index(e)] = crate::interval_domain::one_sided_derivatives(&rho, h, e, order)?;
        }
    }
    Ok(EndpointProfile { order, values })
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Exact profile of two closed-form modes by the Leibniz rule.
pub fn mode_profile(psi: &Mode, chi: &Mode, order: usize) -> EndpointProfile {
    let dp: Vec<[C64; 2]> = (0..=order).map(|r| psi.derivative(0.0, r as u32)).collect();
    let dp_end: Vec<[C64; 2]> = (0..=order).map(|r| psi.derivative(crate::interval_domain::TWO_PI, r as u32)).collect();
    let dc: Vec<[C64; 2]> = (0..=order).map(|r| chi.derivative(0.0, r as u32)).collect();
    let dc_end: Vec<[C64; 2]> = (0..=order).map(|r| chi.derivative(crate::interval_domain::TWO_PI, r as u32)).collect();
    series_profile(&[(&dp, &dc), (&dp_end, &dc_end)], order)
}

/// Derivatives `[r][component]` of ψ and χ at one endpoint.
type DerivativePair<'a> = (&'a Vec<[C64; 2]>, &'a Vec<[C64; 2]>);

/// Leibniz products from derivative tables at start and end.
fn series_profile(tables: &[DerivativePair; 2], order: usize) -> EndpointProfile {
    let mut values: [[Vec<C64>; 2]; 2] = Default::default();
    for (i, comp) in values.iter_mut().enumerate() {
        for (e, (p, c)) in tables.iter().enumerate() {
            comp[e] = (0..=order)
                .map(|m| (0..=m).fold(ZERO, |acc, r| acc + p[r][i].conj() * c[m - r][i] * binomial(m, r)))
                .collect();
        }
    }
    EndpointProfile { order, values }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EndpointRef {
    /// 1 or 2.
    pub component: usize,
    pub endpoint: Endpoint,
}

impl EndpointRef {
    pub const fn new(component: usize, endpoint: Endpoint) -> Self {
        Self { component, endpoint }
    }
}

impl fmt::Display for EndpointRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = match self.endpoint {
            Endpoint::Start => "0",
            Endpoint::End => "2pi",
        };
        write!(f, "({}, {at})", self.component)
    }
}

impl Serialize for EndpointRef {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let at = match self.endpoint {
            Endpoint::Start => "0",
            Endpoint::End => "2pi",
        };
        serde_json::json!({ "component": self.component, "at": at }).serialize(s)
    }
}

pub type Gluing = (EndpointRef, EndpointRef);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TopologyKind {
    Circle,
    TwoCircles,
    TwoIntervals,
}

impl TopologyKind {
    pub fn gluing(self) -> Vec<Gluing> {
        use Endpoint::{End, Start};
        match self {
            TopologyKind::Circle => vec![
                (EndpointRef::new(1, End), EndpointRef::new(2, Start)),
                (EndpointRef::new(2, End), EndpointRef::new(1, Start)),
            ],
            TopologyKind::TwoCircles => vec![
                (EndpointRef::new(1, End), EndpointRef::new(1, Start)),
                (EndpointRef::new(2, End), EndpointRef::new(2, Start)),
            ],
            TopologyKind::TwoIntervals => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopologySpace {
    pub kind: TopologyKind,
    pub gluing: Vec<Gluing>,
    pub smooth_order: usize,
}

impl TopologySpace {
    pub fn new(kind: TopologyKind, smooth_order: usize) -> Self {
        Self { kind, gluing: kind.gluing(), smooth_order }
    }

    /// Text sketch of the glued intervals.
    pub fn diagram(&self) -> String {
        match self.kind {
            TopologyKind::Circle => [
                "   (1,0) ========== 1 ========== (1,2pi)",
                "     |                              |",
                "   (2,2pi) ======== 2 ========== (2,0)",
                "   one circle of circumference 4pi",
            ]
            .join("\n"),
            TopologyKind::TwoCircles => [
                "   (1,0) ========== 1 ========== (1,2pi)",
                "     \\______________________________/",
                "   (2,0) ========== 2 ========== (2,2pi)",
                "     \\______________________________/",
                "   two circles of circumference 2pi",
            ]
            .join("\n"),
            TopologyKind::TwoIntervals => [
                "   (1,0) ========== 1 ========== (1,2pi)",
                "   (2,0) ========== 2 ========== (2,2pi)",
                "   two disjoint intervals",
            ]
            .join("\n"),
        }
    }
}

fn pair_holds(p: &EndpointProfile, pattern: &[Gluing], m: usize, allowed: f64) -> bool {
    pattern.iter().all(|(a, b)| {
        let va = p.get(a.component - 1, a.endpoint, m);
        let vb = p.get(b.component - 1, b.endpoint, m);
        (va - vb).norm() <= allowed
    })
}

/// Whether every profile satisfies `pattern` at all orders up to `order`,
/// with tolerance `tol` relative to the largest magnitude at each order. That
/// magnitude is floored by the density scale so that orders which vanish
/// identically are not judged against rounding noise.
pub fn pattern_holds(profiles: &[EndpointProfile], pattern: &[Gluing], order: usize, tol: f64) -> bool {
    let density = profiles.iter().map(|p| p.magnitude(0)).fold(0.0, f64::max);
    (0..=order).all(|m| {
        let scale = profiles.iter().map(|p| p.magnitude(m)).fold(density, f64::max);
        let allowed = tol * scale;
        profiles.iter().all(|p| pair_holds(p, pattern, m, allowed))
    })
}

fn classify_profiles(profiles: &[EndpointProfile], order: usize, tol: f64) -> Result<TopologySpace> {
    if profiles.iter().any(|p| !p.is_finite()) {
        return Err(Error::ToleranceFailure("non-finite endpoint profile".into()));
    }
    let circle = pattern_holds(profiles, &TopologyKind::Circle.gluing(), order, tol);
    let two = pattern_holds(profiles, &TopologyKind::TwoCircles.gluing(), order, tol);
    match (circle, two) {
        (true, true) => Err(Error::AmbiguousClassification(vec!["Circle".into(), "TwoCircles".into()])),
        (true, false) => Ok(TopologySpace::new(TopologyKind::Circle, order)),
        (false, true) => Ok(TopologySpace::new(TopologyKind::TwoCircles, order)),
        (false, false) => Ok(TopologySpace::new(TopologyKind::TwoIntervals, order)),
    }
}

/// Classify from closed-form modes, using every ordered pair.
pub fn classify_modes(modes: &[Mode], order: usize, tol: f64) -> Result<TopologySpace> {
    let profiles: Vec<EndpointProfile> =
        modes.iter().flat_map(|a| modes.iter().map(move |b| mode_profile(a, b, order))).collect();
    classify_profiles(&profiles, order, tol)
}

/// Classify from sampled fields with finite-difference profiles.
pub fn classify_fields(fields: &[WaveField], order: usize, tol: f64) -> Result<TopologySpace> {
    let mut profiles = Vec::with_capacity(fields.len() * fields.len());
    for a in fields {
        for b in fields {
            profiles.push(endpoint_profile(a, b, order)?);
        }
    }
    classify_profiles(&profiles, order, tol)
}

pub fn classify_topology(u: &BoundaryUnitary, n_states: usize, order: usize, tol: f64) -> Result<TopologySpace> {
    if n_states < 6 {
        return Err(Error::InvalidInput(format!("need at least 6 states, got {n_states}")));
    }
    if order < 2 {
        return Err(Error::InvalidInput(format!("derivative order must be at least 2, got {order}")));
    }
    let modes: Vec<Mode> = spectral_solver::solve_modes(u, n_states, tolerances::KERNEL_REL)?
        .into_iter()
        .map(|(m, _)| m)
        .collect();
    classify_modes(&modes, order, tol)
}

/// Whether the gluing found for `u` survives replacing each pair of states by
/// `H^m ψ, H^m χ` for every `m ≤ max_power`.
pub fn verify_module_property(u: &BoundaryUnitary, n_states: usize, max_power: usize) -> Result<bool> {
    let order = 2;
    let tol = tolerances::GLUING_REL;
    let space = classify_topology(u, n_states, order, tol)?;
    let modes: Vec<Mode> =
        spectral_solver::solve_modes(u, n_states, tolerances::KERNEL_REL)?.into_iter().map(|(m, _)| m).collect();
    for power in 0..=max_power {
        let mut profiles = Vec::new();
        for a in &modes {
            for b in &modes {
                let s = (a.eigenvalue() * b.eigenvalue()).powi(power as i32);
                profiles.push(mode_profile(a, b, order).scaled(s));
            }
        }
        if !pattern_holds(&profiles, &space.gluing, order, tol) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A superposition `Σ c_n ψ_n` of closed-form modes.
#[derive(Debug, Clone)]
pub struct ModeSeries {
    pub modes: Vec<Mode>,
    pub coefficients: Vec<C64>,
}

impl ModeSeries {
    /// Derivative table `[r][component]` at `x`, for `r = 0..=order`.
    pub fn derivatives(&self, x: f64, order: usize) -> Vec<[C64; 2]> {
        (0..=order)
            .map(|r| {
                self.modes.iter().zip(&self.coefficients).fold([ZERO; 2], |acc, (m, c)| {
                    let d = m.derivative(x, r as u32);
                    [acc[0] + c * d[0], acc[1] + c * d[1]]
                })
            })
            .collect()
    }

    pub fn profile(&self, order: usize) -> EndpointProfile {
        let start = self.derivatives(0.0, order);
        let end = self.derivatives(crate::interval_domain::TWO_PI, order);
        series_profile(&[(&start, &start), (&end, &end)], order)
    }
}

/// Number of eigenmodes in the power-law state of [`smoothness_degradation`].
pub const DEGRADATION_MODES: usize = 256;

/// Largest derivative order `m ≤ max_order` at which the density of the state
/// `Σ n^{-p} ψ_n` still obeys the gluing of `u`. An order counts only if the
/// majorant `Σ |c_n| k_n^m (|a_n| + |b_n|)` of the endpoint derivatives is
/// judged convergent and the truncated series matches the pattern.
pub fn smoothness_degradation(u: &BoundaryUnitary, decay_exponent: f64, max_order: usize) -> Result<usize> {
    if decay_exponent <= 0.5 {
        return Err(Error::InvalidInput(format!("decay exponent {decay_exponent} must exceed 0.5")));
    }
    let modes: Vec<Mode> = spectral_solver::solve_modes(u, DEGRADATION_MODES, tolerances::KERNEL_REL)?
        .into_iter()
        .map(|(m, _)| m)
        .collect();
    let coefficients: Vec<C64> =
        (1..=modes.len()).map(|n| C64::new((n as f64).powf(-decay_exponent), 0.0)).collect();
    smoothness_of_series(u, &ModeSeries { modes, coefficients }, max_order)
}

pub fn smoothness_of_series(u: &BoundaryUnitary, series: &ModeSeries, max_order: usize) -> Result<usize> {
    let pattern = classify_topology(u, 16, max_order.max(2), tolerances::GLUING_REL)?.gluing;
    let profile = series.profile(max_order);
    let mut reached = 0;
    for m in 1..=max_order {
        let majorant: Vec<f64> = series
            .modes
            .iter()
            .zip(&series.coefficients)
            .map(|(md, c)| {
                let amp = (0..2).map(|i| md.a[i].norm() + md.b[i].norm()).fold(0.0, f64::max);
                c.norm() * md.k.powi(m as i32) * amp
            })
            .collect();
        let converges = spectral_solver::series_converges(&majorant);
        let glued = pattern_holds(std::slice::from_ref(&profile), &pattern, m, tolerances::GLUING_REL);
        if !(converges && glued) {
            break;
        }
        reached = m;
    }
    Ok(reached)
}
