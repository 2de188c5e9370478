//! Physical parameters, unit conventions and time grids.
//!
//! Units are fixed by `hbar = c = 1` with frequencies measured in units of the
//! cavity resonance `omega0` (default 1). Since `c = 1`, the interatomic
//! distance `d` carries time units.

use crate::error::{Error, Result};

/// Interatomic distance, with the `d -> infinity` limit represented by an
/// explicit sentinel instead of a large float. In the sentinel configuration
/// the cross correlation `f2` vanishes identically, which is exact and avoids
/// `1/d` cancellation noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distance {
    Finite(f64),
    Infinite,
}

impl Distance {
    pub fn is_zero(self) -> bool {
        matches!(self, Distance::Finite(d) if d == 0.0)
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Distance::Infinite)
    }

    /// Finite value, if any.
    pub fn finite(self) -> Option<f64> {
        match self {
            Distance::Finite(d) => Some(d),
            Distance::Infinite => None,
        }
    }
}

impl std::fmt::Display for Distance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Distance::Finite(d) => write!(f, "{d}"),
            Distance::Infinite => write!(f, "inf"),
        }
    }
}

/// Model instance: coupling strength `gamma0`, cavity linewidth `lambda`,
/// resonance frequency `omega0` and interatomic distance `d`.
///
/// The Lorentzian spectral density is
/// `J(w) = gamma0^2 lambda / (2 pi [(w - omega0)^2 + lambda^2])`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    pub gamma0: f64,
    pub lambda: f64,
    pub omega0: f64,
    pub d: Distance,
}

impl CavityParams {
    pub fn new(gamma0: f64, lambda: f64, omega0: f64, d: Distance) -> Self {
        Self { gamma0, lambda, omega0, d }
    }

    /// Parameters with `omega0 = 1` (the unit system used throughout).
    pub fn in_natural_units(gamma0: f64, lambda: f64, d: Distance) -> Self {
        Self::new(gamma0, lambda, 1.0, d)
    }

    /// Same parameters at a different distance.
    pub fn with_distance(self, d: Distance) -> Self {
        Self { d, ..self }
    }
}

/// Non-fatal validity flags. The solver stays mathematically well defined
/// outside the physical regime, so these are warnings rather than errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Warning {
    /// `gamma0 / omega0 > 0.1`: the rotating-wave approximation behind the
    /// model needs `gamma0 << omega0`.
    WeakCouplingViolated,
    /// `omega0 / lambda < 10`: the closed-form kernels rely on extending the
    /// frequency integrals to negative frequencies, which needs a narrow line.
    NarrowLineViolated,
}

/// Outcome of [`validate_params`].
#[derive(Debug, Clone, Default)]
pub struct ValidityReport {
    pub errors: Vec<Error>,
    pub warnings: Vec<Warning>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Check positivity of all parameters and set the physical-regime flags.
/// Never mutates its input; calling it twice gives the same report.
pub fn validate_params(p: &CavityParams) -> ValidityReport {
    let mut report = ValidityReport::default();
    if !(p.gamma0 > 0.0) {
        report.errors.push(Error::NonPositiveParameter("gamma0"));
    }
    if !(p.lambda > 0.0) {
        report.errors.push(Error::NonPositiveParameter("lambda"));
    }
    if !(p.omega0 > 0.0) {
        report.errors.push(Error::NonPositiveParameter("omega0"));
    }
    if let Distance::Finite(d) = p.d {
        if d < 0.0 || !d.is_finite() {
            report.errors.push(Error::NonPositiveParameter("d"));
        }
    }
    if !report.is_valid() {
        return report;
    }
    if p.gamma0 / p.omega0 > 0.1 {
        report.warnings.push(Warning::WeakCouplingViolated);
    }
    if p.omega0 / p.lambda < 10.0 {
        report.warnings.push(Warning::NarrowLineViolated);
    }
    report
}

/// Order of the root-power regularization: a pole of order `alpha` is tamed
/// by taking the `(alpha+1)`-th root inside the weighted integral and raising
/// the result to the `(alpha+1)`-th power. Simple poles need `alpha = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegOrder {
    alpha: u32,
}

impl RegOrder {
    pub fn new(alpha: u32) -> Result<Self> {
        if alpha < 1 {
            return Err(Error::DomainError("regularization order alpha must be >= 1"));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(self) -> u32 {
        self.alpha
    }
}

impl Default for RegOrder {
    fn default() -> Self {
        Self { alpha: 1 }
    }
}

/// Sample times for the Volterra solve, strictly increasing from 0 to `t_end`.
///
/// When `0 < d < t_end` the distance is inserted as an exact node so the
/// kernel kink at delay `t = d` sits on the grid, and the base step is capped
/// at `2 pi / (20 omega0)` so the oscillatory branch of the kernel stays
/// resolved even for coarse user steps.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    nodes: Vec<f64>,
    t_end: f64,
    dt_base: f64,
    dt_effective: f64,
    uniform: bool,
}

impl TimeGrid {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// Step requested by the caller.
    pub fn dt_base(&self) -> f64 {
        self.dt_base
    }

    /// Step actually used for the bulk of the grid (after the oscillatory
    /// window cap).
    pub fn dt_effective(&self) -> f64 {
        self.dt_effective
    }

    /// True when all steps are equal (no node was inserted at `t = d`).
    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// Grid from explicit nodes (strictly increasing, starting at 0).
    /// `dt_nominal` records the bulk step for pole-window sizing when the
    /// node set was augmented by hand.
    pub fn from_nodes(nodes: Vec<f64>, dt_nominal: f64) -> Result<TimeGrid> {
        if nodes.len() < 2 {
            return Err(Error::InvalidGrid("need at least two nodes".into()));
        }
        if nodes[0] != 0.0 {
            return Err(Error::InvalidGrid("grid must start at t = 0".into()));
        }
        if !nodes.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::InvalidGrid("nodes must be strictly increasing".into()));
        }
        if !(dt_nominal > 0.0) {
            return Err(Error::InvalidGrid("dt must be positive".into()));
        }
        let t_end = *nodes.last().unwrap();
        let h0 = nodes[1] - nodes[0];
        let uniform = nodes.windows(2).all(|w| ((w[1] - w[0]) - h0).abs() <= 1e-12 * h0);
        Ok(TimeGrid { nodes, t_end, dt_base: dt_nominal, dt_effective: dt_nominal, uniform })
    }
}

/// Build the time grid for a solve. See [`TimeGrid`] for the invariants.
pub fn make_grid(p: &CavityParams, t_end: f64, dt: f64) -> Result<TimeGrid> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidGrid(format!("t_end = {t_end} must be positive")));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidGrid(format!("dt = {dt} must be positive")));
    }
    if dt > t_end {
        return Err(Error::InvalidGrid(format!("dt = {dt} exceeds t_end = {t_end}")));
    }

    // The t < d kernel branch oscillates at omega0; cap the step there.
    let osc_cap = 2.0 * std::f64::consts::PI / (20.0 * p.omega0);
    let needs_cap = matches!(p.d, Distance::Finite(d) if d > 0.0);
    let dt_eff = if needs_cap { dt.min(osc_cap) } else { dt };

    let n = (t_end / dt_eff).round().max(1.0) as usize;
    let n = if (n as f64) * dt_eff < t_end - 1e-12 * t_end { n + 1 } else { n };
    let step = t_end / n as f64;
    let mut nodes: Vec<f64> = (0..=n).map(|k| k as f64 * step).collect();
    nodes[n] = t_end;

    let mut uniform = true;
    if let Distance::Finite(d) = p.d {
        if d > 0.0 && d < t_end {
            // Snap the nearest node onto d, or insert one if the gap is large.
            let k = (d / step).round() as usize;
            let k = k.clamp(1, n - 1);
            if (nodes[k] - d).abs() <= 1e-9 * step {
                nodes[k] = d;
            } else {
                let pos = nodes.partition_point(|&t| t < d);
                nodes.insert(pos, d);
                uniform = false;
            }
        }
    }

    debug_assert!(nodes.windows(2).all(|w| w[1] > w[0]));
    Ok(TimeGrid { nodes, t_end, dt_base: dt, dt_effective: step, uniform })
}
