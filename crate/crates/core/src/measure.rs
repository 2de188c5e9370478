//! Weight function, RHP-type measures and the root-power-regularized measure
//! with pole-aware quadrature.
//!
//! All integrals run over the finite window `[0, t_end]`; the weight is
//! normalized on the same window, so `int w = 1` by construction and
//! `-int log F` doubles as the logarithmic relaxation estimate.

use crate::error::{Error, Result};
use crate::model::{RegOrder, TimeGrid};
use crate::rates::PoleInfo;

/// Which quantity a [`MeasureResult`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureVariant {
    /// Unweighted integral of `g` (dimensionless).
    Rhp,
    /// Weighted integral of `g` (units 1/time); diverges on rate poles.
    Weighted,
    /// `[int g^{1/(alpha+1)} w]^{alpha+1}`, finite across simple poles.
    SqrtWeighted,
    /// Same, on the uncorrelated part of the dynamics.
    SqrtWeightedUncorrelated,
}

impl std::fmt::Display for MeasureVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            MeasureVariant::Rhp => "rhp",
            MeasureVariant::Weighted => "weighted",
            MeasureVariant::SqrtWeighted => "sqrt-weighted",
            MeasureVariant::SqrtWeightedUncorrelated => "sqrt-weighted-uncorrelated",
        };
        write!(f, "{s}")
    }
}

/// Bookkeeping from the quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadDiagnostics {
    /// Half-width of the analytic window around each flagged pole.
    pub pole_window: f64,
    /// Grid cells replaced by the analytic pole model.
    pub excluded_cells: usize,
}

/// Scalar measure value with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureResult {
    pub value: f64,
    pub t_end: f64,
    pub variant: MeasureVariant,
    pub reg: RegOrder,
    pub relaxation_estimate: f64,
    pub pole_count: usize,
    pub diagnostics: QuadDiagnostics,
}

/// Normalized weight samples plus the relaxation estimate they imply.
#[derive(Debug, Clone)]
pub struct WeightSamples {
    pub w: Vec<f64>,
    /// `-int_0^{t_end} log F ds`.
    pub relaxation_estimate: f64,
}

fn trapezoid(nodes: &[f64], vals: &[f64]) -> f64 {
    nodes
        .windows(2)
        .zip(vals.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// Weight `w(t) = log F(t) / int_0^{t_end} log F`, nonnegative and normalized
/// to unit integral on the window. Errors when `F` never leaves 1.
pub fn weight(f_samples: &[f64], grid: &TimeGrid) -> Result<WeightSamples> {
    assert_eq!(f_samples.len(), grid.len(), "one fidelity sample per node");
    let log_f: Vec<f64> = f_samples.iter().map(|&f| f.clamp(1e-300, 1.0).ln()).collect();
    let denom = trapezoid(grid.nodes(), &log_f);
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::DegenerateWeight);
    }
    let w = log_f.iter().map(|&lf| lf / denom).collect();
    Ok(WeightSamples { w, relaxation_estimate: -denom })
}

/// Poles closer than this (in units of the grid step) are merged into one
/// window with summed strength.
const POLE_MERGE_STEPS: f64 = 0.5;

/// Local model strength of `g` on the right of a simple amplitude zero:
/// each singular channel contributes `gamma^- ~ 2/tau`, hence `(2/3)*2` to g.
const POLE_STRENGTH: f64 = 4.0 / 3.0;

fn merged_poles(poles: &[PoleInfo], dt: f64, t_end: f64) -> Vec<(f64, f64)> {
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for p in poles.iter().filter(|p| p.time <= t_end) {
        match merged.last_mut() {
            Some((t, c)) if (p.time - *t).abs() <= POLE_MERGE_STEPS * dt => *c += POLE_STRENGTH,
            _ => merged.push((p.time, POLE_STRENGTH)),
        }
    }
    merged
}

fn check_pole_orders(poles: &[PoleInfo], reg: RegOrder) -> Result<()> {
    for p in poles {
        if p.order > reg.alpha() {
            return Err(Error::PoleOrderMismatch { found: p.order, alpha: reg.alpha() });
        }
    }
    Ok(())
}

/// Raw RHP measure `int_0^{t_end} g ds` by the trapezoidal rule. Refuses
/// windows containing rate poles: the raw integral is genuinely divergent
/// there and the regularized variant is the sanctioned path.
pub fn measure_rhp(g: &[f64], poles: &[PoleInfo], grid: &TimeGrid) -> Result<MeasureResult> {
    if let Some(p) = poles.iter().find(|p| p.time <= grid.t_end()) {
        return Err(Error::NonIntegrablePole(p.time));
    }
    if let Some(i) = g.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonIntegrablePole(grid.nodes()[i]));
    }
    Ok(MeasureResult {
        value: trapezoid(grid.nodes(), g),
        t_end: grid.t_end(),
        variant: MeasureVariant::Rhp,
        reg: RegOrder::default(),
        relaxation_estimate: 0.0,
        pole_count: 0,
        diagnostics: QuadDiagnostics { pole_window: 0.0, excluded_cells: 0 },
    })
}

/// Weighted (unregularized) measure `int g w ds`; same pole restrictions as
/// the raw RHP integral.
pub fn measure_weighted(
    g: &[f64],
    poles: &[PoleInfo],
    weights: &WeightSamples,
    grid: &TimeGrid,
) -> Result<MeasureResult> {
    if let Some(p) = poles.iter().find(|p| p.time <= grid.t_end()) {
        return Err(Error::NonIntegrablePole(p.time));
    }
    let gw: Vec<f64> = g.iter().zip(&weights.w).map(|(a, b)| a * b).collect();
    if let Some(i) = gw.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonIntegrablePole(grid.nodes()[i]));
    }
    Ok(MeasureResult {
        value: trapezoid(grid.nodes(), &gw),
        t_end: grid.t_end(),
        variant: MeasureVariant::Weighted,
        reg: RegOrder::default(),
        relaxation_estimate: weights.relaxation_estimate,
        pole_count: 0,
        diagnostics: QuadDiagnostics { pole_window: 0.0, excluded_cells: 0 },
    })
}

fn interp_linear(nodes: &[f64], vals: &[f64], t: f64) -> f64 {
    let j = nodes.partition_point(|&x| x <= t).clamp(1, nodes.len() - 1);
    let (t0, t1) = (nodes[j - 1], nodes[j]);
    let s = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
    (1.0 - s) * vals[j - 1] + s * vals[j]
}

/// Root-power-regularized weighted measure
/// `[int_0^{t_end} g^{1/(alpha+1)} w ds]^{alpha+1}`.
///
/// Around each flagged pole `t*` the integrand is replaced on `[t*, t* + delta]`
/// by the local model `g ~ c/(t - t*)` (strength `c` from the number of
/// channels whose amplitude vanishes there), integrated with the
/// singularity-absorbing substitution `tau = v^{(alpha+1)/alpha}` and the
/// sampled weight interpolated onto the substituted axis. Elsewhere the
/// composite trapezoid applies.
pub fn measure_sqrt(
    g: &[f64],
    poles: &[PoleInfo],
    weights: &WeightSamples,
    grid: &TimeGrid,
    reg: RegOrder,
    variant: MeasureVariant,
) -> Result<MeasureResult> {
    assert_eq!(g.len(), grid.len());
    check_pole_orders(poles, reg)?;
    let nodes = grid.nodes();
    let dt = grid.dt_effective();
    let delta = 10.0 * dt;
    let alpha = reg.alpha() as f64;
    let power = 1.0 / (alpha + 1.0);

    let windows: Vec<(f64, f64, f64)> = merged_poles(poles, dt, grid.t_end())
        .into_iter()
        .map(|(t_star, c)| {
            // extend the window to the first node at or past t* + delta so the
            // trapezoid and the analytic model tile the axis without gaps
            let target = (t_star + delta).min(grid.t_end());
            let k = nodes.partition_point(|&x| x < target);
            let upper = if k < nodes.len() { nodes[k] } else { grid.t_end() };
            (t_star, upper.max(t_star), c)
        })
        .collect();

    let in_window = |lo: f64, hi: f64| windows.iter().any(|&(a, b, _)| lo < b && hi > a);

    let mut total = 0.0;
    let mut excluded = 0usize;
    for j in 0..nodes.len() - 1 {
        let (t0, t1) = (nodes[j], nodes[j + 1]);
        if in_window(t0, t1) {
            excluded += 1;
            continue;
        }
        let v0 = g[j].max(0.0).powf(power) * weights.w[j];
        let v1 = g[j + 1].max(0.0).powf(power) * weights.w[j + 1];
        if !v0.is_finite() || !v1.is_finite() {
            return Err(Error::NonIntegrablePole(t0));
        }
        total += 0.5 * (t1 - t0) * (v0 + v1);
    }

    // analytic pole windows: int_0^D (c/tau)^p w(t* + tau) dtau with
    // tau = v^q, q = (alpha+1)/alpha
    let q = (alpha + 1.0) / alpha;
    for &(t_star, upper, c) in &windows {
        let span = upper - t_star;
        if span <= 0.0 {
            continue;
        }
        let vmax = span.powf(1.0 / q);
        let m = 32;
        let mut acc = 0.0;
        for k in 0..=m {
            let v = vmax * k as f64 / m as f64;
            let tau = v.powf(q);
            let wloc = interp_linear(nodes, &weights.w, (t_star + tau).min(grid.t_end()));
            let val = q * c.powf(power) * wloc; // v^{q-1-pq} = 1 by construction
            acc += if k == 0 || k == m { 0.5 * val } else { val };
        }
        total += acc * vmax / m as f64;
    }

    Ok(MeasureResult {
        value: total.max(0.0).powf(alpha + 1.0),
        t_end: grid.t_end(),
        variant,
        reg,
        relaxation_estimate: weights.relaxation_estimate,
        pole_count: merged_poles(poles, dt, grid.t_end()).len(),
        diagnostics: QuadDiagnostics { pole_window: delta, excluded_cells: excluded },
    })
}

// ---------------------------------------------------------------------------
// Closed-form d -> 0 limit
// ---------------------------------------------------------------------------

use crate::model::CavityParams;

/// `lim_{d -> 0} Ntilde (t_end -> inf) = (2 gamma0 - lambda) / 3`.
/// Only defined in the non-Markovian regime `lambda < 2 gamma0`.
pub fn measure_d0_limit(p: &CavityParams) -> Result<f64> {
    if p.lambda >= 2.0 * p.gamma0 {
        return Err(Error::NotApplicable("d -> 0 limit needs lambda < 2 gamma0"));
    }
    Ok((2.0 * p.gamma0 - p.lambda) / 3.0)
}

/// Integral of `sqrt(g0)` over one pulse of the periodic `d = 0` rate:
/// `I0 = 2 pi / sqrt(6 gamma0 + 3 lambda)`.
pub fn d0_pulse_integral(p: &CavityParams) -> Result<f64> {
    if p.lambda >= 2.0 * p.gamma0 {
        return Err(Error::NotApplicable("pulse integral needs lambda < 2 gamma0"));
    }
    Ok(2.0 * std::f64::consts::PI / (6.0 * p.gamma0 + 3.0 * p.lambda).sqrt())
}

/// Period of the `d = 0` rate, `T = 2 pi / |Omega_2|`.
pub fn d0_period(p: &CavityParams) -> Result<f64> {
    let w2 = p.lambda * p.lambda - 4.0 * p.gamma0 * p.gamma0;
    if w2 >= 0.0 {
        return Err(Error::NotApplicable("period needs lambda < 2 gamma0"));
    }
    Ok(2.0 * std::f64::consts::PI / (-w2).sqrt())
}

/// Support `[tau_i^n, tau_f^n]` of the `n`-th pulse of `sqrt(g0)`:
/// `tau_i^n = T [n - acot(lambda/|Omega_2|)/pi]`, `tau_f^n = n T`.
pub fn d0_pulse_support(p: &CavityParams, n: usize) -> Result<(f64, f64)> {
    let t = d0_period(p)?;
    let w2 = (4.0 * p.gamma0 * p.gamma0 - p.lambda * p.lambda).sqrt();
    let acot = (w2 / p.lambda).atan();
    let ti = t * (n as f64 - acot / std::f64::consts::PI);
    Ok((ti, n as f64 * t))
}
