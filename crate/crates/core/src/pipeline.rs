//! End-to-end evaluation: solve both channels, build rates, sample the Choi
//! fidelity against the asymptotic map, and integrate the measures.

use num_complex::Complex64 as C64;
use std::sync::Arc;

use crate::choi::{choi, choi_asymptotic, fidelity_with_sqrt, psd_sqrt, ChannelSnapshot};
use crate::error::Result;
use crate::kernels::Channel;
use crate::measure::{
    measure_sqrt, weight, MeasureResult, MeasureVariant, WeightSamples,
};
use crate::model::{make_grid, CavityParams, RegOrder, TimeGrid};
use crate::rates::{rates_from_amplitudes, RateTrajectory};
use crate::volterra::{solve, AmplitudeTrajectory, Scheme};

/// One fidelity eigen-decomposition per this many grid nodes; log F is
/// interpolated linearly in between. The fidelity varies on the slow
/// relaxation timescale, so thinning is safe and saves most of the
/// eigensolver cost.
pub const FIDELITY_THINNING: usize = 10;

/// Everything needed to run one configuration.
#[derive(Debug, Clone, Copy)]
pub struct RunSpec {
    pub params: CavityParams,
    pub t_end: f64,
    pub dt: f64,
    pub scheme: Scheme,
}

impl RunSpec {
    pub fn new(params: CavityParams, t_end: f64, dt: f64, scheme: Scheme) -> Self {
        Self { params, t_end, dt, scheme }
    }

    pub fn grid(&self) -> Result<Arc<TimeGrid>> {
        Ok(Arc::new(make_grid(&self.params, self.t_end, self.dt)?))
    }
}

/// Solve both Volterra channels on a shared grid.
pub fn solve_channels(spec: &RunSpec) -> Result<(AmplitudeTrajectory, AmplitudeTrajectory)> {
    let grid = spec.grid()?;
    let sym = solve(spec.scheme, Channel::Symmetric, &spec.params, &grid)?;
    let asym = solve(spec.scheme, Channel::Antisymmetric, &spec.params, &grid)?;
    Ok((sym, asym))
}

/// Solve and differentiate: the full rate trajectory for one configuration.
pub fn rate_trajectory(spec: &RunSpec) -> Result<RateTrajectory> {
    let (sym, asym) = solve_channels(spec)?;
    rates_from_amplitudes(&sym, &asym)
}

/// Fidelity `F(t) = ||sqrt(Choi_t) sqrt(Choi_inf)||_1^2` sampled on every
/// node (computed on a thinned subset, log-interpolated in between).
fn fidelity_samples(
    grid: &TimeGrid,
    snapshot_at: impl Fn(usize) -> ChannelSnapshot,
    asymptotic: &crate::choi::ChoiMatrix,
    thinning: usize,
) -> Result<Vec<f64>> {
    let nodes = grid.nodes();
    let n = nodes.len();
    let sqrt_inf = psd_sqrt(asymptotic)?;
    let mut idx: Vec<usize> = (0..n).step_by(thinning.max(1)).collect();
    if *idx.last().unwrap() != n - 1 {
        idx.push(n - 1);
    }
    let mut log_f_thin = Vec::with_capacity(idx.len());
    for &i in &idx {
        let f = fidelity_with_sqrt(&sqrt_inf, &choi(&snapshot_at(i)))?;
        log_f_thin.push(f.clamp(1e-300, 1.0).ln());
    }
    let mut out = Vec::with_capacity(n);
    let mut seg = 0usize;
    for i in 0..n {
        while seg + 1 < idx.len() - 1 && idx[seg + 1] <= i {
            seg += 1;
        }
        let (i0, i1) = (idx[seg], idx[seg + 1]);
        let (t0, t1) = (nodes[i0], nodes[i1]);
        let s = if t1 > t0 { ((nodes[i] - t0) / (t1 - t0)).clamp(0.0, 1.0) } else { 0.0 };
        out.push(((1.0 - s) * log_f_thin[seg] + s * log_f_thin[seg + 1]).exp());
    }
    Ok(out)
}

/// Full evaluation of one configuration: rates plus both regularized
/// measures and the fidelity/weight profiles behind them.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub rates: RateTrajectory,
    pub f_total: Vec<f64>,
    pub w_total: WeightSamples,
    pub total: MeasureResult,
    pub f_uncorrelated: Vec<f64>,
    pub w_uncorrelated: WeightSamples,
    pub uncorrelated: MeasureResult,
}

/// Run the whole pipeline for one configuration.
pub fn evaluate(spec: &RunSpec, reg: RegOrder) -> Result<Evaluation> {
    let (sym, asym) = solve_channels(spec)?;
    let rates = rates_from_amplitudes(&sym, &asym)?;
    evaluate_from_rates(spec, reg, &sym, &asym, rates)
}

fn evaluate_from_rates(
    spec: &RunSpec,
    reg: RegOrder,
    sym: &AmplitudeTrajectory,
    asym: &AmplitudeTrajectory,
    rates: RateTrajectory,
) -> Result<Evaluation> {
    let grid = sym.grid();

    let asym_total = choi_asymptotic(&spec.params);
    let f_total = fidelity_samples(
        grid,
        |i| ChannelSnapshot::new(sym.r()[i], asym.r()[i], grid.nodes()[i]),
        &asym_total,
        FIDELITY_THINNING,
    )?;
    let w_total = weight(&f_total, grid)?;
    let total = measure_sqrt(
        &rates.g,
        rates.poles(),
        &w_total,
        grid,
        reg,
        MeasureVariant::SqrtWeighted,
    )?;

    // uncorrelated part: each atom evolves with the coherence factor u(t);
    // restricted to the same three-level sector this is the (u, u) channel,
    // which always relaxes to the (0, 0) map (no dark state survives the
    // uncorrelated split)
    let asym_uc = choi(&ChannelSnapshot::new(C64::new(0.0, 0.0), C64::new(0.0, 0.0), f64::INFINITY));
    let f_uc = fidelity_samples(
        grid,
        |i| {
            let u = rates.u_uncorrelated(i);
            ChannelSnapshot::new(u, u, grid.nodes()[i])
        },
        &asym_uc,
        FIDELITY_THINNING,
    )?;
    let w_uc = weight(&f_uc, grid)?;
    let uncorrelated = measure_sqrt(
        &rates.g_uc,
        rates.poles(),
        &w_uc,
        grid,
        reg,
        MeasureVariant::SqrtWeightedUncorrelated,
    )?;

    Ok(Evaluation {
        rates,
        f_total,
        w_total,
        total,
        f_uncorrelated: f_uc,
        w_uncorrelated: w_uc,
        uncorrelated,
    })
}

/// Per-node measure profile CSV: `t,F,logF,w,sqrt_g`.
pub fn write_measure_csv<W: std::io::Write>(
    mut out: W,
    grid: &TimeGrid,
    f: &[f64],
    w: &WeightSamples,
    g: &[f64],
) -> std::io::Result<()> {
    writeln!(out, "t,F,logF,w,sqrt_g")?;
    for (i, &t) in grid.nodes().iter().enumerate() {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            t,
            f[i],
            f[i].max(1e-300).ln(),
            w.w[i],
            g[i].max(0.0).sqrt()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Distance;

    const G0: f64 = 0.01;

    #[test]
    fn markovian_configuration_measures_zero() {
        let p = CavityParams::in_natural_units(G0, 2.5 * G0, Distance::Finite(1.0));
        let spec = RunSpec::new(p, 200.0, 0.05, Scheme::Fast);
        let ev = evaluate(&spec, RegOrder::default()).unwrap();
        assert!(ev.total.value.abs() < 1e-12);
        assert!(ev.uncorrelated.value.abs() < 1e-12);
        assert!(ev.w_total.relaxation_estimate > 0.0);
    }

    #[test]
    fn sentinel_total_and_uncorrelated_agree() {
        // at d -> inf the uncorrelated split is the full dynamics
        let p = CavityParams::in_natural_units(G0, 0.7 * G0, Distance::Infinite);
        let spec = RunSpec::new(p, 500.0, 0.05, Scheme::Fast);
        let ev = evaluate(&spec, RegOrder::default()).unwrap();
        assert!(ev.total.value > 0.0);
        let rel = (ev.total.value - ev.uncorrelated.value).abs() / ev.total.value;
        assert!(rel < 1e-3, "total {} vs uncorrelated {}", ev.total.value, ev.uncorrelated.value);
    }

    #[test]
    fn fidelity_profile_starts_at_one_ninth_and_relaxes() {
        let p = CavityParams::in_natural_units(G0, 0.0165, Distance::Finite(1.0));
        let spec = RunSpec::new(p, 2000.0, 0.1, Scheme::Fast);
        let ev = evaluate(&spec, RegOrder::default()).unwrap();
        assert!((ev.f_total[0] - 1.0 / 9.0).abs() < 1e-10);
        assert!(*ev.f_total.last().unwrap() > 0.9);
    }

    #[test]
    fn measure_csv_shape() {
        let p = CavityParams::in_natural_units(G0, 0.0165, Distance::Finite(0.0));
        let spec = RunSpec::new(p, 5.0, 0.5, Scheme::Direct);
        let ev = evaluate(&spec, RegOrder::default()).unwrap();
        let mut buf = Vec::new();
        write_measure_csv(&mut buf, ev.rates.grid(), &ev.f_total, &ev.w_total, &ev.rates.g)
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,F,logF,w,sqrt_g\n"));
        assert_eq!(text.lines().count(), 1 + ev.rates.grid().len());
    }
}
