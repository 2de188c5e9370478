//! Parameter sweeps and critical-point finders: the distance profile of the
//! measure, the critical distances where the rate minima change sign, the
//! measure-maximizing distance, and the atom-number threshold.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{CavityParams, Distance, RegOrder};
use crate::pipeline::{evaluate, rate_trajectory, RunSpec};
use crate::rates::{critical_n, is_nonmarkovian_n};
use crate::volterra::Scheme;

/// One row of a distance sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub d: Distance,
    pub measure_total: f64,
    pub measure_uncorrelated: f64,
    pub min_gamma1: f64,
    pub min_gamma_sum: f64,
    pub t_end: f64,
}

/// What a critical-point search converged on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalKind {
    /// Sign change of `min_t gamma1` (full dynamics).
    Total,
    /// Sign change of `min_t (gamma1 + gamma2)` (uncorrelated part).
    Uncorrelated,
    /// Interior maximum of the measure profile.
    MaxMeasure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalResult {
    pub d_star: f64,
    pub bracket: (f64, f64),
    pub tolerance: f64,
    pub iterations: u32,
    pub kind: CriticalKind,
}

/// Minimum over the window of `gamma1` and of `gamma1 + gamma2` at one
/// distance (flagged pole nodes excluded).
pub fn min_gamma(
    d: Distance,
    p: &CavityParams,
    t_end: f64,
    dt: f64,
    scheme: Scheme,
) -> Result<(f64, f64)> {
    let spec = RunSpec::new(p.with_distance(d), t_end, dt, scheme);
    let rates = rate_trajectory(&spec)?;
    Ok((rates.min_gamma1(), rates.min_gamma_sum()))
}

/// Bisection on the sign of the relevant rate minimum as a function of `d`.
/// The dynamics is non-Markovian (minimum negative) below the critical
/// distance and Markovian above it.
pub fn critical_distance(
    p: &CavityParams,
    bracket: (f64, f64),
    tol: f64,
    t_end: f64,
    dt: f64,
    scheme: Scheme,
    uncorrelated: bool,
) -> Result<CriticalResult> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) || tol <= 0.0 {
        return Err(Error::DomainError("critical_distance needs lo < hi and tol > 0"));
    }
    let pick = |pair: (f64, f64)| if uncorrelated { pair.1 } else { pair.0 };
    let mut iterations = 0u32;
    let f_lo = pick(min_gamma(Distance::Finite(lo), p, t_end, dt, scheme)?);
    iterations += 1;
    let f_hi = pick(min_gamma(Distance::Finite(hi), p, t_end, dt, scheme)?);
    iterations += 1;
    if !(f_lo < 0.0 && f_hi >= 0.0) {
        return Err(Error::NoSignChange { lo, hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = pick(min_gamma(Distance::Finite(mid), p, t_end, dt, scheme)?);
        iterations += 1;
        if f_mid < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CriticalResult {
        d_star: 0.5 * (lo + hi),
        bracket,
        tolerance: tol,
        iterations,
        kind: if uncorrelated { CriticalKind::Uncorrelated } else { CriticalKind::Total },
    })
}

/// Evaluate the full pipeline at every distance in `d_list`. Rows are
/// independent and run in parallel; output order follows the input order and
/// per-row failures are recorded rather than aborting the sweep.
pub fn sweep_distance(
    p: &CavityParams,
    d_list: &[Distance],
    t_end: f64,
    dt: f64,
    scheme: Scheme,
    reg: RegOrder,
) -> Vec<Result<ScanRow>> {
    d_list
        .par_iter()
        .map(|&d| {
            let spec = RunSpec::new(p.with_distance(d), t_end, dt, scheme);
            let ev = evaluate(&spec, reg)?;
            Ok(ScanRow {
                d,
                measure_total: ev.total.value,
                measure_uncorrelated: ev.uncorrelated.value,
                min_gamma1: ev.rates.min_gamma1(),
                min_gamma_sum: ev.rates.min_gamma_sum(),
                t_end,
            })
        })
        .collect()
}

/// Golden-section maximization of the total measure over `bracket`.
/// Returns the located maximum and its measure value; errors when the
/// profile is not unimodal over the bracket (interior never beats the edges).
pub fn find_dmax(
    p: &CavityParams,
    bracket: (f64, f64),
    t_end: f64,
    dt: f64,
    tol: f64,
    scheme: Scheme,
    reg: RegOrder,
) -> Result<(CriticalResult, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) || tol <= 0.0 {
        return Err(Error::DomainError("find_dmax needs lo < hi and tol > 0"));
    }
    let eval = |d: f64| -> Result<f64> {
        let spec = RunSpec::new(p.with_distance(Distance::Finite(d)), t_end, dt, scheme);
        Ok(evaluate(&spec, reg)?.total.value)
    };
    let f_lo_edge = eval(lo)?;
    let f_hi_edge = eval(hi)?;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    let mut iterations = 2u32;
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = eval(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = eval(x1)?;
        }
        iterations += 1;
    }
    let (d_star, peak) = if f1 > f2 { (x1, f1) } else { (x2, f2) };
    if peak <= f_lo_edge.max(f_hi_edge) {
        return Err(Error::BracketNotUnimodal { lo: bracket.0, hi: bracket.1 });
    }
    Ok((
        CriticalResult {
            d_star,
            bracket,
            tolerance: tol,
            iterations,
            kind: CriticalKind::MaxMeasure,
        },
        peak,
    ))
}

/// One row of the atom-number table.
#[derive(Debug, Clone, PartialEq)]
pub struct NAtomRow {
    pub n: u32,
    pub omega_sq: f64,
    pub nonmarkovian: bool,
    pub n_c: u64,
}

/// Purely analytic scan over atom numbers at `d = 0`.
pub fn natom_scan(p: &CavityParams, n_list: &[u32]) -> Vec<NAtomRow> {
    let n_c = critical_n(p).n_c;
    n_list
        .iter()
        .map(|&n| NAtomRow {
            n,
            omega_sq: p.lambda * p.lambda - 2.0 * n as f64 * p.gamma0 * p.gamma0,
            nonmarkovian: is_nonmarkovian_n(n, p),
            n_c,
        })
        .collect()
}

fn fmt_distance(d: Distance) -> String {
    match d {
        Distance::Finite(x) => format!("{x:.16e}"),
        Distance::Infinite => "inf".to_string(),
    }
}

/// Sweep CSV: `d,measure_total,measure_uncorrelated,min_gamma1,min_gamma_sum,t_end`.
/// Failed rows keep their position with `nan` data columns.
pub fn write_scan_csv<W: std::io::Write>(
    mut out: W,
    d_list: &[Distance],
    rows: &[Result<ScanRow>],
    t_end: f64,
) -> std::io::Result<()> {
    writeln!(out, "d,measure_total,measure_uncorrelated,min_gamma1,min_gamma_sum,t_end")?;
    for (d, row) in d_list.iter().zip(rows) {
        match row {
            Ok(r) => writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                fmt_distance(r.d),
                r.measure_total,
                r.measure_uncorrelated,
                r.min_gamma1,
                r.min_gamma_sum,
                r.t_end
            )?,
            Err(_) => writeln!(
                out,
                "{},nan,nan,nan,nan,{:.16e}",
                fmt_distance(*d),
                t_end
            )?,
        }
    }
    Ok(())
}

/// Atom-number CSV: `N,omega_N_sq,nonmarkovian,N_c`.
pub fn write_natoms_csv<W: std::io::Write>(mut out: W, rows: &[NAtomRow]) -> std::io::Result<()> {
    writeln!(out, "N,omega_N_sq,nonmarkovian,N_c")?;
    for r in rows {
        writeln!(out, "{},{:.16e},{},{}", r.n, r.omega_sq, r.nonmarkovian, r.n_c)?;
    }
    Ok(())
}
