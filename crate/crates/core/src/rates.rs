//! Time-local master-equation coefficients and the closed-form analytic
//! families used as oracles.
//!
//! The decay rates and Lamb shifts follow from the amplitude log-derivative,
//! `gamma_m = -2 Re[rdot_m / r_m]`, `S_m = -2 Im[rdot_m / r_m]`. The
//! `g`-functions feeding the non-Markovianity measures are
//! `g = (2/3)(gamma1^- + gamma2^-)` for the full dynamics and
//! `g_uc = (1/3)(|gamma1 + gamma2| - gamma1 - gamma2)` for the uncorrelated
//! part, where `x^- = (|x| - x)/2` is the negative part.

use num_complex::Complex64 as C64;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernels::Channel;
use crate::model::{CavityParams, TimeGrid};
use crate::volterra::{AmplitudeTrajectory, ZERO_TOL_FACTOR};

/// Negative part `(|x| - x)/2 >= 0`, with the one-sided pole convention:
/// a `+inf` sample (left limit at an amplitude zero) has zero negative part.
pub fn neg_part(x: f64) -> f64 {
    if x.is_finite() {
        0.5 * (x.abs() - x)
    } else if x > 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// A simple pole of a decay rate, located between grid nodes from the
/// amplitude zero crossing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleInfo {
    pub channel: Channel,
    pub time: f64,
    pub order: u32,
    /// Local amplitude slope `dr/dt` at the zero; the rate behaves like
    /// `gamma ~ -2/(t - t*)` regardless of its value, but the slope fixes the
    /// local linearization `r(t) ~ slope (t - t*)`.
    pub slope: C64,
}

/// Decay rates, Lamb shifts and g-functions sampled on the solver grid.
#[derive(Debug, Clone)]
pub struct RateTrajectory {
    grid: Arc<TimeGrid>,
    params: CavityParams,
    pub gamma1: Vec<f64>,
    pub gamma2: Vec<f64>,
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
    pub g: Vec<f64>,
    pub g_uc: Vec<f64>,
    u: Vec<C64>,
    poles: Vec<PoleInfo>,
}

impl RateTrajectory {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> Arc<TimeGrid> {
        Arc::clone(&self.grid)
    }

    pub fn params(&self) -> &CavityParams {
        &self.params
    }

    pub fn poles(&self) -> &[PoleInfo] {
        &self.poles
    }

    /// Coherence factor of the uncorrelated single-atom evolution,
    /// `u(t) = exp{-1/2 int_0^t [gamma_uc(s) + i S_uc(s)] ds}`, accumulated
    /// exactly through rate poles via the antiderivative
    /// `int gamma_m = -2 ln|r_m|`, `int S_m = -2 arg r_m` (phase unwrapped).
    pub fn u_uncorrelated(&self, i: usize) -> C64 {
        self.u[i]
    }

    pub fn u_samples(&self) -> &[C64] {
        &self.u
    }

    /// Minimum of `gamma1` over finite samples (pole nodes excluded).
    pub fn min_gamma1(&self) -> f64 {
        self.gamma1.iter().copied().filter(|x| x.is_finite()).fold(f64::INFINITY, f64::min)
    }

    /// Minimum of `gamma1 + gamma2` over finite samples.
    pub fn min_gamma_sum(&self) -> f64 {
        self.gamma1
            .iter()
            .zip(&self.gamma2)
            .map(|(a, b)| a + b)
            .filter(|x| x.is_finite())
            .fold(f64::INFINITY, f64::min)
    }

    /// CSV dump with header `t,gamma1,gamma2,S1,S2,g,g_uc`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,gamma1,gamma2,S1,S2,g,g_uc")?;
        for (i, &t) in self.grid.nodes().iter().enumerate() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                t, self.gamma1[i], self.gamma2[i], self.s1[i], self.s2[i], self.g[i], self.g_uc[i]
            )?;
        }
        Ok(())
    }
}

fn wrap_to_pi(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut y = x % two_pi;
    if y <= -std::f64::consts::PI {
        y += two_pi;
    } else if y > std::f64::consts::PI {
        y -= two_pi;
    }
    y
}

/// Scan one channel for amplitude zero crossings: a pole is flagged when the
/// straight segment between consecutive samples passes within
/// `ZERO_TOL_FACTOR` of the origin, relative to the local amplitude scale.
fn detect_poles(traj: &AmplitudeTrajectory) -> Vec<PoleInfo> {
    let t = traj.grid().nodes();
    let r = traj.r();
    let mut poles = Vec::new();
    for i in 0..r.len() - 1 {
        let a = r[i];
        let b = r[i + 1];
        let delta = b - a;
        let scale = a.norm().max(b.norm()) + delta.norm();
        if scale == 0.0 {
            continue;
        }
        let l2 = delta.norm_sqr();
        let s = if l2 > 0.0 { (-(a * delta.conj()).re / l2).clamp(0.0, 1.0) } else { 0.0 };
        let dist = (a + s * delta).norm();
        if dist <= ZERO_TOL_FACTOR * scale {
            let h = t[i + 1] - t[i];
            let time = t[i] + s * h;
            let slope = delta / h;
            let order = if slope.norm() <= ZERO_TOL_FACTOR * scale { 2 } else { 1 };
            if let Some(last) = poles.last() {
                let last: &PoleInfo = last;
                if (time - last.time).abs() < 0.5 * h {
                    continue;
                }
            }
            poles.push(PoleInfo { channel: traj.channel(), time, order, slope });
        }
    }
    poles
}

/// Build the rate trajectory from the two channel amplitudes.
pub fn rates_from_amplitudes(
    sym: &AmplitudeTrajectory,
    asym: &AmplitudeTrajectory,
) -> Result<RateTrajectory> {
    if sym.channel() != Channel::Symmetric || asym.channel() != Channel::Antisymmetric {
        return Err(Error::GridMismatch);
    }
    if sym.params() != asym.params() || sym.grid() != asym.grid() {
        return Err(Error::GridMismatch);
    }
    let n = sym.grid().len();
    let mut out = RateTrajectory {
        grid: sym.grid_arc(),
        params: *sym.params(),
        gamma1: Vec::with_capacity(n),
        gamma2: Vec::with_capacity(n),
        s1: Vec::with_capacity(n),
        s2: Vec::with_capacity(n),
        g: Vec::with_capacity(n),
        g_uc: Vec::with_capacity(n),
        u: Vec::with_capacity(n),
        poles: Vec::new(),
    };

    let mut phase = [0.0f64, 0.0];
    let mut prev_arg = [0.0f64, 0.0];
    for i in 0..n {
        let mut gam = [0.0f64; 2];
        let mut shift = [0.0f64; 2];
        for (c, traj) in [sym, asym].iter().enumerate() {
            match traj.log_derivative(i) {
                Ok(ld) => {
                    gam[c] = -2.0 * ld.re;
                    shift[c] = -2.0 * ld.im;
                }
                Err(Error::PoleAt(_)) => {
                    // left limit of the rate at an amplitude zero
                    gam[c] = f64::INFINITY;
                    shift[c] = f64::INFINITY;
                }
                Err(e) => return Err(e),
            }
            let arg = traj.r()[i].arg();
            if i > 0 {
                phase[c] += wrap_to_pi(arg - prev_arg[c]);
            }
            prev_arg[c] = arg;
        }
        out.gamma1.push(gam[0]);
        out.gamma2.push(gam[1]);
        out.s1.push(shift[0]);
        out.s2.push(shift[1]);
        out.g.push(2.0 / 3.0 * (neg_part(gam[0]) + neg_part(gam[1])));
        let sum = gam[0] + gam[1];
        let guc = if sum.is_finite() {
            (sum.abs() - sum) / 3.0
        } else if sum > 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        out.g_uc.push(guc);
        let ln_mod = 0.5 * (sym.r()[i].norm().ln() + asym.r()[i].norm().ln());
        let ph = 0.5 * (phase[0] + phase[1]);
        out.u.push(C64::from_polar(ln_mod.exp(), ph));
    }

    out.poles = detect_poles(sym);
    out.poles.extend(detect_poles(asym));
    out.poles.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(out)
}

// ---------------------------------------------------------------------------
// Closed-form families
// ---------------------------------------------------------------------------

/// Stable evaluation of `1 / (lambda + W coth(W t / 2))` with `W^2 = w2`
/// of either sign; `W` imaginary turns coth into the real cot branch.
fn coth_rate_core(t: f64, lambda: f64, w2: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    if w2.abs() * t * t < 1e-12 {
        return t / (lambda * t + 2.0);
    }
    if w2 > 0.0 {
        let w = w2.sqrt();
        let e = (-w * t).exp();
        (1.0 - e) / (lambda * (1.0 - e) + w * (1.0 + e))
    } else {
        let w = (-w2).sqrt();
        let x = 0.5 * w * t;
        let (s, c) = x.sin_cos();
        s / (lambda * s + w * c)
    }
}

/// Stable evaluation of `e^{-lambda t/2} [cosh(W t/2) + (lambda/W) sinh(W t/2)]`.
fn coth_amplitude_core(t: f64, lambda: f64, w2: f64) -> f64 {
    if w2.abs() * t * t < 1e-12 {
        return (-0.5 * lambda * t).exp() * (1.0 + 0.5 * lambda * t);
    }
    if w2 > 0.0 {
        let w = w2.sqrt();
        0.5 * ((1.0 + lambda / w) * (-0.5 * (lambda - w) * t).exp()
            + (1.0 - lambda / w) * (-0.5 * (lambda + w) * t).exp())
    } else {
        let w = (-w2).sqrt();
        let x = 0.5 * w * t;
        (-0.5 * lambda * t).exp() * (x.cos() + lambda / w * x.sin())
    }
}

/// Exact single-atom decay rate
/// `gamma(t) = 2 gamma0^2 / (lambda + Omega_1 coth(Omega_1 t / 2))`,
/// `Omega_1 = sqrt(lambda^2 - 2 gamma0^2)`. Pole samples come out as signed
/// infinities.
pub fn gamma_single(t: f64, p: &CavityParams) -> f64 {
    gamma_n(t, 1, p)
}

/// Negative part of the single-atom rate; zero unless `lambda < sqrt(2) gamma0`.
pub fn g_atom(t: f64, p: &CavityParams) -> f64 {
    neg_part(gamma_single(t, p))
}

/// Collective `N`-atom rate at zero separation,
/// `gamma_N(t) = 2 N gamma0^2 / (lambda + Omega_N coth(Omega_N t / 2))` with
/// `Omega_N = sqrt(lambda^2 - 2 N gamma0^2)`. `N = 1` is the single atom.
pub fn gamma_n(t: f64, n_atoms: u32, p: &CavityParams) -> f64 {
    let w2 = p.lambda * p.lambda - 2.0 * n_atoms as f64 * p.gamma0 * p.gamma0;
    2.0 * n_atoms as f64 * p.gamma0 * p.gamma0 * coth_rate_core(t, p.lambda, w2)
}

/// `g` for `N` atoms at zero separation: `(2/(N+1)) gamma_N^-`.
pub fn g_n(t: f64, n_atoms: u32, p: &CavityParams) -> f64 {
    2.0 / (n_atoms as f64 + 1.0) * neg_part(gamma_n(t, n_atoms, p))
}

/// Two atoms at `d = 0`: `g0(t) = (2/3) gamma1^-`, nonzero only when
/// `lambda < 2 gamma0`.
pub fn g_two_atoms_d0(t: f64, p: &CavityParams) -> f64 {
    g_n(t, 2, p)
}

/// Symmetric amplitude of `N` atoms at `d = 0`, normalized to 1 at `t = 0`.
pub fn c_plus_n(t: f64, n_atoms: u32, p: &CavityParams) -> f64 {
    let w2 = p.lambda * p.lambda - 2.0 * n_atoms as f64 * p.gamma0 * p.gamma0;
    coth_amplitude_core(t, p.lambda, w2)
}

/// Two-atom `d = 0` symmetric amplitude (`Omega_2 = sqrt(lambda^2 - 4 gamma0^2)`).
pub fn r1_closed_d0(t: f64, p: &CavityParams) -> f64 {
    c_plus_n(t, 2, p)
}

/// Pole times of a rate of the form `2k/(lambda + W coth(W t/2))` with
/// imaginary `W`: `t_n = (2/|W|) [pi n - acot(lambda/|W|)]`.
pub(crate) fn coth_pole_times(lambda: f64, w_abs: f64, n_max: usize) -> Vec<f64> {
    let acot = (w_abs / lambda).atan();
    (1..=n_max)
        .map(|n| 2.0 / w_abs * (std::f64::consts::PI * n as f64 - acot))
        .collect()
}

/// Pole times of the single-atom rate. Errors with [`Error::NoPoles`] when
/// `lambda >= sqrt(2) gamma0` (real `Omega_1`, no zero of the denominator).
pub fn pole_times(p: &CavityParams, n_max: usize) -> Result<Vec<f64>> {
    let w2 = p.lambda * p.lambda - 2.0 * p.gamma0 * p.gamma0;
    if w2 >= 0.0 {
        return Err(Error::NoPoles);
    }
    Ok(coth_pole_times(p.lambda, (-w2).sqrt(), n_max))
}

/// Smallest atom number whose `d = 0` collective dynamics is non-Markovian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CriticalN {
    /// `ceil(lambda^2 / (2 gamma0^2))`.
    pub n_c: u64,
    /// True when `lambda = sqrt(2 N_c) gamma0` exactly: the strict-inequality
    /// criterion is undecided at `N = N_c` itself.
    pub at_boundary: bool,
}

/// `N_c = ceil(lambda^2 / (2 gamma0^2))`, with the equality case flagged.
pub fn critical_n(p: &CavityParams) -> CriticalN {
    let x = p.lambda * p.lambda / (2.0 * p.gamma0 * p.gamma0);
    let n_c = x.ceil().max(1.0) as u64;
    CriticalN { n_c, at_boundary: x == x.ceil() }
}

/// Non-Markovianity flag for `N` atoms at `d = 0`: `lambda < sqrt(2N) gamma0`.
pub fn is_nonmarkovian_n(n_atoms: u32, p: &CavityParams) -> bool {
    p.lambda < (2.0 * n_atoms as f64).sqrt() * p.gamma0
}

/// Which exactly solvable configuration a closed form belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    SingleAtom,
    TwoAtomD0,
    TwoAtomDInf,
    NAtomD0(u32),
    /// Uncorrelated split of the dynamics; exactly solvable only in the
    /// `d -> inf` limit, where it coincides with the single atom.
    Uncorrelated,
}

/// Closed-form analytic family used as an oracle for the numerical pipeline.
#[derive(Debug, Clone, Copy)]
pub struct AnalyticFamily {
    pub kind: FamilyKind,
    pub params: CavityParams,
}

impl AnalyticFamily {
    pub fn new(kind: FamilyKind, params: CavityParams) -> Self {
        if let FamilyKind::NAtomD0(n) = kind {
            assert!(n >= 1, "atom number must be >= 1");
        }
        Self { kind, params }
    }

    fn effective_n(&self) -> u32 {
        match self.kind {
            FamilyKind::SingleAtom | FamilyKind::TwoAtomDInf | FamilyKind::Uncorrelated => 1,
            FamilyKind::TwoAtomD0 => 2,
            FamilyKind::NAtomD0(n) => n,
        }
    }

    /// `Omega^2 = lambda^2 - 2 N_eff gamma0^2` for the family's oscillator.
    pub fn omega_sq(&self) -> f64 {
        let p = &self.params;
        p.lambda * p.lambda - 2.0 * self.effective_n() as f64 * p.gamma0 * p.gamma0
    }

    /// Per-channel decay rate of the family.
    pub fn gamma(&self, t: f64) -> f64 {
        let n = self.effective_n();
        match self.kind {
            FamilyKind::TwoAtomD0 => gamma_n(t, 2, &self.params),
            _ => gamma_n(t, n, &self.params),
        }
    }

    /// Normalized decaying amplitude of the family.
    pub fn amplitude(&self, t: f64) -> f64 {
        c_plus_n(t, self.effective_n(), &self.params)
    }
}
