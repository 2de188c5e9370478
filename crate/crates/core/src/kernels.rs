//! Closed-form bath correlation functions and Volterra kernels for the
//! Lorentzian cavity.
//!
//! The single-atom correlation is a plain exponential,
//! `f1(t) = (gamma0^2/2) e^{-lambda t}`. The cross correlation `f2` carries
//! the retardation structure: for `t < d` it mixes growing/decaying
//! exponentials with an oscillation at `omega0`, while for `t > d` it decays
//! like `e^{-lambda t}`. Both branches match continuously at `t = d`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{CavityParams, Distance};

/// Volterra channel index: `m = 1` drives the symmetric amplitude `|+>`,
/// `m = 2` the antisymmetric `|->`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Symmetric,
    Antisymmetric,
}

impl Channel {
    pub fn index(self) -> usize {
        match self {
            Channel::Symmetric => 1,
            Channel::Antisymmetric => 2,
        }
    }

    /// Sign of the `f2` term in `K_m = f1 - (-1)^m f2`.
    pub(crate) fn f2_sign(self) -> f64 {
        match self {
            Channel::Symmetric => 1.0,
            Channel::Antisymmetric => -1.0,
        }
    }
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// Which kernel to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelId {
    F1,
    F2,
    K(Channel),
}

/// Lorentzian spectral density `J(w)`, peaked at `omega0` with half-width
/// `lambda` and peak value `gamma0^2 / (2 pi lambda)`. Defined for all real
/// `w` (negative-frequency extension).
pub fn spectral_density(omega: f64, p: &CavityParams) -> f64 {
    let det = omega - p.omega0;
    p.gamma0 * p.gamma0 * p.lambda / (2.0 * std::f64::consts::PI * (det * det + p.lambda * p.lambda))
}

/// Same-atom correlation function `f1(t) = (gamma0^2/2) e^{-lambda t}`.
pub fn f1(t: f64, p: &CavityParams) -> C64 {
    C64::new(0.5 * p.gamma0 * p.gamma0 * (-p.lambda * t).exp(), 0.0)
}

/// Precomputed coefficients of the `f2` branches for one parameter set.
///
/// For `u < d`:  `f2(u) = a_neg e^{-lambda u} + b e^{lambda (u - d)} + e_osc e^{i omega0 u}`
/// (the growing exponential is fused with `e^{-lambda d}` so nothing
/// overflows for large `d`).
///
/// For `u >= d`: `f2(u) = c_ret e^{-lambda (u - d)} + c_dir e^{-lambda u}`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct F2Coeffs {
    d: f64,
    lambda: f64,
    omega0: f64,
    a_neg: C64,
    b: C64,
    e_osc: C64,
    c_ret: C64,
    c_dir: C64,
}

impl F2Coeffs {
    pub(crate) fn new(p: &CavityParams, d: f64) -> Self {
        debug_assert!(d > 0.0);
        let g2 = p.gamma0 * p.gamma0;
        let zp = C64::new(p.lambda, p.omega0);
        let zm = C64::new(p.lambda, -p.omega0);
        let pref = g2 / (4.0 * d);
        let a_neg = -pref * (-zp * d).exp() / zp;
        let b = -pref * C64::new(0.0, p.omega0 * d).exp() / zm;
        let e_osc = C64::new(pref * 2.0 * p.lambda / (p.omega0 * p.omega0 + p.lambda * p.lambda), 0.0);
        let c_ret = pref * C64::new(0.0, p.omega0 * d).exp() / zp;
        let c_dir = -pref * (-zp * d).exp() / zp;
        Self { d, lambda: p.lambda, omega0: p.omega0, a_neg, b, e_osc, c_ret, c_dir }
    }

    /// `t < d` branch.
    pub(crate) fn before(&self, t: f64) -> C64 {
        self.a_neg * (-self.lambda * t).exp()
            + self.b * (self.lambda * (t - self.d)).exp()
            + self.e_osc * C64::new(0.0, self.omega0 * t).exp()
    }

    /// `t >= d` branch.
    pub(crate) fn after(&self, t: f64) -> C64 {
        self.c_ret * (-self.lambda * (t - self.d)).exp() + self.c_dir * (-self.lambda * t).exp()
    }

    pub(crate) fn eval(&self, t: f64) -> C64 {
        if t < self.d {
            self.before(t)
        } else if t > self.d {
            self.after(t)
        } else {
            // Heaviside convention theta(0) = 1/2; the branches agree here.
            0.5 * (self.before(t) + self.after(t))
        }
    }
}

/// Cross correlation `f2(t)` for finite `d > 0`.
///
/// At `d = 0` the caller must substitute [`f1`] (the `sinc -> 1` limit); the
/// infinite-distance sentinel gives 0 exactly.
pub fn f2(t: f64, p: &CavityParams) -> Result<C64> {
    match p.d {
        Distance::Infinite => Ok(C64::new(0.0, 0.0)),
        Distance::Finite(d) if d == 0.0 => {
            Err(Error::DomainError("f2 undefined at d = 0; use f1 (sinc -> 1 limit)"))
        }
        Distance::Finite(d) => Ok(F2Coeffs::new(p, d).eval(t)),
    }
}

/// Kernel evaluation: `K_m(t) = f1(t) - (-1)^m f2(t)`, i.e. `K1 = f1 + f2`
/// and `K2 = f1 - f2`. At `d = 0` this collapses to `K1 = 2 f1`, `K2 = 0`;
/// at the infinite-distance sentinel both channels reduce to `f1`.
pub fn kernel(id: KernelId, t: f64, p: &CavityParams) -> C64 {
    match id {
        KernelId::F1 => f1(t, p),
        KernelId::F2 => match p.d {
            Distance::Infinite => C64::new(0.0, 0.0),
            Distance::Finite(d) if d == 0.0 => f1(t, p),
            Distance::Finite(d) => F2Coeffs::new(p, d).eval(t),
        },
        KernelId::K(ch) => match p.d {
            Distance::Infinite => f1(t, p),
            Distance::Finite(d) if d == 0.0 => match ch {
                Channel::Symmetric => 2.0 * f1(t, p),
                Channel::Antisymmetric => C64::new(0.0, 0.0),
            },
            Distance::Finite(d) => {
                f1(t, p) + ch.f2_sign() * F2Coeffs::new(p, d).eval(t)
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CavityParams;

    const G0: f64 = 0.01;
    const LAM: f64 = 0.0165;

    fn params(d: Distance) -> CavityParams {
        CavityParams::in_natural_units(G0, LAM, d)
    }

    #[test]
    fn spectral_density_peak_and_half_width() {
        let p = params(Distance::Finite(2.0));
        let peak = G0 * G0 / (2.0 * std::f64::consts::PI * LAM);
        assert!((spectral_density(1.0, &p) - peak).abs() < 1e-18);
        assert!((spectral_density(1.0 + LAM, &p) - 0.5 * peak).abs() < 1e-18);
        assert!((spectral_density(1.0 - LAM, &p) - 0.5 * peak).abs() < 1e-18);
        // direct evaluation at omega = omega0 for the quoted parameters
        let expect = 1e-4 * LAM / (2.0 * std::f64::consts::PI * LAM * LAM);
        assert!((spectral_density(1.0, &p) - expect).abs() < 1e-18);
    }

    #[test]
    fn f1_examples() {
        let p = params(Distance::Finite(2.0));
        assert_eq!(f1(0.0, &p).re, 5e-5);
        assert_eq!(f1(0.0, &p).im, 0.0);
        let e = f1(1.0 / LAM, &p).re;
        assert!((e - 5e-5 * (-1.0f64).exp()).abs() < 1e-18);
        assert!(f1(1e6, &p).norm() < 1e-300 * 1e300 * 1e-12); // -> 0
    }

    #[test]
    fn f2_rejects_zero_distance() {
        let p = params(Distance::Finite(0.0));
        assert!(matches!(f2(1.0, &p), Err(Error::DomainError(_))));
    }

    #[test]
    fn f2_vanishes_at_sentinel_and_large_d() {
        let p = params(Distance::Infinite);
        assert_eq!(f2(3.0, &p).unwrap(), C64::new(0.0, 0.0));
        let p = params(Distance::Finite(1e6));
        for t in [0.0, 10.0, 350.0] {
            assert!(f2(t, &p).unwrap().norm() <= G0 * G0 * 1e-5);
        }
    }

    #[test]
    fn f2_approaches_f1_for_tiny_d() {
        let p = params(Distance::Finite(1e-6));
        let a = f2(1.0, &p).unwrap();
        let b = f1(1.0, &p);
        assert!((a - b).norm() / b.norm() < 1e-4);
    }

    #[test]
    fn f2_branches_match_at_the_seam() {
        for d in [0.05, 0.37, 1.0, 2.0, 13.7, 120.0] {
            let p = params(Distance::Finite(d));
            let c = F2Coeffs::new(&p, d);
            let gap = (c.before(d) - c.after(d)).norm();
            assert!(gap <= 1e-10 * G0 * G0, "seam gap {gap:e} at d = {d}");
        }
    }

    #[test]
    fn f2_depends_only_on_separation() {
        // relabeling the atoms leaves |r1 - r2| = d unchanged; the kernel read
        // through either channel sees the same f2
        let p = params(Distance::Finite(1.5));
        let k1 = kernel(KernelId::K(Channel::Symmetric), 0.7, &p);
        let k2 = kernel(KernelId::K(Channel::Antisymmetric), 0.7, &p);
        let ff1 = f1(0.7, &p);
        let ff2 = f2(0.7, &p).unwrap();
        assert!((k1 - (ff1 + ff2)).norm() < 1e-20);
        assert!((k2 - (ff1 - ff2)).norm() < 1e-20);
    }

    #[test]
    fn kernel_limits() {
        let p0 = params(Distance::Finite(0.0));
        for t in [0.0, 1.0, 17.0] {
            assert_eq!(kernel(KernelId::K(Channel::Antisymmetric), t, &p0), C64::new(0.0, 0.0));
            let k1 = kernel(KernelId::K(Channel::Symmetric), t, &p0);
            assert!((k1 - 2.0 * f1(t, &p0)).norm() < 1e-20);
        }
        assert!((kernel(KernelId::K(Channel::Symmetric), 0.0, &p0).re - G0 * G0).abs() < 1e-18);

        let pinf = params(Distance::Infinite);
        for t in [0.0, 3.0] {
            for ch in [Channel::Symmetric, Channel::Antisymmetric] {
                assert_eq!(kernel(KernelId::K(ch), t, &pinf), f1(t, &pinf));
            }
        }
    }

    /// Brute-force quadrature of the defining frequency integral of f2:
    /// `int J(w) sinc(w d) e^{-i (w - w0) t} dw` over the full real line.
    fn f2_quadrature(t: f64, d: f64, p: &CavityParams) -> C64 {
        let integrand = |w: f64| -> C64 {
            let x = w * d;
            let sinc = if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
            let j = spectral_density(w, p);
            C64::new(0.0, -(w - p.omega0) * t).exp() * (j * sinc)
        };
        // composite Simpson over [w0 - span, w0 + span], panel width set by
        // the e^{-i (w - w0) t} phase; Lorentzian tails fall off as 1/w^2
        let span = 5.0e4;
        let panel = (0.4 / (t + 1.0)).min(2.0 * p.lambda);
        let n = ((2.0 * span / panel).ceil() as usize).next_multiple_of(2);
        let h = 2.0 * span / n as f64;
        let mut acc = integrand(p.omega0 - span) + integrand(p.omega0 + span);
        for k in 1..n {
            let w = p.omega0 - span + k as f64 * h;
            acc += integrand(w) * if k % 2 == 0 { 2.0 } else { 4.0 };
        }
        acc * (h / 3.0)
    }

    #[test]
    fn f2_matches_frequency_quadrature() {
        for (t, d) in [(0.5, 1.5), (3.0, 1.5), (0.3, 2.0), (5.0, 2.0), (1.0, 0.01)] {
            let p = params(Distance::Finite(d));
            let closed = f2(t, &p).unwrap();
            let quad = f2_quadrature(t, d, &p);
            let rel = (closed - quad).norm() / closed.norm();
            assert!(rel < 1e-6, "t={t} d={d}: rel err {rel:e}");
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(12))]
            #[test]
            fn quadrature_oracle_agrees(t in 0.0..20.0f64, d in 1e-3..20.0f64) {
                let p = params(Distance::Finite(d));
                let closed = f2(t, &p).unwrap();
                let quad = f2_quadrature(t, d, &p);
                let abs = (closed - quad).norm();
                prop_assert!(abs < 1e-7 * G0 * G0, "abs err {abs:e} at t={t} d={d}");
            }
        }
    }
}
