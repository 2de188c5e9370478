//! Dynamical maps on the effective three-level space `{|+>, |->, |00>}`,
//! their Choi matrices, trace norms and fidelities.
//!
//! The single-excitation dynamics is fully parameterized by the pair of
//! normalized amplitudes `(r1, r2)`:
//!
//! ```text
//! E(|+><+|)  = |r1|^2 |+><+| + (1 - |r1|^2) |00><00|
//! E(|-><-|)  = |r2|^2 |-><-| + (1 - |r2|^2) |00><00|
//! E(|+><-|)  = r1 conj(r2) |+><-|
//! E(|±><00|) = r_{1,2} |±><00|
//! E(|00><00|) = |00><00|
//! ```
//!
//! The Choi matrix is `(E (x) I)|Phi><Phi|` with `|Phi> = 3^{-1/2} sum |n>|n>`;
//! the `N = 3` normalization is what produces the 2/3 and 4/3 prefactors in
//! the g-functions. Intermediate maps between two times have the same
//! structure with amplitude ratios, which is exact and avoids inverting the
//! earlier map numerically.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigs, hermitian_function, CMat};
use crate::model::{CavityParams, Distance};

pub use crate::linalg::EigH;

/// Amplitude pair at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSnapshot {
    pub r1: C64,
    pub r2: C64,
    pub t: f64,
}

impl ChannelSnapshot {
    pub fn new(r1: C64, r2: C64, t: f64) -> Self {
        Self { r1, r2, t }
    }
}

/// Hermitian matrix representing `(E (x) I)|Phi><Phi|`, stored dense.
/// Dimension 9 for the three-level maps, 4 for the single-atom channel, 81
/// transiently under Kronecker products.
#[derive(Debug, Clone)]
pub struct ChoiMatrix {
    mat: CMat,
    label: String,
}

impl ChoiMatrix {
    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn from_matrix(mat: CMat, label: impl Into<String>) -> Self {
        Self { mat, label: label.into() }
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(hermitian_eigs(&self.mat)?.values[0])
    }
}

/// Composite index `(system, ancilla) -> 3 i + m`.
#[inline]
fn idx(i: usize, m: usize) -> usize {
    3 * i + m
}

fn choi_from_pair(r1: C64, r2: C64, label: String) -> ChoiMatrix {
    let third = 1.0 / 3.0;
    let mut m = CMat::zeros(9);
    let a1 = r1.norm_sqr();
    let a2 = r2.norm_sqr();
    // populations: E(|0><0|), E(|1><1|), E(|2><2|)
    m.set(idx(0, 0), idx(0, 0), C64::new(third * a1, 0.0));
    m.set(idx(2, 0), idx(2, 0), C64::new(third * (1.0 - a1), 0.0));
    m.set(idx(1, 1), idx(1, 1), C64::new(third * a2, 0.0));
    m.set(idx(2, 1), idx(2, 1), C64::new(third * (1.0 - a2), 0.0));
    m.set(idx(2, 2), idx(2, 2), C64::new(third, 0.0));
    // coherences
    let c01 = third * r1 * r2.conj();
    m.set(idx(0, 0), idx(1, 1), c01);
    m.set(idx(1, 1), idx(0, 0), c01.conj());
    let c02 = third * r1;
    m.set(idx(0, 0), idx(2, 2), c02);
    m.set(idx(2, 2), idx(0, 0), c02.conj());
    let c12 = third * r2;
    m.set(idx(1, 1), idx(2, 2), c12);
    m.set(idx(2, 2), idx(1, 1), c12.conj());
    ChoiMatrix { mat: m, label }
}

/// Choi matrix of the map `E_(t,0)` at the snapshot's amplitudes.
pub fn choi(ch: &ChannelSnapshot) -> ChoiMatrix {
    choi_from_pair(ch.r1, ch.r2, format!("E(t={};r1,r2)", ch.t))
}

/// Choi matrix of the single-atom amplitude-damping channel with coherence
/// factor `u` (2-level system, `|Phi> = 2^{-1/2} (|11> + |00>)`; index 0 is
/// the excited state).
pub fn choi_single_atom(u: C64) -> ChoiMatrix {
    let half = 0.5;
    let a = u.norm_sqr();
    let mut m = CMat::zeros(4);
    m.set(0, 0, C64::new(half * a, 0.0)); // (0,0),(0,0)
    m.set(2, 2, C64::new(half * (1.0 - a), 0.0)); // (1,0),(1,0)
    m.set(3, 3, C64::new(half, 0.0)); // (1,1),(1,1)
    let c = half * u;
    m.set(0, 3, c);
    m.set(3, 0, c.conj());
    ChoiMatrix { mat: m, label: "single-atom".into() }
}

/// Amplitudes below this are treated as zeros of the earlier map.
const SINGULAR_TOL: f64 = 1e-12;

/// Choi matrix of the intermediate map `E_(t,s)` built from amplitude ratios
/// `r(t)/r(s)`. Exact by the composition law; Hermitian and trace 1, but not
/// necessarily positive semidefinite — that violation is the
/// non-Markovianity signal.
pub fn intermediate_choi(later: &ChannelSnapshot, earlier: &ChannelSnapshot) -> Result<ChoiMatrix> {
    if later.t < earlier.t {
        return Err(Error::DomainError("intermediate map needs earlier.t <= later.t"));
    }
    if earlier.r1.norm() < SINGULAR_TOL || earlier.r2.norm() < SINGULAR_TOL {
        return Err(Error::SingularIntermediateMap(earlier.t));
    }
    let q1 = later.r1 / earlier.r1;
    let q2 = later.r2 / earlier.r2;
    Ok(choi_from_pair(q1, q2, format!("E({} <- {})", later.t, earlier.t)))
}

/// Trace norm `||A||_1 = sum |eigenvalue|` of a Hermitian matrix.
pub fn trace_norm(m: &ChoiMatrix) -> Result<f64> {
    Ok(hermitian_eigs(m.matrix())?.values.iter().map(|v| v.abs()).sum())
}

const PSD_TOL: f64 = -1e-8;

/// Uhlmann fidelity `F(A, B) = (Tr sqrt(sqrt(B) A sqrt(B)))^2` of two PSD
/// trace-one matrices; symmetric in its arguments.
pub fn fidelity(a: &ChoiMatrix, b: &ChoiMatrix) -> Result<f64> {
    let sqrt_b = psd_sqrt(b)?;
    fidelity_with_sqrt(&sqrt_b, a)
}

/// Square root of a PSD Choi matrix, for reuse across many fidelity calls
/// against the same reference.
pub fn psd_sqrt(m: &ChoiMatrix) -> Result<CMat> {
    let min = hermitian_eigs(m.matrix())?.values[0];
    if min < PSD_TOL {
        return Err(Error::NotPsd(min));
    }
    hermitian_function(m.matrix(), |x| x.max(0.0).sqrt())
}

/// Fidelity against a reference whose square root is precomputed.
pub fn fidelity_with_sqrt(sqrt_b: &CMat, a: &ChoiMatrix) -> Result<f64> {
    let min = hermitian_eigs(a.matrix())?.values[0];
    if min < PSD_TOL {
        return Err(Error::NotPsd(min));
    }
    let inner = sqrt_b.matmul(a.matrix()).matmul(sqrt_b);
    let eig = hermitian_eigs(&inner)?;
    let root_sum: f64 = eig.values.iter().map(|&v| v.max(0.0).sqrt()).sum();
    Ok((root_sum * root_sum).min(1.0))
}

/// Asymptotic Choi matrix `lim_{t -> inf} (E_(t,0) (x) I)|Phi><Phi|`.
///
/// For any `d > 0` (and the infinite-distance sentinel) both amplitudes
/// relax, giving the `(0, 0)` Choi. At `d = 0` the antisymmetric амplitude is
/// frozen in the decoherence-free subspace, so the limit is the `(0, 1)`
/// Choi; the limit exists, hence it coincides with the long-time average.
pub fn choi_asymptotic(p: &CavityParams) -> ChoiMatrix {
    match p.d {
        Distance::Finite(d) if d == 0.0 => {
            choi_from_pair(C64::new(0.0, 0.0), C64::new(1.0, 0.0), "asymptotic d=0".into())
        }
        _ => choi_from_pair(C64::new(0.0, 0.0), C64::new(0.0, 0.0), "asymptotic".into()),
    }
}

/// Finite-difference estimate of the divisibility rate,
/// `g = (||Choi(E_(t+eps,t))||_1 - 1) / eps`. Cross-check for the
/// master-equation route `g = (2/3)(gamma1^- + gamma2^-)`.
pub fn g_numeric(earlier: &ChannelSnapshot, later: &ChannelSnapshot) -> Result<f64> {
    let eps = later.t - earlier.t;
    if eps <= 0.0 {
        return Err(Error::DomainError("g_numeric needs later.t > earlier.t"));
    }
    let inter = intermediate_choi(later, earlier)?;
    Ok((trace_norm(&inter)? - 1.0) / eps)
}

/// Kronecker product of two Choi matrices (system (x) ancilla ordering kept
/// per factor). Used by the multiplicativity property tests.
pub fn kron(a: &ChoiMatrix, b: &ChoiMatrix) -> ChoiMatrix {
    ChoiMatrix {
        mat: a.matrix().kron(b.matrix()),
        label: format!("{} (x) {}", a.label, b.label),
    }
}

pub use crate::linalg::hermitian_eigs as eigs;

#[cfg(test)]
mod tests {
    use super::*;

    fn snap(r1: C64, r2: C64) -> ChannelSnapshot {
        ChannelSnapshot::new(r1, r2, 0.0)
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn rng_stream(seed: u64) -> impl FnMut() -> f64 {
        let mut state = seed.max(1);
        move || {
            state ^= state >> 12;
            state ^= state << 25;
            state ^= state >> 27;
            (state.wrapping_mul(0x2545F4914F6CDD1D) >> 11) as f64 / (1u64 << 53) as f64
        }
    }

    fn random_amp(rnd: &mut impl FnMut() -> f64) -> C64 {
        let mag = rnd();
        let ph = rnd() * std::f64::consts::TAU;
        C64::from_polar(mag, ph)
    }

    #[test]
    fn identity_channel_is_the_maximally_entangled_state() {
        let m = choi(&snap(c(1.0, 0.0), c(1.0, 0.0)));
        assert!((m.trace() - 1.0).abs() < 1e-14);
        let eig = hermitian_eigs(m.matrix()).unwrap();
        // rank one, eigenvalue 1
        assert!((eig.values[8] - 1.0).abs() < 1e-12);
        assert!(eig.values[..8].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn fully_relaxed_channel() {
        let m = choi(&snap(c(0.0, 0.0), c(0.0, 0.0)));
        // (1/3)|00><00| (x) I on the ancilla: three eigenvalues 1/3
        let eig = hermitian_eigs(m.matrix()).unwrap();
        assert!((eig.values[8] - 1.0 / 3.0).abs() < 1e-14);
        assert!((eig.values[6] - 1.0 / 3.0).abs() < 1e-14);
        assert!(eig.values[..6].iter().all(|v| v.abs() < 1e-14));
        assert!((m.trace() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn physical_snapshots_give_psd_choi() {
        let mut rnd = rng_stream(91);
        for _ in 0..100 {
            let m = choi(&snap(random_amp(&mut rnd), random_amp(&mut rnd)));
            assert!(m.min_eigenvalue().unwrap() >= -1e-12);
            assert!((m.trace() - 1.0).abs() < 1e-12);
            assert!(m.matrix().hermiticity_defect() < 1e-15);
        }
    }

    #[test]
    fn intermediate_map_of_equal_times_is_identity() {
        let s = snap(c(0.3, 0.1), c(0.7, -0.2));
        let m = intermediate_choi(&s, &s).unwrap();
        let id = choi(&snap(c(1.0, 0.0), c(1.0, 0.0)));
        assert!(m.matrix().sub(id.matrix()).frobenius_norm() < 1e-14);
    }

    #[test]
    fn contracting_amplitudes_give_cp_intermediate_maps() {
        // |r| decreasing -> ratios inside the unit disk -> PSD
        let later = snap(c(0.2, 0.05), c(0.3, -0.1));
        let earlier = snap(c(0.5, 0.0), c(0.6, 0.0));
        let m = intermediate_choi(&later, &earlier).unwrap();
        assert!(m.min_eigenvalue().unwrap() >= -1e-10);
    }

    #[test]
    fn reviving_amplitudes_break_positivity() {
        // |r1(t)| > |r1(s)|: the intermediate map cannot be CP
        let later = snap(c(0.9, 0.0), c(0.5, 0.0));
        let earlier = snap(c(0.5, 0.0), c(0.5, 0.0));
        let m = intermediate_choi(&later, &earlier).unwrap();
        assert!(m.min_eigenvalue().unwrap() < -1e-6);
        assert!((m.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singular_earlier_amplitude_is_reported() {
        let later = snap(c(0.5, 0.0), c(0.5, 0.0));
        let earlier = snap(c(0.0, 0.0), c(0.5, 0.0));
        assert!(matches!(
            intermediate_choi(&later, &earlier),
            Err(Error::SingularIntermediateMap(_))
        ));
    }

    #[test]
    fn trace_norm_examples() {
        let psd = choi(&snap(c(0.4, 0.2), c(0.1, -0.3)));
        assert!((trace_norm(&psd).unwrap() - 1.0).abs() < 1e-12);

        let mut m = CMat::zeros(4);
        for (i, v) in [0.5, 0.6, -0.1, 0.0].iter().enumerate() {
            m.set(i, i, c(*v, 0.0));
        }
        let m = ChoiMatrix::from_matrix(m, "diag");
        assert!((trace_norm(&m).unwrap() - 1.2).abs() < 1e-14);
    }

    #[test]
    fn trace_norm_is_multiplicative_under_kron() {
        let mut rnd = rng_stream(17);
        for _ in 0..20 {
            let a = intermediate_choi(
                &snap(random_amp(&mut rnd), random_amp(&mut rnd)),
                &snap(
                    random_amp(&mut rnd) + c(0.2, 0.0),
                    random_amp(&mut rnd) + c(0.2, 0.0),
                ),
            )
            .unwrap();
            let b = choi(&snap(random_amp(&mut rnd), random_amp(&mut rnd)));
            let prod = kron(&a, &b);
            let lhs = trace_norm(&prod).unwrap();
            let rhs = trace_norm(&a).unwrap() * trace_norm(&b).unwrap();
            assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn fidelity_limits() {
        let a = choi(&snap(c(0.5, 0.2), c(0.3, 0.0)));
        assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-10);

        // orthogonal-support rank-1 matrices
        let mut p = CMat::zeros(4);
        p.set(0, 0, c(1.0, 0.0));
        let mut q = CMat::zeros(4);
        q.set(3, 3, c(1.0, 0.0));
        let f = fidelity(&ChoiMatrix::from_matrix(p, "p"), &ChoiMatrix::from_matrix(q, "q"))
            .unwrap();
        assert!(f.abs() < 1e-14);
    }

    #[test]
    fn fidelity_is_symmetric() {
        let a = choi(&snap(c(0.7, 0.1), c(0.2, -0.4)));
        let b = choi(&snap(c(0.1, 0.0), c(0.9, 0.2)));
        let f1 = fidelity(&a, &b).unwrap();
        let f2 = fidelity(&b, &a).unwrap();
        assert!((f1 - f2).abs() < 1e-11);
    }

    #[test]
    fn fidelity_factorizes_over_products() {
        let mut rnd = rng_stream(5);
        for _ in 0..10 {
            let a1 = choi(&snap(random_amp(&mut rnd), random_amp(&mut rnd)));
            let a2 = choi(&snap(random_amp(&mut rnd), random_amp(&mut rnd)));
            let b1 = choi(&snap(random_amp(&mut rnd), random_amp(&mut rnd)));
            let b2 = choi(&snap(random_amp(&mut rnd), random_amp(&mut rnd)));
            let lhs = fidelity(&kron(&a1, &a2), &kron(&b1, &b2)).unwrap();
            let rhs = fidelity(&a1, &b1).unwrap() * fidelity(&a2, &b2).unwrap();
            assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn not_psd_input_is_rejected() {
        let later = snap(c(0.9, 0.0), c(0.5, 0.0));
        let earlier = snap(c(0.5, 0.0), c(0.5, 0.0));
        let bad = intermediate_choi(&later, &earlier).unwrap();
        let good = choi(&snap(c(0.2, 0.0), c(0.2, 0.0)));
        assert!(matches!(fidelity(&bad, &good), Err(Error::NotPsd(_))));
    }

    #[test]
    fn fidelity_against_relaxed_state_closed_form() {
        // F = (1/9)(1 + sqrt(1-|r1|^2) + sqrt(1-|r2|^2))^2 against the (0,0)
        // Choi: the restriction of the Choi to the system-ground sector is
        // diagonal
        let b = choi(&snap(c(0.0, 0.0), c(0.0, 0.0)));
        let mut rnd = rng_stream(33);
        for _ in 0..25 {
            let r1 = random_amp(&mut rnd);
            let r2 = random_amp(&mut rnd);
            let f = fidelity(&choi(&snap(r1, r2)), &b).unwrap();
            let expect = (1.0
                + (1.0 - r1.norm_sqr()).max(0.0).sqrt()
                + (1.0 - r2.norm_sqr()).max(0.0).sqrt())
            .powi(2)
                / 9.0;
            assert!((f - expect).abs() < 1e-11, "{f} vs {expect}");
        }
    }

    #[test]
    fn fidelity_against_dark_state_asymptote_closed_form() {
        // d = 0 asymptote (r2 frozen at 1): F = (1/9)(2 + sqrt(1-|r1|^2))^2
        let p = CavityParams::in_natural_units(0.01, 0.0165, Distance::Finite(0.0));
        let b = choi_asymptotic(&p);
        let mut rnd = rng_stream(71);
        for _ in 0..25 {
            let r1 = random_amp(&mut rnd);
            let f = fidelity(&choi(&snap(r1, c(1.0, 0.0))), &b).unwrap();
            let expect = (2.0 + (1.0 - r1.norm_sqr()).max(0.0).sqrt()).powi(2) / 9.0;
            assert!((f - expect).abs() < 1e-11, "{f} vs {expect}");
        }
    }

    #[test]
    fn asymptotic_choi_has_unit_trace() {
        for d in [Distance::Finite(0.0), Distance::Finite(2.0), Distance::Infinite] {
            let p = CavityParams::in_natural_units(0.01, 0.0165, d);
            assert!((choi_asymptotic(&p).trace() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn single_atom_choi_structure() {
        let m = choi_single_atom(c(1.0, 0.0));
        let eig = hermitian_eigs(m.matrix()).unwrap();
        assert!((eig.values[3] - 1.0).abs() < 1e-13);
        let m = choi_single_atom(c(0.0, 0.0));
        assert!((m.trace() - 1.0).abs() < 1e-14);
        assert!(m.min_eigenvalue().unwrap() >= -1e-14);
    }

    #[test]
    fn g_numeric_additivity_under_copies() {
        // log-multiplicativity of the trace norm makes g additive over
        // tensor copies of the same dynamics
        let eps = 1e-3;
        let earlier = snap(c(0.6, 0.0), c(0.62, 0.0));
        let later = ChannelSnapshot::new(c(0.6005, 0.0), c(0.619, 0.0), eps);
        let single = g_numeric(&earlier, &later).unwrap();

        let one = intermediate_choi(&later, &earlier).unwrap();
        let two = kron(&one, &one);
        let double = (trace_norm(&two).unwrap() - 1.0) / eps;
        assert!(
            (double - 2.0 * single).abs() <= 2.0 * eps * single.max(1.0),
            "{double} vs {}",
            2.0 * single
        );
    }
}
