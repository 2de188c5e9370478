//! Small dense complex-Hermitian linear algebra: just enough for Choi
//! matrices up to 81x81.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Dense complex matrix, row major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    n: usize,
    a: Vec<C64>,
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        Self { n, a: vec![C64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, C64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.a[i * self.n + j] = v;
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest |a_ij - conj(a_ji)|.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.get(i, k);
                if aik.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let v = out.get(i, j) + aik * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.n, |i, j| self.get(j, i).conj())
    }

    pub fn scale(&self, s: f64) -> CMat {
        CMat { n: self.n, a: self.a.iter().map(|z| z * s).collect() }
    }

    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!(self.n, other.n);
        CMat { n: self.n, a: self.a.iter().zip(&other.a).map(|(x, y)| x + y).collect() }
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!(self.n, other.n);
        CMat { n: self.n, a: self.a.iter().zip(&other.a).map(|(x, y)| x - y).collect() }
    }

    /// Kronecker product, left factor on the coarse index:
    /// `(A (x) B)[i_a n_b + i_b, j_a n_b + j_b] = A[i_a, j_a] B[i_b, j_b]`.
    pub fn kron(&self, other: &CMat) -> CMat {
        let (na, nb) = (self.n, other.n);
        let n = na * nb;
        let mut out = CMat::zeros(n);
        for ia in 0..na {
            for ja in 0..na {
                let a = self.get(ia, ja);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for ib in 0..nb {
                    for jb in 0..nb {
                        out.set(ia * nb + ib, ja * nb + jb, a * other.get(ib, jb));
                    }
                }
            }
        }
        out
    }
}

/// Eigen-decomposition of a Hermitian matrix.
pub struct EigH {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, column `k` belongs to `values[k]`.
    pub vectors: CMat,
}

const HERMITICITY_TOL: f64 = 1e-10;

/// Cyclic Jacobi diagonalization for complex Hermitian matrices.
///
/// Sweeps annihilate one off-diagonal entry at a time with a phased plane
/// rotation; convergence for Hermitian input is unconditional. The returned
/// decomposition satisfies `|| M V - V diag(values) || <= ~1e-12 ||M||`.
pub fn hermitian_eigs(m: &CMat) -> Result<EigH> {
    let n = m.dim();
    let scale = m.frobenius_norm().max(1e-300);
    let defect = m.hermiticity_defect();
    if defect > HERMITICITY_TOL * scale.max(1.0) {
        return Err(Error::NotHermitian(defect));
    }

    let mut a = m.clone();
    // enforce exact hermiticity so rounding never drives the iteration
    for i in 0..n {
        let d = a.get(i, i);
        a.set(i, i, C64::new(d.re, 0.0));
        for j in i + 1..n {
            let avg = 0.5 * (a.get(i, j) + a.get(j, i).conj());
            a.set(i, j, avg);
            a.set(j, i, avg.conj());
        }
    }
    let mut v = CMat::identity(n);

    let off = |a: &CMat| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                s += 2.0 * a.get(i, j).norm_sqr();
            }
        }
        s.sqrt()
    };

    let tol = 1e-14 * scale;
    for _sweep in 0..60 {
        if off(&a) <= tol {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let apq = a.get(p, q);
                let b = apq.norm();
                if b <= 1e-300 {
                    continue;
                }
                let phase = apq / b; // e^{i phi}
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let tau = (aqq - app) / (2.0 * b);
                let t = if tau == 0.0 {
                    1.0
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                // columns: x_p' = c x_p - s conj(phase) x_q ; x_q' = s phase x_p + c x_q
                let sp = s * phase;
                let spc = s * phase.conj();
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - spc * akq);
                    a.set(k, q, sp * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - sp * aqk);
                    a.set(q, k, spc * apk + c * aqk);
                }
                // clean the annihilated pair and imaginary dust on the diagonal
                a.set(p, q, C64::new(0.0, 0.0));
                a.set(q, p, C64::new(0.0, 0.0));
                let dpp = a.get(p, p);
                let dqq = a.get(q, q);
                a.set(p, p, C64::new(dpp.re, 0.0));
                a.set(q, q, C64::new(dqq.re, 0.0));
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - spc * vkq);
                    v.set(k, q, sp * vkp + c * vkq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).re.total_cmp(&a.get(j, j).re));
    let values: Vec<f64> = order.iter().map(|&i| a.get(i, i).re).collect();
    let vectors = CMat::from_fn(n, |i, k| v.get(i, order[k]));
    Ok(EigH { values, vectors })
}

/// `f(M) = V f(diag) V^dagger` for a Hermitian `M`.
pub fn hermitian_function(m: &CMat, f: impl Fn(f64) -> f64) -> Result<CMat> {
    let eig = hermitian_eigs(m)?;
    let n = m.dim();
    let mut out = CMat::zeros(n);
    for k in 0..n {
        let fv = f(eig.values[k]);
        if fv == 0.0 {
            continue;
        }
        for i in 0..n {
            let vik = eig.vectors.get(i, k);
            for j in 0..n {
                let v = out.get(i, j) + fv * vik * eig.vectors.get(j, k).conj();
                out.set(i, j, v);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng_stream(seed: u64) -> impl FnMut() -> f64 {
        let mut state = seed.max(1);
        move || {
            // xorshift64*
            state ^= state >> 12;
            state ^= state << 25;
            state ^= state >> 27;
            let bits = state.wrapping_mul(0x2545F4914F6CDD1D);
            (bits >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        }
    }

    fn random_hermitian(n: usize, seed: u64) -> CMat {
        let mut rnd = rng_stream(seed);
        let mut m = CMat::zeros(n);
        for i in 0..n {
            m.set(i, i, C64::new(rnd(), 0.0));
            for j in i + 1..n {
                let z = C64::new(rnd(), rnd());
                m.set(i, j, z);
                m.set(j, i, z.conj());
            }
        }
        m
    }

    #[test]
    fn identity_has_unit_eigenvalues() {
        let eig = hermitian_eigs(&CMat::identity(5)).unwrap();
        assert!(eig.values.iter().all(|&v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn diagonal_matrix_is_sorted() {
        let mut m = CMat::zeros(3);
        m.set(0, 0, C64::new(3.0, 0.0));
        m.set(1, 1, C64::new(1.0, 0.0));
        m.set(2, 2, C64::new(2.0, 0.0));
        let eig = hermitian_eigs(&m).unwrap();
        assert_eq!(eig.values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn reconstruction_from_eigenpairs() {
        for (n, seed) in [(4usize, 7u64), (9, 11), (17, 23)] {
            let m = random_hermitian(n, seed);
            let eig = hermitian_eigs(&m).unwrap();
            // M V = V diag
            let mv = m.matmul(&eig.vectors);
            let mut vd = CMat::zeros(n);
            for k in 0..n {
                for i in 0..n {
                    vd.set(i, k, eig.vectors.get(i, k) * eig.values[k]);
                }
            }
            let resid = mv.sub(&vd).frobenius_norm();
            assert!(resid <= 1e-12 * m.frobenius_norm().max(1.0), "n={n}: resid {resid:e}");
            // orthonormal vectors
            let gram = eig.vectors.adjoint().matmul(&eig.vectors);
            let defect = gram.sub(&CMat::identity(n)).frobenius_norm();
            assert!(defect < 1e-12, "n={n}: gram defect {defect:e}");
        }
    }

    #[test]
    fn rejects_non_hermitian_input() {
        let mut m = CMat::identity(3);
        m.set(0, 1, C64::new(0.5, 0.0));
        assert!(matches!(hermitian_eigs(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn matrix_square_root_squares_back() {
        let m = random_hermitian(6, 3);
        // make it PSD
        let psd = m.matmul(&m.adjoint());
        let root = hermitian_function(&psd, |x| x.max(0.0).sqrt()).unwrap();
        let back = root.matmul(&root);
        assert!(back.sub(&psd).frobenius_norm() < 1e-11 * psd.frobenius_norm());
    }

    #[test]
    fn kron_dimensions_and_trace() {
        let a = random_hermitian(3, 5);
        let b = random_hermitian(4, 9);
        let k = a.kron(&b);
        assert_eq!(k.dim(), 12);
        let ta = a.trace();
        let tb = b.trace();
        assert!((k.trace() - ta * tb).norm() < 1e-12);
    }
}
