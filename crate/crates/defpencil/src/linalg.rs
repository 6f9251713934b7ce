//! Internal dense kernels: Householder QR with access to the full unitary
//! factor, reversal-based QL/RQ variants, and Hermitian eigenvalue helpers
//! on top of nalgebra.
//!
//! A single QR kernel backs every factorization in the crate; QL and RQ are
//! derived from it by index reversal and conjugation.

use crate::{CMat, RVec, C64};

#[inline]
fn phase(z: C64) -> C64 {
    let r = z.norm();
    if r == 0.0 {
        C64::new(1.0, 0.0)
    } else {
        z / r
    }
}

/// Householder reflectors of one factorization. `vs[j]` is the essential
/// vector of the j-th reflector, acting on rows j..m.
pub(crate) struct Reflectors {
    vs: Vec<Vec<C64>>,
    m: usize,
}

impl Reflectors {
    /// Selected columns of the full m-by-m unitary Q = H_0 H_1 ... H_{n-1}.
    pub(crate) fn q_columns(&self, cols: std::ops::Range<usize>) -> CMat {
        let m = self.m;
        let k = cols.len();
        let mut q = vec![C64::new(0.0, 0.0); m * k];
        for (c, col) in cols.enumerate() {
            q[c * m + col] = C64::new(1.0, 0.0);
        }
        for j in (0..self.vs.len()).rev() {
            let v = &self.vs[j];
            let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            if vnorm2 == 0.0 {
                continue;
            }
            let scale = 2.0 / vnorm2;
            for c in 0..k {
                let col = &mut q[c * m..(c + 1) * m];
                let mut dot = C64::new(0.0, 0.0);
                for i in j..m {
                    dot += v[i - j].conj() * col[i];
                }
                let s = dot * scale;
                for i in j..m {
                    col[i] -= s * v[i - j];
                }
            }
        }
        CMat::from_vec(m, k, q)
    }
}

/// Householder factorization of an m-by-n matrix, m >= n. Returns the
/// reflectors and the m-by-n upper-trapezoidal R.
pub(crate) fn householder_factor(mat: &CMat) -> (Reflectors, CMat) {
    let (m, n) = mat.shape();
    debug_assert!(m >= n, "householder_factor needs m >= n");
    let mut a: Vec<C64> = mat.as_slice().to_vec();
    let mut vs = Vec::with_capacity(n);
    for j in 0..n {
        let mut v: Vec<C64> = (j..m).map(|i| a[j * m + i]).collect();
        let xnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut keep = false;
        if xnorm > 0.0 {
            // alpha = -phase(x0) |x| avoids cancellation in v0 = x0 - alpha.
            let alpha = -phase(v[0]) * xnorm;
            v[0] -= alpha;
            let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            if vnorm2 > 0.0 {
                keep = true;
                let scale = 2.0 / vnorm2;
                for col in j..n {
                    let c = &mut a[col * m..(col + 1) * m];
                    let mut dot = C64::new(0.0, 0.0);
                    for i in j..m {
                        dot += v[i - j].conj() * c[i];
                    }
                    let s = dot * scale;
                    for i in j..m {
                        c[i] -= s * v[i - j];
                    }
                }
            }
        }
        if !keep {
            for z in v.iter_mut() {
                *z = C64::new(0.0, 0.0);
            }
        }
        vs.push(v);
    }
    for j in 0..n {
        for i in (j + 1)..m {
            a[j * m + i] = C64::new(0.0, 0.0);
        }
    }
    (Reflectors { vs, m }, CMat::from_vec(m, n, a))
}

/// Full QR of an m-by-n matrix (m >= n): Q is m-by-m unitary, R is m-by-n.
pub(crate) fn qr_full(mat: &CMat) -> (CMat, CMat) {
    let (refl, r) = householder_factor(mat);
    let m = mat.nrows();
    (refl.q_columns(0..m), r)
}

/// QR of a tall matrix returning only the orthogonal-complement columns
/// n..m of the full Q, together with R. The complement spans the kernel of
/// `mat^H`.
pub(crate) fn qr_complement(mat: &CMat) -> (CMat, CMat) {
    let (m, n) = mat.shape();
    let (refl, r) = householder_factor(mat);
    (refl.q_columns(n..m), r)
}

/// Reverse rows and columns (conjugation by the exchange permutation).
fn reverse_both(mat: &CMat) -> CMat {
    let (m, n) = mat.shape();
    CMat::from_fn(m, n, |i, j| mat[(m - 1 - i, n - 1 - j)])
}

/// QL factorization of a square matrix: `A = Q L` with L lower triangular.
pub(crate) fn ql(mat: &CMat) -> (CMat, CMat) {
    let rev = reverse_both(mat);
    let (q, r) = qr_full(&rev);
    (reverse_both(&q), reverse_both(&r))
}

/// RQ factorization of a square matrix: `A = R Q` with R upper triangular.
pub(crate) fn rq(mat: &CMat) -> (CMat, CMat) {
    let (q, l) = ql(&mat.adjoint());
    (l.adjoint(), q.adjoint())
}

/// Eigenvalues of a Hermitian matrix, ascending.
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn hermitian_eigenvalues(m: &CMat) -> RVec {
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    RVec::from_vec(ev)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending with
/// matching eigenvector columns.
pub(crate) fn hermitian_eigen(m: &CMat) -> (RVec, CMat) {
    let se = nalgebra::SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].partial_cmp(&se.eigenvalues[j]).unwrap());
    let vals = RVec::from_fn(n, |i, _| se.eigenvalues[order[i]]);
    let vecs = CMat::from_fn(n, n, |i, j| se.eigenvectors[(i, order[j])]);
    (vals, vecs)
}

pub(crate) fn lambda_min(m: &CMat) -> f64 {
    m.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn lambda_max(m: &CMat) -> f64 {
    m.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Spectral norm of a Hermitian matrix (largest absolute eigenvalue).
pub(crate) fn hermitian_norm(m: &CMat) -> f64 {
    m.symmetric_eigenvalues()
        .iter()
        .fold(0.0f64, |acc, &x| acc.max(x.abs()))
}

/// Spectral norm of a general matrix (largest singular value).
pub(crate) fn spectral_norm(m: &CMat) -> f64 {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0f64, f64::max)
}

/// Smallest singular value of a general matrix.
pub(crate) fn sigma_min(m: &CMat) -> f64 {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Hermitian part (M + M^H)/2, constructed mirror-exact: the result is
/// bitwise Hermitian (including zero signs) and the map is idempotent at
/// the bit level, which makes re-symmetrization on fixture load lossless.
pub(crate) fn hermitize(m: &CMat) -> CMat {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    let mut out = CMat::zeros(n, n);
    for i in 0..n {
        out[(i, i)] = C64::new(m[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let v = C64::new(
                0.5 * (m[(i, j)].re + m[(j, i)].re),
                0.5 * (m[(i, j)].im - m[(j, i)].im),
            );
            out[(i, j)] = v;
            out[(j, i)] = v.conj();
        }
    }
    out
}
