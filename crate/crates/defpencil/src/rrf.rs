//! Randomized rank-revealing factorizations.
//!
//! `rurv` computes `A = U R V` (or `U L V`) with Haar V, which is
//! rank-revealing with high probability. `grurv` extends this to products
//! `A_1^{m_1} A_2^{m_2} ... A_k^{m_k}` with exponents +-1 without ever
//! forming an inverse: triangular factors are returned and rank is read
//! from diagonal ratios.

use crate::error::{PencilError, Result};
use crate::linalg;
use crate::rng::StreamKey;
use crate::{CMat, C64};
use rand_distr::StandardNormal;

use rand::Rng;

/// Which triangular factor `rurv` produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Upper,
    Lower,
}

/// Exponent of one factor in a GRURV product.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exponent {
    Plus,
    Minus,
}

impl Exponent {
    pub fn value(self) -> i32 {
        match self {
            Exponent::Plus => 1,
            Exponent::Minus => -1,
        }
    }
}

/// Triangular factors with |diagonal| below `RELATIVE_BREAKDOWN_TOL *
/// |A_i|_2` under an inverse exponent trigger a breakdown error; the
/// algorithm assumes invertibility but floating point needs a guard.
const RELATIVE_BREAKDOWN_TOL: f64 = 1e-14;

fn haar_from_key(n: usize, key: StreamKey) -> CMat {
    let mut rng = key.rng();
    let g = CMat::from_fn(n, n, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let (q, r) = linalg::qr_full(&g);
    let mut phases = CMat::identity(n, n);
    for i in 0..n {
        let d = r[(i, i)];
        phases[(i, i)] = if d.norm() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            d / d.norm()
        };
    }
    q * phases
}

/// Randomized rank-revealing factorization `M = U T V` with U unitary, V
/// Haar, and T upper (`Side::Upper`) or lower (`Side::Lower`) triangular.
pub fn rurv(m: &CMat, side: Side, seed: u64) -> (CMat, CMat, CMat) {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols(), "rurv expects a square matrix");
    let v = haar_from_key(n, StreamKey::root(seed));
    let a_hat = m * v.adjoint();
    let (u, t) = match side {
        Side::Upper => linalg::qr_full(&a_hat),
        Side::Lower => linalg::ql(&a_hat),
    };
    (u, t, v)
}

/// Output of [`grurv`]: `U * R_1^{m_1} * ... * R_k^{m_k} * V` is a
/// rank-revealing factorization of the input product.
#[derive(Clone, Debug)]
pub struct RRFResult {
    pub u: CMat,
    /// Upper-triangular factor per input matrix, in input order.
    pub r_factors: Vec<CMat>,
    pub v: CMat,
    pub exponents: Vec<Exponent>,
}

/// Generalized randomized rank-revealing factorization of
/// `A_1^{m_1} A_2^{m_2} ... A_k^{m_k}` with `m_i` in {+1, -1}.
///
/// Works right to left: an initial RURV (or RULV of `A_k^H` when
/// `m_k = -1`), then a QR or RQ per remaining factor depending on its
/// exponent. No inverse is ever formed.
pub fn grurv(matrices: &[CMat], exponents: &[Exponent], seed: u64) -> Result<RRFResult> {
    if matrices.is_empty() || matrices.len() != exponents.len() {
        return Err(PencilError::InvalidInput(format!(
            "grurv: got {} matrices and {} exponents",
            matrices.len(),
            exponents.len()
        )));
    }
    let n = matrices[0].nrows();
    for m in matrices {
        if m.nrows() != n || m.ncols() != n {
            return Err(PencilError::InvalidInput(
                "grurv: all matrices must be square of equal size".into(),
            ));
        }
    }
    let k = matrices.len();
    let key = StreamKey::root(seed).child(crate::rng::label::RURV);

    let mut r_factors: Vec<Option<CMat>> = vec![None; k];
    let (mut u_current, v);
    match exponents[k - 1] {
        Exponent::Plus => {
            let (u, r, vv) = rurv_from_key(&matrices[k - 1], Side::Upper, key);
            u_current = u;
            v = vv;
            r_factors[k - 1] = Some(r);
        }
        Exponent::Minus => {
            let (u, l, vv) = rurv_from_key(&matrices[k - 1].adjoint(), Side::Lower, key);
            let r = l.adjoint();
            check_invertible(&r, &matrices[k - 1], k - 1)?;
            u_current = u;
            v = vv;
            r_factors[k - 1] = Some(r);
        }
    }

    for i in (0..k - 1).rev() {
        match exponents[i] {
            Exponent::Plus => {
                let (u, r) = linalg::qr_full(&(&matrices[i] * &u_current));
                u_current = u;
                r_factors[i] = Some(r);
            }
            Exponent::Minus => {
                let (r, q) = linalg::rq(&(u_current.adjoint() * &matrices[i]));
                check_invertible(&r, &matrices[i], i)?;
                u_current = q.adjoint();
                r_factors[i] = Some(r);
            }
        }
    }

    Ok(RRFResult {
        u: u_current,
        r_factors: r_factors.into_iter().map(Option::unwrap).collect(),
        v,
        exponents: exponents.to_vec(),
    })
}

fn rurv_from_key(m: &CMat, side: Side, key: StreamKey) -> (CMat, CMat, CMat) {
    let n = m.nrows();
    let v = haar_from_key(n, key);
    let a_hat = m * v.adjoint();
    let (u, t) = match side {
        Side::Upper => linalg::qr_full(&a_hat),
        Side::Lower => linalg::ql(&a_hat),
    };
    (u, t, v)
}

fn check_invertible(r: &CMat, original: &CMat, index: usize) -> Result<()> {
    let scale = linalg::spectral_norm(original);
    let min_diag = (0..r.nrows())
        .map(|i| r[(i, i)].norm())
        .fold(f64::INFINITY, f64::min);
    if min_diag < RELATIVE_BREAKDOWN_TOL * scale {
        return Err(PencilError::Breakdown(format!(
            "matrix {index} under exponent -1 is numerically singular \
             (min |R(i,i)| = {min_diag:e}, |A| = {scale:e})"
        )));
    }
    Ok(())
}

/// Number of indices with `|r2(i,i) / r1(i,i)| >= threshold`; the rank of
/// an implicit product `R1^{-1} R2` read off the triangular diagonals.
pub fn rank_from_ratios(r1: &CMat, r2: &CMat, threshold: f64) -> Result<usize> {
    if r1.nrows() != r2.nrows() || r1.ncols() != r2.ncols() || r1.nrows() != r1.ncols() {
        return Err(PencilError::InvalidInput(
            "rank_from_ratios: factors must be square of equal size".into(),
        ));
    }
    let mut count = 0;
    for i in 0..r1.nrows() {
        let d1 = r1[(i, i)].norm();
        if d1 == 0.0 {
            return Err(PencilError::Breakdown(format!(
                "rank_from_ratios: zero diagonal in R1 at index {i}"
            )));
        }
        if r2[(i, i)].norm() / d1 >= threshold {
            count += 1;
        }
    }
    Ok(count)
}

/// Explicit product `U R_1^{m_1} ... R_k^{m_k} V`, for verification at desk
/// scale only; triangular inverses are formed here and nowhere else.
pub fn reconstruct(result: &RRFResult) -> Result<CMat> {
    let n = result.u.nrows();
    let mut acc = CMat::identity(n, n);
    for (r, e) in result.r_factors.iter().zip(&result.exponents) {
        match e {
            Exponent::Plus => acc *= r,
            Exponent::Minus => {
                let inv = r.clone().try_inverse().ok_or_else(|| {
                    PencilError::Breakdown("reconstruct: triangular factor not invertible".into())
                })?;
                acc *= inv;
            }
        }
    }
    Ok(&result.u * acc * &result.v)
}
