//! Inverse-free dynamically weighted Halley iteration (IF-DWH).
//!
//! Given a pencil `(A, B)` with real eigenvalues in `[-1, -l) u (l, 1]`,
//! each step applies the rational map `f(x) = x (a x^2 + b) / (c x^2 + 1)`
//! to the implicit matrix `B^{-1} A` using two stacked QR factorizations
//! and no inversion. The dynamic coefficients depend on the current lower
//! spectral bound `l` and drive all eigenvalues toward plus/minus one, so
//! the iterate converges to the matrix sign function of `B^{-1} A`.

use crate::error::{PencilError, Result};
use crate::linalg;
use crate::{CMat, C64};

/// Default iteration cap; convergence is doubly logarithmic, so anything
/// close to this indicates a broken input contract.
pub const DEFAULT_MAX_ITERS: usize = 40;

/// Relative tolerance declaring the stacked matrix rank-deficient.
const STACK_BREAKDOWN_TOL: f64 = 1e-14;

/// Dynamically weighted Halley coefficients for a spectral bound `l`.
///
/// At `l = 1` they degenerate to the classical Halley map (1, 3, 3); the
/// identities `a = (b-1)^2/4` and `c = a + b - 1` hold by construction.
#[derive(Clone, Copy, Debug)]
pub struct HalleyCoefficients {
    pub gamma_coef: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl HalleyCoefficients {
    /// The scalar map `f(x) = x (a x^2 + b) / (c x^2 + 1)` the implicit
    /// iteration applies to every eigenvalue. `f(1) = 1` since
    /// `a + b = c + 1`.
    pub fn scalar_map(&self, x: f64) -> f64 {
        x * (self.a * x * x + self.b) / (self.c * x * x + 1.0)
    }

    /// Next lower spectral bound `f(l)`, evaluated in a cancellation-free
    /// form when `l` is close to one.
    pub fn l_update(&self, l: f64) -> f64 {
        if l > 0.99 {
            // 1 - f(l) = (1-l) q(1-l) / (c l^2 + 1) with
            // q(d) = ((b-3)/2)^2 - d (b-1)(b-3)/2 + a d^2,
            // using a - b + 2 = ((b-3)/2)^2 and b - 1 - 2a = -(b-1)(b-3)/2.
            let d = 1.0 - l;
            let b3 = self.b - 3.0;
            let q = (b3 / 2.0) * (b3 / 2.0) - d * (self.b - 1.0) * b3 / 2.0 + self.a * d * d;
            (1.0 - d * q / (self.c * l * l + 1.0)).clamp(l, 1.0)
        } else {
            self.scalar_map(l).clamp(l, 1.0)
        }
    }
}

/// Coefficients of one dynamically weighted Halley step.
pub fn halley_coefficients(l: f64) -> Result<HalleyCoefficients> {
    if !(l > 0.0 && l <= 1.0) {
        return Err(PencilError::InvalidInput(format!(
            "halley_coefficients needs l in (0, 1], got {l}"
        )));
    }
    let l2 = l * l;
    let gamma_coef = (4.0 * (1.0 - l2) / (l2 * l2)).cbrt();
    let s = (1.0 + gamma_coef).sqrt();
    let b = s + 0.5 * (8.0 - 4.0 * gamma_coef + 8.0 * (2.0 - l2) / (l2 * s)).sqrt();
    let a = 0.25 * (b - 1.0) * (b - 1.0);
    let c = a + b - 1.0;
    Ok(HalleyCoefficients {
        gamma_coef,
        a,
        b,
        c,
    })
}

/// Implicit pencil iterate with its scalar spectral bound.
///
/// The generalized eigenvalues of `(a_mat, b_mat)` stay in
/// `[-1, -l) u (l, 1]` whenever the input contract held; `l` never
/// decreases across steps.
#[derive(Clone, Debug)]
pub struct HalleyState {
    pub a_mat: CMat,
    pub b_mat: CMat,
    pub l: f64,
    pub iters: usize,
}

impl HalleyState {
    pub fn new(a_mat: CMat, b_mat: CMat, l: f64) -> Result<Self> {
        if a_mat.nrows() != a_mat.ncols()
            || b_mat.nrows() != b_mat.ncols()
            || a_mat.nrows() != b_mat.nrows()
        {
            return Err(PencilError::InvalidInput(
                "halley state needs square matrices of equal size".into(),
            ));
        }
        if !(l > 0.0 && l <= 1.0) {
            return Err(PencilError::InvalidInput(format!(
                "halley state needs l in (0, 1], got {l}"
            )));
        }
        Ok(HalleyState {
            a_mat,
            b_mat,
            l,
            iters: 0,
        })
    }
}

/// One IF-DWH step.
///
/// The stacked matrices use the `[-B; A]` sign convention; any consistent
/// sign works algebraically. The factorization
/// needs the orthogonal-complement blocks Q12, Q22 (columns n+1..2n of the
/// full Q), which satisfy `Q22^H A = Q12^H B`.
pub fn ifdwh_step(state: &HalleyState) -> Result<HalleyState> {
    let n = state.a_mat.nrows();
    let coef = halley_coefficients(state.l)?;

    let stack1 = stack_neg_top(&state.b_mat, &state.a_mat);
    let (q_comp, r1) = linalg::qr_complement(&stack1);
    check_stack_rank(&r1, "first")?;
    let q12 = q_comp.rows(0, n).into_owned();
    let q22 = q_comp.rows(n, n).into_owned();

    let q12_a = q12.adjoint() * &state.a_mat;
    let q22_b = q22.adjoint() * &state.b_mat;
    let c_mat = &q12_a * C64::new(coef.a, 0.0) + &q22_b * C64::new(coef.b, 0.0);
    let d_mat = &q12_a * C64::new(coef.c, 0.0) + &q22_b;

    let stack2 = stack_neg_top(&d_mat, &state.a_mat);
    let (u_comp, r2) = linalg::qr_complement(&stack2);
    check_stack_rank(&r2, "second")?;
    let u12 = u_comp.rows(0, n).into_owned();
    let u22 = u_comp.rows(n, n).into_owned();

    Ok(HalleyState {
        a_mat: u12.adjoint() * c_mat,
        b_mat: u22.adjoint() * &state.b_mat,
        l: coef.l_update(state.l),
        iters: state.iters + 1,
    })
}

fn stack_neg_top(top: &CMat, bottom: &CMat) -> CMat {
    let n = top.nrows();
    let mut s = CMat::zeros(2 * n, n);
    s.view_mut((0, 0), (n, n)).copy_from(&(-top));
    s.view_mut((n, 0), (n, n)).copy_from(bottom);
    s
}

fn check_stack_rank(r: &CMat, which: &str) -> Result<()> {
    let n = r.ncols();
    let mut max_d: f64 = 0.0;
    let mut min_d = f64::INFINITY;
    for i in 0..n {
        let d = r[(i, i)].norm();
        max_d = max_d.max(d);
        min_d = min_d.min(d);
    }
    if min_d < STACK_BREAKDOWN_TOL * max_d {
        return Err(PencilError::Breakdown(format!(
            "{which} stacked QR is rank-deficient (min |R(i,i)| = {min_d:e}, max = {max_d:e})"
        )));
    }
    Ok(())
}

/// Run IF-DWH until the spectral bound reaches `l_target` (or `max_iters`
/// steps, which is a convergence failure).
pub fn ifdwh_run(
    a0: CMat,
    b0: CMat,
    l0: f64,
    l_target: f64,
    max_iters: usize,
) -> Result<HalleyState> {
    if !(l0 > 0.0 && l0 <= l_target && l_target <= 1.0) {
        return Err(PencilError::InvalidInput(format!(
            "ifdwh_run needs 0 < l0 <= l_target <= 1, got l0 = {l0}, l_target = {l_target}"
        )));
    }
    let mut state = HalleyState::new(a0, b0, l0)?;
    while state.l < l_target {
        if state.iters >= max_iters {
            return Err(PencilError::ConvergenceFailure {
                l_reached: state.l,
                l_target,
                iters: state.iters,
            });
        }
        state = ifdwh_step(&state)?;
    }
    Ok(state)
}

/// Certified bound `kappa_bound * (1 - l)` on
/// `|B^{-1}A - sign(B^{-1}A)|_2` for a pencil with eigenvalues in
/// `[-1, -l) u (l, 1]` and eigenvector condition number at most
/// `kappa_bound`.
pub fn sign_error_bound(kappa_bound: f64, l: f64) -> f64 {
    kappa_bound * (1.0 - l)
}
