//! Symmetric epsilon-pseudospectrum membership, definite Bauer-Fike
//! intervals, and grid shattering verification.
//!
//! For a definite pencil and `epsilon < gamma(A, B)`, the symmetric
//! pseudospectrum is exactly `{ z real : sigma_min(A - zB) <= epsilon
//! sqrt(1 + z^2) }`, a union of intervals around the eigenvalues. The
//! characterization is undefined at `epsilon >= gamma`, so such calls are
//! rejected rather than extrapolated.

use crate::error::{PencilError, Result};
use crate::linalg;
use crate::pencil::HermitianPencil;
use crate::randomize::ShatteringGrid;

/// Membership of a real point in the symmetric epsilon-pseudospectrum,
/// decided by a dense SVD of `A - zB`.
pub fn sym_pseudo_member(p: &HermitianPencil, z: f64, eps: f64, gamma_lb: f64) -> Result<bool> {
    if !(eps > 0.0) {
        return Err(PencilError::InvalidInput("eps must be positive".into()));
    }
    if eps >= gamma_lb {
        return Err(PencilError::Precondition(format!(
            "sym_pseudo_member needs eps < gamma(A,B); got eps = {eps:e}, gamma_lb = {gamma_lb:e}"
        )));
    }
    Ok(sigma_min_shift(p, z) <= eps * (1.0 + z * z).sqrt())
}

/// `sigma_min(A - zB)` by dense SVD.
pub fn sigma_min_shift(p: &HermitianPencil, z: f64) -> f64 {
    linalg::sigma_min(&p.shifted(z))
}

/// Outer and inner Bauer-Fike radii for a definite pencil.
#[derive(Clone, Debug)]
pub struct BauerFikeBounds {
    /// Every pseudospectrum point lies within this distance of an
    /// eigenvalue.
    pub outer_radius: f64,
    /// Per-eigenvalue inner radii: `(lambda_i - eps r_i, lambda_i + eps
    /// r_i)` is contained in the pseudospectrum.
    pub inner_radii: Vec<f64>,
    pub epsilon: f64,
}

/// Definite Bauer-Fike bounds. Requires `eps < min(sigma_n(B), gamma)`.
///
/// `outer_radius = (eps/gamma) [1 + ((|A| + eps)/(sigma_n(B) - eps))^2]`,
/// and `r_i = 1/|B|` when `A = 0`, else `max(1/|B|, |lambda_i|/|A|)`.
pub fn bauer_fike(
    p: &HermitianPencil,
    eigs: &[f64],
    eps: f64,
    gamma_lb: f64,
) -> Result<BauerFikeBounds> {
    if !(eps > 0.0) {
        return Err(PencilError::InvalidInput("eps must be positive".into()));
    }
    let sigma_n_b = linalg::sigma_min(p.b());
    if eps >= sigma_n_b || eps >= gamma_lb {
        return Err(PencilError::Precondition(format!(
            "bauer_fike needs eps < min(sigma_n(B), gamma); got eps = {eps:e}, \
             sigma_n(B) = {sigma_n_b:e}, gamma_lb = {gamma_lb:e}"
        )));
    }
    let norm_a = p.norm_a();
    let norm_b = p.norm_b();
    let ratio = (norm_a + eps) / (sigma_n_b - eps);
    let outer_radius = eps / gamma_lb * (1.0 + ratio * ratio);
    let inner_radii = eigs
        .iter()
        .map(|&l| {
            if norm_a == 0.0 {
                1.0 / norm_b
            } else {
                (1.0 / norm_b).max(l.abs() / norm_a)
            }
        })
        .collect();
    Ok(BauerFikeBounds {
        outer_radius,
        inner_radii,
        epsilon: eps,
    })
}

/// Result of a shattering check against a grid.
#[derive(Clone, Debug)]
pub struct ShatteringReport {
    /// True iff every eigenvalue sits in its own grid interval and no
    /// checked grid point belongs to the pseudospectrum.
    pub shattered: bool,
    /// Grid interval index per eigenvalue; -1 when an eigenvalue falls
    /// outside the grid or exactly on a point.
    pub eigenvalue_interval_index: Vec<i64>,
    /// Smallest distance from an eigenvalue to its nearest grid point.
    pub min_grid_margin: f64,
    /// Indices of grid points inside the pseudospectrum.
    pub violating_grid_indices: Vec<u64>,
}

/// Verify pseudospectral shattering of `p` with respect to `grid`:
/// (1) each oracle eigenvalue lies in a unique grid interval, and (2) no
/// grid point belongs to the symmetric eps-pseudospectrum.
///
/// Only grid points inside the Bauer-Fike outer envelope of the spectrum
/// are tested: points beyond it provably cannot intersect the
/// pseudospectrum, and theoretical grids are far too large to sweep.
pub fn check_shattered(
    p: &HermitianPencil,
    grid: &ShatteringGrid,
    eps: f64,
    gamma_lb: f64,
    oracle_eigs: &[f64],
) -> Result<ShatteringReport> {
    if grid.count() == 0 {
        return Err(PencilError::InvalidInput(
            "check_shattered: empty grid".into(),
        ));
    }
    if oracle_eigs.is_empty() {
        return Err(PencilError::InvalidInput(
            "check_shattered: no eigenvalues".into(),
        ));
    }
    if eps >= gamma_lb {
        return Err(PencilError::Precondition(format!(
            "check_shattered needs eps < gamma(A,B); got {eps:e} >= {gamma_lb:e}"
        )));
    }
    debug_assert!(oracle_eigs.windows(2).all(|w| w[0] <= w[1]));

    let bf = bauer_fike(p, oracle_eigs, eps, gamma_lb)?;

    let mut interval_index = Vec::with_capacity(oracle_eigs.len());
    let mut unique = true;
    for &l in oracle_eigs {
        match grid.interval_of(l) {
            Some(j) => {
                if interval_index.contains(&(j as i64)) {
                    unique = false;
                }
                interval_index.push(j as i64);
            }
            None => {
                unique = false;
                interval_index.push(-1);
            }
        }
    }

    let lo = oracle_eigs.first().unwrap() - bf.outer_radius;
    let hi = oracle_eigs.last().unwrap() + bf.outer_radius;
    let j_lo = grid.nearest_index(lo);
    let j_hi = grid.nearest_index(hi);
    let mut violating = Vec::new();
    for j in j_lo..=j_hi {
        let g = grid.point(j);
        if g < lo || g > hi {
            continue;
        }
        if sym_pseudo_member(p, g, eps, gamma_lb)? {
            violating.push(j);
        }
    }

    let min_grid_margin = oracle_eigs
        .iter()
        .map(|&l| (l - grid.point(grid.nearest_index(l))).abs())
        .fold(f64::INFINITY, f64::min);

    Ok(ShatteringReport {
        shattered: unique && violating.is_empty(),
        eigenvalue_interval_index: interval_index,
        min_grid_margin,
        violating_grid_indices: violating,
    })
}
