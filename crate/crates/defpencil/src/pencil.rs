//! Hermitian pencil representation, norms, the chordal metric and Crawford
//! number estimation.

use crate::error::{PencilError, Result};
use crate::linalg;
use crate::{CMat, C64};

/// Relative Hermiticity tolerance enforced at construction.
const HERMITICITY_TOL: f64 = 1e-12;

/// A pair `(A, B)` of n-by-n Hermitian matrices with cached spectral norms.
///
/// Construction symmetrizes both matrices (`M <- (M + M^H)/2`) after
/// verifying they are Hermitian within `1e-12 * max(1, |M|_2)`; downstream
/// QR-based iterations drift without this re-symmetrization.
#[derive(Clone, Debug)]
pub struct HermitianPencil {
    a: CMat,
    b: CMat,
    n: usize,
    norm_a: f64,
    norm_b: f64,
}

impl HermitianPencil {
    pub fn new(a: CMat, b: CMat) -> Result<Self> {
        if a.nrows() != a.ncols() || b.nrows() != b.ncols() {
            return Err(PencilError::InvalidInput(format!(
                "pencil matrices must be square, got {}x{} and {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols()
            )));
        }
        if a.nrows() != b.nrows() || a.nrows() == 0 {
            return Err(PencilError::InvalidInput(format!(
                "pencil matrices must have equal positive dimension, got {} and {}",
                a.nrows(),
                b.nrows()
            )));
        }
        let a_sym = linalg::hermitize(&a);
        let b_sym = linalg::hermitize(&b);
        let norm_a = linalg::hermitian_norm(&a_sym);
        let norm_b = linalg::hermitian_norm(&b_sym);
        // |M - M^H|_2 = 2 |M - (M+M^H)/2|_2 and i(M - M^H) is Hermitian.
        let imag_unit = C64::new(0.0, 1.0);
        let skew_a = linalg::hermitian_norm(&((&a - &a_sym) * imag_unit)) * 2.0;
        let skew_b = linalg::hermitian_norm(&((&b - &b_sym) * imag_unit)) * 2.0;
        if skew_a > HERMITICITY_TOL * norm_a.max(1.0) {
            return Err(PencilError::InvalidInput(format!(
                "matrix A is not Hermitian: |A - A^H| = {skew_a:e}"
            )));
        }
        if skew_b > HERMITICITY_TOL * norm_b.max(1.0) {
            return Err(PencilError::InvalidInput(format!(
                "matrix B is not Hermitian: |B - B^H| = {skew_b:e}"
            )));
        }
        let n = a_sym.nrows();
        Ok(HermitianPencil {
            a: a_sym,
            b: b_sym,
            n,
            norm_a,
            norm_b,
        })
    }

    /// Pencil from real diagonal entries (no Hermiticity check needed).
    pub fn from_diagonals(alpha: &[f64], beta: &[f64]) -> Result<Self> {
        if alpha.len() != beta.len() || alpha.is_empty() {
            return Err(PencilError::InvalidInput(
                "diagonals must have equal positive length".into(),
            ));
        }
        let n = alpha.len();
        let diag = |d: &[f64]| {
            CMat::from_fn(n, n, |i, j| {
                if i == j {
                    C64::new(d[i], 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            })
        };
        Self::new(diag(alpha), diag(beta))
    }

    pub fn a(&self) -> &CMat {
        &self.a
    }

    pub fn b(&self) -> &CMat {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Spectral norm of A.
    pub fn norm_a(&self) -> f64 {
        self.norm_a
    }

    /// Spectral norm of B.
    pub fn norm_b(&self) -> f64 {
        self.norm_b
    }

    /// Spectral norm of the n-by-2n block matrix `[A, B]`, computed as
    /// `sqrt(lambda_max(A A^H + B B^H))`.
    pub fn pencil_norm(&self) -> f64 {
        let gram = &self.a * self.a.adjoint() + &self.b * self.b.adjoint();
        linalg::lambda_max(&linalg::hermitize(&gram))
            .max(0.0)
            .sqrt()
    }

    /// `cos(theta) A + sin(theta) B`.
    pub fn rotated(&self, theta: f64) -> CMat {
        let (s, c) = theta.sin_cos();
        &self.a * C64::new(c, 0.0) + &self.b * C64::new(s, 0.0)
    }

    /// `A - z B` for real z.
    pub fn shifted(&self, z: f64) -> CMat {
        &self.a - &self.b * C64::new(z, 0.0)
    }
}

/// Chordal distance `|z - z'| / sqrt((z^2+1)(z'^2+1))` on the projective
/// line; the natural metric for generalized eigenvalues.
pub fn chordal_distance(z: f64, zp: f64) -> f64 {
    ((z - zp) / ((z * z + 1.0) * (zp * zp + 1.0)).sqrt()).abs()
}

/// A certified lower bound for the Crawford number, together with the
/// rotation angle that produced it.
#[derive(Clone, Copy, Debug)]
pub struct CrawfordEstimate {
    /// `max(lambda_min_at_theta, 0)`; a valid lower bound on gamma(A, B)
    /// whenever positive, since any rotation angle with positive smallest
    /// eigenvalue certifies one.
    pub gamma_lb: f64,
    /// Angle in [0, 2pi) attaining the best value found.
    pub theta_star: f64,
    /// `lambda_min(cos(theta*) A + sin(theta*) B)`, possibly negative.
    pub lambda_min_at_theta: f64,
    /// Golden-section refinement iterations performed.
    pub refinement_iters: usize,
}

const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;

/// Estimate `gamma(A, B) = max(max_theta lambda_min(cos(theta) A +
/// sin(theta) B), 0)` by a uniform angle grid followed by golden-section
/// refinement of the best bracket.
///
/// Each evaluation certifies a lower bound, so a coarse search plus local
/// refinement is safe even without global concavity; the estimate converges
/// to gamma(A, B) as the grid refines whenever the maximizer is locally
/// smooth. Indefiniteness is signalled by `gamma_lb == 0`.
pub fn crawford_lower_bound(
    p: &HermitianPencil,
    grid_points: usize,
    refine_tol: f64,
) -> Result<CrawfordEstimate> {
    if grid_points < 8 {
        return Err(PencilError::InvalidInput(format!(
            "crawford_lower_bound needs at least 8 grid points, got {grid_points}"
        )));
    }
    if !(refine_tol > 0.0) {
        return Err(PencilError::InvalidInput(
            "refine_tol must be positive".into(),
        ));
    }
    let eval = |theta: f64| linalg::lambda_min(&p.rotated(theta));
    let step = std::f64::consts::TAU / grid_points as f64;
    let mut best_theta = 0.0;
    let mut best_val = f64::NEG_INFINITY;
    for i in 0..grid_points {
        let theta = i as f64 * step;
        let v = eval(theta);
        if v > best_val {
            best_val = v;
            best_theta = theta;
        }
    }

    // Golden-section maximization on the bracket around the best sample.
    let mut lo = best_theta - step;
    let mut hi = best_theta + step;
    let mut c = hi - (hi - lo) / GOLDEN_RATIO;
    let mut d = lo + (hi - lo) / GOLDEN_RATIO;
    let mut fc = eval(c);
    let mut fd = eval(d);
    let mut iters = 0usize;
    while hi - lo > refine_tol && iters < 200 {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - (hi - lo) / GOLDEN_RATIO;
            fc = eval(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + (hi - lo) / GOLDEN_RATIO;
            fd = eval(d);
        }
        iters += 1;
    }
    for (theta, v) in [(c, fc), (d, fd)] {
        if v > best_val {
            best_val = v;
            best_theta = theta;
        }
    }
    let theta_star = best_theta.rem_euclid(std::f64::consts::TAU);
    Ok(CrawfordEstimate {
        gamma_lb: best_val.max(0.0),
        theta_star,
        lambda_min_at_theta: best_val,
        refinement_iters: iters,
    })
}

/// Definiteness test: true iff the certified Crawford lower bound is
/// strictly positive. No fuzz is applied; callers needing margins pass
/// their own floor.
pub fn is_definite(p: &HermitianPencil, grid_points: usize) -> Result<(bool, CrawfordEstimate)> {
    let est = crawford_lower_bound(p, grid_points, 1e-10)?;
    Ok((est.gamma_lb > 0.0, est))
}

/// Minimum gap between adjacent entries of an ascending list of
/// eigenvalues.
pub fn min_eigenvalue_gap(eigs: &[f64]) -> Result<f64> {
    if eigs.len() < 2 {
        return Err(PencilError::InvalidInput(format!(
            "min_eigenvalue_gap needs at least 2 eigenvalues, got {}",
            eigs.len()
        )));
    }
    debug_assert!(
        eigs.windows(2).all(|w| w[0] <= w[1]),
        "eigenvalues must be sorted"
    );
    Ok(eigs
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::spectral_norm;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_distr::StandardNormal;

    fn random_hermitian(n: usize, seed: u64) -> CMat {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let g = CMat::from_fn(n, n, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        linalg::hermitize(&g)
    }

    fn identity(n: usize) -> CMat {
        CMat::identity(n, n)
    }

    #[test]
    fn constructor_rejects_bad_shapes_and_non_hermitian() {
        let a = CMat::zeros(2, 3);
        assert!(HermitianPencil::new(a, CMat::zeros(3, 3)).is_err());
        assert!(HermitianPencil::new(CMat::zeros(2, 2), CMat::zeros(3, 3)).is_err());
        let mut g = identity(3);
        g[(0, 1)] = C64::new(0.5, 0.5); // clearly non-Hermitian
        assert!(HermitianPencil::new(g, identity(3)).is_err());
    }

    #[test]
    fn pencil_norm_trivial_cases() {
        let p = HermitianPencil::new(identity(2), CMat::zeros(2, 2)).unwrap();
        assert_relative_eq!(p.pencil_norm(), 1.0, max_relative = 1e-12);
        let p = HermitianPencil::new(identity(2), identity(2)).unwrap();
        assert_relative_eq!(p.pencil_norm(), 2.0f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn pencil_norm_matches_block_svd_oracle() {
        let a = random_hermitian(8, 1);
        let b = random_hermitian(8, 2);
        let p = HermitianPencil::new(a.clone(), b.clone()).unwrap();
        // Independent route: largest singular value of the explicit 8x16
        // block matrix [A, B].
        let mut block = CMat::zeros(8, 16);
        block.view_mut((0, 0), (8, 8)).copy_from(&a);
        block.view_mut((0, 8), (8, 8)).copy_from(&b);
        let oracle = spectral_norm(&block);
        assert!((p.pencil_norm() - oracle).abs() <= 1e-12 * oracle);
        assert!(p.pencil_norm() >= p.norm_a().max(p.norm_b()) - 1e-12);
        assert!(p.pencil_norm() <= p.norm_a() + p.norm_b() + 1e-12);
    }

    #[test]
    fn pencil_norm_invariant_under_block_rotation() {
        let a = random_hermitian(6, 3);
        let b = random_hermitian(6, 4);
        let p = HermitianPencil::new(a.clone(), b.clone()).unwrap();
        for phi in [0.3f64, 1.2, 2.9] {
            let (s, c) = (phi.sin(), phi.cos());
            let ar = &a * C64::new(c, 0.0) + &b * C64::new(s, 0.0);
            let br = &a * C64::new(-s, 0.0) + &b * C64::new(c, 0.0);
            let pr = HermitianPencil::new(ar, br).unwrap();
            assert_relative_eq!(p.pencil_norm(), pr.pencil_norm(), max_relative = 1e-10);
        }
    }

    #[test]
    fn chordal_distance_basic_values() {
        assert_eq!(chordal_distance(0.7, 0.7), 0.0);
        assert_relative_eq!(chordal_distance(0.0, 1.0), 1.0 / 2.0f64.sqrt());
        assert_relative_eq!(chordal_distance(1.0, -1.0), 1.0);
    }

    #[test]
    fn crawford_on_indefinite_diagonal_pair_is_zero() {
        let p = HermitianPencil::from_diagonals(&[1.0, -1.0], &[1.0, -1.0]).unwrap();
        let est = crawford_lower_bound(&p, 360, 1e-10).unwrap();
        assert_eq!(est.gamma_lb, 0.0);
        let (def, _) = is_definite(&p, 360).unwrap();
        assert!(!def);
    }

    #[test]
    fn crawford_on_sign_pencil() {
        // (diag(1,-1), I): field of values is the segment [-1, 1] + i,
        // distance 1 from the origin, attained at theta = pi/2.
        let p = HermitianPencil::from_diagonals(&[1.0, -1.0], &[1.0, 1.0]).unwrap();
        let est = crawford_lower_bound(&p, 360, 1e-10).unwrap();
        assert_relative_eq!(est.gamma_lb, 1.0, epsilon = 1e-9);
        assert_relative_eq!(est.theta_star, std::f64::consts::FRAC_PI_2, epsilon = 1e-4);
    }

    #[test]
    fn crawford_on_identity_pair() {
        let p = HermitianPencil::new(identity(3), identity(3)).unwrap();
        let (def, est) = is_definite(&p, 360).unwrap();
        assert!(def);
        assert_relative_eq!(est.gamma_lb, 2.0f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn crawford_certifies_lower_bound_on_sampled_unit_vectors() {
        let a = random_hermitian(6, 10);
        let b = random_hermitian(6, 11) + identity(6) * C64::new(4.0, 0.0);
        let p = HermitianPencil::new(a.clone(), b.clone()).unwrap();
        let est = crawford_lower_bound(&p, 180, 1e-10).unwrap();
        assert!(est.gamma_lb > 0.0, "test pencil should be definite");
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let mut x = crate::CVec::from_fn(6, |_, _| {
                C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
            x /= C64::new(x.norm(), 0.0);
            let xa = (x.adjoint() * &a * &x)[(0, 0)].re;
            let xb = (x.adjoint() * &b * &x)[(0, 0)].re;
            let fov = (xa * xa + xb * xb).sqrt();
            assert!(
                fov >= est.gamma_lb - 1e-9,
                "field-of-values point {fov} below certified bound {}",
                est.gamma_lb
            );
        }
    }

    #[test]
    fn crawford_invariant_under_unitary_congruence() {
        let a = random_hermitian(5, 20);
        let b = random_hermitian(5, 21) + identity(5) * C64::new(3.0, 0.0);
        let p = HermitianPencil::new(a.clone(), b.clone()).unwrap();
        let q = crate::randomize::haar_unitary(5, &mut rand_chacha::ChaCha8Rng::seed_from_u64(5));
        let pq = HermitianPencil::new(q.adjoint() * &a * &q, q.adjoint() * &b * &q).unwrap();
        let e1 = crawford_lower_bound(&p, 360, 1e-10).unwrap();
        let e2 = crawford_lower_bound(&pq, 360, 1e-10).unwrap();
        assert_relative_eq!(e1.gamma_lb, e2.gamma_lb, epsilon = 1e-8);
    }

    #[test]
    fn min_gap_basic() {
        assert_eq!(min_eigenvalue_gap(&[0.0, 1.0, 3.0]).unwrap(), 1.0);
        assert_eq!(min_eigenvalue_gap(&[2.0, 2.0]).unwrap(), 0.0);
        assert!(min_eigenvalue_gap(&[1.0]).is_err());
    }

    #[test]
    fn min_gap_matches_all_pairs_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let mut eigs: Vec<f64> = (0..16).map(|_| rng.random_range(-3.0..3.0)).collect();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let fast = min_eigenvalue_gap(&eigs).unwrap();
        let mut brute = f64::INFINITY;
        for i in 0..16 {
            for j in 0..16 {
                if i != j {
                    brute = brute.min((eigs[i] - eigs[j]).abs());
                }
            }
        }
        assert_eq!(fast, brute);
    }
}
