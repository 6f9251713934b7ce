//! Structured random perturbations, shattering grids and seeded test
//! pencils.
//!
//! Two Hermitian ensembles are supported: the Gaussian Unitary Ensemble
//! `Z = (G + G^H)/sqrt(2)` with complex Ginibre G (entry variance 1/n), and
//! diagonal matrices with i.i.d. entries from a bounded density. Grids are
//! lazy arithmetic progressions `z0 + j*omega`; the theoretical point count
//! reaches 1e13 and beyond, so grids are never materialized.

use crate::error::{PencilError, Result};
use crate::linalg;
use crate::pencil::HermitianPencil;
use crate::rng::{label, StreamKey};
use crate::{CMat, C64};
use rand::prelude::*;
use rand_distr::StandardNormal;

/// Grids with more points than this refuse to construct: `point(j)` needs
/// the index to be exact in an f64.
const MAX_GRID_COUNT: f64 = 9.0e15;

/// Lazy arithmetic progression of splitting points with its shattering
/// epsilon. `point(j) = z0 + j * omega` for `0 <= j < count`.
#[derive(Clone, Copy, Debug)]
pub struct ShatteringGrid {
    z0: f64,
    omega: f64,
    count: u64,
    epsilon: f64,
}

impl ShatteringGrid {
    pub fn new(z0: f64, omega: f64, count: u64, epsilon: f64) -> Result<Self> {
        if !(omega > 0.0) || !(epsilon > 0.0) || !z0.is_finite() {
            return Err(PencilError::InvalidInput(
                "grid needs finite z0, positive spacing and positive epsilon".into(),
            ));
        }
        if count as f64 > MAX_GRID_COUNT {
            return Err(PencilError::InvalidInput(format!(
                "grid count {count} exceeds the exact-index range of f64"
            )));
        }
        Ok(ShatteringGrid {
            z0,
            omega,
            count,
            epsilon,
        })
    }

    /// Uniform grid covering `[lo, hi]` with the given spacing.
    pub fn spanning(lo: f64, hi: f64, spacing: f64, epsilon: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(PencilError::InvalidInput(
                "grid span must be nonempty".into(),
            ));
        }
        let count = ((hi - lo) / spacing).ceil() + 1.0;
        if !count.is_finite() || count > MAX_GRID_COUNT {
            return Err(PencilError::InvalidInput(
                "grid span/spacing ratio too large".into(),
            ));
        }
        Self::new(lo, spacing, count as u64, epsilon)
    }

    /// The j-th point `z0 + j * omega`, computed directly (not by repeated
    /// addition, which would drift).
    #[inline]
    pub fn point(&self, j: u64) -> f64 {
        self.z0 + (j as f64) * self.omega
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn spacing(&self) -> f64 {
        self.omega
    }

    pub fn leftmost(&self) -> f64 {
        self.z0
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Index of the grid point nearest to x, clamped to the index range.
    pub fn nearest_index(&self, x: f64) -> u64 {
        let raw = ((x - self.z0) / self.omega).round();
        if raw <= 0.0 {
            0
        } else if raw >= (self.count - 1) as f64 {
            self.count - 1
        } else {
            raw as u64
        }
    }

    /// Interval index j with `point(j) < x < point(j+1)`, if x lies
    /// strictly inside the grid and not on a point.
    pub fn interval_of(&self, x: f64) -> Option<u64> {
        if self.count < 2 || x <= self.point(0) || x >= self.point(self.count - 1) {
            return None;
        }
        let mut j = (((x - self.z0) / self.omega).floor() as u64).min(self.count - 2);
        // Guard against rounding at interval boundaries.
        while j > 0 && self.point(j) >= x {
            j -= 1;
        }
        while j + 2 < self.count && self.point(j + 1) <= x {
            j += 1;
        }
        if self.point(j) < x && x < self.point(j + 1) {
            Some(j)
        } else {
            None
        }
    }
}

/// Sampling distribution for one diagonal entry.
#[derive(Clone, Copy, Debug)]
pub enum DiagonalSampler {
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Centered normal with the given standard deviation.
    Gaussian {
        sigma: f64,
    },
}

impl DiagonalSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            DiagonalSampler::Uniform { lo, hi } => rng.random_range(lo..hi),
            DiagonalSampler::Gaussian { sigma } => sigma * rng.sample::<f64, _>(StandardNormal),
        }
    }
}

/// Tail bound `P[|X| > m_rho] <= theta` for the diagonal density.
#[derive(Clone, Copy, Debug)]
pub struct TailBound {
    pub m_rho: f64,
    pub theta: f64,
}

/// A bounded probability density on the reals driving a diagonal random
/// matrix, together with its sup norm and a tail bound.
#[derive(Clone, Copy, Debug)]
pub struct DiagonalDensitySpec {
    pub sampler: DiagonalSampler,
    /// `sup_x rho(x)`, finite by assumption.
    pub sup_density: f64,
    pub tail_bound: TailBound,
}

impl DiagonalDensitySpec {
    pub fn uniform(lo: f64, hi: f64) -> Self {
        DiagonalDensitySpec {
            sampler: DiagonalSampler::Uniform { lo, hi },
            sup_density: 1.0 / (hi - lo),
            tail_bound: TailBound {
                m_rho: lo.abs().max(hi.abs()),
                theta: 0.0,
            },
        }
    }

    pub fn gaussian(sigma: f64) -> Self {
        let m_rho = 2.0 * sigma * (2.0f64).sqrt();
        DiagonalDensitySpec {
            sampler: DiagonalSampler::Gaussian { sigma },
            sup_density: 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt()),
            tail_bound: TailBound {
                m_rho,
                theta: normal_two_sided_tail(m_rho / sigma),
            },
        }
    }

    /// Default ensemble for dimension n: standard normal scaled by
    /// 1/sqrt(n), with `M_rho = sqrt(4 log n / n)`. Gaussian tails then give
    /// `2 n theta = O(1/n)` as the shattering theory wants.
    pub fn default_for_dim(n: usize) -> Self {
        let nf = n.max(2) as f64;
        let sigma = 1.0 / nf.sqrt();
        let m_rho = (4.0 * nf.ln() / nf).sqrt();
        DiagonalDensitySpec {
            sampler: DiagonalSampler::Gaussian { sigma },
            sup_density: 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt()),
            tail_bound: TailBound {
                m_rho,
                theta: normal_two_sided_tail(m_rho / sigma),
            },
        }
    }
}

/// `P[|N(0,1)| > x] = erfc(x / sqrt(2))`.
pub fn normal_two_sided_tail(x: f64) -> f64 {
    libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Which Hermitian ensemble a perturbation draws from.
#[derive(Clone, Copy, Debug)]
pub enum PerturbationKind {
    Gue,
    Diagonal(DiagonalDensitySpec),
}

/// A reproducible structured perturbation `(A, B) -> (A + mu V1, B + mu V2)`.
#[derive(Clone, Copy, Debug)]
pub struct PerturbationSpec {
    pub kind: PerturbationKind,
    pub mu: f64,
    pub seed: u64,
}

/// A perturbed pencil together with the drawn perturbation norms.
#[derive(Clone, Debug)]
pub struct PerturbedPencil {
    pub pencil: HermitianPencil,
    /// Spectral norms of the drawn V1, V2 (before scaling by mu).
    pub norm_v1: f64,
    pub norm_v2: f64,
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, sigma_component: f64) -> C64 {
    C64::new(
        sigma_component * rng.sample::<f64, _>(StandardNormal),
        sigma_component * rng.sample::<f64, _>(StandardNormal),
    )
}

/// Draw from GUE(n): `(G + G^H)/sqrt(2)` with G complex Ginibre of entry
/// variance 1/n. The output is exactly Hermitian by construction.
pub fn sample_gue(n: usize, seed: u64) -> Result<CMat> {
    if n == 0 {
        return Err(PencilError::InvalidInput("sample_gue needs n >= 1".into()));
    }
    let mut rng = StreamKey::root(seed).rng();
    let sigma = (0.5 / n as f64).sqrt(); // per-component variance 1/(2n)
    let g = CMat::from_fn(n, n, |_, _| complex_gaussian(&mut rng, sigma));
    let inv_sqrt2 = 1.0 / std::f64::consts::SQRT_2;
    let mut z = CMat::zeros(n, n);
    for i in 0..n {
        z[(i, i)] = C64::new(std::f64::consts::SQRT_2 * g[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let v = (g[(i, j)] + g[(j, i)].conj()) * inv_sqrt2;
            z[(i, j)] = v;
            z[(j, i)] = v.conj();
        }
    }
    Ok(z)
}

/// Diagonal random matrix with i.i.d. entries from the given density;
/// off-diagonal entries are exactly zero.
pub fn sample_diagonal(n: usize, spec: &DiagonalDensitySpec, seed: u64) -> Result<CMat> {
    if n == 0 {
        return Err(PencilError::InvalidInput(
            "sample_diagonal needs n >= 1".into(),
        ));
    }
    let mut rng = StreamKey::root(seed).rng();
    let mut d = CMat::zeros(n, n);
    for i in 0..n {
        d[(i, i)] = C64::new(spec.sampler.sample(&mut rng), 0.0);
    }
    Ok(d)
}

/// `(A + mu V1, B + mu V2)` with V1, V2 independent draws from the chosen
/// ensemble (independent substreams of the seed). The drawn norms are
/// recorded for diagnostics.
pub fn perturb(p: &HermitianPencil, spec: &PerturbationSpec) -> Result<PerturbedPencil> {
    let n = p.dim();
    let key = StreamKey::root(spec.seed);
    let seed_a = key.child(label::PERTURB_A);
    let seed_b = key.child(label::PERTURB_B);
    let draw = |skey: StreamKey| -> Result<CMat> {
        match &spec.kind {
            PerturbationKind::Gue => sample_gue_from(n, skey),
            PerturbationKind::Diagonal(d) => {
                let mut rng = skey.rng();
                let mut m = CMat::zeros(n, n);
                for i in 0..n {
                    m[(i, i)] = C64::new(d.sampler.sample(&mut rng), 0.0);
                }
                Ok(m)
            }
        }
    };
    let v1 = draw(seed_a)?;
    let v2 = draw(seed_b)?;
    let mu = C64::new(spec.mu, 0.0);
    let pencil = HermitianPencil::new(p.a() + &v1 * mu, p.b() + &v2 * mu)?;
    Ok(PerturbedPencil {
        pencil,
        norm_v1: linalg::hermitian_norm(&v1),
        norm_v2: linalg::hermitian_norm(&v2),
    })
}

fn sample_gue_from(n: usize, key: StreamKey) -> Result<CMat> {
    let mut rng = key.rng();
    let sigma = (0.5 / n as f64).sqrt();
    let g = CMat::from_fn(n, n, |_, _| complex_gaussian(&mut rng, sigma));
    let inv_sqrt2 = 1.0 / std::f64::consts::SQRT_2;
    let mut z = CMat::zeros(n, n);
    for i in 0..n {
        z[(i, i)] = C64::new(std::f64::consts::SQRT_2 * g[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let v = (g[(i, j)] + g[(j, i)].conj()) * inv_sqrt2;
            z[(i, j)] = v;
            z[(j, i)] = v.conj();
        }
    }
    Ok(z)
}

/// Shattering grid for an n-by-n pencil with `|A|,|B| <= 1` perturbed at
/// size mu: spacing `omega = mu^3 gamma^2 / n^5`, leftmost point uniform in
/// `(-3n^2/(2 mu) - omega, -3n^2/(2 mu))`, `ceil(3n^2/(mu omega)) + 2`
/// points, and `epsilon = mu^6 gamma^2 / (6 n^11)`.
///
/// In theory the perturbation must satisfy `mu < gamma / (12 sqrt(2))`;
/// larger values only log a warning since the theoretical bound is known
/// to be pessimistic.
pub fn build_shattering_grid(
    n: usize,
    mu: f64,
    gamma_lb: f64,
    seed: u64,
) -> Result<ShatteringGrid> {
    if !(mu > 0.0) || !(gamma_lb > 0.0) {
        return Err(PencilError::InvalidInput(
            "build_shattering_grid needs positive mu and gamma_lb".into(),
        ));
    }
    if mu >= gamma_lb / (12.0 * std::f64::consts::SQRT_2) {
        log::warn!(
            "perturbation size mu = {mu:e} exceeds the shattering bound gamma/(12 sqrt 2) = {:e}",
            gamma_lb / (12.0 * std::f64::consts::SQRT_2)
        );
    }
    let nf = n as f64;
    let omega = mu.powi(3) * gamma_lb * gamma_lb / nf.powi(5);
    let epsilon = mu.powi(6) * gamma_lb * gamma_lb / (6.0 * nf.powi(11));
    let enclosure = 1.5 * nf * nf / mu;
    let count_f = (3.0 * nf * nf / (mu * omega)).ceil() + 2.0;
    if !count_f.is_finite() || count_f > MAX_GRID_COUNT {
        return Err(PencilError::InvalidInput(format!(
            "theoretical grid needs {count_f:e} points, beyond the exact-index range"
        )));
    }
    let mut rng = StreamKey::root(seed).child(label::GRID_OFFSET).rng();
    let z0 = -enclosure - omega * rng.random_range(0.0..1.0);
    ShatteringGrid::new(z0, omega, count_f as u64, epsilon)
}

/// Practical grid of fixed spacing anchored to a list of known eigenvalue
/// locations (sorted ascending): one lattice point lands at the midpoint of
/// the closest pair, and the offset is then tuned within a safe window so
/// the remaining eigenvalues sit as far from the lattice as possible.
///
/// This is how a practical run picks splitting points once approximate
/// eigenvalues are available: the tightest pair must be separated by a grid
/// point, while every other point should keep its distance.
pub fn anchored_practical_grid(
    eigs_sorted: &[f64],
    spacing: f64,
    epsilon: f64,
    pad: f64,
) -> Result<ShatteringGrid> {
    if eigs_sorted.is_empty() {
        return Err(PencilError::InvalidInput(
            "anchored grid needs eigenvalues".into(),
        ));
    }
    if !(spacing > 0.0) || !(pad >= 0.0) {
        return Err(PencilError::InvalidInput(
            "anchored grid needs positive spacing".into(),
        ));
    }
    let lo = eigs_sorted.first().unwrap() - pad.max(2.0 * spacing);
    let hi = eigs_sorted.last().unwrap() + pad.max(2.0 * spacing);

    let lattice_distance = |x: f64, anchor: f64| -> f64 {
        let r = (x - anchor).rem_euclid(spacing);
        r.min(spacing - r)
    };

    let anchor = if eigs_sorted.len() == 1 {
        eigs_sorted[0] + 0.5 * spacing
    } else {
        let mut gap_i = 0;
        for i in 1..eigs_sorted.len() - 1 {
            if eigs_sorted[i + 1] - eigs_sorted[i] < eigs_sorted[gap_i + 1] - eigs_sorted[gap_i] {
                gap_i = i;
            }
        }
        let mid = 0.5 * (eigs_sorted[gap_i] + eigs_sorted[gap_i + 1]);
        let window = 0.25 * (eigs_sorted[gap_i + 1] - eigs_sorted[gap_i]);
        let mut best = mid;
        let mut best_score = f64::NEG_INFINITY;
        for k in -8i32..=8 {
            let c = mid + window * (k as f64) / 8.0;
            let score = eigs_sorted
                .iter()
                .map(|&l| lattice_distance(l, c))
                .fold(f64::INFINITY, f64::min);
            if score > best_score {
                best_score = score;
                best = c;
            }
        }
        best
    };

    let steps_left = ((anchor - lo) / spacing).ceil().max(1.0);
    let z0 = anchor - steps_left * spacing;
    let count = ((hi - z0) / spacing).ceil() + 1.0;
    if count > MAX_GRID_COUNT {
        return Err(PencilError::InvalidInput(
            "anchored grid span/spacing too large".into(),
        ));
    }
    ShatteringGrid::new(z0, spacing, count as u64, epsilon)
}

/// Haar-distributed unitary: QR of a Ginibre draw with the phase fix that
/// makes the distribution exactly Haar.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| complex_gaussian(rng, 1.0));
    let (q, r) = crate::linalg::qr_full(&g);
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

/// Assemble the pencil `(X^H Lambda X, X^H X)` with the given real
/// eigenvalues; B is a Gram matrix, so the pencil is definite and its
/// eigenvalues are exactly `eigs` in exact arithmetic.
pub fn assemble_from_eigenvectors(x: &CMat, eigs: &[f64]) -> Result<HermitianPencil> {
    let n = x.nrows();
    if x.ncols() != n || eigs.len() != n {
        return Err(PencilError::InvalidInput(format!(
            "assemble_from_eigenvectors: X is {}x{}, got {} eigenvalues",
            x.nrows(),
            x.ncols(),
            eigs.len()
        )));
    }
    let lambda = CMat::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(eigs[i], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let a = x.adjoint() * lambda * x;
    let b = x.adjoint() * x;
    HermitianPencil::new(linalg::hermitize(&a), linalg::hermitize(&b))
}

/// Seeded definite test pencil `(X^H Lambda X, X^H X)` with prescribed
/// eigenvalues and eigenvector conditioning.
///
/// X starts from a Haar unitary and a rank-one modification along a random
/// direction pushes kappa_2(X) to `cond_target` exactly (remaining singular
/// values stay equal); the result is scaled so `|B|_2 = 1`, which leaves
/// the eigenvalues untouched.
pub fn generate_test_pencil(
    n: usize,
    eig_spec: &[f64],
    cond_target: f64,
    seed: u64,
) -> Result<HermitianPencil> {
    if eig_spec.len() != n || n == 0 {
        return Err(PencilError::InvalidInput(format!(
            "generate_test_pencil: need {n} eigenvalues, got {}",
            eig_spec.len()
        )));
    }
    if !(cond_target >= 1.0) {
        return Err(PencilError::InvalidInput("cond_target must be >= 1".into()));
    }
    let mut rng = StreamKey::root(seed).child(label::GENERATE).rng();
    let x0 = haar_unitary(n, &mut rng);
    let mut v = crate::CVec::from_fn(n, |_, _| complex_gaussian(&mut rng, 1.0));
    v /= C64::new(v.norm(), 0.0);
    // X = X0 (I + (t-1) v v^H) / t has singular values {1/t, ..., 1/t, 1}.
    let t = cond_target;
    let x = {
        let outer = &v * v.adjoint() * C64::new(t - 1.0, 0.0);
        let m = CMat::identity(n, n) + outer;
        (x0 * m) * C64::new(1.0 / t, 0.0)
    };
    assemble_from_eigenvectors(&x, eig_spec)
}
