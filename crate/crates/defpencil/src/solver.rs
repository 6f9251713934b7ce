//! Divide-and-conquer eigensolver for definite pencils and the two-step
//! perturb-then-solve diagonalization pipeline.
//!
//! One splitting step picks a grid point g, forms the shifted pencil
//! `(A - gB, 2rB)`, drives its eigenvalues to plus/minus one with the
//! inverse-free Halley iteration, reads the rank k of the implicit right
//! spectral projector `(2B_p)^{-1}(A_p + B_p)` from a GRURV factorization,
//! and accepts g when k splits the spectrum in half. Orthonormal bases of
//! the two right deflating subspaces then compress the pencil into two
//! independent halves; epsilon shrinks by `4 gamma / (5 (gamma + c))` per
//! level and eta halves.

use crate::error::{PencilError, Result};
use crate::halley;
use crate::linalg;
use crate::oracle;
use crate::pencil::HermitianPencil;
use crate::randomize::{
    build_shattering_grid, perturb, PerturbationKind, PerturbationSpec, ShatteringGrid,
};
use crate::rng::{label, StreamKey};
use crate::rrf::{grurv, rank_from_ratios, Exponent};
use crate::{CMat, RVec, C64};

/// Parameter regime: the exact-arithmetic theory formulas, or practical
/// mode with finite-precision-feasible substitutions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverMode {
    /// The exact-arithmetic guarantee formulas; delta and the rank
    /// threshold follow the failure-probability budget. Underflows double precision for
    /// n >= 4 and exists for contract tests.
    Theory,
    /// User-feasible epsilon/eta with a fixed rank threshold and a floor
    /// on delta.
    Practical,
}

/// Divide-and-conquer parameters for one recursion level.
///
/// `epsilon` and `eta` are the *current level's* values; recursive calls
/// shrink them. `n_top` stays the outermost dimension throughout, as the
/// failure-budget formulas require.
#[derive(Clone, Debug)]
pub struct SolverParams {
    pub n_top: usize,
    /// Shattering epsilon at this level.
    pub epsilon: f64,
    /// Lower bound on the Crawford number of every pencil in the tree.
    pub gamma_lb: f64,
    /// Upper bound on the pencil norm.
    pub c: f64,
    /// Grid enclosure radius: grid points lie in (-r, r).
    pub r: f64,
    /// Target backward accuracy at this level.
    pub eta: f64,
    /// Failure budget theta in (0, 1).
    pub theta_fail: f64,
    pub mode: SolverMode,
    /// Practical-mode rank threshold on |R2(i,i)/R1(i,i)|. Projector
    /// singular clusters sit near 1 and at roundoff once the sign error is
    /// small, but QR diagonals track them only within an O(n) window, so
    /// this sits well below 1.
    pub rank_threshold: f64,
    /// Practical-mode floor on delta.
    pub delta_floor: f64,
    /// Cap on Halley iterations per grid point.
    pub max_halley_iters: usize,
    /// Reuse the rank-probe factorization for the right basis instead of
    /// drawing a fresh one. The fresh draw keeps the accuracy of U and k
    /// statistically independent; reuse saves one factorization.
    pub reuse_split_basis: bool,
    /// Run the two recursive children on the rayon pool. Substream-keyed
    /// RNG makes the result identical either way.
    pub parallel: bool,
}

pub const DEFAULT_RANK_THRESHOLD: f64 = 1e-4;
pub const DEFAULT_DELTA_FLOOR: f64 = 1e-15;

impl SolverParams {
    #[allow(clippy::too_many_arguments)] // the documented parameter set
    pub fn new(
        n_top: usize,
        epsilon: f64,
        gamma_lb: f64,
        c: f64,
        r: f64,
        eta: f64,
        theta_fail: f64,
        mode: SolverMode,
    ) -> Result<Self> {
        if n_top == 0 {
            return Err(PencilError::InvalidInput("n_top must be positive".into()));
        }
        for (name, v) in [
            ("epsilon", epsilon),
            ("gamma_lb", gamma_lb),
            ("c", c),
            ("r", r),
            ("eta", eta),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(PencilError::InvalidInput(format!(
                    "solver parameter {name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(epsilon < gamma_lb) {
            return Err(PencilError::InvalidInput(format!(
                "epsilon {epsilon:e} must be below gamma_lb {gamma_lb:e}"
            )));
        }
        if !(theta_fail > 0.0 && theta_fail < 1.0) {
            return Err(PencilError::InvalidInput(
                "theta_fail must lie in (0, 1)".into(),
            ));
        }
        Ok(SolverParams {
            n_top,
            epsilon,
            gamma_lb,
            c,
            r,
            eta,
            theta_fail,
            mode,
            rank_threshold: DEFAULT_RANK_THRESHOLD,
            delta_floor: DEFAULT_DELTA_FLOOR,
            max_halley_iters: halley::DEFAULT_MAX_ITERS,
            reuse_split_basis: false,
            parallel: false,
        })
    }

    fn child(&self) -> Self {
        let mut c = self.clone();
        c.epsilon = child_epsilon(self.epsilon, self.gamma_lb, self.c);
        c.eta = self.eta * 0.5;
        c
    }
}

/// Half-open index range into a lazy grid; recursion passes sub-ranges of
/// the same grid, never copies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSlice {
    pub lo: u64,
    pub hi: u64,
}

impl GridSlice {
    pub fn full(grid: &ShatteringGrid) -> Self {
        GridSlice {
            lo: 0,
            hi: grid.count(),
        }
    }

    pub fn len(&self) -> u64 {
        self.hi.saturating_sub(self.lo)
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }
}

/// `zeta = floor(log2 |g| + 1)`: the bit length of the grid size, which
/// bounds the number of binary-search probes.
pub fn zeta_of(grid_len: u64) -> u32 {
    64 - grid_len.max(1).leading_zeros()
}

/// The per-step projector accuracy `delta`: minimum of the three budget
/// terms (grid-search, deflation and assembly). Practical mode clamps below at `delta_floor` with a
/// logged warning (the theory value underflows f64 already at n = 4).
pub fn compute_delta(params: &SolverParams, m: usize, zeta: u32) -> f64 {
    debug_assert!(m >= 2);
    let n = params.n_top.max(2) as f64;
    let theta = params.theta_fail;
    let (eps, gamma, c, eta) = (params.epsilon, params.gamma_lb, params.c, params.eta);
    let zf = zeta as f64;
    let mf = m as f64;
    let b1 = 4.0 * theta / (4.0 * theta + 3.0 * zf * n * n * (n - 1.0));
    let s = (theta / (3.0 * (n - 1.0))).sqrt();
    let b2 = s * eps * eps * gamma * gamma / (800.0 * n * c * c * (gamma + c) * (gamma + c));
    let b3 = s * eta * eta / (36.0 * n * mf * mf * c * c);
    let delta = b1.min(b2).min(b3);
    match params.mode {
        SolverMode::Theory => {
            if delta < params.delta_floor {
                log::warn!(
                    "theory-mode delta = {delta:e} underflows the practical floor {:e}",
                    params.delta_floor
                );
            }
            delta
        }
        SolverMode::Practical => {
            if delta < params.delta_floor {
                log::warn!(
                    "practical delta = {delta:e} clamped up to {:e}",
                    params.delta_floor
                );
                params.delta_floor
            } else {
                delta
            }
        }
    }
}

/// Epsilon for the recursive calls: `4 eps gamma / (5 (gamma + c))`,
/// strictly below the shrink factor `eps (1 + c/gamma)^{-1}` that deflation
/// is guaranteed to preserve.
pub fn child_epsilon(epsilon: f64, gamma_lb: f64, c: f64) -> f64 {
    4.0 * epsilon * gamma_lb / (5.0 * (gamma_lb + c))
}

/// Accepted split: grid point, projector rank and orthonormal bases of the
/// two right deflating subspaces.
#[derive(Clone, Debug)]
pub struct SplitOutcome {
    pub grid_index: u64,
    pub grid_value: f64,
    /// Rank of the right projector: eigenvalues strictly right of the grid
    /// point.
    pub k: usize,
    /// n-by-k orthonormal basis of the right deflating subspace.
    pub u_right: CMat,
    /// n-by-(m-k) orthonormal basis of the complementary subspace.
    pub u_left_of: CMat,
    /// Halley iterations of the accepted run.
    pub halley_iters: usize,
}

struct ConvergedShift {
    a_p: CMat,
    b_p: CMat,
    halley_iters: usize,
}

/// Shift, scale and run IF-DWH at one grid point: `(A - gB, 2rB)` with
/// initial bound `l = eps/(2rc)` up to `l = 1 - 2 delta gamma / c`.
fn converge_at(
    p: &HermitianPencil,
    g_val: f64,
    params: &SolverParams,
    delta: f64,
) -> Result<ConvergedShift> {
    let a_shift = p.shifted(g_val);
    let b_shift = p.b() * C64::new(2.0 * params.r, 0.0);
    let l0 = params.epsilon / (2.0 * params.r * params.c);
    if !(l0 > 0.0 && l0 < 1.0) {
        return Err(PencilError::InvalidInput(format!(
            "initial spectral bound eps/(2rc) = {l0:e} is outside (0, 1)"
        )));
    }
    let l_target = (1.0 - 2.0 * delta * params.gamma_lb / params.c).clamp(l0, 1.0);
    let st = halley::ifdwh_run(a_shift, b_shift, l0, l_target, params.max_halley_iters)?;
    Ok(ConvergedShift {
        a_p: st.a_mat,
        b_p: st.b_mat,
        halley_iters: st.iters,
    })
}

fn rank_threshold(params: &SolverParams, zeta: u32, delta: f64) -> f64 {
    match params.mode {
        SolverMode::Theory => {
            let n = params.n_top as f64;
            2.0 * (params.theta_fail / (3.0 * zeta as f64 * (n - 1.0))).sqrt() * (1.0 - delta) / n
        }
        SolverMode::Practical => params.rank_threshold,
    }
}

/// Rank of the implicit right projector `(2 B_p)^{-1} (A_p + B_p)` via
/// GRURV diagonal ratios.
fn projector_rank(conv: &ConvergedShift, threshold: f64, key: StreamKey) -> Result<usize> {
    let two_b = &conv.b_p * C64::new(2.0, 0.0);
    let plus = &conv.a_p + &conv.b_p;
    let res = grurv(
        &[two_b, plus],
        &[Exponent::Minus, Exponent::Plus],
        key.derived_seed(),
    )?;
    rank_from_ratios(&res.r_factors[0], &res.r_factors[1], threshold)
}

fn extract_bases(
    conv: &ConvergedShift,
    k: usize,
    m: usize,
    params: &SolverParams,
    key: StreamKey,
) -> Result<(CMat, CMat)> {
    let two_b = &conv.b_p * C64::new(2.0, 0.0);
    // Right subspace from (2B)^{-1}(A + B) = (sign + I)/2 ...
    let u_right = if params.reuse_split_basis {
        let res = grurv(
            &[two_b.clone(), &conv.a_p + &conv.b_p],
            &[Exponent::Minus, Exponent::Plus],
            key.child(label::PROBE).derived_seed(),
        )?;
        res.u.columns(0, k).into_owned()
    } else {
        let res = grurv(
            &[two_b.clone(), &conv.a_p + &conv.b_p],
            &[Exponent::Minus, Exponent::Plus],
            key.child(label::BASIS_RIGHT).derived_seed(),
        )?;
        res.u.columns(0, k).into_owned()
    };
    // ... and the complementary one from (2B)^{-1}(A - B) = (sign - I)/2,
    // a projector of rank m - k.
    let res = grurv(
        &[two_b, &conv.a_p - &conv.b_p],
        &[Exponent::Minus, Exponent::Plus],
        key.child(label::BASIS_LEFT).derived_seed(),
    )?;
    let u_left_of = res.u.columns(0, m - k).into_owned();
    Ok((u_right, u_left_of))
}

/// Probe a single grid point: rank of the right projector only.
pub fn split_rank_probe(
    p: &HermitianPencil,
    g_val: f64,
    params: &SolverParams,
    delta: f64,
    zeta: u32,
    seed: u64,
) -> Result<(usize, usize)> {
    let conv = converge_at(p, g_val, params, delta)?;
    let k = projector_rank(
        &conv,
        rank_threshold(params, zeta, delta),
        StreamKey::root(seed),
    )?;
    Ok((k, conv.halley_iters))
}

/// Full split at a chosen grid point: rank plus both deflating bases.
pub fn split_at_gridpoint(
    p: &HermitianPencil,
    grid_index: u64,
    g_val: f64,
    params: &SolverParams,
    delta: f64,
    zeta: u32,
    seed: u64,
) -> Result<SplitOutcome> {
    let key = StreamKey::root(seed);
    let conv = converge_at(p, g_val, params, delta)?;
    let k = projector_rank(
        &conv,
        rank_threshold(params, zeta, delta),
        key.child(label::PROBE),
    )?;
    let (u_right, u_left_of) = extract_bases(&conv, k, p.dim(), params, key)?;
    Ok(SplitOutcome {
        grid_index,
        grid_value: g_val,
        k,
        u_right,
        u_left_of,
        halley_iters: conv.halley_iters,
    })
}

/// Deflation quality gate: with exact bases the two blocks decouple, so a
/// large coupling norm flags a polluted split (typically a grid point that
/// crept inside the pseudospectrum).
fn coupling_small(p: &HermitianPencil, out: &SplitOutcome, eta: f64) -> bool {
    if out.k == 0 || out.k == p.dim() {
        return true;
    }
    let cross_a = linalg::spectral_norm(&(out.u_right.adjoint() * p.a() * &out.u_left_of));
    let cross_b = linalg::spectral_norm(&(out.u_right.adjoint() * p.b() * &out.u_left_of));
    cross_a.max(cross_b) <= 0.5 * eta
}

/// Probe counts of one split search.
#[derive(Clone, Copy, Debug, Default)]
pub struct SplitSearchStats {
    pub probes: usize,
    pub probe_halley_iters: usize,
}

/// Binary search over the grid slice for a balanced split.
///
/// The rank k(point(j)) counts eigenvalues right of the point, so it is
/// nonincreasing in j; the search starts at the middle index and accepts
/// when `floor(m/2) <= k <= ceil(m/2)`. Accepted candidates that fail the
/// deflation quality gate are retried at neighboring indices before the
/// search gives up.
pub fn find_split(
    p: &HermitianPencil,
    grid: &ShatteringGrid,
    slice: GridSlice,
    params: &SolverParams,
    delta: f64,
    zeta: u32,
    key: StreamKey,
) -> Result<(SplitOutcome, SplitSearchStats)> {
    let m = p.dim();
    let k_min = m / 2;
    let k_max = m.div_ceil(2);
    if slice.is_empty() {
        return Err(PencilError::SplitFailure(format!(
            "empty grid slice for a block of size {m}"
        )));
    }
    let threshold = rank_threshold(params, zeta, delta);
    let max_probes = zeta as usize + 1;
    let mut stats = SplitSearchStats::default();
    let (mut lo, mut hi) = (slice.lo, slice.hi);

    let try_index = |j: u64, stats: &mut SplitSearchStats| -> Result<(usize, ConvergedShift)> {
        let conv = converge_at(p, grid.point(j), params, delta)?;
        stats.probes += 1;
        stats.probe_halley_iters += conv.halley_iters;
        let k = projector_rank(&conv, threshold, key.child(label::PROBE).child(j))?;
        Ok((k, conv))
    };

    while lo < hi && stats.probes <= max_probes {
        let mid = lo + (hi - lo) / 2;
        let (k, conv) = try_index(mid, &mut stats)?;
        if k > k_max {
            lo = mid + 1;
        } else if k < k_min {
            hi = mid;
        } else {
            // Candidate accepted; extract bases, verify decoupling, and
            // fall back to neighbors inside the balanced plateau if the
            // gate trips.
            let mut last_err = String::new();
            for off in [0i64, 1, -1, 2, -2, 3, -3, 4, -4] {
                let j = mid.checked_add_signed(off);
                let Some(j) = j else { continue };
                if j < slice.lo || j >= slice.hi {
                    continue;
                }
                let (kj, convj) = if off == 0 {
                    (
                        k,
                        ConvergedShift {
                            a_p: conv.a_p.clone(),
                            b_p: conv.b_p.clone(),
                            halley_iters: conv.halley_iters,
                        },
                    )
                } else {
                    match try_index(j, &mut stats) {
                        Ok(x) => x,
                        Err(e) => {
                            last_err = e.to_string();
                            continue;
                        }
                    }
                };
                if kj < k_min || kj > k_max {
                    continue;
                }
                let (u_right, u_left_of) =
                    extract_bases(&convj, kj, m, params, key.child(label::PROBE).child(j))?;
                let out = SplitOutcome {
                    grid_index: j,
                    grid_value: grid.point(j),
                    k: kj,
                    u_right,
                    u_left_of,
                    halley_iters: convj.halley_iters,
                };
                if coupling_small(p, &out, params.eta) {
                    return Ok((out, stats));
                }
                last_err = format!(
                    "deflation coupling above eta/2 at grid index {j} (value {:e})",
                    out.grid_value
                );
            }
            return Err(PencilError::SplitFailure(format!(
                "no clean balanced split near grid index {mid}: {last_err}"
            )));
        }
    }
    Err(PencilError::SplitFailure(format!(
        "no grid point with a balanced eigenvalue count in [{}, {}) after {} probes \
         (block size {m}); shattering violated",
        slice.lo, slice.hi, stats.probes
    )))
}

/// Invertible X and real diagonal pair with backward residuals.
#[derive(Clone, Debug)]
pub struct DiagonalizationResult {
    /// Eigenvector matrix; every column has unit Euclidean length.
    pub x: CMat,
    pub lambda_a: RVec,
    pub lambda_b: RVec,
    /// `|X^H A X - Lambda_A|_2` against the pencil this result refers to.
    pub residual_a: f64,
    pub residual_b: f64,
    pub recursion_depth: usize,
    pub total_halley_iters: usize,
}

impl DiagonalizationResult {
    /// Eigenvalues as ratios `Lambda_A(i) / Lambda_B(i)`; entries with
    /// `|Lambda_B(i)| <= 1e-14` map to signed infinity. That cannot happen
    /// for definite pencils inside the grid enclosure, but is guarded.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.lambda_a
            .iter()
            .zip(self.lambda_b.iter())
            .map(|(&a, &b)| {
                if b.abs() > 1e-14 {
                    a / b
                } else {
                    f64::INFINITY.copysign(a * b.signum())
                }
            })
            .collect()
    }

    pub fn eigenvalues_sorted(&self) -> Vec<f64> {
        let mut e = self.eigenvalues();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e
    }
}

/// One accepted split in the recursion tree, with the compressed child
/// pencils; drives verification and iteration-count studies.
#[derive(Clone, Debug)]
pub struct SplitNode {
    pub depth: usize,
    pub m: usize,
    pub grid_index: u64,
    pub grid_value: f64,
    pub k: usize,
    pub epsilon_level: f64,
    pub eta_level: f64,
    pub halley_iters_accepted: usize,
    /// Halley iterations spent on probes for this split, accepted run
    /// included.
    pub halley_iters_probes: usize,
    pub parent: HermitianPencil,
    pub child_right: HermitianPencil,
    pub child_left: HermitianPencil,
}

/// All splits of one solve.
#[derive(Clone, Debug, Default)]
pub struct SolveTrace {
    pub nodes: Vec<SplitNode>,
}

struct RecOutput {
    x: CMat,
    lambda_a: Vec<f64>,
    lambda_b: Vec<f64>,
    halley_iters: usize,
    depth: usize,
    nodes: Vec<SplitNode>,
}

fn solve_rec(
    p: &HermitianPencil,
    grid: &ShatteringGrid,
    slice: GridSlice,
    params: &SolverParams,
    key: StreamKey,
) -> Result<RecOutput> {
    let m = p.dim();
    if m == 1 {
        return Ok(RecOutput {
            x: CMat::identity(1, 1),
            lambda_a: vec![p.a()[(0, 0)].re],
            lambda_b: vec![p.b()[(0, 0)].re],
            halley_iters: 0,
            depth: 0,
            nodes: Vec::new(),
        });
    }
    let zeta = zeta_of(slice.len());
    let delta = compute_delta(params, m, zeta);
    let (split, stats) = find_split(p, grid, slice, params, delta, zeta, key)?;
    let probe_iters = stats.probe_halley_iters;

    let compress = |u: &CMat| -> Result<HermitianPencil> {
        HermitianPencil::new(
            linalg::hermitize(&(u.adjoint() * p.a() * u)),
            linalg::hermitize(&(u.adjoint() * p.b() * u)),
        )
    };
    let (k, j) = (split.k, split.grid_index);
    let right = compress(&split.u_right)?;
    let left = compress(&split.u_left_of)?;

    let child_params = params.child();
    let right_task = || {
        solve_rec(
            &right,
            grid,
            GridSlice {
                lo: j + 1,
                hi: slice.hi,
            },
            &child_params,
            key.child(label::CHILD_RIGHT),
        )
        .map_err(|e| attach_path(e, "right", j))
    };
    let left_task = || {
        solve_rec(
            &left,
            grid,
            GridSlice {
                lo: slice.lo,
                hi: j,
            },
            &child_params,
            key.child(label::CHILD_LEFT),
        )
        .map_err(|e| attach_path(e, "left", j))
    };
    let (res_right, res_left) = if params.parallel {
        let (r, l) = rayon::join(right_task, left_task);
        (r?, l?)
    } else {
        (right_task()?, left_task()?)
    };

    let mut x = CMat::zeros(m, m);
    x.view_mut((0, 0), (m, k))
        .copy_from(&(&split.u_right * &res_right.x));
    x.view_mut((0, k), (m, m - k))
        .copy_from(&(&split.u_left_of * &res_left.x));

    let mut lambda_a = res_right.lambda_a;
    lambda_a.extend_from_slice(&res_left.lambda_a);
    let mut lambda_b = res_right.lambda_b;
    lambda_b.extend_from_slice(&res_left.lambda_b);

    let mut nodes = vec![SplitNode {
        depth: 0,
        m,
        grid_index: j,
        grid_value: split.grid_value,
        k,
        epsilon_level: params.epsilon,
        eta_level: params.eta,
        halley_iters_accepted: split.halley_iters,
        halley_iters_probes: probe_iters,
        parent: p.clone(),
        child_right: right,
        child_left: left,
    }];
    for mut node in res_right.nodes.into_iter().chain(res_left.nodes) {
        node.depth += 1;
        nodes.push(node);
    }

    Ok(RecOutput {
        x,
        lambda_a,
        lambda_b,
        halley_iters: probe_iters + res_right.halley_iters + res_left.halley_iters,
        depth: 1 + res_right.depth.max(res_left.depth),
        nodes,
    })
}

fn attach_path(e: PencilError, side: &str, j: u64) -> PencilError {
    match e {
        PencilError::SplitFailure(msg) => {
            PencilError::SplitFailure(format!("[{side} of grid index {j}] {msg}"))
        }
        other => other,
    }
}

/// Run the divide-and-conquer eigensolver on a pencil whose symmetric
/// epsilon-pseudospectrum is shattered with respect to the grid slice.
pub fn eig_dwh(
    p: &HermitianPencil,
    grid: &ShatteringGrid,
    slice: GridSlice,
    params: &SolverParams,
    seed: u64,
) -> Result<DiagonalizationResult> {
    eig_dwh_traced(p, grid, slice, params, seed).map(|(r, _)| r)
}

/// Like [`eig_dwh`] but also returns the recursion trace.
pub fn eig_dwh_traced(
    p: &HermitianPencil,
    grid: &ShatteringGrid,
    slice: GridSlice,
    params: &SolverParams,
    seed: u64,
) -> Result<(DiagonalizationResult, SolveTrace)> {
    let rec = solve_rec(p, grid, slice, params, StreamKey::root(seed))?;
    let (residual_a, residual_b) = oracle::residuals_of(p, &rec.x, &rec.lambda_a, &rec.lambda_b);
    Ok((
        DiagonalizationResult {
            x: rec.x,
            lambda_a: RVec::from_vec(rec.lambda_a),
            lambda_b: RVec::from_vec(rec.lambda_b),
            residual_a,
            residual_b,
            recursion_depth: rec.depth,
            total_halley_iters: rec.halley_iters,
        },
        SolveTrace { nodes: rec.nodes },
    ))
}

/// Explicit practical grid override.
#[derive(Clone, Copy, Debug)]
pub struct PracticalGrid {
    pub lo: f64,
    pub hi: f64,
    pub spacing: f64,
}

/// Practical-mode knobs for the two-step pipeline. Anything left `None`
/// falls back to the automatic oracle-free heuristics.
#[derive(Clone, Copy, Debug, Default)]
pub struct PracticalConfig {
    /// Shattering epsilon; defaults to 1e-3 of the gap estimate (the
    /// automatic grid spacing doubles as a conservative gap estimate).
    pub epsilon: Option<f64>,
    /// Backward accuracy passed to the solver; defaults to xi/2.
    pub eta: Option<f64>,
    pub grid: Option<PracticalGrid>,
    /// Solve the two recursion branches concurrently.
    pub parallel: bool,
}

/// Theory mode runs the exact-arithmetic parameter formulas; practical
/// mode substitutes feasible values.
#[derive(Clone, Copy, Debug)]
pub enum PipelineMode {
    Theory,
    Practical(PracticalConfig),
}

/// Provenance of one pipeline run: the perturbation record and the derived
/// solver parameters.
#[derive(Clone, Debug)]
pub struct SolveProvenance {
    pub seed: u64,
    pub mu: f64,
    pub norm_v1: f64,
    pub norm_v2: f64,
    pub grid_z0: f64,
    pub grid_omega: f64,
    pub grid_count: u64,
    pub grid_epsilon: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub c: f64,
    pub r: f64,
    pub theta_fail: f64,
    pub mode: &'static str,
    /// Residuals of the solve against the perturbed pencil (the result's
    /// own residuals refer to the original input).
    pub residual_vs_perturbed: (f64, f64),
}

/// Two-step diagonalization of a definite pencil with `|A|, |B| <= 1`:
/// perturb at `mu = xi (1 - 1e-6) / (12 n)`, build a shattering grid, and
/// run the divide-and-conquer solver so the final backward errors against
/// the *original* pencil stay below xi.
pub fn diagonalize_definite(
    p: &HermitianPencil,
    xi: f64,
    gamma_lb: f64,
    kind: PerturbationKind,
    mode: PipelineMode,
    seed: u64,
) -> Result<(DiagonalizationResult, SolveProvenance)> {
    diagonalize_definite_traced(p, xi, gamma_lb, kind, mode, seed).map(|(r, p, _)| (r, p))
}

pub fn diagonalize_definite_traced(
    p: &HermitianPencil,
    xi: f64,
    gamma_lb: f64,
    kind: PerturbationKind,
    mode: PipelineMode,
    seed: u64,
) -> Result<(DiagonalizationResult, SolveProvenance, SolveTrace)> {
    let n = p.dim();
    let nf = n as f64;
    let norm_tol = 1.0 + 1e-12;
    if p.norm_a() > norm_tol || p.norm_b() > norm_tol {
        return Err(PencilError::Precondition(format!(
            "diagonalize_definite needs |A|, |B| <= 1 (caller rescales); got {:e}, {:e}",
            p.norm_a(),
            p.norm_b()
        )));
    }
    if !(xi > 0.0 && xi < 1.0) {
        return Err(PencilError::Precondition(format!(
            "xi must lie in (0, 1), got {xi}"
        )));
    }
    if !(gamma_lb > 0.0) {
        return Err(PencilError::Precondition(
            "gamma_lb must be positive".into(),
        ));
    }
    if !(xi < nf * gamma_lb / std::f64::consts::SQRT_2) {
        return Err(PencilError::Precondition(format!(
            "xi = {xi:e} must be below n gamma / sqrt(2) = {:e}",
            nf * gamma_lb / std::f64::consts::SQRT_2
        )));
    }

    // Strictly below the bound mu < xi/(12n).
    let mu = xi / (12.0 * nf) * (1.0 - 1e-6);
    let key = StreamKey::root(seed);
    let perturbed = perturb(p, &PerturbationSpec { kind, mu, seed })?;
    let pt = &perturbed.pencil;

    let (grid, params, mode_name) = match mode {
        PipelineMode::Theory => {
            let grid = build_shattering_grid(n, mu, gamma_lb, seed)?;
            let epsilon = mu.powi(8) / (6.0 * nf.powi(11));
            let r = (3.0 * nf.powi(7) + 2.0 * mu.powi(6)) / (2.0 * mu * nf.powi(5));
            let params = SolverParams::new(
                n,
                epsilon,
                gamma_lb / 2.0,
                3.0,
                r,
                xi / 2.0,
                1.0 / nf,
                SolverMode::Theory,
            )?;
            (grid, params, "theory")
        }
        PipelineMode::Practical(cfg) => {
            let (grid, r_val) = match cfg.grid {
                Some(g) => {
                    let eps_default = 1e-3 * g.spacing;
                    let grid = ShatteringGrid::spanning(
                        g.lo,
                        g.hi,
                        g.spacing,
                        cfg.epsilon.unwrap_or(eps_default),
                    )?;
                    let r = g.lo.abs().max(g.hi.abs()) + 4.0 * g.spacing;
                    (grid, r)
                }
                None => {
                    // Oracle-free enclosure: |lambda| <= |A~| / sigma_min(B~).
                    let sigma_b = linalg::sigma_min(pt.b());
                    if sigma_b <= 0.0 {
                        return Err(PencilError::NumericalRank(
                            "perturbed B is singular; pass an explicit practical grid".into(),
                        ));
                    }
                    let rho = 1.02 * pt.norm_a() / sigma_b + 1e-9;
                    let omega = rho / (16.0 * nf * nf);
                    let count = (2.0 * rho / omega).ceil() + 5.0;
                    if count > 4.0e6 {
                        return Err(PencilError::InvalidInput(format!(
                            "automatic practical grid would need {count:e} points \
                             (enclosure radius {rho:e}); pass an explicit grid"
                        )));
                    }
                    let jitter: f64 = {
                        use rand::Rng;
                        key.child(label::GRID_OFFSET).rng().random_range(0.0..1.0)
                    };
                    let z0 = -rho - (2.0 - jitter) * omega;
                    let epsilon = cfg.epsilon.unwrap_or(1e-3 * omega);
                    let grid = ShatteringGrid::new(z0, omega, count as u64, epsilon)?;
                    (grid, rho + 4.0 * omega)
                }
            };
            let c = pt.pencil_norm() * (1.0 + 1e-12) + 1e-300;
            let mut params = SolverParams::new(
                n,
                grid.epsilon(),
                gamma_lb / 2.0,
                c,
                r_val,
                cfg.eta.unwrap_or(xi / 2.0),
                1.0 / nf,
                SolverMode::Practical,
            )?;
            params.parallel = cfg.parallel;
            (grid, params, "practical")
        }
    };

    let (mut result, trace) = eig_dwh_traced(pt, &grid, GridSlice::full(&grid), &params, seed)?;
    let residual_vs_perturbed = (result.residual_a, result.residual_b);
    // Report residuals against the original, unperturbed input.
    let (ra, rb) = oracle::residuals_of(
        p,
        &result.x,
        result.lambda_a.as_slice(),
        result.lambda_b.as_slice(),
    );
    result.residual_a = ra;
    result.residual_b = rb;

    let provenance = SolveProvenance {
        seed,
        mu,
        norm_v1: perturbed.norm_v1,
        norm_v2: perturbed.norm_v2,
        grid_z0: grid.leftmost(),
        grid_omega: grid.spacing(),
        grid_count: grid.count(),
        grid_epsilon: grid.epsilon(),
        epsilon: params.epsilon,
        eta: params.eta,
        c: params.c,
        r: params.r,
        theta_fail: params.theta_fail,
        mode: mode_name,
        residual_vs_perturbed,
    };
    Ok((result, provenance, trace))
}
