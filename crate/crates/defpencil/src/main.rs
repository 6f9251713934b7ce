//! Batch command line for the definite-pencil toolkit: pencil generation,
//! solving, shattering experiments, pseudospectrum sampling, verification
//! and benchmarking. Outputs are plot-ready CSV or JSON run records.

// `!(x > 0.0)` rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use clap::{Args, Parser, Subcommand, ValueEnum};
use defpencil::pencil::{crawford_lower_bound, min_eigenvalue_gap, HermitianPencil};
use defpencil::pencil_file::{self, Encoding};
use defpencil::pseudospectrum::{check_shattered, sigma_min_shift};
use defpencil::randomize::{
    anchored_practical_grid, generate_test_pencil, perturb, DiagonalDensitySpec, PerturbationKind,
    PerturbationSpec,
};
use defpencil::records::{DiagonalizationRecord, ProvenanceRecord, RunRecord, Timings};
use defpencil::rng::splitmix64;
use defpencil::solver::{
    diagonalize_definite_traced, PipelineMode, PracticalConfig, PracticalGrid,
};
use defpencil::{oracle, CMat, PencilError, C64};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "defpencil",
    version,
    about = "Definite Hermitian pencil diagonalization"
)]
struct Cli {
    /// Worker threads for parallelizable phases (1 = sequential).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded definite test pencil (A, B) = (X^H L X, X^H X).
    Gen(GenArgs),
    /// Diagonalize a pencil file with the two-step randomized pipeline.
    Solve(SolveArgs),
    /// Perturbation experiments: Crawford numbers, gaps, shattering.
    Shatter(ShatterArgs),
    /// Sample sigma_min(A - zB) along an interval (pseudospectrum slice).
    Pseudospec(PseudospecArgs),
    /// Check a stored solve record against the dense oracle.
    Verify(VerifyArgs),
    /// Time solves across sizes and record Halley iteration counts.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Gue,
    Diag,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Practical,
    Theory,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct GenArgs {
    /// Dimension (ignored for presets that fix it).
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Comma-separated eigenvalue list; length must equal n.
    #[arg(long, conflicts_with = "preset", allow_hyphen_values = true)]
    eigs: Option<String>,
    /// Named construction recipe. `fig3` builds the 10x10 pencil with a
    /// repeated eigenvalue at +1 used by the shattering experiments.
    #[arg(long)]
    preset: Option<String>,
    /// Target eigenvector condition number kappa_2(X).
    #[arg(long, default_value_t = 10.0)]
    cond: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Write raw f64 bit patterns instead of decimals.
    #[arg(long)]
    hex: bool,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SolveArgs {
    #[arg(long)]
    pencil: PathBuf,
    /// Target backward error for the original pencil.
    #[arg(long, default_value_t = 1e-6)]
    xi: f64,
    /// Lower bound on gamma(A, B); defaults to the certified internal
    /// estimate (which is also always recorded).
    #[arg(long)]
    gamma_lb: Option<f64>,
    #[arg(long, value_enum, default_value_t = ModeArg::Practical)]
    mode: ModeArg,
    /// Practical-mode shattering epsilon override.
    #[arg(long)]
    eps: Option<f64>,
    /// Practical-mode solver accuracy override.
    #[arg(long)]
    eta: Option<f64>,
    /// Practical grid: left end.
    #[arg(long, requires_all = ["grid_hi", "grid_spacing"])]
    grid_lo: Option<f64>,
    /// Practical grid: right end.
    #[arg(long)]
    grid_hi: Option<f64>,
    /// Practical grid: spacing.
    #[arg(long)]
    grid_spacing: Option<f64>,
    #[arg(long, value_enum, default_value_t = KindArg::Gue)]
    kind: KindArg,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output JSON run record (includes X, Lambda_A, Lambda_B).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct ShatterArgs {
    #[arg(long, conflicts_with = "pure_noise")]
    pencil: Option<PathBuf>,
    /// Use the zero pencil A = B = 0 (pure noise experiment).
    #[arg(long)]
    pure_noise: bool,
    /// Dimension for --pure-noise.
    #[arg(long, default_value_t = 50)]
    n: usize,
    #[arg(long, default_value_t = 1e-6)]
    mu: f64,
    #[arg(long, value_enum, default_value_t = KindArg::Gue)]
    kind: KindArg,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Grid spacing for the shattering check; defaults to 10*mu.
    #[arg(long)]
    spacing: Option<f64>,
    /// Pseudospectrum epsilon for the check; defaults to mu/10.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct PseudospecArgs {
    #[arg(long)]
    pencil: PathBuf,
    #[arg(long)]
    eps: f64,
    /// Interval start.
    #[arg(long)]
    lo: f64,
    /// Interval end.
    #[arg(long)]
    hi: f64,
    #[arg(long, default_value_t = 512)]
    samples: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    pencil: PathBuf,
    #[arg(long)]
    record: PathBuf,
    /// Tolerance on the recomputed-vs-stored residual difference.
    #[arg(long, default_value_t = 1e-12)]
    tol_residual: f64,
    /// Chordal tolerance between solver and oracle eigenvalues.
    #[arg(long, default_value_t = 1e-4)]
    tol_chordal: f64,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct BenchArgs {
    /// Comma-separated problem sizes.
    #[arg(long, default_value = "8,16,32")]
    sizes: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    xi: f64,
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    if cli.threads > 1 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .ok();
    }
    let code = match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> defpencil::Result<()> {
    match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a, cli.threads),
        Command::Shatter(a) => cmd_shatter(a),
        Command::Pseudospec(a) => cmd_pseudospec(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

/// Eigenvalue layout of the fig3-style preset: two copies of +1 and the
/// rest spread across [0.955, 1.045] clear of the repeated value.
fn fig3_spec(n: usize) -> Vec<f64> {
    assert!(n >= 4);
    let m = n - 2;
    let mut eigs: Vec<f64> = (0..m)
        .map(|i| 0.955 + 0.09 * (i as f64 + 0.5) / m as f64)
        .collect();
    eigs.push(1.0);
    eigs.push(1.0);
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eigs
}

/// Scale applied to fig3 pencils so the B-weights of the eigenvectors are
/// well above the pseudospectrum threshold of the shattering experiments.
const FIG3_SCALE: f64 = 100.0;

fn cmd_gen(a: GenArgs) -> defpencil::Result<()> {
    let (eigs, n, recipe, scale) = match a.preset.as_deref() {
        Some("fig3") => {
            let n = if a.n >= 4 { a.n } else { 10 };
            (fig3_spec(n), n, "fig3".to_string(), FIG3_SCALE)
        }
        Some(other) => {
            return Err(PencilError::InvalidInput(format!(
                "unknown preset {other:?}"
            )));
        }
        None => {
            let spec = a
                .eigs
                .as_deref()
                .ok_or_else(|| PencilError::InvalidInput("pass --eigs or --preset".into()))?;
            let eigs = parse_f64_list(spec)?;
            if eigs.len() != a.n {
                return Err(PencilError::InvalidInput(format!(
                    "--n {} but {} eigenvalues given",
                    a.n,
                    eigs.len()
                )));
            }
            (eigs, a.n, "explicit".to_string(), 1.0)
        }
    };
    let base = generate_test_pencil(n, &eigs, a.cond, a.seed)?;
    let pencil = if scale != 1.0 {
        HermitianPencil::new(
            base.a() * C64::new(scale, 0.0),
            base.b() * C64::new(scale, 0.0),
        )?
    } else {
        base
    };
    let gamma = crawford_lower_bound(&pencil, 180, 1e-10)?.gamma_lb;
    let mut metadata = vec![
        ("seed".to_string(), a.seed.to_string()),
        ("recipe".to_string(), recipe.clone()),
        ("cond_target".to_string(), format!("{}", a.cond)),
        ("gamma".to_string(), format!("{gamma}")),
        (
            "eigs".to_string(),
            eigs.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(","),
        ),
    ];
    if recipe == "fig3" {
        metadata.push(("repeated_eigenvalue".to_string(), "1".to_string()));
        metadata.push(("scale".to_string(), format!("{scale}")));
    }
    let enc = if a.hex { Encoding::Hex } else { Encoding::Dec };
    pencil_file::write_file(&a.out, &pencil, &metadata, enc)?;
    println!(
        "wrote {} ({}x{}, gamma >= {gamma:.3e})",
        a.out.display(),
        n,
        n
    );
    Ok(())
}

fn parse_f64_list(s: &str) -> defpencil::Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| PencilError::InvalidInput(format!("bad number {t:?}: {e}")))
        })
        .collect()
}

fn cmd_solve(a: SolveArgs, threads: usize) -> defpencil::Result<()> {
    let t0 = Instant::now();
    let file = pencil_file::read_file(&a.pencil)?;
    let p = file.pencil;
    let n = p.dim();

    // Rescale to |A|, |B| <= 1 as the pipeline requires; undone on output.
    let scale = p.norm_a().max(p.norm_b()).max(1.0);
    let scaled = if scale > 1.0 {
        HermitianPencil::new(
            p.a() * C64::new(1.0 / scale, 0.0),
            p.b() * C64::new(1.0 / scale, 0.0),
        )?
    } else {
        p.clone()
    };

    let certified = crawford_lower_bound(&scaled, 180, 1e-10)?.gamma_lb;
    let gamma_lb = match a.gamma_lb {
        Some(g) => g / scale,
        None => certified,
    };
    if !(gamma_lb > 0.0) {
        return Err(PencilError::Precondition(
            "pencil is not certified definite and no --gamma-lb was given".into(),
        ));
    }

    let kind = match a.kind {
        KindArg::Gue => PerturbationKind::Gue,
        KindArg::Diag => PerturbationKind::Diagonal(DiagonalDensitySpec::default_for_dim(n)),
    };
    let mode = match a.mode {
        ModeArg::Theory => PipelineMode::Theory,
        ModeArg::Practical => {
            let grid = match (a.grid_lo, a.grid_hi, a.grid_spacing) {
                (Some(lo), Some(hi), Some(spacing)) => Some(PracticalGrid {
                    lo: lo / scale,
                    hi: hi / scale,
                    spacing: spacing / scale,
                }),
                _ => None,
            };
            PipelineMode::Practical(PracticalConfig {
                epsilon: a.eps.map(|e| e / scale),
                eta: a.eta.map(|e| e / scale),
                grid,
                parallel: threads > 1,
            })
        }
    };

    let params_json = serde_json::json!({
        "pencil": a.pencil.display().to_string(),
        "xi": a.xi,
        "gamma_lb_given": a.gamma_lb,
        "gamma_certified_scaled": certified,
        "rescale": scale,
        "mode": match a.mode { ModeArg::Theory => "theory", ModeArg::Practical => "practical" },
        "kind": match a.kind { KindArg::Gue => "gue", KindArg::Diag => "diag" },
        "eps": a.eps,
        "eta": a.eta,
        "grid": [a.grid_lo, a.grid_hi, a.grid_spacing],
        "threads": threads,
    });
    let mut record = RunRecord::new("solve", params_json, a.seed);

    let t_solve = Instant::now();
    let outcome = diagonalize_definite_traced(&scaled, a.xi / scale, gamma_lb, kind, mode, a.seed);
    let solve_ms = t_solve.elapsed().as_secs_f64() * 1e3;

    match outcome {
        Ok((mut result, prov, _trace)) => {
            // Undo the rescale on the diagonal pair; X is scale-free.
            if scale > 1.0 {
                result.lambda_a *= scale;
                result.lambda_b *= scale;
            }
            let (ra, rb) = oracle::residuals_of(
                &p,
                &result.x,
                result.lambda_a.as_slice(),
                result.lambda_b.as_slice(),
            );
            result.residual_a = ra;
            result.residual_b = rb;
            record.success = true;
            record.provenance = Some(ProvenanceRecord::from(&prov));
            record.output = Some(DiagonalizationRecord::from(&result));
            record.timings = Timings {
                total_ms: t0.elapsed().as_secs_f64() * 1e3,
                perturb_ms: 0.0,
                solve_ms,
            };
            pencil_file::write_atomic(&a.out, record.to_json().as_bytes())?;
            println!(
                "solved {n}x{n}: residuals ({ra:.3e}, {rb:.3e}), {} Halley iterations, depth {}",
                result.total_halley_iters, result.recursion_depth
            );
            Ok(())
        }
        Err(e) => {
            record.success = false;
            record.error = Some(e.to_string());
            record.timings = Timings {
                total_ms: t0.elapsed().as_secs_f64() * 1e3,
                perturb_ms: 0.0,
                solve_ms,
            };
            pencil_file::write_atomic(&a.out, record.to_json().as_bytes())?;
            Err(e)
        }
    }
}

fn csv_header(out: &mut String, command: &str, columns: &str) {
    let _ = writeln!(out, "# produced by defpencil {command} v{VERSION}");
    let _ = writeln!(out, "{columns}");
}

fn cmd_shatter(a: ShatterArgs) -> defpencil::Result<()> {
    let p = match (&a.pencil, a.pure_noise) {
        (Some(path), false) => pencil_file::read_file(path)?.pencil,
        (None, true) => {
            let z = CMat::zeros(a.n, a.n);
            HermitianPencil::new(z.clone(), z)?
        }
        _ => {
            return Err(PencilError::InvalidInput(
                "pass exactly one of --pencil or --pure-noise".into(),
            ));
        }
    };
    let n = p.dim();
    let spacing = a.spacing.unwrap_or(10.0 * a.mu);
    let eps = a.eps.unwrap_or(a.mu / 10.0);
    let mut out = String::new();
    csv_header(
        &mut out,
        "shatter",
        "trial,norm_v1,norm_v2,crawford_gamma,min_gap,shattered,min_grid_margin,violations",
    );
    for trial in 0..a.trials {
        let seed = splitmix64(a.seed ^ splitmix64(trial));
        let kind = match a.kind {
            KindArg::Gue => PerturbationKind::Gue,
            KindArg::Diag => PerturbationKind::Diagonal(DiagonalDensitySpec::default_for_dim(n)),
        };
        let spec = PerturbationSpec {
            kind,
            mu: a.mu,
            seed,
        };
        let drawn = perturb(&p, &spec)?;
        let gamma = crawford_lower_bound(&drawn.pencil, 90, 1e-9)?.gamma_lb;
        let (gap, shattered, margin, violations) = match oracle::reference_solve(&drawn.pencil) {
            Ok(sol) => {
                let gap = if n >= 2 {
                    min_eigenvalue_gap(&sol.eigenvalues)?
                } else {
                    f64::INFINITY
                };
                if gamma > eps {
                    let grid =
                        anchored_practical_grid(&sol.eigenvalues, spacing, eps, 20.0 * spacing)?;
                    let rep = check_shattered(&drawn.pencil, &grid, eps, gamma, &sol.eigenvalues)?;
                    (
                        format!("{gap}"),
                        format!("{}", rep.shattered),
                        format!("{}", rep.min_grid_margin),
                        format!("{}", rep.violating_grid_indices.len()),
                    )
                } else {
                    (
                        format!("{gap}"),
                        String::new(),
                        String::new(),
                        String::new(),
                    )
                }
            }
            Err(_) => (String::new(), String::new(), String::new(), String::new()),
        };
        let _ = writeln!(
            out,
            "{trial},{},{},{gamma},{gap},{shattered},{margin},{violations}",
            drawn.norm_v1, drawn.norm_v2
        );
    }
    pencil_file::write_atomic(&a.out, out.as_bytes())?;
    println!("wrote {} ({} trials)", a.out.display(), a.trials);
    Ok(())
}

fn cmd_pseudospec(a: PseudospecArgs) -> defpencil::Result<()> {
    let p = pencil_file::read_file(&a.pencil)?.pencil;
    let gamma = crawford_lower_bound(&p, 180, 1e-10)?.gamma_lb;
    if !(a.eps < gamma) {
        return Err(PencilError::Precondition(format!(
            "eps = {:e} must be below the certified gamma = {gamma:e}",
            a.eps
        )));
    }
    if a.samples < 2 || !(a.hi > a.lo) {
        return Err(PencilError::InvalidInput(
            "need hi > lo and at least 2 samples".into(),
        ));
    }
    let mut out = String::new();
    csv_header(&mut out, "pseudospec", "z,sigma_min,threshold,member");
    for i in 0..a.samples {
        let z = a.lo + (a.hi - a.lo) * i as f64 / (a.samples - 1) as f64;
        let smin = sigma_min_shift(&p, z);
        let threshold = a.eps * (1.0 + z * z).sqrt();
        let _ = writeln!(out, "{z},{smin},{threshold},{}", smin <= threshold);
    }
    pencil_file::write_atomic(&a.out, out.as_bytes())?;
    println!("wrote {}", a.out.display());
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> defpencil::Result<()> {
    let p = pencil_file::read_file(&a.pencil)?.pencil;
    let text = std::fs::read_to_string(&a.record)?;
    let record = RunRecord::from_json(&text)?;
    let out = record
        .output
        .as_ref()
        .ok_or_else(|| PencilError::InvalidInput("record has no diagonalization output".into()))?;
    if out.n != p.dim() {
        return Err(PencilError::InvalidInput(format!(
            "record is {}x{}, pencil is {}x{}",
            out.n,
            out.n,
            p.dim(),
            p.dim()
        )));
    }
    let x = out.to_matrix();
    let (ra, rb) = oracle::residuals_of(&p, &x, &out.lambda_a, &out.lambda_b);
    let d_res = (ra - out.residual_a).abs().max((rb - out.residual_b).abs());
    let sol = oracle::reference_solve(&p)?;
    let mut solver_eigs = out.eigenvalues.clone();
    solver_eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let chordal = oracle::chordal_match(&solver_eigs, &sol.eigenvalues)?;
    println!("recomputed residuals: ({ra:.6e}, {rb:.6e})");
    println!(
        "stored residuals:     ({:.6e}, {:.6e})",
        out.residual_a, out.residual_b
    );
    println!(
        "residual drift:       {d_res:.3e} (tol {:.1e})",
        a.tol_residual
    );
    println!(
        "chordal vs oracle:    {chordal:.6e} (tol {:.1e})",
        a.tol_chordal
    );
    let scale = ra.abs().max(rb.abs()).max(1.0);
    if d_res > a.tol_residual * scale.max(1.0) || chordal > a.tol_chordal {
        return Err(PencilError::NumericalRank(
            "verification failed: stored record disagrees with the oracle".into(),
        ));
    }
    println!("verify: OK");
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> defpencil::Result<()> {
    let sizes: Vec<usize> = a
        .sizes
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|e| PencilError::InvalidInput(format!("bad size {t:?}: {e}")))
        })
        .collect::<defpencil::Result<_>>()?;
    let mut out = String::new();
    csv_header(
        &mut out,
        "bench",
        "n,seed,depth,splits,halley_accepted,halley_probes,eps_level,total_ms,solve_ms",
    );
    for &n in &sizes {
        let seed = splitmix64(a.seed ^ splitmix64(n as u64));
        let eigs: Vec<f64> = (0..n)
            .map(|i| -1.0 + 2.0 * (i as f64 + 0.5) / n as f64)
            .collect();
        let p = generate_test_pencil(n, &eigs, 3.0, seed)?;
        let t0 = Instant::now();
        if n == 1 {
            let _ = writeln!(out, "{n},{seed},all,0,0,0,,0,0");
            continue;
        }
        let gamma = crawford_lower_bound(&p, 90, 1e-9)?.gamma_lb;
        let t_solve = Instant::now();
        let (_res, _prov, trace) = diagonalize_definite_traced(
            &p,
            a.xi,
            gamma,
            PerturbationKind::Gue,
            PipelineMode::Practical(PracticalConfig::default()),
            seed,
        )?;
        let solve_ms = t_solve.elapsed().as_secs_f64() * 1e3;
        let total_ms = t0.elapsed().as_secs_f64() * 1e3;
        let max_depth = trace.nodes.iter().map(|s| s.depth).max().unwrap_or(0);
        for depth in 0..=max_depth {
            let at: Vec<_> = trace.nodes.iter().filter(|s| s.depth == depth).collect();
            if at.is_empty() {
                continue;
            }
            let acc: usize = at.iter().map(|s| s.halley_iters_accepted).sum();
            let probes: usize = at.iter().map(|s| s.halley_iters_probes).sum();
            let _ = writeln!(
                out,
                "{n},{seed},{depth},{},{acc},{probes},{:e},{total_ms},{solve_ms}",
                at.len(),
                at[0].epsilon_level
            );
        }
        let _ = writeln!(
            out,
            "{n},{seed},all,{},{},{},,{total_ms},{solve_ms}",
            trace.nodes.len(),
            trace
                .nodes
                .iter()
                .map(|s| s.halley_iters_accepted)
                .sum::<usize>(),
            trace
                .nodes
                .iter()
                .map(|s| s.halley_iters_probes)
                .sum::<usize>(),
        );
    }
    pencil_file::write_atomic(&a.out, out.as_bytes())?;
    println!("wrote {}", a.out.display());
    Ok(())
}
