//! `kappa` — growth-rate bounds for hard-squares-like lattice models.
//!
//! The pipeline has three stages, one subcommand each, plus oracles:
//!
//! * `solve`  — run CTMRG to a converged truncated F/A set, save it to a file;
//! * `bound`  — evaluate the Collatz-Wielandt trace ratios of that F set over
//!              all bracelets of an even cycle length m, in shards, and emit a
//!              certified upper bound on κ;
//! * `exact`  — exact transfer-matrix eigenvalues at small widths, with
//!              certified enclosures (the oracle the bound is measured against);
//! * `lower`  — certified lower bound from a ratio of cylinder eigenvalues;
//! * `study`  — bound-vs-n table at fixed m for plotting;
//! * `verify` — self-checks of the structural identities on small cases.
//!
//! Every output file embeds the run configuration as `config_*` lines so a
//! report can be re-derived from the file alone. Timing goes to stdout only;
//! file contents are byte-stable across reruns and worker counts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use kappa_core::bound::{
    parse_shard_result, psi, ratio, ratio_of_state, read_checkpoint, run_shard_to_file,
    subsample_bracelets, vpsi, write_checkpoint, AnsatzSet, BoundError, BoundReport, BoundRun,
    CheckpointPolicy, ShardProgress, ShardStatus,
};
use kappa_core::bracelets::{
    canonical_form, canonicalize, count_bracelets, enumerate_bracelets, shard_range, BraceletError,
};
use kappa_core::ctmrg::{
    ctmrg_solve, init_state, kappa_diagnostics, load_state, serialize_state, state_checksum,
    CTMState, CtmrgError, GrowthSchedule,
};
use kappa_core::exact::{
    cw_lower, cw_upper_direct, dominant_eigenvalue, enumerate_states, tm_apply,
    DominantEigenvalue, ExactError,
};
use kappa_core::hp::real::decimal_digits;
use kappa_core::hp::{HpError, HPReal};
use kappa_core::spin::{
    column_legal_bits, face_weight_bits, pair_legal, Boundary, Direction, Model, Spin, ALL_MODELS,
};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error(transparent)]
    Ctmrg(#[from] CtmrgError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Bracelet(#[from] BraceletError),
    #[error(transparent)]
    Hp(#[from] HpError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("two-precision runs agree on no leading digit ({base} vs {double}); refusing to report a bound")]
    PrecisionDisagreement { base: String, double: String },
    #[error("{failed} of {total} verification checks failed")]
    VerifyFailed { failed: usize, total: usize },
}

impl CliError {
    /// Exit statuses: 2 usage, 3 positivity failure, 4 incomplete shards,
    /// 5 checksum/format mismatch, 1 anything else.
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Bound(e) => bound_code(e),
            CliError::Ctmrg(e) => ctmrg_code(e),
            CliError::Exact(ExactError::OddWidth(_)) => 2,
            // Bad shard indices and malformed bracelet strings are spec
            // errors in the invocation, not runtime failures.
            CliError::Bracelet(_) => 2,
            _ => 1,
        }
    }
}

fn bound_code(e: &BoundError) -> u8 {
    match e {
        BoundError::OddWidth(_) | BoundError::WidthTooLarge(_) => 2,
        BoundError::AnsatzNotPositive { .. } => 3,
        BoundError::IncompleteShards { .. } => 4,
        BoundError::ChecksumMismatch { .. } | BoundError::Parse(_) => 5,
        BoundError::Ctmrg(e) => ctmrg_code(e),
        _ => 1,
    }
}

fn ctmrg_code(e: &CtmrgError) -> u8 {
    match e {
        CtmrgError::ChecksumMismatch { .. }
        | CtmrgError::FormatVersionMismatch { .. }
        | CtmrgError::ModelMismatch { .. }
        | CtmrgError::Parse(_) => 5,
        _ => 1,
    }
}

#[derive(Parser)]
#[command(
    name = "kappa",
    version,
    about = "Certified growth-rate bounds for hard squares, non-attacking kings and RWIM"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run CTMRG and save the converged F/A matrices to a file.
    Solve(SolveArgs),
    /// Certified upper bound on κ from trace ratios of a solved F set.
    Bound(BoundArgs),
    /// Exact transfer-matrix eigenvalues at a small width, with enclosures.
    Exact(ExactArgs),
    /// Certified lower bound on κ from a cylinder eigenvalue ratio.
    Lower(LowerArgs),
    /// Bound-versus-n table at fixed m, for plotting.
    Study(StudyArgs),
    /// Self-checks: structural identities on exhaustive small cases.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Common {
    /// Lattice model: hard-squares, nak or rwim.
    #[arg(long)]
    model: Model,
    /// Working precision in bits for CTMRG / exact eigenvalues.
    #[arg(long, default_value_t = 256)]
    precision_bits: u32,
    /// Convergence tolerance, as a decimal like 1e-30.
    #[arg(long, default_value = "1e-30")]
    tol: String,
    /// Iteration cap for the CTMRG loop.
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// Target truncation dimension n.
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Per-step growth of the kept dimension (at most 2).
    #[arg(long, default_value_t = 2.0)]
    growth_factor: f64,
    /// Fixed-size iterations required before convergence may be declared.
    #[arg(long, default_value_t = 50)]
    polish_iters: usize,
    /// Output F-file (default: <model>-n<n>-p<bits>.ctm).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    common: Common,
    /// Cycle length m; must be even.
    #[arg(long)]
    m: usize,
    /// Solved F-file produced by `solve`.
    #[arg(long)]
    f_file: PathBuf,
    /// Cross-check: refuse the F-file unless its n matches.
    #[arg(long)]
    n: Option<usize>,
    /// Trace-evaluation precision (default: --precision-bits).
    #[arg(long)]
    bound_precision_bits: Option<u32>,
    /// Number of contiguous bracelet shards.
    #[arg(long, default_value_t = 1)]
    shards: u64,
    /// Compute a single shard's result file and exit (requires --checkpoint-dir).
    #[arg(long)]
    shard_index: Option<u64>,
    /// Worker threads for a full run.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Directory for shard result files and checkpoints.
    #[arg(long)]
    checkpoint_dir: Option<PathBuf>,
    /// Reuse complete shard results and checkpoints found in --checkpoint-dir.
    #[arg(long)]
    resume: bool,
    /// Checkpoint after this many bracelets (0 disables the count trigger).
    #[arg(long, default_value_t = 100_000)]
    checkpoint_every_bracelets: u64,
    /// Checkpoint after this many seconds (0 disables the time trigger).
    #[arg(long, default_value_t = 60)]
    checkpoint_every_secs: u64,
    /// Report file (default: <model>-m<m>-n<n>.bound).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    common: Common,
    /// Strip width / cylinder circumference.
    #[arg(long)]
    m: usize,
    /// Optional report file; the report always goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LowerArgs {
    #[command(flatten)]
    common: Common,
    /// Row exponent p in (Λ°(p+2q)/Λ°(2q))^(1/p); must be even.
    #[arg(long)]
    p: usize,
    /// Half-width q of the reference cylinder.
    #[arg(long, default_value_t = 1)]
    q: usize,
    /// Optional report file; the report always goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StudyArgs {
    #[command(flatten)]
    common: Common,
    /// Cycle length m; must be even.
    #[arg(long)]
    m: usize,
    /// Largest truncation dimension; the grid is n = 1..=this.
    #[arg(long)]
    n: usize,
    /// Trace-evaluation precision (default: --precision-bits).
    #[arg(long)]
    bound_precision_bits: Option<u32>,
    /// Data file (default: <model>-m<m>-study.dat).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Restrict the model-independent checks to one model.
    #[arg(long)]
    model: Option<Model>,
    /// Also verify this F-file's integrity and header.
    #[arg(long)]
    f_file: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Solve(a) => cmd_solve(a),
        Cmd::Bound(a) => cmd_bound(a),
        Cmd::Exact(a) => cmd_exact(a),
        Cmd::Lower(a) => cmd_lower(a),
        Cmd::Study(a) => cmd_study(a),
        Cmd::Verify(a) => cmd_verify(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

// ---------------------------------------------------------------- helpers

fn check_precision(p_bits: u32, what: &str) -> Result<(), CliError> {
    if !(8..=1_048_576).contains(&p_bits) {
        return Err(CliError::Usage(format!(
            "{what} must lie in 8..=1048576 bits, got {p_bits}"
        )));
    }
    Ok(())
}

fn parse_tol(s: &str, p_bits: u32) -> Result<HPReal, CliError> {
    check_precision(p_bits, "--precision-bits")?;
    let v = HPReal::parse_decimal(s, p_bits)
        .map_err(|_| CliError::Usage(format!("cannot parse --tol {s:?} as a decimal")))?;
    if !v.is_positive() {
        return Err(CliError::Usage(format!("--tol must be positive, got {s}")));
    }
    Ok(v)
}

/// `config_key=value` lines, one per pair, in the given order. Only the
/// result-relevant configuration is recorded: paths, worker counts and resume
/// flags cannot change any output byte (that is the determinism contract), so
/// recording them would make reports incomparable across equivalent runs.
fn config_block(pairs: &[(&str, String)]) -> String {
    let mut s = String::new();
    for (k, v) in pairs {
        let _ = writeln!(s, "config_{k}={v}");
    }
    s
}

fn atomic_write_text(path: &Path, text: &str) -> Result<(), std::io::Error> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, text)?;
    std::fs::rename(&tmp, path)
}

/// f64 flag rendered without trailing zeros ("2", "1.5").
fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn common_config(c: &Common) -> Vec<(&'static str, String)> {
    vec![
        ("model", c.model.token().to_string()),
        ("precision_bits", c.precision_bits.to_string()),
        ("tol", c.tol.clone()),
        ("max_iters", c.max_iters.to_string()),
    ]
}

// ------------------------------------------------------------------ solve

fn cmd_solve(a: SolveArgs) -> Result<(), CliError> {
    let t0 = Instant::now();
    if a.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".to_string()));
    }
    if !(a.growth_factor > 0.0 && a.growth_factor <= 2.0) {
        return Err(CliError::Usage(format!(
            "--growth-factor must lie in (0, 2], got {}",
            a.growth_factor
        )));
    }
    let prec = a.common.precision_bits;
    let tol = parse_tol(&a.common.tol, prec)?;
    let schedule = GrowthSchedule {
        target_n: a.n,
        growth_factor: a.growth_factor,
        polish_iters: a.polish_iters,
        tol,
        max_iters: a.common.max_iters,
    };
    let state = ctmrg_solve(a.common.model, prec, &schedule)?;
    let diag = kappa_diagnostics(&state)?;

    let out = a.out.unwrap_or_else(|| {
        PathBuf::from(format!("{}-n{}-p{}.ctm", a.common.model.token(), a.n, prec))
    });
    let text = serialize_state(&state)?;
    let checksum = state_checksum(&text).expect("serializer always appends a checksum");
    let mut cfg = common_config(&a.common);
    cfg.push(("n", a.n.to_string()));
    cfg.push(("growth_factor", fmt_f64(a.growth_factor)));
    cfg.push(("polish_iters", a.polish_iters.to_string()));
    let full = format!("{text}{}", config_block(&cfg));
    atomic_write_text(&out, &full)?;

    println!("f_file={}", out.display());
    println!("f_checksum={checksum}");
    println!("model={} n={} precision_bits={}", state.model.token(), state.n, state.p_bits);
    println!("iterations={}", state.iteration);
    println!("truncation_degenerate={}", state.truncation_degenerate);
    println!("kappa_estimate={}", diag.kappa.to_decimal());
    println!("xi={}", diag.xi.to_decimal());
    println!("eta={}", diag.eta.to_decimal());
    println!("corner_residual={}", diag.corner_residual.to_decimal());
    println!("row_residual={}", diag.row_residual.to_decimal());
    println!("wall_seconds={:.3}", t0.elapsed().as_secs_f64());
    Ok(())
}

// ------------------------------------------------------------------ bound

fn cmd_bound(a: BoundArgs) -> Result<(), CliError> {
    let t0 = Instant::now();
    if a.m < 2 || a.m % 2 != 0 {
        return Err(CliError::Usage(format!(
            "--m must be even and at least 2, got {}",
            a.m
        )));
    }
    if a.workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".to_string()));
    }
    if a.shards == 0 {
        return Err(CliError::Usage("--shards must be at least 1".to_string()));
    }

    let state = load_state(&a.f_file, Some(a.common.model))?;
    if let Some(n) = a.n {
        if n != state.n {
            return Err(CliError::Usage(format!(
                "F-file {} has n={}, but --n {} was requested",
                a.f_file.display(),
                state.n,
                n
            )));
        }
    }
    let bprec = a.bound_precision_bits.unwrap_or(a.common.precision_bits);
    check_precision(bprec, "--bound-precision-bits")?;
    let mut aset = AnsatzSet::from_state(&state)?;
    if bprec != aset.p_bits {
        aset = aset.at_precision(bprec);
    }

    if let Some(dir) = &a.checkpoint_dir {
        std::fs::create_dir_all(dir)?;
    }

    // Single-shard mode: write this shard's result file and stop. A driver
    // (or a cluster scheduler) later aggregates with a full `--resume` run.
    if let Some(idx) = a.shard_index {
        let dir = a.checkpoint_dir.clone().ok_or_else(|| {
            CliError::Usage("--shard-index requires --checkpoint-dir".to_string())
        })?;
        let spec = shard_range(a.common.model, a.m, a.shards, idx)?;
        let policy = CheckpointPolicy {
            dir: Some(dir.clone()),
            every_bracelets: a.checkpoint_every_bracelets,
            every_secs: a.checkpoint_every_secs,
        };
        let summary = run_shard_to_file(&aset, &spec, &dir, &policy, a.resume)?;
        println!(
            "shard={} of={} start={} end={} processed={}",
            spec.shard_index, spec.shard_count, spec.start, spec.end, summary.processed
        );
        if let (Some(mx), Some(mn)) = (&summary.max, &summary.min) {
            println!(
                "max_bracelet={} max_ratio_root={}",
                mx.bracelet.string(),
                mx.ratio_root.to_decimal()
            );
            println!(
                "min_bracelet={} min_ratio_root={}",
                mn.bracelet.string(),
                mn.ratio_root.to_decimal()
            );
        }
        println!("wall_seconds={:.3}", t0.elapsed().as_secs_f64());
        return Ok(());
    }

    let run = BoundRun {
        m: a.m,
        shard_count: a.shards,
        workers: a.workers,
        dir: a.checkpoint_dir.clone(),
        resume: a.resume,
        checkpoint_every_bracelets: a.checkpoint_every_bracelets,
        checkpoint_every_secs: a.checkpoint_every_secs,
    };
    let report = upper_bound_checked(&aset, &run)?;

    // Two-precision policy: re-evaluate a deterministic subsample (every
    // 100th bracelet plus both global extremes) at twice the precision and
    // report only the leading digits on which the two runs agree.
    let aset2 = aset.at_precision(bprec.saturating_mul(2));
    let mut sample = subsample_bracelets(a.common.model, a.m, 100);
    for extreme in [&report.max.bracelet, &report.min.bracelet] {
        if !sample.contains(extreme) {
            sample.push(*extreme);
        }
    }
    let mut max2: Option<HPReal> = None;
    for b in &sample {
        let rec = ratio(&aset2, b)?;
        match &max2 {
            Some(cur) if rec.ratio_root <= *cur => {}
            _ => max2 = Some(rec.ratio_root),
        }
    }
    let max2 = max2.expect("subsample is never empty");
    let agreed = kappa_core::bound::agreeing_digits(&report.max.ratio_root, &max2);
    if agreed == 0 {
        return Err(CliError::PrecisionDisagreement {
            base: report.max.ratio_root.to_decimal(),
            double: max2.to_decimal(),
        });
    }
    // Round whichever evaluation is larger upward at the agreed digit count;
    // both are upper bounds, so the reported prefix is one too.
    let reported_src = if max2 > report.max.ratio_root { &max2 } else { &report.max.ratio_root };
    let reported = reported_src.to_decimal_up(agreed);

    let out = a.out.unwrap_or_else(|| {
        PathBuf::from(format!("{}-m{}-n{}.bound", a.common.model.token(), a.m, state.n))
    });
    let mut cfg = common_config(&a.common);
    cfg.push(("m", a.m.to_string()));
    cfg.push(("n", state.n.to_string()));
    cfg.push(("bound_precision_bits", bprec.to_string()));
    cfg.push(("shards", a.shards.to_string()));
    let mut annex = config_block(&cfg);
    let _ = writeln!(annex, "verify_precision_bits={}", bprec.saturating_mul(2));
    let _ = writeln!(annex, "verify_sample_size={}", sample.len());
    let _ = writeln!(annex, "verify_max_ratio_root={}", max2.to_decimal());
    let _ = writeln!(annex, "agreeing_digits={agreed}");
    let _ = writeln!(annex, "upper_bound_reported={reported}");
    let full = format!("{}{}", report.render(), annex);
    atomic_write_text(&out, &full)?;

    println!(
        "model={} m={} n={} precision_bits={}",
        report.model.token(),
        report.m,
        report.n,
        report.precision_bits
    );
    println!("f_checksum={}", report.f_checksum);
    println!("bracelets_total={}", report.bracelets_total);
    println!("upper_bound={}", report.upper_bound_decimal());
    println!("upper_bound_reported={reported}");
    println!("agreeing_digits={agreed}");
    println!("max_bracelet={}", report.max.bracelet.string());
    println!("min_ratio_root={}", report.min.ratio_root.to_decimal());
    println!("min_bracelet={}", report.min.bracelet.string());
    println!("max_is_conjectured_extremal={}", report.max_is_conjectured_extremal());
    println!("report_file={}", out.display());
    println!("wall_seconds={:.3}", t0.elapsed().as_secs_f64());
    println!("compute_seconds={:.3}", report.compute_seconds);
    Ok(())
}

fn upper_bound_checked(aset: &AnsatzSet, run: &BoundRun) -> Result<BoundReport, CliError> {
    Ok(kappa_core::bound::upper_bound(aset, run)?)
}

// ------------------------------------------------------------------ exact

fn render_dominant(prefix: &str, dom: &DominantEigenvalue, out: &mut String) {
    let _ = writeln!(out, "{prefix}_states={}", dom.dim);
    let _ = writeln!(out, "{prefix}_lambda={}", dom.lambda.to_decimal());
    let _ = writeln!(out, "{prefix}_cw_low={}", dom.cw_low.to_decimal());
    let _ = writeln!(out, "{prefix}_cw_high={}", dom.cw_high.to_decimal());
    let _ = writeln!(out, "{prefix}_enclosure_width={}", dom.enclosure_width().to_decimal());
    let _ = writeln!(out, "{prefix}_iterations={}", dom.iterations);
}

fn cmd_exact(a: ExactArgs) -> Result<(), CliError> {
    let t0 = Instant::now();
    if a.m == 0 {
        return Err(CliError::Usage("--m must be at least 1".to_string()));
    }
    let prec = a.common.precision_bits;
    let tol = parse_tol(&a.common.tol, prec)?;
    let model = a.common.model;

    let mut body = String::new();
    let _ = writeln!(body, "format=exact-report-v1");
    let mut cfg = common_config(&a.common);
    cfg.push(("m", a.m.to_string()));
    body.push_str(&config_block(&cfg));

    let path = dominant_eigenvalue(model, a.m, Boundary::Path, prec, &tol)?;
    render_dominant("path", &path, &mut body);
    if a.m >= 2 {
        let cyc = dominant_eigenvalue(model, a.m, Boundary::Cyclic, prec, &tol)?;
        render_dominant("cyclic", &cyc, &mut body);
        if a.m % 2 == 0 {
            let upper = cw_upper_direct(model, a.m, prec, &tol)?;
            let digits = decimal_digits(prec);
            let _ = writeln!(body, "kappa_upper_bound={}", upper.to_decimal_up(digits));
        }
    }

    print!("{body}");
    println!("wall_seconds={:.3}", t0.elapsed().as_secs_f64());
    if let Some(out) = &a.out {
        atomic_write_text(out, &body)?;
        println!("report_file={}", out.display());
    }
    Ok(())
}

// ------------------------------------------------------------------ lower

fn cmd_lower(a: LowerArgs) -> Result<(), CliError> {
    let t0 = Instant::now();
    if a.p < 2 || a.p % 2 != 0 {
        return Err(CliError::Usage(format!(
            "--p must be even and at least 2, got {}",
            a.p
        )));
    }
    if a.q == 0 {
        return Err(CliError::Usage("--q must be at least 1".to_string()));
    }
    let prec = a.common.precision_bits;
    let tol = parse_tol(&a.common.tol, prec)?;
    let model = a.common.model;

    let low = cw_lower(model, a.p, a.q, prec, &tol)?;
    let digits = decimal_digits(prec);

    let mut body = String::new();
    let _ = writeln!(body, "format=lower-report-v1");
    let mut cfg = common_config(&a.common);
    cfg.push(("p", a.p.to_string()));
    cfg.push(("q", a.q.to_string()));
    body.push_str(&config_block(&cfg));
    let _ = writeln!(body, "cylinder_widths={},{}", a.p + 2 * a.q, 2 * a.q);
    let _ = writeln!(body, "kappa_lower_bound={}", low.to_decimal_down(digits));

    print!("{body}");
    println!("wall_seconds={:.3}", t0.elapsed().as_secs_f64());
    if let Some(out) = &a.out {
        atomic_write_text(out, &body)?;
        println!("report_file={}", out.display());
    }
    Ok(())
}

// ------------------------------------------------------------------ study

fn cmd_study(a: StudyArgs) -> Result<(), CliError> {
    let t0 = Instant::now();
    if a.m < 2 || a.m % 2 != 0 {
        return Err(CliError::Usage(format!(
            "--m must be even and at least 2, got {}",
            a.m
        )));
    }
    if a.n == 0 {
        return Err(CliError::Usage("--n must be at least 1 (the grid is n = 1..=N)".to_string()));
    }
    let prec = a.common.precision_bits;
    let bprec = a.bound_precision_bits.unwrap_or(prec);
    check_precision(bprec, "--bound-precision-bits")?;
    let tol = parse_tol(&a.common.tol, prec)?;
    let model = a.common.model;

    // One exact oracle for the whole column: Λ°(m)^{1/m} from the midpoint of
    // a tight enclosure.
    let dom = dominant_eigenvalue(model, a.m, Boundary::Cyclic, bprec, &tol)?;
    let exact_root = dom.lambda.root(a.m as u32);
    let exact_dec = exact_root.to_decimal();

    let mut rows = String::new();
    for n in 1..=a.n {
        let schedule = GrowthSchedule {
            target_n: n,
            growth_factor: 2.0,
            polish_iters: 50,
            tol: tol.clone(),
            max_iters: a.common.max_iters,
        };
        let state = ctmrg_solve(model, prec, &schedule)?;
        let mut aset = AnsatzSet::from_state(&state)?;
        if bprec != aset.p_bits {
            aset = aset.at_precision(bprec);
        }
        let report = upper_bound_checked(&aset, &BoundRun::new(a.m))?;
        let bound = &report.max.ratio_root;
        let diff = bound.sub(&exact_root);
        let log10_err = if diff.is_positive() {
            format!("{:.4}", diff.to_f64().log10())
        } else {
            "NA".to_string()
        };
        let line = format!("{} {} {} {} {}", a.m, n, bound.to_decimal(), exact_dec, log10_err);
        println!("{line}");
        let _ = writeln!(rows, "{line}");
    }

    let out = a
        .out
        .unwrap_or_else(|| PathBuf::from(format!("{}-m{}-study.dat", model.token(), a.m)));
    let mut head = String::new();
    let _ = writeln!(head, "# format=study-v1");
    let mut cfg = common_config(&a.common);
    cfg.push(("m", a.m.to_string()));
    cfg.push(("n_max", a.n.to_string()));
    cfg.push(("bound_precision_bits", bprec.to_string()));
    for line in config_block(&cfg).lines() {
        let _ = writeln!(head, "# {line}");
    }
    let _ = writeln!(head, "# columns: m n upper_bound exact_root log10_error");
    atomic_write_text(&out, &format!("{head}{rows}"))?;
    println!("study_file={}", out.display());
    println!("wall_seconds={:.3}", t0.elapsed().as_secs_f64());
    Ok(())
}

// ----------------------------------------------------------------- verify

type Check = Result<(), String>;

fn cmd_verify(a: VerifyArgs) -> Result<(), CliError> {
    let t0 = Instant::now();
    let models: Vec<Model> = match a.model {
        Some(m) => vec![m],
        None => ALL_MODELS.to_vec(),
    };

    // Two shared F sets per model: the 0/1 seed (exact arithmetic) and a
    // small converged state (nontrivial entries).
    let mut states: Vec<(Model, CTMState, CTMState)> = Vec::new();
    for &model in &models {
        let seed = init_state(model, 192);
        let tol = HPReal::parse_decimal("1e-20", 192).expect("literal parses");
        let schedule = GrowthSchedule {
            target_n: 2,
            growth_factor: 2.0,
            polish_iters: 5,
            tol,
            max_iters: 500,
        };
        let solved = ctmrg_solve(model, 192, &schedule).map_err(CliError::Ctmrg)?;
        states.push((model, seed, solved));
    }

    let mut checks: Vec<(String, Check)> = vec![
        ("face-weight-factorization".to_string(), check_face_weights(&models)),
        ("bracelet-enumeration-brute-force".to_string(), check_bracelets(&models)),
        ("exact-known-eigenvalues".to_string(), check_exact_known()),
    ];
    for (model, seed, solved) in &states {
        let tag = model.token();
        checks.push((
            format!("vpsi-transfer-identity-{tag}"),
            check_vpsi_identity(*model, &[seed, solved]),
        ));
        checks.push((
            format!("orbit-bit-invariance-{tag}"),
            check_orbit_invariance(*model, solved),
        ));
    }
    checks.push(("shard-file-round-trip".to_string(), check_shard_files()));
    if let Some(path) = &a.f_file {
        checks.push(("f-file-integrity".to_string(), check_f_file(path, a.model)));
    }

    let total = checks.len();
    let mut failed = 0usize;
    for (name, res) in &checks {
        match res {
            Ok(()) => println!("PASS {name}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {name}: {msg}");
            }
        }
    }
    println!("checks_passed={} checks_total={total}", total - failed);
    println!("wall_seconds={:.3}", t0.elapsed().as_secs_f64());
    if failed > 0 {
        return Err(CliError::VerifyFailed { failed, total });
    }
    Ok(())
}

/// ω(a b; c d) must equal the product of its six pairwise legality factors:
/// vertical (c,a) (d,b), horizontal (c,d) (a,b), diagonal (c,b) (d,a).
fn check_face_weights(models: &[Model]) -> Check {
    for &model in models {
        for bits in 0..16u8 {
            let (a, b, c, d) = (bits >> 3 & 1, bits >> 2 & 1, bits >> 1 & 1, bits & 1);
            let pairs = [
                (c, a, Direction::Vertical),
                (d, b, Direction::Vertical),
                (c, d, Direction::Horizontal),
                (a, b, Direction::Horizontal),
                (c, b, Direction::DiagonalNe),
                (d, a, Direction::DiagonalNw),
            ];
            let expect = pairs
                .iter()
                .all(|&(x, y, dir)| pair_legal(model, Spin::from_bit(x), Spin::from_bit(y), dir));
            let got = face_weight_bits(model, a, b, c, d) == 1;
            if expect != got {
                return Err(format!(
                    "model {} face a={a} b={b} c={c} d={d}: weight {} but pairwise product {}",
                    model.token(),
                    u8::from(got),
                    u8::from(expect)
                ));
            }
        }
    }
    Ok(())
}

fn check_bracelets(models: &[Model]) -> Check {
    for &model in models {
        for m in 2..=12usize {
            let brute: std::collections::BTreeSet<u64> = (0..1u64 << m)
                .filter(|&bits| column_legal_bits(model, bits, m, Boundary::Cyclic))
                .map(|bits| canonical_form(bits, m))
                .collect();
            let listed: Vec<u64> = enumerate_bracelets(model, m).map(|b| b.bits).collect();
            let brute_vec: Vec<u64> = brute.into_iter().collect();
            if listed != brute_vec {
                return Err(format!(
                    "model {} m={m}: enumeration gives {} bracelets, brute force {}",
                    model.token(),
                    listed.len(),
                    brute_vec.len()
                ));
            }
            if count_bracelets(model, m) != listed.len() as u64 {
                return Err(format!("model {} m={m}: count disagrees with stream", model.token()));
            }
        }
    }
    Ok(())
}

fn check_exact_known() -> Check {
    let prec = 192;
    let tol = HPReal::parse_decimal("1e-30", prec).expect("literal parses");
    let close = |got: &HPReal, want: &str, what: &str| -> Check {
        let w = HPReal::parse_decimal(want, prec).expect("literal parses");
        let diff = got.sub(&w).abs();
        let lim = HPReal::parse_decimal("1e-28", prec).expect("literal parses");
        if diff > lim {
            return Err(format!("{what}: got {}, want {want}", got.to_decimal()));
        }
        Ok(())
    };

    let hs2 = dominant_eigenvalue(Model::HardSquares, 2, Boundary::Cyclic, prec, &tol)
        .map_err(|e| e.to_string())?;
    if hs2.dim != 3 {
        return Err(format!("hard-squares cylinder w=2 has {} states, want 3", hs2.dim));
    }
    close(&hs2.lambda, "2.41421356237309504880168872420969807857", "hard-squares Λ°(2)")?;

    let hs1 = dominant_eigenvalue(Model::HardSquares, 1, Boundary::Path, prec, &tol)
        .map_err(|e| e.to_string())?;
    close(&hs1.lambda, "1.61803398874989484820458683436563811772", "hard-squares Λ(1)")?;

    let nak2 = dominant_eigenvalue(Model::Nak, 2, Boundary::Cyclic, prec, &tol)
        .map_err(|e| e.to_string())?;
    close(&nak2.lambda, "2.0", "nak Λ°(2)")?;

    let rwim2 = dominant_eigenvalue(Model::Rwim, 2, Boundary::Cyclic, prec, &tol)
        .map_err(|e| e.to_string())?;
    if rwim2.dim != 4 {
        return Err(format!("rwim cylinder w=2 has {} states, want 4", rwim2.dim));
    }
    close(&rwim2.lambda, "2.302775637731994646559610633735247973126", "rwim Λ°(2)")?;

    let hs4p = enumerate_states(Model::HardSquares, 4, Boundary::Path).map_err(|e| e.to_string())?;
    let hs4c = enumerate_states(Model::HardSquares, 4, Boundary::Cyclic).map_err(|e| e.to_string())?;
    if hs4p.len() != 8 || hs4c.len() != 7 {
        return Err(format!(
            "hard-squares w=4 state counts: path {} (want 8), cyclic {} (want 7)",
            hs4p.len(),
            hs4c.len()
        ));
    }
    Ok(())
}

/// vψ evaluated as a cyclic trace of F_l factors must match one application
/// of the exact cylinder transfer matrix to the ψ vector.
fn check_vpsi_identity(model: Model, states: &[&CTMState]) -> Check {
    let m = 6usize;
    let space = enumerate_states(model, m, Boundary::Cyclic).map_err(|e| e.to_string())?;
    for state in states {
        let aset = AnsatzSet::from_state(state).map_err(|e| e.to_string())?;
        let mut x: Vec<HPReal> = Vec::with_capacity(space.len());
        for &bits in &space.states {
            let b = canonicalize(model, bits, m).map_err(|e| e.to_string())?;
            x.push(psi(&aset, &b));
        }
        let y = tm_apply(&space, &x).map_err(|e| e.to_string())?;
        let rel_lim = HPReal::parse_decimal("1e-40", aset.p_bits).expect("literal parses");
        for b in enumerate_bracelets(model, m) {
            let direct = vpsi(&aset, &b);
            let idx = space
                .index_of(b.bits)
                .ok_or_else(|| format!("bracelet {} missing from the state space", b.string()))?;
            let want = &y[idx];
            let scale = if want.is_positive() { want.clone() } else { HPReal::from_u64(1, aset.p_bits) };
            let rel = direct.sub(want).abs().div(&scale);
            if rel > rel_lim {
                return Err(format!(
                    "bracelet {} at n={}: trace {} vs transfer {}",
                    b.string(),
                    aset.n,
                    direct.to_decimal(),
                    want.to_decimal()
                ));
            }
        }
    }
    Ok(())
}

fn rotate(bits: u64, m: usize, k: usize) -> u64 {
    let mask = (1u64 << m) - 1;
    ((bits >> k) | (bits << (m - k))) & mask
}

fn reflect(bits: u64, m: usize) -> u64 {
    let mut out = 0u64;
    for i in 0..m {
        if bits >> i & 1 == 1 {
            out |= 1 << (m - 1 - i);
        }
    }
    out
}

/// Every member of a rotation/reflection orbit must produce bit-identical
/// ψ, vψ and ratio roots — the canonicalization makes this exact, not
/// approximate.
fn check_orbit_invariance(model: Model, state: &CTMState) -> Check {
    let m = 6usize;
    let aset = AnsatzSet::from_state(state).map_err(|e| e.to_string())?;
    for b in enumerate_bracelets(model, m) {
        let base = ratio(&aset, &b).map_err(|e| e.to_string())?;
        for k in 0..m {
            for refl in [false, true] {
                let mut bits = rotate(b.bits, m, k);
                if refl {
                    bits = reflect(bits, m);
                }
                let got = ratio_of_state(&aset, bits, m).map_err(|e| e.to_string())?;
                if got.psi.to_decimal() != base.psi.to_decimal()
                    || got.vpsi.to_decimal() != base.vpsi.to_decimal()
                    || got.ratio_root.to_decimal() != base.ratio_root.to_decimal()
                {
                    return Err(format!(
                        "orbit of {} broke at rotation {k} reflect {refl}",
                        b.string()
                    ));
                }
            }
        }
    }
    Ok(())
}

fn check_shard_files() -> Check {
    let dir = std::env::temp_dir().join(format!("kappa-verify-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let result = shard_file_round_trip(&dir);
    let _ = std::fs::remove_dir_all(&dir);
    result
}

fn shard_file_round_trip(dir: &Path) -> Check {
    let model = Model::HardSquares;
    let state = init_state(model, 128);
    let aset = AnsatzSet::from_state(&state).map_err(|e| e.to_string())?;
    let spec = shard_range(model, 6, 2, 1).map_err(|e| e.to_string())?;
    let policy = CheckpointPolicy::in_dir(dir);
    let summary = run_shard_to_file(&aset, &spec, dir, &policy, false).map_err(|e| e.to_string())?;
    if summary.status != ShardStatus::Complete {
        return Err("shard did not complete".to_string());
    }
    let path = kappa_core::bound::shard_result_path(dir, &spec);
    let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
    let parsed = parse_shard_result(&text, &aset, &spec).map_err(|e| e.to_string())?;
    match (&parsed.max, &summary.max) {
        (Some(p), Some(s)) if p.ratio_root.to_decimal() == s.ratio_root.to_decimal() => {}
        _ => return Err("parsed shard max disagrees with the computed one".to_string()),
    }

    // One flipped byte must be caught by the checksum.
    let mut corrupt = text.clone().into_bytes();
    let pos = text.find("ratio_root=").ok_or("no ratio_root line")? + "ratio_root=".len() + 1;
    corrupt[pos] = if corrupt[pos] == b'0' { b'1' } else { b'0' };
    let corrupt = String::from_utf8(corrupt).map_err(|e| e.to_string())?;
    match parse_shard_result(&corrupt, &aset, &spec) {
        Err(BoundError::Parse(_)) | Err(BoundError::ChecksumMismatch { .. }) => {}
        other => return Err(format!("corrupted shard file parsed as {other:?}")),
    }

    // Checkpoints: round trip, and a precision-mismatched one is ignored.
    let ck = kappa_core::bound::checkpoint_path(dir, &spec);
    let progress = ShardProgress {
        processed: 1,
        max: summary.max.clone(),
        min: summary.min.clone(),
    };
    write_checkpoint(&ck, &aset, &spec, &progress).map_err(|e| e.to_string())?;
    let back = read_checkpoint(&ck, &aset, &spec).ok_or("checkpoint did not read back")?;
    if back.processed != 1 {
        return Err("checkpoint processed count drifted".to_string());
    }
    let other = aset.at_precision(256);
    if read_checkpoint(&ck, &other, &spec).is_some() {
        return Err("checkpoint for a different precision was accepted".to_string());
    }
    Ok(())
}

fn check_f_file(path: &Path, model: Option<Model>) -> Check {
    let state = load_state(path, model).map_err(|e| e.to_string())?;
    let text = serialize_state(&state).map_err(|e| e.to_string())?;
    let checksum = state_checksum(&text).ok_or("re-serialization lost its checksum")?;
    println!(
        "f_file={} model={} n={} precision_bits={} iterations={} f_checksum={}",
        path.display(),
        state.model.token(),
        state.n,
        state.p_bits,
        state.iteration,
        checksum
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_and_reflection_are_involutions() {
        let bits = 0b001011u64;
        assert_eq!(rotate(rotate(bits, 6, 2), 6, 4), bits);
        assert_eq!(reflect(reflect(bits, 6), 6), bits);
        assert_eq!(reflect(0b100000, 6), 0b000001);
    }

    #[test]
    fn config_block_is_ordered() {
        let block = config_block(&[("b", "2".to_string()), ("a", "1".to_string())]);
        assert_eq!(block, "config_b=2\nconfig_a=1\n");
    }

    #[test]
    fn f64_flags_render_compactly() {
        assert_eq!(fmt_f64(2.0), "2");
        assert_eq!(fmt_f64(1.5), "1.5");
    }
}
