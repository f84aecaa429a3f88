//! The trace-ratio upper bound: evaluates ψ_σ = Tr[F(σ₁,σ₂)…F(σ_m,σ₁)]
//! and (V°ψ)_σ = Tr[F_l(σ₁,σ₂)…F_l(σ_m,σ₁)] over all legal bracelets,
//! verifies positivity, and takes the maximum of (vψ/ψ)^{1/m}. For even m
//! that maximum upper-bounds the cylinder eigenvalue root and hence the
//! growth rate; the minimum is a quality diagnostic only.
//!
//! Work is split into bracelet-range shards. Shard results and periodic
//! checkpoints go to plain checksummed text files, so a run can be killed
//! and resumed bit-exactly, and worker count can never affect output bytes:
//! every shard is a pure function of (F set, shard range), and aggregation
//! folds in shard-index order.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use sha2::{Digest, Sha256};

use crate::bracelets::{
    canonicalize, count_bracelets, enumerate_bracelets, shard_range, Bracelet, BraceletError,
    ShardSpec,
};
use crate::ctmrg::{fl_blocks, serialize_state, state_checksum, CTMState, CtmrgError};
use crate::hp::{sym_eigen, HPMatrix, HPReal, HpError};
use crate::spin::Model;

#[derive(Debug, thiserror::Error)]
pub enum BoundError {
    #[error("bound width m={0} must be even (the eigenvalue comparison needs an even power)")]
    OddWidth(usize),
    #[error("bracelet width {0} exceeds the 63-bit limit")]
    WidthTooLarge(usize),
    #[error(
        "ansatz not positive at bracelet {bracelet}: psi={psi} vpsi={vpsi}; \
         the bound is invalid for this F set"
    )]
    AnsatzNotPositive { bracelet: String, psi: String, vpsi: String },
    #[error("missing shard results {missing:?} of {count}; no bound can be emitted")]
    IncompleteShards { missing: Vec<u64>, count: u64 },
    #[error("F checksum mismatch: shard data carries {found}, ansatz has {expected}")]
    ChecksumMismatch { found: String, expected: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("malformed shard file: {0}")]
    Parse(String),
    #[error(transparent)]
    Bracelet(#[from] BraceletError),
    #[error(transparent)]
    Ctmrg(#[from] CtmrgError),
    #[error(transparent)]
    Hp(#[from] HpError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The F matrices plus their expanded F_l companions, immutable for the
/// duration of a bound run.
#[derive(Debug, Clone)]
pub struct AnsatzSet {
    pub model: Model,
    pub n: usize,
    pub p_bits: u32,
    pub f: [[HPMatrix; 2]; 2],
    pub fl: [[HPMatrix; 2]; 2],
    /// Human-readable record of any similarity transform applied to F.
    pub basis_note: String,
    /// Checksum of the canonical serialization of the originating state.
    pub f_checksum: String,
}

impl AnsatzSet {
    /// Build from a solved (or loaded) CTM state.
    pub fn from_state(state: &CTMState) -> Result<AnsatzSet, BoundError> {
        let n = state.n;
        for a in 0..2 {
            for b in 0..2 {
                if state.f[a][b].rows() != n || state.f[a][b].cols() != n {
                    return Err(BoundError::DimensionMismatch(format!(
                        "F({a},{b}) is {}x{}, state says n={n}",
                        state.f[a][b].rows(),
                        state.f[a][b].cols()
                    )));
                }
            }
        }
        let text = serialize_state(state)?;
        let f_checksum = state_checksum(&text)
            .ok_or_else(|| BoundError::Parse("serialized state lacks a checksum".to_string()))?;
        Ok(AnsatzSet {
            model: state.model,
            n,
            p_bits: state.p_bits,
            f: state.f.clone(),
            fl: fl_blocks(state.model, &state.f, state.p_bits),
            basis_note: "identity".to_string(),
            f_checksum,
        })
    }

    /// The same F matrices carried at a different working precision
    /// (raising is exact). The originating checksum is kept: this is a
    /// re-evaluation policy, not a different ansatz.
    pub fn at_precision(&self, p_bits: u32) -> AnsatzSet {
        let conv = |m: &HPMatrix| {
            HPMatrix::from_fn(m.rows(), m.cols(), |i, j| m.at(i, j).to_prec(p_bits))
        };
        let f = [
            [conv(&self.f[0][0]), conv(&self.f[0][1])],
            [conv(&self.f[1][0]), conv(&self.f[1][1])],
        ];
        let fl = fl_blocks(self.model, &f, p_bits);
        AnsatzSet {
            model: self.model,
            n: self.n,
            p_bits,
            f,
            fl,
            basis_note: self.basis_note.clone(),
            f_checksum: self.f_checksum.clone(),
        }
    }
}

/// Conjugate every F by the orthogonal eigenbasis Q of F(vacant,vacant)
/// (F(a,b) → QᵀF(a,b)Q) and rebuild F_l. Traces — hence all ratios — are
/// unchanged up to roundoff, while F(vacant,vacant) becomes diagonal.
pub fn similarity_reduce(aset: &AnsatzSet, tol: &HPReal) -> Result<AnsatzSet, BoundError> {
    let eig = sym_eigen(&aset.f[0][0], tol)?;
    let q = &eig.vectors;
    let conj = |m: &HPMatrix| {
        q.transpose()
            .matmul(m)
            .and_then(|t| t.matmul(q))
            .expect("n×n conjugation")
    };
    let f = [
        [conj(&aset.f[0][0]), conj(&aset.f[0][1])],
        [conj(&aset.f[1][0]), conj(&aset.f[1][1])],
    ];
    let fl = fl_blocks(aset.model, &f, aset.p_bits);
    let basis_note = if aset.basis_note == "identity" {
        "eigenbasis of F(vacant,vacant)".to_string()
    } else {
        format!("{}; then eigenbasis of F(vacant,vacant)", aset.basis_note)
    };
    Ok(AnsatzSet {
        model: aset.model,
        n: aset.n,
        p_bits: aset.p_bits,
        f,
        fl,
        basis_note,
        f_checksum: aset.f_checksum.clone(),
    })
}

/// One bracelet's trace data. `ratio_root` is (vpsi/psi)^{1/m} with the
/// rounding direction chosen by the caller (up for maxima, down for the
/// min diagnostic).
#[derive(Debug, Clone)]
pub struct RatioRecord {
    pub bracelet: Bracelet,
    pub psi: HPReal,
    pub vpsi: HPReal,
    pub ratio_root: HPReal,
}

/// Trace of an ordered product of square matrices, renormalizing by the
/// power of two of the running max entry so that no intermediate drifts to
/// extreme exponents over long products. The scaling is exact, so the
/// result is identical to the naive product at the same precision.
fn trace_product(factors: &[&HPMatrix], prec: u32) -> HPReal {
    debug_assert!(!factors.is_empty());
    let mut prod = factors[0].clone();
    let mut scale2: i64 = 0;
    for f in &factors[1..] {
        prod = prod.matmul(f).expect("cycle factors are conformant");
        let mx = prod.max_abs();
        match mx.exponent() {
            None => return HPReal::zero(prec), // product annihilated
            Some(e) => {
                prod = prod.ldexp(-e);
                scale2 += i64::from(e);
            }
        }
    }
    let shift = i32::try_from(scale2).expect("trace scale fits an i32 exponent");
    prod.trace().ldexp(shift)
}

fn spin_at(bits: u64, i: usize, m: usize) -> usize {
    ((bits >> (m - 1 - i)) & 1) as usize
}

fn cycle_factors<'a>(mats: &'a [[HPMatrix; 2]; 2], bracelet: &Bracelet) -> Vec<&'a HPMatrix> {
    let m = bracelet.m;
    (0..m)
        .map(|i| {
            let a = spin_at(bracelet.bits, i, m);
            let b = spin_at(bracelet.bits, (i + 1) % m, m);
            &mats[a][b]
        })
        .collect()
}

/// ψ_σ: trace of the F cycle.
pub fn psi(aset: &AnsatzSet, bracelet: &Bracelet) -> HPReal {
    trace_product(&cycle_factors(&aset.f, bracelet), aset.p_bits)
}

/// (V°ψ)_σ: trace of the F_l cycle, which sums ψ over all target states of
/// one cylinder transfer step.
pub fn vpsi(aset: &AnsatzSet, bracelet: &Bracelet) -> HPReal {
    trace_product(&cycle_factors(&aset.fl, bracelet), aset.p_bits)
}

/// Both traces and the up-rounded ratio root. Non-positive ψ or vψ is a
/// hard error: the whole bound is invalid for this F set, and the caller
/// must abort rather than skip the state.
pub fn ratio(aset: &AnsatzSet, bracelet: &Bracelet) -> Result<RatioRecord, BoundError> {
    let p = psi(aset, bracelet);
    let v = vpsi(aset, bracelet);
    if !p.is_positive() || !v.is_positive() {
        return Err(BoundError::AnsatzNotPositive {
            bracelet: bracelet.string(),
            psi: p.to_decimal(),
            vpsi: v.to_decimal(),
        });
    }
    let m = u32::try_from(bracelet.m).expect("bracelet length fits u32");
    let ratio_root = v.div_up(&p).root_up(m);
    Ok(RatioRecord { bracelet: bracelet.clone(), psi: p, vpsi: v, ratio_root })
}

fn ratio_root_down(rec: &RatioRecord) -> HPReal {
    let m = u32::try_from(rec.bracelet.m).expect("bracelet length fits u32");
    rec.vpsi.div_down(&rec.psi).root_down(m)
}

/// Ratio for an arbitrary legal cut state: canonicalizes to its bracelet
/// first, so every member of a rotation/reflection orbit yields the same
/// output bit for bit.
pub fn ratio_of_state(aset: &AnsatzSet, bits: u64, m: usize) -> Result<RatioRecord, BoundError> {
    let b = canonicalize(aset.model, bits, m)?;
    ratio(aset, &b)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ShardStatus {
    Complete,
    /// Positivity failed at the named bracelet; traces recorded for the report.
    Aborted { bracelet: String, psi: String, vpsi: String },
}

/// One shard's outcome: extremes (absent only for an empty or immediately
/// aborted shard) plus the processed count.
#[derive(Debug, Clone)]
pub struct ShardSummary {
    pub spec: ShardSpec,
    pub processed: u64,
    /// Max record, ratio_root rounded up.
    pub max: Option<RatioRecord>,
    /// Min record, ratio_root rounded down (diagnostic).
    pub min: Option<RatioRecord>,
    pub status: ShardStatus,
}

/// Where and how often shard progress is checkpointed.
#[derive(Debug, Clone)]
pub struct CheckpointPolicy {
    pub dir: Option<PathBuf>,
    /// Write after this many bracelets (0 disables the count trigger).
    pub every_bracelets: u64,
    /// Write after this many seconds (0 disables the time trigger).
    pub every_secs: u64,
}

impl CheckpointPolicy {
    pub fn none() -> CheckpointPolicy {
        CheckpointPolicy { dir: None, every_bracelets: 0, every_secs: 0 }
    }

    pub fn in_dir(dir: &Path) -> CheckpointPolicy {
        CheckpointPolicy {
            dir: Some(dir.to_path_buf()),
            every_bracelets: 100_000,
            every_secs: 60,
        }
    }
}

/// Running extremes plus position — the whole resumable state of a shard.
#[derive(Debug, Clone)]
pub struct ShardProgress {
    pub processed: u64,
    pub max: Option<RatioRecord>,
    pub min: Option<RatioRecord>,
}

impl ShardProgress {
    fn fresh() -> ShardProgress {
        ShardProgress { processed: 0, max: None, min: None }
    }

    fn absorb(&mut self, rec: RatioRecord) {
        let down = ratio_root_down(&rec);
        match &self.max {
            Some(cur) if rec.ratio_root <= cur.ratio_root => {}
            _ => self.max = Some(rec.clone()),
        }
        match &self.min {
            Some(cur) if down >= cur.ratio_root => {}
            _ => {
                let mut min_rec = rec;
                min_rec.ratio_root = down;
                self.min = Some(min_rec);
            }
        }
        self.processed += 1;
    }
}

pub fn checkpoint_path(dir: &Path, shard: &ShardSpec) -> PathBuf {
    dir.join(format!("shard-{:04}of{:04}.ck", shard.shard_index, shard.shard_count))
}

pub fn shard_result_path(dir: &Path, shard: &ShardSpec) -> PathBuf {
    dir.join(format!("shard-{:04}of{:04}.result", shard.shard_index, shard.shard_count))
}

fn atomic_write(path: &Path, text: &str) -> Result<(), std::io::Error> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, text)?;
    std::fs::rename(&tmp, path)
}

fn header_lines(aset: &AnsatzSet, shard: &ShardSpec) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "model={}", aset.model.token());
    let _ = writeln!(s, "m={}", shard.m);
    let _ = writeln!(s, "n={}", aset.n);
    let _ = writeln!(s, "precision_bits={}", aset.p_bits);
    let _ = writeln!(s, "shard_index={}", shard.shard_index);
    let _ = writeln!(s, "shard_count={}", shard.shard_count);
    let _ = writeln!(s, "f_checksum={}", aset.f_checksum);
    s
}

fn finish_with_checksum(mut body: String) -> String {
    let digest = Sha256::digest(body.as_bytes());
    let _ = writeln!(body, "checksum={}", hex::encode(digest));
    body
}

/// Split off and verify the trailing checksum line; returns the payload.
fn verify_checksum(text: &str) -> Option<&str> {
    let idx = text.rfind("\nchecksum=")?;
    let payload = &text[..idx + 1];
    let stored = text[idx + 1 + "checksum=".len()..].trim_end();
    let computed = hex::encode(Sha256::digest(payload.as_bytes()));
    (stored == computed).then_some(payload)
}

fn record_lines(prefix: &str, rec: &RatioRecord) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{prefix}_bracelet={} {prefix}_ratio_root={}",
        rec.bracelet.string(),
        rec.ratio_root.to_decimal()
    );
    let _ = writeln!(s, "{prefix}_psi={} {prefix}_vpsi={}", rec.psi.to_decimal(), rec.vpsi.to_decimal());
    s
}

const CK_FORMAT: &str = "format=bound-ck-v1";
const SHARD_FORMAT: &str = "format=bound-shard-v1";
const REPORT_FORMAT: &str = "format=bound-report-v1";

/// Persist mid-shard progress (atomic replace).
pub fn write_checkpoint(
    path: &Path,
    aset: &AnsatzSet,
    shard: &ShardSpec,
    progress: &ShardProgress,
) -> Result<(), BoundError> {
    let mut s = String::new();
    let _ = writeln!(s, "{CK_FORMAT}");
    s.push_str(&header_lines(aset, shard));
    let _ = writeln!(s, "processed={}", progress.processed);
    if let Some(rec) = &progress.max {
        s.push_str(&record_lines("max", rec));
    }
    if let Some(rec) = &progress.min {
        s.push_str(&record_lines("min", rec));
    }
    atomic_write(path, &finish_with_checksum(s))?;
    Ok(())
}

/// Load a checkpoint if it exists, is intact, and matches this exact run
/// configuration. Any mismatch or corruption yields None — checkpoints are
/// caches, and a stale one must never poison a run.
pub fn read_checkpoint(
    path: &Path,
    aset: &AnsatzSet,
    shard: &ShardSpec,
) -> Option<ShardProgress> {
    let text = std::fs::read_to_string(path).ok()?;
    let payload = verify_checksum(&text)?;
    let mut kv = KvLines::new(payload);
    if kv.next_exact(CK_FORMAT).is_none() {
        return None;
    }
    kv.match_header(aset, shard).ok()?;
    let processed: u64 = kv.take("processed")?.parse().ok()?;
    let max = kv.take_record("max", aset.p_bits);
    let min = kv.take_record("min", aset.p_bits);
    if (max.is_none() || min.is_none()) && processed > 0 {
        return None;
    }
    Some(ShardProgress { processed, max, min })
}

/// Simple sequential key=value line reader over a payload.
struct KvLines<'a> {
    lines: std::iter::Peekable<std::str::Lines<'a>>,
}

impl<'a> KvLines<'a> {
    fn new(payload: &'a str) -> KvLines<'a> {
        KvLines { lines: payload.lines().peekable() }
    }

    fn next_exact(&mut self, want: &str) -> Option<()> {
        (self.lines.next()? == want).then_some(())
    }

    /// Consume the next line if it starts with `key=`; returns the value.
    fn take(&mut self, key: &str) -> Option<&'a str> {
        let line = self.lines.peek()?;
        let rest = line.strip_prefix(key)?.strip_prefix('=')?;
        self.lines.next();
        Some(rest)
    }

    /// Parse the two-line record block written by `record_lines`.
    fn take_record(&mut self, prefix: &str, p_bits: u32) -> Option<RatioRecord> {
        let line1 = self.take_pair_line(&format!("{prefix}_bracelet"), &format!("{prefix}_ratio_root"))?;
        let line2 = self.take_pair_line(&format!("{prefix}_psi"), &format!("{prefix}_vpsi"))?;
        let bracelet = Bracelet::from_string(line1.0)?;
        let num = |s: &str| HPReal::parse_decimal(s, p_bits).ok();
        Some(RatioRecord {
            bracelet,
            psi: num(line2.0)?,
            vpsi: num(line2.1)?,
            ratio_root: num(line1.1)?,
        })
    }

    /// Consume a `k1=v1 k2=v2` line.
    fn take_pair_line(&mut self, k1: &str, k2: &str) -> Option<(&'a str, &'a str)> {
        let line = self.lines.peek()?;
        let (first, second) = line.split_once(' ')?;
        let v1 = first.strip_prefix(k1)?.strip_prefix('=')?;
        let v2 = second.strip_prefix(k2)?.strip_prefix('=')?;
        self.lines.next();
        Some((v1, v2))
    }

    fn match_header(&mut self, aset: &AnsatzSet, shard: &ShardSpec) -> Result<(), String> {
        let mut want = |key: &str, value: String| -> Result<(), String> {
            match self.take(key) {
                Some(v) if v == value => Ok(()),
                Some(v) => Err(format!("{key}: file has {v}, run has {value}")),
                None => Err(format!("missing {key}")),
            }
        };
        want("model", aset.model.token().to_string())?;
        want("m", shard.m.to_string())?;
        want("n", aset.n.to_string())?;
        want("precision_bits", aset.p_bits.to_string())?;
        want("shard_index", shard.shard_index.to_string())?;
        want("shard_count", shard.shard_count.to_string())?;
        want("f_checksum", aset.f_checksum.clone())?;
        Ok(())
    }
}

/// Stream the shard's bracelets, maintaining running extremes, optionally
/// seeded from and checkpointed to `policy.dir`. Positivity failure is a
/// hard error (the caller records the aborted shard).
pub fn run_shard(
    aset: &AnsatzSet,
    shard: &ShardSpec,
    policy: &CheckpointPolicy,
) -> Result<ShardSummary, BoundError> {
    match run_shard_core(aset, shard, policy)? {
        (progress, None) => Ok(ShardSummary {
            spec: shard.clone(),
            processed: progress.processed,
            max: progress.max,
            min: progress.min,
            status: ShardStatus::Complete,
        }),
        (_, Some(err)) => Err(err),
    }
}

/// The streaming loop. Returns the progress reached plus the positivity
/// failure if one occurred (so the caller can persist partial state).
fn run_shard_core(
    aset: &AnsatzSet,
    shard: &ShardSpec,
    policy: &CheckpointPolicy,
) -> Result<(ShardProgress, Option<BoundError>), BoundError> {
    let ck_path = policy.dir.as_ref().map(|d| checkpoint_path(d, shard));
    let mut progress = ck_path
        .as_ref()
        .and_then(|p| read_checkpoint(p, aset, shard))
        .unwrap_or_else(ShardProgress::fresh);
    if progress.processed > shard.len() {
        // A checkpoint claiming more work than the shard holds is corrupt.
        progress = ShardProgress::fresh();
    }

    let first = shard.start + progress.processed;
    let stream = enumerate_bracelets(aset.model, shard.m)
        .skip(usize::try_from(first).expect("bracelet index fits usize"))
        .take(usize::try_from(shard.end - first).expect("shard length fits usize"));

    let mut last_write = Instant::now();
    for bracelet in stream {
        match ratio(aset, &bracelet) {
            Ok(rec) => progress.absorb(rec),
            Err(err @ BoundError::AnsatzNotPositive { .. }) => {
                return Ok((progress, Some(err)));
            }
            Err(err) => return Err(err),
        }
        if let Some(path) = &ck_path {
            let count_due = policy.every_bracelets > 0
                && progress.processed % policy.every_bracelets == 0;
            let time_due =
                policy.every_secs > 0 && last_write.elapsed().as_secs() >= policy.every_secs;
            if count_due || time_due {
                write_checkpoint(path, aset, shard, &progress)?;
                last_write = Instant::now();
            }
        }
    }
    Ok((progress, None))
}

/// Render a shard result file. The summary's extremes lines are omitted
/// only when nothing was processed.
pub fn render_shard_result(aset: &AnsatzSet, summary: &ShardSummary) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{SHARD_FORMAT}");
    s.push_str(&header_lines(aset, &summary.spec));
    if let Some(rec) = &summary.max {
        s.push_str(&record_lines("max", rec));
    }
    if let Some(rec) = &summary.min {
        s.push_str(&record_lines("min", rec));
    }
    let _ = writeln!(s, "bracelets_processed={}", summary.processed);
    match &summary.status {
        ShardStatus::Complete => {
            let _ = writeln!(s, "status=complete");
        }
        ShardStatus::Aborted { bracelet, psi, vpsi } => {
            let _ = writeln!(s, "status=aborted");
            let _ = writeln!(s, "aborted_bracelet={bracelet}");
            let _ = writeln!(s, "aborted_psi={psi}");
            let _ = writeln!(s, "aborted_vpsi={vpsi}");
        }
    }
    finish_with_checksum(s)
}

/// Parse and validate a shard result file against this run's parameters.
pub fn parse_shard_result(
    text: &str,
    aset: &AnsatzSet,
    shard: &ShardSpec,
) -> Result<ShardSummary, BoundError> {
    let payload = verify_checksum(text)
        .ok_or_else(|| BoundError::Parse("shard file checksum missing or wrong".to_string()))?;
    let mut kv = KvLines::new(payload);
    kv.next_exact(SHARD_FORMAT)
        .ok_or_else(|| BoundError::Parse("not a shard result file".to_string()))?;
    // The f_checksum line gets its dedicated error; other header drift is Parse.
    if let Some(found) = payload.lines().find_map(|l| l.strip_prefix("f_checksum=")) {
        if found != aset.f_checksum {
            return Err(BoundError::ChecksumMismatch {
                found: found.to_string(),
                expected: aset.f_checksum.clone(),
            });
        }
    }
    kv.match_header(aset, shard).map_err(BoundError::Parse)?;
    let max = kv.take_record("max", aset.p_bits);
    let min = kv.take_record("min", aset.p_bits);
    let processed: u64 = kv
        .take("bracelets_processed")
        .ok_or_else(|| BoundError::Parse("missing bracelets_processed".to_string()))?
        .parse()
        .map_err(|_| BoundError::Parse("bad bracelets_processed".to_string()))?;
    let status = match kv.take("status") {
        Some("complete") => ShardStatus::Complete,
        Some("aborted") => ShardStatus::Aborted {
            bracelet: kv
                .take("aborted_bracelet")
                .ok_or_else(|| BoundError::Parse("missing aborted_bracelet".to_string()))?
                .to_string(),
            psi: kv.take("aborted_psi").unwrap_or("?").to_string(),
            vpsi: kv.take("aborted_vpsi").unwrap_or("?").to_string(),
        },
        other => {
            return Err(BoundError::Parse(format!("bad status line: {other:?}")));
        }
    };
    if (max.is_none() || min.is_none()) && processed > 0 {
        return Err(BoundError::Parse(
            "extremes missing despite processed bracelets".to_string(),
        ));
    }
    Ok(ShardSummary { spec: shard.clone(), processed, max, min, status })
}

/// Run one shard and persist its result file (atomic). On positivity
/// failure the aborted result is written and the error returned.
pub fn run_shard_to_file(
    aset: &AnsatzSet,
    shard: &ShardSpec,
    dir: &Path,
    policy: &CheckpointPolicy,
    resume: bool,
) -> Result<ShardSummary, BoundError> {
    let path = shard_result_path(dir, shard);
    if resume {
        if let Ok(text) = std::fs::read_to_string(&path) {
            let summary = parse_shard_result(&text, aset, shard)?;
            if summary.status == ShardStatus::Complete {
                return Ok(summary);
            }
        }
    }
    match run_shard_core(aset, shard, policy)? {
        (progress, None) => {
            let summary = ShardSummary {
                spec: shard.clone(),
                processed: progress.processed,
                max: progress.max,
                min: progress.min,
                status: ShardStatus::Complete,
            };
            atomic_write(&path, &render_shard_result(aset, &summary))?;
            Ok(summary)
        }
        (progress, Some(err)) => {
            if let BoundError::AnsatzNotPositive { bracelet, psi, vpsi } = &err {
                let summary = ShardSummary {
                    spec: shard.clone(),
                    processed: progress.processed,
                    max: progress.max,
                    min: progress.min,
                    status: ShardStatus::Aborted {
                        bracelet: bracelet.clone(),
                        psi: psi.clone(),
                        vpsi: vpsi.clone(),
                    },
                };
                // Best effort: the positivity diagnosis outranks a write error.
                let _ = atomic_write(&path, &render_shard_result(aset, &summary));
            }
            Err(err)
        }
    }
}

/// Full bound-run configuration.
#[derive(Debug, Clone)]
pub struct BoundRun {
    pub m: usize,
    pub shard_count: u64,
    pub workers: usize,
    /// Directory for shard results and checkpoints; in-memory when None.
    pub dir: Option<PathBuf>,
    pub resume: bool,
    pub checkpoint_every_bracelets: u64,
    pub checkpoint_every_secs: u64,
}

impl BoundRun {
    pub fn new(m: usize) -> BoundRun {
        BoundRun {
            m,
            shard_count: 1,
            workers: 1,
            dir: None,
            resume: false,
            checkpoint_every_bracelets: 100_000,
            checkpoint_every_secs: 60,
        }
    }
}

/// The aggregated outcome. Timing fields are informational and never enter
/// `render()`, which must be byte-stable across reruns and worker counts.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub model: Model,
    pub m: usize,
    pub n: usize,
    pub precision_bits: u32,
    pub f_checksum: String,
    pub basis_note: String,
    pub shards: Vec<ShardSummary>,
    pub bracelets_total: u64,
    pub max: RatioRecord,
    pub min: RatioRecord,
    pub wall_seconds: f64,
    pub compute_seconds: f64,
}

impl BoundReport {
    /// The certified upper bound: the max ratio root (already up-rounded in
    /// binary), rendered upward in decimal.
    pub fn upper_bound_decimal(&self) -> String {
        let digits = crate::hp::decimal_digits(self.precision_bits);
        self.max.ratio_root.to_decimal_up(digits)
    }

    /// Whether the max landed on one of the two conjectured extremal
    /// patterns (all-vacant, or alternating). Observation only.
    pub fn max_is_conjectured_extremal(&self) -> bool {
        let m = self.max.bracelet.m;
        let alternating: u64 = (0..m).filter(|i| i % 2 == 1).map(|i| 1u64 << (m - 1 - i)).sum();
        self.max.bracelet.bits == 0 || self.max.bracelet.bits == alternating
    }

    /// Deterministic key-value text (no timing — that goes to stdout).
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{REPORT_FORMAT}");
        let _ = writeln!(s, "model={}", self.model.token());
        let _ = writeln!(s, "m={}", self.m);
        let _ = writeln!(s, "n={}", self.n);
        let _ = writeln!(s, "precision_bits={}", self.precision_bits);
        let _ = writeln!(s, "f_checksum={}", self.f_checksum);
        let _ = writeln!(s, "basis={}", self.basis_note);
        let _ = writeln!(s, "shard_count={}", self.shards.len());
        let _ = writeln!(s, "bracelets_total={}", self.bracelets_total);
        for sh in &self.shards {
            match (&sh.max, &sh.min) {
                (Some(mx), Some(mn)) => {
                    let _ = writeln!(
                        s,
                        "shard={} processed={} max_bracelet={} max_ratio_root={} min_bracelet={} min_ratio_root={}",
                        sh.spec.shard_index,
                        sh.processed,
                        mx.bracelet.string(),
                        mx.ratio_root.to_decimal(),
                        mn.bracelet.string(),
                        mn.ratio_root.to_decimal()
                    );
                }
                _ => {
                    let _ = writeln!(s, "shard={} processed=0", sh.spec.shard_index);
                }
            }
        }
        let _ = writeln!(s, "upper_bound={}", self.upper_bound_decimal());
        let _ = writeln!(s, "max_bracelet={}", self.max.bracelet.string());
        let _ = writeln!(s, "max_psi={}", self.max.psi.to_decimal());
        let _ = writeln!(s, "max_vpsi={}", self.max.vpsi.to_decimal());
        let _ = writeln!(s, "min_ratio_root={}", self.min.ratio_root.to_decimal());
        let _ = writeln!(s, "min_bracelet={}", self.min.bracelet.string());
        let _ = writeln!(
            s,
            "note=the minimum ratio bounds the cylinder eigenvalue root from below; it is NOT a lower bound on the growth rate"
        );
        let _ = writeln!(
            s,
            "max_is_conjectured_extremal={}",
            self.max_is_conjectured_extremal()
        );
        finish_with_checksum(s)
    }
}

/// Compute the certified upper bound: shard the bracelets, run the shards
/// on `workers` threads, aggregate in shard-index order.
pub fn upper_bound(aset: &AnsatzSet, run: &BoundRun) -> Result<BoundReport, BoundError> {
    if run.m < 2 || run.m % 2 != 0 {
        return Err(BoundError::OddWidth(run.m));
    }
    if run.m > 63 {
        return Err(BoundError::WidthTooLarge(run.m));
    }
    assert!(run.shard_count >= 1, "need at least one shard");
    assert!(run.workers >= 1, "need at least one worker");

    let started = Instant::now();
    let mut specs = Vec::with_capacity(usize::try_from(run.shard_count).unwrap());
    for i in 0..run.shard_count {
        specs.push(shard_range(aset.model, run.m, run.shard_count, i)?);
    }

    let policy = CheckpointPolicy {
        dir: run.dir.clone(),
        every_bracelets: run.checkpoint_every_bracelets,
        every_secs: run.checkpoint_every_secs,
    };
    let next = AtomicU64::new(0);
    let stop = AtomicBool::new(false);
    let results: Mutex<Vec<Option<Result<ShardSummary, BoundError>>>> =
        Mutex::new((0..specs.len()).map(|_| None).collect());
    let compute_secs = Mutex::new(0.0f64);

    std::thread::scope(|scope| {
        for _ in 0..run.workers.min(specs.len()) {
            scope.spawn(|| loop {
                if stop.load(Ordering::Relaxed) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(spec) = specs.get(usize::try_from(i).unwrap()) else {
                    break;
                };
                let shard_started = Instant::now();
                let outcome = match &run.dir {
                    Some(dir) => run_shard_to_file(aset, spec, dir, &policy, run.resume),
                    None => run_shard(aset, spec, &policy),
                };
                *compute_secs.lock().unwrap() += shard_started.elapsed().as_secs_f64();
                if outcome.is_err() {
                    stop.store(true, Ordering::Relaxed);
                }
                results.lock().unwrap()[usize::try_from(i).unwrap()] = Some(outcome);
            });
        }
    });

    let results = results.into_inner().unwrap();
    let mut summaries = Vec::with_capacity(results.len());
    let mut missing = Vec::new();
    for (i, slot) in results.into_iter().enumerate() {
        match slot {
            Some(Ok(summary)) => summaries.push(summary),
            Some(Err(err)) => return Err(err),
            None => missing.push(i as u64),
        }
    }
    if !missing.is_empty() {
        return Err(BoundError::IncompleteShards { missing, count: run.shard_count });
    }

    aggregate(
        aset,
        summaries,
        started.elapsed().as_secs_f64(),
        compute_secs.into_inner().unwrap(),
    )
}

/// Fold shard summaries (in shard-index order) into the final report.
pub fn aggregate(
    aset: &AnsatzSet,
    summaries: Vec<ShardSummary>,
    wall_seconds: f64,
    compute_seconds: f64,
) -> Result<BoundReport, BoundError> {
    for s in &summaries {
        if let ShardStatus::Aborted { bracelet, psi, vpsi } = &s.status {
            return Err(BoundError::AnsatzNotPositive {
                bracelet: bracelet.clone(),
                psi: psi.clone(),
                vpsi: vpsi.clone(),
            });
        }
    }
    let m = summaries
        .first()
        .map(|s| s.spec.m)
        .ok_or(BoundError::IncompleteShards { missing: vec![], count: 0 })?;
    let mut total = 0u64;
    let mut max: Option<RatioRecord> = None;
    let mut min: Option<RatioRecord> = None;
    for s in &summaries {
        total += s.processed;
        if let Some(rec) = &s.max {
            match &max {
                Some(cur) if rec.ratio_root <= cur.ratio_root => {}
                _ => max = Some(rec.clone()),
            }
        }
        if let Some(rec) = &s.min {
            match &min {
                Some(cur) if rec.ratio_root >= cur.ratio_root => {}
                _ => min = Some(rec.clone()),
            }
        }
    }
    debug_assert_eq!(total, count_bracelets(aset.model, m));
    let (Some(max), Some(min)) = (max, min) else {
        return Err(BoundError::Parse("no bracelets were processed".to_string()));
    };
    Ok(BoundReport {
        model: aset.model,
        m,
        n: aset.n,
        precision_bits: aset.p_bits,
        f_checksum: aset.f_checksum.clone(),
        basis_note: aset.basis_note.clone(),
        shards: summaries,
        bracelets_total: total,
        max,
        min,
        wall_seconds,
        compute_seconds,
    })
}

/// Every `stride`-th bracelet by global index — the deterministic
/// verification subsample.
pub fn subsample_bracelets(model: Model, m: usize, stride: usize) -> Vec<Bracelet> {
    assert!(stride >= 1);
    enumerate_bracelets(model, m).step_by(stride).collect()
}

/// Number of agreeing leading significant decimal digits of two positive
/// values (0 when signs or magnitudes disagree).
pub fn agreeing_digits(a: &HPReal, b: &HPReal) -> usize {
    let (da, ea) = match decompose(a) {
        Some(v) => v,
        None => return 0,
    };
    let (db, eb) = match decompose(b) {
        Some(v) => v,
        None => return 0,
    };
    if ea != eb {
        return 0;
    }
    da.bytes()
        .zip(db.bytes())
        .take_while(|(x, y)| x == y)
        .count()
}

/// (digit string, decimal exponent) of a positive value's scientific form.
fn decompose(x: &HPReal) -> Option<(String, i64)> {
    if !x.is_positive() {
        return None;
    }
    let s = x.to_decimal();
    let (mantissa, exp) = s.split_once('e')?;
    let digits: String = mantissa.bytes().filter(u8::is_ascii_digit).map(char::from).collect();
    Some((digits, exp.parse().ok()?))
}
