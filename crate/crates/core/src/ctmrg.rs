//! Corner-transfer-matrix renormalization: the expand / diagonalize /
//! truncate iteration that produces the F matrices the bound engine feeds
//! on, plus the non-rigorous growth-rate estimate η/ξ.
//!
//! State layout: the corner spectrum A(a) is kept as a diagonal vector per
//! spin (the renormalization step diagonalizes the expanded corner, so this
//! basis is exact), and the four half-row matrices F(a,b) are n×n with
//! F(a,b) = F(b,a)ᵀ. Every iteration divides A by its largest |eigenvalue|
//! and F by its largest |entry|; the growth-rate estimate itself comes from
//! the trace functionals in [`kappa_diagnostics`], the divisors are pure
//! scale bookkeeping. Without the division the entries would drift over
//! hundreds of iterations until even a 1024-bit exponent range became
//! unpleasant to audit.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::hp::{sym_eigen, HPMatrix, HPReal, HpError};
use crate::spin::{face_weight_bits, pair_legal, Model, Spin};

#[derive(Debug, thiserror::Error)]
pub enum CtmrgError {
    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),
    #[error("zero denominator in trace functional (degenerate state)")]
    ZeroDenominator,
    #[error("format version mismatch: expected {expected}, found {found}")]
    FormatVersionMismatch { expected: String, found: String },
    #[error("checksum mismatch: computed {computed}, stored {stored}")]
    ChecksumMismatch { computed: String, stored: String },
    #[error("state file is for model {found}, expected {expected}")]
    ModelMismatch { found: String, expected: String },
    #[error("malformed state file: {0}")]
    Parse(String),
    #[error(transparent)]
    Hp(#[from] HpError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub const SPINS: [u8; 2] = [0, 1];

/// Corner spectrum and half-row matrices at truncation size n.
#[derive(Debug, Clone)]
pub struct CTMState {
    pub model: Model,
    pub n: usize,
    pub p_bits: u32,
    /// Diagonal corner spectrum per spin, descending |value|, max |entry| 1.
    pub a_diag: [Vec<HPReal>; 2],
    /// Half-row matrix per ordered spin pair, `f[a][b]`.
    pub f: [[HPMatrix; 2]; 2],
    /// Most recent corner normalization divisor. For the symmetric face
    /// weights (hard squares, kings) the corner gains one half-row per step,
    /// so at a self-consistent fixed point this settles at κ·ξ (the
    /// trace-functional ξ of [`kappa_diagnostics`]), not at ξ itself. The
    /// memory model's raw update is asymmetric and gets projected back onto
    /// the symmetric part each step, which shifts its divisor to a nearby
    /// model-specific constant with no closed form.
    pub xi: HPReal,
    /// Most recent half-row normalization divisor. For the symmetric face
    /// weights it settles at the per-site growth κ once F stops changing,
    /// since the conjugated F_l then reproduces F scaled by exactly that
    /// factor; the memory model's divisor is taken from the raw blocks
    /// before re-symmetrization and lands above κ.
    pub eta: HPReal,
    pub iteration: u64,
    /// Set when the last truncation cut through a near-degenerate pair;
    /// harmless for bound validity, noted for bound tightness.
    pub truncation_degenerate: bool,
}

impl CTMState {
    /// Ratio of the last renormalization divisors — a scale diagnostic,
    /// *not* the κ estimate (that is [`kappa_estimate`], from the trace
    /// functionals). For the symmetric face weights this settles at 1/ξ at
    /// a fixed point; the solver only relies on it stabilizing.
    pub fn divisor_ratio(&self) -> HPReal {
        self.eta.div(&self.xi)
    }
}

/// The n=1 seed: unit corner spectrum, F(a,b) = 1 on vertically legal pairs
/// and 0 elsewhere. Any strictly positive legal seed would do; this one is
/// the documented, deterministic choice.
pub fn init_state(model: Model, p_bits: u32) -> CTMState {
    let f = |a: u8, b: u8| {
        let legal = pair_legal(
            model,
            Spin::from_bit(a),
            Spin::from_bit(b),
            crate::spin::Direction::Vertical,
        );
        HPMatrix::from_fn(1, 1, |_, _| {
            if legal {
                HPReal::one(p_bits)
            } else {
                HPReal::zero(p_bits)
            }
        })
    };
    CTMState {
        model,
        n: 1,
        p_bits,
        a_diag: [vec![HPReal::one(p_bits)], vec![HPReal::one(p_bits)]],
        f: [[f(0, 0), f(0, 1)], [f(1, 0), f(1, 1)]],
        xi: HPReal::one(p_bits),
        eta: HPReal::one(p_bits),
        iteration: 0,
        truncation_degenerate: false,
    }
}

/// Expanded corner and half-row matrices at size 2n, before truncation.
#[derive(Debug, Clone)]
pub struct Expanded {
    pub model: Model,
    pub n: usize,
    pub p_bits: u32,
    pub a_l: [HPMatrix; 2],
    pub f_l: [[HPMatrix; 2]; 2],
    pub iteration: u64,
}

/// The 2n×2n half-row expansion shared by the CTMRG iteration and the
/// trace-ratio ansatz: F_l(c,a) has n×n blocks
///
///   F_l(c,a)[d,b] = ω(a b; c d) · F(d,b),
///
/// block rows/columns ordered with the new spin value 0 first.
pub fn fl_blocks(model: Model, f: &[[HPMatrix; 2]; 2], p_bits: u32) -> [[HPMatrix; 2]; 2] {
    let n = f[0][0].rows();
    let mut f_l: Vec<HPMatrix> = Vec::with_capacity(4);
    for c in SPINS {
        for a in SPINS {
            f_l.push(HPMatrix::from_fn(2 * n, 2 * n, |i, j| {
                let (d, b) = ((i >= n) as u8, (j >= n) as u8);
                if face_weight_bits(model, a, b, c, d) == 1 {
                    f[d as usize][b as usize].at(i % n, j % n).clone()
                } else {
                    HPReal::zero(p_bits)
                }
            }));
        }
    }
    let [fl00, fl01, fl10, fl11] = <[HPMatrix; 4]>::try_from(f_l).expect("four pairs");
    [[fl00, fl01], [fl10, fl11]]
}

/// Grow the system by one row and one column:
///
///   F_l(c,a) per `fl_blocks`,
///   A_l(c)  has n×n blocks  A_l(c)[d,a]  = Σ_b ω(a b; c d) · F(d,b) A(b) F(b,a),
///
/// block rows/columns ordered with the new spin value 0 first.
pub fn expand(state: &CTMState) -> Expanded {
    let n = state.n;
    let model = state.model;
    let prec = state.p_bits;
    let zero = HPMatrix::zeros(n, n, prec);

    let f_l = fl_blocks(model, &state.f, prec);

    let mut a_l: Vec<HPMatrix> = Vec::with_capacity(2);
    for c in SPINS {
        // Per (d, a) block: sum the legal b-channels of F(d,b) A(b) F(b,a).
        let mut blocks: Vec<HPMatrix> = Vec::with_capacity(4);
        for d in SPINS {
            for a in SPINS {
                let mut acc = zero.clone();
                for b in SPINS {
                    if face_weight_bits(model, a, b, c, d) == 0 {
                        continue;
                    }
                    let term = state.f[d as usize][b as usize]
                        .mul_diag(&state.a_diag[b as usize])
                        .matmul(&state.f[b as usize][a as usize])
                        .expect("n×n chain");
                    acc = acc.add(&term);
                }
                blocks.push(acc);
            }
        }
        a_l.push(HPMatrix::from_fn(2 * n, 2 * n, |i, j| {
            let (d, a) = ((i >= n) as usize, (j >= n) as usize);
            blocks[2 * d + a].at(i % n, j % n).clone()
        }));
    }

    let [al0, al1] = <[HPMatrix; 2]>::try_from(a_l).expect("two spins");
    Expanded {
        model,
        n,
        p_bits: prec,
        a_l: [al0, al1],
        f_l,
        iteration: state.iteration,
    }
}

/// Diagonalize the expanded corners, keep the `keep` leading eigenpairs,
/// conjugate the half-rows consistently, and renormalize.
pub fn renormalize(ex: &Expanded, keep: usize, tol: &HPReal) -> Result<CTMState, CtmrgError> {
    let dim = 2 * ex.n;
    assert!(keep >= 1 && keep <= dim, "keep must be in 1..=2n");
    let prec = ex.p_bits;

    let mut spectra: Vec<Vec<HPReal>> = Vec::with_capacity(2);
    let mut basis: Vec<HPMatrix> = Vec::with_capacity(2);
    let mut degenerate = false;
    for s in 0..2 {
        // The RWIM face weight is not symmetric under swapping the two
        // column spins, so its expanded corner carries a structural
        // asymmetry; project onto the symmetric part before diagonalizing.
        // HardSquares/NAK corners are symmetric by construction and go in
        // raw so a genuine asymmetry bug would surface as NotSymmetric.
        let m = if ex.model == Model::Rwim {
            ex.a_l[s].symmetrized()
        } else {
            ex.a_l[s].clone()
        };
        let eig = sym_eigen(&m, tol)?;
        if keep < dim {
            let gap = eig.eigenvalues[keep - 1]
                .abs()
                .sub(&eig.eigenvalues[keep].abs())
                .abs();
            if gap <= *tol {
                degenerate = true;
            }
        }
        spectra.push(eig.eigenvalues);
        basis.push(eig.vectors.leading_columns(keep));
    }

    let mut xi = spectra[0][0].abs();
    let alt = spectra[1][0].abs();
    if alt > xi {
        xi = alt;
    }
    if xi.is_zero() {
        return Err(CtmrgError::ZeroDenominator);
    }

    let mut new_a: [Vec<HPReal>; 2] = [Vec::new(), Vec::new()];
    for s in 0..2 {
        new_a[s] = spectra[s][..keep].iter().map(|v| v.div(&xi)).collect();
    }

    let mut conj: Vec<HPMatrix> = Vec::with_capacity(4);
    for a in 0..2 {
        for b in 0..2 {
            let m = basis[a]
                .transpose()
                .matmul(&ex.f_l[a][b])
                .and_then(|t| t.matmul(&basis[b]))
                .expect("conformant conjugation");
            conj.push(m);
        }
    }
    let mut eta = conj[0].max_abs();
    for m in &conj[1..] {
        let c = m.max_abs();
        if c > eta {
            eta = c;
        }
    }
    if eta.is_zero() {
        return Err(CtmrgError::ZeroDenominator);
    }
    let scaled: Vec<HPMatrix> = conj.iter().map(|m| m.scale_div(&eta)).collect();

    // Re-symmetrize across the pair: F(a,b) ← (F(a,b) + F(b,a)ᵀ)/2, which
    // makes F(a,b) = F(b,a)ᵀ hold exactly, not just within roundoff.
    let resym =
        |a: usize, b: usize| scaled[2 * a + b].add(&scaled[2 * b + a].transpose()).ldexp(-1);
    let f = [[resym(0, 0), resym(0, 1)], [resym(1, 0), resym(1, 1)]];

    Ok(CTMState {
        model: ex.model,
        n: keep,
        p_bits: prec,
        a_diag: new_a,
        f,
        xi,
        eta,
        iteration: ex.iteration + 1,
        truncation_degenerate: degenerate,
    })
}

/// How a solve grows n and when it declares the fixed point reached.
#[derive(Debug, Clone)]
pub struct GrowthSchedule {
    pub target_n: usize,
    /// Per-step growth of the kept dimension while below target (≤ 2, since
    /// one expansion at most doubles the corner).
    pub growth_factor: f64,
    /// Minimum number of fixed-size iterations before convergence may be
    /// declared.
    pub polish_iters: usize,
    pub tol: HPReal,
    pub max_iters: usize,
}

impl GrowthSchedule {
    pub fn new(target_n: usize, tol: HPReal) -> GrowthSchedule {
        GrowthSchedule {
            target_n,
            growth_factor: 2.0,
            polish_iters: 50,
            tol,
            max_iters: 10_000,
        }
    }
}

/// Iterate expand + renormalize until the divisor ratio η/ξ and the kept
/// corner spectrum both settle to within the schedule tolerance.
pub fn ctmrg_solve(model: Model, p_bits: u32, schedule: &GrowthSchedule) -> Result<CTMState, CtmrgError> {
    assert!(schedule.target_n >= 1, "target_n must be positive");
    assert!(
        schedule.max_iters >= schedule.polish_iters && schedule.polish_iters >= 1,
        "need max_iters >= polish_iters >= 1"
    );
    assert!(
        schedule.growth_factor > 0.0 && schedule.growth_factor <= 2.0,
        "growth factor must be in (0, 2]"
    );

    let mut state = init_state(model, p_bits);
    let mut at_target = 0usize;
    let mut prev_ratio: Option<HPReal> = None;
    let mut prev_spectra: Option<[Vec<HPReal>; 2]> = None;

    for _ in 0..schedule.max_iters {
        let keep = if state.n < schedule.target_n {
            let grown = (state.n as f64 * schedule.growth_factor).floor() as usize;
            grown.max(state.n + 1).min(schedule.target_n)
        } else {
            schedule.target_n
        };
        let ex = expand(&state);
        state = renormalize(&ex, keep, &schedule.tol)?;

        if state.n < schedule.target_n {
            continue;
        }
        at_target += 1;
        let ratio = state.divisor_ratio();
        let ratio_settled = prev_ratio
            .as_ref()
            .map(|p| ratio.sub(p).abs() <= schedule.tol.mul(&ratio).abs())
            .unwrap_or(false);
        let spectrum_settled = prev_spectra
            .as_ref()
            .map(|p| spectrum_delta(p, &state.a_diag) <= schedule.tol)
            .unwrap_or(false);
        if at_target >= schedule.polish_iters && ratio_settled && spectrum_settled {
            return Ok(state);
        }
        prev_ratio = Some(ratio);
        prev_spectra = Some(state.a_diag.clone());
    }
    Err(CtmrgError::NoConvergence(schedule.max_iters))
}

fn spectrum_delta(old: &[Vec<HPReal>; 2], new: &[Vec<HPReal>; 2]) -> HPReal {
    let mut worst = HPReal::zero(new[0][0].prec());
    for s in 0..2 {
        debug_assert_eq!(old[s].len(), new[s].len());
        for (o, n) in old[s].iter().zip(&new[s]) {
            let d = n.sub(o).abs();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Everything `kappa_estimate` knows, for reporting: the trace-functional
/// multipliers, their ratio, and the max-norm residuals of the two CTM
/// equations at the current state.
#[derive(Debug, Clone)]
pub struct CtmDiagnostics {
    pub kappa: HPReal,
    pub xi: HPReal,
    pub eta: HPReal,
    /// max_a ‖Σ_b F(a,b)A²(b)F(b,a) − ξA²(a)‖max
    pub corner_residual: HPReal,
    /// max_{a,b} ‖Σ_{c,d} ω(a b; c d)F(a,c)A(c)F(c,d)A(d)F(d,b) − ηA(a)F(a,b)A(b)‖max
    pub row_residual: HPReal,
}

fn frobenius_inner(x: &HPMatrix, y: &HPMatrix, prec: u32) -> HPReal {
    debug_assert!(x.rows() == y.rows() && x.cols() == y.cols());
    let mut acc = HPReal::zero(prec);
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            acc.add_mul_assign(x.at(i, j), y.at(i, j));
        }
    }
    acc
}

fn corner_rhs(state: &CTMState, a: usize) -> HPMatrix {
    let n = state.n;
    let mut acc = HPMatrix::zeros(n, n, state.p_bits);
    for b in 0..2 {
        let sq: Vec<HPReal> = state.a_diag[b].iter().map(|v| v.mul(v)).collect();
        let term = state.f[a][b]
            .mul_diag(&sq)
            .matmul(&state.f[b][a])
            .expect("n×n chain");
        acc = acc.add(&term);
    }
    acc
}

fn row_rhs(state: &CTMState, a: usize, b: usize) -> HPMatrix {
    let n = state.n;
    let mut acc = HPMatrix::zeros(n, n, state.p_bits);
    for c in 0..2 {
        for d in 0..2 {
            if face_weight_bits(state.model, a as u8, b as u8, c as u8, d as u8) == 0 {
                continue;
            }
            let inner = state.f[c][d]
                .mul_diag(&state.a_diag[d])
                .matmul(&state.f[d][b])
                .expect("n×n chain");
            let term = state.f[a][c]
                .mul_diag(&state.a_diag[c])
                .matmul(&inner)
                .expect("n×n chain");
            acc = acc.add(&term);
        }
    }
    acc
}

/// Trace-functional multipliers and residuals at the current state.
pub fn kappa_diagnostics(state: &CTMState) -> Result<CtmDiagnostics, CtmrgError> {
    let prec = state.p_bits;
    let n = state.n;

    let mut num1 = HPReal::zero(prec);
    let mut den1 = HPReal::zero(prec);
    let mut rhs1 = Vec::with_capacity(2);
    for a in 0..2 {
        let r = corner_rhs(state, a);
        num1 = num1.add(&r.trace());
        for v in &state.a_diag[a] {
            den1.add_mul_assign(v, v);
        }
        rhs1.push(r);
    }
    if den1.is_zero() {
        return Err(CtmrgError::ZeroDenominator);
    }
    let xi = num1.div(&den1);

    let mut num2 = HPReal::zero(prec);
    let mut den2 = HPReal::zero(prec);
    let mut rhs2 = Vec::with_capacity(4);
    let mut afb = Vec::with_capacity(4);
    for a in 0..2 {
        for b in 0..2 {
            let r = row_rhs(state, a, b);
            num2 = num2.add(&frobenius_inner(&r, &state.f[a][b], prec));
            let scaled = state.f[a][b]
                .mul_diag(&state.a_diag[b])
                .scale_rows(&state.a_diag[a]);
            den2 = den2.add(&frobenius_inner(&scaled, &state.f[a][b], prec));
            rhs2.push(r);
            afb.push(scaled);
        }
    }
    if den2.is_zero() {
        return Err(CtmrgError::ZeroDenominator);
    }
    let eta = num2.div(&den2);
    if xi.is_zero() {
        return Err(CtmrgError::ZeroDenominator);
    }
    let kappa = eta.div(&xi);

    let mut corner_residual = HPReal::zero(prec);
    for a in 0..2 {
        for i in 0..n {
            for j in 0..n {
                let mut want = HPReal::zero(prec);
                if i == j {
                    want = xi.mul(&state.a_diag[a][i]).mul(&state.a_diag[a][i]);
                }
                let d = rhs1[a].at(i, j).sub(&want).abs();
                if d > corner_residual {
                    corner_residual = d;
                }
            }
        }
    }

    let mut row_residual = HPReal::zero(prec);
    for (r, scaled) in rhs2.iter().zip(&afb) {
        for i in 0..n {
            for j in 0..n {
                let d = r.at(i, j).sub(&eta.mul(scaled.at(i, j))).abs();
                if d > row_residual {
                    row_residual = d;
                }
            }
        }
    }

    Ok(CtmDiagnostics { kappa, xi, eta, corner_residual, row_residual })
}

/// The growth-rate estimate η/ξ from the trace functionals. Diagnostic
/// only — bounds come from the exact and bound-engine paths.
pub fn kappa_estimate(state: &CTMState) -> Result<HPReal, CtmrgError> {
    Ok(kappa_diagnostics(state)?.kappa)
}

const FORMAT_LINE: &str = "format=ctm-f-v1";

/// Canonical text serialization, checksummed. Entries carry full round-trip
/// digit counts for the state's precision.
pub fn serialize_state(state: &CTMState) -> Result<String, CtmrgError> {
    let kappa = kappa_estimate(state)?;
    let mut s = String::new();
    let _ = writeln!(s, "{FORMAT_LINE}");
    let _ = writeln!(s, "model={}", state.model.token());
    let _ = writeln!(s, "n={}", state.n);
    let _ = writeln!(s, "precision_bits={}", state.p_bits);
    let _ = writeln!(s, "iterations={}", state.iteration);
    let _ = writeln!(s, "kappa_estimate={}", kappa.to_decimal());
    for a in 0..2 {
        for b in 0..2 {
            let _ = writeln!(s, "F {a} {b}");
            for i in 0..state.n {
                let row: Vec<String> =
                    (0..state.n).map(|j| state.f[a][b].at(i, j).to_decimal()).collect();
                let _ = writeln!(s, "{}", row.join(" "));
            }
        }
    }
    for a in 0..2 {
        let _ = writeln!(s, "A {a}");
        let row: Vec<String> = state.a_diag[a].iter().map(|v| v.to_decimal()).collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    let digest = Sha256::digest(s.as_bytes());
    let _ = writeln!(s, "checksum={}", hex::encode(digest));
    Ok(s)
}

/// Hex checksum of a serialized state, as embedded in downstream reports.
/// Only the first line after `checksum=` counts; anything below that line is
/// annotation outside the integrity envelope (the CLI appends its run
/// configuration there).
pub fn state_checksum(text: &str) -> Option<String> {
    let idx = text.rfind("\nchecksum=")?;
    let rest = &text[idx + 1 + "checksum=".len()..];
    Some(rest.lines().next().unwrap_or("").trim_end().to_string())
}

pub fn save_state(state: &CTMState, path: &Path) -> Result<(), CtmrgError> {
    let text = serialize_state(state)?;
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, &text)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_state(path: &Path, expect_model: Option<Model>) -> Result<CTMState, CtmrgError> {
    let text = std::fs::read_to_string(path)?;
    parse_state(&text, expect_model)
}

pub fn parse_state(text: &str, expect_model: Option<Model>) -> Result<CTMState, CtmrgError> {
    let first = text.lines().next().unwrap_or("");
    if first != FORMAT_LINE {
        return Err(CtmrgError::FormatVersionMismatch {
            expected: FORMAT_LINE.to_string(),
            found: first.to_string(),
        });
    }
    let idx = text.rfind("\nchecksum=").ok_or_else(|| CtmrgError::ChecksumMismatch {
        computed: String::new(),
        stored: "(absent)".to_string(),
    })?;
    let payload = &text[..idx + 1];
    // Lines below the checksum are annotations (run configuration appended by
    // the CLI); they are outside the integrity envelope and ignored here.
    let stored = text[idx + 1 + "checksum=".len()..]
        .lines()
        .next()
        .unwrap_or("")
        .trim_end()
        .to_string();
    let computed = hex::encode(Sha256::digest(payload.as_bytes()));
    if stored != computed {
        return Err(CtmrgError::ChecksumMismatch { computed, stored });
    }

    let mut lines = payload.lines();
    lines.next(); // format line, checked above
    let model_tok = expect_kv(lines.next(), "model")?;
    let model: Model = model_tok
        .parse()
        .map_err(|_| CtmrgError::Parse(format!("unknown model token {model_tok:?}")))?;
    if let Some(want) = expect_model {
        if want != model {
            return Err(CtmrgError::ModelMismatch {
                found: model_tok.to_string(),
                expected: want.token().to_string(),
            });
        }
    }
    let n: usize = parse_num(expect_kv(lines.next(), "n")?)?;
    let p_bits: u32 = parse_num(expect_kv(lines.next(), "precision_bits")?)?;
    let iteration: u64 = parse_num(expect_kv(lines.next(), "iterations")?)?;
    let _kappa = expect_kv(lines.next(), "kappa_estimate")?; // recomputable
    if n == 0 || p_bits < 2 {
        return Err(CtmrgError::Parse(format!("bad dimensions n={n} precision_bits={p_bits}")));
    }

    let mut f_parsed: Vec<HPMatrix> = Vec::with_capacity(4);
    for a in 0..2 {
        for b in 0..2 {
            expect_line(lines.next(), &format!("F {a} {b}"))?;
            let mut m = HPMatrix::zeros(n, n, p_bits);
            for i in 0..n {
                let row = lines
                    .next()
                    .ok_or_else(|| CtmrgError::Parse(format!("truncated F {a} {b} block")))?;
                fill_row(&mut m, i, row, n, p_bits)?;
            }
            f_parsed.push(m);
        }
    }
    let mut a_parsed: Vec<Vec<HPReal>> = Vec::with_capacity(2);
    for a in 0..2 {
        expect_line(lines.next(), &format!("A {a}"))?;
        let row = lines
            .next()
            .ok_or_else(|| CtmrgError::Parse(format!("truncated A {a} block")))?;
        let entries = split_entries(row, n, p_bits)?;
        a_parsed.push(entries);
    }
    if lines.next().is_some() {
        return Err(CtmrgError::Parse("trailing content after A blocks".to_string()));
    }

    let [f00, f01, f10, f11] = <[HPMatrix; 4]>::try_from(f_parsed).expect("four pairs");
    let [a0, a1] = <[Vec<HPReal>; 2]>::try_from(a_parsed).expect("two spins");
    let mut state = CTMState {
        model,
        n,
        p_bits,
        a_diag: [a0, a1],
        f: [[f00, f01], [f10, f11]],
        xi: HPReal::one(p_bits),
        eta: HPReal::one(p_bits),
        iteration,
        truncation_degenerate: false,
    };
    // The divisors are not serialized; the trace functionals reproduce them
    // (they coincide at any converged state).
    if let Ok(d) = kappa_diagnostics(&state) {
        state.xi = d.xi;
        state.eta = d.eta;
    }
    Ok(state)
}

fn expect_kv<'a>(line: Option<&'a str>, key: &str) -> Result<&'a str, CtmrgError> {
    let line = line.ok_or_else(|| CtmrgError::Parse(format!("missing {key}= line")))?;
    line.strip_prefix(key)
        .and_then(|r| r.strip_prefix('='))
        .ok_or_else(|| CtmrgError::Parse(format!("expected {key}=..., found {line:?}")))
}

fn expect_line(line: Option<&str>, want: &str) -> Result<(), CtmrgError> {
    match line {
        Some(l) if l == want => Ok(()),
        other => Err(CtmrgError::Parse(format!("expected {want:?}, found {other:?}"))),
    }
}

fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T, CtmrgError> {
    s.parse()
        .map_err(|_| CtmrgError::Parse(format!("bad integer {s:?}")))
}

fn split_entries(row: &str, n: usize, p_bits: u32) -> Result<Vec<HPReal>, CtmrgError> {
    let parts: Vec<&str> = row.split(' ').collect();
    if parts.len() != n {
        return Err(CtmrgError::Parse(format!(
            "expected {n} entries per row, found {}",
            parts.len()
        )));
    }
    parts
        .into_iter()
        .map(|p| {
            HPReal::parse_decimal(p, p_bits)
                .map_err(|e| CtmrgError::Parse(format!("bad entry {p:?}: {e}")))
        })
        .collect()
}

fn fill_row(m: &mut HPMatrix, i: usize, row: &str, n: usize, p_bits: u32) -> Result<(), CtmrgError> {
    for (j, v) in split_entries(row, n, p_bits)?.into_iter().enumerate() {
        *m.at_mut(i, j) = v;
    }
    Ok(())
}
