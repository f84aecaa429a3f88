//! Exact transfer matrices on strips and cylinders, applied matrix-free.
//!
//! A cut state is one column of `w` spins packed into a `u64`, read
//! MSB-first: spin `i` of state `I` is bit `w-1-i`, so the integer order of
//! states equals the lexicographic order of their `0`/`1` strings. The
//! transfer operator maps a weight vector indexed by cut states τ to one
//! indexed by σ, with matrix element
//!
//! ```text
//! V[σ, τ] = ∏_i ω(σ_{i+1} τ_{i+1}; σ_i τ_i)
//! ```
//!
//! over all `w` faces (indices wrapping) on the cylinder, and over the `w-1`
//! interior faces on the strip. The application never materializes V: a
//! spin-by-spin sweep sums out each τ component as soon as no remaining face
//! touches it, which keeps the live key set proportional to the state count
//! instead of its square.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use crate::hp::{power_iteration, HPReal, HpError};
use crate::spin::{face_weight_bits, pair_legal, Boundary, Direction, Model, Spin};

/// Largest admissible `|states|`; megabyte-scale sweeps stay comfortably
/// under it and a mistyped width fails fast instead of thrashing.
pub const DEFAULT_STATE_CAP: usize = 1 << 26;

/// Iteration budget for the spectral routines built on power iteration.
pub const DEFAULT_MAX_ITERS: usize = 100_000;

#[derive(Debug, thiserror::Error)]
pub enum ExactError {
    #[error("state space at width {width} exceeds the cap of {cap} states")]
    WidthTooLarge { width: usize, cap: usize },
    #[error("width must be even and >= 2, got {0}")]
    OddWidth(usize),
    #[error("test vector must be strictly positive (component {0} is not)")]
    NonPositiveVector(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Hp(#[from] HpError),
}

/// All legal cut states of one column, canonically ordered.
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub model: Model,
    pub width: usize,
    pub boundary: Boundary,
    /// Ascending MSB-first packed states.
    pub states: Vec<u64>,
}

impl StateSpace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Position of a packed state in the canonical order.
    pub fn index_of(&self, bits: u64) -> Option<usize> {
        self.states.binary_search(&bits).ok()
    }
}

/// Spin `i` (0-based from the top of the column) of a packed state.
#[inline]
pub fn state_bit(bits: u64, i: usize, w: usize) -> u8 {
    ((bits >> (w - 1 - i)) & 1) as u8
}

/// Render a packed state as its `0`/`1` string, spin 0 leftmost.
pub fn state_string(bits: u64, w: usize) -> String {
    (0..w).map(|i| char::from(b'0' + state_bit(bits, i, w))).collect()
}

/// Enumerate the legal cut states at width `w` under the default cap.
pub fn enumerate_states(model: Model, w: usize, boundary: Boundary) -> Result<StateSpace, ExactError> {
    enumerate_states_capped(model, w, boundary, DEFAULT_STATE_CAP)
}

/// Enumerate with an explicit state-count cap.
pub fn enumerate_states_capped(
    model: Model,
    w: usize,
    boundary: Boundary,
    cap: usize,
) -> Result<StateSpace, ExactError> {
    assert!(w >= 1, "width must be at least 1");
    assert!(
        !(boundary == Boundary::Cyclic && w < 2),
        "cyclic boundary needs width >= 2"
    );
    if w >= 64 {
        return Err(ExactError::WidthTooLarge { width: w, cap });
    }
    let constrained = model.forbids(Direction::Vertical);
    if !constrained {
        // Every column is legal; the count is exactly 2^w.
        if (1u128 << w) > cap as u128 {
            return Err(ExactError::WidthTooLarge { width: w, cap });
        }
        return Ok(StateSpace {
            model,
            width: w,
            boundary,
            states: (0..(1u64 << w)).collect(),
        });
    }

    // Depth-first over spins 0..w-1 (MSB outward), pruning occupied-occupied
    // neighbours; trying vacant before occupied yields ascending output.
    let mut states = Vec::new();
    let mut stack: Vec<(u64, usize)> = vec![(0, 0)];
    while let Some((bits, len)) = stack.pop() {
        if len == w {
            if boundary == Boundary::Cyclic && w >= 2 {
                let first = state_bit(bits, 0, w);
                let last = state_bit(bits, w - 1, w);
                if first == 1 && last == 1 {
                    continue;
                }
            }
            if states.len() == cap {
                return Err(ExactError::WidthTooLarge { width: w, cap });
            }
            states.push(bits);
            continue;
        }
        // During construction spin len-1 sits in bit 0; bits shift left as
        // spins append, landing spin i at bit w-1-i once len == w.
        let prev_occupied = len > 0 && bits & 1 == 1;
        // Push occupied first so the vacant branch pops first (ascending).
        if !prev_occupied {
            stack.push(((bits << 1) | 1, len + 1));
        }
        stack.push((bits << 1, len + 1));
    }
    Ok(StateSpace { model, width: w, boundary, states })
}

/// One explicit matrix element, straight from the face-product definition.
/// O(w) per call — the reference against which the sweep in [`tm_apply`] is
/// validated, and fine for building small dense matrices.
pub fn tm_entry(model: Model, boundary: Boundary, w: usize, sigma: u64, tau: u64) -> u8 {
    if w == 1 {
        // A width-1 strip is a line: only the horizontal step remains.
        let s = Spin::from_bit(state_bit(sigma, 0, 1));
        let t = Spin::from_bit(state_bit(tau, 0, 1));
        return pair_legal(model, s, t, Direction::Horizontal) as u8;
    }
    let faces = match boundary {
        Boundary::Cyclic => w,
        Boundary::Path => w - 1,
    };
    for k in 0..faces {
        let kn = (k + 1) % w;
        let wgt = face_weight_bits(
            model,
            state_bit(sigma, kn, w),
            state_bit(tau, kn, w),
            state_bit(sigma, k, w),
            state_bit(tau, k, w),
        );
        if wgt == 0 {
            return 0;
        }
    }
    1
}

// Sweep keys pack (σ bits so far, live τ bits, saved τ_0) into a u128. σ and
// τ bits sit in their final MSB-first positions; the low two bits hold
// 1 + τ_0 on the cylinder (0 when nothing is saved).
#[inline]
fn pack_key(sigma: u64, tau_rest: u64, tau0: u8) -> u128 {
    ((sigma as u128) << 66) | ((tau_rest as u128) << 2) | tau0 as u128
}

/// Apply the transfer operator to `x` without forming the matrix.
pub fn tm_apply(space: &StateSpace, x: &[HPReal]) -> Result<Vec<HPReal>, ExactError> {
    if x.len() != space.len() {
        return Err(ExactError::DimensionMismatch(format!(
            "operator is {}-dimensional, vector has {} entries",
            space.len(),
            x.len()
        )));
    }
    let w = space.width;
    let model = space.model;
    let prec = x[0].prec();
    let cyclic = space.boundary == Boundary::Cyclic;

    if w == 1 {
        // Line lattice: dense 2x2 on the (at most two) states.
        let mut y = vec![HPReal::zero(prec); space.len()];
        for (si, &s) in space.states.iter().enumerate() {
            for (ti, &t) in space.states.iter().enumerate() {
                if tm_entry(model, space.boundary, 1, s, t) == 1 {
                    y[si].add_assign(&x[ti]);
                }
            }
        }
        return Ok(y);
    }

    // Seed: every τ carries its weight x_τ, branched over σ_0. On the
    // cylinder τ_0 is also copied into the saved slot because face w-1 will
    // need it after the live τ_0 bit has been summed away.
    let mut cur: BTreeMap<u128, HPReal> = BTreeMap::new();
    for (ti, &tau) in space.states.iter().enumerate() {
        if x[ti].is_zero() {
            continue;
        }
        let tau0 = if cyclic { 1 + state_bit(tau, 0, w) } else { 0 };
        for s0 in 0..2u64 {
            let sigma = s0 << (w - 1);
            merge(&mut cur, pack_key(sigma, tau, tau0), x[ti].clone());
        }
    }

    // Faces 0..w-2: face k reads (σ_k, τ_k, τ_{k+1}), branches the new σ_{k+1},
    // then retires τ_k from the live key so coinciding partial sums merge.
    for k in 0..w - 1 {
        let mut next: BTreeMap<u128, HPReal> = BTreeMap::new();
        let tau_k_mask = 1u64 << (w - 1 - k);
        for (key, val) in cur {
            let sigma = (key >> 66) as u64;
            let tau_rest = ((key >> 2) as u64) & ((1 << w) - 1);
            let tau0 = (key & 3) as u8;
            let sk = state_bit(sigma, k, w);
            let tk = state_bit(tau_rest, k, w);
            let tk1 = state_bit(tau_rest, k + 1, w);
            for s_new in 0..2u8 {
                if face_weight_bits(model, s_new, tk1, sk, tk) == 0 {
                    continue;
                }
                let nsigma = sigma | ((s_new as u64) << (w - 2 - k));
                merge(
                    &mut next,
                    pack_key(nsigma, tau_rest & !tau_k_mask, tau0),
                    val.clone(),
                );
            }
        }
        cur = next;
    }

    // Collapse: the strip just sums over the final live bit τ_{w-1}; the
    // cylinder first applies the wrap face ω(σ_0 τ_0; σ_{w-1} τ_{w-1}).
    let mut y = vec![HPReal::zero(prec); space.len()];
    for (key, val) in cur {
        let sigma = (key >> 66) as u64;
        let tau_last = ((key >> 2) as u64) & 1;
        if cyclic {
            let tau0 = (key & 3) as u8 - 1;
            let s0 = state_bit(sigma, 0, w);
            let s_last = state_bit(sigma, w - 1, w);
            if face_weight_bits(model, s0, tau0, s_last, tau_last as u8) == 0 {
                continue;
            }
        }
        let si = space
            .index_of(sigma)
            .expect("face weights admit only legal output states");
        y[si].add_assign(&val);
    }
    Ok(y)
}

fn merge(map: &mut BTreeMap<u128, HPReal>, key: u128, val: HPReal) {
    match map.entry(key) {
        Entry::Occupied(mut e) => e.get_mut().add_assign(&val),
        Entry::Vacant(e) => {
            e.insert(val);
        }
    }
}

/// Dominant eigenvalue with its Collatz-Wielandt enclosure.
#[derive(Debug, Clone)]
pub struct DominantEigenvalue {
    pub lambda: HPReal,
    pub cw_low: HPReal,
    pub cw_high: HPReal,
    pub iterations: usize,
    pub dim: usize,
}

impl DominantEigenvalue {
    pub fn enclosure_width(&self) -> HPReal {
        self.cw_high.sub(&self.cw_low).abs()
    }
}

/// Power-iterate the transfer operator at width `w`.
pub fn dominant_eigenvalue(
    model: Model,
    w: usize,
    boundary: Boundary,
    p_bits: u32,
    tol: &HPReal,
) -> Result<DominantEigenvalue, ExactError> {
    let space = enumerate_states(model, w, boundary)?;
    let dim = space.len();
    let r = power_iteration(
        |x| tm_apply(&space, x).expect("dimension fixed by the iteration"),
        dim,
        p_bits,
        tol,
        DEFAULT_MAX_ITERS,
    )?;
    Ok(DominantEigenvalue {
        lambda: r.lambda,
        cw_low: r.cw_low,
        cw_high: r.cw_high,
        iterations: r.iterations,
        dim,
    })
}

/// Certified upper bound on the growth rate: Λ°(m)^{1/m} for even m, taking
/// the upper enclosure end and rounding the root up.
pub fn cw_upper_direct(model: Model, m: usize, p_bits: u32, tol: &HPReal) -> Result<HPReal, ExactError> {
    if m < 2 || m % 2 != 0 {
        return Err(ExactError::OddWidth(m));
    }
    let dom = dominant_eigenvalue(model, m, Boundary::Cyclic, p_bits, tol)?;
    Ok(dom.cw_high.root_up(m as u32))
}

/// Certified lower bound on the growth rate from a ratio of cylinder
/// eigenvalues: (Λ°(p+2q)/Λ°(2q))^{1/p}, every rounding directed downward.
///
/// `p` must be even: the ratio inequality comes from log-convexity of the
/// even trace sequence of a symmetric operator, which steps in units of two
/// rows. Odd `p` would assert an unproven (and in fact numerically false)
/// bound, so it is rejected rather than computed.
pub fn cw_lower(model: Model, p: usize, q: usize, p_bits: u32, tol: &HPReal) -> Result<HPReal, ExactError> {
    if p < 2 || p % 2 != 0 {
        return Err(ExactError::OddWidth(p));
    }
    assert!(q >= 1, "q must be at least 1");
    let big = dominant_eigenvalue(model, p + 2 * q, Boundary::Cyclic, p_bits, tol)?;
    let small = dominant_eigenvalue(model, 2 * q, Boundary::Cyclic, p_bits, tol)?;
    Ok(big.cw_low.div_down(&small.cw_high).root_down(p as u32))
}

/// Collatz-Wielandt interval of an arbitrary non-negative irreducible
/// operator at a strictly positive test vector: the dominant eigenvalue lies
/// in `[min_i (Ax)_i/x_i, max_i (Ax)_i/x_i]`, with directed rounding on the
/// ratio extremes.
pub fn cw_bounds<F>(mut apply: F, x: &[HPReal]) -> Result<(HPReal, HPReal), ExactError>
where
    F: FnMut(&[HPReal]) -> Vec<HPReal>,
{
    assert!(!x.is_empty(), "test vector must be non-empty");
    for (i, v) in x.iter().enumerate() {
        if !v.is_positive() {
            return Err(ExactError::NonPositiveVector(i));
        }
    }
    let y = apply(x);
    if y.len() != x.len() {
        return Err(ExactError::DimensionMismatch(format!(
            "operator returned {} entries for a {}-entry vector",
            y.len(),
            x.len()
        )));
    }
    let mut lo = y[0].div_down(&x[0]);
    let mut hi = y[0].div_up(&x[0]);
    for i in 1..x.len() {
        let l = y[i].div_down(&x[i]);
        let h = y[i].div_up(&x[i]);
        if l < lo {
            lo = l;
        }
        if h > hi {
            hi = h;
        }
    }
    Ok((lo, hi))
}
