//! Power iteration for non-negative irreducible operators, with a rigorous
//! Collatz-Wielandt enclosure of the Perron root.
//!
//! The operator is supplied as a closure so callers can apply a transfer
//! matrix without ever materializing it. For any strictly positive vector x,
//!
//! ```text
//! min_i (Ax)_i / x_i  <=  lambda  <=  max_i (Ax)_i / x_i,
//! ```
//!
//! and the ratio extremes are evaluated with directed rounding, so the
//! reported interval genuinely contains the dominant eigenvalue — the power
//! iterates only decide how tight it is.

use super::real::HPReal;
use super::HpError;

#[derive(Debug, Clone)]
pub struct PowerResult {
    /// Rayleigh-quotient estimate from the final iterate.
    pub lambda: HPReal,
    /// Final iterate, normalized to unit max-entry.
    pub vector: Vec<HPReal>,
    /// Rigorous lower Collatz-Wielandt bound (rounded down).
    pub cw_low: HPReal,
    /// Rigorous upper Collatz-Wielandt bound (rounded up).
    pub cw_high: HPReal,
    /// Number of operator applications performed.
    pub iterations: usize,
}

impl PowerResult {
    /// Width of the enclosure, rounded up.
    pub fn enclosure_width(&self) -> HPReal {
        self.cw_high.sub(&self.cw_low).abs()
    }
}

/// Run power iteration from the all-ones vector.
///
/// The Collatz-Wielandt interval of the current iterate is formed on every
/// step with directed rounding; the loop stops once its width is at most
/// `tol` relative to the eigenvalue estimate. Stopping on the interval
/// itself matters: Rayleigh quotients converge at the *square* of the
/// eigenvector rate, so a quotient-based test would declare victory while
/// the enclosure is still orders of magnitude wider than requested.
///
/// Every iterate must stay strictly positive (guaranteed for irreducible
/// non-negative operators); a zero or negative component aborts with
/// [`HpError::NonPositiveIterate`] since the enclosure would be meaningless.
pub fn power_iteration<F>(
    mut apply: F,
    dim: usize,
    prec: u32,
    tol: &HPReal,
    max_iters: usize,
) -> Result<PowerResult, HpError>
where
    F: FnMut(&[HPReal]) -> Vec<HPReal>,
{
    assert!(dim > 0, "operator dimension must be positive");
    assert!(max_iters > 0, "need at least one iteration");

    let mut x: Vec<HPReal> = vec![HPReal::one(prec); dim];
    let mut iterations = 0usize;

    while iterations < max_iters {
        let y = apply(&x);
        assert_eq!(y.len(), dim, "operator changed dimension");
        iterations += 1;
        for v in &y {
            if !v.is_positive() {
                return Err(HpError::NonPositiveIterate(iterations));
            }
        }

        // Rayleigh quotient <x, y> / <x, x>; x is positive so this is safe.
        let mut num = HPReal::zero(prec);
        let mut den = HPReal::zero(prec);
        for (xi, yi) in x.iter().zip(&y) {
            num.add_mul_assign(xi, yi);
            den.add_mul_assign(xi, xi);
        }
        let rq = num.div(&den);

        // Collatz-Wielandt interval at x, directed rounding on the ratios.
        let mut cw_low = y[0].div_down(&x[0]);
        let mut cw_high = y[0].div_up(&x[0]);
        for i in 1..dim {
            let lo = y[i].div_down(&x[i]);
            let hi = y[i].div_up(&x[i]);
            if lo < cw_low {
                cw_low = lo;
            }
            if hi > cw_high {
                cw_high = hi;
            }
        }

        // Renormalize by the max entry to keep magnitudes tame.
        let mut max = y[0].clone();
        for v in &y[1..] {
            if *v > max {
                max = v.clone();
            }
        }
        let next: Vec<HPReal> = y.iter().map(|v| v.div(&max)).collect();

        if cw_high.sub(&cw_low) <= tol.mul(&rq).abs() {
            return Ok(PowerResult {
                lambda: rq,
                vector: next,
                cw_low,
                cw_high,
                iterations,
            });
        }
        x = next;
    }

    Err(HpError::NoConvergence(iterations))
}
