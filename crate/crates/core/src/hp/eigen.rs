//! Symmetric eigendecomposition via cyclic Jacobi rotations.
//!
//! Jacobi is a good fit here: the matrices are small and symmetric, every
//! rotation is orthogonal up to rounding (so eigenvector quality degrades
//! very slowly even over many sweeps), and convergence is quadratic once the
//! off-diagonal mass is small. At 1024-bit precision that typically means a
//! handful of extra sweeps compared to double precision, not hundreds.

use super::matrix::HPMatrix;
use super::real::HPReal;
use super::HpError;

/// Result of [`sym_eigen`]: `vectors` holds orthonormal eigenvectors as
/// columns, ordered to match `eigenvalues`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<HPReal>,
    pub vectors: HPMatrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Q · diag(λ) · Qᵀ — used by tests and by callers that want a
    /// reconstruction residual.
    pub fn reconstruct(&self) -> HPMatrix {
        let qd = self.vectors.mul_diag(&self.eigenvalues);
        qd.matmul(&self.vectors.transpose())
            .expect("square dimensions agree")
    }

    /// ‖QᵀQ − I‖max.
    pub fn orthogonality_defect(&self) -> HPReal {
        let n = self.dim();
        let qtq = self
            .vectors
            .transpose()
            .matmul(&self.vectors)
            .expect("square dimensions agree");
        let prec = self.eigenvalues[0].prec();
        qtq.max_diff(&HPMatrix::identity(n, prec))
    }
}

/// Hard cap on Jacobi sweeps. Quadratic convergence makes the sweep count
/// grow roughly logarithmically with precision; 64 is far beyond anything a
/// converging problem needs, so hitting it signals a real failure.
const MAX_SWEEPS: usize = 64;

/// Eigendecomposition of a symmetric matrix.
///
/// The input is checked against `tol`: if its worst asymmetry exceeds
/// `tol · max|entry|` the call fails with [`HpError::NotSymmetric`]; smaller
/// asymmetries are averaged away before iterating. Sweeps run until every
/// off-diagonal entry is at most `tol · max|entry|` of the original matrix
/// (with a floor a few bits above roundoff, so an over-tight `tol` cannot
/// spin forever).
///
/// Ordering: descending |λ|, ties broken by descending signed value, then by
/// input position. Each eigenvector is normalized so its largest-magnitude
/// component (lowest index on ties) is non-negative.
pub fn sym_eigen(m: &HPMatrix, tol: &HPReal) -> Result<EigenDecomposition, HpError> {
    if !m.is_square() {
        return Err(HpError::DimensionMismatch(format!(
            "sym_eigen needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    let prec = m.at(0, 0).prec();

    let max_abs = m.max_abs();
    let asym = m.max_asymmetry();
    let allowed = tol.mul(&max_abs);
    if asym > allowed {
        return Err(HpError::NotSymmetric {
            asym: asym.to_decimal(),
            allowed: allowed.to_decimal(),
        });
    }

    let mut a = m.symmetrized();
    let mut v = HPMatrix::identity(n, prec);

    // Convergence threshold: tol relative to the input scale, floored a few
    // bits above roundoff. A zero matrix converges immediately (threshold 0).
    let floor = max_abs.ldexp(8 - prec as i32);
    let mut threshold = tol.mul(&max_abs);
    if threshold < floor {
        threshold = floor;
    }

    let one = HPReal::one(prec);
    let mut sweeps = 0usize;
    loop {
        let mut off = HPReal::zero(prec);
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.at(p, q).abs();
                if apq > off {
                    off = apq;
                }
            }
        }
        if off <= threshold {
            break;
        }
        if sweeps >= MAX_SWEEPS {
            return Err(HpError::NoConvergence(sweeps));
        }
        sweeps += 1;

        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.at(p, q).clone();
                if apq.is_zero() {
                    continue;
                }
                // Rotation angle from the classic 2x2 annihilation formula.
                let theta = a.at(q, q).sub(a.at(p, p)).div(&apq.ldexp(1));
                let root = theta.mul(&theta).add(&one).sqrt();
                let t_mag = one.div(&theta.abs().add(&root));
                let t = if theta.is_negative() { t_mag.neg() } else { t_mag };
                let c = one.div(&t.mul(&t).add(&one).sqrt());
                let s = t.mul(&c);

                let tapq = t.mul(&apq);
                let new_pp = a.at(p, p).sub(&tapq);
                let new_qq = a.at(q, q).add(&tapq);
                *a.at_mut(p, p) = new_pp;
                *a.at_mut(q, q) = new_qq;
                *a.at_mut(p, q) = HPReal::zero(prec);
                *a.at_mut(q, p) = HPReal::zero(prec);

                for i in 0..n {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = a.at(i, p).clone();
                    let aiq = a.at(i, q).clone();
                    let new_ip = c.mul(&aip).sub(&s.mul(&aiq));
                    let new_iq = s.mul(&aip).add(&c.mul(&aiq));
                    *a.at_mut(i, p) = new_ip.clone();
                    *a.at_mut(p, i) = new_ip;
                    *a.at_mut(i, q) = new_iq.clone();
                    *a.at_mut(q, i) = new_iq;
                }
                for i in 0..n {
                    let vip = v.at(i, p).clone();
                    let viq = v.at(i, q).clone();
                    *v.at_mut(i, p) = c.mul(&vip).sub(&s.mul(&viq));
                    *v.at_mut(i, q) = s.mul(&vip).add(&c.mul(&viq));
                }
            }
        }
    }

    // Sort spectra: |λ| descending, ties by signed value descending; the
    // stable sort keeps input order on exact ties.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let ai = a.at(i, i).abs();
        let aj = a.at(j, j).abs();
        match aj.partial_cmp(&ai) {
            Some(core::cmp::Ordering::Equal) | None => a
                .at(j, j)
                .partial_cmp(a.at(i, i))
                .unwrap_or(core::cmp::Ordering::Equal),
            Some(ord) => ord,
        }
    });

    let eigenvalues: Vec<HPReal> = order.iter().map(|&i| a.at(i, i).clone()).collect();
    let mut vectors = HPMatrix::from_fn(n, n, |i, j| v.at(i, order[j]).clone());

    // Sign convention: make the largest-|entry| component of each column
    // non-negative, taking the lowest index on magnitude ties.
    for j in 0..n {
        let mut lead = 0usize;
        let mut lead_abs = vectors.at(0, j).abs();
        for i in 1..n {
            let cand = vectors.at(i, j).abs();
            if cand > lead_abs {
                lead_abs = cand;
                lead = i;
            }
        }
        if vectors.at(lead, j).is_negative() {
            for i in 0..n {
                let flipped = vectors.at(i, j).neg();
                *vectors.at_mut(i, j) = flipped;
            }
        }
    }

    Ok(EigenDecomposition { eigenvalues, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(x: f64) -> HPReal {
        HPReal::from_f64(x, 128)
    }

    fn tol() -> HPReal {
        HPReal::parse_decimal("1e-30", 128).unwrap()
    }

    #[test]
    fn diagonal_matrix_sorts() {
        let m = HPMatrix::from_fn(3, 3, |i, j| {
            if i == j {
                real([3.0, 1.0, 2.0][i])
            } else {
                real(0.0)
            }
        });
        let d = sym_eigen(&m, &tol()).unwrap();
        let got: Vec<f64> = d.eigenvalues.iter().map(|x| x.to_f64()).collect();
        assert_eq!(got, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn swap_matrix_spectrum() {
        let m = HPMatrix::from_fn(2, 2, |i, j| real(if i != j { 1.0 } else { 0.0 }));
        let d = sym_eigen(&m, &tol()).unwrap();
        let got: Vec<f64> = d.eigenvalues.iter().map(|x| x.to_f64()).collect();
        assert_eq!(got, vec![1.0, -1.0]);
        // Perron vector of the swap is uniform and positive.
        assert!(d.vectors.at(0, 0).is_positive());
        assert!(d.vectors.at(1, 0).is_positive());
    }

    #[test]
    fn two_by_two_shifted() {
        let m = HPMatrix::from_fn(2, 2, |i, j| real(if i == j { 2.0 } else { 1.0 }));
        let d = sym_eigen(&m, &tol()).unwrap();
        let got: Vec<f64> = d.eigenvalues.iter().map(|x| x.to_f64()).collect();
        assert_eq!(got, vec![3.0, 1.0]);
    }

    #[test]
    fn rejects_asymmetric_input() {
        let m = HPMatrix::from_fn(2, 2, |i, j| real((2 * i + j) as f64));
        match sym_eigen(&m, &tol()) {
            Err(HpError::NotSymmetric { .. }) => {}
            other => panic!("expected NotSymmetric, got {:?}", other.map(|d| d.eigenvalues[0].to_f64())),
        }
    }

    #[test]
    fn reconstruction_and_orthogonality() {
        // A fixed not-quite-trivial symmetric matrix.
        let vals = [
            [4.0, 1.0, -2.0, 0.5],
            [1.0, 3.0, 0.25, -1.0],
            [-2.0, 0.25, 1.5, 0.75],
            [0.5, -1.0, 0.75, -2.0],
        ];
        let m = HPMatrix::from_fn(4, 4, |i, j| real(vals[i][j]));
        let d = sym_eigen(&m, &tol()).unwrap();
        let recon_err = d.reconstruct().max_diff(&m).to_f64();
        assert!(recon_err < 1e-29, "reconstruction error {recon_err}");
        let orth = d.orthogonality_defect().to_f64();
        assert!(orth < 1e-35, "orthogonality defect {orth}");
        for k in 0..3 {
            assert!(d.eigenvalues[k].abs() >= d.eigenvalues[k + 1].abs());
        }
    }
}
