use super::ImageMatrix;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 60;
const OFF_DIAG_TOL: f64 = 1e-12;
const SIGMA_CLAMP: f64 = 1e-14;

/// Thin SVD A = U diag(sigma) Z^T with R = min(rows, cols) columns.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    /// rows x R, orthonormal columns.
    pub u: ImageMatrix,
    /// R singular values, descending, all >= 0.
    pub sigma: Vec<f64>,
    /// cols x R, orthonormal columns.
    pub z: ImageMatrix,
}

impl SvdFactors {
    /// U diag(sigma) Z^T.
    pub fn reconstruct(&self) -> ImageMatrix {
        let rows = self.u.rows();
        let cols = self.z.rows();
        ImageMatrix::from_fn(rows, cols, |r, c| {
            (0..self.sigma.len())
                .map(|i| self.u.at(r, i) * self.sigma[i] * self.z.at(c, i))
                .sum()
        })
    }
}

/// One-sided Jacobi SVD. Deterministic for identical input.
pub fn svd(a: &ImageMatrix) -> Result<SvdFactors> {
    if !a.is_finite() {
        return Err(Error::Numeric("svd input contains non-finite values".into()));
    }
    if a.rows() >= a.cols() {
        svd_tall(a)
    } else {
        // A^T = U' S Z'^T  =>  A = Z' S U'^T
        let f = svd_tall(&a.transpose())?;
        Ok(SvdFactors { u: f.z, sigma: f.sigma, z: f.u })
    }
}

/// Jacobi on the columns of a tall (rows >= cols) matrix.
fn svd_tall(a: &ImageMatrix) -> Result<SvdFactors> {
    let m = a.rows();
    let n = a.cols();

    // column-major working copies: column j of B at b[j*m..], V starts as I
    let mut b = vec![0.0; m * n];
    for r in 0..m {
        for c in 0..n {
            b[c * m + r] = a.at(r, c);
        }
    }
    let mut v = vec![0.0; n * n];
    for j in 0..n {
        v[j * n + j] = 1.0;
    }

    // columns below this norm carry no information (their sigma is clamped to
    // zero later); rotating against them can cycle forever because the Gram
    // angle stays large while the rotation itself underflows to identity
    let fro = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tiny = SIGMA_CLAMP.max(f64::EPSILON * fro);

    let mut residual = 0.0_f64;
    let mut converged = n < 2;
    for _sweep in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        residual = 0.0;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let (app, aqq, apq) = {
                    let (mut app, mut aqq, mut apq) = (0.0, 0.0, 0.0);
                    let bp = &b[p * m..p * m + m];
                    let bq = &b[q * m..q * m + m];
                    for i in 0..m {
                        app += bp[i] * bp[i];
                        aqq += bq[i] * bq[i];
                        apq += bp[i] * bq[i];
                    }
                    (app, aqq, apq)
                };
                if app.sqrt() <= tiny || aqq.sqrt() <= tiny || apq == 0.0 {
                    continue;
                }
                // separate square roots: the product can underflow to zero
                let off = (apq.abs() / app.sqrt()) / aqq.sqrt();
                residual = residual.max(off);
                if off <= OFF_DIAG_TOL {
                    continue;
                }
                // classic Jacobi rotation annihilating the (p,q) Gram entry
                let zeta = (aqq - app) / (2.0 * apq);
                // sign(0) must be +1 here or equal-norm pairs never rotate
                let sign = if zeta >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                rotate_cols(&mut b, m, p, q, cs, sn);
                rotate_cols(&mut v, n, p, q, cs, sn);
            }
        }
        converged = residual <= OFF_DIAG_TOL;
    }
    if !converged {
        return Err(Error::SvdConvergence { sweeps: MAX_SWEEPS, residual });
    }

    // singular values are the column norms; normalized columns form U
    let mut order: Vec<usize> = (0..n).collect();
    let mut sigma_raw = vec![0.0; n];
    for (j, s) in sigma_raw.iter_mut().enumerate() {
        *s = b[j * m..j * m + m].iter().map(|x| x * x).sum::<f64>().sqrt();
    }
    order.sort_by(|&i, &j| sigma_raw[j].partial_cmp(&sigma_raw[i]).unwrap());

    let mut u = ImageMatrix::zeros(m, n);
    let mut z = ImageMatrix::zeros(n, n);
    let mut sigma = vec![0.0; n];
    let mut deficient = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        let s = if sigma_raw[j] < SIGMA_CLAMP { 0.0 } else { sigma_raw[j] };
        sigma[k] = s;
        for r in 0..n {
            z.set(r, k, v[j * n + r]);
        }
        if s > 0.0 {
            for r in 0..m {
                u.set(r, k, b[j * m + r] / s);
            }
        } else {
            deficient.push(k);
        }
    }
    if !deficient.is_empty() {
        fill_orthonormal(&mut u, &deficient);
    }
    Ok(SvdFactors { u, sigma, z })
}

#[inline]
fn rotate_cols(cols: &mut [f64], len: usize, p: usize, q: usize, cs: f64, sn: f64) {
    let (lo, hi) = if p < q { (p, q) } else { (q, p) };
    let (head, tail) = cols.split_at_mut(hi * len);
    let cp = &mut head[p * len..p * len + len];
    let cq = &mut tail[..len];
    debug_assert!(lo == p);
    let _ = lo;
    for i in 0..len {
        let bp = cp[i];
        let bq = cq[i];
        cp[i] = cs * bp - sn * bq;
        cq[i] = sn * bp + cs * bq;
    }
}

/// Completes zero-sigma columns of U to an orthonormal set by Gram-Schmidt
/// against the canonical basis.
fn fill_orthonormal(u: &mut ImageMatrix, deficient: &[usize]) {
    let m = u.rows();
    let n = u.cols();
    let mut next = deficient.iter().copied();
    let mut col = match next.next() {
        Some(c) => c,
        None => return,
    };
    for e in 0..m {
        // candidate = e_e minus projections onto already-filled columns
        let mut cand = vec![0.0; m];
        cand[e] = 1.0;
        for k in 0..n {
            if deficient.contains(&k) && k >= col {
                continue;
            }
            let dot: f64 = (0..m).map(|r| u.at(r, k) * cand[r]).sum();
            for (r, cv) in cand.iter_mut().enumerate() {
                *cv -= dot * u.at(r, k);
            }
        }
        let norm: f64 = cand.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            for (r, cv) in cand.iter().enumerate() {
                u.set(r, col, cv / norm);
            }
            col = match next.next() {
                Some(c) => c,
                None => return,
            };
        }
    }
}
