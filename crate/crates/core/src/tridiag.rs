//! Dense-free linear algebra on symmetric tridiagonal matrices: eigenvalues by
//! the implicit QL iteration (no eigenvectors, ever — Gaussian weights are taken
//! from the kernel formula instead) and a pivoted tridiagonal solver.

use crate::error::{Error, Result};
use crate::jacobi::JacobiMatrix;

const MAX_QL_SWEEPS: usize = 64;

/// Eigenvalues of the leading `j x j` principal submatrix, ascending.
///
/// These are the zeros of the degree-`j` orthogonal polynomial, i.e. the nodes
/// of the `j`-point Gauss rule.
pub fn tridiagonal_eigenvalues(jac: &JacobiMatrix, j: usize) -> Result<Vec<f64>> {
    if j == 0 || j > jac.size() {
        return Err(Error::Domain(format!(
            "eigenvalue order {j} out of range 1..={}",
            jac.size()
        )));
    }
    let mut d = jac.diag()[..j].to_vec();
    let mut e = vec![0.0; j];
    e[..j - 1].copy_from_slice(&jac.off()[..j - 1]);
    ql_implicit(&mut d, &mut e)?;
    d.sort_unstable_by(f64::total_cmp);
    Ok(d)
}

/// Implicit-shift QL on (d, e); e[i] couples rows i and i+1, e[n-1] is scratch.
fn ql_implicit(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    let eps = f64::EPSILON;
    for l in 0..n {
        let mut iter = 0;
        loop {
            // find the first split point at or after l
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_SWEEPS {
                return Err(Error::Solver(format!(
                    "QL iteration failed to converge at row {l} after {MAX_QL_SWEEPS} sweeps"
                )));
            }
            // implicit Wilkinson-style shift from the 2x2 at l
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    // deflate and restart this row
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if i == l {
                    d[l] -= p;
                    e[l] = g;
                    e[m] = 0.0;
                }
            }
        }
    }
    Ok(())
}

/// Solves `(c J + d I) w = rhs` by tridiagonal LU with partial pivoting.
///
/// Pivoting introduces one extra superdiagonal of fill-in; the factorization is
/// rejected when a pivot falls below roundoff relative to the matrix scale.
pub fn tridiagonal_solve(jac: &JacobiMatrix, shift_scale: (f64, f64), rhs: &[f64]) -> Result<Vec<f64>> {
    let (c, d) = shift_scale;
    let n = jac.size();
    if rhs.len() != n {
        return Err(Error::Domain(format!(
            "rhs length {} does not match size {n}",
            rhs.len()
        )));
    }
    // band rows: sub[i] couples (i, i-1); dia; sup[i] couples (i, i+1); fil is fill-in (i, i+2)
    let mut sub = vec![0.0; n];
    let mut dia = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut fil = vec![0.0; n];
    for i in 0..n {
        dia[i] = c * jac.b(i) + d;
        if i > 0 {
            sub[i] = c * jac.a(i);
        }
        if i + 1 < n {
            sup[i] = c * jac.a(i + 1);
        }
    }
    let scale = dia
        .iter()
        .chain(sub.iter())
        .fold(0.0f64, |m, &v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let tiny = scale * f64::EPSILON * 16.0;

    let mut x = rhs.to_vec();
    for i in 0..n {
        if i + 1 < n && sub[i + 1].abs() > dia[i].abs() {
            // swap band rows i and i+1; at this column they read
            //   row i   = (dia[i],   sup[i],   fil[i])
            //   row i+1 = (sub[i+1], dia[i+1], sup[i+1])
            std::mem::swap(&mut dia[i], &mut sub[i + 1]);
            std::mem::swap(&mut sup[i], &mut dia[i + 1]);
            std::mem::swap(&mut fil[i], &mut sup[i + 1]);
            x.swap(i, i + 1);
        }
        let pivot = dia[i];
        if pivot.abs() <= tiny {
            return Err(Error::Solver(format!(
                "system numerically singular: pivot {:.3e} at row {i} (scale {:.3e})",
                pivot, scale
            )));
        }
        if i + 1 < n {
            let m = sub[i + 1] / pivot;
            dia[i + 1] -= m * sup[i];
            sup[i + 1] -= m * fil[i];
            x[i + 1] -= m * x[i];
        }
    }
    // back substitution over two superdiagonals
    for i in (0..n).rev() {
        let mut s = x[i];
        if i + 1 < n {
            s -= sup[i] * x[i + 1];
        }
        if i + 2 < n {
            s -= fil[i] * x[i + 2];
        }
        x[i] = s / dia[i];
    }
    Ok(x)
}
