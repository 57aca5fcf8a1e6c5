//! Recovery of recurrence coefficients from operators and from discrete
//! measures: Lanczos tridiagonalization with full reorthogonalization, and the
//! Gragg-Harrod rotation algorithm for large atom sets.

use crate::error::{Error, Result};
use crate::jacobi::JacobiMatrix;
use crate::measure::DiscreteMeasure;
use crate::numeric::{dot, norm2};

/// Residual norms below this are treated as exact invariant-subspace breakdown.
pub const BREAKDOWN_TOL: f64 = 1e-14;

/// Result of a tridiagonalization that may stop early.
#[derive(Debug, Clone)]
pub struct LanczosOutcome {
    pub jacobi: JacobiMatrix,
    /// Step at which the residual fell below the breakdown tolerance, if any;
    /// the matrix then has that many rows.
    pub breakdown: Option<usize>,
}

/// Lanczos with full reorthogonalization: the Jacobi matrix of the spectral
/// measure of a self-adjoint operator relative to `start`.
///
/// `apply(v, out)` must write the operator image of `v` into `out`. Every new
/// basis vector is reorthogonalized against all previous ones; reductions run
/// in a fixed order so results are reproducible bit for bit.
pub fn lanczos_tridiagonalize(
    dim: usize,
    mut apply: impl FnMut(&[f64], &mut [f64]),
    start: &[f64],
    steps: usize,
) -> Result<LanczosOutcome> {
    if steps == 0 || steps > dim {
        return Err(Error::Domain(format!("step count {steps} out of range 1..={dim}")));
    }
    if start.len() != dim {
        return Err(Error::Domain("start vector has wrong dimension".into()));
    }
    let nrm = norm2(start);
    if (nrm - 1.0).abs() > 1e-8 {
        return Err(Error::Domain(format!("start vector must have unit norm, got {nrm}")));
    }

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut diag = Vec::with_capacity(steps);
    let mut off = Vec::with_capacity(steps.saturating_sub(1));
    let mut v = start.to_vec();
    // renormalize exactly once so downstream identities see a unit vector
    for x in &mut v {
        *x /= nrm;
    }
    let mut u = vec![0.0; dim];
    let mut breakdown = None;

    for k in 0..steps {
        apply(&v, &mut u);
        let alpha = dot(&v, &u);
        diag.push(alpha);
        basis.push(v.clone());
        if k + 1 == steps {
            break;
        }
        for i in 0..dim {
            u[i] -= alpha * v[i];
        }
        if k > 0 {
            let beta_prev = off[k - 1];
            let prev = &basis[k - 1];
            for i in 0..dim {
                u[i] -= beta_prev * prev[i];
            }
        }
        // full reorthogonalization against the whole basis
        for w in &basis {
            let c = dot(w, &u);
            for i in 0..dim {
                u[i] -= c * w[i];
            }
        }
        let beta = norm2(&u);
        if beta < BREAKDOWN_TOL {
            breakdown = Some(k + 1);
            break;
        }
        off.push(beta);
        v.clone_from(&u);
        for x in &mut v {
            *x /= beta;
        }
    }
    Ok(LanczosOutcome { jacobi: JacobiMatrix::new(diag, off)?, breakdown })
}

/// Outcome of building a Jacobi matrix from weighted atoms.
#[derive(Debug, Clone)]
pub struct AtomsOutcome {
    pub jacobi: JacobiMatrix,
    pub breakdown: Option<usize>,
    /// Atoms whose weight underflowed to zero in the start vector.
    pub dropped_atoms: usize,
}

/// First `k` recurrence coefficients of a discrete measure, via Lanczos over
/// the diagonal operator of atom positions started at the square-root weights.
pub fn jacobi_from_atoms(m: &DiscreteMeasure, k: usize) -> Result<AtomsOutcome> {
    if k == 0 || k > m.len() {
        return Err(Error::Domain(format!(
            "requested {k} coefficients from {} atoms",
            m.len()
        )));
    }
    let mass_log = m.total_mass_log();
    let positions: Vec<f64> = m.positions().collect();
    let start: Vec<f64> = m.log_weights().map(|lw| ((lw - mass_log) / 2.0).exp()).collect();
    let dropped = start.iter().filter(|&&s| s == 0.0).count();
    let nrm = norm2(&start);
    let start: Vec<f64> = start.iter().map(|s| s / nrm).collect();
    let outcome = lanczos_tridiagonalize(
        positions.len(),
        |v, out| {
            for (i, x) in positions.iter().enumerate() {
                out[i] = x * v[i];
            }
        },
        &start,
        k,
    )?;
    Ok(AtomsOutcome {
        jacobi: outcome.jacobi,
        breakdown: outcome.breakdown,
        dropped_atoms: dropped,
    })
}

/// First `k` recurrence coefficients of the measure `sum_i w_i delta_{x_i}`
/// by the Gragg-Harrod rotation scheme (atoms folded in one at a time).
///
/// This matches `jacobi_from_atoms` to roundoff but costs `O(L^2)` flops with
/// no basis storage, which is what makes the large fixed-point runs practical.
/// Positions must be strictly increasing; zero weights are skipped.
pub fn jacobi_from_atoms_rkpw(positions: &[f64], weights: &[f64], k: usize) -> Result<JacobiMatrix> {
    if positions.len() != weights.len() {
        return Err(Error::Domain("positions/weights length mismatch".into()));
    }
    if positions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Data("atom positions must be strictly increasing".into()));
    }
    if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
        return Err(Error::Data("weights must be finite and non-negative".into()));
    }
    let kept: Vec<(f64, f64)> = positions
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&x, &w)| (x, w))
        .collect();
    let l = kept.len();
    if k == 0 || k > l {
        return Err(Error::Domain(format!("requested {k} coefficients from {l} usable atoms")));
    }

    // alpha[i] carries diagonal entries, beta[i] squared off-diagonals with
    // beta[0] the running total mass.
    let mut alpha: Vec<f64> = kept.iter().map(|&(x, _)| x).collect();
    let mut beta = vec![0.0; l];
    beta[0] = kept[0].1;
    for n in 0..l - 1 {
        let (xlam, mut pn) = kept[n + 1];
        let mut gam = 1.0;
        let mut sig = 0.0;
        let mut t = 0.0;
        for i in 0..=n + 1 {
            let rho = beta[i] + pn;
            let tmp = gam * rho;
            let tsig = sig;
            if rho <= 0.0 {
                gam = 1.0;
                sig = 0.0;
            } else {
                gam = beta[i] / rho;
                sig = pn / rho;
            }
            let tk = sig * (alpha[i] - xlam) - gam * t;
            alpha[i] -= tk - t;
            t = tk;
            pn = if sig <= 0.0 { tsig * beta[i] } else { t * t / sig };
            beta[i] = tmp;
        }
    }
    let diag = alpha[..k].to_vec();
    let off = beta[1..k].iter().map(|&b| b.sqrt()).collect();
    JacobiMatrix::new(diag, off)
}
