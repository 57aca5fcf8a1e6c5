//! Christoffel functions and Gaussian rules with extreme-dynamic-range
//! weights, evaluated by a renormalized transfer-matrix sweep, plus the
//! Hausdorff-dimension brackets they produce.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jacobi::{GaussRule, JacobiMatrix};
use crate::numeric::{compensated_sum, log_sum_exp};
use crate::tridiag::tridiagonal_eigenvalues;

/// Default renormalization threshold on the running kernel value.
pub const RENORM_THRESHOLD: f64 = 1e100;

/// State of the renormalized polynomial sweep at one point: the rescaled pair
/// `(p_l, p_{l-1})`, the rescaled running kernel, and the accumulated log of
/// all renormalization factors. The true kernel is `ln(kernel_partial) + 2W`.
#[derive(Debug, Clone, Copy)]
pub struct RenormalizedPolyState {
    pub p: f64,
    pub p_prev: f64,
    pub kernel_partial: f64,
    pub log_scale: f64,
}

/// Runs the transfer recurrence at `x` through degree `j-1`, renormalizing by
/// the max-norm of the polynomial pair whenever the kernel passes `threshold`.
fn kernel_sweep(jac: &JacobiMatrix, x: f64, j: usize, threshold: f64) -> RenormalizedPolyState {
    let mut st = RenormalizedPolyState { p: 1.0, p_prev: 0.0, kernel_partial: 1.0, log_scale: 0.0 };
    let diag = jac.diag();
    let off = jac.off();
    for l in 0..j.saturating_sub(1) {
        let a_l = if l >= 1 { off[l - 1] } else { 0.0 };
        let a_next = off[l];
        let p_next = ((x - diag[l]) * st.p - a_l * st.p_prev) / a_next;
        st.p_prev = st.p;
        st.p = p_next;
        st.kernel_partial += st.p * st.p;
        if st.kernel_partial > threshold {
            let v = st.p.abs().max(st.p_prev.abs());
            st.p /= v;
            st.p_prev /= v;
            st.kernel_partial /= v * v;
            st.log_scale += v.ln();
        }
    }
    st
}

/// `log lambda_j(x) = -(log K_j(x,x) + 2W)`, the log-Christoffel function.
///
/// The output is finite for any real `x`; near Farey points it goes far below
/// anything a plain double weight could carry.
pub fn log_christoffel(jac: &JacobiMatrix, x: f64, j: usize) -> Result<f64> {
    log_christoffel_with_threshold(jac, x, j, RENORM_THRESHOLD)
}

pub fn log_christoffel_with_threshold(
    jac: &JacobiMatrix,
    x: f64,
    j: usize,
    threshold: f64,
) -> Result<f64> {
    if j == 0 || j > jac.size() {
        return Err(Error::Domain(format!(
            "Christoffel order {j} out of range 1..={}",
            jac.size()
        )));
    }
    let st = kernel_sweep(jac, x, j, threshold);
    Ok(-(st.kernel_partial.ln() + 2.0 * st.log_scale))
}

/// `(log lambda_j(x), S_j(x))` where `S_j = p_{j-1}^2(x) / K_j(x,x)` is the
/// ratio-asymptotics weight. The ratio is formed inside the renormalized sweep,
/// so neither factor is ever materialized at its true (overflowed) scale.
pub fn log_christoffel_and_ratio(jac: &JacobiMatrix, x: f64, j: usize) -> Result<(f64, f64)> {
    if j == 0 || j > jac.size() {
        return Err(Error::Domain(format!(
            "Christoffel order {j} out of range 1..={}",
            jac.size()
        )));
    }
    let st = kernel_sweep(jac, x, j, RENORM_THRESHOLD);
    let ratio = st.p * st.p / st.kernel_partial;
    Ok((-(st.kernel_partial.ln() + 2.0 * st.log_scale), ratio))
}

/// The `j`-point Gauss rule of the measure behind `jac`: nodes are eigenvalues
/// of the leading block, log-weights come from the kernel formula
/// `w = lambda_j` at the nodes. Weights are never read off eigenvectors.
pub fn gauss_rule(jac: &JacobiMatrix, j: usize) -> Result<GaussRule> {
    let nodes = tridiagonal_eigenvalues(jac, j)?;
    let log_weights = nodes
        .par_iter()
        .map(|&x| log_christoffel(jac, x, j))
        .collect::<Result<Vec<f64>>>()?;
    GaussRule::new(nodes, log_weights)
}

/// Integrates `f` against the rule. Strictly positive integrands are summed in
/// the log domain; otherwise a compensated sum over `w * f` is used.
pub fn integrate(rule: &GaussRule, mut f: impl FnMut(f64) -> f64) -> Result<f64> {
    let values: Vec<f64> = rule.nodes().iter().map(|&x| f(x)).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("integrand not finite at a node".into()));
    }
    if values.iter().all(|&v| v > 0.0) {
        let log_terms: Vec<f64> = values
            .iter()
            .zip(rule.log_weights())
            .map(|(&v, &lw)| lw + v.ln())
            .collect();
        Ok(log_sum_exp(log_terms.iter().copied()).exp())
    } else {
        Ok(compensated_sum(
            values.iter().zip(rule.log_weights()).map(|(&v, &lw)| lw.exp() * v),
        ))
    }
}

/// Rigorous bracket on the Hausdorff dimension of the measure at quadrature
/// order `j`, from the dimension integral `dim = log 2 / (2 I)` with
/// `I = integral of log(1+x)`.
#[derive(Debug, Clone, Serialize)]
pub struct HausdorffBounds {
    pub order: usize,
    pub dim_lower: f64,
    pub dim_upper: f64,
    pub gap: f64,
}

/// Evaluates the dimension integral with two quadrature rules that bracket it:
/// the plain `j`-point Gauss rule of `mu`, and the rule with a fixed node at 0
/// built from the Gauss rule of `x dmu`. For this integrand the first
/// overshoots the integral and the second undershoots it; the bound ordering
/// is taken from the computed values, not assumed.
pub fn hausdorff_bounds(jac: &JacobiMatrix, j: usize) -> Result<HausdorffBounds> {
    if j < 2 {
        return Err(Error::Domain("dimension bracket needs order >= 2".into()));
    }
    if jac.size() < j + 2 {
        return Err(Error::Domain(format!(
            "dimension bracket at order {j} needs at least {} coefficients",
            j + 2
        )));
    }
    let rule = gauss_rule(jac, j)?;
    let i_first = integrate(&rule, f64::ln_1p)?;

    // second rule: I = f(0) + sum w_l m1 (f(x_l) - f(0)) / x_l over the Gauss
    // rule of the normalized x-modified measure; f(0) = 0 here.
    let modified = jac.linear_factor(0.0)?;
    let m1 = jac.moments(1)[1];
    let mod_rule = gauss_rule(&modified, j)?;
    let i_second = m1 * integrate(&mod_rule, |x| x.ln_1p() / x)?;

    let dim_of = |i: f64| std::f64::consts::LN_2 / (2.0 * i);
    let (d1, d2) = (dim_of(i_first), dim_of(i_second));
    let (dim_lower, dim_upper) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
    Ok(HausdorffBounds { order: j, dim_lower, dim_upper, gap: dim_upper - dim_lower })
}

/// Batch evaluation of `log10(1 / lambda_j)` over a grid, for plotting the
/// inverse-weight landscape. Points are processed in parallel but reported in
/// grid order with per-point deterministic values.
pub fn christoffel_grid(jac: &JacobiMatrix, j: usize, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    grid.par_iter()
        .map(|&x| {
            log_christoffel(jac, x, j).map(|ll| (x, -ll / std::f64::consts::LN_10))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_one_and_zero_cases() {
        let jac = JacobiMatrix::uniform(8).unwrap();
        // lambda_1 = 1/p_0^2 = 1
        assert_eq!(log_christoffel(&jac, 0.3, 1).unwrap(), 0.0);
        // p_1(b_0) = 0 so K_2 = 1
        assert_eq!(log_christoffel(&jac, jac.b(0), 2).unwrap(), 0.0);
        assert!(log_christoffel(&jac, 0.3, 9).is_err());
    }

    #[test]
    fn kernel_is_monotone_in_order() {
        let jac = JacobiMatrix::uniform(64).unwrap();
        for &x in &[0.01, 0.3, 0.5, 0.77, 0.999] {
            let mut prev = log_christoffel(&jac, x, 1).unwrap();
            for j in 2..=64 {
                let cur = log_christoffel(&jac, x, j).unwrap();
                assert!(cur <= prev + 1e-12, "x={x} j={j}");
                prev = cur;
            }
        }
    }

    #[test]
    fn gauss_rule_uniform_matches_legendre() {
        // order-2 rule of the uniform measure: nodes 1/2 +- 1/(2 sqrt 3), weights 1/2
        let jac = JacobiMatrix::uniform(8).unwrap();
        let rule = gauss_rule(&jac, 2).unwrap();
        let h = 1.0 / (2.0 * 3.0f64.sqrt());
        assert!((rule.nodes()[0] - (0.5 - h)).abs() < 1e-14);
        assert!((rule.nodes()[1] - (0.5 + h)).abs() < 1e-14);
        for lw in rule.log_weights() {
            assert!((lw - 0.5f64.ln()).abs() < 1e-13);
        }
        assert!(rule.total_mass_log().abs() < 1e-12);
    }

    #[test]
    fn integrate_constant_and_linear() {
        let jac = JacobiMatrix::uniform(16).unwrap();
        let rule = gauss_rule(&jac, 8).unwrap();
        assert!((integrate(&rule, |_| 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((integrate(&rule, |x| x).unwrap() - 0.5).abs() < 1e-12);
        // sign-changing integrand goes through the compensated path
        assert!((integrate(&rule, |x| x - 0.5).unwrap()).abs() < 1e-12);
        assert!(integrate(&rule, |x| (x - rule.nodes()[0]).ln()).is_err());
    }

    #[test]
    fn moment_exactness_uniform() {
        let jac = JacobiMatrix::uniform(70).unwrap();
        for j in [8usize, 32, 64] {
            let rule = gauss_rule(&jac, j).unwrap();
            let moments = jac.moments(2 * j - 1);
            for m in 0..=(2 * j - 1) {
                let got = integrate(&rule, |x| if m == 0 { 1.0 } else { x.powi(m as i32) })
                    .unwrap();
                let want = moments[m];
                assert!(
                    (got - want).abs() <= 1e-10 * want.abs(),
                    "j={j} m={m}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn threshold_invariance_uniform() {
        let jac = JacobiMatrix::uniform(128).unwrap();
        for &x in &[0.002, 0.25, 0.6180339887] {
            let base = log_christoffel_with_threshold(&jac, x, 128, 1e100).unwrap();
            for &t in &[1e50, 1e200] {
                let other = log_christoffel_with_threshold(&jac, x, 128, t).unwrap();
                assert!((base - other).abs() < 1e-9, "x={x} threshold={t}");
            }
        }
    }

    #[test]
    fn ratio_weights_sum_to_one_chebyshev() {
        let jac = JacobiMatrix::chebyshev_equilibrium(40).unwrap();
        let j = 16;
        let nodes = tridiagonal_eigenvalues(&jac, j).unwrap();
        let mut total = 0.0;
        for &x in &nodes {
            let (_, s) = log_christoffel_and_ratio(&jac, x, j).unwrap();
            total += s;
        }
        assert!((total - 1.0).abs() < 1e-10);
    }
}
