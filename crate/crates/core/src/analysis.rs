//! Diagnostic pipelines over a computed Jacobi matrix: root-asymptotics
//! regularity, zero comparison against Chebyshev, discrepancy of the zero
//! measure, ratio-asymptotics weights and their Hutchinson distance to the
//! equilibrium limit, and the divergent series that rule out stronger
//! asymptotics.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jacobi::JacobiMatrix;
use crate::measure::DiscreteMeasure;
use crate::quadrature::log_christoffel_and_ratio;
use crate::tridiag::tridiagonal_eigenvalues;

/// Least-squares power law `y = A x^-B` fitted in log-log coordinates.
#[derive(Debug, Clone, Serialize)]
pub struct PowerLawFit {
    pub amplitude: f64,
    pub exponent: f64,
    /// RMS residual of `log y` around the fit.
    pub residual: f64,
}

pub fn power_law_fit(xs: &[f64], ys: &[f64]) -> Result<PowerLawFit> {
    if xs.len() != ys.len() {
        return Err(Error::Data("mismatched fit input lengths".into()));
    }
    if xs.len() < 2 {
        return Err(Error::Data("power-law fit is underdetermined below 2 points".into()));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return Err(Error::Data("power-law fit needs positive data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Data("power-law fit needs distinct abscissae".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - (intercept + slope * x)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(PowerLawFit { amplitude: intercept.exp(), exponent: -slope, residual })
}

/// Root-asymptotics diagnostics: geometric means of the off-diagonal entries
/// against the capacity 1/4 of `[0,1]`.
#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    /// `Gamma_j = (prod_{l<=j} a_l)^(1/j)`.
    pub gamma: Vec<f64>,
    /// `delta_j = log(1/4) - (1/j) sum_{l<=j} log a_l`, positive when the
    /// geometric mean sits below capacity.
    pub delta: Vec<f64>,
    /// `Sigma^3_j = j delta_j`, the partial sums whose divergence rules out
    /// power asymptotics.
    pub sigma3: Vec<f64>,
    /// Power-law fit of `delta_j`; absent when some delta in the fit window is
    /// not positive (e.g. for a matrix already sitting at capacity).
    pub fit: Option<PowerLawFit>,
    pub capacity: f64,
}

/// Computes `Gamma_j`, `delta_j` for `j = 1..=j_max` and fits
/// `delta_j ~ A j^-B` over the last nine tenths of the range (the first decade
/// of coefficients sees a smaller effective support and is excluded).
pub fn regularity_report(jac: &JacobiMatrix, j_max: usize) -> Result<RegularityReport> {
    if j_max == 0 || j_max + 1 > jac.size() {
        return Err(Error::Domain(format!(
            "regularity range {j_max} needs a matrix with {} rows",
            j_max + 1
        )));
    }
    let ln_quarter = 0.25f64.ln();
    let mut gamma = Vec::with_capacity(j_max);
    let mut delta = Vec::with_capacity(j_max);
    let mut sigma3 = Vec::with_capacity(j_max);
    let mut log_sum = 0.0;
    for j in 1..=j_max {
        let a = jac.a(j);
        if !(a > 0.0) {
            return Err(Error::Data(format!("a_{j} = {a} is not positive")));
        }
        log_sum += a.ln();
        let mean = log_sum / j as f64;
        gamma.push(mean.exp());
        delta.push(ln_quarter - mean);
        sigma3.push(j as f64 * (ln_quarter - mean));
    }
    let fit_start = (j_max / 10).max(1);
    let xs: Vec<f64> = (fit_start..=j_max).map(|j| j as f64).collect();
    let ys: Vec<f64> = (fit_start..=j_max).map(|j| delta[j - 1]).collect();
    let fit = if ys.iter().all(|&y| y > 0.0) && xs.len() >= 2 {
        Some(power_law_fit(&xs, &ys)?)
    } else {
        None
    };
    Ok(RegularityReport { gamma, delta, sigma3, fit, capacity: 0.25 })
}

/// Zeros of the degree-`j` rescaled Chebyshev polynomial on `[0,1]`:
/// `theta_l = (1 - cos(pi (2l-1)/(2j))) / 2`, ascending.
pub fn chebyshev_zeros(j: usize) -> Vec<f64> {
    (1..=j)
        .map(|l| (1.0 - (std::f64::consts::PI * (2 * l - 1) as f64 / (2 * j) as f64).cos()) / 2.0)
        .collect()
}

/// Chebyshev angles `phi_l = (2l-1)/(2j)`, the uniform comparison grid.
pub fn chebyshev_angles(j: usize) -> Vec<f64> {
    (1..=j).map(|l| (2 * l - 1) as f64 / (2 * j) as f64).collect()
}

/// Node-by-node comparison of computed zeros with the Chebyshev zeros of the
/// same order, in both the direct and the angular coordinate.
#[derive(Debug, Clone, Serialize)]
pub struct ZeroComparisonReport {
    pub order: usize,
    /// `max_l |theta_l - zeta_l|`.
    pub max_zero_gap: f64,
    /// `max_l |phi_l - psi_l|` over normalized angles.
    pub max_angle_gap: f64,
    pub zeros: Vec<f64>,
    pub chebyshev: Vec<f64>,
    /// `psi_l = arccos(1 - 2 zeta_l) / pi`.
    pub angles: Vec<f64>,
    pub chebyshev_angles: Vec<f64>,
}

pub fn zero_comparison(jac: &JacobiMatrix, j: usize) -> Result<ZeroComparisonReport> {
    let zeros = tridiagonal_eigenvalues(jac, j)?;
    let chebyshev = chebyshev_zeros(j);
    let angles: Vec<f64> =
        zeros.iter().map(|&z| (1.0 - 2.0 * z).clamp(-1.0, 1.0).acos() / std::f64::consts::PI).collect();
    let phis = chebyshev_angles(j);
    let max_zero_gap = zeros
        .iter()
        .zip(&chebyshev)
        .map(|(z, t)| (z - t).abs())
        .fold(0.0f64, f64::max);
    let max_angle_gap = angles
        .iter()
        .zip(&phis)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0f64, f64::max);
    Ok(ZeroComparisonReport {
        order: j,
        max_zero_gap,
        max_angle_gap,
        zeros,
        chebyshev,
        angles,
        chebyshev_angles: phis,
    })
}

/// Discrepancy of the equal-weight measure at angles `psi` against the uniform
/// measure, with the three constituent maxima.
#[derive(Debug, Clone, Serialize)]
pub struct Discrepancy {
    pub d: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

/// Discrepancy in `O(j)` using the reduction of the pairwise maximum to the
/// extremes of `d_l = psi_l - l/j`.
pub fn discrepancy(psi: &[f64]) -> Result<Discrepancy> {
    check_angles(psi)?;
    let j = psi.len();
    let jf = j as f64;
    let mut d1 = 0.0f64;
    let mut d2 = 0.0f64;
    for (idx, &p) in psi.iter().enumerate() {
        let l = (idx + 1) as f64;
        for i in [0.0, 1.0] {
            d1 = d1.max((p - (l - i) / jf).abs());
            d2 = d2.max((1.0 - p - (jf - l + i) / jf).abs());
        }
    }
    let devs: Vec<f64> = psi
        .iter()
        .enumerate()
        .map(|(idx, &p)| p - (idx + 1) as f64 / jf)
        .collect();
    let dmax = devs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let dmin = devs.iter().copied().fold(f64::INFINITY, f64::min);
    let mut d3 = 0.0f64;
    for i in [-1.0, 1.0] {
        d3 = d3.max(((dmax - dmin) - i / jf).abs());
        d3 = d3.max(((dmin - dmax) - i / jf).abs());
    }
    Ok(Discrepancy { d: d1.max(d2).max(d3), d1, d2, d3 })
}

/// The same quantity by exhaustive `O(j^2)` enumeration over index pairs; the
/// reference side of the dual-route check.
pub fn discrepancy_exhaustive(psi: &[f64]) -> Result<Discrepancy> {
    check_angles(psi)?;
    let j = psi.len();
    let jf = j as f64;
    let mut d1 = 0.0f64;
    let mut d2 = 0.0f64;
    for (idx, &p) in psi.iter().enumerate() {
        let l = (idx + 1) as f64;
        for i in [0.0, 1.0] {
            d1 = d1.max((p - (l - i) / jf).abs());
            d2 = d2.max((1.0 - p - (jf - l + i) / jf).abs());
        }
    }
    let devs: Vec<f64> = psi
        .iter()
        .enumerate()
        .map(|(idx, &p)| p - (idx + 1) as f64 / jf)
        .collect();
    let mut d3 = 0.0f64;
    for &dl in &devs {
        for &dk in &devs {
            for i in [-1.0, 1.0] {
                d3 = d3.max(((dl - dk) - i / jf).abs());
            }
        }
    }
    Ok(Discrepancy { d: d1.max(d2).max(d3), d1, d2, d3 })
}

fn check_angles(psi: &[f64]) -> Result<()> {
    if psi.is_empty() {
        return Err(Error::Data("discrepancy needs at least one angle".into()));
    }
    if psi.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(Error::Data("angles must lie in [0,1]".into()));
    }
    if psi.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Data("angles must be non-decreasing".into()));
    }
    Ok(())
}

/// The ratio-asymptotics measure `sigma_j`: atoms at the order-`j` zeros with
/// weights `S_l = w_l p_{j-1}^2(zeta_l)`, formed as the stable renormalized
/// ratio `p_{j-1}^2 / K_j` so neither factor overflows.
pub fn sigma_weights(jac: &JacobiMatrix, j: usize) -> Result<DiscreteMeasure> {
    if j < 2 {
        return Err(Error::Domain("sigma weights need order >= 2".into()));
    }
    let zeros = tridiagonal_eigenvalues(jac, j)?;
    let atoms = zeros
        .iter()
        .map(|&z| {
            let (_, ratio) = log_christoffel_and_ratio(jac, z, j)?;
            Ok((z, ratio.ln()))
        })
        .collect::<Result<Vec<_>>>()?;
    DiscreteMeasure::new(atoms)
}

/// Closed-form `sigma_j` weights of the equilibrium measure:
/// `S_l = 2 sin^2(pi (2l-1)/(2j)) / j`, valid for `j >= 2`.
pub fn sigma_weights_equilibrium(j: usize) -> Result<Vec<f64>> {
    if j < 2 {
        return Err(Error::Domain("the closed form needs order >= 2".into()));
    }
    Ok((1..=j)
        .map(|l| {
            let s = (std::f64::consts::PI * (2 * l - 1) as f64 / (2 * j) as f64).sin();
            2.0 * s * s / j as f64
        })
        .collect())
}

/// Distribution function of the ratio-asymptotics limit measure on `[0,1]`
/// (mass-normalized semicircle-type density `(8/pi) sqrt(x(1-x))`).
pub fn equilibrium_sigma_cdf(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    let s = (x - x * x).max(0.0).sqrt();
    (2.0 / std::f64::consts::PI) * (2.0 * x - 1.0) * s
        + (2.0 * x - 1.0).clamp(-1.0, 1.0).asin() / std::f64::consts::PI
        + 0.5
}

/// Antiderivative of `equilibrium_sigma_cdf` vanishing at 0.
pub fn equilibrium_sigma_cdf_integral(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    let u = (x - x * x).max(0.0);
    let pi = std::f64::consts::PI;
    -4.0 / (3.0 * pi) * u.powf(1.5)
        + (2.0 * x - 1.0) / (2.0 * pi) * (2.0 * x - 1.0).clamp(-1.0, 1.0).asin()
        + u.sqrt() / pi
        + x / 2.0
        - 0.25
}

/// `int_0^1 |F_m - F| dx` for a piecewise-constant distribution `F_m` against a
/// continuous monotone CDF with a known antiderivative: split at the atoms,
/// bisect each segment for the crossing point, integrate the two signed parts
/// in closed form.
pub fn cdf_l1_distance(
    m: &DiscreteMeasure,
    cdf: impl Fn(f64) -> f64,
    antiderivative: impl Fn(f64) -> f64,
) -> f64 {
    let mut total = 0.0f64;
    let mut cum = 0.0f64;
    let mut prev_x = 0.0f64;
    let segment = |level: f64, lo: f64, hi: f64| -> f64 {
        if hi <= lo {
            return 0.0;
        }
        // signed integral of (level - F) over [a, b]
        let signed = |a: f64, b: f64| level * (b - a) - (antiderivative(b) - antiderivative(a));
        let f_lo = cdf(lo);
        let f_hi = cdf(hi);
        if level <= f_lo.min(f_hi) || level >= f_lo.max(f_hi) {
            return signed(lo, hi).abs();
        }
        // F is monotone: bisect for the crossing point
        let (mut a, mut b) = (lo, hi);
        for _ in 0..80 {
            let mid = 0.5 * (a + b);
            if cdf(mid) < level {
                a = mid;
            } else {
                b = mid;
            }
        }
        let cross = 0.5 * (a + b);
        signed(lo, cross).abs() + signed(cross, hi).abs()
    };
    for (x, lw) in m.atoms() {
        total += segment(cum, prev_x, *x);
        cum += lw.exp();
        prev_x = *x;
    }
    total += segment(cum, prev_x, 1.0);
    total
}

/// Hutchinson distance from a discrete probability measure to the
/// ratio-asymptotics limit, as the L1 distance of distribution functions.
pub fn hutchinson_distance_to_sigma_e(m: &DiscreteMeasure) -> f64 {
    cdf_l1_distance(m, equilibrium_sigma_cdf, equilibrium_sigma_cdf_integral)
}

/// Per-order Nevai-class indicators.
#[derive(Debug, Clone, Serialize)]
pub struct NevaiOrderRow {
    pub order: usize,
    /// `max_l |S_l(equilibrium) - S_l(mu)|`.
    pub max_weight_gap: f64,
    /// `sum_l |S_l(equilibrium) - S_l(mu)|`.
    pub sigma0: f64,
    /// Hutchinson distance `d(sigma_j, sigma_E)`.
    pub hutchinson: f64,
    /// `sum_l S_l(mu)`, which must be 1.
    pub weight_sum: f64,
}

/// Convergence diagnostics toward the Nevai class.
#[derive(Debug, Clone, Serialize)]
pub struct NevaiDiagnostics {
    pub rows: Vec<NevaiOrderRow>,
    /// `u(x) = max { |a_j - 1/4| : x <= j <= j_max }` sampled at every integer.
    pub envelope: Vec<f64>,
    /// `Sigma^1_j = sum_{l<=j} |a_l - a_{l-1}|` (from l = 2).
    pub sigma1: Vec<f64>,
    /// `Sigma^2_j = sum_{l<=j} |1 - 16 a_l^2|`.
    pub sigma2: Vec<f64>,
    /// `Sigma^3_j = -sum_{l<=j} (log a_l + log 4)`.
    pub sigma3: Vec<f64>,
}

pub fn nevai_diagnostics(jac: &JacobiMatrix, j_list: &[usize]) -> Result<NevaiDiagnostics> {
    let j_max = jac.size() - 1;
    if j_list.iter().any(|&j| j < 2 || j > j_max) {
        return Err(Error::Domain(format!("orders must lie in 2..={j_max}")));
    }
    let mut rows = Vec::with_capacity(j_list.len());
    for &j in j_list {
        let sigma = sigma_weights(jac, j)?;
        let reference = sigma_weights_equilibrium(j)?;
        let weights: Vec<f64> = sigma.log_weights().map(f64::exp).collect();
        let mut max_gap = 0.0f64;
        let mut sum_gap = 0.0f64;
        for (w, r) in weights.iter().zip(&reference) {
            let gap = (w - r).abs();
            max_gap = max_gap.max(gap);
            sum_gap += gap;
        }
        rows.push(NevaiOrderRow {
            order: j,
            max_weight_gap: max_gap,
            sigma0: sum_gap,
            hutchinson: hutchinson_distance_to_sigma_e(&sigma),
            weight_sum: weights.iter().sum(),
        });
    }
    let mut envelope = vec![0.0; j_max];
    let mut running = 0.0f64;
    for j in (1..=j_max).rev() {
        running = running.max((jac.a(j) - 0.25).abs());
        envelope[j - 1] = running;
    }
    let mut sigma1 = Vec::with_capacity(j_max);
    let mut sigma2 = Vec::with_capacity(j_max);
    let mut sigma3 = Vec::with_capacity(j_max);
    let (mut s1, mut s2, mut s3) = (0.0f64, 0.0f64, 0.0f64);
    for j in 1..=j_max {
        let a = jac.a(j);
        if j >= 2 {
            s1 += (a - jac.a(j - 1)).abs();
        }
        s2 += (1.0 - 16.0 * a * a).abs();
        s3 -= a.ln() + 4.0f64.ln();
        sigma1.push(s1);
        sigma2.push(s2);
        sigma3.push(s3);
    }
    Ok(NevaiDiagnostics { rows, envelope, sigma1, sigma2, sigma3 })
}
