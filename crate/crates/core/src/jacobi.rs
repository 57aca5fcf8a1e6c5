//! Truncated Jacobi matrices of measures on `[0,1]` and the operations that
//! stay inside the tridiagonal world: application, moments, measure
//! modification by a linear factor.

use serde::Serialize;

use crate::error::{Error, Result};

/// Symmetric tridiagonal truncation of the three-term recurrence of a measure:
/// diagonal `b_0..b_{N-1}`, off-diagonal `a_1..a_{N-1}`, all `a_j > 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobiMatrix {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl JacobiMatrix {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::Domain("Jacobi matrix needs at least one row".into()));
        }
        if off.len() + 1 != diag.len() {
            return Err(Error::Domain(format!(
                "off-diagonal length {} does not match size {}",
                off.len(),
                diag.len()
            )));
        }
        if off.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::Domain("off-diagonal entries must be positive".into()));
        }
        if diag.iter().any(|&b| !b.is_finite()) {
            return Err(Error::Domain("diagonal entries must be finite".into()));
        }
        Ok(Self { diag, off })
    }

    /// Jacobi matrix of the point mass at `x`.
    pub fn point_mass(x: f64) -> Self {
        Self { diag: vec![x], off: vec![] }
    }

    /// Rescaled Legendre recurrence: the uniform measure on `[0,1]`.
    /// `b_j = 1/2`, `a_j = j / (2 sqrt(4 j^2 - 1))`.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("size must be positive".into()));
        }
        let diag = vec![0.5; n];
        let off = (1..n)
            .map(|j| {
                let j = j as f64;
                j / (2.0 * (4.0 * j * j - 1.0).sqrt())
            })
            .collect();
        Ok(Self { diag, off })
    }

    /// Rescaled Chebyshev recurrence: the equilibrium (arcsine) measure on `[0,1]`.
    /// `b_j = 1/2`, `a_1 = sqrt(2)/4`, `a_j = 1/4` for `j >= 2`.
    pub fn chebyshev_equilibrium(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("size must be positive".into()));
        }
        let diag = vec![0.5; n];
        let mut off = vec![0.25; n.saturating_sub(1)];
        if let Some(first) = off.first_mut() {
            *first = std::f64::consts::SQRT_2 / 4.0;
        }
        Ok(Self { diag, off })
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    /// `b_j`, `0 <= j < N`.
    pub fn b(&self, j: usize) -> f64 {
        self.diag[j]
    }

    /// `a_j`, `1 <= j <= N-1`.
    pub fn a(&self, j: usize) -> f64 {
        self.off[j - 1]
    }

    /// Leading `j x j` principal submatrix.
    pub fn leading(&self, j: usize) -> Result<Self> {
        if j == 0 || j > self.size() {
            return Err(Error::Domain(format!(
                "truncation order {j} out of range 1..={}",
                self.size()
            )));
        }
        Ok(Self { diag: self.diag[..j].to_vec(), off: self.off[..j - 1].to_vec() })
    }

    /// `out = J v`.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.size();
        debug_assert_eq!(v.len(), n);
        debug_assert_eq!(out.len(), n);
        for i in 0..n {
            let mut s = self.diag[i] * v[i];
            if i > 0 {
                s += self.off[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                s += self.off[i] * v[i + 1];
            }
            out[i] = s;
        }
    }

    /// Moments `m_0..m_max` of the measure, as `<e_0, J^m e_0>` by repeated
    /// tridiagonal application. Exact (up to roundoff) for `m <= 2N-1`.
    pub fn moments(&self, m_max: usize) -> Vec<f64> {
        let n = self.size();
        let mut u = vec![0.0; n];
        u[0] = 1.0;
        let mut next = vec![0.0; n];
        let mut out = Vec::with_capacity(m_max + 1);
        for _ in 0..m_max {
            out.push(u[0]);
            self.apply(&u, &mut next);
            std::mem::swap(&mut u, &mut next);
        }
        out.push(u[0]);
        out
    }

    /// Jacobi matrix of the modified measure `(x - c) dmu`, normalized; size `N-1`.
    ///
    /// Implemented as one Cholesky LR step: with `J - cI = L L^T`, the modified
    /// matrix is `L^T L + cI`. A non-positive pivot means `c` lies inside the
    /// support of the measure.
    pub fn linear_factor(&self, c: f64) -> Result<Self> {
        let n = self.size();
        if n < 2 {
            return Err(Error::Domain("linear factor needs size >= 2".into()));
        }
        // l2[k] = L[k,k]^2, sub[k] = L[k,k-1]; only k <= N-2 pivots are needed.
        let mut l2 = vec![0.0; n - 1];
        let mut ls = vec![0.0; n - 1];
        let mut sub = vec![0.0; n];
        l2[0] = self.diag[0] - c;
        if l2[0] <= 0.0 {
            return Err(Error::Domain(format!(
                "shift {c} is not below the support (pivot {} at row 0)",
                l2[0]
            )));
        }
        ls[0] = l2[0].sqrt();
        for k in 1..n {
            sub[k] = self.off[k - 1] / ls[k - 1];
            if k <= n - 2 {
                l2[k] = self.diag[k] - c - sub[k] * sub[k];
                if l2[k] <= 0.0 {
                    return Err(Error::Domain(format!(
                        "shift {c} is not below the support (pivot {} at row {k})",
                        l2[k]
                    )));
                }
                ls[k] = l2[k].sqrt();
            }
        }
        let diag = (0..n - 1).map(|k| l2[k] + sub[k + 1] * sub[k + 1] + c).collect();
        let off = (1..n - 1).map(|j| sub[j] * ls[j]).collect();
        Self::new(diag, off)
    }
}

/// Nodes and log-domain weights of a Gaussian integration rule.
///
/// Weights live in the log domain throughout: near Farey points they fall so
/// fast that plain doubles run out of exponent range long before the
/// information itself is lost.
#[derive(Debug, Clone, Serialize)]
pub struct GaussRule {
    nodes: Vec<f64>,
    log_weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(nodes: Vec<f64>, log_weights: Vec<f64>) -> Result<Self> {
        if nodes.len() != log_weights.len() || nodes.is_empty() {
            return Err(Error::Domain("rule needs matching non-empty nodes/weights".into()));
        }
        if nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Data("nodes must be strictly increasing".into()));
        }
        Ok(Self { nodes, log_weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn total_mass_log(&self) -> f64 {
        crate::numeric::log_sum_exp(self.log_weights.iter().copied())
    }
}
