//! The transfer map on truncated Jacobi matrices, its fixed-point driver with
//! convergence diagnostics, and the cache file the rest of the pipeline reads.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Mutex;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jacobi::JacobiMatrix;
use crate::lanczos::{lanczos_tridiagonalize, LanczosOutcome};
use crate::measure::MoebiusMap;
use crate::quadrature::gauss_rule;
use crate::tridiag::tridiagonal_solve;

/// How one transfer-map application realizes the branch pushforwards.
///
/// Both routes tridiagonalize the same finite spectral measure and agree to
/// roundoff; they differ only in cost. The operator route is the direct
/// realization (one Lanczos run per branch over the resolvent-style operator);
/// the mapped-rule route converts the matrix to its full Gauss rule, pushes the
/// atoms through the branch maps and rebuilds coefficients by rotations, which
/// is what makes thousand-coefficient runs take minutes instead of hours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PushforwardRoute {
    Operator,
    MappedRule,
}

#[derive(Debug, Clone, Serialize)]
pub struct FixpointConfig {
    /// Number of off-diagonal coefficients `a_1..a_n` requested.
    pub n_target: usize,
    /// Extra truncation rows beyond the requested range; defaults to
    /// `max(16, rows/10)`.
    pub buffer: Option<usize>,
    /// Convergence threshold on the cumulative L1 change of the leading
    /// coefficients between successive iterations.
    pub eps: f64,
    /// Iteration cap; defaults to `10 n^0.7`, hard-capped at 5000.
    pub max_iters: Option<usize>,
    /// Branch probabilities; `(1/2, 1/2)` is the question-mark measure.
    pub probabilities: (f64, f64),
    pub route: PushforwardRoute,
}

impl FixpointConfig {
    pub fn new(n_target: usize) -> Self {
        Self {
            n_target,
            buffer: None,
            eps: 1e-12,
            max_iters: None,
            probabilities: (0.5, 0.5),
            route: if n_target <= 256 {
                PushforwardRoute::Operator
            } else {
                PushforwardRoute::MappedRule
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_target == 0 {
            return Err(Error::Domain("n_target must be at least 1".into()));
        }
        if !(self.eps > 0.0) {
            return Err(Error::Domain("eps must be positive".into()));
        }
        let (r1, r2) = self.probabilities;
        if r1 <= 0.0 || r2 <= 0.0 || (r1 + r2 - 1.0).abs() > 1e-12 {
            return Err(Error::Domain("probabilities must be positive and sum to 1".into()));
        }
        Ok(())
    }

    /// Working truncation: requested rows plus the untrusted tail buffer.
    pub fn work_size(&self) -> usize {
        let rows = self.n_target + 1;
        rows + self.buffer.unwrap_or_else(|| (rows / 10).max(16))
    }

    pub fn effective_max_iters(&self) -> usize {
        self.max_iters
            .unwrap_or_else(|| (10.0 * (self.n_target as f64).powf(0.7)).ceil() as usize)
            .clamp(8, 5000)
    }
}

/// Per-iteration convergence record of a fixed-point run.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    /// `deltas[n][j-1] = |a_j^(n+1) - a_j^(n)|` over the common coefficient range.
    pub deltas: Vec<Vec<f64>>,
    /// Converged rank per iteration: largest `N` with cumulative L1 below eps.
    pub n_eps_history: Vec<usize>,
    /// Total L1 change of the tracked coefficients per iteration.
    pub l1_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Per-index error estimate from post-convergence iterations, when computed.
    pub error_std: Option<Vec<f64>>,
}

impl ConvergenceReport {
    /// The trace `n -> delta_j(n)` for one coefficient index, where recorded.
    pub fn delta_trace(&self, j: usize) -> Option<Vec<f64>> {
        if j == 0 {
            return None;
        }
        let trace: Vec<f64> = self
            .deltas
            .iter()
            .filter_map(|row| row.get(j - 1).copied())
            .collect();
        if trace.is_empty() {
            None
        } else {
            Some(trace)
        }
    }
}

/// Jacobi matrix of the pushforward measure `eta ∘ map^{-1}`.
///
/// Realized as Lanczos over `v -> (aJ + bI) (cJ + dI)^{-1} v` started at `e_0`;
/// the resolvent application is one pivoted tridiagonal solve.
pub fn moebius_pushforward(jac: &JacobiMatrix, map: &MoebiusMap, k: usize) -> Result<JacobiMatrix> {
    let n = jac.size();
    if k == 0 || k > n {
        return Err(Error::Domain(format!("pushforward size {k} out of range 1..={n}")));
    }
    let (a, b, c, d) = map.coeffs_f64();
    let mut start = vec![0.0; n];
    start[0] = 1.0;
    let solver_error: Mutex<Option<Error>> = Mutex::new(None);
    let mut scratch = vec![0.0; n];
    let outcome = lanczos_tridiagonalize(
        n,
        |v, out| {
            match tridiagonal_solve(jac, (c, d), v) {
                Ok(w) => {
                    // out = (a J + b I) w
                    jac.apply(&w, &mut scratch);
                    for i in 0..n {
                        out[i] = a * scratch[i] + b * w[i];
                    }
                }
                Err(e) => {
                    let mut slot = solver_error.lock().unwrap();
                    if slot.is_none() {
                        *slot = Some(e);
                    }
                    out.fill(0.0);
                }
            }
        },
        &start,
        k,
    )?;
    if let Some(e) = solver_error.into_inner().unwrap() {
        return Err(e);
    }
    if let Some(step) = outcome.breakdown {
        return Err(Error::Solver(format!(
            "unexpected Lanczos breakdown at step {step} during pushforward"
        )));
    }
    Ok(outcome.jacobi)
}

/// Jacobi matrix of `rho_1 mu_1 + rho_2 mu_2`, by Lanczos over the
/// block-diagonal operator with start `sqrt(rho_1) e_0 ⊕ sqrt(rho_2) e_0`.
/// Breakdown (fewer distinct support points than requested) is reported in the
/// outcome, not as an error.
pub fn jacobi_average(
    j1: &JacobiMatrix,
    j2: &JacobiMatrix,
    probabilities: (f64, f64),
    k: usize,
) -> Result<LanczosOutcome> {
    let (r1, r2) = probabilities;
    if r1 <= 0.0 || r2 <= 0.0 || (r1 + r2 - 1.0).abs() > 1e-12 {
        return Err(Error::Domain("probabilities must be positive and sum to 1".into()));
    }
    let (n1, n2) = (j1.size(), j2.size());
    let dim = n1 + n2;
    if k == 0 || k > dim {
        return Err(Error::Domain(format!("average size {k} out of range 1..={dim}")));
    }
    let mut start = vec![0.0; dim];
    start[0] = r1.sqrt();
    start[n1] = r2.sqrt();
    lanczos_tridiagonalize(
        dim,
        |v, out| {
            j1.apply(&v[..n1], &mut out[..n1]);
            j2.apply(&v[n1..], &mut out[n1..]);
        },
        &start,
        k,
    )
}

fn t_map_operator(jac: &JacobiMatrix, cfg: &FixpointConfig, out_size: usize) -> Result<JacobiMatrix> {
    let n = jac.size();
    let (p1, p2) = rayon::join(
        || moebius_pushforward(jac, &MoebiusMap::m1(), n),
        || moebius_pushforward(jac, &MoebiusMap::m2(), n),
    );
    let outcome = jacobi_average(&p1?, &p2?, cfg.probabilities, out_size)?;
    Ok(outcome.jacobi)
}

fn t_map_mapped_rule(jac: &JacobiMatrix, cfg: &FixpointConfig, out_size: usize) -> Result<JacobiMatrix> {
    let n = jac.size();
    let rule = gauss_rule(jac, n)?;
    let m1 = MoebiusMap::m1();
    let m2 = MoebiusMap::m2();
    let (r1, r2) = cfg.probabilities;
    let mut positions = Vec::with_capacity(2 * n);
    let mut weights = Vec::with_capacity(2 * n);
    // branch images stay sorted and interleave only at the midpoint corner
    for (&x, &lw) in rule.nodes().iter().zip(rule.log_weights()) {
        positions.push(m1.apply_f64(x));
        weights.push((lw + r1.ln()).exp());
    }
    for (&x, &lw) in rule.nodes().iter().zip(rule.log_weights()) {
        positions.push(m2.apply_f64(x));
        weights.push((lw + r2.ln()).exp());
    }
    crate::lanczos::jacobi_from_atoms_rkpw(&positions, &weights, out_size)
}

/// One application of the transfer map on Jacobi matrices. The output keeps the
/// working truncation (growing from smaller inputs as the support doubles).
pub fn t_map(jac: &JacobiMatrix, cfg: &FixpointConfig) -> Result<JacobiMatrix> {
    cfg.validate()?;
    let out_size = (2 * jac.size()).min(cfg.work_size().max(jac.size()));
    match cfg.route {
        PushforwardRoute::Operator => t_map_operator(jac, cfg, out_size),
        PushforwardRoute::MappedRule => t_map_mapped_rule(jac, cfg, out_size),
    }
}

/// Iterates the transfer map until the leading `n_target` coefficients have
/// converged in cumulative L1, or the iteration budget runs out (in which case
/// the partial result is returned with `converged = false`).
pub fn fixpoint_solve(
    cfg: &FixpointConfig,
    initial: Option<&JacobiMatrix>,
) -> Result<(JacobiMatrix, ConvergenceReport)> {
    cfg.validate()?;
    let work = cfg.work_size();
    if work <= cfg.n_target {
        return Err(Error::Domain("working truncation must exceed n_target".into()));
    }
    let mut jac = match initial {
        Some(j) if j.size() > work => j.leading(work)?,
        Some(j) => j.clone(),
        None => JacobiMatrix::uniform(work)?,
    };
    let max_iters = cfg.effective_max_iters();
    let mut report = ConvergenceReport {
        deltas: Vec::new(),
        n_eps_history: Vec::new(),
        l1_history: Vec::new(),
        iterations: 0,
        converged: false,
        error_std: None,
    };
    for _ in 0..max_iters {
        let next = t_map(&jac, cfg)?;
        report.iterations += 1;
        let common = jac.off().len().min(next.off().len());
        let delta: Vec<f64> = (0..common)
            .map(|i| (next.off()[i] - jac.off()[i]).abs())
            .collect();
        let mut cum = 0.0;
        let mut n_eps = 0;
        for (i, d) in delta.iter().enumerate() {
            cum += d;
            if cum <= cfg.eps {
                n_eps = i + 1;
            } else {
                break;
            }
        }
        report.l1_history.push(delta.iter().sum());
        report.n_eps_history.push(n_eps);
        report.deltas.push(delta);
        jac = next;
        if n_eps >= cfg.n_target {
            report.converged = true;
            break;
        }
    }
    Ok((jac, report))
}

/// Sample standard deviation of each coefficient over further transfer-map
/// iterations from a converged matrix. The plain per-sample deviation is
/// reported, not the deviation of the sample mean; that keeps the estimate
/// conservative.
pub fn error_statistics(
    jac: &JacobiMatrix,
    cfg: &FixpointConfig,
    extra_iters: usize,
) -> Result<Vec<f64>> {
    if extra_iters < 2 {
        return Err(Error::Domain("error statistics need at least 2 iterations".into()));
    }
    let mut current = jac.clone();
    let n_off = jac.off().len();
    let mut samples: Vec<Vec<f64>> = Vec::with_capacity(extra_iters);
    for _ in 0..extra_iters {
        current = t_map(&current, cfg)?;
        samples.push(current.off()[..n_off.min(current.off().len())].to_vec());
    }
    let count = samples.len() as f64;
    let width = samples.iter().map(|s| s.len()).min().unwrap_or(0);
    let mut std = Vec::with_capacity(width);
    for j in 0..width {
        let mean: f64 = samples.iter().map(|s| s[j]).sum::<f64>() / count;
        let var: f64 =
            samples.iter().map(|s| (s[j] - mean).powi(2)).sum::<f64>() / (count - 1.0);
        std.push(var.sqrt());
    }
    Ok(std)
}

pub const CACHE_HEADER: &str = "# minkowski-jacobi v1";

/// Metadata block of a Jacobi cache file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CacheMeta {
    /// Number of off-diagonal coefficients `a_1..a_n` in the file.
    pub n: usize,
    pub iterations: usize,
    pub eps: f64,
    pub builder: String,
}

/// Writes the cache: the version header, the metadata block, then one row
/// `j <TAB> a_j <TAB> b_j` per index with 17 significant digits (`a_0` is 0 by
/// convention). The encoding round-trips doubles exactly.
pub fn save_jacobi(path: &Path, jac: &JacobiMatrix, meta: &CacheMeta) -> Result<()> {
    if meta.n + 1 != jac.size() {
        return Err(Error::Domain(format!(
            "metadata n={} does not match matrix with {} rows",
            meta.n,
            jac.size()
        )));
    }
    let mut out = String::new();
    let _ = writeln!(out, "{CACHE_HEADER}");
    let _ = writeln!(out, "# n {}", meta.n);
    let _ = writeln!(out, "# iterations {}", meta.iterations);
    let _ = writeln!(out, "# eps {:e}", meta.eps);
    let _ = writeln!(out, "# builder {}", meta.builder);
    for j in 0..jac.size() {
        let a = if j == 0 { 0.0 } else { jac.a(j) };
        let _ = writeln!(out, "{j}\t{a:.16e}\t{:.16e}", jac.b(j));
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn load_jacobi(path: &Path) -> Result<(JacobiMatrix, CacheMeta)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, first) = lines
        .next()
        .ok_or_else(|| Error::Parse { line: 1, msg: "empty cache file".into() })?;
    if first.trim_end() != CACHE_HEADER {
        return Err(Error::Parse { line: 1, msg: format!("bad header {first:?}") });
    }
    let mut n: Option<usize> = None;
    let mut iterations: Option<usize> = None;
    let mut eps: Option<f64> = None;
    let mut builder: Option<String> = None;
    let mut diag = Vec::new();
    let mut off = Vec::new();
    for (idx, raw) in lines {
        let lineno = idx + 1;
        let line = raw.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let mut parts = rest.split_whitespace();
            match parts.next() {
                Some("n") => {
                    n = Some(parse_field(parts.next(), lineno, "n")?);
                }
                Some("iterations") => {
                    iterations = Some(parse_field(parts.next(), lineno, "iterations")?);
                }
                Some("eps") => {
                    eps = Some(parse_field(parts.next(), lineno, "eps")?);
                }
                Some("builder") => {
                    builder = Some(parts.collect::<Vec<_>>().join(" "));
                }
                _ => {} // unknown comment lines are fine
            }
            continue;
        }
        let mut cols = line.split('\t');
        let j: usize = parse_field(cols.next(), lineno, "index")?;
        let a: f64 = parse_field(cols.next(), lineno, "a_j")?;
        let b: f64 = parse_field(cols.next(), lineno, "b_j")?;
        if j != diag.len() {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected index {}, found {j}", diag.len()),
            });
        }
        if j == 0 {
            if a != 0.0 {
                return Err(Error::Parse { line: lineno, msg: "a_0 must be 0".into() });
            }
        } else {
            off.push(a);
        }
        diag.push(b);
    }
    let n = n.ok_or_else(|| Error::Parse { line: 1, msg: "missing '# n' line".into() })?;
    if diag.len() != n + 1 {
        return Err(Error::Parse {
            line: text.lines().count(),
            msg: format!("metadata says {} rows, file has {}", n + 1, diag.len()),
        });
    }
    let meta = CacheMeta {
        n,
        iterations: iterations
            .ok_or_else(|| Error::Parse { line: 1, msg: "missing '# iterations' line".into() })?,
        eps: eps.ok_or_else(|| Error::Parse { line: 1, msg: "missing '# eps' line".into() })?,
        builder: builder
            .ok_or_else(|| Error::Parse { line: 1, msg: "missing '# builder' line".into() })?,
    };
    let jac = JacobiMatrix::new(diag, off).map_err(|e| Error::Parse {
        line: text.lines().count(),
        msg: format!("invalid coefficients: {e}"),
    })?;
    Ok((jac, meta))
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, line: usize, what: &str) -> Result<T> {
    field
        .ok_or_else(|| Error::Parse { line, msg: format!("missing {what}") })?
        .parse()
        .map_err(|_| Error::Parse { line, msg: format!("malformed {what}") })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pushforward_of_point_mass() {
        let j = JacobiMatrix::point_mass(0.5);
        let p1 = moebius_pushforward(&j, &MoebiusMap::m1(), 1).unwrap();
        assert!((p1.b(0) - 1.0 / 3.0).abs() < 1e-15);
        let p2 = moebius_pushforward(&j, &MoebiusMap::m2(), 1).unwrap();
        assert!((p2.b(0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn pushforward_moment_oracle() {
        // first 2K-1 moments of the output equal sum w_l map(x_l)^m over the
        // input's Gauss rule at full order
        let jac = JacobiMatrix::uniform(24).unwrap();
        let rule = gauss_rule(&jac, 24).unwrap();
        for map in [MoebiusMap::m1(), MoebiusMap::m2()] {
            let k = 10;
            let pushed = moebius_pushforward(&jac, &map, k).unwrap();
            let got = pushed.moments(2 * k - 1);
            for m in 0..=(2 * k - 1) {
                let want: f64 = rule
                    .nodes()
                    .iter()
                    .zip(rule.log_weights())
                    .map(|(&x, &lw)| lw.exp() * map.apply_f64(x).powi(m as i32))
                    .sum();
                assert!(
                    (got[m] - want).abs() <= 1e-10 * want.abs().max(1.0),
                    "map moment {m}: {} vs {}",
                    got[m],
                    want
                );
            }
        }
    }

    #[test]
    fn average_of_identical_inputs_is_identity() {
        let jac = JacobiMatrix::uniform(16).unwrap();
        let out = jacobi_average(&jac, &jac, (0.5, 0.5), 16).unwrap();
        assert!(out.breakdown.is_none());
        for i in 0..16 {
            assert!((out.jacobi.b(i) - jac.b(i)).abs() < 1e-12);
        }
        for i in 1..16 {
            assert!((out.jacobi.a(i) - jac.a(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn average_of_two_point_masses() {
        let d0 = JacobiMatrix::point_mass(0.0);
        let d1 = JacobiMatrix::point_mass(1.0);
        let out = jacobi_average(&d0, &d1, (0.5, 0.5), 2).unwrap();
        assert!((out.jacobi.b(0) - 0.5).abs() < 1e-15);
        assert!((out.jacobi.a(1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn average_moment_linearity() {
        let j1 = JacobiMatrix::uniform(12).unwrap();
        let j2 = JacobiMatrix::chebyshev_equilibrium(12).unwrap();
        let (r1, r2) = (0.25, 0.75);
        let k = 8;
        let out = jacobi_average(&j1, &j2, (r1, r2), k).unwrap();
        let got = out.jacobi.moments(2 * k - 1);
        let m1 = j1.moments(2 * k - 1);
        let m2 = j2.moments(2 * k - 1);
        for m in 0..=(2 * k - 1) {
            let want = r1 * m1[m] + r2 * m2[m];
            assert!((got[m] - want).abs() <= 1e-10 * want.abs().max(1.0), "moment {m}");
        }
    }

    #[test]
    fn routes_agree_on_small_iterations() {
        let mut cfg_op = FixpointConfig::new(24);
        cfg_op.route = PushforwardRoute::Operator;
        let mut cfg_ar = cfg_op.clone();
        cfg_ar.route = PushforwardRoute::MappedRule;
        let mut a = JacobiMatrix::uniform(cfg_op.work_size()).unwrap();
        let mut b = a.clone();
        for _ in 0..8 {
            a = t_map(&a, &cfg_op).unwrap();
            b = t_map(&b, &cfg_ar).unwrap();
        }
        assert_eq!(a.size(), b.size());
        for i in 0..a.size() {
            assert!((a.b(i) - b.b(i)).abs() < 1e-11, "b[{i}]");
        }
        for i in 1..a.size() {
            assert!((a.a(i) - b.a(i)).abs() < 1e-11, "a[{i}]");
        }
    }

    #[test]
    fn fixpoint_small_run_hits_known_head() {
        let cfg = FixpointConfig::new(12);
        let (jac, report) = fixpoint_solve(&cfg, None).unwrap();
        assert!(report.converged);
        assert!((jac.a(1) - 0.202302932329981).abs() < 1e-12);
        assert!((jac.a(10) - 0.215070562228327).abs() < 1e-11);
        // restarting from the converged matrix converges immediately
        let (_, again) = fixpoint_solve(&cfg, Some(&jac)).unwrap();
        assert!(again.converged);
        assert_eq!(again.iterations, 1);
    }

    #[test]
    fn fixpoint_partial_when_budget_too_small() {
        let mut cfg = FixpointConfig::new(24);
        cfg.max_iters = Some(10);
        let (_, report) = fixpoint_solve(&cfg, None).unwrap();
        assert!(!report.converged);
        assert_eq!(report.iterations, 10);
    }

    #[test]
    fn error_statistics_nonnegative_and_small() {
        let cfg = FixpointConfig::new(12);
        let (jac, _) = fixpoint_solve(&cfg, None).unwrap();
        let std = error_statistics(&jac, &cfg, 16).unwrap();
        assert!(std.iter().all(|&s| s >= 0.0));
        assert!(std[0] < 1e-13, "s_1 = {}", std[0]);
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("jacobi.tsv");
        let cfg = FixpointConfig::new(8);
        let (jac, report) = fixpoint_solve(&cfg, None).unwrap();
        let jac = jac.leading(9).unwrap();
        let meta = CacheMeta {
            n: 8,
            iterations: report.iterations,
            eps: cfg.eps,
            builder: "mink-core test".into(),
        };
        save_jacobi(&path, &jac, &meta).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# minkowski-jacobi v1\n"));
        let (loaded, loaded_meta) = load_jacobi(&path).unwrap();
        assert_eq!(loaded_meta, meta);
        assert_eq!(loaded.diag(), jac.diag());
        assert_eq!(loaded.off(), jac.off());
    }

    #[test]
    fn cache_rejects_malformed_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.tsv");
        std::fs::write(&path, "junk\n").unwrap();
        match load_jacobi(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
        std::fs::write(&path, "# minkowski-jacobi v1\n# n 2\n# iterations 1\n# eps 1e-12\n# builder x\n0\t0\t5e-1\n1\tnot-a-number\t5e-1\n").unwrap();
        match load_jacobi(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("expected parse error, got {other:?}"),
        }
        // row count inconsistent with metadata
        std::fs::write(&path, "# minkowski-jacobi v1\n# n 3\n# iterations 1\n# eps 1e-12\n# builder x\n0\t0\t5e-1\n1\t2.5e-1\t5e-1\n").unwrap();
        assert!(load_jacobi(&path).is_err());
    }
}
