//! Maximal quantum violation over measurement directions.
//!
//! Each bound direction is parametrized by polar and azimuthal angles and
//! the resulting unconstrained, periodic objective is climbed with a
//! multi-start downhill simplex. Every restart draws its seed from
//! `(rng_seed, restart)` alone, so results do not depend on scheduling.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::{algebraic_max, evaluate, BellExpression, Observable, SettingsAssignment};
use crate::error::{validation, Error, Result};
use crate::qstate::{local_expectation, MeasurementDirection, PartySetting, QuantumState};
use crate::states::upsilon;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizationConfig {
    pub restarts: usize,
    /// Convergence threshold on the spread of objective values in the simplex.
    pub tolerance: f64,
    /// Iteration cap for a single simplex run.
    pub max_iterations: usize,
    pub rng_seed: u64,
}

impl Default for OptimizationConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            tolerance: 1e-9,
            max_iterations: 20_000,
            rng_seed: 0,
        }
    }
}

impl OptimizationConfig {
    pub fn with_seed(self, rng_seed: u64) -> Self {
        Self { rng_seed, ..self }
    }

    pub fn with_restarts(self, restarts: usize) -> Self {
        Self { restarts, ..self }
    }

    fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(validation("restarts must be at least 1"));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(validation("tolerance must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(validation("max_iterations must be at least 1"));
        }
        Ok(())
    }
}

/// Best value found by [`max_violation`] and the settings that reach it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub value: f64,
    pub settings: SettingsAssignment,
    pub converged: bool,
    pub restarts_used: usize,
}

/// Outcome of one Nelder–Mead run (minimization).
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `f` by the downhill simplex method with dimension-adaptive
/// coefficients (reflection 1, expansion 1+2/n, contraction 3/4−1/(2n),
/// shrink 1−1/n). Stops when the spread of simplex values drops below `tol`.
pub fn nelder_mead<F>(f: F, x0: &[f64], step: f64, tol: f64, max_iter: usize) -> SimplexResult
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let nf = n as f64;
    let (alpha, gamma) = (1.0, 1.0 + 2.0 / nf);
    let rho = 0.75 - 1.0 / (2.0 * nf);
    let sigma = 1.0 - 1.0 / nf.max(2.0);

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut order: Vec<usize> = (0..=n).collect();
    let mut centroid = vec![0.0; n];
    let point = |c: &[f64], w: &[f64], t: f64| -> Vec<f64> {
        c.iter().zip(w).map(|(ci, wi)| ci + t * (wi - ci)).collect()
    };

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let (best, worst, second) = (order[0], order[n], order[n - 1.min(n)]);
        if values[worst] - values[best] <= tol {
            converged = true;
            break;
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &i in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&simplex[i]) {
                *c += x / nf;
            }
        }
        let xr = point(&centroid, &simplex[worst], -alpha);
        let fr = f(&xr);
        if fr < values[best] {
            let xe = point(&centroid, &simplex[worst], -gamma);
            let fe = f(&xe);
            if fe < fr {
                simplex[worst] = xe;
                values[worst] = fe;
            } else {
                simplex[worst] = xr;
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[second] {
            simplex[worst] = xr;
            values[worst] = fr;
            continue;
        }
        // contraction: outside if the reflected point beats the worst, else inside
        let (xc, fc, accept) = if fr < values[worst] {
            let xc = point(&centroid, &simplex[worst], -rho);
            let fc = f(&xc);
            (xc, fc, fc <= fr)
        } else {
            let xc = point(&centroid, &simplex[worst], rho);
            let fc = f(&xc);
            (xc, fc, fc < values[worst])
        };
        if accept {
            simplex[worst] = xc;
            values[worst] = fc;
            continue;
        }
        let xb = simplex[best].clone();
        for &i in &order[1..] {
            simplex[i] = point(&xb, &simplex[i], sigma);
            values[i] = f(&simplex[i]);
        }
    }
    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    SimplexResult {
        x: simplex[best].clone(),
        f: values[best],
        iterations,
        converged,
    }
}

/// Result of [`multistart_maximize`].
#[derive(Debug, Clone, PartialEq)]
pub struct MultistartResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub converged: bool,
    pub restarts_used: usize,
}

fn restart_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Maximizes `objective` from `config.restarts` random starting points drawn
/// by `init`. Each start is refined by repeated simplex runs with a
/// shrinking initial step until a run no longer improves the value.
pub fn multistart_maximize<F, I>(
    objective: F,
    init: I,
    config: &OptimizationConfig,
) -> Result<MultistartResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
    I: Fn(&mut ChaCha8Rng) -> Vec<f64> + Sync,
{
    config.validate()?;
    let neg = |x: &[f64]| -objective(x);
    let runs: Vec<(Vec<f64>, f64, bool)> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(config.rng_seed, r as u64));
            let x0 = init(&mut rng);
            let mut res = nelder_mead(neg, &x0, 0.4, config.tolerance, config.max_iterations);
            let mut step = 0.1;
            for _ in 0..6 {
                let next = nelder_mead(neg, &res.x, step, config.tolerance, config.max_iterations);
                let gain = res.f - next.f;
                let done = gain <= config.tolerance;
                if next.f <= res.f {
                    res = next;
                }
                if done {
                    break;
                }
                step *= 0.5;
            }
            (res.x, -res.f, res.converged)
        })
        .collect();
    // earliest restart wins ties
    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.1 > runs[best].1 {
            best = i;
        }
    }
    let (x, value, converged) = runs[best].clone();
    if !value.is_finite() {
        return Err(Error::Consistency(
            "objective produced a non-finite value".into(),
        ));
    }
    Ok(MultistartResult {
        x,
        value,
        converged,
        restarts_used: config.restarts,
    })
}

fn settings_from_angles(
    observables: &[Observable],
    n_parties: usize,
    angles: &[f64],
) -> SettingsAssignment {
    let mut s = SettingsAssignment::empty(n_parties);
    for (o, a) in observables.iter().zip(angles.chunks(2)) {
        s.bind(*o, MeasurementDirection::from_angles(a[0], a[1]));
    }
    s
}

/// Per-term slot templates: `Some(k)` refers to the k-th optimized direction.
fn compile_terms(
    expr: &BellExpression,
    observables: &[Observable],
) -> Vec<(f64, Vec<Option<usize>>)> {
    expr.terms()
        .iter()
        .map(|t| {
            let slots = t
                .labels
                .iter()
                .enumerate()
                .map(|(party, l)| {
                    l.map(|label| {
                        observables
                            .iter()
                            .position(|o| *o == Observable { party, label })
                            .expect("observable list covers every term")
                    })
                })
                .collect();
            (t.coefficient, slots)
        })
        .collect()
}

/// Maximizes the quantum value of `expr` on `state` over all measurement
/// directions of every referenced setting.
pub fn max_violation(
    expr: &BellExpression,
    state: &QuantumState,
    config: &OptimizationConfig,
) -> Result<Optimum> {
    if state.n_qubits() != expr.n_parties() {
        return Err(validation(format!(
            "{}-qubit state for a {}-party expression",
            state.n_qubits(),
            expr.n_parties()
        )));
    }
    let observables = expr.observables();
    let compiled = compile_terms(expr, &observables);
    let objective = |angles: &[f64]| -> f64 {
        let dirs: Vec<MeasurementDirection> = angles
            .chunks(2)
            .map(|a| MeasurementDirection::from_angles(a[0], a[1]))
            .collect();
        let mut slots = [PartySetting::NoMeasurement; 4];
        compiled
            .iter()
            .map(|(c, template)| {
                for (slot, t) in slots.iter_mut().zip(template) {
                    *slot = match t {
                        Some(k) => PartySetting::Direction(dirs[*k]),
                        None => PartySetting::NoMeasurement,
                    };
                }
                // dimensions were checked above, so this cannot fail
                c * local_expectation(state, &slots[..template.len()]).unwrap_or(f64::NAN)
            })
            .sum()
    };
    let dim = 2 * observables.len();
    let init = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..dim)
            .map(|i| {
                if i % 2 == 0 {
                    rng.gen_range(0.0..PI)
                } else {
                    rng.gen_range(0.0..2.0 * PI)
                }
            })
            .collect()
    };
    let best = multistart_maximize(objective, init, config)?;
    let settings = settings_from_angles(&observables, expr.n_parties(), &best.x);
    let value = evaluate(expr, state, &settings)?;
    let ceiling = algebraic_max(expr);
    if value > ceiling + 1e-6 {
        return Err(Error::Consistency(format!(
            "optimized value {value} exceeds the algebraic maximum {ceiling}"
        )));
    }
    Ok(Optimum {
        value,
        settings,
        converged: best.converged,
        restarts_used: best.restarts_used,
    })
}

/// One point of a landscape scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub theta12: f64,
    pub phi12: f64,
    pub value: f64,
    pub converged: bool,
}

/// `n` evenly spaced points covering `[lo, hi]` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Violation of `expr` by `upsilon(θ, φ)` over the grid, theta-major.
///
/// With `fixed` settings each point is a single evaluation; otherwise each
/// point is maximized over settings with a seed derived from
/// `(rng_seed, row, col)`. A failing point yields `NaN`, `converged = false`.
pub fn scan_upsilon(
    expr: &BellExpression,
    theta_grid: &[f64],
    phi_grid: &[f64],
    config: &OptimizationConfig,
    fixed: Option<&SettingsAssignment>,
) -> Result<Vec<ScanRow>> {
    config.validate()?;
    if theta_grid.is_empty() || phi_grid.is_empty() {
        return Err(validation("scan grids must be non-empty"));
    }
    if theta_grid.iter().chain(phi_grid).any(|x| !x.is_finite()) {
        return Err(validation("scan grids must be finite"));
    }
    if expr.n_parties() != 4 {
        return Err(validation("landscape scans need a four-party expression"));
    }
    if let Some(s) = fixed {
        s.check_covers(expr)?;
    }
    let cols = phi_grid.len();
    let rows = (0..theta_grid.len() * cols)
        .into_par_iter()
        .map(|k| {
            let (r, c) = (k / cols, k % cols);
            let (theta12, phi12) = (theta_grid[r], phi_grid[c]);
            let state: QuantumState = upsilon(theta12, phi12).into();
            let outcome = match fixed {
                Some(s) => evaluate(expr, &state, s).map(|v| (v, true)),
                None => {
                    let seed =
                        splitmix64(config.rng_seed ^ splitmix64(((r as u64) << 32) | c as u64));
                    max_violation(expr, &state, &config.with_seed(seed))
                        .map(|o| (o.value, o.converged))
                }
            };
            let (value, converged) = outcome.unwrap_or((f64::NAN, false));
            ScanRow {
                theta12,
                phi12,
                value,
                converged,
            }
        })
        .collect();
    Ok(rows)
}

/// Formats `x` with at most `digits` significant digits in positional
/// notation, trimming trailing zeros.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 || x.abs() < 1e-300 {
        return "0".into();
    }
    let exponent = x.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - exponent).clamp(0, 40) as usize;
    let mut s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.truncate(s.trim_end_matches('0').trim_end_matches('.').len());
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

/// Writes `theta12,phi12,value,converged` rows, numbers to 12 significant digits.
pub fn write_scan_csv<W: Write>(rows: &[ScanRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "theta12,phi12,value,converged")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            format_significant(r.theta12, 12),
            format_significant(r.phi12, 12),
            format_significant(r.value, 12),
            r.converged
        )?;
    }
    Ok(())
}
