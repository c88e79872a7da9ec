//! Statistical post-processing: ensemble averages over trajectories,
//! log-log power-law fits, finite-size-scaling collapse, and the
//! saturation / curve-crossing detectors built on them.

use faer::prelude::*;
use faer::Mat;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::trajectory::TrajectoryRecord;

/// Pointwise ensemble mean of one observable over trajectories. Averaging
/// always happens on per-trajectory scalar observables, never on
/// operator matrices.
#[derive(Debug, Clone)]
pub struct EnsembleSeries {
    pub p: Option<f64>,
    pub l: usize,
    pub delta_t: f64,
    pub steps: Vec<usize>,
    pub mean: Vec<f64>,
    /// Standard error of the mean; NaN when only one sample exists.
    pub std_error: Vec<f64>,
    pub n_samples: usize,
}

impl EnsembleSeries {
    pub fn times(&self) -> Vec<f64> {
        self.steps.iter().map(|&s| s as f64 * self.delta_t).collect()
    }
}

/// Average `observable` pointwise over records. All records must carry
/// the same (L, p) and identical step grids; per-step values are summed
/// in a canonical sorted order so the result is exactly independent of
/// record order.
pub fn ensemble_average(
    records: &[TrajectoryRecord],
    observable: &str,
    delta_t: f64,
) -> Result<EnsembleSeries> {
    if records.is_empty() {
        return Err(Error::InsufficientData("ensemble_average needs at least one record".into()));
    }
    let first = &records[0];
    let base = first
        .series
        .get(observable)
        .ok_or_else(|| Error::MissingSeries(observable.into()))?;
    let steps: Vec<usize> = base.iter().map(|&(s, _)| s).collect();

    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(records.len()); steps.len()];
    for rec in records {
        if rec.l != first.l || rec.p != first.p {
            return Err(Error::ShapeMismatch("records mix different (L, p) settings".into()));
        }
        let series = rec
            .series
            .get(observable)
            .ok_or_else(|| Error::MissingSeries(observable.into()))?;
        if series.len() != steps.len() || series.iter().zip(&steps).any(|(&(s, _), &t)| s != t) {
            return Err(Error::ShapeMismatch(format!(
                "record step grids differ for observable {observable}"
            )));
        }
        for (col, &(_, v)) in columns.iter_mut().zip(series.iter()) {
            col.push(v);
        }
    }

    let n = records.len();
    let mut mean = Vec::with_capacity(steps.len());
    let mut std_error = Vec::with_capacity(steps.len());
    for col in &mut columns {
        col.sort_unstable_by(|a, b| a.total_cmp(b));
        let m: f64 = col.iter().sum::<f64>() / n as f64;
        mean.push(m);
        if n < 2 {
            std_error.push(f64::NAN);
        } else {
            let var: f64 = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64;
            std_error.push((var / n as f64).sqrt());
        }
    }

    Ok(EnsembleSeries {
        p: first.p,
        l: first.l,
        delta_t,
        steps,
        mean,
        std_error,
        n_samples: n,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FitResult {
    pub alpha: f64,
    pub beta: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Ordinary least squares of ln(mean) against ln(t) over steps >= t_min.
pub fn loglog_fit(series: &EnsembleSeries, t_min: usize) -> Result<FitResult> {
    if t_min < 1 {
        return Err(Error::InvalidParams("t_min must be at least 1 (t = 0 has no logarithm)".into()));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&step, &m) in series.steps.iter().zip(&series.mean) {
        if step < t_min {
            continue;
        }
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::NonPositiveData(format!(
                "mean at step {step} is {m}; log-log fit needs positive means"
            )));
        }
        xs.push((step as f64 * series.delta_t).ln());
        ys.push(m.ln());
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!("log-log fit needs at least 3 points, got {n}")));
    }

    let xbar: f64 = xs.iter().sum::<f64>() / n as f64;
    let ybar: f64 = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all abscissa values coincide".into()));
    }
    let alpha = sxy / sxx;
    let beta = ybar - alpha * xbar;
    let ss_tot: f64 = ys.iter().map(|y| (y - ybar) * (y - ybar)).sum();
    if ss_tot <= 0.0 {
        return Err(Error::DegenerateFit("ordinate is constant; R^2 undefined".into()));
    }
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (alpha * x + beta);
            r * r
        })
        .sum();
    Ok(FitResult { alpha, beta, r_squared: 1.0 - ss_res / ss_tot, n_points: n })
}

/// One (p, L) entry of a saturation table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FssPoint {
    pub p: f64,
    pub l: usize,
    pub value: f64,
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FssOptions {
    /// Weight points by inverse variance in the polynomial fit. Off by
    /// default; requires every point to carry a positive standard error.
    pub weighted: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FssResult {
    pub grid_pc: Vec<f64>,
    pub grid_nu: Vec<f64>,
    /// r2[i][j] for (grid_pc[i], grid_nu[j]); -inf marks cells where the
    /// fit is degenerate.
    pub r2: Vec<Vec<f64>>,
    pub best_pc: f64,
    pub best_nu: f64,
    pub best_r2: f64,
    /// Coefficients of the fifth-order collapse polynomial in the scaled
    /// variable u = x / x_scale, constant term first.
    pub poly_coeffs: [f64; 6],
    pub x_scale: f64,
}

impl FssResult {
    /// Evaluate the fitted collapse curve at x = (p - p_c) L^nu.
    pub fn scaling_function(&self, x: f64) -> f64 {
        let u = x / self.x_scale;
        self.poly_coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c)
    }
}

/// Default search grids: p_c in [0.04, 0.14] step 0.001 and nu in
/// [0.5, 3.5] step 0.02.
pub fn default_fss_grids() -> (Vec<f64>, Vec<f64>) {
    let pc = (40..=140).map(|i| i as f64 / 1000.0).collect();
    let nu = (25..=175).map(|i| i as f64 / 50.0).collect();
    (pc, nu)
}

struct CellFit {
    r2: f64,
    coeffs: [f64; 6],
    scale: f64,
}

fn fit_cell(points: &[FssPoint], weights: Option<&[f64]>, pc: f64, nu: f64) -> CellFit {
    let degenerate = |scale| CellFit { r2: f64::NEG_INFINITY, coeffs: [0.0; 6], scale };
    let xs: Vec<f64> = points.iter().map(|pt| (pt.p - pc) * (pt.l as f64).powf(nu)).collect();
    let scale = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return degenerate(1.0);
    }
    let mut distinct: Vec<f64> = xs.clone();
    distinct.sort_unstable_by(|a, b| a.total_cmp(b));
    distinct.dedup();
    if distinct.len() < 6 {
        return degenerate(scale);
    }

    let n = points.len();
    let mut design = Mat::<f64>::zeros(n, 6);
    let mut rhs = Mat::<f64>::zeros(n, 1);
    for (i, pt) in points.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[i].sqrt());
        let u = xs[i] / scale;
        let mut pow = 1.0;
        for k in 0..6 {
            design[(i, k)] = w * pow;
            pow *= u;
        }
        rhs[(i, 0)] = w * pt.value;
    }
    let sol = design.qr().solve_lstsq(&rhs);
    let mut coeffs = [0.0; 6];
    for (k, c) in coeffs.iter_mut().enumerate() {
        *c = sol[(k, 0)];
    }

    let wsum: f64 = (0..n).map(|i| weights.map_or(1.0, |w| w[i])).sum();
    let ybar_w: f64 =
        (0..n).map(|i| weights.map_or(1.0, |w| w[i]) * points[i].value).sum::<f64>() / wsum;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    let mut ss_yy = 0.0;
    for (i, pt) in points.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        let u = xs[i] / scale;
        let fit = coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c);
        ss_res += w * (pt.value - fit) * (pt.value - fit);
        ss_tot += w * (pt.value - ybar_w) * (pt.value - ybar_w);
        ss_yy += w * pt.value * pt.value;
    }
    let tiny = 1e-14 * ss_yy.max(f64::MIN_POSITIVE);
    let r2 = if ss_tot <= tiny {
        // Constant data: any interpolating fit is perfect, anything else
        // is unusable.
        if ss_res <= tiny {
            1.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    CellFit { r2, coeffs, scale }
}

pub fn fss_scan(points: &[FssPoint], grid_pc: &[f64], grid_nu: &[f64]) -> Result<FssResult> {
    fss_scan_with(points, grid_pc, grid_nu, FssOptions::default())
}

/// Grid scan of the collapse ansatz value = Psi((p - p_c) L^nu): each
/// cell fits one fifth-order polynomial jointly through all points and
/// records its R^2. The argmax wins; exact ties go to smaller nu, then
/// smaller p_c.
pub fn fss_scan_with(
    points: &[FssPoint],
    grid_pc: &[f64],
    grid_nu: &[f64],
    options: FssOptions,
) -> Result<FssResult> {
    if grid_pc.is_empty() || grid_nu.is_empty() {
        return Err(Error::InvalidParams("empty search grid".into()));
    }
    for pt in points {
        if !(pt.p.is_finite() && pt.value.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "non-finite table entry at (p = {}, L = {})",
                pt.p, pt.l
            )));
        }
    }
    let mut sizes: Vec<usize> = points.iter().map(|pt| pt.l).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "scaling collapse needs at least 2 system sizes, got {}",
            sizes.len()
        )));
    }
    for &l in &sizes {
        let mut ps: Vec<f64> =
            points.iter().filter(|pt| pt.l == l).map(|pt| pt.p).collect();
        ps.sort_unstable_by(|a, b| a.total_cmp(b));
        ps.dedup();
        if ps.len() < 4 {
            return Err(Error::InsufficientData(format!(
                "scaling collapse needs at least 4 distinct p per size, L = {l} has {}",
                ps.len()
            )));
        }
    }

    let weights: Option<Vec<f64>> = if options.weighted {
        let mut w = Vec::with_capacity(points.len());
        for pt in points {
            match pt.std_error {
                Some(se) if se.is_finite() && se > 0.0 => w.push(1.0 / (se * se)),
                _ => {
                    return Err(Error::InvalidParams(format!(
                        "weighted fit needs positive standard errors; (p = {}, L = {}) has none",
                        pt.p, pt.l
                    )))
                }
            }
        }
        Some(w)
    } else {
        None
    };

    let mut r2 = vec![vec![f64::NEG_INFINITY; grid_nu.len()]; grid_pc.len()];
    let mut best: Option<(f64, f64, f64)> = None;
    for (i, &pc) in grid_pc.iter().enumerate() {
        for (j, &nu) in grid_nu.iter().enumerate() {
            let cell = fit_cell(points, weights.as_deref(), pc, nu);
            r2[i][j] = cell.r2;
            if cell.r2 == f64::NEG_INFINITY {
                continue;
            }
            let better = match best {
                None => true,
                Some((br2, bnu, bpc)) => {
                    cell.r2 > br2
                        || (cell.r2 == br2 && (nu < bnu || (nu == bnu && pc < bpc)))
                }
            };
            if better {
                best = Some((cell.r2, nu, pc));
            }
        }
    }
    let (best_r2, best_nu, best_pc) =
        best.ok_or_else(|| Error::DegenerateFit("every grid cell is degenerate".into()))?;
    let winner = fit_cell(points, weights.as_deref(), best_pc, best_nu);

    Ok(FssResult {
        grid_pc: grid_pc.to_vec(),
        grid_nu: grid_nu.to_vec(),
        r2,
        best_pc,
        best_nu,
        best_r2,
        poly_coeffs: winner.coeffs,
        x_scale: winner.scale,
    })
}

pub const SATURATION_WINDOW_FRAC: f64 = 0.2;
pub const SATURATION_SLOPE_SIGMAS: f64 = 3.0;
pub const SATURATION_DRIFT_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SaturationCheck {
    pub saturated: bool,
    pub slope: f64,
    pub slope_std_error: f64,
    pub relative_drift: f64,
    pub window_points: usize,
}

/// Flag a series as still drifting when the late-time window (the last
/// fifth of the recorded range) has a slope that is both statistically
/// significant (3 sigma) and large enough to move the signal by more
/// than 5% across the window.
pub fn saturation_check(series: &EnsembleSeries) -> Result<SaturationCheck> {
    let last = *series
        .steps
        .last()
        .ok_or_else(|| Error::InsufficientData("empty series".into()))?;
    let cutoff = (1.0 - SATURATION_WINDOW_FRAC) * last as f64;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&step, &m) in series.steps.iter().zip(&series.mean) {
        if step as f64 >= cutoff {
            xs.push(step as f64 * series.delta_t);
            ys.push(m);
        }
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "saturation window holds {n} points; need at least 3"
        )));
    }

    let xbar: f64 = xs.iter().sum::<f64>() / n as f64;
    let ybar: f64 = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("saturation window has a single time value".into()));
    }
    let slope: f64 =
        xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum::<f64>() / sxx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - ybar - slope * (x - xbar);
            r * r
        })
        .sum();
    let slope_std_error = (ss_res / (n - 2) as f64 / sxx).sqrt();
    let span = xs[n - 1] - xs[0];
    let relative_drift = (slope * span).abs() / ybar.abs().max(1e-12);

    let significant = slope.abs() > SATURATION_SLOPE_SIGMAS * slope_std_error;
    let saturated = !(significant && relative_drift > SATURATION_DRIFT_TOL);
    Ok(SaturationCheck { saturated, slope, slope_std_error, relative_drift, window_points: n })
}

/// First p where two curves cross with both flanking differences
/// resolved beyond one combined standard error; linear interpolation
/// locates the zero.
pub fn curve_crossing(
    p: &[f64],
    a: &[f64],
    a_err: &[f64],
    b: &[f64],
    b_err: &[f64],
) -> Result<Option<f64>> {
    let n = p.len();
    if a.len() != n || b.len() != n || a_err.len() != n || b_err.len() != n {
        return Err(Error::ShapeMismatch("crossing inputs differ in length".into()));
    }
    if n < 2 {
        return Err(Error::InsufficientData("crossing needs at least 2 points".into()));
    }
    if p.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParams("p grid must be strictly increasing".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let se: Vec<f64> = a_err.iter().zip(b_err).map(|(x, y)| x.hypot(*y)).collect();
    for (v, s) in d.iter().zip(&se) {
        if !v.is_finite() || !s.is_finite() {
            return Err(Error::InvalidParams("crossing inputs must be finite".into()));
        }
    }
    for i in 0..n - 1 {
        let sig = d[i].abs() >= se[i] && d[i + 1].abs() >= se[i + 1];
        if sig && d[i] * d[i + 1] < 0.0 {
            let t = d[i] / (d[i] - d[i + 1]);
            return Ok(Some(p[i] + t * (p[i + 1] - p[i])));
        }
    }
    Ok(None)
}
