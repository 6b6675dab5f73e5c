//! Damped Gauss–Newton (Levenberg–Marquardt) least squares and the five
//! model shapes used throughout the analysis.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelShape {
    /// `baseline − depth·(w/2)² / ((x − center)² + (w/2)²)`, w = FWHM.
    LorentzianDip,
    /// `amplitude·exp(−|x − center| / width)`.
    Cusp,
    /// `slope·x + intercept`.
    Linear,
    /// `scale·x / (a + x)`.
    Saturation,
    /// `amplitude·exp(−x / tau)`.
    ExpDecay,
}

impl ModelShape {
    pub const ALL: [ModelShape; 5] = [
        ModelShape::LorentzianDip,
        ModelShape::Cusp,
        ModelShape::Linear,
        ModelShape::Saturation,
        ModelShape::ExpDecay,
    ];

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            ModelShape::LorentzianDip => &["baseline", "depth", "center", "fwhm"],
            ModelShape::Cusp => &["amplitude", "width", "center"],
            ModelShape::Linear => &["slope", "intercept"],
            ModelShape::Saturation => &["scale", "a"],
            ModelShape::ExpDecay => &["amplitude", "tau"],
        }
    }

    pub fn n_params(self) -> usize {
        self.param_names().len()
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelShape::LorentzianDip => "lorentzian-dip",
            ModelShape::Cusp => "cusp",
            ModelShape::Linear => "linear",
            ModelShape::Saturation => "saturation",
            ModelShape::ExpDecay => "exp-decay",
        }
    }

    /// Index of the parameter that must stay strictly positive, if any.
    fn positive_param(self) -> Option<usize> {
        match self {
            ModelShape::LorentzianDip => Some(3),
            ModelShape::Cusp => Some(1),
            ModelShape::Linear => None,
            ModelShape::Saturation => Some(1),
            ModelShape::ExpDecay => Some(1),
        }
    }

    pub fn check_params(self, p: &[f64]) -> Result<()> {
        if p.len() != self.n_params() {
            return Err(Error::Invalid(format!(
                "{} takes {} parameters, got {}",
                self.name(),
                self.n_params(),
                p.len()
            )));
        }
        if let Some(i) = p.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(self.param_names()[i], p[i]));
        }
        if let Some(i) = self.positive_param() {
            if !(p[i] > 0.0) {
                return Err(Error::domain(self.param_names()[i], p[i]));
            }
        }
        Ok(())
    }

    fn value(self, p: &[f64], x: f64) -> f64 {
        match self {
            ModelShape::LorentzianDip => {
                let h = 0.5 * p[3];
                let u = x - p[2];
                p[0] - p[1] * h * h / (u * u + h * h)
            }
            ModelShape::Cusp => p[0] * (-(x - p[2]).abs() / p[1]).exp(),
            ModelShape::Linear => p[0] * x + p[1],
            ModelShape::Saturation => p[0] * x / (p[1] + x),
            ModelShape::ExpDecay => p[0] * (-x / p[1]).exp(),
        }
    }

    fn gradient(self, p: &[f64], x: f64, out: &mut [f64]) {
        match self {
            ModelShape::LorentzianDip => {
                let h = 0.5 * p[3];
                let u = x - p[2];
                let den = u * u + h * h;
                let l = h * h / den;
                out[0] = 1.0;
                out[1] = -l;
                out[2] = -p[1] * 2.0 * u * h * h / (den * den);
                out[3] = -p[1] * (2.0 * h * u * u / (den * den)) * 0.5;
            }
            ModelShape::Cusp => {
                let u = x - p[2];
                let e = (-u.abs() / p[1]).exp();
                out[0] = e;
                out[1] = p[0] * e * u.abs() / (p[1] * p[1]);
                out[2] = p[0] * e * u.signum() / p[1];
            }
            ModelShape::Linear => {
                out[0] = x;
                out[1] = 1.0;
            }
            ModelShape::Saturation => {
                let d = p[1] + x;
                out[0] = x / d;
                out[1] = -p[0] * x / (d * d);
            }
            ModelShape::ExpDecay => {
                let e = (-x / p[1]).exp();
                out[0] = e;
                out[1] = p[0] * e * x / (p[1] * p[1]);
            }
        }
    }

    /// Starting point from the data alone.
    ///
    /// - lorentzian-dip: baseline from the end samples, center at the
    ///   minimum, FWHM half the x span.
    /// - cusp: center and amplitude at the largest |y|, width half the span.
    /// - linear: closed-form least squares.
    /// - saturation: scale = max y, a = median x.
    /// - exp-decay: amplitude = first y, τ = first 1/e crossing (or the span).
    pub fn auto_init(self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let n = x.len();
        let (xmin, xmax) = x
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let span = (xmax - xmin).max(f64::MIN_POSITIVE);
        match self {
            ModelShape::LorentzianDip => {
                let base = 0.5 * (y[0] + y[n - 1]);
                let imin = argmin(y);
                vec![base, base - y[imin], x[imin], 0.5 * span]
            }
            ModelShape::Cusp => {
                let iext = (0..n)
                    .max_by(|&a, &b| y[a].abs().total_cmp(&y[b].abs()))
                    .unwrap_or(0);
                vec![y[iext], 0.5 * span, x[iext]]
            }
            ModelShape::Linear => {
                let (m, b) = linear_least_squares(x, y);
                vec![m, b]
            }
            ModelShape::Saturation => {
                let ymax = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut xs = x.to_vec();
                xs.sort_by(f64::total_cmp);
                let med = xs[n / 2];
                vec![ymax, if med > 0.0 { med } else { span }]
            }
            ModelShape::ExpDecay => {
                let mut idx: Vec<usize> = (0..n).collect();
                idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
                let a0 = y[idx[0]];
                let target = a0 / std::f64::consts::E;
                let mut tau = span;
                for w in idx.windows(2) {
                    let (i, j) = (w[0], w[1]);
                    if (y[i] - target) * (y[j] - target) <= 0.0 && y[i] != y[j] {
                        let t = x[i] + (target - y[i]) * (x[j] - x[i]) / (y[j] - y[i]);
                        if t > 0.0 {
                            tau = t;
                        }
                        break;
                    }
                }
                vec![a0, tau]
            }
        }
    }
}

impl std::str::FromStr for ModelShape {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        ModelShape::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown model shape `{s}`"))
    }
}

fn argmin(y: &[f64]) -> usize {
    (0..y.len()).min_by(|&a, &b| y[a].total_cmp(&y[b])).unwrap_or(0)
}

/// Pointwise model value with parameter validation.
pub fn eval_model(shape: ModelShape, params: &[f64], x: f64) -> Result<f64> {
    shape.check_params(params)?;
    Ok(shape.value(params, x))
}

/// Closed-form straight-line least squares, returns (slope, intercept).
pub fn linear_least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Coefficient of determination of `y` against fitted values `f`.
pub fn r_squared(y: &[f64], f: &[f64]) -> f64 {
    let n = y.len() as f64;
    let my = y.iter().sum::<f64>() / n;
    let ss_res: f64 = y.iter().zip(f).map(|(a, b)| (a - b) * (a - b)).sum();
    let ss_tot: f64 = y.iter().map(|a| (a - my) * (a - my)).sum();
    1.0 - ss_res / ss_tot
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub shape: ModelShape,
    pub params: Vec<f64>,
    /// 1σ from the inverse curvature scaled by the residual variance.
    pub sigmas: Vec<f64>,
    pub rms: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Cost ½Σr² after every accepted iteration, starting with the initial
    /// cost.
    #[serde(skip)]
    pub cost_history: Vec<f64>,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<f64> {
        let i = self.shape.param_names().iter().position(|n| *n == name)?;
        Some(self.params[i])
    }

    pub fn sigma(&self, name: &str) -> Option<f64> {
        let i = self.shape.param_names().iter().position(|n| *n == name)?;
        Some(self.sigmas[i])
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.shape.value(&self.params, x)
    }

    pub fn report(&self) -> FitReport {
        FitReport {
            shape: self.shape,
            params: self
                .shape
                .param_names()
                .iter()
                .zip(&self.params)
                .map(|(n, v)| (n.to_string(), *v))
                .collect(),
            sigmas: self
                .shape
                .param_names()
                .iter()
                .zip(&self.sigmas)
                .map(|(n, v)| (n.to_string(), *v))
                .collect(),
            rms: self.rms,
            iterations: self.iterations,
            converged: self.converged,
            uncertainty: "curvature".into(),
        }
    }
}

/// JSON fit report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub shape: ModelShape,
    pub params: Vec<(String, f64)>,
    pub sigmas: Vec<(String, f64)>,
    pub rms: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Estimator behind `sigmas`.
    pub uncertainty: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Converged when ‖δ‖/‖p‖ falls below this.
    pub step_tol: f64,
    /// Converged when the relative cost decrease falls below this.
    pub cost_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 200,
            step_tol: 1e-8,
            cost_tol: 1e-10,
        }
    }
}

struct Problem<'a> {
    shape: ModelShape,
    x: &'a [f64],
    y: &'a [f64],
}

impl Problem<'_> {
    fn residuals(&self, p: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.x.len(),
            self.x.iter().zip(self.y).map(|(&x, &y)| y - self.shape.value(p, x)),
        )
    }

    fn cost(&self, p: &[f64]) -> f64 {
        0.5 * self.residuals(p).norm_squared()
    }

    /// Jacobian of the model (not of the residuals).
    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        let k = self.shape.n_params();
        let mut j = DMatrix::zeros(self.x.len(), k);
        let mut g = [0.0; 4];
        for (r, &x) in self.x.iter().enumerate() {
            self.shape.gradient(p, x, &mut g[..k]);
            for c in 0..k {
                j[(r, c)] = g[c];
            }
        }
        j
    }
}

/// Names the parameter responsible for a (near-)singular normal matrix, if
/// there is one.
fn degenerate_param(shape: ModelShape, normal: &DMatrix<f64>) -> Option<&'static str> {
    let k = normal.nrows();
    let diag: Vec<f64> = (0..k).map(|i| normal[(i, i)]).collect();
    let dmax = diag.iter().cloned().fold(0.0, f64::max);
    if let Some(i) = diag.iter().position(|&d| !(d > 1e-300 && d > 1e-28 * dmax)) {
        return Some(shape.param_names()[i]);
    }
    let corr = DMatrix::from_fn(k, k, |i, j| normal[(i, j)] / (diag[i] * diag[j]).sqrt());
    let eig = corr.symmetric_eigen();
    let (imin, &lmin) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))?;
    if lmin > 1e-13 {
        return None;
    }
    let v = eig.eigenvectors.column(imin);
    let worst = (0..k).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()))?;
    Some(shape.param_names()[worst])
}

/// Least-squares fit of `shape` to samples (x, y). `init = None` uses
/// [`ModelShape::auto_init`].
pub fn fit_curve(shape: ModelShape, x: &[f64], y: &[f64], init: Option<&[f64]>) -> Result<FitResult> {
    fit_curve_with(shape, x, y, init, FitOptions::default())
}

pub fn fit_curve_with(
    shape: ModelShape,
    x: &[f64],
    y: &[f64],
    init: Option<&[f64]>,
    opts: FitOptions,
) -> Result<FitResult> {
    let k = shape.n_params();
    if x.len() != y.len() {
        return Err(Error::Invalid("x and y lengths differ".into()));
    }
    if x.len() < 2 * k {
        return Err(Error::Invalid(format!(
            "{} needs at least {} samples, got {}",
            shape.name(),
            2 * k,
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Invalid("non-finite data".into()));
    }
    let mut p = match init {
        Some(p) => p.to_vec(),
        None => shape.auto_init(x, y),
    };
    shape.check_params(&p)?;

    let prob = Problem { shape, x, y };
    let mut cost = prob.cost(&p);
    let mut history = vec![cost];
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    {
        let j = prob.jacobian(&p);
        if let Some(param) = degenerate_param(shape, &(j.transpose() * &j)) {
            return Err(Error::SingularFit { param });
        }
    }

    let mut j = prob.jacobian(&p);
    let mut r = prob.residuals(&p);
    while iterations < opts.max_iterations {
        iterations += 1;
        if cost == 0.0 {
            converged = true;
            break;
        }
        let a = j.transpose() * &j;
        let g = j.transpose() * &r;
        let mut damped = a.clone();
        for i in 0..k {
            damped[(i, i)] += lambda * a[(i, i)].max(1e-300);
        }
        let Some(step) = damped.clone().cholesky().map(|c| c.solve(&g)) else {
            lambda *= 10.0;
            continue;
        };
        let p_norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        let rel_step = step.norm() / p_norm.max(f64::MIN_POSITIVE);
        let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let trial_cost = if shape.check_params(&trial).is_ok() {
            prob.cost(&trial)
        } else {
            f64::INFINITY
        };
        if trial_cost < cost {
            let rel_cost = (cost - trial_cost) / cost;
            p = trial;
            cost = trial_cost;
            history.push(cost);
            lambda = (lambda / 10.0).max(1e-15);
            j = prob.jacobian(&p);
            r = prob.residuals(&p);
            if rel_step < opts.step_tol || rel_cost < opts.cost_tol {
                converged = true;
                break;
            }
        } else {
            // no decrease even for a vanishing step: at the minimum
            if rel_step < opts.step_tol {
                converged = true;
                break;
            }
            lambda *= 10.0;
            if lambda > 1e20 {
                break;
            }
        }
    }

    let n = x.len();
    let mut result = FitResult {
        shape,
        params: p,
        sigmas: vec![0.0; k],
        rms: (2.0 * cost / n as f64).sqrt(),
        iterations,
        converged,
        cost_history: history,
    };
    if !converged {
        return Err(Error::NotConverged(Box::new(result)));
    }
    result.sigmas = fit_uncertainty(&result, x, y);
    Ok(result)
}

/// Curvature-based 1σ: `sqrt(diag((JᵀJ)⁻¹) · RSS/(n − k))`. A singular
/// curvature gives infinite σ for every parameter.
pub fn fit_uncertainty(result: &FitResult, x: &[f64], y: &[f64]) -> Vec<f64> {
    let prob = Problem {
        shape: result.shape,
        x,
        y,
    };
    let k = result.shape.n_params();
    let n = x.len();
    let rss = prob.residuals(&result.params).norm_squared();
    let dof = n.saturating_sub(k).max(1) as f64;
    let j = prob.jacobian(&result.params);
    let a = j.transpose() * &j;
    // invert through the correlation matrix to keep the scales balanced
    let d: Vec<f64> = (0..k).map(|i| a[(i, i)].sqrt()).collect();
    if d.iter().any(|v| !(*v > 0.0)) {
        return vec![f64::INFINITY; k];
    }
    let corr = DMatrix::from_fn(k, k, |i, jj| a[(i, jj)] / (d[i] * d[jj]));
    match corr.cholesky() {
        Some(c) => {
            let inv = c.inverse();
            (0..k)
                .map(|i| (inv[(i, i)] * rss / dof).sqrt() / d[i])
                .collect()
        }
        None => vec![f64::INFINITY; k],
    }
}

/// Residual-resampling bootstrap of the parameter spread, for
/// cross-checking [`fit_uncertainty`]. Deterministic for a given seed.
pub fn bootstrap_uncertainty(
    result: &FitResult,
    x: &[f64],
    y: &[f64],
    resamples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let shape = result.shape;
    let fitted: Vec<f64> = x.iter().map(|&v| result.predict(v)).collect();
    let resid: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = shape.n_params();
    let mut sum = vec![0.0; k];
    let mut sum_sq = vec![0.0; k];
    let mut count = 0usize;
    for _ in 0..resamples {
        let yb: Vec<f64> = fitted
            .iter()
            .map(|f| f + resid[rng.random_range(0..resid.len())])
            .collect();
        if let Ok(fit) = fit_curve(shape, x, &yb, Some(&result.params)) {
            for i in 0..k {
                sum[i] += fit.params[i];
                sum_sq[i] += fit.params[i] * fit.params[i];
            }
            count += 1;
        }
    }
    if count < 2 {
        return Err(Error::Invalid("bootstrap produced fewer than two fits".into()));
    }
    let c = count as f64;
    Ok((0..k)
        .map(|i| ((sum_sq[i] - sum[i] * sum[i] / c) / (c - 1.0)).max(0.0).sqrt())
        .collect())
}
