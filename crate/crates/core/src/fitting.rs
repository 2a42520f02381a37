//! Least-squares fitting: ordinary linear regression and a small
//! Levenberg-Marquardt solver for few-parameter nonlinear models.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FitError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("degenerate design: {0}")]
    Degenerate(String),
    #[error("non-finite value in fit input at index {index}")]
    NonFinite { index: usize },
    #[error("no convergence after {iterations} iterations (last cost {cost:e})")]
    NotConverged {
        iterations: usize,
        cost: f64,
        steps: Vec<LmStep>,
    },
}

/// Result of an ordinary least-squares line fit `y = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
    pub n: usize,
}

impl LineFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Ordinary least squares, computed about the means for stability.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LineFit, FitError> {
    let n = x.len().min(y.len());
    if n < 2 {
        return Err(FitError::TooFewPoints { needed: 2, got: n });
    }
    for i in 0..n {
        if !(x[i].is_finite() && y[i].is_finite()) {
            return Err(FitError::NonFinite { index: i });
        }
    }
    let nf = n as f64;
    let mx = x[..n].iter().sum::<f64>() / nf;
    let my = y[..n].iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for i in 0..n {
        let dx = x[i] - mx;
        sxx += dx * dx;
        sxy += dx * (y[i] - my);
    }
    if sxx == 0.0 {
        return Err(FitError::Degenerate("all x values are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = (0..n)
        .map(|i| {
            let r = y[i] - (slope * x[i] + intercept);
            r * r
        })
        .sum();
    let residual_rms = (ss_res / nf).sqrt();
    let (slope_stderr, intercept_stderr) = if n > 2 {
        let s2 = ss_res / (nf - 2.0);
        ((s2 / sxx).sqrt(), (s2 * (1.0 / nf + mx * mx / sxx)).sqrt())
    } else {
        (0.0, 0.0)
    };
    Ok(LineFit {
        slope,
        intercept,
        residual_rms,
        slope_stderr,
        intercept_stderr,
        n,
    })
}

/// One accepted or rejected Levenberg-Marquardt step, kept for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct LmStep {
    pub iteration: usize,
    pub params: Vec<f64>,
    pub cost: f64,
    pub lambda: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when the relative cost decrease of an accepted step falls below this.
    pub cost_tol: f64,
    /// Stop when every relative parameter change falls below this.
    pub param_tol: f64,
    pub initial_lambda: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            cost_tol: 1e-14,
            param_tol: 1e-12,
            initial_lambda: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmResult {
    pub params: Vec<f64>,
    /// Residuals `y - model` at the solution.
    pub residuals: Vec<f64>,
    /// Sum of squared residuals.
    pub cost: f64,
    /// s²(JᵀJ)⁻¹ with s² = cost / (n - p).
    pub covariance: DMatrix<f64>,
    pub iterations: usize,
    pub steps: Vec<LmStep>,
}

impl LmResult {
    pub fn stderr(&self, i: usize) -> f64 {
        self.covariance[(i, i)].max(0.0).sqrt()
    }
}

/// Minimizes Σ (y_i - f(x_i; p))² with analytic Jacobian.
///
/// `model(x, p, grad)` returns f(x; p) and writes ∂f/∂p into `grad`.
pub fn levenberg_marquardt<F>(
    x: &[f64],
    y: &[f64],
    initial: &[f64],
    model: F,
    opts: &LmOptions,
) -> Result<LmResult, FitError>
where
    F: Fn(f64, &[f64], &mut [f64]) -> f64,
{
    let n = x.len().min(y.len());
    let p = initial.len();
    if n <= p {
        return Err(FitError::TooFewPoints {
            needed: p + 1,
            got: n,
        });
    }
    let evaluate = |params: &[f64]| -> (DVector<f64>, DMatrix<f64>, f64) {
        let mut r = DVector::zeros(n);
        let mut jac = DMatrix::zeros(n, p);
        let mut grad = vec![0.0; p];
        for i in 0..n {
            let f = model(x[i], params, &mut grad);
            r[i] = y[i] - f;
            for (j, g) in grad.iter().enumerate() {
                jac[(i, j)] = *g;
            }
        }
        let cost = r.norm_squared();
        (r, jac, cost)
    };

    let mut params = initial.to_vec();
    let (mut r, mut jac, mut cost) = evaluate(&params);
    if !cost.is_finite() {
        return Err(FitError::Degenerate(
            "model is not finite at the initial guess".into(),
        ));
    }
    let mut lambda = opts.initial_lambda;
    let mut steps = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &r;
        let mut damped = jtj.clone();
        for j in 0..p {
            damped[(j, j)] += lambda * jtj[(j, j)].max(f64::MIN_POSITIVE);
        }
        let Some(delta) = damped.cholesky().map(|c| c.solve(&jtr)) else {
            lambda *= 10.0;
            continue;
        };
        let trial: Vec<f64> = params
            .iter()
            .zip(delta.iter())
            .map(|(a, d)| a + d)
            .collect();
        let (tr, tj, tcost) = evaluate(&trial);
        let accepted = tcost.is_finite() && tcost <= cost;
        steps.push(LmStep {
            iteration: iterations,
            params: trial.clone(),
            cost: tcost,
            lambda,
            accepted,
        });
        if accepted {
            let small_step = params
                .iter()
                .zip(trial.iter())
                .all(|(a, b)| (b - a).abs() <= opts.param_tol * a.abs().max(1e-300));
            let small_cost = cost - tcost <= opts.cost_tol * cost;
            params = trial;
            r = tr;
            jac = tj;
            cost = tcost;
            lambda = (lambda / 10.0).max(1e-12);
            if small_step || small_cost {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e16 {
                // No descent direction left: we sit at a minimum to working precision.
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(FitError::NotConverged {
            iterations,
            cost,
            steps,
        });
    }
    let jtj = jac.transpose() * &jac;
    let dof = (n - p) as f64;
    let covariance = jtj
        .try_inverse()
        .ok_or_else(|| FitError::Degenerate("singular normal matrix at the solution".into()))?
        * (cost / dof);
    Ok(LmResult {
        params,
        residuals: r.iter().copied().collect(),
        cost,
        covariance,
        iterations,
        steps,
    })
}
