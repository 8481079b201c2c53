//! Finite-size scaling fit of failure rates near threshold:
//! `P_fail(p, L) = a + b x + c x^2` with `x = (p - p_th) L^(1/nu)`.

use nalgebra::{DMatrix, DVector, Matrix5, Vector5};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::montecarlo::ResultPoint;

/// One observation: size, error rate, failure rate and its standard error.
#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct Observation {
    pub l: usize,
    pub p: f64,
    pub rate: f64,
    pub sigma: f64,
}

impl Observation {
    /// Binomial standard error, floored at one event so that zero-failure
    /// points keep a finite weight.
    pub fn from_point(r: &ResultPoint) -> Self {
        let n = r.trials.max(1) as f64;
        let var = (r.rate * (1.0 - r.rate)).max(1.0 / n) / n;
        Observation {
            l: r.l,
            p: r.p,
            rate: r.rate,
            sigma: var.sqrt(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FitResult {
    pub p_th: f64,
    pub nu: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Standard errors of `p_th` and `nu`, scaled by the reduced chi-square when it exceeds one.
    pub p_th_err: f64,
    pub nu_err: f64,
    pub chi2: f64,
    pub dof: usize,
    /// Normalized residuals `(rate - model) / sigma` in input order.
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

/// Scaling form at parameters `[p_th, nu, a, b, c]`.
pub fn scaling_form(theta: &[f64; 5], l: usize, p: f64) -> f64 {
    let x = (p - theta[0]) * (l as f64).powf(1.0 / theta[1]);
    theta[2] + theta[3] * x + theta[4] * x * x
}

fn residuals_and_jacobian(theta: &Vector5<f64>, obs: &[Observation]) -> (DVector<f64>, DMatrix<f64>) {
    let m = obs.len();
    let mut r = DVector::zeros(m);
    let mut j = DMatrix::zeros(m, 5);
    let (pt, nu, a, b, c) = (theta[0], theta[1], theta[2], theta[3], theta[4]);
    for (i, o) in obs.iter().enumerate() {
        let ln_l = (o.l as f64).ln();
        let s = (ln_l / nu).exp();
        let x = (o.p - pt) * s;
        let f = a + b * x + c * x * x;
        let dfdx = b + 2.0 * c * x;
        r[i] = (o.rate - f) / o.sigma;
        // derivatives of the model, divided by sigma
        j[(i, 0)] = dfdx * (-s) / o.sigma;
        j[(i, 1)] = dfdx * (-x * ln_l / (nu * nu)) / o.sigma;
        j[(i, 2)] = 1.0 / o.sigma;
        j[(i, 3)] = x / o.sigma;
        j[(i, 4)] = x * x / o.sigma;
    }
    (r, j)
}

/// Linear least squares for `(a, b, c)` at fixed `(p_th, nu)`.
fn linear_part(pt: f64, nu: f64, obs: &[Observation]) -> Option<(f64, f64, f64)> {
    let m = obs.len();
    let mut a = DMatrix::zeros(m, 3);
    let mut y = DVector::zeros(m);
    for (i, o) in obs.iter().enumerate() {
        let x = (o.p - pt) * (o.l as f64).powf(1.0 / nu);
        a[(i, 0)] = 1.0 / o.sigma;
        a[(i, 1)] = x / o.sigma;
        a[(i, 2)] = x * x / o.sigma;
        y[i] = o.rate / o.sigma;
    }
    let sol = a.svd(true, true).solve(&y, 1e-12).ok()?;
    Some((sol[0], sol[1], sol[2]))
}

/// Crossing of the failure curves of the two largest sizes by linear
/// interpolation of their difference; `None` if the difference never changes sign.
pub fn crossing_estimate(obs: &[Observation]) -> Option<f64> {
    let mut ls: Vec<usize> = obs.iter().map(|o| o.l).collect();
    ls.sort_unstable();
    ls.dedup();
    if ls.len() < 2 {
        return None;
    }
    let (small, large) = (ls[ls.len() - 2], ls[ls.len() - 1]);
    let mut diffs: Vec<(f64, f64)> = obs
        .iter()
        .filter(|o| o.l == large)
        .filter_map(|o| {
            obs.iter()
                .find(|q| q.l == small && q.p == o.p)
                .map(|q| (o.p, o.rate - q.rate))
        })
        .collect();
    diffs.sort_by(|a, b| a.0.total_cmp(&b.0));
    diffs.windows(2).find_map(|w| {
        let ((p0, d0), (p1, d1)) = (w[0], w[1]);
        (d0 < 0.0 && d1 >= 0.0).then(|| p0 + (p1 - p0) * (-d0) / (d1 - d0))
    })
}

/// Weighted Levenberg-Marquardt fit of the scaling form. Needs at least three
/// sizes and four error rates, and a sign change between the two largest sizes.
pub fn fit_threshold(points: &[ResultPoint]) -> Result<FitResult> {
    let obs: Vec<Observation> = points.iter().map(Observation::from_point).collect();
    fit_observations(&obs)
}

pub fn fit_observations(obs: &[Observation]) -> Result<FitResult> {
    let mut ls: Vec<usize> = obs.iter().map(|o| o.l).collect();
    ls.sort_unstable();
    ls.dedup();
    let mut ps: Vec<f64> = obs.iter().map(|o| o.p).collect();
    ps.sort_by(f64::total_cmp);
    ps.dedup();
    if ls.len() < 3 || ps.len() < 4 {
        return Err(Error::Fit(format!(
            "need at least 3 sizes and 4 error rates, got {} and {}",
            ls.len(),
            ps.len()
        )));
    }
    let pt0 = crossing_estimate(obs).ok_or_else(|| Error::Fit("no crossing in the scanned range".into()))?;
    let nu0 = 1.0;
    let (a0, b0, c0) = linear_part(pt0, nu0, obs).ok_or_else(|| Error::Fit("singular initial fit".into()))?;
    let mut theta = Vector5::new(pt0, nu0, a0, b0, c0);
    let (mut r, mut j) = residuals_and_jacobian(&theta, obs);
    let mut chi2 = r.norm_squared();
    let mut lambda = 1e-3;
    let mut iterations = 0;
    const MAX_ITER: usize = 1000;
    loop {
        iterations += 1;
        if iterations > MAX_ITER {
            return Err(Error::NoConvergence(MAX_ITER));
        }
        let jtj: Matrix5<f64> = (j.transpose() * &j).fixed_view::<5, 5>(0, 0).into();
        let jtr: Vector5<f64> = (j.transpose() * &r).fixed_rows::<5>(0).into();
        let mut damped = jtj;
        for k in 0..5 {
            damped[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
        }
        let Some(step) = damped.lu().solve(&jtr) else {
            lambda *= 10.0;
            continue;
        };
        let trial = theta + step;
        if trial[1] <= 0.05 || !trial.iter().all(|v| v.is_finite()) {
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
            continue;
        }
        let (r2, j2) = residuals_and_jacobian(&trial, obs);
        let chi2_new = r2.norm_squared();
        if chi2_new <= chi2 {
            let improvement = chi2 - chi2_new;
            theta = trial;
            r = r2;
            j = j2;
            let done = improvement <= 1e-12 * chi2.max(1e-300) || step.norm() <= 1e-14 * theta.norm();
            chi2 = chi2_new;
            lambda = (lambda / 10.0).max(1e-15);
            if done {
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
    }
    let dof = obs.len().saturating_sub(5);
    let jtj: Matrix5<f64> = (j.transpose() * &j).fixed_view::<5, 5>(0, 0).into();
    let scale = if dof > 0 { (chi2 / dof as f64).max(1.0) } else { 1.0 };
    let cov = jtj
        .try_inverse()
        .ok_or_else(|| Error::Fit("singular normal matrix".into()))?
        * scale;
    Ok(FitResult {
        p_th: theta[0],
        nu: theta[1],
        a: theta[2],
        b: theta[3],
        c: theta[4],
        p_th_err: cov[(0, 0)].max(0.0).sqrt(),
        nu_err: cov[(1, 1)].max(0.0).sqrt(),
        chi2,
        dof,
        residuals: r.iter().copied().collect(),
        iterations,
    })
}
