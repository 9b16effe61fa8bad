//! Limited-memory BFGS maximizer with a strong-Wolfe line search.
//!
//! The search runs on the negated objective; callers supply a function
//! returning the value and gradient of the quantity to be maximized.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    /// Stop once the sup-norm of the gradient is at most this.
    pub gradient_tolerance: f64,
    /// Number of curvature pairs kept.
    pub history_size: usize,
    pub wolfe_c1: f64,
    pub wolfe_c2: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            gradient_tolerance: 1e-6,
            history_size: 10,
            wolfe_c1: 1e-4,
            wolfe_c2: 0.9,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gradient_tolerance > 0.0) {
            return Err(Error::InvalidParameter(
                "gradient tolerance must be positive".into(),
            ));
        }
        if self.history_size == 0 {
            return Err(Error::InvalidParameter(
                "history size must be at least 1".into(),
            ));
        }
        if !(0.0 < self.wolfe_c1 && self.wolfe_c1 < self.wolfe_c2 && self.wolfe_c2 < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < c1 < c2 < 1, got c1={} c2={}",
                self.wolfe_c1, self.wolfe_c2
            )));
        }
        Ok(())
    }
}

/// Why the optimizer stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    IterationLimit,
    LineSearchFailed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Maximum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub termination: Termination,
}

impl Maximum {
    pub fn converged(&self) -> bool {
        self.termination == Termination::GradientTolerance
    }
}

const MAX_BRACKET_STEPS: usize = 30;
const MAX_ZOOM_STEPS: usize = 40;
const MAX_STEP: f64 = 1e10;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// A point evaluated on the minimization side.
struct Probe {
    step: f64,
    value: f64,
    slope: f64,
    x: Vec<f64>,
    gradient: Vec<f64>,
}

struct Minimizer<F> {
    objective: F,
    evaluations: usize,
}

impl<F> Minimizer<F>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    fn eval(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.evaluations += 1;
        let (value, gradient) = (self.objective)(x)?;
        // maximizing f is minimizing −f; non-finite values count as +∞
        let value = if value.is_finite() {
            -value
        } else {
            f64::INFINITY
        };
        Ok((value, gradient.iter().map(|g| -g).collect()))
    }

    fn probe(&mut self, x: &[f64], dir: &[f64], step: f64) -> Result<Probe> {
        let point: Vec<f64> = x.iter().zip(dir).map(|(a, d)| a + step * d).collect();
        let (value, gradient) = self.eval(&point)?;
        let slope = if value.is_finite() {
            dot(&gradient, dir)
        } else {
            f64::NAN
        };
        Ok(Probe {
            step,
            value,
            slope,
            x: point,
            gradient,
        })
    }

    /// Strong-Wolfe line search along `dir` from `x`. Returns `None` when
    /// no step with sufficient decrease was found.
    fn line_search(
        &mut self,
        x: &[f64],
        value: f64,
        gradient: &[f64],
        dir: &[f64],
        initial_step: f64,
        cfg: &OptimizerConfig,
    ) -> Result<Option<Probe>> {
        let slope0 = dot(gradient, dir);
        let origin = Probe {
            step: 0.0,
            value,
            slope: slope0,
            x: x.to_vec(),
            gradient: gradient.to_vec(),
        };
        let mut prev = origin;
        let mut step = initial_step;
        for i in 0..MAX_BRACKET_STEPS {
            let cur = self.probe(x, dir, step)?;
            let armijo_fails =
                !cur.value.is_finite() || cur.value > value + cfg.wolfe_c1 * step * slope0;
            if armijo_fails || (i > 0 && cur.value >= prev.value) {
                return self.zoom(x, dir, value, slope0, prev, cur, cfg);
            }
            if cur.slope.abs() <= -cfg.wolfe_c2 * slope0 {
                return Ok(Some(cur));
            }
            if cur.slope >= 0.0 {
                return self.zoom(x, dir, value, slope0, cur, prev, cfg);
            }
            if step >= MAX_STEP {
                return Ok(Some(cur));
            }
            step = (2.0 * step).min(MAX_STEP);
            prev = cur;
        }
        Ok((prev.step > 0.0).then_some(prev))
    }

    #[allow(clippy::too_many_arguments)]
    fn zoom(
        &mut self,
        x: &[f64],
        dir: &[f64],
        value0: f64,
        slope0: f64,
        mut lo: Probe,
        mut hi: Probe,
        cfg: &OptimizerConfig,
    ) -> Result<Option<Probe>> {
        for _ in 0..MAX_ZOOM_STEPS {
            let width = (hi.step - lo.step).abs();
            if width <= f64::EPSILON * lo.step.abs().max(hi.step.abs()).max(f64::MIN_POSITIVE) {
                break;
            }
            let step = interpolate(&lo, &hi);
            let cur = self.probe(x, dir, step)?;
            if !cur.value.is_finite()
                || cur.value > value0 + cfg.wolfe_c1 * step * slope0
                || cur.value >= lo.value
            {
                hi = cur;
            } else {
                if cur.slope.abs() <= -cfg.wolfe_c2 * slope0 {
                    return Ok(Some(cur));
                }
                if cur.slope * (hi.step - lo.step) >= 0.0 {
                    hi = lo;
                }
                lo = cur;
            }
        }
        // lo always satisfies sufficient decrease; accept it if it moved
        Ok((lo.step > 0.0).then_some(lo))
    }
}

/// Safeguarded cubic interpolation between two bracketing probes.
fn interpolate(lo: &Probe, hi: &Probe) -> f64 {
    let (a, b) = (lo.step, hi.step);
    let (left, right) = (a.min(b), a.max(b));
    let margin = 0.1 * (right - left);
    let bisect = 0.5 * (a + b);
    if !(hi.value.is_finite() && hi.slope.is_finite()) {
        return bisect;
    }
    let d1 = lo.slope + hi.slope - 3.0 * (lo.value - hi.value) / (a - b);
    let disc = d1 * d1 - lo.slope * hi.slope;
    if !(disc >= 0.0) {
        return bisect;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (hi.slope + d2 - d1) / (hi.slope - lo.slope + 2.0 * d2);
    if t.is_finite() && t >= left + margin && t <= right - margin {
        t
    } else {
        bisect
    }
}

/// Two-loop recursion: returns −H·g.
fn descent_direction(gradient: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = gradient.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let alpha = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= alpha * yi;
        }
        alphas.push(alpha);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in &mut q {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), alpha) in history.iter().zip(alphas.iter().rev()) {
        let beta = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (alpha - beta) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

/// Maximizes `objective` starting from `x0`.
///
/// The returned value is never below the value at `x0`. When the line search
/// cannot make progress the best point so far is returned with
/// [`Termination::LineSearchFailed`].
pub fn quasi_newton_maximize<F>(
    objective: F,
    x0: Vec<f64>,
    cfg: &OptimizerConfig,
) -> Result<Maximum>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    cfg.validate()?;
    let mut opt = Minimizer {
        objective,
        evaluations: 0,
    };
    let mut x = x0;
    let (mut value, mut gradient) = opt.eval(&x)?;
    if !value.is_finite() || gradient.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("objective at the starting point"));
    }
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> =
        VecDeque::with_capacity(cfg.history_size);
    let mut iterations = 0;
    let mut termination = Termination::IterationLimit;

    while iterations < cfg.max_iterations {
        if sup_norm(&gradient) <= cfg.gradient_tolerance {
            termination = Termination::GradientTolerance;
            break;
        }
        let mut dir = descent_direction(&gradient, &history);
        if !(dot(&dir, &gradient) < 0.0) {
            history.clear();
            dir = gradient.iter().map(|g| -g).collect();
        }
        let initial = if history.is_empty() {
            1f64.min(1.0 / sup_norm(&gradient))
        } else {
            1.0
        };
        let mut found = opt.line_search(&x, value, &gradient, &dir, initial, cfg)?;
        if found.is_none() && !history.is_empty() {
            // retry once along steepest descent with fresh curvature
            history.clear();
            dir = gradient.iter().map(|g| -g).collect();
            let initial = 1f64.min(1.0 / sup_norm(&gradient));
            found = opt.line_search(&x, value, &gradient, &dir, initial, cfg)?;
        }
        let Some(next) = found else {
            termination = Termination::LineSearchFailed;
            break;
        };
        iterations += 1;
        if next.value > value {
            // cannot happen for an accepted step; keep the better point
            termination = Termination::LineSearchFailed;
            break;
        }
        let s: Vec<f64> = next.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next
            .gradient
            .iter()
            .zip(&gradient)
            .map(|(a, b)| a - b)
            .collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if history.len() == cfg.history_size {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        x = next.x;
        value = next.value;
        gradient = next.gradient;
    }
    if termination == Termination::IterationLimit && sup_norm(&gradient) <= cfg.gradient_tolerance {
        termination = Termination::GradientTolerance;
    }
    log::debug!(
        "quasi-Newton stopped after {iterations} iterations ({} evaluations): {termination:?}",
        opt.evaluations
    );
    Ok(Maximum {
        x,
        value: -value,
        gradient: gradient.iter().map(|g| -g).collect(),
        iterations,
        termination,
    })
}
