//! Conjugate-gradient fine-tuning of membership-function parameters.
//!
//! The min/max inference path is not differentiable, so fine-tuning
//! minimizes a smooth surrogate: rule activations use the product t-norm
//! and class scores use a log-sum-exp smooth maximum with temperature `tau`.
//! The loss is the mean squared error between those soft scores and one-hot
//! targets.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::nefclass::{FuzzyModel, SIGMA_MAX, SIGMA_MIN};
use crate::train::ga::LabeledSample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CgConfig {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    /// Largest single-parameter change tried first by the line search.
    pub initial_step: f64,
    pub shrink: f64,
    pub sufficient_decrease: f64,
    pub max_line_search: usize,
    pub restart_period: usize,
    pub temperature: f64,
    /// Seeds reservoir sampling when a batch is drawn for fine-tuning.
    pub rng_seed: u64,
}

impl Default for CgConfig {
    fn default() -> Self {
        Self {
            max_iterations: 40,
            gradient_tolerance: 1e-7,
            initial_step: 0.05,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            max_line_search: 30,
            restart_period: 20,
            temperature: 20.0,
            rng_seed: 0,
        }
    }
}

impl CgConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let ok = self.max_iterations >= 1
            && self.gradient_tolerance > 0.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.initial_step > 0.0
            && self.sufficient_decrease > 0.0
            && self.sufficient_decrease < 1.0
            && self.restart_period >= 1
            && self.temperature > 0.0;
        if ok {
            Ok(())
        } else {
            Err(ModelError::Invalid(format!("invalid CG configuration {self:?}")))
        }
    }
}

/// A smooth objective over a box-constrained parameter vector.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    /// Writes the gradient into `grad` and returns the value.
    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64;
    fn bounds(&self, _i: usize) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub initial_value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub final_gradient_norm: f64,
    /// Objective after every accepted step, starting with the initial value.
    pub trace: Vec<f64>,
}

fn project<O: Objective + ?Sized>(obj: &O, x: &mut [f64]) {
    for (i, v) in x.iter_mut().enumerate() {
        let (lo, hi) = obj.bounds(i);
        *v = v.clamp(lo, hi);
    }
}

/// Zeroes gradient components whose descent direction would leave the box.
pub fn project_gradient<O: Objective + ?Sized>(obj: &O, x: &[f64], grad: &mut [f64]) {
    for i in 0..grad.len() {
        let (lo, hi) = obj.bounds(i);
        if (x[i] <= lo && grad[i] > 0.0) || (x[i] >= hi && grad[i] < 0.0) {
            grad[i] = 0.0;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Backtracking Armijo search along `dir`, refined by one quadratic
/// interpolation per trial. Returns the accepted point and its value.
fn line_search<O: Objective + ?Sized>(
    obj: &O,
    config: &CgConfig,
    x: &[f64],
    f0: f64,
    grad: &[f64],
    dir: &[f64],
) -> Option<(Vec<f64>, f64)> {
    let slope = dot(grad, dir);
    let max_comp = dir.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if slope >= 0.0 || max_comp == 0.0 {
        return None;
    }
    let trial = |alpha: f64| -> (Vec<f64>, f64) {
        let mut xn: Vec<f64> = x.iter().zip(dir).map(|(a, d)| a + alpha * d).collect();
        project(obj, &mut xn);
        let f = obj.value(&xn);
        (xn, f)
    };
    let armijo = |xn: &[f64], f: f64| {
        let moved: f64 = grad.iter().zip(xn.iter().zip(x)).map(|(g, (a, b))| g * (a - b)).sum();
        f.is_finite() && f <= f0 + config.sufficient_decrease * moved && moved < 0.0
    };

    let mut alpha = config.initial_step / max_comp;
    for _ in 0..config.max_line_search {
        let (xa, fa) = trial(alpha);
        let curvature = fa - f0 - slope * alpha;
        if curvature > 0.0 {
            let alpha_q = -slope * alpha * alpha / (2.0 * curvature);
            if alpha_q.is_finite() && alpha_q > 0.0 && alpha_q != alpha {
                let (xq, fq) = trial(alpha_q);
                if fq < fa && armijo(&xq, fq) {
                    return Some((xq, fq));
                }
            }
        }
        if armijo(&xa, fa) {
            return Some((xa, fa));
        }
        alpha *= config.shrink;
    }
    None
}

/// Projected Polak-Ribiere (PR+) conjugate gradient with periodic restart.
/// Returns the best point seen; the value never exceeds the start value.
pub fn minimize<O: Objective + ?Sized>(obj: &O, x0: &[f64], config: &CgConfig) -> CgOutcome {
    let n = obj.dim();
    let mut x = x0.to_vec();
    project(obj, &mut x);
    let mut grad = vec![0.0; n];
    let mut f = obj.value_and_gradient(&x, &mut grad);
    project_gradient(obj, &x, &mut grad);
    let initial_value = f;
    let mut trace = vec![f];
    let mut dir: Vec<f64> = grad.iter().map(|g| -g).collect();
    let mut iterations = 0;
    let mut converged = norm(&grad) < config.gradient_tolerance;

    while !converged && iterations < config.max_iterations {
        iterations += 1;
        let step = line_search(obj, config, &x, f, &grad, &dir).or_else(|| {
            // fall back to steepest descent once before giving up
            let sd: Vec<f64> = grad.iter().map(|g| -g).collect();
            line_search(obj, config, &x, f, &grad, &sd)
        });
        let Some((xn, fnew)) = step else { break };
        let mut gn = vec![0.0; n];
        obj.value_and_gradient(&xn, &mut gn);
        project_gradient(obj, &xn, &mut gn);

        let denom = dot(&grad, &grad);
        let beta = if iterations % config.restart_period == 0 || denom == 0.0 {
            0.0
        } else {
            let num: f64 = gn.iter().zip(&grad).map(|(a, b)| a * (a - b)).sum();
            (num / denom).max(0.0)
        };
        for i in 0..n {
            dir[i] = -gn[i] + beta * dir[i];
            let (lo, hi) = obj.bounds(i);
            if (xn[i] <= lo && dir[i] < 0.0) || (xn[i] >= hi && dir[i] > 0.0) {
                dir[i] = 0.0;
            }
        }
        if dot(&dir, &gn) >= 0.0 {
            dir = gn.iter().map(|g| -g).collect();
        }
        x = xn;
        f = fnew;
        grad = gn;
        trace.push(f);
        converged = norm(&grad) < config.gradient_tolerance;
    }

    CgOutcome { final_gradient_norm: norm(&grad), x, value: f, initial_value, iterations, converged, trace }
}

/// Smooth surrogate of the classifier over a fixed rule base; the
/// parameter vector is the flattened partition.
pub struct SurrogateLoss<'a> {
    model: &'a FuzzyModel,
    batch: &'a [LabeledSample],
    temperature: f64,
    offsets: Vec<usize>,
    rules_by_class: Vec<Vec<usize>>,
}

impl<'a> SurrogateLoss<'a> {
    pub fn new(model: &'a FuzzyModel, batch: &'a [LabeledSample], temperature: f64) -> Self {
        let mut offsets = Vec::with_capacity(model.partition.dims.len());
        let mut acc = 0;
        for terms in &model.partition.dims {
            offsets.push(acc);
            acc += 2 * terms.len();
        }
        let mut rules_by_class = vec![Vec::new(); model.class_count()];
        for (r, rule) in model.rules.iter().enumerate() {
            rules_by_class[rule.consequent].push(r);
        }
        Self { model, batch, temperature, offsets, rules_by_class }
    }

    #[inline]
    fn param(&self, p: &[f64], d: usize, j: usize) -> (f64, f64) {
        let i = self.offsets[d] + 2 * j;
        (p[i], p[i + 1])
    }

    fn activations(&self, p: &[f64], x: &[f64]) -> Vec<f64> {
        self.model
            .rules
            .iter()
            .map(|rule| {
                let e: f64 = rule
                    .antecedent
                    .iter()
                    .enumerate()
                    .map(|(d, &j)| {
                        let (c, s) = self.param(p, d, j);
                        (x[d] - c).powi(2) / (2.0 * s * s)
                    })
                    .sum();
                (-e).exp()
            })
            .collect()
    }

    /// Smooth max per class plus the softmax weight of each rule within
    /// its class.
    fn soft_scores(&self, acts: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let tau = self.temperature;
        let mut scores = vec![0.0; self.model.class_count()];
        let mut weights = vec![0.0; acts.len()];
        for (k, rules) in self.rules_by_class.iter().enumerate() {
            if rules.is_empty() {
                continue;
            }
            let m = rules.iter().map(|&r| acts[r]).fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = rules.iter().map(|&r| (tau * (acts[r] - m)).exp()).sum();
            scores[k] = m + z.ln() / tau;
            for &r in rules {
                weights[r] = (tau * (acts[r] - m)).exp() / z;
            }
        }
        (scores, weights)
    }

    fn norm_factor(&self) -> f64 {
        1.0 / (self.batch.len() * self.model.class_count()) as f64
    }
}

impl Objective for SurrogateLoss<'_> {
    fn dim(&self) -> usize {
        2 * self.model.partition.total_terms()
    }

    fn value(&self, p: &[f64]) -> f64 {
        let mut total = 0.0;
        for (x, label) in self.batch {
            let (scores, _) = self.soft_scores(&self.activations(p, &x.0));
            for (k, s) in scores.iter().enumerate() {
                let y = if k == *label { 1.0 } else { 0.0 };
                total += (s - y).powi(2);
            }
        }
        total * self.norm_factor()
    }

    fn value_and_gradient(&self, p: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let scale = self.norm_factor();
        let mut total = 0.0;
        for (x, label) in self.batch {
            let acts = self.activations(p, &x.0);
            let (scores, weights) = self.soft_scores(&acts);
            for (k, s) in scores.iter().enumerate() {
                let y = if k == *label { 1.0 } else { 0.0 };
                total += (s - y).powi(2);
            }
            for (r, rule) in self.model.rules.iter().enumerate() {
                let k = rule.consequent;
                let y = if k == *label { 1.0 } else { 0.0 };
                let dl_da = 2.0 * scale * (scores[k] - y) * weights[r];
                if dl_da == 0.0 || acts[r] == 0.0 {
                    continue;
                }
                let g = dl_da * acts[r];
                for (d, &j) in rule.antecedent.iter().enumerate() {
                    let (c, s) = self.param(p, d, j);
                    let diff = x.0[d] - c;
                    let s2 = s * s;
                    let i = self.offsets[d] + 2 * j;
                    grad[i] += g * diff / s2;
                    grad[i + 1] += g * diff * diff / (s2 * s);
                }
            }
        }
        total * scale
    }

    fn bounds(&self, i: usize) -> (f64, f64) {
        if i.is_multiple_of(2) {
            (0.0, 1.0)
        } else {
            (SIGMA_MIN, SIGMA_MAX)
        }
    }
}

pub fn loss(model: &FuzzyModel, batch: &[LabeledSample], temperature: f64) -> f64 {
    SurrogateLoss::new(model, batch, temperature).value(&model.partition.to_params())
}

/// Analytic gradient of [`loss`], flattened like the partition parameters.
pub fn gradient(model: &FuzzyModel, batch: &[LabeledSample], temperature: f64) -> Vec<f64> {
    let obj = SurrogateLoss::new(model, batch, temperature);
    let mut g = vec![0.0; obj.dim()];
    obj.value_and_gradient(&model.partition.to_params(), &mut g);
    g
}

/// [`gradient`] with components at active bounds zeroed.
pub fn projected_gradient(model: &FuzzyModel, batch: &[LabeledSample], temperature: f64) -> Vec<f64> {
    let obj = SurrogateLoss::new(model, batch, temperature);
    let p = model.partition.to_params();
    let mut g = vec![0.0; obj.dim()];
    obj.value_and_gradient(&p, &mut g);
    project_gradient(&obj, &p, &mut g);
    g
}

#[derive(Debug, Clone)]
pub struct CgResult {
    pub model: FuzzyModel,
    pub loss_before: f64,
    pub loss_after: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Loss after every accepted step.
    pub loss_trace: Vec<f64>,
}

pub fn run_cg(config: &CgConfig, model: &FuzzyModel, batch: &[LabeledSample]) -> Result<CgResult, ModelError> {
    config.validate()?;
    if batch.is_empty() {
        return Err(ModelError::Invalid("fine-tuning batch is empty".into()));
    }
    let obj = SurrogateLoss::new(model, batch, config.temperature);
    let out = minimize(&obj, &model.partition.to_params(), config);
    let mut tuned = model.clone();
    if out.value < out.initial_value {
        tuned.partition.set_params(&out.x);
    }
    Ok(CgResult {
        model: tuned,
        loss_before: out.initial_value,
        loss_after: out.value.min(out.initial_value),
        iterations: out.iterations,
        converged: out.converged,
        loss_trace: out.trace,
    })
}
