//! Multinomial logistic regression with an L1 penalty on the non-intercept
//! weights, fit along a geometric λ path by monotone accelerated proximal
//! gradient with backtracking.
//!
//! Parameters are a flat vector: the `c × p` weight matrix row-major,
//! followed by `c` intercepts.

use serde::{Deserialize, Serialize};

use crate::data::{DataView, Matrix};
use crate::error::{Error, Result};

use super::{
    argmin_first, fold_positions, internal_folds, timed, FittedModel, LearnerKind, ModelParams, Rows,
    Standardizer, Tuning,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iter: usize,
    /// Stop when the relative objective decrease of an accepted step falls below this.
    pub tol: f64,
    /// Keep the objective after every accepted step.
    #[serde(default)]
    pub record_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iter: 10_000,
            tol: 1e-8,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1Spec {
    pub n_lambda: usize,
    pub lambda_min_ratio: f64,
    pub internal_folds: usize,
    #[serde(default)]
    pub solver: SolverOptions,
}

impl Default for L1Spec {
    fn default() -> Self {
        L1Spec {
            n_lambda: 50,
            lambda_min_ratio: 1e-3,
            internal_folds: 10,
            solver: SolverOptions::default(),
        }
    }
}

/// Linear scores `b_k + w_k · x_i`, `n × c` row-major.
fn scores_into(x: &Matrix, c: usize, params: &[f64], out: &mut [f64]) {
    let p = x.cols();
    let (w, b) = params.split_at(c * p);
    // class-major copy of the weights so scores accumulate over contiguous classes
    let mut wt = vec![0.0; p * c];
    for k in 0..c {
        for j in 0..p {
            wt[j * c + k] = w[k * p + j];
        }
    }
    for (i, zi) in out.chunks_exact_mut(c).enumerate() {
        zi.copy_from_slice(b);
        for (j, &v) in x.row(i).iter().enumerate() {
            for (zk, wk) in zi.iter_mut().zip(&wt[j * c..(j + 1) * c]) {
                *zk += v * wk;
            }
        }
    }
}

/// Mean negative log-likelihood from scores. With `resid`, also writes
/// `softmax - onehot` per row.
fn loss_from_scores(scores: &[f64], y: &[usize], c: usize, mut resid: Option<&mut [f64]>) -> f64 {
    let mut e = vec![0.0; scores.len()];
    let mut zmax = vec![0.0; y.len()];
    for ((zi, ei), m) in scores.chunks_exact(c).zip(e.chunks_exact_mut(c)).zip(zmax.iter_mut()) {
        *m = zi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (ek, zk) in ei.iter_mut().zip(zi) {
            *ek = zk - *m;
        }
    }
    for v in e.iter_mut() {
        *v = v.exp();
    }
    let mut loss = 0.0;
    for (i, (zi, ei)) in scores.chunks_exact(c).zip(e.chunks_exact(c)).enumerate() {
        let sum: f64 = ei.iter().sum();
        let yi = y[i];
        loss += sum.ln() - (zi[yi] - zmax[i]);
        if let Some(r) = resid.as_deref_mut() {
            let inv = 1.0 / sum;
            let ri = &mut r[i * c..(i + 1) * c];
            for (rk, ek) in ri.iter_mut().zip(ei) {
                *rk = ek * inv;
            }
            ri[yi] -= 1.0;
        }
    }
    loss / y.len() as f64
}

/// Gradient of the mean loss from per-row residuals.
fn grad_from_resid(x: &Matrix, c: usize, resid: &[f64], grad: &mut [f64]) {
    let p = x.cols();
    let n = x.rows();
    // accumulate class-major, then transpose into the parameter layout
    let mut gt = vec![0.0; p * c];
    let mut gb = vec![0.0; c];
    for (i, ri) in resid.chunks_exact(c).enumerate() {
        for (j, &v) in x.row(i).iter().enumerate() {
            for (g, r) in gt[j * c..(j + 1) * c].iter_mut().zip(ri) {
                *g += v * r;
            }
        }
        for (g, r) in gb.iter_mut().zip(ri) {
            *g += r;
        }
    }
    let inv = 1.0 / n as f64;
    for k in 0..c {
        for j in 0..p {
            grad[k * p + j] = gt[j * c + k] * inv;
        }
        grad[c * p + k] = gb[k] * inv;
    }
}

/// Smooth part: mean multinomial negative log-likelihood. Writes its
/// gradient into `grad` when given.
fn smooth_loss(x: &Matrix, y: &[usize], c: usize, params: &[f64], grad: Option<&mut [f64]>) -> f64 {
    let mut scores = vec![0.0; x.rows() * c];
    scores_into(x, c, params, &mut scores);
    match grad {
        Some(g) => {
            let mut resid = vec![0.0; scores.len()];
            let f = loss_from_scores(&scores, y, c, Some(&mut resid));
            grad_from_resid(x, c, &resid, g);
            f
        }
        None => loss_from_scores(&scores, y, c, None),
    }
}

fn l1_norm(params: &[f64], n_weights: usize) -> f64 {
    params[..n_weights].iter().map(|v| v.abs()).sum()
}

/// Full penalized objective and its gradient (penalty contributes
/// `λ·sign(w)`, zero at `w = 0`).
pub fn objective_and_gradient(x: &Matrix, y: &[usize], n_classes: usize, params: &[f64], lambda: f64) -> (f64, Vec<f64>) {
    let nw = n_classes * x.cols();
    let mut grad = vec![0.0; params.len()];
    let f = smooth_loss(x, y, n_classes, params, Some(&mut grad));
    for (g, w) in grad[..nw].iter_mut().zip(&params[..nw]) {
        if *w != 0.0 {
            *g += lambda * w.signum();
        }
    }
    (f + lambda * l1_norm(params, nw), grad)
}

/// Intercept-only optimum: log class frequencies, zero weights.
fn intercept_only(x: &Matrix, y: &[usize], c: usize) -> Vec<f64> {
    let mut counts = vec![0usize; c];
    for &yi in y {
        counts[yi] += 1;
    }
    let n = y.len() as f64;
    let mut params = vec![0.0; c * x.cols() + c];
    for (k, &cnt) in counts.iter().enumerate() {
        params[c * x.cols() + k] = (cnt as f64 / n).ln();
    }
    params
}

/// Smallest λ at which all non-intercept weights are zero: the largest
/// absolute weight gradient at the intercept-only solution.
pub fn lambda_max(x: &Matrix, y: &[usize], n_classes: usize) -> f64 {
    let params = intercept_only(x, y, n_classes);
    let mut grad = vec![0.0; params.len()];
    smooth_loss(x, y, n_classes, &params, Some(&mut grad));
    grad[..n_classes * x.cols()]
        .iter()
        .fold(0.0, |m, g| f64::max(m, g.abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub lambda: f64,
    pub params: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<f64>,
}

impl PathPoint {
    pub fn nonzero_weights(&self, n_weights: usize) -> usize {
        self.params[..n_weights].iter().filter(|w| **w != 0.0).count()
    }
}

fn prox(v: &mut [f64], n_weights: usize, thresh: f64) {
    for w in &mut v[..n_weights] {
        let a = w.abs() - thresh;
        *w = if a > 0.0 { a.copysign(*w) } else { 0.0 };
    }
}

struct Solver<'a> {
    x: &'a Matrix,
    y: &'a [usize],
    c: usize,
    nw: usize,
    /// Current inverse step size, carried along the path.
    lipschitz: f64,
    opts: &'a SolverOptions,
}

impl Solver<'_> {
    fn objective(&self, params: &[f64], lambda: f64) -> f64 {
        smooth_loss(self.x, self.y, self.c, params, None) + lambda * l1_norm(params, self.nw)
    }

    fn solve(&mut self, start: Vec<f64>, lambda: f64) -> PathPoint {
        let m = start.len();
        let ns = self.x.rows() * self.c;
        let mut x = start;
        // scores are linear in the parameters, so the extrapolated point's
        // scores are the same combination of the iterates' scores
        let mut sx = vec![0.0; ns];
        scores_into(self.x, self.c, &x, &mut sx);
        let mut fx = loss_from_scores(&sx, self.y, self.c, None) + lambda * l1_norm(&x, self.nw);
        let mut y = x.clone();
        let mut sy = sx.clone();
        let mut sz = vec![0.0; ns];
        let mut resid = vec![0.0; ns];
        let mut t = 1.0f64;
        let mut grad = vec![0.0; m];
        let mut z = vec![0.0; m];
        let mut trace = Vec::new();
        let mut restarted = true;
        let mut iterations = 0;

        while iterations < self.opts.max_iter {
            iterations += 1;
            let fy = loss_from_scores(&sy, self.y, self.c, Some(&mut resid));
            grad_from_resid(self.x, self.c, &resid, &mut grad);
            let fz_smooth = loop {
                let step = 1.0 / self.lipschitz;
                for ((zi, yi), gi) in z.iter_mut().zip(&y).zip(&grad) {
                    *zi = yi - step * gi;
                }
                prox(&mut z, self.nw, lambda * step);
                scores_into(self.x, self.c, &z, &mut sz);
                let fz = loss_from_scores(&sz, self.y, self.c, None);
                let mut lin = 0.0;
                let mut sq = 0.0;
                for ((zi, yi), gi) in z.iter().zip(&y).zip(&grad) {
                    let d = zi - yi;
                    lin += gi * d;
                    sq += d * d;
                }
                if fz <= fy + lin + 0.5 * self.lipschitz * sq || self.lipschitz > 1e12 {
                    break fz;
                }
                self.lipschitz *= 2.0;
            };
            let fz = fz_smooth + lambda * l1_norm(&z, self.nw);

            if fz <= fx {
                let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
                let momentum = (t - 1.0) / t_next;
                for ((yi, zi), xi) in y.iter_mut().zip(&z).zip(&x) {
                    *yi = zi + momentum * (zi - xi);
                }
                for ((syi, szi), sxi) in sy.iter_mut().zip(&sz).zip(&sx) {
                    *syi = szi + momentum * (szi - sxi);
                }
                std::mem::swap(&mut x, &mut z);
                std::mem::swap(&mut sx, &mut sz);
                let rel = (fx - fz) / fx.abs().max(f64::MIN_POSITIVE);
                debug_assert!(fz <= fx);
                fx = fz;
                t = t_next;
                restarted = false;
                if self.opts.record_trace {
                    trace.push(fx);
                }
                if rel < self.opts.tol {
                    break;
                }
            } else if restarted {
                // a plain proximal step from x failed to decrease: converged to rounding
                break;
            } else {
                y.copy_from_slice(&x);
                sy.copy_from_slice(&sx);
                t = 1.0;
                restarted = true;
            }
            self.lipschitz *= 0.9;
        }
        PathPoint {
            lambda,
            params: x,
            objective: fx,
            iterations,
            trace,
        }
    }
}

/// Solve the penalized problem for each λ in order, warm-starting each from
/// the previous solution. `y` holds class indices in `0..n_classes`, all of
/// which should occur. λ values at or above [`lambda_max`] return the exact
/// intercept-only solution.
pub fn solve_path(x: &Matrix, y: &[usize], n_classes: usize, lambdas: &[f64], opts: &SolverOptions) -> Vec<PathPoint> {
    let lmax = lambda_max(x, y, n_classes);
    let base = intercept_only(x, y, n_classes);
    let mut solver = Solver {
        x,
        y,
        c: n_classes,
        nw: n_classes * x.cols(),
        lipschitz: 1.0,
        opts,
    };
    let mut current = base.clone();
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let point = if lambda >= lmax {
            PathPoint {
                lambda,
                objective: solver.objective(&base, lambda),
                params: base.clone(),
                iterations: 0,
                trace: Vec::new(),
            }
        } else {
            solver.solve(current.clone(), lambda)
        };
        current.clone_from(&point.params);
        out.push(point);
    }
    out
}

/// Standardized features and compacted labels of a view.
struct Prepared {
    standardizer: Standardizer,
    x: Matrix,
    y: Vec<usize>,
    /// Original class index of each compact label.
    classes: Vec<usize>,
}

fn prepare(view: &DataView<'_>) -> Prepared {
    let counts = view.class_counts();
    let classes: Vec<usize> = (0..counts.len()).filter(|&k| counts[k] > 0).collect();
    let mut remap = vec![usize::MAX; counts.len()];
    for (compact, &k) in classes.iter().enumerate() {
        remap[k] = compact;
    }
    let standardizer = Standardizer::fit(view);
    let x = standardizer.transform(view);
    let y = (0..view.len()).map(|i| remap[view.y(i)]).collect();
    Prepared {
        standardizer,
        x,
        y,
        classes,
    }
}

fn argmax_class(z: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in z.iter().enumerate() {
        if v > z[best] {
            best = k;
        }
    }
    best
}

fn row_scores(row: &[f64], w: &[f64], b: &[f64], p: usize, z: &mut [f64]) {
    for (k, zk) in z.iter_mut().enumerate() {
        *zk = b[k] + w[k * p..(k + 1) * p].iter().zip(row).map(|(a, v)| a * v).sum::<f64>();
    }
}

pub(super) fn predict<R: Rows + ?Sized>(
    data: &R,
    standardizer: &Standardizer,
    classes: &[usize],
    weights: &Matrix,
    intercepts: &[f64],
) -> Vec<usize> {
    let p = data.width();
    let mut buf = vec![0.0; p];
    let mut z = vec![0.0; classes.len()];
    (0..data.n_rows())
        .map(|i| {
            standardizer.transform_into(data.row_at(i), &mut buf);
            row_scores(&buf, weights.as_slice(), intercepts, p, &mut z);
            classes[argmax_class(&z)]
        })
        .collect()
}

fn lambda_grid(lmax: f64, spec: &L1Spec) -> Vec<f64> {
    let n = spec.n_lambda.max(1);
    if n == 1 {
        return vec![lmax];
    }
    (0..n)
        .map(|j| lmax * spec.lambda_min_ratio.powf(j as f64 / (n - 1) as f64))
        .collect()
}

/// Internal CV picks λ with the smallest mean validation error (the larger λ
/// on ties); the final model is refit on the whole training view.
pub fn fit_l1_logistic(train: &DataView<'_>, spec: &L1Spec, seed: u64) -> Result<FittedModel> {
    let learner_err = |message: String| Error::Learner {
        learner: LearnerKind::L1Logistic.to_string(),
        message,
    };
    if train.len() < spec.internal_folds.max(2) {
        return Err(learner_err(format!(
            "{} training rows, need at least {}",
            train.len(),
            spec.internal_folds.max(2)
        )));
    }
    let full = prepare(train);
    if full.classes.len() < 2 {
        return Err(learner_err("training set has a single class".into()));
    }
    let p = train.n_features();
    let c = full.classes.len();

    let ((weights, intercepts, lambda, tuning), secs) = timed(|| {
        let lmax = lambda_max(&full.x, &full.y, c);
        if lmax == 0.0 {
            let params = intercept_only(&full.x, &full.y, c);
            let (w, b) = params.split_at(c * p);
            return Ok((w.to_vec(), b.to_vec(), 0.0, Tuning::default()));
        }
        let lambdas = lambda_grid(lmax, spec);

        let (k, folds) = internal_folds(train, spec.internal_folds, seed);
        let mut cv_error = vec![0.0; lambdas.len()];
        let mut used = 0usize;
        for f in 0..k {
            let (fit_pos, val_pos) = fold_positions(&folds, f);
            if fit_pos.is_empty() || val_pos.is_empty() {
                continue;
            }
            used += 1;
            let fit_view = train.subview(&fit_pos);
            let sub = prepare(&fit_view);
            let truth: Vec<usize> = val_pos.iter().map(|&v| train.y(v)).collect();
            let val_view = train.subview(&val_pos);
            if sub.classes.len() < 2 {
                let wrong = truth.iter().filter(|&&t| t != sub.classes[0]).count();
                cv_error.iter_mut().for_each(|e| *e += wrong as f64 / truth.len() as f64);
                continue;
            }
            let sc = sub.classes.len();
            let path = solve_path(&sub.x, &sub.y, sc, &lambdas, &spec.solver);
            for (e, point) in cv_error.iter_mut().zip(&path) {
                let (w, b) = point.params.split_at(sc * p);
                let w = Matrix::new(sc, p, w.to_vec())?;
                let pred = predict(&val_view, &sub.standardizer, &sub.classes, &w, b);
                let wrong = pred.iter().zip(&truth).filter(|(a, t)| a != t).count();
                *e += wrong as f64 / truth.len() as f64;
            }
        }
        cv_error.iter_mut().for_each(|e| *e /= used.max(1) as f64);
        let best = argmin_first(&cv_error);
        let path = solve_path(&full.x, &full.y, c, &lambdas[..=best], &spec.solver);
        let point = path.last().expect("non-empty path");
        let (w, b) = point.params.split_at(c * p);
        Ok((
            w.to_vec(),
            b.to_vec(),
            lambdas[best],
            Tuning {
                grid: lambdas.clone(),
                cv_error,
                chosen: Some(lambdas[best]),
            },
        ))
    })?;

    Ok(FittedModel {
        kind: LearnerKind::L1Logistic,
        params: ModelParams::L1Logistic {
            classes: full.classes,
            weights: Matrix::new(c, p, weights)?,
            intercepts,
            lambda,
            standardizer: full.standardizer,
        },
        tuning,
        n_features: p,
        fit_seconds: secs,
        warnings: Vec::new(),
    })
}
