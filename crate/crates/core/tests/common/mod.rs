//! Independent oracles shared by the integration tests and the acceptance
//! runner. Everything here recomputes quantities from their definitions with
//! dense loops instead of the library's factored or packed code paths.

#![allow(dead_code)]

use icmh::codegen::{self, CodeLearnerConfig};
use icmh::codes::{BinaryCodeMatrix, RelaxedCodeMatrix};
use icmh::data::seed;
use icmh::eval::{self, Cutoff, MapOptions};
use icmh::linfn::{self, IncrementalVariant, LinearHashFunction};
use icmh::mlp::{self, Batch, ClassWeights, MlpHashFunction, MlpPair, MlpShape};
use icmh::{FeatureMatrix, LabelVector, SimilarityMatrix};
use nalgebra::DMatrix;
use rand::Rng;

pub fn uniform(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut seed::Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

pub fn random_labels(n: usize, classes: usize, rng: &mut seed::Rng) -> Vec<usize> {
    // every class appears at least once
    let mut l: Vec<usize> = (0..n).map(|i| if i < classes { i } else { rng.random_range(0..classes) }).collect();
    for i in (1..n).rev() {
        l.swap(i, rng.random_range(0..=i));
    }
    l
}

pub fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

/// Central differences of `f` at `x`, one entry at a time.
pub fn numeric_grad(x: &DMatrix<f64>, h: f64, mut f: impl FnMut(&DMatrix<f64>) -> f64) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(x.nrows(), x.ncols());
    let mut probe = x.clone();
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            let v = x[(i, j)];
            probe[(i, j)] = v + h;
            let up = f(&probe);
            probe[(i, j)] = v - h;
            let down = f(&probe);
            probe[(i, j)] = v;
            g[(i, j)] = (up - down) / (2.0 * h);
        }
    }
    g
}

// ---------------------------------------------------------------- codegen

pub fn dense_similarity(labels: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(labels.len(), labels.len(), |i, j| f64::from(u8::from(labels[i] == labels[j])))
}

/// `‖S − ABᵀ/q‖² + λ‖A − B‖²` by explicit loops.
pub fn naive_code_objective(labels: &[usize], a: &DMatrix<f64>, b: &DMatrix<f64>, lambda: f64) -> f64 {
    let s = dense_similarity(labels);
    let q = a.ncols() as f64;
    let mut fit = 0.0;
    for i in 0..a.nrows() {
        for j in 0..b.nrows() {
            let dot: f64 = (0..a.ncols()).map(|l| a[(i, l)] * b[(j, l)]).sum();
            fit += (s[(i, j)] - dot / q).powi(2);
        }
    }
    let pair: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y).powi(2)).sum();
    fit + lambda * pair
}

/// Largest relative error between analytic and central-difference code
/// gradients, and between the library objective and the loop oracle.
pub fn codegen_gradient_error(instances: u64) -> (f64, f64) {
    let (mut worst_grad, mut worst_value) = (0.0f64, 0.0f64);
    for k in 0..instances {
        let mut rng = seed::rng(100 + k);
        let n = rng.random_range(3..8);
        let q = rng.random_range(1..6);
        let lambda = rng.random_range(0.0..2.0);
        let labels = random_labels(n, rng.random_range(1..4), &mut rng);
        let s = SimilarityMatrix::from_labels(&labels);
        let a = uniform(n, q, -1.0, 1.0, &mut rng);
        let b = uniform(n, q, -1.0, 1.0, &mut rng);
        let (ga, gb) = codegen::gradients(&s, &a, &b, q, lambda).unwrap();
        let na = numeric_grad(&a, 1e-5, |t| codegen::objective(&s, t, &b, q, lambda).unwrap());
        let nb = numeric_grad(&b, 1e-5, |t| codegen::objective(&s, &a, t, q, lambda).unwrap());
        worst_grad = worst_grad.max(rel_err(&ga, &na)).max(rel_err(&gb, &nb));
        let lib = codegen::objective(&s, &a, &b, q, lambda).unwrap();
        let naive = naive_code_objective(&labels, &a, &b, lambda);
        worst_value = worst_value.max((lib - naive).abs() / naive.abs().max(1.0));
    }
    (worst_grad, worst_value)
}

/// Whether every trace is non-increasing and every iterate stays in
/// `[-1, 1]`, over `seeds` random problems. Iterates are observed by
/// re-running with growing iteration budgets (the learner is deterministic).
pub fn codegen_descent_is_sound(seeds: u64) -> Result<(), String> {
    for k in 0..seeds {
        let mut rng = seed::rng(200 + k);
        let n = rng.random_range(4..16);
        let labels = random_labels(n, rng.random_range(1..5), &mut rng);
        let s = SimilarityMatrix::from_labels(&labels);
        let cfg = CodeLearnerConfig {
            bits: rng.random_range(2..12),
            lambda_h: rng.random_range(0.0..2.0),
            max_iters: 150,
            rel_tol: 1e-9,
            eta_init: 10f64.powf(rng.random_range(-3.0..0.0)),
            seed: k,
        };
        let run = codegen::learn_base(&s, &cfg).map_err(|e| e.to_string())?;
        if let Some(w) = run.objective_trace.windows(2).position(|w| w[1] > w[0]) {
            return Err(format!("seed {k}: objective rose at iteration {}", w + 1));
        }
        for iters in (1..=run.iterations()).step_by(7) {
            let part = codegen::learn_base(&s, &CodeLearnerConfig { max_iters: iters, ..cfg.clone() }).unwrap();
            let inside = |m: &RelaxedCodeMatrix| m.as_matrix().iter().all(|v| (-1.0..=1.0).contains(v));
            if !inside(&part.a) || !inside(&part.b) {
                return Err(format!("seed {k}: iterate {iters} left [-1, 1]"));
            }
            if part.objective_trace[..] != run.objective_trace[..part.objective_trace.len()] {
                return Err(format!("seed {k}: truncated run diverged from the full run"));
            }
        }
    }
    Ok(())
}

fn pm1_matrices(rows: usize, cols: usize) -> Vec<DMatrix<f64>> {
    (0..1u32 << (rows * cols))
        .map(|mask| DMatrix::from_fn(rows, cols, |i, j| if mask >> (i * cols + j) & 1 == 1 { 1.0 } else { -1.0 }))
        .collect()
}

/// Worst ratio `F(sign A, sign B) / min F` over label sets and seeds for
/// `N = 3`, `q = 2`, against exhaustive search over all `4096` sign pairs.
/// A zero minimum counts as ratio 1 only when it is hit exactly.
pub fn brute_force_ratio() -> (f64, Vec<String>) {
    let all = pm1_matrices(3, 2);
    let mut worst = 0.0f64;
    let mut notes = Vec::new();
    for labels in [[0, 0, 0], [0, 0, 1], [0, 1, 0], [0, 1, 2]] {
        let lambda = CodeLearnerConfig::default().lambda_h;
        let mut best = f64::INFINITY;
        for a in &all {
            for b in &all {
                best = best.min(naive_code_objective(&labels, a, b, lambda));
            }
        }
        for seed in 0..5 {
            let cfg = CodeLearnerConfig { bits: 2, seed, max_iters: 1000, ..Default::default() };
            let s = SimilarityMatrix::from_labels(&labels);
            let run = codegen::learn_base(&s, &cfg).unwrap();
            let qa = icmh::quantize(&run.a).to_matrix();
            let qb = icmh::quantize(&run.b).to_matrix();
            let got = naive_code_objective(&labels, &qa, &qb, lambda);
            let ratio = if best == 0.0 {
                if got == 0.0 { 1.0 } else { f64::INFINITY }
            } else {
                got / best
            };
            if ratio > 1.1 {
                notes.push(format!("labels {labels:?} seed {seed}: {got} vs min {best}"));
            }
            worst = worst.max(ratio);
        }
    }
    (worst, notes)
}

// ---------------------------------------------------------------- linfn

/// Weight and output proximal strengths of each variant.
pub fn proximal_weights(variant: Option<IncrementalVariant>, gamma: f64) -> (f64, f64) {
    match variant {
        None => (0.0, 0.0),
        Some(IncrementalVariant::Weights) => (gamma, 0.0),
        Some(IncrementalVariant::Outputs) => (0.0, gamma),
        Some(IncrementalVariant::Combined) => (gamma, gamma),
    }
}

/// `‖XW − A‖² + λ‖W‖² + γ_w‖W − W₀‖² + γ_o‖XW − XW₀‖²`.
pub struct RidgeProblem {
    pub x: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub w_old: DMatrix<f64>,
    pub lambda: f64,
    pub gamma_w: f64,
    pub gamma_o: f64,
}

impl RidgeProblem {
    pub fn value(&self, w: &DMatrix<f64>) -> f64 {
        (&self.x * w - &self.a).norm_squared()
            + self.lambda * w.norm_squared()
            + self.gamma_w * (w - &self.w_old).norm_squared()
            + self.gamma_o * (&self.x * (w - &self.w_old)).norm_squared()
    }

    pub fn grad(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        let xt = self.x.transpose();
        (&xt * (&self.x * w - &self.a)) * 2.0
            + w * (2.0 * self.lambda)
            + (w - &self.w_old) * (2.0 * self.gamma_w)
            + (&xt * (&self.x * (w - &self.w_old))) * (2.0 * self.gamma_o)
    }

    /// Conjugate gradients on the quadratic, using only gradient evaluations
    /// (`H v = ∇f(v) − ∇f(0)`).
    pub fn conjugate_gradient(&self) -> DMatrix<f64> {
        let zero = DMatrix::zeros(self.x.ncols(), self.a.ncols());
        let g0 = self.grad(&zero);
        let hess = |v: &DMatrix<f64>| self.grad(v) - &g0;
        let mut w = zero;
        let mut r = -&g0;
        let mut p = r.clone();
        let mut rs = r.norm_squared();
        let stop = 1e-28 * rs.max(1e-300);
        for _ in 0..10 * w.len() {
            if rs <= stop {
                break;
            }
            let hp = hess(&p);
            let alpha = rs / p.dot(&hp);
            w += &p * alpha;
            r -= &hp * alpha;
            let next = r.norm_squared();
            p = &r + &p * (next / rs);
            rs = next;
        }
        w
    }
}

pub struct RidgeCheck {
    /// `‖∇f(W*)‖ / ‖∇f(0)‖`, worst over instances.
    pub stationarity: f64,
    /// `‖W* − W_cg‖ / ‖W_cg‖`, worst over instances.
    pub oracle_gap: f64,
    /// Analytic vs central-difference gradient of the oracle objective itself.
    pub oracle_gradient: f64,
}

pub fn ridge_check(variant: Option<IncrementalVariant>, instances: u64) -> RidgeCheck {
    let mut out = RidgeCheck { stationarity: 0.0, oracle_gap: 0.0, oracle_gradient: 0.0 };
    for k in 0..instances {
        let mut rng = seed::rng(300 + k);
        let (n, d, q) = (rng.random_range(8..40), rng.random_range(2..9), rng.random_range(1..6));
        let x = uniform(n, d, -2.0, 2.0, &mut rng);
        let a = uniform(n, q, -1.0, 1.0, &mut rng);
        let w_old = uniform(d, q, -1.0, 1.0, &mut rng);
        let lambda = 10f64.powf(rng.random_range(-3.0..3.0));
        let gamma = 10f64.powf(rng.random_range(-3.0..3.0));
        let (gamma_w, gamma_o) = proximal_weights(variant, gamma);
        let problem = RidgeProblem { x: x.clone(), a: a.clone(), w_old: w_old.clone(), lambda, gamma_w, gamma_o };

        let fx = FeatureMatrix::new(x).unwrap();
        let fitted = match variant {
            None => linfn::fit_base(&fx, &a, lambda).unwrap(),
            Some(v) => {
                let old = LinearHashFunction { weights: w_old, reg_lambda: lambda, gamma: 0.0, variant: None };
                linfn::fit_incremental(&fx, &a, &old, lambda, gamma, v).unwrap()
            }
        };
        let zero = DMatrix::zeros(d, q);
        out.stationarity = out.stationarity.max(problem.grad(&fitted.weights).norm() / problem.grad(&zero).norm());
        out.oracle_gap = out.oracle_gap.max(rel_err(&fitted.weights, &problem.conjugate_gradient()));
        let probe = uniform(d, q, -1.0, 1.0, &mut rng);
        let numeric = numeric_grad(&probe, 1e-5, |w| problem.value(w));
        out.oracle_gradient = out.oracle_gradient.max(rel_err(&problem.grad(&probe), &numeric));
    }
    out
}

// ---------------------------------------------------------------- mlp

pub fn tiny_pair(seed: u64, dropout: f64) -> MlpPair {
    let shape = |d| MlpShape { input_dim: d, hidden: (5, 4), bits: 3, classes: 3 };
    MlpPair {
        x: MlpHashFunction::new(shape(4), dropout, seed).unwrap(),
        y: MlpHashFunction::new(shape(3), dropout, seed + 1).unwrap(),
    }
}

/// Worst relative error, over parameter groups of both networks, between
/// backpropagated and central-difference gradients of the total loss.
pub fn mlp_gradient_error(instances: u64) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..instances {
        let mut rng = seed::rng(400 + k);
        let pair = tiny_pair(k, 0.0);
        let n = 6;
        let x = uniform(n, 4, -1.5, 1.5, &mut rng);
        let y = uniform(n, 3, -1.5, 1.5, &mut rng);
        let ta = uniform(n, 3, -1.0, 1.0, &mut rng);
        let tb = uniform(n, 3, -1.0, 1.0, &mut rng);
        let labels = random_labels(n, 3, &mut rng);
        let weights = mlp::compute_class_weights(&labels, 3).unwrap();
        let batch = Batch { x: &x, y: &y, target_a: &ta, target_b: &tb, labels: &labels };
        let (_, gx, gy) = mlp::loss_and_gradients(&pair, &batch, Some(&weights), None).unwrap();

        for modality in 0..2 {
            let analytic = if modality == 0 { gx.parameters() } else { gy.parameters() };
            for (p, g) in analytic.iter().enumerate() {
                let base = if modality == 0 { pair.x.parameters()[p].clone() } else { pair.y.parameters()[p].clone() };
                let numeric = numeric_grad(&base, 1e-5, |v| {
                    let mut probe = pair.clone();
                    let net = if modality == 0 { &mut probe.x } else { &mut probe.y };
                    *net.parameters_mut()[p] = v.clone();
                    mlp::loss_and_gradients(&probe, &batch, Some(&weights), None).unwrap().0
                });
                worst = worst.max(rel_err(g, &numeric));
            }
        }
    }
    worst
}

/// `(initial, final)` evaluation-mode loss on a separable two-class toy.
pub fn mlp_toy_progress() -> (f64, f64) {
    let mut rng = seed::rng(500);
    let n = 40;
    let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
    let shift = |l: usize| if l == 0 { -1.5 } else { 1.5 };
    let x = DMatrix::from_fn(n, 4, |i, _| shift(labels[i]) + rng.random_range(-0.5..0.5));
    let y = DMatrix::from_fn(n, 4, |i, _| -shift(labels[i]) + rng.random_range(-0.5..0.5));
    let code = |l: usize| if l == 0 { 1.0 } else { -1.0 };
    let a = DMatrix::from_fn(n, 8, |i, j| code(labels[i]) * if j % 3 == 0 { -0.8 } else { 0.8 });
    let lv = LabelVector::new(labels, 2).unwrap();
    let shape = MlpShape { input_dim: 4, hidden: (16, 8), bits: 8, classes: 2 };
    let pair = MlpPair {
        x: MlpHashFunction::new(shape, 0.0, 1).unwrap(),
        y: MlpHashFunction::new(shape, 0.0, 2).unwrap(),
    };
    let (fx, fy) = (FeatureMatrix::new(x).unwrap(), FeatureMatrix::new(y).unwrap());
    let initial = mlp::total_loss(&pair, &fx, &fy, &a, &a, &lv, None).unwrap();
    let cfg = mlp::TrainConfig { epochs: 200, batch_size: 8, learning_rate: 5e-3, seed: 7, ..Default::default() };
    let (trained, _) = mlp::train(pair, &fx, &fy, &a, &a, &lv, &cfg).unwrap();
    (initial, mlp::total_loss(&trained, &fx, &fy, &a, &a, &lv, None).unwrap())
}

/// Counts per class, then `N / n_j`.
pub fn counted_weights(labels: &[usize], classes: usize) -> Vec<f64> {
    let mut counts = vec![0u32; classes];
    labels.iter().for_each(|&l| counts[l] += 1);
    counts.iter().map(|&c| labels.len() as f64 / f64::from(c)).collect()
}

/// Row-by-row selection of true-class probabilities.
pub fn counted_ce(px: &DMatrix<f64>, py: &DMatrix<f64>, labels: &[usize], w: &[f64]) -> f64 {
    let mut total = 0.0;
    for (i, &l) in labels.iter().enumerate() {
        let picked = px[(i, l)].max(1e-12).ln() + py[(i, l)].max(1e-12).ln();
        total -= w[l] * picked;
    }
    total
}

/// Number of mismatches between library and counting oracles over random
/// instances, for class weights and weighted cross-entropy.
pub fn loss_oracle_mismatches(instances: u64) -> usize {
    let mut bad = 0;
    for k in 0..instances {
        let mut rng = seed::rng(600 + k);
        let classes = rng.random_range(1..6);
        let n = rng.random_range(classes..30);
        let labels = random_labels(n, classes, &mut rng);
        let w = mlp::compute_class_weights(&labels, classes).unwrap();
        if w.0 != counted_weights(&labels, classes) {
            bad += 1;
        }
        let px = mlp::softmax(&uniform(n, classes, -3.0, 3.0, &mut rng));
        let py = mlp::softmax(&uniform(n, classes, -3.0, 3.0, &mut rng));
        if mlp::weighted_ce_loss(&px, &py, &labels, Some(&w)).unwrap() != counted_ce(&px, &py, &labels, &w.0) {
            bad += 1;
        }
        let ones = vec![1.0; classes];
        let uniform_w = ClassWeights::uniform(classes);
        if mlp::weighted_ce_loss(&px, &py, &labels, Some(&uniform_w)).unwrap() != counted_ce(&px, &py, &labels, &ones)
            || mlp::weighted_ce_loss(&px, &py, &labels, None).unwrap() != counted_ce(&px, &py, &labels, &ones)
        {
            bad += 1;
        }
    }
    bad
}

// ---------------------------------------------------------------- eval

pub fn random_codes(rows: usize, bits: usize, rng: &mut seed::Rng) -> BinaryCodeMatrix {
    BinaryCodeMatrix::from_signs(&uniform(rows, bits, -1.0, 1.0, rng))
}

/// AP over a stable sort on `(distance, index)`, distances from `±1` rows.
pub fn naive_map(
    queries: &BinaryCodeMatrix,
    qlabels: &[usize],
    gallery: &BinaryCodeMatrix,
    glabels: &[usize],
    cutoff: Cutoff,
    exclude_self: bool,
) -> f64 {
    let mut total = 0.0;
    for (i, &label) in qlabels.iter().enumerate() {
        let qi = queries.row(i);
        let mut order: Vec<(usize, usize)> = (0..gallery.rows())
            .filter(|&g| !(exclude_self && g == i))
            .map(|g| (qi.iter().zip(gallery.row(g)).filter(|(a, b)| **a != *b).count(), g))
            .collect();
        order.sort();
        let k = match cutoff {
            Cutoff::At(k) => k.min(order.len()),
            Cutoff::All => order.len(),
        };
        let (mut hits, mut sum) = (0usize, 0.0);
        for (r, &(_, g)) in order[..k].iter().enumerate() {
            if glabels[g] == label {
                hits += 1;
                sum += hits as f64 / (r + 1) as f64;
            }
        }
        total += if hits == 0 { 0.0 } else { sum / hits as f64 };
    }
    total / queries.rows() as f64
}

/// Instances (N ≤ 6) on which `map_score` differs from [`naive_map`].
pub fn map_oracle_mismatches(instances: u64) -> Vec<String> {
    let mut bad = Vec::new();
    for k in 0..instances {
        let mut rng = seed::rng(700 + k);
        let nq = rng.random_range(1..=6);
        let ng = rng.random_range(1..=6);
        let bits = rng.random_range(1..=8);
        let q = random_codes(nq, bits, &mut rng);
        let self_gallery = rng.random_bool(0.3);
        let g = if self_gallery { q.clone() } else { random_codes(ng, bits, &mut rng) };
        let classes = rng.random_range(1..=3);
        let ql: Vec<usize> = (0..nq).map(|_| rng.random_range(0..classes)).collect();
        let gl: Vec<usize> = if self_gallery { ql.clone() } else { (0..ng).map(|_| rng.random_range(0..classes)).collect() };
        let cutoffs = (1..=7).map(Cutoff::At).chain([Cutoff::All]);
        for cutoff in cutoffs {
            for exclude_self in [false, self_gallery] {
                let opts = MapOptions { cutoff, exclude_self };
                let got = eval::map_score(&q, &ql, &g, &gl, opts).unwrap();
                let want = naive_map(&q, &ql, &g, &gl, cutoff, exclude_self);
                if got != want {
                    bad.push(format!("instance {k}, cutoff {cutoff}, exclude_self {exclude_self}: {got} vs {want}"));
                }
            }
        }
    }
    bad
}

pub fn bits_of(m: &DMatrix<f64>) -> Vec<u64> {
    m.iter().map(|v| v.to_bits()).collect()
}
