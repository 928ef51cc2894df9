//! Stage one: relaxed hash codes from label similarity.
//!
//! Codes `A` (modality X) and `B` (modality Y) minimize
//!
//! ```text
//! F(A, B) = ‖S − (1/q) A Bᵀ‖²_F + λ_h ‖A − B‖²_F,   A, B ∈ [-1, 1]^{N×q}
//! ```
//!
//! by alternating projected gradient steps with backtracking. For incremental
//! phases the rows belonging to retained exemplars are held fixed and only the
//! rows of the new samples are optimized; the pairing term then covers the
//! free rows only.
//!
//! Gradients are those of `F` as written:
//! `∇_A F = (2/q²) A BᵀB − (2/q) S B + 2λ_h (A − B)` and symmetrically for `B`.
//! Because `S` is a label-agreement matrix it is kept factored, and the
//! objective is evaluated through `q x q` Gram matrices and per-class sums,
//! so one iteration costs `O(N q²)`.

use nalgebra::DMatrix;
use rand::Rng as _;

use crate::codes::RelaxedCodeMatrix;
use crate::data::seed;
use crate::data::SimilarityMatrix;
use crate::error::{Error, Result};

/// Halvings of the step size tried before a half-step is skipped.
const MAX_BACKTRACKS: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct CodeLearnerConfig {
    /// Code length `q`.
    pub bits: usize,
    /// Pairing weight `λ_h`; zero disables the pairing term.
    pub lambda_h: f64,
    pub max_iters: usize,
    /// Stop once an iteration lowers the objective by less than this fraction.
    pub rel_tol: f64,
    pub eta_init: f64,
    pub seed: u64,
}

impl Default for CodeLearnerConfig {
    fn default() -> Self {
        Self {
            bits: 128,
            lambda_h: 1.0,
            max_iters: 500,
            rel_tol: 1e-6,
            eta_init: 1e-2,
            seed: 0,
        }
    }
}

impl CodeLearnerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.bits == 0 {
            return bad("code length must be >= 1".into());
        }
        if self.max_iters == 0 {
            return bad("max_iters must be >= 1".into());
        }
        if self.rel_tol.is_nan() || self.rel_tol <= 0.0 {
            return bad(format!("rel_tol must be positive, got {}", self.rel_tol));
        }
        if self.eta_init.is_nan() || self.eta_init <= 0.0 {
            return bad(format!("eta_init must be positive, got {}", self.eta_init));
        }
        if self.lambda_h.is_nan() || self.lambda_h < 0.0 {
            return bad(format!("lambda_h must be non-negative, got {}", self.lambda_h));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

/// Learned codes plus the objective after initialization and after every
/// iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct CodePair {
    pub a: RelaxedCodeMatrix,
    pub b: RelaxedCodeMatrix,
    pub objective_trace: Vec<f64>,
}

impl CodePair {
    pub fn iterations(&self) -> usize {
        self.objective_trace.len().saturating_sub(1)
    }

    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace holds the initial value")
    }
}

/// `F` restricted to free rows, with `fixed_*` rows stacked above them.
struct Factorization<'a> {
    s: &'a SimilarityMatrix,
    fixed_a: &'a DMatrix<f64>,
    fixed_b: &'a DMatrix<f64>,
    q: f64,
    lambda_h: f64,
}

fn stack(top: &DMatrix<f64>, bottom: &DMatrix<f64>) -> DMatrix<f64> {
    if top.nrows() == 0 {
        return bottom.clone();
    }
    let mut m = DMatrix::zeros(top.nrows() + bottom.nrows(), bottom.ncols());
    m.rows_mut(0, top.nrows()).copy_from(top);
    m.rows_mut(top.nrows(), bottom.nrows()).copy_from(bottom);
    m
}

impl Factorization<'_> {
    fn value(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        let full_a = stack(self.fixed_a, a);
        let full_b = stack(self.fixed_b, b);
        let cross = self
            .s
            .group_sums(&full_a)
            .component_mul(&self.s.group_sums(&full_b))
            .sum();
        let quad = (full_a.transpose() * &full_a)
            .component_mul(&(full_b.transpose() * &full_b))
            .sum();
        let fit = self.s.frobenius_sq() - 2.0 / self.q * cross + quad / (self.q * self.q);
        fit.max(0.0) + self.lambda_h * (a - b).norm_squared()
    }

    /// Gradient with respect to the free rows of `mine`; `other` is the
    /// opposite modality. The objective is symmetric in (A, B).
    fn grad(
        &self,
        mine: &DMatrix<f64>,
        other: &DMatrix<f64>,
        fixed_other: &DMatrix<f64>,
    ) -> DMatrix<f64> {
        let full_other = stack(fixed_other, other);
        let gram = full_other.transpose() * &full_other;
        let sums = self.s.group_sums(&full_other);
        let offset = self.fixed_a.nrows();
        let mut g = mine * gram * (2.0 / (self.q * self.q));
        for i in 0..mine.nrows() {
            let grp = self.s.group_of(offset + i);
            for j in 0..mine.ncols() {
                g[(i, j)] += 2.0 * self.lambda_h * (mine[(i, j)] - other[(i, j)])
                    - 2.0 / self.q * sums[(grp, j)];
            }
        }
        g
    }

    fn grad_a(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.grad(a, b, self.fixed_b)
    }

    fn grad_b(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.grad(b, a, self.fixed_a)
    }
}

fn check_pair(s: &SimilarityMatrix, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::shape("code pair", format!("{:?}", a.shape()), format!("{:?}", b.shape())));
    }
    if a.nrows() != s.len() {
        return Err(Error::shape("code rows vs similarity", s.len(), a.nrows()));
    }
    Ok(())
}

fn base_problem<'a>(s: &'a SimilarityMatrix, empty: &'a DMatrix<f64>, q: usize, lambda_h: f64) -> Factorization<'a> {
    Factorization {
        s,
        fixed_a: empty,
        fixed_b: empty,
        q: q as f64,
        lambda_h,
    }
}

/// `‖S − (1/q) A Bᵀ‖²_F + λ_h ‖A − B‖²_F`.
pub fn objective(
    s: &SimilarityMatrix,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: usize,
    lambda_h: f64,
) -> Result<f64> {
    check_pair(s, a, b)?;
    let empty = DMatrix::zeros(0, a.ncols());
    Ok(base_problem(s, &empty, q, lambda_h).value(a, b))
}

/// `(∇_A F, ∇_B F)` of [`objective`].
pub fn gradients(
    s: &SimilarityMatrix,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: usize,
    lambda_h: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_pair(s, a, b)?;
    let empty = DMatrix::zeros(0, a.ncols());
    let p = base_problem(s, &empty, q, lambda_h);
    Ok((p.grad_a(a, b), p.grad_b(a, b)))
}

/// The incremental objective: the factorization term over all rows of
/// `[A_e; Â]`, `[B_e; B̂]` and the pairing term over the new rows only.
pub fn incremental_objective(
    s_bar: &SimilarityMatrix,
    a_exemplar: &RelaxedCodeMatrix,
    b_exemplar: &RelaxedCodeMatrix,
    a_new: &DMatrix<f64>,
    b_new: &DMatrix<f64>,
    lambda_h: f64,
) -> Result<f64> {
    let p = incremental_problem(s_bar, a_exemplar, b_exemplar, a_new.nrows(), a_exemplar.bits(), lambda_h)?;
    if a_new.shape() != b_new.shape() || a_new.ncols() != a_exemplar.bits() {
        return Err(Error::shape("new code shapes", format!("{:?}", a_new.shape()), format!("{:?}", b_new.shape())));
    }
    Ok(p.value(a_new, b_new))
}

fn incremental_problem<'a>(
    s_bar: &'a SimilarityMatrix,
    a_exemplar: &'a RelaxedCodeMatrix,
    b_exemplar: &'a RelaxedCodeMatrix,
    new_count: usize,
    bits: usize,
    lambda_h: f64,
) -> Result<Factorization<'a>> {
    if a_exemplar.as_matrix().shape() != b_exemplar.as_matrix().shape() {
        return Err(Error::shape(
            "exemplar codes",
            format!("{:?}", a_exemplar.as_matrix().shape()),
            format!("{:?}", b_exemplar.as_matrix().shape()),
        ));
    }
    if a_exemplar.bits() != bits {
        return Err(Error::shape("exemplar code width", bits, a_exemplar.bits()));
    }
    let expected = a_exemplar.rows() + new_count;
    if s_bar.len() != expected {
        return Err(Error::shape("similarity size", expected, s_bar.len()));
    }
    Ok(Factorization {
        s: s_bar,
        fixed_a: a_exemplar.as_matrix(),
        fixed_b: b_exemplar.as_matrix(),
        q: bits as f64,
        lambda_h,
    })
}

fn random_codes(rows: usize, bits: usize, rng: &mut seed::Rng) -> DMatrix<f64> {
    // row-major fill so a row's values do not depend on the row count
    let values: Vec<f64> = (0..rows * bits).map(|_| rng.random_range(-1.0..=1.0)).collect();
    DMatrix::from_row_slice(rows, bits, &values)
}

fn project(m: &mut DMatrix<f64>) {
    m.apply(|v| *v = v.clamp(-1.0, 1.0));
}

/// One projected half-step with backtracking. Returns the new objective.
fn half_step(
    current: &mut DMatrix<f64>,
    grad: &DMatrix<f64>,
    eta: &mut f64,
    value: f64,
    eval: impl Fn(&DMatrix<f64>) -> f64,
) -> f64 {
    for _ in 0..MAX_BACKTRACKS {
        let mut trial = &*current - grad * *eta;
        project(&mut trial);
        let v = eval(&trial);
        if v <= value {
            *current = trial;
            return v;
        }
        *eta *= 0.5;
    }
    value
}

fn descend(
    p: &Factorization<'_>,
    mut a: DMatrix<f64>,
    mut b: DMatrix<f64>,
    cfg: &CodeLearnerConfig,
) -> (DMatrix<f64>, DMatrix<f64>, Vec<f64>) {
    project(&mut a);
    project(&mut b);
    let mut value = p.value(&a, &b);
    let mut trace = vec![value];
    if a.nrows() == 0 {
        return (a, b, trace);
    }
    let (mut eta_a, mut eta_b) = (cfg.eta_init, cfg.eta_init);
    for _ in 0..cfg.max_iters {
        let before = value;
        let g = p.grad_a(&a, &b);
        value = half_step(&mut a, &g, &mut eta_a, value, |t| p.value(t, &b));
        let g = p.grad_b(&a, &b);
        value = half_step(&mut b, &g, &mut eta_b, value, |t| p.value(&a, t));
        trace.push(value);
        if before <= 0.0 || (before - value) < cfg.rel_tol * before {
            break;
        }
    }
    (a, b, trace)
}

/// Base codes from a uniform `[-1, 1]` initialization drawn from `cfg.seed`.
pub fn learn_base(s: &SimilarityMatrix, cfg: &CodeLearnerConfig) -> Result<CodePair> {
    cfg.validate()?;
    let mut rng = seed::rng(cfg.seed);
    let a0 = random_codes(s.len(), cfg.bits, &mut rng);
    let b0 = random_codes(s.len(), cfg.bits, &mut rng);
    learn_base_from(s, a0, b0, cfg)
}

/// Base codes from a caller-supplied starting point (projected onto `[-1, 1]`).
pub fn learn_base_from(
    s: &SimilarityMatrix,
    a0: DMatrix<f64>,
    b0: DMatrix<f64>,
    cfg: &CodeLearnerConfig,
) -> Result<CodePair> {
    cfg.validate()?;
    check_pair(s, &a0, &b0)?;
    if a0.ncols() != cfg.bits {
        return Err(Error::shape("initial code width", cfg.bits, a0.ncols()));
    }
    let empty = DMatrix::zeros(0, cfg.bits);
    let p = base_problem(s, &empty, cfg.bits, cfg.lambda_h);
    let (a, b, objective_trace) = descend(&p, a0, b0, cfg);
    Ok(CodePair {
        a: RelaxedCodeMatrix::new(a)?,
        b: RelaxedCodeMatrix::new(b)?,
        objective_trace,
    })
}

/// Codes for `new_count` new samples with the exemplar codes held fixed.
///
/// `s_bar` covers the exemplars first, then the new samples. The returned pair
/// holds only the new rows; the full codes are `[A_e; Â]` and `[B_e; B̂]`.
pub fn learn_incremental(
    s_bar: &SimilarityMatrix,
    a_exemplar: &RelaxedCodeMatrix,
    b_exemplar: &RelaxedCodeMatrix,
    new_count: usize,
    cfg: &CodeLearnerConfig,
) -> Result<CodePair> {
    cfg.validate()?;
    let p = incremental_problem(s_bar, a_exemplar, b_exemplar, new_count, cfg.bits, cfg.lambda_h)?;
    let mut rng = seed::rng(cfg.seed);
    let a0 = random_codes(new_count, cfg.bits, &mut rng);
    let b0 = random_codes(new_count, cfg.bits, &mut rng);
    let (a, b, objective_trace) = descend(&p, a0, b0, cfg);
    Ok(CodePair {
        a: RelaxedCodeMatrix::new(a)?,
        b: RelaxedCodeMatrix::new(b)?,
        objective_trace,
    })
}
