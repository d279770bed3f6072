//! ε-Support-Vector-Regression: kernels, dual SMO solver, prediction, and
//! linear-weight extraction.
//!
//! The dual is taken over β_i = α_i − α_i* with box |β_i| ≤ C and Σβ_i = 0.
//! Internally the solver works on the 2m nonnegative variables (α, α*), so
//! the ε·Σ|β_i| term stays a plain linear term and every pairwise step is an
//! exact one-dimensional quadratic minimization. Pair selection is
//! maximal-KKT-violation with deterministic index order, so fits are
//! reproducible without any seed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureVector;

#[derive(Debug, Error)]
pub enum SvrError {
    #[error("C must be positive, got {0}")]
    NonPositiveC(f64),
    #[error("no training data")]
    NoData,
    #[error("dimension mismatch: kernel expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("kernel produced a non-finite value; inputs too large for this kernel")]
    NonFiniteKernel,
    #[error("SMO did not converge after {iterations} iterations (KKT gap {gap:.3e})")]
    NoConvergence { iterations: usize, gap: f64 },
    #[error("weights are only defined for the linear kernel")]
    NonLinearKernel,
}

/// The three kernel families. Polynomial and Gaussian use a fixed `1/n`
/// scaling of the dot product / squared distance, with `n` the feature
/// dimension; there is no free width or coefficient hyperparameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelKind {
    Linear,
    Polynomial { degree: u32 },
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Kernel {
    #[serde(flatten)]
    pub kind: KernelKind,
    /// Feature dimension used in the polynomial/Gaussian normalization.
    pub n: usize,
}

impl Kernel {
    pub fn linear(n: usize) -> Self {
        Kernel {
            kind: KernelKind::Linear,
            n,
        }
    }

    pub fn polynomial(degree: u32, n: usize) -> Self {
        Kernel {
            kind: KernelKind::Polynomial { degree },
            n,
        }
    }

    pub fn gaussian(n: usize) -> Self {
        Kernel {
            kind: KernelKind::Gaussian,
            n,
        }
    }
}

pub fn kernel_eval(kernel: &Kernel, x: &[f64], z: &[f64]) -> Result<f64, SvrError> {
    if x.len() != kernel.n || z.len() != kernel.n {
        return Err(SvrError::DimensionMismatch {
            expected: kernel.n,
            got: if x.len() != kernel.n { x.len() } else { z.len() },
        });
    }
    let value = match kernel.kind {
        KernelKind::Linear => dot(x, z),
        KernelKind::Polynomial { degree } => (dot(x, z) / kernel.n as f64).powi(degree as i32),
        KernelKind::Gaussian => {
            let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
            (-d2 / kernel.n as f64).exp()
        }
    };
    Ok(value)
}

fn dot(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| a * b).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    /// KKT violation tolerance used as the stopping criterion.
    pub tolerance: f64,
    /// Upper bound on SMO pairwise-update iterations.
    pub max_passes: usize,
}

impl SvrParams {
    pub fn new(c: f64, epsilon: f64) -> Self {
        SvrParams {
            c,
            epsilon,
            tolerance: 1e-3,
            // Badly conditioned Gram matrices (high-degree polynomial
            // kernels at large C) can legitimately need ~1e6 pair updates.
            max_passes: 5_000_000,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }
}

/// Trained SVR predictor. `beta` holds the nonzero dual coefficients, one
/// per entry of `support_vectors`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename = "svr")]
pub struct SvrModel {
    pub kernel: Kernel,
    pub beta: Vec<f64>,
    #[serde(rename = "sv")]
    pub support_vectors: Vec<Vec<f64>>,
    pub b: f64,
    pub params: SvrParams,
    /// Fingerprint of the feature spec the model was trained against.
    #[serde(default)]
    pub spec_ref: String,
}

/// Full dual solution before support-vector compaction, for diagnostics and
/// oracle comparisons.
#[derive(Debug, Clone)]
pub struct DualSolution {
    pub beta: Vec<f64>,
    pub b: f64,
    pub iterations: usize,
    pub gap: f64,
}

/// Solves the ε-SVR dual by SMO over the 2m variables (α, α*).
///
/// Index convention: t < m addresses α_t (sign +1), t ≥ m addresses
/// α*_{t−m} (sign −1). The minimized objective is
/// `1/2 aᵀQ̃a + Σ(ε − s_t y_t) a_t` with `Q̃_{tu} = s_t s_u K_{tu}`.
pub fn solve_dual(
    data: &[FeatureVector],
    kernel: &Kernel,
    params: &SvrParams,
) -> Result<DualSolution, SvrError> {
    if data.is_empty() {
        return Err(SvrError::NoData);
    }
    if !(params.c > 0.0) {
        return Err(SvrError::NonPositiveC(params.c));
    }
    let m = data.len();
    let c = params.c;
    let eps = params.epsilon;
    let tol = params.tolerance;

    // Precompute the Gram matrix.
    let mut gram = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let k = kernel_eval(kernel, &data[i].x, &data[j].x)?;
            if !k.is_finite() {
                return Err(SvrError::NonFiniteKernel);
            }
            gram[i * m + j] = k;
            gram[j * m + i] = k;
        }
    }

    let sign = |t: usize| if t < m { 1.0 } else { -1.0 };
    let mut a = vec![0.0; 2 * m];
    // Gradient of the minimization objective at a = 0.
    let mut grad: Vec<f64> = (0..2 * m).map(|t| eps - sign(t) * data[t % m].y).collect();

    let recompute_grad = |a: &[f64], grad: &mut [f64]| {
        for t in 0..2 * m {
            let mut g = eps - sign(t) * data[t % m].y;
            for u in 0..2 * m {
                if a[u] != 0.0 {
                    g += sign(t) * sign(u) * gram[(t % m) * m + (u % m)] * a[u];
                }
            }
            grad[t] = g;
        }
    };

    let mut iterations = 0;
    let mut gap = f64::INFINITY;
    let mut converged = false;
    while iterations < params.max_passes {
        // Incremental gradient updates drift over many iterations at large
        // kernel magnitudes; refresh from scratch periodically.
        if iterations % 4096 == 4095 {
            recompute_grad(&a, &mut grad);
        }
        // Working-set selection. A variable is in I_up when the direction
        // d_t = +s_t is feasible, in I_low when d_t = -s_t is. The first
        // index maximizes v_t = -s_t*G_t over I_up; the stopping gap is
        // measured against the plain minimum over I_low, but the actual
        // partner is chosen by the second-order rule (largest decrease
        // -(v_i - v_t)^2 / eta), which avoids the slow zig-zag of the
        // maximal-violating-pair rule on ill-conditioned Gram matrices.
        let mut i_best: Option<(usize, f64)> = None;
        for t in 0..2 * m {
            let in_up = if t < m { a[t] < c } else { a[t] > 0.0 };
            if !in_up {
                continue;
            }
            let v = -sign(t) * grad[t];
            if i_best.is_none_or(|(_, bv)| v > bv) {
                i_best = Some((t, v));
            }
        }
        let (i, vi) = i_best.expect("I_up nonempty");
        let ii_diag = gram[(i % m) * m + (i % m)];
        let mut v_min = f64::INFINITY;
        let mut j_best: Option<(usize, f64)> = None;
        for t in 0..2 * m {
            let in_low = if t < m { a[t] > 0.0 } else { a[t] < c };
            if !in_low {
                continue;
            }
            let v = -sign(t) * grad[t];
            v_min = v_min.min(v);
            if v < vi {
                let eta_t =
                    (ii_diag + gram[(t % m) * m + (t % m)] - 2.0 * gram[(i % m) * m + (t % m)])
                        .max(1e-12);
                let decrease = -(vi - v) * (vi - v) / eta_t;
                if j_best.is_none_or(|(_, bd)| decrease < bd) {
                    j_best = Some((t, decrease));
                }
            }
        }
        gap = vi - v_min;
        if !gap.is_finite() {
            return Err(SvrError::NonFiniteKernel);
        }
        if gap <= tol {
            converged = true;
            break;
        }
        let (j, _) = j_best.expect("I_low nonempty when gap > tol");

        let (si, sj) = (sign(i), sign(j));
        let (ii, jj) = (i % m, j % m);
        // Direction d_i = s_i, d_j = -s_j preserves the equality constraint.
        let eta = gram[ii * m + ii] + gram[jj * m + jj] - 2.0 * gram[ii * m + jj];
        let derivative = si * grad[i] - sj * grad[j]; // = -(gap) < 0
        let mut step = if eta > 1e-12 { -derivative / eta } else { f64::INFINITY };

        // Clip so both variables stay inside [0, C].
        let (lo_i, hi_i) = if si > 0.0 { (-a[i], c - a[i]) } else { (a[i] - c, a[i]) };
        let (lo_j, hi_j) = if sj > 0.0 { (a[j] - c, a[j]) } else { (-a[j], c - a[j]) };
        let lo = lo_i.max(lo_j);
        let hi = hi_i.min(hi_j);
        step = step.clamp(lo, hi);
        if step == 0.0 {
            // Numerically stuck pair; treat as converged at this gap.
            break;
        }

        let (old_i, old_j) = (a[i], a[j]);
        a[i] += si * step;
        a[j] -= sj * step;
        // Snap to the box so bound membership stays exact and near-bound
        // residues cannot stall progress.
        let snap = 1e-12 * c;
        for t in [i, j] {
            if a[t] <= snap {
                a[t] = 0.0;
            } else if a[t] >= c - snap {
                a[t] = c;
            }
        }
        // Update the gradient from the deltas actually applied, keeping it
        // exactly consistent with `a` even after snapping.
        let (delta_i, delta_j) = (a[i] - old_i, a[j] - old_j);
        for t in 0..2 * m {
            grad[t] += sign(t)
                * (si * delta_i * gram[(t % m) * m + ii] + sj * delta_j * gram[(t % m) * m + jj]);
        }
        iterations += 1;
    }

    if !converged && gap > tol {
        return Err(SvrError::NoConvergence { iterations, gap });
    }

    let beta: Vec<f64> = (0..m).map(|t| a[t] - a[t + m]).collect();
    let b = offset_from_gradient(&a, &grad, c, m, &data.iter().map(|d| d.y).collect::<Vec<_>>(), &beta);
    Ok(DualSolution {
        beta,
        b,
        iterations,
        gap,
    })
}

/// Recovers the bias from the converged gradient: average of −s_t·G_t over
/// free (unbounded) variables, else the midpoint of the feasible interval.
/// The all-β-zero degenerate case uses mean(y), clamped into the interval.
fn offset_from_gradient(a: &[f64], grad: &[f64], c: f64, m: usize, y: &[f64], beta: &[f64]) -> f64 {
    let sign = |t: usize| if t < m { 1.0 } else { -1.0 };
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    let mut lb = f64::NEG_INFINITY;
    let mut ub = f64::INFINITY;
    for t in 0..2 * m {
        let v = -sign(t) * grad[t];
        if a[t] > 0.0 && a[t] < c {
            free_sum += v;
            free_count += 1;
        }
        let in_up = if t < m { a[t] < c } else { a[t] > 0.0 };
        let in_low = if t < m { a[t] > 0.0 } else { a[t] < c };
        if in_up {
            lb = lb.max(v);
        }
        if in_low {
            ub = ub.min(v);
        }
    }
    if beta.iter().all(|&b| b == 0.0) {
        let mean_y = y.iter().sum::<f64>() / y.len() as f64;
        let (lo, hi) = (lb.min(ub), lb.max(ub));
        return mean_y.clamp(lo, hi);
    }
    if free_count > 0 {
        free_sum / free_count as f64
    } else {
        0.5 * (lb + ub)
    }
}

/// Fits an ε-SVR model; see [`solve_dual`] for the solver.
pub fn fit_svr(
    data: &[FeatureVector],
    kernel: &Kernel,
    params: &SvrParams,
) -> Result<SvrModel, SvrError> {
    let solution = solve_dual(data, kernel, params)?;
    let mut beta = Vec::new();
    let mut support_vectors = Vec::new();
    for (i, &b) in solution.beta.iter().enumerate() {
        if b != 0.0 {
            beta.push(b);
            support_vectors.push(data[i].x.clone());
        }
    }
    Ok(SvrModel {
        kernel: *kernel,
        beta,
        support_vectors,
        b: solution.b,
        params: *params,
        spec_ref: String::new(),
    })
}

pub fn predict_svr(model: &SvrModel, x: &[f64]) -> Result<f64, SvrError> {
    if x.len() != model.kernel.n {
        return Err(SvrError::DimensionMismatch {
            expected: model.kernel.n,
            got: x.len(),
        });
    }
    let mut sum = model.b;
    for (beta, sv) in model.beta.iter().zip(&model.support_vectors) {
        sum += beta * kernel_eval(&model.kernel, sv, x)?;
    }
    Ok(sum)
}

/// Recovers the primal weight vector `w = Σ β_i x_i` of a linear-kernel
/// model.
pub fn extract_weights(model: &SvrModel) -> Result<Vec<f64>, SvrError> {
    if model.kernel.kind != KernelKind::Linear {
        return Err(SvrError::NonLinearKernel);
    }
    let mut w = vec![0.0; model.kernel.n];
    for (beta, sv) in model.beta.iter().zip(&model.support_vectors) {
        for (wk, xk) in w.iter_mut().zip(sv) {
            *wk += beta * xk;
        }
    }
    Ok(w)
}

/// Value of the dual objective `−1/2 ββ'K − ε Σ|β| + Σ yβ` for a full-length
/// coefficient vector over `data`.
pub fn dual_objective(
    data: &[FeatureVector],
    kernel: &Kernel,
    epsilon: f64,
    beta: &[f64],
) -> Result<f64, SvrError> {
    assert_eq!(data.len(), beta.len());
    let mut quad = 0.0;
    for (i, bi) in beta.iter().enumerate() {
        if *bi == 0.0 {
            continue;
        }
        for (j, bj) in beta.iter().enumerate() {
            if *bj == 0.0 {
                continue;
            }
            quad += bi * bj * kernel_eval(kernel, &data[i].x, &data[j].x)?;
        }
    }
    let l1: f64 = beta.iter().map(|b| b.abs()).sum();
    let lin: f64 = data.iter().zip(beta).map(|(d, b)| d.y * b).sum();
    Ok(-0.5 * quad - epsilon * l1 + lin)
}

/// Maximum KKT residual of a dual solution over the training data, using the
/// three-case conditions (β=0 / interior / at-bound).
pub fn kkt_max_violation(
    data: &[FeatureVector],
    kernel: &Kernel,
    params: &SvrParams,
    beta: &[f64],
    b: f64,
) -> Result<f64, SvrError> {
    assert_eq!(data.len(), beta.len());
    let c = params.c;
    let eps = params.epsilon;
    let bound_margin = 1e-8 * c.max(1.0);
    let mut worst = 0.0f64;
    for (i, d) in data.iter().enumerate() {
        let mut f = b;
        for (j, bj) in beta.iter().enumerate() {
            if *bj != 0.0 {
                f += bj * kernel_eval(kernel, &data[j].x, &d.x)?;
            }
        }
        let r = d.y - f;
        let violation = if beta[i].abs() <= bound_margin {
            (r.abs() - eps).max(0.0)
        } else if beta[i].abs() >= c - bound_margin {
            (eps - beta[i].signum() * r).max(0.0)
        } else {
            (beta[i].signum() * r - eps).abs()
        };
        worst = worst.max(violation);
    }
    Ok(worst)
}
