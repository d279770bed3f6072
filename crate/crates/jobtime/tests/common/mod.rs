//! Shared test support: independent solver oracles and random instance
//! generators.
// Index-style loops mirror the matrix algebra here and keep the oracle
// readable as math.
#![allow(clippy::needless_range_loop)]
//!
//! The SVR oracle solves the same box-and-equality constrained dual as the
//! production SMO code, but by an entirely different route (accelerated
//! projected gradient with a bisection projection), so agreement between the
//! two is strong evidence of correctness. The OLS oracle solves the normal
//! equations with hand-rolled Gaussian elimination and deliberately shares
//! no code with the SVD path.

use jobtime::features::FeatureVector;
use jobtime::svr::{kernel_eval, Kernel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dual solution produced by the projected-gradient oracle, in the same
/// β = α − α* parameterization as the production solver.
pub struct OracleSolution {
    pub beta: Vec<f64>,
    pub b: f64,
    pub objective: f64,
}

/// Projects `a` onto {0 ≤ a ≤ c} ∩ {sᵀa = 0} where s is the first-half = +1,
/// second-half = −1 sign pattern. Uses bisection on the multiplier λ of the
/// hyperplane constraint: g(λ) = Σ s_t·clip(a_t − λ s_t, 0, c) is
/// nonincreasing and crosses zero inside [−hi, hi].
fn project(a: &mut [f64], c: f64) {
    let m = a.len() / 2;
    let sign = |t: usize| if t < m { 1.0 } else { -1.0 };
    let g = |lambda: f64, a: &[f64]| -> f64 {
        a.iter()
            .enumerate()
            .map(|(t, &v)| sign(t) * (v - lambda * sign(t)).clamp(0.0, c))
            .sum()
    };
    let hi = c + a.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let (mut lo, mut up) = (-hi, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + up);
        if g(mid, a) > 0.0 {
            lo = mid;
        } else {
            up = mid;
        }
    }
    let lambda = 0.5 * (lo + up);
    for (t, v) in a.iter_mut().enumerate() {
        *v = (*v - lambda * sign(t)).clamp(0.0, c);
    }
}

/// Brute-force QP oracle for the ε-SVR dual: accelerated projected gradient
/// on the 2m-variable split (α, α*), run to a fixed, generous iteration
/// budget. Returns β, the offset b recovered from the KKT system, and the
/// dual objective value.
pub fn oracle_solve(
    data: &[FeatureVector],
    kernel: &Kernel,
    c: f64,
    epsilon: f64,
) -> OracleSolution {
    let m = data.len();
    let dim = 2 * m;
    let sign = |t: usize| if t < m { 1.0 } else { -1.0 };

    // Q̃[t][u] = s_t s_u K(x_{t mod m}, x_{u mod m})
    let mut gram = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..=i {
            let k = kernel_eval(kernel, &data[i].x, &data[j].x).unwrap();
            gram[i][j] = k;
            gram[j][i] = k;
        }
    }
    let q: Vec<Vec<f64>> = (0..dim)
        .map(|t| {
            (0..dim)
                .map(|u| sign(t) * sign(u) * gram[t % m][u % m])
                .collect()
        })
        .collect();
    let p: Vec<f64> = (0..dim)
        .map(|t| epsilon - sign(t) * data[t % m].y)
        .collect();

    // Lipschitz bound for the gradient: ∞-norm row sum of Q̃.
    let lip = q
        .iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(1e-12f64, f64::max);
    let step = 1.0 / lip;

    let grad_at = |a: &[f64]| -> Vec<f64> {
        q.iter()
            .zip(&p)
            .map(|(row, pi)| row.iter().zip(a).map(|(qi, ai)| qi * ai).sum::<f64>() + pi)
            .collect()
    };

    // Nesterov-accelerated projected gradient with gradient-scheme restarts
    // (restart when the momentum direction opposes the last step) and an
    // early stop on a tiny projected-gradient step.
    let mut a = vec![0.0; dim];
    let mut a_prev = a.clone();
    let mut theta = 0usize;
    for _ in 0..300_000 {
        let momentum = theta as f64 / (theta as f64 + 3.0);
        let mut z: Vec<f64> = a
            .iter()
            .zip(&a_prev)
            .map(|(cur, prev)| cur + momentum * (cur - prev))
            .collect();
        project(&mut z, c);
        let grad = grad_at(&z);
        let mut next: Vec<f64> = z.iter().zip(&grad).map(|(zi, gi)| zi - step * gi).collect();
        project(&mut next, c);

        let dot: f64 = (0..dim).map(|t| (z[t] - next[t]) * (next[t] - a[t])).sum();
        theta = if dot > 0.0 { 0 } else { theta + 1 };

        let moved = next
            .iter()
            .zip(&a)
            .fold(0.0f64, |acc, (ni, ai)| acc.max((ni - ai).abs()));
        a_prev = a;
        a = next;
        if moved < 1e-13 * (1.0 + c) {
            break;
        }
    }

    let beta: Vec<f64> = (0..m).map(|i| a[i] - a[i + m]).collect();
    let b = oracle_offset(&a, &gram, data, c, epsilon);
    // Report the maximization-form objective to match dual_objective.
    let quad: f64 = (0..dim)
        .map(|t| a[t] * q[t].iter().zip(&a).map(|(qi, ai)| qi * ai).sum::<f64>())
        .sum();
    let lin: f64 = p.iter().zip(&a).map(|(pi, ai)| pi * ai).sum();
    OracleSolution {
        beta,
        b,
        objective: -(0.5 * quad + lin),
    }
}

/// Recovers b from the oracle's primal-dual relations: for free variables
/// (strictly inside (0, C) by a small margin) average the implied offsets;
/// otherwise take the midpoint of the feasible interval.
fn oracle_offset(a: &[f64], gram: &[Vec<f64>], data: &[FeatureVector], c: f64, epsilon: f64) -> f64 {
    let m = data.len();
    let sign = |t: usize| if t < m { 1.0 } else { -1.0 };
    let margin = 1e-6 * c;
    let v_of = |t: usize| -> f64 {
        let mut g = epsilon - sign(t) * data[t % m].y;
        for u in 0..2 * m {
            if a[u] != 0.0 {
                g += sign(t) * sign(u) * gram[t % m][u % m] * a[u];
            }
        }
        -sign(t) * g
    };
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    for t in 0..2 * m {
        let up = if t < m { a[t] < c - margin } else { a[t] > margin };
        let low = if t < m { a[t] > margin } else { a[t] < c - margin };
        if up && low {
            free_sum += v_of(t);
            free_count += 1;
        } else if up {
            lb = lb.max(v_of(t));
        } else if low {
            ub = ub.min(v_of(t));
        }
    }
    if free_count > 0 {
        free_sum / free_count as f64
    } else if lb.is_finite() && ub.is_finite() {
        0.5 * (lb + ub)
    } else {
        let mean_y = data.iter().map(|d| d.y).sum::<f64>() / m as f64;
        mean_y.clamp(lb.min(ub), ub.max(lb))
    }
}

/// Prediction from a full-length β over the training set.
pub fn oracle_predict(
    data: &[FeatureVector],
    kernel: &Kernel,
    beta: &[f64],
    b: f64,
    x: &[f64],
) -> f64 {
    let mut f = b;
    for (d, bi) in data.iter().zip(beta) {
        if *bi != 0.0 {
            f += bi * kernel_eval(kernel, &d.x, x).unwrap();
        }
    }
    f
}

/// Random regression instance with targets bounded away from zero so that
/// relative comparisons are meaningful.
pub fn random_instance(rng: &mut ChaCha8Rng, max_m: usize, max_n: usize) -> Vec<FeatureVector> {
    let m = rng.gen_range(4..=max_m);
    let n = rng.gen_range(1..=max_n);
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    (0..m)
        .map(|i| {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let lin: f64 = w.iter().zip(&x).map(|(wi, xi)| wi * xi).sum();
            FeatureVector {
                x,
                y: 3.0 + 0.5 * lin + rng.gen_range(-0.3..0.3),
                source_job_id: format!("r{i}"),
            }
        })
        .collect()
}

/// Normal-equations OLS oracle: builds AᵀA / Aᵀy for the intercept-augmented
/// design and solves by Gaussian elimination with partial pivoting. Returns
/// (w, b), or None when elimination hits a vanishing pivot.
pub fn oracle_ols(data: &[FeatureVector]) -> Option<(Vec<f64>, f64)> {
    let m = data.len();
    let n = data[0].x.len();
    let dim = n + 1;
    let col = |i: usize, j: usize| if j < n { data[i].x[j] } else { 1.0 };
    let mut ata = vec![vec![0.0f64; dim + 1]; dim];
    for r in 0..dim {
        for cidx in 0..dim {
            ata[r][cidx] = (0..m).map(|i| col(i, r) * col(i, cidx)).sum();
        }
        ata[r][dim] = (0..m).map(|i| col(i, r) * data[i].y).sum();
    }
    // Forward elimination with partial pivoting.
    for k in 0..dim {
        let pivot_row = (k..dim)
            .max_by(|&r1, &r2| ata[r1][k].abs().partial_cmp(&ata[r2][k].abs()).unwrap())?;
        ata.swap(k, pivot_row);
        let pivot = ata[k][k];
        if pivot.abs() < 1e-12 {
            return None;
        }
        for r in k + 1..dim {
            let factor = ata[r][k] / pivot;
            for cidx in k..=dim {
                ata[r][cidx] -= factor * ata[k][cidx];
            }
        }
    }
    // Back substitution.
    let mut sol = vec![0.0f64; dim];
    for k in (0..dim).rev() {
        let mut rhs = ata[k][dim];
        for cidx in k + 1..dim {
            rhs -= ata[k][cidx] * sol[cidx];
        }
        sol[k] = rhs / ata[k][k];
    }
    let b = sol[n];
    sol.truncate(n);
    Some((sol, b))
}

/// Seeded RNG helper so every test names its stream explicitly.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
