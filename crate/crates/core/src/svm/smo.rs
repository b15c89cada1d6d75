//! SMO solver for the one-class dual.
//!
//! State: alpha (init 1/l), gradient G = K alpha. Each step picks the
//! maximal violating pair (argmin G over alpha_i < C, argmax G over
//! alpha_j > 0), moves mass from j to i along the equality constraint, and
//! updates the gradient with the two kernel rows. Convergence when
//! max G - min G drops to the tolerance.

use super::{kernel_eval_unchecked, KernelParams, TrainConfig};
use crate::num::Scalar;
use std::collections::HashMap;

pub(super) struct Solution<F> {
    pub alpha: Vec<F>,
    pub gradient: Vec<F>,
    pub rho: F,
    pub objective: F,
    pub kkt_violation: F,
    pub iterations: u64,
    pub margin_sv_count: usize,
    pub converged: bool,
}

/// Kernel rows, either fully precomputed or served from an LRU cache.
/// Both paths compute identical values, so the solution is cache-agnostic.
enum Rows<'a, F> {
    Full(Vec<F>, usize),
    Lru {
        rows: &'a [Vec<F>],
        kernel: &'a KernelParams<F>,
        cache: HashMap<usize, (Vec<F>, u64)>,
        capacity: usize,
        clock: u64,
    },
}

impl<'a, F: Scalar> Rows<'a, F> {
    fn new(rows: &'a [Vec<F>], kernel: &'a KernelParams<F>, config: &TrainConfig<F>) -> Self {
        let l = rows.len();
        if l <= config.full_gram_limit {
            let mut gram = vec![F::zero(); l * l];
            for i in 0..l {
                for j in i..l {
                    let v = kernel_eval_unchecked(&rows[i], &rows[j], kernel);
                    gram[i * l + j] = v;
                    gram[j * l + i] = v;
                }
            }
            Rows::Full(gram, l)
        } else {
            Rows::Lru {
                rows,
                kernel,
                cache: HashMap::new(),
                capacity: config.lru_rows.max(2),
                clock: 0,
            }
        }
    }

    fn row(&mut self, i: usize) -> &[F] {
        match self {
            Rows::Full(gram, l) => &gram[i * *l..(i + 1) * *l],
            Rows::Lru {
                rows,
                kernel,
                cache,
                capacity,
                clock,
            } => {
                *clock += 1;
                let stamp = *clock;
                if !cache.contains_key(&i) {
                    if cache.len() >= *capacity {
                        let oldest = cache
                            .iter()
                            .min_by_key(|(_, (_, t))| *t)
                            .map(|(&k, _)| k)
                            .expect("cache non-empty");
                        cache.remove(&oldest);
                    }
                    let computed: Vec<F> = rows
                        .iter()
                        .map(|r| kernel_eval_unchecked(&rows[i], r, kernel))
                        .collect();
                    cache.insert(i, (computed, stamp));
                }
                let entry = cache.get_mut(&i).expect("row just inserted");
                entry.1 = stamp;
                &entry.0
            }
        }
    }
}

pub(super) fn solve<F: Scalar>(
    rows: &[Vec<F>],
    nu: F,
    kernel: &KernelParams<F>,
    config: &TrainConfig<F>,
) -> Solution<F> {
    let l = rows.len();
    let cap = F::one() / (nu * F::from_count(l));
    let mut kernel_rows = Rows::new(rows, kernel, config);

    let init = F::one() / F::from_count(l);
    let mut alpha = vec![init; l];
    let mut gradient = vec![F::zero(); l];
    for (i, g_out) in gradient.iter_mut().enumerate() {
        let row = kernel_rows.row(i);
        let mut g = F::zero();
        for (&a, &k) in alpha.iter().zip(row) {
            g = g + a * k;
        }
        *g_out = g;
    }

    let tau = F::from_f64_lossy(1e-12);
    // After the requested tolerance is met, keep draining mass until the
    // gap is near machine scale. The uniform start spreads alpha across
    // interior points; without the drain they linger as spurious "margin"
    // support vectors and skew rho.
    let drain_tol = F::from_f64_lossy(1e-10).min(config.tol);
    let mut iterations = 0u64;
    let mut violation;
    let mut converged = false;
    loop {
        // Maximal violating pair.
        let mut up: Option<(usize, F)> = None; // argmin G with alpha < C
        let mut low: Option<(usize, F)> = None; // argmax G with alpha > 0
        for i in 0..l {
            let g = gradient[i];
            if alpha[i] < cap && up.is_none_or(|(_, best)| g < best) {
                up = Some((i, g));
            }
            if alpha[i] > F::zero() && low.is_none_or(|(_, best)| g > best) {
                low = Some((i, g));
            }
        }
        let ((i, g_i), (j, g_j)) = match (up, low) {
            (Some(u), Some(d)) => (u, d),
            // nu = 1 forces every alpha to the cap: nothing can move.
            _ => {
                violation = F::zero();
                converged = true;
                break;
            }
        };
        violation = g_j - g_i;
        if violation <= config.tol {
            converged = true;
        }
        if violation <= drain_tol || iterations >= config.max_iter {
            break;
        }
        iterations += 1;

        let (k_ii, k_ij) = {
            let row_i = kernel_rows.row(i);
            (row_i[i], row_i[j])
        };
        let k_jj = kernel_rows.row(j)[j];
        let eta = (k_ii + k_jj - k_ij - k_ij).max(tau);
        let step = (violation / eta).min(cap - alpha[i]).min(alpha[j]);
        if step.is_nan() || step <= F::zero() {
            // Numerically stuck; the gap can shrink no further.
            break;
        }
        alpha[i] = alpha[i] + step;
        alpha[j] = alpha[j] - step;

        // G_k += step * (K_ki - K_kj)
        {
            let row_i = kernel_rows.row(i).to_vec();
            let row_j = kernel_rows.row(j);
            for k in 0..l {
                gradient[k] = gradient[k] + step * (row_i[k] - row_j[k]);
            }
        }
    }

    let rho = compute_rho(&alpha, &gradient, cap);
    let objective = alpha
        .iter()
        .zip(&gradient)
        .fold(F::zero(), |acc, (&a, &g)| acc + a * g)
        * F::from_f64_lossy(0.5);
    let margin_sv_count = alpha
        .iter()
        .filter(|&&a| is_margin(a, cap))
        .count();

    Solution {
        alpha,
        gradient,
        rho,
        objective,
        kkt_violation: violation,
        iterations,
        margin_sv_count,
        converged,
    }
}

fn is_margin<F: Scalar>(alpha: F, cap: F) -> bool {
    let cushion = cap * F::from_f64_lossy(1e-8);
    alpha > cushion && alpha < cap - cushion
}

/// rho is the decision value averaged over margin support vectors; with
/// none available it is the midpoint of the KKT bracket
/// [max G over alpha = C, min G over alpha = 0].
fn compute_rho<F: Scalar>(alpha: &[F], gradient: &[F], cap: F) -> F {
    let mut sum = F::zero();
    let mut count = 0usize;
    for (&a, &g) in alpha.iter().zip(gradient) {
        if is_margin(a, cap) {
            sum = sum + g;
            count += 1;
        }
    }
    if count > 0 {
        return sum / F::from_count(count);
    }

    let cushion = cap * F::from_f64_lossy(1e-8);
    let mut lower: Option<F> = None; // from alpha at cap: G <= rho
    let mut upper: Option<F> = None; // from alpha at zero: G >= rho
    for (&a, &g) in alpha.iter().zip(gradient) {
        if a >= cap - cushion && lower.is_none_or(|v| g > v) {
            lower = Some(g);
        }
        if a <= cushion && upper.is_none_or(|v| g < v) {
            upper = Some(g);
        }
    }
    match (lower, upper) {
        (Some(lo), Some(hi)) => (lo + hi) * F::from_f64_lossy(0.5),
        (Some(lo), None) => lo,
        (None, Some(hi)) => hi,
        (None, None) => F::zero(),
    }
}
