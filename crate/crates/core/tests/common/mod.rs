//! Independent oracles shared by the integration and acceptance suites.
//!
//! Everything here recomputes expected values through routes the library
//! does not use: double-double accumulation, adaptive quadrature, active-set
//! enumeration, exhaustive partition search.

#![allow(dead_code)]
// Oracles keep explicit index arithmetic so they read like the formulas
// they implement.
#![allow(clippy::needless_range_loop, clippy::too_many_arguments)]

/// Double-double value: an unevaluated sum hi + lo with |lo| <= ulp(hi)/2.
#[derive(Debug, Clone, Copy)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn from(v: f64) -> Dd {
        Dd { hi: v, lo: 0.0 }
    }

    pub fn value(self) -> f64 {
        self.hi + self.lo
    }

    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        (s, err)
    }

    fn two_prod(a: f64, b: f64) -> (f64, f64) {
        let p = a * b;
        let err = a.mul_add(b, -p);
        (p, err)
    }

    pub fn add(self, other: Dd) -> Dd {
        let (s, e) = Dd::two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        let (hi, lo) = Dd::two_sum(s, e);
        Dd { hi, lo }
    }

    pub fn add_f64(self, v: f64) -> Dd {
        self.add(Dd::from(v))
    }

    pub fn sub(self, other: Dd) -> Dd {
        self.add(Dd {
            hi: -other.hi,
            lo: -other.lo,
        })
    }

    pub fn mul(self, other: Dd) -> Dd {
        let (p, e) = Dd::two_prod(self.hi, other.hi);
        let e = e + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = Dd::two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn div_f64(self, d: f64) -> Dd {
        let q1 = self.hi / d;
        let r = self.sub(Dd::from(q1).mul(Dd::from(d)));
        let q2 = r.value() / d;
        let (hi, lo) = Dd::two_sum(q1, q2);
        Dd { hi, lo }
    }

    pub fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let x = self.hi.sqrt();
        // One Newton step in double-double.
        let x_dd = Dd::from(x);
        let r = self.sub(x_dd.mul(x_dd));
        let correction = r.value() / (2.0 * x);
        let (hi, lo) = Dd::two_sum(x, correction);
        Dd { hi, lo }
    }
}

fn dd_sum(values: impl Iterator<Item = f64>) -> Dd {
    values.fold(Dd::ZERO, |acc, v| acc.add_f64(v))
}

/// Mean and sample standard deviation (divisor n-1) in double-double.
pub fn dd_mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len();
    let mean = dd_sum(x.iter().copied()).div_f64(n as f64);
    if n < 2 {
        return (mean.value(), 0.0);
    }
    let ss = x.iter().fold(Dd::ZERO, |acc, &v| {
        let d = Dd::from(v).sub(mean);
        acc.add(d.mul(d))
    });
    let var = ss.div_f64((n - 1) as f64);
    (mean.value(), var.sqrt().value())
}

/// Pearson r evaluated directly from its definition in double-double.
pub fn dd_pearson(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = dd_sum(x.iter().copied()).div_f64(n);
    let my = dd_sum(y.iter().copied()).div_f64(n);
    let mut cross = Dd::ZERO;
    let mut sxx = Dd::ZERO;
    let mut syy = Dd::ZERO;
    for (&a, &b) in x.iter().zip(y) {
        let dx = Dd::from(a).sub(mx);
        let dy = Dd::from(b).sub(my);
        cross = cross.add(dx.mul(dy));
        sxx = sxx.add(dx.mul(dx));
        syy = syy.add(dy.mul(dy));
    }
    let denom = sxx.mul(syy).sqrt();
    (cross.value() / denom.value()).clamp(-1.0, 1.0)
}

/// Adaptive Simpson quadrature to a fixed absolute tolerance.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, tol * 0.5, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, tol * 0.5, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 50)
}

/// Two-tailed Student-t probability by quadrature.
///
/// With the substitution t = sqrt(df) tan(theta), the density integral
/// becomes an integral of cos(theta)^(df-1) over [theta0, pi/2], normalized
/// by the half-line integral; no gamma functions involved.
pub fn quadrature_t_two_tailed(t: f64, df: f64) -> f64 {
    let t = t.abs();
    let theta0 = (t / df.sqrt()).atan();
    let integrand = move |theta: f64| {
        let c: f64 = theta.cos();
        if c <= 0.0 {
            0.0
        } else {
            ((df - 1.0) * c.ln()).exp()
        }
    };
    let half = std::f64::consts::FRAC_PI_2;
    let tail = adaptive_simpson(&integrand, theta0, half, 1e-14);
    let full = adaptive_simpson(&integrand, 0.0, half, 1e-14);
    (tail / full).clamp(0.0, 1.0)
}

/// P(|Z| > 2) for a standard normal, by quadrature of the density.
pub fn quadrature_two_sigma_tail() -> f64 {
    let density =
        |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    1.0 - adaptive_simpson(&density, -2.0, 2.0, 1e-14)
}

/// Global minimum of (1/2) a'Ka over {0 <= a_i <= cap, sum a = 1} by
/// enumerating active sets (free / at-zero / at-cap) and solving the
/// equality-constrained KKT system on the free block.
pub struct BruteQp {
    pub objective: f64,
    pub alpha: Vec<f64>,
    pub rho: f64,
}

pub fn brute_force_ocsvm(gram: &[Vec<f64>], cap: f64) -> BruteQp {
    let l = gram.len();
    assert!(l <= 10, "active-set enumeration is exponential");
    let mut best: Option<BruteQp> = None;
    let mut state = vec![0u8; l]; // 0 = zero, 1 = cap, 2 = free

    loop {
        if let Some(candidate) = try_active_set(gram, cap, &state) {
            if best.as_ref().is_none_or(|b| candidate.objective < b.objective) {
                best = Some(candidate);
            }
        }
        // Increment the base-3 counter.
        let mut i = 0;
        loop {
            if i == l {
                return best.expect("at least one feasible active set");
            }
            state[i] += 1;
            if state[i] < 3 {
                break;
            }
            state[i] = 0;
            i += 1;
        }
    }
}

fn try_active_set(gram: &[Vec<f64>], cap: f64, state: &[u8]) -> Option<BruteQp> {
    let l = gram.len();
    let free: Vec<usize> = (0..l).filter(|&i| state[i] == 2).collect();
    let capped: Vec<usize> = (0..l).filter(|&i| state[i] == 1).collect();
    let mass = 1.0 - cap * capped.len() as f64;

    let mut alpha = vec![0.0; l];
    for &i in &capped {
        alpha[i] = cap;
    }

    let rho;
    if free.is_empty() {
        if mass.abs() > 1e-9 {
            return None;
        }
        rho = f64::NAN; // fixed below from the gradient bracket
    } else {
        if mass < -1e-12 || mass > cap * free.len() as f64 + 1e-12 {
            return None;
        }
        // Unknowns: alpha_free, rho. Equations: (K alpha)_F = rho, sum = mass.
        let nf = free.len();
        let dim = nf + 1;
        let mut a = vec![vec![0.0; dim + 1]; dim];
        for (r, &i) in free.iter().enumerate() {
            for (c, &j) in free.iter().enumerate() {
                a[r][c] = gram[i][j];
            }
            a[r][nf] = -1.0; // -rho
            let fixed: f64 = capped.iter().map(|&j| gram[i][j] * cap).sum();
            a[r][dim] = -fixed;
        }
        for c in 0..nf {
            a[nf][c] = 1.0;
        }
        a[nf][dim] = mass;

        let solution = gauss_solve(&mut a)?;
        for (idx, &i) in free.iter().enumerate() {
            let v = solution[idx];
            if !(-1e-9..=cap + 1e-9).contains(&v) {
                return None;
            }
            alpha[i] = v.clamp(0.0, cap);
        }
        rho = solution[nf];
    }

    let mut objective = 0.0;
    let mut gradient = vec![0.0; l];
    for i in 0..l {
        for j in 0..l {
            gradient[i] += gram[i][j] * alpha[j];
        }
        objective += alpha[i] * gradient[i];
    }
    objective *= 0.5;

    let rho = if rho.is_nan() {
        // All-at-bounds: midpoint of the KKT bracket.
        let lower = (0..l)
            .filter(|&i| state[i] == 1)
            .map(|i| gradient[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let upper = (0..l)
            .filter(|&i| state[i] == 0)
            .map(|i| gradient[i])
            .fold(f64::INFINITY, f64::min);
        match (lower.is_finite(), upper.is_finite()) {
            (true, true) => 0.5 * (lower + upper),
            (true, false) => lower,
            (false, true) => upper,
            (false, false) => 0.0,
        }
    } else {
        rho
    };

    Some(BruteQp {
        objective,
        alpha,
        rho,
    })
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn gauss_solve(a: &mut [Vec<f64>]) -> Option<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&r1, &r2| {
            a[r1][col]
                .abs()
                .partial_cmp(&a[r2][col].abs())
                .expect("finite")
        })?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            for c in col..=n {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut v = a[r][n];
        for c in (r + 1)..n {
            v -= a[r][c] * x[c];
        }
        x[r] = v / a[r][r];
    }
    Some(x)
}

/// Exhaustive minimum-inertia partition of points into exactly k non-empty
/// groups. Returns (inertia, assignment with group ids canonicalized by
/// first appearance).
pub fn best_partition(points: &[Vec<f64>], k: usize) -> (f64, Vec<usize>) {
    let n = points.len();
    assert!(k >= 1 && k <= n && n <= 10);
    let mut best_cost = f64::INFINITY;
    let mut best_assign = Vec::new();
    let mut assign = vec![0usize; n];

    loop {
        let used: std::collections::HashSet<usize> = assign.iter().copied().collect();
        if used.len() == k && *assign.iter().max().unwrap() < k {
            let cost = partition_cost(points, &assign, k);
            if cost < best_cost {
                best_cost = cost;
                best_assign = assign.clone();
            }
        }
        let mut i = 0;
        loop {
            if i == n {
                return (best_cost, canonicalize(&best_assign));
            }
            assign[i] += 1;
            if assign[i] < k {
                break;
            }
            assign[i] = 0;
            i += 1;
        }
    }
}

fn partition_cost(points: &[Vec<f64>], assign: &[usize], k: usize) -> f64 {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &g) in points.iter().zip(assign) {
        counts[g] += 1;
        for (s, &v) in sums[g].iter_mut().zip(p) {
            *s += v;
        }
    }
    let mut cost = 0.0;
    for (p, &g) in points.iter().zip(assign) {
        for (&s, &v) in sums[g].iter().zip(p) {
            let mean = s / counts[g] as f64;
            let d = v - mean;
            cost += d * d;
        }
    }
    cost
}

/// Relabels groups by order of first appearance, so partitions compare
/// independently of arbitrary group numbering.
pub fn canonicalize(assign: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    let mut next = 0usize;
    assign
        .iter()
        .map(|&g| {
            *map.entry(g).or_insert_with(|| {
                let id = next;
                next += 1;
                id
            })
        })
        .collect()
}

/// Two-sample Kolmogorov-Smirnov statistic. ECDF gaps are evaluated only
/// between distinct values, so heavily tied (integer) samples are handled
/// correctly.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(|p, q| p.partial_cmp(q).expect("finite"));
    xb.sort_by(|p, q| p.partial_cmp(q).expect("finite"));
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xa.len() || j < xb.len() {
        let v = match (xa.get(i), xb.get(j)) {
            (Some(&va), Some(&vb)) => va.min(vb),
            (Some(&va), None) => va,
            (None, Some(&vb)) => vb,
            (None, None) => break,
        };
        while i < xa.len() && xa[i] == v {
            i += 1;
        }
        while j < xb.len() && xb[j] == v {
            j += 1;
        }
        let fa = i as f64 / xa.len() as f64;
        let fb = j as f64 / xb.len() as f64;
        d = d.max((fa - fb).abs());
    }
    d
}

/// KS critical value at the 1% level.
pub fn ks_critical_1pct(n: usize, m: usize) -> f64 {
    1.628 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}
