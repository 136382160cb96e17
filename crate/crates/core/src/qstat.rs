//! Soliton parameter sequences `q = (q_1, q_2, …)` and the scalars built
//! from them: densities, effective velocities, diffusion coefficients,
//! cumulant generating functions and rate functions.
//!
//! Under `ν_q` the slot counts `ζ_k(i)` are independent with
//! `P(ζ_k(i) = m) = q_k^m (1 − q_k)`.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Levels stored for infinite-support classes, at most.
pub const MAX_LEVELS: usize = 400;
/// Storage for infinite-support classes stops once `q_k` falls below this.
pub const TRUNCATION_CUTOFF: f64 = 1e-18;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QClass {
    /// Law of an i.i.d. Bernoulli configuration with ball density `rho`.
    Bernoulli { rho: Scalar },
    /// Law of a stationary two-state Markov chain, `a = p01·p10`.
    Markov { a: Scalar, b: Scalar },
    /// Finitely many nonzero entries, all stored.
    FiniteSupport,
    /// Entries beyond `levels` dropped; `tail_bound` bounds `Σ_{k>levels} k q_k`.
    GeneralTruncated { levels: usize, tail_bound: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QParams {
    /// `q[k-1] = q_k`; zero beyond the stored length.
    pub q: Vec<Scalar>,
    pub class: QClass,
    /// For infinite-support classes: the stored level count and a bound on
    /// the dropped tail `Σ_{k>levels} k q_k`.
    pub truncation: Option<(usize, f64)>,
}

impl QParams {
    /// A finite-support sequence.
    pub fn finite(values: Vec<Scalar>) -> Result<Self> {
        for (i, v) in values.iter().enumerate() {
            check_unit(v, &format!("q_{}", i + 1))?;
        }
        let mut q = values;
        trim_zeros(&mut q);
        Ok(QParams { q, class: QClass::FiniteSupport, truncation: None })
    }

    /// A general sequence known only up to `values.len()` levels.
    pub fn truncated(values: Vec<Scalar>, tail_bound: f64) -> Result<Self> {
        let levels = values.len();
        let mut p = QParams::finite(values)?;
        p.class = QClass::GeneralTruncated { levels, tail_bound };
        p.truncation = Some((levels, tail_bound));
        Ok(p)
    }

    /// The zero sequence (no solitons).
    pub fn zero() -> Self {
        QParams { q: Vec::new(), class: QClass::FiniteSupport, truncation: None }
    }

    /// `q_k`, zero beyond the stored levels.
    pub fn get(&self, k: usize) -> Scalar {
        if k == 0 {
            return Scalar::zero();
        }
        self.q.get(k - 1).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn get_f64(&self, k: usize) -> f64 {
        self.get(k).to_f64()
    }

    /// Number of stored levels.
    pub fn levels(&self) -> usize {
        self.q.len()
    }

    /// Largest `k` with `q_k > 0` among the stored levels.
    pub fn max_size(&self) -> Option<usize> {
        self.q.iter().rposition(|v| v.is_positive()).map(|i| i + 1)
    }

    /// Whether the law has infinitely many soliton sizes.
    pub fn infinite_support(&self) -> bool {
        !matches!(self.class, QClass::FiniteSupport)
    }

    /// `α_k = E[ζ_k] = q_k/(1 − q_k)`.
    pub fn alpha(&self, k: usize) -> Scalar {
        let q = self.get(k);
        &q / &(Scalar::one() - q.clone())
    }

    /// `β_k = Var[ζ_k] = q_k/(1 − q_k)²`.
    pub fn beta(&self, k: usize) -> Scalar {
        let q = self.get(k);
        &q / &(Scalar::one() - q.clone()).powi(2)
    }

    /// Markov parameters `(a, b)` for the Bernoulli and Markov classes.
    pub fn markov_ab(&self) -> Option<(Scalar, Scalar)> {
        match &self.class {
            QClass::Bernoulli { rho } => {
                let a = rho * &(Scalar::one() - rho.clone());
                Some((a.clone(), a))
            }
            QClass::Markov { a, b } => Some((a.clone(), b.clone())),
            _ => None,
        }
    }

    /// `K(q)`: 1 for the Markov classes, `None` when `q` is not known to be
    /// asymptotically Markov.
    pub fn markov_index(&self) -> Option<usize> {
        self.markov_ab().map(|_| 1)
    }
}

fn check_unit(v: &Scalar, name: &str) -> Result<()> {
    if v.to_f64() < 0.0 || v.cmp_value(&Scalar::one()) != std::cmp::Ordering::Less {
        return Err(Error::Domain(format!("{name} = {v} must lie in [0, 1)")));
    }
    Ok(())
}

fn trim_zeros(q: &mut Vec<Scalar>) {
    while q.last().is_some_and(|v| v.is_zero()) {
        q.pop();
    }
}

/// `q` for the Bernoulli product measure with density `rho ∈ (0, 1/2)`:
/// the Markov sequence with `a = b = ρ(1 − ρ)`.
pub fn q_from_bernoulli(rho: Scalar) -> Result<QParams> {
    if !rho.is_positive() || rho.cmp_value(&Scalar::ratio(1, 2)) != std::cmp::Ordering::Less {
        return Err(Error::Domain(format!("Bernoulli density {rho} must lie in (0, 1/2)")));
    }
    let a = &rho * &(Scalar::one() - rho.clone());
    let mut p = q_from_markov(a.clone(), a)?;
    p.class = QClass::Bernoulli { rho };
    Ok(p)
}

/// Checks `a > 0`, `0 ≤ b < 1`, `√a + √b < 1`.
pub fn check_markov(a: &Scalar, b: &Scalar) -> Result<()> {
    let one = Scalar::one();
    let bad = || Error::Domain(format!("Markov parameters a = {a}, b = {b} need a > 0, 0 <= b < 1, sqrt(a) + sqrt(b) < 1"));
    if !a.is_positive() || b.to_f64() < 0.0 || b.cmp_value(&one) != std::cmp::Ordering::Less {
        return Err(bad());
    }
    // √a + √b < 1  ⇔  a + b < 1 and 4ab < (1 − a − b)².
    let gap = &(&one - a) - b;
    if !gap.is_positive() {
        return Err(bad());
    }
    let lhs = &Scalar::int(4) * &(a * b);
    if lhs.cmp_value(&gap.powi(2)) != std::cmp::Ordering::Less {
        return Err(bad());
    }
    Ok(())
}

/// `q_1 = a`, `q_k = a b^{k−1} / ∏_{ℓ<k} (1 − q_ℓ)^{2(k−ℓ)}`, stored until
/// the entries drop below [`TRUNCATION_CUTOFF`].
pub fn q_from_markov(a: Scalar, b: Scalar) -> Result<QParams> {
    check_markov(&a, &b)?;
    let one = Scalar::one();
    let mut q = vec![a.clone()];
    // squares = ∏_{ℓ≤k} (1 − q_ℓ)², so q_{k+1} = q_k · b / squares.
    let mut squares = (&one - &a).powi(2);
    while q.len() < MAX_LEVELS {
        let last = q.last().unwrap();
        if last.to_f64() < TRUNCATION_CUTOFF {
            break;
        }
        let next = &(last * &b) / &squares;
        if next.is_zero() {
            break;
        }
        squares = &squares * &(&one - &next).powi(2);
        q.push(next);
    }
    let levels = q.len();
    let tail = markov_tail_bound(&q, &b, &squares);
    trim_zeros(&mut q);
    Ok(QParams { q, class: QClass::Markov { a, b }, truncation: Some((levels, tail)) })
}

/// Bound on `Σ_{j>K} j q_j` assuming the ratio `q_{j+1}/q_j`, which is
/// increasing in `j`, stays below `b/∏_{ℓ≤K}(1−q_ℓ)²` inflated by the
/// remaining factors.
fn markov_tail_bound(q: &[Scalar], b: &Scalar, squares: &Scalar) -> f64 {
    let k = q.len() as f64;
    let last = q.last().map(Scalar::to_f64).unwrap_or(0.0);
    if last == 0.0 || b.is_zero() {
        return 0.0;
    }
    let ratio = b.to_f64() / squares.to_f64();
    let c = ratio * (1.0 + 4.0 * last / (1.0 - ratio).max(1e-300));
    if c >= 1.0 {
        return f64::INFINITY;
    }
    last * (k * c / (1.0 - c) + c / ((1.0 - c) * (1.0 - c)))
}

/// Transition matrix `[[p00, p01], [p10, p11]]` of the two-state chain with
/// `p01 + p10 = 1 + a − b` and `p01·p10 = a`; `p01` is the smaller root, the
/// one giving stationary ball density below 1/2.
pub fn markov_transition(a: &Scalar, b: &Scalar) -> Result<[[Scalar; 2]; 2]> {
    check_markov(a, b)?;
    let one = Scalar::one();
    let sum = &(&one + a) - b;
    let disc = (&sum.powi(2) - &(&Scalar::int(4) * a)).sqrt()?;
    let half = Scalar::ratio(1, 2);
    let p01 = &(&sum - &disc) * &half;
    let p10 = &(&sum + &disc) * &half;
    Ok([[&one - &p01, p01], [p10.clone(), &one - &p10]])
}

/// `θq`: the law of `Ψ_1(η)` under `ν_q`. Drops `q_1`; the Markov classes
/// map to the Markov class with `(ab/(1−a)², b/(1−a)²)`.
pub fn theta_shift(q: &QParams) -> QParams {
    if let Some((a, b)) = q.markov_ab() {
        let one = Scalar::one();
        let denom = (&one - &a).powi(2);
        let a2 = &(&a * &b) / &denom;
        let b2 = &b / &denom;
        if a2.is_zero() {
            return QParams::zero();
        }
        if let Ok(p) = q_from_markov(a2, b2) {
            return p;
        }
    }
    let mut p = q.clone();
    if !p.q.is_empty() {
        p.q.remove(0);
    }
    match &mut p.class {
        QClass::GeneralTruncated { levels, tail_bound } => {
            *levels = levels.saturating_sub(1);
            p.truncation = Some((*levels, *tail_bound));
        }
        QClass::Bernoulli { .. } | QClass::Markov { .. } => {
            p.class = QClass::FiniteSupport;
            p.truncation = None;
        }
        QClass::FiniteSupport => {}
    }
    p
}

/// `θ^n q`.
pub fn theta_power(q: &QParams, n: usize) -> QParams {
    let mut p = q.clone();
    for _ in 0..n {
        p = theta_shift(&p);
    }
    p
}

/// `C_k q`: entries above `k` set to zero.
pub fn cut(q: &QParams, k: usize) -> QParams {
    let mut values: Vec<Scalar> = q.q.iter().take(k).cloned().collect();
    trim_zeros(&mut values);
    QParams { q: values, class: QClass::FiniteSupport, truncation: None }
}

/// Ball density `ρ(q) = μ_q(η(0) = 1)`.
///
/// Markov classes use `(1 − √(1 − 4a/(1+a−b)²))/2`; other classes use
/// `(1 − r̄_0)/2` with `1/r̄_0` the mean excursion length from the `r̄`
/// system on the stored levels.
pub fn density(q: &QParams) -> Result<Scalar> {
    match &q.class {
        QClass::Bernoulli { rho } => Ok(rho.clone()),
        QClass::Markov { a, b } => markov_density(a, b),
        _ => {
            let r0 = r_bar_truncated(q, 0)?;
            Ok(&(&Scalar::one() - &r0) * &Scalar::ratio(1, 2))
        }
    }
}

/// `ρ(θ^k q)` for the Markov classes, iterating only the parameters.
pub fn shifted_markov_density(q: &QParams, k: usize) -> Result<Option<Scalar>> {
    let Some((mut a, mut b)) = q.markov_ab() else {
        return Ok(None);
    };
    if k == 0 {
        return density(q).map(Some);
    }
    let one = Scalar::one();
    for _ in 0..k {
        if a.is_zero() {
            break;
        }
        let denom = (&one - &a).powi(2);
        a = &(&a * &b) / &denom;
        b = &b / &denom;
    }
    markov_density(&a, &b).map(Some)
}

fn markov_density(a: &Scalar, b: &Scalar) -> Result<Scalar> {
    if a.is_zero() {
        return Ok(Scalar::zero());
    }
    let one = Scalar::one();
    let s = &(&one + a) - b;
    let inner = &one - &(&(&Scalar::int(4) * a) / &s.powi(2));
    Ok(&(&one - &inner.sqrt()?) * &Scalar::ratio(1, 2))
}

/// `r̄_k(q) = E_{μ_{θ^k q}}[r(0)]`, the record density after skipping sizes
/// `≤ k`. Closed form `1 − 2ρ(θ^k q)` on the Markov classes, otherwise the
/// `r̄` system solved on the stored levels.
pub fn r_bar(q: &QParams, k: usize) -> Result<Scalar> {
    if let Some(rho) = shifted_markov_density(q, k)? {
        return Ok(&Scalar::one() - &(&Scalar::int(2) * &rho));
    }
    r_bar_truncated(q, k)
}

/// `1/r̄_k = 1 + 2 Σ_{ℓ>k} (ℓ−k) α_ℓ / r̄_ℓ`, solved downward from
/// `r̄_ℓ = 1` for every `ℓ` at or above the largest stored level.
pub fn r_bar_truncated(q: &QParams, k: usize) -> Result<Scalar> {
    let top = q.levels();
    if k >= top {
        return Ok(Scalar::one());
    }
    // inv[j] = 1 / r̄_j for j in k..=top.
    let mut inv = vec![Scalar::one(); top + 1];
    for j in (k..top).rev() {
        let mut acc = Scalar::one();
        for l in j + 1..=top {
            let term = &Scalar::int(2 * (l - j) as i64) * &(&q.alpha(l) * &inv[l]);
            acc = &acc + &term;
        }
        inv[j] = acc;
    }
    let r = inv[k].recip();
    if !r.is_positive() || !r.to_f64().is_finite() {
        return Err(Error::Tolerance(format!("r-bar system gave r_{k} = {r}")));
    }
    Ok(r)
}

/// Memoized `v^eff_m(θ^s q)` evaluator.
pub struct Velocities<'a> {
    q: &'a QParams,
    r_bar: HashMap<usize, Scalar>,
    table: HashMap<(usize, usize), Scalar>,
}

impl<'a> Velocities<'a> {
    pub fn new(q: &'a QParams) -> Self {
        Velocities { q, r_bar: HashMap::new(), table: HashMap::new() }
    }

    pub fn r_bar(&mut self, k: usize) -> Result<Scalar> {
        if let Some(v) = self.r_bar.get(&k) {
            return Ok(v.clone());
        }
        let v = r_bar(self.q, k)?;
        self.r_bar.insert(k, v.clone());
        Ok(v)
    }

    /// `v_m(θ^s q) = m r̄_{m+s}(q) + 2 Σ_{ℓ<m} ℓ α_{ℓ+s}(q) v_{m−ℓ}(θ^{ℓ+s} q)`.
    pub fn shifted(&mut self, m: usize, s: usize) -> Result<Scalar> {
        if m == 0 {
            return Ok(Scalar::zero());
        }
        if let Some(v) = self.table.get(&(m, s)) {
            return Ok(v.clone());
        }
        let mut acc = &Scalar::int(m as i64) * &self.r_bar(m + s)?;
        for l in 1..m {
            let alpha = self.q.alpha(l + s);
            if alpha.is_zero() {
                continue;
            }
            let inner = self.shifted(m - l, l + s)?;
            acc = &acc + &(&Scalar::int(2 * l as i64) * &(&alpha * &inner));
        }
        self.table.insert((m, s), acc.clone());
        Ok(acc)
    }

    pub fn velocity(&mut self, k: usize) -> Result<Scalar> {
        self.shifted(k, 0)
    }
}

/// `v^eff_k(q)`, the asymptotic speed of a tagged `k`-soliton.
pub fn effective_velocity(q: &QParams, k: usize) -> Result<Scalar> {
    if k == 0 {
        return Err(Error::Domain("soliton size must be at least 1".into()));
    }
    Velocities::new(q).velocity(k)
}

/// Which formula supplies `G_k` and `Λ^M_{q,k}`.
#[derive(Clone, Debug, PartialEq)]
enum Regime {
    /// Markov classes: depends on `ρ(θ^k q)`.
    Markov { rho: Scalar },
    /// `k` is the largest size: `M_k ≡ 0`.
    Largest,
    /// `k` is the second-largest size, `ℓ` the largest, `q_ℓ = weight`.
    SecondLargest { gap: usize, weight: f64 },
}

fn regime(q: &QParams, k: usize) -> Result<Regime> {
    if k == 0 {
        return Err(Error::Domain("soliton size must be at least 1".into()));
    }
    if let Some(rho) = shifted_markov_density(q, k)? {
        return Ok(Regime::Markov { rho });
    }
    if let QClass::GeneralTruncated { .. } = q.class {
        return Err(Error::Capability(format!(
            "k = {k}: q is neither asymptotically Markov nor finitely supported"
        )));
    }
    let sizes: Vec<usize> = (1..=q.levels()).filter(|&j| q.get(j).is_positive()).collect();
    let largest = sizes.last().copied();
    let second = sizes.len().checked_sub(2).map(|i| sizes[i]);
    if Some(k) == largest {
        return Ok(Regime::Largest);
    }
    if Some(k) == second {
        let l = largest.unwrap();
        return Ok(Regime::SecondLargest { gap: l - k, weight: q.get_f64(l) });
    }
    Err(Error::Capability(format!(
        "k = {k} is neither the largest nor the second-largest size of a finite-support q \
         (sizes present: {sizes:?})"
    )))
}

/// `G_k(q)`, the diffusion constant of the blocked-step count `M_k(n)`.
pub fn blocked_diffusion(q: &QParams, k: usize) -> Result<Scalar> {
    match regime(q, k)? {
        Regime::Markov { rho } => {
            let one = Scalar::one();
            let a = &Scalar::int(4) * &rho;
            let b = &one - &rho;
            let c = &one - &(&Scalar::int(2) * &rho);
            Ok(&(&a * &b) * &c)
        }
        Regime::Largest => Ok(Scalar::zero()),
        Regime::SecondLargest { gap, weight } => {
            if gap == 1 {
                // 4w (1 + 4w/(1−w)²)^{-3/2} / (1−w)²
                let s = 4.0 * weight / (1.0 - weight).powi(2);
                Ok(Scalar::float(s * (1.0 + s).powf(-1.5)))
            } else {
                Ok(Scalar::float(second_derivative(|x| {
                    single_size_log_pf(gap, weight, x)
                })))
            }
        }
    }
}

/// Central second difference with one Richardson step.
fn second_derivative(f: impl Fn(f64) -> f64) -> f64 {
    let d2 = |h: f64| (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
    let (h1, h2) = (2e-3, 1e-3);
    (4.0 * d2(h2) - d2(h1)) / 3.0
}

/// `D_k(q) = (v_k/r̄_k)² G_k + 4 Σ_{ℓ<k} (v_ℓ/r̄_ℓ)² v_{k−ℓ}(θ^ℓ q) β_ℓ`,
/// using `v_1(θ^{ℓ−1} q) = r̄_ℓ(q)`.
pub fn diffusion_coefficient(q: &QParams, k: usize) -> Result<Scalar> {
    let g = blocked_diffusion(q, k)?;
    let mut vel = Velocities::new(q);
    let vk = vel.velocity(k)?;
    let rk = vel.r_bar(k)?;
    let mut total = &(&vk / &rk).powi(2) * &g;
    for l in 1..k {
        let beta = q.beta(l);
        if beta.is_zero() {
            continue;
        }
        let ratio = (&vel.velocity(l)? / &vel.r_bar(l)?).powi(2);
        let term = &(&ratio * &vel.shifted(k - l, l)?) * &beta;
        total = &total + &(&Scalar::int(4) * &term);
    }
    Ok(total)
}

/// `Λ^M_{q,k}(λ) = lim (1/n) log E[exp(λ(n − M_k(n)))]`.
pub fn lambda_m(q: &QParams, k: usize, lambda: f64) -> Result<f64> {
    let regime = regime(q, k)?;
    if lambda == 0.0 {
        return Ok(0.0);
    }
    match regime {
        Regime::Markov { rho } => Ok(markov_log_pf(rho.to_f64(), lambda)),
        Regime::Largest => Ok(lambda),
        Regime::SecondLargest { gap, weight } => Ok(single_size_log_pf(gap, weight, lambda)),
    }
}

/// `log( (1−2ρ)/(2(1−ρ)) (e^λ + √(e^{2λ} − 1 + (1−2ρ)^{-2})) )`.
fn markov_log_pf(rho: f64, lambda: f64) -> f64 {
    let c = 1.0 - 2.0 * rho;
    let prefactor = c / (2.0 * (1.0 - rho));
    let e = lambda.exp();
    let root = (e * e - 1.0 + 1.0 / (c * c)).sqrt();
    prefactor.ln() + (e + root).ln()
}

/// Log Perron–Frobenius eigenvalue for the record count seen by a soliton
/// that all solitons of the single larger size overtake, `gap` sites per
/// step, with `weight = q` of that size.
///
/// States are `(η(x), W(x))` for a configuration with only `gap`-solitons:
/// `(0, j)` for `0 ≤ j < gap`, then `(1, j)` for `1 ≤ j ≤ gap`. Each step
/// reads the record indicator at one site (both neighbouring carrier loads
/// zero) and then advances `gap − 1` more sites.
pub fn single_size_log_pf(gap: usize, weight: f64, lambda: f64) -> f64 {
    let h = gap;
    let n = 2 * h;
    let zero = |j: usize| j; // (0, j)
    let ball = |j: usize| h + j - 1; // (1, j)
    let mut p = vec![vec![0.0; n]; n];
    p[zero(0)][zero(0)] = 1.0 - weight;
    p[zero(0)][ball(1)] = weight;
    for j in 1..h {
        p[zero(j)][zero(j - 1)] = 1.0;
        p[ball(j)][ball(j + 1)] = 1.0;
    }
    p[ball(h)][zero(h - 1)] = 1.0;
    let mut first = p.clone();
    first[zero(0)][zero(0)] *= lambda.exp();
    let mut kernel = first;
    for _ in 1..h {
        kernel = mat_mul(&kernel, &p);
    }
    perron_root(&kernel).ln()
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for l in 0..n {
            if a[i][l] != 0.0 {
                for j in 0..n {
                    out[i][j] += a[i][l] * b[l][j];
                }
            }
        }
    }
    out
}

/// Spectral radius of a nonnegative matrix with a primitive block, by
/// power iteration on `(I + A)` to avoid periodicity.
fn perron_root(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut v = vec![1.0; n];
    let mut estimate = 0.0;
    for _ in 0..100_000 {
        let mut w = v.clone();
        for i in 0..n {
            for j in 0..n {
                w[i] += a[i][j] * v[j];
            }
        }
        let norm = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let next: Vec<f64> = w.iter().map(|x| x / norm).collect();
        let change = next.iter().zip(&v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        v = next;
        let prev = estimate;
        estimate = norm - 1.0;
        if change < 1e-15 && (estimate - prev).abs() < 1e-15 * estimate.abs().max(1.0) {
            break;
        }
    }
    // Rayleigh-style refinement: ratio on the largest component.
    let i = (0..n).max_by(|&x, &y| v[x].total_cmp(&v[y])).unwrap();
    let av: f64 = (0..n).map(|j| a[i][j] * v[j]).sum();
    av / v[i]
}

/// `u_{q,k}(λ) = log E[exp(2λ ζ_k)] = log((1−q_k)/(1−e^{2λ} q_k))`,
/// infinite from `λ = log(1/q_k)/2` on.
pub fn u_slot(q: &QParams, k: usize, lambda: f64) -> f64 {
    let qk = q.get_f64(k);
    if qk == 0.0 {
        return 0.0;
    }
    let tilt = (2.0 * lambda).exp() * qk;
    if tilt >= 1.0 {
        return f64::INFINITY;
    }
    ((1.0 - qk) / (1.0 - tilt)).ln()
}

/// `U_{q,1}(λ) = λ`, `U_{q,k}(λ) = kλ + Σ_{ℓ<k} (k−ℓ) u_{q,ℓ}(U_{q,ℓ}(λ))`;
/// `+∞` outside the domain.
pub fn u_cumulant_raw(q: &QParams, k: usize, lambda: f64) -> f64 {
    let mut u_vals: Vec<f64> = Vec::with_capacity(k);
    for m in 1..=k {
        let mut total = m as f64 * lambda;
        for (l, &ul) in u_vals.iter().enumerate() {
            let l = l + 1;
            let slot = u_slot(q, l, ul);
            total += (m - l) as f64 * slot;
        }
        if !total.is_finite() {
            return f64::INFINITY;
        }
        u_vals.push(total);
    }
    u_vals[k - 1]
}

/// [`u_cumulant_raw`] with a domain error at or beyond `δ_{q,k}`.
pub fn u_cumulant(q: &QParams, k: usize, lambda: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("soliton size must be at least 1".into()));
    }
    let u = u_cumulant_raw(q, k, lambda);
    if !u.is_finite() {
        return Err(Error::Domain(format!(
            "lambda = {lambda} is outside the domain of U (delta = {})",
            domain_edge(q, k)
        )));
    }
    Ok(u)
}

/// `δ_{q,k} = sup{λ : U_{q,k}(λ) < ∞}`, by bisection to `1e-12`.
pub fn domain_edge(q: &QParams, k: usize) -> f64 {
    let finite = |x: f64| u_cumulant_raw(q, k, x).is_finite();
    let mut lo = 0.0;
    let mut hi = 1.0;
    while finite(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return f64::INFINITY;
        }
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if finite(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `Λ^Y_{q,k}(λ) = Λ^M_{q,k}(U_{q,k}(λ))`.
pub fn lambda_y(q: &QParams, k: usize, lambda: f64) -> Result<f64> {
    let u = u_cumulant(q, k, lambda)?;
    if lambda == 0.0 {
        return lambda_m(q, k, 0.0);
    }
    lambda_m(q, k, u)
}

/// `I(u) = sup_λ (λu − Λ^Y(λ))` by bracketed golden-section search;
/// `+∞` when no finite maximizer can be bracketed.
pub fn rate_function(q: &QParams, k: usize, u: f64) -> Result<f64> {
    // Fail early on unsupported (q, k).
    lambda_m(q, k, 0.0)?;
    if u < 0.0 {
        return Ok(f64::INFINITY);
    }
    let edge = domain_edge(q, k);
    let objective = |x: f64| match lambda_y(q, k, x) {
        Ok(v) => u * x - v,
        Err(_) => f64::NEG_INFINITY,
    };
    let slope = u - effective_velocity(q, k)?.to_f64();
    if slope == 0.0 {
        return Ok(0.0);
    }
    let direction = slope.signum();
    // Points 0, ±1/8, ±1/4, … until the concave objective turns down.
    let mut points = vec![0.0];
    let mut values = vec![objective(0.0)];
    let mut step = 0.125;
    loop {
        let mut x = direction * step;
        if edge.is_finite() && x >= edge {
            x = 0.5 * (points.last().unwrap() + edge);
        }
        let val = objective(x);
        let prev = *values.last().unwrap();
        points.push(x);
        values.push(val);
        if val < prev {
            break;
        }
        if step > 1e6 || (direction < 0.0 && step > 1e3 && val - prev < 1e-14) {
            // Increasing to a finite limit: the supremum is not attained.
            return Ok(if u == 0.0 { val } else { f64::INFINITY });
        }
        if edge.is_finite() && direction > 0.0 && edge - x < 1e-13 {
            return Ok(f64::INFINITY);
        }
        step *= 2.0;
    }
    let n = points.len();
    let lo_idx = n.saturating_sub(3);
    let (a, b) = (points[lo_idx], points[n - 1]);
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    Ok(golden_max(objective, a, b))
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-12 {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd).max(f(0.5 * (a + b)))
}

/// All per-size scalars up to `max_k`.
#[derive(Clone, Debug, Serialize)]
pub struct ScalarTable {
    pub q: QParams,
    pub rows: Vec<ScalarRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalarRow {
    pub k: usize,
    pub q: Scalar,
    pub alpha: Scalar,
    pub beta: Scalar,
    pub r_bar: Scalar,
    /// `ρ(θ^k q)`.
    pub shifted_density: Scalar,
    pub velocity: Scalar,
    /// `v_{k−ℓ}(θ^ℓ q)` for `ℓ = 0, …, k−1`.
    pub shifted_velocities: Vec<Scalar>,
    /// `G_k` where supported.
    pub blocked_diffusion: Option<Scalar>,
    /// `D_k` where supported.
    pub diffusion: Option<Scalar>,
    /// Why `G_k`/`D_k` are missing.
    pub unsupported: Option<String>,
}

pub fn scalar_table(q: &QParams, max_k: usize) -> Result<ScalarTable> {
    let mut vel = Velocities::new(q);
    let mut rows = Vec::with_capacity(max_k);
    for k in 1..=max_k {
        let r = vel.r_bar(k)?;
        let shifted_density = &(&Scalar::one() - &r) * &Scalar::ratio(1, 2);
        let velocity = vel.velocity(k)?;
        let mut shifted_velocities = Vec::with_capacity(k);
        for l in 0..k {
            shifted_velocities.push(vel.shifted(k - l, l)?);
        }
        let (g, d, why) = match blocked_diffusion(q, k) {
            Ok(g) => (Some(g), Some(diffusion_coefficient(q, k)?), None),
            Err(Error::Capability(msg)) => (None, None, Some(msg)),
            Err(e) => return Err(e),
        };
        rows.push(ScalarRow {
            k,
            q: q.get(k),
            alpha: q.alpha(k),
            beta: q.beta(k),
            r_bar: r,
            shifted_density,
            velocity,
            shifted_velocities,
            blocked_diffusion: g,
            diffusion: d,
            unsupported: why,
        });
    }
    Ok(ScalarTable { q: q.clone(), rows })
}
