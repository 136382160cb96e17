//! The `k`-skip map `Ψ_k`, which deletes every seat of level at most `k`,
//! and the audit of the soliton counting identities built on it.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::Configuration;
use crate::qstat::{QParams, Velocities};
use crate::scalar::Scalar;
use crate::seat::{seat_decompose, SeatLabel, SeatView, SlotArray};
use crate::tagged::{History, Tag};

/// `Ψ_k(η)` together with the anchor `ξ_k(η, 0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SkipResult {
    pub image: Configuration,
    /// `ξ_k(η, 0)`; the first record of the image sits at `-origin_shift`.
    pub origin_shift: i64,
}

/// `Ψ_k(η)(x) = η(s_k(η, x + ξ_k(η, 0)))`.
pub fn skip(config: &Configuration, k: usize) -> SkipResult {
    skip_with_view(config, &seat_decompose(config), k)
}

/// [`skip`] reusing an existing seat decomposition of `config`.
pub fn skip_with_view(config: &Configuration, view: &SeatView, k: usize) -> SkipResult {
    let (lo, hi) = view.range();
    let shift = view.xi(k, 0);
    let start = view.xi(k, lo) - shift;
    let mut bits = Vec::with_capacity((hi - lo + 1).max(0) as usize);
    for y in lo..=hi {
        let counted = match view.label(y) {
            SeatLabel::Record => true,
            SeatLabel::Up(l) | SeatLabel::Down(l) => l > k,
        };
        if counted {
            bits.push(config.get(y));
        }
    }
    SkipResult {
        image: Configuration::from_bits(start, bits),
        origin_shift: shift,
    }
}

/// `Ψ_k(η̃)`, the skip map applied to the recentered configuration.
pub fn skip_recentered(config: &Configuration, k: usize) -> Configuration {
    skip(&config.recenter(), k).image
}

/// `J_k(η, i)`: the slot of the `i`-th nonempty `k`-slot, counting `1, 2, …`
/// rightwards from slot 0 and `0, −1, …` leftwards from slot −1.
pub fn slot_stop(slots: &SlotArray, k: usize, i: i64) -> Option<i64> {
    let level = slots.zeta.get(&k)?;
    let nonempty = |(&j, &c): (&i64, &u64)| (c > 0).then_some(j);
    if i >= 1 {
        level.range(0..).filter_map(nonempty).nth((i - 1) as usize)
    } else {
        level.range(..0).rev().filter_map(nonempty).nth((-i) as usize)
    }
}

/// Slot indices `J_k(i)` of every nonempty slot.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CrossingIndices {
    /// `(k, i) → J_k(i)`.
    pub stops: BTreeMap<(usize, i64), i64>,
}

impl CrossingIndices {
    pub fn from_slots(slots: &SlotArray) -> Self {
        let mut stops = BTreeMap::new();
        for (&k, level) in &slots.zeta {
            let right = level.range(0..).filter(|e| *e.1 > 0);
            for (n, (&j, _)) in right.enumerate() {
                stops.insert((k, n as i64 + 1), j);
            }
            let left = level.range(..0).rev().filter(|e| *e.1 > 0);
            for (n, (&j, _)) in left.enumerate() {
                stops.insert((k, -(n as i64)), j);
            }
        }
        Self { stops }
    }

    pub fn stop(&self, k: usize, i: i64) -> Result<i64> {
        self.stops
            .get(&(k, i))
            .copied()
            .ok_or_else(|| Error::NotFound(format!("nonempty {k}-slot number {i}")))
    }
}

/// `σ^{(i)}_{k,ℓ}(t)`: the least volume index `j` of an `(ℓ−k)`-soliton in
/// `Ψ_k(η̃)` whose position at time `t` is at least `stop = J_k(η̃, i)`.
///
/// `skipped` is the history of `Ψ_k(η̃)` and `size = ℓ − k`. When every such
/// soliton is left of `stop` the index one past the last is returned.
pub fn crossing_index(skipped: &History, size: usize, stop: i64, t: usize) -> Result<i64> {
    let reps = skipped.representative_positions(size, t);
    let last = reps
        .last()
        .map(|r| r.0)
        .ok_or_else(|| Error::NotFound(format!("no {size}-solitons after skipping")))?;
    let p = reps.partition_point(|&(_, x)| x < stop);
    Ok(reps.get(p).map_or(last + 1, |r| r.0))
}

/// One audited relation `lower ≤ value ≤ upper`; identities have
/// `lower == upper`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub time: usize,
    pub value: i64,
    pub lower: i64,
    pub upper: i64,
}

impl Check {
    pub fn equal(name: impl Into<String>, time: usize, value: i64, expected: i64) -> Self {
        Self { name: name.into(), time, value, lower: expected, upper: expected }
    }

    /// A yes/no identity, recorded as `1 ∈ [1, 1]` when it holds.
    pub fn holds(name: impl Into<String>, time: usize, ok: bool) -> Self {
        Self::equal(name, time, i64::from(ok), 1)
    }

    pub fn passed(&self) -> bool {
        self.lower <= self.value && self.value <= self.upper
    }
}

/// Outcome of [`audit_counting`].
#[derive(Clone, Debug, Serialize)]
pub struct CountingAudit {
    pub k: usize,
    pub natural_index: i64,
    pub volume_index: i64,
    pub steps: usize,
    pub checks: Vec<Check>,
    /// The recentered configuration, in the lattice text format.
    pub config: String,
}

impl CountingAudit {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }

    /// `Ok` when every check passed, otherwise an identity error naming the
    /// first failure and the configuration.
    pub fn into_result(self) -> Result<Self> {
        let msg = self.failures().next().map(|c| {
            format!(
                "{} at time {}: {} not in [{}, {}] for {}",
                c.name, c.time, c.value, c.lower, c.upper, self.config
            )
        });
        match msg {
            None => Ok(self),
            Some(m) => Err(Error::Identity(m)),
        }
    }
}

fn slot_sum(slots: &SlotArray, k: usize, from: i64, to: i64) -> i64 {
    match slots.zeta.get(&k) {
        Some(level) if from <= to => level.range(from..=to).map(|(_, &c)| c as i64).sum(),
        _ => 0,
    }
}

/// Checks, at every time `t ≤ n`, the counting identities for the `k`-soliton
/// with natural index `i`:
///
/// - the position formula `X(t) = X(0) + k(t − M_k(t)) + 2 Σ_ℓ ℓ Σ_m N_{k,ℓ}(m)`;
/// - overtaken `ℓ`-solitons as a slot sum along the `(k−ℓ)`-soliton of
///   `Ψ_ℓ(η̃)`;
/// - blocked steps as a record count at `J_k` in `Tᵐ Ψ_k(η̃)`;
/// - `−A(0) ≤ M_k(t) − 2 Σ_ℓ M_{k,ℓ}(t) ≤ A(t)`, where `A(t)` counts the
///   larger solitons interacting with the tagged one at time `t`; with
///   `A(0) = 0` and `A(t) ≤ 1` this is `2 Σ M_{k,ℓ} ≤ M_k ≤ 1 + 2 Σ M_{k,ℓ}`;
/// - each `M_{k,ℓ}` against the slot sum over the groups crossing the
///   tagged soliton, up to the partly crossed groups at either end.
///
/// Counters come from direct tracking of every soliton, so the two sides are
/// computed independently.
pub fn audit_counting(config: &Configuration, k: usize, i: i64, n: usize) -> Result<CountingAudit> {
    let eta = config.recenter();
    let view = seat_decompose(&eta);
    let slots = view.slots();
    let base = History::run(&eta, n)?;
    let j = base.resolve(k, Tag::Natural(i))?;
    let set0 = base.set(0);
    let vol = set0.volume_index(k, j);
    let tr = base.trajectory(k, j);
    let kmax = set0.max_size();
    let mut checks = Vec::new();

    for t in 0..=n {
        let mut x = tr.positions[0] + (k as i64) * (t as i64 - tr.blocked(t) as i64);
        for l in 1..k {
            x += 2 * l as i64 * tr.overtaken_total(l, t) as i64;
        }
        checks.push(Check::equal("position formula", t, tr.positions[t], x));
    }

    for l in 1..k {
        let skipped = History::run(&skip(&eta, l).image, n)?;
        let jj = skipped.resolve(k - l, Tag::Natural(i))?;
        let p0 = skipped.position(k - l, jj, 0);
        for t in 0..=n {
            let pt = skipped.position(k - l, jj, t);
            checks.push(Check::equal(
                format!("overtaken {l}-solitons as slot sum"),
                t,
                tr.overtaken_total(l, t) as i64,
                slot_sum(&slots, l, p0 + 1, pt),
            ));
        }
    }

    let stop = slot_stop(&slots, k, vol)
        .ok_or_else(|| Error::Internal(format!("no {k}-slot for volume index {vol}")))?;
    let own = History::run(&skip(&eta, k).image, n)?;
    let open_start = set0.interacting_larger(k, j).len() as i64;
    let mut open = 0i64;
    for t in 0..=n {
        if t > 0 && !own.config(t - 1).records().is_record(stop) {
            open += 1;
        }
        checks.push(Check::equal("blocked steps as record count", t, tr.blocked(t) as i64, open));
        // Interactions already under way at time 0 or still open at time t
        // shift the count by at most one per larger soliton involved.
        let over: i64 = (k + 1..=kmax).map(|l| tr.overtaker_total(l, t) as i64).sum();
        let open_now = base.set(t).interacting_larger(k, base.index_at(k, j, t)).len() as i64;
        checks.push(Check {
            name: "blocked steps bounded by overtakers".into(),
            time: t,
            value: tr.blocked(t) as i64,
            lower: 2 * over - open_start,
            upper: 2 * over + open_now,
        });
        if open_start == 0 && open_now <= 1 {
            checks.push(Check {
                name: "blocked steps within one of twice the overtakers".into(),
                time: t,
                value: tr.blocked(t) as i64,
                lower: 2 * over,
                upper: 1 + 2 * over,
            });
        }
    }

    for l in k + 1..=kmax {
        if own.set(0).of_size(l - k).is_empty() {
            continue;
        }
        let s0 = crossing_index(&own, l - k, stop, 0)?;
        let end0 = slot_stop(&slots, l, s0).unwrap_or(i64::MAX - 1);
        // Volume of the ℓ-group with volume index `g`, zero when absent.
        let vol_of = |g: i64| slot_stop(&slots, l, g).map_or(0, |x| slots.get(l, x) as i64);
        let behind0 = (vol_of(s0 - 1) - 1).max(0);
        for t in 0..=n {
            let st = crossing_index(&own, l - k, stop, t)?;
            let from = slot_stop(&slots, l, st).unwrap_or(i64::MAX - 1);
            let crossed = slot_sum(&slots, l, from, end0 - 1);
            let value = tr.overtaker_total(l, t) as i64;
            // Members of a group cross one by one, so the groups straddling
            // the tagged soliton at times 0 and t are only partly counted.
            let behind = (vol_of(st - 1) - 1).max(0);
            checks.push(Check {
                name: format!("{l}-soliton overtakers between crossing indices"),
                time: t,
                value,
                lower: crossed - behind0,
                upper: crossed + behind,
            });
            if behind0 == 0 && behind == 0 {
                checks.push(Check {
                    name: format!("{l}-soliton overtakers by slot sums"),
                    time: t,
                    value,
                    lower: crossed,
                    upper: slot_sum(&slots, l, from.saturating_sub(1), end0),
                });
            }
        }
    }

    Ok(CountingAudit {
        k,
        natural_index: i,
        volume_index: vol,
        steps: n,
        checks,
        config: eta.to_string(),
    })
}

/// One term of the orthogonal decomposition of a displacement.
#[derive(Clone, Debug, Serialize)]
pub struct DecompositionTerm {
    /// `0` for the blocked-step term, else the overtaken size `h`.
    pub level: usize,
    pub coefficient: Scalar,
    /// `n − M_k(n)` for level 0, `ΔY_{k,h}` otherwise.
    pub fluctuation: Scalar,
}

impl DecompositionTerm {
    pub fn value(&self) -> Scalar {
        &self.coefficient * &self.fluctuation
    }
}

/// `Y_k(n) = (v_k/r̄_k)(n − M_k(n)) + Σ_{h<k} 2(v_h/r̄_h) ΔY_{k,h}(n)` with
/// `ΔY_{k,h} = Σ (ζ_h(η̃, j) − α_h)` over the slots the tagged soliton's
/// image in `Ψ_h(η̃)` traverses.
#[derive(Clone, Debug, Serialize)]
pub struct Decomposition {
    pub k: usize,
    pub natural_index: i64,
    pub steps: usize,
    pub displacement: i64,
    pub terms: Vec<DecompositionTerm>,
}

impl Decomposition {
    pub fn total(&self) -> Scalar {
        self.terms.iter().fold(Scalar::zero(), |acc, t| &acc + &t.value())
    }

    /// `ΔY_{k,h}` for `h = 1, …, k−1`.
    pub fn slot_fluctuation(&self, h: usize) -> Option<&Scalar> {
        self.terms.iter().find(|t| t.level == h).map(|t| &t.fluctuation)
    }

    /// `n − M_k(n)`.
    pub fn free_steps(&self) -> &Scalar {
        &self.terms[0].fluctuation
    }
}

/// Orthogonal decomposition of the displacement of the `k`-soliton with
/// natural index `i` over `n` steps, with coefficients from `q`.
pub fn orthogonal_decomposition(
    config: &Configuration,
    k: usize,
    i: i64,
    n: usize,
    q: &QParams,
) -> Result<Decomposition> {
    let eta = config.recenter();
    let slots = seat_decompose(&eta).slots();
    let base = History::run(&eta, n)?;
    let j = base.resolve(k, Tag::Natural(i))?;
    let tr = base.trajectory(k, j);
    let mut vel = Velocities::new(q);
    let free = Scalar::int(n as i64 - tr.blocked(n) as i64);
    let mut terms = vec![DecompositionTerm {
        level: 0,
        coefficient: &vel.velocity(k)? / &vel.r_bar(k)?,
        fluctuation: free,
    }];
    for h in 1..k {
        let skipped = History::run(&skip(&eta, h).image, n)?;
        let jj = skipped.resolve(k - h, Tag::Natural(i))?;
        let p0 = skipped.position(k - h, jj, 0);
        let pn = skipped.position(k - h, jj, n);
        let sum = Scalar::int(slot_sum(&slots, h, p0 + 1, pn));
        let fluctuation = &sum - &(&q.alpha(h) * &Scalar::int(pn - p0));
        terms.push(DecompositionTerm {
            level: h,
            coefficient: &Scalar::int(2) * &(&vel.velocity(h)? / &vel.r_bar(h)?),
            fluctuation,
        });
    }
    Ok(Decomposition { k, natural_index: i, steps: n, displacement: tr.displacement(n), terms })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skip_of_empty_is_empty() {
        let r = skip(&Configuration::zeros_window(-3, 10), 2);
        assert_eq!(r.image.count_ones(), 0);
        assert_eq!(r.origin_shift, 0);
    }

    #[test]
    fn skip_removes_a_lone_small_soliton() {
        let c: Configuration = "@0 0100011000".parse().unwrap();
        let one = skip(&c, 1);
        assert_eq!(one.image.count_ones(), 1);
        assert_eq!(skip(&c, 2).image.count_ones(), 0);
    }

    #[test]
    fn slot_stops_count_nonempty_slots() {
        let mut z = SlotArray::new(3);
        z.set(1, -4, 1);
        z.set(1, -1, 2);
        z.set(1, 0, 1);
        z.set(1, 5, 3);
        assert_eq!(slot_stop(&z, 1, 1), Some(0));
        assert_eq!(slot_stop(&z, 1, 2), Some(5));
        assert_eq!(slot_stop(&z, 1, 3), None);
        assert_eq!(slot_stop(&z, 1, 0), Some(-1));
        assert_eq!(slot_stop(&z, 1, -1), Some(-4));
        let c = CrossingIndices::from_slots(&z);
        assert_eq!(c.stop(1, -1).unwrap(), -4);
        assert!(c.stop(2, 1).is_err());
    }
}
