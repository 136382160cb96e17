//! Exact identities of the seat-number and skip-map constructions, checked
//! on one configuration at a time.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::Result;
use crate::lattice::Configuration;
use crate::seat::{capacity_carrier, offset, reconstruct, seat_decompose, SeatLabel, SeatView, SlotArray};
use crate::skip::{audit_counting, skip, slot_stop, Check};
use crate::tagged::History;

/// Identity names, as they appear in [`Check::name`] and in reports.
pub mod names {
    pub const LINEARIZATION: &str = "slots shift linearly under one step";
    pub const XI_INCREMENTS: &str = "seat-count increments of a tagged soliton";
    pub const BLOCKED_DIFFERENCE: &str = "blocked-step difference of two tagged solitons";
    pub const SEMIGROUP: &str = "skip maps compose additively";
    pub const SLOTS_UNDER_SKIP: &str = "slots shift down under the skip map";
    pub const SEAT_CORRESPONDENCE: &str = "seat labels correspond under the skip map";
    pub const CAPACITY_SUM: &str = "capacity carrier is the sum of seat loads";
    pub const CAPACITY_AT_SOLITON: &str = "capacity carrier is empty or full at a soliton";
    pub const EXCURSION_LENGTH: &str = "excursion length from slot contents";
    pub const CONFIG_ROUNDTRIP: &str = "configuration to slots and back";
    pub const SLOTS_ROUNDTRIP: &str = "slots to configuration and back";
}

/// What [`audit_configuration`] checks beyond the always-on identities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AuditScope {
    /// Steps of dynamics.
    pub steps: usize,
    /// Tagged solitons per size fed to the counting audit (natural indices
    /// `1..=counting_tags`).
    pub counting_tags: usize,
    /// Volume-indexed solitons per size compared pairwise for blocked steps.
    pub pair_tags: usize,
    /// Largest skip depth for the skip-map identities.
    pub skip_depth: usize,
}

impl AuditScope {
    pub fn new(steps: usize) -> Self {
        AuditScope { steps, counting_tags: 2, pair_tags: 6, skip_depth: 2 }
    }
}

/// Runs every identity on `config` (recentered first) and returns all checks.
pub fn audit_configuration(config: &Configuration, scope: &AuditScope) -> Result<Vec<Check>> {
    let eta = config.recenter();
    let n = scope.steps;
    let mut checks = Vec::new();
    let history = History::run(&eta, n)?;
    let views: Vec<SeatView> = (0..=n).map(|t| seat_decompose(history.config(t))).collect();
    let set0 = history.set(0);
    let kmax = set0.max_size();
    let slots = views[0].slots();

    for t in 0..n {
        linearization(&views[t], &views[t + 1], t, &mut checks);
    }

    for k in 1..=kmax {
        for &j in set0.representatives(k) {
            let tr = history.trajectory(k, j);
            for l in 1..=k {
                for t in 1..=n {
                    let got = views[t].xi(l, tr.positions[t]) - views[t - 1].xi(l, tr.positions[t - 1]);
                    let o = offset(&views[t - 1], &views[t], l);
                    let want = if tr.free[t - 1] {
                        let mut w = k as i64 + o;
                        for h in l + 1..k {
                            w += 2 * (h - l) as i64 * tr.overtaken[t - 1][h - 1] as i64;
                        }
                        w
                    } else {
                        l as i64 + o
                    };
                    checks.push(Check::equal(names::XI_INCREMENTS, t, got, want));
                }
            }
        }
    }

    for k in 1..=kmax {
        let right = set0.natural(k, 1).map_or(0, |j| set0.of_size(k).len() - j);
        for i in 1..=scope.counting_tags.min(right) as i64 {
            checks.extend(audit_counting(&eta, k, i, n)?.checks);
        }
        blocked_differences(&history, &slots, k, scope.pair_tags, &mut checks);
    }

    for k in 1..=scope.skip_depth {
        let once = skip(&eta, k);
        for l in 1..=scope.skip_depth {
            let twice = skip(&once.image, l).image;
            checks.push(Check::holds(names::SEMIGROUP, 0, twice == skip(&eta, k + l).image));
        }
        let shifted = seat_decompose(&once.image).slots();
        for l in 1..=slots.levels.max(shifted.levels) + 1 {
            checks.push(Check::holds(
                names::SLOTS_UNDER_SKIP,
                0,
                shifted.zeta.get(&l) == slots.zeta.get(&(l + k)),
            ));
        }
        seat_correspondence(&views[0], &once.image, once.origin_shift, k, &mut checks);
    }

    capacity(&eta, &views[0], &history, kmax, &mut checks);
    excursion_lengths(&eta, &views[0], &mut checks);
    roundtrips(&eta, &mut checks)?;
    Ok(checks)
}

fn linearization(view: &SeatView, next: &SeatView, t: usize, checks: &mut Vec<Check>) {
    let (z, zt) = (view.slots(), next.slots());
    for k in 1..=z.levels.max(zt.levels) {
        let o = offset(view, next, k);
        let shifted: Vec<(i64, u64)> = z
            .zeta
            .get(&k)
            .into_iter()
            .flatten()
            .map(|(&i, &c)| (i + k as i64 + o, c))
            .collect();
        let got: Vec<(i64, u64)> = zt.zeta.get(&k).into_iter().flatten().map(|(&i, &c)| (i, c)).collect();
        checks.push(Check::holds(names::LINEARIZATION, t, shifted == got));
    }
}

/// `|M⁽ⁱ⁾(t) − M⁽ʲ⁾(t)| ≤ 2(J(j) − J(i) − 1) + 1` for volume indices `i < j`.
fn blocked_differences(
    history: &History,
    slots: &SlotArray,
    k: usize,
    tags: usize,
    checks: &mut Vec<Check>,
) {
    let set0 = history.set(0);
    let picks: Vec<(i64, i64, Vec<u64>)> = (1..=tags as i64)
        .filter_map(|vol| {
            let j = set0.volume_rep(k, vol).ok()?;
            let stop = slot_stop(slots, k, vol)?;
            let tr = history.trajectory(k, j);
            Some((vol, stop, (0..=history.steps()).map(|t| tr.blocked(t)).collect()))
        })
        .collect();
    for (a, (_, ja, ma)) in picks.iter().enumerate() {
        for (_, jb, mb) in &picks[a + 1..] {
            let bound = 2 * (jb - ja - 1) + 1;
            for t in 0..ma.len() {
                let diff = (ma[t] as i64 - mb[t] as i64).abs();
                checks.push(Check { name: names::BLOCKED_DIFFERENCE.into(), time: t, value: diff, lower: 0, upper: bound });
            }
        }
    }
}

fn seat_correspondence(view: &SeatView, image: &Configuration, shift: i64, k: usize, checks: &mut Vec<Check>) {
    let vs = seat_decompose(image);
    let (lo, hi) = vs.range();
    let mut ok = true;
    for x in lo - 2..=hi + 2 {
        let y = view.s(k, x + shift);
        let want = match view.label(y) {
            SeatLabel::Up(m) => SeatLabel::Up(m - k),
            SeatLabel::Down(m) => SeatLabel::Down(m - k),
            SeatLabel::Record => SeatLabel::Record,
        };
        ok &= vs.label(x) == want;
    }
    checks.push(Check::holds(names::SEAT_CORRESPONDENCE, 0, ok));
}

fn capacity(eta: &Configuration, view: &SeatView, history: &History, kmax: usize, checks: &mut Vec<Check>) {
    let (lo, hi) = view.range();
    for l in 1..=kmax + 1 {
        let w = capacity_carrier(eta, l, lo, hi);
        let ok = (lo..=hi).zip(&w).all(|(x, &load)| {
            let seats = (1..=l).filter(|&m| view.seat_occupied(m, x)).count();
            load == seats && view.capacity_load(l, x) == seats
        });
        checks.push(Check::holds(names::CAPACITY_SUM, 0, ok));
    }
    let ok = history.set(0).iter().all(|s| {
        let x = s.position();
        (1..=s.size).all(|l| view.capacity_load(l, x) == if eta.get(x) == 1 { l } else { 0 })
    });
    checks.push(Check::holds(names::CAPACITY_AT_SOLITON, 0, ok));
}

fn excursion_lengths(eta: &Configuration, view: &SeatView, checks: &mut Vec<Check>) {
    let z = view.slots();
    for e in eta.excursions() {
        let mut len = 1i64;
        for (k, m) in &z.zeta {
            let a = view.big_xi(*k, e.index);
            let b = view.big_xi(*k, e.index + 1);
            len += 2 * *k as i64 * m.range(a..b).map(|(_, c)| *c as i64).sum::<i64>();
        }
        checks.push(Check::equal(names::EXCURSION_LENGTH, 0, e.word.len() as i64, len));
    }
}

/// Both bijections on the part of `eta` right of its record `0`.
fn roundtrips(eta: &Configuration, checks: &mut Vec<Check>) -> Result<()> {
    let end = eta.window().1.max(eta.active_range().1 + 1);
    let right = Configuration::from_bits(0, eta.bits(0, end));
    let z = seat_decompose(&right).slots();
    let back = reconstruct(&z, z.records)?;
    checks.push(Check::holds(names::CONFIG_ROUNDTRIP, 0, back == right));
    let again = seat_decompose(&back).slots();
    checks.push(Check::holds(names::SLOTS_ROUNDTRIP, 0, again.zeta == z.zeta));
    Ok(())
}

/// Number of checks and failures per identity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub checks: BTreeMap<String, u64>,
    pub failures: BTreeMap<String, u64>,
}

impl Tally {
    pub fn add(&mut self, checks: &[Check]) {
        for c in checks {
            *self.checks.entry(c.name.clone()).or_insert(0) += 1;
            if !c.passed() {
                *self.failures.entry(c.name.clone()).or_insert(0) += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &Tally) {
        for (k, v) in &other.checks {
            *self.checks.entry(k.clone()).or_insert(0) += v;
        }
        for (k, v) in &other.failures {
            *self.failures.entry(k.clone()).or_insert(0) += v;
        }
    }

    pub fn total_checks(&self) -> u64 {
        self.checks.values().sum()
    }

    pub fn total_failures(&self) -> u64 {
        self.failures.values().sum()
    }
}

/// Shrinks a configuration on which `identity` fails by dropping excursions
/// from either end while the failure persists.
pub fn minimize_counterexample(config: &Configuration, scope: &AuditScope, identity: &str) -> Configuration {
    let fails = |c: &Configuration| {
        audit_configuration(c, scope)
            .map(|checks| checks.iter().any(|ch| ch.name == identity && !ch.passed()))
            .unwrap_or(false)
    };
    let mut best = config.recenter();
    let mut chunk = best.excursions().len() / 2;
    while chunk > 0 {
        let ex = best.excursions();
        let mut shrunk = false;
        for from_left in [true, false] {
            if ex.len() <= chunk {
                continue;
            }
            let (lo, hi) = if from_left {
                (ex[chunk].start, ex.last().map_or(0, |e| e.start + e.word.len() as i64))
            } else {
                (ex[0].start, ex[ex.len() - chunk].start)
            };
            let candidate = Configuration::from_bits(lo, best.bits(lo, hi));
            if fails(&candidate) {
                best = candidate.recenter();
                shrunk = true;
                break;
            }
        }
        if !shrunk {
            chunk /= 2;
        }
    }
    best.trimmed()
}
