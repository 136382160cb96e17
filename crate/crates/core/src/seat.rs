//! Seat-number configuration: the carrier with numbered seats, the slot
//! coordinates `ξ_k`/`s_k`, slot contents `ζ_k`, offsets, capacity carriers
//! and the reconstruction of a configuration from its slot contents.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Configuration, RecordIndex};

/// Label of one site in the seat-number configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SeatLabel {
    Record,
    /// A ball placed on seat `k`.
    Up(usize),
    /// A ball removed from seat `k`.
    Down(usize),
}

/// Carrier whose seats are numbered 1, 2, ...; a ball takes the smallest
/// empty seat and a hole empties the smallest occupied seat.
#[derive(Clone, Debug, Default)]
pub struct SeatCarrier {
    seats: Vec<u64>,
    load: usize,
}

impl SeatCarrier {
    pub fn new() -> Self {
        Self::default()
    }

    /// Feeds one cell and returns its label.
    pub fn step(&mut self, bit: u8) -> SeatLabel {
        if bit == 1 {
            let w = self.seats.iter().position(|&w| w != !0).unwrap_or_else(|| {
                self.seats.push(0);
                self.seats.len() - 1
            });
            let j = self.seats[w].trailing_ones() as usize;
            self.seats[w] |= 1 << j;
            self.load += 1;
            SeatLabel::Up(64 * w + j + 1)
        } else if self.load > 0 {
            let w = self.seats.iter().position(|&w| w != 0).unwrap();
            let j = self.seats[w].trailing_zeros() as usize;
            self.seats[w] &= !(1 << j);
            self.load -= 1;
            SeatLabel::Down(64 * w + j + 1)
        } else {
            SeatLabel::Record
        }
    }

    /// Total number of balls carried.
    pub fn load(&self) -> usize {
        self.load
    }

    /// Whether seat `k` is occupied.
    pub fn occupied(&self, k: usize) -> bool {
        let j = k - 1;
        self.seats.get(j / 64).is_some_and(|w| (w >> (j % 64)) & 1 == 1)
    }

    /// Occupied seats among `1..=l`, which equals the capacity-`l` carrier.
    pub fn occupied_up_to(&self, l: usize) -> usize {
        let mut n = 0;
        for (w, &word) in self.seats.iter().enumerate() {
            let base = 64 * w;
            if base >= l {
                break;
            }
            let take = (l - base).min(64);
            let mask = if take == 64 { !0 } else { (1u64 << take) - 1 };
            n += (word & mask).count_ones() as usize;
        }
        n
    }
}

fn encode(l: SeatLabel) -> i32 {
    match l {
        SeatLabel::Record => 0,
        SeatLabel::Up(k) => k as i32,
        SeatLabel::Down(k) => -(k as i32),
    }
}

fn decode(c: i32) -> SeatLabel {
    match c {
        0 => SeatLabel::Record,
        k if k > 0 => SeatLabel::Up(k as usize),
        k => SeatLabel::Down((-k) as usize),
    }
}

/// Seat labels of one configuration with the `ξ_k` / `s_k` coordinates.
///
/// Sites outside `[lo, hi]` are records.
#[derive(Clone, Debug)]
pub struct SeatView {
    lo: i64,
    hi: i64,
    labels: Vec<i32>,
    /// Capacity sums `W_l(x)` for `l = 1..=levels`, flattened per site.
    capacity: Vec<u16>,
    levels: usize,
    /// `counted[k][j]`: sites in `[lo, lo + j]` that are records or seats of
    /// level above `k`, for `k = 0..=levels`.
    counted: Vec<Vec<u32>>,
    records: RecordIndex,
    origin_count: Vec<i64>,
}

/// Labels every site of the configuration.
pub fn seat_decompose(config: &Configuration) -> SeatView {
    let records = config.records();
    let (lo, hi) = config.active_range();
    let mut carrier = SeatCarrier::new();
    let mut labels = Vec::with_capacity((hi - lo + 1).max(0) as usize);
    let mut levels = 0usize;
    let mut snapshots: Vec<SeatCarrier> = Vec::new();
    for x in lo..=hi {
        let l = carrier.step(config.get(x));
        if let SeatLabel::Up(k) | SeatLabel::Down(k) = l {
            levels = levels.max(k);
        }
        labels.push(encode(l));
        snapshots.push(carrier.clone());
    }
    let mut capacity = Vec::with_capacity(labels.len() * levels);
    for s in &snapshots {
        for l in 1..=levels {
            capacity.push(s.occupied_up_to(l) as u16);
        }
    }
    let mut counted = vec![Vec::with_capacity(labels.len()); levels + 1];
    for (k, pref) in counted.iter_mut().enumerate() {
        let mut c = 0u32;
        for &code in &labels {
            if code == 0 || code.unsigned_abs() as usize > k {
                c += 1;
            }
            pref.push(c);
        }
    }
    let mut view = SeatView {
        lo,
        hi,
        labels,
        capacity,
        levels,
        counted,
        records,
        origin_count: Vec::new(),
    };
    let s0 = view.records.site(0);
    view.origin_count = (0..=levels).map(|k| view.count(k, s0)).collect();
    view
}

impl SeatView {
    /// Largest seat number used.
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn records(&self) -> &RecordIndex {
        &self.records
    }

    /// Sites `[lo, hi]` outside of which every site is a record.
    pub fn range(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    pub fn label(&self, x: i64) -> SeatLabel {
        if x < self.lo || x > self.hi {
            return SeatLabel::Record;
        }
        decode(self.labels[(x - self.lo) as usize])
    }

    /// `η↑_k(x)`.
    pub fn up(&self, k: usize, x: i64) -> bool {
        self.label(x) == SeatLabel::Up(k)
    }

    /// `η↓_k(x)`.
    pub fn down(&self, k: usize, x: i64) -> bool {
        self.label(x) == SeatLabel::Down(k)
    }

    /// `r(x)`.
    pub fn is_record(&self, x: i64) -> bool {
        self.label(x) == SeatLabel::Record
    }

    /// Capacity-`l` carrier `W_l(x) = Σ_{j ≤ l} 𝒲_j(x)`.
    pub fn capacity_load(&self, l: usize, x: i64) -> usize {
        if x < self.lo || x > self.hi || l == 0 || self.levels == 0 {
            return 0;
        }
        let l = l.min(self.levels);
        self.capacity[(x - self.lo) as usize * self.levels + l - 1] as usize
    }

    /// Whether seat `k` is occupied after the carrier passes `x`.
    pub fn seat_occupied(&self, k: usize, x: i64) -> bool {
        self.capacity_load(k, x) > self.capacity_load(k - 1, x)
    }

    fn count(&self, k: usize, x: i64) -> i64 {
        let k = k.min(self.levels);
        if x < self.lo {
            return x - self.lo + 1;
        }
        let pref = &self.counted[k];
        let total = pref.last().copied().unwrap_or(0) as i64;
        if x > self.hi {
            return total + (x - self.hi);
        }
        pref[(x - self.lo) as usize] as i64
    }

    /// `ξ_k(x)`.
    pub fn xi(&self, k: usize, x: i64) -> i64 {
        self.count(k, x) - self.origin_count[k.min(self.levels)]
    }

    /// `s_k(i) = min{y : ξ_k(y) = i}`.
    pub fn s(&self, k: usize, i: i64) -> i64 {
        let kk = k.min(self.levels);
        let c = i + self.origin_count[kk];
        if c <= 0 {
            return self.lo - 1 + c;
        }
        let pref = &self.counted[kk];
        let total = pref.last().copied().unwrap_or(0) as i64;
        if c > total {
            return self.hi + (c - total);
        }
        self.lo + pref.partition_point(|&v| (v as i64) < c) as i64
    }

    /// `Ξ_k(i) = ξ_k(s_∞(i))`.
    pub fn big_xi(&self, k: usize, i: i64) -> i64 {
        self.xi(k, self.records.site(i))
    }

    /// Slot contents `ζ_k(i)`, computed from the seat labels.
    pub fn slots(&self) -> SlotArray {
        let mut signed: BTreeMap<usize, BTreeMap<i64, i64>> = BTreeMap::new();
        for (j, &code) in self.labels.iter().enumerate() {
            if code <= 0 {
                continue;
            }
            let x = self.lo + j as i64;
            let k = code as usize;
            // A (k,↑) seat adds to its own k-slot. It is counted by ξ_{k-1},
            // so it is the right end of a (k-1)-slot interval and subtracts there.
            *signed.entry(k).or_default().entry(self.xi(k, x)).or_insert(0) += 1;
            if k > 1 {
                *signed
                    .entry(k - 1)
                    .or_default()
                    .entry(self.xi(k - 1, x) - 1)
                    .or_insert(0) -= 1;
            }
        }
        let mut out = SlotArray::new(0);
        for (k, m) in signed {
            for (i, v) in m {
                debug_assert!(v >= 0, "negative slot content at ({k}, {i})");
                if v > 0 {
                    out.set(k, i, v as u64);
                }
            }
        }
        let s0 = self.records.site(0);
        out.records = (self.records.index_at_or_before(self.hi.max(s0)) + 1) as usize;
        out
    }
}

/// Slot contents `ζ_k(i)`, stored sparsely.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotArray {
    /// Largest `k` with a nonzero entry.
    pub levels: usize,
    /// Number of records `s_∞(0), ..., s_∞(R−1)` the contents refer to.
    pub records: usize,
    pub zeta: BTreeMap<usize, BTreeMap<i64, u64>>,
}

impl SlotArray {
    pub fn new(records: usize) -> Self {
        Self {
            levels: 0,
            records,
            zeta: BTreeMap::new(),
        }
    }

    /// `ζ_k(i)`.
    pub fn get(&self, k: usize, i: i64) -> u64 {
        self.zeta.get(&k).and_then(|m| m.get(&i)).copied().unwrap_or(0)
    }

    pub fn set(&mut self, k: usize, i: i64, v: u64) {
        if v == 0 {
            if let Some(m) = self.zeta.get_mut(&k) {
                m.remove(&i);
                if m.is_empty() {
                    self.zeta.remove(&k);
                }
            }
        } else {
            self.zeta.entry(k).or_default().insert(i, v);
        }
        self.levels = self.zeta.keys().max().copied().unwrap_or(0);
    }

    /// Number of `k`-solitons.
    pub fn total(&self, k: usize) -> u64 {
        self.zeta.get(&k).map(|m| m.values().sum()).unwrap_or(0)
    }

    /// Nonzero entries `(k, i, ζ_k(i))`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, i64, u64)> + '_ {
        self.zeta
            .iter()
            .flat_map(|(&k, m)| m.iter().map(move |(&i, &v)| (k, i, v)))
    }
}

/// Builds a configuration with a record at the origin level by level, from
/// the largest soliton size down.
///
/// Before level `k` is filled, the configuration holds only solitons larger
/// than `k`; its `k`-slots are its records and its seats of level above `k`.
#[derive(Clone, Debug)]
pub struct SlotBuilder {
    word: Vec<u8>,
}

impl SlotBuilder {
    /// `records` empty sites starting at the origin.
    pub fn new(records: usize) -> Self {
        Self {
            word: vec![0; records],
        }
    }

    /// Inserts `count(i)` `k`-solitons right after the site `s_k(i)`, for
    /// every `k`-slot `i` of the current configuration. Returns the number of
    /// `k`-slots.
    pub fn fill_level<F>(&mut self, k: usize, mut count: F) -> Result<usize>
    where
        F: FnMut(usize) -> Result<u64>,
    {
        let mut carrier = SeatCarrier::new();
        let mut out = Vec::with_capacity(self.word.len());
        let mut slot = 0usize;
        for &b in &self.word {
            let label = carrier.step(b);
            out.push(b);
            let counted = match label {
                SeatLabel::Record => true,
                SeatLabel::Up(l) | SeatLabel::Down(l) => l > k,
            };
            if !counted {
                continue;
            }
            let n = count(slot)?;
            slot += 1;
            if n == 0 {
                continue;
            }
            let load = carrier.occupied_up_to(k);
            let (first, second) = if load == 0 {
                (1u8, 0u8)
            } else if load == k {
                (0u8, 1u8)
            } else {
                return Err(Error::Internal(format!(
                    "capacity-{k} carrier is {load} at a {k}-slot site"
                )));
            };
            for _ in 0..n {
                out.extend(std::iter::repeat_n(first, k));
                out.extend(std::iter::repeat_n(second, k));
            }
        }
        self.word = out;
        Ok(slot)
    }

    /// Current length in sites.
    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    pub fn finish(self) -> Configuration {
        Configuration::from_bits(0, self.word)
    }
}

/// The configuration with a record at the origin whose slot contents are
/// `slots`, built on `records` records.
///
/// Slot indices of level `k` must lie in `0..n_k`, where `n_k` is the number
/// of `k`-slots that the larger levels create.
pub fn reconstruct(slots: &SlotArray, records: usize) -> Result<Configuration> {
    if records == 0 {
        return Err(Error::Slots("at least one record is required".into()));
    }
    let mut b = SlotBuilder::new(records);
    for k in (1..=slots.levels).rev() {
        let n = b.fill_level(k, |i| Ok(slots.get(k, i as i64)))?;
        if let Some(m) = slots.zeta.get(&k) {
            if let Some((&i, _)) = m.iter().find(|(&i, _)| i < 0 || i >= n as i64) {
                return Err(Error::Slots(format!(
                    "slot ({k}, {i}) outside the {n} available {k}-slots"
                )));
            }
        }
    }
    Ok(b.finish())
}

/// The offset `o_k(η)` in `ζ_k(Tη, i + k + o_k) = ζ_k(η, i)`.
pub fn offset(view: &SeatView, next: &SeatView, k: usize) -> i64 {
    let s = view.records().site(0);
    let ts = next.records().site(0);
    let mut o = s - ts;
    for y in (s + 1)..=0 {
        if let SeatLabel::Down(l) = view.label(y) {
            if l <= k {
                o += 2;
            }
        }
    }
    for y in (ts + 1)..=0 {
        if let SeatLabel::Up(l) = next.label(y) {
            if l <= k {
                o -= 2;
            }
        }
    }
    o
}

/// `o_k(η)` computed from the configuration alone.
pub fn offset_of(config: &Configuration, k: usize) -> i64 {
    offset(&seat_decompose(config), &seat_decompose(&config.evolve()), k)
}

/// Carrier with capacity `l` on `[lo, hi]`, by its own recursion.
pub fn capacity_carrier(config: &Configuration, l: usize, lo: i64, hi: i64) -> Vec<usize> {
    let mut w = 0usize;
    (lo..=hi)
        .map(|x| {
            if config.get(x) == 1 {
                if w < l {
                    w += 1;
                }
            } else if w > 0 {
                w -= 1;
            }
            w
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_of_a_two_soliton() {
        let c: Configuration = "@0 011000".parse().unwrap();
        let v = seat_decompose(&c);
        let got: Vec<SeatLabel> = (0..6).map(|x| v.label(x)).collect();
        use SeatLabel::*;
        assert_eq!(got, vec![Record, Up(1), Up(2), Down(1), Down(2), Record]);
    }

    #[test]
    fn seat_carrier_reuses_smallest_seat() {
        let mut c = SeatCarrier::new();
        use SeatLabel::*;
        let seq: Vec<SeatLabel> = [1, 1, 0, 1, 0, 0].iter().map(|&b| c.step(b)).collect();
        assert_eq!(seq, vec![Up(1), Up(2), Down(1), Up(1), Down(1), Down(2)]);
    }

    #[test]
    fn xi_on_empty_configuration_counts_sites() {
        let v = seat_decompose(&Configuration::zeros_window(-3, 10));
        for k in 1..4 {
            assert_eq!(v.xi(k, 5) - v.xi(k, -2), 7);
            assert_eq!(v.s(k, 4), 4);
        }
    }

    #[test]
    fn reconstruct_single_two_soliton() {
        let mut z = SlotArray::new(2);
        z.set(2, 0, 1);
        let c = reconstruct(&z, 2).unwrap();
        assert_eq!(c.bits(0, 6), vec![0, 1, 1, 0, 0, 0]);
    }

    #[test]
    fn reconstruct_rejects_unavailable_slot() {
        let mut z = SlotArray::new(2);
        z.set(1, 7, 1);
        assert!(matches!(reconstruct(&z, 2), Err(Error::Slots(_))));
    }
}
