//! Finite-support configurations, the carrier, forward and backward dynamics,
//! records and excursions.
//!
//! A [`Configuration`] stores a window of cells packed 64 to a word. Every
//! cell outside the window is empty, so the carrier starts empty on the left
//! and the dynamics on the infinite lattice is reproduced exactly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Carrier transition for one byte of cells, for carrier loads 0..8.
///
/// Entry `c * 256 + b` packs the output byte in the low 8 bits and the new
/// load in the high bits. Bit `j` of a byte is the cell at offset `j`.
static BYTE_TABLE: [u16; 2048] = build_byte_table();

const fn build_byte_table() -> [u16; 2048] {
    let mut table = [0u16; 2048];
    let mut c0 = 0;
    while c0 < 8 {
        let mut b = 0;
        while b < 256 {
            let mut c = c0;
            let mut out = 0u16;
            let mut j = 0;
            while j < 8 {
                if (b >> j) & 1 == 1 {
                    c += 1;
                } else if c > 0 {
                    c -= 1;
                    out |= 1 << j;
                }
                j += 1;
            }
            table[c0 * 256 + b] = out | ((c as u16) << 8);
            b += 1;
        }
        c0 += 1;
    }
    table
}

/// Applies the carrier to one word. Returns the output word and the new load.
#[inline]
fn carry_word(word: u64, mut load: u64) -> (u64, u64) {
    if load >= 64 {
        // Every hole in the word receives a ball.
        return (!word, load + 2 * word.count_ones() as u64 - 64);
    }
    let mut out = 0u64;
    for byte_ix in 0..8 {
        let b = (word >> (8 * byte_ix)) & 0xff;
        let ob = if load >= 8 {
            load = load + 2 * b.count_ones() as u64 - 8;
            !b & 0xff
        } else {
            let e = BYTE_TABLE[(load as usize) * 256 + b as usize];
            load = (e >> 8) as u64;
            (e & 0xff) as u64
        };
        out |= ob << (8 * byte_ix);
    }
    (out, load)
}

/// A 0/1 configuration on the integer lattice with finitely many balls.
///
/// Cells are stored for the window `[origin, origin + len)`; reads outside
/// the window return 0. Equality compares the configurations as functions on
/// the lattice, ignoring how large the stored window is.
#[derive(Clone, Debug, Default)]
pub struct Configuration {
    words: Vec<u64>,
    origin: i64,
    len: usize,
}

impl PartialEq for Configuration {
    fn eq(&self, other: &Self) -> bool {
        self.ones().eq(other.ones())
    }
}

impl Eq for Configuration {}

impl Configuration {
    /// The empty configuration with an empty window at 0.
    pub fn zeros() -> Self {
        Self::default()
    }

    /// An all-zero configuration storing the window `[origin, origin + len)`.
    pub fn zeros_window(origin: i64, len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            origin,
            len,
        }
    }

    /// Builds a configuration from cells `bits[j]` at site `origin + j`.
    pub fn from_bits<I>(origin: i64, bits: I) -> Self
    where
        I: IntoIterator,
        I::Item: Into<u8>,
    {
        let mut words = Vec::new();
        let mut len = 0usize;
        for b in bits {
            if len % 64 == 0 {
                words.push(0);
            }
            if b.into() != 0 {
                words[len / 64] |= 1 << (len % 64);
            }
            len += 1;
        }
        Self { words, origin, len }
    }

    /// Builds the smallest window holding balls at the given sites.
    pub fn from_ones(sites: &[i64]) -> Self {
        let (Some(&lo), Some(&hi)) = (sites.iter().min(), sites.iter().max()) else {
            return Self::zeros();
        };
        let mut c = Self::zeros_window(lo, (hi - lo + 1) as usize);
        for &x in sites {
            c.set(x, 1);
        }
        c
    }

    /// Builds a configuration directly from packed words.
    pub fn from_words(origin: i64, words: Vec<u64>, len: usize) -> Self {
        assert!(len <= words.len() * 64 && words.len() == len.div_ceil(64));
        let mut c = Self { words, origin, len };
        c.clear_tail();
        c
    }

    fn clear_tail(&mut self) {
        let r = self.len % 64;
        if r != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << r) - 1;
            }
        }
    }

    /// Lattice coordinate of the first stored cell.
    pub fn origin(&self) -> i64 {
        self.origin
    }

    /// Number of stored cells.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The stored window as a half-open interval of sites.
    pub fn window(&self) -> (i64, i64) {
        (self.origin, self.origin + self.len as i64)
    }

    /// Packed cells; bit `j` of word `w` is the site `origin + 64 w + j`.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// The cell at site `x`.
    #[inline]
    pub fn get(&self, x: i64) -> u8 {
        let off = x - self.origin;
        if off < 0 || off >= self.len as i64 {
            return 0;
        }
        let off = off as usize;
        ((self.words[off / 64] >> (off % 64)) & 1) as u8
    }

    /// Writes the cell at site `x`, growing the window when needed.
    pub fn set(&mut self, x: i64, bit: u8) {
        if bit == 0 && (x < self.origin || x >= self.origin + self.len as i64) {
            return;
        }
        self.cover(x, x + 1);
        let off = (x - self.origin) as usize;
        if bit != 0 {
            self.words[off / 64] |= 1 << (off % 64);
        } else {
            self.words[off / 64] &= !(1 << (off % 64));
        }
    }

    /// Grows the stored window so that it contains `[lo, hi)`.
    pub fn cover(&mut self, lo: i64, hi: i64) {
        let (wlo, whi) = self.window();
        if self.len == 0 {
            *self = Self::zeros_window(lo, (hi - lo).max(0) as usize);
            return;
        }
        let new_lo = wlo.min(lo);
        let new_hi = whi.max(hi);
        if new_lo == wlo && new_hi == whi {
            return;
        }
        if new_lo == wlo {
            self.len = (new_hi - new_lo) as usize;
            self.words.resize(self.len.div_ceil(64), 0);
            return;
        }
        let mut grown = Self::zeros_window(new_lo, (new_hi - new_lo) as usize);
        for x in self.ones() {
            grown.set(x, 1);
        }
        *self = grown;
    }

    /// Returns a copy whose stored window contains `[lo, hi)`.
    pub fn grown(&self, lo: i64, hi: i64) -> Self {
        let mut c = self.clone();
        c.cover(lo, hi);
        c
    }

    /// Sites holding a ball, increasing.
    pub fn ones(&self) -> impl Iterator<Item = i64> + '_ {
        self.words.iter().enumerate().flat_map(move |(w, &word)| {
            let base = self.origin + 64 * w as i64;
            BitIter(word).map(move |j| base + j as i64)
        })
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn first_one(&self) -> Option<i64> {
        self.words
            .iter()
            .position(|&w| w != 0)
            .map(|w| self.origin + 64 * w as i64 + self.words[w].trailing_zeros() as i64)
    }

    pub fn last_one(&self) -> Option<i64> {
        self.words.iter().rposition(|&w| w != 0).map(|w| {
            self.origin + 64 * w as i64 + 63 - self.words[w].leading_zeros() as i64
        })
    }

    /// Cells on `[lo, hi)`.
    pub fn bits(&self, lo: i64, hi: i64) -> Vec<u8> {
        (lo..hi).map(|x| self.get(x)).collect()
    }

    /// The spatial shift `τ_y`, whose value at `x` is the cell at `x + y`.
    pub fn shift(&self, y: i64) -> Self {
        Self {
            words: self.words.clone(),
            origin: self.origin - y,
            len: self.len,
        }
    }

    /// The reflection whose value at `x` is the cell at `-x - 1`.
    pub fn reverse(&self) -> Self {
        let (lo, hi) = self.window();
        Self::from_bits(-hi, (0..self.len as i64).map(|j| self.get(hi - 1 - j)))
            .with_window_of(-hi, -lo)
    }

    fn with_window_of(mut self, lo: i64, hi: i64) -> Self {
        self.cover(lo, hi);
        self
    }

    /// The same configuration stored on the smallest window holding its balls.
    pub fn trimmed(&self) -> Self {
        match (self.first_one(), self.last_one()) {
            (Some(lo), Some(hi)) => {
                Self::from_bits(lo, (lo..=hi).map(|x| self.get(x)))
            }
            _ => Self::zeros(),
        }
    }

    /// One step of the dynamics, `Tη`.
    pub fn evolve(&self) -> Self {
        self.evolve_with_loads(None)
    }

    /// One step of the dynamics, also writing the carrier load entering each
    /// stored word into `loads` (one entry per word plus the final load).
    pub fn evolve_with_checkpoints(&self, loads: &mut Vec<u32>) -> Self {
        self.evolve_with_loads(Some(loads))
    }

    fn evolve_with_loads(&self, mut loads: Option<&mut Vec<u32>>) -> Self {
        let mut out = Vec::with_capacity(self.words.len() + 1);
        if let Some(l) = loads.as_deref_mut() {
            l.clear();
            l.reserve(self.words.len() + 1);
        }
        let mut load = 0u64;
        for &w in &self.words {
            if let Some(l) = loads.as_deref_mut() {
                l.push(load as u32);
            }
            let (o, c) = carry_word(w, load);
            out.push(o);
            load = c;
        }
        if let Some(l) = loads.as_deref_mut() {
            l.push(load as u32);
        }
        // Bits past `len` in the last word are zero on input, so the carrier
        // dropped balls there; the window extends to cover them.
        let mut len = self.len;
        let stored_bits = self.words.len() * 64;
        let mut dropped_in_tail = 0u64;
        if stored_bits > len {
            let tail_mask = !0u64 << (len % 64);
            dropped_in_tail = (out.last().copied().unwrap_or(0) & tail_mask).count_ones() as u64;
        }
        let remaining = load;
        let extra = dropped_in_tail + remaining;
        if extra > 0 {
            len += extra as usize;
            out.resize(len.div_ceil(64), 0);
            let mut x = stored_bits;
            let mut r = remaining;
            while r > 0 {
                out[x / 64] |= 1 << (x % 64);
                x += 1;
                r -= 1;
            }
        }
        let mut c = Self {
            words: out,
            origin: self.origin,
            len,
        };
        c.clear_tail();
        c
    }

    /// One step of the inverse dynamics, `T⁻¹η = reverse(T(reverse η))`.
    pub fn evolve_inverse(&self) -> Self {
        self.reverse().evolve().reverse()
    }

    /// `n` steps forward.
    pub fn evolve_n(&self, n: usize) -> Self {
        let mut c = self.clone();
        for _ in 0..n {
            c = c.evolve();
        }
        c
    }

    /// The carrier `W(x)` for `x` in `[lo, hi]`.
    ///
    /// The range must start left of the first ball and end at a site where
    /// the carrier is empty after the last ball.
    pub fn carrier_profile(&self, lo: i64, hi: i64) -> Result<CarrierProfile> {
        let mut w = 0u32;
        let mut values = Vec::with_capacity((hi - lo + 1).max(0) as usize);
        for x in lo..=hi {
            w = step_load(w, self.get(x));
            values.push(w);
        }
        if let (Some(a), Some(b)) = (self.first_one(), self.last_one()) {
            if lo >= a || hi < b || w != 0 {
                return Err(Error::Window {
                    lo,
                    hi,
                    support_lo: a,
                    support_hi: b,
                });
            }
        }
        Ok(CarrierProfile { lo, values })
    }

    /// Site range `[lo, hi]` outside of which every site is a record.
    ///
    /// `lo` is the site just before the first ball (or the window start) and
    /// `hi` is past the last site where the carrier still drops a ball.
    pub fn active_range(&self) -> (i64, i64) {
        match (self.first_one(), self.last_one()) {
            (Some(a), Some(b)) => (a - 1, b + self.count_ones() as i64 + 1),
            _ => (self.origin, self.origin - 1),
        }
    }

    /// Records of the configuration, with `s_∞(0)` located.
    pub fn records(&self) -> RecordIndex {
        let (lo, hi) = self.active_range();
        let mut sites = Vec::new();
        let mut w = 0u32;
        for x in lo..=hi {
            // The carrier is empty at `lo − 1`.
            let b = self.get(x);
            if b == 0 && w == 0 {
                sites.push(x);
            }
            w = step_load(w, b);
        }
        RecordIndex::new(lo, hi, sites)
    }

    /// Excursions whose leading record lies in the stored window or the
    /// active range, left to right.
    pub fn excursions(&self) -> Vec<Excursion> {
        let rec = self.records();
        let (wlo, whi) = self.window();
        let (alo, ahi) = self.active_range();
        let lo = wlo.min(alo);
        let hi = whi.max(ahi + 1);
        let mut i = rec.index_at_or_before(lo);
        if rec.site(i) < lo {
            i += 1;
        }
        let mut out = Vec::new();
        while rec.site(i) < hi {
            let a = rec.site(i);
            let b = rec.site(i + 1);
            out.push(Excursion {
                index: i,
                start: a,
                word: self.bits(a, b),
            });
            i += 1;
        }
        out
    }

    /// `τ_{s_∞(0)} η`, which has a record at the origin.
    pub fn recenter(&self) -> Self {
        self.shift(self.records().site(0))
    }
}

#[inline]
fn step_load(w: u32, b: u8) -> u32 {
    if b == 1 {
        w + 1
    } else {
        w.saturating_sub(1)
    }
}

struct BitIter(u64);

impl Iterator for BitIter {
    type Item = u32;
    #[inline]
    fn next(&mut self) -> Option<u32> {
        if self.0 == 0 {
            return None;
        }
        let j = self.0.trailing_zeros();
        self.0 &= self.0 - 1;
        Some(j)
    }
}

impl fmt::Display for Configuration {
    /// Writes `@origin bits`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "@{} ", self.origin)?;
        let (lo, hi) = self.window();
        for x in lo..hi {
            f.write_str(if self.get(x) == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Configuration {
    type Err = Error;

    /// Reads an optional `@origin` followed by a 0/1 string. Whitespace
    /// between cells is ignored.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (origin, rest) = if let Some(r) = s.strip_prefix('@') {
            let end = r.find(char::is_whitespace).unwrap_or(r.len());
            let origin = r[..end]
                .parse::<i64>()
                .map_err(|e| Error::Parse(format!("bad origin {:?}: {e}", &r[..end])))?;
            (origin, &r[end..])
        } else {
            (0, s)
        };
        let mut bits = Vec::new();
        for ch in rest.chars() {
            match ch {
                '0' => bits.push(0u8),
                '1' => bits.push(1u8),
                c if c.is_whitespace() => {}
                c => return Err(Error::Parse(format!("unexpected character {c:?}"))),
            }
        }
        Ok(Self::from_bits(origin, bits))
    }
}

impl Serialize for Configuration {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Configuration {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Carrier values `W(x)` on a contiguous range of sites.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CarrierProfile {
    pub lo: i64,
    pub values: Vec<u32>,
}

impl CarrierProfile {
    /// `W(x)`; zero outside the stored range.
    pub fn at(&self, x: i64) -> u32 {
        let off = x - self.lo;
        if off < 0 {
            return 0;
        }
        self.values.get(off as usize).copied().unwrap_or(0)
    }
}

/// Record sites, numbered so that `site(0)` is the last record at or left of
/// the origin.
///
/// Every site left of `lo` and right of `hi` is a record, so `site(i)` is
/// defined for every integer `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecordIndex {
    lo: i64,
    hi: i64,
    sites: Vec<i64>,
    zero_rank: i64,
}

impl RecordIndex {
    fn new(lo: i64, hi: i64, sites: Vec<i64>) -> Self {
        let mut r = Self {
            lo,
            hi,
            sites,
            zero_rank: 0,
        };
        r.zero_rank = r.rank_at_or_before(0);
        r
    }

    /// Rank of the last record at or before `x`, counting from the first
    /// record of the computed range.
    fn rank_at_or_before(&self, x: i64) -> i64 {
        if x < self.lo {
            return x - self.lo;
        }
        if x > self.hi {
            return self.sites.len() as i64 + (x - self.hi - 1);
        }
        self.sites.partition_point(|&s| s <= x) as i64 - 1
    }

    fn site_of_rank(&self, r: i64) -> i64 {
        let n = self.sites.len() as i64;
        if r < 0 {
            self.lo + r
        } else if r >= n {
            self.hi + 1 + (r - n)
        } else {
            self.sites[r as usize]
        }
    }

    /// `s_∞(i)`.
    pub fn site(&self, i: i64) -> i64 {
        self.site_of_rank(self.zero_rank + i)
    }

    /// The index `i` of the last record `s_∞(i) ≤ x`.
    pub fn index_at_or_before(&self, x: i64) -> i64 {
        self.rank_at_or_before(x) - self.zero_rank
    }

    pub fn is_record(&self, x: i64) -> bool {
        if x < self.lo || x > self.hi {
            return true;
        }
        self.sites.binary_search(&x).is_ok()
    }

    /// Records inside the computed range.
    pub fn computed_sites(&self) -> &[i64] {
        &self.sites
    }

    /// Index range `i` of records lying in `[lo, hi]`.
    pub fn indices_in(&self, lo: i64, hi: i64) -> std::ops::RangeInclusive<i64> {
        let mut a = self.index_at_or_before(lo);
        if self.site(a) < lo {
            a += 1;
        }
        let b = self.index_at_or_before(hi);
        a..=b
    }
}

/// The segment between consecutive records, starting with the record's 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Excursion {
    /// Record number `i` of the leading record.
    pub index: i64,
    /// Site of the leading record.
    pub start: i64,
    pub word: Vec<u8>,
}

impl Excursion {
    /// Number of balls.
    pub fn balls(&self) -> usize {
        self.word.iter().filter(|&&b| b == 1).count()
    }

    /// Number of `10` patterns.
    pub fn descents(&self) -> usize {
        self.word.windows(2).filter(|w| w[0] == 1 && w[1] == 0).count()
    }
}

/// Membership in the set of excursion words with `m` balls: a leading 0,
/// length `2m + 1`, and every prefix sum of `2e − 1` at least −1.
pub fn is_excursion_word(word: &[u8]) -> bool {
    if word.first() != Some(&0) || word.len() % 2 == 0 {
        return false;
    }
    let m = word.len() / 2;
    let mut sum = 0i64;
    let mut ones = 0usize;
    for &b in word {
        if b == 1 {
            sum += 1;
            ones += 1;
        } else {
            sum -= 1;
        }
        if sum < -1 {
            return false;
        }
    }
    ones == m
}

/// Unpacked implementations of the definitions, used to cross-check the
/// packed engine.
pub mod reference {
    /// `Tη` on a finite word, with the carrier empty on the left. The output
    /// is extended on the right by as many cells as the carrier still holds.
    pub fn evolve(bits: &[u8]) -> Vec<u8> {
        let w = carrier(bits);
        let mut out = Vec::with_capacity(bits.len());
        let mut prev = 0i64;
        for (x, &b) in bits.iter().enumerate() {
            out.push((b as i64 - w[x] as i64 + prev) as u8);
            prev = w[x] as i64;
        }
        while prev > 0 {
            out.push(1);
            prev -= 1;
        }
        out
    }

    /// `W(x) = max(W(x−1) + 2η(x) − 1, 0)`.
    pub fn carrier(bits: &[u8]) -> Vec<u32> {
        let mut w = 0i64;
        bits.iter()
            .map(|&b| {
                w = (w + 2 * b as i64 - 1).max(0);
                w as u32
            })
            .collect()
    }

    /// Whether `x` is a record by the maximal partial-sum test
    /// `max_{z ≤ x} Σ_{y=z}^{x} (2η(y) − 1) ≤ −1`.
    pub fn is_record_by_partial_sums(bits: &[u8], x: usize) -> bool {
        let mut sum = 0i64;
        let mut best = i64::MIN;
        for z in (0..=x).rev() {
            sum += 2 * bits[z] as i64 - 1;
            best = best.max(sum);
        }
        best <= -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_table_matches_sitewise_rule() {
        for c in 0..8u32 {
            for b in 0..256u32 {
                let mut load = c;
                let mut out = 0;
                for j in 0..8 {
                    let bit = (b >> j) & 1;
                    if bit == 1 {
                        load += 1;
                    } else if load > 0 {
                        load -= 1;
                        out |= 1 << j;
                    }
                }
                let e = BYTE_TABLE[(c * 256 + b) as usize];
                assert_eq!((e & 0xff) as u32, out);
                assert_eq!((e >> 8) as u32, load);
            }
        }
    }

    #[test]
    fn carry_word_large_load() {
        let (o, c) = carry_word(0b1011, 70);
        assert_eq!(o, !0b1011u64);
        assert_eq!(c, 70 + 6 - 64);
    }

    #[test]
    fn parse_display_roundtrip() {
        let c: Configuration = "@-4 0110011".parse().unwrap();
        assert_eq!(c.origin(), -4);
        assert_eq!(c.len(), 7);
        assert_eq!(c.to_string(), "@-4 0110011");
        assert_eq!(c.get(-3), 1);
        assert_eq!(c.get(100), 0);
        assert!("@x 01".parse::<Configuration>().is_err());
        assert!("0120".parse::<Configuration>().is_err());
    }

    #[test]
    fn shift_and_reverse() {
        let c = Configuration::from_ones(&[0, 3]);
        let s = c.shift(2);
        assert_eq!(s.ones().collect::<Vec<_>>(), vec![-2, 1]);
        let r = c.reverse();
        assert_eq!(r.ones().collect::<Vec<_>>(), vec![-4, -1]);
    }

    #[test]
    fn evolve_extends_past_word_boundary() {
        let bits: Vec<u8> = (0..64).map(|x| u8::from(x >= 60)).collect();
        let c = Configuration::from_bits(0, bits.clone());
        let t = c.evolve();
        assert_eq!(t.ones().collect::<Vec<_>>(), vec![64, 65, 66, 67]);
        assert_eq!(
            t.bits(0, 68),
            reference::evolve(&bits),
        );
    }

    #[test]
    fn record_index_extends_both_ways() {
        let c = Configuration::from_ones(&[3, 4]);
        let r = c.records();
        assert_eq!(r.site(0), 0);
        assert_eq!(r.site(1), 1);
        // 3,4 are balls and 5,6 are filled by the carrier.
        assert_eq!(r.site(2), 2);
        assert!(r.computed_sites().contains(&2));
        assert_eq!(r.site(3), 7);
        assert_eq!(r.site(4), 8);
        assert_eq!(r.site(-5), -5);
        assert_eq!(r.index_at_or_before(6), 2);
        assert!(!r.is_record(5) && r.is_record(7));
    }

    #[test]
    fn excursion_membership() {
        assert!(is_excursion_word(&[0]));
        assert!(is_excursion_word(&[0, 1, 1, 0, 0]));
        assert!(is_excursion_word(&[0, 1, 0, 1, 0]));
        assert!(!is_excursion_word(&[0, 0, 1]));
        assert!(!is_excursion_word(&[1, 0, 0]));
        assert!(!is_excursion_word(&[0, 1, 0, 0, 1]));
    }
}
