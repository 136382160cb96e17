//! Takahashi–Satsuma decomposition of excursions into solitons, natural and
//! volume numbering, and the free/blocked classification.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{Configuration, RecordIndex};

/// A `k`-soliton: `k` heads (balls) and `k` tails (holes).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Soliton {
    pub size: usize,
    pub heads: Vec<i64>,
    pub tails: Vec<i64>,
    /// Number `i` of the excursion `[s_∞(i), s_∞(i+1))` holding the soliton.
    pub excursion: i64,
}

impl Soliton {
    /// `X(γ) = inf γ − 1`.
    pub fn position(&self) -> i64 {
        self.heads[0].min(self.tails[0]) - 1
    }

    /// `sup γ`.
    pub fn sup(&self) -> i64 {
        self.heads[self.size - 1].max(self.tails[self.size - 1])
    }

    /// All sites, increasing.
    pub fn sites(&self) -> Vec<i64> {
        let mut s: Vec<i64> = self.heads.iter().chain(&self.tails).copied().collect();
        s.sort_unstable();
        s
    }

    pub fn contains(&self, x: i64) -> bool {
        self.heads.binary_search(&x).is_ok() || self.tails.binary_search(&x).is_ok()
    }

    /// Whether some site of the soliton lies in `[lo, hi]`.
    pub fn meets(&self, lo: i64, hi: i64) -> bool {
        let hit = |v: &[i64]| {
            let p = v.partition_point(|&s| s < lo);
            p < v.len() && v[p] <= hi
        };
        hit(&self.heads) || hit(&self.tails)
    }
}

/// Runs the Takahashi–Satsuma algorithm on one excursion.
///
/// `start` is the site of the leading record and `word` the excursion
/// including that record. Returns `(heads, tails)` for each soliton in the
/// order the algorithm removes them.
pub fn decompose_excursion(start: i64, word: &[u8]) -> Vec<(Vec<i64>, Vec<i64>)> {
    struct Run {
        bit: u8,
        sites: Vec<i64>,
    }
    let mut runs: Vec<Run> = Vec::new();
    for (j, &b) in word.iter().enumerate().skip(1) {
        let x = start + j as i64;
        match runs.last_mut() {
            Some(r) if r.bit == b => r.sites.push(x),
            _ => runs.push(Run {
                bit: b,
                sites: vec![x],
            }),
        }
    }
    let mut out = Vec::new();
    let mut j = 0usize;
    while !runs.is_empty() {
        if j + 1 >= runs.len() {
            // A balanced word always has a qualifying run before its last
            // one, so this only happens on malformed input.
            debug_assert!(false, "unbalanced excursion word");
            break;
        }
        let k = runs[j].sites.len();
        if runs[j + 1].sites.len() < k {
            j += 1;
            continue;
        }
        let first = std::mem::take(&mut runs[j].sites);
        let second: Vec<i64> = runs[j + 1].sites.drain(..k).collect();
        let (heads, tails) = if runs[j].bit == 1 {
            (first, second)
        } else {
            (second, first)
        };
        out.push((heads, tails));
        runs.remove(j);
        // `runs[j]` is now the remainder of the following run.
        if runs[j].sites.is_empty() {
            runs.remove(j);
        } else if j > 0 {
            let rest = runs.remove(j);
            runs[j - 1].sites.extend(rest.sites);
        }
        j = j.saturating_sub(2);
    }
    out
}

/// All solitons of a configuration with their numbering and volume groups.
#[derive(Clone, Debug)]
pub struct SolitonSet {
    by_size: Vec<Vec<Soliton>>,
    /// Per size, number of solitons with position left of `s_∞(0)`.
    left_counts: Vec<usize>,
    /// Per size, the group id of each soliton; group ids increase left to right.
    groups: Vec<Vec<usize>>,
    /// Per size, the index of the first soliton of each group.
    group_starts: Vec<Vec<usize>>,
    /// Per size, number of groups whose representative lies left of `s_∞(0)`.
    left_group_counts: Vec<usize>,
    owner: HashMap<i64, (usize, usize)>,
    records: RecordIndex,
}

/// One entry of the JSON dump of a [`SolitonSet`].
#[derive(Clone, Debug, Serialize)]
pub struct SolitonRecord {
    pub k: usize,
    pub position: i64,
    pub heads: Vec<i64>,
    pub tails: Vec<i64>,
    pub natural_index: i64,
    pub volume_rep: bool,
    pub volume: usize,
    pub volume_index: i64,
}

/// Decomposes every excursion of the configuration.
pub fn identify(config: &Configuration) -> SolitonSet {
    let records = config.records();
    let mut all: Vec<Soliton> = Vec::new();
    for &start in records.computed_sites() {
        let i = records.index_at_or_before(start);
        let end = records.site(i + 1);
        if end - start < 3 {
            continue;
        }
        let word = config.bits(start, end);
        for (heads, tails) in decompose_excursion(start, &word) {
            all.push(Soliton {
                size: heads.len(),
                heads,
                tails,
                excursion: i,
            });
        }
    }
    SolitonSet::from_solitons(all, records)
}

impl SolitonSet {
    /// Assembles a set from solitons and the records of their configuration.
    pub fn from_solitons(mut all: Vec<Soliton>, records: RecordIndex) -> Self {
        all.sort_by_key(|s| (s.size, s.position()));
        let kmax = all.iter().map(|s| s.size).max().unwrap_or(0);
        let mut by_size: Vec<Vec<Soliton>> = vec![Vec::new(); kmax];
        for s in all {
            by_size[s.size - 1].push(s);
        }
        let s0 = records.site(0);
        let left_counts = by_size
            .iter()
            .map(|v| v.partition_point(|s| s.position() < s0))
            .collect();
        let mut owner = HashMap::new();
        for (ki, v) in by_size.iter().enumerate() {
            for (j, s) in v.iter().enumerate() {
                for &x in s.heads.iter().chain(&s.tails) {
                    owner.insert(x, (ki + 1, j));
                }
            }
        }
        let mut set = Self {
            by_size,
            left_counts,
            groups: Vec::new(),
            group_starts: Vec::new(),
            left_group_counts: Vec::new(),
            owner,
            records,
        };
        set.build_groups();
        set
    }

    fn build_groups(&mut self) {
        let kmax = self.by_size.len();
        let s0 = self.records.site(0);
        for k in 1..=kmax {
            let v = &self.by_size[k - 1];
            let mut groups = Vec::with_capacity(v.len());
            let mut starts = Vec::new();
            for j in 0..v.len() {
                if j > 0 && self.connected(k, j - 1, j) {
                    groups.push(starts.len() - 1);
                } else {
                    starts.push(j);
                    groups.push(starts.len() - 1);
                }
            }
            let left = starts.partition_point(|&j| v[j].position() < s0);
            self.groups.push(groups);
            self.group_starts.push(starts);
            self.left_group_counts.push(left);
        }
    }

    /// Whether consecutive `k`-solitons `a < b` are connected: no record and
    /// no site of a larger soliton in `[sup γ_a, X(γ_b)]`.
    fn connected(&self, k: usize, a: usize, b: usize) -> bool {
        let ga = &self.by_size[k - 1][a];
        let gb = &self.by_size[k - 1][b];
        if ga.excursion != gb.excursion {
            return false;
        }
        let lo = ga.sup();
        let hi = gb.position();
        if lo > hi {
            return false;
        }
        let (ri, rj) = (
            self.records.index_at_or_before(lo),
            self.records.index_at_or_before(hi),
        );
        if ri != rj || self.records.site(ri) == lo {
            return false;
        }
        !self.by_size[k..]
            .iter()
            .flatten()
            .filter(|g| g.excursion == ga.excursion)
            .any(|g| g.meets(lo, hi))
    }

    pub fn records(&self) -> &RecordIndex {
        &self.records
    }

    /// Largest soliton size present, 0 when empty.
    pub fn max_size(&self) -> usize {
        self.by_size.len()
    }

    /// `k`-solitons, left to right.
    pub fn of_size(&self, k: usize) -> &[Soliton] {
        if k == 0 || k > self.by_size.len() {
            return &[];
        }
        &self.by_size[k - 1]
    }

    /// Number of solitons of each size `1..=max_size`.
    pub fn census(&self) -> Vec<usize> {
        self.by_size.iter().map(Vec::len).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Soliton> {
        self.by_size.iter().flatten()
    }

    /// The soliton owning site `x`, as `(size, list index)`.
    pub fn owner_of(&self, x: i64) -> Option<(usize, usize)> {
        self.owner.get(&x).copied()
    }

    /// The `k`-soliton whose heads are exactly `heads`.
    pub fn find_with_heads(&self, k: usize, heads: &[i64]) -> Option<usize> {
        let (size, j) = self.owner_of(*heads.first()?)?;
        (size == k && self.by_size[k - 1][j].heads == heads).then_some(j)
    }

    /// Natural index of the list entry `j` among `k`-solitons.
    pub fn natural_index(&self, k: usize, j: usize) -> i64 {
        j as i64 - self.left_counts[k - 1] as i64 + 1
    }

    /// List entry of the `k`-soliton with natural index `i`.
    pub fn natural(&self, k: usize, i: i64) -> Result<usize> {
        let n = self.of_size(k).len() as i64;
        let j = i - 1 + self.left_counts.get(k.wrapping_sub(1)).copied().unwrap_or(0) as i64;
        if k == 0 || j < 0 || j >= n {
            return Err(Error::NotFound(format!("{k}-soliton with natural index {i}")));
        }
        Ok(j as usize)
    }

    /// List entry of the representative with volume index `i`.
    pub fn volume_rep(&self, k: usize, i: i64) -> Result<usize> {
        let err = || Error::NotFound(format!("{k}-soliton with volume index {i}"));
        if k == 0 || k > self.by_size.len() {
            return Err(err());
        }
        let starts = &self.group_starts[k - 1];
        let g = i - 1 + self.left_group_counts[k - 1] as i64;
        if g < 0 || g >= starts.len() as i64 {
            return Err(err());
        }
        Ok(starts[g as usize])
    }

    /// Volume index of the group holding list entry `j`.
    pub fn volume_index(&self, k: usize, j: usize) -> i64 {
        self.groups[k - 1][j] as i64 - self.left_group_counts[k - 1] as i64 + 1
    }

    /// List entries of the group holding entry `j`.
    pub fn group_of(&self, k: usize, j: usize) -> std::ops::Range<usize> {
        let g = self.groups[k - 1][j];
        let starts = &self.group_starts[k - 1];
        let end = starts.get(g + 1).copied().unwrap_or(self.by_size[k - 1].len());
        starts[g]..end
    }

    /// `Vol(γ)` for list entry `j`.
    pub fn volume(&self, k: usize, j: usize) -> usize {
        self.group_of(k, j).len()
    }

    /// Whether list entry `j` is the leftmost member of its group.
    pub fn is_representative(&self, k: usize, j: usize) -> bool {
        self.group_of(k, j).start == j
    }

    /// Representatives of `k`-groups, as list entries.
    pub fn representatives(&self, k: usize) -> &[usize] {
        if k == 0 || k > self.group_starts.len() {
            return &[];
        }
        &self.group_starts[k - 1]
    }

    /// Number of group representatives left of `s_∞(0)`.
    pub fn left_group_count(&self, k: usize) -> usize {
        self.left_group_counts.get(k.wrapping_sub(1)).copied().unwrap_or(0)
    }

    /// Larger solitons in the same excursion strictly left of list entry `j`,
    /// as `(size, list index)`.
    pub fn interacting_larger(&self, k: usize, j: usize) -> Vec<(usize, usize)> {
        let g = &self.by_size[k - 1][j];
        let x = g.position();
        let mut out = Vec::new();
        for (li, v) in self.by_size.iter().enumerate().skip(k) {
            for (jj, h) in v.iter().enumerate() {
                if h.excursion == g.excursion && h.position() < x {
                    out.push((li + 1, jj));
                }
            }
        }
        out
    }

    /// Whether list entry `j` of size `k` is free.
    pub fn is_free(&self, k: usize, j: usize) -> bool {
        let g = &self.by_size[k - 1][j];
        let x = g.position();
        !self.by_size[k..]
            .iter()
            .flatten()
            .any(|h| h.excursion == g.excursion && h.position() < x)
    }

    /// For each size `ℓ < k`, the number of `ℓ`-solitons lying inside
    /// `[H_1(γ), T_1(γ)]` of list entry `j`.
    pub fn enclosed_counts(&self, k: usize, j: usize) -> Vec<usize> {
        let g = &self.by_size[k - 1][j];
        let (lo, hi) = (g.heads[0], g.tails[0]);
        (1..k)
            .map(|l| {
                self.of_size(l)
                    .iter()
                    .filter(|h| h.excursion == g.excursion && h.position() >= lo && h.sup() <= hi)
                    .count()
            })
            .collect()
    }

    /// JSON-ready listing.
    pub fn to_records(&self) -> Vec<SolitonRecord> {
        let mut out = Vec::new();
        for (ki, v) in self.by_size.iter().enumerate() {
            let k = ki + 1;
            for (j, s) in v.iter().enumerate() {
                out.push(SolitonRecord {
                    k,
                    position: s.position(),
                    heads: s.heads.clone(),
                    tails: s.tails.clone(),
                    natural_index: self.natural_index(k, j),
                    volume_rep: self.is_representative(k, j),
                    volume: self.volume(k, j),
                    volume_index: self.volume_index(k, j),
                });
            }
        }
        out
    }
}

/// The successor `γ(1)` of a `k`-soliton in `next`, the decomposition of
/// `Tη`: the unique `k`-soliton whose heads are the tails of `γ`.
pub fn track_step(sol: &Soliton, next: &SolitonSet) -> Result<usize> {
    next.find_with_heads(sol.size, &sol.tails).ok_or_else(|| {
        Error::Internal(format!(
            "no {}-soliton with heads {:?} after one step",
            sol.size, sol.tails
        ))
    })
}
