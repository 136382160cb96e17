//! Tracking solitons through time.
//!
//! [`History`] decomposes every configuration `Tᵐη` and links each soliton to
//! its successor, so overtakes and blocked steps can be read off directly from
//! their definitions. [`track_local`] follows a few tagged solitons only,
//! decomposing just the excursion that holds each of them; it is what the
//! Monte Carlo experiments use.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::Configuration;
use crate::soliton::{decompose_excursion, identify, track_step, SolitonSet};

/// How a tagged soliton is selected at time 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tag {
    /// Natural index `i`, counting every `k`-soliton.
    Natural(i64),
    /// Volume index `(i)`, counting group representatives only.
    Volume(i64),
}

/// Decompositions of `η, Tη, …, Tⁿη` with soliton lineages.
#[derive(Clone, Debug)]
pub struct History {
    configs: Vec<Configuration>,
    sets: Vec<SolitonSet>,
    /// `lineage[t][k-1][j]`: list entry at time `t` of the soliton that was
    /// list entry `j` at time 0.
    lineage: Vec<Vec<Vec<usize>>>,
}

impl History {
    pub fn run(config: &Configuration, n: usize) -> Result<Self> {
        let mut configs = vec![config.clone()];
        let mut sets = vec![identify(config)];
        let first: Vec<Vec<usize>> = sets[0]
            .census()
            .iter()
            .map(|&c| (0..c).collect())
            .collect();
        let mut lineage = vec![first];
        for t in 0..n {
            let next = configs[t].evolve();
            let next_set = identify(&next);
            if next_set.census() != sets[t].census() {
                return Err(Error::Internal(format!(
                    "soliton census changed at step {}: {:?} -> {:?}",
                    t + 1,
                    sets[t].census(),
                    next_set.census()
                )));
            }
            let mut map = Vec::with_capacity(lineage[t].len());
            for (ki, entries) in lineage[t].iter().enumerate() {
                let now = sets[t].of_size(ki + 1);
                let mut row = Vec::with_capacity(entries.len());
                for &j in entries {
                    row.push(track_step(&now[j], &next_set)?);
                }
                map.push(row);
            }
            lineage.push(map);
            configs.push(next);
            sets.push(next_set);
        }
        Ok(Self { configs, sets, lineage })
    }

    /// Number of steps `n`.
    pub fn steps(&self) -> usize {
        self.sets.len() - 1
    }

    pub fn config(&self, t: usize) -> &Configuration {
        &self.configs[t]
    }

    pub fn set(&self, t: usize) -> &SolitonSet {
        &self.sets[t]
    }

    /// List entry at time 0 of the tagged `k`-soliton.
    pub fn resolve(&self, k: usize, tag: Tag) -> Result<usize> {
        match tag {
            Tag::Natural(i) => self.sets[0].natural(k, i),
            Tag::Volume(i) => self.sets[0].volume_rep(k, i),
        }
    }

    /// List entry at time `t` of the soliton that was entry `j` at time 0.
    pub fn index_at(&self, k: usize, j: usize, t: usize) -> usize {
        self.lineage[t][k - 1][j]
    }

    /// `X(γ(t))` for the soliton that was entry `j` at time 0.
    pub fn position(&self, k: usize, j: usize, t: usize) -> i64 {
        self.sets[t].of_size(k)[self.index_at(k, j, t)].position()
    }

    pub fn is_free(&self, k: usize, j: usize, t: usize) -> bool {
        self.sets[t].is_free(k, self.index_at(k, j, t))
    }

    /// Positions at time `t` of the `k`-group representatives of time 0,
    /// keyed by volume index, left to right.
    pub fn representative_positions(&self, k: usize, t: usize) -> Vec<(i64, i64)> {
        let s0 = &self.sets[0];
        s0.representatives(k)
            .iter()
            .map(|&j| (s0.volume_index(k, j), self.position(k, j, t)))
            .collect()
    }

    /// Full record of the `k`-soliton that was entry `j` at time 0.
    pub fn trajectory(&self, k: usize, j: usize) -> TaggedTrajectory {
        let n = self.steps();
        let positions: Vec<i64> = (0..=n).map(|t| self.position(k, j, t)).collect();
        let free: Vec<bool> = (0..=n).map(|t| self.is_free(k, j, t)).collect();
        let kmax = self.sets[0].max_size();
        let mut overtaken = vec![vec![0u64; k.saturating_sub(1)]; n];
        let mut overtakers = vec![vec![0u64; kmax.saturating_sub(k)]; n];
        for l in 1..=kmax {
            if l == k {
                continue;
            }
            for other in 0..self.sets[0].of_size(l).len() {
                for m in 1..=n {
                    let (a0, a1) = (positions[m - 1], positions[m]);
                    let (b0, b1) = (self.position(l, other, m - 1), self.position(l, other, m));
                    if l < k && a0 < b0 && a1 > b1 {
                        overtaken[m - 1][l - 1] += 1;
                    }
                    if l > k && b0 < a0 && b1 > a1 {
                        overtakers[m - 1][l - k - 1] += 1;
                    }
                }
            }
        }
        TaggedTrajectory {
            k,
            positions,
            free,
            overtaken,
            overtakers,
        }
    }
}

/// Positions and interaction counters of one tagged `k`-soliton.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TaggedTrajectory {
    pub k: usize,
    /// `X(γ(m))` for `m = 0..=n`.
    pub positions: Vec<i64>,
    /// Whether `γ(m)` is free, `m = 0..=n`.
    pub free: Vec<bool>,
    /// `overtaken[m-1][ℓ-1]`: `ℓ`-solitons overtaken at step `m`, `ℓ < k`.
    pub overtaken: Vec<Vec<u64>>,
    /// `overtakers[m-1][ℓ-k-1]`: `ℓ`-solitons overtaking at step `m`, `ℓ > k`.
    pub overtakers: Vec<Vec<u64>>,
}

impl TaggedTrajectory {
    pub fn steps(&self) -> usize {
        self.positions.len() - 1
    }

    /// `Y(n) = X(n) − X(0)`.
    pub fn displacement(&self, n: usize) -> i64 {
        self.positions[n] - self.positions[0]
    }

    /// `M_k(n)`: blocked steps among times `0..n`.
    pub fn blocked(&self, n: usize) -> u64 {
        self.free[..n].iter().filter(|f| !**f).count() as u64
    }

    /// `Σ_{m ≤ n} N_{k,ℓ}(m)`.
    pub fn overtaken_total(&self, l: usize, n: usize) -> u64 {
        if l == 0 || l >= self.k {
            return 0;
        }
        self.overtaken[..n].iter().map(|row| row[l - 1]).sum()
    }

    /// `M_{k,ℓ}(n)`.
    pub fn overtaker_total(&self, l: usize, n: usize) -> u64 {
        if l <= self.k {
            return 0;
        }
        self.overtakers[..n]
            .iter()
            .map(|row| row.get(l - self.k - 1).copied().unwrap_or(0))
            .sum()
    }
}

/// Tracks one `k`-soliton of `config` for `n` steps through a full history.
pub fn run_tagged(config: &Configuration, k: usize, tag: Tag, n: usize) -> Result<TaggedTrajectory> {
    let h = History::run(config, n)?;
    let j = h.resolve(k, tag)?;
    Ok(h.trajectory(k, j))
}

/// Positions and free flags of one soliton followed by [`track_local`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LocalTrajectory {
    pub positions: Vec<i64>,
    pub free: Vec<bool>,
}

impl LocalTrajectory {
    pub fn displacement(&self, n: usize) -> i64 {
        self.positions[n] - self.positions[0]
    }

    pub fn blocked(&self, n: usize) -> u64 {
        self.free[..n].iter().filter(|f| !**f).count() as u64
    }
}

/// Follows the solitons with the given head sets for `n` steps, decomposing
/// only the excursion holding each of them.
///
/// `stop_right`, when given, is the last site where the configuration is
/// known to be exact; an error is returned as soon as an excursion holding a
/// tagged soliton would end past it.
pub fn track_local(
    config: &Configuration,
    heads: &[Vec<i64>],
    n: usize,
    stop_right: Option<i64>,
) -> Result<Vec<LocalTrajectory>> {
    track_local_trimmed(config, heads, n, stop_right, |_| i64::MAX)
}

/// Sites dropped at once by [`track_local_trimmed`].
const TRIM_CHUNK: i64 = 4096;

/// [`track_local`] that drops the configuration left of the last record at
/// or before `keep_behind(t)` sites behind the leftmost tagged soliton at
/// step `t`. The carrier is empty at a record, so the rest evolves exactly
/// until material from the dropped part would have arrived.
pub fn track_local_trimmed<F>(
    config: &Configuration,
    heads: &[Vec<i64>],
    n: usize,
    stop_right: Option<i64>,
    keep_behind: F,
) -> Result<Vec<LocalTrajectory>>
where
    F: Fn(usize) -> i64,
{
    let mut out = vec![LocalTrajectory::default(); heads.len()];
    let mut current: Vec<Vec<i64>> = heads.to_vec();
    let mut eta = config.clone();
    let mut loads = Vec::new();
    for t in 0..=n {
        let next = if t < n {
            Some(eta.evolve_with_checkpoints(&mut loads))
        } else {
            eta.evolve_with_checkpoints(&mut loads);
            None
        };
        for (tr, h) in out.iter_mut().zip(current.iter_mut()) {
            let (start, end) = excursion_around(&eta, &loads, h[0]);
            if let Some(limit) = stop_right {
                if end - 1 > limit {
                    return Err(Error::LightCone(format!(
                        "excursion [{start}, {end}) at step {t} passes the exact region ending at {limit}"
                    )));
                }
            }
            let word = eta.bits(start, end);
            let parts = decompose_excursion(start, &word);
            let me = parts.iter().position(|(hd, _)| hd == h).ok_or_else(|| {
                Error::Internal(format!("no soliton with heads {h:?} at step {t}"))
            })?;
            let size = h.len();
            let x = parts[me].0[0].min(parts[me].1[0]) - 1;
            let free = !parts.iter().any(|(hd, tl)| {
                hd.len() > size && hd[0].min(tl[0]) - 1 < x
            });
            tr.positions.push(x);
            tr.free.push(free);
            *h = parts[me].1.clone();
        }
        let Some(next) = next else { break };
        let leftmost = current.iter().map(|h| h[0]).min().unwrap_or(i64::MIN);
        let cut = leftmost.saturating_sub(keep_behind(t));
        eta = if cut.saturating_sub(eta.origin()) >= TRIM_CHUNK && cut < leftmost {
            let record = excursion_around(&eta, &loads, cut).0;
            let hi = next.window().1;
            Configuration::from_bits(record, next.bits(record, hi))
        } else {
            next
        };
    }
    Ok(out)
}

/// `W(x − 1)` from the per-word loads of [`Configuration::evolve_with_checkpoints`].
fn load_before(c: &Configuration, loads: &[u32], x: i64) -> u64 {
    let idx = x - c.origin();
    if idx <= 0 {
        return 0;
    }
    let idx = idx as usize;
    let words = c.words();
    let w = idx / 64;
    if w >= words.len() {
        let last = *loads.last().unwrap_or(&0) as u64;
        return last.saturating_sub((idx - words.len() * 64) as u64);
    }
    let mut load = loads[w] as u64;
    let word = words[w];
    for b in 0..idx % 64 {
        load = if word >> b & 1 == 1 { load + 1 } else { load.saturating_sub(1) };
    }
    load
}

/// The excursion `[s(i), s(i+1))` holding the non-record site `x`.
fn excursion_around(c: &Configuration, loads: &[u32], x: i64) -> (i64, i64) {
    // Walk back word by word until a record shows up; left of the window
    // every site is a record.
    let origin = c.origin();
    let mut hi = x;
    let start = loop {
        if hi < origin {
            break origin - 1;
        }
        let lo = origin + (hi - origin) / 64 * 64;
        let mut load = load_before(c, loads, lo);
        let mut found = None;
        for y in lo..=hi {
            let b = c.get(y);
            if b == 0 && load == 0 {
                found = Some(y);
            }
            load = if b == 1 { load + 1 } else { load.saturating_sub(1) };
        }
        if let Some(y) = found {
            break y;
        }
        hi = lo - 1;
    };
    let mut load = 0u64;
    let mut y = start;
    loop {
        let b = c.get(y);
        if y > start && b == 0 && load == 0 {
            return (start, y);
        }
        load = if b == 1 { load + 1 } else { load.saturating_sub(1) };
        y += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_soliton_moves_freely() {
        let c: Configuration = "@0 0111000000000".parse().unwrap();
        let tr = run_tagged(&c, 3, Tag::Natural(1), 3).unwrap();
        assert_eq!(tr.positions, vec![0, 3, 6, 9]);
        assert_eq!(tr.blocked(3), 0);
    }

    #[test]
    fn excursion_search_crosses_words() {
        let mut bits = vec![0u8; 200];
        for b in &mut bits[60..70] {
            *b = 1;
        }
        let c = Configuration::from_bits(-5, bits);
        let mut loads = Vec::new();
        c.evolve_with_checkpoints(&mut loads);
        let (s, e) = excursion_around(&c, &loads, 70);
        assert_eq!((s, e), (54, 75));
    }
}
