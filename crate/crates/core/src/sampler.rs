//! Random configurations with law `ν_q` (record at the origin, i.i.d.
//! excursions) and `μ_q` (the stationary law), built two independent ways.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::lattice::{is_excursion_word, Configuration};
use crate::qstat::{markov_transition, r_bar, QParams};
use crate::seat::{SlotArray, SlotBuilder};

/// Largest configuration the samplers will build.
pub const MAX_SITES: usize = 1 << 28;
/// Proposals allowed per size-biased excursion in [`sample_mu`].
pub const MAX_PROPOSALS: usize = 1_000_000;
/// Excursions are size-biased exactly up to this multiple of the mean length.
pub const LENGTH_CAP_FACTOR: f64 = 64.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Draw `ζ_k(i)` level by level from the top and rebuild the configuration.
    SlotReconstruction,
    /// Run the two-state Markov chain from a hole with an empty carrier.
    MarkovDirect,
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleSpec {
    pub q: QParams,
    /// Complete excursions right of the origin (record numbers `0..records`).
    pub records: usize,
    /// Complete excursions left of the origin (record numbers `−left..0`).
    pub left: usize,
    pub seed: u64,
    pub method: Method,
}

impl SampleSpec {
    pub fn new(q: QParams, records: usize, seed: u64) -> Self {
        SampleSpec { q, records, left: 0, seed, method: Method::SlotReconstruction }
    }

    pub fn with_left(mut self, left: usize) -> Self {
        self.left = left;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.records == 0 {
            return Err(Error::Domain("at least one excursion is required".into()));
        }
        if self.method == Method::MarkovDirect && self.q.markov_ab().is_none() {
            return Err(Error::Capability(
                "markov-direct sampling needs a Bernoulli or Markov q".into(),
            ));
        }
        Ok(())
    }

    /// Mean excursion length `1/r̄_0(q)`.
    pub fn mean_excursion_length(&self) -> Result<f64> {
        Ok(1.0 / r_bar(&self.q, 0)?.to_f64())
    }
}

/// Random stream of replica `replica`: ChaCha8 keyed by `seed`, stream
/// number `replica`. Streams do not overlap, so ensembles are reproducible
/// in any order.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// `P(G = m) = q^m (1 − q)` by inversion: `⌊log U / log q⌋`, `U ∈ (0, 1]`.
pub fn geometric<R: Rng + ?Sized>(rng: &mut R, q: f64) -> u64 {
    if q <= 0.0 {
        return 0;
    }
    let u: f64 = 1.0 - rng.gen::<f64>();
    (u.ln() / q.ln()).floor() as u64
}

/// Output of the slot method.
#[derive(Clone, Debug)]
pub struct SlotSample {
    /// Record at the origin.
    pub config: Configuration,
    /// The drawn `ζ_k(i)`.
    pub slots: SlotArray,
    /// `slot_counts[k]` is the number of `k`-slots that were drawn.
    pub slot_counts: Vec<usize>,
}

/// Slot method on `records` records.
pub fn sample_slots<R: Rng + ?Sized>(q: &QParams, records: usize, rng: &mut R) -> Result<SlotSample> {
    let mut slots = SlotArray::new(records);
    let mut builder = SlotBuilder::new(records);
    let top = q.max_size().unwrap_or(0);
    let mut slot_counts = vec![0; top + 1];
    for k in (1..=top).rev() {
        let qk = q.get_f64(k);
        if qk == 0.0 {
            continue;
        }
        slot_counts[k] = builder.fill_level(k, |i| {
            let n = geometric(rng, qk);
            if n > 0 {
                slots.set(k, i as i64, n);
            }
            Ok(n)
        })?;
        if builder.len() > MAX_SITES {
            return Err(Error::Capacity(format!(
                "slot reconstruction passed {MAX_SITES} sites at level {k}"
            )));
        }
    }
    Ok(SlotSample { config: builder.finish(), slots, slot_counts })
}

/// Markov-chain method: `records` excursions of the chain started from a
/// hole with an empty carrier, which is the chain conditioned on a record
/// at the origin.
pub fn sample_markov_direct<R: Rng + ?Sized>(
    q: &QParams,
    records: usize,
    rng: &mut R,
) -> Result<Configuration> {
    let (a, b) = q
        .markov_ab()
        .ok_or_else(|| Error::Capability("markov-direct sampling needs a Markov q".into()))?;
    let m = markov_transition(&a, &b)?;
    let p01 = m[0][1].to_f64();
    let p11 = m[1][1].to_f64();
    let mut bits: Vec<u8> = vec![0];
    let mut load = 0u64;
    let mut state = 0u8;
    let mut seen = 1usize;
    loop {
        let up = if state == 0 { p01 } else { p11 };
        state = u8::from(rng.gen::<f64>() < up);
        if state == 0 && load == 0 {
            seen += 1;
            if seen > records {
                break;
            }
        }
        bits.push(state);
        load = if state == 1 { load + 1 } else { load.saturating_sub(1) };
        if bits.len() > MAX_SITES {
            return Err(Error::Capacity(format!("markov chain passed {MAX_SITES} sites")));
        }
    }
    Ok(Configuration::from_bits(0, bits))
}

/// `records` i.i.d. excursions under `ν_q`, the first record at the origin.
pub fn sample_excursions<R: Rng + ?Sized>(spec: &SampleSpec, records: usize, rng: &mut R) -> Result<Configuration> {
    sample_records(spec, records, rng)
}

fn sample_records<R: Rng + ?Sized>(spec: &SampleSpec, records: usize, rng: &mut R) -> Result<Configuration> {
    match spec.method {
        Method::SlotReconstruction => Ok(sample_slots(&spec.q, records, rng)?.config),
        Method::MarkovDirect => sample_markov_direct(&spec.q, records, rng),
    }
}

/// `ν_q` sample with excursions `−left..records`, record `0` at the origin.
pub fn sample_nu_with<R: Rng + ?Sized>(spec: &SampleSpec, rng: &mut R) -> Result<Configuration> {
    spec.validate()?;
    let total = spec.left + spec.records;
    let c = sample_records(spec, total, rng)?;
    if spec.left == 0 {
        return Ok(c);
    }
    let origin = c.records().site(spec.left as i64);
    Ok(c.shift(origin))
}

/// `ν_q` sample of replica `replica`.
pub fn sample_nu(spec: &SampleSpec, replica: u64) -> Result<Configuration> {
    sample_nu_with(spec, &mut replica_rng(spec.seed, replica))
}

/// One excursion drawn with probability proportional to its length (capped
/// at [`LENGTH_CAP_FACTOR`] times the mean).
fn size_biased_excursion<R: Rng + ?Sized>(spec: &SampleSpec, rng: &mut R) -> Result<Vec<u8>> {
    let cap = (LENGTH_CAP_FACTOR * spec.mean_excursion_length()?).max(16.0);
    for _ in 0..MAX_PROPOSALS {
        let e = sample_records(spec, 1, rng)?;
        let len = e.records().site(1) as usize;
        if rng.gen::<f64>() * cap < len as f64 {
            return Ok(e.bits(0, len as i64));
        }
    }
    Err(Error::Capacity(format!(
        "no excursion accepted in {MAX_PROPOSALS} proposals (length cap {cap})"
    )))
}

/// `μ_q` sample: `left` excursions, a size-biased excursion holding the
/// origin at a uniform site, then `records` excursions.
pub fn sample_mu_with<R: Rng + ?Sized>(spec: &SampleSpec, rng: &mut R) -> Result<Configuration> {
    spec.validate()?;
    let before = if spec.left > 0 {
        let c = sample_records(spec, spec.left, rng)?;
        c.bits(0, c.records().site(spec.left as i64))
    } else {
        Vec::new()
    };
    let middle = size_biased_excursion(spec, rng)?;
    let after = {
        let c = sample_records(spec, spec.records, rng)?;
        c.bits(0, c.records().site(spec.records as i64))
    };
    let offset = rng.gen_range(0..middle.len());
    let origin = -((before.len() + offset) as i64);
    let bits = before.into_iter().chain(middle).chain(after);
    Ok(Configuration::from_bits(origin, bits))
}

/// `μ_q` sample of replica `replica`.
pub fn sample_mu(spec: &SampleSpec, replica: u64) -> Result<Configuration> {
    sample_mu_with(spec, &mut replica_rng(spec.seed, replica))
}

/// Counts of excursions by `(balls, descents)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Census {
    pub counts: BTreeMap<(usize, usize), u64>,
    pub total: u64,
}

impl Census {
    pub fn frequency(&self, balls: usize, descents: usize) -> f64 {
        self.counts.get(&(balls, descents)).copied().unwrap_or(0) as f64 / self.total as f64
    }

    pub fn mean_length(&self) -> f64 {
        let sum: u64 = self.counts.iter().map(|(&(m, _), &c)| (2 * m as u64 + 1) * c).sum();
        sum as f64 / self.total as f64
    }
}

/// Histogram of the excursions that start at or after record `0` and
/// inside the stored window.
pub fn excursion_census(samples: &[Configuration]) -> Census {
    let mut census = Census::default();
    for c in samples {
        let first = c.records().site(0);
        let end = c.window().1;
        for e in c.excursions() {
            if e.start < first || e.start >= end {
                continue;
            }
            *census.counts.entry((e.balls(), e.descents())).or_insert(0) += 1;
            census.total += 1;
        }
    }
    census
}

/// All excursion words with `m` balls, by exhaustive search over `{0,1}^{2m+1}`.
pub fn enumerate_excursions(m: usize) -> Vec<Vec<u8>> {
    let len = 2 * m + 1;
    (0u64..1 << len)
        .map(|w| (0..len).map(|j| (w >> (len - 1 - j) & 1) as u8).collect::<Vec<u8>>())
        .filter(|word| is_excursion_word(word))
        .collect()
}

/// Narayana number `N(m, z) = C(m, z) C(m, z−1) / m`, `N(0, 0) = 1`;
/// `None` past `u128`.
pub fn narayana(m: u64, z: u64) -> Option<u128> {
    if m == 0 {
        return Some(u128::from(z == 0));
    }
    if z == 0 || z > m {
        return Some(0);
    }
    binomial(m, z)?.checked_mul(binomial(m, z - 1)?).map(|p| p / m as u128)
}

fn binomial(n: u64, k: u64) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i + 1) as u128;
    }
    Some(acc)
}

fn ln_narayana(m: u64, z: u64) -> f64 {
    if m == 0 {
        return if z == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if z == 0 || z > m {
        return f64::NEG_INFINITY;
    }
    ln_binomial(m, z) + ln_binomial(m, z - 1) - (m as f64).ln()
}

/// Probability under the Markov class that an excursion has `m` balls and
/// `z` descents: `p00 · N(m, z) · a^z · b^{m−z}`.
pub fn markov_excursion_probability(q: &QParams, m: u64, z: u64) -> Result<f64> {
    let (a, b) = q
        .markov_ab()
        .ok_or_else(|| Error::Capability("excursion law needs a Markov q".into()))?;
    let p00 = markov_transition(&a, &b)?[0][0].to_f64();
    let n = ln_narayana(m, z);
    if n == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let (a, b) = (a.to_f64(), b.to_f64());
    Ok(p00 * (n + z as f64 * a.ln() + (m - z) as f64 * b.ln()).exp())
}
