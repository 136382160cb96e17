use boxball::qstat::{density, q_from_bernoulli, q_from_markov, QParams};
use boxball::sampler::*;
use boxball::seat::seat_decompose;
use boxball::stats::{chi_square_goodness, chi_square_homogeneity, correlation, summarize};
use boxball::{Error, Scalar};

fn bern_quarter() -> QParams {
    q_from_bernoulli(Scalar::ratio(1, 4)).unwrap()
}

fn within(x: f64, target: f64, se: f64, sigmas: f64) -> bool {
    (x - target).abs() <= sigmas * se
}

#[test]
fn drawn_slot_means_are_alpha() {
    let q = bern_quarter();
    let mut rng = replica_rng(11, 0);
    let s = sample_slots(&q, 40_000, &mut rng).unwrap();
    for k in 1..=3 {
        let n = s.slot_counts[k] as f64;
        let alpha = q.alpha(k).to_f64();
        let mean = s.slots.total(k) as f64 / n;
        let se = (alpha * (1.0 + alpha) / n).sqrt();
        assert!(within(mean, alpha, se, 5.0), "k={k}: {mean} vs {alpha}");
    }
}

#[test]
fn reconstruction_recovers_the_drawn_slots() {
    let finite = QParams::finite(vec![Scalar::ratio(1, 5), Scalar::ratio(1, 10), Scalar::ratio(1, 20)]).unwrap();
    for (q, seed) in [(bern_quarter(), 1), (finite, 2)] {
        for replica in 0..20 {
            let s = sample_slots(&q, 300, &mut replica_rng(seed, replica)).unwrap();
            let view = seat_decompose(&s.config);
            assert_eq!(view.slots().zeta, s.slots.zeta, "replica {replica}");
            assert_eq!(s.config.records().site(300), s.config.len() as i64);
        }
    }
}

#[test]
fn markov_direct_slots_are_independent_geometrics() {
    let q = bern_quarter();
    let spec = SampleSpec::new(q.clone(), 20_000, 5).with_method(Method::MarkovDirect);
    let c = sample_nu(&spec, 0).unwrap();
    let view = seat_decompose(&c);
    let slots = view.slots();
    let end = c.window().1 - 1;
    for k in 1..=2 {
        let n = view.xi(k, end) + 1;
        let z: Vec<f64> = (0..n).map(|i| slots.get(k, i) as f64).collect();
        let alpha = q.alpha(k).to_f64();
        let s = summarize(&z);
        assert!(within(s.mean, alpha, (alpha * (1.0 + alpha) / n as f64).sqrt(), 5.0), "k={k} mean {}", s.mean);
        assert!((s.variance / (alpha * (1.0 + alpha)) - 1.0).abs() < 0.15, "k={k} variance {}", s.variance);
        let lag = correlation(&z[..z.len() - 1], &z[1..]);
        assert!(lag.abs() < 5.0 / (n as f64).sqrt(), "k={k} lag correlation {lag}");
    }
}

/// Excursion law of the Bernoulli class: `(1 − ρ) N(m, z) (ρ(1 − ρ))^m`.
fn bernoulli_excursion_law(rho: f64, m: usize, z: usize) -> f64 {
    const NARAYANA: [&[f64]; 5] = [&[1.0], &[0.0, 1.0], &[0.0, 1.0, 1.0], &[0.0, 1.0, 3.0, 1.0], &[0.0, 1.0, 6.0, 6.0, 1.0]];
    (1.0 - rho) * NARAYANA[m][z] * (rho * (1.0 - rho)).powi(m as i32)
}

fn census_cells(census: &Census) -> (Vec<u64>, Vec<f64>) {
    let mut observed = Vec::new();
    let mut expected = Vec::new();
    let mut seen = 0u64;
    let mut mass = 0.0;
    for m in 0..=4 {
        for z in (m.min(1))..=m {
            let c = census.counts.get(&(m, z)).copied().unwrap_or(0);
            let p = bernoulli_excursion_law(0.25, m, z);
            observed.push(c);
            expected.push(p);
            seen += c;
            mass += p;
        }
    }
    observed.push(census.total - seen);
    expected.push(1.0 - mass);
    (observed, expected)
}

#[test]
fn both_samplers_follow_the_narayana_excursion_law() {
    for method in [Method::SlotReconstruction, Method::MarkovDirect] {
        let spec = SampleSpec::new(bern_quarter(), 2_000, 21).with_method(method);
        let samples: Vec<_> = (0..20).map(|r| sample_nu(&spec, r).unwrap()).collect();
        let census = excursion_census(&samples);
        assert_eq!(census.total, 40_000);
        let (obs, exp) = census_cells(&census);
        let t = chi_square_goodness(&obs, &exp).unwrap();
        assert!(t.p_value > 1e-3, "{method:?}: {t:?}");
        let mean = census.mean_length();
        assert!((mean - 2.0).abs() < 0.05, "{method:?}: mean excursion length {mean}");
    }
}

#[test]
fn library_excursion_law_matches_the_counting_formula() {
    let q = bern_quarter();
    for m in 0..=4u64 {
        for z in 0..=m {
            let lib = markov_excursion_probability(&q, m, z).unwrap();
            let want = if m > 0 && z == 0 { 0.0 } else { bernoulli_excursion_law(0.25, m as usize, z as usize) };
            assert!((lib - want).abs() < 1e-15, "({m}, {z})");
        }
    }
    // The law sums to one.
    let total: f64 = (0..200u64).flat_map(|m| (0..=m).map(move |z| (m, z))).map(|(m, z)| markov_excursion_probability(&q, m, z).unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9, "{total}");
}

#[test]
fn samplers_agree_on_excursion_sizes() {
    let mut counts = [[0u64; 7]; 2];
    for (row, method) in [Method::SlotReconstruction, Method::MarkovDirect].into_iter().enumerate() {
        let spec = SampleSpec::new(bern_quarter(), 5_000, 77).with_method(method);
        let samples: Vec<_> = (0..8).map(|r| sample_nu(&spec, r).unwrap()).collect();
        for (&(m, _), &c) in &excursion_census(&samples).counts {
            counts[row][m.min(6)] += c;
        }
    }
    let t = chi_square_homogeneity(&counts[0], &counts[1]).unwrap();
    assert!(t.p_value > 1e-3, "{t:?}");
}

#[test]
fn nu_density_matches_q_for_several_classes() {
    let markov = q_from_markov(Scalar::ratio(1, 10), Scalar::ratio(3, 10)).unwrap();
    let finite = QParams::finite(vec![Scalar::ratio(1, 5), Scalar::ratio(1, 10)]).unwrap();
    let cases = [
        (bern_quarter(), Method::MarkovDirect),
        (markov.clone(), Method::MarkovDirect),
        (markov, Method::SlotReconstruction),
        (finite, Method::SlotReconstruction),
    ];
    for (q, method) in cases {
        let rho = density(&q).unwrap().to_f64();
        let spec = SampleSpec::new(q, 4_000, 3).with_method(method);
        let per: Vec<f64> = (0..40)
            .map(|r| {
                let c = sample_nu(&spec, r).unwrap();
                c.count_ones() as f64 / c.len() as f64
            })
            .collect();
        let s = summarize(&per);
        assert!(within(s.mean, rho, s.std_err, 5.0), "{method:?}: {} vs {rho}", s.mean);
    }
}

#[test]
fn mu_has_density_rho_and_record_probability_one_minus_two_rho() {
    for method in [Method::SlotReconstruction, Method::MarkovDirect] {
        let spec = SampleSpec::new(bern_quarter(), 4, 8).with_left(4).with_method(method);
        let n = 20_000;
        let mut ones = 0usize;
        let mut records = 0usize;
        for r in 0..n {
            let c = sample_mu(&spec, r).unwrap();
            ones += c.get(0) as usize;
            records += usize::from(c.records().is_record(0));
        }
        let (p1, pr) = (ones as f64 / n as f64, records as f64 / n as f64);
        let se1 = (0.25f64 * 0.75 / n as f64).sqrt();
        let se2 = (0.25f64 / n as f64).sqrt();
        assert!(within(p1, 0.25, se1, 5.0), "{method:?}: P(η(0) = 1) = {p1}");
        assert!(within(pr, 0.5, se2, 5.0), "{method:?}: P(record at 0) = {pr}");
    }
}

#[test]
fn mu_pair_correlation_is_markov() {
    // Under the Bernoulli class neighbouring cells are independent.
    let spec = SampleSpec::new(bern_quarter(), 4, 17).with_left(4);
    let n = 20_000;
    let both = (0..n)
        .filter(|&r| {
            let c = sample_mu(&spec, r).unwrap();
            c.get(0) == 1 && c.get(1) == 1
        })
        .count() as f64
        / n as f64;
    assert!(within(both, 1.0 / 16.0, (1.0f64 / 16.0 * 15.0 / 16.0 / n as f64).sqrt(), 5.0), "{both}");
}

#[test]
fn left_excursions_keep_record_zero_at_the_origin() {
    let spec = SampleSpec::new(bern_quarter(), 30, 4).with_left(12);
    for r in 0..20 {
        let c = sample_nu(&spec, r).unwrap();
        assert!(c.records().is_record(0));
        assert_eq!(c.get(0), 0);
        assert_eq!(c.window().0, c.records().site(-12));
        assert_eq!(c.window().1, c.records().site(30));
    }
}

#[test]
fn sampling_is_deterministic_per_seed_and_replica() {
    for method in [Method::SlotReconstruction, Method::MarkovDirect] {
        let spec = SampleSpec::new(bern_quarter(), 100, 99).with_left(3).with_method(method);
        assert_eq!(sample_nu(&spec, 7).unwrap(), sample_nu(&spec, 7).unwrap());
        assert_eq!(sample_mu(&spec, 7).unwrap(), sample_mu(&spec, 7).unwrap());
        let other = SampleSpec { seed: 100, ..spec.clone() };
        assert_ne!(sample_nu(&spec, 7).unwrap(), sample_nu(&other, 7).unwrap());
    }
}

#[test]
fn markov_direct_rejects_non_markov_q() {
    let finite = QParams::finite(vec![Scalar::ratio(1, 5)]).unwrap();
    let spec = SampleSpec::new(finite, 10, 1).with_method(Method::MarkovDirect);
    assert!(matches!(sample_nu(&spec, 0), Err(Error::Capability(_))));
    let empty = SampleSpec::new(bern_quarter(), 0, 1);
    assert!(matches!(sample_nu(&empty, 0), Err(Error::Domain(_))));
}

#[test]
fn geometric_inversion_has_the_right_mean() {
    let mut rng = replica_rng(1, 1);
    let q = 0.3;
    let n = 100_000;
    let xs: Vec<f64> = (0..n).map(|_| geometric(&mut rng, q) as f64).collect();
    let s = summarize(&xs);
    let alpha = q / (1.0 - q);
    assert!(within(s.mean, alpha, s.std_err, 5.0));
    let zeros = xs.iter().filter(|&&x| x == 0.0).count() as f64 / n as f64;
    assert!((zeros - 0.7).abs() < 0.01);
}
