mod common;

use boxball::seat::{offset_of, seat_decompose, SeatLabel};
use boxball::qstat::{q_from_bernoulli, QParams};
use boxball::skip::{
    audit_counting, crossing_index, orthogonal_decomposition, skip, skip_recentered, slot_stop,
};
use boxball::Scalar;
use boxball::soliton::identify;
use boxball::tagged::{track_local, History, Tag};
use boxball::{Configuration, Error};
use common::{cfg, config_strategy};
use proptest::prelude::*;

const WORKED: &str = "@-4 0110011101011000100";

#[test]
fn worked_table_origin_on_a_counted_site() {
    let r = skip(&cfg(WORKED), 1);
    assert_eq!(r.origin_shift, 2);
    assert_eq!(r.image.bits(-2, 7), vec![0, 1, 0, 1, 1, 1, 0, 0, 0]);
    assert_eq!(r.image.records().site(0), -2);
}

#[test]
fn worked_table_origin_on_a_skipped_site() {
    // Same word one site to the left: the origin now holds a (1,↑) seat.
    let shifted = cfg("@-5 0110011101011000100");
    assert_eq!(seat_decompose(&shifted).label(0), SeatLabel::Up(1));
    let r = skip(&shifted, 1);
    assert_eq!(r.image.bits(-3, 6), vec![0, 0, 1, 0, 1, 1, 1, 0, 0]);
    assert_eq!(r.image, skip(&cfg(WORKED), 1).image);
}

#[test]
fn skipping_small_solitons_leaves_nothing() {
    assert_eq!(skip(&Configuration::zeros(), 3).image.count_ones(), 0);
    let c = cfg("@0 0100110001011000");
    assert_eq!(skip(&c, 2).image.count_ones(), 0);
    assert_eq!(skip(&c, 1).image.count_ones(), 2);
}

#[test]
fn skip_recentered_on_carrier_figure() {
    let eta = cfg("@3 110001110011001011000");
    for k in 1..4 {
        assert_eq!(skip(&eta, k).image.recenter(), skip_recentered(&eta, k));
    }
    assert_eq!(skip_recentered(&Configuration::zeros_window(-4, 9), 1).count_ones(), 0);
}

#[test]
fn group_overtake_counts_match_slot_sums() {
    let eta = cfg("@0 11000101010000000000");
    let audit = audit_counting(&eta, 2, 1, 4).unwrap();
    assert!(audit.passed(), "{:?}", audit.failures().collect::<Vec<_>>());
    let h = History::run(&eta.recenter(), 4).unwrap();
    let j = h.resolve(2, Tag::Natural(1)).unwrap();
    assert_eq!(h.trajectory(2, j).overtaken_total(1, 4), 3);
}

#[test]
fn blocked_two_soliton_under_a_three_soliton() {
    let eta = cfg("@0 111000110100000000000");
    let audit = audit_counting(&eta, 2, 1, 3).unwrap().into_result().unwrap();
    let blocked: Vec<_> = audit
        .checks
        .iter()
        .filter(|c| c.name == "blocked steps as record count")
        .map(|c| c.value)
        .collect();
    assert_eq!(blocked, vec![0, 1, 2, 2]);
    let h = History::run(&eta.recenter(), 3).unwrap();
    let tr = h.trajectory(2, 0);
    assert_eq!(tr.overtaker_total(3, 3), 1);
}

#[test]
fn isolated_soliton_has_no_interactions() {
    let eta = cfg("@0 0111000000");
    let audit = audit_counting(&eta, 3, 1, 5).unwrap();
    assert!(audit.passed());
    let tr = History::run(&eta, 5).unwrap().trajectory(3, 0);
    assert_eq!(tr.blocked(5), 0);
    assert_eq!(tr.positions, vec![0, 3, 6, 9, 12, 15]);
}

#[test]
fn crossing_index_needs_solitons() {
    let h = History::run(&cfg("@0 0100000"), 2).unwrap();
    assert!(matches!(crossing_index(&h, 2, 0, 0), Err(Error::NotFound(_))));
    assert_eq!(crossing_index(&h, 1, 0, 0).unwrap(), 1);
    assert_eq!(crossing_index(&h, 1, 100, 0).unwrap(), 2);
}

#[test]
fn first_stop_at_zero_when_slot_zero_is_full() {
    let eta = cfg("@0 0110000");
    let z = seat_decompose(&eta).slots();
    assert_eq!(z.get(2, 0), 1);
    assert_eq!(slot_stop(&z, 2, 1), Some(0));
}

fn dif_xi_holds(eta: &Configuration, n: usize) -> Result<(), TestCaseError> {
    let h = History::run(eta, n).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let views: Vec<_> = (0..=n).map(|t| seat_decompose(h.config(t))).collect();
    let set0 = h.set(0);
    for k in 1..=set0.max_size() {
        for &j in set0.representatives(k) {
            let tr = h.trajectory(k, j);
            for l in 1..=k {
                for t in 1..=n {
                    let got = views[t].xi(l, tr.positions[t]) - views[t - 1].xi(l, tr.positions[t - 1]);
                    let o = boxball::seat::offset(&views[t - 1], &views[t], l);
                    let want = if tr.free[t - 1] {
                        let mut w = k as i64 + o;
                        for hh in l + 1..k {
                            let step = tr.overtaken[t - 1][hh - 1] as i64;
                            w += 2 * (hh - l) as i64 * step;
                        }
                        w
                    } else {
                        l as i64 + o
                    };
                    prop_assert_eq!(got, want, "k={} l={} t={} in {}", k, l, t, eta);
                }
            }
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn semigroup(c in config_strategy(70), k in 1usize..4, l in 1usize..4) {
        let twice = skip(&skip(&c, l).image, k).image;
        prop_assert_eq!(twice, skip(&c, k + l).image);
    }

    #[test]
    fn slots_shift_under_skip(c in config_strategy(70), k in 1usize..4) {
        let z = seat_decompose(&c).slots();
        let zs = seat_decompose(&skip(&c, k).image).slots();
        for l in 1..=z.levels.max(zs.levels) + 1 {
            prop_assert_eq!(zs.zeta.get(&l), z.zeta.get(&(l + k)));
        }
    }

    #[test]
    fn seat_correspondence(c in config_strategy(70), k in 1usize..4) {
        let v = seat_decompose(&c);
        let r = skip(&c, k);
        let vs = seat_decompose(&r.image);
        let (lo, hi) = vs.range();
        for x in lo - 2..=hi + 2 {
            let y = v.s(k, x + r.origin_shift);
            let want = match v.label(y) {
                SeatLabel::Up(m) => SeatLabel::Up(m - k),
                SeatLabel::Down(m) => SeatLabel::Down(m - k),
                SeatLabel::Record => SeatLabel::Record,
            };
            prop_assert_eq!(vs.label(x), want);
        }
    }

    #[test]
    fn skipped_coordinates(c in config_strategy(70), k in 1usize..4, l in 1usize..4) {
        let v = seat_decompose(&c);
        let r = skip(&c, k);
        let vs = seat_decompose(&r.image);
        prop_assert_eq!(r.image.records().site(0), -v.xi(k, 0));
        for x in -10..10 {
            prop_assert_eq!(vs.s(l, x), v.xi(k, v.s(k + l, x)) - v.xi(k, 0));
        }
    }

    #[test]
    fn palm_commutes_with_skip(c in config_strategy(70), k in 1usize..4) {
        prop_assert_eq!(skip(&c, k).image.recenter(), skip(&c.recenter(), k).image);
    }

    #[test]
    fn solitons_correspond_under_skip(c in config_strategy(70), l in 1usize..3) {
        let eta = c.recenter();
        let v = seat_decompose(&eta);
        let set = identify(&eta);
        let img = identify(&skip(&eta, l).image);
        for k in l + 1..=set.max_size() {
            for &j in set.representatives(k) {
                let vol = set.volume_index(k, j);
                let jj = img.volume_rep(k - l, vol).unwrap();
                prop_assert_eq!(v.xi(l, set.of_size(k)[j].position()), img.of_size(k - l)[jj].position());
            }
        }
    }

    #[test]
    fn effective_distance_is_conserved(c in config_strategy(60), n in 1usize..6) {
        let h = History::run(&c, n).unwrap();
        let (v0, vn) = (seat_decompose(h.config(0)), seat_decompose(h.config(n)));
        for k in 1..=h.set(0).max_size() {
            let m = h.set(0).of_size(k).len();
            for a in 0..m {
                for b in a + 1..m {
                    let d0 = v0.xi(k, h.position(k, a, 0)) - v0.xi(k, h.position(k, b, 0));
                    let dn = vn.xi(k, h.position(k, a, n)) - vn.xi(k, h.position(k, b, n));
                    prop_assert_eq!(d0.abs(), dn.abs());
                    prop_assert_eq!(d0 == 0, h.set(0).group_of(k, a).contains(&b));
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn counting_identities(c in config_strategy(50), n in 1usize..10) {
        let eta = c.recenter();
        let set = identify(&eta);
        for k in 1..=set.max_size() {
            for j in 0..set.of_size(k).len() {
                let i = set.natural_index(k, j);
                let audit = audit_counting(&eta, k, i, n).unwrap();
                prop_assert!(audit.passed(), "{:?}", audit.failures().collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn decomposition_sums_to_displacement(c in config_strategy(50), n in 1usize..8, w in 1i64..9) {
        let eta = c.recenter();
        let set = identify(&eta);
        let finite = QParams::finite(vec![
            Scalar::ratio(w, 10),
            Scalar::ratio(1, 7),
            Scalar::ratio(10 - w, 40),
        ]).unwrap();
        let bern = q_from_bernoulli(Scalar::ratio(1, 4)).unwrap();
        for q in [&finite, &bern] {
            for k in 1..=set.max_size().min(4) {
                for j in 0..set.of_size(k).len() {
                    let i = set.natural_index(k, j);
                    let d = orthogonal_decomposition(&eta, k, i, n, q).unwrap();
                    prop_assert!(d.total().is_exact());
                    prop_assert_eq!(d.total(), Scalar::int(d.displacement));
                }
            }
        }
    }

    #[test]
    fn counters_transport_under_skip(c in config_strategy(50), n in 1usize..8, h in 1usize..3) {
        let eta = c.recenter();
        let base = History::run(&eta, n).unwrap();
        let img = History::run(&skip(&eta, h).image, n).unwrap();
        let set = base.set(0);
        for k in h + 1..=set.max_size() {
            for &j in set.representatives(k) {
                let vol = set.volume_index(k, j);
                let a = base.trajectory(k, j);
                let b = img.trajectory(k - h, img.resolve(k - h, Tag::Volume(vol)).unwrap());
                for t in 0..=n {
                    prop_assert_eq!(a.blocked(t), b.blocked(t));
                    for l in h + 1..k {
                        prop_assert_eq!(a.overtaken_total(l, t), b.overtaken_total(l - h, t));
                    }
                }
                if k == h + 1 {
                    prop_assert_eq!(b.displacement(n), n as i64 - a.blocked(n) as i64);
                }
            }
        }
    }

    #[test]
    fn xi_increments(c in config_strategy(50), n in 1usize..6) {
        dif_xi_holds(&c, n)?;
    }

    #[test]
    fn local_tracker_agrees_with_history(c in config_strategy(200), n in 1usize..12) {
        let h = History::run(&c, n).unwrap();
        let set = h.set(0);
        let mut heads = Vec::new();
        let mut picks = Vec::new();
        for k in 1..=set.max_size() {
            for (j, s) in set.of_size(k).iter().enumerate() {
                heads.push(s.heads.clone());
                picks.push((k, j));
            }
        }
        let local = track_local(&c, &heads, n, None).unwrap();
        for (tr, &(k, j)) in local.iter().zip(&picks) {
            let full = h.trajectory(k, j);
            prop_assert_eq!(&tr.positions, &full.positions);
            prop_assert_eq!(&tr.free, &full.free);
        }
    }
}

#[test]
fn offset_is_zero_for_recentered_free_motion() {
    assert_eq!(offset_of(&cfg("@0 0111000"), 2), 0);
}

#[test]
fn decomposition_of_a_one_soliton_is_its_free_steps() {
    let eta = cfg("@0 0101100100011000");
    let set = identify(&eta.recenter());
    let q = q_from_bernoulli(Scalar::ratio(1, 4)).unwrap();
    let i = set.natural_index(1, 0);
    let d = orthogonal_decomposition(&eta, 1, i, 5, &q).unwrap();
    assert_eq!(d.terms.len(), 1);
    assert_eq!(d.terms[0].coefficient, Scalar::one());
    assert_eq!(d.free_steps(), &Scalar::int(d.displacement));
}

#[test]
fn decomposition_coefficients_for_bernoulli_quarter() {
    // v_2/r̄_2 = (16/7)/(13/14) = 32/13 and 2 v_1/r̄_1 = 2.
    let eta = cfg("@0 0110001000000000000");
    let q = q_from_bernoulli(Scalar::ratio(1, 4)).unwrap();
    let set = identify(&eta.recenter());
    let i = set.natural_index(2, 0);
    let d = orthogonal_decomposition(&eta, 2, i, 3, &q).unwrap();
    assert_eq!(d.terms[0].coefficient, Scalar::ratio(32, 13));
    assert_eq!(d.terms[1].coefficient, Scalar::int(2));
    assert_eq!(d.total(), Scalar::int(d.displacement));
}
