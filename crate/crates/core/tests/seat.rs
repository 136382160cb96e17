mod common;

use boxball::seat::{
    capacity_carrier, offset_of, reconstruct, seat_decompose, SeatLabel, SlotArray,
};
use boxball::soliton::identify;
use boxball::Configuration;
use common::{cfg, config_strategy};
use proptest::prelude::*;

#[test]
fn level_one_seats_of_worked_table() {
    let eta = cfg("@-4 0110011101011000100");
    let v = seat_decompose(&eta);
    let ups: Vec<i64> = (-4..15).filter(|&x| v.up(1, x)).collect();
    let downs: Vec<i64> = (-4..15).filter(|&x| v.down(1, x)).collect();
    assert_eq!(ups, vec![-3, 1, 5, 7, 12]);
    assert_eq!(downs, vec![-1, 4, 6, 9, 13]);
    assert_eq!(eta.records().site(0), -4);
    assert_eq!(v.xi(1, 0), 2);
}

#[test]
fn all_zero_is_all_records() {
    let v = seat_decompose(&Configuration::zeros_window(0, 12));
    assert!((0..12).all(|x| v.label(x) == SeatLabel::Record));
    assert_eq!(v.slots(), SlotArray { levels: 0, records: 1, zeta: Default::default() });
}

#[test]
fn xi_one_across_a_two_soliton() {
    let eta = cfg("@0 011000");
    let v = seat_decompose(&eta);
    let xi: Vec<i64> = (0..6).map(|x| v.xi(1, x)).collect();
    assert_eq!(xi, vec![0, 0, 1, 1, 2, 3]);
}

#[test]
fn slot_census_of_decomposition_figure() {
    let eta = cfg("@0 01100011100110010110000");
    let z = seat_decompose(&eta).slots();
    assert_eq!((z.total(1), z.total(2), z.total(3)), (1, 3, 1));
}

#[test]
fn connected_group_shares_a_slot() {
    let eta = cfg("@0 01100010101000");
    let z = seat_decompose(&eta).slots();
    let ones: Vec<(usize, i64, u64)> = z.entries().filter(|e| e.0 == 1).collect();
    assert_eq!(ones.len(), 1);
    assert_eq!(ones[0].2, 3);
}

#[test]
fn reconstruct_examples() {
    let c = reconstruct(&SlotArray::new(5), 5).unwrap();
    assert_eq!(c.count_ones(), 0);
    assert_eq!(c.len(), 5);

    let mut z = SlotArray::new(2);
    z.set(2, 0, 1);
    let c = reconstruct(&z, 2).unwrap();
    assert_eq!(c.bits(0, 6), vec![0, 1, 1, 0, 0, 0]);

    // The 1-slot at the (2,↑) seat sits where the capacity-1 carrier is full.
    let v = seat_decompose(&c);
    let j = v.xi(1, 2);
    z.set(1, j, 1);
    let c = reconstruct(&z, 2).unwrap();
    assert_eq!(c.bits(0, 8), vec![0, 1, 1, 0, 1, 0, 0, 0]);
    assert_eq!(seat_decompose(&c).slots().zeta, z.zeta);
}

#[test]
fn capacity_carrier_examples() {
    let eta = cfg("@0 1100");
    assert_eq!(capacity_carrier(&eta, 1, 0, 3), vec![1, 1, 0, 0]);
    let big = capacity_carrier(&eta, 10, -1, 4);
    let w = eta.carrier_profile(-1, 4).unwrap();
    assert_eq!(big, w.values.iter().map(|&v| v as usize).collect::<Vec<_>>());
}

#[test]
fn offset_vanishes_without_balls_left_of_origin() {
    let eta = cfg("@1 1101001110001100");
    for k in 1..5 {
        assert_eq!(offset_of(&eta, k), 0);
    }
    assert_eq!(offset_of(&Configuration::zeros(), 1), 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn labels_partition_sites(c in config_strategy(80)) {
        let v = seat_decompose(&c);
        let (lo, hi) = v.range();
        for x in lo..=hi {
            let b = c.get(x);
            match v.label(x) {
                SeatLabel::Record => prop_assert!(b == 0 && c.records().is_record(x)),
                SeatLabel::Up(_) => prop_assert_eq!(b, 1),
                SeatLabel::Down(_) => prop_assert_eq!(b, 0),
            }
        }
    }

    #[test]
    fn seats_match_soliton_heads_and_tails(c in config_strategy(80)) {
        let v = seat_decompose(&c);
        let set = identify(&c);
        let mut expected = std::collections::BTreeMap::new();
        for s in set.iter() {
            for l in 1..=s.size {
                expected.insert(s.heads[l - 1], SeatLabel::Up(l));
                expected.insert(s.tails[l - 1], SeatLabel::Down(l));
            }
        }
        let (lo, hi) = v.range();
        for x in lo..=hi {
            let want = expected.get(&x).copied().unwrap_or(SeatLabel::Record);
            prop_assert_eq!(v.label(x), want, "site {}", x);
        }
    }

    #[test]
    fn slots_count_solitons_by_xi(c in config_strategy(80)) {
        let v = seat_decompose(&c);
        let set = identify(&c);
        let mut z = SlotArray::new(0);
        for s in set.iter() {
            let i = v.xi(s.size, s.position());
            z.set(s.size, i, z.get(s.size, i) + 1);
        }
        prop_assert_eq!(v.slots().zeta, z.zeta);
    }

    #[test]
    fn xi_and_s_are_inverse(c in config_strategy(60), k in 1usize..5) {
        let v = seat_decompose(&c);
        let (lo, hi) = v.range();
        prop_assert_eq!(v.xi(k, c.records().site(0)), 0);
        for x in (lo - 3)..=(hi + 3) {
            let i = v.xi(k, x);
            prop_assert!(v.s(k, i) <= x);
            prop_assert_eq!(v.xi(k, v.s(k, i)), i);
            let step = v.xi(k, x) - v.xi(k, x - 1);
            let counted = match v.label(x) {
                SeatLabel::Record => true,
                SeatLabel::Up(l) | SeatLabel::Down(l) => l > k,
            };
            prop_assert_eq!(step, i64::from(counted));
        }
    }

    #[test]
    fn capacity_carrier_is_sum_of_seats(c in config_strategy(80), l in 1usize..6) {
        let v = seat_decompose(&c);
        let (lo, hi) = v.range();
        let w = capacity_carrier(&c, l, lo, hi);
        for (j, x) in (lo..=hi).enumerate() {
            let seats = (1..=l).filter(|&m| v.seat_occupied(m, x)).count();
            prop_assert_eq!(w[j], seats);
            prop_assert_eq!(v.capacity_load(l, x), seats);
        }
    }

    #[test]
    fn soliton_positions_see_empty_or_full_capacity(c in config_strategy(80)) {
        let v = seat_decompose(&c);
        for s in identify(&c).iter() {
            let x = s.position();
            for l in 1..=s.size {
                let want = if c.get(x) == 1 { l } else { 0 };
                prop_assert_eq!(v.capacity_load(l, x), want);
            }
        }
    }

    #[test]
    fn linearization_with_offset(c in config_strategy(80)) {
        let t = c.evolve();
        let (v, vt) = (seat_decompose(&c), seat_decompose(&t));
        let (z, zt) = (v.slots(), vt.slots());
        for k in 1..=z.levels.max(zt.levels) {
            let o = boxball::seat::offset(&v, &vt, k);
            let shifted: Vec<(i64, u64)> = z.zeta.get(&k).into_iter().flatten()
                .map(|(&i, &n)| (i + k as i64 + o, n)).collect();
            let got: Vec<(i64, u64)> = zt.zeta.get(&k).into_iter().flatten()
                .map(|(&i, &n)| (i, n)).collect();
            prop_assert_eq!(shifted, got, "level {}", k);
        }
    }

    #[test]
    fn reconstruct_inverts_slots(c in config_strategy(80)) {
        let r = c.recenter();
        let v = seat_decompose(&r);
        let z = v.slots();
        if z.zeta.values().flat_map(|m| m.keys()).all(|&i| i >= 0) {
            let back = reconstruct(&z, z.records).unwrap();
            prop_assert_eq!(back, r);
        }
    }

    #[test]
    fn slots_of_reconstruction(entries in proptest::collection::vec((1usize..4, 0u64..3), 1..12), records in 1usize..6) {
        // Fill levels top-down using the available slot count of each level.
        let mut b = boxball::seat::SlotBuilder::new(records);
        let mut z = SlotArray::new(records);
        for k in (1..4).rev() {
            let wanted: Vec<u64> = entries.iter().filter(|e| e.0 == k).map(|e| e.1).collect();
            b.fill_level(k, |i| {
                let n = wanted.get(i).copied().unwrap_or(0);
                z.set(k, i as i64, n);
                Ok(n)
            }).unwrap();
        }
        let c = b.finish();
        prop_assert_eq!(c.records().site(0), 0);
        prop_assert_eq!(seat_decompose(&c).slots().zeta, z.zeta);
    }

    #[test]
    fn excursion_length_from_slots(c in config_strategy(80)) {
        let v = seat_decompose(&c);
        let z = v.slots();
        for e in c.excursions() {
            let mut len = 1u64;
            for (k, m) in &z.zeta {
                let a = v.big_xi(*k, e.index);
                let b = v.big_xi(*k, e.index + 1);
                len += 2 * *k as u64 * m.range(a..b).map(|(_, n)| n).sum::<u64>();
            }
            prop_assert_eq!(len as usize, e.word.len());
        }
    }
}
