//! Worked examples from the literature, reproduced exactly.

use boxball::soliton::{identify, track_step};
use boxball::Configuration;

fn cfg(s: &str) -> Configuration {
    s.parse().unwrap()
}

fn row(c: &Configuration, lo: i64, hi: i64) -> String {
    c.bits(lo, hi).iter().map(|b| char::from(b'0' + b)).collect()
}

#[test]
fn carrier_and_one_step() {
    let eta = cfg("@0 110001110011001011000");
    let w = eta.carrier_profile(-1, 20).unwrap();
    assert_eq!(
        w.values,
        vec![0, 1, 2, 1, 0, 0, 1, 2, 3, 2, 1, 2, 3, 2, 1, 2, 1, 2, 3, 2, 1, 0]
    );
    let t = eta.evolve();
    assert_eq!(row(&t, 0, 21), "001100001100110100111");
    assert_eq!(t.evolve_inverse(), eta);
}

#[test]
fn excursions_and_census() {
    let eta = cfg("@0 01100011100110010110000");
    let rec = eta.records();
    let in_window: Vec<i64> = (0..23).filter(|&x| rec.is_record(x)).collect();
    assert_eq!(in_window, vec![0, 5, 22]);
    let with_balls = eta.excursions().into_iter().filter(|e| e.balls() > 0).count();
    assert_eq!(with_balls, 2);

    let set = identify(&eta);
    assert_eq!(set.census(), vec![1, 3, 1]);
    let two = set.of_size(2);
    assert_eq!(two[0].heads, vec![1, 2]);
    assert_eq!((two[1].heads.clone(), two[1].tails.clone()), (vec![11, 12], vec![9, 10]));
    assert_eq!((two[2].heads.clone(), two[2].tails.clone()), (vec![17, 18], vec![13, 14]));
    assert_eq!(set.of_size(1)[0].heads, vec![15]);
    assert_eq!(set.of_size(3)[0].heads, vec![6, 7, 8]);
    assert_eq!(set.volume(2, 0), 1);
    assert_eq!(set.volume(2, 1), 2);
    assert!(set.is_representative(2, 1) && !set.is_representative(2, 2));
}

/// Positions of the solitons of the given sizes over `steps` steps, tracked
/// by the tails-to-heads rule.
fn track_positions(c: &Configuration, picks: &[(usize, usize)], steps: usize) -> Vec<Vec<i64>> {
    let mut set = identify(c);
    let mut cur: Vec<(usize, usize)> = picks.to_vec();
    let mut out: Vec<Vec<i64>> = picks
        .iter()
        .map(|&(k, j)| vec![set.of_size(k)[j].position()])
        .collect();
    let mut c = c.clone();
    for _ in 0..steps {
        c = c.evolve();
        let next = identify(&c);
        for (slot, (k, j)) in cur.iter_mut().enumerate() {
            *j = track_step(&set.of_size(*k)[*j], &next).unwrap();
            out[slot].push(next.of_size(*k)[*j].position());
        }
        set = next;
    }
    out
}

#[test]
fn phase_shift_three_over_one() {
    let eta = cfg("@0 111000010");
    let rows = ["1110000100000000000", "0001110010000000000", "0000001101100000000", "0000000010011100000"];
    let mut c = eta.clone();
    for r in rows {
        assert_eq!(row(&c, 0, 19), r);
        c = c.evolve();
    }
    let pos = track_positions(&eta, &[(3, 0), (1, 0)], 3);
    assert_eq!(pos[0], vec![-1, 2, 5, 10]);
    assert_eq!(pos[1], vec![6, 7, 7, 7]);
}

#[test]
fn two_over_one_phase_shift() {
    let eta = cfg("@0 1100010");
    let pos = track_positions(&eta, &[(2, 0), (1, 0)], 4);
    // Free motion would put the 2-soliton at -1 + 8 and the 1-soliton at 4 + 4.
    assert_eq!(pos[0][4], -1 + 8 + 2);
    assert_eq!(pos[1][4], 4 + 4 - 2);
}

#[test]
fn two_soliton_overtakes_a_group() {
    let rows = [
        "11000101010000000000",
        "00110010101000000000",
        "00001101010100000000",
        "00000010101011000000",
        "00000001010100110000",
    ];
    let eta = cfg(&format!("@0 {}", rows[0]));
    let mut c = eta.clone();
    for r in rows {
        assert_eq!(row(&c, 0, 20), r);
        c = c.evolve();
    }
    let set = identify(&eta);
    assert_eq!(set.census(), vec![3, 1]);
    assert_eq!(set.volume(1, 0), 3);
    let pos = track_positions(&eta, &[(2, 0)], 4);
    // Two free steps of 2, one blocked-free step overtaking all three 1-solitons.
    let jumps: Vec<i64> = pos[0].windows(2).map(|w| w[1] - w[0]).collect();
    assert!(jumps.contains(&(2 + 2 * 3)));
}

#[test]
fn group_of_two_overtakes_step_by_step() {
    let rows = [
        "11001100010000000000",
        "00110011001000000000",
        "00001100110100000000",
        "00000011001011000000",
        "00000000110100110000",
        "00000000001011001100",
    ];
    let eta = cfg(&format!("@0 {}", rows[0]));
    let mut c = eta.clone();
    for r in rows {
        assert_eq!(row(&c, 0, 20), r);
        c = c.evolve();
    }
    let set = identify(&eta);
    assert_eq!(set.volume(2, 0), 2);
    assert_eq!(set.volume(1, 0), 1);
    let pos = track_positions(&eta, &[(1, 0)], 5);
    // One free step, then stranded while both 2-solitons pass.
    assert_eq!(pos[0], vec![8, 9, 9, 9, 9, 9]);
}

#[test]
fn nested_three_two_one() {
    let rows = [
        "111000110100000000000",
        "000111001011000000000",
        "000000110100111000000",
        "000000001011000111000",
    ];
    let eta = cfg(&format!("@0 {}", rows[0]));
    let mut c = eta.clone();
    for r in rows {
        assert_eq!(row(&c, 0, 21), r);
        c = c.evolve();
    }
    let set = identify(&eta);
    assert_eq!(set.census(), vec![1, 1, 1]);
    assert_eq!(set.of_size(1)[0].heads, vec![9]);
    assert_eq!(set.of_size(2)[0].heads, vec![6, 7]);
    // The 2-soliton is blocked by the 3-soliton in its excursion.
    assert!(!set.is_free(2, 0));
    assert!(!set.is_free(1, 0));
    let pos = track_positions(&eta, &[(3, 0), (2, 0), (1, 0)], 3);
    assert_eq!(pos[1], vec![5, 5, 5, 9]);
    assert_eq!(pos[2], vec![7, 7, 7, 7]);
}
