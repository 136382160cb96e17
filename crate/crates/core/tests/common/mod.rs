#![allow(dead_code)]

use boxball::Configuration;
use proptest::prelude::*;

/// Random finite configurations with ball density below one half on average.
pub fn config_strategy(max_len: usize) -> impl Strategy<Value = Configuration> {
    (
        -30i64..30,
        proptest::collection::vec(prop_oneof![3 => Just(0u8), 2 => Just(1u8)], 0..max_len),
    )
        .prop_map(|(origin, bits)| Configuration::from_bits(origin, bits))
}

pub fn cfg(s: &str) -> Configuration {
    s.parse().unwrap()
}
