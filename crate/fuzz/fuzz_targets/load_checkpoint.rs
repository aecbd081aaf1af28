#![no_main]

use easpace::approx::checkpoint::{decode, encode};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(policy) = decode(data) {
        let bytes = encode(&policy);
        let again = decode(&bytes).expect("re-decode");
        assert_eq!(encode(&again), bytes);
    }
});
