#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(m) = easpace::oracle::parse_mdp(text) {
            // a parsed instance must survive a write/parse cycle
            let again = easpace::oracle::parse_mdp(&easpace::oracle::write_mdp(&m)).expect("round trip");
            assert_eq!(again.num_states(), m.num_states());
        }
    }
});
