#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = easpace::harness::parse_config(text) {
            let again = easpace::harness::parse_config(&cfg.to_text()).expect("round trip");
            assert_eq!(again, cfg);
        }
    }
});
