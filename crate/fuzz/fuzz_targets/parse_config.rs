#![no_main]

use libfuzzer_sys::fuzz_target;
use oee_harness::config::parse_config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = parse_config(text) {
        let again = parse_config(&cfg.to_string()).expect("canonical text parses");
        assert_eq!(again, cfg);
    }
});
