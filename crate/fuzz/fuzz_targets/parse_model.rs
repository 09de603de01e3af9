#![no_main]

use libfuzzer_sys::fuzz_target;
use oee_core::io::{parse_model, write_model};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(model) = parse_model(text) {
        let again = parse_model(&write_model(&model)).expect("written models parse");
        assert_eq!(write_model(&again), write_model(&model));
    }
});
