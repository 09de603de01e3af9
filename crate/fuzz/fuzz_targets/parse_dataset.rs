#![no_main]

use libfuzzer_sys::fuzz_target;
use oee_core::io::{parse_dataset, write_dataset};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(ds) = parse_dataset(text) {
        let again = parse_dataset(&write_dataset(&ds)).expect("written datasets parse");
        assert_eq!(again, ds);
    }
});
