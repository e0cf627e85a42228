//! Fuzzes the newform data file parser: must never panic, only return
//! structured errors, on arbitrary input.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = fermatq::forms::parse_newform_file(text);
    }
});
