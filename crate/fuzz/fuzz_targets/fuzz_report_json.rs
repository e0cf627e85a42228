//! Fuzzes the JSON decoder of the elimination report schema: arbitrary
//! bytes must never panic the deserializer, and any report that decodes
//! must re-encode.

#![no_main]

use libfuzzer_sys::fuzz_target;

use fermatq::elimination::EliminationReport;

fuzz_target!(|data: &[u8]| {
    if let Ok(report) = serde_json::from_slice::<EliminationReport>(data) {
        let _ = serde_json::to_string(&report).unwrap();
    }
});
