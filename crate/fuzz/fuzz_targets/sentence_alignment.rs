#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = tlstm::projection::parse_sentence_alignment(data, "fuzz");
});
