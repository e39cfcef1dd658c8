#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = tlstm::corpus_io::parse_score_corpus(data, "fuzz");
});
