#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = tlstm::model_file::parse_model(data, "fuzz");
});
