#![no_main]

use libfuzzer_sys::fuzz_target;
use qetag::corpus::parse_plain;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(sents) = parse_plain(text) {
            assert!(sents.len() <= text.lines().count().max(1));
        }
    }
});
