#![no_main]

use libfuzzer_sys::fuzz_target;
use qetag::word_align::parse_pharaoh;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(aligns) = parse_pharaoh(text) {
            let out: String = aligns.iter().map(|a| a.to_pharaoh() + "\n").collect();
            assert_eq!(parse_pharaoh(&out).unwrap(), aligns);
        }
    }
});
