#![no_main]

use libfuzzer_sys::fuzz_target;
use qetag::tree::parse_bracketed;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(tree) = parse_bracketed(text) {
            let again = parse_bracketed(&tree.to_bracketed()).unwrap();
            assert_eq!(again, tree);
        }
    }
});
