#![no_main]

use libfuzzer_sys::fuzz_target;
use qetag::ngram_lm::NGramModel;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(lm) = NGramModel::from_text(text) {
            let _ = NGramModel::from_text(&lm.to_text()).unwrap();
        }
    }
});
