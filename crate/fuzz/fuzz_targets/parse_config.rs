#![no_main]

use libfuzzer_sys::fuzz_target;
use qetag::pipeline::PipelineConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = PipelineConfig::parse(text) {
            let _ = cfg.echo();
        }
    }
});
