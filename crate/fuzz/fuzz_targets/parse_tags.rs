#![no_main]

use libfuzzer_sys::fuzz_target;
use qetag::corpus::parse_tags;

// First bytes give sentence lengths, the rest is the tag file.
fuzz_target!(|data: &[u8]| {
    let Some((&k, rest)) = data.split_first() else { return };
    let k = usize::from(k % 8).min(rest.len());
    let lengths: Vec<usize> = rest[..k].iter().map(|b| usize::from(b % 16)).collect();
    if let Ok(text) = std::str::from_utf8(&rest[k..]) {
        if let Ok(seqs) = parse_tags(text, &lengths) {
            for (s, &n) in seqs.iter().zip(&lengths) {
                assert_eq!(s.token_tags().len(), n);
            }
            let out: String = seqs.iter().map(|s| s.to_line() + "\n").collect();
            assert_eq!(parse_tags(&out, &lengths).unwrap(), seqs);
        }
    }
});
