#![no_main]

use libfuzzer_sys::fuzz_target;
use ycoupler::network::parse_endpoint;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok((id, port)) = parse_endpoint(text) {
        assert!(!id.is_empty());
        assert!(port >= 1);
    }
});
