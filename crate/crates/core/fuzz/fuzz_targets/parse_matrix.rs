#![no_main]

use libfuzzer_sys::fuzz_target;
use ycoupler::ScatteringMatrix;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = ScatteringMatrix::from_text(text) {
        // Anything accepted must survive a round trip unchanged.
        let again = ScatteringMatrix::from_text(&m.to_text()).expect("re-parse");
        assert_eq!(m, again);
    }
});
