#![no_main]

use libfuzzer_sys::fuzz_target;
use ycoupler::NetlistSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = NetlistSpec::from_json(text) {
        let violations = spec.validate();
        assert_eq!(violations.is_empty(), spec.build().is_ok());
    }
});
