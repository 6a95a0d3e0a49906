#![no_main]

use ener::corpus::GeneratorConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = GeneratorConfig::from_json(text) {
        let json = serde_json::to_string(&config).expect("config serialises");
        assert_eq!(GeneratorConfig::from_json(&json).expect("round trip"), config);
    }
});
