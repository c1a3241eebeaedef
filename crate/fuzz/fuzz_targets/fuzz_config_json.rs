#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(config) = illposed::io::parse_config_json(text) {
            // validation must hold on anything the parser accepts
            assert!(config.validate().is_ok());
            assert!(!config.deltas.is_empty());
        }
    }
});
