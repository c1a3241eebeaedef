#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(v) = illposed::io::parse_vector_csv(text) {
            let again = illposed::io::parse_vector_csv(&illposed::io::format_vector_csv(&v))
                .expect("formatted vector must reparse");
            assert_eq!(v, again);
        }
    }
});
