#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(m) = illposed::io::parse_matrix_csv(text) {
            // accepted input must survive a lossless round trip
            let again = illposed::io::parse_matrix_csv(&illposed::io::format_matrix_csv(&m))
                .expect("formatted matrix must reparse");
            assert_eq!(m, again);
        }
    }
});
