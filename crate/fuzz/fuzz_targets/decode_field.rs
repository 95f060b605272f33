#![no_main]

use congestion::field_grid::{decode_field, encode_field};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(field) = decode_field(data) {
        assert_eq!(encode_field(&field), data);
    }
});
