#![no_main]

use congestion::field_grid::{parse_field_csv, Boundary};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&tag, rest)) = data.split_first() else { return };
    let boundary = if tag & 1 == 0 { Boundary::Neumann } else { Boundary::Periodic };
    if let Ok(text) = std::str::from_utf8(rest) {
        let _ = parse_field_csv(text, boundary);
    }
});
