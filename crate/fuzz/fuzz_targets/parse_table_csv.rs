#![no_main]

use congestion::convex_energy::parse_table_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(table) = parse_table_csv(text) {
        // whatever parses must print back to something that parses
        assert!(parse_table_csv(&table.to_csv()).is_ok());
        let _ = table.value(table.lo());
        let _ = table.conjugate(f64::NEG_INFINITY, f64::INFINITY, 17);
    }
});
