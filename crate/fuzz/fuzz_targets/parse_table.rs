#![no_main]

use libfuzzer_sys::fuzz_target;
use sta_cli::table::parse_table;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(table) = parse_table(text) {
        // anything accepted must survive a write/read cycle unchanged
        let again = parse_table(&table.to_csv()).expect("re-parse of written table");
        assert_eq!(again.columns, table.columns);
        assert_eq!(again.rows.len(), table.rows.len());
        for (a, b) in again.rows.iter().zip(&table.rows) {
            assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }
});
