#![no_main]

use libfuzzer_sys::fuzz_target;
use tdomino_core::analysis::{read_archive_csv, write_archive_csv};

fuzz_target!(|data: &[u8]| {
    // Accepted tables must survive a rescore and a write/read round trip.
    if let Ok(mut table) = read_archive_csv(data) {
        table.rescore();
        let mut buf = Vec::new();
        write_archive_csv(&table, &mut buf).unwrap();
        let again = read_archive_csv(buf.as_slice()).unwrap();
        assert_eq!(again.rows.len(), table.rows.len());
    }
});
