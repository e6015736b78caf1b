#![no_main]

use libfuzzer_sys::fuzz_target;
use tdomino_core::config::{parse_config, ConfigOverrides};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = parse_config(Some(s), &ConfigOverrides::default());
    }
});
