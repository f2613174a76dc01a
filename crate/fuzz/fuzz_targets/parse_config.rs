#![no_main]

use libfuzzer_sys::fuzz_target;
use mde_cli::parse_config;
use std::str;

fuzz_target!(|bytes: &[u8]| {
    if let Ok(text) = str::from_utf8(bytes) {
        if let Ok(config) = parse_config(text) {
            let _ = config.model();
            let _ = config.grids();
            let _ = config.t_final();
        }
    }
});
