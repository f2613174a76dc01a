#![no_main]

use libfuzzer_sys::fuzz_target;
use mde_core::io::{format_snapshot, parse_snapshot};
use std::str;

fuzz_target!(|bytes: &[u8]| {
    if let Ok(text) = str::from_utf8(bytes) {
        if let Ok(mu) = parse_snapshot(text) {
            let again = parse_snapshot(&format_snapshot(&mu)).unwrap();
            assert_eq!(mu, again);
        }
    }
});
