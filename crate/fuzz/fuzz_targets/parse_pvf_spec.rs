#![no_main]

use libfuzzer_sys::fuzz_target;
use mde_core::{DiscreteMeasure, PvfSpec};
use std::str;

fuzz_target!(|bytes: &[u8]| {
    if let Ok(text) = str::from_utf8(bytes) {
        if let Ok(spec) = serde_json::from_str::<PvfSpec>(text) {
            let again: PvfSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
            assert_eq!(spec, again);
            let mu = DiscreteMeasure::from_atoms([(-0.5, 0.25), (0.0, 0.5), (1.0, 0.25)]).unwrap();
            if let Ok(v) = spec.evaluate(&mu) {
                assert!((v.total_mass() - 1.0).abs() < 1e-9);
            }
        }
    }
});
