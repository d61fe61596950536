#![no_main]
use glfa::data::read_pairs;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(pairs) = read_pairs(data) {
        for (r, c) in pairs {
            assert!(!r.is_empty() && !c.is_empty());
        }
    }
});
