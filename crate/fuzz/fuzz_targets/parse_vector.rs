#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(v) = hypervar::io::parse_vector(text) {
            assert!(!v.is_empty());
            assert!(v.iter().all(|x| x.is_finite()));
        }
    }
});
