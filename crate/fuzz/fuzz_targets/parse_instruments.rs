#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(rows) = hypervar::io::parse_instruments(text) else {
        return;
    };
    for row in rows {
        if let Ok(inst) = row.into_instrument(|_| Some(0.2)) {
            let g = hypervar::portfolio::bs_greeks(&inst);
            assert!(!g.gamma.is_nan());
        }
    }
});
