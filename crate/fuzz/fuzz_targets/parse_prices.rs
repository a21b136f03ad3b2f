#![no_main]
use hypervar::portfolio::{ewma_covariance, ReturnSeries};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(table) = hypervar::io::parse_prices(text) else {
        return;
    };
    if let Ok(series) = ReturnSeries::from_prices(table.tickers, &table.rows) {
        let _ = ewma_covariance(&series, 0.94);
    }
});
