#![no_main]
use hypervar::io::{format_matrix, parse_symmetric_matrix, SYMMETRY_TOL};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = parse_symmetric_matrix(text, SYMMETRY_TOL) {
        let n = m.matrix.dim();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(m.matrix.get(i, j).to_bits(), m.matrix.get(j, i).to_bits());
            }
        }
        if m.labels.as_ref().is_some_and(|l| l[0].starts_with('#')) {
            return;
        }
        let again =
            parse_symmetric_matrix(&format_matrix(m.labels.as_deref(), &m.matrix), 0.0).unwrap();
        assert_eq!(again.matrix, m.matrix);
    }
});
