#![no_main]

use interrater::{CategorySet, RatingMatrix};
use libfuzzer_sys::fuzz_target;

// Input layout: categories text, a NUL byte, then the ratings text.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Some((cats, ratings)) = text.split_once('\0') else { return };
    let Ok(cats) = CategorySet::parse(cats) else { return };
    if let Ok(m) = RatingMatrix::parse(ratings, &cats) {
        assert!(m.raters() >= 2);
        assert_eq!(m.rows().count(), m.subjects());
        for row in m.rows() {
            assert!(row.iter().flatten().all(|&j| j < cats.len()));
        }
    }
});
