#![no_main]

use interrater::CategorySet;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cats) = CategorySet::parse(text) {
        assert!(cats.len() >= 2);
        for (j, label) in cats.labels().iter().enumerate() {
            assert_eq!(cats.index_of(label), Some(j));
        }
    }
});
