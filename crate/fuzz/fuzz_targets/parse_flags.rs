#![no_main]

use interrater_cli::{parse_flags, Command};
use libfuzzer_sys::fuzz_target;

// Arguments are separated by NUL bytes.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let args: Vec<&str> = if text.is_empty() { Vec::new() } else { text.split('\0').collect() };
    if let Ok(Command::Run(cfg)) = parse_flags(&args) {
        assert!(cfg.ymin < cfg.ymax);
    }
});
