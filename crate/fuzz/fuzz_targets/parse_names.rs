#![no_main]

use libfuzzer_sys::fuzz_target;
use nzkl_cli::{CheckName, Scheme};

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(s) = text.parse::<Scheme>() {
        assert_eq!(s.name(), text);
    }
    if let Ok(c) = text.parse::<CheckName>() {
        assert_eq!(c.name(), text);
    }
});
