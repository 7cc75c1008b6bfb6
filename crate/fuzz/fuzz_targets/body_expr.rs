#![no_main]

use libfuzzer_sys::fuzz_target;
use promisekit::promise::expr::{canonicalize, parse_expr, parse_word};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = parse_expr(text);
    if let Ok(word) = parse_word(text) {
        let canon = word.to_string();
        assert_eq!(canonicalize(&canon).expect("canonical words parse"), canon);
    }
    if let Ok(canon) = canonicalize(text) {
        assert_eq!(canonicalize(&canon).unwrap(), canon);
    }
});
