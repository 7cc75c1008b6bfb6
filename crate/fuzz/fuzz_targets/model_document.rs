#![no_main]

use libfuzzer_sys::fuzz_target;
use promisekit::model::{emit, parse, Model};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(doc) = parse(text) else { return };
    let again = parse(&emit(&doc)).expect("emitted documents parse");
    assert_eq!(again, doc);
    let _ = Model::resolve(&doc);
});
