#![no_main]

use libfuzzer_sys::fuzz_target;
use promisekit::dynamics::EventLog;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(log) = EventLog::parse_tsv(text) else { return };
    let tsv = log.to_tsv();
    let again = EventLog::parse_tsv(&tsv).expect("written logs parse");
    assert_eq!(again.to_tsv(), tsv);
});
