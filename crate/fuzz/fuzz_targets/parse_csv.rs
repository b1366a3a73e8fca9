#![no_main]

use libfuzzer_sys::fuzz_target;
use msgc::io::{parse_csv, CsvOptions};

// First byte selects the time-column flag; the rest is the file.
fuzz_target!(|data: &[u8]| {
    let Some((&flag, body)) = data.split_first() else { return };
    let opts = CsvOptions { time_column: flag & 1 == 1 };
    if let Ok(set) = parse_csv(body, &opts) {
        assert_eq!(set.labels().len(), set.channels());
        assert!(set.values().iter().all(|v| v.is_finite()));
    }
});
