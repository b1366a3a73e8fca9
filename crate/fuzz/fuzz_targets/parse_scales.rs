#![no_main]

use libfuzzer_sys::fuzz_target;
use msgc::io::{parse_scales, MAX_SCALES};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(scales) = parse_scales(text) {
        assert!(!scales.is_empty() && scales.len() <= MAX_SCALES);
        assert!(scales[0] >= 1);
        assert!(scales.windows(2).all(|w| w[0] < w[1]));
    }
});
