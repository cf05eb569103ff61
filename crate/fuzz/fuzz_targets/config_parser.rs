#![no_main]

use libfuzzer_sys::fuzz_target;
use qball_cli::RunConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        // Any input either parses into a validated configuration or yields an error.
        let _ = RunConfig::from_text(text);
    }
});
