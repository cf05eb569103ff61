#![no_main]

use libfuzzer_sys::fuzz_target;
use qball::io::{read_profile, write_state};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(file) = read_profile(text) {
        // Whatever reads back must survive a write and a second read unchanged.
        let again = read_profile(&write_state(&file.state, &file.phi, &file.meta)).expect("round trip");
        assert_eq!(again, file);
    }
});
