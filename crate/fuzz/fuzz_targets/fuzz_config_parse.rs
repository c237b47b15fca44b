#![no_main]

use libfuzzer_sys::fuzz_target;

// The config parser and experiment builder must return an error on any
// malformed input, never panic.  Table references are resolved against a
// directory that does not exist, so the filesystem is never touched.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(raw) = hyperhelm::config::parse_config(text) {
        let _ = hyperhelm::config::build_experiment(
            &raw,
            std::path::Path::new("/nonexistent-fuzz-root"),
            None,
        );
    }
});
