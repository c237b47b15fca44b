#![no_main]

use libfuzzer_sys::fuzz_target;

// CSV profile tables come from user files; parsing plus interpolant
// construction and a few evaluations must be panic-free on any input.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(table) = hyperhelm::config::parse_profile_table(text) {
        for r in [-1.0, 0.0, 0.5, 3.7, 1e6] {
            std::hint::black_box(table.value(r));
            std::hint::black_box(table.derivative(r));
        }
    }
});
