#![no_main]

use d2d_core::experiment::ExperimentSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = ExperimentSpec::from_toml_str(text) {
        let again = spec.to_toml_string().expect("valid spec serializes");
        assert_eq!(ExperimentSpec::from_toml_str(&again).expect("round trip parses"), spec);
    }
});
