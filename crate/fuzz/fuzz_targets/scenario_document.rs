#![no_main]

use d2d_core::scenario::ScenarioDocument;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(doc) = ScenarioDocument::from_toml_str(text) {
        // Anything accepted must serialize and read back unchanged.
        let again = doc.to_toml_string().expect("valid document serializes");
        assert_eq!(ScenarioDocument::from_toml_str(&again).expect("round trip parses"), doc);
    }
});
