#![no_main]

use d2d_core::experiment::Algorithm;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(list) = Algorithm::parse_list(text) {
        assert!(!list.is_empty());
        let joined: Vec<&str> = list.iter().map(|a| a.name()).collect();
        assert_eq!(
            Algorithm::parse_list(&joined.join(",")).expect("canonical list parses"),
            list
        );
    }
});
