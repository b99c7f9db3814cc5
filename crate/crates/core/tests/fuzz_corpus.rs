//! Replays the checked-in fuzz corpus through the parsers.

use std::fs;
use std::path::PathBuf;

use d2d_core::experiment::{Algorithm, ExperimentSpec};
use d2d_core::scenario::ScenarioDocument;

fn corpus(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut files: Vec<(String, String)> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|entry| {
            let path = entry.unwrap().path();
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            (name, fs::read_to_string(&path).unwrap())
        })
        .collect();
    files.sort();
    assert!(!files.is_empty(), "empty corpus for {target}");
    files
}

#[test]
fn scenario_documents() {
    for (name, text) in corpus("scenario_document") {
        let parsed = ScenarioDocument::from_toml_str(&text);
        let expect_ok = matches!(name.as_str(), "tiny" | "pair_two_channels");
        assert_eq!(parsed.is_ok(), expect_ok, "{name}: {parsed:?}");
        if let Ok(doc) = parsed {
            assert_eq!(doc.to_toml_string().unwrap(), text, "{name} is not in canonical form");
        }
    }
}

#[test]
fn experiment_configs() {
    for (name, text) in corpus("experiment_config") {
        let parsed = ExperimentSpec::from_toml_str(&text);
        assert_eq!(parsed.is_ok(), name != "invalid_efficiency", "{name}: {parsed:?}");
        if let Ok(spec) = parsed {
            assert_eq!(
                ExperimentSpec::from_toml_str(&spec.to_toml_string().unwrap()).unwrap(),
                spec
            );
        }
    }
}

#[test]
fn algorithm_lists() {
    for (name, text) in corpus("algorithm_list") {
        let parsed = Algorithm::parse_list(&text);
        let expect_ok = !matches!(name.as_str(), "duplicate" | "empty");
        assert_eq!(parsed.is_ok(), expect_ok, "{name}: {parsed:?}");
    }
}
