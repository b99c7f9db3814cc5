//! TOML scenario document: a config together with one topology realization.
//!
//! ```toml
//! format = "d2d-scenario/1"
//! rng = "chacha8/rand_chacha-0.3"
//!
//! [config]
//! num_d2d_pairs = 5
//! # ...
//!
//! [topology]
//! bs_position = [0.0, 0.0]
//! g_direct = [[1.2e-3, 4.0e-4, 9.1e-4], ...]
//! # ...
//! ```
//!
//! Floats are written in shortest round-trip form, so a document read back
//! reproduces every gain bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_stream, RNG_NAME, TOPOLOGY_STREAM};
use crate::topology::{generate_topology, ScenarioConfig, Topology};

pub const FORMAT_TAG: &str = "d2d-scenario/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub format: String,
    /// Generator that produced the topology from `config.seed`.
    pub rng: String,
    pub config: ScenarioConfig,
    pub topology: Topology,
}

impl ScenarioDocument {
    /// Wraps an existing realization after checking it against `config`.
    pub fn new(config: ScenarioConfig, topology: Topology) -> Result<Self> {
        let doc = Self {
            format: FORMAT_TAG.to_string(),
            rng: RNG_NAME.to_string(),
            config,
            topology,
        };
        doc.validate()?;
        Ok(doc)
    }

    /// Draws the topology of `config.seed` on the topology stream.
    pub fn generate(config: ScenarioConfig) -> Result<Self> {
        let topology = generate_topology(&config, &mut rng_stream(config.seed, TOPOLOGY_STREAM))?;
        Self::new(config, topology)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != FORMAT_TAG {
            return Err(Error::config(
                "format",
                format!("expected {FORMAT_TAG:?}, got {:?}", self.format),
            ));
        }
        self.config.validate()?;
        self.topology.validate(&self.config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse {
            what: "scenario document",
            message: e.to_string(),
        })
    }

    /// Parses and validates a document. Never panics on malformed input.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let doc: Self = toml::from_str(text).map_err(|e| Error::Parse {
            what: "scenario document",
            message: e.to_string(),
        })?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_toml_string()?).map_err(|e| Error::io(path, e))
    }
}
