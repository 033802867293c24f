//! On-disk bundle: `branch.json`, `trunk.json`, `meta.json` in a directory.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BuildError, BuildReport, Encoder, OperatorNet};
use crate::nn::Network;

#[derive(Serialize, Deserialize)]
struct Meta {
    encoder: Encoder,
    report: BuildReport,
}

pub fn save_bundle(onet: &OperatorNet, dir: &Path) -> Result<(), BuildError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("branch.json"), onet.branch.to_json())?;
    fs::write(dir.join("trunk.json"), onet.trunk.to_json())?;
    let meta = Meta {
        encoder: onet.encoder.clone(),
        report: onet.report.clone(),
    };
    let text = serde_json::to_string_pretty(&meta).map_err(|e| BuildError::Meta(e.to_string()))?;
    fs::write(dir.join("meta.json"), text)?;
    Ok(())
}

pub fn load_bundle(dir: &Path) -> Result<OperatorNet, BuildError> {
    let branch = Network::from_json(&fs::read_to_string(dir.join("branch.json"))?)?;
    let trunk = Network::from_json(&fs::read_to_string(dir.join("trunk.json"))?)?;
    let meta: Meta = serde_json::from_str(&fs::read_to_string(dir.join("meta.json"))?)
        .map_err(|e| BuildError::Meta(e.to_string()))?;
    Ok(OperatorNet {
        encoder: meta.encoder,
        branch,
        trunk,
        report: meta.report,
    })
}
