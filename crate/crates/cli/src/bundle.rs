use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use elusive_core::constructions::{ConstructedGroup, MersenneFpBundle};
use serde_json::Value;

pub enum Bundle {
    Group(ConstructedGroup),
    Fp(MersenneFpBundle),
}

fn parse_one(value: Value) -> anyhow::Result<Bundle> {
    let name = value.get("name").and_then(Value::as_str).context("bundle has no name")?;
    if name == "mersenne-fp" {
        let b: MersenneFpBundle = serde_json::from_value(value).context("reading mersenne-fp bundle")?;
        Ok(Bundle::Fp(b.reparse()?))
    } else {
        let name = name.to_string();
        Ok(Bundle::Group(
            serde_json::from_value(value).with_context(|| format!("reading {name} bundle"))?,
        ))
    }
}

/// Reads one bundle or an array of bundles; the flag says which it was.
pub fn load(path: &Path) -> anyhow::Result<(Vec<Bundle>, bool)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    match value {
        Value::Array(items) => {
            if items.is_empty() {
                bail!("{} holds no bundles", path.display());
            }
            Ok((items.into_iter().map(parse_one).collect::<anyhow::Result<_>>()?, true))
        }
        v => Ok((vec![parse_one(v)?], false)),
    }
}
