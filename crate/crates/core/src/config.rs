//! `key=value` configuration files for [`EvolutionConfig`].
//!
//! Blank lines and `#` comments are ignored. Keys not given keep their
//! default. Recognised keys:
//!
//! ```text
//! population_size   truncation_size   decay
//! mutation          (bitflip | uniform)
//! mutation_rate     add_delete_rate   genome_length
//! encoding          (bitstring | integer; defaults to the mutation's)
//! no_contradiction  typed_stack_ops   (true | false)
//! edge_choice       (first | random)
//! default_action    (random | finish)
//! step_cap          generations       seed
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::evolution::{EvolutionConfig, MutationSpec};
use crate::token::Encoding;

const KEYS: &[&str] = &[
    "population_size",
    "truncation_size",
    "decay",
    "mutation",
    "mutation_rate",
    "add_delete_rate",
    "genome_length",
    "encoding",
    "no_contradiction",
    "typed_stack_ops",
    "edge_choice",
    "default_action",
    "step_cap",
    "generations",
    "seed",
];

pub fn to_text(c: &EvolutionConfig) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k}={v}");
    };
    kv("population_size", c.population_size.to_string());
    kv("truncation_size", c.truncation_size.to_string());
    kv("decay", c.decay.to_string());
    kv("mutation", c.mutation.name().to_string());
    kv("mutation_rate", c.mutation.rate().to_string());
    kv("add_delete_rate", c.add_delete_rate.to_string());
    kv("genome_length", c.genome_length.to_string());
    kv("encoding", c.encoding.name().to_string());
    kv("no_contradiction", c.build.no_contradiction.to_string());
    kv("typed_stack_ops", c.build.typed_stack_ops.to_string());
    kv("edge_choice", c.policy.edge_choice.to_string());
    kv("default_action", c.policy.default_action.to_string());
    kv("step_cap", c.policy.step_cap.to_string());
    kv("generations", c.generations.to_string());
    kv("seed", c.seed.to_string());
    out
}

/// Splits `key=value` lines into a map; later duplicates win.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// Parses a configuration. Keys listed in `extra` are passed back to the
/// caller instead of being rejected.
pub fn parse(text: &str, extra: &[&str]) -> Result<(EvolutionConfig, BTreeMap<String, String>)> {
    let mut pairs = parse_pairs(text)?;
    let mut rest = BTreeMap::new();
    for k in pairs.keys().cloned().collect::<Vec<_>>() {
        if !KEYS.contains(&k.as_str()) {
            let v = pairs.remove(&k).unwrap_or_default();
            if extra.contains(&k.as_str()) {
                rest.insert(k, v);
            } else {
                return Err(Error::Config(format!("unknown key `{k}`")));
            }
        }
    }
    Ok((from_pairs(&pairs)?, rest))
}

fn get<T: FromStr>(pairs: &BTreeMap<String, String>, key: &str, default: T) -> Result<T> {
    match pairs.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| Error::Config(format!("bad value `{v}` for `{key}`"))),
    }
}

fn get_with<T>(
    pairs: &BTreeMap<String, String>,
    key: &str,
    default: T,
    parse: impl Fn(&str) -> std::result::Result<T, String>,
) -> Result<T> {
    match pairs.get(key) {
        None => Ok(default),
        Some(v) => parse(v).map_err(|e| Error::Config(format!("`{key}`: {e}"))),
    }
}

pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<EvolutionConfig> {
    let d = EvolutionConfig::default();
    let rate = get(pairs, "mutation_rate", d.mutation.rate())?;
    let mutation = get_with(pairs, "mutation", d.mutation, |v| {
        match v.to_ascii_lowercase().as_str() {
            "bitflip" | "bit-flip" => Ok(MutationSpec::BitFlip(rate)),
            "uniform" => Ok(MutationSpec::UniformToken(rate)),
            other => Err(format!("unknown mutation `{other}`")),
        }
    })?;
    let mutation = match mutation {
        MutationSpec::BitFlip(_) => MutationSpec::BitFlip(rate),
        MutationSpec::UniformToken(_) => MutationSpec::UniformToken(rate),
    };
    let encoding = get_with(pairs, "encoding", mutation.encoding(), Encoding::from_str)?;
    let mut c = EvolutionConfig {
        population_size: get(pairs, "population_size", d.population_size)?,
        truncation_size: get(pairs, "truncation_size", d.truncation_size)?,
        decay: get(pairs, "decay", d.decay)?,
        mutation,
        add_delete_rate: get(pairs, "add_delete_rate", d.add_delete_rate)?,
        genome_length: get(pairs, "genome_length", d.genome_length)?,
        encoding,
        generations: get(pairs, "generations", d.generations)?,
        seed: get(pairs, "seed", d.seed)?,
        ..d
    };
    c.build.no_contradiction = get(pairs, "no_contradiction", d.build.no_contradiction)?;
    c.build.typed_stack_ops = get(pairs, "typed_stack_ops", d.build.typed_stack_ops)?;
    c.policy.edge_choice = get_with(pairs, "edge_choice", d.policy.edge_choice, str::parse)?;
    c.policy.default_action = get_with(pairs, "default_action", d.policy.default_action, str::parse)?;
    c.policy.step_cap = get(pairs, "step_cap", d.policy.step_cap)?;
    c.validate()?;
    Ok(c)
}
