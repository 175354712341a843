use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use polymorph::{Partition, Polymorphism, Rational, Scalar, SymbolicSystem};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::Global;

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{}", path.display()))
}

pub fn read_polymorphism(path: &Path) -> Result<Polymorphism<Rational>> {
    read_json(path)
}

pub fn read_system(path: &Path) -> Result<SymbolicSystem<Rational>> {
    read_json(path)
}

pub fn emit(global: &Global, text: &str) -> Result<()> {
    match &global.output {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn parse_scalars<S: Scalar>(list: &str, what: &str) -> Result<Vec<S>> {
    list.split(',')
        .map(|w| S::parse_str(w).with_context(|| format!("in {what}")))
        .collect()
}

/// `0,1|2,3` → blocks `{0,1}`, `{2,3}`.
pub fn parse_partition(text: &str, atoms: usize) -> Result<Partition> {
    let mut blocks = Vec::new();
    for b in text.split('|') {
        let block: std::result::Result<Vec<usize>, _> = b.split(',').map(|w| w.trim().parse::<usize>()).collect();
        match block {
            Ok(block) => blocks.push(block),
            Err(_) => bail!("partition {text:?}: block {b:?} is not a list of atom indices"),
        }
    }
    Ok(Partition::new(atoms, blocks)?)
}

/// `lo:hi` with optional signs.
pub fn parse_window(text: &str) -> Result<(i32, i32)> {
    let (lo, hi) = text
        .split_once(':')
        .with_context(|| format!("window {text:?} must look like lo:hi"))?;
    Ok((
        lo.trim().parse().with_context(|| format!("window {text:?}: bad lower end"))?,
        hi.trim().parse().with_context(|| format!("window {text:?}: bad upper end"))?,
    ))
}
