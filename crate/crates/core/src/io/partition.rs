use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::segmentation::SuperpointPartition;

/// Parses one decimal label per line. Labels are relabeled to a contiguous
/// range in order of first appearance.
pub fn parse_partition(text: &str) -> Result<SuperpointPartition> {
    let mut raw = Vec::new();
    let mut offset = 0u64;
    for line in text.split_inclusive('\n') {
        let t = line.trim();
        if !t.is_empty() {
            let v: i64 = t
                .parse()
                .map_err(|_| Error::parse(offset, format!("line {}: '{t}' is not an integer label", raw.len() + 1)))?;
            raw.push(v);
        }
        offset += line.len() as u64;
    }
    if raw.is_empty() {
        return Err(Error::parse(0, "partition file has no labels"));
    }
    SuperpointPartition::from_raw_labels(&raw)
}

pub fn read_partition(path: impl AsRef<Path>) -> Result<SuperpointPartition> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_partition(&text)
}

pub fn format_partition(partition: &SuperpointPartition) -> String {
    let mut out = String::with_capacity(partition.len() * 4);
    for l in partition.labels() {
        writeln!(out, "{l}").expect("writing to a String");
    }
    out
}

pub fn write_partition(path: impl AsRef<Path>, partition: &SuperpointPartition) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_partition(partition)).map_err(|e| Error::io(path, e))
}
