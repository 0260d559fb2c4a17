// SPDX-License-Identifier: Apache-2.0

//! Memory images and final-state snapshots in their JSON form.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryImage {
    pub width: u32,
    pub size: usize,
    pub data: Vec<u64>,
}

impl MemoryImage {
    pub fn zeroed(width: u32, size: usize) -> Self {
        MemoryImage {
            width,
            size,
            data: vec![0; size],
        }
    }
}

/// Initial contents for the entry component: memories by cell name and
/// values for its input ports.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryData {
    #[serde(default)]
    pub memories: BTreeMap<String, MemoryImage>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub inputs: BTreeMap<String, u64>,
}

impl MemoryData {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("memory data serializes")
    }

    pub fn with_input(mut self, name: &str, value: u64) -> Self {
        self.inputs.insert(name.to_string(), value);
        self
    }

    pub fn with_memory(mut self, name: &str, width: u32, data: Vec<u64>) -> Self {
        let size = data.len();
        self.memories
            .insert(name.to_string(), MemoryImage { width, size, data });
        self
    }
}

/// Observable state after a run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalState {
    pub memories: BTreeMap<String, MemoryImage>,
    pub registers: BTreeMap<String, u64>,
    pub outputs: BTreeMap<String, u64>,
}

impl FinalState {
    /// Memories and output ports; register contents are implementation detail.
    pub fn observable_eq(&self, other: &FinalState) -> bool {
        self.memories == other.memories && self.outputs == other.outputs
    }

    /// First observable difference, for diagnostics.
    pub fn diff(&self, other: &FinalState) -> Option<String> {
        for (name, m) in &self.memories {
            match other.memories.get(name) {
                None => return Some(format!("memory `{name}` missing on the right")),
                Some(o) if o != m => {
                    let idx = m.data.iter().zip(&o.data).position(|(a, b)| a != b);
                    return Some(match idx {
                        Some(i) => format!("memory `{name}`[{i}]: {} vs {}", m.data[i], o.data[i]),
                        None => format!("memory `{name}` shape differs"),
                    });
                }
                _ => {}
            }
        }
        if let Some(name) = other
            .memories
            .keys()
            .find(|k| !self.memories.contains_key(*k))
        {
            return Some(format!("memory `{name}` missing on the left"));
        }
        for (name, v) in &self.outputs {
            let o = other.outputs.get(name).copied();
            if o != Some(*v) {
                return Some(format!("output `{name}`: {v} vs {o:?}"));
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_shape() {
        let text = r#"{"memories": {"A": {"width": 32, "size": 2, "data": [1, 2]}}}"#;
        let d = MemoryData::from_json(text).unwrap();
        assert_eq!(d.memories["A"].data, vec![1, 2]);
        assert!(d.inputs.is_empty());
        assert_eq!(MemoryData::from_json(&d.to_json()).unwrap(), d);
    }
}
