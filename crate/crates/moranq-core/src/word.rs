//! Finite index words addressing nodes of the construction tree.
//!
//! A word is a sequence of 1-based child indices; the empty word addresses
//! the root interval. Depth-k words address the intervals of the k-th
//! construction stage.

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(Vec<u32>);

impl Word {
    /// The empty word, addressing the root interval.
    pub fn root() -> Word {
        Word(Vec::new())
    }

    pub fn from_indices(indices: impl Into<Vec<u32>>) -> Word {
        let indices = indices.into();
        debug_assert!(indices.iter().all(|&i| i >= 1), "indices are 1-based");
        Word(indices)
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[u32] {
        &self.0
    }

    /// The word with the last index removed; the root is its own parent.
    pub fn parent(&self) -> Word {
        let mut v = self.0.clone();
        v.pop();
        Word(v)
    }

    /// This word extended by one child index (1-based).
    pub fn child(&self, index: u32) -> Word {
        debug_assert!(index >= 1);
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.extend_from_slice(&self.0);
        v.push(index);
        Word(v)
    }

    /// The first `depth` indices.
    pub fn prefix(&self, depth: usize) -> Word {
        Word(self.0[..depth.min(self.0.len())].to_vec())
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }
}

/// Words serialize as their display string.
impl serde::Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Words render as dot-separated indices; the root renders empty.
impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, ix) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ".")?;
            }
            write!(f, "{ix}")?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = String;

    fn from_str(s: &str) -> Result<Word, String> {
        let t = s.trim();
        if t.is_empty() {
            return Ok(Word::root());
        }
        let mut indices = Vec::new();
        for part in t.split('.') {
            let ix: u32 = part
                .trim()
                .parse()
                .map_err(|_| format!("bad word component {part:?}"))?;
            if ix == 0 {
                return Err("word indices are 1-based".to_string());
            }
            indices.push(ix);
        }
        Ok(Word(indices))
    }
}
