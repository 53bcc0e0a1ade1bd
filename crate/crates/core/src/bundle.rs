// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::codec::{Decoder, Encoder};
use crate::{Error, Result};

/// A snapshot of a TA's source tree.
///
/// Files are keyed by `/`-separated relative paths. The canonical byte form
/// sorts files by path, so it does not depend on insertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CodeBundle {
    files: BTreeMap<String, Vec<u8>>,
    origin: String,
}

fn validate_path(path: &str) -> Result<()> {
    let ok = !path.is_empty()
        && !path.contains('\\')
        && path
            .split('/')
            .all(|seg| !seg.is_empty() && seg != "." && seg != "..");
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidPath(path.to_owned()))
    }
}

impl CodeBundle {
    pub fn new(origin: impl Into<String>) -> Self {
        Self { files: BTreeMap::new(), origin: origin.into() }
    }

    pub fn with_file(mut self, path: &str, content: impl Into<Vec<u8>>) -> Result<Self> {
        self.insert(path, content)?;
        Ok(self)
    }

    /// Adds or replaces a file.
    pub fn insert(&mut self, path: &str, content: impl Into<Vec<u8>>) -> Result<()> {
        validate_path(path)?;
        self.files.insert(path.to_owned(), content.into());
        Ok(())
    }

    pub fn origin(&self) -> &str {
        &self.origin
    }

    pub fn files(&self) -> impl Iterator<Item = (&str, &[u8])> {
        self.files.iter().map(|(p, c)| (p.as_str(), c.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    /// `len(path) ‖ path ‖ len(content) ‖ content` for every file in path order.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        for (path, content) in &self.files {
            enc.str(path).bytes(content);
        }
        enc.finish()
    }

    pub fn from_canonical_bytes(bytes: &[u8], origin: impl Into<String>) -> Result<Self> {
        let mut bundle = Self::new(origin);
        let mut dec = Decoder::new(bytes);
        let mut last: Option<String> = None;
        while !dec.is_empty() {
            let path = dec.string()?;
            let content = dec.bytes()?;
            if last.as_ref().is_some_and(|prev| prev >= &path) {
                return Err(Error::Malformed("bundle paths not strictly ascending"));
            }
            bundle.insert(&path, content)?;
            last = Some(path);
        }
        Ok(bundle)
    }

    /// Reads every regular file below `root`, skipping `.git`.
    pub fn from_dir(root: &Path, origin: impl Into<String>) -> Result<Self> {
        let mut bundle = Self::new(origin);
        let mut stack = vec![root.to_path_buf()];
        while let Some(dir) = stack.pop() {
            for entry in fs::read_dir(&dir)? {
                let entry = entry?;
                let kind = entry.file_type()?;
                if entry.file_name() == ".git" {
                    continue;
                }
                if kind.is_dir() {
                    stack.push(entry.path());
                } else if kind.is_file() {
                    let rel = entry
                        .path()
                        .strip_prefix(root)
                        .expect("walk stays below root")
                        .components()
                        .map(|c| c.as_os_str().to_string_lossy().into_owned())
                        .collect::<Vec<_>>()
                        .join("/");
                    bundle.insert(&rel, fs::read(entry.path())?)?;
                }
            }
        }
        Ok(bundle)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_bundle_is_empty_bytes() {
        assert!(CodeBundle::new("x").canonical_bytes().is_empty());
    }

    #[test]
    fn insertion_order_does_not_matter() {
        let ab = CodeBundle::new("o").with_file("a", [1]).unwrap().with_file("b", [2]).unwrap();
        let ba = CodeBundle::new("o").with_file("b", [2]).unwrap().with_file("a", [1]).unwrap();
        assert_eq!(ab.canonical_bytes(), ba.canonical_bytes());
    }

    #[test]
    fn matches_hand_rolled_encoding() {
        // Computed independently with struct.pack('>Q', ...) in Python.
        let bundle = CodeBundle::new("o").with_file("m", "hi").unwrap();
        assert_eq!(hex::encode(bundle.canonical_bytes()), "00000000000000016d00000000000000026869");
    }

    #[test]
    fn rejects_unsafe_paths() {
        for p in ["", "../etc/passwd", "a/../b", "/abs", "a//b", "a\\b", "./a", "a/"] {
            assert!(CodeBundle::new("o").with_file(p, "x").is_err(), "{p:?} accepted");
        }
        assert!(CodeBundle::new("o").with_file("src/main.rs", "x").is_ok());
    }

    #[test]
    fn reads_directory_tree() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("src")).unwrap();
        fs::create_dir_all(dir.path().join(".git")).unwrap();
        fs::write(dir.path().join("src/main.rs"), "fn main() {}\n").unwrap();
        fs::write(dir.path().join("Cargo.toml"), "[package]\n").unwrap();
        fs::write(dir.path().join(".git/HEAD"), "ref").unwrap();
        let bundle = CodeBundle::from_dir(dir.path(), "o").unwrap();
        let paths: Vec<_> = bundle.files().map(|(p, _)| p).collect();
        assert_eq!(paths, ["Cargo.toml", "src/main.rs"]);
    }

    #[test]
    fn decode_rejects_unsorted() {
        let mut enc = Encoder::new();
        enc.str("b").bytes(b"1").str("a").bytes(b"2");
        assert!(CodeBundle::from_canonical_bytes(&enc.finish(), "o").is_err());
    }

    proptest! {
        #[test]
        fn canonical_round_trip(files in proptest::collection::btree_map("[a-z]{1,5}(/[a-z0-9]{1,3}(\\.[a-z]{1,2})?){0,2}", proptest::collection::vec(any::<u8>(), 0..32), 0..8)) {
            let mut bundle = CodeBundle::new("origin");
            for (p, c) in &files {
                bundle.insert(p, c.clone()).unwrap();
            }
            let bytes = bundle.canonical_bytes();
            prop_assert_eq!(CodeBundle::from_canonical_bytes(&bytes, "origin").unwrap(), bundle);
        }
    }
}
