// SPDX-License-Identifier: Apache-2.0

//! The Builder: fetches a TA's code at a given commit and measures it.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::RwLock;

use crate::attestation::compute_reference_value;
use crate::bundle::CodeBundle;
use crate::evidence::ReferenceValue;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RepositoryRef {
    pub repository: String,
    pub commit_id: String,
}

impl RepositoryRef {
    pub fn new(repository: impl Into<String>, commit_id: impl Into<String>) -> Self {
        Self { repository: repository.into(), commit_id: commit_id.into() }
    }
}

impl fmt::Display for RepositoryRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.repository, self.commit_id)
    }
}

pub trait RepositoryFetcher: Send + Sync {
    fn fetch(&self, origin: &RepositoryRef) -> Result<CodeBundle>;
}

/// Fetches then measures. Repeated calls on an unchanged origin return the
/// same bundle and reference value.
pub fn build_and_measure(
    fetcher: &dyn RepositoryFetcher,
    origin: &RepositoryRef,
) -> Result<(CodeBundle, ReferenceValue)> {
    let bundle = fetcher.fetch(origin)?;
    if bundle.is_empty() {
        return Err(Error::EmptyRepository(origin.to_string()));
    }
    let rv = compute_reference_value(&bundle);
    Ok((bundle, rv))
}

/// Resolves repositories on the local filesystem.
///
/// `repository` is a path or `file://` URL. If it is a git repository the
/// tree at `commit_id` is read with the `git` CLI; otherwise the directory
/// `<repository>/<commit_id>` is read as a snapshot.
#[derive(Debug, Clone, Default)]
pub struct LocalFetcher;

impl LocalFetcher {
    fn resolve(repository: &str) -> Result<PathBuf> {
        if repository.contains("://") {
            let url = url::Url::parse(repository).map_err(|e| fetch_failed(repository, e))?;
            if url.scheme() != "file" {
                return Err(fetch_failed(repository, "unsupported scheme"));
            }
            url.to_file_path().map_err(|_| fetch_failed(repository, "bad file url"))
        } else {
            Ok(PathBuf::from(repository))
        }
    }

    fn is_git_repo(path: &Path) -> bool {
        Command::new("git")
            .arg("-C")
            .arg(path)
            .args(["rev-parse", "--git-dir"])
            .output()
            .map(|out| {
                // A snapshot directory nested in some unrelated checkout must
                // not be treated as a repository.
                out.status.success()
                    && Command::new("git")
                        .arg("-C")
                        .arg(path)
                        .args(["rev-parse", "--show-prefix"])
                        .output()
                        .map(|p| p.stdout.trim_ascii().is_empty())
                        .unwrap_or(false)
            })
            .unwrap_or(false)
    }

    fn fetch_git(path: &Path, origin: &RepositoryRef) -> Result<CodeBundle> {
        let git = |args: &[&str]| -> Result<Vec<u8>> {
            let out = Command::new("git")
                .arg("-C")
                .arg(path)
                .args(args)
                .output()
                .map_err(|e| fetch_failed(&origin.repository, e))?;
            if !out.status.success() {
                return Err(fetch_failed(
                    &origin.to_string(),
                    String::from_utf8_lossy(&out.stderr).trim(),
                ));
            }
            Ok(out.stdout)
        };
        let listing = git(&["ls-tree", "-r", "-z", "--full-tree", &origin.commit_id])?;
        let mut bundle = CodeBundle::new(origin.to_string());
        for record in listing.split(|b| *b == 0).filter(|r| !r.is_empty()) {
            let record = std::str::from_utf8(record)
                .map_err(|_| fetch_failed(&origin.repository, "non utf-8 path"))?;
            let (meta, file) = record
                .split_once('\t')
                .ok_or_else(|| fetch_failed(&origin.repository, "unexpected ls-tree output"))?;
            let mut fields = meta.split(' ');
            let (_mode, kind, object) = (fields.next(), fields.next(), fields.next());
            if kind != Some("blob") {
                continue;
            }
            let object = object.unwrap_or_default();
            bundle.insert(file, git(&["cat-file", "blob", object])?)?;
        }
        Ok(bundle)
    }
}

fn fetch_failed(origin: &str, reason: impl fmt::Display) -> Error {
    Error::FetchFailed { origin: origin.to_owned(), reason: reason.to_string() }
}

impl RepositoryFetcher for LocalFetcher {
    fn fetch(&self, origin: &RepositoryRef) -> Result<CodeBundle> {
        let path = Self::resolve(&origin.repository)?;
        if !path.is_dir() {
            return Err(fetch_failed(&origin.repository, "not a directory"));
        }
        if Self::is_git_repo(&path) {
            return Self::fetch_git(&path, origin);
        }
        if origin.commit_id.is_empty()
            || origin.commit_id.contains('/')
            || origin.commit_id.starts_with('.')
        {
            return Err(fetch_failed(&origin.to_string(), "invalid snapshot name"));
        }
        let snapshot = path.join(&origin.commit_id);
        if !snapshot.is_dir() {
            return Err(fetch_failed(&origin.to_string(), "no such snapshot"));
        }
        CodeBundle::from_dir(&snapshot, origin.to_string())
    }
}

/// In-memory repositories, used by the simulation and tests.
#[derive(Debug, Default)]
pub struct MemoryFetcher {
    repos: RwLock<HashMap<RepositoryRef, CodeBundle>>,
}

impl MemoryFetcher {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn publish(&self, origin: RepositoryRef, bundle: CodeBundle) {
        self.repos.write().expect("fetcher lock").insert(origin, bundle);
    }
}

impl RepositoryFetcher for MemoryFetcher {
    fn fetch(&self, origin: &RepositoryRef) -> Result<CodeBundle> {
        self.repos
            .read()
            .expect("fetcher lock")
            .get(origin)
            .cloned()
            .ok_or_else(|| fetch_failed(&origin.to_string(), "unknown repository"))
    }
}
