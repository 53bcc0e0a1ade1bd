// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain {0:?}: {1}")]
    InvalidDomain(String, &'static str),

    #[error("invalid bundle path {0:?}")]
    InvalidPath(String),

    #[error("fetching {origin} failed: {reason}")]
    FetchFailed { origin: String, reason: String },

    #[error("repository {0} contains no files")]
    EmptyRepository(String),

    #[error("signing failed: {0}")]
    SigningFailure(String),

    #[error("invalid key: {0}")]
    InvalidKey(String),

    #[error("malformed encoding: {0}")]
    Malformed(&'static str),

    #[error("a real clock cannot be advanced")]
    RealClock,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
