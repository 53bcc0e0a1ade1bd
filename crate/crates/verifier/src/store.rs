// SPDX-License-Identifier: Apache-2.0

//! SQLite persistence. Table and column names follow the Verifier schema:
//! `services`, `ta_codes`, `ta_servers`, `ta_violations`, `subscriptions`,
//! plus `monitor_state` for the monitoring cursor.

use std::path::Path;
use std::sync::{Mutex, MutexGuard};

use rawebs_core::{Domain, ReferenceValue, Timestamp};
use rusqlite::{params, Connection, OptionalExtension, Row, Transaction};
use serde::Serialize;

use crate::error::Result;

pub type Id = i64;

const SCHEMA: &str = r#"
CREATE TABLE IF NOT EXISTS services (
    id          INTEGER PRIMARY KEY AUTOINCREMENT,
    name        TEXT    NOT NULL DEFAULT '',
    token       TEXT    NOT NULL UNIQUE,
    is_active   INTEGER NOT NULL DEFAULT 1
);
CREATE TABLE IF NOT EXISTS ta_codes (
    id              INTEGER PRIMARY KEY AUTOINCREMENT,
    repository      TEXT    NOT NULL,
    commit_id       TEXT    NOT NULL,
    unique_id       BLOB    NOT NULL,
    is_active       INTEGER NOT NULL DEFAULT 1,
    ta_code_service INTEGER NOT NULL REFERENCES services(id)
);
CREATE TABLE IF NOT EXISTS ta_servers (
    id                INTEGER PRIMARY KEY AUTOINCREMENT,
    domain            TEXT    NOT NULL,
    public_key        BLOB    NOT NULL,
    quote             TEXT    NOT NULL,
    monitor_log_id    INTEGER,
    is_active         INTEGER NOT NULL DEFAULT 0,
    ta_server_service INTEGER NOT NULL REFERENCES services(id),
    ta_server_code    INTEGER NOT NULL REFERENCES ta_codes(id),
    created_at        INTEGER NOT NULL,
    superseded_by     INTEGER REFERENCES ta_servers(id)
);
CREATE INDEX IF NOT EXISTS ta_servers_by_domain ON ta_servers(domain, id);
CREATE UNIQUE INDEX IF NOT EXISTS ta_servers_one_active ON ta_servers(domain) WHERE is_active = 1;
CREATE TABLE IF NOT EXISTS ta_violations (
    id                   INTEGER PRIMARY KEY AUTOINCREMENT,
    created_at           INTEGER NOT NULL,
    ta_violation_server  INTEGER NOT NULL REFERENCES ta_servers(id),
    ta_violation_service INTEGER NOT NULL REFERENCES services(id),
    offending_log_index  INTEGER NOT NULL
);
CREATE INDEX IF NOT EXISTS ta_violations_by_server ON ta_violations(ta_violation_server);
CREATE TRIGGER IF NOT EXISTS ta_violations_no_update BEFORE UPDATE ON ta_violations
BEGIN SELECT RAISE(ABORT, 'ta_violations is append-only'); END;
CREATE TRIGGER IF NOT EXISTS ta_violations_no_delete BEFORE DELETE ON ta_violations
BEGIN SELECT RAISE(ABORT, 'ta_violations is append-only'); END;
CREATE TABLE IF NOT EXISTS subscriptions (
    id                  INTEGER PRIMARY KEY AUTOINCREMENT,
    endpoint            TEXT    NOT NULL,
    p256dh              TEXT    NOT NULL,
    auth                TEXT    NOT NULL,
    subscription_server INTEGER NOT NULL REFERENCES ta_servers(id),
    UNIQUE (endpoint, subscription_server)
);
CREATE TABLE IF NOT EXISTS monitor_state (
    id             INTEGER PRIMARY KEY CHECK (id = 1),
    next_log_index INTEGER NOT NULL
);
INSERT OR IGNORE INTO monitor_state (id, next_log_index) VALUES (1, 0);
"#;

/// Integer columns are counted as 8 bytes and booleans as 1 byte when
/// estimating record sizes.
const INT_BYTES: usize = 8;
const BOOL_BYTES: usize = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ServiceAccount {
    pub id: Id,
    pub name: String,
    #[serde(skip)]
    pub token: String,
    pub is_active: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaCode {
    pub id: Id,
    pub repository: String,
    pub commit_id: String,
    pub unique_id: ReferenceValue,
    pub is_active: bool,
    pub owner_service: Id,
}

impl TaCode {
    pub fn stored_size(&self) -> usize {
        INT_BYTES
            + self.repository.len()
            + self.commit_id.len()
            + self.unique_id.as_bytes().len()
            + BOOL_BYTES
            + INT_BYTES
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaServer {
    pub id: Id,
    pub domain: Domain,
    #[serde(skip)]
    pub public_key: Vec<u8>,
    /// Base64 evidence as submitted.
    #[serde(skip)]
    pub quote: String,
    pub monitor_log_id: Option<u64>,
    pub is_active: bool,
    pub code: Id,
    pub owner_service: Id,
    pub created_at: Timestamp,
    pub superseded_by: Option<Id>,
}

impl TaServer {
    pub fn stored_size(&self) -> usize {
        INT_BYTES
            + self.domain.as_str().len()
            + self.public_key.len()
            + self.quote.len()
            + INT_BYTES // monitor_log_id
            + BOOL_BYTES
            + 3 * INT_BYTES // service, code, created_at
            + INT_BYTES // superseded_by
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaViolation {
    pub id: Id,
    pub created_at: Timestamp,
    pub server: Id,
    pub service: Id,
    pub offending_log_index: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Subscription {
    pub id: Id,
    pub endpoint: String,
    pub p256dh: String,
    pub auth: String,
    pub server: Id,
}

impl Subscription {
    pub fn stored_size(&self) -> usize {
        INT_BYTES + self.endpoint.len() + self.p256dh.len() + self.auth.len() + INT_BYTES
    }
}

pub struct NewRegistration<'a> {
    pub service: Id,
    pub repository: &'a str,
    pub commit_id: &'a str,
    pub unique_id: ReferenceValue,
    pub domain: &'a Domain,
    pub public_key: &'a [u8],
    pub quote: &'a str,
    pub created_at: Timestamp,
}

/// What processing one log entry did to the store.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LogOutcome {
    AlreadyProcessed,
    Unregistered,
    Activated { server: Id },
    Violation { violation: TaViolation, server: TaServer },
}

pub struct Store {
    conn: Mutex<Connection>,
}

const SERVER_COLUMNS: &str = "id, domain, public_key, quote, monitor_log_id, is_active, \
     ta_server_code, ta_server_service, created_at, superseded_by";
const CODE_COLUMNS: &str =
    "id, repository, commit_id, unique_id, is_active, ta_code_service";

fn server_from_row(row: &Row<'_>) -> rusqlite::Result<TaServer> {
    let domain: String = row.get(1)?;
    Ok(TaServer {
        id: row.get(0)?,
        domain: Domain::canonicalize(&domain).map_err(|e| {
            rusqlite::Error::FromSqlConversionFailure(1, rusqlite::types::Type::Text, Box::new(e))
        })?,
        public_key: row.get(2)?,
        quote: row.get(3)?,
        monitor_log_id: row.get::<_, Option<i64>>(4)?.map(|v| v as u64),
        is_active: row.get(5)?,
        code: row.get(6)?,
        owner_service: row.get(7)?,
        created_at: row.get::<_, i64>(8)? as u64,
        superseded_by: row.get(9)?,
    })
}

fn code_from_row(row: &Row<'_>) -> rusqlite::Result<TaCode> {
    let unique_id: Vec<u8> = row.get(3)?;
    Ok(TaCode {
        id: row.get(0)?,
        repository: row.get(1)?,
        commit_id: row.get(2)?,
        unique_id: ReferenceValue::from_slice(&unique_id).map_err(|e| {
            rusqlite::Error::FromSqlConversionFailure(3, rusqlite::types::Type::Blob, Box::new(e))
        })?,
        is_active: row.get(4)?,
        owner_service: row.get(5)?,
    })
}

fn violation_from_row(row: &Row<'_>) -> rusqlite::Result<TaViolation> {
    Ok(TaViolation {
        id: row.get(0)?,
        created_at: row.get::<_, i64>(1)? as u64,
        server: row.get(2)?,
        service: row.get(3)?,
        offending_log_index: row.get::<_, i64>(4)? as u64,
    })
}

fn subscription_from_row(row: &Row<'_>) -> rusqlite::Result<Subscription> {
    Ok(Subscription {
        id: row.get(0)?,
        endpoint: row.get(1)?,
        p256dh: row.get(2)?,
        auth: row.get(3)?,
        server: row.get(4)?,
    })
}

fn latest_server_tx(tx: &Transaction<'_>, domain: &Domain) -> rusqlite::Result<Option<TaServer>> {
    tx.query_row(
        &format!("SELECT {SERVER_COLUMNS} FROM ta_servers WHERE domain = ?1 ORDER BY id DESC LIMIT 1"),
        [domain.as_str()],
        server_from_row,
    )
    .optional()
}

impl Store {
    pub fn open(path: &Path) -> Result<Self> {
        let conn = Connection::open(path)?;
        conn.pragma_update(None, "journal_mode", "WAL")?;
        Self::init(conn)
    }

    pub fn open_in_memory() -> Result<Self> {
        Self::init(Connection::open_in_memory()?)
    }

    fn init(conn: Connection) -> Result<Self> {
        conn.pragma_update(None, "foreign_keys", "ON")?;
        conn.execute_batch(SCHEMA)?;
        Ok(Self { conn: Mutex::new(conn) })
    }

    fn conn(&self) -> MutexGuard<'_, Connection> {
        self.conn.lock().expect("store lock poisoned")
    }

    pub fn insert_service(&self, name: &str, token: &str) -> Result<ServiceAccount> {
        let conn = self.conn();
        conn.execute("INSERT INTO services (name, token, is_active) VALUES (?1, ?2, 1)", params![name, token])?;
        Ok(ServiceAccount {
            id: conn.last_insert_rowid(),
            name: name.to_owned(),
            token: token.to_owned(),
            is_active: true,
        })
    }

    pub fn service_by_token(&self, token: &str) -> Result<Option<ServiceAccount>> {
        Ok(self
            .conn()
            .query_row(
                "SELECT id, name, token, is_active FROM services WHERE token = ?1",
                [token],
                |r| {
                    Ok(ServiceAccount {
                        id: r.get(0)?,
                        name: r.get(1)?,
                        token: r.get(2)?,
                        is_active: r.get(3)?,
                    })
                },
            )
            .optional()?)
    }

    pub fn set_service_active(&self, id: Id, active: bool) -> Result<()> {
        self.conn().execute("UPDATE services SET is_active = ?2 WHERE id = ?1", params![id, active])?;
        Ok(())
    }

    pub fn count_servers_for_service(&self, service: Id) -> Result<u64> {
        let n: i64 = self.conn().query_row(
            "SELECT COUNT(*) FROM ta_servers WHERE ta_server_service = ?1",
            [service],
            |r| r.get(0),
        )?;
        Ok(n as u64)
    }

    /// Inserts the code and server rows and supersedes every earlier server
    /// for the same domain, atomically. Returns the previous latest server id.
    pub fn register_ta(&self, reg: NewRegistration<'_>) -> Result<(TaCode, TaServer, Option<Id>)> {
        let mut conn = self.conn();
        let tx = conn.transaction()?;
        let previous = latest_server_tx(&tx, reg.domain)?.map(|s| s.id);
        tx.execute(
            "INSERT INTO ta_codes (repository, commit_id, unique_id, is_active, ta_code_service) \
             VALUES (?1, ?2, ?3, 1, ?4)",
            params![reg.repository, reg.commit_id, &reg.unique_id.as_bytes()[..], reg.service],
        )?;
        let code_id = tx.last_insert_rowid();
        tx.execute(
            "INSERT INTO ta_servers (domain, public_key, quote, monitor_log_id, is_active, \
             ta_server_service, ta_server_code, created_at) VALUES (?1, ?2, ?3, NULL, 0, ?4, ?5, ?6)",
            params![
                reg.domain.as_str(),
                reg.public_key,
                reg.quote,
                reg.service,
                code_id,
                reg.created_at as i64
            ],
        )?;
        let server_id = tx.last_insert_rowid();
        tx.execute(
            "UPDATE ta_servers SET is_active = 0, superseded_by = ?2 \
             WHERE domain = ?1 AND id <> ?2 AND superseded_by IS NULL",
            params![reg.domain.as_str(), server_id],
        )?;
        tx.commit()?;
        drop(conn);
        let code = self.code(code_id)?.expect("just inserted");
        let server = self.server(server_id)?.expect("just inserted");
        Ok((code, server, previous))
    }

    pub fn server(&self, id: Id) -> Result<Option<TaServer>> {
        Ok(self
            .conn()
            .query_row(&format!("SELECT {SERVER_COLUMNS} FROM ta_servers WHERE id = ?1"), [id], server_from_row)
            .optional()?)
    }

    pub fn code(&self, id: Id) -> Result<Option<TaCode>> {
        Ok(self
            .conn()
            .query_row(&format!("SELECT {CODE_COLUMNS} FROM ta_codes WHERE id = ?1"), [id], code_from_row)
            .optional()?)
    }

    /// The most recently registered server for `domain`.
    pub fn latest_server(&self, domain: &Domain) -> Result<Option<TaServer>> {
        let mut conn = self.conn();
        let tx = conn.transaction()?;
        Ok(latest_server_tx(&tx, domain)?)
    }

    /// Every registration for `domain` with its code, newest first.
    pub fn registrations(&self, domain: &Domain) -> Result<Vec<(TaServer, TaCode)>> {
        let conn = self.conn();
        let mut stmt = conn.prepare_cached(
            "SELECT s.id, s.domain, s.public_key, s.quote, s.monitor_log_id, s.is_active, \
                    s.ta_server_code, s.ta_server_service, s.created_at, s.superseded_by, \
                    c.id, c.repository, c.commit_id, c.unique_id, c.is_active, c.ta_code_service \
             FROM ta_servers s JOIN ta_codes c ON c.id = s.ta_server_code \
             WHERE s.domain = ?1 ORDER BY s.id DESC",
        )?;
        let rows = stmt.query_map([domain.as_str()], |row| {
            let server = server_from_row(row)?;
            let unique_id: Vec<u8> = row.get(13)?;
            let code = TaCode {
                id: row.get(10)?,
                repository: row.get(11)?,
                commit_id: row.get(12)?,
                unique_id: ReferenceValue::from_slice(&unique_id).map_err(|e| {
                    rusqlite::Error::FromSqlConversionFailure(13, rusqlite::types::Type::Blob, Box::new(e))
                })?,
                is_active: row.get(14)?,
                owner_service: row.get(15)?,
            };
            Ok((server, code))
        })?;
        Ok(rows.collect::<rusqlite::Result<_>>()?)
    }

    /// Public keys of servers for `domain` whose own certificate was observed.
    pub fn confirmed_keys(&self, domain: &Domain) -> Result<Vec<Vec<u8>>> {
        let conn = self.conn();
        let mut stmt = conn.prepare_cached(
            "SELECT DISTINCT public_key FROM ta_servers WHERE domain = ?1 AND monitor_log_id IS NOT NULL",
        )?;
        let rows = stmt.query_map([domain.as_str()], |r| r.get(0))?;
        Ok(rows.collect::<rusqlite::Result<_>>()?)
    }

    /// The newest server for `domain` that has been superseded.
    pub fn latest_superseded(&self, domain: &Domain) -> Result<Option<TaServer>> {
        Ok(self
            .conn()
            .query_row(
                &format!(
                    "SELECT {SERVER_COLUMNS} FROM ta_servers \
                     WHERE domain = ?1 AND superseded_by IS NOT NULL ORDER BY id DESC LIMIT 1"
                ),
                [domain.as_str()],
                server_from_row,
            )
            .optional()?)
    }

    pub fn violations_for_server(&self, server: Id) -> Result<Vec<TaViolation>> {
        let conn = self.conn();
        let mut stmt = conn.prepare_cached(
            "SELECT id, created_at, ta_violation_server, ta_violation_service, offending_log_index \
             FROM ta_violations WHERE ta_violation_server = ?1 ORDER BY id",
        )?;
        let rows = stmt.query_map([server], violation_from_row)?;
        Ok(rows.collect::<rusqlite::Result<_>>()?)
    }

    pub fn violation_count(&self) -> Result<u64> {
        let n: i64 = self.conn().query_row("SELECT COUNT(*) FROM ta_violations", [], |r| r.get(0))?;
        Ok(n as u64)
    }

    pub fn next_log_index(&self) -> Result<u64> {
        let n: i64 = self.conn().query_row(
            "SELECT next_log_index FROM monitor_state WHERE id = 1",
            [],
            |r| r.get(0),
        )?;
        Ok(n as u64)
    }

    /// Applies one published log entry and advances the monitoring cursor in
    /// the same transaction, so each index takes effect exactly once.
    pub fn process_log_entry(
        &self,
        index: u64,
        domain: &Domain,
        public_key: &[u8],
        now: Timestamp,
    ) -> Result<LogOutcome> {
        let mut conn = self.conn();
        let tx = conn.transaction()?;
        let next: i64 = tx.query_row("SELECT next_log_index FROM monitor_state WHERE id = 1", [], |r| r.get(0))?;
        if (index as i64) < next {
            return Ok(LogOutcome::AlreadyProcessed);
        }
        let outcome = match latest_server_tx(&tx, domain)? {
            None => LogOutcome::Unregistered,
            Some(server) if server.public_key == public_key => {
                tx.execute(
                    "UPDATE ta_servers SET is_active = 1, monitor_log_id = COALESCE(monitor_log_id, ?2) \
                     WHERE id = ?1",
                    params![server.id, index as i64],
                )?;
                LogOutcome::Activated { server: server.id }
            }
            Some(server) => {
                tx.execute(
                    "INSERT INTO ta_violations (created_at, ta_violation_server, ta_violation_service, \
                     offending_log_index) VALUES (?1, ?2, ?3, ?4)",
                    params![now as i64, server.id, server.owner_service, index as i64],
                )?;
                let violation = TaViolation {
                    id: tx.last_insert_rowid(),
                    created_at: now,
                    server: server.id,
                    service: server.owner_service,
                    offending_log_index: index,
                };
                LogOutcome::Violation { violation, server }
            }
        };
        tx.execute("UPDATE monitor_state SET next_log_index = ?1 WHERE id = 1", [index as i64 + 1])?;
        tx.commit()?;
        Ok(outcome)
    }

    /// Inserts a subscription, or returns the existing one for the same
    /// endpoint and server.
    pub fn upsert_subscription(&self, endpoint: &str, p256dh: &str, auth: &str, server: Id) -> Result<(Subscription, bool)> {
        let conn = self.conn();
        let inserted = conn.execute(
            "INSERT OR IGNORE INTO subscriptions (endpoint, p256dh, auth, subscription_server) \
             VALUES (?1, ?2, ?3, ?4)",
            params![endpoint, p256dh, auth, server],
        )? == 1;
        let sub = conn.query_row(
            "SELECT id, endpoint, p256dh, auth, subscription_server FROM subscriptions \
             WHERE endpoint = ?1 AND subscription_server = ?2",
            params![endpoint, server],
            subscription_from_row,
        )?;
        Ok((sub, inserted))
    }

    pub fn subscriptions_for_server(&self, server: Id) -> Result<Vec<Subscription>> {
        let conn = self.conn();
        let mut stmt = conn.prepare_cached(
            "SELECT id, endpoint, p256dh, auth, subscription_server FROM subscriptions \
             WHERE subscription_server = ?1 ORDER BY id",
        )?;
        let rows = stmt.query_map([server], subscription_from_row)?;
        Ok(rows.collect::<rusqlite::Result<_>>()?)
    }

    pub fn all_subscriptions(&self) -> Result<Vec<Subscription>> {
        let conn = self.conn();
        let mut stmt = conn.prepare_cached(
            "SELECT id, endpoint, p256dh, auth, subscription_server FROM subscriptions ORDER BY id",
        )?;
        let rows = stmt.query_map([], subscription_from_row)?;
        Ok(rows.collect::<rusqlite::Result<_>>()?)
    }

    /// Runs raw SQL; used by tests to probe schema-level guarantees.
    pub fn execute_raw(&self, sql: &str) -> Result<usize> {
        Ok(self.conn().execute(sql, [])?)
    }
}
