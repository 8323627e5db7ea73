//! Session records, the session store and the clock that drives expiry.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use dataprep_core::pipeline::{CleaningPlan, PlanOptions};
use dataprep_core::tabular::{Dataset, ParseOptions, TypeInferenceReport};

use crate::error::ApiError;

pub trait Clock: Send + Sync {
    fn now(&self) -> Instant;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Instant {
        Instant::now()
    }
}

/// Clock that only moves when told to.
#[derive(Clone)]
pub struct ManualClock(Arc<Mutex<Instant>>);

impl ManualClock {
    pub fn new() -> Self {
        ManualClock(Arc::new(Mutex::new(Instant::now())))
    }

    pub fn advance(&self, by: Duration) {
        *self.0.lock().unwrap() += by;
    }
}

impl Default for ManualClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Instant {
        *self.0.lock().unwrap()
    }
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub max_upload_bytes: usize,
    pub idle_timeout: Duration,
    pub undo_depth: usize,
    pub parse_options: ParseOptions,
    /// Seed and target may be overridden per upload.
    pub plan_options: PlanOptions,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            max_upload_bytes: 100 * 1024 * 1024,
            idle_timeout: Duration::from_secs(3600),
            undo_depth: 50,
            parse_options: ParseOptions::default(),
            plan_options: PlanOptions::default(),
        }
    }
}

/// Output of the last finalize, valid while the session version is unchanged.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub version: u64,
    pub csv: Arc<Vec<u8>>,
    pub report: Arc<String>,
}

#[derive(Debug)]
pub struct Session {
    pub id: String,
    pub upload: Arc<Vec<u8>>,
    /// The upload as parsed; plans are checked and executed against it.
    pub input: Dataset,
    pub inference: TypeInferenceReport,
    /// What the user currently sees: the input minus rows removed by hand.
    pub dataset: Dataset,
    pub plan: CleaningPlan,
    pub version: u64,
    undo: VecDeque<(Dataset, CleaningPlan)>,
    undo_depth: usize,
    pub created: Instant,
    last_used: Instant,
    pub artifacts: Option<Artifacts>,
}

impl Session {
    pub fn new(
        id: String,
        upload: Arc<Vec<u8>>,
        input: Dataset,
        inference: TypeInferenceReport,
        plan: CleaningPlan,
        undo_depth: usize,
        now: Instant,
    ) -> Self {
        Session {
            id,
            upload,
            dataset: input.clone(),
            input,
            inference,
            plan,
            version: 1,
            undo: VecDeque::new(),
            undo_depth,
            created: now,
            last_used: now,
            artifacts: None,
        }
    }

    pub fn check_version(&self, given: u64) -> Result<(), ApiError> {
        if given != self.version {
            return Err(ApiError::StaleVersion {
                current: self.version,
                given,
            });
        }
        Ok(())
    }

    /// Replaces snapshot and plan, keeping the previous pair for undo.
    pub fn commit(&mut self, dataset: Dataset, plan: CleaningPlan) {
        let prev_dataset = std::mem::replace(&mut self.dataset, dataset);
        let prev_plan = std::mem::replace(&mut self.plan, plan);
        self.undo.push_back((prev_dataset, prev_plan));
        while self.undo.len() > self.undo_depth {
            self.undo.pop_front();
        }
        self.version += 1;
        self.artifacts = None;
    }

    pub fn undo(&mut self) -> Result<(), ApiError> {
        let (dataset, plan) = self.undo.pop_back().ok_or(ApiError::NothingToUndo)?;
        self.dataset = dataset;
        self.plan = plan;
        self.version += 1;
        self.artifacts = None;
        Ok(())
    }

    pub fn undo_len(&self) -> usize {
        self.undo.len()
    }
}

pub type SessionHandle = Arc<Mutex<Session>>;

/// Live sessions plus the ids of expired ones, so late callers learn the
/// session expired rather than that it never existed.
pub struct SessionStore {
    clock: Arc<dyn Clock>,
    idle_timeout: Duration,
    live: Mutex<HashMap<String, SessionHandle>>,
    expired: Mutex<HashSet<String>>,
}

impl SessionStore {
    pub fn new(clock: Arc<dyn Clock>, idle_timeout: Duration) -> Self {
        SessionStore {
            clock,
            idle_timeout,
            live: Mutex::new(HashMap::new()),
            expired: Mutex::new(HashSet::new()),
        }
    }

    pub fn now(&self) -> Instant {
        self.clock.now()
    }

    pub fn insert(&self, session: Session) -> SessionHandle {
        let id = session.id.clone();
        let handle = Arc::new(Mutex::new(session));
        self.live.lock().unwrap().insert(id, handle.clone());
        handle
    }

    /// Looks a session up and refreshes its idle timer.
    pub fn get(&self, id: &str) -> Result<SessionHandle, ApiError> {
        let now = self.clock.now();
        let mut live = self.live.lock().unwrap();
        let Some(handle) = live.get(id).cloned() else {
            return Err(if self.expired.lock().unwrap().contains(id) {
                ApiError::SessionExpired(id.to_string())
            } else {
                ApiError::UnknownSession(id.to_string())
            });
        };
        let mut s = handle.lock().unwrap();
        if now.saturating_duration_since(s.last_used) > self.idle_timeout {
            drop(s);
            live.remove(id);
            self.expired.lock().unwrap().insert(id.to_string());
            return Err(ApiError::SessionExpired(id.to_string()));
        }
        s.last_used = now;
        drop(s);
        Ok(handle)
    }

    pub fn remove(&self, id: &str) -> bool {
        self.live.lock().unwrap().remove(id).is_some()
    }

    /// Drops every idle session; returns how many were dropped.
    pub fn sweep(&self) -> usize {
        let now = self.clock.now();
        let mut live = self.live.lock().unwrap();
        let stale: Vec<String> = live
            .iter()
            .filter(|(_, h)| now.saturating_duration_since(h.lock().unwrap().last_used) > self.idle_timeout)
            .map(|(id, _)| id.clone())
            .collect();
        let mut expired = self.expired.lock().unwrap();
        for id in &stale {
            live.remove(id);
            expired.insert(id.clone());
        }
        stale.len()
    }

    pub fn len(&self) -> usize {
        self.live.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
