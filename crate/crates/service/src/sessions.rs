use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use gamesys_core::design::GameDesign;
use gamesys_core::evolution::{
    balance, generate, Candidate, CandidateSelector, EvolutionConfig, EvolutionError, EvolutionResult,
    Member, Selection,
};
use serde::{Deserialize, Serialize};
use tokio::sync::watch;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionMode {
    Balance,
    Generate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SessionStatus {
    Running,
    AwaitingChoice,
    Finished,
    Aborted,
}

impl SessionStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, SessionStatus::Finished | SessionStatus::Aborted)
    }
}

/// A candidate offered at a checkpoint, with its index for `choice`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PendingCandidate {
    pub index: usize,
    pub topology: String,
    #[serde(flatten)]
    pub candidate: Candidate,
}

/// Poll view of a session.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionState {
    pub id: String,
    pub design_id: String,
    pub mode: SessionMode,
    pub status: SessionStatus,
    /// Last completed generation.
    pub generation: usize,
    /// Non-empty exactly while awaiting a choice.
    pub pending_candidates: Vec<PendingCandidate>,
    /// Present exactly when finished.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<EvolutionResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub config: EvolutionConfig,
    /// Milliseconds since the Unix epoch.
    pub created_at: u64,
    pub updated_at: u64,
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

enum Command {
    Choose(usize),
    Abort,
}

#[derive(Debug, PartialEq, Eq, thiserror::Error)]
pub enum SessionError {
    #[error("session is {0:?}")]
    WrongState(SessionStatus),
    #[error("candidate {index} is out of range ({shown} shown)")]
    IndexOutOfRange { index: usize, shown: usize },
}

struct Inner {
    state: SessionState,
    /// Best-so-far result of an aborted run.
    partial: Option<EvolutionResult>,
}

pub struct Session {
    inner: Mutex<Inner>,
    commands: Mutex<mpsc::Sender<Command>>,
    abort_requested: AtomicBool,
    status: watch::Sender<SessionStatus>,
}

impl Session {
    pub fn snapshot(&self) -> SessionState {
        self.inner.lock().unwrap().state.clone()
    }

    /// The final result when finished, or the best-so-far when aborted.
    pub fn result(&self) -> Result<EvolutionResult, SessionError> {
        let inner = self.inner.lock().unwrap();
        match inner.state.status {
            SessionStatus::Finished => {
                Ok(inner.state.result.clone().expect("finished sessions hold a result"))
            }
            SessionStatus::Aborted if inner.partial.is_some() => Ok(inner.partial.clone().unwrap()),
            other => Err(SessionError::WrongState(other)),
        }
    }

    fn set_status(&self, inner: &mut Inner, status: SessionStatus) {
        inner.state.status = status;
        inner.state.updated_at = now_ms();
        self.status.send_replace(status);
    }

    /// Resumes an awaiting session with candidate `index`. Exactly one of
    /// several concurrent choices can succeed.
    pub fn choose(&self, index: usize) -> Result<SessionState, SessionError> {
        let mut inner = self.inner.lock().unwrap();
        if inner.state.status != SessionStatus::AwaitingChoice {
            return Err(SessionError::WrongState(inner.state.status));
        }
        let shown = inner.state.pending_candidates.len();
        if index >= shown {
            return Err(SessionError::IndexOutOfRange { index, shown });
        }
        inner.state.pending_candidates.clear();
        self.set_status(&mut inner, SessionStatus::Running);
        // The worker may have died; it then finalizes the session itself.
        let _ = self.commands.lock().unwrap().send(Command::Choose(index));
        Ok(inner.state.clone())
    }

    /// Asks the run to stop. The worker finalizes the best-so-far result at
    /// its next checkpoint or generation boundary.
    pub fn request_abort(&self) -> Result<(), SessionError> {
        let inner = self.inner.lock().unwrap();
        if inner.state.status.is_terminal() {
            return Err(SessionError::WrongState(inner.state.status));
        }
        self.abort_requested.store(true, Ordering::SeqCst);
        if inner.state.status == SessionStatus::AwaitingChoice {
            let _ = self.commands.lock().unwrap().send(Command::Abort);
        }
        Ok(())
    }

    /// Waits until the session finishes or aborts.
    pub async fn settled(&self) -> SessionStatus {
        let mut rx = self.status.subscribe();
        let status = *rx.wait_for(|s| s.is_terminal()).await.expect("sender lives with the session");
        status
    }
}

/// Bridges the GA's blocking selector calls to HTTP choices.
struct ChannelSelector {
    session: Arc<Session>,
    commands: mpsc::Receiver<Command>,
}

impl CandidateSelector for ChannelSelector {
    fn choose(&mut self, generation: usize, candidates: &[Candidate]) -> Selection {
        {
            let mut inner = self.session.inner.lock().unwrap();
            if self.session.abort_requested.load(Ordering::SeqCst) {
                return Selection::Abort;
            }
            inner.state.generation = generation;
            inner.state.pending_candidates = candidates
                .iter()
                .enumerate()
                .map(|(index, c)| PendingCandidate {
                    index,
                    topology: c.design.topology_digest(),
                    candidate: c.clone(),
                })
                .collect();
            self.session.set_status(&mut inner, SessionStatus::AwaitingChoice);
        }
        match self.commands.recv() {
            Ok(Command::Choose(i)) => Selection::Chosen(i),
            Ok(Command::Abort) | Err(_) => Selection::Abort,
        }
    }

    fn on_generation(&mut self, generation: usize, _population: &[Member]) {
        let mut inner = self.session.inner.lock().unwrap();
        inner.state.generation = generation;
        inner.state.updated_at = now_ms();
    }

    fn should_abort(&mut self) -> bool {
        self.session.abort_requested.load(Ordering::SeqCst)
    }
}

/// In-memory registry of evolution sessions.
#[derive(Default)]
pub struct SessionRegistry {
    sessions: Mutex<HashMap<String, Arc<Session>>>,
}

impl SessionRegistry {
    pub fn get(&self, id: &str) -> Option<Arc<Session>> {
        self.sessions.lock().unwrap().get(id).cloned()
    }

    /// Launches a run on its own thread and returns its session. The config
    /// must already have passed `EvolutionConfig::check`.
    pub fn start(
        &self,
        design_id: &str,
        design: GameDesign,
        mode: SessionMode,
        config: EvolutionConfig,
    ) -> Arc<Session> {
        let (tx, rx) = mpsc::channel();
        let now = now_ms();
        let id = uuid::Uuid::new_v4().simple().to_string();
        let state = SessionState {
            id: id.clone(),
            design_id: design_id.to_string(),
            mode,
            status: SessionStatus::Running,
            generation: 0,
            pending_candidates: Vec::new(),
            result: None,
            error: None,
            config: config.clone(),
            created_at: now,
            updated_at: now,
        };
        let session = Arc::new(Session {
            inner: Mutex::new(Inner { state, partial: None }),
            commands: Mutex::new(tx),
            abort_requested: AtomicBool::new(false),
            status: watch::Sender::new(SessionStatus::Running),
        });
        self.sessions.lock().unwrap().insert(id, session.clone());

        let mut selector = ChannelSelector { session: session.clone(), commands: rx };
        std::thread::spawn(move || {
            let outcome = match mode {
                SessionMode::Balance => balance(&design, &config, &mut selector),
                SessionMode::Generate => generate(&design, &config, &mut selector),
            };
            let session = selector.session;
            let mut inner = session.inner.lock().unwrap();
            inner.state.pending_candidates.clear();
            match outcome {
                Ok(result) => {
                    inner.state.generation = config.generations;
                    inner.state.result = Some(result);
                    session.set_status(&mut inner, SessionStatus::Finished);
                }
                Err(EvolutionError::SelectorAborted(partial)) => {
                    inner.partial = Some(*partial);
                    session.set_status(&mut inner, SessionStatus::Aborted);
                }
                Err(e) => {
                    inner.state.error = Some(format!("{}: {e}", e.code()));
                    session.set_status(&mut inner, SessionStatus::Aborted);
                }
            }
        });
        session
    }
}
