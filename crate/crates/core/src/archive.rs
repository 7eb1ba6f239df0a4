//! Confidential archive: closed-session aggregates, finalized cases,
//! de-identified explanations and per-user performance series.
//!
//! State is kept in memory and mirrored to an append-only JSON-lines journal
//! that is replayed on open. Each append is flushed and synced before the
//! call returns.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::DecisionLabel;
use crate::error::{Error, Result};
use crate::normalization::Band;
use crate::question::{ConsultEngine, ConsultEvent, ConsultOutput, ConsultSession, SessionState, TranscriptEntry};
use crate::ward::Direction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Physician,
    Nurse,
    Admin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub id: String,
    pub role: Role,
    /// Hex SHA-256 of the user's secret.
    pub credential_hash: String,
}

pub fn hash_credential(secret: &str) -> String {
    hex::encode(Sha256::digest(secret.as_bytes()))
}

impl UserProfile {
    pub fn new(id: &str, role: Role, secret: &str) -> Self {
        UserProfile {
            id: id.to_string(),
            role,
            credential_hash: hash_credential(secret),
        }
    }

    pub fn verify(&self, secret: &str) -> bool {
        self.credential_hash == hash_credential(secret)
    }
}

/// What survives a closed consult session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: String,
    pub patient: String,
    pub model: String,
    pub decision: Option<DecisionLabel>,
    pub questions_asked: u8,
    pub disagreement: bool,
    pub closed_at: DateTime<Utc>,
}

/// A user's prediction or the observed outcome it is scored against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Judgement {
    Decision(DecisionLabel),
    Prognosis(Direction),
}

impl Judgement {
    /// Labels match by equality, prognoses by direction.
    pub fn matches(&self, outcome: &Judgement) -> Result<bool> {
        match (self, outcome) {
            (Judgement::Decision(a), Judgement::Decision(b)) => Ok(a == b),
            (Judgement::Prognosis(a), Judgement::Prognosis(b)) => Ok(a == b),
            _ => Err(Error::Archive("prediction and outcome are of different kinds".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceEntry {
    pub case: String,
    pub prediction: Judgement,
    pub outcome: Judgement,
    pub correct: bool,
    pub at: DateTime<Utc>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PerformanceSeries {
    pub user: String,
    pub entries: Vec<PerformanceEntry>,
}

/// Fraction correct, or `None` for an empty slice.
pub fn accuracy<'a>(entries: impl IntoIterator<Item = &'a PerformanceEntry>) -> Option<f64> {
    let (n, ok) = entries
        .into_iter()
        .fold((0usize, 0usize), |(n, ok), e| (n + 1, ok + usize::from(e.correct)));
    (n > 0).then(|| ok as f64 / n as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Window {
    #[serde(default)]
    pub from: Option<DateTime<Utc>>,
    #[serde(default)]
    pub to: Option<DateTime<Utc>>,
}

impl Window {
    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        self.from.is_none_or(|f| t >= f) && self.to.is_none_or(|e| t <= e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub at: DateTime<Utc>,
    pub annotation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseArchive {
    pub patient: String,
    pub final_record: serde_json::Value,
    pub breakpoints: Vec<Breakpoint>,
    pub finalized_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExplanationContext {
    pub syndrome: String,
    #[serde(default)]
    pub band_pattern: BTreeMap<String, Band>,
}

/// A mismatch explanation stored apart from any patient. The type has no
/// patient, name or case field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeidentifiedExplanation {
    pub id: u64,
    pub text: String,
    pub context: ExplanationContext,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationDraft {
    pub text: String,
    pub context: ExplanationContext,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "access", rename_all = "snake_case")]
pub enum PerformanceReport {
    Full {
        user: String,
        window: Window,
        entries: Vec<PerformanceEntry>,
        accuracy: Option<f64>,
        cohort_mean: Option<f64>,
        /// User accuracy minus cohort mean over the same window.
        peer_delta: Option<f64>,
    },
    /// Returned when the requester is not the target.
    Denied {
        target: String,
        cohort_mean: Option<f64>,
        cohort_size: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArchiveConfig {
    /// Regex matching patient identifiers in free text.
    pub patient_id_pattern: String,
    /// Minutes a closed session's transcript stays recoverable for undo.
    pub retain_transcript_minutes: u64,
}

impl Default for ArchiveConfig {
    fn default() -> Self {
        ArchiveConfig {
            patient_id_pattern: r"\b[A-Z]{1,3}-?\d{3,}\b".into(),
            retain_transcript_minutes: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
enum JournalOp {
    User(UserProfile),
    Session(SessionRecord),
    Outcome { user: String, entry: PerformanceEntry },
    Case(CaseArchive),
    Explanation(DeidentifiedExplanation),
}

#[derive(Debug, Default)]
struct State {
    users: BTreeMap<String, UserProfile>,
    sessions: BTreeMap<String, SessionRecord>,
    performance: BTreeMap<String, Vec<PerformanceEntry>>,
    cases: BTreeMap<String, CaseArchive>,
    explanations: Vec<DeidentifiedExplanation>,
}

impl State {
    fn apply(&mut self, op: JournalOp) {
        match op {
            JournalOp::User(u) => {
                self.users.insert(u.id.clone(), u);
            }
            JournalOp::Session(s) => {
                self.sessions.insert(s.session_id.clone(), s);
            }
            JournalOp::Outcome { user, entry } => self.performance.entry(user).or_default().push(entry),
            JournalOp::Case(c) => {
                self.cases.insert(c.patient.clone(), c);
            }
            JournalOp::Explanation(e) => self.explanations.push(e),
        }
    }
}

struct Held {
    transcript: Vec<TranscriptEntry>,
    until: DateTime<Utc>,
}

pub struct Archive {
    state: State,
    journal: Option<(PathBuf, File)>,
    id_pattern: Regex,
    retain: Duration,
    held: BTreeMap<String, Held>,
}

impl std::fmt::Debug for Archive {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Archive")
            .field("journal", &self.journal.as_ref().map(|(p, _)| p))
            .field("sessions", &self.state.sessions.len())
            .field("cases", &self.state.cases.len())
            .finish()
    }
}

impl Archive {
    /// An archive that is lost when dropped.
    pub fn in_memory(cfg: &ArchiveConfig) -> Result<Self> {
        Self::build(cfg, None, State::default())
    }

    /// Opens or creates the journal at `path` and replays it.
    pub fn open(path: &Path, cfg: &ArchiveConfig) -> Result<Self> {
        let mut state = State::default();
        if path.exists() {
            let reader = BufReader::new(File::open(path)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let op: JournalOp = serde_json::from_str(&line)
                    .map_err(|e| Error::Archive(format!("{}: line {}: {e}", path.display(), i + 1)))?;
                state.apply(op);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Self::build(cfg, Some((path.to_path_buf(), file)), state)
    }

    fn build(cfg: &ArchiveConfig, journal: Option<(PathBuf, File)>, state: State) -> Result<Self> {
        let id_pattern = Regex::new(&cfg.patient_id_pattern)
            .map_err(|e| Error::Config(format!("patient id pattern: {e}")))?;
        Ok(Archive {
            state,
            journal,
            id_pattern,
            retain: Duration::minutes(cfg.retain_transcript_minutes as i64),
            held: BTreeMap::new(),
        })
    }

    fn commit(&mut self, op: JournalOp) -> Result<()> {
        if let Some((_, file)) = &mut self.journal {
            let mut line = serde_json::to_string(&op)?;
            line.push('\n');
            file.write_all(line.as_bytes())?;
            file.sync_data()?;
        }
        self.state.apply(op);
        Ok(())
    }

    pub fn add_user(&mut self, profile: UserProfile) -> Result<()> {
        if self.state.users.contains_key(&profile.id) {
            return Err(Error::Archive(format!("user `{}` already exists", profile.id)));
        }
        self.commit(JournalOp::User(profile))
    }

    pub fn user(&self, id: &str) -> Option<&UserProfile> {
        self.state.users.get(id)
    }

    pub fn authenticate(&self, id: &str, secret: &str) -> Result<&UserProfile> {
        self.state
            .users
            .get(id)
            .filter(|u| u.verify(secret))
            .ok_or(Error::Unauthenticated)
    }

    /// Closes the session through the engine and keeps only the aggregate.
    /// The transcript is dropped unless a retention window is configured.
    pub fn close_session(
        &mut self,
        engine: &ConsultEngine,
        session: &mut ConsultSession,
        at: DateTime<Utc>,
    ) -> Result<SessionRecord> {
        if session.state() == SessionState::Closed || self.state.sessions.contains_key(session.id()) {
            return Err(Error::SessionClosed);
        }
        let transcript = (self.retain > Duration::zero())
            .then(|| session.transcript().map(<[_]>::to_vec))
            .flatten();
        let ConsultOutput::Closed { summary } = engine.step(session, ConsultEvent::Close)? else {
            return Err(Error::Session("close did not produce a summary".into()));
        };
        let record = SessionRecord {
            session_id: summary.session_id,
            patient: summary.patient,
            model: summary.model,
            decision: summary.decision,
            questions_asked: summary.questions_asked,
            disagreement: summary.disagreement,
            closed_at: at,
        };
        self.commit(JournalOp::Session(record.clone()))?;
        if let Some(transcript) = transcript {
            self.held.insert(
                record.session_id.clone(),
                Held {
                    transcript,
                    until: at + self.retain,
                },
            );
        }
        Ok(record)
    }

    pub fn session_count(&self) -> usize {
        self.state.sessions.len()
    }

    pub fn session(&self, id: &str) -> Option<&SessionRecord> {
        self.state.sessions.get(id)
    }

    /// A closed session's transcript, only while its retention window is
    /// open. Never persisted.
    pub fn recover_transcript(&mut self, session_id: &str, now: DateTime<Utc>) -> Result<&[TranscriptEntry]> {
        self.held.retain(|_, h| now <= h.until);
        self.held
            .get(session_id)
            .map(|h| h.transcript.as_slice())
            .ok_or_else(|| Error::NotFound(format!("transcript of session `{session_id}`")))
    }

    fn case_exists(&self, case: &str) -> bool {
        self.state.sessions.contains_key(case) || self.state.cases.contains_key(case)
    }

    pub fn record_outcome(
        &mut self,
        user: &str,
        case: &str,
        prediction: Judgement,
        outcome: Judgement,
        at: DateTime<Utc>,
    ) -> Result<PerformanceEntry> {
        if !self.state.users.contains_key(user) {
            return Err(Error::NotFound(format!("user `{user}`")));
        }
        if !self.case_exists(case) {
            return Err(Error::NotFound(format!("case `{case}`")));
        }
        let entry = PerformanceEntry {
            case: case.to_string(),
            correct: prediction.matches(&outcome)?,
            prediction,
            outcome,
            at,
        };
        self.commit(JournalOp::Outcome {
            user: user.to_string(),
            entry: entry.clone(),
        })?;
        Ok(entry)
    }

    /// Rejects text naming `patient` or matching the patient-id pattern.
    pub fn screen(&self, text: &str, patient: &str) -> Result<()> {
        if (!patient.is_empty() && text.contains(patient)) || self.id_pattern.is_match(text) {
            return Err(Error::Archive("explanation text refers to a patient".into()));
        }
        Ok(())
    }

    /// Stores the case with its breakpoints, and each explanation in the
    /// separate de-identified store. Nothing is written if any explanation
    /// fails screening.
    pub fn finalize_case(
        &mut self,
        patient: &str,
        final_record: serde_json::Value,
        breakpoints: Vec<Breakpoint>,
        explanations: Vec<ExplanationDraft>,
        at: DateTime<Utc>,
    ) -> Result<(CaseArchive, Vec<DeidentifiedExplanation>)> {
        if self.state.cases.contains_key(patient) {
            return Err(Error::Archive(format!("case `{patient}` is already finalized")));
        }
        for d in &explanations {
            self.screen(&d.text, patient)?;
        }
        let case = CaseArchive {
            patient: patient.to_string(),
            final_record,
            breakpoints,
            finalized_at: at,
        };
        self.commit(JournalOp::Case(case.clone()))?;
        let mut stored = Vec::with_capacity(explanations.len());
        for d in explanations {
            let e = DeidentifiedExplanation {
                id: self.state.explanations.len() as u64 + 1,
                text: d.text,
                context: d.context,
            };
            self.commit(JournalOp::Explanation(e.clone()))?;
            stored.push(e);
        }
        Ok((case, stored))
    }

    pub fn case(&self, patient: &str) -> Option<&CaseArchive> {
        self.state.cases.get(patient)
    }

    /// Audit export of a finalized case as TOML.
    pub fn export_case(&self, patient: &str) -> Result<String> {
        let case = self
            .case(patient)
            .ok_or_else(|| Error::NotFound(format!("case `{patient}`")))?;
        toml::to_string_pretty(case).map_err(|e| Error::Archive(e.to_string()))
    }

    pub fn explanations_for_syndrome(&self, syndrome: &str) -> Vec<&DeidentifiedExplanation> {
        self.state
            .explanations
            .iter()
            .filter(|e| e.context.syndrome == syndrome)
            .collect()
    }

    pub fn explanations(&self) -> &[DeidentifiedExplanation] {
        &self.state.explanations
    }

    fn windowed(&self, user: &str, window: &Window) -> Vec<&PerformanceEntry> {
        self.state
            .performance
            .get(user)
            .map(|v| v.iter().filter(|e| window.contains(e.at)).collect())
            .unwrap_or_default()
    }

    /// Mean of per-user accuracies over users with entries in the window.
    pub fn cohort_mean(&self, window: &Window) -> (Option<f64>, usize) {
        let accs: Vec<f64> = self
            .state
            .performance
            .keys()
            .filter_map(|u| accuracy(self.windowed(u, window)))
            .collect();
        let n = accs.len();
        ((n > 0).then(|| accs.iter().sum::<f64>() / n as f64), n)
    }

    /// Full series for the owner; other requesters get cohort aggregates.
    pub fn user_performance(&self, requester: &str, target: &str, window: &Window) -> Result<PerformanceReport> {
        if !self.state.users.contains_key(requester) {
            return Err(Error::Unauthenticated);
        }
        let (cohort_mean, cohort_size) = self.cohort_mean(window);
        if requester != target {
            return Ok(PerformanceReport::Denied {
                target: target.to_string(),
                cohort_mean,
                cohort_size,
            });
        }
        let entries: Vec<PerformanceEntry> = self.windowed(target, window).into_iter().cloned().collect();
        let acc = accuracy(&entries);
        Ok(PerformanceReport::Full {
            user: target.to_string(),
            window: *window,
            peer_delta: acc.zip(cohort_mean).map(|(a, c)| a - c),
            accuracy: acc,
            cohort_mean,
            entries,
        })
    }

    /// Keys a stored explanation could be joined on; used by audits.
    pub fn explanation_keys() -> BTreeSet<&'static str> {
        ["id", "text", "context"].into_iter().collect()
    }
}
