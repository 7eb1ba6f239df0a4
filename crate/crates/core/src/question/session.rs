//! The consult dialogue: the user enters a decision, the engine stays silent
//! when it agrees and otherwise asks up to two clarifying questions.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::attribution::{AttributionVector, Attributor};
use super::sampler::{completions, SamplerConfig};
use super::select::{
    detect_alternative, impute_with_typical, select_question, Alternative, QuestionSpec,
    QuestionTemplates, SelectionInput,
};
use crate::classifier::Classifier;
use crate::dataset::{DecisionLabel, Marginals};
use crate::error::{Error, Result};
use crate::schema::{FeatureVector, ParameterSchema, PartialObservation, Value};

/// Questions a single session may ever emit.
pub const QUESTION_BUDGET: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    AwaitingDecision,
    Agreement,
    QuestionPending,
    Exhausted,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ConsultEvent {
    DecisionEntered { decision: DecisionLabel },
    AnswerProvided { parameter: String, value: Value },
    Close,
}

/// What the user sees after a step. The engine never states its own
/// conclusion; it only shows conflicting evidence and asks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "output", rename_all = "snake_case")]
pub enum ConsultOutput {
    Silent,
    Question {
        mismatching: Vec<String>,
        question: QuestionSpec,
    },
    FinalNote {
        note: String,
    },
    Closed {
        summary: SessionSummary,
    },
}

/// The aggregate kept once a session is closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub patient: String,
    pub model: String,
    pub decision: Option<DecisionLabel>,
    pub questions_asked: u8,
    /// Set when the budget ran out with the user unmoved.
    pub disagreement: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub step: u64,
    pub event: ConsultEvent,
    pub output: ConsultOutput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsultSession {
    id: String,
    patient: String,
    model: String,
    seed: u64,
    known: PartialObservation,
    alpha_holmes: Option<DecisionLabel>,
    alpha_watson: Option<DecisionLabel>,
    questions_asked: u8,
    asked: Vec<String>,
    pending: Option<QuestionSpec>,
    disagreement: bool,
    steps: u64,
    transcript: Option<Vec<TranscriptEntry>>,
    state: SessionState,
}

impl ConsultSession {
    pub fn new(id: &str, patient: &str, model: &str, known: PartialObservation, seed: u64) -> Self {
        Self {
            id: id.to_string(),
            patient: patient.to_string(),
            model: model.to_string(),
            seed,
            known,
            alpha_holmes: None,
            alpha_watson: None,
            questions_asked: 0,
            asked: Vec::new(),
            pending: None,
            disagreement: false,
            steps: 0,
            transcript: Some(Vec::new()),
            state: SessionState::AwaitingDecision,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn patient(&self) -> &str {
        &self.patient
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn known(&self) -> &PartialObservation {
        &self.known
    }

    pub fn alpha_holmes(&self) -> Option<&DecisionLabel> {
        self.alpha_holmes.as_ref()
    }

    pub fn alpha_watson(&self) -> Option<&DecisionLabel> {
        self.alpha_watson.as_ref()
    }

    pub fn questions_asked(&self) -> u8 {
        self.questions_asked
    }

    pub fn pending(&self) -> Option<&QuestionSpec> {
        self.pending.as_ref()
    }

    /// `None` once the session is closed.
    pub fn transcript(&self) -> Option<&[TranscriptEntry]> {
        self.transcript.as_deref()
    }

    pub fn summary(&self) -> SessionSummary {
        SessionSummary {
            session_id: self.id.clone(),
            patient: self.patient.clone(),
            model: self.model.clone(),
            decision: self.alpha_holmes.clone(),
            questions_asked: self.questions_asked,
            disagreement: self.disagreement,
        }
    }
}

/// Intermediate results of one pass of the question pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub alternative: Option<Alternative>,
    pub imputed: FeatureVector,
    pub imputed_prediction: DecisionLabel,
    pub attr_user: AttributionVector,
    pub attr_watson: Option<AttributionVector>,
    /// The alternative the engine keeps in mind, if any.
    pub alpha_watson: Option<DecisionLabel>,
    pub question: Option<QuestionSpec>,
}

/// Shared, immutable inputs for stepping any number of sessions.
#[derive(Clone)]
pub struct ConsultEngine {
    pub schema: Arc<ParameterSchema>,
    pub model: Arc<dyn Classifier>,
    pub marginals: Arc<Marginals>,
    pub representatives: Arc<BTreeMap<DecisionLabel, FeatureVector>>,
    pub attributor: Arc<dyn Attributor>,
    pub sampler: SamplerConfig,
    pub templates: QuestionTemplates,
}

impl ConsultEngine {
    fn label_index(&self, label: &DecisionLabel) -> Result<usize> {
        self.model
            .labels()
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Runs detection, imputation, attribution and selection for a known
    /// subset and the user's decision. `seed` fixes all randomness.
    pub fn analyze(
        &self,
        known: &PartialObservation,
        holmes: &DecisionLabel,
        asked: &[String],
        seed: u64,
    ) -> Result<Analysis> {
        let holmes_idx = self.label_index(holmes)?;
        let cfg = self.sampler.with_seed(seed);
        let partial = known.to_vector(&self.schema)?;
        let pool = completions(&partial, &self.marginals, &cfg);
        let alternative = detect_alternative(self.model.as_ref(), holmes_idx, &pool)?;

        let typical = self
            .representatives
            .get(holmes)
            .ok_or_else(|| Error::UnknownLabel(format!("no typical representative for `{holmes}`")))?;
        let imputed = impute_with_typical(&partial, typical);
        let imputed_prediction = self.model.predict(&imputed)?;
        let attr_user =
            self.attributor
                .attribute(self.model.as_ref(), &imputed, holmes_idx, &self.marginals, &cfg)?;

        let (alpha_watson, attr_watson) = if imputed_prediction.label_index != holmes_idx {
            let a = self.attributor.attribute(
                self.model.as_ref(),
                &imputed,
                imputed_prediction.label_index,
                &self.marginals,
                &cfg,
            )?;
            (Some(imputed_prediction.label.clone()), Some(a))
        } else if let Some(alt) = &alternative {
            let a = self.attributor.attribute(
                self.model.as_ref(),
                &alt.exemplar,
                alt.label_index,
                &self.marginals,
                &cfg,
            )?;
            (Some(alt.label.clone()), Some(a))
        } else {
            (None, None)
        };

        let question = select_question(
            &SelectionInput {
                schema: &self.schema,
                partial: &partial,
                holmes,
                holmes_typical: typical,
                imputed: &imputed,
                imputed_prediction: &imputed_prediction.label,
                attr_user: &attr_user,
                attr_watson: attr_watson.as_ref(),
                asked,
            },
            &self.templates,
        );
        Ok(Analysis {
            alternative,
            imputed,
            imputed_prediction: imputed_prediction.label,
            attr_user,
            attr_watson,
            alpha_watson,
            question,
        })
    }

    /// Advances `session` by one event. On error the session is unchanged.
    pub fn step(&self, session: &mut ConsultSession, event: ConsultEvent) -> Result<ConsultOutput> {
        if session.state == SessionState::Closed {
            return Err(Error::SessionClosed);
        }
        let output = match &event {
            ConsultEvent::DecisionEntered { decision } => {
                self.label_index(decision)?;
                let known = session.known.clone();
                self.respond(session, known, decision.clone())?
            }
            ConsultEvent::AnswerProvided { parameter, value } => {
                let asked = session
                    .pending
                    .as_ref()
                    .filter(|_| session.state == SessionState::QuestionPending)
                    .is_some_and(|q| &q.parameter == parameter);
                if !asked {
                    return Err(Error::AnswerNotAsked(parameter.clone()));
                }
                let mut known = session.known.clone();
                known.insert(&self.schema, parameter, value.clone())?;
                let holmes = session.alpha_holmes.clone().expect("question implies a decision");
                self.respond(session, known, holmes)?
            }
            ConsultEvent::Close => {
                let summary = session.summary();
                session.transcript = None;
                session.known = PartialObservation::new();
                session.alpha_watson = None;
                session.pending = None;
                session.state = SessionState::Closed;
                session.steps += 1;
                return Ok(ConsultOutput::Closed { summary });
            }
        };
        if let Some(t) = session.transcript.as_mut() {
            t.push(TranscriptEntry {
                step: session.steps,
                event,
                output: output.clone(),
            });
        }
        session.steps += 1;
        Ok(output)
    }

    fn respond(
        &self,
        session: &mut ConsultSession,
        known: PartialObservation,
        holmes: DecisionLabel,
    ) -> Result<ConsultOutput> {
        let analysis = self.analyze(&known, &holmes, &session.asked, session.seed.wrapping_add(session.steps))?;
        session.known = known;
        session.alpha_holmes = Some(holmes);
        session.alpha_watson = analysis.alpha_watson;
        session.pending = None;
        let Some(question) = analysis.question else {
            session.state = SessionState::Agreement;
            session.disagreement = false;
            return Ok(ConsultOutput::Silent);
        };
        if session.questions_asked < QUESTION_BUDGET {
            session.questions_asked += 1;
            session.asked.push(question.parameter.clone());
            session.pending = Some(question.clone());
            session.state = SessionState::QuestionPending;
            Ok(ConsultOutput::Question {
                mismatching: question.mismatching.clone(),
                question,
            })
        } else {
            session.state = SessionState::Exhausted;
            session.disagreement = true;
            Ok(ConsultOutput::FinalNote {
                note: "Decision kept after two clarifying questions; the disagreement is recorded for retrospective review."
                    .into(),
            })
        }
    }
}
