//! Service state and operations, independent of the transport. The HTTP
//! handlers and the CLI both call into [`App`].

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use watson_core::archive::{
    hash_credential, Archive, Breakpoint, CaseArchive, DeidentifiedExplanation, ExplanationDraft, Judgement,
    PerformanceEntry, PerformanceReport, SessionRecord, UserProfile, Window,
};
use watson_core::attention::{
    assign_groups, detect_unusual_pairs, rank_attention, select_display, AttentionConfig, AttentionRank,
    DisplaySet, GroupContext, Magnitude, ParameterSeries, SeriesStats, UnusualPair, ViewRecord,
};
use watson_core::errprev::{
    flag_record, generate_summary, mine_antisyndromes, recognition_rule, record_items, FollowUpSummary, ItemTable,
    MinerConfig, MiningResult, RawRecord, RecognitionRule, RegistryRecord, RegistrySchema, RuleSet, SummaryLayout,
};
use watson_core::observation::{validate_entry, EntryCheck, ObservationPlan, PlanEntry};
use watson_core::question::{
    attribution_registry, ConsultEngine, ConsultEvent, ConsultOutput, ConsultSession, SessionState, TranscriptEntry,
};
use watson_core::representative::{representative_registry, representatives_for_all, Expert};
use watson_core::ward::{
    rank_ward, severity, ward_indices, Intervention, LeaderEntry, PatientState, PrognosisRecord, Snapshot,
    TreatmentRecord, WardIndices,
};
use watson_core::{
    load_dataset, DecisionLabel, DecisionTreeModel, Error, LabeledDataset, Marginals, ParameterSchema,
    PartialObservation, Result, TreeConfig, Value,
};

use crate::config::{Loaded, ServiceConfig};

/// Wire-contract version carried by every response.
pub const SCHEMA_VERSION: &str = "1.0";

pub struct ModelEntry {
    pub id: String,
    pub dataset: String,
    pub tree: Arc<DecisionTreeModel>,
    pub engine: ConsultEngine,
    pub representative: String,
    pub attribution: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelInfo {
    pub id: String,
    pub dataset: String,
    pub labels: Vec<DecisionLabel>,
    pub depth: usize,
    pub leaves: usize,
    pub representative: String,
    pub attribution: String,
    pub config: TreeConfig,
    pub representatives: BTreeMap<DecisionLabel, BTreeMap<String, Value>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub id: String,
    pub rows: usize,
    pub labels: Vec<DecisionLabel>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TrainRequest {
    pub dataset: String,
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub tree: Option<TreeConfig>,
    #[serde(default)]
    pub representative: Option<String>,
    #[serde(default)]
    pub attribution: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StartConsult {
    pub patient: String,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub observations: BTreeMap<String, Value>,
    pub decision: DecisionLabel,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsultReply {
    pub session: String,
    pub state: SessionState,
    pub questions_asked: u8,
    pub output: ConsultOutput,
}

/// Live view of a session, without its transcript.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SessionView {
    Open {
        session: String,
        patient: String,
        state: SessionState,
        decision: Option<DecisionLabel>,
        questions_asked: u8,
        pending: Option<String>,
    },
    Closed(SessionRecord),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PatientContext {
    #[serde(default)]
    pub affected_organs: BTreeSet<String>,
    #[serde(default)]
    pub baseline: BTreeMap<String, Value>,
    #[serde(default)]
    pub current_context: Option<String>,
    /// Active treatment-contradiction flags.
    #[serde(default)]
    pub coordination_flags: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObservationInput {
    pub parameter: String,
    pub value: Value,
    pub at: DateTime<Utc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrognosisInput {
    pub author: String,
    pub made_at: DateTime<Utc>,
    pub horizon: DateTime<Utc>,
    pub predicted: watson_core::ward::Direction,
    #[serde(default)]
    pub leading_syndrome: Option<String>,
    #[serde(default)]
    pub explanation: Option<String>,
}

#[derive(Debug, Default)]
struct Patient {
    plan: Option<ObservationPlan>,
    series: BTreeMap<String, Vec<(DateTime<Utc>, Value)>>,
    prognoses: Vec<PrognosisRecord>,
    treatment: Vec<Intervention>,
    context: PatientContext,
    views: Vec<ViewRecord>,
    discharged: Option<DateTime<Utc>>,
}

impl Patient {
    fn latest(&self) -> Option<DateTime<Utc>> {
        self.series.values().filter_map(|s| s.last().map(|p| p.0)).max()
    }

    /// Latest value of each parameter at or before `t`.
    fn snapshot(&self, schema: &ParameterSchema, t: DateTime<Utc>) -> Result<Snapshot> {
        let mut values = PartialObservation::new();
        for (id, s) in &self.series {
            if let Some((_, v)) = s.iter().rev().find(|(at, _)| *at <= t) {
                values.insert(schema, id, v.clone())?;
            }
        }
        Ok(Snapshot { at: t, values })
    }

    fn series_until(&self, t: DateTime<Utc>) -> Result<Vec<ParameterSeries>> {
        self.series
            .iter()
            .map(|(id, s)| ParameterSeries::new(id, s.iter().filter(|(at, _)| *at <= t).cloned().collect()))
            .filter(|s| s.as_ref().map_or(true, |s| !s.samples.is_empty()))
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttentionReport {
    pub patient: String,
    pub at: DateTime<Utc>,
    /// Change in severity per hour over the attention window, or since the
    /// first observation when that is later.
    pub severity_trend: f64,
    pub ranks: Vec<AttentionRank>,
    pub display: DisplaySet,
    pub unusual_pairs: Vec<UnusualPair>,
    pub stats: Vec<SeriesStats>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Leaderboard {
    pub at: DateTime<Utc>,
    pub interval_hours: f64,
    pub entries: Vec<LeaderEntry>,
    pub indices: Vec<WardIndices>,
    /// Patients without observations at both ends of the interval.
    pub unscored: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MineRequest {
    pub class: String,
    /// Delimited text with a header row; when absent the stored registry
    /// records that carry a class label are mined.
    #[serde(default)]
    pub csv: Option<String>,
    #[serde(default)]
    pub label_column: Option<String>,
    #[serde(default)]
    pub config: Option<MinerConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutcomeInput {
    pub case: String,
    pub prediction: Judgement,
    pub outcome: Judgement,
    #[serde(default)]
    pub at: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FinalizeInput {
    #[serde(default)]
    pub final_record: serde_json::Value,
    #[serde(default)]
    pub breakpoints: Vec<Breakpoint>,
    #[serde(default)]
    pub explanations: Vec<ExplanationDraft>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Finalized {
    pub case: CaseArchive,
    /// Ids of the explanations placed in the de-identified store.
    pub explanations: Vec<u64>,
}

struct Registry {
    schema: RegistrySchema,
    rules: RuleSet,
    layout: SummaryLayout,
}

struct LiveSession {
    model: String,
    session: Mutex<ConsultSession>,
}

pub struct App {
    schema: Arc<ParameterSchema>,
    config: ServiceConfig,
    registry: Option<Registry>,
    datasets: RwLock<BTreeMap<String, Arc<LabeledDataset>>>,
    models: RwLock<BTreeMap<String, Arc<ModelEntry>>>,
    sessions: Mutex<BTreeMap<String, Arc<LiveSession>>>,
    archive: RwLock<Archive>,
    patients: RwLock<BTreeMap<String, Patient>>,
    admission: RwLock<Vec<String>>,
    records: RwLock<BTreeMap<String, RegistryRecord>>,
    recognition: RwLock<BTreeMap<String, RecognitionRule>>,
    tokens: BTreeMap<String, String>,
    counter: AtomicU64,
    session_counter: AtomicU64,
}

fn read<T>(lock: &RwLock<T>) -> std::sync::RwLockReadGuard<'_, T> {
    lock.read().unwrap_or_else(|e| e.into_inner())
}

fn write<T>(lock: &RwLock<T>) -> std::sync::RwLockWriteGuard<'_, T> {
    lock.write().unwrap_or_else(|e| e.into_inner())
}

fn lock<T>(m: &Mutex<T>) -> std::sync::MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

fn vector_map(schema: &ParameterSchema, v: &watson_core::FeatureVector) -> BTreeMap<String, Value> {
    schema
        .ids()
        .zip(v.slots())
        .filter_map(|(id, s)| s.clone().map(|s| (id.to_string(), s)))
        .collect()
}

impl App {
    pub fn new(loaded: Loaded) -> Result<Self> {
        let Loaded {
            config,
            schema,
            registry,
            dataset_text,
        } = loaded;
        let mut archive = match &config.store {
            Some(path) => {
                if let Some(dir) = path.parent() {
                    std::fs::create_dir_all(dir)?;
                }
                Archive::open(path, &config.archive)?
            }
            None => Archive::in_memory(&config.archive)?,
        };
        let mut tokens = BTreeMap::new();
        for u in &config.users {
            if archive.user(&u.id).is_none() {
                archive.add_user(UserProfile {
                    id: u.id.clone(),
                    role: u.role,
                    credential_hash: u.token_sha256.to_lowercase(),
                })?;
            }
            tokens.insert(u.token_sha256.to_lowercase(), u.id.clone());
        }
        let archived = archive.session_count() as u64;
        let app = App {
            schema: Arc::new(schema),
            registry: registry.map(|(schema, rules, layout)| Registry { schema, rules, layout }),
            datasets: RwLock::default(),
            models: RwLock::default(),
            sessions: Mutex::default(),
            archive: RwLock::new(archive),
            patients: RwLock::default(),
            admission: RwLock::default(),
            records: RwLock::default(),
            recognition: RwLock::default(),
            tokens,
            counter: AtomicU64::new(0),
            session_counter: AtomicU64::new(archived),
            config,
        };
        if let Some(text) = dataset_text {
            app.ingest_dataset(Some("default".into()), &text, b',')?;
            app.train(&TrainRequest {
                dataset: "default".into(),
                id: Some("default".into()),
                ..TrainRequest::default()
            })?;
        }
        Ok(app)
    }

    pub fn schema(&self) -> &Arc<ParameterSchema> {
        &self.schema
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    fn next_id(&self, prefix: &str) -> String {
        format!("{prefix}-{}", self.counter.fetch_add(1, Ordering::SeqCst) + 1)
    }

    /// Session ids continue after those already archived.
    fn next_session_id(&self) -> String {
        let archive = self.archive.read().expect("archive lock");
        loop {
            let id = format!("s-{}", self.session_counter.fetch_add(1, Ordering::SeqCst) + 1);
            if archive.session(&id).is_none() {
                return id;
            }
        }
    }

    /// Maps a bearer token to its user.
    pub fn authenticate(&self, token: &str) -> Result<String> {
        self.tokens
            .get(&hash_credential(token))
            .cloned()
            .ok_or(Error::Unauthenticated)
    }

    pub fn ingest_dataset(&self, id: Option<String>, text: &str, delimiter: u8) -> Result<DatasetInfo> {
        let ds = load_dataset(text.as_bytes(), self.schema.clone(), delimiter)?;
        let id = id.unwrap_or_else(|| self.next_id("ds"));
        let info = DatasetInfo {
            id: id.clone(),
            rows: ds.len(),
            labels: ds.labels().to_vec(),
        };
        write(&self.datasets).insert(id, Arc::new(ds));
        Ok(info)
    }

    pub fn train(&self, req: &TrainRequest) -> Result<ModelInfo> {
        let ds = read(&self.datasets)
            .get(&req.dataset)
            .cloned()
            .ok_or_else(|| Error::NotFound(format!("dataset `{}`", req.dataset)))?;
        let m = &self.config.model;
        let tree_cfg = req.tree.clone().unwrap_or_else(|| m.tree.clone());
        let rep_name = req.representative.clone().unwrap_or_else(|| m.representative.clone());
        let attr_name = req.attribution.clone().unwrap_or_else(|| m.attribution.clone());
        let expert = (!m.expert.is_empty())
            .then(|| Expert::from_config(&self.schema, &m.expert))
            .transpose()?;
        let builder = representative_registry(expert).get(&rep_name)?;
        let attributor = attribution_registry().get(&attr_name)?;
        let tree = Arc::new(watson_core::train_tree(&ds, &tree_cfg)?);
        let reps = representatives_for_all(&ds, builder.as_ref())?;
        let engine = ConsultEngine {
            schema: self.schema.clone(),
            model: tree.clone(),
            marginals: Arc::new(Marginals::from_dataset(&ds)),
            representatives: Arc::new(reps.into_iter().map(|(l, r)| (l, r.vector)).collect()),
            attributor,
            sampler: self.config.sampler.clone(),
            templates: self.config.templates.clone(),
        };
        let id = req.id.clone().unwrap_or_else(|| self.next_id("model"));
        let entry = Arc::new(ModelEntry {
            id: id.clone(),
            dataset: req.dataset.clone(),
            tree,
            engine,
            representative: rep_name,
            attribution: attr_name,
        });
        let info = self.describe(&entry);
        write(&self.models).insert(id, entry);
        Ok(info)
    }

    fn describe(&self, m: &ModelEntry) -> ModelInfo {
        use watson_core::Classifier;
        ModelInfo {
            id: m.id.clone(),
            dataset: m.dataset.clone(),
            labels: m.tree.labels().to_vec(),
            depth: m.tree.depth(),
            leaves: m.tree.leaves().count(),
            representative: m.representative.clone(),
            attribution: m.attribution.clone(),
            config: m.tree.config().clone(),
            representatives: m
                .engine
                .representatives
                .iter()
                .map(|(l, v)| (l.clone(), vector_map(&self.schema, v)))
                .collect(),
        }
    }

    pub fn model(&self, id: &str) -> Result<Arc<ModelEntry>> {
        read(&self.models)
            .get(id)
            .cloned()
            .ok_or_else(|| Error::NotFound(format!("model `{id}`")))
    }

    pub fn model_info(&self, id: &str) -> Result<ModelInfo> {
        let m = self.model(id)?;
        Ok(self.describe(&m))
    }

    pub fn start_consult(&self, req: StartConsult) -> Result<ConsultReply> {
        let model_id = req.model.unwrap_or_else(|| "default".into());
        let model = self.model(&model_id)?;
        let known = PartialObservation::from_map(&self.schema, req.observations)?;
        let seed = req.seed.unwrap_or(self.config.sampler.seed);
        let id = self.next_session_id();
        let mut session = ConsultSession::new(&id, &req.patient, &model_id, known, seed);
        let output = model.engine.step(
            &mut session,
            ConsultEvent::DecisionEntered {
                decision: req.decision,
            },
        )?;
        let reply = ConsultReply {
            session: id.clone(),
            state: session.state(),
            questions_asked: session.questions_asked(),
            output,
        };
        lock(&self.sessions).insert(
            id,
            Arc::new(LiveSession {
                model: model_id,
                session: Mutex::new(session),
            }),
        );
        Ok(reply)
    }

    fn live(&self, id: &str) -> Result<Arc<LiveSession>> {
        if let Some(s) = lock(&self.sessions).get(id) {
            return Ok(s.clone());
        }
        if read(&self.archive).session(id).is_some() {
            return Err(Error::SessionClosed);
        }
        Err(Error::NotFound(format!("session `{id}`")))
    }

    /// Answers the pending question. Steps on one session are serialized.
    pub fn answer(&self, id: &str, parameter: String, value: Value) -> Result<ConsultReply> {
        let live = self.live(id)?;
        let model = self.model(&live.model)?;
        let mut session = lock(&live.session);
        let output = model
            .engine
            .step(&mut session, ConsultEvent::AnswerProvided { parameter, value })?;
        Ok(ConsultReply {
            session: id.to_string(),
            state: session.state(),
            questions_asked: session.questions_asked(),
            output,
        })
    }

    /// Re-enters a decision in an open session.
    pub fn decide(&self, id: &str, decision: DecisionLabel) -> Result<ConsultReply> {
        let live = self.live(id)?;
        let model = self.model(&live.model)?;
        let mut session = lock(&live.session);
        let output = model
            .engine
            .step(&mut session, ConsultEvent::DecisionEntered { decision })?;
        Ok(ConsultReply {
            session: id.to_string(),
            state: session.state(),
            questions_asked: session.questions_asked(),
            output,
        })
    }

    pub fn session_view(&self, id: &str) -> Result<SessionView> {
        match self.live(id) {
            Ok(live) => {
                let s = lock(&live.session);
                Ok(SessionView::Open {
                    session: id.to_string(),
                    patient: s.patient().to_string(),
                    state: s.state(),
                    decision: s.alpha_holmes().cloned(),
                    questions_asked: s.questions_asked(),
                    pending: s.pending().map(|q| q.parameter.clone()),
                })
            }
            Err(Error::SessionClosed) => Ok(SessionView::Closed(
                read(&self.archive).session(id).cloned().expect("closed session is archived"),
            )),
            Err(e) => Err(e),
        }
    }

    /// The dialogue so far. After close only a configured retention window
    /// can return it.
    pub fn transcript(&self, id: &str) -> Result<Vec<TranscriptEntry>> {
        match self.live(id) {
            Ok(live) => Ok(lock(&live.session).transcript().map(<[_]>::to_vec).unwrap_or_default()),
            Err(Error::SessionClosed) => Ok(write(&self.archive).recover_transcript(id, Utc::now())?.to_vec()),
            Err(e) => Err(e),
        }
    }

    pub fn close(&self, id: &str) -> Result<SessionRecord> {
        let live = self.live(id)?;
        let model = self.model(&live.model)?;
        let record = {
            let mut session = lock(&live.session);
            write(&self.archive).close_session(&model.engine, &mut session, Utc::now())?
        };
        lock(&self.sessions).remove(id);
        Ok(record)
    }

    fn with_patient<T>(&self, id: &str, f: impl FnOnce(&mut Patient) -> Result<T>) -> Result<T> {
        let mut patients = write(&self.patients);
        if !patients.contains_key(id) {
            write(&self.admission).push(id.to_string());
        }
        f(patients.entry(id.to_string()).or_default())
    }

    pub fn set_plan(&self, patient: &str, entries: Vec<PlanEntry>) -> Result<ObservationPlan> {
        let plan = ObservationPlan::new(patient, entries, &self.schema)?;
        self.with_patient(patient, |p| {
            p.plan = Some(plan.clone());
            Ok(plan)
        })
    }

    pub fn add_observation(&self, patient: &str, obs: ObservationInput) -> Result<EntryCheck> {
        let schema = self.schema.clone();
        self.with_patient(patient, |p| {
            let plan = p
                .plan
                .as_ref()
                .ok_or_else(|| Error::Invalid(format!("patient `{patient}` has no observation plan")))?;
            let series = p.series.get(&obs.parameter);
            let previous = series.and_then(|s| s.last()).map(|x| x.0);
            if previous.is_some_and(|prev| obs.at <= prev) {
                return Err(Error::Invalid(format!(
                    "`{}` at {} is not after the previous entry",
                    obs.parameter, obs.at
                )));
            }
            let check = validate_entry(plan, &schema, &obs.parameter, &obs.value, obs.at, previous)?;
            p.series.entry(obs.parameter).or_default().push((obs.at, obs.value));
            Ok(check)
        })
    }

    pub fn add_prognosis(&self, patient: &str, input: PrognosisInput) -> Result<PrognosisRecord> {
        let mut rec = PrognosisRecord::new(&input.author, input.made_at, input.horizon, input.predicted)?;
        rec.leading_syndrome = input.leading_syndrome;
        rec.explanation = input.explanation;
        self.with_patient(patient, |p| {
            p.prognoses.push(rec.clone());
            Ok(rec)
        })
    }

    pub fn set_treatment(&self, patient: &str, interventions: Vec<Intervention>) -> Result<TreatmentRecord> {
        for i in &interventions {
            if !self.config.ward.interventions.contains_key(&i.id) {
                return Err(Error::UnknownIntervention(i.id.clone()));
            }
        }
        self.with_patient(patient, |p| {
            p.treatment = interventions;
            Ok(TreatmentRecord {
                patient: patient.to_string(),
                interventions: p.treatment.clone(),
            })
        })
    }

    pub fn set_context(&self, patient: &str, ctx: PatientContext) -> Result<PatientContext> {
        for id in ctx.baseline.keys() {
            self.schema.spec(id)?;
        }
        self.with_patient(patient, |p| {
            p.context = ctx.clone();
            Ok(ctx)
        })
    }

    pub fn add_view(&self, patient: &str, view: ViewRecord) -> Result<usize> {
        for id in &view.parameters {
            self.schema.spec(id)?;
        }
        self.with_patient(patient, |p| {
            p.views.push(view);
            Ok(p.views.len())
        })
    }

    pub fn discharge(&self, patient: &str, at: DateTime<Utc>) -> Result<()> {
        self.with_patient(patient, |p| {
            p.discharged = Some(at);
            Ok(())
        })
    }

    pub fn attention(&self, patient: &str, at: Option<DateTime<Utc>>) -> Result<AttentionReport> {
        let patients = read(&self.patients);
        let p = patients
            .get(patient)
            .ok_or_else(|| Error::NotFound(format!("patient `{patient}`")))?;
        let at = at
            .or_else(|| p.latest())
            .ok_or_else(|| Error::Invalid(format!("patient `{patient}` has no observations")))?;
        let cfg: &AttentionConfig = &self.config.attention;
        let series = p.series_until(at)?;
        let window = Duration::milliseconds((cfg.window_hours * 3_600_000.0) as i64);
        let severity_at = |t| -> Result<Option<f64>> {
            let snap = p.snapshot(&self.schema, t)?;
            (!snap.values.is_empty())
                .then(|| severity(&self.schema, &snap.values, t).map(|s| s.value))
                .transpose()
        };
        let first = p.series.values().filter_map(|s| s.first().map(|x| x.0)).min();
        let start = first.map_or(at, |f| f.max(at - window));
        let hours = (at - start).num_milliseconds() as f64 / 3_600_000.0;
        let severity_trend = match (severity_at(start)?, severity_at(at)?) {
            (Some(a), Some(b)) if hours > 0.0 => (b - a) / hours,
            _ => 0.0,
        };
        let ctx = GroupContext {
            affected_organs: p.context.affected_organs.clone(),
            severity_trend,
            baseline: p.context.baseline.clone(),
            view_history: p.views.clone(),
            current_context: p.context.current_context.clone(),
        };
        let assigned = assign_groups(&self.schema, &series, &ctx, cfg)?;
        let (memberships, stats): (Vec<_>, Vec<_>) = assigned.into_iter().unzip();
        let magnitudes: Vec<Magnitude> = stats.iter().map(Magnitude::from).collect();
        let ranks = rank_attention(&memberships, &magnitudes, cfg);
        Ok(AttentionReport {
            patient: patient.to_string(),
            at,
            severity_trend,
            display: select_display(&ranks, &self.schema)?,
            unusual_pairs: detect_unusual_pairs(&self.schema, &series, cfg)?,
            ranks,
            stats,
        })
    }

    pub fn leaderboard(&self, at: Option<DateTime<Utc>>, interval_hours: f64) -> Result<Leaderboard> {
        if !(interval_hours > 0.0) {
            return Err(Error::Invalid("interval must be positive".into()));
        }
        let patients = read(&self.patients);
        let admission = read(&self.admission);
        let at = match at.or_else(|| patients.values().filter_map(Patient::latest).max()) {
            Some(t) => t,
            None => {
                return Ok(Leaderboard {
                    at: Utc::now(),
                    interval_hours,
                    entries: vec![],
                    indices: vec![],
                    unscored: admission.clone(),
                })
            }
        };
        let prev_at = at - Duration::milliseconds((interval_hours * 3_600_000.0) as i64);
        let mut indices = Vec::new();
        let mut unscored = Vec::new();
        for id in admission.iter() {
            let p = &patients[id];
            let prev = p.snapshot(&self.schema, prev_at)?;
            let cur = p.snapshot(&self.schema, at)?;
            if p.discharged.is_some_and(|d| d <= at) || prev.values.is_empty() || cur.values.is_empty() {
                unscored.push(id.clone());
                continue;
            }
            let treatment = TreatmentRecord {
                patient: id.clone(),
                interventions: p.treatment.clone(),
            };
            indices.push(ward_indices(
                &self.schema,
                &PatientState {
                    patient: id,
                    prev: &prev,
                    cur: &cur,
                    prognoses: &p.prognoses,
                    treatment: &treatment,
                    coordination_flags: p.context.coordination_flags,
                },
                &self.config.ward,
            )?);
        }
        Ok(Leaderboard {
            at,
            interval_hours,
            entries: rank_ward(&indices, self.config.ward.weights)?,
            indices,
            unscored,
        })
    }

    fn registry(&self) -> Result<&Registry> {
        self.registry
            .as_ref()
            .ok_or_else(|| Error::Config("no registry configured".into()))
    }

    pub fn registry_schema(&self) -> Result<&RegistrySchema> {
        Ok(&self.registry()?.schema)
    }

    pub fn ingest_record(&self, raw: RawRecord) -> Result<FollowUpSummary> {
        let reg = self.registry()?;
        let record = reg.schema.validate_record(raw)?;
        let id = record.id.clone();
        write(&self.records).insert(id.clone(), record);
        self.summary(&id)
    }

    pub fn summary(&self, id: &str) -> Result<FollowUpSummary> {
        let reg = self.registry()?;
        let records = read(&self.records);
        let record = records
            .get(id)
            .ok_or_else(|| Error::NotFound(format!("record `{id}`")))?;
        let summary = generate_summary(record, &reg.schema, &reg.rules, &reg.layout)?;
        let flags = match reg.schema.label_field.as_deref().and_then(|f| record.field(f)) {
            Some(label) => flag_record(
                &record_items(&reg.schema, record),
                &label.to_string(),
                &read(&self.recognition),
            ),
            None => Vec::new(),
        };
        Ok(summary.with_warnings(flags))
    }

    pub fn mine(&self, req: &MineRequest) -> Result<MiningResult> {
        let cfg = req.config.clone().unwrap_or_else(|| self.config.miner.clone());
        let table = match &req.csv {
            Some(text) => ItemTable::from_csv(text.as_bytes(), req.label_column.as_deref().unwrap_or("label"))?,
            None => {
                let reg = self.registry()?;
                let label = reg
                    .schema
                    .label_field
                    .as_deref()
                    .ok_or_else(|| Error::Config("registry schema has no label_field".into()))?;
                let labelled: Vec<RegistryRecord> = read(&self.records)
                    .values()
                    .filter(|r| r.field(label).is_some())
                    .cloned()
                    .collect();
                ItemTable::from_records(&reg.schema, &labelled)?
            }
        };
        let result = mine_antisyndromes(&table, &req.class, &cfg)?;
        if req.csv.is_none() {
            write(&self.recognition).insert(req.class.clone(), recognition_rule(&req.class, &result.minimal));
        }
        Ok(result)
    }

    pub fn record_outcome(&self, user: &str, input: OutcomeInput) -> Result<PerformanceEntry> {
        write(&self.archive).record_outcome(
            user,
            &input.case,
            input.prediction,
            input.outcome,
            input.at.unwrap_or_else(Utc::now),
        )
    }

    pub fn finalize(&self, patient: &str, input: FinalizeInput) -> Result<Finalized> {
        if let Some(p) = read(&self.patients).get(patient) {
            if p.discharged.is_none() {
                return Err(Error::Session(format!("patient `{patient}` is still under observation")));
            }
        }
        let (case, stored) = write(&self.archive).finalize_case(
            patient,
            input.final_record,
            input.breakpoints,
            input.explanations,
            Utc::now(),
        )?;
        Ok(Finalized {
            case,
            explanations: stored.iter().map(|e| e.id).collect(),
        })
    }

    pub fn case_export(&self, patient: &str) -> Result<String> {
        read(&self.archive).export_case(patient)
    }

    pub fn explanations(&self, syndrome: &str) -> Vec<DeidentifiedExplanation> {
        read(&self.archive)
            .explanations_for_syndrome(syndrome)
            .into_iter()
            .cloned()
            .collect()
    }

    pub fn performance(&self, requester: &str, target: &str, window: &Window) -> Result<PerformanceReport> {
        read(&self.archive).user_performance(requester, target, window)
    }
}
