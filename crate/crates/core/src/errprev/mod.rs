//! Data-error prevention for registry records: follow-up summaries built
//! from expert rules, and minimal antisyndromes mined from labeled data.

pub mod antisyndrome;
pub mod chronology;
pub mod record;
pub mod rules;
pub mod summary;

pub use antisyndrome::{
    flag_record, mine_antisyndromes, recognition_rule, record_items, verify_minimality, AntisyndromeCandidate,
    Item, ItemTable, MarginalScope, MinerConfig, MinimalAntisyndrome, MiningResult, NamedItem, Recognition,
    RecognitionRule,
};
pub use chronology::{build_chronology, Chronology, ChronologyEntry, Emphasis, OrderAnomaly};
pub use record::{
    parse_date, ClinicalEvent, DateDiagnostic, DateProblem, FieldDef, FieldType, FieldValue, RawEvent, RawRecord,
    RegistryRecord, RegistrySchema,
};
pub use rules::{evaluate_rules, Atom, CmpOp, Condition, KindSet, PossibleError, RuleDef, RuleSet};
pub use summary::{generate_summary, FollowUpSummary, KeyField, SummaryLayout};
