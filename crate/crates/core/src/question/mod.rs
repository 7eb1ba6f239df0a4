//! The question engine: completion sampling, local attribution, question
//! selection and the consult dialogue built on top of them.

pub mod attribution;
pub mod sampler;
pub mod select;
pub mod session;

pub use attribution::{attribution_registry, AttributionVector, Attributor, Occlusion, SampledOcclusion};
pub use sampler::{completions, enumerate_completions, sample_completions, Completion, SamplerConfig};
pub use select::{
    detect_alternative, impute_with_typical, mismatching_parameters, select_question, Alternative,
    QuestionBranch, QuestionSpec, QuestionTemplates, SelectionInput,
};
pub use session::{
    Analysis, ConsultEngine, ConsultEvent, ConsultOutput, ConsultSession, SessionState, SessionSummary,
    TranscriptEntry, QUESTION_BUDGET,
};
