//! Service configuration file. Relative paths are resolved against the
//! directory of the file that names them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use watson_core::archive::{ArchiveConfig, Role};
use watson_core::attention::AttentionConfig;
use watson_core::errprev::{MinerConfig, RegistrySchema, RuleSet, SummaryLayout};
use watson_core::question::{QuestionTemplates, SamplerConfig};
use watson_core::schema::Value;
use watson_core::ward::WardConfig;
use watson_core::{Error, ParameterSchema, Result, TreeConfig};

#[derive(Debug, Clone, Deserialize)]
pub struct RegistryPaths {
    pub schema: PathBuf,
    pub rules: PathBuf,
}

fn default_strategy_representative() -> String {
    "centroid".into()
}

fn default_strategy_attribution() -> String {
    "occlusion".into()
}

#[derive(Debug, Clone, Deserialize)]
pub struct ModelSection {
    /// Trained at startup and served as model `default`.
    pub dataset: Option<PathBuf>,
    #[serde(default = "default_strategy_representative")]
    pub representative: String,
    #[serde(default = "default_strategy_attribution")]
    pub attribution: String,
    #[serde(default)]
    pub tree: TreeConfig,
    /// Expert representatives: label to parameter values.
    #[serde(default)]
    pub expert: BTreeMap<String, BTreeMap<String, Value>>,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            dataset: None,
            representative: default_strategy_representative(),
            attribution: default_strategy_attribution(),
            tree: TreeConfig::default(),
            expert: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct UserEntry {
    pub id: String,
    pub role: Role,
    /// Hex SHA-256 of the bearer token.
    pub token_sha256: String,
}

fn default_listen() -> String {
    "127.0.0.1:8080".into()
}

#[derive(Debug, Clone, Deserialize)]
pub struct ServiceConfig {
    #[serde(default = "default_listen")]
    pub listen: String,
    /// Archive journal; in-memory when absent.
    pub store: Option<PathBuf>,
    pub schema: PathBuf,
    pub registry: Option<RegistryPaths>,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub templates: QuestionTemplates,
    #[serde(default)]
    pub attention: AttentionConfig,
    #[serde(default)]
    pub ward: WardConfig,
    #[serde(default)]
    pub miner: MinerConfig,
    #[serde(default)]
    pub archive: ArchiveConfig,
    #[serde(default)]
    pub users: Vec<UserEntry>,
}

/// Parsed file contents referenced by the configuration.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: ServiceConfig,
    pub schema: ParameterSchema,
    pub registry: Option<(RegistrySchema, RuleSet, SummaryLayout)>,
    pub dataset_text: Option<String>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn parse<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

impl ServiceConfig {
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: ServiceConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("service config: {e}")))?;
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut cfg.schema);
        if let Some(s) = &mut cfg.store {
            fix(s);
        }
        if let Some(r) = &mut cfg.registry {
            fix(&mut r.schema);
            fix(&mut r.rules);
        }
        if let Some(d) = &mut cfg.model.dataset {
            fix(d);
        }
        Ok(cfg)
    }

    /// Reads the configuration and every file it references, failing on the
    /// first missing or malformed one.
    pub fn load(path: &Path) -> Result<Loaded> {
        let base = path.parent().unwrap_or(Path::new("."));
        let config = Self::from_toml(&read(path)?, base)?;
        config.ward.validate()?;

        #[derive(Deserialize)]
        struct SchemaFile {
            parameter: ParameterSchema,
        }
        let schema = parse::<SchemaFile>(&config.schema, &read(&config.schema)?)?.parameter;

        let registry = match &config.registry {
            Some(r) => {
                let text = read(&r.schema)?;
                let reg = RegistrySchema::from_toml(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", r.schema.display())))?;
                let layout = SummaryLayout::from_toml(&text)?;
                layout.validate(&reg)?;
                let rules = RuleSet::from_toml(&read(&r.rules)?, &reg)
                    .map_err(|e| Error::Config(format!("{}: {e}", r.rules.display())))?;
                Some((reg, rules, layout))
            }
            None => None,
        };
        let dataset_text = config.model.dataset.as_deref().map(read).transpose()?;
        Ok(Loaded {
            config,
            schema,
            registry,
            dataset_text,
        })
    }
}
