//! The `watson` command line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use clap::{Parser, Subcommand};
use serde::Deserialize;
use watson_core::errprev::{mine_antisyndromes, ItemTable, MarginalScope, MinerConfig, RawRecord};
use watson_core::observation::PlanEntry;
use watson_core::question::ConsultOutput;
use watson_core::ward::{Intervention, PrognosisRecord};
use watson_core::{DecisionLabel, Error, Result, ThresholdSet, Value};

use crate::app::{App, ObservationInput, PatientContext, PrognosisInput, StartConsult, TrainRequest};
use crate::config::ServiceConfig;

#[derive(Debug, Parser)]
#[command(name = "watson", version, about = "Decision support that asks instead of telling")]
pub struct Cli {
    /// Service configuration file.
    #[arg(long, global = true, default_value = "config/watson.toml")]
    pub config: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP service.
    Serve {
        /// Overrides the configured listen address.
        #[arg(long)]
        listen: Option<String>,
    },
    /// Train a tree on a dataset and print the model description.
    Train {
        dataset: PathBuf,
        #[arg(long)]
        max_depth: Option<usize>,
        #[arg(long)]
        min_leaf: Option<usize>,
        #[arg(long, default_value = ",")]
        delimiter: char,
    },
    /// Review a decision; questions are answered on standard input.
    Consult {
        #[arg(long)]
        decision: String,
        /// Known observations as `id=value`.
        #[arg(long = "obs", value_name = "ID=VALUE")]
        observations: Vec<String>,
        #[arg(long, default_value = "cli")]
        patient: String,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the follow-up summary of a registry record file.
    Summarize {
        record: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Mine minimal antisyndromes of one class from a delimited file.
    Mine {
        dataset: PathBuf,
        class: String,
        #[arg(long, default_value = "label")]
        label_column: String,
        #[arg(long, default_value_t = 3)]
        max_size: usize,
        #[arg(long, default_value_t = 0.1)]
        tau: f64,
        #[arg(long, default_value_t = 5.0)]
        min_expected: f64,
        #[arg(long)]
        global_marginals: bool,
        #[arg(long)]
        json: bool,
    },
    /// Rank the patients of a ward file by composite index.
    RankWard {
        ward: PathBuf,
        #[arg(long)]
        at: Option<DateTime<Utc>>,
        #[arg(long, default_value_t = 1.0)]
        interval_hours: f64,
    },
    /// Normalize a raw value against thresholds `a1,a2,a3,a4`.
    Normalize {
        #[arg(allow_negative_numbers = true)]
        value: f64,
        thresholds: String,
    },
}

/// A ward file: patients with their observation histories.
#[derive(Debug, Deserialize)]
pub struct WardFile {
    pub patients: Vec<WardPatient>,
}

#[derive(Debug, Deserialize)]
pub struct WardPatient {
    pub id: String,
    pub observations: Vec<ObservationInput>,
    #[serde(default)]
    pub prognoses: Vec<PrognosisRecord>,
    #[serde(default)]
    pub interventions: Vec<Intervention>,
    #[serde(default)]
    pub coordination_flags: usize,
}

pub struct Io<'a> {
    pub stdin: &'a mut dyn BufRead,
    pub stdout: &'a mut dyn Write,
    pub stderr: &'a mut dyn Write,
}

fn load_app(path: &Path) -> Result<App> {
    App::new(ServiceConfig::load(path)?)
}

fn data_err(e: impl std::fmt::Display) -> Error {
    Error::Invalid(e.to_string())
}

fn print_output(out: &mut dyn Write, output: &ConsultOutput) -> std::io::Result<()> {
    match output {
        ConsultOutput::Silent => writeln!(out, "ok"),
        ConsultOutput::Question { mismatching, question } => {
            if !mismatching.is_empty() {
                writeln!(out, "Does not fit the decision: {}", mismatching.join(", "))?;
            }
            writeln!(out, "{}", question.prompt)?;
            write!(out, "{}> ", question.parameter)?;
            out.flush()
        }
        ConsultOutput::FinalNote { note } => writeln!(out, "{note}"),
        ConsultOutput::Closed { .. } => Ok(()),
    }
}

fn consult(app: &App, io: &mut Io<'_>, start: StartConsult) -> Result<()> {
    let mut reply = app.start_consult(start)?;
    print_output(io.stdout, &reply.output)?;
    while let ConsultOutput::Question { question, .. } = &reply.output {
        let mut line = String::new();
        if io.stdin.read_line(&mut line)? == 0 {
            writeln!(io.stdout)?;
            break;
        }
        let spec = app.schema().spec(&question.parameter)?;
        let value = spec.parse_value(line.trim())?;
        reply = app.answer(&reply.session, question.parameter.clone(), value)?;
        print_output(io.stdout, &reply.output)?;
    }
    app.close(&reply.session)?;
    Ok(())
}

fn execute(cli: Cli, io: &mut Io<'_>) -> Result<()> {
    match cli.command {
        Command::Serve { listen } => {
            let app = Arc::new(load_app(&cli.config)?);
            let listen = listen.unwrap_or_else(|| app.config().listen.clone());
            writeln!(io.stderr, "listening on {listen}")?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(crate::http::serve(app, &listen))?;
        }
        Command::Train {
            dataset,
            max_depth,
            min_leaf,
            delimiter,
        } => {
            let app = load_app(&cli.config)?;
            let text = std::fs::read_to_string(&dataset)
                .map_err(|e| Error::Invalid(format!("{}: {e}", dataset.display())))?;
            if !delimiter.is_ascii() {
                return Err(Error::Invalid("delimiter must be ASCII".into()));
            }
            let ds = app.ingest_dataset(None, &text, delimiter as u8)?;
            let mut tree = app.config().model.tree.clone();
            tree.max_depth = max_depth.unwrap_or(tree.max_depth);
            tree.min_leaf = min_leaf.unwrap_or(tree.min_leaf);
            let info = app.train(&TrainRequest {
                dataset: ds.id,
                tree: Some(tree),
                ..TrainRequest::default()
            })?;
            writeln!(io.stdout, "{}", serde_json::to_string_pretty(&info)?)?;
        }
        Command::Consult {
            decision,
            observations,
            patient,
            seed,
        } => {
            let app = load_app(&cli.config)?;
            let known = observations
                .iter()
                .map(|o| parse_observation(&app, o))
                .collect::<Result<BTreeMap<_, _>>>()?;
            let start = StartConsult {
                patient,
                model: None,
                observations: known,
                decision: DecisionLabel::new(decision),
                seed,
            };
            consult(&app, io, start)?;
        }
        Command::Summarize { record, json } => {
            let app = load_app(&cli.config)?;
            let text = std::fs::read_to_string(&record)
                .map_err(|e| Error::Invalid(format!("{}: {e}", record.display())))?;
            let raw: RawRecord = serde_json::from_str(&text)?;
            let summary = app.ingest_record(raw)?;
            if json {
                writeln!(io.stdout, "{}", serde_json::to_string_pretty(&summary)?)?;
            } else {
                write!(io.stdout, "{}", summary.to_plain_text())?;
            }
        }
        Command::Mine {
            dataset,
            class,
            label_column,
            max_size,
            tau,
            min_expected,
            global_marginals,
            json,
        } => {
            let file = std::fs::File::open(&dataset)
                .map_err(|e| Error::Invalid(format!("{}: {e}", dataset.display())))?;
            let table = ItemTable::from_csv(file, &label_column)?;
            let cfg = MinerConfig {
                max_size,
                tau,
                min_expected,
                marginals: if global_marginals {
                    MarginalScope::Global
                } else {
                    MarginalScope::WithinClass
                },
            };
            let result = mine_antisyndromes(&table, &class, &cfg)?;
            if json {
                writeln!(io.stdout, "{}", serde_json::to_string_pretty(&result)?)?;
            } else {
                writeln!(
                    io.stdout,
                    "class {} ({} records): {} minimal antisyndrome(s)",
                    result.class,
                    result.class_size,
                    result.minimal.len()
                )?;
                for m in &result.minimal {
                    let items: Vec<String> = m.items.iter().map(|i| format!("{}={}", i.feature, i.value)).collect();
                    writeln!(
                        io.stdout,
                        "  {{{}}}  expected {:.2} of {}",
                        items.join(", "),
                        m.expected_count,
                        result.class_size
                    )?;
                }
                for s in &result.suspicious {
                    let items: Vec<String> = s.items.iter().map(|i| format!("{}={}", i.feature, i.value)).collect();
                    writeln!(
                        io.stdout,
                        "  suspicious {{{}}}  observed {} vs expected {:.2}",
                        items.join(", "),
                        s.observed,
                        s.expected_count
                    )?;
                }
            }
        }
        Command::RankWard {
            ward,
            at,
            interval_hours,
        } => {
            let app = load_app(&cli.config)?;
            let text = std::fs::read_to_string(&ward)
                .map_err(|e| Error::Invalid(format!("{}: {e}", ward.display())))?;
            let file: WardFile = serde_json::from_str(&text)?;
            for p in file.patients {
                let params: Vec<String> = {
                    let mut ids: Vec<String> = p.observations.iter().map(|o| o.parameter.clone()).collect();
                    ids.sort();
                    ids.dedup();
                    ids
                };
                let entries = params
                    .into_iter()
                    .map(|parameter| PlanEntry {
                        parameter,
                        interval_minutes: interval_hours * 60.0,
                    })
                    .collect();
                app.set_plan(&p.id, entries)?;
                let mut obs = p.observations;
                obs.sort_by_key(|o| o.at);
                for o in obs {
                    app.add_observation(&p.id, o)?;
                }
                for g in p.prognoses {
                    app.add_prognosis(
                        &p.id,
                        PrognosisInput {
                            author: g.author,
                            made_at: g.made_at,
                            horizon: g.horizon,
                            predicted: g.predicted,
                            leading_syndrome: g.leading_syndrome,
                            explanation: g.explanation,
                        },
                    )?;
                }
                app.set_treatment(&p.id, p.interventions)?;
                app.set_context(
                    &p.id,
                    PatientContext {
                        coordination_flags: p.coordination_flags,
                        ..PatientContext::default()
                    },
                )?;
            }
            let board = app.leaderboard(at, interval_hours)?;
            writeln!(io.stdout, "ward at {}", board.at.to_rfc3339())?;
            writeln!(io.stdout, "{:<4}{:<16}{:>10}{:>8}{:>8}{:>8}", "#", "patient", "composite", "N1", "N2", "N3")?;
            for (i, e) in board.entries.iter().enumerate() {
                writeln!(
                    io.stdout,
                    "{:<4}{:<16}{:>10.4}{:>8.2}{:>8.4}{:>8.2}",
                    i + 1,
                    e.patient,
                    e.composite,
                    e.n1,
                    e.n2,
                    e.n3
                )?;
            }
            for u in &board.unscored {
                writeln!(io.stdout, "    {u:<16} not scored")?;
            }
        }
        Command::Normalize { value, thresholds } => {
            let parts = thresholds
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(data_err))
                .collect::<Result<Vec<_>>>()?;
            let t = ThresholdSet::from_slice(&parts)?;
            let v = t.normalize(value);
            writeln!(io.stdout, "{} {}", v.get(), v.band())?;
        }
    }
    Ok(())
}

/// Parses `args` and runs the command. Usage errors return 2, data errors 1.
pub fn run<I, T>(args: I, io: &mut Io<'_>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = write!(io.stderr, "{}", e.render());
            return if code == 0 { 0 } else { 2 };
        }
    };
    match execute(cli, io) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(io.stderr, "error: {e}");
            1
        }
    }
}

/// Parses `id=value` against the parameter's kind.
pub fn parse_observation(app: &App, raw: &str) -> Result<(String, Value)> {
    let (id, v) = raw
        .split_once('=')
        .ok_or_else(|| Error::Invalid(format!("`{raw}` is not id=value")))?;
    Ok((id.to_string(), app.schema().spec(id)?.parse_value(v)?))
}
