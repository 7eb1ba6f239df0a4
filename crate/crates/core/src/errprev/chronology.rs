//! Date-ordered timeline of a record's events, with flags where the dates
//! contradict the canonical clinical order.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::record::{DateDiagnostic, RegistryRecord, RegistrySchema};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Emphasis {
    Plain,
    Highlight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChronologyEntry {
    pub kind: String,
    pub label: String,
    pub date: NaiveDate,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
    pub emphasis: Emphasis,
}

/// `expected_first` is canonically earlier than `expected_then` but is dated
/// after it. The flag belongs to the later-dated entry, `attached_to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderAnomaly {
    pub expected_first: String,
    pub expected_then: String,
    pub first_date: NaiveDate,
    pub then_date: NaiveDate,
    pub attached_to: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chronology {
    pub entries: Vec<ChronologyEntry>,
    pub anomalies: Vec<OrderAnomaly>,
    /// Events left out because their dates could not be read.
    pub excluded: Vec<DateDiagnostic>,
}

impl Chronology {
    pub fn anomalies_at(&self, index: usize) -> impl Iterator<Item = &OrderAnomaly> {
        self.anomalies.iter().filter(move |a| a.attached_to == index)
    }
}

/// Sorts events by date (ties by canonical order, then input order) and
/// flags every pair whose dates invert the canonical order.
pub fn build_chronology(record: &RegistryRecord, schema: &RegistrySchema) -> Chronology {
    let order = |kind: &str| schema.event_kind(kind).map(|k| k.order).unwrap_or(u32::MAX);
    let label = |kind: &str| {
        schema
            .event_kind(kind)
            .ok()
            .filter(|k| !k.label.is_empty())
            .map_or_else(|| kind.to_string(), |k| k.label.clone())
    };
    let mut events: Vec<_> = record.events.iter().collect();
    events.sort_by_key(|e| (e.date, order(&e.kind)));
    let entries: Vec<ChronologyEntry> = events
        .iter()
        .map(|e| ChronologyEntry {
            kind: e.kind.clone(),
            label: label(&e.kind),
            date: e.date,
            attributes: e.attributes.clone(),
            emphasis: Emphasis::Plain,
        })
        .collect();

    let mut anomalies = Vec::new();
    for (i, early) in entries.iter().enumerate() {
        for (j, late) in entries.iter().enumerate().skip(i + 1) {
            if late.date > early.date && order(&late.kind) < order(&early.kind) {
                anomalies.push(OrderAnomaly {
                    expected_first: late.kind.clone(),
                    expected_then: early.kind.clone(),
                    first_date: late.date,
                    then_date: early.date,
                    attached_to: j,
                });
            }
        }
    }
    anomalies.sort_by_key(|a| (a.attached_to, a.then_date));
    Chronology {
        entries,
        anomalies,
        excluded: record
            .diagnostics
            .iter()
            .filter(|d| d.source.starts_with("event:"))
            .cloned()
            .collect(),
    }
}
