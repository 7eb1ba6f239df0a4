use std::path::PathBuf;

use watson_core::errprev::{
    generate_summary, Emphasis, FollowUpSummary, RawRecord, RegistrySchema, RuleSet, SummaryLayout,
};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn load(name: &str) -> FollowUpSummary {
    let text = std::fs::read_to_string(root().join("config/registry.toml")).unwrap();
    let schema = RegistrySchema::from_toml(&text).unwrap();
    let layout = SummaryLayout::from_toml(&text).unwrap();
    let rules = RuleSet::from_toml(&std::fs::read_to_string(root().join("config/rules.toml")).unwrap(), &schema).unwrap();
    let raw: RawRecord =
        serde_json::from_str(&std::fs::read_to_string(root().join("data/registry").join(name)).unwrap()).unwrap();
    let record = schema.validate_record(raw).unwrap();
    generate_summary(&record, &schema, &rules, &layout).unwrap()
}

#[test]
fn clean_record_mixed_date_formats() {
    let s = load("clean.json");
    assert!(s.possible_errors.is_empty());
    assert!(s.chronology.anomalies.is_empty());
    assert!(s.chronology.excluded.is_empty());
    let kinds: Vec<_> = s.chronology.entries.iter().map(|e| e.kind.as_str()).collect();
    assert_eq!(kinds, ["biopsy", "lumpectomy", "relapse", "resection"]);
    let dates: Vec<_> = s.chronology.entries.iter().map(|e| e.date.to_string()).collect();
    assert_eq!(dates, ["2009-02-28", "2009-03-04", "2009-06-12", "2009-07-01"]);
    assert!(s.chronology.entries.iter().all(|e| e.emphasis == Emphasis::Plain));
    let text = s.to_plain_text();
    assert!(text.contains("3) Possible errors\n   none"));
    assert!(text.contains("ER: negative"));
}

#[test]
fn suspect_record_relapse_after_resection() {
    let s = load("suspect.json");
    let fired: Vec<_> = s.possible_errors.iter().map(|p| p.rule.as_str()).collect();
    assert_eq!(fired, ["missing-relapse", "elevated-recurrence"]);
    assert!(s.possible_errors.iter().all(|p| !p.interruptive));
    assert!(s.possible_errors[1].message.contains("2.2 cm"));

    let a = &s.chronology.anomalies;
    assert_eq!(a.len(), 1);
    assert_eq!(a[0].expected_first, "relapse");
    assert_eq!(a[0].expected_then, "resection");
    assert_eq!(s.chronology.entries[a[0].attached_to].kind, "relapse");

    assert_eq!(s.highlighted_fields().collect::<Vec<_>>(), ["tumor_size_cm"]);
    for e in &s.chronology.entries {
        let expected = if e.kind == "biopsy" { Emphasis::Plain } else { Emphasis::Highlight };
        assert_eq!(e.emphasis, expected, "{}", e.kind);
    }
    let er = s.key_fields.iter().find(|k| k.field == "er").unwrap();
    assert_eq!(er.value, None);
    let text = s.to_plain_text();
    assert!(text.contains("ER: not recorded"));
    assert!(text.contains("[date order: expected before 2nd resection on 2009-11-04]"), "{text}");
}

#[test]
fn suspect_record_without_relapse() {
    let s = load("suspect_no_relapse.json");
    let fired: Vec<_> = s.possible_errors.iter().map(|p| p.rule.as_str()).collect();
    assert_eq!(fired, ["missing-relapse", "elevated-recurrence"]);
    assert!(s.chronology.anomalies.is_empty());
}

#[test]
fn mastectomy_counts_as_second_operation() {
    let s = load("mastectomy.json");
    let fired: Vec<_> = s.possible_errors.iter().map(|p| p.rule.as_str()).collect();
    assert_eq!(fired, ["missing-relapse"]);
}

#[test]
fn ambiguous_date_is_excluded_with_diagnostic() {
    let text = std::fs::read_to_string(root().join("config/registry.toml")).unwrap();
    let mut schema = RegistrySchema::from_toml(&text).unwrap();
    schema.date_formats.push("%d/%m/%Y".into());
    let raw: RawRecord = serde_json::from_value(serde_json::json!({
        "id": "x", "events": [{"kind": "biopsy", "date": "01/07/2009"}]
    }))
    .unwrap();
    let rec = schema.validate_record(raw).unwrap();
    assert!(rec.events.is_empty());
    assert_eq!(rec.diagnostics[0].source, "event:biopsy");
}
