//! Minimal antisyndromes: smallest combinations of feature values that never
//! occur in a class although every sub-combination does.
//!
//! Mining is level-wise. Sets present in the class are extended one item at
//! a time (all of their subsets are present too); a candidate that never
//! occurs is minimal by construction. A minimal set is reported when its
//! expected count under independence, `|A| * prod p(x_j)`, reaches
//! `min_expected`. Sets that occur, but at most `tau` times as often as
//! expected, are returned separately as suspicious combinations.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::record::{FieldType, FieldValue, RegistryRecord, RegistrySchema};
use super::rules::PossibleError;
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::schema::Value;

/// A feature/value pair, by interned index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Item {
    pub feature: usize,
    pub value: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NamedItem {
    pub feature: String,
    pub value: String,
}

/// Categorical view of a labeled table. Missing cells hold no item.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemTable {
    features: Vec<String>,
    values: Vec<Vec<String>>,
    rows: Vec<Vec<Option<usize>>>,
    classes: Vec<String>,
}

impl ItemTable {
    pub fn new(features: Vec<String>, rows: Vec<(Vec<Option<String>>, String)>) -> Result<Self> {
        let mut values: Vec<Vec<String>> = vec![Vec::new(); features.len()];
        let mut lookup: Vec<HashMap<String, usize>> = vec![HashMap::new(); features.len()];
        let mut coded = Vec::with_capacity(rows.len());
        let mut classes = Vec::with_capacity(rows.len());
        for (i, (cells, class)) in rows.into_iter().enumerate() {
            if cells.len() != features.len() {
                return Err(Error::Dataset(format!(
                    "row {} has {} cells, expected {}",
                    i + 1,
                    cells.len(),
                    features.len()
                )));
            }
            let row = cells
                .into_iter()
                .enumerate()
                .map(|(f, c)| {
                    c.map(|c| {
                        *lookup[f].entry(c.clone()).or_insert_with(|| {
                            values[f].push(c);
                            values[f].len() - 1
                        })
                    })
                })
                .collect();
            coded.push(row);
            classes.push(class);
        }
        Ok(Self {
            features,
            values,
            rows: coded,
            classes,
        })
    }

    /// Quantitative parameters are itemized by band when thresholds exist,
    /// otherwise by their exact value.
    pub fn from_dataset(ds: &LabeledDataset) -> Result<Self> {
        let schema = ds.schema();
        let features = schema.ids().map(String::from).collect();
        let rows = ds
            .records()
            .iter()
            .map(|(x, label)| {
                let cells = (0..schema.len())
                    .map(|j| {
                        let spec = schema.get(j);
                        x.get(j).map(|v| match (v, spec.normalized(v)) {
                            (Value::Number(_), Some(n)) => n.band().name().to_string(),
                            _ => v.to_string(),
                        })
                    })
                    .collect();
                (cells, ds.labels()[*label].to_string())
            })
            .collect();
        Self::new(features, rows)
    }

    /// Every column except `label_column` is a categorical feature; empty
    /// cells are missing.
    pub fn from_csv<R: Read>(source: R, label_column: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(source);
        let headers = reader.headers()?.clone();
        let label_idx = headers
            .iter()
            .position(|h| h == label_column)
            .ok_or_else(|| Error::Dataset(format!("missing `{label_column}` column")))?;
        let features = headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != label_idx)
            .map(|(_, h)| h.to_string())
            .collect();
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            let cells = rec
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != label_idx)
                .map(|(_, c)| (!c.trim().is_empty()).then(|| c.trim().to_string()))
                .collect();
            rows.push((cells, rec.get(label_idx).unwrap_or_default().to_string()));
        }
        Self::new(features, rows)
    }

    /// Registry records labeled by the schema's `label_field`.
    pub fn from_records(schema: &RegistrySchema, records: &[RegistryRecord]) -> Result<Self> {
        let label_field = schema
            .label_field
            .as_deref()
            .ok_or_else(|| Error::Config("registry schema has no label_field".into()))?;
        let features: Vec<String> = itemizable_fields(schema)
            .filter(|f| *f != label_field)
            .map(String::from)
            .collect();
        let rows = records
            .iter()
            .map(|r| {
                let items = record_items(schema, r);
                let class = r
                    .field(label_field)
                    .map(ToString::to_string)
                    .ok_or_else(|| Error::MissingValue(format!("record `{}` has no {label_field}", r.id)))?;
                Ok((features.iter().map(|f| items.get(f).cloned()).collect(), class))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(features, rows)
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn classes(&self) -> Vec<&str> {
        let mut seen: Vec<&str> = Vec::new();
        for c in &self.classes {
            if !seen.contains(&c.as_str()) {
                seen.push(c);
            }
        }
        seen
    }

    pub fn class_of(&self, row: usize) -> &str {
        &self.classes[row]
    }

    pub fn item(&self, feature: &str, value: &str) -> Option<Item> {
        let f = self.features.iter().position(|x| x == feature)?;
        let v = self.values[f].iter().position(|x| x == value)?;
        Some(Item { feature: f, value: v })
    }

    pub fn name(&self, item: Item) -> NamedItem {
        NamedItem {
            feature: self.features[item.feature].clone(),
            value: self.values[item.feature][item.value].clone(),
        }
    }

    /// Every item that occurs anywhere in the table, in index order.
    pub fn items(&self) -> Vec<Item> {
        (0..self.features.len())
            .flat_map(|f| (0..self.values[f].len()).map(move |v| Item { feature: f, value: v }))
            .collect()
    }

    pub fn row_contains(&self, row: usize, items: &[Item]) -> bool {
        items.iter().all(|it| self.rows[row][it.feature] == Some(it.value))
    }

    /// The row as feature -> value text.
    pub fn row_map(&self, row: usize) -> BTreeMap<String, String> {
        self.rows[row]
            .iter()
            .enumerate()
            .filter_map(|(f, v)| v.map(|v| (self.features[f].clone(), self.values[f][v].clone())))
            .collect()
    }

    pub fn count_in_class(&self, items: &[Item], class: &str) -> usize {
        (0..self.len())
            .filter(|&r| self.classes[r] == class && self.row_contains(r, items))
            .count()
    }

    fn count_all(&self, item: Item) -> usize {
        (0..self.len()).filter(|&r| self.row_contains(r, &[item])).count()
    }
}

fn itemizable_fields(schema: &RegistrySchema) -> impl Iterator<Item = &str> {
    schema.fields.iter().filter_map(|f| match &f.kind {
        FieldType::Category { .. } | FieldType::Boolean => Some(f.id.as_str()),
        FieldType::Number { bins } if !bins.is_empty() => Some(f.id.as_str()),
        _ => None,
    })
}

fn bin_label(x: f64, bins: &[f64]) -> String {
    match bins.iter().position(|b| x < *b) {
        Some(0) => format!("<{}", bins[0]),
        Some(i) => format!("[{},{})", bins[i - 1], bins[i]),
        None => format!(">={}", bins[bins.len() - 1]),
    }
}

/// The categorical items of a registry record: category and boolean fields
/// as rendered, binned numbers by interval.
pub fn record_items(schema: &RegistrySchema, record: &RegistryRecord) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for id in itemizable_fields(schema) {
        let Some(v) = record.field(id) else { continue };
        let text = match (v, &schema.field(id).expect("own field").kind) {
            (FieldValue::Number(x), FieldType::Number { bins }) => bin_label(*x, bins),
            _ => v.to_string(),
        };
        out.insert(id.to_string(), text);
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginalScope {
    /// `p(x_j)` is the frequency inside the mined class.
    #[default]
    WithinClass,
    /// `p(x_j)` is the frequency over the whole table.
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinerConfig {
    pub max_size: usize,
    pub tau: f64,
    pub min_expected: f64,
    pub marginals: MarginalScope,
}

impl Default for MinerConfig {
    fn default() -> Self {
        Self {
            max_size: 3,
            tau: 0.1,
            min_expected: 5.0,
            marginals: MarginalScope::WithinClass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntisyndromeCandidate {
    pub items: Vec<NamedItem>,
    pub class: String,
    /// `prod p(x_j)`.
    pub expected: f64,
    pub expected_count: f64,
    /// Occurrences in the class.
    pub observed: usize,
    /// Observed frequency over expected probability.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalAntisyndrome {
    pub items: Vec<NamedItem>,
    pub class: String,
    pub expected: f64,
    pub expected_count: f64,
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningResult {
    pub class: String,
    pub class_size: usize,
    pub minimal: Vec<MinimalAntisyndrome>,
    pub suspicious: Vec<AntisyndromeCandidate>,
}

#[derive(Clone, PartialEq, Eq)]
struct Bits(Vec<u64>);

impl Bits {
    fn from_rows(n: usize, rows: impl Iterator<Item = usize>) -> Self {
        let mut b = vec![0u64; n.div_ceil(64)];
        for r in rows {
            b[r / 64] |= 1 << (r % 64);
        }
        Bits(b)
    }

    fn and(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }

    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// `prod counts / denom^k`, exact in integers while it fits.
fn product_probability(counts: &[usize], denom: usize) -> f64 {
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for &c in counts {
        match (num.checked_mul(c as u128), den.checked_mul(denom as u128)) {
            (Some(n), Some(d)) => {
                num = n;
                den = d;
            }
            _ => return counts.iter().map(|&c| c as f64 / denom as f64).product(),
        }
    }
    num as f64 / den as f64
}

struct Miner<'a> {
    table: &'a ItemTable,
    class_size: usize,
    cfg: &'a MinerConfig,
    class_counts: HashMap<Item, usize>,
    global_counts: HashMap<Item, usize>,
}

impl Miner<'_> {
    fn expected(&self, items: &[Item], singleton: bool) -> f64 {
        let global = singleton || self.cfg.marginals == MarginalScope::Global;
        if global {
            let c: Vec<usize> = items.iter().map(|i| self.global_counts[i]).collect();
            product_probability(&c, self.table.len())
        } else {
            let c: Vec<usize> = items.iter().map(|i| self.class_counts[i]).collect();
            product_probability(&c, self.class_size)
        }
    }

    fn names(&self, items: &[Item]) -> Vec<NamedItem> {
        items.iter().map(|&i| self.table.name(i)).collect()
    }
}

/// Mines class `class` of `table`. Singletons that never occur in the class
/// are judged against their frequency in the whole table, since their
/// in-class frequency is zero by definition.
pub fn mine_antisyndromes(table: &ItemTable, class: &str, cfg: &MinerConfig) -> Result<MiningResult> {
    let in_class: Vec<usize> = (0..table.len()).filter(|&r| table.class_of(r) == class).collect();
    if in_class.is_empty() {
        return Err(Error::Dataset(format!("class `{class}` has no records")));
    }
    if cfg.max_size == 0 || !(cfg.tau >= 0.0) || !(cfg.min_expected >= 0.0) {
        return Err(Error::Config("miner needs max_size >= 1 and non-negative tau and min_expected".into()));
    }
    let n = table.len();
    let all_items = table.items();
    let item_bits: HashMap<Item, Bits> = all_items
        .iter()
        .map(|&it| {
            let rows = in_class.iter().copied().filter(|&r| table.row_contains(r, &[it]));
            (it, Bits::from_rows(n, rows))
        })
        .collect();
    let miner = Miner {
        table,
        class_size: in_class.len(),
        cfg,
        class_counts: item_bits.iter().map(|(k, b)| (*k, b.count())).collect(),
        global_counts: all_items.iter().map(|&it| (it, table.count_all(it))).collect(),
    };
    let size = miner.class_size as f64;
    let mut minimal = Vec::new();
    let mut suspicious = Vec::new();

    let mut level: Vec<(Vec<Item>, Bits)> = Vec::new();
    for &it in &all_items {
        if miner.class_counts[&it] == 0 {
            let p = miner.expected(&[it], true);
            if size * p >= cfg.min_expected {
                minimal.push(MinimalAntisyndrome {
                    items: miner.names(&[it]),
                    class: class.to_string(),
                    expected: p,
                    expected_count: size * p,
                    verified: true,
                });
            }
        } else {
            level.push((vec![it], item_bits[&it].clone()));
        }
    }

    for k in 2..=cfg.max_size {
        let present: HashSet<&[Item]> = level.iter().map(|(s, _)| s.as_slice()).collect();
        let mut next = Vec::new();
        for (i, (a, bits_a)) in level.iter().enumerate() {
            for (b, _) in &level[i + 1..] {
                if a[..k - 2] != b[..k - 2] {
                    break;
                }
                let last = b[k - 2];
                if a.iter().any(|x| x.feature == last.feature) {
                    continue;
                }
                let mut cand = a.clone();
                cand.push(last);
                let all_subsets_present = (0..k - 2).all(|drop| {
                    let sub: Vec<Item> = cand
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != drop)
                        .map(|(_, x)| *x)
                        .collect();
                    present.contains(sub.as_slice())
                });
                if !all_subsets_present {
                    continue;
                }
                let bits = bits_a.and(&item_bits[&last]);
                let observed = bits.count();
                let p = miner.expected(&cand, false);
                let expected_count = size * p;
                if observed == 0 {
                    if expected_count >= cfg.min_expected {
                        minimal.push(MinimalAntisyndrome {
                            items: miner.names(&cand),
                            class: class.to_string(),
                            expected: p,
                            expected_count,
                            verified: true,
                        });
                    }
                } else {
                    if expected_count >= cfg.min_expected && (observed as f64) <= cfg.tau * expected_count {
                        suspicious.push(AntisyndromeCandidate {
                            items: miner.names(&cand),
                            class: class.to_string(),
                            expected: p,
                            expected_count,
                            observed,
                            ratio: observed as f64 / size / p,
                        });
                    }
                    next.push((cand, bits));
                }
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort_by(|x, y| x.0.cmp(&y.0));
        level = next;
    }
    let by_size = |a: &[NamedItem], b: &[NamedItem]| a.len().cmp(&b.len()).then_with(|| a.cmp(b));
    minimal.sort_by(|a, b| by_size(&a.items, &b.items));
    suspicious.sort_by(|a, b| by_size(&a.items, &b.items));
    Ok(MiningResult {
        class: class.to_string(),
        class_size: miner.class_size,
        minimal,
        suspicious,
    })
}

/// True iff `items` never occurs in `class` while each proper subset does.
pub fn verify_minimality(items: &[Item], table: &ItemTable, class: &str) -> bool {
    if items.is_empty() || table.count_in_class(items, class) > 0 {
        return false;
    }
    let k = items.len();
    // Checking the subsets one smaller suffices: presence is inherited by
    // every smaller subset.
    if k == 1 {
        return table.count_in_class(&[], class) > 0;
    }
    (0..k).all(|drop| {
        let sub: Vec<Item> = items
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != drop)
            .map(|(_, x)| *x)
            .collect();
        table.count_in_class(&sub, class) > 0
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Recognition {
    NotInClass { matched: Vec<Vec<NamedItem>> },
    ConsistentWithClass,
}

/// Rejects a record from a class when it contains one of the class's
/// minimal antisyndromes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecognitionRule {
    pub class: String,
    pub sets: Vec<Vec<NamedItem>>,
}

pub fn recognition_rule(class: &str, minimals: &[MinimalAntisyndrome]) -> RecognitionRule {
    RecognitionRule {
        class: class.to_string(),
        sets: minimals.iter().map(|m| m.items.clone()).collect(),
    }
}

impl RecognitionRule {
    pub fn recognize(&self, record: &BTreeMap<String, String>) -> Recognition {
        let matched: Vec<Vec<NamedItem>> = self
            .sets
            .iter()
            .filter(|set| set.iter().all(|it| record.get(&it.feature) == Some(&it.value)))
            .cloned()
            .collect();
        if matched.is_empty() {
            Recognition::ConsistentWithClass
        } else {
            Recognition::NotInClass { matched }
        }
    }
}

/// One non-interruptive warning per antisyndrome of the record's own class
/// found in the record.
pub fn flag_record(
    record: &BTreeMap<String, String>,
    label: &str,
    rules: &BTreeMap<String, RecognitionRule>,
) -> Vec<PossibleError> {
    let Some(rule) = rules.get(label) else {
        return Vec::new();
    };
    match rule.recognize(record) {
        Recognition::ConsistentWithClass => Vec::new(),
        Recognition::NotInClass { matched } => matched
            .into_iter()
            .map(|set| {
                let combo: Vec<String> = set.iter().map(|i| format!("{} = {}", i.feature, i.value)).collect();
                PossibleError {
                    rule: format!("antisyndrome:{label}"),
                    message: format!(
                        "The combination {} never occurs in class \"{label}\"; the class label or one of these fields may be mis-entered.",
                        combo.join(", ")
                    ),
                    likelihood: "suspected".into(),
                    interruptive: false,
                }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 200 ambulance calls: 70 men, 20 pregnant women, never both.
    fn ambulance() -> ItemTable {
        let rows = (0..200)
            .map(|i| {
                let sex = if i < 70 { "male" } else { "female" };
                let pregnant = if (70..90).contains(&i) { "yes" } else { "no" };
                let age = ["<30", "30-60", ">60"][i % 3];
                (
                    vec![Some(sex.to_string()), Some(pregnant.to_string()), Some(age.to_string())],
                    "ambulance".to_string(),
                )
            })
            .collect();
        ItemTable::new(vec!["sex".into(), "pregnant".into(), "age".into()], rows).unwrap()
    }

    fn named(pairs: &[(&str, &str)]) -> Vec<NamedItem> {
        pairs
            .iter()
            .map(|(f, v)| NamedItem {
                feature: f.to_string(),
                value: v.to_string(),
            })
            .collect()
    }

    #[test]
    fn planted_pair_is_the_unique_minimal() {
        let t = ambulance();
        let r = mine_antisyndromes(&t, "ambulance", &MinerConfig::default()).unwrap();
        assert_eq!(r.minimal.len(), 1);
        assert_eq!(r.minimal[0].items, named(&[("sex", "male"), ("pregnant", "yes")]));
        assert_eq!(r.minimal[0].expected, 0.035);
        assert!((r.minimal[0].expected_count - 7.0).abs() < 1e-12);
    }

    #[test]
    fn expected_count_gate() {
        let t = ambulance();
        let strict = MinerConfig {
            min_expected: 7.5,
            ..MinerConfig::default()
        };
        assert!(mine_antisyndromes(&t, "ambulance", &strict).unwrap().minimal.is_empty());
    }

    #[test]
    fn probability_product_is_exact() {
        assert_eq!(product_probability(&[35, 10], 100), 0.035);
        assert_eq!(product_probability(&[70, 20], 200), 0.035);
    }

    #[test]
    fn singleton_absent_value_blocks_supersets() {
        let mut rows: Vec<_> = (0..40)
            .map(|i| {
                (
                    vec![Some(["a", "b"][i % 2].to_string()), Some(["x", "y"][i / 2 % 2].to_string())],
                    "A".to_string(),
                )
            })
            .collect();
        rows.extend((0..40).map(|_| (vec![Some("c".to_string()), Some("x".to_string())], "B".to_string())));
        let t = ItemTable::new(vec!["f".into(), "g".into()], rows).unwrap();
        let r = mine_antisyndromes(&t, "A", &MinerConfig::default()).unwrap();
        assert_eq!(r.minimal.len(), 1);
        assert_eq!(r.minimal[0].items, named(&[("f", "c")]));
    }

    #[test]
    fn minimality_checks() {
        let t = ambulance();
        let male = t.item("sex", "male").unwrap();
        let preg = t.item("pregnant", "yes").unwrap();
        let old = t.item("age", ">60").unwrap();
        assert!(verify_minimality(&[male, preg], &t, "ambulance"));
        assert!(!verify_minimality(&[male, preg, old], &t, "ambulance"));
        assert!(!verify_minimality(&[male, old], &t, "ambulance"));
        assert!(!verify_minimality(&[], &t, "ambulance"));
    }

    #[test]
    fn recognition_and_flags() {
        let t = ambulance();
        let r = mine_antisyndromes(&t, "ambulance", &MinerConfig::default()).unwrap();
        let rule = recognition_rule("ambulance", &r.minimal);
        let rec: BTreeMap<String, String> = [("sex", "male"), ("pregnant", "yes"), ("age", "<30")]
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        assert!(matches!(rule.recognize(&rec), Recognition::NotInClass { matched } if matched.len() == 1));
        assert_eq!(rule.recognize(&t.row_map(0)), Recognition::ConsistentWithClass);
        assert_eq!(
            recognition_rule("ambulance", &[]).recognize(&rec),
            Recognition::ConsistentWithClass
        );

        let rules: BTreeMap<_, _> = [("ambulance".to_string(), rule)].into();
        let flags = flag_record(&rec, "ambulance", &rules);
        assert_eq!(flags.len(), 1);
        assert!(!flags[0].interruptive);
        assert!(flag_record(&t.row_map(0), "ambulance", &rules).is_empty());
    }

    #[test]
    fn suspicious_combinations_are_separate() {
        // a fills half the rows, x about a quarter; together only once.
        let rows = (0..200)
            .map(|i| {
                let f = if i < 100 { "a" } else { "b" };
                let g = if i == 0 || (100..150).contains(&i) { "x" } else { "y" };
                (vec![Some(f.to_string()), Some(g.to_string())], "A".to_string())
            })
            .collect();
        let t = ItemTable::new(vec!["f".into(), "g".into()], rows).unwrap();
        let r = mine_antisyndromes(&t, "A", &MinerConfig::default()).unwrap();
        assert!(r.minimal.is_empty());
        assert_eq!(r.suspicious.len(), 1);
        assert_eq!(r.suspicious[0].items, named(&[("f", "a"), ("g", "x")]));
        assert_eq!(r.suspicious[0].observed, 1);
    }

    #[test]
    fn csv_input() {
        let text = "sex,pregnant,label\nmale,no,amb\nfemale,yes,amb\nfemale,,amb\n";
        let t = ItemTable::from_csv(text.as_bytes(), "label").unwrap();
        assert_eq!(t.features(), ["sex", "pregnant"]);
        assert_eq!(t.row_map(2).len(), 1);
        assert!(ItemTable::from_csv(text.as_bytes(), "class").is_err());
    }

    #[test]
    fn bins() {
        assert_eq!(bin_label(1.0, &[2.0]), "<2");
        assert_eq!(bin_label(2.2, &[2.0]), ">=2");
        assert_eq!(bin_label(3.0, &[2.0, 5.0]), "[2,5)");
    }
}
