//! Greedy CART-style decision tree over mixed quantitative/qualitative
//! parameters, split by Gini impurity.
//!
//! Training is deterministic: candidate splits are scanned by ascending
//! parameter index, then ascending threshold (or category-subset
//! enumeration order), and a later candidate replaces the incumbent only if
//! it is strictly better.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::classifier::Classifier;
use crate::dataset::{DecisionLabel, LabeledDataset};
use crate::error::{Error, Result};
use crate::schema::{FeatureVector, ParameterKind, ParameterSchema, Value};

const IMPURITY_EPS: f64 = 1e-12;
/// Above this many categories at a node, only one-vs-rest subsets are tried.
const MAX_EXHAUSTIVE_CATEGORIES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    #[default]
    Gini,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_leaf: usize,
    pub criterion: Criterion,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: 8,
            min_leaf: 1,
            criterion: Criterion::Gini,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SplitRule {
    /// Left branch takes `x < threshold`.
    Below { threshold: f64 },
    /// Left branch takes the listed categories.
    InSet { categories: Vec<String> },
}

impl SplitRule {
    fn goes_left(&self, v: &Value) -> bool {
        match (self, v) {
            (SplitRule::Below { threshold }, Value::Number(x)) => x < threshold,
            (SplitRule::InSet { categories }, Value::Category(c)) => categories.contains(c),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        counts: Vec<usize>,
    },
    Split {
        parameter: usize,
        parameter_id: String,
        rule: SplitRule,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTreeModel {
    schema: Arc<ParameterSchema>,
    labels: Vec<DecisionLabel>,
    /// Arena; the root is node 0.
    nodes: Vec<Node>,
    config: TreeConfig,
}

impl DecisionTreeModel {
    pub fn schema(&self) -> &Arc<ParameterSchema> {
        &self.schema
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn config(&self) -> &TreeConfig {
        &self.config
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = &[usize]> {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { counts } => Some(counts.as_slice()),
            Node::Split { .. } => None,
        })
    }

    /// Index of the leaf that `x` routes to.
    pub fn route(&self, x: &FeatureVector) -> Result<usize> {
        if x.len() != self.schema.len() {
            return Err(Error::Schema(format!(
                "vector has {} slots, model expects {}",
                x.len(),
                self.schema.len()
            )));
        }
        if let Some(j) = x.first_missing() {
            return Err(Error::MissingValue(self.schema.get(j).id.clone()));
        }
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { .. } => return Ok(i),
                Node::Split {
                    parameter,
                    rule,
                    left,
                    right,
                    ..
                } => {
                    let v = x.get(*parameter).expect("checked complete");
                    i = if rule.goes_left(v) { *left } else { *right };
                }
            }
        }
    }

    pub fn leaf_counts(&self, x: &FeatureVector) -> Result<&[usize]> {
        match &self.nodes[self.route(x)?] {
            Node::Leaf { counts } => Ok(counts),
            Node::Split { .. } => unreachable!("route ends at a leaf"),
        }
    }
}

impl Classifier for DecisionTreeModel {
    fn labels(&self) -> &[DecisionLabel] {
        &self.labels
    }

    fn scores(&self, x: &FeatureVector) -> Result<Vec<f64>> {
        let counts = self.leaf_counts(x)?;
        let total: usize = counts.iter().sum();
        Ok(counts.iter().map(|&c| c as f64 / total as f64).collect())
    }
}

pub fn train_tree(dataset: &LabeledDataset, config: &TreeConfig) -> Result<DecisionTreeModel> {
    if dataset.is_empty() {
        return Err(Error::Dataset("cannot train on an empty dataset".into()));
    }
    let mut builder = Builder {
        dataset,
        config,
        k: dataset.labels().len(),
        nodes: Vec::new(),
    };
    let all: Vec<usize> = (0..dataset.len()).collect();
    builder.grow(all, 0);
    Ok(DecisionTreeModel {
        schema: dataset.schema().clone(),
        labels: dataset.labels().to_vec(),
        nodes: builder.nodes,
        config: config.clone(),
    })
}

struct Builder<'a> {
    dataset: &'a LabeledDataset,
    config: &'a TreeConfig,
    k: usize,
    nodes: Vec<Node>,
}

struct Candidate {
    parameter: usize,
    rule: SplitRule,
    impurity: f64,
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

impl Builder<'_> {
    fn label(&self, row: usize) -> usize {
        self.dataset.records()[row].1
    }

    fn value(&self, row: usize, p: usize) -> &Value {
        self.dataset.records()[row].0.get(p).expect("complete")
    }

    fn counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.k];
        for &r in rows {
            c[self.label(r)] += 1;
        }
        c
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let counts = self.counts(&rows);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            counts: counts.clone(),
        });
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.config.max_depth {
            return id;
        }
        let Some(best) = self.best_split(&rows) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&row| best.rule.goes_left(self.value(row, best.parameter)));
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split {
            parameter: best.parameter,
            parameter_id: self.dataset.schema().get(best.parameter).id.clone(),
            rule: best.rule,
            left,
            right,
        };
        id
    }

    fn best_split(&self, rows: &[usize]) -> Option<Candidate> {
        let mut best: Option<Candidate> = None;
        let mut offer = |c: Candidate| {
            if best
                .as_ref()
                .is_none_or(|b| c.impurity < b.impurity - IMPURITY_EPS)
            {
                best = Some(c);
            }
        };
        for p in 0..self.dataset.schema().len() {
            match self.dataset.schema().get(p).kind {
                ParameterKind::Quantitative => self.numeric_splits(rows, p, &mut offer),
                ParameterKind::Qualitative => self.category_splits(rows, p, &mut offer),
            }
        }
        best
    }

    fn numeric_splits(&self, rows: &[usize], p: usize, offer: &mut impl FnMut(Candidate)) {
        let mut sorted: Vec<(f64, usize)> = rows
            .iter()
            .map(|&r| (self.value(r, p).as_number().expect("numeric"), self.label(r)))
            .collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = sorted.len();
        let mut left = vec![0; self.k];
        let mut right = self.counts(rows);
        for i in 0..n - 1 {
            let (v, l) = sorted[i];
            left[l] += 1;
            right[l] -= 1;
            let next = sorted[i + 1].0;
            if next == v {
                continue;
            }
            let nl = i + 1;
            let nr = n - nl;
            if nl < self.config.min_leaf || nr < self.config.min_leaf {
                continue;
            }
            let mut threshold = v + (next - v) / 2.0;
            if threshold <= v {
                threshold = next;
            }
            let impurity = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / n as f64;
            offer(Candidate {
                parameter: p,
                rule: SplitRule::Below { threshold },
                impurity,
            });
        }
    }

    fn category_splits(&self, rows: &[usize], p: usize, offer: &mut impl FnMut(Candidate)) {
        let spec = self.dataset.schema().get(p);
        let m = spec.categories.len();
        let mut per_cat = vec![vec![0usize; self.k]; m];
        let mut sizes = vec![0usize; m];
        for &r in rows {
            let c = spec
                .category_index(self.value(r, p).as_category().expect("category"))
                .expect("validated");
            per_cat[c][self.label(r)] += 1;
            sizes[c] += 1;
        }
        let observed: Vec<usize> = (0..m).filter(|&c| sizes[c] > 0).collect();
        if observed.len() < 2 {
            return;
        }
        let subsets: Vec<Vec<usize>> = if observed.len() <= MAX_EXHAUSTIVE_CATEGORIES {
            // Every subset containing the first observed category, except
            // the full set; complements would only mirror these.
            let rest = &observed[1..];
            (0..(1usize << rest.len()) - 1)
                .map(|mask| {
                    std::iter::once(observed[0])
                        .chain(
                            rest.iter()
                                .enumerate()
                                .filter(|(b, _)| mask & (1 << b) != 0)
                                .map(|(_, &c)| c),
                        )
                        .collect()
                })
                .collect()
        } else {
            observed.iter().map(|&c| vec![c]).collect()
        };
        let n = rows.len();
        for subset in subsets {
            let mut left = vec![0; self.k];
            let mut nl = 0;
            for &c in &subset {
                nl += sizes[c];
                for (acc, x) in left.iter_mut().zip(&per_cat[c]) {
                    *acc += x;
                }
            }
            let nr = n - nl;
            if nl < self.config.min_leaf || nr < self.config.min_leaf {
                continue;
            }
            let total = self.counts(rows);
            let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
            let impurity = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / n as f64;
            offer(Candidate {
                parameter: p,
                rule: SplitRule::InSet {
                    categories: subset.iter().map(|&c| spec.categories[c].clone()).collect(),
                },
                impurity,
            });
        }
    }
}
