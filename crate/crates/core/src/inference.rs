//! Boosted-tree binary classifier: loading, prediction and split-count
//! importances.
//!
//! Model files are JSON:
//!
//! ```json
//! {"modality": "audio", "base_score": 0.0, "window_len_s": 0.8, "fs_hz": 8000,
//!  "feature_names": ["audio/time/rms"],
//!  "trees": [[{"f": "audio/time/rms", "t": 0.1, "l": 1, "r": 2, "d": "l"},
//!             {"leaf": -2.0}, {"leaf": 2.0}]]}
//! ```
//!
//! A split routes left when `value < t`. `d` names the branch taken when the
//! feature is missing (absent or NaN); without it a missing value is an error.
//! Node 0 is the root of each tree.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Modality;
use crate::registry::{self, FeatureMask, FeatureVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    #[serde(rename = "l")]
    Left,
    #[serde(rename = "r")]
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Split {
        /// Index into the ensemble's `feature_names`.
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        default_branch: Option<Branch>,
    },
    Leaf(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeEnsemble {
    pub modality: Modality,
    pub base_score: f64,
    pub window_len_s: f64,
    pub fs_hz: f64,
    pub feature_names: Vec<String>,
    pub trees: Vec<Vec<TreeNode>>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawNode {
    Split {
        f: String,
        t: f64,
        l: usize,
        r: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<Branch>,
    },
    Leaf {
        leaf: f64,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    modality: Modality,
    base_score: f64,
    window_len_s: f64,
    fs_hz: f64,
    feature_names: Vec<String>,
    trees: Vec<Vec<RawNode>>,
}

pub fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn feature_modality_ok(name: &str, m: Modality) -> bool {
    name.starts_with("meta/")
        || match m {
            Modality::Audio => name.starts_with("audio/"),
            Modality::Kinematic => name.starts_with("kin/"),
        }
}

impl TreeEnsemble {
    /// Parse and validate a model document. `origin` labels errors.
    pub fn from_json_str(s: &str, origin: &str) -> Result<Self> {
        let fail = |msg: String| Error::ModelLoad {
            path: origin.to_string(),
            msg,
        };
        let raw: RawModel = serde_json::from_str(s).map_err(|e| fail(format!("line {} column {}: {e}", e.line(), e.column())))?;
        for (name, v) in [("base_score", raw.base_score), ("window_len_s", raw.window_len_s), ("fs_hz", raw.fs_hz)] {
            if !v.is_finite() {
                return Err(fail(format!("{name} must be finite")));
            }
        }
        if !(raw.window_len_s > 0.0 && raw.fs_hz > 0.0) {
            return Err(fail("window_len_s and fs_hz must be positive".into()));
        }

        let mut used: Vec<&str> = Vec::new();
        for tree in &raw.trees {
            for node in tree {
                if let RawNode::Split { f, .. } = node {
                    used.push(f);
                }
            }
        }
        let unknown: Vec<&str> = raw
            .feature_names
            .iter()
            .map(String::as_str)
            .chain(used.iter().copied())
            .filter(|n| !registry::contains(n))
            .collect();
        if !unknown.is_empty() {
            return Err(fail(format!("unknown feature names: {}", unknown.join(", "))));
        }
        let wrong: Vec<&str> = raw
            .feature_names
            .iter()
            .map(String::as_str)
            .filter(|n| !feature_modality_ok(n, raw.modality))
            .collect();
        if !wrong.is_empty() {
            return Err(fail(format!("features not valid for a {} model: {}", raw.modality, wrong.join(", "))));
        }
        let index: HashMap<&str, usize> = raw
            .feature_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        if index.len() != raw.feature_names.len() {
            return Err(fail("feature_names contains duplicates".into()));
        }
        let undeclared: Vec<&str> = used.iter().copied().filter(|n| !index.contains_key(n)).collect();
        if !undeclared.is_empty() {
            return Err(fail(format!("split features missing from feature_names: {}", undeclared.join(", "))));
        }

        let mut trees = Vec::with_capacity(raw.trees.len());
        for (ti, tree) in raw.trees.iter().enumerate() {
            if tree.is_empty() {
                return Err(fail(format!("tree {ti} has no nodes")));
            }
            let nodes: Vec<TreeNode> = tree
                .iter()
                .enumerate()
                .map(|(ni, node)| match node {
                    RawNode::Leaf { leaf } if leaf.is_finite() => Ok(TreeNode::Leaf(*leaf)),
                    RawNode::Leaf { .. } => Err(fail(format!("tree {ti} node {ni}: leaf score must be finite"))),
                    RawNode::Split { f, t, l, r, d } => {
                        if *l >= tree.len() || *r >= tree.len() {
                            return Err(fail(format!(
                                "tree {ti} node {ni}: child index out of range (l={l}, r={r}, {} nodes)",
                                tree.len()
                            )));
                        }
                        if t.is_nan() {
                            return Err(fail(format!("tree {ti} node {ni}: threshold is NaN")));
                        }
                        Ok(TreeNode::Split {
                            feature: index[f.as_str()],
                            threshold: *t,
                            left: *l,
                            right: *r,
                            default_branch: *d,
                        })
                    }
                })
                .collect::<Result<_>>()?;
            check_acyclic(&nodes).map_err(|ni| fail(format!("tree {ti}: node {ni} is reachable twice (cycle or shared subtree)")))?;
            trees.push(nodes);
        }
        Ok(Self {
            modality: raw.modality,
            base_score: raw.base_score,
            window_len_s: raw.window_len_s,
            fs_hz: raw.fs_hz,
            feature_names: raw.feature_names,
            trees,
        })
    }

    pub fn to_json_string(&self) -> String {
        let raw = RawModel {
            modality: self.modality,
            base_score: self.base_score,
            window_len_s: self.window_len_s,
            fs_hz: self.fs_hz,
            feature_names: self.feature_names.clone(),
            trees: self
                .trees
                .iter()
                .map(|t| {
                    t.iter()
                        .map(|n| match n {
                            TreeNode::Leaf(s) => RawNode::Leaf { leaf: *s },
                            TreeNode::Split {
                                feature,
                                threshold,
                                left,
                                right,
                                default_branch,
                            } => RawNode::Split {
                                f: self.feature_names[*feature].clone(),
                                t: *threshold,
                                l: *left,
                                r: *right,
                                d: *default_branch,
                            },
                        })
                        .collect()
                })
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("model serializes")
    }

    /// The features this model may request, in registry order.
    pub fn mask(&self) -> FeatureMask {
        FeatureMask::new(self.feature_names.iter().cloned()).expect("validated at load")
    }

    /// Sum of base score and every tree's leaf score.
    pub fn margin(&self, features: &FeatureVector) -> Result<f64> {
        let mut z = self.base_score;
        for tree in &self.trees {
            let mut i = 0;
            loop {
                match &tree[i] {
                    TreeNode::Leaf(s) => {
                        z += s;
                        break;
                    }
                    TreeNode::Split {
                        feature,
                        threshold,
                        left,
                        right,
                        default_branch,
                    } => {
                        let name = &self.feature_names[*feature];
                        i = match features.get(name).filter(|v| !v.is_nan()) {
                            Some(v) if v < *threshold => *left,
                            Some(_) => *right,
                            None => match default_branch {
                                Some(Branch::Left) => *left,
                                Some(Branch::Right) => *right,
                                None => {
                                    return Err(Error::Inference(format!(
                                        "feature {name} is missing and the split has no default branch"
                                    )))
                                }
                            },
                        };
                    }
                }
            }
        }
        Ok(z)
    }

    /// Cough probability, logistic of the margin.
    pub fn predict_proba(&self, features: &FeatureVector) -> Result<f64> {
        Ok(logistic(self.margin(features)?))
    }

    pub fn n_internal_nodes(&self) -> usize {
        self.trees
            .iter()
            .flatten()
            .filter(|n| matches!(n, TreeNode::Split { .. }))
            .count()
    }
}

/// Walk from node 0; Err(node) when some node is entered twice.
fn check_acyclic(nodes: &[TreeNode]) -> std::result::Result<(), usize> {
    let mut seen = vec![false; nodes.len()];
    let mut stack = vec![0usize];
    while let Some(i) = stack.pop() {
        if std::mem::replace(&mut seen[i], true) {
            return Err(i);
        }
        if let TreeNode::Split { left, right, .. } = nodes[i] {
            stack.push(left);
            stack.push(right);
        }
    }
    Ok(())
}

pub fn load_model(path: &Path) -> Result<TreeEnsemble> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::ModelLoad {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    TreeEnsemble::from_json_str(&text, &path.display().to_string())
}

/// Split count of one feature and its share of all splits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Importance {
    pub name: String,
    pub count: usize,
    pub percent: f64,
}

/// Split counts for every declared feature, in registry order.
pub fn feature_importance(model: &TreeEnsemble) -> Vec<Importance> {
    let mut counts = vec![0usize; model.feature_names.len()];
    for node in model.trees.iter().flatten() {
        if let TreeNode::Split { feature, .. } = node {
            counts[*feature] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    let mut out: Vec<Importance> = model
        .feature_names
        .iter()
        .zip(counts)
        .map(|(n, c)| Importance {
            name: n.clone(),
            count: c,
            percent: if total > 0 { 100.0 * c as f64 / total as f64 } else { 0.0 },
        })
        .collect();
    out.sort_by_key(|i| registry::registry_index(&i.name));
    out
}

/// Drop the `k` least-used features. Among equal counts, names later in the
/// registry go first. The survivors are returned in registry order.
pub fn eliminate_lowest(importances: &[Importance], k: usize) -> Result<Vec<String>> {
    if k >= importances.len() {
        return Err(Error::invalid(
            "inference",
            format!("cannot eliminate {k} of {} features", importances.len()),
        ));
    }
    let mut order: Vec<&Importance> = importances.iter().collect();
    order.sort_by(|a, b| {
        a.count
            .cmp(&b.count)
            .then(registry::registry_index(&b.name).cmp(&registry::registry_index(&a.name)))
    });
    let mut keep: Vec<String> = order[k..].iter().map(|i| i.name.clone()).collect();
    keep.sort_by_key(|n| registry::registry_index(n));
    Ok(keep)
}

/// Recursive elimination: remove `step` features per round (fewer in the last
/// round) until `target` remain. `importance_of` supplies fresh importances
/// for the current feature set each round, as a retrained model would.
pub fn eliminate_to<F>(mut names: Vec<String>, target: usize, step: usize, mut importance_of: F) -> Result<Vec<String>>
where
    F: FnMut(&[String]) -> Vec<Importance>,
{
    if step == 0 || target == 0 || target > names.len() {
        return Err(Error::invalid(
            "inference",
            format!("cannot reduce {} features to {target} in steps of {step}", names.len()),
        ));
    }
    while names.len() > target {
        let k = step.min(names.len() - target);
        names = eliminate_lowest(&importance_of(&names), k)?;
    }
    Ok(names)
}
