//! Fast-and-frugal trees: depth-d binary classifiers where every level has an
//! exit leaf. All 2^d exit policies are grown and the best on training data
//! is kept.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::evalrig::ConfusionMatrix;
use crate::features::FeatureMatrix;
use crate::{Error, Goal, Result};

pub const DEFAULT_DEPTH: usize = 4;
pub const MAX_DEPTH: usize = 10;

/// Percentiles of a feature's values that serve as candidate thresholds.
const THRESHOLD_PERCENTILES: [f64; 9] = [10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0];

/// One exit label per level (`true` = exits as positive). The final leaf
/// takes the negation of the last bit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExitPolicy {
    bits: Vec<bool>,
}

impl ExitPolicy {
    pub fn new(bits: Vec<bool>) -> Self {
        ExitPolicy { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn depth(&self) -> usize {
        self.bits.len()
    }

    pub fn final_label(&self) -> bool {
        !self.bits.last().copied().unwrap_or(true)
    }
}

impl fmt::Display for ExitPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for ExitPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("bad exit policy digit '{other}'"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(ExitPolicy::new)
    }
}

impl Serialize for ExitPolicy {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExitPolicy {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// All 2^d policies in lexicographic order of their bit strings.
pub fn enumerate_policies(depth: usize) -> Result<Vec<ExitPolicy>> {
    if depth == 0 || depth > MAX_DEPTH {
        return Err(Error::Config(format!(
            "tree depth must be in 1..={MAX_DEPTH}, got {depth}"
        )));
    }
    Ok((0u32..1 << depth)
        .map(|n| ExitPolicy::new((0..depth).rev().map(|bit| n >> bit & 1 == 1).collect()))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = ">")]
    Greater,
    #[serde(rename = "<=")]
    LessOrEqual,
}

impl Direction {
    pub fn symbol(self) -> &'static str {
        match self {
            Direction::Greater => ">",
            Direction::LessOrEqual => "<=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cue {
    pub feature: usize,
    pub direction: Direction,
    /// `null` in JSON stands for +infinity (a pass-through cue).
    #[serde(with = "threshold_serde")]
    pub threshold: f64,
}

mod threshold_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &f64, s: S) -> Result<S::Ok, S::Error> {
        if t.is_finite() {
            s.serialize_f64(*t)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl Cue {
    /// A cue nothing satisfies, used once training rows run out.
    pub fn pass_through() -> Self {
        Cue {
            feature: 0,
            direction: Direction::Greater,
            threshold: f64::INFINITY,
        }
    }

    pub fn is_pass_through(&self) -> bool {
        self.direction == Direction::Greater && self.threshold == f64::INFINITY
    }

    pub fn matches(&self, row: &[f64]) -> bool {
        let v = row[self.feature];
        match self.direction {
            Direction::Greater => v > self.threshold,
            Direction::LessOrEqual => v <= self.threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrugalTree {
    pub policy: ExitPolicy,
    pub cues: Vec<Cue>,
    pub goal: Goal,
    pub training_score: f64,
    pub n_features: usize,
}

impl FrugalTree {
    pub fn depth(&self) -> usize {
        self.cues.len()
    }

    /// Level at which the row exits; `depth()` means the final leaf.
    pub fn exit_level(&self, row: &[f64]) -> Result<usize> {
        if row.len() != self.n_features {
            return Err(Error::LengthMismatch {
                expected: self.n_features,
                got: row.len(),
            });
        }
        Ok(self
            .cues
            .iter()
            .position(|c| c.matches(row))
            .unwrap_or(self.cues.len()))
    }

    pub fn predict(&self, row: &[f64]) -> Result<bool> {
        let level = self.exit_level(row)?;
        Ok(self
            .policy
            .bits()
            .get(level)
            .copied()
            .unwrap_or_else(|| self.policy.final_label()))
    }

    /// Distinct features referenced by real (non pass-through) cues, in
    /// level order.
    pub fn referenced_features(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for cue in self.cues.iter().filter(|c| !c.is_pass_through()) {
            if !out.contains(&cue.feature) {
                out.push(cue.feature);
            }
        }
        out
    }
}

pub fn predict(tree: &FrugalTree, row: &[f64]) -> Result<bool> {
    tree.predict(row)
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Scores one exit as a rule for the class it assigns: precision is the
/// purity of the exit side, recall the share of that class it captures.
fn level_score(exit_pos: usize, exit_neg: usize, pos: usize, neg: usize, exit_label: bool, goal: Goal) -> f64 {
    let (hit, miss, class_total) = if exit_label {
        (exit_pos, exit_neg, pos)
    } else {
        (exit_neg, exit_pos, neg)
    };
    let cm = ConfusionMatrix {
        tp: hit,
        fp: miss,
        fn_: class_total - hit,
        tn: 0,
    };
    cm.score(goal)
}

/// Picks the cue for one level.
///
/// Candidates are every feature, both directions, and thresholds at the 10th
/// to 90th percentiles of the feature among `rows`. Each candidate's exit
/// side is scored by `goal` with respect to `exit_label`'s class among
/// `rows`. Ties go to the lower feature index, then the smaller threshold,
/// then `>` before `<=`.
pub fn learn_level_cue(x: &FeatureMatrix, y: &[bool], rows: &[usize], exit_label: bool, goal: Goal) -> Cue {
    assert!(!rows.is_empty(), "learn_level_cue needs remaining rows");
    assert!(x.n_features > 0, "learn_level_cue needs at least one feature");

    let first = x.row(rows[0]);
    if rows.iter().all(|&r| x.row(r) == first) {
        return Cue {
            feature: 0,
            direction: Direction::Greater,
            threshold: first[0],
        };
    }

    let pos_total = rows.iter().filter(|&&r| y[r]).count();
    let neg_total = rows.len() - pos_total;
    let mut best: Option<(f64, Cue)> = None;
    let mut pairs: Vec<(f64, bool)> = Vec::with_capacity(rows.len());
    let mut values: Vec<f64> = Vec::with_capacity(rows.len());
    let mut pos_prefix: Vec<usize> = Vec::with_capacity(rows.len() + 1);

    for f in 0..x.n_features {
        pairs.clear();
        pairs.extend(rows.iter().map(|&r| (x.get(r, f), y[r])));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        values.clear();
        values.extend(pairs.iter().map(|p| p.0));
        pos_prefix.clear();
        pos_prefix.push(0);
        for &(_, label) in &pairs {
            pos_prefix.push(pos_prefix.last().unwrap() + label as usize);
        }

        let mut thresholds: Vec<f64> = THRESHOLD_PERCENTILES
            .iter()
            .map(|&p| percentile(&values, p))
            .collect();
        thresholds.dedup();

        for &t in &thresholds {
            // rows with value <= t
            let below = values.partition_point(|&v| v <= t);
            let below_pos = pos_prefix[below];
            let below_neg = below - below_pos;
            let above_pos = pos_total - below_pos;
            let above_neg = neg_total - below_neg;
            for (direction, exit_pos, exit_neg) in [
                (Direction::Greater, above_pos, above_neg),
                (Direction::LessOrEqual, below_pos, below_neg),
            ] {
                let score = level_score(exit_pos, exit_neg, pos_total, neg_total, exit_label, goal);
                if best.map_or(true, |(s, _)| score > s) {
                    best = Some((
                        score,
                        Cue {
                            feature: f,
                            direction,
                            threshold: t,
                        },
                    ));
                }
            }
        }
    }
    best.expect("at least one candidate").1
}

fn check_two_classes(y: &[bool]) -> Result<()> {
    let pos = y.iter().filter(|&&l| l).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::DegenerateFold(format!(
            "{} rows, {pos} positive",
            y.len()
        )));
    }
    Ok(())
}

/// Grows the tree for one exit policy: each level learns a cue on the rows
/// still remaining, and rows matching it leave the tree there.
pub fn grow_tree(x: &FeatureMatrix, y: &[bool], policy: &ExitPolicy, goal: Goal) -> Result<FrugalTree> {
    if x.n_docs != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.n_docs,
            got: y.len(),
        });
    }
    check_two_classes(y)?;
    if x.n_features == 0 {
        return Err(Error::Config("tree needs at least one feature".into()));
    }

    let mut remaining: Vec<usize> = (0..x.n_docs).collect();
    let mut cues = Vec::with_capacity(policy.depth());
    for &exit_label in policy.bits() {
        let cue = if remaining.is_empty() {
            Cue::pass_through()
        } else {
            learn_level_cue(x, y, &remaining, exit_label, goal)
        };
        remaining.retain(|&r| !cue.matches(x.row(r)));
        cues.push(cue);
    }

    let mut tree = FrugalTree {
        policy: policy.clone(),
        cues,
        goal,
        training_score: 0.0,
        n_features: x.n_features,
    };
    let mut cm = ConfusionMatrix::default();
    for (i, row) in x.rows().enumerate() {
        cm.record(tree.predict(row)?, y[i]);
    }
    tree.training_score = cm.score(goal);
    Ok(tree)
}

/// Grows one tree per exit policy, in policy order.
pub fn grow_all(x: &FeatureMatrix, y: &[bool], depth: usize, goal: Goal) -> Result<Vec<FrugalTree>> {
    let policies = enumerate_policies(depth)?;
    policies
        .par_iter()
        .map(|p| grow_tree(x, y, p, goal))
        .collect()
}

/// The tree with the highest training score; ties go to the
/// lexicographically smallest policy.
pub fn train_best(x: &FeatureMatrix, y: &[bool], depth: usize, goal: Goal) -> Result<FrugalTree> {
    let trees = grow_all(x, y, depth, goal)?;
    let mut best: Option<FrugalTree> = None;
    for tree in trees {
        if best
            .as_ref()
            .map_or(true, |b| tree.training_score > b.training_score)
        {
            best = Some(tree);
        }
    }
    Ok(best.expect("2^d >= 2 trees"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdFormat {
    /// Two decimals, for people.
    Display,
    /// Shortest representation that parses back to the same value.
    Exact,
}

/// Renders the tree as `if / else if / else` rule lines, optionally followed
/// by a blank line and one `Topic i: words...` line per referenced feature.
pub fn render_rules(tree: &FrugalTree, feature_names: &[String], topic_words: Option<&[Vec<String>]>) -> String {
    render_rules_with(tree, feature_names, topic_words, ThresholdFormat::Display)
}

pub fn render_rules_with(
    tree: &FrugalTree,
    feature_names: &[String],
    topic_words: Option<&[Vec<String>]>,
    format: ThresholdFormat,
) -> String {
    let name = |f: usize| {
        feature_names
            .get(f)
            .cloned()
            .unwrap_or_else(|| format!("f{f}"))
    };
    let mut out = String::new();
    for (level, (cue, &label)) in tree.cues.iter().zip(tree.policy.bits()).enumerate() {
        let keyword = if level == 0 { "if" } else { "else if" };
        let threshold = match format {
            ThresholdFormat::Display => format!("{:.2}", cue.threshold),
            ThresholdFormat::Exact => format!("{}", cue.threshold),
        };
        out.push_str(&format!(
            "{keyword} {} {} {threshold} then {label}\n",
            name(cue.feature),
            cue.direction.symbol(),
        ));
    }
    out.push_str(&format!("else {}\n", tree.policy.final_label()));

    if let Some(words) = topic_words {
        let referenced = tree.referenced_features();
        if !referenced.is_empty() {
            out.push('\n');
        }
        for f in referenced {
            let list = words.get(f).map(|w| w.join(" ")).unwrap_or_default();
            out.push_str(&format!("Topic {}: {list}\n", f + 1));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureKind;

    fn matrix(rows: Vec<Vec<f64>>) -> FeatureMatrix {
        let n = rows.first().map_or(0, Vec::len);
        let ids = (0..rows.len()).map(|i| i.to_string()).collect();
        FeatureMatrix::from_rows(
            FeatureKind::Topic,
            rows,
            (1..=n).map(|i| format!("topic {i}")).collect(),
            ids,
        )
    }

    #[test]
    fn policies() {
        let d1: Vec<String> = enumerate_policies(1).unwrap().iter().map(|p| p.to_string()).collect();
        assert_eq!(d1, ["0", "1"]);
        let d2: Vec<String> = enumerate_policies(2).unwrap().iter().map(|p| p.to_string()).collect();
        assert_eq!(d2, ["00", "01", "10", "11"]);
        let d4 = enumerate_policies(4).unwrap();
        assert_eq!(d4.len(), 16);
        assert_eq!(d4[0].to_string(), "0000");
        assert_eq!(d4[15].to_string(), "1111");
        assert!(enumerate_policies(11).is_err());
        assert!(enumerate_policies(0).is_err());
    }

    #[test]
    fn policy_structure() {
        let p: ExitPolicy = "0111".parse().unwrap();
        assert_eq!(p.bits(), &[false, true, true, true]);
        assert!(!p.final_label());
        let p: ExitPolicy = "1000".parse().unwrap();
        assert!(p.final_label());
    }

    #[test]
    fn separating_feature_recall() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 20.0]).collect();
        let y: Vec<bool> = (0..20).map(|i| i as f64 / 20.0 > 0.5).collect();
        let x = matrix(rows);
        let all: Vec<usize> = (0..20).collect();
        let cue = learn_level_cue(&x, &y, &all, true, Goal::Recall);
        let captured = all
            .iter()
            .filter(|&&r| y[r])
            .all(|&r| cue.matches(x.row(r)));
        assert!(captured, "{cue:?}");
    }

    #[test]
    fn tie_break_prefers_lower_feature() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, i as f64]).collect();
        let y = vec![true; 10];
        let x = matrix(rows);
        let all: Vec<usize> = (0..10).collect();
        let cue = learn_level_cue(&x, &y, &all, true, Goal::Recall);
        assert_eq!(cue.feature, 0);
    }

    #[test]
    fn identical_rows_degenerate_cue() {
        let x = matrix(vec![vec![0.3, 0.7]; 5]);
        let y = vec![true, false, true, false, true];
        let cue = learn_level_cue(&x, &y, &[0, 1, 2, 3, 4], true, Goal::Precision);
        assert_eq!(
            cue,
            Cue {
                feature: 0,
                direction: Direction::Greater,
                threshold: 0.3
            }
        );
    }

    #[test]
    fn single_class_training_rejected() {
        let x = matrix(vec![vec![0.1], vec![0.2]]);
        let err = grow_tree(&x, &[true, true], &"0000".parse().unwrap(), Goal::Recall).unwrap_err();
        assert!(matches!(err, Error::DegenerateFold(_)));
    }

    #[test]
    fn exhausted_rows_become_pass_through() {
        // '<=' at the top percentile sends every row out at level 1
        let x = matrix(vec![vec![0.0], vec![1.0], vec![1.0], vec![1.0]]);
        let y = vec![true, false, true, true];
        let tree = grow_tree(&x, &y, &"1000".parse().unwrap(), Goal::Recall).unwrap();
        assert_eq!(tree.cues[0].direction, Direction::LessOrEqual);
        assert_eq!(tree.cues[0].threshold, 1.0);
        assert_eq!(tree.depth(), 4);
        assert!(tree.cues[1..].iter().all(Cue::is_pass_through));
        assert_eq!(tree.training_score, 1.0);
    }

    #[test]
    fn predict_length_mismatch() {
        let x = matrix(vec![vec![0.1, 0.9], vec![0.9, 0.1], vec![0.2, 0.8]]);
        let tree = train_best(&x, &[false, true, false], 2, Goal::Recall).unwrap();
        assert!(matches!(
            tree.predict(&[0.1]),
            Err(Error::LengthMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn render_rule_layout() {
        let tree = FrugalTree {
            policy: "0111".parse().unwrap(),
            cues: vec![
                Cue { feature: 0, direction: Direction::Greater, threshold: 0.8 },
                Cue { feature: 6, direction: Direction::Greater, threshold: 0.6 },
                Cue { feature: 2, direction: Direction::Greater, threshold: 0.65 },
                Cue { feature: 4, direction: Direction::LessOrEqual, threshold: 0.5 },
            ],
            goal: Goal::Precision,
            training_score: 0.7,
            n_features: 10,
        };
        let names: Vec<String> = (1..=10).map(|i| format!("topic {i}")).collect();
        let words: Vec<Vec<String>> = (0..10)
            .map(|t| (0..8).map(|w| format!("w{t}{w}")).collect())
            .collect();
        let text = render_rules(&tree, &names, Some(&words));
        let expected = "\
if topic 1 > 0.80 then false
else if topic 7 > 0.60 then true
else if topic 3 > 0.65 then true
else if topic 5 <= 0.50 then true
else false

Topic 1: w00 w01 w02 w03 w04 w05 w06 w07
Topic 7: w60 w61 w62 w63 w64 w65 w66 w67
Topic 3: w20 w21 w22 w23 w24 w25 w26 w27
Topic 5: w40 w41 w42 w43 w44 w45 w46 w47
";
        assert_eq!(text, expected);
        assert!(!tree.predict(&[0.9, 0., 0., 0., 0., 0., 0., 0., 0., 0.]).unwrap());
        assert!(!tree.predict(&[0.0, 0., 0., 0., 0.9, 0., 0., 0., 0., 0.]).unwrap());
    }

    #[test]
    fn tree_json_round_trip() {
        let tree = FrugalTree {
            policy: "10".parse().unwrap(),
            cues: vec![
                Cue { feature: 1, direction: Direction::LessOrEqual, threshold: 0.25 },
                Cue::pass_through(),
            ],
            goal: Goal::Recall,
            training_score: 0.5,
            n_features: 3,
        };
        let json = serde_json::to_string(&tree).unwrap();
        assert!(json.contains("\"policy\":\"10\""));
        let back: FrugalTree = serde_json::from_str(&json).unwrap();
        assert_eq!(back, tree);
    }
}
