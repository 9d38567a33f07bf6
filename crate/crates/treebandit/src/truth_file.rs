//! Ground-truth files for the simulator: `feature` lines, then one `action <name>` line per
//! action followed by its tree, one node per line, children indented two spaces deeper than
//! their parent (left child first):
//!
//! ```text
//! action golf
//!   split age_over_35 in {no}
//!     leaf p=0.05
//!     leaf p=0.6
//! ```

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use treebandit_core::env::TruthSpec;
use treebandit_core::schema::{FeatureKind, FeatureSchema};
use treebandit_core::tree::{DecisionTree, Leaf, Node, SplitRule};

use crate::error::{io, parse_error, Result};
use crate::schema_file::{content_lines, format_feature, parse_feature};

/// The shipped default truth, identical to [`TruthSpec::sports_default`].
pub const SPORTS_TRUTH: &str = include_str!("../data/sports_truth.txt");

struct Line<'a> {
    number: usize,
    indent: usize,
    text: &'a str,
}

pub fn parse_truth(text: &str, path: &Path) -> Result<TruthSpec> {
    let lines: Vec<Line> = content_lines(text)
        .map(|(number, l)| {
            let body = l.trim_start();
            Line { number, indent: l.len() - body.len(), text: body }
        })
        .collect();
    let mut features = Vec::new();
    let mut pos = 0;
    while pos < lines.len() && lines[pos].text.starts_with("feature ") {
        let args: Vec<&str> = lines[pos].text.split_whitespace().skip(1).collect();
        features.push(parse_feature(&args).map_err(|m| parse_error(path, lines[pos].number, m))?);
        pos += 1;
    }
    let first = lines.get(pos).map_or(0, |l| l.number);
    let schema = Arc::new(FeatureSchema::new(features).map_err(|e| parse_error(path, first, e.to_string()))?);

    let mut actions = Vec::new();
    while pos < lines.len() {
        let line = &lines[pos];
        let name = match line.text.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["action", name] if line.indent == 0 => name.to_string(),
            _ => return Err(parse_error(path, line.number, format!("expected `action <name>`, found `{}`", line.text))),
        };
        pos += 1;
        let mut nodes = Vec::new();
        parse_node(&lines, &mut pos, 2, &schema, &mut nodes, path, line.number)?;
        let tree = DecisionTree::from_nodes(schema.clone(), nodes).map_err(|e| parse_error(path, line.number, e.to_string()))?;
        actions.push((name, tree));
    }
    Ok(TruthSpec::new(schema, actions)?)
}

/// Parses the subtree starting at `lines[*pos]`, which must sit at `indent`.
fn parse_node(
    lines: &[Line],
    pos: &mut usize,
    indent: usize,
    schema: &FeatureSchema,
    nodes: &mut Vec<Node>,
    path: &Path,
    parent_line: usize,
) -> Result<usize> {
    let Some(line) = lines.get(*pos).filter(|l| l.indent == indent) else {
        let at = lines.get(*pos).map_or(parent_line, |l| l.number);
        return Err(parse_error(path, at, format!("expected a node indented by {indent} spaces")));
    };
    *pos += 1;
    let index = nodes.len();
    let err = |m: String| parse_error(path, line.number, m);
    if let Some(rest) = line.text.strip_prefix("leaf") {
        let p = rest
            .split_whitespace()
            .find_map(|kv| kv.strip_prefix("p="))
            .ok_or_else(|| err("leaf without `p=<probability>`".into()))?;
        let p: f64 = p.parse().map_err(|_| err(format!("`{p}` is not a probability")))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(err(format!("leaf probability {p} outside [0, 1]")));
        }
        nodes.push(Node::Leaf(Leaf::with_probability(p)));
        return Ok(index);
    }
    let rule = parse_split(line.text, schema).map_err(err)?;
    nodes.push(Node::Leaf(Leaf::from_counts(0, 0)));
    let left = parse_node(lines, pos, indent + 2, schema, nodes, path, line.number)?;
    let right = parse_node(lines, pos, indent + 2, schema, nodes, path, line.number)?;
    nodes[index] = Node::Split { rule, left, right };
    Ok(index)
}

fn parse_split(text: &str, schema: &FeatureSchema) -> std::result::Result<SplitRule, String> {
    let words: Vec<&str> = text.splitn(4, ' ').collect();
    let (name, op, arg) = match words.as_slice() {
        ["split", name, op, arg] => (*name, *op, arg.trim()),
        _ => return Err(format!("expected `split <feature> in {{..}}` or `split <feature> <= <x>`, found `{text}`")),
    };
    let feature = schema.index_of(name).ok_or_else(|| format!("unknown feature `{name}`"))?;
    match (op, &schema.feature(feature).kind) {
        ("in", FeatureKind::Categorical(levels)) => {
            let inner = arg.strip_prefix('{').and_then(|a| a.strip_suffix('}')).ok_or("level set must be braced")?;
            let mut left = vec![false; levels.len()];
            for level in inner.split(',').map(str::trim) {
                let l = levels.iter().position(|x| x == level).ok_or_else(|| format!("`{name}` has no level `{level}`"))?;
                left[l] = true;
            }
            Ok(SplitRule::Levels { feature, left })
        }
        ("<=", FeatureKind::Continuous) => {
            let threshold = arg.parse().map_err(|_| format!("`{arg}` is not a threshold"))?;
            Ok(SplitRule::Threshold { feature, threshold })
        }
        _ => Err(format!("split `{op}` does not fit feature `{name}`")),
    }
}

pub fn load_truth(path: impl AsRef<Path>) -> Result<TruthSpec> {
    let path = path.as_ref();
    parse_truth(&std::fs::read_to_string(path).map_err(io(path))?, path)
}

pub fn format_truth(truth: &TruthSpec) -> String {
    let mut out = String::new();
    for f in truth.schema().features() {
        format_feature(&mut out, f);
    }
    for (name, tree) in truth.action_names().iter().zip(truth.trees()) {
        writeln!(out, "action {name}").expect("writing to a string");
        format_node(&mut out, tree, 0, 1);
    }
    out
}

fn format_node(out: &mut String, tree: &DecisionTree, i: usize, depth: usize) {
    let pad = "  ".repeat(depth);
    match &tree.nodes()[i] {
        Node::Leaf(leaf) => writeln!(out, "{pad}leaf p={}", leaf.estimate),
        Node::Split { rule, left, right } => {
            let feature = tree.schema().feature(rule.feature());
            match rule {
                SplitRule::Threshold { threshold, .. } => writeln!(out, "{pad}split {} <= {threshold}", feature.name),
                SplitRule::Levels { left: set, .. } => {
                    let FeatureKind::Categorical(levels) = &feature.kind else { unreachable!("validated tree") };
                    let names: Vec<&str> = levels.iter().zip(set).filter(|(_, &l)| l).map(|(n, _)| n.as_str()).collect();
                    writeln!(out, "{pad}split {} in {{{}}}", feature.name, names.join(","))
                }
            }
            .expect("writing to a string");
            format_node(out, tree, *left, depth + 1);
            format_node(out, tree, *right, depth + 1);
            return;
        }
    }
    .expect("writing to a string");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_file_is_the_default_truth() {
        let parsed = parse_truth(SPORTS_TRUTH, Path::new("sports_truth.txt")).unwrap();
        assert_eq!(parsed, TruthSpec::sports_default());
    }

    #[test]
    fn format_round_trips() {
        let truth = TruthSpec::sports_default();
        let text = format_truth(&truth);
        assert_eq!(parse_truth(&text, Path::new("t")).unwrap(), truth);
    }

    #[test]
    fn malformed_trees_report_lines() {
        let bad = "feature a categorical n,y\naction x\n  split a in {n}\n    leaf p=0.5\n";
        let err = parse_truth(bad, Path::new("t")).unwrap_err().to_string();
        assert!(err.starts_with("t:3:"), "{err}");
        let bad = "feature a categorical n,y\naction x\n  leaf p=1.5\n";
        assert!(parse_truth(bad, Path::new("t")).unwrap_err().to_string().starts_with("t:3:"));
        let bad = "feature a categorical n,y\naction x\n  split b in {n}\n    leaf p=0.5\n    leaf p=0.1\n";
        assert!(parse_truth(bad, Path::new("t")).is_err());
    }
}
