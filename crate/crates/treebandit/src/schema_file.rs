//! Shared `feature` line syntax of schema declarations and truth files:
//!
//! ```text
//! feature <name> continuous
//! feature <name> categorical <level>,<level>,...
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use treebandit_core::schema::{Feature, FeatureKind, FeatureSchema};

use crate::error::{io, parse_error, Result};

/// Parses the arguments after `feature`.
pub(crate) fn parse_feature(args: &[&str]) -> std::result::Result<Feature, String> {
    match args {
        [name, "continuous"] => Ok(Feature::continuous(*name)),
        [name, "categorical", levels] => {
            let levels: Vec<&str> = levels.split(',').map(str::trim).collect();
            if levels.iter().any(|l| l.is_empty()) {
                return Err(format!("feature `{name}` has an empty level name"));
            }
            Ok(Feature::categorical(*name, levels))
        }
        _ => Err("expected `feature <name> continuous` or `feature <name> categorical <l1,l2,...>`".into()),
    }
}

pub(crate) fn format_feature(out: &mut String, feature: &Feature) {
    match &feature.kind {
        FeatureKind::Continuous => writeln!(out, "feature {} continuous", feature.name),
        FeatureKind::Categorical(levels) => writeln!(out, "feature {} categorical {}", feature.name, levels.join(",")),
    }
    .expect("writing to a string");
}

/// Non-blank, non-comment lines with their 1-based line numbers, untrimmed on the left.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end()))
        .filter(|(_, l)| !l.trim_start().is_empty() && !l.trim_start().starts_with('#'))
}

/// A dataset's declared features and label column.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaDeclaration {
    pub schema: Arc<FeatureSchema>,
    pub label: String,
}

impl SchemaDeclaration {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut features = Vec::new();
        let mut label = None;
        for (line, content) in content_lines(text) {
            let words: Vec<&str> = content.split_whitespace().collect();
            match words.as_slice() {
                ["feature", args @ ..] => features.push(parse_feature(args).map_err(|m| parse_error(path, line, m))?),
                ["label", name] => {
                    if label.replace(name.to_string()).is_some() {
                        return Err(parse_error(path, line, "label declared twice"));
                    }
                }
                _ => return Err(parse_error(path, line, format!("unrecognised declaration `{content}`"))),
            }
        }
        let label = label.ok_or_else(|| parse_error(path, 0, "no `label <column>` line"))?;
        if features.iter().any(|f| f.name == label) {
            return Err(parse_error(path, 0, format!("label `{label}` is also declared as a feature")));
        }
        let schema = FeatureSchema::new(features).map_err(|e| parse_error(path, 0, e.to_string()))?;
        Ok(Self { schema: Arc::new(schema), label })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path: PathBuf = path.as_ref().to_path_buf();
        let text = std::fs::read_to_string(&path).map_err(io(&path))?;
        Self::parse(&text, &path)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for f in self.schema.features() {
            format_feature(&mut out, f);
        }
        writeln!(out, "label {}", self.label).expect("writing to a string");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = "# adult subset\nfeature age continuous\nfeature sex categorical Female,Male\n\nlabel income\n";
        let d = SchemaDeclaration::parse(text, Path::new("s.txt")).unwrap();
        assert_eq!(d.schema.dimension(), 2);
        assert_eq!(d.label, "income");
        assert_eq!(SchemaDeclaration::parse(&d.to_text(), Path::new("s.txt")).unwrap(), d);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = SchemaDeclaration::parse("feature a continuous\nfeature b ordinal\nlabel y\n", Path::new("s.txt")).unwrap_err();
        assert!(err.to_string().starts_with("s.txt:2:"), "{err}");
        assert!(SchemaDeclaration::parse("feature a continuous\n", Path::new("s.txt")).is_err());
        assert!(SchemaDeclaration::parse("feature a continuous\nlabel a\n", Path::new("s.txt")).is_err());
    }
}
