//! CSV datasets with a header row, read against a [`SchemaDeclaration`].

use std::path::Path;

use treebandit_core::env::{ClassificationTable, PreprocessSpec};
use treebandit_core::schema::{ContextVector, FeatureKind, FeatureValue};

use crate::error::{parse_error, Error, Result};
use crate::schema_file::SchemaDeclaration;

/// What ingestion kept and dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestReport {
    /// `K` after rare-class removal.
    pub classes: usize,
    /// `M`, the number of declared features.
    pub features: usize,
    pub rows: usize,
    pub dropped_rows: usize,
    pub dropped_classes: Vec<String>,
}

impl std::fmt::Display for IngestReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "K={} M={} rows={}", self.classes, self.features, self.rows)?;
        if self.dropped_rows > 0 {
            write!(f, " (dropped {} rows of rare classes {})", self.dropped_rows, self.dropped_classes.join(","))?;
        }
        Ok(())
    }
}

fn is_missing(field: &str) -> bool {
    field.is_empty() || field == "?"
}

/// Reads `path`, validates every row, and removes classes below `spec.rare_class_cutoff`.
///
/// Columns not named in the declaration are ignored. Missing values (`""` or `"?"`) are
/// errors; there is no imputation.
pub fn ingest_csv(path: impl AsRef<Path>, declaration: &SchemaDeclaration, spec: &PreprocessSpec) -> Result<(ClassificationTable, IngestReport)> {
    let path = path.as_ref();
    let csv_err = |source: csv::Error| match source.position() {
        Some(pos) => parse_error(path, pos.line() as usize, source.to_string()),
        None => Error::Csv { path: path.to_path_buf(), source },
    };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(csv_err)?;
    let header = reader.headers().map_err(csv_err)?.clone();
    let column = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| parse_error(path, 1, format!("column `{name}` not in header")))
    };
    let schema = &declaration.schema;
    let feature_columns = schema.features().iter().map(|f| column(&f.name)).collect::<Result<Vec<_>>>()?;
    let label_column = column(&declaration.label)?;

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let mut values = Vec::with_capacity(feature_columns.len());
        for (feature, &c) in schema.features().iter().zip(&feature_columns) {
            let field = &record[c];
            if is_missing(field) {
                return Err(parse_error(path, line, format!("missing value for `{}`", feature.name)));
            }
            values.push(match &feature.kind {
                FeatureKind::Continuous => {
                    let x: f64 = field
                        .parse()
                        .map_err(|_| parse_error(path, line, format!("`{}`: `{field}` is not a number", feature.name)))?;
                    if !x.is_finite() {
                        return Err(parse_error(path, line, format!("`{}`: non-finite value", feature.name)));
                    }
                    FeatureValue::Real(x)
                }
                FeatureKind::Categorical(_) => {
                    let level = feature
                        .level_index(field)
                        .ok_or_else(|| parse_error(path, line, format!("`{}`: unknown level `{field}`", feature.name)))?;
                    FeatureValue::Level(level as u32)
                }
            });
        }
        let label = &record[label_column];
        if is_missing(label) {
            return Err(parse_error(path, line, "missing label"));
        }
        rows.push((ContextVector::new(values), label.to_string()));
    }
    if rows.is_empty() {
        return Err(parse_error(path, 1, "no data rows"));
    }

    let mut all_classes: Vec<&str> = rows.iter().map(|(_, l)| l.as_str()).collect();
    all_classes.sort_unstable();
    all_classes.dedup();
    let all_classes: Vec<String> = all_classes.into_iter().map(str::to_string).collect();
    let total = rows.len();
    let table = ClassificationTable::from_named_labels(schema.clone(), rows, spec.rare_class_cutoff)?;
    let dropped_classes = all_classes.into_iter().filter(|c| !table.class_names().contains(c)).collect();
    let report = IngestReport {
        classes: table.num_classes(),
        features: schema.dimension(),
        rows: table.len(),
        dropped_rows: total - table.len(),
        dropped_classes,
    };
    Ok((table, report))
}
