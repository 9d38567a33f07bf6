use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::classification::{ClassificationTable, DEFAULT_RARE_CLASS_CUTOFF};
use crate::error::{Error, Result};
use crate::math::sqrt;
use crate::schema::{ContextVector, FeatureKind, FeatureSchema};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreprocessSpec {
    pub rare_class_cutoff: f64,
    pub binarize_categoricals: bool,
    pub standardize_continuous: bool,
}

impl Default for PreprocessSpec {
    fn default() -> Self {
        Self { rare_class_cutoff: DEFAULT_RARE_CLASS_CUTOFF, binarize_categoricals: true, standardize_continuous: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Column {
    Indicator { feature: usize, level: u32 },
    LevelIndex { feature: usize },
    Real { feature: usize, mean: f64, scale: f64 },
}

/// Maps contexts to real vectors of dimension `M'` for the linear baselines.
///
/// Categorical features become one indicator per level; continuous features are centred and
/// scaled by batch statistics. Tree policies never see this encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    schema: Arc<FeatureSchema>,
    columns: Vec<Column>,
    dropped: Vec<usize>,
}

impl Encoder {
    /// Fits the column layout and standardisation statistics on `contexts` (population
    /// variance). Constant continuous features are dropped when standardising.
    pub fn fit<'a>(
        schema: Arc<FeatureSchema>,
        contexts: impl IntoIterator<Item = &'a ContextVector>,
        spec: &PreprocessSpec,
    ) -> Result<Self> {
        let contexts: Vec<&ContextVector> = contexts.into_iter().collect();
        for ctx in &contexts {
            schema.validate(ctx)?;
        }
        let n = contexts.len() as f64;
        let column = |f: usize| contexts.iter().map(move |c| c.get(f).as_real().unwrap_or(0.0));
        let mut columns = Vec::new();
        let mut dropped = Vec::new();
        for (f, feature) in schema.features().iter().enumerate() {
            match &feature.kind {
                FeatureKind::Categorical(levels) if spec.binarize_categoricals => {
                    columns.extend((0..levels.len() as u32).map(|level| Column::Indicator { feature: f, level }))
                }
                FeatureKind::Categorical(_) => columns.push(Column::LevelIndex { feature: f }),
                FeatureKind::Continuous if spec.standardize_continuous => {
                    if contexts.is_empty() {
                        return Err(Error::EmptyTrainingSet);
                    }
                    let mean = column(f).sum::<f64>() / n;
                    let var = column(f).map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
                    if var <= 1e-24 * (1.0 + mean * mean) {
                        dropped.push(f);
                    } else {
                        columns.push(Column::Real { feature: f, mean, scale: sqrt(var) });
                    }
                }
                FeatureKind::Continuous => columns.push(Column::Real { feature: f, mean: 0.0, scale: 1.0 }),
            }
        }
        Ok(Self { schema, columns, dropped })
    }

    /// `M'`, the encoded dimension.
    pub fn dimension(&self) -> usize {
        self.columns.len()
    }

    /// Continuous features removed for having zero variance.
    pub fn dropped_features(&self) -> &[usize] {
        &self.dropped
    }

    pub fn schema(&self) -> &Arc<FeatureSchema> {
        &self.schema
    }

    pub fn encode(&self, context: &ContextVector) -> Result<Vec<f64>> {
        self.schema.validate(context)?;
        Ok(self
            .columns
            .iter()
            .map(|c| match *c {
                Column::Indicator { feature, level } => {
                    if context.get(feature).as_level() == Some(level) {
                        1.0
                    } else {
                        0.0
                    }
                }
                Column::LevelIndex { feature } => context.get(feature).as_level().unwrap_or(0) as f64,
                Column::Real { feature, mean, scale } => (context.get(feature).as_real().unwrap_or(0.0) - mean) / scale,
            })
            .collect())
    }
}

/// Encodes every row of `table`, returning the fitted encoder and the row-major real matrix.
pub fn preprocess_for_linear(table: &ClassificationTable, spec: &PreprocessSpec) -> Result<(Encoder, Vec<Vec<f64>>)> {
    if table.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let encoder = Encoder::fit(table.schema().clone(), table.contexts(), spec)?;
    let rows = table.contexts().iter().map(|c| encoder.encode(c)).collect::<Result<_>>()?;
    if encoder.dimension() == 0 {
        return Err(Error::InvalidSchema(format!("all {} features were dropped", table.schema().dimension())));
    }
    Ok((encoder, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{Feature, FeatureValue};
    use alloc::vec;

    #[test]
    fn counts_columns_and_standardizes() {
        let schema = Arc::new(
            FeatureSchema::new(vec![
                Feature::categorical("c", ["r", "g", "b"]),
                Feature::continuous("x"),
                Feature::continuous("k"),
            ])
            .unwrap(),
        );
        let rows: Vec<ContextVector> = (0..30)
            .map(|i| {
                ContextVector::new(vec![
                    FeatureValue::Level(i % 3),
                    FeatureValue::Real(i as f64 * 0.7 + 3.0),
                    FeatureValue::Real(2.0),
                ])
            })
            .collect();
        let enc = Encoder::fit(schema, &rows, &PreprocessSpec::default()).unwrap();
        assert_eq!(enc.dimension(), 4);
        assert_eq!(enc.dropped_features(), [2]);
        let encoded: Vec<Vec<f64>> = rows.iter().map(|r| enc.encode(r).unwrap()).collect();
        let mean = encoded.iter().map(|r| r[3]).sum::<f64>() / 30.0;
        let var = encoded.iter().map(|r| (r[3] - mean) * (r[3] - mean)).sum::<f64>() / 30.0;
        assert!(mean.abs() < 1e-9 && (var - 1.0).abs() < 1e-9);
        assert_eq!(&encoded[4][..3], &[0.0, 1.0, 0.0]);
    }
}
