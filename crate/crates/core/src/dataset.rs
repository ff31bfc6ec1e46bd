//! Annotated sample container, line-delimited dataset files, and synthetic
//! dataset generation by ancestral sampling from a model.
//!
//! File format: the first line is a JSON header object declaring
//! `num_points`, `expression_labels`, `pose_labels`, `partition` and
//! `normalization`; every following non-empty line is one JSON record with
//! `truth` and `measurement` as flat `[x0, y0, ...]` arrays plus integer
//! `expression` and `pose` indices.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::HierarchicalModel;
use crate::shape::{ComponentPartition, LandmarkSet, NormalizationSpec, NUM_POINTS};

/// One training or evaluation sample: true shape, measured shape, labels.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedSample {
    pub truth: LandmarkSet,
    pub measurement: LandmarkSet,
    pub expression: usize,
    pub pose: usize,
}

/// Hidden values behind one synthesized sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentRecord {
    pub expression: usize,
    pub pose: usize,
    /// Component states in `Component::ALL` order.
    pub states: [usize; 4],
}

/// An immutable collection of annotated samples with its partition,
/// label vocabulary and normalization convention.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<AnnotatedSample>,
    partition: ComponentPartition,
    normalization: NormalizationSpec,
    expression_labels: Vec<String>,
    pose_labels: Vec<String>,
}

impl Dataset {
    pub fn new(
        samples: Vec<AnnotatedSample>,
        partition: ComponentPartition,
        normalization: NormalizationSpec,
        expression_labels: Vec<String>,
        pose_labels: Vec<String>,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput {
                context: "Dataset::new",
            });
        }
        partition.validate()?;
        let n_points = partition.num_points();
        normalization.validate(n_points)?;
        for (i, s) in samples.iter().enumerate() {
            if s.truth.len() != n_points || s.measurement.len() != n_points {
                return Err(Error::SchemaViolation {
                    record: i,
                    field: "truth/measurement",
                    message: format!(
                        "expected {n_points} points, got {}/{}",
                        s.truth.len(),
                        s.measurement.len()
                    ),
                });
            }
            if s.expression >= expression_labels.len() {
                return Err(Error::CardinalityMismatch {
                    record: i,
                    field: "expression",
                    value: s.expression,
                    bound: expression_labels.len(),
                });
            }
            if s.pose >= pose_labels.len() {
                return Err(Error::CardinalityMismatch {
                    record: i,
                    field: "pose",
                    value: s.pose,
                    bound: pose_labels.len(),
                });
            }
        }
        Ok(Self {
            samples,
            partition,
            normalization,
            expression_labels,
            pose_labels,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[AnnotatedSample] {
        &self.samples
    }

    pub fn sample(&self, i: usize) -> &AnnotatedSample {
        &self.samples[i]
    }

    pub fn partition(&self) -> &ComponentPartition {
        &self.partition
    }

    pub fn normalization(&self) -> &NormalizationSpec {
        &self.normalization
    }

    pub fn expression_labels(&self) -> &[String] {
        &self.expression_labels
    }

    pub fn pose_labels(&self) -> &[String] {
        &self.pose_labels
    }

    pub fn num_expressions(&self) -> usize {
        self.expression_labels.len()
    }

    pub fn num_poses(&self) -> usize {
        self.pose_labels.len()
    }

    /// A new dataset containing the given sample indices, in order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let samples = indices
            .iter()
            .map(|&i| {
                self.samples.get(i).cloned().ok_or(Error::IndexOutOfRange {
                    context: "Dataset::subset",
                    index: i,
                    size: self.samples.len(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(
            samples,
            self.partition.clone(),
            self.normalization.clone(),
            self.expression_labels.clone(),
            self.pose_labels.clone(),
        )
    }

    /// Checks that a model and this dataset agree on partition, labels and
    /// point count.
    pub fn check_compatible(&self, model: &HierarchicalModel) -> Result<()> {
        if model.partition() != &self.partition {
            return Err(Error::ModelDataMismatch {
                what: "partition",
                model: format!("{:?}", model.partition()),
                dataset: format!("{:?}", self.partition),
            });
        }
        if model.expression_labels() != self.expression_labels.as_slice() {
            return Err(Error::ModelDataMismatch {
                what: "expression labels",
                model: model.expression_labels().join(","),
                dataset: self.expression_labels.join(","),
            });
        }
        if model.pose_labels() != self.pose_labels.as_slice() {
            return Err(Error::ModelDataMismatch {
                what: "pose labels",
                model: model.pose_labels().join(","),
                dataset: self.pose_labels.join(","),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct HeaderLine {
    num_points: usize,
    expression_labels: Vec<String>,
    pose_labels: Vec<String>,
    partition: ComponentPartition,
    normalization: NormalizationSpec,
}

#[derive(Debug, Serialize, Deserialize)]
struct RecordLine {
    truth: Vec<f64>,
    measurement: Vec<f64>,
    expression: usize,
    pose: usize,
}

/// Serializes a dataset to the line-delimited text format.
pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    let text = dataset_to_string(dataset);
    let mut f = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    f.write_all(text.as_bytes())
        .map_err(|e| Error::io(path.display().to_string(), e))
}

/// The exact file content for a dataset (one JSON object per line).
pub fn dataset_to_string(dataset: &Dataset) -> String {
    let header = HeaderLine {
        num_points: dataset.partition.num_points(),
        expression_labels: dataset.expression_labels.clone(),
        pose_labels: dataset.pose_labels.clone(),
        partition: dataset.partition.clone(),
        normalization: dataset.normalization.clone(),
    };
    let mut out = serde_json::to_string(&header).expect("header serialization");
    out.push('\n');
    for s in &dataset.samples {
        let record = RecordLine {
            truth: s.truth.flatten().iter().copied().collect(),
            measurement: s.measurement.flatten().iter().copied().collect(),
            expression: s.expression,
            pose: s.pose,
        };
        out.push_str(&serde_json::to_string(&record).expect("record serialization"));
        out.push('\n');
    }
    out
}

/// Loads a dataset file, validating every record. Errors name the offending
/// record index and field.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    dataset_from_str(&text)
}

pub fn dataset_from_str(text: &str) -> Result<Dataset> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header_line) = lines.next().ok_or(Error::ParseError {
        location: "line 1".into(),
        message: "missing header line".into(),
    })?;
    let header: HeaderLine = serde_json::from_str(header_line).map_err(|e| Error::ParseError {
        location: "header".into(),
        message: e.to_string(),
    })?;
    header.partition.validate()?;
    if header.partition.num_points() != header.num_points {
        return Err(Error::ParseError {
            location: "header".into(),
            message: format!(
                "num_points {} disagrees with partition covering {}",
                header.num_points,
                header.partition.num_points()
            ),
        });
    }
    if header.num_points != NUM_POINTS {
        return Err(Error::ParseError {
            location: "header".into(),
            message: format!("num_points must be {NUM_POINTS}, got {}", header.num_points),
        });
    }

    let mut samples = Vec::new();
    for (record_idx, (line_no, line)) in lines.enumerate() {
        let record: RecordLine = serde_json::from_str(line).map_err(|e| Error::ParseError {
            location: format!("line {} (record {record_idx})", line_no + 1),
            message: e.to_string(),
        })?;
        let expect = 2 * header.num_points;
        if record.truth.len() != expect {
            return Err(Error::SchemaViolation {
                record: record_idx,
                field: "truth",
                message: format!("expected {expect} values, got {}", record.truth.len()),
            });
        }
        if record.measurement.len() != expect {
            return Err(Error::SchemaViolation {
                record: record_idx,
                field: "measurement",
                message: format!("expected {expect} values, got {}", record.measurement.len()),
            });
        }
        if record.expression >= header.expression_labels.len() {
            return Err(Error::CardinalityMismatch {
                record: record_idx,
                field: "expression",
                value: record.expression,
                bound: header.expression_labels.len(),
            });
        }
        if record.pose >= header.pose_labels.len() {
            return Err(Error::CardinalityMismatch {
                record: record_idx,
                field: "pose",
                value: record.pose,
                bound: header.pose_labels.len(),
            });
        }
        let truth = LandmarkSet::from_flat(&record.truth).map_err(|e| Error::SchemaViolation {
            record: record_idx,
            field: "truth",
            message: e.to_string(),
        })?;
        let measurement =
            LandmarkSet::from_flat(&record.measurement).map_err(|e| Error::SchemaViolation {
                record: record_idx,
                field: "measurement",
                message: e.to_string(),
            })?;
        samples.push(AnnotatedSample {
            truth,
            measurement,
            expression: record.expression,
            pose: record.pose,
        });
    }
    Dataset::new(
        samples,
        header.partition,
        header.normalization,
        header.expression_labels,
        header.pose_labels,
    )
}

/// Draws `n` samples from the generative direction of a model: labels and
/// states from the discrete network, then true shape, then measurement.
/// Deterministic given the seed.
pub fn synthesize(model: &HierarchicalModel, n: usize, seed: u64) -> Result<Dataset> {
    synthesize_with_latents(model, n, seed).map(|(d, _)| d)
}

/// [`synthesize`], also returning the sampled latent values per record.
pub fn synthesize_with_latents(
    model: &HierarchicalModel,
    n: usize,
    seed: u64,
) -> Result<(Dataset, Vec<LatentRecord>)> {
    if n == 0 {
        return Err(Error::EmptyInput {
            context: "synthesize",
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_points = model.num_points();
    let mut samples = Vec::with_capacity(n);
    let mut latents = Vec::with_capacity(n);
    for _ in 0..n {
        let (config, truth_flat, meas_flat) = model.sample_one(&mut rng);
        let truth = LandmarkSet::with_len(
            truth_flat.as_slice().chunks_exact(2).map(|c| (c[0], c[1])).collect(),
            n_points,
        )?;
        let measurement = LandmarkSet::with_len(
            meas_flat.as_slice().chunks_exact(2).map(|c| (c[0], c[1])).collect(),
            n_points,
        )?;
        samples.push(AnnotatedSample {
            truth,
            measurement,
            expression: config[0],
            pose: config[1],
        });
        latents.push(LatentRecord {
            expression: config[0],
            pose: config[1],
            states: [config[2], config[3], config[4], config[5]],
        });
    }
    let dataset = Dataset::new(
        samples,
        model.partition().clone(),
        model.normalization().clone(),
        model.expression_labels().to_vec(),
        model.pose_labels().to_vec(),
    )?;
    Ok((dataset, latents))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shape::Component;

    fn toy_dataset() -> Dataset {
        let mk = |offset: f64| {
            LandmarkSet::new((0..NUM_POINTS).map(|i| (i as f64 + offset, -(i as f64))).collect())
                .unwrap()
        };
        let samples = vec![
            AnnotatedSample {
                truth: mk(0.0),
                measurement: mk(0.1),
                expression: 0,
                pose: 0,
            },
            AnnotatedSample {
                truth: mk(1.0),
                measurement: mk(1.1),
                expression: 2,
                pose: 1,
            },
        ];
        Dataset::new(
            samples,
            ComponentPartition::default_26(),
            NormalizationSpec::default_26(),
            vec!["neutral".into(), "happy".into(), "surprised".into()],
            vec!["frontal".into(), "left".into()],
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_identity() {
        let d = toy_dataset();
        let text = dataset_to_string(&d);
        let back = dataset_from_str(&text).unwrap();
        assert_eq!(d, back);
        // And the serialized form itself is stable.
        assert_eq!(text, dataset_to_string(&back));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.jsonl");
        let d = toy_dataset();
        save_dataset(&d, &path).unwrap();
        assert_eq!(load_dataset(&path).unwrap(), d);
    }

    #[test]
    fn short_record_is_schema_violation_naming_the_record() {
        let d = toy_dataset();
        let mut text = dataset_to_string(&d);
        // Truncate the second record's truth array to 25 points (50 values).
        let lines: Vec<&str> = text.lines().collect();
        let record: serde_json::Value = serde_json::from_str(lines[2]).unwrap();
        let mut record = record;
        let arr = record["truth"].as_array_mut().unwrap();
        arr.truncate(50);
        let patched = format!("{}\n{}\n{}\n", lines[0], lines[1], record);
        text = patched;
        match dataset_from_str(&text).unwrap_err() {
            Error::SchemaViolation { record, field, .. } => {
                assert_eq!(record, 1);
                assert_eq!(field, "truth");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn expression_at_cardinality_is_rejected() {
        let d = toy_dataset();
        let text = dataset_to_string(&d);
        let patched = text.replace("\"expression\":2", "\"expression\":3");
        match dataset_from_str(&patched).unwrap_err() {
            Error::CardinalityMismatch {
                record,
                field,
                value,
                bound,
            } => {
                assert_eq!(record, 1);
                assert_eq!(field, "expression");
                assert_eq!(value, 3);
                assert_eq!(bound, 3);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn garbage_line_is_parse_error() {
        let d = toy_dataset();
        let mut text = dataset_to_string(&d);
        text.push_str("not json\n");
        assert!(matches!(
            dataset_from_str(&text).unwrap_err(),
            Error::ParseError { .. }
        ));
    }

    #[test]
    fn subset_preserves_metadata() {
        let d = toy_dataset();
        let s = d.subset(&[1]).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.sample(0), d.sample(1));
        assert_eq!(s.expression_labels(), d.expression_labels());
        assert_eq!(
            s.partition().indices(Component::Nose),
            d.partition().indices(Component::Nose)
        );
    }
}
