//! The end-to-end parser: training and applying all four stages.
//!
//! Stage order at parse time is fixed: connectives are identified first,
//! their arguments and senses next, and non-explicit relations last,
//! because the set of sentence pairs stage 4 looks at depends on which
//! explicit relations were emitted. Training has no such coupling — every
//! stage trains on gold upstream decisions.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use crate::arguments::{self, identify_arguments};
use crate::connective::{self, identify_connectives};
use crate::corpus::{
    write_lexicon, ConnectiveLexiconEntry, DiscourseRelation, Document, RelationType, SenseLabel,
};
use crate::maxent::{self, LabeledInstance, MaxentError, MaxentModel, TrainConfig};
use crate::sense::{self, classify_explicit, classify_nonexplicit, nonexplicit_relation};

/// Tunable knobs of the parser. Defaults follow the reference setup:
/// unit-variance L2 regularization, a gradient tolerance of 1e-4, at most
/// 200 iterations, Arg1 candidates within 10 dependency steps, the 100
/// most frequent Arg2 words as stage-4 indicators, and a 0.5 decision
/// threshold for stage 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ParserConfig {
    pub train: TrainConfig,
    pub step_bound: usize,
    pub indicator_k: usize,
    pub threshold: f64,
}

impl Default for ParserConfig {
    fn default() -> ParserConfig {
        ParserConfig {
            train: TrainConfig::default(),
            step_bound: 10,
            indicator_k: 100,
            threshold: 0.5,
        }
    }
}

impl ParserConfig {
    /// Applies one `key=value` setting. Unknown keys and unparsable
    /// values are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("invalid value {value:?} for {key}"))
        }
        match key {
            "l2_sigma2" => self.train.l2_sigma2 = parse(key, value)?,
            "grad_tol" => self.train.grad_tol = parse(key, value)?,
            "max_iters" => self.train.max_iters = parse(key, value)?,
            "step_bound" => self.step_bound = parse(key, value)?,
            "indicator_k" => self.indicator_k = parse(key, value)?,
            "threshold" => self.threshold = parse(key, value)?,
            other => return Err(format!("unknown configuration key {other:?}")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.train.l2_sigma2.is_finite() && self.train.l2_sigma2 > 0.0) {
            return Err("l2_sigma2 must be positive and finite".into());
        }
        if !(self.train.grad_tol.is_finite() && self.train.grad_tol > 0.0) {
            return Err("grad_tol must be positive and finite".into());
        }
        if self.train.max_iters == 0 {
            return Err("max_iters must be at least 1".into());
        }
        if self.indicator_k == 0 {
            return Err("indicator_k must be at least 1".into());
        }
        if !(self.threshold.is_finite() && self.threshold > 0.0 && self.threshold < 1.0) {
            return Err("threshold must lie strictly between 0 and 1".into());
        }
        Ok(())
    }

    /// The effective settings as sorted key/value text, for manifests.
    pub fn summary(&self) -> BTreeMap<String, String> {
        BTreeMap::from([
            ("l2_sigma2".into(), self.train.l2_sigma2.to_string()),
            ("grad_tol".into(), self.train.grad_tol.to_string()),
            ("max_iters".into(), self.train.max_iters.to_string()),
            ("step_bound".into(), self.step_bound.to_string()),
            ("indicator_k".into(), self.indicator_k.to_string()),
            ("threshold".into(), self.threshold.to_string()),
        ])
    }
}

/// The five trained classifiers plus the stage-4 indicator words.
#[derive(Debug)]
pub struct TrainedModels {
    pub connective: MaxentModel,
    pub arg1: MaxentModel,
    pub arg2: MaxentModel,
    pub explicit_sense: MaxentModel,
    pub nonexplicit: MaxentModel,
    pub indicators: Vec<String>,
}

/// A non-fatal observation made while training or parsing one document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub doc: String,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.doc, self.message)
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("the {stage} stage cannot be trained: {reason}")]
    Stage { stage: &'static str, reason: String },
}

fn stage_reason(error: MaxentError) -> String {
    match error {
        MaxentError::EmptyData => "the corpus yields no training instances".into(),
        MaxentError::SingleLabel(label) => {
            format!("all training instances carry the same label ({label:?})")
        }
        other => other.to_string(),
    }
}

fn train_stage(
    stage: &'static str,
    instances: Vec<LabeledInstance>,
    config: &TrainConfig,
) -> Result<MaxentModel, TrainError> {
    maxent::train(&instances, *config).map_err(|e| TrainError::Stage {
        stage,
        reason: stage_reason(e),
    })
}

/// Trains all four stages on gold annotations.
pub fn train_all(
    corpus: &[(Document, Vec<DiscourseRelation>)],
    lexicon: &[ConnectiveLexiconEntry],
    config: &ParserConfig,
) -> Result<(TrainedModels, Vec<Diagnostic>), TrainError> {
    let mut diagnostics = Vec::new();

    let mut stage1 = Vec::new();
    for (doc, gold) in corpus {
        stage1.extend(connective::training_instances(doc, gold, lexicon));
    }
    let connective = train_stage("connective", stage1, &config.train)?;

    let mut arg1_instances = Vec::new();
    let mut arg2_instances = Vec::new();
    for (doc, gold) in corpus {
        for relation in gold {
            if relation.relation_type != RelationType::Explicit {
                continue;
            }
            let conn = relation
                .connective_span
                .as_ref()
                .expect("explicit relations carry a connective span");
            let category = sense::lexicon_category(lexicon, doc, conn);
            let instances = arguments::training_instances(
                doc,
                conn,
                category,
                &relation.arg1,
                &relation.arg2,
                config.step_bound,
            );
            arg1_instances.extend(instances.arg1);
            arg2_instances.extend(instances.arg2);
            diagnostics.extend(instances.notes.into_iter().map(|message| Diagnostic {
                doc: doc.id.clone(),
                message,
            }));
        }
    }
    let arg1 = train_stage("Arg1 head", arg1_instances, &config.train)?;
    let arg2 = train_stage("Arg2 head", arg2_instances, &config.train)?;

    let mut stage3 = Vec::new();
    for (doc, gold) in corpus {
        stage3.extend(sense::explicit_training_instances(doc, gold, lexicon));
    }
    let explicit_sense = train_stage("explicit sense", stage3, &config.train)?;

    let indicators = sense::build_indicator_lexicon(corpus, config.indicator_k);
    let mut stage4 = Vec::new();
    for (doc, gold) in corpus {
        stage4.extend(sense::nonexplicit_training_instances(doc, gold, &indicators));
    }
    let nonexplicit = train_stage("non-explicit", stage4, &config.train)?;

    Ok((
        TrainedModels {
            connective,
            arg1,
            arg2,
            explicit_sense,
            nonexplicit,
            indicators,
        },
        diagnostics,
    ))
}

/// Parses one document into discourse relations, sorted by the position
/// of Arg2. Unparseable connectives are dropped with a diagnostic rather
/// than failing the document.
pub fn parse_document(
    doc: &Document,
    lexicon: &[ConnectiveLexiconEntry],
    models: &TrainedModels,
    config: &ParserConfig,
) -> (Vec<DiscourseRelation>, Vec<Diagnostic>) {
    let mut relations = Vec::new();
    let mut diagnostics = Vec::new();
    let mut note = |message: String| {
        diagnostics.push(Diagnostic {
            doc: doc.id.clone(),
            message,
        })
    };

    for cand in identify_connectives(doc, lexicon, &models.connective, config.threshold) {
        match identify_arguments(doc, &cand, &models.arg1, &models.arg2, config.step_bound) {
            Ok(extracted) => {
                for message in extracted.notes {
                    note(message);
                }
                let class = classify_explicit(
                    doc,
                    &cand.span,
                    Some(cand.entry.category),
                    &models.explicit_sense,
                );
                relations.push(DiscourseRelation {
                    relation_type: RelationType::Explicit,
                    connective_span: Some(cand.span),
                    arg1: extracted.arg1,
                    arg2: extracted.arg2,
                    sense: Some(SenseLabel::class_only(class)),
                });
            }
            Err(reason) => note(format!(
                "dropped connective '{}': {reason}",
                cand.span.surface_lower(doc)
            )),
        }
    }

    for pair in sense::nonexplicit_pairs(doc, &relations) {
        let label = classify_nonexplicit(doc, pair, &models.indicators, &models.nonexplicit);
        if let Some(relation) = nonexplicit_relation(doc, pair, label) {
            relations.push(relation);
        }
    }

    relations.sort_by_key(|r| (r.arg2.first(), r.arg1.first()));
    for relation in &relations {
        debug_assert!(relation.check_shape().is_ok(), "parser emitted a malformed relation");
    }
    (relations, diagnostics)
}

// ---------------------------------------------------------------------------
// Model bundle files
// ---------------------------------------------------------------------------

pub const CONNECTIVE_MODEL_FILE: &str = "connective.model";
pub const ARG1_MODEL_FILE: &str = "arg1.model";
pub const ARG2_MODEL_FILE: &str = "arg2.model";
pub const EXPLICIT_SENSE_MODEL_FILE: &str = "sense.model";
pub const NONEXPLICIT_MODEL_FILE: &str = "nonexplicit.model";
pub const INDICATORS_FILE: &str = "indicators.txt";
pub const LEXICON_FILE: &str = "lexicon.txt";
pub const BASELINE_FILE: &str = "baseline1.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {file}: {source}")]
    Io { file: String, source: io::Error },
    #[error("cannot load {file}: {source}")]
    Model { file: String, source: MaxentError },
}

impl LoadError {
    pub fn is_version_mismatch(&self) -> bool {
        matches!(
            self,
            LoadError::Model {
                source: MaxentError::VersionMismatch { .. },
                ..
            }
        )
    }
}

/// Writes the five model files, the indicator list and the lexicon into
/// `dir`. Existing files are overwritten; outputs are byte-deterministic.
pub fn save_models(
    dir: &Path,
    models: &TrainedModels,
    lexicon: &[ConnectiveLexiconEntry],
) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    for (file, model) in model_files(models) {
        fs::write(dir.join(file), model.serialize())?;
    }
    let mut indicators = String::new();
    for word in &models.indicators {
        indicators.push_str(word);
        indicators.push('\n');
    }
    fs::write(dir.join(INDICATORS_FILE), indicators)?;
    let mut lexicon_file = fs::File::create(dir.join(LEXICON_FILE))?;
    lexicon_file.write_all(write_lexicon(lexicon).as_bytes())?;
    Ok(())
}

fn model_files(models: &TrainedModels) -> [(&'static str, &MaxentModel); 5] {
    [
        (CONNECTIVE_MODEL_FILE, &models.connective),
        (ARG1_MODEL_FILE, &models.arg1),
        (ARG2_MODEL_FILE, &models.arg2),
        (EXPLICIT_SENSE_MODEL_FILE, &models.explicit_sense),
        (NONEXPLICIT_MODEL_FILE, &models.nonexplicit),
    ]
}

fn load_model(dir: &Path, file: &'static str) -> Result<MaxentModel, LoadError> {
    let bytes = fs::read(dir.join(file)).map_err(|source| LoadError::Io {
        file: file.to_string(),
        source,
    })?;
    MaxentModel::deserialize(&bytes).map_err(|source| LoadError::Model {
        file: file.to_string(),
        source,
    })
}

/// Loads the bundle written by [`save_models`].
pub fn load_models(dir: &Path) -> Result<TrainedModels, LoadError> {
    let indicators_path = dir.join(INDICATORS_FILE);
    let text = fs::read_to_string(&indicators_path).map_err(|source| LoadError::Io {
        file: INDICATORS_FILE.to_string(),
        source,
    })?;
    let indicators = text.lines().map(str::to_string).collect();
    Ok(TrainedModels {
        connective: load_model(dir, CONNECTIVE_MODEL_FILE)?,
        arg1: load_model(dir, ARG1_MODEL_FILE)?,
        arg2: load_model(dir, ARG2_MODEL_FILE)?,
        explicit_sense: load_model(dir, EXPLICIT_SENSE_MODEL_FILE)?,
        nonexplicit: load_model(dir, NONEXPLICIT_MODEL_FILE)?,
        indicators,
    })
}
