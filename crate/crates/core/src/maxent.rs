//! Multinomial logistic regression over sparse binary string features.
//!
//! Every stage of the parser trains one of these: instances are sets of
//! feature strings ("selfCat=IN", "word=because", ...), labels are stage
//! outcomes ("discourse", "head", sense classes). The trainer maximizes the
//! L2-penalized log-likelihood by gradient ascent with a backtracking step
//! rule, entirely deterministically: same instances in, bit-identical
//! weights out.
//!
//! Feature weights live in a |labels| x (|features|+1) table whose last
//! column is a per-class bias. The bias participates in prediction and in
//! the serialized format, but the trainer leaves it at zero: with binary
//! indicator templates the bias is redundant, and keeping it out of the
//! objective makes the toy training problems used as oracles solvable in
//! closed form.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

/// Serialized model format version; bumped on any layout change.
pub const MODEL_FORMAT_VERSION: u32 = 1;

const MODEL_MAGIC: &[u8; 4] = b"DMXM";

#[derive(Debug, Error)]
pub enum MaxentError {
    #[error("training data is empty")]
    EmptyData,
    #[error("training data has a single label {0:?}; need at least two")]
    SingleLabel(String),
    #[error("model format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("model file is corrupt: {0}")]
    Corrupt(String),
    #[error("model has {0}: {1}")]
    Invalid(&'static str, String),
}

// ---------------------------------------------------------------------------
// Features and instances
// ---------------------------------------------------------------------------

/// A set of distinct, non-empty feature strings in canonical (sorted)
/// order, so feature insertion order can never influence a prediction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureVector(Vec<String>);

impl FeatureVector {
    pub fn new(features: impl IntoIterator<Item = String>) -> FeatureVector {
        let set: BTreeSet<String> = features.into_iter().collect();
        for f in &set {
            assert!(!f.is_empty(), "feature strings must be non-empty");
        }
        FeatureVector(set.into_iter().collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> + '_ {
        self.0.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, feature: &str) -> bool {
        self.0.binary_search_by(|f| f.as_str().cmp(feature)).is_ok()
    }
}

#[derive(Debug, Clone)]
pub struct LabeledInstance {
    pub features: FeatureVector,
    pub label: String,
}

impl LabeledInstance {
    pub fn new(features: FeatureVector, label: impl Into<String>) -> LabeledInstance {
        LabeledInstance {
            features,
            label: label.into(),
        }
    }
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Trainer settings. `l2_sigma2` is the Gaussian prior variance: the
/// penalty term is sum(w^2) / (2 * l2_sigma2), so larger values mean weaker
/// regularization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub l2_sigma2: f64,
    pub grad_tol: f64,
    pub max_iters: u32,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l2_sigma2: 1.0,
            grad_tol: 1e-4,
            max_iters: 200,
        }
    }
}

/// What the trainer did, kept alongside the weights for inspection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainInfo {
    pub iterations: u32,
    pub final_objective: f64,
    pub grad_norm: f64,
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

/// A trained classifier: ordered labels, a feature table, and one weight
/// row per label (features in table order, bias last).
#[derive(Debug, Clone)]
pub struct MaxentModel {
    labels: Vec<String>,
    features: Vec<String>,
    feature_index: HashMap<String, usize>,
    /// Row-major |labels| x (|features|+1); last column is the bias.
    weights: Vec<f64>,
    l2_sigma2: f64,
    info: TrainInfo,
}

impl MaxentModel {
    /// Assembles a model from raw parts, validating the shape invariants:
    /// at least two sorted, distinct labels; distinct features; a weight
    /// table of exactly |labels| x (|features|+1) finite values.
    pub fn from_parts(
        labels: Vec<String>,
        features: Vec<String>,
        weights: Vec<f64>,
        l2_sigma2: f64,
        info: TrainInfo,
    ) -> Result<MaxentModel, MaxentError> {
        if labels.len() < 2 {
            return Err(MaxentError::Invalid(
                "too few labels",
                format!("{} label(s)", labels.len()),
            ));
        }
        if labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MaxentError::Invalid(
                "unordered labels",
                "labels must be sorted and distinct".to_string(),
            ));
        }
        let mut feature_index = HashMap::with_capacity(features.len());
        for (i, f) in features.iter().enumerate() {
            if f.is_empty() {
                return Err(MaxentError::Invalid(
                    "an empty feature string",
                    format!("feature {i}"),
                ));
            }
            if feature_index.insert(f.clone(), i).is_some() {
                return Err(MaxentError::Invalid("a duplicate feature", f.clone()));
            }
        }
        let expected = labels.len() * (features.len() + 1);
        if weights.len() != expected {
            return Err(MaxentError::Invalid(
                "a weight table of the wrong shape",
                format!("{} weights for {expected} cells", weights.len()),
            ));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite()) {
            return Err(MaxentError::Invalid(
                "a non-finite weight",
                format!("{w}"),
            ));
        }
        if !(l2_sigma2.is_finite() && l2_sigma2 > 0.0) {
            return Err(MaxentError::Invalid(
                "an invalid prior variance",
                format!("{l2_sigma2}"),
            ));
        }
        Ok(MaxentModel {
            labels,
            features,
            feature_index,
            weights,
            l2_sigma2,
            info,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn info(&self) -> TrainInfo {
        self.info
    }

    pub fn l2_sigma2(&self) -> f64 {
        self.l2_sigma2
    }

    fn stride(&self) -> usize {
        self.features.len() + 1
    }

    pub fn weight(&self, label: &str, feature: &str) -> Option<f64> {
        let l = self.labels.iter().position(|x| x == label)?;
        let f = *self.feature_index.get(feature)?;
        Some(self.weights[l * self.stride() + f])
    }

    pub fn bias(&self, label: &str) -> Option<f64> {
        let l = self.labels.iter().position(|x| x == label)?;
        Some(self.weights[l * self.stride() + self.features.len()])
    }

    /// Per-label scores: bias plus the weights of the known features.
    /// Features absent from the table are ignored.
    fn scores(&self, input: &FeatureVector) -> Vec<f64> {
        let stride = self.stride();
        let mut scores: Vec<f64> = (0..self.labels.len())
            .map(|l| self.weights[l * stride + self.features.len()])
            .collect();
        for f in input.iter() {
            if let Some(&fi) = self.feature_index.get(f) {
                for (l, s) in scores.iter_mut().enumerate() {
                    *s += self.weights[l * stride + fi];
                }
            }
        }
        scores
    }

    /// Probability distribution over labels, aligned with `labels()`.
    /// Always sums to 1 up to floating-point rounding.
    pub fn predict(&self, input: &FeatureVector) -> Vec<f64> {
        softmax(&self.scores(input))
    }

    /// Most probable label; exact ties go to the earlier label in the
    /// model's fixed label order.
    pub fn predict_best(&self, input: &FeatureVector) -> (&str, f64) {
        let probs = self.predict(input);
        let mut best = 0;
        for (i, &p) in probs.iter().enumerate().skip(1) {
            if p > probs[best] {
                best = i;
            }
        }
        (&self.labels[best], probs[best])
    }

    /// Probability of one label; 0.0 when the model does not know it.
    pub fn prob_of(&self, input: &FeatureVector, label: &str) -> f64 {
        match self.labels.iter().position(|l| l == label) {
            Some(i) => self.predict(input)[i],
            None => 0.0,
        }
    }

    // -- serialization -----------------------------------------------------

    /// Binary encoding: magic, version, prior, trainer info, label table,
    /// feature table, then the raw little-endian weight bits. Weights
    /// survive a round trip bit for bit.
    pub fn serialize(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.l2_sigma2.to_le_bytes());
        out.extend_from_slice(&(self.info.iterations as u64).to_le_bytes());
        out.extend_from_slice(&self.info.final_objective.to_le_bytes());
        out.extend_from_slice(&self.info.grad_norm.to_le_bytes());
        write_str_table(&mut out, &self.labels);
        write_str_table(&mut out, &self.features);
        for w in &self.weights {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn deserialize(bytes: &[u8]) -> Result<MaxentModel, MaxentError> {
        let mut r = ByteReader { bytes, at: 0 };
        let magic = r.take(4)?;
        if magic != MODEL_MAGIC {
            return Err(MaxentError::Corrupt("bad magic bytes".to_string()));
        }
        let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
        if version != MODEL_FORMAT_VERSION {
            return Err(MaxentError::VersionMismatch {
                found: version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        let l2_sigma2 = r.f64()?;
        let iterations = r.u64()? as u32;
        let final_objective = r.f64()?;
        let grad_norm = r.f64()?;
        let labels = r.str_table()?;
        let features = r.str_table()?;
        let cells = labels
            .len()
            .checked_mul(features.len() + 1)
            .ok_or_else(|| MaxentError::Corrupt("weight table size overflow".to_string()))?;
        let mut weights = Vec::with_capacity(cells);
        for _ in 0..cells {
            weights.push(r.f64()?);
        }
        if r.at != bytes.len() {
            return Err(MaxentError::Corrupt(format!(
                "{} trailing bytes",
                bytes.len() - r.at
            )));
        }
        MaxentModel::from_parts(
            labels,
            features,
            weights,
            l2_sigma2,
            TrainInfo {
                iterations,
                final_objective,
                grad_norm,
            },
        )
    }
}

fn write_str_table(out: &mut Vec<u8>, table: &[String]) {
    out.extend_from_slice(&(table.len() as u64).to_le_bytes());
    for s in table {
        out.extend_from_slice(&(s.len() as u64).to_le_bytes());
        out.extend_from_slice(s.as_bytes());
    }
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], MaxentError> {
        if self.at + n > self.bytes.len() {
            return Err(MaxentError::Corrupt("unexpected end of file".to_string()));
        }
        let slice = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(slice)
    }

    fn u64(&mut self) -> Result<u64, MaxentError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, MaxentError> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn str_table(&mut self) -> Result<Vec<String>, MaxentError> {
        let n = self.u64()?;
        if n > self.bytes.len() as u64 {
            return Err(MaxentError::Corrupt(format!("string table of {n} entries")));
        }
        let mut table = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let len = self.u64()? as usize;
            let raw = self.take(len)?;
            let s = std::str::from_utf8(raw)
                .map_err(|_| MaxentError::Corrupt("non-UTF-8 string".to_string()))?;
            table.push(s.to_string());
        }
        Ok(table)
    }
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|&s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

fn log_sum_exp(scores: &[f64]) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + scores.iter().map(|&s| (s - max).exp()).sum::<f64>().ln()
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

/// A prepared training problem: indexed instances plus the penalized
/// log-likelihood and its gradient over the trainable parameters (feature
/// weights; the bias column is not part of the optimization). Exposed so
/// tests can check the analytic gradient against finite differences.
pub struct TrainingProblem {
    labels: Vec<String>,
    features: Vec<String>,
    /// (label index, sorted feature indices) per instance.
    instances: Vec<(usize, Vec<usize>)>,
    config: TrainConfig,
}

impl TrainingProblem {
    pub fn new(
        data: &[LabeledInstance],
        config: TrainConfig,
    ) -> Result<TrainingProblem, MaxentError> {
        if data.is_empty() {
            return Err(MaxentError::EmptyData);
        }
        let label_set: BTreeSet<&str> = data.iter().map(|i| i.label.as_str()).collect();
        if label_set.len() < 2 {
            return Err(MaxentError::SingleLabel(
                label_set.iter().next().unwrap().to_string(),
            ));
        }
        let labels: Vec<String> = label_set.iter().map(|s| s.to_string()).collect();
        let feature_set: BTreeSet<&str> = data
            .iter()
            .flat_map(|i| i.features.iter())
            .collect();
        let features: Vec<String> = feature_set.iter().map(|s| s.to_string()).collect();
        let feature_index: HashMap<&str, usize> = features
            .iter()
            .enumerate()
            .map(|(i, f)| (f.as_str(), i))
            .collect();
        let label_index: BTreeMap<&str, usize> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let instances = data
            .iter()
            .map(|inst| {
                let label = label_index[inst.label.as_str()];
                let feats: Vec<usize> = inst.features.iter().map(|f| feature_index[f]).collect();
                (label, feats)
            })
            .collect();
        Ok(TrainingProblem {
            labels,
            features,
            instances,
            config,
        })
    }

    /// Number of trainable parameters: |labels| * |features|.
    pub fn n_params(&self) -> usize {
        self.labels.len() * self.features.len()
    }

    fn instance_scores(&self, w: &[f64], feats: &[usize]) -> Vec<f64> {
        let nf = self.features.len();
        let mut scores = vec![0.0; self.labels.len()];
        for &f in feats {
            for (l, s) in scores.iter_mut().enumerate() {
                *s += w[l * nf + f];
            }
        }
        scores
    }

    /// Penalized log-likelihood at parameter vector `w`.
    pub fn value(&self, w: &[f64]) -> f64 {
        assert_eq!(w.len(), self.n_params());
        let mut total = -w.iter().map(|x| x * x).sum::<f64>() / (2.0 * self.config.l2_sigma2);
        for (label, feats) in &self.instances {
            let scores = self.instance_scores(w, feats);
            total += scores[*label] - log_sum_exp(&scores);
        }
        total
    }

    /// Analytic gradient of `value` at `w`.
    pub fn gradient(&self, w: &[f64]) -> Vec<f64> {
        assert_eq!(w.len(), self.n_params());
        let nf = self.features.len();
        let mut g: Vec<f64> = w.iter().map(|x| -x / self.config.l2_sigma2).collect();
        for (label, feats) in &self.instances {
            let probs = softmax(&self.instance_scores(w, feats));
            for (l, &p) in probs.iter().enumerate() {
                let coeff = if l == *label { 1.0 - p } else { -p };
                for &f in feats {
                    g[l * nf + f] += coeff;
                }
            }
        }
        g
    }

    /// Maximizes the objective by gradient ascent with backtracking.
    /// Starts from zero weights; a step is accepted only if it improves
    /// the objective by the Armijo margin, so the objective never
    /// decreases. Stops when the gradient max-norm drops below
    /// `grad_tol` or after `max_iters` accepted steps.
    pub fn solve(self) -> MaxentModel {
        const ARMIJO: f64 = 1e-4;
        const MIN_STEP: f64 = 1e-15;

        let n = self.n_params();
        let mut w = vec![0.0; n];
        let mut value = self.value(&w);
        let mut grad = self.gradient(&w);
        let mut step = 1.0;
        let mut iterations = 0;

        let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));

        while iterations < self.config.max_iters && max_abs(&grad) >= self.config.grad_tol {
            let g2: f64 = grad.iter().map(|g| g * g).sum();
            let mut accepted = false;
            while step >= MIN_STEP {
                let candidate: Vec<f64> = w
                    .iter()
                    .zip(&grad)
                    .map(|(wi, gi)| wi + step * gi)
                    .collect();
                let cand_value = self.value(&candidate);
                if cand_value >= value + ARMIJO * step * g2 {
                    w = candidate;
                    value = cand_value;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                // No step improves the objective within float precision.
                break;
            }
            grad = self.gradient(&w);
            step = (step * 2.0).min(1024.0);
            iterations += 1;
        }

        let grad_norm = max_abs(&grad);
        let info = TrainInfo {
            iterations,
            final_objective: value,
            grad_norm,
        };

        // Copy the optimized feature weights into the model table, leaving
        // the bias column at zero.
        let nf = self.features.len();
        let stride = nf + 1;
        let mut weights = vec![0.0; self.labels.len() * stride];
        for l in 0..self.labels.len() {
            weights[l * stride..l * stride + nf].copy_from_slice(&w[l * nf..(l + 1) * nf]);
        }
        MaxentModel::from_parts(self.labels, self.features, weights, self.config.l2_sigma2, info)
            .expect("trainer output satisfies model invariants")
    }
}

/// Trains a model on labeled instances. Labels are the distinct labels of
/// the data in sorted order. Fails on empty data or a single label.
pub fn train(data: &[LabeledInstance], config: TrainConfig) -> Result<MaxentModel, MaxentError> {
    Ok(TrainingProblem::new(data, config)?.solve())
}
