//! Factorized interaction recognition.
//!
//! Interaction recognition is decomposed into object classification (taken
//! from the trajectory category) and predicate classification over the three
//! per-segment features. Each feature type feeds an independent two-layer
//! classifier; a hard object-conditioned mask zeroes predicates never seen
//! with the object category in training; masked binary cross entropy trains
//! all branches jointly; fused segment scores are greedily associated into
//! spatio-temporal interaction instances.
//!
//! Training is plain mini-batch gradient descent with hand-written analytic
//! gradients, single-threaded and bit-reproducible for a fixed seed.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureBundle;
use crate::geometry::{FrameSpan, Trajectory};

/// Probabilities are clamped to `[EPS, 1 - EPS]` inside the loss.
pub const PROB_EPSILON: f64 = 1e-7;

/// Ordered object and predicate category sets, plus the distinguished
/// subject (human) category token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LabelSpaceData", into = "LabelSpaceData")]
pub struct LabelSpace {
    objects: Vec<String>,
    predicates: Vec<String>,
    human: String,
    object_index: BTreeMap<String, usize>,
    predicate_index: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LabelSpaceData {
    objects: Vec<String>,
    predicates: Vec<String>,
    human: String,
}

impl From<LabelSpace> for LabelSpaceData {
    fn from(l: LabelSpace) -> Self {
        LabelSpaceData {
            objects: l.objects,
            predicates: l.predicates,
            human: l.human,
        }
    }
}

impl TryFrom<LabelSpaceData> for LabelSpace {
    type Error = Error;
    fn try_from(d: LabelSpaceData) -> Result<Self> {
        LabelSpace::new(d.objects, d.predicates, d.human)
    }
}

impl LabelSpace {
    pub fn new(objects: Vec<String>, predicates: Vec<String>, human: String) -> Result<Self> {
        if objects.is_empty() || predicates.is_empty() {
            return Err(Error::invalid("label space", "empty category set"));
        }
        if human.is_empty() {
            return Err(Error::invalid("label space", "empty human token"));
        }
        let mut object_index = BTreeMap::new();
        for (i, o) in objects.iter().enumerate() {
            if object_index.insert(o.clone(), i).is_some() {
                return Err(Error::invalid(
                    "label space",
                    format!("duplicate object {o:?}"),
                ));
            }
        }
        let mut predicate_index = BTreeMap::new();
        for (i, p) in predicates.iter().enumerate() {
            if predicate_index.insert(p.clone(), i).is_some() {
                return Err(Error::invalid(
                    "label space",
                    format!("duplicate predicate {p:?}"),
                ));
            }
        }
        Ok(LabelSpace {
            objects,
            predicates,
            human,
            object_index,
            predicate_index,
        })
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn predicates(&self) -> &[String] {
        &self.predicates
    }

    pub fn human(&self) -> &str {
        &self.human
    }

    pub fn is_human(&self, category: &str) -> bool {
        category == self.human
    }

    pub fn num_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn num_predicates(&self) -> usize {
        self.predicates.len()
    }

    pub fn object_idx(&self, name: &str) -> Result<usize> {
        self.object_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingToken {
                token: name.to_string(),
                context: Some("object category set".into()),
            })
    }

    pub fn predicate_idx(&self, name: &str) -> Result<usize> {
        self.predicate_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingToken {
                token: name.to_string(),
                context: Some("predicate category set".into()),
            })
    }

    /// Detection/trajectory categories may be any object category or the
    /// human token.
    pub fn is_known_category(&self, name: &str) -> bool {
        name == self.human || self.object_index.contains_key(name)
    }
}

/// Hard attention mask: one binary predicate-feasibility row per object
/// category, set from training co-occurrence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionMask {
    /// `rows[object][predicate]`
    rows: Vec<Vec<bool>>,
}

impl AttentionMask {
    /// A predicate is feasible for an object category iff the pair co-occurs
    /// at least once in `annotations` (an iterator of `(predicate, object)`
    /// label pairs).
    pub fn build<'a, I>(annotations: I, labels: &LabelSpace) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut rows = vec![vec![false; labels.num_predicates()]; labels.num_objects()];
        for (predicate, object) in annotations {
            let o = labels.object_idx(object)?;
            let p = labels.predicate_idx(predicate)?;
            rows[o][p] = true;
        }
        Ok(AttentionMask { rows })
    }

    pub fn all_ones(labels: &LabelSpace) -> Self {
        AttentionMask {
            rows: vec![vec![true; labels.num_predicates()]; labels.num_objects()],
        }
    }

    pub fn row(&self, object_idx: usize) -> &[bool] {
        &self.rows[object_idx]
    }

    pub fn num_objects(&self) -> usize {
        self.rows.len()
    }

    pub fn num_predicates(&self) -> usize {
        self.rows.first().map(|r| r.len()).unwrap_or(0)
    }

    pub fn is_allowed(&self, object_idx: usize, predicate_idx: usize) -> bool {
        self.rows[object_idx][predicate_idx]
    }

    /// Flattened object-major mask over the joint `(object, predicate)` label
    /// space, used by the non-factorized classifier.
    pub fn joint_vector(&self) -> Vec<bool> {
        self.rows.iter().flatten().copied().collect()
    }
}

/// Base per-segment feature types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaseFeature {
    Behavior,
    Motion,
    Semantic,
}

impl BaseFeature {
    fn extract<'a>(&self, bundle: &'a FeatureBundle) -> &'a Array1<f64> {
        match self {
            BaseFeature::Behavior => &bundle.behavior,
            BaseFeature::Motion => &bundle.motion,
            BaseFeature::Semantic => &bundle.semantic,
        }
    }
}

fn concat_features(inputs: &[BaseFeature], bundle: &FeatureBundle) -> Array1<f64> {
    let total: usize = inputs.iter().map(|k| k.extract(bundle).len()).sum();
    let mut out = Array1::zeros(total);
    let mut at = 0usize;
    for kind in inputs {
        let part = kind.extract(bundle);
        out.slice_mut(ndarray::s![at..at + part.len()]).assign(part);
        at += part.len();
    }
    out
}

/// Two-layer perceptron: affine, ReLU, affine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    /// `(hidden, input)`
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    /// `(output, hidden)`
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

struct MlpState {
    z1: Array1<f64>,
    a1: Array1<f64>,
    logits: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

impl Mlp {
    /// Uniform init in `[-1/sqrt(fan_in), +1/sqrt(fan_in)]` from the caller's
    /// seeded generator; draw order is fixed (w1 row-major, b1, w2, b2).
    pub fn init(input: usize, hidden: usize, output: usize, rng: &mut ChaCha8Rng) -> Mlp {
        let mut uniform = |fan_in: usize, n: usize| -> Vec<f64> {
            let bound = 1.0 / (fan_in as f64).sqrt();
            (0..n).map(|_| rng.random_range(-bound..bound)).collect()
        };
        let w1 = Array2::from_shape_vec((hidden, input), uniform(input, hidden * input)).unwrap();
        let b1 = Array1::from_vec(uniform(input, hidden));
        let w2 =
            Array2::from_shape_vec((output, hidden), uniform(hidden, output * hidden)).unwrap();
        let b2 = Array1::from_vec(uniform(hidden, output));
        Mlp { w1, b1, w2, b2 }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.shape()[1]
    }

    pub fn output_dim(&self) -> usize {
        self.w2.shape()[0]
    }

    fn forward(&self, x: &Array1<f64>) -> MlpState {
        let z1 = self.w1.dot(x) + &self.b1;
        let a1 = z1.mapv(|v| v.max(0.0));
        let logits = self.w2.dot(&a1) + &self.b2;
        MlpState { z1, a1, logits }
    }

    pub fn logits(&self, x: &Array1<f64>) -> Result<Array1<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::mismatch(format!(
                "feature length {} != classifier input {}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(self.forward(x).logits)
    }

    /// Backprop from `d_logits` through both layers.
    fn backward(&self, x: &Array1<f64>, state: &MlpState, d_logits: &Array1<f64>) -> MlpGrads {
        let dw2 = outer(d_logits, &state.a1);
        let db2 = d_logits.clone();
        let da1 = self.w2.t().dot(d_logits);
        let dz1: Array1<f64> = da1
            .iter()
            .zip(state.z1.iter())
            .map(|(&g, &z)| if z > 0.0 { g } else { 0.0 })
            .collect();
        let dw1 = outer(&dz1, x);
        MlpGrads {
            w1: dw1,
            b1: dz1,
            w2: dw2,
            b2: db2,
        }
    }

    fn zero_grads(&self) -> MlpGrads {
        MlpGrads {
            w1: Array2::zeros(self.w1.raw_dim()),
            b1: Array1::zeros(self.b1.raw_dim()),
            w2: Array2::zeros(self.w2.raw_dim()),
            b2: Array1::zeros(self.b2.raw_dim()),
        }
    }

    fn apply(&mut self, grads: &MlpGrads, step: f64) {
        self.w1.zip_mut_with(&grads.w1, |p, &g| *p -= step * g);
        self.b1.zip_mut_with(&grads.b1, |p, &g| *p -= step * g);
        self.w2.zip_mut_with(&grads.w2, |p, &g| *p -= step * g);
        self.b2.zip_mut_with(&grads.b2, |p, &g| *p -= step * g);
    }
}

fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    let mut m = Array2::zeros((a.len(), b.len()));
    for i in 0..a.len() {
        let ai = a[i];
        if ai == 0.0 {
            continue;
        }
        for j in 0..b.len() {
            m[(i, j)] = ai * b[j];
        }
    }
    m
}

fn accumulate(acc: &mut MlpGrads, g: &MlpGrads) {
    acc.w1.zip_mut_with(&g.w1, |a, &b| *a += b);
    acc.b1.zip_mut_with(&g.b1, |a, &b| *a += b);
    acc.w2.zip_mut_with(&g.w2, |a, &b| *a += b);
    acc.b2.zip_mut_with(&g.b2, |a, &b| *a += b);
}

/// One classifier branch: which base features it consumes (concatenated in
/// order) and its perceptron.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub inputs: Vec<BaseFeature>,
    pub mlp: Mlp,
}

/// What the classifier's output vector indexes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputSpace {
    /// One score per predicate; the object category comes from the trajectory.
    Predicates,
    /// One score per `(object, predicate)` combination, object-major.
    JointHoi,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecognitionConfig {
    pub hidden_width: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Minimum fused score for a segment to count toward an instance.
    pub score_threshold: f64,
    /// Per-segment cap on emitted labels.
    pub top_k: usize,
    /// Use the body-part behavior descriptor branch.
    pub behavior_descriptor: bool,
    /// Apply the object-conditioned hard mask.
    pub object_mask: bool,
    /// Keep one classifier per feature type with late score fusion; when
    /// false a single classifier sees the concatenated features.
    pub late_fusion: bool,
    /// Factorize recognition into object + predicate; when false a single
    /// classifier scores the joint label space.
    pub factorized: bool,
    /// Multiply instance scores by subject and object trajectory confidences.
    pub multiply_trajectory_scores: bool,
}

impl Default for RecognitionConfig {
    fn default() -> Self {
        RecognitionConfig {
            hidden_width: 64,
            learning_rate: 0.1,
            epochs: 200,
            batch_size: 32,
            seed: 7,
            score_threshold: 0.5,
            top_k: 10,
            behavior_descriptor: true,
            object_mask: true,
            late_fusion: true,
            factorized: true,
            multiply_trajectory_scores: false,
        }
    }
}

impl RecognitionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_width == 0 {
            return Err(Error::invalid("recognition.hidden_width", "must be >= 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("recognition.learning_rate", "must be > 0"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("recognition.epochs", "must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("recognition.batch_size", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.score_threshold) {
            return Err(Error::invalid(
                "recognition.score_threshold",
                "must be in [0, 1]",
            ));
        }
        if self.top_k == 0 {
            return Err(Error::invalid("recognition.top_k", "must be >= 1"));
        }
        Ok(())
    }
}

/// One training sample: per-segment features, the object category of the
/// pair, and the annotated predicates (possibly none for background windows).
#[derive(Debug, Clone)]
pub struct TrainingSample {
    pub bundle: FeatureBundle,
    pub object_category: String,
    pub predicates: Vec<String>,
}

/// The trained recognizer: classifier branches, label space, and mask.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionModel {
    pub labels: LabelSpace,
    pub mask: AttentionMask,
    pub branches: Vec<Branch>,
    pub output: OutputSpace,
    joint_mask: Vec<bool>,
}

impl InteractionModel {
    pub fn new(
        labels: LabelSpace,
        mask: AttentionMask,
        branches: Vec<Branch>,
        output: OutputSpace,
    ) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::invalid("model", "no classifier branches"));
        }
        if mask.num_objects() != labels.num_objects()
            || mask.num_predicates() != labels.num_predicates()
        {
            return Err(Error::mismatch(format!(
                "mask is {}x{} for a label space of {}x{}",
                mask.num_objects(),
                mask.num_predicates(),
                labels.num_objects(),
                labels.num_predicates()
            )));
        }
        let out_dim = match output {
            OutputSpace::Predicates => labels.num_predicates(),
            OutputSpace::JointHoi => labels.num_objects() * labels.num_predicates(),
        };
        for b in &branches {
            if b.mlp.output_dim() != out_dim {
                return Err(Error::mismatch(format!(
                    "branch output {} != label space size {out_dim}",
                    b.mlp.output_dim()
                )));
            }
        }
        let joint_mask = mask.joint_vector();
        Ok(InteractionModel {
            labels,
            mask,
            branches,
            output,
            joint_mask,
        })
    }

    pub fn output_dim(&self) -> usize {
        match self.output {
            OutputSpace::Predicates => self.labels.num_predicates(),
            OutputSpace::JointHoi => self.labels.num_objects() * self.labels.num_predicates(),
        }
    }

    /// Mask vector applying to a sample whose pair object is `object_category`.
    fn mask_for(&self, object_category: &str) -> Result<&[bool]> {
        match self.output {
            OutputSpace::Predicates => {
                let o = self.labels.object_idx(object_category)?;
                Ok(self.mask.row(o))
            }
            OutputSpace::JointHoi => Ok(&self.joint_mask),
        }
    }

    /// Binary target vector for a sample in this model's output space.
    pub fn targets(&self, sample: &TrainingSample) -> Result<Array1<f64>> {
        let mut t = Array1::zeros(self.output_dim());
        for p in &sample.predicates {
            let pi = self.labels.predicate_idx(p)?;
            let idx = match self.output {
                OutputSpace::Predicates => pi,
                OutputSpace::JointHoi => {
                    self.labels.object_idx(&sample.object_category)? * self.labels.num_predicates()
                        + pi
                }
            };
            t[idx] = 1.0;
        }
        Ok(t)
    }

    fn branch_inputs(&self, bundle: &FeatureBundle) -> Vec<Array1<f64>> {
        self.branches
            .iter()
            .map(|b| concat_features(&b.inputs, bundle))
            .collect()
    }

    /// Per-branch masked predicate probabilities for one segment. Masked
    /// entries are exactly zero.
    pub fn predict_segment(
        &self,
        bundle: &FeatureBundle,
        object_category: &str,
    ) -> Result<Vec<Array1<f64>>> {
        let mask = self.mask_for(object_category)?;
        self.branches
            .iter()
            .zip(self.branch_inputs(bundle))
            .map(|(b, x)| {
                let logits = b.mlp.logits(&x)?;
                Ok(Array1::from_iter(logits.iter().zip(mask.iter()).map(
                    |(&z, &m)| {
                        if m {
                            sigmoid(z)
                        } else {
                            0.0
                        }
                    },
                )))
            })
            .collect()
    }

    /// Masked BCE of one sample under the current parameters.
    pub fn sample_loss(&self, sample: &TrainingSample) -> Result<f64> {
        let mask = self.mask_for(&sample.object_category)?;
        let targets = self.targets(sample)?;
        let logits: Vec<Array1<f64>> = self
            .branches
            .iter()
            .zip(self.branch_inputs(&sample.bundle))
            .map(|(b, x)| b.mlp.logits(&x))
            .collect::<Result<_>>()?;
        bce_loss(&logits, &targets, mask)
    }

    /// Loss and analytic parameter gradients of one sample.
    pub fn sample_gradients(&self, sample: &TrainingSample) -> Result<(f64, Vec<MlpGrads>)> {
        let mask = self.mask_for(&sample.object_category)?;
        let targets = self.targets(sample)?;
        check_targets(&targets, mask)?;
        let inputs = self.branch_inputs(&sample.bundle);
        let mut loss = 0.0;
        let mut grads = Vec::with_capacity(self.branches.len());
        for (branch, x) in self.branches.iter().zip(&inputs) {
            if x.len() != branch.mlp.input_dim() {
                return Err(Error::mismatch(format!(
                    "feature length {} != classifier input {}",
                    x.len(),
                    branch.mlp.input_dim()
                )));
            }
            let state = branch.mlp.forward(x);
            let mut d_logits = Array1::zeros(state.logits.len());
            for i in 0..state.logits.len() {
                if !mask[i] {
                    continue;
                }
                let p = sigmoid(state.logits[i]);
                let pc = p.clamp(PROB_EPSILON, 1.0 - PROB_EPSILON);
                loss -= targets[i] * pc.ln() + (1.0 - targets[i]) * (1.0 - pc).ln();
                // inside the clamp band the loss is flat in the logit
                if p > PROB_EPSILON && p < 1.0 - PROB_EPSILON {
                    d_logits[i] = p - targets[i];
                }
            }
            grads.push(branch.mlp.backward(x, &state, &d_logits));
        }
        Ok((loss, grads))
    }

    /// All parameters flattened in a fixed order (branch order; within a
    /// branch w1 row-major, b1, w2 row-major, b2).
    pub fn parameter_vector(&self) -> Vec<f64> {
        let mut v = Vec::new();
        for b in &self.branches {
            v.extend(b.mlp.w1.iter());
            v.extend(b.mlp.b1.iter());
            v.extend(b.mlp.w2.iter());
            v.extend(b.mlp.b2.iter());
        }
        v
    }

    pub fn set_parameter_vector(&mut self, params: &[f64]) -> Result<()> {
        let mut at = 0usize;
        for b in &mut self.branches {
            for dst in b
                .mlp
                .w1
                .iter_mut()
                .chain(b.mlp.b1.iter_mut())
                .chain(b.mlp.w2.iter_mut())
                .chain(b.mlp.b2.iter_mut())
            {
                *dst = *params
                    .get(at)
                    .ok_or_else(|| Error::mismatch("parameter vector too short".to_string()))?;
                at += 1;
            }
        }
        if at != params.len() {
            return Err(Error::mismatch(format!(
                "parameter vector has {} entries, model has {at}",
                params.len()
            )));
        }
        Ok(())
    }

    /// Gradient vector in `parameter_vector` order.
    pub fn flatten_gradients(&self, grads: &[MlpGrads]) -> Vec<f64> {
        let mut v = Vec::new();
        for g in grads {
            v.extend(g.w1.iter());
            v.extend(g.b1.iter());
            v.extend(g.w2.iter());
            v.extend(g.b2.iter());
        }
        v
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn check_targets(targets: &Array1<f64>, mask: &[bool]) -> Result<()> {
    for (i, (&t, &m)) in targets.iter().zip(mask.iter()).enumerate() {
        if t != 0.0 && t != 1.0 {
            return Err(Error::invalid(
                "target vector",
                format!("entry {i} = {t} not binary"),
            ));
        }
        if t == 1.0 && !m {
            return Err(Error::invalid(
                "target vector",
                format!("positive label at masked entry {i} contradicts the mask"),
            ));
        }
    }
    Ok(())
}

/// Masked multi-label binary cross entropy over all branches. Masked entries
/// contribute nothing; probabilities clamp to `[PROB_EPSILON, 1-PROB_EPSILON]`.
pub fn bce_loss(
    branch_logits: &[Array1<f64>],
    targets: &Array1<f64>,
    mask: &[bool],
) -> Result<f64> {
    if targets.len() != mask.len() {
        return Err(Error::mismatch(format!(
            "{} targets for a {}-entry mask",
            targets.len(),
            mask.len()
        )));
    }
    check_targets(targets, mask)?;
    let mut loss = 0.0;
    for logits in branch_logits {
        if logits.len() != targets.len() {
            return Err(Error::mismatch(format!(
                "{} logits for {} targets",
                logits.len(),
                targets.len()
            )));
        }
        for i in 0..logits.len() {
            if !mask[i] {
                continue;
            }
            let p = sigmoid(logits[i]).clamp(PROB_EPSILON, 1.0 - PROB_EPSILON);
            loss -= targets[i] * p.ln() + (1.0 - targets[i]) * (1.0 - p).ln();
        }
    }
    Ok(loss)
}

/// Element-wise arithmetic mean of the per-branch score vectors.
pub fn fuse_scores(branch_scores: &[Array1<f64>]) -> Array1<f64> {
    assert!(!branch_scores.is_empty(), "no branch scores to fuse");
    let mut acc = branch_scores[0].clone();
    for s in &branch_scores[1..] {
        acc += s;
    }
    acc / branch_scores.len() as f64
}

/// Trained model plus its per-epoch mean sample loss.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: InteractionModel,
    pub loss_curve: Vec<f64>,
}

/// Build the mask from the samples' positive labels and fit the classifier
/// branches by mini-batch gradient descent. Deterministic for a fixed seed.
pub fn train(
    samples: &[TrainingSample],
    labels: &LabelSpace,
    cfg: &RecognitionConfig,
) -> Result<TrainedModel> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::invalid("training set", "no samples"));
    }

    let mask = if cfg.object_mask {
        AttentionMask::build(
            samples.iter().flat_map(|s| {
                s.predicates
                    .iter()
                    .map(move |p| (p.as_str(), s.object_category.as_str()))
            }),
            labels,
        )?
    } else {
        AttentionMask::all_ones(labels)
    };

    let mut feature_sets: Vec<Vec<BaseFeature>> = Vec::new();
    let mut base = Vec::new();
    if cfg.behavior_descriptor {
        base.push(BaseFeature::Behavior);
    }
    base.push(BaseFeature::Motion);
    base.push(BaseFeature::Semantic);
    if cfg.late_fusion {
        for f in base {
            feature_sets.push(vec![f]);
        }
    } else {
        feature_sets.push(base);
    }

    let output = if cfg.factorized {
        OutputSpace::Predicates
    } else {
        OutputSpace::JointHoi
    };
    let out_dim = match output {
        OutputSpace::Predicates => labels.num_predicates(),
        OutputSpace::JointHoi => labels.num_objects() * labels.num_predicates(),
    };

    let probe = &samples[0].bundle;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let branches: Vec<Branch> = feature_sets
        .into_iter()
        .map(|inputs| {
            let input_dim: usize = inputs.iter().map(|k| k.extract(probe).len()).sum();
            let mlp = Mlp::init(input_dim, cfg.hidden_width, out_dim, &mut rng);
            Branch { inputs, mlp }
        })
        .collect();

    let mut model = InteractionModel::new(labels.clone(), mask, branches, output)?;

    // Everything below is plain SGD over per-sample analytic gradients.
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut loss_curve = Vec::with_capacity(cfg.epochs);
    for _epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut acc: Vec<MlpGrads> =
                model.branches.iter().map(|b| b.mlp.zero_grads()).collect();
            for &i in batch {
                let (loss, grads) = model.sample_gradients(&samples[i])?;
                epoch_loss += loss;
                for (a, g) in acc.iter_mut().zip(&grads) {
                    accumulate(a, g);
                }
            }
            let step = cfg.learning_rate / batch.len() as f64;
            for (branch, g) in model.branches.iter_mut().zip(&acc) {
                branch.mlp.apply(g, step);
            }
        }
        loss_curve.push(epoch_loss / samples.len() as f64);
    }

    Ok(TrainedModel { model, loss_curve })
}

/// A recognized human-object interaction instance: the label pair, the
/// localizing trajectories, and a ranking score.
#[derive(Debug, Clone, PartialEq)]
pub struct HoiInstance {
    pub predicate: String,
    pub object_category: String,
    pub subject: Trajectory,
    pub object: Trajectory,
    pub span: FrameSpan,
    pub score: f64,
}

/// Fused scores of one candidate segment.
#[derive(Debug, Clone)]
pub struct ScoredSegment {
    pub span: FrameSpan,
    pub scores: Array1<f64>,
}

/// How score-vector indices decode to HOI labels.
#[derive(Debug, Clone, Copy)]
pub enum ScoreSpace<'a> {
    /// Scores index predicates; the object label is the pair's category.
    Predicates {
        labels: &'a LabelSpace,
        object_category: &'a str,
    },
    /// Scores index the object-major joint label space.
    JointHoi { labels: &'a LabelSpace },
}

impl<'a> ScoreSpace<'a> {
    fn decode(&self, idx: usize) -> (String, String) {
        match self {
            ScoreSpace::Predicates {
                labels,
                object_category,
            } => (
                labels.predicates()[idx].clone(),
                (*object_category).to_string(),
            ),
            ScoreSpace::JointHoi { labels } => {
                let np = labels.num_predicates();
                (
                    labels.predicates()[idx % np].clone(),
                    labels.objects()[idx / np].clone(),
                )
            }
        }
    }
}

/// Greedy association of one pair's temporally ordered scored segments into
/// instances: per label, maximal runs of consecutive qualifying segments
/// merge into one instance spanning the run, scored by the mean segment
/// score. Output is sorted by score descending (ties by label, then span).
pub fn associate_instances(
    subject: &Trajectory,
    object: &Trajectory,
    segments: &[ScoredSegment],
    space: ScoreSpace,
    score_threshold: f64,
    top_k: usize,
    multiply_trajectory_scores: bool,
) -> Vec<HoiInstance> {
    if segments.is_empty() {
        return Vec::new();
    }
    let dim = segments[0].scores.len();

    // per segment: label indices that qualify (score >= threshold, top-k cap)
    let qualifying: Vec<Vec<usize>> = segments
        .iter()
        .map(|seg| {
            let mut idx: Vec<usize> = (0..dim)
                .filter(|&i| seg.scores[i] >= score_threshold)
                .collect();
            idx.sort_by(|&a, &b| {
                seg.scores[b]
                    .partial_cmp(&seg.scores[a])
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.cmp(&b))
            });
            idx.truncate(top_k);
            idx.sort_unstable();
            idx
        })
        .collect();

    let mut instances = Vec::new();
    for label in 0..dim {
        let mut run_start: Option<usize> = None;
        for s in 0..=segments.len() {
            let hit = s < segments.len() && qualifying[s].binary_search(&label).is_ok();
            match (run_start, hit) {
                (None, true) => run_start = Some(s),
                (Some(start), false) => {
                    instances.push(build_instance(
                        subject,
                        object,
                        &segments[start..s],
                        label,
                        &space,
                        multiply_trajectory_scores,
                    ));
                    run_start = None;
                }
                _ => {}
            }
        }
    }

    instances.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.predicate.cmp(&b.predicate))
            .then(a.object_category.cmp(&b.object_category))
            .then(a.span.begin.cmp(&b.span.begin))
    });
    instances
}

fn build_instance(
    subject: &Trajectory,
    object: &Trajectory,
    run: &[ScoredSegment],
    label: usize,
    space: &ScoreSpace,
    multiply_trajectory_scores: bool,
) -> HoiInstance {
    let span = FrameSpan {
        begin: run.first().unwrap().span.begin,
        end: run.last().unwrap().span.end,
    };
    let mean: f64 = run.iter().map(|s| s.scores[label]).sum::<f64>() / run.len() as f64;
    let score = if multiply_trajectory_scores {
        mean * subject.score * object.score
    } else {
        mean
    };
    let (predicate, object_category) = space.decode(label);
    HoiInstance {
        predicate,
        object_category,
        subject: subject
            .crop(&span)
            .expect("instance span inside subject span"),
        object: object
            .crop(&span)
            .expect("instance span inside object span"),
        span,
        score,
    }
}
