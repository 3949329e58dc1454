//! Small classifiers trained from scratch: logistic regression and a
//! two-hidden-layer ReLU network with inverted dropout.
//!
//! Training minimizes mean binary cross-entropy plus `l2 · Σ‖W‖²` over the
//! weight matrices (biases are not penalized) with plain mini-batch SGD.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Hidden widths of the two-layer network.
pub const MLP_HIDDEN: [usize; 2] = [32, 16];
pub const BATCH_SIZE: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Logistic,
    Mlp2,
}

impl ModelKind {
    fn as_str(self) -> &'static str {
        match self {
            ModelKind::Logistic => "logistic",
            ModelKind::Mlp2 => "mlp2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub threshold: f64,
    pub l2: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub dropout: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            threshold: 0.5,
            l2: 1e-4,
            learning_rate: 0.05,
            epochs: 50,
            dropout: 0.1,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.threshold > 0.0
            && self.threshold < 1.0
            && self.l2 >= 0.0
            && self.l2.is_finite()
            && self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && self.epochs > 0
            && (0.0..1.0).contains(&self.dropout);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("hyperparameters out of bounds: {self:?}")))
        }
    }
}

/// Fully connected layer; `weights` is inputs × outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

impl Dense {
    fn forward(&self, input: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = input * &self.weights;
        for mut row in z.row_iter_mut() {
            row += self.bias.transpose();
        }
        z
    }
}

/// Feed-forward network: ReLU on hidden layers, one sigmoid output unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub layers: Vec<Dense>,
}

/// Intermediate values kept for backpropagation.
struct Trace {
    /// Input to each layer (post-activation, post-dropout of the previous).
    inputs: Vec<DMatrix<f64>>,
    /// Pre-activations of each hidden layer.
    hidden_pre: Vec<DMatrix<f64>>,
    logits: DVector<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Stable `-[y ln σ(z) + (1-y) ln(1-σ(z))]`.
fn bce_with_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

impl Network {
    /// Glorot-uniform weights, zero biases; `widths` runs input → output.
    pub fn init(widths: &[usize], rng: &mut seed::Rng) -> Network {
        let layers = widths
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                // Fill row-major so the draw order does not depend on storage layout.
                let mut weights = DMatrix::zeros(fan_in, fan_out);
                for i in 0..fan_in {
                    for j in 0..fan_out {
                        weights[(i, j)] = rng.random_range(-limit..=limit);
                    }
                }
                Dense {
                    weights,
                    bias: DVector::zeros(fan_out),
                }
            })
            .collect();
        Network { layers }
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].weights.nrows()
    }

    fn trace(&self, x: &DMatrix<f64>, masks: Option<&[DMatrix<f64>]>) -> Trace {
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut hidden_pre = Vec::with_capacity(last);
        let mut a = x.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(&a);
            inputs.push(a);
            if l == last {
                return Trace {
                    inputs,
                    hidden_pre,
                    logits: z.column(0).into_owned(),
                };
            }
            let mut h = z.map(|v| v.max(0.0));
            if let Some(m) = masks {
                h.component_mul_assign(&m[l]);
            }
            hidden_pre.push(z);
            a = h;
        }
        unreachable!("network has at least one layer")
    }

    pub fn logits(&self, x: &DMatrix<f64>) -> DVector<f64> {
        self.trace(x, None).logits
    }

    /// Mean cross-entropy plus the L2 penalty. `masks` are the (already
    /// scaled) dropout multipliers per hidden layer.
    pub fn loss(&self, x: &DMatrix<f64>, y: &[u8], l2: f64, masks: Option<&[DMatrix<f64>]>) -> f64 {
        let logits = self.trace(x, masks).logits;
        let n = y.len() as f64;
        let data: f64 = logits.iter().zip(y).map(|(&z, &t)| bce_with_logit(z, f64::from(t))).sum::<f64>() / n;
        data + l2 * self.weight_sq_norm()
    }

    /// Loss and its gradient, one `Dense` of partials per layer.
    pub fn loss_and_grad(
        &self,
        x: &DMatrix<f64>,
        y: &[u8],
        l2: f64,
        masks: Option<&[DMatrix<f64>]>,
    ) -> (f64, Vec<Dense>) {
        let trace = self.trace(x, masks);
        let n = y.len() as f64;
        let mut loss = 0.0;
        let mut delta = DMatrix::zeros(y.len(), 1);
        for (i, (&z, &t)) in trace.logits.iter().zip(y).enumerate() {
            let t = f64::from(t);
            loss += bce_with_logit(z, t);
            delta[(i, 0)] = (sigmoid(z) - t) / n;
        }
        loss = loss / n + l2 * self.weight_sq_norm();

        let mut grads: Vec<Dense> = Vec::with_capacity(self.layers.len());
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input = &trace.inputs[l];
            let mut gw = input.transpose() * &delta;
            gw += &layer.weights * (2.0 * l2);
            let gb = DVector::from_iterator(delta.ncols(), delta.column_iter().map(|c| c.sum()));
            if l > 0 {
                let mut back = &delta * layer.weights.transpose();
                let pre = &trace.hidden_pre[l - 1];
                for ((b, &p), k) in back.iter_mut().zip(pre.iter()).zip(0..) {
                    let mask = masks.map_or(1.0, |m| m[l - 1].as_slice()[k]);
                    *b *= if p > 0.0 { mask } else { 0.0 };
                }
                delta = back;
            }
            grads.push(Dense { weights: gw, bias: gb });
        }
        grads.reverse();
        (loss, grads)
    }

    fn weight_sq_norm(&self) -> f64 {
        self.layers.iter().map(|l| l.weights.norm_squared()).sum()
    }

    /// Frobenius norm over all weight matrices.
    pub fn weight_norm(&self) -> f64 {
        self.weight_sq_norm().sqrt()
    }

    /// All parameters flattened: per layer, weights (column-major) then bias.
    pub fn params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
            .collect()
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let mut it = p.iter().copied();
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *w = it.next().expect("parameter vector too short");
            }
        }
    }

    fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }
}

/// Flatten gradients in the same order as [`Network::params`].
pub fn flatten_grads(grads: &[Dense]) -> Vec<f64> {
    grads
        .iter()
        .flat_map(|g| g.weights.iter().chain(g.bias.iter()).copied())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub kind: ModelKind,
    pub network: Network,
    pub hp: HyperParams,
    pub train_seed: u64,
}

fn widths_for(kind: ModelKind, d: usize) -> Vec<usize> {
    match kind {
        ModelKind::Logistic => vec![d, 1],
        ModelKind::Mlp2 => vec![d, MLP_HIDDEN[0], MLP_HIDDEN[1], 1],
    }
}

fn dropout_masks(net: &Network, rows: usize, p: f64, rng: &mut seed::Rng) -> Vec<DMatrix<f64>> {
    let keep = 1.0 / (1.0 - p);
    net.layers[..net.layers.len() - 1]
        .iter()
        .map(|l| {
            let mut m = DMatrix::zeros(rows, l.weights.ncols());
            for i in 0..rows {
                for j in 0..m.ncols() {
                    m[(i, j)] = if rng.random::<f64>() < p { 0.0 } else { keep };
                }
            }
            m
        })
        .collect()
}

/// Train on `x` (n × d) and binary labels `y`.
pub fn train(x: &DMatrix<f64>, y: &[u8], kind: ModelKind, hp: &HyperParams, seed: u64) -> Result<Classifier> {
    hp.validate()?;
    if x.nrows() == 0 {
        return Err(Error::EmptyInput("training split is empty".into()));
    }
    if x.nrows() != y.len() {
        return Err(Error::Shape {
            expected: x.nrows(),
            actual: y.len(),
        });
    }
    let mut rng = seed::rng(seed);
    let mut net = Network::init(&widths_for(kind, x.ncols()), &mut rng);
    let use_dropout = hp.dropout > 0.0 && kind == ModelKind::Mlp2;
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    for epoch in 0..hp.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(BATCH_SIZE) {
            let xb = DMatrix::from_fn(batch.len(), x.ncols(), |r, c| x[(batch[r], c)]);
            let yb: Vec<u8> = batch.iter().map(|&i| y[i]).collect();
            let masks = use_dropout.then(|| dropout_masks(&net, batch.len(), hp.dropout, &mut rng));
            let (loss, grads) = net.loss_and_grad(&xb, &yb, hp.l2, masks.as_deref());
            epoch_loss += loss * batch.len() as f64;
            for (layer, g) in net.layers.iter_mut().zip(&grads) {
                layer.weights -= &g.weights * hp.learning_rate;
                layer.bias.axpy(-hp.learning_rate, &g.bias, 1.0);
            }
        }
        if !epoch_loss.is_finite() || !net.is_finite() {
            return Err(Error::Diverged { epoch });
        }
    }
    Ok(Classifier {
        kind,
        network: net,
        hp: *hp,
        train_seed: seed,
    })
}

impl Classifier {
    pub fn n_features(&self) -> usize {
        self.network.n_inputs()
    }

    /// Positive-class probabilities; dropout is never applied here.
    pub fn predict_proba(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features() {
            return Err(Error::Shape {
                expected: self.n_features(),
                actual: x.ncols(),
            });
        }
        Ok(self.network.logits(x).iter().map(|&z| sigmoid(z)).collect())
    }

    pub fn predict_label(&self, x: &DMatrix<f64>) -> Result<Vec<u8>> {
        Ok(threshold_labels(&self.predict_proba(x)?, self.hp.threshold))
    }

    pub fn to_document(&self) -> ModelDocument {
        ModelDocument {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            kind: self.kind,
            hp: self.hp,
            seed: self.train_seed,
            layers: self
                .network
                .layers
                .iter()
                .map(|l| LayerDocument {
                    shape: [l.weights.nrows(), l.weights.ncols()],
                    weights: (0..l.weights.nrows())
                        .flat_map(|i| (0..l.weights.ncols()).map(move |j| (i, j)))
                        .map(|(i, j)| fmt_f64(l.weights[(i, j)]))
                        .collect(),
                    bias: l.bias.iter().map(|&b| fmt_f64(b)).collect(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("model document serializes")
    }

    pub fn from_json(text: &str) -> Result<Classifier> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        doc.into_classifier()
    }
}

/// Label 1 iff probability ≥ threshold (ties go to the positive class).
pub fn threshold_labels(proba: &[f64], threshold: f64) -> Vec<u8> {
    proba.iter().map(|&p| u8::from(p >= threshold)).collect()
}

pub const MODEL_FORMAT: &str = "mesd-model";
pub const MODEL_VERSION: u32 = 1;

/// 17 significant digits: enough to round-trip any f64.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Versioned on-disk form of a [`Classifier`]. Weights are row-major
/// (input index major) decimal strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    pub kind: ModelKind,
    pub hp: HyperParams,
    pub seed: u64,
    pub layers: Vec<LayerDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDocument {
    pub shape: [usize; 2],
    pub weights: Vec<String>,
    pub bias: Vec<String>,
}

impl ModelDocument {
    pub fn into_classifier(self) -> Result<Classifier> {
        if self.format != MODEL_FORMAT || self.version != MODEL_VERSION {
            return Err(Error::Artifact(format!(
                "unsupported model document {} v{}",
                self.format, self.version
            )));
        }
        let parse = |s: &String| {
            s.parse::<f64>()
                .map_err(|_| Error::Artifact(format!("bad weight literal '{s}'")))
        };
        let mut layers = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let [rows, cols] = l.shape;
            if l.weights.len() != rows * cols || l.bias.len() != cols {
                return Err(Error::Artifact("layer shape does not match weights".into()));
            }
            let w: Vec<f64> = l.weights.iter().map(parse).collect::<Result<_>>()?;
            let b: Vec<f64> = l.bias.iter().map(parse).collect::<Result<_>>()?;
            layers.push(Dense {
                weights: DMatrix::from_row_slice(rows, cols, &w),
                bias: DVector::from_vec(b),
            });
        }
        let expected_depth = match self.kind {
            ModelKind::Logistic => 1,
            ModelKind::Mlp2 => 3,
        };
        if layers.len() != expected_depth {
            return Err(Error::Artifact(format!(
                "{} model needs {expected_depth} layers, found {}",
                self.kind.as_str(),
                layers.len()
            )));
        }
        Ok(Classifier {
            kind: self.kind,
            network: Network { layers },
            hp: self.hp,
            train_seed: self.seed,
        })
    }
}
