//! Layered classifier `H = h_y ∘ … ∘ h_1` over 1-D records, with a frozen,
//! profile-seeded prefix and a trainable tail tuned by PTSO.

use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::optim::{self, Bounds, OptimizationResult, PtsoConfig};
use crate::rng;
use crate::tabular::{FeatureMatrix, LabelVector};

pub mod profile;

pub use profile::{Activation, LayerSpec, TransferProfile};

#[derive(Debug, Clone, PartialEq)]
enum LayerKind {
    SepConv {
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        residual: bool,
    },
    Pool {
        max: bool,
        width: usize,
    },
    Dense {
        inputs: usize,
        units: usize,
        pieces: usize,
        activation: Activation,
        softmax: bool,
    },
}

impl LayerKind {
    fn param_count(&self) -> usize {
        match *self {
            LayerKind::SepConv {
                in_ch,
                out_ch,
                kernel,
                ..
            } => in_ch * kernel + in_ch * out_ch + out_ch,
            LayerKind::Pool { .. } => 0,
            LayerKind::Dense {
                inputs,
                units,
                pieces,
                ..
            } => (inputs + 1) * units * pieces,
        }
    }

    /// Biases sit at the end of each layer's parameter block.
    fn bias_count(&self) -> usize {
        match *self {
            LayerKind::SepConv { out_ch, .. } => out_ch,
            LayerKind::Pool { .. } => 0,
            LayerKind::Dense { units, pieces, .. } => units * pieces,
        }
    }

    fn fan_in(&self) -> usize {
        match *self {
            LayerKind::SepConv { kernel, in_ch, .. } => kernel.max(in_ch),
            LayerKind::Pool { .. } => 1,
            LayerKind::Dense { inputs, .. } => inputs,
        }
    }

    /// `(channels, length)` in → out.
    fn output_shape(&self, (ch, len): (usize, usize)) -> (usize, usize) {
        match *self {
            LayerKind::SepConv { out_ch, .. } => (out_ch, len),
            LayerKind::Pool { width, .. } => (ch, len / width),
            LayerKind::Dense { units, .. } => (1, units),
        }
    }

    /// Applies the layer. Activations are channel-major `(ch, len)`.
    fn forward(&self, params: &[f64], x: &[f64], (ch, len): (usize, usize)) -> Vec<f64> {
        match *self {
            LayerKind::SepConv {
                in_ch,
                out_ch,
                kernel,
                residual,
            } => {
                let (dw, rest) = params.split_at(in_ch * kernel);
                let (pw, bias) = rest.split_at(in_ch * out_ch);
                let half = kernel / 2;
                let mut depth = vec![0.0; in_ch * len];
                for c in 0..in_ch {
                    for p in 0..len {
                        let mut acc = 0.0;
                        for k in 0..kernel {
                            // input position p + k - half, zero padded
                            if let Some(src) = (p + k).checked_sub(half).filter(|&s| s < len) {
                                acc += dw[c * kernel + k] * x[c * len + src];
                            }
                        }
                        depth[c * len + p] = acc;
                    }
                }
                let mut out = vec![0.0; out_ch * len];
                for o in 0..out_ch {
                    for p in 0..len {
                        let mut acc = bias[o];
                        for c in 0..in_ch {
                            acc += pw[o * in_ch + c] * depth[c * len + p];
                        }
                        let mut v = acc.max(0.0);
                        if residual {
                            v += x[o * len + p];
                        }
                        out[o * len + p] = v;
                    }
                }
                out
            }
            LayerKind::Pool { max, width } => {
                let out_len = len / width;
                let mut out = Vec::with_capacity(ch * out_len);
                for c in 0..ch {
                    for p in 0..out_len {
                        let win = &x[c * len + p * width..c * len + (p + 1) * width];
                        out.push(if max {
                            win.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                        } else {
                            win.iter().sum::<f64>() / width as f64
                        });
                    }
                }
                out
            }
            LayerKind::Dense {
                inputs,
                units,
                pieces,
                activation,
                softmax,
            } => {
                let (w, b) = params.split_at(inputs * units * pieces);
                let mut out = Vec::with_capacity(units);
                for u in 0..units {
                    let mut best = f64::NEG_INFINITY;
                    for k in 0..pieces {
                        let row = (u * pieces + k) * inputs;
                        let v = b[u * pieces + k]
                            + w[row..row + inputs].iter().zip(x).map(|(a, c)| a * c).sum::<f64>();
                        best = best.max(v);
                    }
                    out.push(match activation {
                        Activation::Relu if !softmax => best.max(0.0),
                        _ => best,
                    });
                }
                if softmax {
                    softmax_in_place(&mut out);
                }
                out
            }
        }
    }
}

pub fn softmax_in_place(v: &mut [f64]) {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - m).exp();
        sum += *x;
    }
    v.iter_mut().for_each(|x| *x /= sum);
}

/// An instantiated classifier. The frozen prefix owns its parameters; the
/// rest are supplied as a flat vector `ψ` on every call.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierNetwork {
    input_dim: usize,
    n_classes: usize,
    layers: Vec<LayerKind>,
    frozen_layers: usize,
    frozen_params: Vec<f64>,
    trainable_count: usize,
    profile_hash: String,
}

pub fn build_classifier(profile: &TransferProfile, input_dim: usize, n_classes: usize) -> Result<ClassifierNetwork> {
    profile.validate()?;
    if input_dim < 1 {
        return Err(Error::invalid("classifier input dimension must be positive"));
    }
    if n_classes < 2 {
        return Err(Error::invalid("classifier needs at least two classes"));
    }
    let mut shape = (1usize, input_dim);
    let mut flat = false;
    let mut layers = Vec::with_capacity(profile.layers.len() + 1);
    for spec in &profile.layers {
        let kind = match *spec {
            LayerSpec::SeparableConv {
                kernel,
                channels,
                residual,
            } => {
                if flat {
                    return Err(Error::Config("convolution after a dense layer".into()));
                }
                if residual && channels != shape.0 {
                    return Err(Error::Config(format!(
                        "residual block maps {} channels to {channels}",
                        shape.0
                    )));
                }
                LayerKind::SepConv {
                    in_ch: shape.0,
                    out_ch: channels,
                    kernel,
                    residual,
                }
            }
            LayerSpec::MaxPool { width } | LayerSpec::AvgPool { width } => {
                if flat || width > shape.1 {
                    return Err(Error::Config(format!(
                        "pool width {width} does not fit length {}",
                        shape.1
                    )));
                }
                LayerKind::Pool {
                    max: matches!(spec, LayerSpec::MaxPool { .. }),
                    width,
                }
            }
            LayerSpec::Dense {
                units,
                activation,
                pieces,
            } => {
                flat = true;
                LayerKind::Dense {
                    inputs: shape.0 * shape.1,
                    units,
                    pieces: if activation == Activation::Maxout { pieces } else { 1 },
                    activation,
                    softmax: false,
                }
            }
        };
        shape = kind.output_shape(shape);
        layers.push(kind);
    }
    layers.push(LayerKind::Dense {
        inputs: shape.0 * shape.1,
        units: n_classes,
        pieces: 1,
        activation: Activation::Linear,
        softmax: true,
    });

    let frozen_layers = profile.frozen_prefix;
    let mut frozen_params = Vec::new();
    for (i, layer) in layers[..frozen_layers].iter().enumerate() {
        let mut r = rng::stream(profile.seed, &[0x7F, i as u64]);
        let a = (6.0 / (layer.fan_in() + 1) as f64).sqrt();
        let weights = layer.param_count() - layer.bias_count();
        frozen_params.extend((0..weights).map(|_| r.gen_range(-a..a)));
        frozen_params.extend(std::iter::repeat_n(0.0, layer.bias_count()));
    }
    let trainable_count = layers[frozen_layers..].iter().map(LayerKind::param_count).sum();
    Ok(ClassifierNetwork {
        input_dim,
        n_classes,
        layers,
        frozen_layers,
        frozen_params,
        trainable_count,
        profile_hash: profile.hash(),
    })
}

impl ClassifierNetwork {
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Length of `ψ`.
    pub fn trainable_count(&self) -> usize {
        self.trainable_count
    }

    pub fn frozen_count(&self) -> usize {
        self.frozen_params.len()
    }

    pub fn frozen_params(&self) -> &[f64] {
        &self.frozen_params
    }

    pub fn profile_hash(&self) -> &str {
        &self.profile_hash
    }

    fn shape_after(&self, n: usize) -> (usize, usize) {
        self.layers[..n]
            .iter()
            .fold((1, self.input_dim), |s, l| l.output_shape(s))
    }

    /// Output of the frozen prefix for one record.
    pub fn frozen_features(&self, record: &[f64]) -> Result<Vec<f64>> {
        check_len(self.input_dim, record.len())?;
        let mut shape = (1, self.input_dim);
        let mut h = record.to_vec();
        let mut offset = 0;
        for layer in &self.layers[..self.frozen_layers] {
            let n = layer.param_count();
            h = layer.forward(&self.frozen_params[offset..offset + n], &h, shape);
            offset += n;
            shape = layer.output_shape(shape);
        }
        Ok(h)
    }

    /// Class probabilities from frozen-prefix features.
    pub fn forward_features(&self, psi: &[f64], features: &[f64]) -> Result<Vec<f64>> {
        check_len(self.trainable_count, psi.len())?;
        let mut shape = self.shape_after(self.frozen_layers);
        check_len(shape.0 * shape.1, features.len())?;
        let mut h = features.to_vec();
        let mut offset = 0;
        for layer in &self.layers[self.frozen_layers..] {
            let n = layer.param_count();
            h = layer.forward(&psi[offset..offset + n], &h, shape);
            offset += n;
            shape = layer.output_shape(shape);
        }
        Ok(h)
    }

    /// Class probabilities `T_t` for one record.
    pub fn forward(&self, psi: &[f64], record: &[f64]) -> Result<Vec<f64>> {
        let f = self.frozen_features(record)?;
        self.forward_features(psi, &f)
    }
}

/// Flat trainable parameter vector, tagged with the profile it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub values: Vec<f64>,
    pub profile_hash: String,
}

impl WeightVector {
    /// Text form: a header line then one value per line.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "# psi dimension={} profile={}\n",
            self.values.len(),
            self.profile_hash
        );
        for v in &self.values {
            s.push_str(&format!("{v}\n"));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Schema("empty weight file".into()))?;
        let field = |key: &str| {
            header
                .split_whitespace()
                .find_map(|tok| tok.strip_prefix(key))
                .ok_or_else(|| Error::Schema(format!("weight header lacks `{key}`")))
        };
        let dim: usize = field("dimension=")?
            .parse()
            .map_err(|_| Error::Schema("bad dimension in weight header".into()))?;
        let profile_hash = field("profile=")?.to_owned();
        let values = lines
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, l)| {
                l.trim().parse::<f64>().map_err(|_| Error::BadCell {
                    row: i + 1,
                    column: "psi".into(),
                    value: l.to_owned(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        check_len(dim, values.len())?;
        Ok(Self {
            values,
            profile_hash,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_text(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

/// Training records (as cached frozen features) and one-hot targets.
#[derive(Debug, Clone)]
pub struct FitnessContext {
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

impl FitnessContext {
    pub fn new(network: &ClassifierNetwork, matrix: &FeatureMatrix, labels: &LabelVector) -> Result<Self> {
        check_len(matrix.rows(), labels.len())?;
        if matrix.is_empty() {
            return Err(Error::invalid("fitness context has no records"));
        }
        let features = matrix
            .iter_rows()
            .map(|r| network.frozen_features(r))
            .collect::<Result<_>>()?;
        let targets = labels
            .as_slice()
            .iter()
            .map(|&l| {
                let mut t = vec![0.0; network.n_classes()];
                t[l as usize] = 1.0;
                t
            })
            .collect();
        Ok(Self { features, targets })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

/// `(1/a) Σ_t Σ_k (C_tk − T_tk)²`.
pub fn mean_squared_fitness(targets: &[Vec<f64>], outputs: &[Vec<f64>]) -> Result<f64> {
    check_len(targets.len(), outputs.len())?;
    if targets.is_empty() {
        return Err(Error::invalid("fitness over zero records"));
    }
    let mut sum = 0.0;
    for (c, t) in targets.iter().zip(outputs) {
        check_len(c.len(), t.len())?;
        sum += c.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    Ok(sum / targets.len() as f64)
}

/// Fitness `Ψ` of parameters `psi` on `context`.
pub fn fitness(network: &ClassifierNetwork, psi: &[f64], context: &FitnessContext) -> Result<f64> {
    if context.is_empty() {
        return Err(Error::invalid("fitness over zero records"));
    }
    let outputs = context
        .features
        .iter()
        .map(|f| network.forward_features(psi, f))
        .collect::<Result<Vec<_>>>()?;
    mean_squared_fitness(&context.targets, &outputs)
}

/// Default search box for `ψ`.
pub fn default_bounds(network: &ClassifierNetwork) -> Result<Bounds> {
    Bounds::uniform(network.trainable_count(), -5.0, 5.0)
}

/// Tunes `ψ` by PTSO with `Ψ` as the objective.
pub fn train_classifier(
    network: &ClassifierNetwork,
    context: &FitnessContext,
    config: &PtsoConfig,
    bounds: &Bounds,
) -> Result<(WeightVector, OptimizationResult)> {
    check_len(network.trainable_count(), bounds.dim())?;
    if context.is_empty() {
        return Err(Error::invalid("no training records"));
    }
    let objective = |psi: &[f64]| fitness(network, psi, context).unwrap_or(f64::INFINITY);
    let result = optim::run_ptso(&objective, config, bounds)?;
    Ok((
        WeightVector {
            values: result.best_position.clone(),
            profile_hash: network.profile_hash.clone(),
        },
        result,
    ))
}

/// Index of the largest score; ties go to the lower class id.
pub fn argmax(scores: &[f64]) -> u8 {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best as u8
}

pub fn predict(network: &ClassifierNetwork, psi: &[f64], matrix: &FeatureMatrix) -> Result<LabelVector> {
    let labels = matrix
        .iter_rows()
        .map(|r| network.forward(psi, r).map(|s| argmax(&s)))
        .collect::<Result<Vec<_>>>()?;
    LabelVector::new(labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_profile_is_softmax_regression() {
        let net = build_classifier(&TransferProfile::linear(), 3, 2).unwrap();
        assert_eq!(net.trainable_count(), (3 + 1) * 2);
        assert_eq!(net.frozen_count(), 0);
        // logits: [1·1 + 2·0 + 3·0 + 0.5, 0]
        let psi = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5, 0.0];
        let out = net.forward(&psi, &[1.0, 2.0, 3.0]).unwrap();
        let e = 1.5f64.exp();
        assert!((out[0] - e / (e + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn desk_parameter_count() {
        let net = build_classifier(&TransferProfile::desk(), 8, 2).unwrap();
        // conv1 1·3 + 1·2 + 2, conv2 2·3 + 2·2 + 2, dense 16 -> 4, out 4 -> 2
        assert_eq!(net.frozen_count(), 7 + 12);
        assert_eq!(net.trainable_count(), 17 * 4 + 5 * 2);
        assert_eq!(net.trainable_count(), 78);
    }

    #[test]
    fn frozen_weights_follow_profile_seed() {
        let a = build_classifier(&TransferProfile::desk(), 8, 2).unwrap();
        let b = build_classifier(&TransferProfile::desk(), 8, 2).unwrap();
        assert_eq!(a.frozen_params(), b.frozen_params());
        let mut other = TransferProfile::desk();
        other.seed = 8;
        let c = build_classifier(&other, 8, 2).unwrap();
        assert_ne!(a.frozen_params(), c.frozen_params());
    }

    #[test]
    fn shape_errors() {
        let net = build_classifier(&TransferProfile::linear(), 3, 2).unwrap();
        assert!(net.forward(&[0.0; 8], &[1.0]).is_err());
        assert!(net.forward(&[0.0; 7], &[1.0, 2.0, 3.0]).is_err());
        let mut p = TransferProfile::linear();
        p.layers.push(LayerSpec::MaxPool { width: 4 });
        assert!(build_classifier(&p, 3, 2).is_err());
        let mut p = TransferProfile::linear();
        p.layers.push(LayerSpec::SeparableConv { kernel: 3, channels: 2, residual: true });
        assert!(build_classifier(&p, 3, 2).is_err());
    }

    #[test]
    fn symmetric_outputs() {
        let net = build_classifier(&TransferProfile::linear(), 2, 2).unwrap();
        assert_eq!(net.forward(&[0.0; 6], &[3.0, -1.0]).unwrap(), vec![0.5, 0.5]);
        let mut v = vec![2.0, 2.0];
        softmax_in_place(&mut v);
        assert_eq!(v, vec![0.5, 0.5]);
    }

    /// Hand trace of a 1-conv, 1-dense network on a single record.
    #[test]
    fn hand_traced_forward() {
        let profile = TransferProfile {
            name: "trace".into(),
            seed: 1,
            frozen_prefix: 0,
            layers: vec![LayerSpec::SeparableConv { kernel: 3, channels: 1, residual: false }],
        };
        let net = build_classifier(&profile, 3, 2).unwrap();
        // depthwise [1, 2, 1]; pointwise 1, bias −1; output w0 = [1,0,0] b0 = 0, w1 = 0, b1 = 1
        let psi = [1.0, 2.0, 1.0, 1.0, -1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        assert_eq!(psi.len(), net.trainable_count());
        let x = [1.0, 0.0, 2.0];
        // depthwise with zero padding: [0+2+0, 1+0+2, 0+4+0] = [2, 3, 4]; pointwise-1 relu: [1, 2, 3]
        // logits: [1, 1] -> but w0 stored unit-major: unit 0 weights = psi[5..8], bias psi[11]
        let out = net.forward(&psi, &x).unwrap();
        let l0 = 1.0 * 1.0 + 0.0 * 2.0 + 0.0 * 3.0 + 0.0;
        let l1: f64 = 1.0;
        let e0 = (l0 - l1).exp();
        assert!((out[0] - e0 / (e0 + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn fitness_examples() {
        assert_eq!(mean_squared_fitness(&[vec![1.0], vec![0.0]], &[vec![1.0], vec![0.0]]).unwrap(), 0.0);
        let v = mean_squared_fitness(&[vec![1.0], vec![0.0]], &[vec![0.5], vec![0.5]]).unwrap();
        assert_eq!(v, 0.25);
        assert!(mean_squared_fitness(&[], &[]).is_err());
    }

    #[test]
    fn argmax_ties_low() {
        assert_eq!(argmax(&[0.9, 0.1]), 0);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.2, 0.8]), 1);
    }

    #[test]
    fn weight_text_round_trip() {
        let w = WeightVector {
            values: vec![0.1, -2.5e-17, 3.0, f64::MAX],
            profile_hash: "abc123".into(),
        };
        let back = WeightVector::from_text(&w.to_text()).unwrap();
        assert_eq!(back, w);
        assert!(WeightVector::from_text("# psi dimension=3 profile=x\n1\n2\n").is_err());
    }
}
