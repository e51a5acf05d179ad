//! Deep maxout network.
//!
//! Each layer maps an input of width τ to ρ units; every unit owns ν affine
//! pieces and outputs the largest of them. The last layer has a single unit,
//! so the network is a scalar regressor.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::rng;

pub fn relu(x: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        0.0
    }
}

/// One affine map `w·y + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinePiece {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl AffinePiece {
    pub fn new(weights: Vec<f64>, bias: f64) -> Self {
        Self { weights, bias }
    }

    pub fn eval(&self, y: &[f64]) -> Result<f64> {
        check_len(self.weights.len(), y.len())?;
        Ok(dot(&self.weights, y) + self.bias)
    }
}

/// Max over the pieces' affine values at `y`.
pub fn maxout_unit(y: &[f64], pieces: &[AffinePiece]) -> Result<f64> {
    if pieces.is_empty() {
        return Err(Error::invalid("maxout unit needs at least one piece"));
    }
    pieces
        .iter()
        .map(|p| p.eval(y))
        .try_fold(f64::NEG_INFINITY, |m, v| Ok(m.max(v?)))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Weights are stored unit-major, then piece, then input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxoutLayer {
    inputs: usize,
    units: usize,
    pieces: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl MaxoutLayer {
    pub fn zeros(inputs: usize, units: usize, pieces: usize) -> Result<Self> {
        if inputs == 0 || units == 0 || pieces == 0 {
            return Err(Error::invalid("maxout layer dimensions must be positive"));
        }
        Ok(Self {
            inputs,
            units,
            pieces,
            weights: vec![0.0; units * pieces * inputs],
            biases: vec![0.0; units * pieces],
        })
    }

    /// Layer built from explicit pieces, `pieces[unit][piece]`.
    pub fn from_pieces(pieces: &[Vec<AffinePiece>]) -> Result<Self> {
        let units = pieces.len();
        let nu = pieces.first().map_or(0, Vec::len);
        let inputs = pieces.first().and_then(|u| u.first()).map_or(0, |p| p.weights.len());
        let mut layer = Self::zeros(inputs, units, nu)?;
        for (u, unit) in pieces.iter().enumerate() {
            check_len(nu, unit.len())?;
            for (w, p) in unit.iter().enumerate() {
                check_len(inputs, p.weights.len())?;
                layer.piece_weights_mut(u, w).copy_from_slice(&p.weights);
                layer.biases[u * nu + w] = p.bias;
            }
        }
        Ok(layer)
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn units(&self) -> usize {
        self.units
    }

    pub fn pieces(&self) -> usize {
        self.pieces
    }

    pub fn piece_weights(&self, unit: usize, piece: usize) -> &[f64] {
        let start = (unit * self.pieces + piece) * self.inputs;
        &self.weights[start..start + self.inputs]
    }

    fn piece_weights_mut(&mut self, unit: usize, piece: usize) -> &mut [f64] {
        let start = (unit * self.pieces + piece) * self.inputs;
        &mut self.weights[start..start + self.inputs]
    }

    pub fn bias(&self, unit: usize, piece: usize) -> f64 {
        self.biases[unit * self.pieces + piece]
    }

    pub fn unit_pieces(&self, unit: usize) -> Vec<AffinePiece> {
        (0..self.pieces)
            .map(|w| AffinePiece::new(self.piece_weights(unit, w).to_vec(), self.bias(unit, w)))
            .collect()
    }

    /// Unit outputs and the winning piece of each unit. Ties go to the lower piece.
    fn forward_argmax(&self, x: &[f64]) -> (Vec<f64>, Vec<usize>) {
        let mut out = Vec::with_capacity(self.units);
        let mut arg = Vec::with_capacity(self.units);
        for u in 0..self.units {
            let mut best = f64::NEG_INFINITY;
            let mut best_w = 0;
            for w in 0..self.pieces {
                let v = dot(self.piece_weights(u, w), x) + self.bias(u, w);
                if v > best {
                    best = v;
                    best_w = w;
                }
            }
            out.push(best);
            arg.push(best_w);
        }
        (out, arg)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.inputs, x.len())?;
        Ok(self.forward_argmax(x).0)
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }
}

/// Stack of maxout layers ending in one output unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmnNetwork {
    layers: Vec<MaxoutLayer>,
}

/// Shape of a network: hidden widths and pieces per layer (hidden layers, then output).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DmnShape {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub pieces: usize,
}

impl DmnShape {
    /// `depth` maxout layers in total, the last being the scalar output.
    pub fn new(input_dim: usize, depth: usize, hidden_width: usize, pieces: usize) -> Self {
        Self {
            input_dim,
            hidden: vec![hidden_width; depth.saturating_sub(1)],
            pieces,
        }
    }
}

impl DmnNetwork {
    pub fn from_layers(layers: Vec<MaxoutLayer>) -> Result<Self> {
        let last = layers.last().ok_or_else(|| Error::invalid("network has no layers"))?;
        if last.units != 1 {
            return Err(Error::invalid("final maxout layer must have one unit"));
        }
        for pair in layers.windows(2) {
            check_len(pair[0].units, pair[1].inputs)?;
        }
        Ok(Self { layers })
    }

    pub fn zeros(shape: &DmnShape) -> Result<Self> {
        let mut widths = vec![shape.input_dim];
        widths.extend_from_slice(&shape.hidden);
        widths.push(1);
        let layers = widths
            .windows(2)
            .map(|w| MaxoutLayer::zeros(w[0], w[1], shape.pieces))
            .collect::<Result<_>>()?;
        Self::from_layers(layers)
    }

    /// Uniform init with variance 1/fan_in, deterministic per seed.
    pub fn random(shape: &DmnShape, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(shape)?;
        let mut r = rng::stream(seed, &[0x0D30]);
        for layer in &mut net.layers {
            let a = (3.0 / layer.inputs as f64).sqrt();
            layer.weights.iter_mut().for_each(|w| *w = r.gen_range(-a..a));
            layer.biases.iter_mut().for_each(|b| *b = r.gen_range(-0.1..0.1));
        }
        Ok(net)
    }

    pub fn layers(&self) -> &[MaxoutLayer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(MaxoutLayer::param_count).sum()
    }

    /// Scalar network output for one input vector.
    pub fn forward(&self, y: &[f64]) -> Result<f64> {
        check_len(self.input_dim(), y.len())?;
        let mut h = y.to_vec();
        for layer in &self.layers {
            h = layer.forward_argmax(&h).0;
        }
        Ok(h[0])
    }

    pub fn mse(&self, records: &[Vec<f64>], targets: &[f64]) -> Result<f64> {
        check_len(records.len(), targets.len())?;
        if records.is_empty() {
            return Err(Error::invalid("empty training set"));
        }
        let mut sum = 0.0;
        for (x, t) in records.iter().zip(targets) {
            let d = self.forward(x)? - t;
            sum += d * d;
        }
        Ok(sum / records.len() as f64)
    }

    /// Accumulates d(loss)/d(params) for one record into `grads` (same layout as
    /// the layers' weights then biases). Returns the prediction.
    fn backprop(&self, x: &[f64], target: f64, scale: f64, grads: &mut [Vec<f64>]) -> f64 {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut args = Vec::with_capacity(self.layers.len());
        let mut h = x.to_vec();
        for layer in &self.layers {
            let (out, arg) = layer.forward_argmax(&h);
            inputs.push(h);
            args.push(arg);
            h = out;
        }
        let pred = h[0];
        let mut upstream = vec![2.0 * (pred - target) * scale];
        for (li, layer) in self.layers.iter().enumerate().rev() {
            let x = &inputs[li];
            let g = &mut grads[li];
            let nw = layer.weights.len();
            let mut down = vec![0.0; layer.inputs];
            for (u, &gu) in upstream.iter().enumerate() {
                if gu == 0.0 {
                    continue;
                }
                let w = args[li][u];
                let start = (u * layer.pieces + w) * layer.inputs;
                for k in 0..layer.inputs {
                    g[start + k] += gu * x[k];
                    down[k] += gu * layer.weights[start + k];
                }
                g[nw + u * layer.pieces + w] += gu;
            }
            upstream = down;
        }
        pred
    }

    fn apply_step(&mut self, grads: &[Vec<f64>], lr: f64, clip: f64) {
        let norm = grads
            .iter()
            .flat_map(|g| g.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        let factor = if norm > clip { clip / norm } else { 1.0 };
        for (layer, g) in self.layers.iter_mut().zip(grads) {
            let nw = layer.weights.len();
            for (w, d) in layer.weights.iter_mut().zip(&g[..nw]) {
                *w -= lr * factor * d;
            }
            for (b, d) in layer.biases.iter_mut().zip(&g[nw..]) {
                *b -= lr * factor * d;
            }
        }
    }
}

/// Mini-batch gradient descent settings for [`train_dmn`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DmnTrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Gradient L2-norm ceiling per step.
    pub clip_norm: f64,
    pub seed: u64,
}

impl Default for DmnTrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 200,
            batch_size: 16,
            clip_norm: 5.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmnTrainLog {
    pub initial_mse: f64,
    pub final_mse: f64,
    /// Full-batch error after each epoch.
    pub epoch_mse: Vec<f64>,
}

/// Fits `network` to `(records, targets)` by mini-batch gradient descent on
/// squared error. The returned parameters are the best seen on the full
/// training set, so the final error never exceeds the initial error.
pub fn train_dmn(
    network: &DmnNetwork,
    records: &[Vec<f64>],
    targets: &[f64],
    config: &DmnTrainConfig,
) -> Result<(DmnNetwork, DmnTrainLog)> {
    if records.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    check_len(records.len(), targets.len())?;
    for r in records {
        check_len(network.input_dim(), r.len())?;
    }
    if config.batch_size == 0 || config.learning_rate.is_nan() || config.learning_rate <= 0.0 {
        return Err(Error::Config("dmn batch size and learning rate must be positive".into()));
    }
    let initial_mse = network.mse(records, targets)?;
    let mut best = (network.clone(), initial_mse);
    let mut current = network.clone();
    let mut order: Vec<usize> = (0..records.len()).collect();
    let mut epoch_mse = Vec::with_capacity(config.epochs);
    let mut r = rng::stream(config.seed, &[0x0D31]);
    for _ in 0..config.epochs {
        if best.1 == 0.0 {
            break;
        }
        order.shuffle(&mut r);
        for batch in order.chunks(config.batch_size) {
            let mut grads: Vec<Vec<f64>> = current
                .layers
                .iter()
                .map(|l| vec![0.0; l.param_count()])
                .collect();
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                current.backprop(&records[i], targets[i], scale, &mut grads);
            }
            current.apply_step(&grads, config.learning_rate, config.clip_norm);
        }
        let mse = current.mse(records, targets)?;
        epoch_mse.push(mse);
        if mse < best.1 {
            best = (current.clone(), mse);
        }
    }
    let (net, final_mse) = best;
    Ok((
        net,
        DmnTrainLog {
            initial_mse,
            final_mse,
            epoch_mse,
        },
    ))
}
