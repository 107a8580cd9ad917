//! Five-layer perceptron: input, three ReLU hidden layers, softmax output
//! over {benign, attack}. Trained online by mini-batch gradient descent on
//! cross-entropy.
//!
//! # Weight file
//!
//! Plain text, one item per line:
//!
//! ```text
//! mlp v1
//! layer_sizes <d_in> <h1> <h2> <h3> 2
//! learning_rate <f64>
//! batch_size <usize>
//! seed <u64>
//! updates <u64>
//! w<i> <n_out*n_in values, row-major by output unit>
//! b<i> <n_out values>
//! ```
//!
//! Floats use the shortest representation that parses back exactly.

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};

use super::{DetectionError, Result};
use crate::rng::{stream, stream_rng};
use crate::table::FeatureTable;
use crate::Label;

pub const BATCH_SIZE: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlpConfig {
    pub hidden: [usize; 3],
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: [32, 16, 8],
            learning_rate: 0.05,
            batch_size: BATCH_SIZE,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Layer {
    n_in: usize,
    n_out: usize,
    /// Row-major: `weights[o * n_in + i]`.
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl Layer {
    fn forward(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.n_out {
            let w = &self.weights[o * self.n_in..(o + 1) * self.n_in];
            let z: f64 = w.iter().zip(input).map(|(a, b)| a * b).sum::<f64>() + self.biases[o];
            out.push(z);
        }
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layer_sizes: [usize; 5],
    layers: Vec<Layer>,
    learning_rate: f64,
    batch_size: usize,
    rng_seed: u64,
    updates: u64,
    epochs: u64,
}

/// Gradients in the same flat order as [`MlpModel::param`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Gradients {
    pub fn get(&self, index: usize) -> f64 {
        let mut i = index;
        for (w, b) in &self.layers {
            if i < w.len() {
                return w[i];
            }
            i -= w.len();
            if i < b.len() {
                return b[i];
            }
            i -= b.len();
        }
        panic!("gradient index {index} out of range");
    }

    pub fn len(&self) -> usize {
        self.layers.iter().map(|(w, b)| w.len() + b.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn softmax(z: &[f64]) -> [f64; 2] {
    let max = z[0].max(z[1]);
    let e0 = (z[0] - max).exp();
    let e1 = (z[1] - max).exp();
    let s = e0 + e1;
    [e0 / s, e1 / s]
}

impl MlpModel {
    /// He-initialized weights, zero biases.
    pub fn new(d_in: usize, config: &MlpConfig) -> Self {
        let sizes = [
            d_in,
            config.hidden[0],
            config.hidden[1],
            config.hidden[2],
            2,
        ];
        let mut rng = stream_rng(config.seed, stream::MLP_INIT);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (n_in, n_out) = (w[0], w[1]);
                let std = (2.0 / n_in.max(1) as f64).sqrt();
                let normal = Normal::new(0.0, std).expect("finite std");
                Layer {
                    n_in,
                    n_out,
                    weights: (0..n_in * n_out).map(|_| normal.sample(&mut rng)).collect(),
                    biases: vec![0.0; n_out],
                }
            })
            .collect();
        Self {
            layer_sizes: sizes,
            layers,
            learning_rate: config.learning_rate,
            batch_size: config.batch_size.max(1),
            rng_seed: config.seed,
            updates: 0,
            epochs: 0,
        }
    }

    /// All weights and biases zero.
    pub fn zeros(d_in: usize, config: &MlpConfig) -> Self {
        let mut m = Self::new(d_in, config);
        for l in &mut m.layers {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
        }
        m
    }

    pub fn layer_sizes(&self) -> [usize; 5] {
        self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        self.learning_rate = lr;
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Multiply-adds of one forward pass.
    pub fn inference_ops(&self) -> u64 {
        self.layers.iter().map(|l| (l.n_in * l.n_out) as u64).sum()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    fn locate(&self, index: usize) -> (usize, bool, usize) {
        let mut i = index;
        for (k, l) in self.layers.iter().enumerate() {
            if i < l.weights.len() {
                return (k, true, i);
            }
            i -= l.weights.len();
            if i < l.biases.len() {
                return (k, false, i);
            }
            i -= l.biases.len();
        }
        panic!("parameter index {index} out of range");
    }

    /// Flat parameter access: layer by layer, weights then biases.
    pub fn param(&self, index: usize) -> f64 {
        let (k, is_w, i) = self.locate(index);
        if is_w {
            self.layers[k].weights[i]
        } else {
            self.layers[k].biases[i]
        }
    }

    pub fn set_param(&mut self, index: usize, value: f64) {
        let (k, is_w, i) = self.locate(index);
        if is_w {
            self.layers[k].weights[i] = value;
        } else {
            self.layers[k].biases[i] = value;
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(DetectionError::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Pre-activations and activations of every layer.
    fn forward_trace(&self, x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut zs = Vec::with_capacity(self.layers.len());
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::with_capacity(layer.n_out);
            layer.forward(acts.last().expect("input"), &mut z);
            let a = if k == last {
                z.clone()
            } else {
                z.iter().map(|v| v.max(0.0)).collect()
            };
            zs.push(z);
            acts.push(a);
        }
        (zs, acts)
    }

    fn logits(&self, x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            layer.forward(&cur, &mut next);
            if k != last {
                next.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    pub fn probabilities(&self, x: &[f64]) -> Result<[f64; 2]> {
        self.check_dim(x)?;
        Ok(softmax(&self.logits(x)))
    }

    /// Class by argmax (ties go to benign) and the probability pair.
    pub fn predict(&self, x: &[f64]) -> Result<(Label, [f64; 2])> {
        let p = self.probabilities(x)?;
        let class = if p[1] > p[0] {
            Label::Attack
        } else {
            Label::Benign
        };
        Ok((class, p))
    }

    pub fn predict_table(&self, table: &FeatureTable) -> Result<Vec<Label>> {
        table
            .rows()
            .iter()
            .map(|r| self.predict(r).map(|(c, _)| c))
            .collect()
    }

    fn sample_loss(&self, x: &[f64], y: Label) -> f64 {
        let z = self.logits(x);
        let max = z[0].max(z[1]);
        let lse = max + ((z[0] - max).exp() + (z[1] - max).exp()).ln();
        lse - z[y.index()]
    }

    /// Mean cross-entropy over a batch.
    pub fn loss(&self, batch: &[(&[f64], Label)]) -> Result<f64> {
        let mut total = 0.0;
        for (x, y) in batch {
            self.check_dim(x)?;
            total += self.sample_loss(x, *y);
        }
        Ok(total / batch.len().max(1) as f64)
    }

    /// Mean loss and its gradient over a batch, by backpropagation.
    pub fn gradients(&self, batch: &[(&[f64], Label)]) -> Result<(f64, Gradients)> {
        let mut grads: Vec<(Vec<f64>, Vec<f64>)> = self
            .layers
            .iter()
            .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.biases.len()]))
            .collect();
        let mut total = 0.0;
        for (x, y) in batch {
            self.check_dim(x)?;
            let (zs, acts) = self.forward_trace(x);
            let out = zs.last().expect("output layer");
            let p = softmax(out);
            let max = out[0].max(out[1]);
            total += max + ((out[0] - max).exp() + (out[1] - max).exp()).ln() - out[y.index()];
            let mut delta: Vec<f64> = vec![p[0], p[1]];
            delta[y.index()] -= 1.0;
            for k in (0..self.layers.len()).rev() {
                let layer = &self.layers[k];
                let a_prev = &acts[k];
                let (gw, gb) = &mut grads[k];
                for o in 0..layer.n_out {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    gb[o] += d;
                    let row = &mut gw[o * layer.n_in..(o + 1) * layer.n_in];
                    for (g, a) in row.iter_mut().zip(a_prev) {
                        *g += d * a;
                    }
                }
                if k > 0 {
                    let z_prev = &zs[k - 1];
                    let mut prev = vec![0.0; layer.n_in];
                    for (row, &d) in layer.weights.chunks_exact(layer.n_in).zip(&delta) {
                        if d == 0.0 {
                            continue;
                        }
                        for (pv, w) in prev.iter_mut().zip(row) {
                            *pv += w * d;
                        }
                    }
                    for (pv, z) in prev.iter_mut().zip(z_prev) {
                        if *z <= 0.0 {
                            *pv = 0.0;
                        }
                    }
                    delta = prev;
                }
            }
        }
        let n = batch.len().max(1) as f64;
        for (gw, gb) in &mut grads {
            gw.iter_mut().for_each(|g| *g /= n);
            gb.iter_mut().for_each(|g| *g /= n);
        }
        Ok((total / n, Gradients { layers: grads }))
    }

    fn step(&mut self, batch: &[(&[f64], Label)]) -> Result<f64> {
        let (loss, g) = self.gradients(batch)?;
        if !loss.is_finite() {
            return Err(DetectionError::NonFiniteLoss);
        }
        let lr = self.learning_rate;
        for (layer, (gw, gb)) in self.layers.iter_mut().zip(&g.layers) {
            for (w, d) in layer.weights.iter_mut().zip(gw) {
                *w -= lr * d;
            }
            for (b, d) in layer.biases.iter_mut().zip(gb) {
                *b -= lr * d;
            }
        }
        self.updates += 1;
        Ok(loss)
    }

    /// Consumes a stream of labelled samples in order, updating after every
    /// `batch_size` samples (and once more for a trailing partial batch).
    /// Returns the mean batch loss.
    pub fn train_online<I, X>(&mut self, samples: I) -> Result<f64>
    where
        I: IntoIterator<Item = (X, Label)>,
        X: AsRef<[f64]>,
    {
        let mut buf: Vec<(X, Label)> = Vec::with_capacity(self.batch_size);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        let mut flush = |model: &mut Self, buf: &mut Vec<(X, Label)>| -> Result<()> {
            if buf.is_empty() {
                return Ok(());
            }
            let batch: Vec<(&[f64], Label)> = buf.iter().map(|(x, y)| (x.as_ref(), *y)).collect();
            loss_sum += model.step(&batch)?;
            batches += 1;
            buf.clear();
            Ok(())
        };
        for (x, y) in samples {
            self.check_dim(x.as_ref())?;
            buf.push((x, y));
            if buf.len() == self.batch_size {
                flush(self, &mut buf)?;
            }
        }
        flush(self, &mut buf)?;
        Ok(if batches > 0 {
            loss_sum / batches as f64
        } else {
            0.0
        })
    }

    /// Runs `epochs` passes over a labelled table, each in a freshly
    /// shuffled order drawn from the model seed.
    pub fn fit(&mut self, table: &FeatureTable, labels: &[Label], epochs: usize) -> Result<f64> {
        if labels.len() != table.n_rows() {
            return Err(DetectionError::LengthMismatch {
                predicted: table.n_rows(),
                truth: labels.len(),
            });
        }
        let mut order: Vec<usize> = (0..table.n_rows()).collect();
        let mut loss = 0.0;
        for _ in 0..epochs {
            let mut rng = stream_rng(self.rng_seed ^ self.epochs, stream::MLP_SHUFFLE);
            order.shuffle(&mut rng);
            self.epochs += 1;
            loss = self.train_online(order.iter().map(|&i| (table.row(i), labels[i])))?;
        }
        Ok(loss)
    }

    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
        writeln!(w, "mlp v1")?;
        let sizes: Vec<String> = self.layer_sizes.iter().map(usize::to_string).collect();
        writeln!(w, "layer_sizes {}", sizes.join(" "))?;
        writeln!(w, "learning_rate {}", self.learning_rate)?;
        writeln!(w, "batch_size {}", self.batch_size)?;
        writeln!(w, "seed {}", self.rng_seed)?;
        writeln!(w, "updates {}", self.updates)?;
        for (k, l) in self.layers.iter().enumerate() {
            writeln!(w, "w{k} {}", join(&l.weights))?;
            writeln!(w, "b{k} {}", join(&l.biases))?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(reader: R) -> Result<Self> {
        let bad = |m: String| DetectionError::ModelFormat(m);
        let mut lines = reader.lines();
        let mut next = |key: &str| -> Result<Vec<String>> {
            let line = lines
                .next()
                .ok_or_else(|| bad(format!("missing `{key}`")))??;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(key) {
                return Err(bad(format!("expected `{key}`, got `{line}`")));
            }
            Ok(parts.map(str::to_string).collect())
        };
        fn parse<T: std::str::FromStr>(s: &str) -> Result<T> {
            s.parse()
                .map_err(|_| DetectionError::ModelFormat(format!("cannot parse `{s}`")))
        }
        if next("mlp")? != ["v1"] {
            return Err(bad("unsupported version".into()));
        }
        let sizes: Vec<usize> = next("layer_sizes")?
            .iter()
            .map(|s| parse(s))
            .collect::<Result<_>>()?;
        let sizes: [usize; 5] = sizes
            .try_into()
            .map_err(|_| bad("layer_sizes needs 5 entries".into()))?;
        if sizes[4] != 2 {
            return Err(bad("output layer must have 2 units".into()));
        }
        let one = |v: Vec<String>| -> Result<String> {
            v.into_iter()
                .next()
                .ok_or_else(|| bad("missing value".into()))
        };
        let learning_rate: f64 = parse(&one(next("learning_rate")?)?)?;
        let batch_size: usize = parse(&one(next("batch_size")?)?)?;
        let rng_seed: u64 = parse(&one(next("seed")?)?)?;
        let updates: u64 = parse(&one(next("updates")?)?)?;
        let mut layers = Vec::new();
        for k in 0..4 {
            let (n_in, n_out) = (sizes[k], sizes[k + 1]);
            let weights: Vec<f64> = next(&format!("w{k}"))?
                .iter()
                .map(|s| parse(s))
                .collect::<Result<_>>()?;
            let biases: Vec<f64> = next(&format!("b{k}"))?
                .iter()
                .map(|s| parse(s))
                .collect::<Result<_>>()?;
            if weights.len() != n_in * n_out || biases.len() != n_out {
                return Err(bad(format!("layer {k} has wrong parameter count")));
            }
            layers.push(Layer {
                n_in,
                n_out,
                weights,
                biases,
            });
        }
        Ok(Self {
            layer_sizes: sizes,
            layers,
            learning_rate,
            batch_size: batch_size.max(1),
            rng_seed,
            updates,
            epochs: 0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::evaluate;
    use rand::Rng;

    fn config(seed: u64) -> MlpConfig {
        MlpConfig {
            seed,
            ..MlpConfig::default()
        }
    }

    /// Two features; attack iff x0 + x1 > 0.2, with a margin of 0.1.
    fn separable(n: usize, seed: u64) -> (FeatureTable, Vec<Label>) {
        let mut rng = stream_rng(seed, 99);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        while rows.len() < n {
            let x: f64 = rng.random_range(-1.0..1.0);
            let y: f64 = rng.random_range(-1.0..1.0);
            let s = x + y - 0.2;
            if s.abs() < 0.1 {
                continue;
            }
            rows.push(vec![x, y]);
            labels.push(if s > 0.0 {
                Label::Attack
            } else {
                Label::Benign
            });
        }
        let t =
            FeatureTable::new(vec!["x".into(), "y".into()], rows, Some(labels.clone())).unwrap();
        (t, labels)
    }

    #[test]
    fn shapes_and_softmax() {
        let m = MlpModel::new(5, &config(1));
        assert_eq!(m.layer_sizes(), [5, 32, 16, 8, 2]);
        assert_eq!(
            m.param_count(),
            5 * 32 + 32 + 32 * 16 + 16 + 16 * 8 + 8 + 8 * 2 + 2
        );
        let mut rng = stream_rng(3, 3);
        for _ in 0..200 {
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-50.0..50.0)).collect();
            let p = m.probabilities(&x).unwrap();
            assert!((p[0] + p[1] - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn zero_network_is_indifferent() {
        let m = MlpModel::zeros(3, &config(0));
        assert_eq!(m.probabilities(&[1.0, -2.0, 3.0]).unwrap(), [0.5, 0.5]);
    }

    #[test]
    fn dimension_checks() {
        let mut m = MlpModel::new(3, &config(0));
        assert!(matches!(
            m.predict(&[1.0]),
            Err(DetectionError::DimensionMismatch { .. })
        ));
        let bad = vec![(vec![1.0, 2.0], Label::Attack)];
        assert!(m.train_online(bad).is_err());
    }

    #[test]
    fn gradient_matches_central_differences() {
        let m = MlpModel::new(4, &config(17));
        let xs = [
            vec![0.3, -1.2, 0.8, 0.5],
            vec![-0.7, 0.4, 1.1, -0.2],
            vec![1.5, 0.1, -0.6, 0.9],
        ];
        let batch: Vec<(&[f64], Label)> = vec![
            (&xs[0], Label::Attack),
            (&xs[1], Label::Benign),
            (&xs[2], Label::Attack),
        ];
        let (_, g) = m.gradients(&batch).unwrap();
        assert_eq!(g.len(), m.param_count());
        let h = 1e-5;
        let mut worst = 0.0f64;
        for i in 0..m.param_count() {
            let mut plus = m.clone();
            plus.set_param(i, m.param(i) + h);
            let mut minus = m.clone();
            minus.set_param(i, m.param(i) - h);
            let numeric = (plus.loss(&batch).unwrap() - minus.loss(&batch).unwrap()) / (2.0 * h);
            let analytic = g.get(i);
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }

    #[test]
    fn zero_learning_rate_is_a_no_op() {
        let (t, labels) = separable(100, 5);
        let mut m = MlpModel::new(
            2,
            &MlpConfig {
                learning_rate: 0.0,
                ..config(2)
            },
        );
        let before = m.clone();
        m.fit(&t, &labels, 3).unwrap();
        for i in 0..m.param_count() {
            assert_eq!(m.param(i).to_bits(), before.param(i).to_bits());
        }
    }

    #[test]
    fn learns_separable_data() {
        let (t, labels) = separable(400, 8);
        let mut m = MlpModel::new(2, &config(4));
        m.fit(&t, &labels, 200).unwrap();
        let pred = m.predict_table(&t).unwrap();
        let r = evaluate(&pred, &labels).unwrap();
        assert!(r.f_measure >= 0.99, "{r:?}");
        assert!(r.accuracy() >= 0.99);
    }

    #[test]
    fn training_is_deterministic() {
        let (t, labels) = separable(200, 1);
        let mut a = MlpModel::new(2, &config(9));
        let mut b = MlpModel::new(2, &config(9));
        a.fit(&t, &labels, 5).unwrap();
        b.fit(&t, &labels, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn divergence_is_reported() {
        let (t, labels) = separable(64, 2);
        let mut m = MlpModel::new(
            2,
            &MlpConfig {
                learning_rate: 1e300,
                ..config(3)
            },
        );
        assert!(matches!(
            m.fit(&t, &labels, 5),
            Err(DetectionError::NonFiniteLoss)
        ));
    }

    #[test]
    fn save_load_round_trip() {
        let (t, labels) = separable(64, 2);
        let mut m = MlpModel::new(2, &config(6));
        m.fit(&t, &labels, 2).unwrap();
        let mut buf = Vec::new();
        m.save(&mut buf).unwrap();
        let back = MlpModel::load(buf.as_slice()).unwrap();
        for i in 0..m.param_count() {
            assert_eq!(m.param(i).to_bits(), back.param(i).to_bits());
        }
        assert_eq!(back.updates(), m.updates());
        assert!(MlpModel::load("mlp v2\n".as_bytes()).is_err());
    }
}
