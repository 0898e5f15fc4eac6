//! Multilayer perceptron regression with sigmoid hidden units and a linear
//! output layer, trained by full-batch gradient descent on mean squared error.

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::RegressionSet;
use crate::error::{Error, Result};

pub const MLP_FORMAT_VERSION: u32 = 1;
const MLP_FORMAT: &str = "gesmap-mlp";

#[derive(Debug, Clone, PartialEq)]
struct Layer {
    inputs: usize,
    outputs: usize,
    /// Row-major `inputs × outputs`.
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl Layer {
    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.biases);
        for (i, xi) in x.iter().enumerate() {
            let row = &self.weights[i * self.outputs..(i + 1) * self.outputs];
            for (o, w) in out.iter_mut().zip(row) {
                *o += xi * w;
            }
        }
    }
}

/// Per-dimension min/max; degenerate ranges map to 0.
#[derive(Debug, Clone, PartialEq)]
struct Scaling {
    min: Vec<f64>,
    max: Vec<f64>,
}

impl Scaling {
    fn identity(d: usize) -> Self {
        Scaling {
            min: vec![0.0; d],
            max: vec![1.0; d],
        }
    }

    fn fit<'a>(rows: impl Iterator<Item = &'a [f64]>, d: usize) -> Self {
        let mut s = Scaling {
            min: vec![f64::INFINITY; d],
            max: vec![f64::NEG_INFINITY; d],
        };
        for r in rows {
            for k in 0..d {
                s.min[k] = s.min[k].min(r[k]);
                s.max[k] = s.max[k].max(r[k]);
            }
        }
        s
    }

    fn span(&self, k: usize) -> f64 {
        let r = self.max[k] - self.min[k];
        if r > 0.0 {
            r
        } else {
            1.0
        }
    }

    fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(k, v)| (v - self.min[k]) / self.span(k))
            .collect()
    }

    fn denormalize(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .enumerate()
            .map(|(k, v)| v * self.span(k) + self.min[k])
            .collect()
    }
}

/// Trained (or freshly initialized) network plus the normalization it was
/// trained under. Serializes as a versioned JSON document with base64
/// little-endian float arrays, so round trips are bit-exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "MlpDocument", try_from = "MlpDocument")]
pub struct MlpModel {
    layer_sizes: Vec<usize>,
    layers: Vec<Layer>,
    input_scaling: Scaling,
    output_scaling: Scaling,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub fn mlp_init(layer_sizes: &[usize], seed: u64) -> Result<MlpModel> {
    if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
        return Err(Error::param(format!(
            "MLP needs at least 2 layers of size ≥ 1, got {layer_sizes:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = layer_sizes
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            Layer {
                inputs: fan_in,
                outputs: fan_out,
                weights: (0..fan_in * fan_out)
                    .map(|_| rng.random_range(-limit..=limit))
                    .collect(),
                biases: vec![0.0; fan_out],
            }
        })
        .collect();
    Ok(MlpModel {
        layer_sizes: layer_sizes.to_vec(),
        layers,
        input_scaling: Scaling::identity(layer_sizes[0]),
        output_scaling: Scaling::identity(*layer_sizes.last().unwrap()),
    })
}

impl MlpModel {
    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    /// `(rows, cols)` of each weight matrix.
    pub fn weight_shapes(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(|l| (l.inputs, l.outputs)).collect()
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        &self.layers[layer].weights
    }

    pub fn biases(&self, layer: usize) -> &[f64] {
        &self.layers[layer].biases
    }

    fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    fn parameter_mut(&mut self, mut index: usize) -> &mut f64 {
        for l in &mut self.layers {
            if index < l.weights.len() {
                return &mut l.weights[index];
            }
            index -= l.weights.len();
            if index < l.biases.len() {
                return &mut l.biases[index];
            }
            index -= l.biases.len();
        }
        panic!("parameter index out of range")
    }

    /// Forward pass in normalized space; keeps every layer's activations.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::with_capacity(layer.outputs);
            layer.forward(acts.last().unwrap(), &mut z);
            if li < last {
                z.iter_mut().for_each(|v| *v = sigmoid(*v));
            }
            acts.push(z);
        }
        acts
    }

    fn check_dims(&self, set: &RegressionSet) -> Result<()> {
        if set.input_dim() != self.input_dim() || set.output_dim() != self.output_dim() {
            return Err(Error::Schema(format!(
                "training set is {}→{}, model is {}→{}",
                set.input_dim(),
                set.output_dim(),
                self.input_dim(),
                self.output_dim()
            )));
        }
        Ok(())
    }
}

struct Normalized {
    inputs: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
}

fn normalized(model: &MlpModel, set: &RegressionSet) -> Normalized {
    Normalized {
        inputs: set
            .inputs()
            .iter()
            .map(|x| model.input_scaling.normalize(x))
            .collect(),
        targets: set
            .targets()
            .iter()
            .map(|y| model.output_scaling.normalize(y))
            .collect(),
    }
}

fn fit_scaling(model: &mut MlpModel, set: &RegressionSet) {
    model.input_scaling = Scaling::fit(set.inputs().iter().map(Vec::as_slice), set.input_dim());
    model.output_scaling = Scaling::fit(set.targets().iter().map(Vec::as_slice), set.output_dim());
}

fn loss(model: &MlpModel, data: &Normalized) -> f64 {
    let d_out = model.output_dim();
    let mut total = 0.0;
    for (x, t) in data.inputs.iter().zip(&data.targets) {
        let acts = model.activations(x);
        total += acts
            .last()
            .unwrap()
            .iter()
            .zip(t)
            .map(|(y, t)| (y - t).powi(2))
            .sum::<f64>();
    }
    total / (data.inputs.len() * d_out) as f64
}

/// Loss and its gradient, laid out like the parameter vector (per layer:
/// weights then biases).
fn loss_and_gradient(model: &MlpModel, data: &Normalized) -> (f64, Vec<f64>) {
    let n_layers = model.layers.len();
    let scale = 1.0 / (data.inputs.len() * model.output_dim()) as f64;
    let mut gw: Vec<Vec<f64>> = model
        .layers
        .iter()
        .map(|l| vec![0.0; l.weights.len()])
        .collect();
    let mut gb: Vec<Vec<f64>> = model
        .layers
        .iter()
        .map(|l| vec![0.0; l.biases.len()])
        .collect();
    let mut total = 0.0;
    for (x, t) in data.inputs.iter().zip(&data.targets) {
        let acts = model.activations(x);
        let out = &acts[n_layers];
        let mut delta: Vec<f64> = out
            .iter()
            .zip(t)
            .map(|(y, t)| 2.0 * (y - t) * scale)
            .collect();
        total += out.iter().zip(t).map(|(y, t)| (y - t).powi(2)).sum::<f64>();
        for li in (0..n_layers).rev() {
            let layer = &model.layers[li];
            let a_in = &acts[li];
            for (i, ai) in a_in.iter().enumerate() {
                let row = &mut gw[li][i * layer.outputs..(i + 1) * layer.outputs];
                for (g, d) in row.iter_mut().zip(&delta) {
                    *g += ai * d;
                }
            }
            for (g, d) in gb[li].iter_mut().zip(&delta) {
                *g += d;
            }
            if li > 0 {
                delta = (0..layer.inputs)
                    .map(|i| {
                        let row = &layer.weights[i * layer.outputs..(i + 1) * layer.outputs];
                        let back: f64 = row.iter().zip(&delta).map(|(w, d)| w * d).sum();
                        back * a_in[i] * (1.0 - a_in[i])
                    })
                    .collect();
            }
        }
    }
    let grad = gw
        .into_iter()
        .zip(gb)
        .flat_map(|(w, b)| w.into_iter().chain(b))
        .collect();
    (total * scale, grad)
}

/// Refits normalization to `set` and runs `epochs` of full-batch gradient
/// descent. Entry `e` of the returned curve is the loss before update `e`.
/// Zero epochs return the model untouched.
pub fn mlp_train(
    model: MlpModel,
    set: &RegressionSet,
    epochs: usize,
    learning_rate: f64,
) -> Result<(MlpModel, Vec<f64>)> {
    model.check_dims(set)?;
    if !(learning_rate > 0.0 && learning_rate.is_finite()) {
        return Err(Error::param(format!(
            "learning rate must be positive, got {learning_rate}"
        )));
    }
    if epochs == 0 {
        return Ok((model, Vec::new()));
    }
    let mut model = model;
    fit_scaling(&mut model, set);
    let data = normalized(&model, set);
    let mut curve = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let (l, grad) = loss_and_gradient(&model, &data);
        if !l.is_finite() {
            return Err(Error::Divergence { epoch, loss: l });
        }
        curve.push(l);
        let mut it = grad.iter();
        for layer in &mut model.layers {
            for w in layer.weights.iter_mut().chain(layer.biases.iter_mut()) {
                *w -= learning_rate * it.next().unwrap();
            }
        }
    }
    let last = loss(&model, &data);
    if !last.is_finite() {
        return Err(Error::Divergence {
            epoch: epochs,
            loss: last,
        });
    }
    Ok((model, curve))
}

/// Mean squared error of `model` on `set`, measured in the model's
/// normalized output space.
pub fn mlp_loss(model: &MlpModel, set: &RegressionSet) -> Result<f64> {
    model.check_dims(set)?;
    Ok(loss(model, &normalized(model, set)))
}

pub fn mlp_predict(model: &MlpModel, input: &[f64]) -> Result<Vec<f64>> {
    if input.len() != model.input_dim() {
        return Err(Error::Schema(format!(
            "input has {} dims, model expects {}",
            input.len(),
            model.input_dim()
        )));
    }
    let x = model.input_scaling.normalize(input);
    let acts = model.activations(&x);
    Ok(model.output_scaling.denormalize(acts.last().unwrap()))
}

/// Largest relative disagreement between backpropagated gradients and
/// central finite differences with step `h`, over every weight and bias.
/// Normalization is fitted to `set` first, as training would.
pub fn gradient_check(model: &MlpModel, set: &RegressionSet, h: f64) -> Result<f64> {
    model.check_dims(set)?;
    if !(h > 0.0) {
        return Err(Error::param("finite-difference step must be positive"));
    }
    let mut probe = model.clone();
    fit_scaling(&mut probe, set);
    let data = normalized(&probe, set);
    let (_, analytic) = loss_and_gradient(&probe, &data);
    let mut worst: f64 = 0.0;
    for (p, g_bp) in analytic.iter().enumerate().take(probe.parameter_count()) {
        let orig = *probe.parameter_mut(p);
        *probe.parameter_mut(p) = orig + h;
        let up = loss(&probe, &data);
        *probe.parameter_mut(p) = orig - h;
        let down = loss(&probe, &data);
        *probe.parameter_mut(p) = orig;
        let g_fd = (up - down) / (2.0 * h);
        let err = (g_bp - g_fd).abs() / g_bp.abs().max(g_fd.abs()).max(1e-12);
        worst = worst.max(err);
    }
    Ok(worst)
}

#[derive(Serialize, Deserialize)]
struct MlpDocument {
    format: String,
    version: u32,
    layer_sizes: Vec<usize>,
    weights: String,
    biases: String,
    input_min: String,
    input_max: String,
    output_min: String,
    output_max: String,
}

fn encode(values: &[f64]) -> String {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    B64.encode(bytes)
}

fn decode(field: &str, text: &str, expected: usize) -> Result<Vec<f64>> {
    let bytes = B64
        .decode(text)
        .map_err(|e| Error::Data(format!("model field {field}: {e}")))?;
    if bytes.len() != expected * 8 {
        return Err(Error::Data(format!(
            "model field {field} holds {} bytes, expected {}",
            bytes.len(),
            expected * 8
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data(format!(
            "model field {field} has non-finite values"
        )));
    }
    Ok(values)
}

impl From<MlpModel> for MlpDocument {
    fn from(m: MlpModel) -> Self {
        let weights: Vec<f64> = m
            .layers
            .iter()
            .flat_map(|l| l.weights.iter().copied())
            .collect();
        let biases: Vec<f64> = m
            .layers
            .iter()
            .flat_map(|l| l.biases.iter().copied())
            .collect();
        MlpDocument {
            format: MLP_FORMAT.into(),
            version: MLP_FORMAT_VERSION,
            layer_sizes: m.layer_sizes,
            weights: encode(&weights),
            biases: encode(&biases),
            input_min: encode(&m.input_scaling.min),
            input_max: encode(&m.input_scaling.max),
            output_min: encode(&m.output_scaling.min),
            output_max: encode(&m.output_scaling.max),
        }
    }
}

impl TryFrom<MlpDocument> for MlpModel {
    type Error = Error;

    fn try_from(doc: MlpDocument) -> Result<Self> {
        if doc.format != MLP_FORMAT {
            return Err(Error::Schema(format!(
                "not an MLP document: format {:?}",
                doc.format
            )));
        }
        if doc.version != MLP_FORMAT_VERSION {
            return Err(Error::Version {
                found: doc.version,
                expected: MLP_FORMAT_VERSION,
            });
        }
        let sizes = doc.layer_sizes;
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Schema(format!("invalid layer sizes {sizes:?}")));
        }
        let n_w: usize = sizes.windows(2).map(|w| w[0] * w[1]).sum();
        let n_b: usize = sizes[1..].iter().sum();
        let weights = decode("weights", &doc.weights, n_w)?;
        let biases = decode("biases", &doc.biases, n_b)?;
        let (d_in, d_out) = (sizes[0], *sizes.last().unwrap());
        let input_scaling = Scaling {
            min: decode("input_min", &doc.input_min, d_in)?,
            max: decode("input_max", &doc.input_max, d_in)?,
        };
        let output_scaling = Scaling {
            min: decode("output_min", &doc.output_min, d_out)?,
            max: decode("output_max", &doc.output_max, d_out)?,
        };
        let (mut wo, mut bo) = (0, 0);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let l = Layer {
                    inputs: w[0],
                    outputs: w[1],
                    weights: weights[wo..wo + w[0] * w[1]].to_vec(),
                    biases: biases[bo..bo + w[1]].to_vec(),
                };
                wo += w[0] * w[1];
                bo += w[1];
                l
            })
            .collect();
        Ok(MlpModel {
            layer_sizes: sizes,
            layers,
            input_scaling,
            output_scaling,
        })
    }
}

impl MlpModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MlpDocument = serde_json::from_str(text)?;
        doc.try_into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn regression_set() -> RegressionSet {
        RegressionSet::new(
            vec![vec![0.2], vec![0.4], vec![0.6], vec![0.8]],
            vec![vec![0.2], vec![0.4], vec![0.6], vec![0.8]],
        )
        .unwrap()
    }

    fn xor() -> RegressionSet {
        RegressionSet::new(
            vec![
                vec![0.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 0.0],
                vec![1.0, 1.0],
            ],
            vec![vec![0.0], vec![1.0], vec![1.0], vec![0.0]],
        )
        .unwrap()
    }

    #[test]
    fn init_is_deterministic_with_xavier_bounds() {
        let a = mlp_init(&[2, 4, 3], 7).unwrap();
        let b = mlp_init(&[2, 4, 3], 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.weight_shapes(), vec![(2, 4), (4, 3)]);
        assert!(a.biases(0).iter().chain(a.biases(1)).all(|b| *b == 0.0));
        let limit = (6.0f64 / 6.0).sqrt();
        assert!(a.weights(0).iter().all(|w| w.abs() <= limit));
        assert_ne!(a, mlp_init(&[2, 4, 3], 8).unwrap());
    }

    #[test]
    fn init_rejects_bad_sizes() {
        assert!(matches!(mlp_init(&[3], 0), Err(Error::Parameter(_))));
        assert!(matches!(mlp_init(&[3, 0, 1], 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn linear_regression_converges() {
        let set = regression_set();
        let (m, curve) = mlp_train(mlp_init(&[1, 4, 1], 1).unwrap(), &set, 2000, 0.5).unwrap();
        assert_eq!(curve.len(), 2000);
        let mse = mlp_loss(&m, &set).unwrap();
        assert!(mse < 1e-3, "{mse}");
        let y = mlp_predict(&m, &[0.5]).unwrap()[0];
        assert!((y - 0.5).abs() < 0.05, "{y}");
    }

    #[test]
    fn xor_converges() {
        let set = xor();
        let (m, _) = mlp_train(mlp_init(&[2, 8, 1], 3).unwrap(), &set, 5000, 0.5).unwrap();
        let mse = mlp_loss(&m, &set).unwrap();
        assert!(mse < 0.01, "{mse}");
        for (x, t) in set.iter() {
            assert!((mlp_predict(&m, x).unwrap()[0] - t[0]).abs() < 0.2);
        }
    }

    #[test]
    fn zero_epochs_is_noop() {
        let set = regression_set();
        let (m, _) = mlp_train(mlp_init(&[1, 3, 1], 2).unwrap(), &set, 50, 0.5).unwrap();
        let (again, curve) = mlp_train(m.clone(), &set, 0, 0.5).unwrap();
        assert_eq!(m, again);
        assert!(curve.is_empty());
    }

    #[test]
    fn divergence_names_epoch() {
        let set = RegressionSet::new(
            vec![vec![0.0], vec![1.0], vec![2.0]],
            vec![vec![0.0], vec![10.0], vec![-5.0]],
        )
        .unwrap();
        let r = mlp_train(mlp_init(&[1, 1], 0).unwrap(), &set, 500, 1e6);
        assert!(matches!(r, Err(Error::Divergence { .. })), "{r:?}");
    }

    #[test]
    fn dimension_mismatch() {
        let m = mlp_init(&[2, 3, 1], 0).unwrap();
        assert!(matches!(
            mlp_train(m.clone(), &regression_set(), 1, 0.1),
            Err(Error::Schema(_))
        ));
        assert!(matches!(mlp_predict(&m, &[1.0]), Err(Error::Schema(_))));
    }

    #[test]
    fn output_dimension() {
        let m = mlp_init(&[3, 5, 2], 9).unwrap();
        assert_eq!(mlp_predict(&m, &[0.1, 0.2, 0.3]).unwrap().len(), 2);
    }

    #[test]
    fn zero_model_gradient_check() {
        let mut m = mlp_init(&[2, 3, 1], 0).unwrap();
        for l in &mut m.layers {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
        }
        let set = RegressionSet::new(vec![vec![0.0, 0.0]; 3], vec![vec![0.0]; 3]).unwrap();
        assert!(gradient_check(&m, &set, 1e-5).unwrap() < 1e-8);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let (m, _) = mlp_train(mlp_init(&[2, 8, 1], 3).unwrap(), &xor(), 100, 0.5).unwrap();
        let back = MlpModel::from_json(&m.to_json()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn json_version_checked() {
        let m = mlp_init(&[1, 1], 0).unwrap();
        let text = m.to_json().replace("\"version\": 1", "\"version\": 99");
        assert!(matches!(
            MlpModel::from_json(&text),
            Err(Error::Version { found: 99, .. })
        ));
    }
}
