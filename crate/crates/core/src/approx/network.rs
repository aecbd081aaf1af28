use rand::Rng;

use crate::error::{Error, Result};
use crate::learning::FitSample;

/// Layer layout of a Q-network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Architecture {
    /// `sizes = [input, hidden.., outputs]`, ReLU on every hidden layer.
    Plain { sizes: Vec<usize> },
    /// Shared ReLU trunk, then an advantage stream and a value stream, each
    /// with one hidden ReLU layer of width `stream`.
    Dueling {
        input: usize,
        trunk: Vec<usize>,
        stream: usize,
        outputs: usize,
    },
}

impl Architecture {
    /// Three hidden layers of 64 units.
    pub fn plain_default(input: usize, outputs: usize) -> Self {
        Architecture::Plain {
            sizes: vec![input, 64, 64, 64, outputs],
        }
    }

    /// Two shared 64-unit layers, 32-unit streams.
    pub fn dueling_default(input: usize, outputs: usize) -> Self {
        Architecture::Dueling {
            input,
            trunk: vec![64, 64],
            stream: 32,
            outputs,
        }
    }

    pub fn input(&self) -> usize {
        match self {
            Architecture::Plain { sizes } => sizes[0],
            Architecture::Dueling { input, .. } => *input,
        }
    }

    pub fn outputs(&self) -> usize {
        match self {
            Architecture::Plain { sizes } => *sizes.last().expect("validated"),
            Architecture::Dueling { outputs, .. } => *outputs,
        }
    }

    /// Flat size list as stored in checkpoints.
    pub fn sizes(&self) -> Vec<usize> {
        match self {
            Architecture::Plain { sizes } => sizes.clone(),
            Architecture::Dueling {
                input,
                trunk,
                stream,
                outputs,
            } => {
                let mut v = vec![*input];
                v.extend(trunk);
                v.push(*stream);
                v.push(*outputs);
                v
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Architecture::Plain { sizes } => sizes.len() >= 2 && sizes.iter().all(|s| *s > 0),
            Architecture::Dueling {
                input,
                trunk,
                stream,
                outputs,
            } => *input > 0 && *stream > 0 && *outputs > 0 && trunk.iter().all(|s| *s > 0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("degenerate architecture {self:?}")))
        }
    }

    fn layout(&self) -> Layout {
        let mut offset = 0;
        let mut dense = |input: usize, output: usize| {
            let d = Dense {
                input,
                output,
                offset,
            };
            offset += d.len();
            d
        };
        match self {
            Architecture::Plain { sizes } => {
                let layers = sizes.windows(2).map(|w| dense(w[0], w[1])).collect();
                Layout {
                    trunk: layers,
                    heads: None,
                    len: offset,
                }
            }
            Architecture::Dueling {
                input,
                trunk,
                stream,
                outputs,
            } => {
                let mut prev = *input;
                let mut t = Vec::new();
                for &w in trunk {
                    t.push(dense(prev, w));
                    prev = w;
                }
                let adv = vec![dense(prev, *stream), dense(*stream, *outputs)];
                let val = vec![dense(prev, *stream), dense(*stream, 1)];
                Layout {
                    trunk: t,
                    heads: Some((adv, val)),
                    len: offset,
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Dense {
    input: usize,
    output: usize,
    offset: usize,
}

impl Dense {
    fn len(&self) -> usize {
        self.input * self.output + self.output
    }

    fn apply(&self, params: &[f64], x: &[f64]) -> Vec<f64> {
        let w = &params[self.offset..self.offset + self.input * self.output];
        let b = &params[self.offset + self.input * self.output..self.offset + self.len()];
        w.chunks_exact(self.input)
            .zip(b)
            .map(|(row, bias)| bias + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }

    /// Accumulates parameter gradients for `d_out` and returns `∂L/∂x`.
    fn backward(&self, params: &[f64], x: &[f64], d_out: &[f64], grads: &mut [f64]) -> Vec<f64> {
        let w = &params[self.offset..self.offset + self.input * self.output];
        let mut d_in = vec![0.0; self.input];
        for (o, &g) in d_out.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let row = self.offset + o * self.input;
            for i in 0..self.input {
                grads[row + i] += g * x[i];
                d_in[i] += g * w[o * self.input + i];
            }
            grads[self.offset + self.input * self.output + o] += g;
        }
        d_in
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Layout {
    trunk: Vec<Dense>,
    heads: Option<(Vec<Dense>, Vec<Dense>)>,
    len: usize,
}

/// Intermediate values of one chain of dense layers.
struct ChainTrace {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    out: Vec<f64>,
}

fn relu(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.max(0.0)).collect()
}

fn chain_forward(layers: &[Dense], params: &[f64], x: &[f64], relu_last: bool) -> ChainTrace {
    let mut inputs = Vec::with_capacity(layers.len());
    let mut pre = Vec::with_capacity(layers.len());
    let mut h = x.to_vec();
    for (k, layer) in layers.iter().enumerate() {
        let z = layer.apply(params, &h);
        let next = if k + 1 < layers.len() || relu_last { relu(&z) } else { z.clone() };
        inputs.push(std::mem::replace(&mut h, next));
        pre.push(z);
    }
    ChainTrace { inputs, pre, out: h }
}

fn chain_backward(
    layers: &[Dense],
    params: &[f64],
    trace: &ChainTrace,
    relu_last: bool,
    d_out: &[f64],
    grads: &mut [f64],
) -> Vec<f64> {
    let mut d = d_out.to_vec();
    for k in (0..layers.len()).rev() {
        if k + 1 < layers.len() || relu_last {
            for (g, z) in d.iter_mut().zip(&trace.pre[k]) {
                if *z <= 0.0 {
                    *g = 0.0;
                }
            }
        }
        d = layers[k].backward(params, &trace.inputs[k], &d, grads);
    }
    d
}

/// A fully connected Q-network with a flat parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    arch: Architecture,
    layout: Layout,
    params: Vec<f64>,
}

struct Trace {
    trunk: ChainTrace,
    heads: Option<(ChainTrace, ChainTrace)>,
    q: Vec<f64>,
}

impl Network {
    pub fn zeros(arch: Architecture) -> Result<Self> {
        arch.validate()?;
        let layout = arch.layout();
        let params = vec![0.0; layout.len];
        Ok(Self {
            arch,
            layout,
            params,
        })
    }

    /// Weights uniform in `±sqrt(6/(fan_in + fan_out))`, biases zero.
    pub fn new<R: Rng + ?Sized>(arch: Architecture, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(arch)?;
        let layers: Vec<Dense> = net.dense_layers().collect();
        for d in layers {
            let limit = (6.0 / (d.input + d.output) as f64).sqrt();
            for w in &mut net.params[d.offset..d.offset + d.input * d.output] {
                *w = rng.random_range(-limit..=limit);
            }
        }
        Ok(net)
    }

    pub fn from_params(arch: Architecture, params: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeros(arch)?;
        if params.len() != net.params.len() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                net.params.len(),
                params.len()
            )));
        }
        net.params = params;
        Ok(net)
    }

    fn dense_layers(&self) -> impl Iterator<Item = Dense> + '_ {
        let heads = self
            .layout
            .heads
            .iter()
            .flat_map(|(a, v)| a.iter().chain(v.iter()));
        self.layout.trunk.iter().chain(heads).copied()
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn num_inputs(&self) -> usize {
        self.arch.input()
    }

    pub fn num_outputs(&self) -> usize {
        self.arch.outputs()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn copy_from(&mut self, other: &Network) {
        assert_eq!(self.arch, other.arch, "architectures differ");
        self.params.copy_from_slice(&other.params);
    }

    fn trace(&self, x: &[f64]) -> Result<Trace> {
        if x.len() != self.num_inputs() {
            return Err(Error::invalid(format!(
                "input width {} does not match network input {}",
                x.len(),
                self.num_inputs()
            )));
        }
        let p = &self.params;
        match &self.layout.heads {
            None => {
                let trunk = chain_forward(&self.layout.trunk, p, x, false);
                let q = trunk.out.clone();
                Ok(Trace {
                    trunk,
                    heads: None,
                    q,
                })
            }
            Some((adv, val)) => {
                let trunk = chain_forward(&self.layout.trunk, p, x, true);
                let a = chain_forward(adv, p, &trunk.out, false);
                let v = chain_forward(val, p, &trunk.out, false);
                let q = combine_dueling(v.out[0], &a.out);
                Ok(Trace {
                    trunk,
                    heads: Some((a, v)),
                    q,
                })
            }
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.trace(x).map(|t| t.q)
    }

    /// Mean `½(y − Q(s, a))²` over the batch and its gradient.
    pub fn loss_and_grad(&self, batch: &[FitSample<'_, Vec<f64>>]) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::invalid("empty batch"));
        }
        let mut grads = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let scale = 1.0 / batch.len() as f64;
        for sample in batch {
            if sample.action >= self.num_outputs() {
                return Err(Error::invalid(format!("action {} out of range", sample.action)));
            }
            let tr = self.trace(sample.state)?;
            let err = tr.q[sample.action] - sample.target;
            loss += 0.5 * err * err * scale;
            let mut d_q = vec![0.0; self.num_outputs()];
            d_q[sample.action] = err * scale;
            self.backward(&tr, &d_q, &mut grads);
        }
        Ok((loss, grads))
    }

    fn backward(&self, tr: &Trace, d_q: &[f64], grads: &mut [f64]) {
        let p = &self.params;
        match (&self.layout.heads, &tr.heads) {
            (None, _) => {
                chain_backward(&self.layout.trunk, p, &tr.trunk, false, d_q, grads);
            }
            (Some((adv, val)), Some((ta, tv))) => {
                let total: f64 = d_q.iter().sum();
                let mean = total / d_q.len() as f64;
                let d_a: Vec<f64> = d_q.iter().map(|g| g - mean).collect();
                let d_v = [total];
                let mut d_trunk = chain_backward(adv, p, ta, false, &d_a, grads);
                let d_from_v = chain_backward(val, p, tv, false, &d_v, grads);
                for (a, b) in d_trunk.iter_mut().zip(d_from_v) {
                    *a += b;
                }
                chain_backward(&self.layout.trunk, p, &tr.trunk, true, &d_trunk, grads);
            }
            (Some(_), None) => unreachable!("dueling trace always has heads"),
        }
    }
}

/// `V + A − mean(A)`.
pub fn combine_dueling(value: f64, advantages: &[f64]) -> Vec<f64> {
    let mean = advantages.iter().sum::<f64>() / advantages.len() as f64;
    advantages.iter().map(|a| value + a - mean).collect()
}
