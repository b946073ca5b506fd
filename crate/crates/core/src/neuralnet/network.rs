use std::fmt::Debug;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::NetError;

/// Floating-point element type. Training runs in `f32`; gradient checks in `f64`.
pub trait Scalar: Float + Default + Debug + Send + Sync + std::iter::Sum + 'static {}
impl Scalar for f32 {}
impl Scalar for f64 {}

/// Layer dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Arch {
    /// Feature positions (grid rows).
    pub m: usize,
    /// Input channels per position (grid columns).
    pub c_in: usize,
    pub conv_out: usize,
    pub hidden: [usize; 3],
    pub out_dim: usize,
}

impl Arch {
    /// Every hidden layer `width` wide, head of `out_dim` outputs.
    pub fn uniform(m: usize, c_in: usize, width: usize, out_dim: usize) -> Self {
        Arch {
            m,
            c_in,
            conv_out: width,
            hidden: [width; 3],
            out_dim,
        }
    }

    /// Q-network: `kmax + classes` hidden units everywhere and one output per action.
    pub fn q_network(m: usize, c_in: usize, kmax: usize, classes: usize) -> Self {
        Self::uniform(m, c_in, kmax + classes, kmax + classes)
    }

    /// Classifier: same body as the Q-network for `k` queries, `classes` outputs.
    pub fn classifier(m: usize, c_in: usize, k: usize, classes: usize) -> Self {
        Self::uniform(m, c_in, k + classes, classes)
    }

    pub fn validate(&self) -> Result<(), NetError> {
        let dims = [self.m, self.c_in, self.conv_out, self.hidden[0], self.hidden[1], self.hidden[2], self.out_dim];
        if dims.contains(&0) {
            return Err(NetError::InvalidArch(format!("zero dimension in {self:?}")));
        }
        Ok(())
    }

    pub fn input_len(&self) -> usize {
        self.m * self.c_in
    }

    /// `(outputs, inputs)` of each layer: conv, three dense, head.
    pub fn layer_shapes(&self) -> [(usize, usize); 5] {
        [
            (self.conv_out, self.c_in),
            (self.hidden[0], self.m * self.conv_out),
            (self.hidden[1], self.hidden[0]),
            (self.hidden[2], self.hidden[1]),
            (self.out_dim, self.hidden[2]),
        ]
    }

    pub fn param_count(&self) -> usize {
        self.layer_shapes().iter().map(|&(o, i)| o * i + o).sum()
    }
}

/// Affine map with row-major `outputs × inputs` weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn zeros(outputs: usize, inputs: usize) -> Self {
        Dense {
            inputs,
            outputs,
            weights: vec![T::zero(); outputs * inputs],
            bias: vec![T::zero(); outputs],
        }
    }

    #[inline]
    fn affine(&self, x: &[T], out: &mut [T]) {
        for (o, out_o) in out.iter_mut().enumerate() {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            let mut acc = self.bias[o];
            for (&w, &xi) in row.iter().zip(x) {
                acc = acc + w * xi;
            }
            *out_o = acc;
        }
    }

    // Accumulates dW += g xᵀ, db += g and, when asked, writes dx = Wᵀ g.
    #[inline]
    fn backprop(&self, x: &[T], g: &[T], grad: &mut Dense<T>, dx: Option<&mut [T]>) {
        for (o, &go) in g.iter().enumerate() {
            if go == T::zero() {
                continue;
            }
            grad.bias[o] = grad.bias[o] + go;
            let grow = &mut grad.weights[o * self.inputs..(o + 1) * self.inputs];
            for (gw, &xi) in grow.iter_mut().zip(x) {
                *gw = *gw + go * xi;
            }
        }
        if let Some(dx) = dx {
            dx.fill(T::zero());
            for (o, &go) in g.iter().enumerate() {
                if go == T::zero() {
                    continue;
                }
                let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
                for (d, &w) in dx.iter_mut().zip(row) {
                    *d = *d + w * go;
                }
            }
        }
    }
}

/// Network parameters. Also used as the gradient and Adam moment containers.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T = f32> {
    arch: Arch,
    /// conv, dense ×3, head
    layers: Vec<Dense<T>>,
}

/// Activations kept from [`Network::forward`] for [`Network::backward`].
#[derive(Debug, Clone)]
pub struct Cache<T> {
    input: Vec<T>,
    /// post-ReLU activations: conv (flattened), dense 1..3
    acts: [Vec<T>; 4],
}

fn relu_in_place<T: Scalar>(v: &mut [T]) {
    for x in v {
        if *x < T::zero() {
            *x = T::zero();
        }
    }
}

// Zeroes gradient entries whose unit was inactive.
fn relu_mask<T: Scalar>(g: &mut [T], act: &[T]) {
    for (gi, &a) in g.iter_mut().zip(act) {
        if a <= T::zero() {
            *gi = T::zero();
        }
    }
}

impl<T: Scalar> Network<T> {
    pub fn zeros(arch: Arch) -> Self {
        let layers = arch
            .layer_shapes()
            .iter()
            .map(|&(o, i)| Dense::zeros(o, i))
            .collect();
        Network { arch, layers }
    }

    /// He-uniform weights (bound `√(6 / fan_in)`), zero biases.
    pub fn init(arch: Arch, seed: u64) -> Result<Self, NetError> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Self::zeros(arch);
        for layer in &mut net.layers {
            let bound = (6.0 / layer.inputs as f64).sqrt();
            for w in &mut layer.weights {
                *w = T::from(rng.gen_range(-bound..=bound)).unwrap();
            }
        }
        Ok(net)
    }

    /// Like [`init`](Self::init), but redraws (from the same seeded stream)
    /// the fan-in row of any hidden unit that is inactive on every probe
    /// input, layer by layer, at most `MAX_REDRAWS` times per layer. Narrow
    /// ReLU stacks otherwise start with whole layers dead on the reachable
    /// states and never recover.
    pub fn init_alive(arch: Arch, seed: u64, probes: &[Vec<T>]) -> Result<Self, NetError> {
        const MAX_REDRAWS: usize = 64;
        let mut net = Self::init(arch, seed)?;
        for p in probes {
            net.check_input(p)?;
        }
        if probes.is_empty() {
            return Ok(net);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa11e_0f5e_ed00_0001);
        for layer in 0..4 {
            for _ in 0..MAX_REDRAWS {
                let dead = net.dead_units(layer, probes);
                if dead.is_empty() {
                    break;
                }
                let l = &mut net.layers[layer];
                let bound = (6.0 / l.inputs as f64).sqrt();
                for u in dead {
                    for w in &mut l.weights[u * l.inputs..(u + 1) * l.inputs] {
                        *w = T::from(rng.gen_range(-bound..=bound)).unwrap();
                    }
                }
            }
        }
        Ok(net)
    }

    /// Units of hidden layer `layer` (0 = conv) with no positive activation on any probe.
    pub fn dead_units(&self, layer: usize, probes: &[Vec<T>]) -> Vec<usize> {
        let width = self.layers[layer].outputs;
        let mut alive = vec![false; width];
        for p in probes {
            let (acts, _) = self.run(p);
            for (i, &a) in acts[layer].iter().enumerate() {
                if a > T::zero() {
                    alive[i % width] = true;
                }
            }
        }
        (0..width).filter(|&u| !alive[u]).collect()
    }

    pub fn arch(&self) -> &Arch {
        &self.arch
    }

    pub fn layers(&self) -> &[Dense<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense<T>] {
        &mut self.layers
    }

    pub(crate) fn from_layers(arch: Arch, layers: Vec<Dense<T>>) -> Result<Self, NetError> {
        let shapes = arch.layer_shapes();
        if layers.len() != shapes.len() {
            return Err(NetError::Shape {
                expected: format!("{} layers", shapes.len()),
                found: format!("{} layers", layers.len()),
            });
        }
        for (l, &(o, i)) in layers.iter().zip(&shapes) {
            if l.outputs != o || l.inputs != i || l.weights.len() != o * i || l.bias.len() != o {
                return Err(NetError::Shape {
                    expected: format!("{o}x{i}"),
                    found: format!("{}x{} ({} weights)", l.outputs, l.inputs, l.weights.len()),
                });
            }
        }
        Ok(Network { arch, layers })
    }

    /// Every parameter slice: weights then bias, layer by layer.
    pub fn param_slices(&self) -> impl Iterator<Item = &[T]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
    }

    pub fn param_slices_mut(&mut self) -> impl Iterator<Item = &mut [T]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
    }

    pub fn num_params(&self) -> usize {
        self.arch.param_count()
    }

    /// Parameter `index` in the flat order of [`param_slices`](Self::param_slices).
    pub fn param(&self, index: usize) -> T {
        *self.param_slices().flatten().nth(index).expect("parameter index")
    }

    pub fn set_param(&mut self, index: usize, value: T) {
        *self.param_slices_mut().flatten().nth(index).expect("parameter index") = value;
    }

    pub fn all_finite(&self) -> bool {
        self.param_slices().flatten().all(|x| x.is_finite())
    }

    pub fn fill_zero(&mut self) {
        for s in self.param_slices_mut() {
            s.fill(T::zero());
        }
    }

    pub fn scale(&mut self, factor: T) {
        for s in self.param_slices_mut() {
            for x in s {
                *x = *x * factor;
            }
        }
    }

    /// Element type conversion.
    pub fn cast<U: Scalar>(&self) -> Network<U> {
        let conv = |v: &[T]| v.iter().map(|&x| U::from(x).unwrap()).collect::<Vec<U>>();
        Network {
            arch: self.arch,
            layers: self
                .layers
                .iter()
                .map(|l| Dense {
                    inputs: l.inputs,
                    outputs: l.outputs,
                    weights: conv(&l.weights),
                    bias: conv(&l.bias),
                })
                .collect(),
        }
    }

    fn check_input(&self, input: &[T]) -> Result<(), NetError> {
        if input.len() != self.arch.input_len() {
            return Err(NetError::Shape {
                expected: format!("{}x{} input", self.arch.m, self.arch.c_in),
                found: format!("{} values", input.len()),
            });
        }
        Ok(())
    }

    fn run(&self, input: &[T]) -> ([Vec<T>; 4], Vec<T>) {
        let a = &self.arch;
        let conv = &self.layers[0];
        let mut h0 = vec![T::zero(); a.m * a.conv_out];
        for p in 0..a.m {
            conv.affine(
                &input[p * a.c_in..(p + 1) * a.c_in],
                &mut h0[p * a.conv_out..(p + 1) * a.conv_out],
            );
        }
        relu_in_place(&mut h0);
        let mut h1 = vec![T::zero(); a.hidden[0]];
        self.layers[1].affine(&h0, &mut h1);
        relu_in_place(&mut h1);
        let mut h2 = vec![T::zero(); a.hidden[1]];
        self.layers[2].affine(&h1, &mut h2);
        relu_in_place(&mut h2);
        let mut h3 = vec![T::zero(); a.hidden[2]];
        self.layers[3].affine(&h2, &mut h3);
        relu_in_place(&mut h3);
        let mut out = vec![T::zero(); a.out_dim];
        self.layers[4].affine(&h3, &mut out);
        ([h0, h1, h2, h3], out)
    }

    /// Outputs (linear head, no activation) plus the activations needed for
    /// [`backward`](Self::backward).
    pub fn forward(&self, input: &[T]) -> Result<(Vec<T>, Cache<T>), NetError> {
        self.check_input(input)?;
        let (acts, out) = self.run(input);
        Ok((
            out,
            Cache {
                input: input.to_vec(),
                acts,
            },
        ))
    }

    /// Outputs only.
    pub fn predict(&self, input: &[T]) -> Result<Vec<T>, NetError> {
        self.check_input(input)?;
        Ok(self.run(input).1)
    }

    /// Accumulates `∂L/∂θ` into `grads` given `∂L/∂outputs`.
    pub fn backward_into(&self, cache: &Cache<T>, output_grad: &[T], grads: &mut Network<T>) {
        let a = &self.arch;
        assert_eq!(output_grad.len(), a.out_dim, "output gradient length");
        assert_eq!(grads.arch, self.arch, "gradient container arch");
        let [h0, h1, h2, h3] = &cache.acts;

        let mut g3 = vec![T::zero(); a.hidden[2]];
        self.layers[4].backprop(h3, output_grad, &mut grads.layers[4], Some(&mut g3));
        relu_mask(&mut g3, h3);
        let mut g2 = vec![T::zero(); a.hidden[1]];
        self.layers[3].backprop(h2, &g3, &mut grads.layers[3], Some(&mut g2));
        relu_mask(&mut g2, h2);
        let mut g1 = vec![T::zero(); a.hidden[0]];
        self.layers[2].backprop(h1, &g2, &mut grads.layers[2], Some(&mut g1));
        relu_mask(&mut g1, h1);
        let mut g0 = vec![T::zero(); a.m * a.conv_out];
        self.layers[1].backprop(h0, &g1, &mut grads.layers[1], Some(&mut g0));
        relu_mask(&mut g0, h0);
        for p in 0..a.m {
            self.layers[0].backprop(
                &cache.input[p * a.c_in..(p + 1) * a.c_in],
                &g0[p * a.conv_out..(p + 1) * a.conv_out],
                &mut grads.layers[0],
                None,
            );
        }
    }

    /// Fresh gradients of the loss whose output gradient is `output_grad`.
    pub fn backward(&self, cache: &Cache<T>, output_grad: &[T]) -> Network<T> {
        let mut grads = Network::zeros(self.arch);
        self.backward_into(cache, output_grad, &mut grads);
        grads
    }
}
