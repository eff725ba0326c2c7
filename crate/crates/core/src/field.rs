//! Positional-encoded MLP radiance field.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ad::{Gradients, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::math;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Activation {
    #[default]
    Relu,
    Softplus,
}

/// Network shape. Density uses softplus and color uses sigmoid regardless
/// of the hidden activation.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct FieldArch {
    pub hidden_width: usize,
    pub hidden_layers: usize,
    pub pe_levels_pos: usize,
    pub pe_levels_dir: usize,
    pub activation: Activation,
    /// Feed the encoded view direction into the color head.
    pub view_dependent: bool,
}

impl Default for FieldArch {
    fn default() -> Self {
        Self {
            hidden_width: 128,
            hidden_layers: 4,
            pe_levels_pos: 6,
            pe_levels_dir: 2,
            activation: Activation::Relu,
            view_dependent: true,
        }
    }
}

/// One dense layer: `in x out` weights followed by `out` biases.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerShape {
    pub fan_in: usize,
    pub fan_out: usize,
}

impl LayerShape {
    pub fn param_count(&self) -> usize {
        self.fan_in * self.fan_out + self.fan_out
    }
}

impl FieldArch {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_width < 2 || self.hidden_layers == 0 {
            return Err(Error::InvalidParameter("field needs at least one hidden layer of width >= 2"));
        }
        if self.pe_levels_pos > 30 || self.pe_levels_dir > 30 {
            return Err(Error::InvalidParameter("positional encoding levels above 30"));
        }
        Ok(())
    }

    pub fn pos_encoding_len(&self) -> usize {
        3 + 6 * self.pe_levels_pos
    }

    pub fn dir_encoding_len(&self) -> usize {
        3 + 6 * self.pe_levels_dir
    }

    /// Trunk layers, then density head, color hidden layer, color output.
    pub fn layers(&self) -> Vec<LayerShape> {
        let w = self.hidden_width;
        let mut layers = Vec::with_capacity(self.hidden_layers + 3);
        layers.push(LayerShape { fan_in: self.pos_encoding_len(), fan_out: w });
        for _ in 1..self.hidden_layers {
            layers.push(LayerShape { fan_in: w, fan_out: w });
        }
        layers.push(LayerShape { fan_in: w, fan_out: 1 });
        let color_in = if self.view_dependent { w + self.dir_encoding_len() } else { w };
        layers.push(LayerShape { fan_in: color_in, fan_out: w / 2 });
        layers.push(LayerShape { fan_in: w / 2, fan_out: 3 });
        layers
    }

    pub fn param_count(&self) -> usize {
        self.layers().iter().map(LayerShape::param_count).sum()
    }

    /// Index of the density head in [`FieldArch::layers`].
    pub fn density_layer(&self) -> usize {
        self.hidden_layers
    }

    /// Index of the color output layer in [`FieldArch::layers`].
    pub fn color_layer(&self) -> usize {
        self.hidden_layers + 2
    }

    /// Offset of each layer's weights in the flat parameter vector.
    pub fn layer_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::new();
        let mut acc = 0;
        for l in self.layers() {
            offsets.push(acc);
            acc += l.param_count();
        }
        offsets
    }
}

/// `[v, sin(2^0 pi v), cos(2^0 pi v), ..., sin(2^(L-1) pi v), cos(2^(L-1) pi v)]`.
pub fn positional_encode(v: [f64; 3], levels: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(3 + 6 * levels);
    out.extend_from_slice(&v);
    for l in 0..levels {
        let f = math::powf(2.0, l as f64) * PI;
        out.extend(v.iter().map(|x| math::sin(f * x)));
        out.extend(v.iter().map(|x| math::cos(f * x)));
    }
    out
}

/// Row-wise positional encoding of a `[P x 3]` var.
pub fn positional_encode_var<'t>(v: Var<'t>, levels: usize) -> Var<'t> {
    if levels == 0 {
        return v;
    }
    let mut parts = Vec::with_capacity(1 + 2 * levels);
    parts.push(v);
    for l in 0..levels {
        let scaled = v * (math::powf(2.0, l as f64) * PI);
        parts.push(scaled.sin());
        parts.push(scaled.cos());
    }
    v.tape().concat_cols(&parts)
}

/// A differentiable map from points and view directions to density and color.
pub trait Radiance<'t> {
    /// `points`, `dirs`: `[P x 3]`. Returns density `[P x 1]` and color `[P x 3]`.
    fn query(&self, points: Var<'t>, dirs: Var<'t>) -> (Var<'t>, Var<'t>);
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneField {
    arch: FieldArch,
    params: Vec<f64>,
}

impl SceneField {
    /// Kaiming-uniform weights (bound `sqrt(6 / fan_in)`) and zero biases.
    pub fn new(arch: FieldArch, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(arch.param_count());
        for layer in arch.layers() {
            let bound = math::sqrt(6.0 / layer.fan_in as f64);
            params.extend((0..layer.fan_in * layer.fan_out).map(|_| rng.random_range(-bound..bound)));
            params.extend(core::iter::repeat_n(0.0, layer.fan_out));
        }
        Ok(Self { arch, params })
    }

    pub fn from_params(arch: FieldArch, params: Vec<f64>) -> Result<Self> {
        arch.validate()?;
        if params.len() != arch.param_count() {
            return Err(Error::ShapeMismatch("parameter count does not match architecture"));
        }
        Ok(Self { arch, params })
    }

    pub fn arch(&self) -> &FieldArch {
        &self.arch
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Zeroes weights and bias of layer `index`.
    pub fn zero_layer(&mut self, index: usize) {
        let offsets = self.arch.layer_offsets();
        let len = self.arch.layers()[index].param_count();
        self.params[offsets[index]..offsets[index] + len].fill(0.0);
    }

    /// Records the parameters on `tape`, as leaves when `trainable`.
    pub fn bind<'t>(&self, tape: &'t Tape, trainable: bool) -> BoundField<'t> {
        let mut offset = 0;
        let mut layers = Vec::new();
        for shape in self.arch.layers() {
            let wlen = shape.fan_in * shape.fan_out;
            let w = Tensor::new(shape.fan_in, shape.fan_out, self.params[offset..offset + wlen].to_vec());
            let b = Tensor::row(self.params[offset + wlen..offset + wlen + shape.fan_out].to_vec());
            offset += shape.param_count();
            let (w, b) = if trainable { (tape.leaf(w), tape.leaf(b)) } else { (tape.constant(w), tape.constant(b)) };
            layers.push((w, b));
        }
        BoundField { arch: self.arch.clone(), layers }
    }

    /// Color and density at one point.
    pub fn eval(&self, x: [f64; 3], d: [f64; 3]) -> ([f64; 3], f64) {
        let tape = Tape::new();
        let bound = self.bind(&tape, false);
        let (sigma, rgb) =
            bound.query(tape.constant(Tensor::row(x.to_vec())), tape.constant(Tensor::row(d.to_vec())));
        let c = rgb.value();
        ([c.data()[0], c.data()[1], c.data()[2]], sigma.item())
    }
}

/// Field parameters recorded on a tape.
pub struct BoundField<'t> {
    arch: FieldArch,
    layers: Vec<(Var<'t>, Var<'t>)>,
}

impl<'t> BoundField<'t> {
    fn dense(&self, index: usize, x: Var<'t>) -> Var<'t> {
        let (w, b) = self.layers[index];
        x.matmul(w) + b
    }

    fn activate(&self, x: Var<'t>) -> Var<'t> {
        match self.arch.activation {
            Activation::Relu => x.relu(),
            Activation::Softplus => x.softplus(),
        }
    }

    /// Flat gradient in the parameter layout of [`SceneField`].
    pub fn gradient(&self, grads: &Gradients) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.arch.param_count());
        for &(w, b) in &self.layers {
            out.extend_from_slice(grads.wrt(w).data());
            out.extend_from_slice(grads.wrt(b).data());
        }
        out
    }
}

impl<'t> Radiance<'t> for BoundField<'t> {
    fn query(&self, points: Var<'t>, dirs: Var<'t>) -> (Var<'t>, Var<'t>) {
        let mut h = positional_encode_var(points, self.arch.pe_levels_pos);
        for l in 0..self.arch.hidden_layers {
            h = self.activate(self.dense(l, h));
        }
        let sigma = self.dense(self.arch.density_layer(), h).softplus();
        let color_in = if self.arch.view_dependent {
            let enc = positional_encode_var(dirs, self.arch.pe_levels_dir);
            points.tape().concat_cols(&[h, enc])
        } else {
            h
        };
        let hidden = self.activate(self.dense(self.arch.hidden_layers + 1, color_in));
        let rgb = self.dense(self.arch.color_layer(), hidden).sigmoid();
        (sigma, rgb)
    }
}
