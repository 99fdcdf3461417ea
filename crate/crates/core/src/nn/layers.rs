//! Parameter groups for post-norm transformer layers, with a taped forward
//! pass for training and a plain forward pass for inference.

use std::rc::Rc;

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::{ParamId, ParamStore};
use super::tape::{attention_forward, gelu, layer_norm_forward, AttnLayout, NodeId, Tape};
use super::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Gelu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinearParams {
    pub w: ParamId,
    pub b: ParamId,
}

impl LinearParams {
    pub fn new<F: Real, R: Rng + ?Sized>(
        store: &mut ParamStore<F>,
        name: &str,
        inputs: usize,
        outputs: usize,
        rng: &mut R,
    ) -> LinearParams {
        LinearParams {
            w: store.xavier(&format!("{name}.weight"), inputs, outputs, rng),
            b: store.zeros(&format!("{name}.bias"), 1, outputs),
        }
    }

    pub fn forward<F: Real>(&self, t: &mut Tape<F>, s: &ParamStore<F>, x: NodeId) -> NodeId {
        let w = t.param(s, self.w);
        let b = t.param(s, self.b);
        let y = t.matmul(x, w);
        t.add_row(y, b)
    }

    pub fn infer<F: Real>(&self, s: &ParamStore<F>, x: ArrayView2<F>) -> Array2<F> {
        x.dot(s.get(self.w)) + &s.get(self.b).row(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerNormParams {
    pub gamma: ParamId,
    pub beta: ParamId,
}

impl LayerNormParams {
    pub fn new<F: Real>(store: &mut ParamStore<F>, name: &str, width: usize) -> LayerNormParams {
        LayerNormParams {
            gamma: store.ones(&format!("{name}.gamma"), 1, width),
            beta: store.zeros(&format!("{name}.beta"), 1, width),
        }
    }

    pub fn forward<F: Real>(&self, t: &mut Tape<F>, s: &ParamStore<F>, x: NodeId) -> NodeId {
        let g = t.param(s, self.gamma);
        let b = t.param(s, self.beta);
        t.layer_norm(x, g, b)
    }

    pub fn infer<F: Real>(&self, s: &ParamStore<F>, x: ArrayView2<F>) -> Array2<F> {
        layer_norm_forward(x, s.get(self.gamma).view(), s.get(self.beta).view()).0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttentionParams {
    pub q: LinearParams,
    pub k: LinearParams,
    pub v: LinearParams,
    pub o: LinearParams,
    pub heads: usize,
}

impl AttentionParams {
    pub fn new<F: Real, R: Rng + ?Sized>(
        store: &mut ParamStore<F>,
        name: &str,
        width: usize,
        heads: usize,
        rng: &mut R,
    ) -> AttentionParams {
        assert!(heads > 0 && width % heads == 0, "width must divide into heads");
        AttentionParams {
            q: LinearParams::new(store, &format!("{name}.q"), width, width, rng),
            k: LinearParams::new(store, &format!("{name}.k"), width, width, rng),
            v: LinearParams::new(store, &format!("{name}.v"), width, width, rng),
            o: LinearParams::new(store, &format!("{name}.o"), width, width, rng),
            heads,
        }
    }

    /// Attention of `x` over `memory` (pass `x` itself for self-attention).
    pub fn forward<F: Real>(
        &self,
        t: &mut Tape<F>,
        s: &ParamStore<F>,
        x: NodeId,
        memory: NodeId,
        layout: &Rc<AttnLayout>,
        causal: bool,
    ) -> NodeId {
        let q = self.q.forward(t, s, x);
        let k = self.k.forward(t, s, memory);
        let v = self.v.forward(t, s, memory);
        let a = t.attention(q, k, v, layout.clone(), self.heads, causal);
        self.o.forward(t, s, a)
    }

    /// Output for the query rows `x` given already projected keys and values.
    pub fn infer_with_kv<F: Real>(
        &self,
        s: &ParamStore<F>,
        x: ArrayView2<F>,
        keys: ArrayView2<F>,
        values: ArrayView2<F>,
        causal: bool,
    ) -> Array2<F> {
        let q = self.q.infer(s, x);
        let layout = AttnLayout::cross(&[q.nrows()], &[keys.nrows()]);
        let (a, _) = attention_forward(q.view(), keys, values, &layout, self.heads, causal);
        self.o.infer(s, a.view())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeedForwardParams {
    pub fc1: LinearParams,
    pub fc2: LinearParams,
    pub activation: Activation,
}

impl FeedForwardParams {
    pub fn new<F: Real, R: Rng + ?Sized>(
        store: &mut ParamStore<F>,
        name: &str,
        width: usize,
        hidden: usize,
        activation: Activation,
        rng: &mut R,
    ) -> FeedForwardParams {
        FeedForwardParams {
            fc1: LinearParams::new(store, &format!("{name}.fc1"), width, hidden, rng),
            fc2: LinearParams::new(store, &format!("{name}.fc2"), hidden, width, rng),
            activation,
        }
    }

    pub fn forward<F: Real>(&self, t: &mut Tape<F>, s: &ParamStore<F>, x: NodeId) -> NodeId {
        let h = self.fc1.forward(t, s, x);
        let h = match self.activation {
            Activation::Relu => t.relu(h),
            Activation::Gelu => t.gelu(h),
        };
        self.fc2.forward(t, s, h)
    }

    pub fn infer<F: Real>(&self, s: &ParamStore<F>, x: ArrayView2<F>) -> Array2<F> {
        let mut h = self.fc1.infer(s, x);
        match self.activation {
            Activation::Relu => h.mapv_inplace(|v| v.max(F::zero())),
            Activation::Gelu => h.mapv_inplace(gelu),
        }
        self.fc2.infer(s, h.view())
    }
}

/// `LayerNorm(x + Dropout(sublayer))`.
fn residual_norm<F: Real, R: Rng + ?Sized>(
    t: &mut Tape<F>,
    s: &ParamStore<F>,
    x: NodeId,
    sub: NodeId,
    norm: &LayerNormParams,
    dropout: f64,
    rng: &mut R,
) -> NodeId {
    let sub = t.dropout(sub, dropout, rng);
    let y = t.add(x, sub);
    norm.forward(t, s, y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderLayerParams {
    pub self_attn: AttentionParams,
    pub norm1: LayerNormParams,
    pub ffn: FeedForwardParams,
    pub norm2: LayerNormParams,
}

impl EncoderLayerParams {
    pub fn new<F: Real, R: Rng + ?Sized>(
        store: &mut ParamStore<F>,
        name: &str,
        width: usize,
        heads: usize,
        hidden: usize,
        activation: Activation,
        rng: &mut R,
    ) -> EncoderLayerParams {
        EncoderLayerParams {
            self_attn: AttentionParams::new(store, &format!("{name}.self_attn"), width, heads, rng),
            norm1: LayerNormParams::new(store, &format!("{name}.norm1"), width),
            ffn: FeedForwardParams::new(store, &format!("{name}.ffn"), width, hidden, activation, rng),
            norm2: LayerNormParams::new(store, &format!("{name}.norm2"), width),
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn forward<F: Real, R: Rng + ?Sized>(
        &self,
        t: &mut Tape<F>,
        s: &ParamStore<F>,
        x: NodeId,
        layout: &Rc<AttnLayout>,
        dropout: f64,
        rng: &mut R,
    ) -> NodeId {
        let a = self.self_attn.forward(t, s, x, x, layout, false);
        let x = residual_norm(t, s, x, a, &self.norm1, dropout, rng);
        let f = self.ffn.forward(t, s, x);
        residual_norm(t, s, x, f, &self.norm2, dropout, rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecoderLayerParams {
    pub self_attn: AttentionParams,
    pub norm1: LayerNormParams,
    pub cross_attn: AttentionParams,
    pub norm2: LayerNormParams,
    pub ffn: FeedForwardParams,
    pub norm3: LayerNormParams,
}

impl DecoderLayerParams {
    pub fn new<F: Real, R: Rng + ?Sized>(
        store: &mut ParamStore<F>,
        name: &str,
        width: usize,
        heads: usize,
        hidden: usize,
        activation: Activation,
        rng: &mut R,
    ) -> DecoderLayerParams {
        DecoderLayerParams {
            self_attn: AttentionParams::new(store, &format!("{name}.self_attn"), width, heads, rng),
            norm1: LayerNormParams::new(store, &format!("{name}.norm1"), width),
            cross_attn: AttentionParams::new(store, &format!("{name}.cross_attn"), width, heads, rng),
            norm2: LayerNormParams::new(store, &format!("{name}.norm2"), width),
            ffn: FeedForwardParams::new(store, &format!("{name}.ffn"), width, hidden, activation, rng),
            norm3: LayerNormParams::new(store, &format!("{name}.norm3"), width),
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn forward<F: Real, R: Rng + ?Sized>(
        &self,
        t: &mut Tape<F>,
        s: &ParamStore<F>,
        x: NodeId,
        memory: NodeId,
        self_layout: &Rc<AttnLayout>,
        cross_layout: &Rc<AttnLayout>,
        dropout: f64,
        rng: &mut R,
    ) -> NodeId {
        let a = self.self_attn.forward(t, s, x, x, self_layout, true);
        let x = residual_norm(t, s, x, a, &self.norm1, dropout, rng);
        let c = self.cross_attn.forward(t, s, x, memory, cross_layout, false);
        let x = residual_norm(t, s, x, c, &self.norm2, dropout, rng);
        let f = self.ffn.forward(t, s, x);
        residual_norm(t, s, x, f, &self.norm3, dropout, rng)
    }
}
