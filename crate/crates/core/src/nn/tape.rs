use std::collections::HashMap;
use std::rc::Rc;

use ndarray::{s, Array2, ArrayView2, Axis, Zip};
use rand::Rng;

use super::params::{ParamId, ParamStore};
use super::{Real, LAYER_NORM_EPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

/// Row segments of the packed query and key matrices. Segment `i` of the
/// queries attends only to segment `i` of the keys.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttnLayout {
    pub queries: Vec<(usize, usize)>,
    pub keys: Vec<(usize, usize)>,
}

impl AttnLayout {
    /// Self-attention over sequences of the given lengths.
    pub fn from_lengths(lengths: &[usize]) -> AttnLayout {
        let segs = segments(lengths);
        AttnLayout {
            queries: segs.clone(),
            keys: segs,
        }
    }

    pub fn cross(query_lengths: &[usize], key_lengths: &[usize]) -> AttnLayout {
        assert_eq!(query_lengths.len(), key_lengths.len());
        AttnLayout {
            queries: segments(query_lengths),
            keys: segments(key_lengths),
        }
    }
}

fn segments(lengths: &[usize]) -> Vec<(usize, usize)> {
    let mut off = 0;
    lengths
        .iter()
        .map(|&l| {
            let seg = (off, l);
            off += l;
            seg
        })
        .collect()
}

enum Op<F> {
    Constant,
    Param(ParamId),
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    AddRow(NodeId, NodeId),
    Scale(NodeId, F),
    Relu(NodeId),
    Gelu(NodeId),
    Mask(NodeId, Array2<F>),
    LayerNorm {
        x: NodeId,
        gamma: NodeId,
        beta: NodeId,
        xhat: Array2<F>,
        rstd: Vec<F>,
    },
    Gather(NodeId, Vec<usize>),
    Attention {
        q: NodeId,
        k: NodeId,
        v: NodeId,
        layout: Rc<AttnLayout>,
        heads: usize,
        /// Softmax rows per (segment, head).
        probs: Vec<Array2<F>>,
    },
    SmoothedCe {
        logits: NodeId,
        targets: Vec<usize>,
        smoothing: F,
        probs: Array2<F>,
    },
}

struct Node<F> {
    value: Array2<F>,
    op: Op<F>,
    /// Whether any trainable parameter feeds this node.
    needs_grad: bool,
}

/// Gradients of trainable parameters, indexed by [`ParamId`].
pub type ParamGrads<F> = Vec<Option<Array2<F>>>;

/// Records a forward computation for one backward pass.
pub struct Tape<F: Real> {
    nodes: Vec<Node<F>>,
    params: HashMap<ParamId, NodeId>,
}

impl<F: Real> Default for Tape<F> {
    fn default() -> Self {
        Tape::new()
    }
}

fn gelu_parts<F: Real>(x: F) -> (F, F) {
    let c = F::lit((2.0 / std::f64::consts::PI).sqrt());
    let a = F::lit(0.044715);
    let half = F::lit(0.5);
    let one = F::one();
    let u = c * (x + a * x * x * x);
    let t = u.tanh();
    let value = half * x * (one + t);
    let deriv = half * (one + t) + half * x * (one - t * t) * c * (one + F::lit(3.0) * a * x * x);
    (value, deriv)
}

pub fn gelu<F: Real>(x: F) -> F {
    gelu_parts(x).0
}

/// Row-wise softmax in place.
pub fn softmax_rows<F: Real>(m: &mut Array2<F>) {
    for mut row in m.rows_mut() {
        let max = row.iter().copied().fold(F::neg_infinity(), F::max);
        let mut sum = F::zero();
        for x in row.iter_mut() {
            *x = (*x - max).exp();
            sum += *x;
        }
        let inv = F::one() / sum;
        row.mapv_inplace(|x| x * inv);
    }
}

/// Row-wise layer normalisation returning `(y, xhat, rstd)`.
pub fn layer_norm_forward<F: Real>(
    x: ArrayView2<F>,
    gamma: ArrayView2<F>,
    beta: ArrayView2<F>,
) -> (Array2<F>, Array2<F>, Vec<F>) {
    let cols = F::from_usize(x.ncols()).expect("width");
    let eps = F::lit(LAYER_NORM_EPS);
    let mut xhat = x.to_owned();
    let mut rstd = Vec::with_capacity(x.nrows());
    for mut row in xhat.rows_mut() {
        let mean = row.sum() / cols;
        row.mapv_inplace(|v| v - mean);
        let var = row.iter().map(|&v| v * v).sum::<F>() / cols;
        let r = F::one() / (var + eps).sqrt();
        row.mapv_inplace(|v| v * r);
        rstd.push(r);
    }
    let y = &xhat * &gamma.row(0) + &beta.row(0);
    (y, xhat, rstd)
}

/// Multi-head attention over packed segments. Returns the output and the
/// softmax matrices for each (segment, head).
pub fn attention_forward<F: Real>(
    q: ArrayView2<F>,
    k: ArrayView2<F>,
    v: ArrayView2<F>,
    layout: &AttnLayout,
    heads: usize,
    causal: bool,
) -> (Array2<F>, Vec<Array2<F>>) {
    let d = q.ncols();
    let dh = d / heads;
    let scale = F::one() / F::from_usize(dh).expect("head width").sqrt();
    let mut out = Array2::zeros((q.nrows(), d));
    let mut probs = Vec::with_capacity(layout.queries.len() * heads);
    for (&(qo, ql), &(ko, kl)) in layout.queries.iter().zip(&layout.keys) {
        for h in 0..heads {
            let cols = h * dh..(h + 1) * dh;
            let qs = q.slice(s![qo..qo + ql, cols.clone()]);
            let ks = k.slice(s![ko..ko + kl, cols.clone()]);
            let vs = v.slice(s![ko..ko + kl, cols.clone()]);
            let mut scores = qs.dot(&ks.t());
            scores.mapv_inplace(|x| x * scale);
            if causal {
                // Query i sees keys 0..=i + (kl - ql) so that incremental
                // decoding lines up with the last rows.
                let shift = kl - ql;
                for (i, mut row) in scores.rows_mut().into_iter().enumerate() {
                    for x in row.iter_mut().skip(i + shift + 1) {
                        *x = F::neg_infinity();
                    }
                }
            }
            softmax_rows(&mut scores);
            out.slice_mut(s![qo..qo + ql, cols]).assign(&scores.dot(&vs));
            probs.push(scores);
        }
    }
    (out, probs)
}

impl<F: Real> Tape<F> {
    pub fn new() -> Tape<F> {
        Tape {
            nodes: Vec::new(),
            params: HashMap::new(),
        }
    }

    fn push(&mut self, value: Array2<F>, op: Op<F>, needs_grad: bool) -> NodeId {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn needs(&self, ids: &[NodeId]) -> bool {
        ids.iter().any(|id| self.nodes[id.0].needs_grad)
    }

    pub fn value(&self, id: NodeId) -> &Array2<F> {
        &self.nodes[id.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn constant(&mut self, value: Array2<F>) -> NodeId {
        self.push(value, Op::Constant, false)
    }

    /// Node holding a parameter's current value; repeated calls reuse it.
    pub fn param(&mut self, store: &ParamStore<F>, id: ParamId) -> NodeId {
        if let Some(&n) = self.params.get(&id) {
            return n;
        }
        let t = store.tensor(id);
        let n = self.push(t.value.clone(), Op::Param(id), t.trainable);
        self.params.insert(id, n);
        n
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a).dot(self.value(b));
        let g = self.needs(&[a, b]);
        self.push(v, Op::MatMul(a, b), g)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a) + self.value(b);
        let g = self.needs(&[a, b]);
        self.push(v, Op::Add(a, b), g)
    }

    /// Add a `1 × n` row to every row of `a`.
    pub fn add_row(&mut self, a: NodeId, row: NodeId) -> NodeId {
        assert_eq!(self.value(row).nrows(), 1);
        let v = self.value(a) + &self.value(row).row(0);
        let g = self.needs(&[a, row]);
        self.push(v, Op::AddRow(a, row), g)
    }

    pub fn scale(&mut self, a: NodeId, factor: F) -> NodeId {
        let v = self.value(a) * factor;
        let g = self.needs(&[a]);
        self.push(v, Op::Scale(a, factor), g)
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).mapv(|x| x.max(F::zero()));
        let g = self.needs(&[a]);
        self.push(v, Op::Relu(a), g)
    }

    pub fn gelu(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).mapv(gelu);
        let g = self.needs(&[a]);
        self.push(v, Op::Gelu(a), g)
    }

    /// Inverted dropout; the identity when `p == 0`.
    pub fn dropout<R: Rng + ?Sized>(&mut self, a: NodeId, p: f64, rng: &mut R) -> NodeId {
        if p <= 0.0 {
            return a;
        }
        let keep = F::lit(1.0 / (1.0 - p));
        let shape = self.value(a).raw_dim();
        let mask = Array2::from_shape_simple_fn(shape, || {
            if rng.gen::<f64>() < p {
                F::zero()
            } else {
                keep
            }
        });
        let v = self.value(a) * &mask;
        let g = self.needs(&[a]);
        self.push(v, Op::Mask(a, mask), g)
    }

    pub fn layer_norm(&mut self, x: NodeId, gamma: NodeId, beta: NodeId) -> NodeId {
        let (y, xhat, rstd) = layer_norm_forward(
            self.value(x).view(),
            self.value(gamma).view(),
            self.value(beta).view(),
        );
        let g = self.needs(&[x, gamma, beta]);
        self.push(
            y,
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                rstd,
            },
            g,
        )
    }

    /// Select rows of `table`.
    pub fn gather(&mut self, table: NodeId, rows: &[usize]) -> NodeId {
        let t = self.value(table);
        let mut v = Array2::zeros((rows.len(), t.ncols()));
        for (i, &r) in rows.iter().enumerate() {
            v.row_mut(i).assign(&t.row(r));
        }
        let g = self.needs(&[table]);
        self.push(v, Op::Gather(table, rows.to_vec()), g)
    }

    pub fn attention(
        &mut self,
        q: NodeId,
        k: NodeId,
        v: NodeId,
        layout: Rc<AttnLayout>,
        heads: usize,
        causal: bool,
    ) -> NodeId {
        let (out, probs) = attention_forward(
            self.value(q).view(),
            self.value(k).view(),
            self.value(v).view(),
            &layout,
            heads,
            causal,
        );
        let g = self.needs(&[q, k, v]);
        self.push(
            out,
            Op::Attention {
                q,
                k,
                v,
                layout,
                heads,
                probs,
            },
            g,
        )
    }

    /// Mean label-smoothed cross-entropy over rows: the target gets
    /// probability `1 - smoothing`, every other class `smoothing / (V - 1)`.
    pub fn smoothed_cross_entropy(&mut self, logits: NodeId, targets: &[usize], smoothing: f64) -> NodeId {
        let z = self.value(logits);
        assert_eq!(z.nrows(), targets.len());
        let vocab = z.ncols();
        let eps = F::lit(smoothing);
        let off = if vocab > 1 {
            eps / F::from_usize(vocab - 1).expect("vocab")
        } else {
            F::zero()
        };
        let on = F::one() - eps;
        let mut probs = z.to_owned();
        let mut total = F::zero();
        for (mut row, &t) in probs.rows_mut().into_iter().zip(targets) {
            let max = row.iter().copied().fold(F::neg_infinity(), F::max);
            let lse = row.iter().map(|&x| (x - max).exp()).sum::<F>().ln() + max;
            let mut loss = F::zero();
            for (j, x) in row.iter_mut().enumerate() {
                let logp = *x - lse;
                let q = if j == t { on } else { off };
                if q > F::zero() {
                    loss -= q * logp;
                }
                *x = logp.exp();
            }
            total += loss;
        }
        let n = F::from_usize(targets.len().max(1)).expect("count");
        let g = self.needs(&[logits]);
        self.push(
            Array2::from_elem((1, 1), total / n),
            Op::SmoothedCe {
                logits,
                targets: targets.to_vec(),
                smoothing: eps,
                probs,
            },
            g,
        )
    }

    /// Softmax probabilities cached by a cross-entropy node.
    pub fn ce_probs(&self, id: NodeId) -> Option<&Array2<F>> {
        match &self.nodes[id.0].op {
            Op::SmoothedCe { probs, .. } => Some(probs),
            _ => None,
        }
    }

    pub fn scalar(&self, id: NodeId) -> F {
        self.value(id)[[0, 0]]
    }

    /// Gradients of the scalar node `loss` with respect to every trainable
    /// parameter placed on the tape.
    pub fn backward(&self, loss: NodeId, n_params: usize) -> ParamGrads<F> {
        let mut grads: Vec<Option<Array2<F>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Array2::ones(self.value(loss).raw_dim()));
        let mut out: ParamGrads<F> = (0..n_params).map(|_| None).collect();

        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[i].take() else {
                continue;
            };
            let mut acc = |id: NodeId, delta: Array2<F>| {
                if !self.nodes[id.0].needs_grad {
                    return;
                }
                match &mut grads[id.0] {
                    Some(existing) => *existing += &delta,
                    slot => *slot = Some(delta),
                }
            };
            match &node.op {
                Op::Constant => {}
                Op::Param(pid) => out[pid.0] = Some(g),
                Op::MatMul(a, b) => {
                    if self.nodes[a.0].needs_grad {
                        acc(*a, g.dot(&self.value(*b).t()));
                    }
                    if self.nodes[b.0].needs_grad {
                        acc(*b, self.value(*a).t().dot(&g));
                    }
                }
                Op::Add(a, b) => {
                    acc(*b, g.clone());
                    acc(*a, g);
                }
                Op::AddRow(a, row) => {
                    acc(*row, g.sum_axis(Axis(0)).insert_axis(Axis(0)));
                    acc(*a, g);
                }
                Op::Scale(a, f) => acc(*a, g * *f),
                Op::Relu(a) => {
                    let mut d = g;
                    Zip::from(&mut d)
                        .and(self.value(*a))
                        .for_each(|d, &x| {
                            if x <= F::zero() {
                                *d = F::zero();
                            }
                        });
                    acc(*a, d);
                }
                Op::Gelu(a) => {
                    let mut d = g;
                    Zip::from(&mut d)
                        .and(self.value(*a))
                        .for_each(|d, &x| *d *= gelu_parts(x).1);
                    acc(*a, d);
                }
                Op::Mask(a, mask) => acc(*a, g * mask),
                Op::LayerNorm {
                    x,
                    gamma,
                    beta,
                    xhat,
                    rstd,
                } => {
                    acc(*beta, g.sum_axis(Axis(0)).insert_axis(Axis(0)));
                    acc(*gamma, (&g * xhat).sum_axis(Axis(0)).insert_axis(Axis(0)));
                    if self.nodes[x.0].needs_grad {
                        let gam = self.value(*gamma).row(0).to_owned();
                        let cols = F::from_usize(g.ncols()).expect("width");
                        let mut dx = &g * &gam;
                        for ((mut row, xh), &r) in dx.rows_mut().into_iter().zip(xhat.rows()).zip(rstd) {
                            let mean = row.sum() / cols;
                            let dot = row.iter().zip(xh).map(|(&a, &b)| a * b).sum::<F>() / cols;
                            Zip::from(&mut row)
                                .and(&xh)
                                .for_each(|d, &h| *d = r * (*d - mean - h * dot));
                        }
                        acc(*x, dx);
                    }
                }
                Op::Gather(table, rows) => {
                    let mut d = Array2::zeros(self.value(*table).raw_dim());
                    for (i, &r) in rows.iter().enumerate() {
                        let mut dst = d.row_mut(r);
                        dst += &g.row(i);
                    }
                    acc(*table, d);
                }
                Op::Attention {
                    q,
                    k,
                    v,
                    layout,
                    heads,
                    probs,
                } => {
                    let (dq, dk, dv) = attention_backward(
                        &g,
                        self.value(*q).view(),
                        self.value(*k).view(),
                        self.value(*v).view(),
                        layout,
                        *heads,
                        probs,
                    );
                    acc(*q, dq);
                    acc(*k, dk);
                    acc(*v, dv);
                }
                Op::SmoothedCe {
                    logits,
                    targets,
                    smoothing,
                    probs,
                } => {
                    let vocab = probs.ncols();
                    let off = if vocab > 1 {
                        *smoothing / F::from_usize(vocab - 1).expect("vocab")
                    } else {
                        F::zero()
                    };
                    let on = F::one() - *smoothing;
                    let scale = g[[0, 0]] / F::from_usize(targets.len().max(1)).expect("count");
                    let mut d = probs.clone();
                    for (mut row, &t) in d.rows_mut().into_iter().zip(targets) {
                        for (j, x) in row.iter_mut().enumerate() {
                            let q = if j == t { on } else { off };
                            *x = (*x - q) * scale;
                        }
                    }
                    acc(*logits, d);
                }
            }
        }
        out
    }
}

fn attention_backward<F: Real>(
    g: &Array2<F>,
    q: ArrayView2<F>,
    k: ArrayView2<F>,
    v: ArrayView2<F>,
    layout: &AttnLayout,
    heads: usize,
    probs: &[Array2<F>],
) -> (Array2<F>, Array2<F>, Array2<F>) {
    let d = q.ncols();
    let dh = d / heads;
    let scale = F::one() / F::from_usize(dh).expect("head width").sqrt();
    let mut dq = Array2::zeros(q.raw_dim());
    let mut dk = Array2::zeros(k.raw_dim());
    let mut dv = Array2::zeros(v.raw_dim());
    let mut p_iter = probs.iter();
    for (&(qo, ql), &(ko, kl)) in layout.queries.iter().zip(&layout.keys) {
        for h in 0..heads {
            let p = p_iter.next().expect("cached softmax");
            let cols = h * dh..(h + 1) * dh;
            let go = g.slice(s![qo..qo + ql, cols.clone()]);
            let qs = q.slice(s![qo..qo + ql, cols.clone()]);
            let ks = k.slice(s![ko..ko + kl, cols.clone()]);
            let vs = v.slice(s![ko..ko + kl, cols.clone()]);
            // dV = P^T dO, dP = dO V^T, dS = P * (dP - rowsum(dP * P))
            let mut dvs = dv.slice_mut(s![ko..ko + kl, cols.clone()]);
            dvs += &p.t().dot(&go);
            let mut ds = go.dot(&vs.t());
            for (mut row, prow) in ds.rows_mut().into_iter().zip(p.rows()) {
                let dot = row.iter().zip(prow).map(|(&a, &b)| a * b).sum::<F>();
                Zip::from(&mut row)
                    .and(&prow)
                    .for_each(|x, &pp| *x = pp * (*x - dot) * scale);
            }
            let mut dqs = dq.slice_mut(s![qo..qo + ql, cols.clone()]);
            dqs += &ds.dot(&ks);
            let mut dks = dk.slice_mut(s![ko..ko + kl, cols]);
            dks += &ds.t().dot(&qs);
        }
    }
    (dq, dk, dv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(-1.0..1.0))
    }

    /// Finite-difference check of d(loss)/d(param) for a tape builder.
    fn check<B>(store: &mut ParamStore<f64>, build: B)
    where
        B: Fn(&mut Tape<f64>, &ParamStore<f64>) -> NodeId,
    {
        let mut tape = Tape::new();
        let loss = build(&mut tape, store);
        let grads = tape.backward(loss, store.len());
        let h = 1e-6;
        for id in store.ids().collect::<Vec<_>>() {
            let g = grads[id.0].clone().expect("gradient");
            for idx in 0..store.get(id).len() {
                let orig = store.get(id).as_slice().unwrap()[idx];
                store.get_mut(id).as_slice_mut().unwrap()[idx] = orig + h;
                let mut t = Tape::new();
                let out = build(&mut t, store);
                let lp = t.scalar(out);
                store.get_mut(id).as_slice_mut().unwrap()[idx] = orig - h;
                let mut t = Tape::new();
                let out = build(&mut t, store);
                let lm = t.scalar(out);
                store.get_mut(id).as_slice_mut().unwrap()[idx] = orig;
                let num = (lp - lm) / (2.0 * h);
                let ana = g.as_slice().unwrap()[idx];
                let err = (num - ana).abs() / num.abs().max(ana.abs()).max(1e-7);
                assert!(err < 1e-5, "{} [{idx}]: {ana} vs {num}", store.tensor(id).name);
            }
        }
    }

    #[test]
    fn elementwise_and_norm_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut store = ParamStore::new();
        let x = store.add("x", random(3, 4, &mut rng));
        let w = store.add("w", random(4, 5, &mut rng));
        let b = store.add("b", random(1, 5, &mut rng));
        let gamma = store.add("gamma", random(1, 5, &mut rng));
        let beta = store.add("beta", random(1, 5, &mut rng));
        let emb = store.add("emb", random(6, 5, &mut rng));
        check(&mut store, |t, s| {
            let x = t.param(s, x);
            let w = t.param(s, w);
            let b = t.param(s, b);
            let y = t.matmul(x, w);
            let y = t.add_row(y, b);
            let y = t.gelu(y);
            let e = t.param(s, emb);
            let e = t.gather(e, &[0, 5, 0]);
            let y = t.add(y, e);
            let gamma = t.param(s, gamma);
            let beta = t.param(s, beta);
            let y = t.layer_norm(y, gamma, beta);
            let y = t.scale(y, 1.7);
            t.smoothed_cross_entropy(y, &[1, 4, 0], 0.1)
        });
    }

    #[test]
    fn attention_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut store = ParamStore::new();
        let q = store.add("q", random(5, 4, &mut rng));
        let k = store.add("k", random(5, 4, &mut rng));
        let v = store.add("v", random(5, 4, &mut rng));
        let kc = store.add("kc", random(4, 4, &mut rng));
        let w = store.add("w", random(4, 3, &mut rng));
        let self_layout = Rc::new(AttnLayout::from_lengths(&[3, 2]));
        let cross_layout = Rc::new(AttnLayout::cross(&[3, 2], &[1, 3]));
        check(&mut store, |t, s| {
            let (q, k, v, kc) = (t.param(s, q), t.param(s, k), t.param(s, v), t.param(s, kc));
            let a = t.attention(q, k, v, self_layout.clone(), 2, true);
            let c = t.attention(a, kc, kc, cross_layout.clone(), 2, false);
            let y = t.relu(c);
            let y = t.add(y, a);
            let w = t.param(s, w);
            let y = t.matmul(y, w);
            t.smoothed_cross_entropy(y, &[0, 1, 2, 2, 1], 0.0)
        });
    }

    #[test]
    fn causal_attention_ignores_future() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = random(4, 4, &mut rng);
        let k = random(4, 4, &mut rng);
        let v = random(4, 4, &mut rng);
        let layout = AttnLayout::from_lengths(&[4]);
        let (full, probs) = attention_forward(q.view(), k.view(), v.view(), &layout, 2, true);
        for p in &probs {
            for row in p.rows() {
                assert!((row.sum() - 1.0).abs() < 1e-12);
            }
        }
        let short = AttnLayout::from_lengths(&[2]);
        let (prefix, _) = attention_forward(
            q.slice(s![..2, ..]),
            k.slice(s![..2, ..]),
            v.slice(s![..2, ..]),
            &short,
            2,
            true,
        );
        assert!((&full.slice(s![..2, ..]) - &prefix).iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn layer_norm_normalizes() {
        let x: Array2<f64> = array![[1.0, 2.0, 3.0, 10.0], [-4.0, 0.0, 0.5, 0.25]];
        let (_, xhat, _) = layer_norm_forward(x.view(), array![[1.0; 4]].view(), array![[0.0; 4]].view());
        for row in xhat.rows() {
            let mean: f64 = row.sum() / 4.0;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4.0;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn smoothed_loss_floor() {
        // With logits matching the smoothed target exactly, the loss equals
        // the entropy of the smoothed distribution.
        let eps: f64 = 0.1;
        let v = 5usize;
        let off = eps / (v - 1) as f64;
        let logits = Array2::from_shape_fn((1, v), |(_, j)| if j == 2 { (1.0 - eps).ln() } else { off.ln() });
        let mut t = Tape::<f64>::new();
        let z = t.constant(logits);
        let l = t.smoothed_cross_entropy(z, &[2], eps);
        let floor = -(1.0 - eps) * (1.0 - eps).ln() - eps * off.ln();
        assert!((t.scalar(l) - floor).abs() < 1e-12);
        assert!(floor >= 0.0);
    }
}
