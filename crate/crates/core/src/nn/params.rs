use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use super::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub usize);

/// A named parameter matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<F> {
    pub name: String,
    pub value: Array2<F>,
    /// Excluded from gradient computation and updates when false.
    pub trainable: bool,
    /// Multiplies the optimizer learning rate for this tensor.
    pub lr_scale: f64,
}

/// Ordered collection of named parameters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore<F> {
    tensors: Vec<Tensor<F>>,
}

impl<F: Real> ParamStore<F> {
    pub fn new() -> ParamStore<F> {
        ParamStore { tensors: Vec::new() }
    }

    pub fn add(&mut self, name: impl Into<String>, value: Array2<F>) -> ParamId {
        let name = name.into();
        assert!(self.find(&name).is_none(), "duplicate parameter {name}");
        self.tensors.push(Tensor {
            name,
            value,
            trainable: true,
            lr_scale: 1.0,
        });
        ParamId(self.tensors.len() - 1)
    }

    pub fn zeros(&mut self, name: &str, rows: usize, cols: usize) -> ParamId {
        self.add(name, Array2::zeros((rows, cols)))
    }

    pub fn ones(&mut self, name: &str, rows: usize, cols: usize) -> ParamId {
        self.add(name, Array2::ones((rows, cols)))
    }

    /// Glorot uniform initialisation.
    pub fn xavier<R: Rng + ?Sized>(&mut self, name: &str, rows: usize, cols: usize, rng: &mut R) -> ParamId {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit);
        self.add(name, Array2::from_shape_fn((rows, cols), |_| F::lit(dist.sample(rng))))
    }

    pub fn normal<R: Rng + ?Sized>(&mut self, name: &str, rows: usize, cols: usize, std: f64, rng: &mut R) -> ParamId {
        let dist = Normal::new(0.0, std).expect("valid std");
        self.add(name, Array2::from_shape_fn((rows, cols), |_| F::lit(dist.sample(rng))))
    }

    /// Sinusoidal position table: row `p`, columns `2i` and `2i + 1` hold
    /// `sin` and `cos` of `p / 10000^(2i / cols)`.
    pub fn sinusoidal(&mut self, name: &str, rows: usize, cols: usize) -> ParamId {
        let table = Array2::from_shape_fn((rows, cols), |(p, j)| {
            let freq = 10000f64.powf(-((j / 2 * 2) as f64) / cols as f64);
            let a = p as f64 * freq;
            F::lit(if j % 2 == 0 { a.sin() } else { a.cos() })
        });
        self.add(name, table)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Array2<F> {
        &self.tensors[id.0].value
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Array2<F> {
        &mut self.tensors[id.0].value
    }

    pub fn tensor(&self, id: ParamId) -> &Tensor<F> {
        &self.tensors[id.0]
    }

    pub fn tensor_mut(&mut self, id: ParamId) -> &mut Tensor<F> {
        &mut self.tensors[id.0]
    }

    pub fn tensors(&self) -> &[Tensor<F>] {
        &self.tensors
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.tensors.len()).map(ParamId)
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.tensors.iter().position(|t| t.name == name).map(ParamId)
    }

    /// Number of scalar parameters.
    pub fn size(&self) -> usize {
        self.tensors.iter().map(|t| t.value.len()).sum()
    }

    pub fn set_trainable(&mut self, trainable: bool) {
        for t in &mut self.tensors {
            t.trainable = trainable;
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors
            .iter()
            .all(|t| t.value.iter().all(|x| x.is_finite()))
    }

    /// Copy into another element type.
    pub fn cast<G: Real>(&self) -> ParamStore<G> {
        ParamStore {
            tensors: self
                .tensors
                .iter()
                .map(|t| Tensor {
                    name: t.name.clone(),
                    value: t.value.mapv(|x| G::from(x).expect("finite parameter")),
                    trainable: t.trainable,
                    lr_scale: t.lr_scale,
                })
                .collect(),
        }
    }

    /// Append all tensors of `other`, prefixing their names. Returns the id
    /// offset of the first appended tensor.
    pub fn extend_prefixed(&mut self, prefix: &str, other: &ParamStore<F>) -> usize {
        let offset = self.tensors.len();
        for t in &other.tensors {
            let mut t = t.clone();
            t.name = format!("{prefix}{}", t.name);
            assert!(self.find(&t.name).is_none(), "duplicate parameter {}", t.name);
            self.tensors.push(t);
        }
        offset
    }
}
