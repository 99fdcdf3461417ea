use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use super::params::ParamStore;
use super::tape::ParamGrads;
use super::Real;

/// Linear warmup to the peak rate, then inverse square-root decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub peak: f64,
    pub warmup_steps: u64,
}

impl LrSchedule {
    /// Rate for the 1-based update `step`.
    pub fn at(&self, step: u64) -> f64 {
        let step = step.max(1) as f64;
        let warm = self.warmup_steps.max(1) as f64;
        if step <= warm {
            self.peak * step / warm
        } else {
            self.peak * (warm / step).sqrt()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Decoupled weight decay coefficient.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.98,
            eps: 1e-8,
            weight_decay: 1e-4,
        }
    }
}

/// Adam moments, persisted for exact resumption.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<F> {
    pub step: u64,
    pub m: Vec<Array2<F>>,
    pub v: Vec<Array2<F>>,
}

#[derive(Debug, Clone)]
pub struct Adam<F> {
    pub config: AdamConfig,
    pub state: AdamState<F>,
}

impl<F: Real> Adam<F> {
    pub fn new(config: AdamConfig, store: &ParamStore<F>) -> Adam<F> {
        let zeros = || {
            store
                .tensors()
                .iter()
                .map(|t| Array2::zeros(t.value.raw_dim()))
                .collect()
        };
        Adam {
            config,
            state: AdamState {
                step: 0,
                m: zeros(),
                v: zeros(),
            },
        }
    }

    /// One update with learning rate `lr` (before per-tensor scaling).
    pub fn step(&mut self, store: &mut ParamStore<F>, grads: &ParamGrads<F>, lr: f64) {
        self.state.step += 1;
        let c = self.config;
        let t = self.state.step as i32;
        let bc1 = 1.0 - c.beta1.powi(t);
        let bc2 = 1.0 - c.beta2.powi(t);
        let (b1, b2) = (F::lit(c.beta1), F::lit(c.beta2));
        let (ob1, ob2) = (F::lit(1.0 - c.beta1), F::lit(1.0 - c.beta2));
        let eps = F::lit(c.eps);
        for (i, g) in grads.iter().enumerate() {
            let Some(g) = g else { continue };
            let tensor = store.tensor_mut(super::ParamId(i));
            if !tensor.trainable {
                continue;
            }
            let rate = lr * tensor.lr_scale;
            let step_size = F::lit(rate / bc1);
            let inv_bc2 = F::lit(1.0 / bc2);
            let decay = F::lit(1.0 - rate * c.weight_decay);
            let m = &mut self.state.m[i];
            let v = &mut self.state.v[i];
            Zip::from(&mut tensor.value)
                .and(m)
                .and(v)
                .and(g)
                .for_each(|p, m, v, &g| {
                    *m = b1 * *m + ob1 * g;
                    *v = b2 * *v + ob2 * g * g;
                    *p = *p * decay - step_size * *m / ((*v * inv_bc2).sqrt() + eps);
                });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_shape() {
        let s = LrSchedule {
            peak: 1e-3,
            warmup_steps: 500,
        };
        assert!((s.at(250) - 5e-4).abs() < 1e-15);
        assert!((s.at(500) - 1e-3).abs() < 1e-15);
        assert!((s.at(2000) - 5e-4).abs() < 1e-15);
    }

    #[test]
    fn adam_minimizes_quadratic() {
        let mut store = ParamStore::<f64>::new();
        let id = store.add("x", Array2::from_elem((1, 2), 3.0));
        let mut adam = Adam::new(
            AdamConfig {
                weight_decay: 0.0,
                ..Default::default()
            },
            &store,
        );
        for _ in 0..2000 {
            let g = store.get(id).mapv(|x| 2.0 * x);
            adam.step(&mut store, &vec![Some(g)], 0.01);
        }
        assert!(store.get(id).iter().all(|x| x.abs() < 1e-2));
    }
}
