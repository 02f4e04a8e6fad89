use serde::{Deserialize, Serialize};

use crate::params::ParamStore;
use crate::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Adam with bias correction. Moments are kept in `f64`.
#[derive(Clone, Debug)]
pub struct Adam {
    pub cfg: AdamConfig,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(cfg: AdamConfig) -> Self {
        Self { cfg, step: 0, m: Vec::new(), v: Vec::new() }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Updates every parameter from its accumulated gradient; a missing
    /// gradient counts as zero.
    pub fn step<T: Real>(&mut self, store: &mut ParamStore<T>) {
        if self.m.len() != store.len() {
            self.m = store.iter().map(|(_, t)| vec![0.0; t.numel()]).collect();
            self.v = self.m.clone();
        }
        self.step += 1;
        let c = &self.cfg;
        let bc1 = 1.0 - c.beta1.powi(self.step as i32);
        let bc2 = 1.0 - c.beta2.powi(self.step as i32);
        for (i, id) in store.ids().collect::<Vec<_>>().into_iter().enumerate() {
            let t = store.get_mut(id);
            let Some(g) = t.grad.take() else { continue };
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for (j, p) in t.data_mut().iter_mut().enumerate() {
                let gj = g[j].as_f64();
                m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * gj;
                v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * gj * gj;
                let update = c.lr * (m[j] / bc1) / ((v[j] / bc2).sqrt() + c.eps);
                *p = T::lit(p.as_f64() - update);
            }
            t.grad = Some(g);
        }
    }
}

/// Scales all gradients so their global L2 norm is at most `max_norm`.
/// Returns the norm before scaling.
pub fn clip_grad_norm<T: Real>(store: &mut ParamStore<T>, max_norm: f64) -> f64 {
    let total: f64 = store
        .iter()
        .filter_map(|(_, t)| t.grad.as_ref())
        .flat_map(|g| g.iter().map(|v| v.as_f64() * v.as_f64()))
        .sum::<f64>()
        .sqrt();
    if total > max_norm && total > 0.0 {
        let s = T::lit(max_norm / total);
        for id in store.ids().collect::<Vec<_>>() {
            if let Some(g) = store.get_mut(id).grad.as_mut() {
                g.iter_mut().for_each(|v| *v *= s);
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Graph, Tensor};

    fn run(steps: usize) -> Vec<f32> {
        let mut store = ParamStore::<f32>::new();
        let x = store.add("x", Tensor::scalar(0.0)).unwrap();
        let mut opt = Adam::new(AdamConfig { lr: 0.1, ..Default::default() });
        let mut traj = Vec::new();
        for _ in 0..steps {
            store.zero_grad();
            let mut g = Graph::new();
            let xv = g.param(&store, x);
            let five = g.input(Tensor::scalar(5.0));
            let l = g.mse(xv, five).unwrap();
            g.backward(l).unwrap();
            g.accumulate_grads(&mut store);
            opt.step(&mut store);
            traj.push(store.get(x).data()[0]);
        }
        traj
    }

    #[test]
    fn converges_to_minimum() {
        let traj = run(500);
        assert!((traj[499] - 5.0).abs() <= 0.01, "{}", traj[499]);
        assert_eq!(traj, run(500));
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut store = ParamStore::<f64>::new();
        let p = store.add("p", Tensor::new(&[3], vec![1.0, -2.0, 3.0]).unwrap()).unwrap();
        store.get_mut(p).grad = Some(vec![0.0; 3]);
        let mut opt = Adam::new(AdamConfig::default());
        opt.step(&mut store);
        opt.step(&mut store);
        assert_eq!(store.get(p).data(), &[1.0, -2.0, 3.0]);
    }

    #[test]
    fn clipping_bounds_norm() {
        let mut store = ParamStore::<f64>::new();
        let p = store.add("p", Tensor::zeros(&[2])).unwrap();
        store.get_mut(p).grad = Some(vec![3.0, 4.0]);
        assert_eq!(clip_grad_norm(&mut store, 1.0), 5.0);
        let g = store.get(p).grad.clone().unwrap();
        assert!((g[0] - 0.6).abs() < 1e-12 && (g[1] - 0.8).abs() < 1e-12);
    }
}
