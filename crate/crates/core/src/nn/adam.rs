//! Adam over a flat parameter vector.

use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct Adam<R> {
    pub lr: R,
    pub beta1: R,
    pub beta2: R,
    pub eps: R,
    t: u64,
    m: Vec<R>,
    v: Vec<R>,
}

impl<R: Real> Adam<R> {
    pub fn new(param_count: usize, lr: R) -> Self {
        Adam {
            lr,
            beta1: R::of(0.9),
            beta2: R::of(0.999),
            eps: R::of(1e-8),
            t: 0,
            m: vec![R::zero(); param_count],
            v: vec![R::zero(); param_count],
        }
    }

    /// One descent step in place. A zero learning rate is a strict no-op.
    pub fn step(&mut self, params: &mut [R], grad: &[R]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grad.len(), self.m.len());
        if self.lr == R::zero() {
            return;
        }
        self.t += 1;
        let t = R::of(self.t as f64);
        let bc1 = R::one() - self.beta1.powf(t);
        let bc2 = R::one() - self.beta2.powf(t);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (R::one() - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (R::one() - self.beta2) * grad[i] * grad[i];
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            params[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
        }
    }
}
