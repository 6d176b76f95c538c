//! Fully connected network with explicit reverse-mode and
//! forward-over-reverse passes.

use crate::rng::Stream;
use crate::scalar::Real;

/// Hidden-layer nonlinearity; the output layer is always linear.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    /// `x · σ(x)`, the smooth gate used by the denoiser.
    Silu,
    /// `ln(1 + eˣ)`, smooth and unbounded — used by the baseline classifier.
    Softplus,
    Identity,
}

impl Activation {
    #[inline]
    fn apply<R: Real>(self, z: R) -> R {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Silu => z * sigmoid(z),
            Activation::Softplus => softplus(z),
            Activation::Identity => z,
        }
    }

    /// First derivative at pre-activation `z`.
    #[inline]
    fn d1<R: Real>(self, z: R) -> R {
        match self {
            Activation::Tanh => {
                let t = z.tanh();
                R::one() - t * t
            }
            Activation::Silu => {
                let s = sigmoid(z);
                s + z * s * (R::one() - s)
            }
            Activation::Softplus => sigmoid(z),
            Activation::Identity => R::one(),
        }
    }

    /// Second derivative at pre-activation `z`.
    #[inline]
    fn d2<R: Real>(self, z: R) -> R {
        match self {
            Activation::Tanh => {
                let t = z.tanh();
                let two = R::of(2.0);
                -two * t * (R::one() - t * t)
            }
            Activation::Silu => {
                let s = sigmoid(z);
                let sp = s * (R::one() - s);
                let two = R::of(2.0);
                two * sp + z * sp * (R::one() - two * s)
            }
            Activation::Softplus => {
                let s = sigmoid(z);
                s * (R::one() - s)
            }
            Activation::Identity => R::zero(),
        }
    }
}

#[inline]
fn sigmoid<R: Real>(z: R) -> R {
    if z >= R::zero() {
        R::one() / (R::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (R::one() + e)
    }
}

#[inline]
fn softplus<R: Real>(z: R) -> R {
    // ln(1 + e^z) = max(z, 0) + ln(1 + e^{-|z|})
    z.max(R::zero()) + (R::one() + (-z.abs()).exp()).ln()
}

/// Dense layer, weights row-major `(n_out × n_in)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<R> {
    pub w: Vec<R>,
    pub b: Vec<R>,
    pub n_in: usize,
    pub n_out: usize,
}

impl<R: Real> Layer<R> {
    fn zeros(n_in: usize, n_out: usize) -> Self {
        Layer { w: vec![R::zero(); n_in * n_out], b: vec![R::zero(); n_out], n_in, n_out }
    }

    fn forward_into(&self, x: &[R], out: &mut Vec<R>) {
        debug_assert_eq!(x.len(), self.n_in);
        out.clear();
        for o in 0..self.n_out {
            let row = &self.w[o * self.n_in..(o + 1) * self.n_in];
            let mut acc = self.b[o];
            for (wi, xi) in row.iter().zip(x) {
                acc += *wi * *xi;
            }
            out.push(acc);
        }
    }

    /// `Wᵀ d`, the adjoint through the linear map.
    fn backward_input(&self, d: &[R]) -> Vec<R> {
        let mut out = vec![R::zero(); self.n_in];
        for o in 0..self.n_out {
            let row = &self.w[o * self.n_in..(o + 1) * self.n_in];
            let g = d[o];
            if g == R::zero() {
                continue;
            }
            for (oi, wi) in out.iter_mut().zip(row) {
                *oi += *wi * g;
            }
        }
        out
    }
}

/// Multi-layer perceptron: hidden layers share one activation, output linear.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<R> {
    pub layers: Vec<Layer<R>>,
    pub activation: Activation,
}

/// Per-parameter gradient with the same shape as the network.
#[derive(Debug, Clone)]
pub struct MlpGrad<R> {
    pub layers: Vec<Layer<R>>,
}

impl<R: Real> MlpGrad<R> {
    pub fn zeros_like(net: &Mlp<R>) -> Self {
        MlpGrad {
            layers: net.layers.iter().map(|l| Layer::zeros(l.n_in, l.n_out)).collect(),
        }
    }

    pub fn scale(&mut self, s: R) {
        for l in &mut self.layers {
            for w in &mut l.w {
                *w *= s;
            }
            for b in &mut l.b {
                *b *= s;
            }
        }
    }

    pub fn add(&mut self, other: &MlpGrad<R>) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.w.iter_mut().zip(&b.w) {
                *x += *y;
            }
            for (x, y) in a.b.iter_mut().zip(&b.b) {
                *x += *y;
            }
        }
    }

    pub fn flatten(&self) -> Vec<R> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(&l.w);
            out.extend_from_slice(&l.b);
        }
        out
    }

    pub fn norm(&self) -> R {
        self.flatten().iter().map(|&x| x * x).sum::<R>().sqrt()
    }
}

/// Intermediate activations kept for the reverse pass.
pub struct ForwardCache<R> {
    /// Layer inputs `a_0 .. a_{L-1}` (where `a_0` is the network input).
    inputs: Vec<Vec<R>>,
    /// Pre-activations `z_1 .. z_L`.
    preacts: Vec<Vec<R>>,
}

impl<R: Real> Mlp<R> {
    /// All-zero network of the given shape (checkpoint loading fills it in).
    pub fn zeros(dims: &[usize], activation: Activation) -> Self {
        assert!(dims.len() >= 2, "need at least input and output dims");
        let layers = dims.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect();
        Mlp { layers, activation }
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.input_dim()];
        d.extend(self.layers.iter().map(|l| l.n_out));
        d
    }

    /// Glorot-uniform initialization, deterministic for the stream.
    pub fn init(dims: &[usize], activation: Activation, rng: &mut Stream) -> Self {
        assert!(dims.len() >= 2, "need at least input and output dims");
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for win in dims.windows(2) {
            let (n_in, n_out) = (win[0], win[1]);
            let scale = (6.0 / (n_in + n_out) as f64).sqrt();
            let mut layer = Layer::zeros(n_in, n_out);
            for w in &mut layer.w {
                *w = rng.uniform_in_r(-scale, scale);
            }
            layers.push(layer);
        }
        Mlp { layers, activation }
    }

    /// Zeroes the final layer so the network starts at the origin.
    pub fn zero_output_layer(&mut self) {
        let last = self.layers.last_mut().expect("nonempty");
        last.w.iter_mut().for_each(|w| *w = R::zero());
        last.b.iter_mut().for_each(|b| *b = R::zero());
    }

    /// Zeroes the first-layer columns for inputs `cols`, killing those
    /// pathways at initialization while leaving them trainable.
    pub fn zero_input_columns(&mut self, cols: std::ops::Range<usize>) {
        let first = self.layers.first_mut().expect("nonempty");
        for o in 0..first.n_out {
            for c in cols.clone() {
                first.w[o * first.n_in + c] = R::zero();
            }
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().expect("nonempty").n_in
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("nonempty").n_out
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn flatten_params(&self) -> Vec<R> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.w);
            out.extend_from_slice(&l.b);
        }
        out
    }

    pub fn set_params(&mut self, flat: &[R]) {
        let mut off = 0;
        for l in &mut self.layers {
            let nw = l.w.len();
            l.w.copy_from_slice(&flat[off..off + nw]);
            off += nw;
            let nb = l.b.len();
            l.b.copy_from_slice(&flat[off..off + nb]);
            off += nb;
        }
        assert_eq!(off, flat.len());
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.iter().chain(&l.b).all(|x| x.is_finite()))
    }

    pub fn forward(&self, x: &[R]) -> Vec<R> {
        let mut cur = x.to_vec();
        let mut buf = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.forward_into(&cur, &mut buf);
            if i != last {
                for z in &mut buf {
                    *z = self.activation.apply(*z);
                }
            }
            std::mem::swap(&mut cur, &mut buf);
        }
        cur
    }

    pub fn forward_cached(&self, x: &[R]) -> (Vec<R>, ForwardCache<R>) {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut preacts = Vec::with_capacity(self.layers.len());
        let mut cur = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            inputs.push(cur.clone());
            let mut z = Vec::new();
            layer.forward_into(&cur, &mut z);
            preacts.push(z.clone());
            if i != last {
                for v in &mut z {
                    *v = self.activation.apply(*v);
                }
            }
            cur = z;
        }
        (cur, ForwardCache { inputs, preacts })
    }

    /// Accumulates `∂L/∂θ` into `grad` given `∂L/∂out`, returning `∂L/∂x`.
    pub fn backward(&self, cache: &ForwardCache<R>, dout: &[R], grad: &mut MlpGrad<R>) -> Vec<R> {
        let last = self.layers.len() - 1;
        let mut dz: Vec<R> = dout.to_vec();
        for i in (0..self.layers.len()).rev() {
            if i != last {
                // dz currently holds ∂L/∂a_i; fold in the activation.
                for (d, &z) in dz.iter_mut().zip(&cache.preacts[i]) {
                    *d *= self.activation.d1(z);
                }
            }
            let layer = &self.layers[i];
            let g = &mut grad.layers[i];
            let a_in = &cache.inputs[i];
            for o in 0..layer.n_out {
                let d = dz[o];
                if d != R::zero() {
                    let row = &mut g.w[o * layer.n_in..(o + 1) * layer.n_in];
                    for (rw, &ai) in row.iter_mut().zip(a_in) {
                        *rw += d * ai;
                    }
                }
                g.b[o] += d;
            }
            dz = layer.backward_input(&dz);
        }
        dz
    }

    /// `∇ₓ f` for a scalar-output network.
    pub fn input_gradient(&self, x: &[R]) -> Vec<R> {
        assert_eq!(self.output_dim(), 1);
        let (_, cache) = self.forward_cached(x);
        let mut grad = MlpGrad::zeros_like(self);
        self.backward(&cache, &[R::one()], &mut grad)
    }

    /// Parameter gradient of the directional derivative `(∇ₓ f)·v` for a
    /// scalar-output network, with `v` held constant. Used for gradient
    /// penalties: `∇_θ ‖∇ₓ f‖² = 2 · grad_directional(x, ∇ₓ f)`.
    pub fn grad_of_directional_derivative(
        &self,
        x: &[R],
        v: &[R],
        grad: &mut MlpGrad<R>,
        weight: R,
    ) {
        assert_eq!(self.output_dim(), 1);
        let n_layers = self.layers.len();
        let last = n_layers - 1;

        // Forward pass with tangent.
        let mut a: Vec<Vec<R>> = Vec::with_capacity(n_layers + 1);
        let mut t: Vec<Vec<R>> = Vec::with_capacity(n_layers + 1);
        let mut z: Vec<Vec<R>> = Vec::with_capacity(n_layers);
        let mut tz: Vec<Vec<R>> = Vec::with_capacity(n_layers);
        a.push(x.to_vec());
        t.push(v.to_vec());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut zi = Vec::new();
            layer.forward_into(&a[i], &mut zi);
            let mut tzi = vec![R::zero(); layer.n_out];
            for o in 0..layer.n_out {
                let row = &layer.w[o * layer.n_in..(o + 1) * layer.n_in];
                let mut acc = R::zero();
                for (wi, ti) in row.iter().zip(&t[i]) {
                    acc += *wi * *ti;
                }
                tzi[o] = acc;
            }
            if i != last {
                let ai: Vec<R> = zi.iter().map(|&zz| self.activation.apply(zz)).collect();
                let ti: Vec<R> =
                    zi.iter().zip(&tzi).map(|(&zz, &tv)| self.activation.d1(zz) * tv).collect();
                a.push(ai);
                t.push(ti);
            }
            z.push(zi);
            tz.push(tzi);
        }

        // Reverse pass through the tangent output T = tz[last][0].
        let mut da = vec![R::zero(); self.layers[last].n_in];
        let mut dt;
        {
            // Output layer: T = W_L t_{L-1}; ∂T/∂W_L = t_{L-1}, ∂T/∂t = W_Lᵀ.
            let layer = &self.layers[last];
            let g = &mut grad.layers[last];
            for (gw, &ti) in g.w.iter_mut().zip(&t[last]) {
                *gw += weight * ti;
            }
            dt = layer.backward_input(&[weight]);
        }
        for i in (0..last).rev() {
            let layer = &self.layers[i];
            let zi = &z[i];
            let tzi = &tz[i];
            // Through a_{i+1} = φ(z) and t_{i+1} = φ'(z) ∘ tz.
            let mut dz = vec![R::zero(); layer.n_out];
            let mut dtz = vec![R::zero(); layer.n_out];
            for o in 0..layer.n_out {
                let d1 = self.activation.d1(zi[o]);
                let d2 = self.activation.d2(zi[o]);
                dtz[o] = d1 * dt[o];
                dz[o] = d2 * tzi[o] * dt[o] + d1 * da[o];
            }
            // Through tz = W t and z = W a + b.
            let g = &mut grad.layers[i];
            let a_in = &a[i];
            let t_in = &t[i];
            for o in 0..layer.n_out {
                let row = &mut g.w[o * layer.n_in..(o + 1) * layer.n_in];
                for c in 0..layer.n_in {
                    row[c] += dtz[o] * t_in[c] + dz[o] * a_in[c];
                }
                g.b[o] += dz[o];
            }
            da = layer.backward_input(&dz);
            dt = layer.backward_input(&dtz);
        }
        let _ = da; // adjoint w.r.t. the network input, unused here
    }
}
