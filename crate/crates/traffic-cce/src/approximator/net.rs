use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("input length {got} does not match input_dim {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("non-finite value encountered in {place}")]
    NonFinite { place: &'static str },
    #[error("parameter vector length {got} does not match {expected}")]
    ParamLenMismatch { expected: usize, got: usize },
}

/// Architecture of a fully connected network: tanh hidden layers, linear
/// output, seeded uniform fan-in initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct NetSpec {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub output_dim: usize,
    pub seed: u64,
}

impl NetSpec {
    pub fn new(input_dim: usize, hidden: &[usize], output_dim: usize, seed: u64) -> Self {
        assert!(input_dim >= 1 && output_dim >= 1);
        assert!(hidden.iter().all(|&w| w >= 1));
        Self {
            input_dim,
            hidden: hidden.to_vec(),
            output_dim,
            seed,
        }
    }

    /// Layer widths including input and output.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = Vec::with_capacity(self.hidden.len() + 2);
        d.push(self.input_dim);
        d.extend_from_slice(&self.hidden);
        d.push(self.output_dim);
        d
    }
}

/// Fully connected network with parameters stored as one flat vector,
/// layer-major: weights (row-major, out x in) then biases, per layer.
#[derive(Debug, Clone)]
pub struct Mlp {
    spec: NetSpec,
    dims: Vec<usize>,
    params: Vec<f64>,
    /// Per-layer (weight offset, bias offset) into `params`.
    offsets: Vec<(usize, usize)>,
}

/// Forward-pass intermediates needed by `backward_acc`: post-activation
/// values per layer, starting with the input itself.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("nonempty cache")
    }
}

impl Mlp {
    pub fn new(spec: NetSpec) -> Self {
        let dims = spec.dims();
        let mut offsets = Vec::with_capacity(dims.len() - 1);
        let mut total = 0usize;
        for l in 0..dims.len() - 1 {
            let (fan_in, fan_out) = (dims[l], dims[l + 1]);
            offsets.push((total, total + fan_in * fan_out));
            total += fan_in * fan_out + fan_out;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut params = vec![0.0; total];
        for l in 0..dims.len() - 1 {
            let (fan_in, fan_out) = (dims[l], dims[l + 1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let (w_off, b_off) = offsets[l];
            for w in params[w_off..w_off + fan_in * fan_out].iter_mut() {
                *w = rng.gen_range(-bound..bound);
            }
            // Biases start at zero.
            let _ = b_off;
        }
        Self {
            spec,
            dims,
            params,
            offsets,
        }
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<(), NetError> {
        if p.len() != self.params.len() {
            return Err(NetError::ParamLenMismatch {
                expected: self.params.len(),
                got: p.len(),
            });
        }
        self.params.copy_from_slice(p);
        Ok(())
    }

    /// Deterministic forward evaluation.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, NetError> {
        Ok(self.forward_cached(input)?.activations.pop_unwrapped())
    }

    /// Forward pass retaining per-layer activations for backprop.
    pub fn forward_cached(&self, input: &[f64]) -> Result<ForwardCache, NetError> {
        if input.len() != self.dims[0] {
            return Err(NetError::DimMismatch {
                expected: self.dims[0],
                got: input.len(),
            });
        }
        let n_layers = self.dims.len() - 1;
        let mut activations = Vec::with_capacity(n_layers + 1);
        activations.push(input.to_vec());
        for l in 0..n_layers {
            let (fan_in, fan_out) = (self.dims[l], self.dims[l + 1]);
            let (w_off, b_off) = self.offsets[l];
            let prev = &activations[l];
            let mut z = vec![0.0; fan_out];
            for o in 0..fan_out {
                let row = &self.params[w_off + o * fan_in..w_off + (o + 1) * fan_in];
                let mut acc = self.params[b_off + o];
                for (wi, xi) in row.iter().zip(prev.iter()) {
                    acc += wi * xi;
                }
                // Hidden layers are tanh; the final layer is linear.
                z[o] = if l + 1 < n_layers { acc.tanh() } else { acc };
            }
            if z.iter().any(|v| !v.is_finite()) {
                return Err(NetError::NonFinite { place: "forward" });
            }
            activations.push(z);
        }
        Ok(ForwardCache { activations })
    }

    /// Backpropagates `d(objective)/d(output)`, scaled by `scale`, adding
    /// the parameter gradient into `acc` (length `n_params`). Returns the
    /// gradient with respect to the input.
    pub fn backward_acc(
        &self,
        cache: &ForwardCache,
        dout: &[f64],
        scale: f64,
        acc: &mut [f64],
    ) -> Result<Vec<f64>, NetError> {
        let n_layers = self.dims.len() - 1;
        assert_eq!(dout.len(), self.dims[n_layers]);
        assert_eq!(acc.len(), self.params.len());
        let mut delta: Vec<f64> = dout.iter().map(|d| d * scale).collect();
        for l in (0..n_layers).rev() {
            let (fan_in, fan_out) = (self.dims[l], self.dims[l + 1]);
            let (w_off, b_off) = self.offsets[l];
            // Hidden activations are tanh; chain its derivative except at
            // the (linear) output layer.
            if l + 1 < n_layers {
                let act = &cache.activations[l + 1];
                for (d, a) in delta.iter_mut().zip(act.iter()) {
                    *d *= 1.0 - a * a;
                }
            }
            let prev = &cache.activations[l];
            for o in 0..fan_out {
                let d = delta[o];
                if d != 0.0 {
                    let row = &mut acc[w_off + o * fan_in..w_off + (o + 1) * fan_in];
                    for (g, xi) in row.iter_mut().zip(prev.iter()) {
                        *g += d * xi;
                    }
                }
                acc[b_off + o] += d;
            }
            if l > 0 {
                let mut dprev = vec![0.0; fan_in];
                for o in 0..fan_out {
                    let d = delta[o];
                    if d != 0.0 {
                        let row = &self.params[w_off + o * fan_in..w_off + (o + 1) * fan_in];
                        for (dp, wi) in dprev.iter_mut().zip(row.iter()) {
                            *dp += d * wi;
                        }
                    }
                }
                delta = dprev;
            } else {
                let mut dinput = vec![0.0; fan_in];
                for o in 0..fan_out {
                    let d = delta[o];
                    if d != 0.0 {
                        let row = &self.params[w_off + o * fan_in..w_off + (o + 1) * fan_in];
                        for (dp, wi) in dinput.iter_mut().zip(row.iter()) {
                            *dp += d * wi;
                        }
                    }
                }
                if dinput.iter().any(|v| !v.is_finite()) {
                    return Err(NetError::NonFinite { place: "backward" });
                }
                return Ok(dinput);
            }
        }
        unreachable!("loop always returns at l == 0");
    }
}

trait PopUnwrapped {
    fn pop_unwrapped(self) -> Vec<f64>;
}

impl PopUnwrapped for Vec<Vec<f64>> {
    fn pop_unwrapped(mut self) -> Vec<f64> {
        self.pop().expect("nonempty activations")
    }
}

/// Adam optimizer over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(lr: f64, n_params: usize) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    /// One descent step along `grads` (pass the gradient of the loss).
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grads[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grads[i] * grads[i];
            let mhat = self.m[i] / b1t;
            let vhat = self.v[i] / b2t;
            params[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
        }
    }
}

/// Central-difference gradient of `objective` with respect to the net's
/// parameters. Independent reference for verifying analytic backprop; not
/// used on any training path.
pub fn finite_difference_gradient<F>(net: &Mlp, objective: F, h: f64) -> Vec<f64>
where
    F: Fn(&Mlp) -> f64,
{
    let mut probe = net.clone();
    let mut grad = vec![0.0; net.n_params()];
    for i in 0..net.n_params() {
        let orig = probe.params()[i];
        probe.params_mut()[i] = orig + h;
        let up = objective(&probe);
        probe.params_mut()[i] = orig - h;
        let down = objective(&probe);
        probe.params_mut()[i] = orig;
        grad[i] = (up - down) / (2.0 * h);
    }
    grad
}

/// Max relative error between two gradient vectors, with an absolute
/// floor so near-zero entries do not blow up the ratio.
pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs() / (x.abs() + y.abs()).max(1e-6))
        .fold(0.0, f64::max)
}
