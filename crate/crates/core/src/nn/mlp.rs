use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Hidden layer widths.
pub const HIDDEN: [usize; 3] = [5, 5, 5];

/// Fully connected ReLU network with a single linear output.
///
/// Parameters live in one flat vector, layer by layer: the weight matrix
/// (row-major, one row per output unit) followed by the biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Row-major matrix of training inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn from_columns(columns: &[Vec<f64>]) -> Matrix {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            data.extend(columns.iter().map(|c| c[r]));
        }
        Matrix { rows, cols, data }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// Initializes a `[d_in, 5, 5, 5, 1]` network: weights uniform in
/// ±√(6/fan_in), biases zero.
pub fn init_mlp(d_in: usize, seed: u64) -> Mlp {
    assert!(d_in >= 1, "network needs at least one input");
    let mut sizes = vec![d_in];
    sizes.extend(HIDDEN);
    sizes.push(1);
    Mlp::with_sizes(sizes, seed)
}

impl Mlp {
    pub fn with_sizes(sizes: Vec<usize>, seed: u64) -> Mlp {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::new();
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / fan_in as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| rng.random_range(-bound..=bound)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Mlp { sizes, params }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn n_inputs(&self) -> usize {
        self.sizes[0]
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// `(fan_in, fan_out)` of weight layer `layer`.
    pub fn weight_shape(&self, layer: usize) -> (usize, usize) {
        (self.sizes[layer], self.sizes[layer + 1])
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut a = x.to_vec();
        let mut off = 0;
        let last = self.sizes.len() - 2;
        for (l, w) in self.sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let (wm, b) = self.params[off..off + n_in * n_out + n_out].split_at(n_in * n_out);
            let z: Vec<f64> = (0..n_out)
                .map(|o| b[o] + wm[o * n_in..(o + 1) * n_in].iter().zip(&a).map(|(w, x)| w * x).sum::<f64>())
                .collect();
            a = if l == last { z } else { z.into_iter().map(|v| v.max(0.0)).collect() };
            off += n_in * n_out + n_out;
        }
        a[0]
    }

    /// Mean squared error over `rows` of `x` and its gradient, written into
    /// `grad` (same layout as the parameters).
    pub fn loss_and_grad(&self, x: &Matrix, y: &[f64], rows: &[usize], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let n_layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(n_layers);
        let mut off = 0;
        for w in self.sizes.windows(2) {
            offsets.push(off);
            off += w[0] * w[1] + w[1];
        }
        let scale = 1.0 / rows.len() as f64;
        let mut loss = 0.0;
        // Unit values of every layer side by side: `z` holds pre-activations,
        // `a` the layer inputs (post-ReLU), `a[..sizes[0]]` the network input.
        let mut unit_off = Vec::with_capacity(self.sizes.len());
        let mut total = 0;
        for &n in &self.sizes {
            unit_off.push(total);
            total += n;
        }
        let widest = self.sizes.iter().copied().max().unwrap_or(1);
        let mut z = vec![0.0; total];
        let mut a = vec![0.0; total];
        let mut delta = vec![0.0; widest];
        let mut next = vec![0.0; widest];
        for &r in rows {
            a[..self.sizes[0]].copy_from_slice(x.row(r));
            for l in 0..n_layers {
                let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
                let wm = &self.params[offsets[l]..offsets[l] + n_in * n_out];
                let b = &self.params[offsets[l] + n_in * n_out..offsets[l] + n_in * n_out + n_out];
                let (inp, out) = a.split_at_mut(unit_off[l + 1]);
                let inp = &inp[unit_off[l]..];
                for o in 0..n_out {
                    let v = b[o] + wm[o * n_in..(o + 1) * n_in].iter().zip(inp).map(|(w, v)| w * v).sum::<f64>();
                    z[unit_off[l + 1] + o] = v;
                    out[o] = if l + 1 == n_layers { v } else { v.max(0.0) };
                }
            }
            let err = a[unit_off[n_layers]] - y[r];
            loss += err * err * scale;
            delta[0] = 2.0 * err * scale;
            for l in (0..n_layers).rev() {
                let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
                let inp = &a[unit_off[l]..unit_off[l] + n_in];
                let (gw, rest) = grad[offsets[l]..].split_at_mut(n_in * n_out);
                for o in 0..n_out {
                    let d = delta[o];
                    gw[o * n_in..(o + 1) * n_in].iter_mut().zip(inp).for_each(|(g, v)| *g += d * v);
                    rest[o] += d;
                }
                if l > 0 {
                    let wm = &self.params[offsets[l]..offsets[l] + n_in * n_out];
                    for i in 0..n_in {
                        next[i] = if z[unit_off[l] + i] > 0.0 {
                            (0..n_out).map(|o| wm[o * n_in + i] * delta[o]).sum()
                        } else {
                            0.0
                        };
                    }
                    std::mem::swap(&mut delta, &mut next);
                }
            }
        }
        loss
    }

    /// Pre-activations of every hidden unit for input `x`.
    #[cfg(test)]
    pub(crate) fn hidden_preactivations(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::new();
        let mut a = x.to_vec();
        let mut off = 0;
        for w in self.sizes.windows(2).take(self.sizes.len() - 2) {
            let (n_in, n_out) = (w[0], w[1]);
            let (wm, b) = self.params[off..off + n_in * n_out + n_out].split_at(n_in * n_out);
            let z: Vec<f64> = (0..n_out)
                .map(|o| b[o] + wm[o * n_in..(o + 1) * n_in].iter().zip(&a).map(|(w, x)| w * x).sum::<f64>())
                .collect();
            out.extend(&z);
            a = z.into_iter().map(|v| v.max(0.0)).collect();
            off += n_in * n_out + n_out;
        }
        out
    }
}
