use super::CorrError;

/// Scores candidate columns against a target.
///
/// The target is the output with a set of basis columns projected out,
/// stored unit-norm. A candidate is scored by the correlation of its own
/// residual (after the same projection) with the target. With only the
/// constant column in the basis this is plain Pearson correlation; with
/// previously found components added it measures what a candidate adds
/// beyond them.
#[derive(Debug, Clone)]
pub struct Scorer {
    n: usize,
    basis: Vec<Vec<f64>>,
    target: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Removes the span of `basis` from `v` (two Gram-Schmidt passes).
fn project_out(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let p = dot(v, q);
            v.iter_mut().zip(q).for_each(|(x, qi)| *x -= p * qi);
        }
    }
}

impl Scorer {
    /// Pearson scoring against `y`.
    pub fn new(y: &[f64]) -> Result<Scorer, CorrError> {
        Scorer::with_components(y, &[])
    }

    /// Scoring against `y` with `components` (and the constant) projected out.
    /// Components that are linearly dependent on earlier ones are ignored.
    pub fn with_components(y: &[f64], components: &[&[f64]]) -> Result<Scorer, CorrError> {
        let n = y.len();
        if n < 2 {
            return Err(CorrError::TooFewRows(n));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(CorrError::NonFinite);
        }
        let mut basis = vec![vec![1.0 / (n as f64).sqrt(); n]];
        for c in components {
            if c.len() != n {
                return Err(CorrError::LengthMismatch { left: n, right: c.len() });
            }
            let scale = norm(c);
            let mut v = c.to_vec();
            project_out(&mut v, &basis);
            let r = norm(&v);
            if r.is_finite() && r > 1e-10 * scale {
                v.iter_mut().for_each(|x| *x /= r);
                basis.push(v);
            }
        }
        let mut t = y.to_vec();
        let centered = {
            let m = t.iter().sum::<f64>() / n as f64;
            t.iter().map(|x| (x - m) * (x - m)).sum::<f64>().sqrt()
        };
        project_out(&mut t, &basis);
        let tn = norm(&t);
        if !(tn > 1e-12 * centered) || centered == 0.0 {
            return Err(CorrError::NothingLeft);
        }
        t.iter_mut().for_each(|x| *x /= tn);
        Ok(Scorer { n, basis, target: t })
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    /// Unit-norm target, orthogonal to the basis.
    pub fn target(&self) -> &[f64] {
        &self.target
    }

    /// Orthonormal basis columns, the constant first.
    pub(crate) fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// Score from the sums `z·t`, `z·z` and `z·q` over the basis columns
    /// `q`, as accumulated by a caller that batches many candidates.
    pub(crate) fn from_sums(s_zt: f64, s_zz: f64, s_q: impl Iterator<Item = f64>) -> Option<f64> {
        finish(s_zt, s_zz, s_q.map(|s| s * s).sum())
    }

    /// Number of basis columns, the constant included.
    pub fn basis_len(&self) -> usize {
        self.basis.len()
    }

    /// Single-pass score from raw sums; `None` for undefined or (numerically)
    /// constant candidates. Accurate to roughly 1e-10 for well-scaled data;
    /// use [`Scorer::exact`] for reported values.
    pub fn fast(&self, z: &[f64]) -> Option<f64> {
        self.fast_with(|i| z[i])
    }

    /// [`Scorer::fast`] on the elementwise product `a·b` without forming it.
    pub fn fast_product(&self, a: &[f64], b: &[f64]) -> Option<f64> {
        if self.basis.len() == 1 {
            return self.fast_product_pearson(a, b);
        }
        self.fast_with(|i| a[i] * b[i])
    }

    fn fast_with(&self, z: impl Fn(usize) -> f64) -> Option<f64> {
        let mut s_zt = 0.0;
        let mut s_zz = 0.0;
        let mut s_q = vec![0.0; self.basis.len()];
        for i in 0..self.n {
            let v = z(i);
            s_zt += v * self.target[i];
            s_zz += v * v;
            for (s, q) in s_q.iter_mut().zip(&self.basis) {
                *s += v * q[i];
            }
        }
        finish(s_zt, s_zz, s_q.iter().map(|s| s * s).sum())
    }

    fn fast_product_pearson(&self, a: &[f64], b: &[f64]) -> Option<f64> {
        // Four independent lanes so the loop vectorizes.
        let mut zt = [0.0; 4];
        let mut zz = [0.0; 4];
        let mut zs = [0.0; 4];
        let n4 = self.n / 4 * 4;
        let t = &self.target;
        for base in (0..n4).step_by(4) {
            for l in 0..4 {
                let i = base + l;
                let v = a[i] * b[i];
                zt[l] += v * t[i];
                zz[l] += v * v;
                zs[l] += v;
            }
        }
        let mut s_zt = zt.iter().sum::<f64>();
        let mut s_zz = zz.iter().sum::<f64>();
        let mut s_z = zs.iter().sum::<f64>();
        for i in n4..self.n {
            let v = a[i] * b[i];
            s_zt += v * t[i];
            s_zz += v * v;
            s_z += v;
        }
        finish(s_zt, s_zz, s_z * s_z / self.n as f64)
    }

    /// Residual of `z` after projecting out the basis, or `None` when `z` is
    /// undefined or lies (numerically) in the span of the basis.
    pub fn residual(&self, z: &[f64]) -> Option<Vec<f64>> {
        if z.len() != self.n || z.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let scale = norm(z);
        let mut v = z.to_vec();
        project_out(&mut v, &self.basis);
        let r = norm(&v);
        (r.is_finite() && r > 1e-12 * scale && r > 0.0).then_some(v)
    }

    /// Two-pass score, clamped to [-1, 1].
    pub fn exact(&self, z: &[f64]) -> Option<f64> {
        let v = self.residual(z)?;
        Some((dot(&v, &self.target) / norm(&v)).clamp(-1.0, 1.0))
    }
}

fn finish(s_zt: f64, s_zz: f64, s_proj: f64) -> Option<f64> {
    let var = s_zz - s_proj;
    if !(var.is_finite() && s_zt.is_finite()) || var <= 1e-12 * s_zz {
        return None;
    }
    Some((s_zt / var.sqrt()).clamp(-1.0, 1.0))
}
