use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayView1, ArrayView2, ArrayViewMut2, Axis};
use rand::Rng;

use crate::losses::CllLoss;
use crate::rng::{domain, stream};
use crate::{Error, Result};

/// Layer widths `d → h₁ → … → K` with ReLU on hidden layers. Parameters live in
/// one flat vector: per layer, the in×out weight matrix (row-major) then the
/// bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    dims: Vec<usize>,
    params: Vec<f64>,
}

/// Hidden activations (post-ReLU) and logits of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub hidden: Vec<Array2<f64>>,
    pub logits: Array2<f64>,
}

impl ForwardPass {
    pub fn probabilities(&self) -> Array2<f64> {
        let mut p = self.logits.clone();
        for mut row in p.rows_mut() {
            let s = crate::losses::softmax(row.as_slice().expect("standard layout"));
            row.assign(&ArrayView1::from(&s));
        }
        p
    }
}

fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    pub fn new(dims: Vec<usize>, params: Vec<f64>) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::InvalidParameter(format!("invalid layer widths {dims:?}")));
        }
        let expected = param_count(&dims);
        if params.len() != expected {
            return Err(Error::SizeMismatch {
                what: "model parameters",
                expected,
                found: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Numeric("non-finite model parameter".into()));
        }
        Ok(Self { dims, params })
    }

    /// He-uniform weights in ±√(6/fan_in), zero biases.
    pub fn init(dims: &[usize], seed: u64) -> Result<Self> {
        let mut model = Self::new(dims.to_vec(), vec![0.0; param_count_checked(dims)?])?;
        for l in 0..model.num_layers() {
            let (fan_in, out) = (dims[l], dims[l + 1]);
            let bound = (6.0 / fan_in as f64).sqrt();
            let mut rng = stream(seed, &[domain::INIT, l as u64]);
            let off = model.offset(l);
            for w in &mut model.params[off..off + fan_in * out] {
                *w = rng.random_range(-bound..bound);
            }
        }
        Ok(model)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn num_layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn num_classes(&self) -> usize {
        self.dims[self.dims.len() - 1]
    }

    fn offset(&self, layer: usize) -> usize {
        param_count(&self.dims[..=layer])
    }

    pub fn weight(&self, layer: usize) -> ArrayView2<'_, f64> {
        let (i, o) = (self.dims[layer], self.dims[layer + 1]);
        let off = self.offset(layer);
        ArrayView2::from_shape((i, o), &self.params[off..off + i * o]).expect("layout")
    }

    pub fn bias(&self, layer: usize) -> ArrayView1<'_, f64> {
        let (i, o) = (self.dims[layer], self.dims[layer + 1]);
        let off = self.offset(layer) + i * o;
        ArrayView1::from(&self.params[off..off + o])
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Result<ForwardPass> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input has {} columns, model expects {}",
                x.ncols(),
                self.input_dim()
            )));
        }
        let mut hidden = Vec::with_capacity(self.num_layers() - 1);
        let mut current: Option<Array2<f64>> = None;
        for l in 0..self.num_layers() {
            let input = current.as_ref().map_or(x.view(), |a| a.view());
            let mut z = input.dot(&self.weight(l)) + self.bias(l);
            if l + 1 < self.num_layers() {
                z.mapv_inplace(|v| v.max(0.0));
                hidden.push(z.clone());
            }
            current = Some(z);
        }
        Ok(ForwardPass {
            hidden,
            logits: current.expect("at least one layer"),
        })
    }

    pub fn logits(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        Ok(self.forward(x)?.logits)
    }

    /// Propagates ∂L/∂logits back to the hidden layers; entry `l` is ∂L/∂z
    /// of layer `l`.
    fn deltas(&self, pass: &ForwardPass, dlogits: ArrayView2<'_, f64>) -> Vec<Array2<f64>> {
        let layers = self.num_layers();
        let mut out = vec![Array2::zeros((0, 0)); layers];
        out[layers - 1] = dlogits.to_owned();
        for l in (1..layers).rev() {
            let mut d = out[l].dot(&self.weight(l).t());
            d.zip_mut_with(&pass.hidden[l - 1], |g, &a| {
                if a <= 0.0 {
                    *g = 0.0;
                }
            });
            out[l - 1] = d;
        }
        out
    }

    /// Flat parameter gradient given ∂L/∂logits, summed over rows.
    pub fn backward(&self, x: ArrayView2<'_, f64>, pass: &ForwardPass, dlogits: ArrayView2<'_, f64>) -> Vec<f64> {
        let deltas = self.deltas(pass, dlogits);
        let mut grad = vec![0.0; self.num_params()];
        for (l, delta) in deltas.iter().enumerate() {
            let (i, o) = (self.dims[l], self.dims[l + 1]);
            let off = self.offset(l);
            let input = if l == 0 { x } else { pass.hidden[l - 1].view() };
            let (w, b) = grad[off..off + i * o + o].split_at_mut(i * o);
            let mut gw = ArrayViewMut2::from_shape((i, o), w).expect("layout");
            general_mat_mul(1.0, &input.t(), delta, 0.0, &mut gw);
            for (dst, s) in b.iter_mut().zip(delta.sum_axis(Axis(0))) {
                *dst = s;
            }
        }
        grad
    }

    /// ‖∂ℓᵢ/∂θ‖² for every row i, where row i of `dlogits` is ∂ℓᵢ/∂logitsᵢ.
    /// Uses ‖a ⊗ δ‖² = ‖a‖²‖δ‖² per layer instead of materializing gradients.
    pub fn per_sample_sq_norms(&self, x: ArrayView2<'_, f64>, pass: &ForwardPass, dlogits: ArrayView2<'_, f64>) -> Vec<f64> {
        let deltas = self.deltas(pass, dlogits);
        self.pair_dots(x, pass, &deltas, x, pass, &deltas)
    }

    /// ⟨∂ℓᵢ/∂θ, ∂ℓ'ᵢ/∂θ⟩ for two row-aligned batches, possibly at different
    /// inputs, via ⟨a ⊗ δ, a' ⊗ δ'⟩ = (a·a')(δ·δ').
    pub fn per_sample_dots(
        &self,
        xa: ArrayView2<'_, f64>,
        pass_a: &ForwardPass,
        da: ArrayView2<'_, f64>,
        xb: ArrayView2<'_, f64>,
        pass_b: &ForwardPass,
        db: ArrayView2<'_, f64>,
    ) -> Vec<f64> {
        let delta_a = self.deltas(pass_a, da);
        let delta_b = self.deltas(pass_b, db);
        self.pair_dots(xa, pass_a, &delta_a, xb, pass_b, &delta_b)
    }

    fn pair_dots(
        &self,
        xa: ArrayView2<'_, f64>,
        pass_a: &ForwardPass,
        delta_a: &[Array2<f64>],
        xb: ArrayView2<'_, f64>,
        pass_b: &ForwardPass,
        delta_b: &[Array2<f64>],
    ) -> Vec<f64> {
        assert_eq!(xa.nrows(), xb.nrows(), "row-aligned batches");
        let mut dots = vec![0.0; xa.nrows()];
        for l in 0..self.num_layers() {
            let ia = if l == 0 { xa } else { pass_a.hidden[l - 1].view() };
            let ib = if l == 0 { xb } else { pass_b.hidden[l - 1].view() };
            for (i, d) in dots.iter_mut().enumerate() {
                let a = ia.row(i).dot(&ib.row(i));
                *d += (a + 1.0) * delta_a[l].row(i).dot(&delta_b[l].row(i));
            }
        }
        dots
    }

    /// Mean soft loss over the rows and its flat parameter gradient.
    pub fn loss_and_grad(&self, x: ArrayView2<'_, f64>, soft: ArrayView2<'_, f64>, loss: &CllLoss) -> Result<(f64, Vec<f64>)> {
        let pass = self.forward(x)?;
        let (value, dlogits) = loss.batch(pass.logits.view(), soft)?;
        Ok((value, self.backward(x, &pass, dlogits.view())))
    }
}

fn param_count_checked(dims: &[usize]) -> Result<usize> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::InvalidParameter(format!("invalid layer widths {dims:?}")));
    }
    Ok(param_count(dims))
}

/// Row-wise argmax; ties go to the lowest class index.
pub fn predict(logits: ArrayView2<'_, f64>) -> Vec<usize> {
    logits
        .rows()
        .into_iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (k, &v)| if v > best.1 { (k, v) } else { best })
                .0
        })
        .collect()
}

/// Top-1 accuracy.
pub fn evaluate(model: &Mlp, x: ArrayView2<'_, f64>, y: &[usize]) -> Result<f64> {
    if x.nrows() != y.len() {
        return Err(Error::Shape(format!("{} rows vs {} labels", x.nrows(), y.len())));
    }
    if y.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for start in (0..y.len()).step_by(4096) {
        let end = (start + 4096).min(y.len());
        let logits = model.logits(x.slice(ndarray::s![start..end, ..]))?;
        correct += predict(logits.view()).iter().zip(&y[start..end]).filter(|(p, t)| p == t).count();
    }
    Ok(correct as f64 / y.len() as f64)
}
