//! Feed-forward network emulating the radiation model: z-scored inputs, ELU
//! hidden layers, a linear output, trained with Adam on the Huber loss.

mod train;

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use serde::{Deserialize, Serialize};

pub use train::{huber_loss, train, train_on_profiles, Adam, TrainConfig};

use crate::dataset::{flatten, output_labels, DataMatrix, ProfileSet, Which};
use crate::error::{Error, Result};
use crate::rng::CounterRng;
use crate::scalar::Real;

/// Version written into model artifacts.
pub const MODEL_VERSION: u32 = 1;
pub const DEFAULT_HIDDEN: [usize; 3] = [512, 512, 512];
/// Standard deviation used for features that are constant in the training data.
pub const STD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpLayout {
    pub input: usize,
    pub hidden: Vec<usize>,
    pub output: usize,
}

impl MlpLayout {
    pub fn new(input: usize, hidden: &[usize], output: usize) -> Result<Self> {
        let l = Self {
            input,
            hidden: hidden.to_vec(),
            output,
        };
        l.check()?;
        Ok(l)
    }

    pub fn with_default_hidden(input: usize, output: usize) -> Result<Self> {
        Self::new(input, &DEFAULT_HIDDEN, output)
    }

    pub fn check(&self) -> Result<()> {
        if self.input == 0 || self.output == 0 || self.hidden.contains(&0) {
            return Err(Error::invalid(format!("layer widths must be at least 1, got {}", self)));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` of each dense layer.
    pub fn shapes(&self) -> Vec<(usize, usize)> {
        let mut widths = vec![self.input];
        widths.extend(&self.hidden);
        widths.push(self.output);
        widths.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn n_params(&self) -> usize {
        self.shapes().iter().map(|(i, o)| (i + 1) * o).sum()
    }
}

impl std::fmt::Display for MlpLayout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.input)?;
        for h in &self.hidden {
            write!(f, "-{h}")?;
        }
        write!(f, "-{}", self.output)
    }
}

/// Per-feature z-score transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer<T> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
}

impl<T: Real> Normalizer<T> {
    pub fn identity(width: usize) -> Self {
        Self {
            mean: vec![T::zero(); width],
            std: vec![T::one(); width],
        }
    }

    /// Column means and population standard deviations, floored at [`STD_FLOOR`].
    pub fn fit(x: &Array2<T>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::invalid("cannot normalize an empty matrix"));
        }
        let n = T::of(x.nrows() as f64);
        let floor = T::of(STD_FLOOR);
        let mut mean = Vec::with_capacity(x.ncols());
        let mut std = Vec::with_capacity(x.ncols());
        for c in x.axis_iter(Axis(1)) {
            let m = c.iter().fold(T::zero(), |a, &v| a + v) / n;
            let var = c.iter().fold(T::zero(), |a, &v| a + (v - m) * (v - m)) / n;
            mean.push(m);
            std.push(var.sqrt().max(floor));
        }
        Ok(Self { mean, std })
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: ArrayView2<T>) -> Array2<T> {
        let mut out = x.to_owned();
        for (mut c, (&m, &s)) in out.axis_iter_mut(Axis(1)).zip(self.mean.iter().zip(&self.std)) {
            c.mapv_inplace(|v| (v - m) / s);
        }
        out
    }
}

/// Dense layer `y = x W + b` with `W` stored fan_in by fan_out.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub w: Array2<T>,
    pub b: Array1<T>,
}

impl<T: Real> Dense<T> {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            w: Array2::zeros((fan_in, fan_out)),
            b: Array1::zeros(fan_out),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss<T> {
    pub train: T,
    pub val: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel<T> {
    pub layout: MlpLayout,
    pub layers: Vec<Dense<T>>,
    pub normalizer: Normalizer<T>,
    pub history: Vec<EpochLoss<T>>,
    /// Index into `history` of the epoch whose weights the model carries.
    pub best_epoch: Option<usize>,
}

#[inline]
pub fn elu<T: Real>(v: T) -> T {
    if v >= T::zero() {
        v
    } else {
        v.exp_m1()
    }
}

/// Weights uniform in `+-1/sqrt(fan_in)`, drawn layer by layer in row-major
/// order; biases zero; identity normalizer.
pub fn init_mlp<T: Real>(layout: &MlpLayout, seed: u64) -> Result<MlpModel<T>> {
    layout.check()?;
    let mut rng = CounterRng::new(seed);
    let layers = layout
        .shapes()
        .into_iter()
        .map(|(fan_in, fan_out)| {
            let scale = 1.0 / (fan_in as f64).sqrt();
            let w = Array2::from_shape_simple_fn((fan_in, fan_out), || T::of(scale * (2.0 * rng.uniform() - 1.0)));
            Dense {
                w,
                b: Array1::zeros(fan_out),
            }
        })
        .collect();
    Ok(MlpModel {
        layout: layout.clone(),
        layers,
        normalizer: Normalizer::identity(layout.input),
        history: Vec::new(),
        best_epoch: None,
    })
}

impl<T: Real> MlpModel<T> {
    /// Outputs of every layer for already-normalized inputs.
    pub(crate) fn activations(&self, x: ArrayView2<T>) -> Vec<Array2<T>> {
        let last = self.layers.len() - 1;
        let mut acts: Vec<Array2<T>> = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = match l {
                0 => x.dot(&layer.w),
                _ => acts[l - 1].dot(&layer.w),
            };
            z += &layer.b;
            if l < last {
                z.mapv_inplace(elu);
            }
            acts.push(z);
        }
        acts
    }

    /// Parameter gradients given the loss gradient at the output, written into `grads`.
    pub(crate) fn backward(&self, x: ArrayView2<T>, acts: &[Array2<T>], out_grad: Array2<T>, grads: &mut [Dense<T>]) {
        let mut delta = out_grad;
        for l in (0..self.layers.len()).rev() {
            let input = if l == 0 { x } else { acts[l - 1].view() };
            ndarray::linalg::general_mat_mul(T::one(), &input.t(), &delta, T::zero(), &mut grads[l].w);
            grads[l].b = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut d = delta.dot(&self.layers[l].w.t());
                // ELU'(z) = 1 for z >= 0 and e^z = a + 1 below.
                Zip::from(&mut d).and(&acts[l - 1]).for_each(|d, &a| {
                    if a < T::zero() {
                        *d = *d * (a + T::one());
                    }
                });
                delta = d;
            }
        }
    }

    fn check_input(&self, x: &ArrayView2<T>) -> Result<()> {
        if x.ncols() != self.layout.input {
            return Err(Error::shape(format!("{} input features", self.layout.input), x.ncols()));
        }
        Ok(())
    }

    /// Network outputs for raw (unnormalized) input rows.
    pub fn forward(&self, x: ArrayView2<T>) -> Result<Array2<T>> {
        self.check_input(&x)?;
        let xn = self.normalizer.apply(x);
        Ok(self.activations(xn.view()).pop().expect("at least one layer"))
    }

    /// Huber loss and its gradient for every parameter, on raw inputs.
    pub fn loss_and_gradients(&self, x: ArrayView2<T>, y: ArrayView2<T>, delta: T) -> Result<(T, Vec<Dense<T>>)> {
        self.check_input(&x)?;
        if y.dim() != (x.nrows(), self.layout.output) {
            return Err(Error::shape(format!("{}x{} targets", x.nrows(), self.layout.output), format!("{}x{}", y.nrows(), y.ncols())));
        }
        let xn = self.normalizer.apply(x);
        let acts = self.activations(xn.view());
        let pred = acts.last().expect("at least one layer");
        let (loss, grad) = train::huber_with_gradient(pred.view(), y, delta);
        let mut grads = self.zero_like();
        self.backward(xn.view(), &acts, grad, &mut grads);
        Ok((loss, grads))
    }

    pub(crate) fn zero_like(&self) -> Vec<Dense<T>> {
        self.layers.iter().map(|l| Dense::zeros(l.w.nrows(), l.w.ncols())).collect()
    }

    /// Predicted fluxes for every profile, one row per profile.
    pub fn predict_set(&self, set: &ProfileSet) -> Result<DataMatrix> {
        let grid = set.grid();
        if grid.input_width() != self.layout.input || grid.n_half() != self.layout.output {
            return Err(Error::shape(
                format!("grid with {} inputs and {} outputs", self.layout.input, self.layout.output),
                format!("{} full levels", grid.n_full()),
            ));
        }
        let x = flatten(set, Which::Inputs)?.values.mapv(T::of);
        let y = self.forward(x.view())?;
        DataMatrix::new(y.mapv(T::to64), output_labels(grid))
    }

    pub fn to_json(&self) -> Result<String> {
        let a = Artifact {
            version: MODEL_VERSION,
            layout: self.layout.clone(),
            normalizer: self.normalizer.clone(),
            weights: self.layers.iter().map(|l| l.w.iter().copied().collect()).collect(),
            biases: self.layers.iter().map(|l| l.b.to_vec()).collect(),
            history: self.history.clone(),
            best_epoch: self.best_epoch,
        };
        serde_json::to_string(&a).map_err(|e| Error::Artifact(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let a: Artifact<T> = serde_json::from_str(text).map_err(|e| Error::Artifact(e.to_string()))?;
        if a.version != MODEL_VERSION {
            return Err(Error::Artifact(format!(
                "emulator version {} is not supported (expected {MODEL_VERSION})",
                a.version
            )));
        }
        a.layout.check()?;
        let shapes = a.layout.shapes();
        if a.weights.len() != shapes.len() || a.biases.len() != shapes.len() {
            return Err(Error::Artifact(format!("layout {} needs {} layers", a.layout, shapes.len())));
        }
        if a.normalizer.mean.len() != a.layout.input || a.normalizer.std.len() != a.layout.input {
            return Err(Error::Artifact("normalizer width does not match the layout".into()));
        }
        let layers = shapes
            .iter()
            .zip(a.weights.into_iter().zip(a.biases))
            .map(|(&(i, o), (w, b))| {
                if b.len() != o {
                    return Err(Error::Artifact(format!("bias of length {} for width {o}", b.len())));
                }
                let w = Array2::from_shape_vec((i, o), w).map_err(|e| Error::Artifact(e.to_string()))?;
                Ok(Dense { w, b: Array1::from(b) })
            })
            .collect::<Result<Vec<_>>>()?;
        if a.best_epoch.is_some_and(|b| b >= a.history.len()) {
            return Err(Error::Artifact("best epoch lies outside the history".into()));
        }
        Ok(Self {
            layout: a.layout,
            layers,
            normalizer: a.normalizer,
            history: a.history,
            best_epoch: a.best_epoch,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct Artifact<T> {
    version: u32,
    layout: MlpLayout,
    normalizer: Normalizer<T>,
    /// Row-major, fan_in by fan_out.
    weights: Vec<Vec<T>>,
    biases: Vec<Vec<T>>,
    history: Vec<EpochLoss<T>>,
    best_epoch: Option<usize>,
}
