use ndarray::{Array2, ArrayView2, Axis, Zip};
use serde::{Deserialize, Serialize};

use super::{init_mlp, Dense, EpochLoss, MlpLayout, MlpModel, Normalizer};
use crate::dataset::{flatten, ProfileSet, Which};
use crate::error::{Error, Result};
use crate::rng::{mix64, substream, CounterRng};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub huber_delta: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1000,
            patience: 25,
            batch_size: 256,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            huber_delta: 1.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn check(&self) -> Result<()> {
        if self.epochs == 0 || self.patience == 0 || self.batch_size == 0 {
            return Err(Error::invalid("epochs, patience and batch size must be positive"));
        }
        if self.patience > self.epochs {
            return Err(Error::invalid(format!(
                "patience {} exceeds the epoch limit {}",
                self.patience, self.epochs
            )));
        }
        let positive = [self.learning_rate, self.epsilon, self.huber_delta];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid("learning rate, epsilon and Huber delta must be positive"));
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return Err(Error::invalid("Adam betas must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Mean elementwise Huber loss.
pub fn huber_loss<T: Real>(pred: ArrayView2<T>, target: ArrayView2<T>, delta: T) -> Result<T> {
    if pred.dim() != target.dim() {
        return Err(Error::shape(
            format!("{}x{}", pred.nrows(), pred.ncols()),
            format!("{}x{}", target.nrows(), target.ncols()),
        ));
    }
    if pred.is_empty() {
        return Err(Error::invalid("Huber loss of an empty matrix"));
    }
    Ok(huber_unchecked(pred, target, delta))
}

fn huber_unchecked<T: Real>(pred: ArrayView2<T>, target: ArrayView2<T>, delta: T) -> T {
    let half = T::of(0.5);
    let mut sum = T::zero();
    Zip::from(pred).and(target).for_each(|&p, &t| {
        let a = (p - t).abs();
        sum = sum + if a <= delta { half * a * a } else { delta * (a - half * delta) };
    });
    sum / T::of(pred.len() as f64)
}

/// Loss plus its gradient with respect to `pred`.
pub(crate) fn huber_with_gradient<T: Real>(pred: ArrayView2<T>, target: ArrayView2<T>, delta: T) -> (T, Array2<T>) {
    let loss = huber_unchecked(pred, target, delta);
    let scale = T::one() / T::of(pred.len() as f64);
    let grad = Zip::from(pred)
        .and(target)
        .map_collect(|&p, &t| (p - t).max(-delta).min(delta) * scale);
    (loss, grad)
}

/// First and second moment estimates for every parameter.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    m: Vec<Dense<T>>,
    v: Vec<Dense<T>>,
    t: i32,
    lr: T,
    beta1: T,
    beta2: T,
    eps: T,
}

impl<T: Real> Adam<T> {
    pub fn new(model: &MlpModel<T>, cfg: &TrainConfig) -> Self {
        Self {
            m: model.zero_like(),
            v: model.zero_like(),
            t: 0,
            lr: T::of(cfg.learning_rate),
            beta1: T::of(cfg.beta1),
            beta2: T::of(cfg.beta2),
            eps: T::of(cfg.epsilon),
        }
    }

    pub fn step(&mut self, params: &mut [Dense<T>], grads: &[Dense<T>]) {
        self.t += 1;
        let one = T::one();
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = one - b1.powi(self.t);
        let c2 = one - b2.powi(self.t);
        let (lr, eps) = (self.lr, self.eps);
        let update = |p: &mut T, &g: &T, m: &mut T, v: &mut T| {
            *m = b1 * *m + (one - b1) * g;
            *v = b2 * *v + (one - b2) * g * g;
            let mh = *m / c1;
            let vh = *v / c2;
            *p = *p - lr * mh / (vh.sqrt() + eps);
        };
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            Zip::from(&mut p.w).and(&g.w).and(&mut m.w).and(&mut v.w).for_each(update);
            Zip::from(&mut p.b).and(&g.b).and(&mut m.b).and(&mut v.b).for_each(update);
        }
    }
}

/// Mini-batch Adam with early stopping on the validation loss. The
/// normalizer is refitted to `train_x`; the returned model carries the
/// weights of the best validation epoch.
pub fn train<T: Real>(
    mut model: MlpModel<T>,
    train_x: ArrayView2<T>,
    train_y: ArrayView2<T>,
    val_x: ArrayView2<T>,
    val_y: ArrayView2<T>,
    cfg: &TrainConfig,
) -> Result<MlpModel<T>> {
    cfg.check()?;
    let layout = &model.layout;
    for (name, x, y) in [("training", &train_x, &train_y), ("validation", &val_x, &val_y)] {
        if x.nrows() == 0 {
            return Err(Error::invalid(format!("{name} set is empty")));
        }
        if x.ncols() != layout.input || y.ncols() != layout.output || x.nrows() != y.nrows() {
            return Err(Error::shape(
                format!("{name} data {}->{}", layout.input, layout.output),
                format!("{}x{} inputs, {}x{} targets", x.nrows(), x.ncols(), y.nrows(), y.ncols()),
            ));
        }
    }

    model.normalizer = Normalizer::fit(&train_x.to_owned())?;
    let xs = model.normalizer.apply(train_x);
    let vs = model.normalizer.apply(val_x);
    let delta = T::of(cfg.huber_delta);
    let n = xs.nrows();
    let n_batches = n.div_ceil(cfg.batch_size);

    let mut adam = Adam::new(&model, cfg);
    let mut grads = model.zero_like();
    let mut history = Vec::new();
    let mut best: Option<(usize, T, Vec<Dense<T>>)> = None;
    let mut stale = 0;

    for epoch in 0..cfg.epochs {
        let order = CounterRng::new(substream(cfg.seed, epoch as u64)).permutation(n);
        let mut total = T::zero();
        for (batch, idx) in order.chunks(cfg.batch_size).enumerate() {
            let bx = xs.select(Axis(0), idx);
            let by = train_y.select(Axis(0), idx);
            let acts = model.activations(bx.view());
            let pred = acts.last().expect("at least one layer");
            let (loss, g) = huber_with_gradient(pred.view(), by.view(), delta);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch });
            }
            total = total + loss * T::of(idx.len() as f64);
            model.backward(bx.view(), &acts, g, &mut grads);
            adam.step(&mut model.layers, &grads);
        }
        let train_loss = total / T::of(n as f64);
        let pred = model.activations(vs.view()).pop().expect("at least one layer");
        let val_loss = huber_unchecked(pred.view(), val_y, delta);
        if !val_loss.is_finite() {
            // Batch index one past the last marks the validation pass.
            return Err(Error::NonFiniteLoss { epoch, batch: n_batches });
        }
        history.push(EpochLoss {
            train: train_loss,
            val: val_loss,
        });
        log::debug!("epoch {epoch}: train {train_loss}, val {val_loss}");

        if best.as_ref().is_none_or(|b| val_loss < b.1) {
            best = Some((epoch, val_loss, model.layers.clone()));
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }

    let (epoch, _, layers) = best.expect("at least one epoch ran");
    model.layers = layers;
    model.history = history;
    model.best_epoch = Some(epoch);
    Ok(model)
}

/// Builds a network for the grid of `train`, initialised from the config
/// seed, and trains it on the fluxes carried by both sets.
pub fn train_on_profiles<T: Real>(
    train_set: &ProfileSet,
    val_set: &ProfileSet,
    hidden: &[usize],
    cfg: &TrainConfig,
) -> Result<MlpModel<T>> {
    if train_set.grid() != val_set.grid() {
        return Err(Error::shape(
            format!("{} levels", train_set.grid().n_full()),
            format!("{} levels", val_set.grid().n_full()),
        ));
    }
    let grid = train_set.grid();
    let layout = MlpLayout::new(grid.input_width(), hidden, grid.n_half())?;
    let model = init_mlp(&layout, mix64(cfg.seed))?;
    let matrix = |s: &ProfileSet, w: Which| flatten(s, w).map(|m| m.values.mapv(T::of));
    let (tx, ty) = (matrix(train_set, Which::Inputs)?, matrix(train_set, Which::Outputs)?);
    let (vx, vy) = (matrix(val_set, Which::Inputs)?, matrix(val_set, Which::Outputs)?);
    train(model, tx.view(), ty.view(), vx.view(), vy.view(), cfg)
}
