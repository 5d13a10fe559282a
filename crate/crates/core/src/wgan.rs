//! Conditional WGAN-gp: losses, training loop and generation.
//!
//! Both networks see min-max normalized labels `(Cd, W, U)` appended to
//! their input. The generator emits hull vectors normalized per coordinate
//! with the corpus extrema; [`generate`] maps them back to metres.

mod checkpoint;
mod config;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_VERSION, MAGIC};
pub use config::{LossMode, Precision, TrainConfig};

use crate::dataset::{Dataset, DatasetStats, LabelingSetup, LabeledSample};
use crate::error::{Error, Result};
use crate::geometry::{GridSpec, HullPointCloud};
use crate::hydro::HullLabel;
use crate::scalar::Real;
use crate::nn::{
    adam_step, backward_cached, forward, forward_cached, grad_penalty_value_and_grads, init_params_with,
    input_grad_cached, AdamState, MlpParams, Tensor,
};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::io::Write;
use std::path::PathBuf;

/// Number of conditioning inputs.
pub const LABEL_DIM: usize = 3;

/// Logits are clamped to this magnitude in the vanilla GAN losses.
pub const LOGIT_CLAMP: f64 = 30.0;

/// Min-max scaling of condition labels. A label that is constant over the
/// corpus (the speed within one class) gets a unit-wide range centred on its
/// value, so it always normalizes to 0.5.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelScaler {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl LabelScaler {
    pub fn from_stats(stats: &DatasetStats) -> Self {
        let mut min = stats.label_min;
        let mut max = stats.label_max;
        for k in 0..LABEL_DIM {
            if !(max[k] > min[k]) {
                min[k] -= 0.5;
                max[k] += 0.5;
            }
        }
        Self { min, max }
    }

    pub fn normalize(&self, l: &HullLabel<f64>) -> [f64; 3] {
        let raw = [l.cd, l.w, l.u];
        std::array::from_fn(|k| (raw[k] - self.min[k]) / (self.max[k] - self.min[k]))
    }

    pub fn denormalize(&self, n: &[f64; 3]) -> HullLabel<f64> {
        let v: [f64; 3] = std::array::from_fn(|k| self.min[k] + n[k] * (self.max[k] - self.min[k]));
        HullLabel { cd: v[0], w: v[1], u: v[2] }
    }
}

/// A generation request: raw label plus its normalized form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionLabel {
    pub raw: HullLabel<f64>,
    pub normalized: [f64; 3],
}

impl ConditionLabel {
    pub fn new(raw: HullLabel<f64>, scaler: &LabelScaler) -> Self {
        Self { raw, normalized: scaler.normalize(&raw) }
    }

    /// True when some component lies outside the training range.
    pub fn out_of_range(&self) -> bool {
        self.normalized.iter().any(|&v| !(0.0..=1.0).contains(&v))
    }
}

/// Per-coordinate min-max scaling of hull vectors. Coordinates that never
/// vary map to 0 and back to their constant value.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordScaler {
    pub min: Vec<f64>,
    pub span: Vec<f64>,
}

impl CoordScaler {
    pub fn from_stats(stats: &DatasetStats) -> Self {
        let span = stats.coord_min.iter().zip(&stats.coord_max).map(|(lo, hi)| hi - lo).collect();
        Self { min: stats.coord_min.clone(), span }
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn normalize(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(self.min.iter().zip(&self.span))
            .map(|(&x, (&lo, &s))| if s > 0.0 { (x - lo) / s } else { 0.0 })
            .collect()
    }

    pub fn denormalize(&self, n: &[f64]) -> Vec<f64> {
        n.iter().zip(self.min.iter().zip(&self.span)).map(|(&x, (&lo, &s))| lo + x * s).collect()
    }
}

/// Critic loss and its parameter gradients.
#[derive(Debug, Clone)]
pub struct DLoss<T> {
    /// Full objective including the weighted penalty.
    pub loss: T,
    /// Unweighted gradient penalty (zero in vanilla mode or when `λ = 0`).
    pub gp: T,
    pub grads: MlpParams<T>,
}

/// Generator loss and its parameter gradients.
#[derive(Debug, Clone)]
pub struct GLoss<T> {
    pub loss: T,
    pub grads: MlpParams<T>,
}

/// Optional extra generator regularizer. Receives the normalized fake batch
/// and returns its (already weighted) value and gradient.
pub trait GeneratorRegularizer {
    fn value_and_grad(&self, fake: &Tensor<f64>) -> (f64, Tensor<f64>);
}

fn check_batch<T: Real>(real: &Tensor<T>, labels: &Tensor<T>, z: &Tensor<T>) -> Result<()> {
    if labels.cols() != LABEL_DIM {
        return Err(Error::Shape(format!("labels have {} columns, expected {LABEL_DIM}", labels.cols())));
    }
    if real.rows() != labels.rows() || z.rows() != labels.rows() {
        return Err(Error::Shape(format!(
            "batch sizes differ: data {}, labels {}, latent {}",
            real.rows(),
            labels.rows(),
            z.rows()
        )));
    }
    if labels.rows() == 0 {
        return Err(Error::Shape("empty batch".into()));
    }
    Ok(())
}

fn generate_batch<T: Real>(g: &MlpParams<T>, z: &Tensor<T>, labels: &Tensor<T>) -> Result<Tensor<T>> {
    forward(g, &z.hstack(labels)?)
}

/// WGAN-gp critic objective `mean D(fake) − mean D(real) + λ·L_gp` with
/// `x̂ = ε·x_real + (1−ε)·x_fake` per sample.
pub fn d_loss<T: Real>(
    d: &MlpParams<T>,
    g: &MlpParams<T>,
    real: &Tensor<T>,
    labels: &Tensor<T>,
    z: &Tensor<T>,
    eps: &[T],
    lambda_gp: T,
) -> Result<DLoss<T>> {
    check_batch(real, labels, z)?;
    if eps.len() != real.rows() {
        return Err(Error::Shape(format!("{} interpolation weights for {} samples", eps.len(), real.rows())));
    }
    let fake = generate_batch(g, z, labels)?;
    d_loss_from_fake(d, real, &fake, labels, eps, lambda_gp)
}

fn d_loss_from_fake<T: Real>(
    d: &MlpParams<T>,
    real: &Tensor<T>,
    fake: &Tensor<T>,
    labels: &Tensor<T>,
    eps: &[T],
    lambda_gp: T,
) -> Result<DLoss<T>> {
    let b = real.rows();
    if fake.shape() != real.shape() {
        return Err(Error::Shape(format!("fake batch {:?} vs real {:?}", fake.shape(), real.shape())));
    }
    let both = real.hstack(labels)?.vstack(&fake.hstack(labels)?)?;
    let cache = forward_cached(d, &both)?;
    let out = cache.output().data();
    let inv_b = T::one() / T::lit(b as f64);
    let loss_w = (out[b..].iter().copied().sum::<T>() - out[..b].iter().copied().sum::<T>()) * inv_b;
    let upstream = Tensor::new(2 * b, 1, (0..2 * b).map(|i| if i < b { -inv_b } else { inv_b }).collect())?;
    let (mut grads, _) = backward_cached(d, &cache, &upstream, false)?;
    let mut gp = T::zero();
    if lambda_gp > T::zero() {
        let dim = real.cols();
        let mut mix = Vec::with_capacity(b * dim);
        for (i, &e) in eps.iter().enumerate() {
            mix.extend(real.row(i).iter().zip(fake.row(i)).map(|(&r, &f)| e * r + (T::one() - e) * f));
        }
        let x_hat = Tensor::new(b, dim, mix)?.hstack(labels)?;
        let pen = grad_penalty_value_and_grads(d, &x_hat, dim)?;
        grads.add_scaled(lambda_gp, &pen.grads)?;
        gp = pen.value;
    }
    Ok(DLoss { loss: loss_w + lambda_gp * gp, gp, grads })
}

/// Shared generator pass: returns the objective value and G gradients for a
/// per-sample upstream on the critic output computed by `head`.
fn g_backprop<T: Real, H>(
    d: &MlpParams<T>,
    g: &MlpParams<T>,
    z: &Tensor<T>,
    labels: &Tensor<T>,
    regularizer: Option<&dyn GeneratorRegularizer>,
    head: H,
) -> Result<GLoss<T>>
where
    H: Fn(&[T]) -> (T, Vec<T>),
{
    if z.rows() != labels.rows() || labels.cols() != LABEL_DIM || z.rows() == 0 {
        return Err(Error::Shape(format!(
            "latent batch {:?} and labels {:?} do not match",
            z.shape(),
            labels.shape()
        )));
    }
    let g_cache = forward_cached(g, &z.hstack(labels)?)?;
    let fake = g_cache.output();
    let d_cache = forward_cached(d, &fake.hstack(labels)?)?;
    let (mut loss, up) = head(d_cache.output().data());
    let gx = input_grad_cached(d, &d_cache, &Tensor::new(up.len(), 1, up)?)?;
    let mut g_up = gx.slice_cols(0, fake.cols());
    if let Some(r) = regularizer {
        let (v, grad) = r.value_and_grad(&fake.cast());
        if grad.shape() != g_up.shape() {
            return Err(Error::Shape("regularizer gradient shape".into()));
        }
        loss = loss + T::lit(v);
        for (a, &b) in g_up.data_mut().iter_mut().zip(grad.data()) {
            *a = *a + T::lit(b);
        }
    }
    let (grads, _) = backward_cached(g, &g_cache, &g_up, false)?;
    Ok(GLoss { loss, grads })
}

/// WGAN generator objective `−mean D(G(z, c), c)`.
pub fn g_loss<T: Real>(d: &MlpParams<T>, g: &MlpParams<T>, z: &Tensor<T>, labels: &Tensor<T>) -> Result<GLoss<T>> {
    g_backprop(d, g, z, labels, None, wgan_g_head)
}

fn wgan_g_head<T: Real>(out: &[T]) -> (T, Vec<T>) {
    let inv_b = T::one() / T::lit(out.len() as f64);
    (-out.iter().copied().sum::<T>() * inv_b, vec![-inv_b; out.len()])
}

fn clamp_logit<T: Real>(l: T) -> (T, T) {
    let c = T::lit(LOGIT_CLAMP);
    if l > c {
        (c, T::zero())
    } else if l < -c {
        (-c, T::zero())
    } else {
        (l, T::one())
    }
}

/// `log(1 + e^x)` and its derivative.
fn softplus<T: Real>(x: T) -> (T, T) {
    let one = T::one();
    let v = if x > T::zero() { x + (-x).exp().ln_1p() } else { x.exp().ln_1p() };
    let s = if x >= T::zero() { one / (one + (-x).exp()) } else { x.exp() / (one + x.exp()) };
    (v, s)
}

fn vanilla_g_head<T: Real>(out: &[T]) -> (T, Vec<T>) {
    let inv_b = T::one() / T::lit(out.len() as f64);
    let mut loss = T::zero();
    let up = out
        .iter()
        .map(|&l| {
            let (lc, dl) = clamp_logit(l);
            let (v, s) = softplus(-lc);
            loss = loss + v * inv_b;
            -s * dl * inv_b
        })
        .collect();
    (loss, up)
}

/// Vanilla GAN losses on critic logits: `d_loss = −mean log σ(D(real)) −
/// mean log(1 − σ(D(fake)))` and the non-saturating `g_loss = −mean log
/// σ(D(G(z)))`.
pub fn vanilla_gan_losses<T: Real>(
    d: &MlpParams<T>,
    g: &MlpParams<T>,
    real: &Tensor<T>,
    labels: &Tensor<T>,
    z: &Tensor<T>,
) -> Result<(DLoss<T>, GLoss<T>)> {
    check_batch(real, labels, z)?;
    let fake = generate_batch(g, z, labels)?;
    let dl = vanilla_d_from_fake(d, real, &fake, labels)?;
    let gl = g_backprop(d, g, z, labels, None, vanilla_g_head)?;
    Ok((dl, gl))
}

fn vanilla_d_from_fake<T: Real>(
    d: &MlpParams<T>,
    real: &Tensor<T>,
    fake: &Tensor<T>,
    labels: &Tensor<T>,
) -> Result<DLoss<T>> {
    let b = real.rows();
    let both = real.hstack(labels)?.vstack(&fake.hstack(labels)?)?;
    let cache = forward_cached(d, &both)?;
    let inv_b = T::one() / T::lit(b as f64);
    let mut loss = T::zero();
    let up: Vec<T> = cache
        .output()
        .data()
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let (lc, dl) = clamp_logit(l);
            if i < b {
                let (v, s) = softplus(-lc);
                loss = loss + v * inv_b;
                -s * dl * inv_b
            } else {
                let (v, s) = softplus(lc);
                loss = loss + v * inv_b;
                s * dl * inv_b
            }
        })
        .collect();
    let (grads, _) = backward_cached(d, &cache, &Tensor::new(2 * b, 1, up)?, false)?;
    Ok(DLoss { loss, gp: T::zero(), grads })
}

/// One row of the training metrics stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationMetrics {
    pub iteration: u64,
    /// Mean critic loss over the iteration's critic steps.
    pub d_loss: f64,
    pub g_loss: f64,
    /// Mean unweighted gradient penalty over the critic steps.
    pub gp: f64,
}

/// Trained networks plus everything needed to generate from them.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: TrainConfig,
    pub g: MlpParams<f64>,
    pub d: MlpParams<f64>,
    pub stats: DatasetStats,
    pub grid: GridSpec<f64>,
    /// Ship length shared by the corpus [m].
    pub length: f64,
    pub labeling: LabelingSetup,
    pub iteration: u64,
    pub rng_seed: u64,
    /// ChaCha word position of the training generator when saved.
    pub rng_word_pos: u128,
}

impl Checkpoint {
    pub fn label_scaler(&self) -> LabelScaler {
        LabelScaler::from_stats(&self.stats)
    }

    pub fn coord_scaler(&self) -> CoordScaler {
        CoordScaler::from_stats(&self.stats)
    }
}

/// Side channels of [`train_with`].
#[derive(Default)]
pub struct TrainHooks<'a> {
    /// Receives `iteration,d_loss,g_loss,gp` rows (with header).
    pub metrics: Option<&'a mut dyn Write>,
    /// Where to persist the last finite state if a loss turns non-finite.
    pub diagnostic_path: Option<PathBuf>,
    pub regularizer: Option<&'a dyn GeneratorRegularizer>,
    /// Called after every iteration.
    pub progress: Option<&'a mut dyn FnMut(&IterationMetrics)>,
}

fn sample_indices(rng: &mut ChaCha8Rng, n: usize, batch: usize) -> Vec<usize> {
    if batch <= n {
        index::sample(rng, n, batch).into_vec()
    } else {
        (0..batch).map(|_| rng.gen_range(0..n)).collect()
    }
}

/// Standard normal draws are made in `f64` and rounded, so both precisions
/// consume the same random stream.
fn normal_tensor<T: Real>(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor<T> {
    let data = (0..rows * cols).map(|_| T::lit(rng.sample::<f64, _>(StandardNormal))).collect();
    Tensor::new(rows, cols, data).expect("sized")
}

struct Prepared<T> {
    data: Vec<Vec<T>>,
    labels: Vec<[T; 3]>,
}

impl<T: Real> Prepared<T> {
    fn batch(&self, idx: &[usize]) -> (Tensor<T>, Tensor<T>) {
        let dim = self.data[0].len();
        let mut x = Vec::with_capacity(idx.len() * dim);
        let mut c = Vec::with_capacity(idx.len() * LABEL_DIM);
        for &i in idx {
            x.extend_from_slice(&self.data[i]);
            c.extend_from_slice(&self.labels[i]);
        }
        (Tensor::new(idx.len(), dim, x).expect("sized"), Tensor::new(idx.len(), LABEL_DIM, c).expect("sized"))
    }

    fn labels_only(&self, idx: &[usize]) -> Tensor<T> {
        Tensor::new(idx.len(), LABEL_DIM, idx.iter().flat_map(|&i| self.labels[i]).collect()).expect("sized")
    }
}

/// Trains a conditional GAN on `ds` (after the configured subsetting).
pub fn train(ds: &Dataset, grid: &GridSpec<f64>, cfg: &TrainConfig) -> Result<Checkpoint> {
    train_with(ds, grid, cfg, TrainHooks::default())
}

/// [`train`] with metrics output, diagnostics and an optional regularizer.
pub fn train_with(ds: &Dataset, grid: &GridSpec<f64>, cfg: &TrainConfig, hooks: TrainHooks<'_>) -> Result<Checkpoint> {
    match cfg.precision {
        Precision::F32 => train_in::<f32>(ds, grid, cfg, hooks),
        Precision::F64 => train_in::<f64>(ds, grid, cfg, hooks),
    }
}

fn train_in<T: Real>(ds: &Dataset, grid: &GridSpec<f64>, cfg: &TrainConfig, mut hooks: TrainHooks<'_>) -> Result<Checkpoint> {
    cfg.validate()?;
    let samples: Vec<LabeledSample> = match cfg.max_samples {
        Some(n) => crate::dataset::subset(&ds.samples, n, cfg.seed),
        None => ds.samples.clone(),
    };
    if samples.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    let dim = grid.flat_len();
    if ds.stats.coord_min.len() != dim {
        return Err(Error::Shape(format!("corpus vectors have {} values, grid needs {dim}", ds.stats.coord_min.len())));
    }
    let length = samples[0].params.length;
    if samples.iter().any(|s| s.params.length != length) {
        return Err(Error::Config("all training hulls must share one length".into()));
    }
    let coords = CoordScaler::from_stats(&ds.stats);
    let labels = LabelScaler::from_stats(&ds.stats);
    let prepared = Prepared::<T> {
        data: samples.iter().map(|s| coords.normalize(&s.vector).into_iter().map(T::lit).collect()).collect(),
        labels: samples.iter().map(|s| labels.normalize(&s.label).map(T::lit)).collect(),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let g_spec = cfg.g_spec(dim)?;
    let d_spec = cfg.d_spec(dim)?;
    let mut g: MlpParams<T> = init_params_with(&g_spec, &mut rng);
    let mut d: MlpParams<T> = init_params_with(&d_spec, &mut rng);
    let mut g_opt = AdamState::new(&g_spec, cfg.adam);
    let mut d_opt = AdamState::new(&d_spec, cfg.adam);
    let lambda_gp = T::lit(cfg.lambda_gp);

    let mut ckpt = Checkpoint {
        config: cfg.clone(),
        g: g.cast(),
        d: d.cast(),
        stats: ds.stats.clone(),
        grid: grid.clone(),
        length,
        labeling: ds.setup,
        iteration: 0,
        rng_seed: cfg.seed,
        rng_word_pos: rng.get_word_pos(),
    };
    if let Some(m) = hooks.metrics.as_deref_mut() {
        writeln!(m, "iteration,d_loss,g_loss,gp")?;
    }
    let n = prepared.data.len();
    let b = cfg.batch_size;
    for it in 1..=cfg.iterations {
        let (mut d_sum, mut gp_sum) = (0.0, 0.0);
        for _ in 0..cfg.n_critic {
            let idx = sample_indices(&mut rng, n, b);
            let (real, c) = prepared.batch(&idx);
            let z = normal_tensor(&mut rng, b, cfg.latent_dim);
            let eps: Vec<T> = (0..b).map(|_| T::lit(rng.gen::<f64>())).collect();
            let fake = generate_batch(&g, &z, &c)?;
            let dl = match cfg.loss_mode {
                LossMode::WganGp => d_loss_from_fake(&d, &real, &fake, &c, &eps, lambda_gp)?,
                LossMode::Vanilla => vanilla_d_from_fake(&d, &real, &fake, &c)?,
            };
            let loss = dl.loss.to_f64().unwrap_or(f64::NAN);
            if !loss.is_finite() || !dl.grads.is_finite() {
                return Err(abort(&mut ckpt, &g, &d, it, &rng, "critic loss", loss, &hooks.diagnostic_path));
            }
            adam_step(&mut d_opt, &mut d, &dl.grads)?;
            d_sum += loss;
            gp_sum += dl.gp.to_f64().unwrap_or(f64::NAN);
        }
        let idx = sample_indices(&mut rng, n, b);
        let c = prepared.labels_only(&idx);
        let z = normal_tensor(&mut rng, b, cfg.latent_dim);
        let gl = match cfg.loss_mode {
            LossMode::WganGp => g_backprop(&d, &g, &z, &c, hooks.regularizer, wgan_g_head)?,
            LossMode::Vanilla => g_backprop(&d, &g, &z, &c, hooks.regularizer, vanilla_g_head)?,
        };
        let g_loss = gl.loss.to_f64().unwrap_or(f64::NAN);
        if !g_loss.is_finite() || !gl.grads.is_finite() {
            return Err(abort(&mut ckpt, &g, &d, it, &rng, "generator loss", g_loss, &hooks.diagnostic_path));
        }
        adam_step(&mut g_opt, &mut g, &gl.grads)?;
        let m = IterationMetrics {
            iteration: it,
            d_loss: d_sum / cfg.n_critic as f64,
            g_loss,
            gp: gp_sum / cfg.n_critic as f64,
        };
        if let Some(w) = hooks.metrics.as_deref_mut() {
            writeln!(w, "{},{:e},{:e},{:e}", m.iteration, m.d_loss, m.g_loss, m.gp)?;
        }
        if let Some(p) = hooks.progress.as_deref_mut() {
            p(&m);
        }
    }
    if let Some(w) = hooks.metrics.as_deref_mut() {
        w.flush()?;
    }
    ckpt.g = g.cast();
    ckpt.d = d.cast();
    ckpt.iteration = cfg.iterations;
    ckpt.rng_word_pos = rng.get_word_pos();
    Ok(ckpt)
}

#[allow(clippy::too_many_arguments)]
fn abort<T: Real>(
    ckpt: &mut Checkpoint,
    g: &MlpParams<T>,
    d: &MlpParams<T>,
    it: u64,
    rng: &ChaCha8Rng,
    what: &str,
    value: f64,
    path: &Option<PathBuf>,
) -> Error {
    let mut msg = format!("{what} became {value} at iteration {it}");
    if let Some(p) = path {
        ckpt.g = g.cast();
        ckpt.d = d.cast();
        ckpt.iteration = it - 1;
        ckpt.rng_word_pos = rng.get_word_pos();
        match save_checkpoint(p, ckpt) {
            Ok(()) => msg.push_str(&format!("; last finite state saved to {}", p.display())),
            Err(e) => msg.push_str(&format!("; saving diagnostic checkpoint failed: {e}")),
        }
    }
    Error::Numerical(msg)
}

/// Latent generator for sample `s` of request `r`.
fn request_rng(seed: u64, r: usize, s: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(r as u64).to_le_bytes());
    key[16..24].copy_from_slice(&(s as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Generates `n_per_request` hulls per request, request-major: output
/// `r * n_per_request + s` is sample `s` of request `r`. Each sample depends
/// only on `(seed, r, s)`.
pub fn generate(
    ckpt: &Checkpoint,
    requests: &[HullLabel<f64>],
    n_per_request: usize,
    seed: u64,
) -> Result<Vec<HullPointCloud<f64>>> {
    let scaler = ckpt.label_scaler();
    let coords = ckpt.coord_scaler();
    let latent = ckpt.config.latent_dim;
    let mut rows = Vec::with_capacity(requests.len() * n_per_request);
    for (r, req) in requests.iter().enumerate() {
        let c = ConditionLabel::new(*req, &scaler);
        if c.out_of_range() {
            log::warn!(
                "request {r} (Cd {}, W {}, U {}) lies outside the training label range",
                req.cd,
                req.w,
                req.u
            );
        }
        for s in 0..n_per_request {
            let mut rng = request_rng(seed, r, s);
            let mut row: Vec<f64> = (0..latent).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            row.extend_from_slice(&c.normalized);
            rows.push(row);
        }
    }
    let outputs = match ckpt.config.precision {
        Precision::F32 => run_generator::<f32>(&ckpt.g, rows)?,
        Precision::F64 => run_generator::<f64>(&ckpt.g, rows)?,
    };
    outputs
        .iter()
        .map(|y| HullPointCloud::from_flat(&coords.denormalize(y), ckpt.length, &ckpt.grid))
        .collect()
}

/// Runs the generator in the precision it was trained in, one row at a time:
/// matrix kernels may round differently depending on the batch height, which
/// would couple samples to their neighbours.
fn run_generator<T: Real>(g: &MlpParams<f64>, rows: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    let g: MlpParams<T> = g.cast();
    rows.into_iter()
        .map(|row| {
            let x = Tensor::new(1, row.len(), row.into_iter().map(T::lit).collect())?;
            Ok(forward(&g, &x)?.data().iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect())
        })
        .collect()
}

#[cfg(test)]
mod tests;
