//! Desk-scale learner for the sparsity-aware transport objective
//!
//! ```text
//! min_f  mean_y ‖DFT(f(y) − y)‖_q^q  +  λ · ED(features(f(Y)), features(X))
//! ```
//!
//! `f` is a frequency-diagonal filter (one complex gain per DFT coefficient,
//! Hermitian-symmetric so outputs stay real) optionally followed by a small
//! spatial convolution. The distribution term is the energy distance between
//! minibatches of restored and clean images, which are sampled independently
//! (the pools are unpaired). With `q = 2` the fidelity equals the spatial
//! squared ℓ2 distance and the objective is the plain transport baseline.

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cost::{complex_lq_coeffs, complex_lq_grad_coeffs};
use crate::error::{invalid, Error, Result};
use crate::image::Image;
use crate::ot::{energy_distance, energy_distance_grad};
use crate::spectral::{forward_real, hermitian_deviation, hermitian_project, inverse_real_part};

pub const MODEL_SIZES: [usize; 4] = [8, 16, 32, 64];
pub const KERNEL_SIZES: [usize; 3] = [0, 3, 5];
pub const FEATURE_PATCH: usize = 8;

/// Small spatial correlation kernel applied after the spectral gains, with
/// reflect (mirror without edge repeat) padding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub size: usize,
    /// Row-major `size x size` weights.
    pub weights: Vec<f64>,
}

impl Kernel {
    pub fn identity(size: usize) -> Self {
        let mut weights = vec![0.0; size * size];
        weights[size * size / 2] = 1.0;
        Self { size, weights }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestorationModel {
    size: usize,
    gains: Vec<Complex64>,
    kernel: Option<Kernel>,
}

impl RestorationModel {
    pub fn new(size: usize, gains: Vec<Complex64>, kernel: Option<Kernel>) -> Result<Self> {
        if !MODEL_SIZES.contains(&size) {
            return Err(invalid("size", format!("model size must be one of {MODEL_SIZES:?}, got {size}")));
        }
        if gains.len() != size * size {
            return Err(Error::ShapeMismatch { expected: format!("{} gains", size * size), got: format!("{}", gains.len()) });
        }
        if gains.iter().any(|g| !g.re.is_finite() || !g.im.is_finite()) {
            return Err(invalid("gains", "non-finite gain"));
        }
        if let Some(k) = &kernel {
            if !KERNEL_SIZES.contains(&k.size) || k.size == 0 || k.weights.len() != k.size * k.size {
                return Err(invalid("kernel", format!("kernel must be 3x3 or 5x5, got size {}", k.size)));
            }
        }
        let (deviation, ..) = hermitian_deviation(&gains, size, size);
        if deviation > 1e-9 {
            return Err(invalid("gains", format!("gains are not Hermitian-symmetric (deviation {deviation:e})")));
        }
        Ok(Self { size, gains, kernel })
    }

    /// Gains ≡ 1 and an identity kernel (if `kernel_size > 0`).
    pub fn identity(size: usize, kernel_size: usize) -> Result<Self> {
        let kernel = match kernel_size {
            0 => None,
            k => Some(Kernel::identity(k)),
        };
        Self::new(size, vec![Complex64::new(1.0, 0.0); size * size], kernel)
    }

    /// Identity plus a seeded complex Gaussian perturbation of the gains,
    /// projected back onto Hermitian symmetry.
    pub fn perturbed_identity(size: usize, kernel_size: usize, sigma: f64, rng: &mut ChaCha8Rng) -> Result<Self> {
        let mut model = Self::identity(size, kernel_size)?;
        for g in &mut model.gains {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *g += Complex64::new(sigma * re, sigma * im);
        }
        hermitian_project(&mut model.gains, size, size);
        Ok(model)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn gains(&self) -> &[Complex64] {
        &self.gains
    }

    pub fn kernel(&self) -> Option<&Kernel> {
        self.kernel.as_ref()
    }

    /// `max_k |gain_k − 1|`
    pub fn distance_from_identity(&self) -> f64 {
        self.gains.iter().map(|g| (g - 1.0).norm()).fold(0.0, f64::max)
    }

    /// Parameter vector view used by gradient steps and finite differences:
    /// `[re(g0), im(g0), re(g1), …, kernel…]`.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p: Vec<f64> = self.gains.iter().flat_map(|g| [g.re, g.im]).collect();
        if let Some(k) = &self.kernel {
            p.extend_from_slice(&k.weights);
        }
        p
    }

    /// Overwrites parameters without re-projecting; used for finite differences.
    pub fn set_parameters_raw(&mut self, params: &[f64]) {
        let n = self.gains.len();
        for (k, g) in self.gains.iter_mut().enumerate() {
            *g = Complex64::new(params[2 * k], params[2 * k + 1]);
        }
        if let Some(kernel) = &mut self.kernel {
            kernel.weights.copy_from_slice(&params[2 * n..]);
        }
    }

    fn project(&mut self) {
        hermitian_project(&mut self.gains, self.size, self.size);
    }

    fn check_input(&self, y: &Image) -> Result<()> {
        if y.height() != self.size || y.width() != self.size || y.channels() != 1 {
            return Err(Error::ShapeMismatch {
                expected: format!("{0}x{0}x1", self.size),
                got: y.shape_string(),
            });
        }
        Ok(())
    }

    /// Forward pass on a pre-transformed single-channel input; returns the
    /// pre-kernel image and the output.
    fn forward_spectrum(&self, spectrum: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let filtered: Vec<Complex64> = spectrum.iter().zip(&self.gains).map(|(y, g)| y * g).collect();
        let z = inverse_real_part(&filtered, self.size, self.size);
        let out = match &self.kernel {
            Some(k) => correlate(&z, self.size, k),
            None => z.clone(),
        };
        (z, out)
    }
}

fn reflect101(i: i64, n: usize) -> usize {
    let n = n as i64;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let k = i.rem_euclid(period);
    (if k < n { k } else { period - k }) as usize
}

fn correlate(z: &[f64], size: usize, kernel: &Kernel) -> Vec<f64> {
    let half = (kernel.size / 2) as i64;
    let mut out = vec![0.0; size * size];
    for r in 0..size {
        for c in 0..size {
            let mut acc = 0.0;
            for a in 0..kernel.size {
                let rr = reflect101(r as i64 + a as i64 - half, size);
                for b in 0..kernel.size {
                    let cc = reflect101(c as i64 + b as i64 - half, size);
                    acc += kernel.weights[a * kernel.size + b] * z[rr * size + cc];
                }
            }
            out[r * size + c] = acc;
        }
    }
    out
}

/// Adjoint of [`correlate`]: gradients with respect to its input and kernel.
fn correlate_backward(z: &[f64], size: usize, kernel: &Kernel, grad_out: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let half = (kernel.size / 2) as i64;
    let mut grad_z = vec![0.0; size * size];
    let mut grad_k = vec![0.0; kernel.size * kernel.size];
    for r in 0..size {
        for c in 0..size {
            let g = grad_out[r * size + c];
            for a in 0..kernel.size {
                let rr = reflect101(r as i64 + a as i64 - half, size);
                for b in 0..kernel.size {
                    let cc = reflect101(c as i64 + b as i64 - half, size);
                    let w = a * kernel.size + b;
                    grad_z[rr * size + cc] += kernel.weights[w] * g;
                    grad_k[w] += z[rr * size + cc] * g;
                }
            }
        }
    }
    (grad_z, grad_k)
}

/// `f(y)`, channel by channel.
pub fn apply_model(model: &RestorationModel, y: &Image) -> Result<Image> {
    let planes = (0..y.channels())
        .map(|c| {
            let plane = y.channel(c);
            model.check_input(&plane)?;
            let (_, out) = model.forward_spectrum(&forward_real(plane.data(), model.size, model.size));
            Image::new(model.size, model.size, 1, out)
        })
        .collect::<Result<Vec<_>>>()?;
    Image::from_channels(&planes)
}

/// Tiled inference over non-overlapping model-sized tiles.
pub fn restore(model: &RestorationModel, image: &Image) -> Result<Image> {
    let s = model.size;
    let (h, w) = (image.height(), image.width());
    if h % s != 0 || w % s != 0 {
        let pad = |n: usize| (s - n % s) % s;
        return Err(invalid(
            "image",
            format!("{h}x{w} is not divisible by the model size {s}; pad by {} rows and {} columns", pad(h), pad(w)),
        ));
    }
    let mut out = Image::zeros(h, w, image.channels())?;
    for top in (0..h).step_by(s) {
        for left in (0..w).step_by(s) {
            let tile = apply_model(model, &image.crop(top, left, s, s)?)?;
            out.paste(&tile, top, left)?;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Divergence {
    #[default]
    EnergyDistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Feature {
    /// Each image is one point in `ℝ^(H·W)`.
    Pixels,
    /// Each non-overlapping 8×8 tile is one point in `ℝ^64`.
    #[default]
    PatchesOf8,
}

impl Feature {
    /// Feature vectors and, for each, the pixel indices they were read from.
    fn extract(&self, image: &[f64], size: usize) -> Vec<(Vec<f64>, Vec<usize>)> {
        match self {
            Feature::Pixels => vec![(image.to_vec(), (0..image.len()).collect())],
            Feature::PatchesOf8 => {
                let p = FEATURE_PATCH.min(size);
                let mut out = Vec::new();
                for top in (0..=size - p).step_by(p) {
                    for left in (0..=size - p).step_by(p) {
                        let idx: Vec<usize> =
                            (0..p).flat_map(|r| (0..p).map(move |c| (top + r) * size + left + c)).collect();
                        out.push((idx.iter().map(|&i| image[i]).collect(), idx));
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub q: f64,
    pub eps: f64,
    pub lambda: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub iterations: usize,
    pub seed: u64,
    pub divergence: Divergence,
    pub feature: Feature,
    pub kernel_size: usize,
    pub init_sigma: f64,
    pub model_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            q: 1.0,
            eps: crate::cost::DEFAULT_EPS,
            lambda: 1.0,
            learning_rate: 1e-3,
            batch_size: 16,
            iterations: 500,
            seed: 0,
            divergence: Divergence::EnergyDistance,
            feature: Feature::PatchesOf8,
            kernel_size: 0,
            init_sigma: 0.01,
            model_size: 32,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if ![0.5, 1.0, 2.0].contains(&self.q) {
            return Err(invalid("q", format!("training supports q in {{0.5, 1, 2}}, got {}", self.q)));
        }
        if self.q < 2.0 && (self.eps.is_nan() || self.eps <= 0.0) {
            return Err(invalid("eps", "must be > 0 when q < 2"));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(invalid("eps", "must be finite and >= 0"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(invalid("lambda", "must be finite and >= 0"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(invalid("learning_rate", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(invalid("batch_size", "must be positive"));
        }
        if !(self.init_sigma >= 0.0 && self.init_sigma.is_finite()) {
            return Err(invalid("init_sigma", "must be finite and >= 0"));
        }
        if !KERNEL_SIZES.contains(&self.kernel_size) {
            return Err(invalid("kernel_size", format!("must be one of {KERNEL_SIZES:?}")));
        }
        if !MODEL_SIZES.contains(&self.model_size) {
            return Err(invalid("model_size", format!("must be one of {MODEL_SIZES:?}")));
        }
        Ok(())
    }

    /// `"OT baseline"` for `q = 2`, otherwise `"SOT"`.
    pub fn label(&self) -> &'static str {
        if self.q == 2.0 { "OT baseline" } else { "SOT" }
    }
}

/// Objective settings shared by evaluation and gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveParams {
    pub q: f64,
    pub eps: f64,
    pub lambda: f64,
    pub feature: Feature,
}

impl From<&TrainConfig> for ObjectiveParams {
    fn from(cfg: &TrainConfig) -> Self {
        Self { q: cfg.q, eps: cfg.eps, lambda: cfg.lambda, feature: cfg.feature }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValue {
    pub total: f64,
    pub fidelity: f64,
    pub divergence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelGradient {
    pub gains: Vec<Complex64>,
    pub kernel: Option<Vec<f64>>,
}

impl ModelGradient {
    /// Same layout as [`RestorationModel::parameters`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut p: Vec<f64> = self.gains.iter().flat_map(|g| [g.re, g.im]).collect();
        if let Some(k) = &self.kernel {
            p.extend_from_slice(k);
        }
        p
    }

    fn scaled(&self, s: f64) -> Self {
        Self { gains: self.gains.iter().map(|g| g * s).collect(), kernel: self.kernel.as_ref().map(|k| k.iter().map(|v| v * s).collect()) }
    }

    fn plus(&self, other: &Self) -> Self {
        Self {
            gains: self.gains.iter().zip(&other.gains).map(|(a, b)| a + b).collect(),
            kernel: match (&self.kernel, &other.kernel) {
                (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(x, y)| x + y).collect()),
                _ => None,
            },
        }
    }
}

/// Gradient split into its two terms; `divergence` already includes `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SotGradient {
    pub value: ObjectiveValue,
    pub fidelity: ModelGradient,
    pub divergence: ModelGradient,
    pub total: ModelGradient,
}

struct Prepared {
    spectrum: Vec<Complex64>,
    y: Vec<f64>,
}

fn prepare(model: &RestorationModel, batch: &[Image]) -> Result<Vec<Prepared>> {
    batch
        .iter()
        .map(|y| {
            model.check_input(y)?;
            Ok(Prepared { spectrum: forward_real(y.data(), model.size, model.size), y: y.data().to_vec() })
        })
        .collect()
}

/// Feature vectors plus, for each, the source image and the pixels it reads.
type Features = (Vec<Vec<f64>>, Vec<(usize, Vec<usize>)>);

fn features_of(images: &[&[f64]], size: usize, feature: Feature) -> Features {
    let mut points = Vec::new();
    let mut origin = Vec::new();
    for (i, img) in images.iter().enumerate() {
        for (f, idx) in feature.extract(img, size) {
            points.push(f);
            origin.push((i, idx));
        }
    }
    (points, origin)
}

fn check_batches(batch_y: &[Image], pool_x: &[Image], model: &RestorationModel) -> Result<()> {
    if batch_y.is_empty() || pool_x.is_empty() {
        return Err(invalid("batch", "degraded batch and clean pool must be nonempty"));
    }
    pool_x.iter().try_for_each(|x| model.check_input(x))
}

/// Per-image `(z, out)` from the forward pass.
type ForwardPass = (Vec<f64>, Vec<f64>);

fn objective_prepared(
    model: &RestorationModel,
    prepared: &[Prepared],
    clean: &[&[f64]],
    params: &ObjectiveParams,
) -> Result<(ObjectiveValue, Vec<ForwardPass>)> {
    let n = model.size;
    let mut fidelity = 0.0;
    let mut forwards = Vec::with_capacity(prepared.len());
    for p in prepared {
        let (z, out) = model.forward_spectrum(&p.spectrum);
        let diff: Vec<f64> = out.iter().zip(&p.y).map(|(a, b)| a - b).collect();
        fidelity += complex_lq_coeffs(&forward_real(&diff, n, n), params.q, params.eps)?;
        forwards.push((z, out));
    }
    fidelity /= prepared.len() as f64;
    let restored: Vec<&[f64]> = forwards.iter().map(|(_, o)| o.as_slice()).collect();
    let (fa, _) = features_of(&restored, n, params.feature);
    let (fb, _) = features_of(clean, n, params.feature);
    let divergence = energy_distance(&fa, &fb)?;
    let total = fidelity + params.lambda * divergence;
    Ok((ObjectiveValue { total, fidelity, divergence }, forwards))
}

/// Evaluates the objective on one degraded batch against a clean batch.
pub fn sot_objective(
    model: &RestorationModel,
    batch_y: &[Image],
    pool_x: &[Image],
    params: &ObjectiveParams,
) -> Result<ObjectiveValue> {
    check_batches(batch_y, pool_x, model)?;
    let prepared = prepare(model, batch_y)?;
    let clean: Vec<&[f64]> = pool_x.iter().map(Image::data).collect();
    Ok(objective_prepared(model, &prepared, &clean, params)?.0)
}

/// Backpropagates per-image output gradients to the model parameters.
fn backward(model: &RestorationModel, prepared: &[Prepared], forwards: &[(Vec<f64>, Vec<f64>)], grad_out: &[Vec<f64>]) -> ModelGradient {
    let n = model.size;
    let mut gains = vec![Complex64::new(0.0, 0.0); n * n];
    let mut kernel = model.kernel.as_ref().map(|k| vec![0.0; k.weights.len()]);
    for ((p, (z, _)), g_out) in prepared.iter().zip(forwards).zip(grad_out) {
        let g_z = match (&model.kernel, &mut kernel) {
            (Some(k), Some(acc)) => {
                let (g_z, g_k) = correlate_backward(z, n, k, g_out);
                acc.iter_mut().zip(g_k).for_each(|(a, b)| *a += b);
                g_z
            }
            _ => g_out.clone(),
        };
        let g_hat = forward_real(&g_z, n, n);
        for ((acc, gh), y) in gains.iter_mut().zip(&g_hat).zip(&p.spectrum) {
            *acc += gh * y.conj();
        }
    }
    ModelGradient { gains, kernel }
}

/// Analytic gradient of [`sot_objective`] with respect to the real and
/// imaginary parts of every gain (treated as independent coordinates) and
/// the kernel weights.
pub fn sot_gradient(
    model: &RestorationModel,
    batch_y: &[Image],
    pool_x: &[Image],
    params: &ObjectiveParams,
) -> Result<SotGradient> {
    check_batches(batch_y, pool_x, model)?;
    let prepared = prepare(model, batch_y)?;
    let clean: Vec<&[f64]> = pool_x.iter().map(Image::data).collect();
    gradient_prepared(model, &prepared, &clean, params)
}

fn gradient_prepared(
    model: &RestorationModel,
    prepared: &[Prepared],
    clean: &[&[f64]],
    params: &ObjectiveParams,
) -> Result<SotGradient> {
    if params.q == 0.0 {
        return Err(invalid("q", "q = 0 has no gradient"));
    }
    let n = model.size;
    let batch = prepared.len() as f64;
    let mut fidelity_value = 0.0;
    let mut forwards = Vec::with_capacity(prepared.len());
    let mut fid_out = Vec::with_capacity(prepared.len());
    for p in prepared {
        let (z, out) = model.forward_spectrum(&p.spectrum);
        let diff: Vec<f64> = out.iter().zip(&p.y).map(|(a, b)| a - b).collect();
        let residual = forward_real(&diff, n, n);
        fidelity_value += complex_lq_coeffs(&residual, params.q, params.eps)?;
        let g = complex_lq_grad_coeffs(&residual, params.q, params.eps)?;
        fid_out.push(inverse_real_part(&g, n, n).into_iter().map(|v| v / batch).collect::<Vec<_>>());
        forwards.push((z, out));
    }
    let fidelity_value = fidelity_value / batch;

    let restored: Vec<&[f64]> = forwards.iter().map(|(_, o)| o.as_slice()).collect();
    let (fa, origin) = features_of(&restored, n, params.feature);
    let (fb, _) = features_of(clean, n, params.feature);
    let (divergence_value, point_grads) = energy_distance_grad(&fa, &fb)?;
    let mut div_out = vec![vec![0.0; n * n]; prepared.len()];
    for ((img, idx), g) in origin.iter().zip(point_grads) {
        for (&pixel, v) in idx.iter().zip(g) {
            div_out[*img][pixel] += v;
        }
    }
    let value = ObjectiveValue {
        total: fidelity_value + params.lambda * divergence_value,
        fidelity: fidelity_value,
        divergence: divergence_value,
    };

    let fidelity = backward(model, prepared, &forwards, &fid_out);
    let divergence = backward(model, prepared, &forwards, &div_out).scaled(params.lambda);
    let total = fidelity.plus(&divergence);
    Ok(SotGradient { value, fidelity, divergence, total })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub iter: usize,
    pub fidelity: f64,
    pub divergence: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum TrainStatus {
    Completed,
    /// A non-finite loss or parameter appeared at `iteration`; the returned
    /// model is the last finite one.
    Diverged { iteration: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: RestorationModel,
    pub log: Vec<LogEntry>,
    pub status: TrainStatus,
    /// Number of completed iterations, counting any resumed prefix.
    pub iterations_done: usize,
}

/// Training log as CSV, with a comment line naming the objective.
pub fn log_to_csv(cfg: &TrainConfig, log: &[LogEntry]) -> String {
    let mut out = format!("# {} (q={}, lambda={}, divergence=energy-distance)\niter,fidelity,divergence,total\n", cfg.label(), cfg.q, cfg.lambda);
    for e in log {
        out.push_str(&format!("{},{},{},{}\n", e.iter, e.fidelity, e.divergence, e.total));
    }
    out
}

fn iteration_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw_indices(rng: &mut ChaCha8Rng, len: usize, count: usize) -> Vec<usize> {
    if count <= len {
        sample(rng, len, count).into_vec()
    } else {
        (0..count).map(|_| rng.random_range(0..len)).collect()
    }
}

/// Model initialization for a configuration (identity plus seeded noise).
pub fn initial_model(cfg: &TrainConfig) -> Result<RestorationModel> {
    cfg.validate()?;
    let mut rng = iteration_rng(cfg.seed, u64::MAX);
    RestorationModel::perturbed_identity(cfg.model_size, cfg.kernel_size, cfg.init_sigma, &mut rng)
}

/// Fixed-step gradient descent from the configured initialization.
pub fn train(cfg: &TrainConfig, degraded_pool: &[Image], clean_pool: &[Image]) -> Result<TrainOutcome> {
    train_from(cfg, initial_model(cfg)?, 0, degraded_pool, clean_pool)
}

/// Continues training from `model` at iteration `start`, running until
/// `cfg.iterations` total iterations. Each iteration draws its minibatches
/// from its own ChaCha8 stream, so a resumed run reproduces the uninterrupted
/// one exactly.
pub fn train_from(
    cfg: &TrainConfig,
    mut model: RestorationModel,
    start: usize,
    degraded_pool: &[Image],
    clean_pool: &[Image],
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if degraded_pool.is_empty() || clean_pool.is_empty() {
        return Err(invalid("pool", "degraded and clean pools must be nonempty"));
    }
    if model.size != cfg.model_size || model.kernel.as_ref().map_or(0, |k| k.size) != cfg.kernel_size {
        return Err(invalid("model", "model shape does not match the configuration"));
    }
    let prepared = prepare(&model, degraded_pool)?;
    clean_pool.iter().try_for_each(|x| model.check_input(x))?;
    let params = ObjectiveParams::from(cfg);
    let mut log = Vec::with_capacity(cfg.iterations.saturating_sub(start));
    for iter in start..cfg.iterations {
        let mut rng = iteration_rng(cfg.seed, iter as u64);
        let yi = draw_indices(&mut rng, prepared.len(), cfg.batch_size);
        let xi = draw_indices(&mut rng, clean_pool.len(), cfg.batch_size);
        let batch: Vec<Prepared> =
            yi.iter().map(|&i| Prepared { spectrum: prepared[i].spectrum.clone(), y: prepared[i].y.clone() }).collect();
        let clean: Vec<&[f64]> = xi.iter().map(|&i| clean_pool[i].data()).collect();
        let grad = gradient_prepared(&model, &batch, &clean, &params)?;
        let v = grad.value;
        if !(v.total.is_finite() && v.fidelity.is_finite() && v.divergence.is_finite()) {
            return Ok(TrainOutcome { model, log, status: TrainStatus::Diverged { iteration: iter }, iterations_done: iter });
        }
        log.push(LogEntry { iter, fidelity: v.fidelity, divergence: v.divergence, total: v.total });
        let mut next = model.clone();
        let step = grad.total.flatten();
        let mut params_vec = next.parameters();
        params_vec.iter_mut().zip(&step).for_each(|(p, g)| *p -= cfg.learning_rate * g);
        if params_vec.iter().any(|p| !p.is_finite()) {
            return Ok(TrainOutcome { model, log, status: TrainStatus::Diverged { iteration: iter }, iterations_done: iter });
        }
        next.set_parameters_raw(&params_vec);
        next.project();
        model = next;
    }
    let done = cfg.iterations.max(start);
    Ok(TrainOutcome { model, log, status: TrainStatus::Completed, iterations_done: done })
}

/// Serialized model state. Gains are interleaved `[re, im, re, im, …]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub height: usize,
    pub width: usize,
    pub gains: Vec<f64>,
    pub kernel: Option<Kernel>,
    pub config: TrainConfig,
    pub seed: u64,
    pub iteration: usize,
}

impl Checkpoint {
    pub fn new(model: &RestorationModel, config: &TrainConfig, iteration: usize) -> Self {
        Self {
            height: model.size,
            width: model.size,
            gains: model.gains.iter().flat_map(|g| [g.re, g.im]).collect(),
            kernel: model.kernel.clone(),
            config: *config,
            seed: config.seed,
            iteration,
        }
    }

    pub fn model(&self) -> Result<RestorationModel> {
        if self.height != self.width || self.gains.len() != 2 * self.height * self.width {
            return Err(invalid("checkpoint", "inconsistent dimensions"));
        }
        let gains = self.gains.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
        RestorationModel::new(self.height, gains, self.kernel.clone())
    }
}
