//! Bidirectional LSTM encoder with a softmax output layer, trained by
//! per-sample SGD at a constant learning rate.
//!
//! Parameters live in one flat `f64` vector addressed through a fixed
//! layout, which keeps the update rule, checkpointing and finite-difference
//! checks trivial. No gradient clipping, no momentum, no learning-rate
//! decay: a non-finite gradient is an error, not something to paper over.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64Mcg;
use serde::{Deserialize, Serialize};

use crate::ctc::{ctc_nll_grad, Label, PosteriorLattice};
use crate::dataset::FrameMatrix;
use crate::error::{Error, Result};

/// Hyper-parameters fixing the network shape and update rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Width of one input frame.
    pub input_dim: usize,
    /// Per-direction recurrent state width.
    pub hidden_dim: usize,
    /// Character labels; the output layer adds one more unit for the blank.
    pub alphabet_size: usize,
    /// Half-width of the uniform parameter init.
    pub init_scale: f64,
    /// Constant SGD learning rate.
    pub learning_rate: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            input_dim: 16,
            hidden_dim: 32,
            alphabet_size: 20,
            init_scale: 0.1,
            learning_rate: 0.001,
        }
    }
}

impl ModelConfig {
    /// Output units: alphabet plus the blank.
    pub fn n_outputs(&self) -> usize {
        self.alphabet_size + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dim == 0 || self.alphabet_size == 0 {
            return Err(Error::Config("model dimensions must be at least 1".into()));
        }
        if !self.init_scale.is_finite() || self.init_scale < 0.0 {
            return Err(Error::Config("init_scale must be finite and >= 0".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        Layout::of(self).param_count()
    }
}

/// Gate blocks within the pre-activation vector, in order:
/// input, forget, cell candidate, output.
const GATE_BLOCKS: usize = 4;
const FORGET_BLOCK: usize = 1;

/// Fixed addressing of the flat parameter vector.
///
/// Per direction: `wx` (4H x I), `wh` (4H x H), `b` (4H); then the output
/// projection `w_out` (N x 2H, forward columns first) and `b_out` (N).
#[derive(Debug, Clone, Copy)]
struct Layout {
    input_dim: usize,
    hidden: usize,
    n_out: usize,
}

impl Layout {
    fn of(config: &ModelConfig) -> Self {
        Self {
            input_dim: config.input_dim,
            hidden: config.hidden_dim,
            n_out: config.n_outputs(),
        }
    }

    fn gates(&self) -> usize {
        GATE_BLOCKS * self.hidden
    }

    fn wx_len(&self) -> usize {
        self.gates() * self.input_dim
    }

    fn wh_len(&self) -> usize {
        self.gates() * self.hidden
    }

    fn dir_len(&self) -> usize {
        self.wx_len() + self.wh_len() + self.gates()
    }

    fn wx_off(&self, dir: usize) -> usize {
        dir * self.dir_len()
    }

    fn wh_off(&self, dir: usize) -> usize {
        self.wx_off(dir) + self.wx_len()
    }

    fn b_off(&self, dir: usize) -> usize {
        self.wh_off(dir) + self.wh_len()
    }

    fn w_out_off(&self) -> usize {
        2 * self.dir_len()
    }

    fn b_out_off(&self) -> usize {
        self.w_out_off() + self.n_out * 2 * self.hidden
    }

    fn param_count(&self) -> usize {
        self.b_out_off() + self.n_out
    }
}

/// All trainable parameters plus the seed they were initialized from.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    config: ModelConfig,
    init_seed: u64,
    params: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
fn dot_f32(w: &[f64], x: &[f32]) -> f64 {
    w.iter().zip(x).map(|(&w, &x)| w * x as f64).sum()
}

#[inline]
fn dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(&w, &x)| w * x).sum()
}

#[inline]
fn axpy_f32(acc: &mut [f64], a: f64, x: &[f32]) {
    for (acc, &x) in acc.iter_mut().zip(x) {
        *acc += a * x as f64;
    }
}

#[inline]
fn axpy(acc: &mut [f64], a: f64, x: &[f64]) {
    for (acc, &x) in acc.iter_mut().zip(x) {
        *acc += a * x;
    }
}

/// Per-frame activations of one direction, kept for backprop.
struct DirCache {
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    c: Vec<f64>,
    tc: Vec<f64>,
}

impl DirCache {
    fn new(t_len: usize, hidden: usize) -> Self {
        let zeros = || vec![0.0; t_len * hidden];
        Self {
            i: zeros(),
            f: zeros(),
            g: zeros(),
            o: zeros(),
            c: zeros(),
            tc: zeros(),
        }
    }
}

impl ModelState {
    /// Seeded uniform init in `[-init_scale, init_scale]`, except forget-gate
    /// biases which are shifted by +1.0 to keep early memory stable.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let layout = Layout::of(&config);
        let mut rng = Pcg64Mcg::seed_from_u64(seed);
        let scale = config.init_scale;
        let mut params: Vec<f64> = (0..layout.param_count())
            .map(|_| rng.random::<f64>() * 2.0 * scale - scale)
            .collect();
        for dir in 0..2 {
            let off = layout.b_off(dir) + FORGET_BLOCK * layout.hidden;
            for b in &mut params[off..off + layout.hidden] {
                *b += 1.0;
            }
        }
        Ok(Self {
            config,
            init_seed: seed,
            params,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn init_seed(&self) -> u64 {
        self.init_seed
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Raw parameter access for finite-difference probes.
    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn layout(&self) -> Layout {
        Layout::of(&self.config)
    }

    fn check_frames(&self, frames: &FrameMatrix) -> Result<()> {
        if frames.cols() != self.config.input_dim {
            return Err(Error::DimensionMismatch(format!(
                "frames are {} wide but the model expects {}",
                frames.cols(),
                self.config.input_dim
            )));
        }
        if frames.rows() == 0 {
            return Err(Error::DimensionMismatch("need at least one frame".into()));
        }
        Ok(())
    }

    /// One direction of the recurrence; returns h for every frame, indexed
    /// by frame (not by processing step).
    fn run_direction(
        &self,
        frames: &FrameMatrix,
        dir: usize,
        mut cache: Option<&mut DirCache>,
    ) -> Vec<f64> {
        let layout = self.layout();
        let hidden = layout.hidden;
        let gates = layout.gates();
        let t_len = frames.rows();
        let wx = &self.params[layout.wx_off(dir)..layout.wx_off(dir) + layout.wx_len()];
        let wh = &self.params[layout.wh_off(dir)..layout.wh_off(dir) + layout.wh_len()];
        let bias = &self.params[layout.b_off(dir)..layout.b_off(dir) + gates];

        let mut h_all = vec![0.0; t_len * hidden];
        let mut h_prev = vec![0.0; hidden];
        let mut c_prev = vec![0.0; hidden];
        let mut pre = vec![0.0; gates];

        for step in 0..t_len {
            let t = if dir == 0 { step } else { t_len - 1 - step };
            let x = frames.row(t);
            for r in 0..gates {
                pre[r] = bias[r]
                    + dot_f32(&wx[r * layout.input_dim..(r + 1) * layout.input_dim], x)
                    + dot(&wh[r * hidden..(r + 1) * hidden], &h_prev);
            }
            let h_row = &mut h_all[t * hidden..(t + 1) * hidden];
            for u in 0..hidden {
                let i = sigmoid(pre[u]);
                let f = sigmoid(pre[hidden + u]);
                let g = pre[2 * hidden + u].tanh();
                let o = sigmoid(pre[3 * hidden + u]);
                let c = f * c_prev[u] + i * g;
                let tc = c.tanh();
                h_row[u] = o * tc;
                c_prev[u] = c;
                if let Some(cache) = cache.as_deref_mut() {
                    let at = t * hidden + u;
                    cache.i[at] = i;
                    cache.f[at] = f;
                    cache.g[at] = g;
                    cache.o[at] = o;
                    cache.c[at] = c;
                    cache.tc[at] = tc;
                }
            }
            h_prev.copy_from_slice(h_row);
        }
        h_all
    }

    /// Softmax output rows from the two directions' hidden states.
    fn output_lattice(&self, h_fwd: &[f64], h_bwd: &[f64], t_len: usize) -> Result<PosteriorLattice> {
        let layout = self.layout();
        let hidden = layout.hidden;
        let n = layout.n_out;
        let w_out = &self.params[layout.w_out_off()..layout.w_out_off() + n * 2 * hidden];
        let b_out = &self.params[layout.b_out_off()..layout.b_out_off() + n];

        let mut probs = vec![0.0; t_len * n];
        let mut z = vec![0.0; n];
        for t in 0..t_len {
            let hf = &h_fwd[t * hidden..(t + 1) * hidden];
            let hb = &h_bwd[t * hidden..(t + 1) * hidden];
            for k in 0..n {
                let row = &w_out[k * 2 * hidden..(k + 1) * 2 * hidden];
                z[k] = b_out[k] + dot(&row[..hidden], hf) + dot(&row[hidden..], hb);
                if !z[k].is_finite() {
                    return Err(Error::NonFinite("forward activations".into()));
                }
            }
            let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for zk in z.iter_mut() {
                *zk = (*zk - max).exp();
                sum += *zk;
            }
            let row = &mut probs[t * n..(t + 1) * n];
            for (rk, &zk) in row.iter_mut().zip(&z) {
                *rk = zk / sum;
            }
        }
        PosteriorLattice::new(t_len, n, probs)
    }

    /// Per-frame label posteriors for one input sequence. Deterministic
    /// given the parameters and frames.
    pub fn forward(&self, frames: &FrameMatrix) -> Result<PosteriorLattice> {
        self.check_frames(frames)?;
        let h_fwd = self.run_direction(frames, 0, None);
        let h_bwd = self.run_direction(frames, 1, None);
        self.output_lattice(&h_fwd, &h_bwd, frames.rows())
    }

    /// Backprop through one direction. `dh_out` holds the loss gradient on
    /// this direction's hidden states, indexed by frame.
    #[allow(clippy::too_many_arguments)]
    fn backprop_direction(
        &self,
        frames: &FrameMatrix,
        dir: usize,
        h_all: &[f64],
        cache: &DirCache,
        dh_out: &[f64],
        grads: &mut [f64],
    ) {
        let layout = self.layout();
        let hidden = layout.hidden;
        let gates = layout.gates();
        let t_len = frames.rows();
        let wh_off = layout.wh_off(dir);
        let wh = &self.params[wh_off..wh_off + layout.wh_len()];

        let mut dh_carry = vec![0.0; hidden];
        let mut dc_carry = vec![0.0; hidden];
        let mut da = vec![0.0; gates];
        let zeros = vec![0.0; hidden];

        for step in (0..t_len).rev() {
            let t = if dir == 0 { step } else { t_len - 1 - step };
            let prev_t = if step > 0 {
                Some(if dir == 0 { t - 1 } else { t + 1 })
            } else {
                None
            };
            let h_prev = prev_t.map_or(&zeros[..], |p| &h_all[p * hidden..(p + 1) * hidden]);
            let c_prev = prev_t.map_or(&zeros[..], |p| &cache.c[p * hidden..(p + 1) * hidden]);

            for u in 0..hidden {
                let at = t * hidden + u;
                let (i, f, g, o) = (cache.i[at], cache.f[at], cache.g[at], cache.o[at]);
                let tc = cache.tc[at];
                let dh = dh_out[at] + dh_carry[u];
                let dc = dc_carry[u] + dh * o * (1.0 - tc * tc);
                let d_o = dh * tc;
                let d_f = dc * c_prev[u];
                let d_i = dc * g;
                let d_g = dc * i;
                da[u] = d_i * i * (1.0 - i);
                da[hidden + u] = d_f * f * (1.0 - f);
                da[2 * hidden + u] = d_g * (1.0 - g * g);
                da[3 * hidden + u] = d_o * o * (1.0 - o);
                dc_carry[u] = dc * f;
            }

            let x = frames.row(t);
            dh_carry.fill(0.0);
            for r in 0..gates {
                let a = da[r];
                if a == 0.0 {
                    continue;
                }
                let gwx = layout.wx_off(dir) + r * layout.input_dim;
                axpy_f32(&mut grads[gwx..gwx + layout.input_dim], a, x);
                let gwh = layout.wh_off(dir) + r * hidden;
                axpy(&mut grads[gwh..gwh + hidden], a, h_prev);
                grads[layout.b_off(dir) + r] += a;
                axpy(&mut dh_carry, a, &wh[r * hidden..(r + 1) * hidden]);
            }
        }
    }

    /// CTC loss of one sample and its gradient over the flat parameter
    /// vector, without updating anything.
    pub fn loss_and_grad(&self, frames: &FrameMatrix, target: &[Label]) -> Result<(f64, Vec<f64>)> {
        self.check_frames(frames)?;
        let layout = self.layout();
        let hidden = layout.hidden;
        let t_len = frames.rows();

        let mut cache_fwd = DirCache::new(t_len, hidden);
        let mut cache_bwd = DirCache::new(t_len, hidden);
        let h_fwd = self.run_direction(frames, 0, Some(&mut cache_fwd));
        let h_bwd = self.run_direction(frames, 1, Some(&mut cache_bwd));
        let lattice = self.output_lattice(&h_fwd, &h_bwd, t_len)?;

        let (nll, dz) = ctc_nll_grad(&lattice, target)?;

        let n = layout.n_out;
        let w_out = &self.params[layout.w_out_off()..layout.w_out_off() + n * 2 * hidden];
        let mut grads = vec![0.0; self.params.len()];
        let mut dh_fwd = vec![0.0; t_len * hidden];
        let mut dh_bwd = vec![0.0; t_len * hidden];

        for t in 0..t_len {
            let dz_row = &dz[t * n..(t + 1) * n];
            let hf = &h_fwd[t * hidden..(t + 1) * hidden];
            let hb = &h_bwd[t * hidden..(t + 1) * hidden];
            let dhf = &mut dh_fwd[t * hidden..(t + 1) * hidden];
            let dhb = &mut dh_bwd[t * hidden..(t + 1) * hidden];
            for k in 0..n {
                let gk = dz_row[k];
                if gk == 0.0 {
                    continue;
                }
                let go = layout.w_out_off() + k * 2 * hidden;
                axpy(&mut grads[go..go + hidden], gk, hf);
                axpy(&mut grads[go + hidden..go + 2 * hidden], gk, hb);
                grads[layout.b_out_off() + k] += gk;
                let row = &w_out[k * 2 * hidden..(k + 1) * 2 * hidden];
                axpy(dhf, gk, &row[..hidden]);
                axpy(dhb, gk, &row[hidden..]);
            }
        }

        self.backprop_direction(frames, 0, &h_fwd, &cache_fwd, &dh_fwd, &mut grads);
        self.backprop_direction(frames, 1, &h_bwd, &cache_bwd, &dh_bwd, &mut grads);

        if grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("gradient".into()));
        }
        Ok((nll, grads))
    }

    /// One SGD step on a single sample: full forward, CTC loss, full
    /// backprop, then `theta -= lr * grad`. Returns the pre-update NLL.
    ///
    /// Infeasible targets surface as [`Error::InfeasibleTarget`] without
    /// touching the parameters; a non-finite gradient is a hard error.
    pub fn sgd_step(&mut self, frames: &FrameMatrix, target: &[Label], lr: f64) -> Result<f64> {
        let (nll, grads) = self.loss_and_grad(frames, target)?;
        for (p, g) in self.params.iter_mut().zip(&grads) {
            *p -= lr * g;
        }
        Ok(nll)
    }
}

/// Versioned on-disk snapshot: config, flat parameters and the training RNG
/// state. The save/load round trip is bit-exact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: ModelConfig,
    pub init_seed: u64,
    /// Base64 of the parameter vector as little-endian f64 bytes.
    params: String,
    pub sampler_rng: Pcg64Mcg,
}

const CHECKPOINT_VERSION: u32 = 1;

impl Checkpoint {
    pub fn new(model: &ModelState, sampler_rng: &Pcg64Mcg) -> Self {
        let mut bytes = Vec::with_capacity(model.params.len() * 8);
        for p in &model.params {
            bytes.extend_from_slice(&p.to_le_bytes());
        }
        Self {
            version: CHECKPOINT_VERSION,
            config: model.config.clone(),
            init_seed: model.init_seed,
            params: BASE64.encode(bytes),
            sampler_rng: sampler_rng.clone(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut out, self)
            .map_err(|e| Error::BadCheckpoint(e.to_string()))?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let checkpoint: Checkpoint =
            serde_json::from_reader(reader).map_err(|e| Error::BadCheckpoint(e.to_string()))?;
        if checkpoint.version != CHECKPOINT_VERSION {
            return Err(Error::BadCheckpoint(format!(
                "unsupported version {}",
                checkpoint.version
            )));
        }
        Ok(checkpoint)
    }

    /// Reconstruct the model and the training RNG it was saved with.
    pub fn into_parts(self) -> Result<(ModelState, Pcg64Mcg)> {
        self.config.validate()?;
        let bytes = BASE64
            .decode(&self.params)
            .map_err(|e| Error::BadCheckpoint(e.to_string()))?;
        if bytes.len() % 8 != 0 {
            return Err(Error::BadCheckpoint(
                "parameter payload is not f64-aligned".into(),
            ));
        }
        let params: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]]))
            .collect();
        let expected = self.config.param_count();
        if params.len() != expected {
            return Err(Error::BadCheckpoint(format!(
                "expected {expected} parameters for this config, found {}",
                params.len()
            )));
        }
        Ok((
            ModelState {
                config: self.config,
                init_seed: self.init_seed,
                params,
            },
            self.sampler_rng,
        ))
    }
}
