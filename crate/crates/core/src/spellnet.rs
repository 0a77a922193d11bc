//! The correction network: a small residual 1-D convolution stack that maps a
//! 36×10 matrix of per-letter distributions to a 36×10 matrix of corrected
//! per-letter distributions. Also training-data generation, the training loop
//! and the binary checkpoint and dataset formats.

use std::io::{Read, Write};
use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::alphabet::{one_hot, Symbol, SymbolSequence, MAX_WORD_LEN, NUM_CLASSES, NUM_GESTURES};
use crate::channel::{hardmax, to_distribution, ConfusionModel, Distribution, VariantSpec};
use crate::error::{shape_err, Error, Result};
use crate::lexicon::Lexicon;
use crate::nn::{
    softmax_batch, softmax_cross_entropy, Adam, Batch, BatchNorm1d, BnMode, Conv1d, Differentiable, LeakyRelu,
    Param, Scalar, Tensor2,
};
use crate::rng;

const CHECKPOINT_MAGIC: &[u8; 8] = b"SSPLNET\0";
const DATASET_MAGIC: &[u8; 8] = b"SSPLDATA";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SpellNetConfig {
    pub num_residual_blocks: usize,
    pub block_width: usize,
    pub stem_kernel: usize,
    pub block_kernel: usize,
    pub head_kernel: usize,
    pub leaky_slope: f64,
}

impl Default for SpellNetConfig {
    fn default() -> Self {
        SpellNetConfig {
            num_residual_blocks: 2,
            block_width: 64,
            stem_kernel: 3,
            block_kernel: 3,
            head_kernel: 1,
            leaky_slope: 0.01,
        }
    }
}

impl SpellNetConfig {
    pub fn validate(&self) -> Result<()> {
        let odd = [self.stem_kernel, self.block_kernel, self.head_kernel]
            .iter()
            .all(|k| k % 2 == 1);
        if !odd || self.block_width == 0 || !(self.leaky_slope.is_finite() && self.leaky_slope >= 0.0) {
            return Err(Error::InvalidParameter(format!("invalid network config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Block<T> {
    conv_a: Conv1d<T>,
    act_a: LeakyRelu<T>,
    bn_a: BatchNorm1d<T>,
    conv_b: Conv1d<T>,
    act_b: LeakyRelu<T>,
    bn_b: BatchNorm1d<T>,
}

impl<T: Scalar> Block<T> {
    fn new(cfg: &SpellNetConfig) -> Result<Self> {
        let (w, k, slope) = (cfg.block_width, cfg.block_kernel, T::lit(cfg.leaky_slope));
        Ok(Block {
            conv_a: Conv1d::new(k, w, w)?,
            act_a: LeakyRelu::new(slope),
            bn_a: BatchNorm1d::new(w),
            conv_b: Conv1d::new(k, w, w)?,
            act_b: LeakyRelu::new(slope),
            bn_b: BatchNorm1d::new(w),
        })
    }

    fn forward(&mut self, x: &Batch<T>) -> Result<Batch<T>> {
        let h = self.bn_a.forward(&self.act_a.forward(&self.conv_a.forward(x)?))?;
        let mut z = self.conv_b.forward(&h)?;
        z.add_assign(x)?;
        self.bn_b.forward(&self.act_b.forward(&z))
    }

    fn predict(&self, x: &Batch<T>) -> Result<Batch<T>> {
        let h = self.bn_a.predict(&self.act_a.predict(&self.conv_a.predict(x)?))?;
        let mut z = self.conv_b.predict(&h)?;
        z.add_assign(x)?;
        self.bn_b.predict(&self.act_b.predict(&z))
    }

    fn backward(&mut self, dy: &Batch<T>) -> Result<Batch<T>> {
        let dz = self.act_b.backward(&self.bn_b.backward(dy)?)?;
        let dh = self.conv_b.backward(&dz)?;
        let mut dx = self.conv_a.backward(&self.act_a.backward(&self.bn_a.backward(&dh)?)?)?;
        dx.add_assign(&dz)?;
        Ok(dx)
    }
}

/// The network. Column softmax of `head(body(x)) + x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpellNet<T> {
    config: SpellNetConfig,
    stem: Conv1d<T>,
    stem_act: LeakyRelu<T>,
    stem_bn: BatchNorm1d<T>,
    blocks: Vec<Block<T>>,
    head: Conv1d<T>,
}

impl<T: Scalar> SpellNet<T> {
    /// He-initialised body, zero head, so a fresh net preserves the input argmax.
    pub fn build(config: SpellNetConfig, seed: u64) -> Result<Self> {
        let mut net = SpellNet::zeroed(config)?;
        let mut rng = rng::seeded(seed);
        net.stem.init_he(&mut rng);
        for b in &mut net.blocks {
            b.conv_a.init_he(&mut rng);
            b.conv_b.init_he(&mut rng);
        }
        Ok(net)
    }

    /// All conv weights zero; batch norms at identity.
    pub fn zeroed(config: SpellNetConfig) -> Result<Self> {
        config.validate()?;
        let w = config.block_width;
        let slope = T::lit(config.leaky_slope);
        Ok(SpellNet {
            stem: Conv1d::new(config.stem_kernel, NUM_CLASSES, w)?,
            stem_act: LeakyRelu::new(slope),
            stem_bn: BatchNorm1d::new(w),
            blocks: (0..config.num_residual_blocks)
                .map(|_| Block::new(&config))
                .collect::<Result<_>>()?,
            head: Conv1d::new(config.head_kernel, w, NUM_CLASSES)?,
            config,
        })
    }

    pub fn config(&self) -> &SpellNetConfig {
        &self.config
    }

    pub fn head_mut(&mut self) -> &mut Conv1d<T> {
        &mut self.head
    }

    fn norms_mut(&mut self) -> Vec<&mut BatchNorm1d<T>> {
        let mut out = vec![&mut self.stem_bn];
        for b in &mut self.blocks {
            out.push(&mut b.bn_a);
            out.push(&mut b.bn_b);
        }
        out
    }

    pub fn set_mode(&mut self, mode: BnMode) {
        for bn in self.norms_mut() {
            bn.mode = mode;
        }
    }

    /// Trainable parameters in declaration order.
    pub fn params(&self) -> Vec<&Param<T>> {
        let mut out: Vec<&Param<T>> = Vec::new();
        out.extend(self.stem.params());
        out.extend(self.stem_bn.params());
        for b in &self.blocks {
            out.extend(b.conv_a.params());
            out.extend(b.bn_a.params());
            out.extend(b.conv_b.params());
            out.extend(b.bn_b.params());
        }
        out.extend(self.head.params());
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    fn check_input(&self, x: &Batch<T>) -> Result<()> {
        if x.channels() != NUM_CLASSES || x.length() != MAX_WORD_LEN {
            return Err(shape_err(
                format!("{NUM_CLASSES}x{MAX_WORD_LEN}"),
                format!("{}x{}", x.channels(), x.length()),
            ));
        }
        Ok(())
    }

    /// Logits with batch norm in its current mode, recording for backward.
    fn forward_train(&mut self, x: &Batch<T>) -> Result<Batch<T>> {
        self.check_input(x)?;
        let mut h = self.stem_bn.forward(&self.stem_act.forward(&self.stem.forward(x)?))?;
        for b in &mut self.blocks {
            h = b.forward(&h)?;
        }
        let mut logits = self.head.forward(&h)?;
        logits.add_assign(x)?;
        Ok(logits)
    }

    fn backward(&mut self, dlogits: &Batch<T>) -> Result<()> {
        let mut d = self.head.backward(dlogits)?;
        for b in self.blocks.iter_mut().rev() {
            d = b.backward(&d)?;
        }
        let d = self.stem_act.backward(&self.stem_bn.backward(&d)?)?;
        self.stem.backward_params(&d)
    }

    /// Inference-mode logits.
    pub fn logits(&self, x: &Batch<T>) -> Result<Batch<T>> {
        self.check_input(x)?;
        let mut h = self.stem_bn.predict(&self.stem_act.predict(&self.stem.predict(x)?))?;
        for b in &self.blocks {
            h = b.predict(&h)?;
        }
        let mut logits = self.head.predict(&h)?;
        logits.add_assign(x)?;
        Ok(logits)
    }

    /// Column-stochastic output for a batch, batch norm on running statistics.
    pub fn forward_batch(&self, x: &Batch<T>) -> Result<Batch<T>> {
        Ok(softmax_batch(&self.logits(x)?))
    }

    pub fn forward(&self, input: &Tensor2<T>) -> Result<Tensor2<T>> {
        let batch = Batch::stack(std::slice::from_ref(input))?;
        Ok(self.forward_batch(&batch)?.sample(0))
    }

    pub fn predict_word(&self, input: &Tensor2<T>) -> Result<SymbolSequence> {
        decode_columns(&self.forward(input)?.column_argmax())
    }

    /// One optimisation step on a batch; returns the loss and the per-column argmax.
    fn train_step(&mut self, adam: &mut Adam<T>, input: &Batch<T>, target: &Batch<T>) -> Result<(T, Vec<usize>)> {
        let logits = self.forward_train(input)?;
        let (probs, loss, grad) = softmax_cross_entropy(&logits, target)?;
        self.backward(&grad)?;
        adam.step(&mut self.params_mut_vec())?;
        Ok((loss, probs.column_argmax()))
    }

    fn params_mut_vec(&mut self) -> Vec<&mut Param<T>> {
        let mut out: Vec<&mut Param<T>> = Vec::new();
        out.extend(self.stem.params_mut());
        out.extend(self.stem_bn.params_mut());
        for b in &mut self.blocks {
            out.extend(b.conv_a.params_mut());
            out.extend(b.bn_a.params_mut());
            out.extend(b.conv_b.params_mut());
            out.extend(b.bn_b.params_mut());
        }
        out.extend(self.head.params_mut());
        out
    }

    /// Every stored number in checkpoint order: parameters, with each batch
    /// norm's running mean and variance after its beta.
    fn state(&self) -> Vec<&[T]> {
        let mut out: Vec<&[T]> = Vec::new();
        fn push_conv<'a, T: Scalar>(out: &mut Vec<&'a [T]>, c: &'a Conv1d<T>) {
            out.push(&c.weight.value);
            out.push(&c.bias.value);
        }
        fn push_bn<'a, T: Scalar>(out: &mut Vec<&'a [T]>, bn: &'a BatchNorm1d<T>) {
            out.push(&bn.gamma.value);
            out.push(&bn.beta.value);
            out.push(&bn.running_mean);
            out.push(&bn.running_var);
        }
        push_conv(&mut out, &self.stem);
        push_bn(&mut out, &self.stem_bn);
        for b in &self.blocks {
            push_conv(&mut out, &b.conv_a);
            push_bn(&mut out, &b.bn_a);
            push_conv(&mut out, &b.conv_b);
            push_bn(&mut out, &b.bn_b);
        }
        push_conv(&mut out, &self.head);
        out
    }

    fn state_mut(&mut self) -> Vec<&mut Vec<T>> {
        fn push_conv<'a, T: Scalar>(out: &mut Vec<&'a mut Vec<T>>, c: &'a mut Conv1d<T>) {
            out.push(&mut c.weight.value);
            out.push(&mut c.bias.value);
        }
        fn push_bn<'a, T: Scalar>(out: &mut Vec<&'a mut Vec<T>>, bn: &'a mut BatchNorm1d<T>) {
            out.push(&mut bn.gamma.value);
            out.push(&mut bn.beta.value);
            out.push(&mut bn.running_mean);
            out.push(&mut bn.running_var);
        }
        let mut out = Vec::new();
        push_conv(&mut out, &mut self.stem);
        push_bn(&mut out, &mut self.stem_bn);
        for b in &mut self.blocks {
            push_conv(&mut out, &mut b.conv_a);
            push_bn(&mut out, &mut b.bn_a);
            push_conv(&mut out, &mut b.conv_b);
            push_bn(&mut out, &mut b.bn_b);
        }
        push_conv(&mut out, &mut self.head);
        out
    }

    /// Binary checkpoint: magic, version, config, then every stored number as
    /// a little-endian f64.
    pub fn write_checkpoint<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        let c = &self.config;
        for v in [
            NUM_CLASSES,
            MAX_WORD_LEN,
            c.num_residual_blocks,
            c.block_width,
            c.stem_kernel,
            c.block_kernel,
            c.head_kernel,
        ] {
            w.write_all(&(v as u32).to_le_bytes())?;
        }
        w.write_all(&c.leaky_slope.to_le_bytes())?;
        for arr in self.state() {
            for v in arr {
                w.write_all(&v.as_f64().to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Self> {
        let bad = |reason: &str| Error::Format {
            what: "checkpoint",
            reason: reason.into(),
        };
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(bad("bad magic"));
        }
        if read_u32(&mut r)? != FORMAT_VERSION {
            return Err(bad("unsupported version"));
        }
        let mut dims = [0usize; 7];
        for d in &mut dims {
            *d = read_u32(&mut r)? as usize;
        }
        if dims[0] != NUM_CLASSES || dims[1] != MAX_WORD_LEN {
            return Err(bad("unexpected input shape"));
        }
        let config = SpellNetConfig {
            num_residual_blocks: dims[2],
            block_width: dims[3],
            stem_kernel: dims[4],
            block_kernel: dims[5],
            head_kernel: dims[6],
            leaky_slope: read_f64(&mut r)?,
        };
        let mut net = SpellNet::zeroed(config)?;
        for arr in net.state_mut() {
            for v in arr.iter_mut() {
                *v = T::lit(read_f64(&mut r).map_err(|_| bad("truncated parameters"))?);
            }
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(bad("trailing bytes"));
        }
        net.set_mode(BnMode::Infer);
        Ok(net)
    }
}

impl<T: Scalar> Differentiable<T> for SpellNet<T> {
    fn loss(&mut self, input: &Batch<T>, target: &Batch<T>) -> Result<T> {
        let logits = self.forward_train(input)?;
        Ok(softmax_cross_entropy(&logits, target)?.1)
    }

    fn loss_and_grad(&mut self, input: &Batch<T>, target: &Batch<T>) -> Result<T> {
        let logits = self.forward_train(input)?;
        let (_, loss, grad) = softmax_cross_entropy(&logits, target)?;
        self.backward(&grad)?;
        Ok(loss)
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        self.params_mut_vec()
    }

    fn kink_pattern(&self) -> Vec<bool> {
        let acts = std::iter::once(&self.stem_act).chain(self.blocks.iter().flat_map(|b| [&b.act_a, &b.act_b]));
        acts.flat_map(|a| a.mask().unwrap_or(&[]).iter().copied()).collect()
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Argmax symbols to a word: the trailing run of OOV columns is dropped, any
/// other OOV is an error.
pub fn decode_columns(argmax: &[usize]) -> Result<SymbolSequence> {
    let end = argmax.iter().rposition(|&c| c != Symbol::OOV.index()).map_or(0, |p| p + 1);
    if end == 0 {
        return Err(Error::EmptyPrediction);
    }
    if argmax[..end].iter().any(|&c| c == Symbol::OOV.index()) {
        return Err(Error::InteriorOov);
    }
    let symbols = argmax[..end].iter().map(|&c| Symbol::from_index(c).unwrap()).collect();
    SymbolSequence::new(symbols)
}

/// Lays out one distribution per letter as columns, padding with one-hot OOV.
pub fn input_matrix<T: Scalar>(distributions: &[Distribution]) -> Result<Tensor2<T>> {
    if distributions.len() > MAX_WORD_LEN {
        return Err(Error::WordTooLong(distributions.len()));
    }
    let mut t = Tensor2::zeros(NUM_CLASSES, MAX_WORD_LEN);
    for (l, d) in distributions.iter().enumerate() {
        for (c, &p) in d.iter().enumerate() {
            t.set(c, l, T::lit(p));
        }
    }
    for l in distributions.len()..MAX_WORD_LEN {
        t.set(Symbol::OOV.index(), l, T::one());
    }
    Ok(t)
}

/// One-hot columns of `word`, padded with OOV.
pub fn target_matrix<T: Scalar>(word: &[Symbol]) -> Result<Tensor2<T>> {
    let cols: Vec<Distribution> = word.iter().map(|&s| one_hot(s)).collect();
    input_matrix(&cols)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair<T> {
    pub input: Tensor2<T>,
    pub target: Tensor2<T>,
}

impl<T: Scalar> TrainingPair<T> {
    /// The ground-truth word, read back from the target.
    pub fn truth(&self) -> Result<SymbolSequence> {
        decode_columns(&self.target.column_argmax())
    }

    /// Number of real letters (columns before the OOV padding).
    pub fn word_len(&self) -> usize {
        let oov = Symbol::OOV.index();
        (0..MAX_WORD_LEN)
            .position(|l| self.target.get(oov, l) == T::one())
            .unwrap_or(MAX_WORD_LEN)
    }
}

/// Pre-drawn channel outputs per gesture, standing in for a finite set of
/// recorded classifier outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBuffer {
    pools: Vec<Vec<Distribution>>,
}

impl SampleBuffer {
    pub const DEFAULT_SIZE: usize = 80;

    /// `size` softmax outputs per gesture.
    pub fn new<R: Rng + ?Sized>(model: &ConfusionModel, size: usize, rng: &mut R) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidParameter("buffer size must be positive".into()));
        }
        let mut pools = Vec::with_capacity(NUM_GESTURES);
        for s in Symbol::gestures() {
            let mut pool = Vec::with_capacity(size);
            for _ in 0..size {
                let logits = model.sample_logits(s, rng)?;
                pool.push(to_distribution(&logits, &VariantSpec::Softmax, model.temperature, rng));
            }
            pools.push(pool);
        }
        Ok(SampleBuffer { pools })
    }

    pub fn size(&self) -> usize {
        self.pools[0].len()
    }

    pub fn pool(&self, s: Symbol) -> &[Distribution] {
        &self.pools[s.index()]
    }

    /// A uniformly chosen buffered output for `s`.
    pub fn draw<R: Rng + ?Sized>(&self, s: Symbol, rng: &mut R) -> Result<&Distribution> {
        if s.is_oov() {
            return Err(Error::TruthIsOov);
        }
        let pool = &self.pools[s.index()];
        Ok(&pool[rng.random_range(0..pool.len())])
    }
}

/// How training inputs are drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub n_pairs: usize,
    /// Buffer size for the softmax and mix variants.
    pub buffer_size: usize,
    pub lengths: Option<RangeInclusive<usize>>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            n_pairs: 9830,
            buffer_size: SampleBuffer::DEFAULT_SIZE,
            lengths: None,
        }
    }
}

/// Whether `variant` draws its training inputs from a [`SampleBuffer`].
pub fn uses_buffer(variant: &VariantSpec) -> bool {
    matches!(variant, VariantSpec::Softmax | VariantSpec::MixHardSoft { .. })
}

/// Training pairs from uniformly drawn lexicon words. Pair `i` uses its own
/// random stream, so the result does not depend on generation order.
pub fn generate_dataset<T: Scalar>(
    lex: &Lexicon,
    model: &ConfusionModel,
    variant: &VariantSpec,
    cfg: &DatasetConfig,
    seed: u64,
) -> Result<Vec<TrainingPair<T>>> {
    if lex.is_empty() {
        return Err(Error::EmptyLexicon);
    }
    variant.validate()?;
    let buffer = if uses_buffer(variant) {
        Some(SampleBuffer::new(model, cfg.buffer_size, &mut rng::seeded(rng::derive_seed(seed, 0xB0FF)))?)
    } else {
        None
    };
    let mut pairs = Vec::with_capacity(cfg.n_pairs);
    for i in 0..cfg.n_pairs {
        let mut r = rng::stream(seed, i as u64);
        let word = lex.sample_word(&mut r, cfg.lengths.clone())?;
        let mut cols = Vec::with_capacity(word.len());
        for &s in word.iter() {
            let d = match (&buffer, variant) {
                (Some(buf), VariantSpec::MixHardSoft { p_hard }) => {
                    let soft = buf.draw(s, &mut r)?;
                    if r.random_bool(*p_hard) {
                        let mut logits = [0.0; NUM_GESTURES];
                        logits.copy_from_slice(&soft[..NUM_GESTURES]);
                        hardmax(&logits)
                    } else {
                        *soft
                    }
                }
                (Some(buf), _) => *buf.draw(s, &mut r)?,
                (None, _) => {
                    let logits = model.sample_logits(s, &mut r)?;
                    to_distribution(&logits, variant, model.temperature, &mut r)
                }
            };
            cols.push(d);
        }
        pairs.push(TrainingPair {
            input: input_matrix(&cols)?,
            target: target_matrix(&word)?,
        });
    }
    Ok(pairs)
}

/// Dataset file: magic, version, pair count, shape, then each pair's input and
/// target as little-endian f64, channel-major.
pub fn write_dataset<T: Scalar, W: Write>(pairs: &[TrainingPair<T>], mut w: W) -> Result<()> {
    w.write_all(DATASET_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(pairs.len() as u64).to_le_bytes())?;
    w.write_all(&(NUM_CLASSES as u32).to_le_bytes())?;
    w.write_all(&(MAX_WORD_LEN as u32).to_le_bytes())?;
    for p in pairs {
        for v in p.input.values().iter().chain(p.target.values()) {
            w.write_all(&v.as_f64().to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_dataset<T: Scalar, R: Read>(mut r: R) -> Result<Vec<TrainingPair<T>>> {
    let bad = |reason: &str| Error::Format {
        what: "dataset",
        reason: reason.into(),
    };
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
    if &magic != DATASET_MAGIC {
        return Err(bad("bad magic"));
    }
    if read_u32(&mut r)? != FORMAT_VERSION {
        return Err(bad("unsupported version"));
    }
    let count = read_u64(&mut r)? as usize;
    if read_u32(&mut r)? as usize != NUM_CLASSES || read_u32(&mut r)? as usize != MAX_WORD_LEN {
        return Err(bad("unexpected shape"));
    }
    let cells = NUM_CLASSES * MAX_WORD_LEN;
    let mut pairs = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let mut read = || -> Result<Tensor2<T>> {
            let mut v = Vec::with_capacity(cells);
            for _ in 0..cells {
                v.push(T::lit(read_f64(&mut r).map_err(|_| bad("truncated pairs"))?));
            }
            Tensor2::from_vec(NUM_CLASSES, MAX_WORD_LEN, v)
        };
        let input = read()?;
        let target = read()?;
        pairs.push(TrainingPair { input, target });
    }
    Ok(pairs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 1024,
            learning_rate: 0.001,
            epochs: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean batch loss.
    pub loss: f64,
    /// Character accuracy over letter positions, measured during the epoch.
    pub char_accuracy: f64,
}

/// Mini-batch Adam on column-wise cross-entropy. Leaves the net in inference mode.
pub fn train<T: Scalar>(
    net: &mut SpellNet<T>,
    pairs: &[TrainingPair<T>],
    cfg: &TrainConfig,
) -> Result<Vec<EpochStats>> {
    if pairs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if cfg.batch_size == 0 || cfg.learning_rate.is_nan() || cfg.learning_rate <= 0.0 {
        return Err(Error::InvalidParameter("batch size and learning rate must be positive".into()));
    }
    let mut adam = Adam::new(T::lit(cfg.learning_rate));
    let mut rng = rng::seeded(cfg.seed);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let lens: Vec<usize> = pairs.iter().map(TrainingPair::word_len).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    net.set_mode(BnMode::Train);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut batches, mut hits, mut letters) = (0.0, 0usize, 0usize, 0usize);
        for chunk in order.chunks(cfg.batch_size) {
            let inputs: Vec<Tensor2<T>> = chunk.iter().map(|&i| pairs[i].input.clone()).collect();
            let targets: Vec<Tensor2<T>> = chunk.iter().map(|&i| pairs[i].target.clone()).collect();
            let (x, t) = (Batch::stack(&inputs)?, Batch::stack(&targets)?);
            let (loss, pred) = net.train_step(&mut adam, &x, &t)?;
            let truth = t.column_argmax();
            for (b, &i) in chunk.iter().enumerate() {
                let cols = b * MAX_WORD_LEN..b * MAX_WORD_LEN + lens[i];
                hits += cols.clone().filter(|&j| pred[j] == truth[j]).count();
                letters += lens[i];
            }
            loss_sum += loss.as_f64();
            batches += 1;
        }
        history.push(EpochStats {
            epoch: epoch + 1,
            loss: loss_sum / batches as f64,
            char_accuracy: hits as f64 / letters.max(1) as f64,
        });
    }
    net.set_mode(BnMode::Infer);
    Ok(history)
}

/// Inference-mode letter matches of the net on `pairs`: (correct, total letters).
pub fn character_matches<T: Scalar>(net: &SpellNet<T>, pairs: &[TrainingPair<T>]) -> Result<(usize, usize)> {
    let (mut hits, mut letters) = (0, 0);
    for chunk in pairs.chunks(1024) {
        let inputs: Vec<Tensor2<T>> = chunk.iter().map(|p| p.input.clone()).collect();
        let pred = net.logits(&Batch::stack(&inputs)?)?.column_argmax();
        for (b, p) in chunk.iter().enumerate() {
            let n = p.word_len();
            let truth = p.target.column_argmax();
            hits += (0..n).filter(|&l| pred[b * MAX_WORD_LEN + l] == truth[l]).count();
            letters += n;
        }
    }
    Ok((hits, letters))
}
