use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{shape_err, Error, Result};

use super::{Batch, Scalar, Tensor2};

/// A trainable array and its gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Param<T> {
    pub value: Vec<T>,
    pub grad: Vec<T>,
}

impl<T: Scalar> Param<T> {
    pub fn zeros(len: usize) -> Self {
        Param {
            value: vec![T::zero(); len],
            grad: vec![T::zero(); len],
        }
    }

    pub fn filled(len: usize, v: T) -> Self {
        Param {
            value: vec![v; len],
            grad: vec![T::zero(); len],
        }
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}

/// Same-padded 1-D cross-correlation along the length axis.
///
/// Weights are stored kernel-tap major: `weight[(tap * in + i) * out + o]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d<T> {
    kernel: usize,
    in_channels: usize,
    out_channels: usize,
    pub weight: Param<T>,
    pub bias: Param<T>,
    cache: Option<ConvCache<T>>,
}

#[derive(Debug, Clone, PartialEq)]
struct ConvCache<T> {
    col: Vec<T>,
    batch: usize,
    length: usize,
}

impl<T: Scalar> Conv1d<T> {
    /// Zero-initialised layer. The kernel size must be odd.
    pub fn new(kernel: usize, in_channels: usize, out_channels: usize) -> Result<Self> {
        if kernel.is_multiple_of(2) || in_channels == 0 || out_channels == 0 {
            return Err(Error::InvalidParameter(format!(
                "conv({kernel}, {in_channels}->{out_channels}) needs an odd kernel and positive widths"
            )));
        }
        Ok(Conv1d {
            kernel,
            in_channels,
            out_channels,
            weight: Param::zeros(kernel * in_channels * out_channels),
            bias: Param::zeros(out_channels),
            cache: None,
        })
    }

    /// Normal weights with fan-in variance 2 / (kernel · in).
    pub fn init_he<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let std = (2.0 / (self.kernel * self.in_channels) as f64).sqrt();
        for w in &mut self.weight.value {
            let g: f64 = StandardNormal.sample(rng);
            *w = T::lit(g * std);
        }
        self.bias.value.fill(T::zero());
    }

    pub fn kernel(&self) -> usize {
        self.kernel
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    #[inline]
    pub fn weight_at(&self, tap: usize, input: usize, output: usize) -> T {
        self.weight.value[(tap * self.in_channels + input) * self.out_channels + output]
    }

    #[inline]
    pub fn set_weight(&mut self, tap: usize, input: usize, output: usize, v: T) {
        self.weight.value[(tap * self.in_channels + input) * self.out_channels + output] = v;
    }

    pub fn params(&self) -> [&Param<T>; 2] {
        [&self.weight, &self.bias]
    }

    pub fn params_mut(&mut self) -> [&mut Param<T>; 2] {
        [&mut self.weight, &mut self.bias]
    }

    fn im2col(&self, x: &Batch<T>) -> Vec<T> {
        let (n, len, pad) = (x.cols(), x.length, self.kernel / 2);
        let rows = self.kernel * self.in_channels;
        let mut col = vec![T::zero(); rows * n];
        for tap in 0..self.kernel {
            // output position l reads input position l + tap - pad
            let shift = tap as isize - pad as isize;
            let lo = (-shift).max(0) as usize;
            let hi = (len as isize - shift).min(len as isize).max(0) as usize;
            for i in 0..self.in_channels {
                let src = x.row(i);
                let dst = &mut col[(tap * self.in_channels + i) * n..][..n];
                for b in 0..x.batch {
                    let base = b * len;
                    let from = (base + lo) as isize + shift;
                    dst[base + lo..base + hi].copy_from_slice(&src[from as usize..from as usize + (hi - lo)]);
                }
            }
        }
        col
    }

    fn apply(&self, col: &[T], n: usize) -> Vec<T> {
        let k = self.kernel * self.in_channels;
        let mut out = Vec::with_capacity(self.out_channels * n);
        for &b in &self.bias.value {
            out.extend(std::iter::repeat_n(b, n));
        }
        T::gemm(
            self.out_channels,
            k,
            n,
            T::one(),
            &self.weight.value,
            (1, self.out_channels as isize),
            col,
            (n as isize, 1),
            T::one(),
            &mut out,
            (n as isize, 1),
        );
        out
    }

    fn check_input(&self, x: &Batch<T>) -> Result<()> {
        if x.channels != self.in_channels {
            return Err(shape_err(
                format!("{} input channels", self.in_channels),
                format!("{} channels", x.channels),
            ));
        }
        Ok(())
    }

    /// Forward pass that records what backward needs.
    pub fn forward(&mut self, x: &Batch<T>) -> Result<Batch<T>> {
        self.check_input(x)?;
        let col = if self.kernel == 1 { x.data.clone() } else { self.im2col(x) };
        let data = self.apply(&col, x.cols());
        self.cache = Some(ConvCache {
            col,
            batch: x.batch,
            length: x.length,
        });
        Ok(Batch {
            channels: self.out_channels,
            batch: x.batch,
            length: x.length,
            data,
        })
    }

    /// Forward pass without recording.
    pub fn predict(&self, x: &Batch<T>) -> Result<Batch<T>> {
        self.check_input(x)?;
        let data = if self.kernel == 1 {
            self.apply(&x.data, x.cols())
        } else {
            self.apply(&self.im2col(x), x.cols())
        };
        Ok(Batch {
            channels: self.out_channels,
            batch: x.batch,
            length: x.length,
            data,
        })
    }

    /// Writes weight and bias gradients and returns the input gradient.
    pub fn backward(&mut self, dy: &Batch<T>) -> Result<Batch<T>> {
        self.backward_impl(dy, true).map(|dx| dx.expect("input gradient requested"))
    }

    /// Writes weight and bias gradients only.
    pub fn backward_params(&mut self, dy: &Batch<T>) -> Result<()> {
        self.backward_impl(dy, false).map(|_| ())
    }

    fn backward_impl(&mut self, dy: &Batch<T>, input_grad: bool) -> Result<Option<Batch<T>>> {
        let cache = self.cache.take().ok_or(Error::GraphNotRecorded)?;
        let n = cache.batch * cache.length;
        if dy.channels != self.out_channels || dy.cols() != n {
            return Err(shape_err(
                format!("{}x{}", self.out_channels, n),
                format!("{}x{}", dy.channels, dy.cols()),
            ));
        }
        let k = self.kernel * self.in_channels;
        // dWᵀ (k × out) = col · dyᵀ, which is the stored weight layout
        T::gemm(
            k,
            n,
            self.out_channels,
            T::one(),
            &cache.col,
            (n as isize, 1),
            &dy.data,
            (1, n as isize),
            T::zero(),
            &mut self.weight.grad,
            (self.out_channels as isize, 1),
        );
        for (o, g) in self.bias.grad.iter_mut().enumerate() {
            *g = lane_sum(dy.row(o));
        }
        if !input_grad {
            return Ok(None);
        }
        let mut dcol = vec![T::zero(); k * n];
        T::gemm(
            k,
            self.out_channels,
            n,
            T::one(),
            &self.weight.value,
            (self.out_channels as isize, 1),
            &dy.data,
            (n as isize, 1),
            T::zero(),
            &mut dcol,
            (n as isize, 1),
        );
        let mut dx = Batch::zeros(self.in_channels, cache.batch, cache.length);
        if self.kernel == 1 {
            dx.data = dcol;
            return Ok(Some(dx));
        }
        let (len, pad) = (cache.length, self.kernel / 2);
        for tap in 0..self.kernel {
            let shift = tap as isize - pad as isize;
            let lo = (-shift).max(0) as usize;
            let hi = (len as isize - shift).min(len as isize).max(0) as usize;
            for i in 0..self.in_channels {
                let src = &dcol[(tap * self.in_channels + i) * n..][..n];
                let dst = &mut dx.data[i * n..(i + 1) * n];
                for b in 0..cache.batch {
                    let base = b * len;
                    let to = ((base + lo) as isize + shift) as usize;
                    for (d, &v) in dst[to..to + (hi - lo)].iter_mut().zip(&src[base + lo..base + hi]) {
                        *d += v;
                    }
                }
            }
        }
        Ok(Some(dx))
    }
}

/// Sum with eight independent accumulators, which lets the compiler vectorise.
fn lane_sum<T: Scalar>(xs: &[T]) -> T {
    lane_fold(xs.len(), |i| xs[i])
}

fn lane_dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    lane_fold(a.len(), |i| a[i] * b[i])
}

#[inline(always)]
fn lane_fold<T: Scalar>(n: usize, f: impl Fn(usize) -> T) -> T {
    let mut acc = [T::zero(); 8];
    let full = n / 8 * 8;
    for base in (0..full).step_by(8) {
        for (l, a) in acc.iter_mut().enumerate() {
            *a += f(base + l);
        }
    }
    let mut total = acc.iter().copied().fold(T::zero(), |x, y| x + y);
    for i in full..n {
        total += f(i);
    }
    total
}

/// Elementwise `max(x, slope·x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeakyRelu<T> {
    pub slope: T,
    mask: Option<Vec<bool>>,
}

impl<T: Scalar> LeakyRelu<T> {
    pub fn new(slope: T) -> Self {
        LeakyRelu { slope, mask: None }
    }

    #[inline]
    fn f(&self, v: T) -> T {
        if v > T::zero() {
            v
        } else {
            v * self.slope
        }
    }

    pub fn forward(&mut self, x: &Batch<T>) -> Batch<T> {
        self.mask = Some(x.data.iter().map(|&v| v > T::zero()).collect());
        self.predict(x)
    }

    /// Signs recorded by the last `forward` that has not been consumed by
    /// `backward`.
    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    pub fn predict(&self, x: &Batch<T>) -> Batch<T> {
        Batch {
            data: x.data.iter().map(|&v| self.f(v)).collect(),
            ..*x
        }
    }

    pub fn backward(&mut self, dy: &Batch<T>) -> Result<Batch<T>> {
        let mask = self.mask.take().ok_or(Error::GraphNotRecorded)?;
        if mask.len() != dy.data.len() {
            return Err(shape_err(mask.len(), dy.data.len()));
        }
        Ok(Batch {
            data: dy
                .data
                .iter()
                .zip(&mask)
                .map(|(&g, &pos)| if pos { g } else { g * self.slope })
                .collect(),
            ..*dy
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnMode {
    /// Normalise with batch statistics and update the running averages.
    Train,
    /// Normalise with the running averages.
    Infer,
}

/// Per-channel batch normalisation over batch × length.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm1d<T> {
    pub gamma: Param<T>,
    pub beta: Param<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
    pub eps: T,
    pub momentum: T,
    pub mode: BnMode,
    cache: Option<BnCache<T>>,
}

#[derive(Debug, Clone, PartialEq)]
struct BnCache<T> {
    xhat: Vec<T>,
    inv_std: Vec<T>,
    mode: BnMode,
}

impl<T: Scalar> BatchNorm1d<T> {
    /// gamma = 1, beta = 0, running mean 0 and variance 1, eps 1e-5, momentum 0.1.
    pub fn new(channels: usize) -> Self {
        BatchNorm1d {
            gamma: Param::filled(channels, T::one()),
            beta: Param::zeros(channels),
            running_mean: vec![T::zero(); channels],
            running_var: vec![T::one(); channels],
            eps: T::lit(1e-5),
            momentum: T::lit(0.1),
            mode: BnMode::Train,
            cache: None,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    pub fn params(&self) -> [&Param<T>; 2] {
        [&self.gamma, &self.beta]
    }

    pub fn params_mut(&mut self) -> [&mut Param<T>; 2] {
        [&mut self.gamma, &mut self.beta]
    }

    fn check_input(&self, x: &Batch<T>) -> Result<()> {
        if x.channels != self.channels() {
            return Err(shape_err(self.channels(), x.channels));
        }
        if x.cols() == 0 {
            return Err(shape_err("non-empty batch", 0));
        }
        Ok(())
    }

    /// Normalises according to [`BatchNorm1d::mode`], recording for backward.
    pub fn forward(&mut self, x: &Batch<T>) -> Result<Batch<T>> {
        self.check_input(x)?;
        let n = x.cols();
        let nf = T::from_usize(n).unwrap();
        let mut out = x.clone();
        let mut xhat = vec![T::zero(); x.data.len()];
        let mut inv_stds = Vec::with_capacity(self.channels());
        for c in 0..self.channels() {
            let row = x.row(c);
            let (mean, inv_std) = match self.mode {
                BnMode::Train => {
                    let mean = lane_sum(row) / nf;
                    let var = lane_fold(n, |j| (row[j] - mean) * (row[j] - mean)) / nf;
                    let m = self.momentum;
                    self.running_mean[c] = (T::one() - m) * self.running_mean[c] + m * mean;
                    let unbiased = if n > 1 { var * nf / (nf - T::one()) } else { var };
                    self.running_var[c] = (T::one() - m) * self.running_var[c] + m * unbiased;
                    (mean, T::one() / (var + self.eps).sqrt())
                }
                BnMode::Infer => (
                    self.running_mean[c],
                    T::one() / (self.running_var[c] + self.eps).sqrt(),
                ),
            };
            let (g, b) = (self.gamma.value[c], self.beta.value[c]);
            let xh = &mut xhat[c * n..(c + 1) * n];
            let dst = &mut out.data[c * n..(c + 1) * n];
            for j in 0..n {
                xh[j] = (row[j] - mean) * inv_std;
                dst[j] = g * xh[j] + b;
            }
            inv_stds.push(inv_std);
        }
        self.cache = Some(BnCache {
            xhat,
            inv_std: inv_stds,
            mode: self.mode,
        });
        Ok(out)
    }

    /// Normalises with the running statistics; never records or updates state.
    pub fn predict(&self, x: &Batch<T>) -> Result<Batch<T>> {
        self.check_input(x)?;
        let n = x.cols();
        let mut out = x.clone();
        for c in 0..self.channels() {
            let inv_std = T::one() / (self.running_var[c] + self.eps).sqrt();
            let scale = self.gamma.value[c] * inv_std;
            let shift = self.beta.value[c] - self.running_mean[c] * scale;
            for v in &mut out.data[c * n..(c + 1) * n] {
                *v = *v * scale + shift;
            }
        }
        Ok(out)
    }

    pub fn backward(&mut self, dy: &Batch<T>) -> Result<Batch<T>> {
        let cache = self.cache.take().ok_or(Error::GraphNotRecorded)?;
        if cache.xhat.len() != dy.data.len() {
            return Err(shape_err(cache.xhat.len(), dy.data.len()));
        }
        let n = dy.cols();
        let nf = T::from_usize(n).unwrap();
        let mut dx = dy.clone();
        for c in 0..self.channels() {
            let g = self.gamma.value[c];
            let xh = &cache.xhat[c * n..(c + 1) * n];
            let d = dy.row(c);
            let sum_d = lane_sum(d);
            let sum_dx = lane_dot(d, xh);
            self.gamma.grad[c] = sum_dx;
            self.beta.grad[c] = sum_d;
            let inv_std = cache.inv_std[c];
            let dst = &mut dx.data[c * n..(c + 1) * n];
            match cache.mode {
                BnMode::Train => {
                    let k = g * inv_std / nf;
                    for j in 0..n {
                        dst[j] = k * (nf * d[j] - sum_d - xh[j] * sum_dx);
                    }
                }
                BnMode::Infer => {
                    for j in 0..n {
                        dst[j] = g * inv_std * d[j];
                    }
                }
            }
        }
        Ok(dx)
    }
}

/// Applies `params` to a single sequence.
pub fn conv1d<T: Scalar>(input: &Tensor2<T>, params: &Conv1d<T>) -> Result<Tensor2<T>> {
    let out = params.predict(&Batch::stack(std::slice::from_ref(input))?)?;
    Ok(out.sample(0))
}

pub fn leaky_relu<T: Scalar>(x: &Tensor2<T>, slope: T) -> Tensor2<T> {
    x.map(|v| if v > T::zero() { v } else { v * slope })
}

/// Batch normalisation of a list of sequences in the layer's current mode.
pub fn batchnorm<T: Scalar>(batch: &[Tensor2<T>], params: &mut BatchNorm1d<T>) -> Result<Vec<Tensor2<T>>> {
    let out = params.forward(&Batch::stack(batch)?)?;
    params.cache = None;
    Ok(out.unstack())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn rand_tensor(channels: usize, length: usize, seed: u64) -> Tensor2<f64> {
        let mut r = rng::seeded(seed);
        let v = (0..channels * length).map(|_| r.random_range(-1.0..1.0)).collect();
        Tensor2::from_vec(channels, length, v).unwrap()
    }

    /// Direct definition of same-padded cross-correlation.
    fn conv_reference(x: &Tensor2<f64>, p: &Conv1d<f64>) -> Tensor2<f64> {
        let pad = p.kernel() as isize / 2;
        let mut out = Tensor2::zeros(p.out_channels(), x.length());
        for o in 0..p.out_channels() {
            for l in 0..x.length() {
                let mut acc = p.bias.value[o];
                for tap in 0..p.kernel() {
                    let src = l as isize + tap as isize - pad;
                    if src < 0 || src >= x.length() as isize {
                        continue;
                    }
                    for i in 0..p.in_channels() {
                        acc += p.weight_at(tap, i, o) * x.get(i, src as usize);
                    }
                }
                out.set(o, l, acc);
            }
        }
        out
    }

    #[test]
    fn identity_kernel_1x1() {
        let mut p = Conv1d::new(1, 4, 4).unwrap();
        for c in 0..4 {
            p.set_weight(0, c, c, 1.0);
        }
        let x = rand_tensor(4, 10, 1);
        assert_eq!(conv1d(&x, &p).unwrap(), x);
    }

    #[test]
    fn zero_weights_emit_bias() {
        let mut p = Conv1d::new(3, 2, 3).unwrap();
        p.bias.value = vec![0.5, -1.0, 2.0];
        let out = conv1d(&rand_tensor(2, 10, 2), &p).unwrap();
        for o in 0..3 {
            for l in 0..10 {
                assert_eq!(out.get(o, l), p.bias.value[o]);
            }
        }
    }

    #[test]
    fn centered_delta_kernel() {
        let mut p = Conv1d::new(3, 1, 1).unwrap();
        p.weight.value = vec![0.0, 1.0, 0.0];
        let x = rand_tensor(1, 10, 3);
        assert_eq!(conv1d(&x, &p).unwrap(), x);
    }

    #[test]
    fn no_kernel_flip() {
        // tap 2 reads the right neighbour
        let mut p = Conv1d::new(3, 1, 1).unwrap();
        p.weight.value = vec![0.0, 0.0, 1.0];
        let x = Tensor2::from_vec(1, 4, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(conv1d(&x, &p).unwrap().values(), &[2.0, 3.0, 4.0, 0.0]);
    }

    #[test]
    fn matches_reference_on_batches() {
        let mut r = rng::seeded(4);
        for &(k, i, o) in &[(1, 3, 5), (3, 4, 2), (5, 2, 3)] {
            let mut p = Conv1d::new(k, i, o).unwrap();
            p.init_he(&mut r);
            p.bias.value.iter_mut().for_each(|b| *b = r.random_range(-1.0..1.0));
            let xs: Vec<_> = (0..3).map(|s| rand_tensor(i, 7, 10 + s)).collect();
            let out = p.predict(&Batch::stack(&xs).unwrap()).unwrap();
            for (b, x) in xs.iter().enumerate() {
                let want = conv_reference(x, &p);
                for (a, w) in out.sample(b).values().iter().zip(want.values()) {
                    assert!((a - w).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn even_kernel_rejected() {
        assert!(Conv1d::<f64>::new(2, 1, 1).is_err());
    }

    #[test]
    fn conv_shape_mismatch() {
        let p = Conv1d::<f64>::new(3, 2, 2).unwrap();
        assert!(matches!(conv1d(&rand_tensor(3, 10, 0), &p), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn backward_without_forward() {
        let mut p = Conv1d::<f64>::new(3, 2, 2).unwrap();
        let dy = Batch::zeros(2, 1, 10);
        assert_eq!(p.backward(&dy), Err(Error::GraphNotRecorded));
        let mut bn = BatchNorm1d::<f64>::new(2);
        assert_eq!(bn.backward(&dy), Err(Error::GraphNotRecorded));
        let mut act = LeakyRelu::new(0.01);
        assert_eq!(act.backward(&dy), Err(Error::GraphNotRecorded));
    }

    #[test]
    fn leaky_values() {
        let x = Tensor2::from_vec(1, 3, vec![2.0, -1.0, 0.0]).unwrap();
        assert_eq!(leaky_relu(&x, 0.01).values(), &[2.0, -0.01, 0.0]);
    }

    #[test]
    fn batchnorm_train_standardises() {
        let mut bn = BatchNorm1d::new(3);
        let batch: Vec<_> = (0..4).map(|s| rand_tensor(3, 10, 20 + s).map(|v| 30.0 * v + 1.5)).collect();
        let out = batchnorm(&batch, &mut bn).unwrap();
        for c in 0..3 {
            let vals: Vec<f64> = out.iter().flat_map(|t| (0..10).map(move |l| t.get(c, l))).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
            assert!(mean.abs() < 1e-9);
            assert!((var - 1.0).abs() < 1e-6, "var {var}");
        }
        // running stats moved toward the batch statistics
        assert!(bn.running_mean.iter().all(|&m| m != 0.0));
    }

    #[test]
    fn batchnorm_infer_identity() {
        let mut bn = BatchNorm1d::new(3);
        bn.mode = BnMode::Infer;
        let x = rand_tensor(3, 10, 5);
        let out = batchnorm(std::slice::from_ref(&x), &mut bn).unwrap();
        for (a, b) in out[0].values().iter().zip(x.values()) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn batchnorm_constant_output() {
        let mut bn = BatchNorm1d::new(2);
        bn.gamma.value = vec![0.0; 2];
        bn.beta.value = vec![5.0; 2];
        let out = batchnorm(&[rand_tensor(2, 10, 6), rand_tensor(2, 10, 7)], &mut bn).unwrap();
        assert!(out.iter().all(|t| t.values().iter().all(|&v| v == 5.0)));
    }

    #[test]
    fn batchnorm_running_variance_is_unbiased() {
        let mut bn = BatchNorm1d::<f64>::new(1);
        bn.momentum = 1.0;
        let x = Tensor2::from_vec(1, 4, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        batchnorm(&[x], &mut bn).unwrap();
        assert!((bn.running_mean[0] - 2.5).abs() < 1e-15);
        assert!((bn.running_var[0] - 5.0 / 3.0).abs() < 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn conv_is_linear(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
                let mut r = rng::seeded(seed);
                let mut p = Conv1d::new(3, 3, 4).unwrap();
                p.init_he(&mut r);
                let x = rand_tensor(3, 10, seed + 1);
                let y = rand_tensor(3, 10, seed + 2);
                let mix = Tensor2::from_vec(3, 10, x.values().iter().zip(y.values()).map(|(u, v)| a * u + b * v).collect()).unwrap();
                let lhs = conv1d(&mix, &p).unwrap();
                let (cx, cy) = (conv1d(&x, &p).unwrap(), conv1d(&y, &p).unwrap());
                for ((l, u), v) in lhs.values().iter().zip(cx.values()).zip(cy.values()) {
                    prop_assert!((l - (a * u + b * v)).abs() < 1e-10);
                }
            }
        }
    }
}
