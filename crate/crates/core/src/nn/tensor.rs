use crate::error::{shape_err, Result};

use super::Scalar;

/// A channels × length matrix stored channel-major (`values[c * length + l]`).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor2<T> {
    channels: usize,
    length: usize,
    values: Vec<T>,
}

impl<T: Scalar> Tensor2<T> {
    pub fn zeros(channels: usize, length: usize) -> Self {
        Tensor2 {
            channels,
            length,
            values: vec![T::zero(); channels * length],
        }
    }

    pub fn from_vec(channels: usize, length: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != channels * length {
            return Err(shape_err(channels * length, values.len()));
        }
        Ok(Tensor2 {
            channels,
            length,
            values,
        })
    }

    /// Builds from columns, each holding one value per channel.
    pub fn from_columns<C: AsRef<[T]>>(columns: &[C]) -> Result<Self> {
        let length = columns.len();
        let channels = columns.first().map_or(0, |c| c.as_ref().len());
        let mut t = Tensor2::zeros(channels, length);
        for (l, col) in columns.iter().enumerate() {
            let col = col.as_ref();
            if col.len() != channels {
                return Err(shape_err(channels, col.len()));
            }
            for (c, &v) in col.iter().enumerate() {
                t.values[c * length + l] = v;
            }
        }
        Ok(t)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, channel: usize, pos: usize) -> T {
        self.values[channel * self.length + pos]
    }

    #[inline]
    pub fn set(&mut self, channel: usize, pos: usize, v: T) {
        self.values[channel * self.length + pos] = v;
    }

    pub fn column(&self, pos: usize) -> Vec<T> {
        (0..self.channels).map(|c| self.get(c, pos)).collect()
    }

    pub fn column_sum(&self, pos: usize) -> T {
        (0..self.channels).map(|c| self.get(c, pos)).sum()
    }

    /// Per-column argmax, ties to the lower channel.
    pub fn column_argmax(&self) -> Vec<usize> {
        (0..self.length)
            .map(|l| {
                let mut best = 0;
                for c in 1..self.channels {
                    if self.get(c, l) > self.get(best, l) {
                        best = c;
                    }
                }
                best
            })
            .collect()
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Tensor2 {
            channels: self.channels,
            length: self.length,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// A batch of equally shaped sequences laid out as one channels × (batch·length)
/// matrix. Column `b * length + l` is position `l` of sample `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch<T> {
    pub(crate) channels: usize,
    pub(crate) batch: usize,
    pub(crate) length: usize,
    pub(crate) data: Vec<T>,
}

impl<T: Scalar> Batch<T> {
    pub fn zeros(channels: usize, batch: usize, length: usize) -> Self {
        Batch {
            channels,
            batch,
            length,
            data: vec![T::zero(); channels * batch * length],
        }
    }

    pub fn stack(samples: &[Tensor2<T>]) -> Result<Self> {
        let first = samples.first().ok_or_else(|| shape_err("non-empty batch", 0))?;
        let (channels, length) = (first.channels, first.length);
        let mut out = Batch::zeros(channels, samples.len(), length);
        let cols = out.cols();
        for (b, s) in samples.iter().enumerate() {
            if s.channels != channels || s.length != length {
                return Err(shape_err(
                    format!("{channels}x{length}"),
                    format!("{}x{}", s.channels, s.length),
                ));
            }
            for c in 0..channels {
                out.data[c * cols + b * length..c * cols + (b + 1) * length]
                    .copy_from_slice(&s.values[c * length..(c + 1) * length]);
            }
        }
        Ok(out)
    }

    pub fn sample(&self, b: usize) -> Tensor2<T> {
        let cols = self.cols();
        let mut values = Vec::with_capacity(self.channels * self.length);
        for c in 0..self.channels {
            values.extend_from_slice(&self.data[c * cols + b * self.length..c * cols + (b + 1) * self.length]);
        }
        Tensor2 {
            channels: self.channels,
            length: self.length,
            values,
        }
    }

    pub fn unstack(&self) -> Vec<Tensor2<T>> {
        (0..self.batch).map(|b| self.sample(b)).collect()
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn batch_size(&self) -> usize {
        self.batch
    }

    pub fn length(&self) -> usize {
        self.length
    }

    /// Total number of columns, batch × length.
    #[inline]
    pub fn cols(&self) -> usize {
        self.batch * self.length
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, c: usize) -> &[T] {
        let n = self.cols();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn same_shape(&self, other: &Batch<T>) -> Result<()> {
        if (self.channels, self.batch, self.length) != (other.channels, other.batch, other.length) {
            return Err(shape_err(
                format!("{}x{}x{}", self.channels, self.batch, self.length),
                format!("{}x{}x{}", other.channels, other.batch, other.length),
            ));
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &Batch<T>) -> Result<()> {
        self.same_shape(other)?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    /// Per-column argmax over channels, ties to the lower channel.
    pub fn column_argmax(&self) -> Vec<usize> {
        let n = self.cols();
        let mut best = vec![0usize; n];
        let mut best_val: Vec<T> = self.row(0).to_vec();
        for c in 1..self.channels {
            for (j, &v) in self.row(c).iter().enumerate() {
                if v > best_val[j] {
                    best_val[j] = v;
                    best[j] = c;
                }
            }
        }
        best
    }
}
