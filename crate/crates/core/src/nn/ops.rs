use alloc::vec::Vec;

use super::Tensor;
use crate::error::{bail, Error, Result};

/// 1-D convolution geometry. Weights are laid out `[out, in, kernel]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conv1dSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_size: usize,
    pub stride: usize,
    pub padding: usize,
}

impl Conv1dSpec {
    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0
            || self.out_channels == 0
            || self.kernel_size == 0
            || self.stride == 0
        {
            bail!(
                Shape,
                "conv spec fields must be >= 1 (padding >= 0): {self:?}"
            );
        }
        Ok(())
    }

    pub fn output_len(&self, input_len: usize) -> Result<usize> {
        self.validate()?;
        let padded = input_len + 2 * self.padding;
        if padded < self.kernel_size {
            bail!(
                Shape,
                "input length {input_len} too short for kernel {} with padding {}",
                self.kernel_size,
                self.padding
            );
        }
        Ok((padded - self.kernel_size) / self.stride + 1)
    }

    pub fn weight_shape(&self) -> [usize; 3] {
        [self.out_channels, self.in_channels, self.kernel_size]
    }
}

/// Rows of `table` (`[V, d]`) selected by `ids`, giving `[L, d]`.
pub fn embed(ids: &[u32], table: &Tensor) -> Result<Tensor> {
    table.expect_rank(2, "embedding table")?;
    if ids.is_empty() {
        return Err(Error::InvalidArgument(
            "embedding lookup needs at least one id".into(),
        ));
    }
    let (rows, dim) = (table.shape()[0], table.shape()[1]);
    let mut out = Vec::with_capacity(ids.len() * dim);
    for &id in ids {
        let id = id as usize;
        if id >= rows {
            return Err(Error::IndexOutOfRange {
                index: id,
                len: rows,
            });
        }
        out.extend_from_slice(&table.values()[id * dim..(id + 1) * dim]);
    }
    Tensor::new(&[ids.len(), dim], out)
}

/// Scatter-adds `grad_out` (`[L, d]`) into the looked-up rows of `table`.
pub fn embed_backward(ids: &[u32], grad_out: &[f64], table: &mut Tensor) {
    let dim = table.shape()[1];
    let g = table.grad_mut();
    for (pos, &id) in ids.iter().enumerate() {
        let row = id as usize * dim;
        for j in 0..dim {
            g[row + j] += grad_out[pos * dim + j];
        }
    }
}

fn transpose_values(values: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = alloc::vec![0.0; values.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = values[r * cols + c];
        }
    }
    out
}

/// `[R, C]` to `[C, R]`. Its own backward: transpose the upstream gradient
/// with the output shape.
pub fn transpose(x: &Tensor) -> Result<Tensor> {
    x.expect_rank(2, "transpose input")?;
    let (r, c) = (x.shape()[0], x.shape()[1]);
    Tensor::new(&[c, r], transpose_values(x.values(), r, c))
}

pub fn conv1d(x: &Tensor, spec: &Conv1dSpec, weight: &Tensor, bias: &Tensor) -> Result<Tensor> {
    x.expect_rank(2, "conv input")?;
    if x.shape()[0] != spec.in_channels {
        bail!(
            Shape,
            "conv input has {} channels, spec expects {}",
            x.shape()[0],
            spec.in_channels
        );
    }
    if weight.shape() != spec.weight_shape() {
        bail!(
            Shape,
            "conv weight shape {:?}, expected {:?}",
            weight.shape(),
            spec.weight_shape()
        );
    }
    if bias.shape() != [spec.out_channels] {
        bail!(
            Shape,
            "conv bias shape {:?}, expected [{}]",
            bias.shape(),
            spec.out_channels
        );
    }
    let len = x.shape()[1];
    let out_len = spec.output_len(len)?;
    let (k, xs, w) = (spec.kernel_size, x.values(), weight.values());
    let mut out = alloc::vec![0.0; spec.out_channels * out_len];
    for o in 0..spec.out_channels {
        for t in 0..out_len {
            let mut acc = bias.values()[o];
            for c in 0..spec.in_channels {
                let wrow = &w[(o * spec.in_channels + c) * k..][..k];
                for (tap, &wv) in wrow.iter().enumerate() {
                    if let Some(p) = (t * spec.stride + tap).checked_sub(spec.padding) {
                        if p < len {
                            acc += wv * xs[c * len + p];
                        }
                    }
                }
            }
            out[o * out_len + t] = acc;
        }
    }
    Tensor::new(&[spec.out_channels, out_len], out)
}

/// Accumulates weight and bias gradients and returns the input gradient.
pub fn conv1d_backward(
    x: &Tensor,
    spec: &Conv1dSpec,
    weight: &mut Tensor,
    bias: &mut Tensor,
    grad_out: &[f64],
) -> Vec<f64> {
    let len = x.shape()[1];
    let out_len = grad_out.len() / spec.out_channels;
    let k = spec.kernel_size;
    let mut dx = alloc::vec![0.0; x.len()];
    {
        let db = bias.grad_mut();
        for o in 0..spec.out_channels {
            db[o] += grad_out[o * out_len..(o + 1) * out_len].iter().sum::<f64>();
        }
    }
    let w = weight.values().to_vec();
    let dw = weight.grad_mut();
    for o in 0..spec.out_channels {
        for t in 0..out_len {
            let g = grad_out[o * out_len + t];
            if g == 0.0 {
                continue;
            }
            for c in 0..spec.in_channels {
                let base = (o * spec.in_channels + c) * k;
                for tap in 0..k {
                    if let Some(p) = (t * spec.stride + tap).checked_sub(spec.padding) {
                        if p < len {
                            dw[base + tap] += g * x.values()[c * len + p];
                            dx[c * len + p] += g * w[base + tap];
                        }
                    }
                }
            }
        }
    }
    dx
}

pub fn relu(x: &Tensor) -> Tensor {
    Tensor::from_fn(x.shape(), |i| x.values()[i].max(0.0))
}

pub fn relu_backward(x: &Tensor, grad_out: &[f64]) -> Vec<f64> {
    x.values()
        .iter()
        .zip(grad_out)
        .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
        .collect()
}

/// Per-channel maximum over positions of `[C, L]`, with the first argmax
/// of each channel.
pub fn adaptive_max_pool1(x: &Tensor) -> Result<(Tensor, Vec<usize>)> {
    x.expect_rank(2, "max-pool input")?;
    let (channels, len) = (x.shape()[0], x.shape()[1]);
    if len == 0 {
        bail!(Shape, "max-pool over zero positions");
    }
    let mut argmax = Vec::with_capacity(channels);
    let mut out = Vec::with_capacity(channels);
    for c in 0..channels {
        let row = &x.values()[c * len..(c + 1) * len];
        let mut best = 0;
        for (i, &v) in row.iter().enumerate().skip(1) {
            if v > row[best] {
                best = i;
            }
        }
        argmax.push(best);
        out.push(row[best]);
    }
    Ok((Tensor::new(&[channels], out)?, argmax))
}

pub fn adaptive_max_pool1_backward(
    argmax: &[usize],
    input_len: usize,
    grad_out: &[f64],
) -> Vec<f64> {
    let mut dx = alloc::vec![0.0; argmax.len() * input_len];
    for (c, (&a, &g)) in argmax.iter().zip(grad_out).enumerate() {
        dx[c * input_len + a] += g;
    }
    dx
}

/// `W x + b` for `x: [C]`, `W: [K, C]`, `b: [K]`.
pub fn affine(x: &Tensor, weight: &Tensor, bias: &Tensor) -> Result<Tensor> {
    x.expect_rank(1, "affine input")?;
    weight.expect_rank(2, "affine weight")?;
    let (k, c) = (weight.shape()[0], weight.shape()[1]);
    if x.len() != c || bias.shape() != [k] {
        bail!(
            Shape,
            "affine shapes x {:?}, W {:?}, b {:?}",
            x.shape(),
            weight.shape(),
            bias.shape()
        );
    }
    let out = (0..k)
        .map(|i| {
            let row = &weight.values()[i * c..(i + 1) * c];
            bias.values()[i] + row.iter().zip(x.values()).map(|(w, v)| w * v).sum::<f64>()
        })
        .collect();
    Tensor::new(&[k], out)
}

pub fn affine_backward(
    x: &Tensor,
    weight: &mut Tensor,
    bias: &mut Tensor,
    grad_out: &[f64],
) -> Vec<f64> {
    let (k, c) = (weight.shape()[0], weight.shape()[1]);
    for (db, g) in bias.grad_mut().iter_mut().zip(grad_out) {
        *db += g;
    }
    let mut dx = alloc::vec![0.0; c];
    for (row, g) in weight.values().chunks(c).zip(grad_out) {
        for (d, w) in dx.iter_mut().zip(row) {
            *d += g * w;
        }
    }
    let dw = weight.grad_mut();
    for i in 0..k {
        for j in 0..c {
            dw[i * c + j] += grad_out[i] * x.values()[j];
        }
    }
    dx
}
