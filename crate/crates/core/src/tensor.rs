//! Dense channel tensors, zero-padded stride-1 convolution and the handful of
//! activations the hand-coded automata need.
//!
//! Everything is `f64`. Convolution accumulates each output cell in a fixed
//! order (bias, then input channel, kernel row, kernel column), so identical
//! inputs give bit-identical outputs. Zero weights are skipped; adding `+0.0`
//! never changes a finite sum, so skipping does not alter results.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TensorError {
    #[error("kernel expects {expected} input channels, tensor has {found}")]
    ChannelMismatch { expected: usize, found: usize },
    #[error("channel {channel} out of range for tensor with {channels} channels")]
    ChannelOutOfRange { channel: usize, channels: usize },
    #[error("spatial shapes differ: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),
}

/// C×H×W activation volume, row-major within each channel plane.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTensor {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ChannelTensor {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        ChannelTensor {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn from_vec(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Self {
        assert_eq!(
            data.len(),
            channels * height * width,
            "data length must be C*H*W"
        );
        ChannelTensor {
            channels,
            height,
            width,
            data,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn plane(&self, channel: usize) -> &[f64] {
        let n = self.plane_len();
        &self.data[channel * n..(channel + 1) * n]
    }

    pub fn plane_mut(&mut self, channel: usize) -> &mut [f64] {
        let n = self.plane_len();
        &mut self.data[channel * n..(channel + 1) * n]
    }

    pub fn get(&self, channel: usize, y: usize, x: usize) -> f64 {
        self.data[(channel * self.height + y) * self.width + x]
    }

    pub fn set(&mut self, channel: usize, y: usize, x: usize, v: f64) {
        self.data[(channel * self.height + y) * self.width + x] = v;
    }

    /// Channel-wise concatenation `[self, other]`.
    pub fn concat(&self, other: &ChannelTensor) -> Result<ChannelTensor, TensorError> {
        if (self.height, self.width) != (other.height, other.width) {
            return Err(TensorError::ShapeMismatch(
                self.height,
                self.width,
                other.height,
                other.width,
            ));
        }
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&other.data);
        Ok(ChannelTensor {
            channels: self.channels + other.channels,
            height: self.height,
            width: self.width,
            data,
        })
    }

    /// True when every entry of `channel` is within 1e-9 of an integer.
    pub fn is_integer_valued(&self, channel: usize) -> bool {
        self.plane(channel)
            .iter()
            .all(|v| (v - v.round()).abs() < 1e-9)
    }

    fn check_channel(&self, channel: usize) -> Result<(), TensorError> {
        if channel < self.channels {
            Ok(())
        } else {
            Err(TensorError::ChannelOutOfRange {
                channel,
                channels: self.channels,
            })
        }
    }
}

/// A single k×k weight matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    k: usize,
    w: Vec<f64>,
}

impl Kernel {
    pub fn zeros(k: usize) -> Kernel {
        assert!(k % 2 == 1, "kernel size must be odd");
        Kernel {
            k,
            w: vec![0.0; k * k],
        }
    }

    /// Kernel with the given `(row, col, value)` entries.
    pub fn from_entries(k: usize, entries: &[(usize, usize, f64)]) -> Kernel {
        let mut kern = Kernel::zeros(k);
        for &(r, c, v) in entries {
            kern.w[r * k + c] = v;
        }
        kern
    }

    /// Center-only identity.
    pub fn identity(k: usize) -> Kernel {
        let c = k / 2;
        Kernel::from_entries(k, &[(c, c, 1.0)])
    }

    /// Single 1 at `(row, col)`.
    pub fn unit(k: usize, row: usize, col: usize) -> Kernel {
        Kernel::from_entries(k, &[(row, col, 1.0)])
    }

    pub fn size(&self) -> usize {
        self.k
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.w[row * self.k + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.w
    }

    pub fn scaled(&self, s: f64) -> Kernel {
        Kernel {
            k: self.k,
            w: self.w.iter().map(|v| v * s).collect(),
        }
    }

    pub fn minus(&self, other: &Kernel) -> Kernel {
        assert_eq!(self.k, other.k);
        Kernel {
            k: self.k,
            w: self.w.iter().zip(&other.w).map(|(a, b)| a - b).collect(),
        }
    }

    /// Pads with a zero border up to size `k`.
    pub fn embed(&self, k: usize) -> Kernel {
        assert!(k >= self.k && k % 2 == 1);
        let off = (k - self.k) / 2;
        let mut out = Kernel::zeros(k);
        for r in 0..self.k {
            for c in 0..self.k {
                out.w[(r + off) * k + c + off] = self.get(r, c);
            }
        }
        out
    }
}

/// Cout×Cin×k×k weights plus one bias per output channel.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelStack {
    out_channels: usize,
    in_channels: usize,
    k: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl KernelStack {
    pub fn zeros(out_channels: usize, in_channels: usize, k: usize) -> KernelStack {
        assert!(k % 2 == 1, "kernel size must be odd");
        KernelStack {
            out_channels,
            in_channels,
            k,
            weights: vec![0.0; out_channels * in_channels * k * k],
            bias: vec![0.0; out_channels],
        }
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn kernel_size(&self) -> usize {
        self.k
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn set_bias(&mut self, out: usize, b: f64) {
        self.bias[out] = b;
    }

    pub fn weight(&self, out: usize, inp: usize, row: usize, col: usize) -> f64 {
        self.weights[((out * self.in_channels + inp) * self.k + row) * self.k + col]
    }

    /// The k×k slice connecting `inp` to `out`.
    pub fn slice(&self, out: usize, inp: usize) -> Kernel {
        let kk = self.k * self.k;
        let start = (out * self.in_channels + inp) * kk;
        Kernel {
            k: self.k,
            w: self.weights[start..start + kk].to_vec(),
        }
    }

    /// Adds `kernel` (embedded to this stack's size if smaller) into the `inp → out` slice.
    pub fn add(&mut self, out: usize, inp: usize, kernel: &Kernel) {
        let kernel = if kernel.k == self.k {
            kernel.clone()
        } else {
            kernel.embed(self.k)
        };
        let kk = self.k * self.k;
        let start = (out * self.in_channels + inp) * kk;
        for (dst, src) in self.weights[start..start + kk].iter_mut().zip(&kernel.w) {
            *dst += src;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }
}

/// Zero-padded, stride-1 convolution.
pub fn conv2d(input: &ChannelTensor, kernels: &KernelStack) -> Result<ChannelTensor, TensorError> {
    if input.channels != kernels.in_channels {
        return Err(TensorError::ChannelMismatch {
            expected: kernels.in_channels,
            found: input.channels,
        });
    }
    let (h, w, k) = (input.height as isize, input.width as isize, kernels.k);
    let r = (k / 2) as isize;
    let mut out = ChannelTensor::zeros(kernels.out_channels, input.height, input.width);
    let n = input.plane_len();
    for co in 0..kernels.out_channels {
        let dst = &mut out.data[co * n..(co + 1) * n];
        dst.fill(kernels.bias[co]);
        for ci in 0..kernels.in_channels {
            let src = input.plane(ci);
            for i in 0..k {
                let dy = i as isize - r;
                for j in 0..k {
                    let wt = kernels.weight(co, ci, i, j);
                    if wt == 0.0 {
                        continue;
                    }
                    let dx = j as isize - r;
                    let y0 = (-dy).max(0);
                    let y1 = (h - dy).min(h);
                    let x0 = (-dx).max(0);
                    let x1 = (w - dx).min(w);
                    for y in y0..y1 {
                        let row_dst = (y * w) as usize;
                        let row_src = ((y + dy) * w) as usize;
                        for x in x0..x1 {
                            dst[row_dst + x as usize] += wt * src[row_src + (x + dx) as usize];
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActivationKind {
    /// 1 if x > 0 else 0.
    Step,
    Relu,
    /// Triangular bump `max(0, 1 − |x − a|)`: on integers, the indicator of `x = a`.
    Sawtooth(i32),
}

impl ActivationKind {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            ActivationKind::Step => step(x),
            ActivationKind::Relu => relu(x),
            ActivationKind::Sawtooth(a) => sawtooth(a, x),
        }
    }
}

pub fn step(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

pub fn sawtooth(a: i32, x: f64) -> f64 {
    (1.0 - (x - f64::from(a)).abs()).max(0.0)
}

pub fn activate_plane(plane: &mut [f64], kind: ActivationKind) {
    plane.iter_mut().for_each(|v| *v = kind.apply(*v));
}

/// Applies `kind` to one channel, leaving the others untouched.
pub fn apply_activation(
    input: &ChannelTensor,
    channel: usize,
    kind: ActivationKind,
) -> Result<ChannelTensor, TensorError> {
    input.check_channel(channel)?;
    let mut out = input.clone();
    activate_plane(out.plane_mut(channel), kind);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReduceMode {
    SpatialMax,
    /// Minimum over strictly positive entries; `None` when there are none.
    SpatialMinPositive,
}

pub fn spatial_max(plane: &[f64]) -> f64 {
    plane.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn spatial_min_positive(plane: &[f64]) -> Option<f64> {
    plane
        .iter()
        .copied()
        .filter(|&v| v > 0.0)
        .fold(None, |acc, v| Some(acc.map_or(v, |m: f64| m.min(v))))
}

pub fn channel_reduce(
    input: &ChannelTensor,
    channel: usize,
    mode: ReduceMode,
) -> Result<Option<f64>, TensorError> {
    input.check_channel(channel)?;
    let plane = input.plane(channel);
    Ok(match mode {
        ReduceMode::SpatialMax => Some(spatial_max(plane)),
        ReduceMode::SpatialMinPositive => spatial_min_positive(plane),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single_plane(h: usize, w: usize, vals: Vec<f64>) -> ChannelTensor {
        ChannelTensor::from_vec(1, h, w, vals)
    }

    #[test]
    fn identity_kernel_is_identity() {
        let input = single_plane(2, 3, vec![1.0, -2.0, 3.0, 4.5, 0.0, 7.0]);
        let mut ks = KernelStack::zeros(1, 1, 3);
        ks.add(0, 0, &Kernel::identity(3));
        assert_eq!(conv2d(&input, &ks).unwrap(), input);
    }

    #[test]
    fn bias_only_on_zero_input() {
        let input = ChannelTensor::zeros(2, 3, 3);
        let mut ks = KernelStack::zeros(1, 2, 3);
        ks.set_bias(0, -1.5);
        let out = conv2d(&input, &ks).unwrap();
        assert!(out.data().iter().all(|&v| v == -1.5));
    }

    #[test]
    fn channel_mismatch_is_reported() {
        let input = ChannelTensor::zeros(3, 2, 2);
        let ks = KernelStack::zeros(1, 2, 3);
        assert_eq!(
            conv2d(&input, &ks),
            Err(TensorError::ChannelMismatch {
                expected: 2,
                found: 3
            })
        );
    }

    #[test]
    fn off_center_tap_reads_neighbor() {
        // Tap (0,1) reads the cell above; zero padding on the top row.
        let input = single_plane(2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        let mut ks = KernelStack::zeros(1, 1, 3);
        ks.add(0, 0, &Kernel::unit(3, 0, 1));
        let out = conv2d(&input, &ks).unwrap();
        assert_eq!(out.data(), &[0.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn activations() {
        assert_eq!(step(-6.0), 0.0);
        assert_eq!(step(1.0), 1.0);
        assert_eq!(step(0.0), 0.0);
        assert_eq!(sawtooth(-1, -1.0), 1.0);
        assert_eq!(sawtooth(-1, 0.0), 0.0);
        assert_eq!(sawtooth(-1, -2.0), 0.0);
        assert_eq!(relu(-3.0), 0.0);
        assert_eq!(relu(2.5), 2.5);
    }

    #[test]
    fn apply_activation_touches_one_channel() {
        let t = ChannelTensor::from_vec(2, 1, 2, vec![-1.0, 2.0, -1.0, 2.0]);
        let out = apply_activation(&t, 1, ActivationKind::Relu).unwrap();
        assert_eq!(out.data(), &[-1.0, 2.0, 0.0, 2.0]);
        assert!(apply_activation(&t, 2, ActivationKind::Step).is_err());
    }

    #[test]
    fn reductions() {
        let zeros = single_plane(1, 3, vec![0.0; 3]);
        assert_eq!(
            channel_reduce(&zeros, 0, ReduceMode::SpatialMax).unwrap(),
            Some(0.0)
        );
        assert_eq!(
            channel_reduce(&zeros, 0, ReduceMode::SpatialMinPositive).unwrap(),
            None
        );
        let t = single_plane(1, 3, vec![0.0, 3.0, 7.0]);
        assert_eq!(
            channel_reduce(&t, 0, ReduceMode::SpatialMinPositive).unwrap(),
            Some(3.0)
        );
        let one = single_plane(1, 3, vec![0.0, 1.0, 0.0]);
        assert_eq!(
            channel_reduce(&one, 0, ReduceMode::SpatialMax).unwrap(),
            Some(1.0)
        );
    }

    fn arb_tensor(c: usize, h: usize, w: usize) -> impl Strategy<Value = ChannelTensor> {
        prop::collection::vec(-4i32..5, c * h * w).prop_map(move |v| {
            ChannelTensor::from_vec(c, h, w, v.into_iter().map(f64::from).collect())
        })
    }

    fn arb_stack(k: usize) -> impl Strategy<Value = KernelStack> {
        prop::collection::vec(-3i32..4, 2 * 2 * k * k).prop_map(move |v| {
            let mut ks = KernelStack::zeros(2, 2, k);
            ks.weights = v.into_iter().map(f64::from).collect();
            ks
        })
    }

    proptest! {
        #[test]
        fn conv_is_linear(x in arb_tensor(2, 4, 5), y in arb_tensor(2, 4, 5),
                          ks in arb_stack(3), a in -3i32..4, b in -3i32..4) {
            let (a, b) = (f64::from(a), f64::from(b));
            let combo: Vec<f64> = x.data().iter().zip(y.data()).map(|(p, q)| a * p + b * q).collect();
            let combo = ChannelTensor::from_vec(2, 4, 5, combo);
            let lhs = conv2d(&combo, &ks).unwrap();
            let cx = conv2d(&x, &ks).unwrap();
            let cy = conv2d(&y, &ks).unwrap();
            for ((l, p), q) in lhs.data().iter().zip(cx.data()).zip(cy.data()) {
                prop_assert_eq!(*l, a * p + b * q);
            }
        }

        #[test]
        fn conv_is_local(x in arb_tensor(2, 6, 6), ks in arb_stack(3),
                         cy in 0usize..6, cx in 0usize..6, bump in 1i32..5) {
            let base = conv2d(&x, &ks).unwrap();
            let mut x2 = x.clone();
            let v = x2.get(1, cy, cx);
            x2.set(1, cy, cx, v + f64::from(bump));
            let moved = conv2d(&x2, &ks).unwrap();
            for c in 0..2 {
                for y in 0..6usize {
                    for xx in 0..6usize {
                        let far = y.abs_diff(cy) > 1 || xx.abs_diff(cx) > 1;
                        if far {
                            prop_assert_eq!(base.get(c, y, xx), moved.get(c, y, xx));
                        }
                    }
                }
            }
        }

        #[test]
        fn zero_ring_embedding_matches_small_kernel(x in arb_tensor(2, 5, 4), ks in arb_stack(3)) {
            let mut big = KernelStack::zeros(2, 2, 5);
            for o in 0..2 {
                for i in 0..2 {
                    big.add(o, i, &ks.slice(o, i));
                }
            }
            prop_assert_eq!(conv2d(&x, &ks).unwrap(), conv2d(&x, &big).unwrap());
        }

        #[test]
        fn activations_idempotent(v in -10.0f64..10.0) {
            prop_assert_eq!(step(step(v)), step(v));
            prop_assert_eq!(relu(relu(v)), relu(v));
        }
    }
}
