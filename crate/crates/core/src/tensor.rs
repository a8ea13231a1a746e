//! Feature-map and weight containers plus deconvolution layer geometry.

use crate::error::{Error, Result};
use crate::fixed::FixedPoint32;

/// Channel-major activation tensor: element `(c, h, w)` lives at
/// `c*H*W + h*W + w`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureMap {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<FixedPoint32>,
}

impl FeatureMap {
    /// An all-zero map of the given dimensions.
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![FixedPoint32::ZERO; channels * height * width],
        }
    }

    /// Wrap existing channel-major data.
    pub fn from_data(
        channels: usize,
        height: usize,
        width: usize,
        data: Vec<FixedPoint32>,
    ) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::Shape(format!(
                "feature map data length {} != {channels}x{height}x{width}",
                data.len()
            )));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn index(&self, c: usize, h: usize, w: usize) -> usize {
        debug_assert!(c < self.channels && h < self.height && w < self.width);
        (c * self.height + h) * self.width + w
    }

    #[inline]
    pub fn get(&self, c: usize, h: usize, w: usize) -> FixedPoint32 {
        self.data[self.index(c, h, w)]
    }

    #[inline]
    pub fn set(&mut self, c: usize, h: usize, w: usize, v: FixedPoint32) {
        let i = self.index(c, h, w);
        self.data[i] = v;
    }

    /// One channel plane as a contiguous row-major slice.
    #[inline]
    pub fn channel(&self, c: usize) -> &[FixedPoint32] {
        let plane = self.height * self.width;
        &self.data[c * plane..(c + 1) * plane]
    }

    #[inline]
    pub fn channel_mut(&mut self, c: usize) -> &mut [FixedPoint32] {
        let plane = self.height * self.width;
        &mut self.data[c * plane..(c + 1) * plane]
    }

    #[inline]
    pub fn as_slice(&self) -> &[FixedPoint32] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [FixedPoint32] {
        &mut self.data
    }

    /// Flatten to real values in channel-major order.
    pub fn to_real_vec(&self, frac_bits: u32) -> Vec<f64> {
        self.data.iter().map(|v| v.to_real(frac_bits)).collect()
    }
}

/// 4-D deconvolution weights indexed `[i_c][o_c][k_h][k_w]`, plus one bias
/// per output channel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightTensor {
    in_channels: usize,
    out_channels: usize,
    kernel: usize,
    data: Vec<FixedPoint32>,
    bias: Vec<FixedPoint32>,
}

impl WeightTensor {
    pub fn zeros(in_channels: usize, out_channels: usize, kernel: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel,
            data: vec![FixedPoint32::ZERO; in_channels * out_channels * kernel * kernel],
            bias: vec![FixedPoint32::ZERO; out_channels],
        }
    }

    pub fn from_data(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        data: Vec<FixedPoint32>,
        bias: Vec<FixedPoint32>,
    ) -> Result<Self> {
        if data.len() != in_channels * out_channels * kernel * kernel {
            return Err(Error::Shape(format!(
                "weight data length {} != {in_channels}x{out_channels}x{kernel}x{kernel}",
                data.len()
            )));
        }
        if bias.len() != out_channels {
            return Err(Error::Shape(format!(
                "bias length {} != out_channels {out_channels}",
                bias.len()
            )));
        }
        Ok(Self {
            in_channels,
            out_channels,
            kernel,
            data,
            bias,
        })
    }

    #[inline]
    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    #[inline]
    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    #[inline]
    pub fn kernel(&self) -> usize {
        self.kernel
    }

    #[inline]
    pub fn index(&self, i_c: usize, o_c: usize, k_h: usize, k_w: usize) -> usize {
        debug_assert!(
            i_c < self.in_channels && o_c < self.out_channels && k_h < self.kernel && k_w < self.kernel
        );
        ((i_c * self.out_channels + o_c) * self.kernel + k_h) * self.kernel + k_w
    }

    #[inline]
    pub fn get(&self, i_c: usize, o_c: usize, k_h: usize, k_w: usize) -> FixedPoint32 {
        self.data[self.index(i_c, o_c, k_h, k_w)]
    }

    #[inline]
    pub fn set(&mut self, i_c: usize, o_c: usize, k_h: usize, k_w: usize, v: FixedPoint32) {
        let i = self.index(i_c, o_c, k_h, k_w);
        self.data[i] = v;
    }

    /// The K*K block feeding one (input channel, output channel) pair.
    #[inline]
    pub fn block(&self, i_c: usize, o_c: usize) -> &[FixedPoint32] {
        let start = self.index(i_c, o_c, 0, 0);
        &self.data[start..start + self.kernel * self.kernel]
    }

    #[inline]
    pub fn bias(&self, o_c: usize) -> FixedPoint32 {
        self.bias[o_c]
    }

    #[inline]
    pub fn biases(&self) -> &[FixedPoint32] {
        &self.bias
    }

    #[inline]
    pub fn weights(&self) -> &[FixedPoint32] {
        &self.data
    }

    #[inline]
    pub fn weights_mut(&mut self) -> &mut [FixedPoint32] {
        &mut self.data
    }

    #[inline]
    pub fn biases_mut(&mut self) -> &mut [FixedPoint32] {
        &mut self.bias
    }

    /// Number of nonzero weights (biases excluded).
    pub fn count_nonzero(&self) -> usize {
        self.data.iter().filter(|w| !w.is_zero()).count()
    }
}

/// Geometry of one transposed-convolution layer.
///
/// Output dims follow the standard transposed-convolution formula
/// `O = (I - 1) * S + K - 2P` on both axes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerParams {
    pub in_height: usize,
    pub in_width: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub out_height: usize,
    pub out_width: usize,
}

impl LayerParams {
    /// Validate the geometry and derive the output dims.
    pub fn new(
        in_height: usize,
        in_width: usize,
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    ) -> Result<Self> {
        if kernel == 0 || stride == 0 {
            return Err(Error::Param(format!(
                "kernel ({kernel}) and stride ({stride}) must be >= 1"
            )));
        }
        if in_height == 0 || in_width == 0 || in_channels == 0 || out_channels == 0 {
            return Err(Error::Param("all dimensions must be >= 1".into()));
        }
        let out_h = (in_height as i64 - 1) * stride as i64 + kernel as i64 - 2 * padding as i64;
        let out_w = (in_width as i64 - 1) * stride as i64 + kernel as i64 - 2 * padding as i64;
        if out_h < 1 || out_w < 1 {
            return Err(Error::Param(format!(
                "output dims {out_h}x{out_w} not positive for I={in_height}x{in_width} K={kernel} S={stride} P={padding}"
            )));
        }
        Ok(Self {
            in_height,
            in_width,
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
            out_height: out_h as usize,
            out_width: out_w as usize,
        })
    }

    /// Check an input map against this layer's expected dims.
    pub fn check_input(&self, x: &FeatureMap) -> Result<()> {
        if x.channels() != self.in_channels
            || x.height() != self.in_height
            || x.width() != self.in_width
        {
            return Err(Error::Shape(format!(
                "input {}x{}x{} does not match layer input {}x{}x{}",
                x.channels(),
                x.height(),
                x.width(),
                self.in_channels,
                self.in_height,
                self.in_width
            )));
        }
        Ok(())
    }

    /// Check a weight tensor against this layer's expected dims.
    pub fn check_weights(&self, w: &WeightTensor) -> Result<()> {
        if w.in_channels() != self.in_channels
            || w.out_channels() != self.out_channels
            || w.kernel() != self.kernel
        {
            return Err(Error::Shape(format!(
                "weights {}x{}x{}x{} do not match layer ({}, {}, K={})",
                w.in_channels(),
                w.out_channels(),
                w.kernel(),
                w.kernel(),
                self.in_channels,
                self.out_channels,
                self.kernel
            )));
        }
        Ok(())
    }
}
