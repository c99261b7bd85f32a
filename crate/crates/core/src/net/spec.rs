use std::fmt;

use serde::{Deserialize, Serialize};

use super::NetError;

/// Feature maps of the first temporal convolution.
pub const CONV1_FILTERS: usize = 20;
/// Feature maps of the second temporal and the spatial convolution.
pub const CONV2_FILTERS: usize = 40;
pub const CONV3_FILTERS: usize = 40;
pub const CONV6_FILTERS: usize = 80;
/// Temporal kernel width shared by layers 1, 2 and 6.
pub const TEMPORAL_KERNEL: usize = 32;
/// Width and stride of both max-pooling layers.
pub const POOL: usize = 5;
pub const OUTPUT_CLASSES: usize = 3;
/// Span of the two stacked temporal kernels (`2 × 32 − 1`).
pub const FUSED_KERNEL: usize = 2 * TEMPORAL_KERNEL - 1;

/// Input geometry of the network; the layer stack itself is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub n_channels: usize,
    pub in_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Convolution,
    MaxPooling,
    Dropout,
    Flatten,
    Softmax,
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LayerKind::Convolution => "Convolution",
            LayerKind::MaxPooling => "Max Pooling",
            LayerKind::Dropout => "Dropout",
            LayerKind::Flatten => "Flatten",
            LayerKind::Softmax => "Softmax",
        })
    }
}

/// One row of the architecture table. `output` is `None` for dropout,
/// which does not change the shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerShape {
    pub layer: usize,
    pub kind: LayerKind,
    pub output: Option<Vec<usize>>,
}

/// Lengths along the time axis after each shape-changing layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Dims {
    pub k: usize,
    pub s: usize,
    pub t1: usize,
    pub t2: usize,
    pub p4: usize,
    pub t6: usize,
    pub p7: usize,
    pub flat: usize,
}

impl ModelSpec {
    pub fn new(n_channels: usize, in_samples: usize) -> Result<Self, NetError> {
        let spec = Self { n_channels, in_samples };
        spec.dims()?;
        Ok(spec)
    }

    pub(crate) fn dims(&self) -> Result<Dims, NetError> {
        fn invalid<T>(layer: usize, reason: String) -> Result<T, NetError> {
            Err(NetError::InvalidShape { layer, reason })
        }
        if self.n_channels == 0 {
            return invalid(3, "spatial kernel needs at least one channel".into());
        }
        let conv = |layer: usize, len: usize| {
            if len < TEMPORAL_KERNEL {
                invalid(layer, format!("input length {len} < kernel width {TEMPORAL_KERNEL}"))
            } else {
                Ok(len - TEMPORAL_KERNEL + 1)
            }
        };
        let pool = |layer: usize, len: usize| {
            if len < POOL {
                invalid(layer, format!("input length {len} < pooling width {POOL}"))
            } else {
                Ok(len / POOL)
            }
        };
        let t1 = conv(1, self.in_samples)?;
        let t2 = conv(2, t1)?;
        let p4 = pool(4, t2)?;
        let t6 = conv(6, p4)?;
        let p7 = pool(7, t6)?;
        Ok(Dims {
            k: self.n_channels,
            s: self.in_samples,
            t1,
            t2,
            p4,
            t6,
            p7,
            flat: CONV6_FILTERS * p7,
        })
    }

    /// Smallest input length for which every layer has a non-empty output.
    pub fn min_in_samples() -> usize {
        // conv6 output must cover one pooling window, working backwards.
        let t6 = POOL;
        let p4 = t6 + TEMPORAL_KERNEL - 1;
        let t2 = p4 * POOL;
        t2 + 2 * (TEMPORAL_KERNEL - 1)
    }

    /// Shapes of the parameter tensors in declaration order: conv1 weight
    /// and bias, conv2, conv3 (spatial), conv6, dense.
    pub fn param_shapes(&self) -> Result<Vec<Vec<usize>>, NetError> {
        let d = self.dims()?;
        Ok(vec![
            vec![CONV1_FILTERS, 1, 1, TEMPORAL_KERNEL],
            vec![CONV1_FILTERS],
            vec![CONV2_FILTERS, CONV1_FILTERS, 1, TEMPORAL_KERNEL],
            vec![CONV2_FILTERS],
            vec![CONV3_FILTERS, CONV2_FILTERS, d.k, 1],
            vec![CONV3_FILTERS],
            vec![CONV6_FILTERS, CONV3_FILTERS, 1, TEMPORAL_KERNEL],
            vec![CONV6_FILTERS],
            vec![OUTPUT_CLASSES, d.flat],
            vec![OUTPUT_CLASSES],
        ])
    }
}

/// Per-layer output shapes (channels × height × width) of the network.
pub fn infer_shapes(spec: &ModelSpec) -> Result<Vec<LayerShape>, NetError> {
    let d = spec.dims()?;
    let row = |layer, kind, output: Option<Vec<usize>>| LayerShape { layer, kind, output };
    Ok(vec![
        row(1, LayerKind::Convolution, Some(vec![CONV1_FILTERS, d.k, d.t1])),
        row(2, LayerKind::Convolution, Some(vec![CONV2_FILTERS, d.k, d.t2])),
        row(3, LayerKind::Convolution, Some(vec![CONV3_FILTERS, 1, d.t2])),
        row(4, LayerKind::MaxPooling, Some(vec![CONV3_FILTERS, 1, d.p4])),
        row(5, LayerKind::Dropout, None),
        row(6, LayerKind::Convolution, Some(vec![CONV6_FILTERS, 1, d.t6])),
        row(7, LayerKind::MaxPooling, Some(vec![CONV6_FILTERS, 1, d.p7])),
        row(8, LayerKind::Flatten, Some(vec![1, d.flat])),
        row(9, LayerKind::Softmax, Some(vec![1, OUTPUT_CLASSES])),
    ])
}
