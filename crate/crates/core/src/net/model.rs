//! Network parameters, forward pass and backpropagation.
//!
//! Layers 1 and 2 are consecutive temporal convolutions with no activation
//! between them, so per batch they are composed into a single
//! `FUSED_KERNEL`-tap convolution (`kf`, `bf`). The composition is exact;
//! gradients with respect to the composed kernel are mapped back onto both
//! original parameter tensors.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng as _;
use rand_distr::{Distribution, Uniform};

use super::scalar::{gemm, MatRef};
use super::spec::{
    Dims, CONV1_FILTERS as F1, CONV2_FILTERS as F2, CONV3_FILTERS as F3, CONV6_FILTERS as F6,
    FUSED_KERNEL as KF, OUTPUT_CLASSES as NC, POOL, TEMPORAL_KERNEL as KT,
};
use super::{ModelSpec, NetError, Scalar, Tensor};
use crate::par;
use crate::rng::{derive_seed, purpose, rng_from_seed};

/// Parameter tensor indices, in declaration (and checkpoint) order.
pub mod param {
    pub const CONV1_W: usize = 0;
    pub const CONV1_B: usize = 1;
    pub const CONV2_W: usize = 2;
    pub const CONV2_B: usize = 3;
    pub const CONV3_W: usize = 4;
    pub const CONV3_B: usize = 5;
    pub const CONV6_W: usize = 6;
    pub const CONV6_B: usize = 7;
    pub const DENSE_W: usize = 8;
    pub const DENSE_B: usize = 9;
    pub const COUNT: usize = 10;
    pub const NAMES: [&str; COUNT] = [
        "conv1.weight", "conv1.bias", "conv2.weight", "conv2.bias", "conv3.weight",
        "conv3.bias", "conv6.weight", "conv6.bias", "dense.weight", "dense.bias",
    ];
}
use param::*;

static NEXT_VERSION: AtomicU64 = AtomicU64::new(1);

fn next_version() -> u64 {
    NEXT_VERSION.fetch_add(1, Ordering::Relaxed)
}

/// Forward-pass behaviour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Eval,
    /// Dropout active with probability `dropout_p`; masks are drawn from
    /// `seed` and the sample's position in the batch.
    Train { dropout_p: f64, seed: u64 },
}

/// One gradient tensor per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub tensors: Vec<Tensor<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_like(params: &[Tensor<T>]) -> Self {
        Self { tensors: params.iter().map(|p| Tensor::zeros(p.shape())).collect() }
    }

    pub fn max_abs(&self) -> T {
        self.tensors.iter().fold(T::zero(), |m, t| m.max(t.max_abs()))
    }
}

#[derive(Debug, Clone)]
pub struct Model<T> {
    spec: ModelSpec,
    dims: Dims,
    params: Vec<Tensor<T>>,
    version: u64,
}

/// Activations retained for backpropagation of one sample.
#[derive(Debug)]
pub(crate) struct SampleCache<T> {
    h2: Vec<T>,
    h3: Vec<T>,
    arg4: Vec<u32>,
    mask5: Option<Vec<T>>,
    d5: Vec<T>,
    h6: Vec<T>,
    arg7: Vec<u32>,
    flat: Vec<T>,
    logits: [T; NC],
}

/// Output of [`Model::forward`]: class probabilities plus the cache that
/// [`Model::backward`] consumes.
#[derive(Debug)]
pub struct ForwardPass<'a, T> {
    pub probs: Vec<[T; NC]>,
    inputs: Vec<&'a [T]>,
    caches: Vec<SampleCache<T>>,
    version: u64,
}

impl<T> ForwardPass<'_, T> {
    pub fn batch_size(&self) -> usize {
        self.probs.len()
    }
}

/// Layers 1–2 composed into one temporal kernel.
struct Fused<T> {
    kf: Vec<T>,
    bf: Vec<T>,
}

fn elu<T: Scalar>(v: &mut [T]) {
    for x in v {
        if *x <= T::zero() {
            *x = x.exp() - T::one();
        }
    }
}

/// ELU derivative expressed through the activation's output.
#[inline]
fn elu_grad<T: Scalar>(h: T) -> T {
    if h > T::zero() {
        T::one()
    } else {
        h + T::one()
    }
}

fn max_pool<T: Scalar>(x: &[T], rows: usize, len: usize, out_len: usize) -> (Vec<T>, Vec<u32>) {
    let mut out = Vec::with_capacity(rows * out_len);
    let mut arg = Vec::with_capacity(rows * out_len);
    for r in 0..rows {
        let row = &x[r * len..(r + 1) * len];
        for u in 0..out_len {
            let start = u * POOL;
            let mut best = start;
            for t in start + 1..start + POOL {
                if row[t] > row[best] {
                    best = t;
                }
            }
            out.push(row[best]);
            arg.push(best as u32);
        }
    }
    (out, arg)
}

/// Row-wise log-sum-exp softmax.
fn softmax<T: Scalar>(z: &[T; NC]) -> [T; NC] {
    let max = z.iter().copied().fold(T::neg_infinity(), T::max);
    let e: Vec<T> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: T = e.iter().copied().sum();
    [e[0] / sum, e[1] / sum, e[2] / sum]
}

/// Keep-mask scaled by `1/(1−p)` (inverted dropout).
pub fn dropout_mask<T: Scalar>(len: usize, p: f64, seed: u64) -> Vec<T> {
    if p <= 0.0 {
        return vec![T::one(); len];
    }
    let scale = T::from_f64_lossy(1.0 / (1.0 - p));
    let mut rng = rng_from_seed(seed);
    (0..len)
        .map(|_| if rng.random::<f64>() < p { T::zero() } else { scale })
        .collect()
}

impl<T: Scalar> Model<T> {
    /// Convolutions get fan-in scaled uniform weights `U(±√(3/fan_in))`;
    /// biases and the dense layer start at zero.
    pub fn new(spec: ModelSpec, seed: u64) -> Result<Self, NetError> {
        let mut model = Self::zeros(spec)?;
        let mut rng = rng_from_seed(derive_seed(seed, purpose::INIT, 0));
        for idx in [CONV1_W, CONV2_W, CONV3_W, CONV6_W] {
            let shape = model.params[idx].shape().to_vec();
            let fan_in: usize = shape[1..].iter().product();
            let bound = (3.0 / fan_in as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
            for w in model.params[idx].data_mut() {
                *w = T::from_f64_lossy(dist.sample(&mut rng));
            }
        }
        Ok(model)
    }

    pub fn zeros(spec: ModelSpec) -> Result<Self, NetError> {
        let dims = spec.dims()?;
        let params = spec.param_shapes()?.iter().map(|s| Tensor::zeros(s)).collect();
        Ok(Self { spec, dims, params, version: next_version() })
    }

    pub fn spec(&self) -> ModelSpec {
        self.spec
    }

    pub fn params(&self) -> &[Tensor<T>] {
        &self.params
    }

    /// Mutable parameter access; invalidates outstanding forward caches.
    pub fn params_mut(&mut self) -> &mut [Tensor<T>] {
        self.version = next_version();
        &mut self.params
    }

    pub fn n_parameters(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(Tensor::all_finite)
    }

    fn fused(&self) -> Fused<T> {
        let w1 = self.params[CONV1_W].data();
        let b1 = self.params[CONV1_B].data();
        let w2 = self.params[CONV2_W].data();
        let b2 = self.params[CONV2_B].data();
        let mut kf = vec![T::zero(); F2 * KF];
        let mut bf = b2.to_vec();
        for o in 0..F2 {
            for i in 0..F1 {
                let w2_oi = &w2[(o * F1 + i) * KT..(o * F1 + i + 1) * KT];
                let w1_i = &w1[i * KT..(i + 1) * KT];
                for (k, &a) in w2_oi.iter().enumerate() {
                    let row = &mut kf[o * KF + k..o * KF + k + KT];
                    for (dst, &b) in row.iter_mut().zip(w1_i) {
                        *dst = *dst + a * b;
                    }
                }
                let tap_sum: T = w2_oi.iter().copied().sum();
                bf[o] = bf[o] + b1[i] * tap_sum;
            }
        }
        Fused { kf, bf }
    }

    /// `[KF, K·t2]` patch matrix: row `m`, column `c·t2 + t` holds `x[c][t + m]`.
    fn temporal_patches(&self, x: &[T]) -> Vec<T> {
        let Dims { k, s, t2, .. } = self.dims;
        let mut p = vec![T::zero(); KF * k * t2];
        for m in 0..KF {
            for c in 0..k {
                let dst = m * k * t2 + c * t2;
                p[dst..dst + t2].copy_from_slice(&x[c * s + m..c * s + m + t2]);
            }
        }
        p
    }

    /// Transpose of [`Self::temporal_patches`], `[K·t2, KF]`. Each row is a
    /// contiguous slice of the input, and this layout keeps the weight
    /// gradient GEMM off the strided packing path.
    fn temporal_patches_t(&self, x: &[T]) -> Vec<T> {
        let Dims { k, s, t2, .. } = self.dims;
        let mut p = vec![T::zero(); k * t2 * KF];
        for c in 0..k {
            for t in 0..t2 {
                let dst = (c * t2 + t) * KF;
                p[dst..dst + KF].copy_from_slice(&x[c * s + t..c * s + t + KF]);
            }
        }
        p
    }

    /// `[F3·KT, t6]` patch matrix of the pooled/dropped activations.
    fn conv6_patches(&self, d5: &[T]) -> Vec<T> {
        let Dims { p4, t6, .. } = self.dims;
        let mut q = vec![T::zero(); F3 * KT * t6];
        for i in 0..F3 {
            for kk in 0..KT {
                let dst = (i * KT + kk) * t6;
                q[dst..dst + t6].copy_from_slice(&d5[i * p4 + kk..i * p4 + kk + t6]);
            }
        }
        q
    }

    fn forward_one(&self, fused: &Fused<T>, x: &[T], mask_seed: Option<(f64, u64)>) -> SampleCache<T> {
        let Dims { k, t2, p4, t6, p7, flat, .. } = self.dims;

        // layers 1+2 (fused), ELU
        let patches = self.temporal_patches(x);
        let mut h2 = vec![T::zero(); F2 * k * t2];
        for o in 0..F2 {
            h2[o * k * t2..(o + 1) * k * t2].fill(fused.bf[o]);
        }
        gemm(MatRef::new(&fused.kf, F2, KF), MatRef::new(&patches, KF, k * t2), T::one(), &mut h2);
        drop(patches);
        elu(&mut h2);

        // layer 3: spatial convolution over all channels, ELU
        let b3 = self.params[CONV3_B].data();
        let mut h3 = vec![T::zero(); F3 * t2];
        for o in 0..F3 {
            h3[o * t2..(o + 1) * t2].fill(b3[o]);
        }
        gemm(
            MatRef::new(self.params[CONV3_W].data(), F3, F2 * k),
            MatRef::new(&h2, F2 * k, t2),
            T::one(),
            &mut h3,
        );
        elu(&mut h3);

        // layer 4 pooling, layer 5 dropout
        let (p4v, arg4) = max_pool(&h3, F3, t2, p4);
        let mask5 = mask_seed.map(|(p, seed)| dropout_mask::<T>(p4v.len(), p, seed));
        let d5 = match &mask5 {
            Some(m) => p4v.iter().zip(m).map(|(&a, &b)| a * b).collect(),
            None => p4v,
        };

        // layer 6 convolution, ELU
        let q = self.conv6_patches(&d5);
        let b6 = self.params[CONV6_B].data();
        let mut h6 = vec![T::zero(); F6 * t6];
        for o in 0..F6 {
            h6[o * t6..(o + 1) * t6].fill(b6[o]);
        }
        gemm(
            MatRef::new(self.params[CONV6_W].data(), F6, F3 * KT),
            MatRef::new(&q, F3 * KT, t6),
            T::one(),
            &mut h6,
        );
        elu(&mut h6);

        // layers 7–9
        let (flat_v, arg7) = max_pool(&h6, F6, t6, p7);
        debug_assert_eq!(flat_v.len(), flat);
        let wd = self.params[DENSE_W].data();
        let bd = self.params[DENSE_B].data();
        let mut logits = [T::zero(); NC];
        for (j, z) in logits.iter_mut().enumerate() {
            *z = bd[j] + wd[j * flat..(j + 1) * flat].iter().zip(&flat_v).map(|(&w, &f)| w * f).sum();
        }
        SampleCache { h2, h3, arg4, mask5, d5, h6, arg7, flat: flat_v, logits }
    }

    fn check_input(&self, x: &[T]) -> Result<(), NetError> {
        let expected = self.dims.k * self.dims.s;
        if x.len() != expected {
            return Err(NetError::ShapeMismatch {
                expected: vec![1, self.dims.k, self.dims.s],
                found: vec![x.len()],
            });
        }
        Ok(())
    }

    /// Forward pass over a `[B, 1, K, S]` batch.
    pub fn forward<'a>(&self, batch: &'a Tensor<T>, mode: Mode) -> Result<ForwardPass<'a, T>, NetError> {
        let shape = batch.shape();
        let want = [1, self.dims.k, self.dims.s];
        if shape.len() != 4 || shape[1..] != want {
            return Err(NetError::ShapeMismatch {
                expected: vec![shape.first().copied().unwrap_or(0), 1, self.dims.k, self.dims.s],
                found: shape.to_vec(),
            });
        }
        let inputs: Vec<&[T]> = batch.data().chunks(self.dims.k * self.dims.s).collect();
        self.forward_samples(&inputs, mode)
    }

    /// Forward pass over per-sample `[K × S]` row-major slices.
    pub fn forward_samples<'a>(&self, inputs: &[&'a [T]], mode: Mode) -> Result<ForwardPass<'a, T>, NetError> {
        for x in inputs {
            self.check_input(x)?;
        }
        let fused = self.fused();
        let caches = par::map_range(inputs.len(), |b| {
            let mask = match mode {
                Mode::Eval => None,
                Mode::Train { dropout_p, seed } => {
                    Some((dropout_p, derive_seed(seed, purpose::DROPOUT, b as u64)))
                }
            };
            self.forward_one(&fused, inputs[b], mask)
        });
        let probs = caches.iter().map(|c| softmax(&c.logits)).collect();
        Ok(ForwardPass { probs, inputs: inputs.to_vec(), caches, version: self.version })
    }

    /// Inference-mode class probabilities, processed in bounded chunks.
    pub fn predict(&self, inputs: &[&[T]]) -> Result<Vec<[T; NC]>, NetError> {
        const CHUNK: usize = 32;
        let mut out = Vec::with_capacity(inputs.len());
        for chunk in inputs.chunks(CHUNK) {
            out.extend(self.forward_samples(chunk, Mode::Eval)?.probs);
        }
        Ok(out)
    }

    /// Mean categorical cross-entropy of `pass` against `labels` and its
    /// gradient with respect to every parameter.
    pub fn backward(&self, pass: &ForwardPass<'_, T>, labels: &[usize]) -> Result<(Gradients<T>, T), NetError> {
        if pass.version != self.version {
            return Err(NetError::StaleCache);
        }
        if labels.len() != pass.batch_size() || pass.batch_size() == 0 {
            return Err(NetError::LabelCount { labels: labels.len(), batch: pass.batch_size() });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= NC) {
            return Err(NetError::InvalidLabel(bad));
        }
        let b = T::from_usize(labels.len()).expect("batch size fits");

        let mut loss = T::zero();
        for (c, &y) in pass.caches.iter().zip(labels) {
            let max = c.logits.iter().copied().fold(T::neg_infinity(), T::max);
            let lse = max + c.logits.iter().map(|&z| (z - max).exp()).sum::<T>().ln();
            loss = loss + (lse - c.logits[y]);
        }
        loss = loss / b;

        let per_sample = par::map_range(labels.len(), |i| {
            let mut dz = pass.probs[i];
            dz[labels[i]] = dz[labels[i]] - T::one();
            dz.iter_mut().for_each(|v| *v = *v / b);
            self.backward_one(&pass.caches[i], pass.inputs[i], &dz)
        });

        let mut grads = Gradients::zeros_like(&self.params);
        let mut kf = vec![T::zero(); F2 * KF];
        let mut bf = vec![T::zero(); F2];
        for g in &per_sample {
            add(grads.tensors[DENSE_W].data_mut(), &g.wd);
            add(grads.tensors[DENSE_B].data_mut(), &g.bd);
            add(grads.tensors[CONV6_W].data_mut(), &g.w6);
            add(grads.tensors[CONV6_B].data_mut(), &g.b6);
            add(grads.tensors[CONV3_W].data_mut(), &g.w3);
            add(grads.tensors[CONV3_B].data_mut(), &g.b3);
            add(&mut kf, &g.kf);
            add(&mut bf, &g.bf);
        }
        self.unfuse_grads(&kf, &bf, &mut grads);
        Ok((grads, loss))
    }

    fn backward_one(&self, c: &SampleCache<T>, x: &[T], dz: &[T; NC]) -> SampleGrads<T> {
        let Dims { k, t2, p4, t6, p7, flat, .. } = self.dims;

        // dense
        let wd = self.params[DENSE_W].data();
        let mut g_wd = vec![T::zero(); NC * flat];
        let mut dflat = vec![T::zero(); flat];
        for j in 0..NC {
            for f in 0..flat {
                g_wd[j * flat + f] = dz[j] * c.flat[f];
                dflat[f] = dflat[f] + wd[j * flat + f] * dz[j];
            }
        }

        // pool 7, ELU 6
        let mut da6 = vec![T::zero(); F6 * t6];
        for o in 0..F6 {
            for u in 0..p7 {
                let t = c.arg7[o * p7 + u] as usize;
                da6[o * t6 + t] = da6[o * t6 + t] + dflat[o * p7 + u];
            }
        }
        for (d, &h) in da6.iter_mut().zip(&c.h6) {
            *d = *d * elu_grad(h);
        }

        // conv 6
        let q = self.conv6_patches(&c.d5);
        let mut g_w6 = vec![T::zero(); F6 * F3 * KT];
        gemm(MatRef::new(&da6, F6, t6), MatRef::new(&q, F3 * KT, t6).t(), T::zero(), &mut g_w6);
        let g_b6 = row_sums(&da6, F6, t6);
        let mut dq = vec![T::zero(); F3 * KT * t6];
        gemm(
            MatRef::new(self.params[CONV6_W].data(), F6, F3 * KT).t(),
            MatRef::new(&da6, F6, t6),
            T::zero(),
            &mut dq,
        );
        let mut dd5 = vec![T::zero(); F3 * p4];
        for i in 0..F3 {
            for kk in 0..KT {
                let src = &dq[(i * KT + kk) * t6..(i * KT + kk + 1) * t6];
                let dst = &mut dd5[i * p4 + kk..i * p4 + kk + t6];
                dst.iter_mut().zip(src).for_each(|(d, &s)| *d = *d + s);
            }
        }

        // dropout 5, pool 4, ELU 3
        if let Some(mask) = &c.mask5 {
            dd5.iter_mut().zip(mask).for_each(|(d, &m)| *d = *d * m);
        }
        let mut da3 = vec![T::zero(); F3 * t2];
        for o in 0..F3 {
            for u in 0..p4 {
                let t = c.arg4[o * p4 + u] as usize;
                da3[o * t2 + t] = da3[o * t2 + t] + dd5[o * p4 + u];
            }
        }
        for (d, &h) in da3.iter_mut().zip(&c.h3) {
            *d = *d * elu_grad(h);
        }

        // conv 3 (spatial)
        let mut g_w3 = vec![T::zero(); F3 * F2 * k];
        gemm(MatRef::new(&da3, F3, t2), MatRef::new(&c.h2, F2 * k, t2).t(), T::zero(), &mut g_w3);
        let g_b3 = row_sums(&da3, F3, t2);
        let mut da2 = vec![T::zero(); F2 * k * t2];
        gemm(
            MatRef::new(self.params[CONV3_W].data(), F3, F2 * k).t(),
            MatRef::new(&da3, F3, t2),
            T::zero(),
            &mut da2,
        );
        for (d, &h) in da2.iter_mut().zip(&c.h2) {
            *d = *d * elu_grad(h);
        }

        // fused temporal kernel
        let patches = self.temporal_patches_t(x);
        let mut g_kf = vec![T::zero(); F2 * KF];
        gemm(MatRef::new(&da2, F2, k * t2), MatRef::new(&patches, k * t2, KF), T::zero(), &mut g_kf);
        let g_bf = row_sums(&da2, F2, k * t2);

        SampleGrads { wd: g_wd, bd: dz.to_vec(), w6: g_w6, b6: g_b6, w3: g_w3, b3: g_b3, kf: g_kf, bf: g_bf }
    }

    /// Chain rule from the composed kernel back to conv1/conv2 parameters.
    fn unfuse_grads(&self, g_kf: &[T], g_bf: &[T], grads: &mut Gradients<T>) {
        let w1 = self.params[CONV1_W].data();
        let b1 = self.params[CONV1_B].data();
        let w2 = self.params[CONV2_W].data();
        let mut g_w1 = vec![T::zero(); F1 * KT];
        let mut g_b1 = vec![T::zero(); F1];
        let mut g_w2 = vec![T::zero(); F2 * F1 * KT];
        for o in 0..F2 {
            let gk = &g_kf[o * KF..(o + 1) * KF];
            for i in 0..F1 {
                let base = (o * F1 + i) * KT;
                let w1_i = &w1[i * KT..(i + 1) * KT];
                let mut tap_sum = T::zero();
                for kk in 0..KT {
                    let w2v = w2[base + kk];
                    tap_sum = tap_sum + w2v;
                    let mut acc = g_bf[o] * b1[i];
                    for j in 0..KT {
                        acc = acc + gk[kk + j] * w1_i[j];
                        g_w1[i * KT + j] = g_w1[i * KT + j] + gk[kk + j] * w2v;
                    }
                    g_w2[base + kk] = acc;
                }
                g_b1[i] = g_b1[i] + g_bf[o] * tap_sum;
            }
        }
        grads.tensors[CONV1_W].data_mut().copy_from_slice(&g_w1);
        grads.tensors[CONV1_B].data_mut().copy_from_slice(&g_b1);
        grads.tensors[CONV2_W].data_mut().copy_from_slice(&g_w2);
        grads.tensors[CONV2_B].data_mut().copy_from_slice(g_bf);
    }
}

struct SampleGrads<T> {
    wd: Vec<T>,
    bd: Vec<T>,
    w6: Vec<T>,
    b6: Vec<T>,
    w3: Vec<T>,
    b3: Vec<T>,
    kf: Vec<T>,
    bf: Vec<T>,
}

fn add<T: Scalar>(dst: &mut [T], src: &[T]) {
    dst.iter_mut().zip(src).for_each(|(d, &s)| *d = *d + s);
}

fn row_sums<T: Scalar>(x: &[T], rows: usize, cols: usize) -> Vec<T> {
    (0..rows).map(|r| x[r * cols..(r + 1) * cols].iter().copied().sum()).collect()
}
