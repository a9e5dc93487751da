use std::path::Path;

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

/// A bundle of parameter tensors the optimizer and gradient checker can
/// walk as flat slices. Gradients use the same type as the parameters.
pub trait ParamSet: Clone {
    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;
    fn zeros_like(&self) -> Self;

    fn coord_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcnParams {
    /// `d × h`
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    /// `h × k_out`
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

impl GcnParams {
    pub fn zeros(d: usize, h: usize, k_out: usize) -> Self {
        Self {
            w1: Array2::zeros((d, h)),
            b1: Array1::zeros(h),
            w2: Array2::zeros((h, k_out)),
            b2: Array1::zeros(k_out),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.nrows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.w2.ncols()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

impl ParamSet for GcnParams {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![
            self.w1.as_slice().expect("standard layout"),
            self.b1.as_slice().expect("standard layout"),
            self.w2.as_slice().expect("standard layout"),
            self.b2.as_slice().expect("standard layout"),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.w1.as_slice_mut().expect("standard layout"),
            self.b1.as_slice_mut().expect("standard layout"),
            self.w2.as_slice_mut().expect("standard layout"),
            self.b2.as_slice_mut().expect("standard layout"),
        ]
    }

    fn zeros_like(&self) -> Self {
        Self::zeros(self.input_dim(), self.hidden_dim(), self.output_dim())
    }
}

/// Linear OOD head on frozen hidden features, no bias.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryHead {
    pub weights: Array1<f64>,
}

impl ParamSet for BinaryHead {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![self.weights.as_slice().expect("standard layout")]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.weights.as_slice_mut().expect("standard layout")]
    }

    fn zeros_like(&self) -> Self {
        Self {
            weights: Array1::zeros(self.weights.len()),
        }
    }
}

/// Glorot-uniform weights, zero biases.
pub fn init_params(d: usize, h: usize, k_out: usize, seed: u64) -> GcnParams {
    assert!(d >= 1 && h >= 1 && k_out >= 1, "parameter dims must be positive");
    let mut rng = rng::stream(seed, "gcn/init");
    let mut glorot = |rows: usize, cols: usize| {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-limit..limit))
    };
    let w1 = glorot(d, h);
    let w2 = glorot(h, k_out);
    GcnParams {
        w1,
        b1: Array1::zeros(h),
        w2,
        b2: Array1::zeros(k_out),
    }
}

/// `params.bin`: u32 d, u32 h, u32 k_out, then W1, b1, W2, b2 as f32
/// row-major, little-endian.
pub fn write_params(path: &Path, params: &GcnParams) -> Result<()> {
    let mut out = Vec::with_capacity(12 + params.coord_count() * 4);
    for dim in [params.input_dim(), params.hidden_dim(), params.output_dim()] {
        out.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    for tensor in params.tensors() {
        for &v in tensor {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_params(path: &Path) -> Result<GcnParams> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |message: String| Error::Parse {
        path: path.into(),
        line: 0,
        message,
    };
    if bytes.len() < 12 {
        return Err(bad("truncated header".into()));
    }
    let dim = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
    let (d, h, k) = (dim(0), dim(4), dim(8));
    let mut params = GcnParams::zeros(d, h, k);
    if bytes.len() != 12 + params.coord_count() * 4 {
        return Err(bad(format!("size does not match header {d}x{h}x{k}")));
    }
    let mut values = bytes[12..]
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())));
    for tensor in params.tensors_mut() {
        for slot in tensor {
            *slot = values.next().expect("length checked");
        }
    }
    Ok(params)
}
