#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use rectex::compression::UMatrix;
use rectex::nalgebra::DMatrix;
use rectex::{AffineUnit, Layer, ReluNetwork, ThresholdNetwork};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn point(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| normal(rng)).collect()
}

pub fn random_unit(rng: &mut impl Rng, d: usize) -> AffineUnit {
    AffineUnit::new(point(rng, d), normal(rng)).unwrap()
}

pub fn random_relu(rng: &mut impl Rng, n1: usize, n2: usize, d: usize) -> ReluNetwork {
    let p = (0..n1).map(|_| random_unit(rng, d)).collect();
    let n = (0..n2).map(|_| random_unit(rng, d)).collect();
    ReluNetwork::new(d, p, n, normal(rng)).unwrap()
}

pub fn random_threshold2(rng: &mut impl Rng, m: usize, d: usize) -> ThresholdNetwork {
    let hidden: Vec<AffineUnit> = (0..m).map(|_| random_unit(rng, d)).collect();
    let out = (0..m).map(|_| normal(rng)).collect();
    ThresholdNetwork::two_layer(d, &hidden, out, normal(rng)).unwrap()
}

/// Random `U` with the zero weight block in its last column.
pub fn random_u(rng: &mut impl Rng, n: usize, d: usize) -> UMatrix {
    let units: Vec<AffineUnit> = (0..n).map(|_| random_unit(rng, d)).collect();
    UMatrix::from_parts(&units, normal(rng)).unwrap()
}

pub fn relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

fn affine(w: &[f64], b: f64, x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b
}

/// Direct evaluation of `sgn(w0 + sum_P R - sum_N R)`, as `true` for +1.
pub fn relu_oracle(net: &ReluNetwork, x: &[f64]) -> bool {
    let p: f64 = net.positive().iter().map(|u| relu(affine(u.weights(), u.bias(), x))).sum();
    let n: f64 = net.negative().iter().map(|u| relu(affine(u.weights(), u.bias(), x))).sum();
    net.w0() + p - n >= 0.0
}

/// Direct layer-by-layer evaluation of a sign network.
pub fn threshold_oracle(net: &ThresholdNetwork, x: &[f64]) -> bool {
    let mut h = x.to_vec();
    for layer in net.layers() {
        h = layer_signs(layer, &h);
    }
    h[0] > 0.0
}

fn layer_signs(layer: &Layer, x: &[f64]) -> Vec<f64> {
    (0..layer.outputs())
        .map(|i| if affine(&layer.weight_row(i), layer.bias()[i], x) >= 0.0 { 1.0 } else { -1.0 })
        .collect()
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `T = [T_n; 1]` built from the bit strings of `0..2^n`, most significant bit in row 0.
pub fn extended_encoding(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n + 1, 1 << n, |r, c| if r == n { 1.0 } else { ((c >> (n - 1 - r)) & 1) as f64 })
}

/// `||A^T||_inf` as the largest column L1 norm of `A`.
pub fn column_l1_max(a: &DMatrix<f64>) -> f64 {
    (0..a.ncols()).map(|c| a.column(c).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Smallest `max_c sum_r |(V - U T)_{rc}|` over `U` with the zero block, by nested grid zooming.
pub fn grid_min_infnorm(v: &DMatrix<f64>, n: usize) -> f64 {
    let rows = v.nrows();
    let d = rows - 1;
    let t = extended_encoding(n);
    // Free entries: every unit column, plus w0 in the bias row.
    let free: Vec<(usize, usize)> =
        (0..rows).flat_map(|r| (0..n).map(move |c| (r, c))).chain(std::iter::once((d, n))).collect();
    let k = free.len();
    let cols = v.ncols();
    let eval = |vals: &[f64]| {
        let mut worst = 0.0f64;
        for c in 0..cols {
            let mut sum = 0.0;
            for r in 0..rows {
                let mut fit = 0.0;
                for (&(fr, fc), &x) in free.iter().zip(vals) {
                    if fr == r {
                        fit += x * t[(fc, c)];
                    }
                }
                sum += (v[(r, c)] - fit).abs();
            }
            worst = worst.max(sum);
        }
        worst
    };
    let steps = 10usize;
    let mut center = vec![0.0; k];
    let mut half = 2.0 * v.iter().map(|x| x.abs()).fold(0.0, f64::max) + 1.0;
    let mut best = f64::INFINITY;
    let mut idx = vec![0usize; k];
    let mut vals = vec![0.0; k];
    while half > 1e-6 {
        let spacing = 2.0 * half / steps as f64;
        let mut arg = center.clone();
        idx.iter_mut().for_each(|i| *i = 0);
        loop {
            for j in 0..k {
                vals[j] = center[j] - half + spacing * idx[j] as f64;
            }
            let f = eval(&vals);
            if f < best {
                best = f;
                arg.copy_from_slice(&vals);
            }
            let mut j = 0;
            while j < k {
                idx[j] += 1;
                if idx[j] <= steps {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if j == k {
                break;
            }
        }
        center = arg;
        half = 2.0 * spacing;
    }
    best
}
