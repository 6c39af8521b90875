//! Dense kernels for the layer types. Volumes are `[channel, z, y, x]`, x fastest.

use rayon::prelude::*;

use crate::scalar::Scalar;

/// Output coordinates `q` for which `q + k - 1` lies inside `[0, n)`.
#[inline]
fn valid(k: usize, n: usize) -> std::ops::Range<usize> {
    let lo = 1usize.saturating_sub(k);
    let hi = (n + 1 - k).min(n);
    lo..hi
}

pub(crate) fn conv3d_forward<T: Scalar>(
    input: &[T],
    in_c: usize,
    n: usize,
    weight: &[T],
    bias: &[T],
    out_c: usize,
) -> Vec<T> {
    let vol = n * n * n;
    let mut out = vec![T::zero(); out_c * vol];
    out.par_chunks_mut(vol).enumerate().for_each(|(o, plane)| {
        plane.iter_mut().for_each(|v| *v = bias[o]);
        for i in 0..in_c {
            let src = &input[i * vol..(i + 1) * vol];
            for kz in 0..3 {
                for ky in 0..3 {
                    for kx in 0..3 {
                        let w = weight[(((o * in_c + i) * 3 + kz) * 3 + ky) * 3 + kx];
                        if w == T::zero() {
                            continue;
                        }
                        let xs = valid(kx, n);
                        for z in valid(kz, n) {
                            let sz = z + kz - 1;
                            for y in valid(ky, n) {
                                let sy = y + ky - 1;
                                let dst = &mut plane[(z * n + y) * n..(z * n + y + 1) * n];
                                let row = &src[(sz * n + sy) * n..(sz * n + sy + 1) * n];
                                for x in xs.clone() {
                                    dst[x] += w * row[x + kx - 1];
                                }
                            }
                        }
                    }
                }
            }
        }
    });
    out
}

pub(crate) fn conv3d_backward_input<T: Scalar>(
    grad_out: &[T],
    in_c: usize,
    n: usize,
    weight: &[T],
    out_c: usize,
) -> Vec<T> {
    let vol = n * n * n;
    let mut grad_in = vec![T::zero(); in_c * vol];
    grad_in.par_chunks_mut(vol).enumerate().for_each(|(i, dst)| {
        for o in 0..out_c {
            let g = &grad_out[o * vol..(o + 1) * vol];
            for kz in 0..3 {
                for ky in 0..3 {
                    for kx in 0..3 {
                        let w = weight[(((o * in_c + i) * 3 + kz) * 3 + ky) * 3 + kx];
                        if w == T::zero() {
                            continue;
                        }
                        let xs = valid(kx, n);
                        for z in valid(kz, n) {
                            let sz = z + kz - 1;
                            for y in valid(ky, n) {
                                let sy = y + ky - 1;
                                let grow = &g[(z * n + y) * n..(z * n + y + 1) * n];
                                let drow = &mut dst[(sz * n + sy) * n..(sz * n + sy + 1) * n];
                                for x in xs.clone() {
                                    drow[x + kx - 1] += w * grow[x];
                                }
                            }
                        }
                    }
                }
            }
        }
    });
    grad_in
}

/// Returns `(d weight, d bias)`.
pub(crate) fn conv3d_backward_params<T: Scalar>(
    grad_out: &[T],
    input: &[T],
    in_c: usize,
    n: usize,
    out_c: usize,
) -> (Vec<T>, Vec<T>) {
    let vol = n * n * n;
    let per_out = in_c * 27;
    let mut dw = vec![T::zero(); out_c * per_out];
    dw.par_chunks_mut(per_out).enumerate().for_each(|(o, dwo)| {
        let g = &grad_out[o * vol..(o + 1) * vol];
        for i in 0..in_c {
            let src = &input[i * vol..(i + 1) * vol];
            for kz in 0..3 {
                for ky in 0..3 {
                    for kx in 0..3 {
                        let mut acc = T::zero();
                        let xs = valid(kx, n);
                        for z in valid(kz, n) {
                            let sz = z + kz - 1;
                            for y in valid(ky, n) {
                                let sy = y + ky - 1;
                                let grow = &g[(z * n + y) * n..(z * n + y + 1) * n];
                                let row = &src[(sz * n + sy) * n..(sz * n + sy + 1) * n];
                                for x in xs.clone() {
                                    acc += grow[x] * row[x + kx - 1];
                                }
                            }
                        }
                        dwo[(i * 3 + kz) * 9 + ky * 3 + kx] = acc;
                    }
                }
            }
        }
    });
    let db = (0..out_c)
        .map(|o| grad_out[o * vol..(o + 1) * vol].iter().copied().sum())
        .collect();
    (dw, db)
}

/// 2×2×2 max pooling, stride 2. Returns the pooled volume and, for each output, the
/// flat input index it was taken from; ties go to the lowest flat index.
pub(crate) fn maxpool_forward<T: Scalar>(input: &[T], channels: usize, n: usize) -> (Vec<T>, Vec<usize>) {
    let m = n / 2;
    let mut out = Vec::with_capacity(channels * m * m * m);
    let mut arg = Vec::with_capacity(channels * m * m * m);
    for c in 0..channels {
        let base = c * n * n * n;
        for z in 0..m {
            for y in 0..m {
                for x in 0..m {
                    let mut best_i = usize::MAX;
                    let mut best = T::neg_infinity();
                    for dz in 0..2 {
                        for dy in 0..2 {
                            for dx in 0..2 {
                                let i = base + ((2 * z + dz) * n + 2 * y + dy) * n + 2 * x + dx;
                                if best_i == usize::MAX || input[i] > best {
                                    best = input[i];
                                    best_i = i;
                                }
                            }
                        }
                    }
                    out.push(best);
                    arg.push(best_i);
                }
            }
        }
    }
    (out, arg)
}

pub(crate) fn maxpool_backward<T: Scalar>(grad_out: &[T], argmax: &[usize], input_len: usize) -> Vec<T> {
    let mut g = vec![T::zero(); input_len];
    for (&a, &v) in argmax.iter().zip(grad_out) {
        g[a] += v;
    }
    g
}

pub(crate) fn dense_forward<T: Scalar>(x: &[T], weight: &[T], bias: &[T]) -> Vec<T> {
    let n = x.len();
    bias.iter()
        .enumerate()
        .map(|(j, &b)| {
            let row = &weight[j * n..(j + 1) * n];
            let mut acc = b;
            for (&w, &v) in row.iter().zip(x) {
                acc += w * v;
            }
            acc
        })
        .collect()
}

pub(crate) fn dense_backward_input<T: Scalar>(grad_out: &[T], weight: &[T], in_len: usize) -> Vec<T> {
    let mut g = vec![T::zero(); in_len];
    for (j, &go) in grad_out.iter().enumerate() {
        if go == T::zero() {
            continue;
        }
        let row = &weight[j * in_len..(j + 1) * in_len];
        for (gi, &w) in g.iter_mut().zip(row) {
            *gi += w * go;
        }
    }
    g
}

pub(crate) fn dense_backward_params<T: Scalar>(grad_out: &[T], x: &[T]) -> (Vec<T>, Vec<T>) {
    let mut dw = Vec::with_capacity(grad_out.len() * x.len());
    for &go in grad_out {
        dw.extend(x.iter().map(|&v| go * v));
    }
    (dw, grad_out.to_vec())
}

pub(crate) fn relu<T: Scalar>(x: &[T]) -> Vec<T> {
    x.iter().map(|&v| if v > T::zero() { v } else { T::zero() }).collect()
}

pub(crate) fn relu_backward<T: Scalar>(grad_out: &[T], pre: &[T]) -> Vec<T> {
    grad_out
        .iter()
        .zip(pre)
        .map(|(&g, &p)| if p > T::zero() { g } else { T::zero() })
        .collect()
}

/// Numerically stable two-class softmax.
pub fn softmax2<T: Scalar>(logits: [T; 2]) -> [T; 2] {
    let m = logits[0].max(logits[1]);
    let e = [(logits[0] - m).exp(), (logits[1] - m).exp()];
    let s = e[0] + e[1];
    [e[0] / s, e[1] / s]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv_identity_kernel() {
        let n = 3;
        let input: Vec<f64> = (0..27).map(|v| v as f64).collect();
        let mut w = vec![0.0; 27];
        w[13] = 2.0;
        let out = conv3d_forward(&input, 1, n, &w, &[0.5], 1);
        for (o, i) in out.iter().zip(&input) {
            assert_eq!(*o, 2.0 * i + 0.5);
        }
    }

    #[test]
    fn pool_ties_go_low() {
        let input = vec![1.0f64; 8];
        let (out, arg) = maxpool_forward(&input, 1, 2);
        assert_eq!(out, vec![1.0]);
        assert_eq!(arg, vec![0]);
        let mut input = vec![0.0f64; 8];
        input[5] = 3.0;
        input[7] = 3.0;
        assert_eq!(maxpool_forward(&input, 1, 2).1, vec![5]);
    }

    #[test]
    fn softmax_sums_to_one() {
        for l in [[0.0, 0.0], [20.0, -20.0], [700.0, 699.0], [-3.5, 1.25]] {
            let p = softmax2::<f64>(l);
            assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
