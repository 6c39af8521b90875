//! First-convolution filter summaries: per-channel weight averages, flattened weight
//! vectors, average-linkage clustering and switched-off filter detection.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::molio::AtomTypeTable;
use crate::scalar::Scalar;
use crate::tensornet::{Layer, Network, Shape};

/// Weights per 3×3×3 kernel.
pub const KERNEL: usize = 27;
/// Flat position of the kernel center in `(z, y, x)` order.
pub const KERNEL_CENTER: usize = 13;

/// Weights and biases of one convolution, `weights` in `[out, in, z, y, x]` order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvFilters<T> {
    pub out_channels: usize,
    pub in_channels: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> ConvFilters<T> {
    pub fn new(out_channels: usize, in_channels: usize, weights: Vec<T>, bias: Vec<T>) -> Result<Self> {
        if weights.len() != out_channels * in_channels * KERNEL || bias.len() != out_channels {
            return Err(Error::Shape(format!(
                "{} weights and {} biases for {out_channels}×{in_channels} filters",
                weights.len(),
                bias.len()
            )));
        }
        Ok(ConvFilters {
            out_channels,
            in_channels,
            weights,
            bias,
        })
    }

    /// The network's first convolution.
    pub fn first_conv(net: &Network<T>) -> Result<Self> {
        let layer = net
            .spec()
            .first_conv()
            .ok_or_else(|| Error::InvalidArgument("model has no convolution layer".into()))?;
        let (Layer::Conv3d { out_channels }, Shape::Volume { channels, .. }) =
            (net.spec().trunk[layer], net.input_shape_of(layer))
        else {
            unreachable!("first_conv points at a convolution on a volume");
        };
        let (w, b) = net.weights().layer(layer).expect("conv params");
        Self::new(out_channels, channels, w.to_vec(), b.to_vec())
    }

    pub fn filter(&self, o: usize) -> &[T] {
        let n = self.in_channels * KERNEL;
        &self.weights[o * n..(o + 1) * n]
    }
}

/// Per filter: the mean of each channel's 27 weights, then the bias divided by 27.
pub fn channel_averages<T: Scalar>(filters: &ConvFilters<T>) -> Vec<Vec<T>> {
    let k = T::of(KERNEL as f64);
    (0..filters.out_channels)
        .map(|o| {
            let mut row: Vec<T> = filters
                .filter(o)
                .chunks(KERNEL)
                .map(|c| c.iter().copied().sum::<T>() / k)
                .collect();
            row.push(filters.bias[o] / k);
            row
        })
        .collect()
}

/// Per filter: channel-major vector of `in_channels × 27` weights, `(z, y, x)` within
/// each channel.
pub fn flatten_filters<T: Scalar>(filters: &ConvFilters<T>) -> Vec<Vec<T>> {
    (0..filters.out_channels).map(|o| filters.filter(o).to_vec()).collect()
}

/// Inverse of one row of [`flatten_filters`]: `cubes[channel][z][y][x]`.
pub fn unflatten_filter<T: Scalar>(flat: &[T]) -> Result<Vec<[[[T; 3]; 3]; 3]>> {
    if !flat.len().is_multiple_of(KERNEL) {
        return Err(Error::Shape(format!("{} weights is not a whole number of 3³ kernels", flat.len())));
    }
    Ok(flat
        .chunks(KERNEL)
        .map(|c| std::array::from_fn(|z| std::array::from_fn(|y| std::array::from_fn(|x| c[(z * 3 + y) * 3 + x]))))
        .collect())
}

/// One agglomeration step; `left` and `right` index leaves `0..n` or earlier merges `n..`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub leaves: usize,
    pub merges: Vec<Merge>,
    /// Leaf order; at every merge the subtree with the smaller leaf index comes first.
    pub order: Vec<usize>,
}

fn euclidean<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y).as_f64().powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Average-linkage agglomerative clustering under the Euclidean metric. Equal
/// distances merge the pair with the lowest leaf indices first.
pub fn cluster_filters<T: Scalar>(vectors: &[Vec<T>]) -> Result<Dendrogram> {
    let n = vectors.len();
    if n == 0 {
        return Err(Error::InvalidArgument("no filters to cluster".into()));
    }
    if vectors.iter().any(|v| v.len() != vectors[0].len()) {
        return Err(Error::Shape("filter vectors differ in length".into()));
    }
    // Active clusters: (node id, min leaf, size); distances between active slots.
    let mut active: Vec<(usize, usize, usize)> = (0..n).map(|i| (i, i, 1)).collect();
    let mut dist: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| euclidean(&vectors[i], &vectors[j])).collect())
        .collect();
    let mut children: Vec<(usize, usize)> = Vec::new();
    let mut merges = Vec::new();
    while active.len() > 1 {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for a in 0..active.len() {
            for b in a + 1..active.len() {
                let (lo, hi) = {
                    let (ma, mb) = (active[a].1, active[b].1);
                    (ma.min(mb), ma.max(mb))
                };
                let cand = (dist[a][b], lo, hi, a, b);
                let better = match best {
                    None => true,
                    Some(cur) => (cand.0, cand.1, cand.2) < (cur.0, cur.1, cur.2),
                };
                if better {
                    best = Some(cand);
                }
            }
        }
        let (d, _, _, a, b) = best.expect("at least two clusters");
        let (ia, ma, sa) = active[a];
        let (ib, mb, sb) = active[b];
        let (left, right) = if ma < mb { (ia, ib) } else { (ib, ia) };
        let id = n + children.len();
        children.push((left, right));
        merges.push(Merge {
            left,
            right,
            distance: d,
            size: sa + sb,
        });
        let merged: Vec<f64> = (0..active.len())
            .map(|k| (sa as f64 * dist[a][k] + sb as f64 * dist[b][k]) / (sa + sb) as f64)
            .collect();
        // b > a: drop b, put the union in slot a.
        for row in dist.iter_mut() {
            row.remove(b);
        }
        dist.remove(b);
        let mut merged = merged;
        merged.remove(b);
        for (k, &m) in merged.iter().enumerate() {
            dist[a][k] = m;
            dist[k][a] = m;
        }
        dist[a][a] = 0.0;
        active.remove(b);
        active[a] = (id, ma.min(mb), sa + sb);
    }
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![active[0].0];
    while let Some(node) = stack.pop() {
        if node < n {
            order.push(node);
        } else {
            let (l, r) = children[node - n];
            stack.push(r);
            stack.push(l);
        }
    }
    Ok(Dendrogram {
        leaves: n,
        merges,
        order,
    })
}

/// Largest first-convolution pre-activation of each filter over a probe set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterActivity {
    pub filter: usize,
    pub max_preactivation: f64,
    /// Never positive on any probe, so the filter's ReLU output is always zero.
    pub switched_off: bool,
}

/// Runs every probe input through the network and reports each first-convolution
/// filter's maximum pre-activation.
pub fn filter_activity<T: Scalar>(net: &Network<T>, probes: &[Vec<T>]) -> Result<Vec<FilterActivity>> {
    let layer = net
        .spec()
        .first_conv()
        .ok_or_else(|| Error::InvalidArgument("model has no convolution layer".into()))?;
    let Layer::Conv3d { out_channels } = net.spec().trunk[layer] else {
        unreachable!("first_conv points at a convolution");
    };
    let mut max = vec![f64::NEG_INFINITY; out_channels];
    for probe in probes {
        let (_, tape) = net.forward_values_recorded(probe)?;
        let out = tape.layer_output(layer);
        let vol = out.len() / out_channels;
        for (o, plane) in out.chunks(vol).enumerate() {
            for v in plane {
                max[o] = max[o].max(v.as_f64());
            }
        }
    }
    Ok(max
        .into_iter()
        .enumerate()
        .map(|(filter, m)| FilterActivity {
            filter,
            max_preactivation: m,
            switched_off: m <= 0.0,
        })
        .collect())
}

/// Column names for channel `c` of a type table: `<role>:<type name>`.
pub fn channel_labels(types: &AtomTypeTable) -> Vec<String> {
    types
        .entries()
        .iter()
        .map(|t| format!("{}:{}", t.role.flag(), t.name))
        .collect()
}

fn row_csv<T: Scalar>(out: &mut String, filter: usize, values: &[T], extra: Option<&FilterActivity>) {
    write!(out, "{filter}").unwrap();
    for v in values {
        write!(out, ",{:.9e}", v.as_f64()).unwrap();
    }
    if let Some(a) = extra {
        write!(out, ",{:.9e},{}", a.max_preactivation, u8::from(a.switched_off)).unwrap();
    }
    out.push('\n');
}

/// Channel averages in cluster order. With `activity`, two report columns are appended.
pub fn averages_csv<T: Scalar>(
    averages: &[Vec<T>],
    order: &[usize],
    labels: &[String],
    activity: Option<&[FilterActivity]>,
    comments: &[String],
) -> String {
    let mut out = String::new();
    for c in comments {
        writeln!(out, "# {c}").unwrap();
    }
    out.push_str("filter");
    for l in labels {
        write!(out, ",{l}").unwrap();
    }
    out.push_str(",bias/27");
    if activity.is_some() {
        out.push_str(",max_preactivation,switched_off");
    }
    out.push('\n');
    for &f in order {
        row_csv(&mut out, f, &averages[f], activity.map(|a| &a[f]));
    }
    out
}

/// Flattened filters in cluster order; columns `<label>[<k>]` for kernel offset `k`.
pub fn flattened_csv<T: Scalar>(flat: &[Vec<T>], order: &[usize], labels: &[String], comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        writeln!(out, "# {c}").unwrap();
    }
    out.push_str("filter");
    for l in labels {
        for k in 0..KERNEL {
            write!(out, ",{l}[{k}]").unwrap();
        }
    }
    out.push('\n');
    for &f in order {
        row_csv(&mut out, f, &flat[f], None);
    }
    out
}
