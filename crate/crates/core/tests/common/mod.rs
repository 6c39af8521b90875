//! Independent reference implementations and generators shared by integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voxattr::gridder::GridSpec;
use voxattr::molio::{Atom, AtomTypeTable, Complex};
use voxattr::tensornet::{Layer, ModelSpec, ModelWeights, Network};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn types() -> Arc<AtomTypeTable> {
    Arc::new(AtomTypeTable::default())
}

/// Piecewise density written out directly from its definition.
pub fn ref_density(d: f64, r: f64) -> f64 {
    let e2 = std::f64::consts::E.powi(2);
    if d < r {
        (-2.0 * d * d / (r * r)).exp()
    } else if d < 1.5 * r {
        4.0 / (e2 * r * r) * d * d - 12.0 / (e2 * r) * d + 9.0 / e2
    } else {
        0.0
    }
}

/// Every atom against every voxel of its channel, no cutoffs or lattice tricks.
pub fn ref_voxelize(complex: &Complex, spec: &GridSpec) -> Vec<f64> {
    let n = spec.points_per_side;
    let mut out = vec![0.0; spec.channels * n * n * n];
    let first = spec.center.map(|c| c - spec.dimension / 2.0 + spec.resolution / 2.0);
    for (i, atom) in complex.atoms().iter().enumerate() {
        let r = complex.radius_of(i);
        for z in 0..n {
            for y in 0..n {
                for x in 0..n {
                    let v = [
                        first[0] + x as f64 * spec.resolution,
                        first[1] + y as f64 * spec.resolution,
                        first[2] + z as f64 * spec.resolution,
                    ];
                    let d = ((atom.position[0] - v[0]).powi(2)
                        + (atom.position[1] - v[1]).powi(2)
                        + (atom.position[2] - v[2]).powi(2))
                    .sqrt();
                    out[((atom.type_index * n + z) * n + y) * n + x] += ref_density(d, r);
                }
            }
        }
    }
    out
}

/// `[channel, z, y, x]` volume with explicit bounds checks.
struct Vol<'a> {
    data: &'a [f64],
    n: usize,
}

impl Vol<'_> {
    fn at(&self, c: usize, z: isize, y: isize, x: isize) -> f64 {
        let n = self.n as isize;
        if z < 0 || y < 0 || x < 0 || z >= n || y >= n || x >= n {
            return 0.0;
        }
        self.data[((c * self.n + z as usize) * self.n + y as usize) * self.n + x as usize]
    }
}

pub struct RefOutputs {
    pub logits: [f64; 2],
    pub affinity: f64,
    pub trunk: Vec<f64>,
}

/// Direct evaluation of a network from its spec and raw tensors.
pub fn ref_forward(spec: &ModelSpec, tensors: &[Vec<f64>], input: &[f64]) -> RefOutputs {
    let mut act = input.to_vec();
    let mut ch = spec.input_channels;
    let mut n = spec.input_size;
    let mut flat = false;
    let mut t = 0;
    for layer in &spec.trunk {
        match *layer {
            Layer::MaxPool3d => {
                let m = n / 2;
                let v = Vol { data: &act, n };
                let mut out = vec![0.0; ch * m * m * m];
                for c in 0..ch {
                    for z in 0..m {
                        for y in 0..m {
                            for x in 0..m {
                                let mut best = f64::NEG_INFINITY;
                                for dz in 0..2 {
                                    for dy in 0..2 {
                                        for dx in 0..2 {
                                            best = best.max(v.at(
                                                c,
                                                (2 * z + dz) as isize,
                                                (2 * y + dy) as isize,
                                                (2 * x + dx) as isize,
                                            ));
                                        }
                                    }
                                }
                                out[((c * m + z) * m + y) * m + x] = best;
                            }
                        }
                    }
                }
                act = out;
                n = m;
            }
            Layer::Conv3d { out_channels } => {
                let (w, b) = (&tensors[t], &tensors[t + 1]);
                t += 2;
                let v = Vol { data: &act, n };
                let mut out = vec![0.0; out_channels * n * n * n];
                for o in 0..out_channels {
                    for z in 0..n as isize {
                        for y in 0..n as isize {
                            for x in 0..n as isize {
                                let mut s = b[o];
                                for i in 0..ch {
                                    for kz in 0..3 {
                                        for ky in 0..3 {
                                            for kx in 0..3 {
                                                let wv = w[(((o * ch + i) * 3 + kz) * 3 + ky) * 3 + kx];
                                                s += wv * v.at(i, z + kz as isize - 1, y + ky as isize - 1, x + kx as isize - 1);
                                            }
                                        }
                                    }
                                }
                                out[((o * n + z as usize) * n + y as usize) * n + x as usize] = s;
                            }
                        }
                    }
                }
                act = out;
                ch = out_channels;
            }
            Layer::Relu => act.iter_mut().for_each(|v| *v = v.max(0.0)),
            Layer::Flatten => flat = true,
            Layer::Dense { out_units } => {
                assert!(flat);
                act = dense(&act, &tensors[t], &tensors[t + 1], out_units);
                t += 2;
            }
        }
    }
    let logits = dense(&act, &tensors[t], &tensors[t + 1], 2);
    let aff = dense(&act, &tensors[t + 2], &tensors[t + 3], 1);
    RefOutputs {
        logits: [logits[0], logits[1]],
        affinity: aff[0],
        trunk: act,
    }
}

fn dense(x: &[f64], w: &[f64], b: &[f64], units: usize) -> Vec<f64> {
    (0..units)
        .map(|j| b[j] + (0..x.len()).map(|i| w[j * x.len() + i] * x[i]).sum::<f64>())
        .collect()
}

pub fn ref_head_scalar(out: &RefOutputs, head: voxattr::tensornet::Head, target: voxattr::tensornet::Target) -> f64 {
    use voxattr::tensornet::{Head, Target};
    match (head, target) {
        (Head::Affinity, _) => out.affinity,
        (Head::Pose, Target::Logit) => out.logits[1],
        (Head::Pose, Target::Probability) => 1.0 / (1.0 + (out.logits[0] - out.logits[1]).exp()),
    }
}

/// Random trunk on a small grid: up to two pooled or plain conv blocks, optionally a
/// dense layer after flattening.
pub fn random_spec(rng: &mut impl Rng, channels: usize) -> ModelSpec {
    let input_size = rng.random_range(4..=8);
    let mut trunk = Vec::new();
    let mut n = input_size;
    for _ in 0..rng.random_range(1..=2) {
        if n >= 4 && rng.random_bool(0.5) {
            trunk.push(Layer::MaxPool3d);
            n /= 2;
        }
        trunk.push(Layer::Conv3d {
            out_channels: rng.random_range(1..=3),
        });
        if rng.random_bool(0.7) {
            trunk.push(Layer::Relu);
        }
    }
    trunk.push(Layer::Flatten);
    if rng.random_bool(0.5) {
        trunk.push(Layer::Dense {
            out_units: rng.random_range(2..=5),
        });
        trunk.push(Layer::Relu);
    }
    ModelSpec {
        input_channels: channels,
        input_size,
        resolution: 1.0,
        trunk,
    }
}

/// Uniform weights in `[-scale, scale]`; biases uniform in `bias_range`.
pub fn random_tensors(rng: &mut impl Rng, spec: &ModelSpec, scale: f64, bias_range: (f64, f64)) -> Vec<Vec<f64>> {
    spec.tensor_layout()
        .unwrap()
        .iter()
        .map(|info| {
            let len = info.len();
            if info.name.ends_with(".bias") {
                (0..len).map(|_| rng.random_range(bias_range.0..=bias_range.1)).collect()
            } else {
                (0..len).map(|_| rng.random_range(-scale..=scale)).collect()
            }
        })
        .collect()
}

pub fn network(spec: &ModelSpec, tensors: Vec<Vec<f64>>) -> Network<f64> {
    Network::new(spec.clone(), ModelWeights::new(spec, tensors).unwrap()).unwrap()
}

/// Random complex with ligand atoms near the origin, receptor atoms around them.
pub fn random_complex(rng: &mut impl Rng, ligand: usize, receptor: usize, spread: f64) -> Complex {
    let table = types();
    let lig_types: Vec<usize> = (0..table.len()).filter(|&i| table.entries()[i].role == voxattr::molio::Role::Ligand).collect();
    let rec_types: Vec<usize> = (0..table.len()).filter(|&i| table.entries()[i].role == voxattr::molio::Role::Receptor).collect();
    let mut atoms = Vec::new();
    for k in 0..ligand + receptor {
        let is_ligand = k < ligand;
        let pool = if is_ligand { &lig_types } else { &rec_types };
        let type_index = pool[rng.random_range(0..pool.len())];
        atoms.push(Atom {
            id: k + 1,
            element: "X".into(),
            type_index,
            position: std::array::from_fn(|_| rng.random_range(-spread..=spread)),
            residue_id: (!is_ligand).then(|| rng.random_range(1..=3)),
            is_ligand,
        });
    }
    let bonds = (1..ligand).map(|i| (rng.random_range(0..i), i)).collect();
    Complex::new(atoms, bonds, Some([0.0; 3]), table).unwrap()
}

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Atom sets of all connected bond subsets with 1..=budget bonds, by subset enumeration.
pub fn brute_force_fragments(bonds: &[(usize, usize)], budget: usize) -> std::collections::BTreeSet<Vec<usize>> {
    assert!(bonds.len() <= 20);
    let mut out = std::collections::BTreeSet::new();
    for mask in 1u32..(1 << bonds.len()) {
        if mask.count_ones() as usize > budget {
            continue;
        }
        let chosen: Vec<(usize, usize)> = (0..bonds.len()).filter(|&k| mask >> k & 1 == 1).map(|k| bonds[k]).collect();
        let mut atoms: Vec<usize> = chosen.iter().flat_map(|&(a, b)| [a, b]).collect();
        atoms.sort_unstable();
        atoms.dedup();
        // Flood fill over chosen bonds from the first atom.
        let mut seen = vec![atoms[0]];
        let mut grew = true;
        while grew {
            grew = false;
            for &(a, b) in &chosen {
                let (ha, hb) = (seen.contains(&a), seen.contains(&b));
                if ha != hb {
                    seen.push(if ha { b } else { a });
                    grew = true;
                }
            }
        }
        if seen.len() == atoms.len() {
            out.insert(atoms);
        }
    }
    out
}

/// Complex text without the listed atom ids (and their bonds), with the given center.
pub fn text_without(text: &str, removed_ids: &[usize], center: [f64; 3]) -> String {
    let mut out = String::new();
    for line in text.lines() {
        let f: Vec<&str> = line.split_whitespace().collect();
        let drop = match f.first() {
            Some(&"ATOM") => removed_ids.contains(&f[1].parse().unwrap()),
            Some(&"BOND") => f[1..3].iter().any(|s| removed_ids.contains(&s.parse().unwrap())),
            Some(&"CENTER") => true,
            _ => false,
        };
        if !drop {
            out.push_str(line);
            out.push('\n');
        }
    }
    out.push_str(&format!("CENTER {:?} {:?} {:?}\n", center[0], center[1], center[2]));
    out
}
