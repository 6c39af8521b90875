mod common;

use proptest::prelude::*;
use rand::Rng;
use voxattr::attribution::{
    clrp, combine_masking, coordinate_gradients, empty_space_relevance, mask_atoms, mask_fragments, mask_residues,
    masking_combined, normalize_scores, relevance, AtomScore, AtomScoreMap, Method, Scorer,
};
use voxattr::gridder::voxelize;
use voxattr::molio::Complex;
use voxattr::tensornet::{Head, Layer, ModelSpec, ModelWeights, Network, Target};

use common::*;

const SMALL: &str = include_str!("fixtures/complex_small.txt");

fn small_net(rng: &mut impl Rng, bias: (f64, f64)) -> Network<f64> {
    let spec = ModelSpec {
        input_channels: 35,
        input_size: 8,
        resolution: 1.0,
        trunk: vec![
            Layer::MaxPool3d,
            Layer::Conv3d { out_channels: 3 },
            Layer::Relu,
            Layer::Flatten,
            Layer::Dense { out_units: 4 },
            Layer::Relu,
        ],
    };
    let t = random_tensors(rng, &spec, 0.4, bias);
    network(&spec, t)
}

#[test]
fn atom_masking_matches_rescoring_edited_text() {
    let c = Complex::parse_str(SMALL, types()).unwrap();
    let net = small_net(&mut rng(21), (0.0, 0.2));
    let scorer = Scorer::new(&net, Head::Affinity, Target::Logit);
    let full = scorer.score(&c).unwrap();
    let map = mask_atoms(&c, &net, Head::Affinity, Target::Logit).unwrap();
    assert_eq!(map.scores.len(), 7);
    for s in &map.scores {
        let id = c.atoms()[s.atom].id;
        let edited = Complex::parse_str(&text_without(SMALL, &[id], c.center()), types()).unwrap();
        let want = full - scorer.score(&edited).unwrap();
        assert!((s.score - want).abs() < 1e-12, "atom {id}");
    }
}

#[test]
fn combined_masking_is_built_from_its_parts() {
    let c = Complex::parse_str(SMALL, types()).unwrap();
    let net = small_net(&mut rng(22), (0.0, 0.2));
    let (h, t) = (Head::Pose, Target::Probability);
    let all = masking_combined(&c, &net, h, t, 3).unwrap();
    let a = mask_atoms(&c, &net, h, t).unwrap();
    let f = mask_fragments(&c, &net, h, t, 3).unwrap();
    let r = mask_residues(&c, &net, h, t).unwrap();
    assert_eq!(all, combine_masking(&c, &a, &f, &r));
    for i in 0..c.len() {
        let want = if c.atoms()[i].is_ligand {
            (a.get(i).unwrap() + f.get(i).unwrap()) / 2.0
        } else {
            r.get(i).unwrap()
        };
        assert_eq!(all.get(i).unwrap(), want);
    }
    // Residue shares sum to the residue's removal delta.
    let scorer = Scorer::new(&net, h, t);
    for (_, group) in c.residue_groups() {
        let share: f64 = group.iter().map(|&i| r.get(i).unwrap()).sum();
        let want = scorer.score(&c).unwrap() - scorer.score(&c.remove_atoms(&group).unwrap()).unwrap();
        assert!((share - want).abs() < 1e-12);
    }
}

#[test]
fn coincident_identical_atoms_score_alike() {
    let text = "ATOM 1 C AliphaticCarbonXSHydrophobe 0.3 0.1 0.0 L\n\
                ATOM 2 C AliphaticCarbonXSHydrophobe 0.3 0.1 0.0 L\n\
                ATOM 3 O OxygenXSAcceptor -1.0 0.5 0.2 L\n\
                BOND 1 3\nBOND 2 3\n";
    let c = Complex::parse_str(text, types()).unwrap();
    let net = small_net(&mut rng(23), (0.0, 0.2));
    let grads = coordinate_gradients(&c, &net, Head::Affinity, Target::Logit, false).unwrap();
    let masks = mask_atoms(&c, &net, Head::Affinity, Target::Logit).unwrap();
    let frags = mask_fragments(&c, &net, Head::Affinity, Target::Logit, 2).unwrap();
    for m in [&grads, &masks, &frags] {
        assert!((m.get(0).unwrap() - m.get(1).unwrap()).abs() < 1e-12, "{:?}", m.method);
    }
}

#[test]
fn single_atom_ligand_masking_is_the_full_ligand_contribution() {
    let text = "ATOM 1 N NitrogenXSDonor 0.0 0.0 0.0 L\nATOM 2 C AliphaticCarbonXSHydrophobe 1.5 0.0 0.0 R 4\n";
    let c = Complex::parse_str(text, types()).unwrap();
    let net = small_net(&mut rng(24), (0.0, 0.2));
    let scorer = Scorer::new(&net, Head::Affinity, Target::Logit);
    let m = mask_atoms(&c, &net, Head::Affinity, Target::Logit).unwrap();
    let receptor_only = c.remove_atoms(&[0]).unwrap();
    assert_eq!(m.get(0).unwrap(), scorer.score(&c).unwrap() - scorer.score(&receptor_only).unwrap());
    assert!(mask_fragments(&c, &net, Head::Affinity, Target::Logit, 6).unwrap().scores.iter().all(|s| s.score == 0.0));
}

#[test]
fn zero_model_attributes_nothing() {
    let c = Complex::parse_str(SMALL, types()).unwrap();
    let spec = voxattr::tensornet::toy_architecture(35);
    let net = Network::new(spec.clone(), ModelWeights::<f64>::zeros(&spec).unwrap()).unwrap();
    for (h, t) in [(Head::Pose, Target::Probability), (Head::Affinity, Target::Logit)] {
        let g = coordinate_gradients(&c, &net, h, t, true).unwrap();
        assert!(g.scores.iter().all(|s| s.score == 0.0 && s.vector == Some([0.0; 3])));
        assert!(masking_combined(&c, &net, h, t, 6).unwrap().scores.iter().all(|s| s.score == 0.0));
    }
}

#[test]
fn gradients_predict_small_rigid_moves() {
    let mut rng = rng(25);
    for _ in 0..3 {
        let c = random_complex(&mut rng, 4, 4, 2.0);
        let net = small_net(&mut rng, (0.0, 0.3));
        let g = coordinate_gradients(&c, &net, Head::Affinity, Target::Logit, true).unwrap();
        let dir: Vec<[f64; 3]> = (0..c.len()).map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0))).collect();
        let predicted: f64 = g.scores.iter().map(|s| {
            let v = s.vector.unwrap();
            (0..3).map(|k| v[k] * dir[s.atom][k]).sum::<f64>()
        }).sum();
        let scorer = Scorer::new(&net, Head::Affinity, Target::Logit);
        let along = |h: f64| {
            let p: Vec<[f64; 3]> = c.atoms().iter().zip(&dir).map(|(a, d)| std::array::from_fn(|k| a.position[k] + h * d[k])).collect();
            scorer.score(&c.with_positions(&p).unwrap()).unwrap()
        };
        let numeric = central_difference(along, 0.0, 1e-5);
        assert!((predicted - numeric).abs() < 1e-6 * numeric.abs().max(1.0), "{predicted} vs {numeric}");
    }
}

#[test]
fn clrp_layers_conserve_relevance() {
    let mut rng = rng(26);
    let c = random_complex(&mut rng, 5, 5, 2.5);
    let net = small_net(&mut rng, (0.05, 0.3));
    let spec = net.spec().grid(c.center()).unwrap();
    let grid = voxelize(&c, &spec, None).unwrap();
    let (out, tape) = net.forward_recorded(&grid).unwrap();
    let (rt, map) = clrp(&net, &tape, &c, &spec, Head::Affinity, Target::Logit).unwrap();
    assert_eq!(rt.start, out.affinity);
    let mut carried = rt.start;
    for layer in &rt.layers {
        assert!((layer.total() + layer.lost - carried).abs() < 1e-9 * carried.abs().max(1.0));
        for (r, d) in layer.relevance.iter().zip(&layer.dead) {
            if *d != 0.0 {
                assert_eq!(*r, 0.0);
            }
        }
        carried = layer.total();
    }
    assert!((map.sum() + rt.lost() - rt.start).abs() < 1e-9);
    assert_eq!(map.method, Method::Clrp);
}

#[test]
fn empty_space_total_is_first_conv_dead_relevance() {
    let mut rng = rng(27);
    // One atom in the +++ corner leaves the --- corner of the pooled grid empty.
    let text = "ATOM 1 C AliphaticCarbonXSHydrophobe 3.5 3.5 3.5 L\nCENTER 0 0 0\n";
    let c = Complex::parse_str(text, types()).unwrap();
    let net = small_net(&mut rng, (0.05, 0.3));
    let spec = net.spec().grid(c.center()).unwrap();
    let (_, tape) = net.forward_recorded(&voxelize(&c, &spec, None).unwrap()).unwrap();
    let rt = relevance(&net, &tape, Head::Pose, Target::Logit).unwrap();
    let es = empty_space_relevance(&rt, net.spec(), &spec).unwrap();
    let conv = rt.trunk_layer(1).unwrap();
    assert!((es.total - conv.dead_relevance).abs() < 1e-12);
    assert_eq!(es.size, 4);
    assert_eq!(es.spacing, 2.0);
    assert_eq!(es.origin, c.center().map(|x| x - 4.0 + 1.0));
    assert!(conv.dead_count > 0);
    assert!(es.values[0] != 0.0);
    let dx = es.to_dx();
    assert_eq!(dx.counts, [4; 3]);
}

#[test]
fn fully_occupied_input_has_no_empty_space() {
    let spec = ModelSpec {
        input_channels: 2,
        input_size: 4,
        resolution: 1.0,
        trunk: vec![Layer::Conv3d { out_channels: 2 }, Layer::Relu, Layer::Flatten],
    };
    let mut rng = rng(28);
    let mut t = random_tensors(&mut rng, &spec, 0.5, (0.0, 0.1));
    t[0].iter_mut().for_each(|w| *w = w.abs() + 0.01);
    let net = network(&spec, t);
    let x: Vec<f64> = (0..spec.input_shape().len()).map(|_| rng.random_range(0.1..1.0)).collect();
    let (_, tape) = net.forward_values_recorded(&x).unwrap();
    let rt = relevance(&net, &tape, Head::Affinity, Target::Logit).unwrap();
    let es = empty_space_relevance(&rt, &spec, &spec.grid([0.0; 3]).unwrap()).unwrap();
    assert!(es.values.iter().all(|&v| v == 0.0));
    assert_eq!(rt.trunk_layer(0).unwrap().dead_count, 0);
}

#[test]
fn empty_corner_relevance_stays_in_the_corner() {
    let spec = ModelSpec {
        input_channels: 1,
        input_size: 6,
        resolution: 1.0,
        trunk: vec![Layer::Conv3d { out_channels: 1 }, Layer::Relu, Layer::Flatten],
    };
    let mut t = vec![vec![1.0; 27], vec![0.5], vec![0.0; 2 * 216], vec![0.0; 2], vec![1.0; 216], vec![0.0]];
    t[0][13] = 2.0;
    let net = network(&spec, t);
    // Occupied everywhere except the cube x, y, z < 3; only nodes whose whole
    // neighbourhood lies inside it, {0, 1}³, see no density.
    let mut x = vec![1.0; 216];
    for z in 0..3 {
        for y in 0..3 {
            for xx in 0..3 {
                x[(z * 6 + y) * 6 + xx] = 0.0;
            }
        }
    }
    let (_, tape) = net.forward_values_recorded(&x).unwrap();
    let rt = relevance(&net, &tape, Head::Affinity, Target::Logit).unwrap();
    let es = empty_space_relevance(&rt, &spec, &spec.grid([0.0; 3]).unwrap()).unwrap();
    assert_eq!(rt.trunk_layer(0).unwrap().dead_count, 8);
    for z in 0..6 {
        for y in 0..6 {
            for xx in 0..6 {
                let v = es.values[(z * 6 + y) * 6 + xx];
                if z < 2 && y < 2 && xx < 2 {
                    assert!(v > 0.0, "dead node ({z},{y},{xx}) carries its activation's share");
                } else {
                    assert_eq!(v, 0.0);
                }
            }
        }
    }
    assert!((es.total - rt.trunk_layer(0).unwrap().dead_relevance).abs() < 1e-12);
}

fn map_of(scores: Vec<f64>) -> AtomScoreMap<f64> {
    let scores = scores
        .into_iter()
        .enumerate()
        .map(|(atom, score)| AtomScore { atom, score, vector: Some([score, 0.0, -score]) })
        .collect();
    AtomScoreMap::new(Method::Gradient, Head::Pose, 0.0, scores)
}

proptest! {
    #[test]
    fn normalization_bounds_and_signs(v in proptest::collection::vec(-1e3f64..1e3, 1..20)) {
        let n = normalize_scores(&map_of(v.clone()));
        let m = v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        for (s, orig) in n.scores.iter().zip(&v) {
            prop_assert!((-1.0..=1.0).contains(&s.score));
            if m > 0.0 {
                prop_assert!((s.score - orig / m).abs() < 1e-15);
                prop_assert_eq!(s.vector.unwrap()[0], orig / m);
            }
        }
        if m > 0.0 {
            prop_assert!(n.scores.iter().any(|s| s.score.abs() == 1.0));
        }
    }

    #[test]
    fn normalization_is_idempotent(v in proptest::collection::vec(-10f64..10.0, 1..10)) {
        let once = normalize_scores(&map_of(v));
        let twice = normalize_scores(&once);
        for (a, b) in once.scores.iter().zip(&twice.scores) {
            prop_assert!((a.score - b.score).abs() < 1e-15);
        }
    }
}
