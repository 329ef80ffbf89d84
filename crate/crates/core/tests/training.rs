mod common;

use neurolink::harness::{prepare, train_model, ExperimentConfig};
use neurolink::train::params::ParamClass;
use neurolink::train::{calibrate, quantize_network, QuantScope};
use neurolink::{InitConfig, InputSeq, LayerHyper, LayerPlan, NeuronKind, SplitNetwork};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn two_layer(kind: NeuronKind, complex: bool) -> SplitNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let plans = [
        LayerPlan {
            size: 4,
            recurrent: false,
            complex,
        },
        LayerPlan {
            size: 3,
            recurrent: true,
            complex: false,
        },
    ];
    SplitNetwork::init(
        &mut rng,
        2,
        &plans,
        3,
        kind,
        1,
        LayerHyper::for_kind(kind),
        &InitConfig::default(),
    )
    .unwrap()
}

#[test]
fn gradients_through_split_two_layer_networks() {
    for kind in NeuronKind::ALL {
        for complex in [false, true] {
            let mut net = two_layer(kind, complex);
            let x = common::toy_input(complex, 30);
            for alpha in [0.0, 0.2] {
                let rep = common::fd_gradient_check(&mut net, &x, 2, alpha);
                assert!(
                    rep.passed(),
                    "{kind} complex={complex} alpha={alpha}: {}",
                    rep.worst_at
                );
                assert!(rep.covers(ParamClass::Recurrent));
            }
        }
    }
}

#[test]
fn gradient_check_spans_several_seeds() {
    for seed in 0..4 {
        for kind in NeuronKind::ALL {
            let mut net = common::toy_network(kind, kind.is_resonator(), seed);
            let x: InputSeq = common::toy_input(kind.is_resonator(), 25);
            let rep = common::fd_gradient_check(&mut net, &x, (seed % 3) as usize, 0.1);
            assert!(rep.passed(), "{kind} seed {seed}: {}", rep.worst_at);
        }
    }
}

#[test]
fn training_is_reproducible() {
    let mut cfg = ExperimentConfig::default();
    cfg.train.epochs = 2;
    let prep = prepare(&cfg).unwrap();
    let a = train_model(&cfg, &prep, 5).unwrap();
    let b = train_model(&cfg, &prep, 5).unwrap();
    assert_eq!(a.net, b.net);
    assert_eq!(a.report, b.report);
}

/// Twenty epochs on the synthetic task should at least halve the objective
/// for every neuron family.
#[test]
fn training_halves_objective_for_all_kinds() {
    let mut failures = Vec::new();
    for kind in NeuronKind::ALL {
        let mut cfg = ExperimentConfig::default();
        cfg.neuron = kind;
        let prep = prepare(&cfg).unwrap();
        let t = train_model(&cfg, &prep, 0).unwrap();
        let (a, b) = (t.report.initial_objective(), t.report.final_objective());
        println!("{kind}: objective {a:.4} -> {b:.4} ({:.1}%)", 100.0 * b / a);
        if b > 0.5 * a {
            failures.push(format!("{kind}: {a:.4} -> {b:.4}"));
        }
    }
    assert!(failures.is_empty(), "objective not halved: {failures:?}");
}

#[test]
fn calibration_never_ends_above_its_start() {
    let mut cfg = ExperimentConfig::default();
    cfg.train.epochs = 3;
    let prep = prepare(&cfg).unwrap();
    let t = train_model(&cfg, &prep, 0).unwrap();
    let (q, _) = quantize_network(&t.net, 3, QuantScope::Full);
    let inputs: Vec<_> = prep.train.samples[..8]
        .iter()
        .map(|s| s.input.clone())
        .collect();
    let (cal, rep) = calibrate(&t.net, &q, &inputs, 6, 1e-2).unwrap();
    assert!(rep.losses.len() >= 6);
    assert!(rep.best <= rep.initial);
    // weights stay on the quantized grid; only neuron parameters move
    for (lq, lc) in q.layers.iter().zip(&cal.layers) {
        assert_eq!(lq.w_re, lc.w_re);
        assert_eq!(lq.v, lc.v);
    }
    assert_eq!(q.readout.w, cal.readout.w);
}
