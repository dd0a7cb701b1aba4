use decl::decomposition::Decomposition;
use decl::lab::evaluate;
use decl::learning::{decl_objective, train_local, train_subgradient, LossFn, TrainConfig};
use decl::model::{Assignment, Input, Instance, ScoringModel, WeightVector};
use decl::space::OutputSpace;

/// Three classes on a line, one-hot encoded, with a bias feature. The middle
/// class sits between the other two.
fn line_data() -> Vec<Instance> {
    let mut data = Vec::new();
    for (class, xs) in [(0usize, [-3.0, -2.5, -2.0]), (1, [-0.5, 0.0, 0.5]), (2, [2.0, 2.5, 3.0])] {
        for x in xs {
            let mut y = vec![0u8; 3];
            y[class] = 1;
            data.push(Instance::new(Input::shared(vec![x, 1.0]), Assignment::new(y)));
        }
    }
    data
}

fn separable(data: &[Instance], class: usize, a: f64, b: f64) -> bool {
    data.iter().all(|inst| {
        let s = a * inst.x.row(0)[0] + b;
        if inst.y[class] == 1 {
            s > 0.0
        } else {
            s < 0.0
        }
    })
}

#[test]
fn middle_class_has_no_one_vs_all_separator() {
    let data = line_data();
    let grid: Vec<f64> = (-40..=40).map(|i| i as f64 / 4.0).collect();
    let found = |class| grid.iter().any(|&a| grid.iter().any(|&b| separable(&data, class, a, b)));
    assert!(found(0));
    assert!(!found(1));
    assert!(found(2));
}

#[test]
fn pairwise_training_separates_where_local_training_cannot() {
    let data = line_data();
    let model = ScoringModel::singleton(3, 2).unwrap();
    let space = OutputSpace::multiclass(3).unwrap();
    let config = TrainConfig {
        epochs: 200,
        ..Default::default()
    };

    let local = train_local(&model, &data, &space, &config).unwrap();
    let relaxed = evaluate(&model, &local.weights, &data, &space, false).unwrap();
    assert!(relaxed.avg_hamming > 0.0);
    assert!(local.objective.iter().all(|&v| v > 0.0));

    let pairs = vec![Decomposition::decl_k(3, 2).unwrap(); data.len()];
    let decl = train_subgradient(&model, &data, &pairs, &space, LossFn::Perceptron, &config).unwrap();
    let train = evaluate(&model, &decl.weights, &data, &space, true).unwrap();
    assert_eq!(train.avg_hamming, 0.0);
    assert_eq!(decl.final_objective(), Some(0.0));
}

#[test]
fn zero_node_features_keep_local_weights_at_zero() {
    let model = ScoringModel::chain(4, 2, 3, false).unwrap();
    let space = OutputSpace::unconstrained(4, 3).unwrap();
    let data: Vec<Instance> = ["0120", "2101", "1111"]
        .iter()
        .map(|y| Instance::new(Input::per_variable(vec![vec![0.0; 2]; 4]).unwrap(), Assignment::parse(y).unwrap()))
        .collect();
    let report = train_local(&model, &data, &space, &TrainConfig::default()).unwrap();
    assert_eq!(report.weights, WeightVector::zeros(model.dim()));
    let pairs = vec![Decomposition::decl_k(4, 2).unwrap(); data.len()];
    assert!(decl_objective(&model, &report.weights, &data, &pairs, &space, LossFn::Hamming).unwrap() > 0.0);
}
