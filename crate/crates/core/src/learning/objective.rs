use crate::decomposition::Decomposition;
use crate::error::{Error, Result};
use crate::inference::{decomposed_on, loss_augmented_on, SetSelection};
use crate::learning::LossFn;
use crate::model::{Instance, ScoringModel, WeightVector};
use crate::rng::{stream, Stream};
use crate::space::OutputSpace;

pub(crate) fn check_lengths(data: &[Instance], decompositions: &[Decomposition]) -> Result<()> {
    if data.len() != decompositions.len() {
        return Err(Error::DimensionMismatch {
            axis: "decompositions per instance",
            expected: data.len(),
            got: decompositions.len(),
        });
    }
    Ok(())
}

/// Per-instance decomposed hinge terms; each is at least zero.
pub fn decl_hinges(
    model: &ScoringModel,
    w: &WeightVector,
    data: &[Instance],
    decompositions: &[Decomposition],
    space: &OutputSpace,
    loss: LossFn,
) -> Result<Vec<f64>> {
    check_lengths(data, decompositions)?;
    // never consulted: every set is visited
    let mut rng = stream(0, Stream::Sets);
    data.iter()
        .zip(decompositions)
        .map(|(inst, s)| {
            let pot = model.potentials(w, &inst.x)?;
            let r = decomposed_on(&pot, &inst.y, s, space, loss, SetSelection::All, &mut rng)?;
            Ok(r.value)
        })
        .collect()
}

/// Per-instance global hinge terms.
pub fn global_hinges(
    model: &ScoringModel,
    w: &WeightVector,
    data: &[Instance],
    space: &OutputSpace,
    loss: LossFn,
) -> Result<Vec<f64>> {
    data.iter()
        .map(|inst| {
            let pot = model.potentials(w, &inst.x)?;
            Ok(loss_augmented_on(&pot, &inst.y, space, loss)?.value)
        })
        .collect()
}

fn sum_in_order(values: Vec<f64>) -> f64 {
    let mut acc = 0.0;
    for v in values {
        acc += v;
    }
    acc
}

/// Sum over instances of the hinge maximized over each instance's
/// decomposition neighborhood.
pub fn decl_objective(
    model: &ScoringModel,
    w: &WeightVector,
    data: &[Instance],
    decompositions: &[Decomposition],
    space: &OutputSpace,
    loss: LossFn,
) -> Result<f64> {
    Ok(sum_in_order(decl_hinges(model, w, data, decompositions, space, loss)?))
}

/// Sum over instances of the hinge maximized over the whole output space.
pub fn global_objective(
    model: &ScoringModel,
    w: &WeightVector,
    data: &[Instance],
    space: &OutputSpace,
    loss: LossFn,
) -> Result<f64> {
    Ok(sum_in_order(global_hinges(model, w, data, space, loss)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Assignment, Input};

    fn two_var_instance() -> (ScoringModel, WeightVector, Vec<Instance>) {
        let m = ScoringModel::singleton(2, 1).unwrap();
        let w = WeightVector::new(vec![0.4, 0.4]).unwrap();
        let x = Input::per_variable(vec![vec![1.0], vec![1.0]]).unwrap();
        let data = vec![Instance::new(x, Assignment::parse("11").unwrap())];
        (m, w, data)
    }

    #[test]
    fn single_flip_objective_and_global_counterpart() {
        let (m, w, data) = two_var_instance();
        let space = OutputSpace::unconstrained(2, 2).unwrap();
        let s = vec![Decomposition::decl_k(2, 1).unwrap()];
        let decl = decl_objective(&m, &w, &data, &s, &space, LossFn::Hamming).unwrap();
        let global = global_objective(&m, &w, &data, &space, LossFn::Hamming).unwrap();
        assert!((decl - 0.6).abs() < 1e-12, "{decl}");
        assert!((global - 1.2).abs() < 1e-12, "{global}");
    }

    #[test]
    fn zero_weights_perceptron_objective_is_zero() {
        let (m, _, data) = two_var_instance();
        let w = WeightVector::zeros(2);
        let space = OutputSpace::unconstrained(2, 2).unwrap();
        let s = vec![Decomposition::decl_k(2, 1).unwrap()];
        assert_eq!(decl_objective(&m, &w, &data, &s, &space, LossFn::Perceptron).unwrap(), 0.0);
    }

    #[test]
    fn separating_weights_zero_both_objectives() {
        let (m, _, data) = two_var_instance();
        // margin of each bit exceeds its Hamming cost
        let w = WeightVector::new(vec![1.5, 1.5]).unwrap();
        let space = OutputSpace::unconstrained(2, 2).unwrap();
        let s = vec![Decomposition::decl_k(2, 1).unwrap()];
        assert_eq!(decl_objective(&m, &w, &data, &s, &space, LossFn::Hamming).unwrap(), 0.0);
        assert_eq!(global_objective(&m, &w, &data, &space, LossFn::Hamming).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_decomposition_count() {
        let (m, w, data) = two_var_instance();
        let space = OutputSpace::unconstrained(2, 2).unwrap();
        assert!(decl_objective(&m, &w, &data, &[], &space, LossFn::Hamming).is_err());
    }
}
