use super::ModelError;
use crate::numcore::{Graph, Real, Tensor, Var};

/// Joint objective and its two terms.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossParts {
    pub total: f64,
    pub reconstruction: f64,
    pub rul: f64,
}

/// `L = alpha * L_rec + L_rul` for per-sample `n x T` reconstructions.
///
/// `L_rec` averages the squared Frobenius error over samples; `L_rul` is the
/// mean squared label error.
pub fn joint_loss<T: Real>(
    y_hat: &[Tensor<T>],
    y: &[Tensor<T>],
    rul_hat: &[T],
    rul_true: &[T],
    alpha: f64,
) -> Result<LossParts, ModelError> {
    if y_hat.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    if y_hat.len() != y.len() || rul_hat.len() != y.len() || rul_true.len() != y.len() {
        return Err(ModelError::Shape(format!(
            "{} reconstructions, {} targets, {} estimates, {} labels",
            y_hat.len(),
            y.len(),
            rul_hat.len(),
            rul_true.len()
        )));
    }
    check_alpha(alpha)?;
    let samples = y.len() as f64;
    let mut rec = 0.0;
    for (p, t) in y_hat.iter().zip(y) {
        if !p.same_shape(t) {
            return Err(ModelError::Shape(format!("reconstruction {:?} vs target {:?}", p.shape(), t.shape())));
        }
        rec += p.values().iter().zip(t.values()).map(|(&a, &b)| (a - b).as_f64().powi(2)).sum::<f64>();
    }
    let rec = rec / samples;
    let rul = rul_hat.iter().zip(rul_true).map(|(&a, &b)| (a - b).as_f64().powi(2)).sum::<f64>() / samples;
    Ok(LossParts { total: alpha * rec + rul, reconstruction: rec, rul })
}

fn check_alpha(alpha: f64) -> Result<(), ModelError> {
    if alpha >= 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(ModelError::Shape(format!("alpha must be finite and >= 0, got {alpha}")))
    }
}

/// Loss nodes on a graph.
#[derive(Clone, Copy, Debug)]
pub struct LossNodes {
    pub total: Var,
    pub reconstruction: Var,
    pub rul: Var,
}

/// Graph form of [`joint_loss`] over `T` step outputs of `B x n`. With
/// `alpha == 0` the total is the RUL node itself.
pub fn joint_loss_graph<T: Real>(
    g: &mut Graph<T>,
    y_hat: &[Var],
    targets: &[Var],
    rul: Var,
    labels: Var,
    alpha: f64,
) -> Result<LossNodes, ModelError> {
    check_alpha(alpha)?;
    if y_hat.is_empty() || y_hat.len() != targets.len() {
        return Err(ModelError::Shape(format!("{} decoder outputs for {} targets", y_hat.len(), targets.len())));
    }
    let pred = g.concat(y_hat, 1)?;
    let target = g.concat(targets, 1)?;
    // mse averages over B * T * n; rescale to a per-sample sum.
    let per_element = g.mse(pred, target)?;
    let reconstruction = g.scale(per_element, g.value(pred).cols() as f64)?;
    let rul = g.mse(rul, labels)?;
    let total = if alpha == 0.0 {
        rul
    } else {
        let weighted = g.scale(reconstruction, alpha)?;
        g.add(weighted, rul)?
    };
    Ok(LossNodes { total, reconstruction, rul })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_case() {
        let y = Tensor::<f64>::zeros(&[2, 3]);
        let y_hat = Tensor::full(&[2, 3], 1.0);
        let parts = joint_loss(&[y_hat], &[y], &[7.0], &[5.0], 1.0).unwrap();
        assert_eq!(parts, LossParts { total: 10.0, reconstruction: 6.0, rul: 4.0 });
    }

    #[test]
    fn perfect_and_alpha_zero() {
        let y = Tensor::<f64>::full(&[2, 3], 0.3);
        assert_eq!(joint_loss(std::slice::from_ref(&y), std::slice::from_ref(&y), &[4.0], &[4.0], 2.0).unwrap(), LossParts::default());
        let off = Tensor::full(&[2, 3], 0.5);
        let parts = joint_loss(&[off], &[y], &[3.0], &[4.0], 0.0).unwrap();
        assert_eq!(parts.total, parts.rul);
    }

    #[test]
    fn graph_matches_tensor_form() {
        // Two samples, n = 2, T = 3; step t holds column t of each sample.
        let a = Tensor::<f64>::matrix(2, 3, vec![0.1, 0.4, -0.2, 0.9, 0.0, 0.3]).unwrap();
        let b = Tensor::<f64>::matrix(2, 3, vec![1.0, -0.5, 0.25, 0.5, 0.75, -1.0]).unwrap();
        let zero = Tensor::<f64>::zeros(&[2, 3]);
        let expected = joint_loss(&[a.clone(), b.clone()], &[zero.clone(), zero], &[3.0, 1.0], &[1.0, 2.0], 0.5).unwrap();

        let mut g = Graph::new();
        let steps: Vec<Var> = (0..3)
            .map(|t| {
                let v = vec![a.get(0, t), a.get(1, t), b.get(0, t), b.get(1, t)];
                g.constant(Tensor::matrix(2, 2, v).unwrap())
            })
            .collect();
        let targets: Vec<Var> = (0..3).map(|_| g.constant(Tensor::zeros(&[2, 2]))).collect();
        let rul = g.constant(Tensor::matrix(2, 1, vec![3.0, 1.0]).unwrap());
        let labels = g.constant(Tensor::matrix(2, 1, vec![1.0, 2.0]).unwrap());
        let nodes = joint_loss_graph(&mut g, &steps, &targets, rul, labels, 0.5).unwrap();
        assert!((g.value(nodes.total).item().unwrap() - expected.total).abs() < 1e-12);
        assert!((g.value(nodes.reconstruction).item().unwrap() - expected.reconstruction).abs() < 1e-12);
    }

    #[test]
    fn rejects_shape_mismatch() {
        let r = joint_loss(&[Tensor::<f64>::zeros(&[2, 3])], &[Tensor::zeros(&[3, 2])], &[0.0], &[0.0], 1.0);
        assert!(matches!(r, Err(ModelError::Shape(_))));
    }

    proptest! {
        #[test]
        fn monotone_in_alpha(err in -3.0f64..3.0, rul_err in -5.0f64..5.0, a in 0.0f64..10.0, extra in 0.0f64..10.0) {
            let y = Tensor::<f64>::zeros(&[2, 2]);
            let y_hat = Tensor::full(&[2, 2], err);
            let low = joint_loss(std::slice::from_ref(&y_hat), std::slice::from_ref(&y), &[rul_err], &[0.0], a).unwrap();
            let high = joint_loss(&[y_hat], &[y], &[rul_err], &[0.0], a + extra).unwrap();
            prop_assert!(high.total >= low.total);
        }
    }
}
