use super::{Graph, Tensor, TensorError, Var};

/// Step that minimised the worst relative error of the full-model check
/// across seeds; with the fourth-order stencil, smaller steps are dominated
/// by round-off.
pub const DEFAULT_GRADCHECK_EPSILON: f64 = 1e-2;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// `(parameter index, element index)` of the worst element.
    pub worst: (usize, usize),
    pub elements_checked: usize,
}

/// Compares reverse-mode gradients against fourth-order central finite
/// differences, `(8(f(x+h) - f(x-h)) - (f(x+2h) - f(x-2h))) / 12h`.
///
/// `f` receives a fresh graph and one leaf per entry of `params` and must
/// return a one-element loss node. The relative error of an element is
/// `|analytic - numeric| / max(1e-8, |analytic| + |numeric|)`.
pub fn grad_check<F, E>(f: F, params: &[Tensor<f64>], epsilon: f64) -> Result<GradCheckReport, E>
where
    F: Fn(&mut Graph<f64>, &[Var]) -> Result<Var, E>,
    E: From<TensorError>,
{
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(TensorError::InvalidArgument(format!("epsilon must be positive, got {epsilon}")).into());
    }

    let mut graph = Graph::new();
    let leaves: Vec<Var> = params.iter().map(|p| graph.param(p.clone())).collect();
    let loss = f(&mut graph, &leaves)?;
    let grads = graph.backward(loss)?;

    let evaluate = |values: &[Tensor<f64>]| -> Result<f64, E> {
        let mut g = Graph::new();
        let leaves: Vec<Var> = values.iter().map(|p| g.constant(p.clone())).collect();
        let out = f(&mut g, &leaves)?;
        let v = g.value(out).item()?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(TensorError::NonFinite { op: "grad_check" }.into())
        }
    };

    let mut perturbed = params.to_vec();
    let mut report = GradCheckReport { max_relative_error: 0.0, worst: (0, 0), elements_checked: 0 };
    for (pi, leaf) in leaves.iter().enumerate() {
        let analytic = grads.get(*leaf).expect("every parameter leaf has a gradient");
        for k in 0..params[pi].len() {
            let original = params[pi].values()[k];
            let mut at = |offset: f64| -> Result<f64, E> {
                perturbed[pi].values_mut()[k] = original + offset;
                evaluate(&perturbed)
            };
            let (p1, m1) = (at(epsilon)?, at(-epsilon)?);
            let (p2, m2) = (at(2.0 * epsilon)?, at(-2.0 * epsilon)?);
            perturbed[pi].values_mut()[k] = original;

            let numeric = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * epsilon);
            let a = analytic.values()[k];
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
            if rel > report.max_relative_error {
                report.max_relative_error = rel;
                report.worst = (pi, k);
            }
            report.elements_checked += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_function_is_exact() {
        let w = Tensor::matrix(1, 3, vec![0.5, -1.25, 2.0]).unwrap();
        let x = Tensor::matrix(3, 1, vec![1.0, 2.0, -3.0]).unwrap();
        let report = grad_check::<_, TensorError>(
            |g, p| {
                let x = g.constant(x.clone());
                let y = g.matmul(p[0], x)?;
                let y = g.scale(y, 3.0)?;
                g.sum(y)
            },
            &[w],
            DEFAULT_GRADCHECK_EPSILON,
        )
        .unwrap();
        assert!(report.max_relative_error < 1e-10, "{report:?}");
        assert_eq!(report.elements_checked, 3);
    }

    #[test]
    fn quadratic_matches() {
        let p = Tensor::scalar(2.0);
        let report = grad_check::<_, TensorError>(
            |g, v| {
                let sq = g.mul(v[0], v[0])?;
                g.sum(sq)
            },
            &[p],
            1e-5,
        )
        .unwrap();
        assert!(report.max_relative_error < 1e-9);
    }

    #[test]
    fn rejects_non_positive_epsilon() {
        let r = grad_check::<_, TensorError>(|g, v| g.sum(v[0]), &[Tensor::scalar(1.0)], 0.0);
        assert!(r.is_err());
    }
}
