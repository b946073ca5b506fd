use super::Network;
use crate::error::NetError;

/// Largest relative error between analytic gradients and central finite
/// differences (step `h`) over every parameter.
///
/// `loss` maps network outputs to `(loss, ∂loss/∂outputs)`. Relative error is
/// `|a − n| / max(|a| + |n|, 1e-6)`, so parameters with vanishing gradient
/// are compared absolutely.
pub fn gradient_check(
    net: &Network<f64>,
    input: &[f64],
    loss: &dyn Fn(&[f64]) -> (f64, Vec<f64>),
    h: f64,
) -> Result<f64, NetError> {
    let (out, cache) = net.forward(input)?;
    let analytic = net.backward(&cache, &loss(&out).1);
    let analytic: Vec<f64> = analytic.param_slices().flatten().copied().collect();

    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        let orig = probe.param(i);
        probe.set_param(i, orig + h);
        let plus = loss(&probe.predict(input)?).0;
        probe.set_param(i, orig - h);
        let minus = loss(&probe.predict(input)?).0;
        probe.set_param(i, orig);
        let numeric = (plus - minus) / (2.0 * h);
        let err = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-6);
        worst = worst.max(err);
    }
    Ok(worst)
}
