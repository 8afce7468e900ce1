use crate::error::{Error, Result};
use crate::policy::ScorePolicy;

/// Central differences of `log pi(action | state)` in every parameter coordinate.
pub fn finite_diff_logp<P: ScorePolicy + Clone>(policy: &P, state: usize, action: usize, eps: f64) -> Result<Vec<f64>> {
    if !(eps > 0.0) {
        return Err(Error::contract(format!("eps must be positive, got {eps}")));
    }
    let p0 = policy.action_probs(state).probs()[action];
    if !(p0 > 10.0 * eps) {
        return Err(Error::diagnostic(format!(
            "pi({action}|{state}) = {p0:e} is too small for finite differences with eps {eps:e}"
        )));
    }
    let mut probe = policy.clone();
    let mut grad = Vec::with_capacity(policy.params().len());
    for i in 0..policy.params().len() {
        let orig = probe.params()[i];
        probe.params_mut()[i] = orig + eps;
        let up = probe.action_probs(state).probs()[action];
        probe.params_mut()[i] = orig - eps;
        let down = probe.action_probs(state).probs()[action];
        probe.params_mut()[i] = orig;
        if !(up > 0.0 && down > 0.0) {
            return Err(Error::diagnostic(format!("probability underflow at coordinate {i}")));
        }
        grad.push((up.ln() - down.ln()) / (2.0 * eps));
    }
    Ok(grad)
}
