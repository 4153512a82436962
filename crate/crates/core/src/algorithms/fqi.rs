use serde_json::json;

use crate::error::{Error, Result};
use crate::mdp::{FiniteMdp, Policy, QTable};
use crate::simulator::GenerativeModel;

use super::function_class::FunctionClass;
use super::report::AlgorithmReport;

/// Fitted Q-iteration with generative access.
///
/// `pairs[h]` lists the flat pair indices `s * |A| + a` queried at step `h`;
/// exactly `sum_h pairs[h].len()` queries are issued. Fits run backward from
/// the last step with targets `r + max_a Q_{h+1}(s', a)` and are clipped to
/// `[0, H]`; the output policy is greedy with respect to the clipped fits.
pub fn fitted_q_iteration(
    gm: &mut GenerativeModel<&FiniteMdp>,
    fc: &FunctionClass,
    pairs: &[Vec<usize>],
) -> Result<AlgorithmReport> {
    let mdp = *gm.model();
    let (horizon, ns, na) = (mdp.horizon(), mdp.n_states(), mdp.n_actions());
    fc.check(ns, na)?;
    if pairs.len() != horizon {
        return Err(Error::DimensionMismatch {
            expected: horizon,
            got: pairs.len(),
            context: "sample pairs per step",
        });
    }
    let cap = horizon as f64;
    let mut q = QTable::zeros(horizon, ns, na);
    let mut losses = vec![0.0; horizon];
    let mut clipped = vec![0; horizon];
    let start_queries = gm.queries();
    for h in (0..horizon).rev() {
        let mut targets = Vec::with_capacity(pairs[h].len());
        for &p in &pairs[h] {
            if p >= ns * na {
                return Err(Error::invalid(format!("pair index {p} out of range")).at_step(h));
            }
            let (next, r) = gm.query(h, &(p / na), p % na).map_err(|e| e.at_step(h))?;
            let cont = if h + 1 < horizon { q.max_value(h + 1, next) } else { 0.0 };
            targets.push(r + cont);
        }
        let fit = fc.fit(&pairs[h], &targets).map_err(|e| e.at_step(h))?;
        losses[h] = fit.loss;
        for (slot, v) in q.step_mut(h).iter_mut().zip(fit.values) {
            let c = v.clamp(0.0, cap);
            if c != v {
                clipped[h] += 1;
            }
            *slot = c;
        }
    }
    let mut report = AlgorithmReport::new(
        "fqi",
        gm.seed(),
        json!({
            "lambda": fc.lambda(),
            "samples_per_step": pairs.iter().map(Vec::len).collect::<Vec<_>>(),
        }),
        Policy::greedy(&q),
    );
    report.q = Some(q);
    report.diagnostics.losses = losses;
    report.diagnostics.clipped = clipped;
    report.queries = gm.queries() - start_queries;
    Ok(report)
}
