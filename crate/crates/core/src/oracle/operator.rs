use super::{EnhancedFiniteMdp, QTable};
use crate::error::{Error, Result};

/// The EASpace action-value iteration operator `H`.
///
/// One-step macros back up `max_m Q(s', m)`; a macro `m^i(τ)` with `τ > 1`
/// backs up `Q(s', m^i(τ−1))`, i.e. it stays committed to expert `i`.
pub fn apply_h(q: &QTable, m: &EnhancedFiniteMdp) -> QTable {
    let space = m.space();
    let n_s = m.num_states();
    let gamma = m.gamma();
    assert_eq!(q.num_states(), n_s, "table rows must match |S|");
    assert_eq!(q.num_actions(), space.len(), "table columns must match the space");

    let best: Vec<f64> = (0..n_s).map(|s| q.max_row(s)).collect();
    let mut out = QTable::zeros(n_s, space.len());
    for s in 0..n_s {
        for (k, action) in space.iter().enumerate() {
            let a = m.lower(s, action);
            let row = m.base().row(s, a);
            let tau = action.duration();
            let cont = if tau == 1 {
                row.iter().zip(&best).map(|(p, v)| p * v).sum::<f64>()
            } else {
                let shorter = space
                    .flat_index(action.with_duration(tau - 1))
                    .expect("shorter macro is in the space");
                row.iter()
                    .enumerate()
                    .map(|(next, p)| p * q.get(next, shorter))
                    .sum::<f64>()
            };
            out.set(s, k, m.reward(s, action) + gamma * cont);
        }
    }
    out
}

/// Iterates `H` from the zero table until `‖HQ − Q‖∞ < tol`.
pub fn value_iteration(m: &EnhancedFiniteMdp, tol: f64) -> Result<QTable> {
    value_iteration_from(m, QTable::for_mdp(m), tol).map(|(q, _)| q)
}

/// Value iteration from `init`; also returns the number of sweeps.
///
/// Fails with an internal error if the sweep count exceeds the bound
/// implied by a γ-contraction, `⌈log(tol·(1−γ)/Δ₀)/log γ⌉ + 1`.
pub fn value_iteration_from(m: &EnhancedFiniteMdp, init: QTable, tol: f64) -> Result<(QTable, usize)> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let gamma = m.gamma();
    let mut q = init;
    let mut next = apply_h(&q, m);
    let delta0 = next.sup_distance(&q);
    let bound = if delta0 < tol {
        1
    } else if gamma == 0.0 {
        2
    } else {
        ((tol * (1.0 - gamma) / delta0).ln() / gamma.ln()).ceil() as usize + 1
    };
    let mut sweeps = 1;
    loop {
        let delta = next.sup_distance(&q);
        if !delta.is_finite() {
            return Err(Error::Internal("value iteration diverged to non-finite values".into()));
        }
        if delta < tol {
            return Ok((next, sweeps));
        }
        if sweeps >= bound {
            return Err(Error::Internal(format!(
                "no convergence after {sweeps} sweeps (bound {bound}, residual {delta:e})"
            )));
        }
        q = next;
        next = apply_h(&q, m);
        sweeps += 1;
    }
}

/// `‖HQj − HQk‖∞ ≤ γ‖Qj − Qk‖∞ + 1e-12`.
pub fn contraction_check(m: &EnhancedFiniteMdp, qj: &QTable, qk: &QTable) -> bool {
    let lhs = apply_h(qj, m).sup_distance(&apply_h(qk, m));
    lhs <= m.gamma() * qj.sup_distance(qk) + 1e-12
}

/// At the bonus-free fixed point, committing longer to an expert never
/// helps: `Q*(s,m^i(τ)) ≤ Q*(s,m^i(τ−1))` and `Q*(s,m^i(1))` is bounded by
/// the best primitive.
pub fn monotonicity_check(q_star: &QTable, m: &EnhancedFiniteMdp) -> bool {
    const SLACK: f64 = 1e-9;
    let space = m.space();
    let prims = space.num_primitives();
    for s in 0..m.num_states() {
        let row = q_star.row(s);
        let best_prim = row[..prims].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for i in 1..=space.num_experts() {
            let idx = space.macro_indices(i);
            if row[idx.start] > best_prim + SLACK {
                return false;
            }
            for k in idx.start + 1..idx.end {
                if row[k] > row[k - 1] + SLACK {
                    return false;
                }
            }
        }
    }
    true
}
