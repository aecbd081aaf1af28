/// Potential-based advice shaping over state–action pairs.
///
/// `Φ(s, a) = p` when an expert demonstrates `a` in `s`, else 0; the shaped
/// reward is `r + γ·Φ(s', a') − Φ(s, a)` with `a'` the learner's greedy
/// primitive at `s'`.
pub fn shaping_advice_reward<S: ?Sized>(
    reward: f64,
    state: &S,
    action: usize,
    next_state: &S,
    next_action: usize,
    demonstrated: impl Fn(&S, usize) -> bool,
    potential: f64,
    gamma: f64,
) -> f64 {
    let phi = |s: &S, a: usize| if demonstrated(s, a) { potential } else { 0.0 };
    reward + gamma * phi(next_state, next_action) - phi(state, action)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let none = |_: &u8, _: usize| false;
        assert_eq!(shaping_advice_reward(1.0, &0, 0, &1, 0, none, -0.05, 0.99), 1.0);

        let first_only = |s: &u8, _: usize| *s == 0;
        let r = shaping_advice_reward(1.0, &0, 0, &1, 0, first_only, -0.05, 0.99);
        assert!((r - 1.05).abs() < 1e-12);

        let all = |_: &u8, _: usize| true;
        assert_eq!(shaping_advice_reward(1.0, &0, 0, &1, 0, all, -0.05, 1.0), 1.0);
    }
}
