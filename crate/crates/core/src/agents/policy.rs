use rand::Rng;

/// Index of the largest value; ties are broken uniformly at random.
///
/// Consumes randomness only when there is an actual tie.
pub fn argmax_random_tie<R: Rng + ?Sized>(values: &[f64], rng: &mut R) -> usize {
    debug_assert!(!values.is_empty());
    let mut best = 0;
    let mut ties = 1usize;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
            ties = 1;
        } else if v == values[best] {
            ties += 1;
        }
    }
    if ties == 1 {
        return best;
    }
    let top = values[best];
    let pick = rng.random_range(0..ties);
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == top)
        .nth(pick)
        .map(|(i, _)| i)
        .unwrap_or(best)
}

/// Uniform action with probability `epsilon`, otherwise greedy.
pub fn epsilon_greedy<R: Rng + ?Sized>(values: &[f64], epsilon: f64, rng: &mut R) -> usize {
    if rng.random::<f64>() < epsilon {
        rng.random_range(0..values.len())
    } else {
        argmax_random_tie(values, rng)
    }
}

/// Probability that ε-greedy over `values` picks `action`, counting ties
/// as shared.
pub fn epsilon_greedy_probability(values: &[f64], epsilon: f64, action: usize) -> f64 {
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties = values.iter().filter(|&&v| v == top).count() as f64;
    let greedy = if values[action] == top { 1.0 / ties } else { 0.0 };
    (1.0 - epsilon) * greedy + epsilon / values.len() as f64
}
