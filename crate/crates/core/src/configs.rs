//! Mixed-radix enumeration of joint configurations.
//!
//! Configurations are numbered row-major: the leftmost variable varies
//! slowest. The same convention is used for CPT rows, log-odds tables and
//! the classifier's input configurations.

/// Number of configurations for the given radices, or `None` on overflow.
pub fn count(radices: &[usize]) -> Option<u128> {
    radices
        .iter()
        .try_fold(1u128, |acc, &r| acc.checked_mul(r as u128))
}

/// Index of `states` under the given radices.
pub fn encode(states: &[usize], radices: &[usize]) -> usize {
    debug_assert_eq!(states.len(), radices.len());
    states
        .iter()
        .zip(radices)
        .fold(0usize, |acc, (&s, &r)| acc * r + s)
}

/// Inverse of [`encode`], written into `out`.
pub fn decode_into(mut index: usize, radices: &[usize], out: &mut [usize]) {
    for (slot, &r) in out.iter_mut().zip(radices).rev() {
        *slot = index % r;
        index /= r;
    }
}

pub fn decode(index: usize, radices: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radices.len()];
    decode_into(index, radices, &mut out);
    out
}

/// Advances `states` to the next configuration in row-major order.
/// Returns `false` after wrapping past the last one.
pub fn advance(states: &mut [usize], radices: &[usize]) -> bool {
    for (s, &r) in states.iter_mut().zip(radices).rev() {
        *s += 1;
        if *s < r {
            return true;
        }
        *s = 0;
    }
    false
}
