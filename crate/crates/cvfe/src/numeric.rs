//! Small numeric helpers shared across modules.

/// Neumaier compensated summation.
///
/// Used for mass, entropy and measure totals where plain accumulation over
/// tens of thousands of terms would eat into 1e-12-level identities.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Max-norm of a slice.
pub fn max_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}
