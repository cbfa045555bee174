//! Conditional spoilage probabilities derived from the shelf-life pmf and
//! the per-bucket binomial spoilage draw.

use rand::Rng;

use super::binomial::sample_binomial;
use crate::domain::InventoryVector;

/// Conditional probability p_j that a unit spoils at the end of its j-th
/// demand period given it survived so far: p_1 = f(1) and
/// p_j = f(j) / (1 - F(j-1)) for j > 1. Indices past the last
/// positive-mass period can never be reached by a surviving unit; they are
/// set to 1 so that stray units in such buckets would spoil immediately.
pub fn conditional_spoilage_probs(pmf: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(pmf.len());
    let mut survival = 1.0;
    for &f in pmf {
        if survival <= 1e-12 {
            out.push(1.0);
            continue;
        }
        out.push((f / survival).clamp(0.0, 1.0));
        survival -= f;
    }
    out
}

/// Per-age spoilage counts: for each bucket of `inv` holding n units with
/// conditional probability p, draws Binomial(n, p). `conditional[a]` is
/// the probability for age bucket a (a unit of age a is in its (a+1)-th
/// period).
pub fn sample_spoilage<R: Rng + ?Sized>(
    inv: &InventoryVector,
    conditional: &[f64],
    rng: &mut R,
) -> Vec<u32> {
    inv.counts()
        .iter()
        .enumerate()
        .map(|(age, &n)| {
            let p = conditional.get(age).copied().unwrap_or(1.0);
            sample_binomial(u64::from(n), p, rng) as u32
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn baseline_conditional_table() {
        let pmf = [0.05, 0.10, 0.15, 0.35, 0.20, 0.15];
        let p = conditional_spoilage_probs(&pmf);
        let expected = [0.050, 0.105, 0.176, 0.500, 0.571, 1.000];
        for (got, want) in p.iter().zip(expected) {
            assert!(
                (got - want).abs() < 5e-4,
                "conditional {got} vs table {want}"
            );
        }
    }

    #[test]
    fn degenerate_single_period() {
        let p = conditional_spoilage_probs(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(p[0], 1.0);
        // Unused tail defaults to certain spoilage.
        assert!(p[1..].iter().all(|&x| x == 1.0));
    }

    #[test]
    fn reconstruction_round_trip() {
        // f(j) = p_j * prod_{m<j} (1 - p_m) recovers the pmf.
        let pmfs: [&[f64]; 3] = [
            &[0.05, 0.10, 0.15, 0.35, 0.20, 0.15],
            &[0.2, 0.05, 0.05, 0.25, 0.15, 0.3],
            &[0.0, 0.1 / 1.1, 0.25 / 1.1, 0.7 / 1.1, 0.05 / 1.1, 0.0],
        ];
        for pmf in pmfs {
            let p = conditional_spoilage_probs(pmf);
            let mut survival = 1.0;
            for (j, &f) in pmf.iter().enumerate() {
                let rebuilt = p[j] * survival;
                assert!(
                    (rebuilt - f).abs() < 1e-10,
                    "index {j}: {rebuilt} vs {f}"
                );
                survival *= 1.0 - p[j];
            }
        }
    }

    #[test]
    fn spoilage_respects_certain_and_impossible_buckets() {
        let inv = InventoryVector::from_counts(vec![10, 48, 7]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let draws = sample_spoilage(&inv, &[0.0, 1.0, 0.5], &mut rng);
        assert_eq!(draws[0], 0);
        assert_eq!(draws[1], 48);
        assert!(draws[2] <= 7);
    }
}
