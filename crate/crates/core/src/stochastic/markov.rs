//! Supply-state Markov chain: stationary distribution, mean shortage
//! fraction, state transitions, and the partial-delivery Beta draw.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::domain::{SupplyModel, SupplyState};
use crate::error::{Error, Result};

/// Stationary distribution of a row-stochastic 3x3 matrix, solved from
/// the balance equations with a power-iteration fallback. Errors when the
/// chain has more than one stationary distribution.
pub fn stationary_distribution(tpm: &[[f64; 3]; 3]) -> Result<[f64; 3]> {
    // Rank of (A = tpm' - I) decides uniqueness: an irreducible chain has
    // rank exactly n - 1.
    let n = 3;
    let mut a = [[0.0f64; 3]; 3];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = tpm[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    if rank3(a) < n - 1 {
        return Err(Error::MultipleStationary);
    }

    // Replace the last balance equation by the normalization constraint.
    let mut m = a;
    m[n - 1] = [1.0, 1.0, 1.0];
    let rhs = [0.0, 0.0, 1.0];
    if let Some(theta) = solve3(m, rhs) {
        if theta.iter().all(|&x| x >= -1e-9) && verify_stationary(tpm, &theta) {
            let mut out = theta.map(|x| x.max(0.0));
            let s: f64 = out.iter().sum();
            out.iter_mut().for_each(|x| *x /= s);
            return Ok(out);
        }
    }
    power_iteration(tpm)
}

fn verify_stationary(tpm: &[[f64; 3]; 3], theta: &[f64; 3]) -> bool {
    (0..3).all(|j| {
        let balance: f64 = (0..3).map(|i| theta[i] * tpm[i][j]).sum();
        (balance - theta[j]).abs() < 1e-8
    })
}

fn rank3(mut m: [[f64; 3]; 3]) -> usize {
    let mut rank = 0;
    let mut row = 0;
    for col in 0..3 {
        let pivot = (row..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()));
        let Some(p) = pivot else { break };
        if m[p][col].abs() < 1e-10 {
            continue;
        }
        m.swap(row, p);
        for r in (row + 1)..3 {
            let factor = m[r][col] / m[row][col];
            for c in col..3 {
                m[r][c] -= factor * m[row][c];
            }
        }
        rank += 1;
        row += 1;
        if row == 3 {
            break;
        }
    }
    rank
}

fn solve3(mut m: [[f64; 3]; 3], mut rhs: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let p = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[p][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, p);
        rhs.swap(col, p);
        for r in 0..3 {
            if r == col {
                continue;
            }
            let factor = m[r][col] / m[col][col];
            for c in col..3 {
                m[r][c] -= factor * m[col][c];
            }
            rhs[r] -= factor * rhs[col];
        }
    }
    Some([rhs[0] / m[0][0], rhs[1] / m[1][1], rhs[2] / m[2][2]])
}

fn power_iteration(tpm: &[[f64; 3]; 3]) -> Result<[f64; 3]> {
    let mut theta = [1.0 / 3.0; 3];
    for _ in 0..100_000 {
        let mut next = [0.0; 3];
        for j in 0..3 {
            next[j] = (0..3).map(|i| theta[i] * tpm[i][j]).sum();
        }
        let diff: f64 = (0..3).map(|i| (next[i] - theta[i]).abs()).sum();
        theta = next;
        if diff < 1e-14 {
            return Ok(theta);
        }
    }
    Err(Error::MultipleStationary)
}

/// Long-run mean fraction of ordered units actually supplied:
/// theta*_full + theta*_partial * alpha / (alpha + beta).
pub fn mean_supplied_fraction(supply: &SupplyModel) -> Result<f64> {
    let theta = stationary_distribution(&supply.tpm)?;
    Ok(theta[SupplyState::Full.index()]
        + theta[SupplyState::Partial.index()] * supply.partial_mean())
}

/// Long-run mean shortage fraction, 1 minus the mean supplied fraction.
pub fn mean_shortage_fraction(supply: &SupplyModel) -> Result<f64> {
    Ok(1.0 - mean_supplied_fraction(supply)?)
}

/// Sample the next supply state from the transition row of `prev`.
pub fn next_supply_state<R: Rng + ?Sized>(
    prev: SupplyState,
    tpm: &[[f64; 3]; 3],
    rng: &mut R,
) -> SupplyState {
    pick_state(&tpm[prev.index()], rng.gen())
}

/// First-period state, drawn from the stationary distribution.
pub fn initial_supply_state<R: Rng + ?Sized>(
    tpm: &[[f64; 3]; 3],
    rng: &mut R,
) -> Result<SupplyState> {
    let theta = stationary_distribution(tpm)?;
    Ok(pick_state(&theta, rng.gen()))
}

/// State drawn from a weight vector by inverse transform.
pub fn pick_state(weights: &[f64; 3], u: f64) -> SupplyState {
    let mut cum = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        cum += w;
        if u < cum {
            return SupplyState::from_index(i);
        }
    }
    SupplyState::Partial
}

/// Beta(alpha, beta) draw realized as a ratio of two Gamma draws.
pub fn sample_beta<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> f64 {
    let ga = Gamma::new(alpha, 1.0).expect("alpha > 0");
    let gb = Gamma::new(beta, 1.0).expect("beta > 0");
    loop {
        let x: f64 = ga.sample(rng);
        let y: f64 = gb.sample(rng);
        if x + y > 0.0 {
            return x / (x + y);
        }
    }
}

/// Delivered fraction for a given supply state: 1 on full delivery, 0 on
/// cancellation, Beta(alpha, beta) on partial delivery.
pub fn sample_delivery_fraction<R: Rng + ?Sized>(
    state: SupplyState,
    alpha: f64,
    beta: f64,
    rng: &mut R,
) -> f64 {
    match state {
        SupplyState::Full => 1.0,
        SupplyState::NoDelivery => 0.0,
        SupplyState::Partial => sample_beta(alpha, beta, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn baseline_stationary_distribution() {
        let supply = SupplyModel::baseline();
        let theta = stationary_distribution(&supply.tpm).unwrap();
        assert!((theta[0] - 0.98).abs() < 1e-3, "{theta:?}");
        assert!((theta[1] - 0.01).abs() < 1e-3);
        assert!((theta[2] - 0.01).abs() < 1e-3);
        let shortage = mean_shortage_fraction(&supply).unwrap();
        assert!((shortage - 0.0157).abs() < 5e-4, "shortage {shortage}");
    }

    #[test]
    fn uniform_tpm_stationary_is_uniform() {
        let tpm = [[1.0 / 3.0; 3]; 3];
        let theta = stationary_distribution(&tpm).unwrap();
        for x in theta {
            assert!((x - 1.0 / 3.0).abs() < 1e-12);
        }
        let supply = SupplyModel {
            tpm,
            ..SupplyModel::baseline()
        };
        let shortage = mean_shortage_fraction(&supply).unwrap();
        assert!((shortage - (1.0 - (1.0 / 3.0 + 0.4 / 3.0))).abs() < 1e-12);
    }

    #[test]
    fn persistent_shortage_chain_stationary() {
        let tpm = [[0.95, 0.01, 0.04], [0.3, 0.2, 0.5], [0.3, 0.5, 0.2]];
        let theta = stationary_distribution(&tpm).unwrap();
        assert!((theta[0] - 0.857).abs() < 1e-3, "{theta:?}");
        assert!((theta[1] - 0.062).abs() < 1e-3);
        assert!((theta[2] - 0.081).abs() < 1e-3);
    }

    #[test]
    fn absorbed_chain_has_zero_shortage() {
        let supply = SupplyModel {
            tpm: [[1.0, 0.0, 0.0], [0.5, 0.25, 0.25], [0.5, 0.25, 0.25]],
            ..SupplyModel::baseline()
        };
        let shortage = mean_shortage_fraction(&supply).unwrap();
        assert!(shortage.abs() < 1e-9);
    }

    #[test]
    fn reducible_chain_is_rejected() {
        let identity = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(matches!(
            stationary_distribution(&identity),
            Err(Error::MultipleStationary)
        ));
    }

    #[test]
    fn delivery_fraction_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(
            sample_delivery_fraction(SupplyState::Full, 2.0, 3.0, &mut rng),
            1.0
        );
        assert_eq!(
            sample_delivery_fraction(SupplyState::NoDelivery, 2.0, 3.0, &mut rng),
            0.0
        );
        let d = sample_delivery_fraction(SupplyState::Partial, 2.0, 3.0, &mut rng);
        assert!((0.0..=1.0).contains(&d));
    }

    #[test]
    fn beta_mean_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 1_000_000;
        let mean: f64 = (0..n).map(|_| sample_beta(2.0, 3.0, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 0.4).abs() < 0.002, "beta mean {mean}");
    }

    #[test]
    fn chain_frequencies_converge_to_stationary() {
        let supply = SupplyModel::baseline();
        let theta = stationary_distribution(&supply.tpm).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut counts = [0u64; 3];
        let mut state = SupplyState::Full;
        let n = 1_000_000;
        for _ in 0..n {
            state = next_supply_state(state, &supply.tpm, &mut rng);
            counts[state.index()] += 1;
        }
        for i in 0..3 {
            let freq = counts[i] as f64 / n as f64;
            assert!((freq - theta[i]).abs() < 0.005, "state {i}: {freq}");
        }
    }
}
