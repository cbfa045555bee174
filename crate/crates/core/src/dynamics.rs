//! Deterministic state-transition engine: given realized (or sampled)
//! supply, demand, and spoilage for one period, advance the age-indexed
//! inventory and compute the period cost.
//!
//! Event order within a period: the order decision joins the pipeline,
//! the due order is delivered into the age-0 bucket, demand is served
//! FIFO, the post-sales inventory spoils bucket by bucket, and finally
//! every bucket ages by one period.

use crate::domain::{CostParams, InventoryVector, PeriodOutcome, SimulationState, SupplyState};
use crate::error::{Error, Result};

/// Serve demand from the oldest buckets first. Returns (sold, lost).
pub fn fulfill_fifo(inv: &mut InventoryVector, demand: u32) -> (u32, u32) {
    let mut remaining = demand;
    for bucket in inv.counts_mut().iter_mut().rev() {
        let take = remaining.min(*bucket);
        *bucket -= take;
        remaining -= take;
        if remaining == 0 {
            break;
        }
    }
    (demand - remaining, remaining)
}

/// FIFO fulfillment on fractional buckets. Returns (sold, lost).
pub fn fulfill_fifo_frac(buckets: &mut [f64], demand: f64) -> (f64, f64) {
    let mut remaining = demand;
    for bucket in buckets.iter_mut().rev() {
        let take = remaining.min(*bucket);
        *bucket -= take;
        remaining -= take;
        if remaining <= 0.0 {
            remaining = 0.0;
            break;
        }
    }
    (demand - remaining, remaining)
}

/// Totals of one fractional period step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepTotals {
    pub sold: f64,
    pub lost: f64,
    pub spoiled: f64,
    /// Inventory carried into the next period.
    pub ending: f64,
}

/// One period on fractional buckets: receive, sell FIFO, spoil, age.
///
/// `spoil(age, count)` returns the units spoiling from the bucket of the
/// given age; whatever survives the oldest bucket spoils anyway, since it
/// has reached the maximum shelf life. The caller guarantees the closure
/// never returns more than `count`.
pub fn step_frac(
    buckets: &mut [f64],
    delivered: f64,
    demand: f64,
    mut spoil: impl FnMut(usize, f64) -> f64,
) -> StepTotals {
    if !buckets.is_empty() {
        buckets[0] += delivered;
    }
    let (sold, lost) = fulfill_fifo_frac(buckets, demand);
    let mut spoiled = 0.0;
    let last = buckets.len().saturating_sub(1);
    for (age, bucket) in buckets.iter_mut().enumerate() {
        if *bucket <= 0.0 {
            continue;
        }
        let s = if age == last {
            *bucket
        } else {
            spoil(age, *bucket).min(*bucket)
        };
        *bucket -= s;
        spoiled += s;
    }
    let ending: f64 = buckets.iter().sum();
    for j in (1..buckets.len()).rev() {
        buckets[j] = buckets[j - 1];
    }
    if !buckets.is_empty() {
        buckets[0] = 0.0;
    }
    StepTotals {
        sold,
        lost,
        spoiled,
        ending,
    }
}

/// Realized exogenous quantities of one period.
#[derive(Debug, Clone, Copy)]
pub struct Realization {
    /// Units delivered (at most the order due this period).
    pub delivered: u32,
    pub demand: u32,
    /// Supply state that produced the delivery, when observed.
    pub supply_state: Option<SupplyState>,
}

/// Advance one period of the integer-valued system.
///
/// `spoil(age, count)` draws the spoilage of one post-sales bucket; a draw
/// exceeding the bucket count is an internal-consistency error.
pub fn advance_period(
    state: &SimulationState,
    order_placed: u32,
    realized: Realization,
    costs: &CostParams,
    mut spoil: impl FnMut(usize, u32) -> u32,
) -> Result<(SimulationState, PeriodOutcome)> {
    let mut next = state.clone();
    next.period = state.period + 1;
    let due = next.pipeline.push_and_pop(order_placed);
    if realized.delivered > due {
        return Err(Error::Internal(format!(
            "delivered {} exceeds due order {due}",
            realized.delivered
        )));
    }

    next.inventory.receive(realized.delivered);
    let (sold, lost) = fulfill_fifo(&mut next.inventory, realized.demand);

    let mut spoiled = 0u32;
    let last = next.inventory.max_shelf_life().saturating_sub(1);
    for (age, bucket) in next.inventory.counts_mut().iter_mut().enumerate() {
        if *bucket == 0 {
            continue;
        }
        let drawn = if age == last { *bucket } else { spoil(age, *bucket) };
        if drawn > *bucket {
            return Err(Error::Internal(format!(
                "spoilage draw {drawn} exceeds bucket of {} at age {age}",
                *bucket
            )));
        }
        *bucket -= drawn;
        spoiled += drawn;
    }

    let ending_inventory = next.inventory.total() as u32;
    let dropped = next.inventory.age();
    debug_assert_eq!(dropped, 0, "oldest bucket must spoil completely");

    if let Some(g) = realized.supply_state {
        next.last_supply_state = Some(g);
    }

    let cost = costs.period_cost(
        f64::from(ending_inventory),
        f64::from(lost),
        f64::from(spoiled),
    );
    let outcome = PeriodOutcome {
        period: next.period,
        order_placed,
        delivered: realized.delivered,
        demand: realized.demand,
        sold,
        lost,
        spoiled,
        ending_inventory,
        cost,
    };
    Ok((next, outcome))
}

/// How a projection treats spoilage.
#[derive(Debug, Clone, Copy)]
pub enum SpoilagePlan<'a> {
    /// Remove the expected fraction p_j from each bucket.
    ExpectedFractions(&'a [f64]),
    /// Units live exactly this many periods; older buckets are dropped.
    FixedLife(usize),
    /// Nothing spoils (buckets still die at the vector's maximum age).
    None,
}

impl SpoilagePlan<'_> {
    fn fraction(&self, age: usize) -> f64 {
        match self {
            SpoilagePlan::ExpectedFractions(p) => p.get(age).copied().unwrap_or(1.0),
            SpoilagePlan::FixedLife(periods) => {
                if age + 1 >= *periods {
                    1.0
                } else {
                    0.0
                }
            }
            SpoilagePlan::None => 0.0,
        }
    }
}

/// Expected starting inventory `lead_time` periods ahead, obtained by
/// propagating expectations through the period dynamics: each pending
/// order arrives scaled by `supplied_fraction`, expected demand is served
/// FIFO, and spoilage removes the planned per-bucket fraction. Fractional
/// units are kept throughout.
pub fn project_inventory(
    inventory: &InventoryVector,
    pending: &[u32],
    expected_demand: &[f64],
    supplied_fraction: f64,
    spoilage: SpoilagePlan,
) -> f64 {
    debug_assert_eq!(pending.len(), expected_demand.len());
    let mut buckets: Vec<f64> = inventory.counts().iter().map(|&c| f64::from(c)).collect();
    for (s, &order) in pending.iter().enumerate() {
        let delivered = supplied_fraction * f64::from(order);
        step_frac(&mut buckets, delivered, expected_demand[s], |age, count| {
            count * spoilage.fraction(age)
        });
    }
    buckets.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::PipelineState;

    fn baseline_costs() -> CostParams {
        CostParams::baseline()
    }

    #[test]
    fn fifo_serves_oldest_first() {
        let mut inv = InventoryVector::from_counts(vec![48, 40, 10, 0, 0, 0]);
        let (sold, lost) = fulfill_fifo(&mut inv, 46);
        assert_eq!(inv.counts(), &[48, 4, 0, 0, 0, 0]);
        assert_eq!((sold, lost), (46, 0));
    }

    #[test]
    fn fifo_zero_demand_keeps_inventory() {
        let mut inv = InventoryVector::from_counts(vec![3, 2, 1]);
        let (sold, lost) = fulfill_fifo(&mut inv, 0);
        assert_eq!(inv.counts(), &[3, 2, 1]);
        assert_eq!((sold, lost), (0, 0));
    }

    #[test]
    fn fifo_exhaustion_loses_remainder() {
        let mut inv = InventoryVector::from_counts(vec![2, 2, 1]);
        let (sold, lost) = fulfill_fifo(&mut inv, 9);
        assert_eq!(inv.total(), 0);
        assert_eq!((sold, lost), (5, 4));
    }

    #[test]
    fn worked_transition_example() {
        // Start of period: 40 units delivered one period ago, 10 two
        // periods ago; 60 due now under a 20% shortage; demand 46; 12 of
        // the fresh 48 and 2 of the 4 remaining age-1 units spoil.
        let state = SimulationState {
            period: 0,
            inventory: InventoryVector::from_counts(vec![0, 40, 10, 0, 0, 0]),
            last_supply_state: None,
            pipeline: PipelineState::from_orders(vec![60, 0, 0]),
        };
        let realized = Realization {
            delivered: 48,
            demand: 46,
            supply_state: Some(SupplyState::Partial),
        };
        let (next, outcome) =
            advance_period(&state, 0, realized, &baseline_costs(), |age, count| {
                match (age, count) {
                    (0, 48) => 12,
                    (1, 4) => 2,
                    _ => 0,
                }
            })
            .unwrap();
        assert_eq!(outcome.spoiled, 14);
        assert_eq!(outcome.sold, 46);
        assert_eq!(outcome.lost, 0);
        assert_eq!(outcome.ending_inventory, 38);
        assert_eq!(next.inventory.counts(), &[0, 36, 2, 0, 0, 0]);
        assert!((outcome.cost - 17.8).abs() < 1e-12);
        assert_eq!(next.last_supply_state, Some(SupplyState::Partial));
    }

    #[test]
    fn all_zero_realizations_cost_nothing() {
        let state = SimulationState::initial(6, 3);
        let realized = Realization {
            delivered: 0,
            demand: 0,
            supply_state: None,
        };
        let (next, outcome) =
            advance_period(&state, 0, realized, &baseline_costs(), |_, _| 0).unwrap();
        assert_eq!(outcome.cost, 0.0);
        assert!(next.inventory.is_empty());
    }

    #[test]
    fn delivery_exceeding_due_order_is_rejected() {
        let state = SimulationState::initial(6, 3);
        let realized = Realization {
            delivered: 5,
            demand: 0,
            supply_state: None,
        };
        assert!(advance_period(&state, 0, realized, &baseline_costs(), |_, _| 0).is_err());
    }

    #[test]
    fn overdrawn_spoilage_is_rejected() {
        let state = SimulationState {
            period: 0,
            inventory: InventoryVector::from_counts(vec![0, 10, 0, 0, 0, 0]),
            last_supply_state: None,
            pipeline: PipelineState::empty(3),
        };
        let realized = Realization {
            delivered: 0,
            demand: 0,
            supply_state: None,
        };
        let err = advance_period(&state, 0, realized, &baseline_costs(), |_, _| 99);
        assert!(matches!(err, Err(Error::Internal(_))));
    }

    #[test]
    fn no_spoilage_full_supply_reduces_to_scalar_recursion() {
        // i_{t+1} = max(i_t + q_t - d_t, 0), enumerated exhaustively.
        for i in 0u32..=20 {
            for q in 0u32..=20 {
                for d in 0u32..=20 {
                    let state = SimulationState {
                        period: 0,
                        inventory: InventoryVector::from_counts(vec![i, 0, 0, 0, 0, 0, 0, 0]),
                        last_supply_state: None,
                        pipeline: PipelineState::from_orders(vec![q]),
                    };
                    let realized = Realization {
                        delivered: q,
                        demand: d,
                        supply_state: None,
                    };
                    let (_, outcome) =
                        advance_period(&state, 0, realized, &baseline_costs(), |_, _| 0).unwrap();
                    assert_eq!(
                        i64::from(outcome.ending_inventory),
                        (i64::from(i) + i64::from(q) - i64::from(d)).max(0)
                    );
                    // Conservation: available units all end somewhere.
                    assert_eq!(
                        u64::from(i + q),
                        u64::from(outcome.sold)
                            + u64::from(outcome.spoiled)
                            + u64::from(outcome.ending_inventory)
                    );
                }
            }
        }
    }

    /// Every way of removing `take` units from `buckets`.
    fn removals(buckets: &[u32], take: u32) -> Vec<Vec<u32>> {
        if buckets.is_empty() {
            return if take == 0 { vec![vec![]] } else { vec![] };
        }
        let mut out = Vec::new();
        let head = buckets[0];
        for here in 0..=head.min(take) {
            for mut rest in removals(&buckets[1..], take - here) {
                rest.insert(0, here);
                out.push(rest);
            }
        }
        out
    }

    #[test]
    fn fifo_leaves_fewest_units_in_old_buckets() {
        let inventories: [&[u32]; 4] = [&[2, 3, 1], &[0, 4, 2], &[3, 0, 3, 2], &[1, 1, 1, 1]];
        for counts in inventories {
            let total: u32 = counts.iter().sum();
            for demand in 0..=total {
                let mut fifo_inv = InventoryVector::from_counts(counts.to_vec());
                let (sold, _) = fulfill_fifo(&mut fifo_inv, demand);
                for alt in removals(counts, sold) {
                    let alt_inv: Vec<u32> =
                        counts.iter().zip(&alt).map(|(&c, &r)| c - r).collect();
                    // Compare units at age >= cutoff for every cutoff.
                    for cutoff in 0..counts.len() {
                        let fifo_tail: u32 = fifo_inv.counts()[cutoff..].iter().sum();
                        let alt_tail: u32 = alt_inv[cutoff..].iter().sum();
                        assert!(
                            fifo_tail <= alt_tail,
                            "counts {counts:?} demand {demand} cutoff {cutoff}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn projection_trivial_cases() {
        let empty = InventoryVector::empty(6);
        assert_eq!(
            project_inventory(&empty, &[], &[], 1.0, SpoilagePlan::None),
            0.0
        );
        // One pending order of 100 due next period exactly offsets demand.
        let e = project_inventory(&empty, &[100], &[100.0], 1.0, SpoilagePlan::None);
        assert_eq!(e, 0.0);
    }

    #[test]
    fn projection_fixed_life_drops_leftovers() {
        // Shelf life of one period: whatever demand leaves over spoils,
        // so the projected position is always zero.
        let inv = InventoryVector::from_counts(vec![0, 30, 0, 0, 0, 0]);
        let e = project_inventory(&inv, &[50], &[10.0], 1.0, SpoilagePlan::FixedLife(1));
        assert_eq!(e, 0.0);
        // Two periods: the 30 day-old units serve demand, their remainder
        // dies at the end of its second period; the fresh 50 survive.
        let e2 = project_inventory(&inv, &[50], &[10.0], 1.0, SpoilagePlan::FixedLife(2));
        assert_eq!(e2, 50.0);
    }
}
