//! Instantaneous excess-bandwidth allocation.
//!
//! Active subscribers first receive their guaranteed share, then the leftover
//! capacity is spread by weighted progressive filling (water-filling): all
//! uncapped shares rise together in proportion to their weights, freezing at
//! each subscriber's remaining demand. Weights are the subscribers' token
//! generation rates, so excess bandwidth ends up proportional to what each
//! subscriber already pays for.
//!
//! The closed-form fill here is the production path and the single point to
//! swap if a different excess-allocation policy is ever adopted;
//! [`progressive_fill_oracle`] is a deliberately slow reference used by the
//! test suite to cross-check it.

use thiserror::Error;

use crate::units::Rate;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AllocError {
    /// The guaranteed shares alone exceed capacity. The group is oversubscribed
    /// beyond the `N x TGR_L <= TGR_H` sizing rule and no allocation honours
    /// every guarantee.
    #[error(
        "guaranteed shares need {required_mbps} Mbit/s but only {capacity_mbps} Mbit/s is available \
         (shortfall {shortfall_mbps} Mbit/s); group violates N x TGR_L <= TGR_H"
    )]
    InfeasibleGuarantees {
        required_mbps: f64,
        capacity_mbps: f64,
        shortfall_mbps: f64,
    },
    /// Weights are fill-rate proportions and must be positive.
    #[error("subscriber {index} has non-positive weight {weight_mbps} Mbit/s")]
    NonPositiveWeight { index: usize, weight_mbps: f64 },
}

/// One subscriber's inputs to an allocation round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubscriberState {
    /// Caller-chosen identifier, unique within one call. All internal
    /// reductions run in id order, so permuting the input slice permutes the
    /// result bit-for-bit.
    pub id: usize,
    /// Rate the subscriber is always entitled to (their TGR).
    pub guaranteed_rate: Rate,
    /// Progressive-filling weight, normally equal to the guaranteed rate.
    pub weight: Rate,
    /// Current offered load; the allocation never exceeds it.
    pub demand: Rate,
}

/// One subscriber's outcome: `granted_rate = guaranteed_part + excess_part`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Share {
    pub granted_rate: Rate,
    pub guaranteed_part: Rate,
    pub excess_part: Rate,
}

/// Per-subscriber shares in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult {
    pub shares: Vec<Share>,
}

impl AllocationResult {
    pub fn total_granted(&self) -> Rate {
        self.shares.iter().map(|s| s.granted_rate).sum()
    }
}

/// Splits `capacity` among `subs`.
///
/// Phase 1 hands every subscriber `min(demand, guaranteed_rate)`; phase 2
/// water-fills the leftover with weights `weight`, capped at each
/// subscriber's unmet demand. Inactive subscribers (zero demand) receive
/// nothing and do not dilute the excess pool. The result is work-conserving:
/// when demand saturates capacity, the full capacity is granted.
pub fn allocate(capacity: Rate, subs: &[SubscriberState]) -> Result<AllocationResult, AllocError> {
    for (index, sub) in subs.iter().enumerate() {
        if sub.weight.value() <= 0.0 {
            return Err(AllocError::NonPositiveWeight {
                index,
                weight_mbps: sub.weight.value(),
            });
        }
    }

    let capacity = capacity.value();
    let guaranteed: Vec<f64> = subs
        .iter()
        .map(|s| s.demand.value().min(s.guaranteed_rate.value()))
        .collect();
    let ids: Vec<usize> = subs.iter().map(|s| s.id).collect();
    // All sums run in id order so the arithmetic is independent of how the
    // caller ordered the slice.
    let mut by_id: Vec<usize> = (0..subs.len()).collect();
    by_id.sort_by_key(|&i| ids[i]);
    let guaranteed_sum: f64 = by_id.iter().map(|&i| guaranteed[i]).sum();
    if guaranteed_sum > capacity {
        return Err(AllocError::InfeasibleGuarantees {
            required_mbps: guaranteed_sum,
            capacity_mbps: capacity,
            shortfall_mbps: guaranteed_sum - capacity,
        });
    }

    let caps: Vec<f64> = subs
        .iter()
        .zip(&guaranteed)
        .map(|(s, g)| s.demand.value() - g)
        .collect();
    let weights: Vec<f64> = subs.iter().map(|s| s.weight.value()).collect();
    let mut excess = water_fill(capacity - guaranteed_sum, &caps, &weights, &ids);

    // Rounding in `guaranteed + excess` can overshoot the demand by an ulp;
    // trim the excess until the sum fits.
    for i in 0..excess.len() {
        let demand = subs[i].demand.value();
        while guaranteed[i] + excess[i] > demand && excess[i] > 0.0 {
            excess[i] = (excess[i] - (guaranteed[i] + excess[i] - demand)).max(0.0);
        }
    }

    // Hard invariant: the total grant never exceeds capacity, however a
    // caller chooses to sum the shares. Water-fill arithmetic can overshoot
    // by a few ulps and different summation orders wobble by a few more, so
    // shave the largest excess shares down to a margin of a few ulps below
    // capacity, walking a canonical order so permuted inputs shave alike.
    let slack = 4.0 * subs.len() as f64 * f64::EPSILON * capacity;
    let total: f64 = by_id.iter().map(|&i| guaranteed[i] + excess[i]).sum();
    if total > capacity - slack {
        let mut overshoot = total - (capacity - slack);
        let mut order = by_id;
        order.sort_by(|&a, &b| {
            excess[b]
                .partial_cmp(&excess[a])
                .unwrap()
                .then(ids[a].cmp(&ids[b]))
        });
        for i in order {
            let cut = overshoot.min(excess[i]);
            excess[i] -= cut;
            overshoot -= cut;
            if overshoot <= 0.0 {
                break;
            }
        }
    }

    let shares = guaranteed
        .iter()
        .zip(&excess)
        .map(|(&g, &e)| Share {
            granted_rate: Rate::new(g + e),
            guaranteed_part: Rate::new(g),
            excess_part: Rate::new(e),
        })
        .collect();
    Ok(AllocationResult { shares })
}

/// Closed-form weighted water-fill: raises a common fill level `level`, with
/// subscriber `i` holding `weight_i * level` until frozen at `cap_i`. Runs in
/// O(n log n). Ties in the freeze order are broken on values, then ids, so
/// the outcome is independent of input order.
fn water_fill(budget: f64, caps: &[f64], weights: &[f64], ids: &[usize]) -> Vec<f64> {
    let mut excess = vec![0.0; caps.len()];
    if budget <= 0.0 {
        return excess;
    }

    // Zero-cap entries are pre-frozen and take no part in the fill.
    let mut order: Vec<usize> = (0..caps.len()).filter(|&i| caps[i] > 0.0).collect();
    if order.is_empty() {
        return excess;
    }
    let ratio = |i: usize| caps[i] / weights[i];
    order.sort_by(|&a, &b| {
        ratio(a)
            .partial_cmp(&ratio(b))
            .unwrap()
            .then(caps[a].partial_cmp(&caps[b]).unwrap())
            .then(weights[a].partial_cmp(&weights[b]).unwrap())
            .then(ids[a].cmp(&ids[b]))
    });

    let mut active_weight: f64 = order.iter().map(|&i| weights[i]).sum();
    let mut level = 0.0_f64;
    let mut remaining = budget;
    let mut fully_capped = true;
    for &i in &order {
        let target = ratio(i);
        let step_volume = (target - level) * active_weight;
        if step_volume <= remaining {
            remaining -= step_volume;
            level = target;
            active_weight -= weights[i];
        } else {
            // Clamping keeps the level monotone in the budget even when the
            // division overshoots the bracket boundary by an ulp.
            level = (level + remaining / active_weight).min(target);
            fully_capped = false;
            break;
        }
    }
    if fully_capped {
        level = f64::INFINITY;
    }

    // min() rather than a frozen/unfrozen branch: `weight * level` can round
    // past the cap right at the freeze boundary.
    for &i in &order {
        excess[i] = caps[i].min(weights[i] * level);
    }
    excess
}

/// Brute-force progressive filling in `step`-sized rounds; each round grants
/// `step * weight_i / sum(active weights)` to every uncapped subscriber until
/// capacity runs out or everyone is capped.
///
/// Deliberately slow test reference for [`allocate`]'s phase 2; agreement is
/// within a step's volume. Raw `f64` Mbit/s so callers can pass infinite caps.
pub fn progressive_fill_oracle(capacity: f64, caps: &[f64], weights: &[f64], step: f64) -> Vec<f64> {
    assert!(step > 0.0, "oracle step must be positive");
    assert_eq!(caps.len(), weights.len());
    let mut filled = vec![0.0_f64; caps.len()];
    let mut remaining = capacity;
    loop {
        let active: Vec<usize> = (0..caps.len()).filter(|&i| filled[i] < caps[i]).collect();
        if active.is_empty() || remaining <= 0.0 {
            return filled;
        }
        let weight_sum: f64 = active.iter().map(|&i| weights[i]).sum();
        for &i in &active {
            let grant = (step * weights[i] / weight_sum)
                .min(caps[i] - filled[i])
                .min(remaining);
            if grant <= 0.0 {
                continue;
            }
            // Land exactly on the cap when the clamped grant reaches it.
            if grant >= caps[i] - filled[i] {
                remaining -= caps[i] - filled[i];
                filled[i] = caps[i];
            } else {
                filled[i] += grant;
                remaining -= grant;
            }
            if remaining <= 0.0 {
                return filled;
            }
        }
    }
}
