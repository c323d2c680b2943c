//! Randomized local repair of a random ordering into a valid one.
//!
//! Bad endpoints are handled from the right. For each one, a transposition
//! with a position at most `W` to its right is accepted only if afterwards
//! every collision endpoint is one of the bad endpoints still waiting to be
//! processed. Restarts, window doubling and an exact fallback make the
//! procedure total.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracles::brute_force_valid_ordering;
use crate::ordering::{EventFlags, OrderingState};
use crate::rng::{stream, IndexSource};
use crate::sampling::shuffle;
use crate::zp::{PrimeModulus, Residue};

/// Disjoint transpositions `(x, y)`, `x < y`, with `y - x <= window`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SwapPlan {
    pub window: usize,
    pub pairs: Vec<(usize, usize)>,
}

impl SwapPlan {
    pub fn is_admissible(&self) -> bool {
        let mut seen = HashSet::with_capacity(2 * self.pairs.len());
        self.pairs.iter().all(|&(x, y)| {
            x < y && y - x <= self.window && seen.insert(x) && seen.insert(y)
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fallback {
    Backtrack,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateRule {
    /// Smallest acceptable partner.
    First,
    /// Uniformly random among acceptable partners.
    Random,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairConfig {
    pub window: usize,
    /// Restarts allowed at each window size, after the first attempt.
    pub max_restarts: usize,
    pub fallback: Fallback,
    pub backtrack_threshold: usize,
    pub rng_seed: u64,
    pub candidate_rule: CandidateRule,
    /// Accept 0 in the set and pin it to position 1.
    pub allow_zero: bool,
}

impl Default for RepairConfig {
    fn default() -> Self {
        RepairConfig {
            window: 16,
            max_restarts: 64,
            fallback: Fallback::Backtrack,
            backtrack_threshold: 24,
            rng_seed: 0,
            candidate_rule: CandidateRule::First,
            allow_zero: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Repaired,
    RestartedThenRepaired,
    Backtracked,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub index: u64,
    pub window: usize,
    pub initial_bad: usize,
    pub flags: EventFlags,
    /// Endpoint with no acceptable partner, if the attempt failed.
    pub stuck_at: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairReport {
    pub outcome: Outcome,
    pub restarts_used: u64,
    pub swaps: SwapPlan,
    pub final_window: usize,
    pub attempts: Vec<AttemptRecord>,
}

/// Whether swapping positions `b < y` leaves every collision endpoint inside
/// `remaining_bad \ {b}`. The state is not modified.
pub fn candidate_acceptable(
    state: &OrderingState,
    b: usize,
    y: usize,
    remaining_bad: &HashSet<usize>,
) -> Result<bool> {
    let delta = state.swap_delta(b, y)?;
    let removed: HashSet<usize> = delta.removed.iter().copied().collect();
    let ok_after = |t: usize| t != b && remaining_bad.contains(&t);
    let kept_ok = state
        .bad_set()
        .iter()
        .filter(|t| !removed.contains(t))
        .all(|&t| ok_after(t));
    Ok(kept_ok && delta.added.iter().all(|&t| ok_after(t)))
}

/// One pass of the repair over the current bad endpoints, with the window and
/// candidate rule of `config`. Randomness (only used by the random rule) comes
/// from stream 0 of `config.rng_seed`.
pub fn repair_once(
    state: OrderingState,
    config: &RepairConfig,
) -> Result<(OrderingState, SwapPlan)> {
    let mut rng = stream(config.rng_seed, 0);
    let mut state = state;
    let plan = repair_in_place(&mut state, config.window, config.candidate_rule, &mut rng)?;
    Ok((state, plan))
}

fn repair_in_place<S: IndexSource + ?Sized>(
    state: &mut OrderingState,
    window: usize,
    rule: CandidateRule,
    src: &mut S,
) -> Result<SwapPlan> {
    let n = state.len();
    let targets = state.bad_endpoints().positions;
    let mut blocked: HashSet<usize> = targets.iter().copied().collect();
    let mut remaining: HashSet<usize> = blocked.clone();
    let mut plan = SwapPlan {
        window,
        pairs: Vec::with_capacity(targets.len()),
    };
    let mut candidates = Vec::with_capacity(window);
    for &b in &targets {
        remaining.remove(&b);
        if !state.bad_set().contains(&b) {
            // fixed as a side effect of an earlier swap
            continue;
        }
        candidates.clear();
        candidates.extend((b + 1..=n.min(b + window)).filter(|y| !blocked.contains(y)));
        if rule == CandidateRule::Random {
            shuffle(&mut candidates, src);
        }
        let mut chosen = None;
        for &y in &candidates {
            if candidate_acceptable(state, b, y, &remaining)? {
                chosen = Some(y);
                break;
            }
        }
        let y = chosen.ok_or(Error::NoCandidate(b))?;
        state.swap(b, y)?;
        blocked.insert(y);
        plan.pairs.push((b, y));
    }
    debug_assert!(state.is_valid());
    Ok(plan)
}

/// Valid ordering of `set` by repeated randomized repair.
///
/// Attempt `i` (counted across all window sizes) starts from a uniform
/// ordering drawn from stream `i` of the seed. Each window size gets
/// `1 + max_restarts` attempts before the window doubles; the last size tried
/// is the first one reaching `n - 1`. Afterwards small sets go to the exact
/// backtracking search if the fallback allows it.
pub fn construct_valid_ordering(
    set: &[Residue],
    config: &RepairConfig,
) -> Result<(Vec<Residue>, RepairReport)> {
    if config.window == 0 {
        return Err(Error::BadSize("window must be at least 1".into()));
    }
    let Some(first) = set.first() else {
        return Err(Error::BadSize("the set is empty".into()));
    };
    let modulus = first.modulus();
    let mut values = Vec::with_capacity(set.len());
    for r in set {
        if r.modulus() != modulus {
            return Err(Error::ModulusMismatch(modulus.get(), r.modulus().get()));
        }
        values.push(r.value());
    }
    let has_zero = values.contains(&0);
    if has_zero && !config.allow_zero {
        return Err(Error::ZeroElement);
    }
    // catches duplicates before any randomness is spent
    OrderingState::from_values(modulus, values.clone(), config.allow_zero)?;
    values.sort_unstable();

    let n = values.len();
    let max_window = n.saturating_sub(1).max(1);
    let mut window = config.window.min(max_window);
    let mut attempts = Vec::new();
    let mut index = 0u64;
    loop {
        for _ in 0..=config.max_restarts {
            let mut rng = stream(config.rng_seed, index);
            let mut order = values.clone();
            if has_zero {
                // 0 sorts first; it stays at position 1
                shuffle(&mut order[1..], &mut rng);
            } else {
                shuffle(&mut order, &mut rng);
            }
            let mut state = OrderingState::from_values(modulus, order, config.allow_zero)?;
            let mut record = AttemptRecord {
                index,
                window,
                initial_bad: state.bad_set().len(),
                flags: state.detect_bad_events(window.div_ceil(5)),
                stuck_at: None,
            };
            match repair_in_place(&mut state, window, config.candidate_rule, &mut rng) {
                Ok(plan) => {
                    attempts.push(record);
                    let ordering = state.residues();
                    check_sound(modulus, &ordering, config.allow_zero)?;
                    let report = RepairReport {
                        outcome: if index == 0 {
                            Outcome::Repaired
                        } else {
                            Outcome::RestartedThenRepaired
                        },
                        restarts_used: index,
                        swaps: plan,
                        final_window: window,
                        attempts,
                    };
                    return Ok((ordering, report));
                }
                Err(Error::NoCandidate(b)) => {
                    record.stuck_at = Some(b);
                    attempts.push(record);
                }
                Err(e) => return Err(e),
            }
            index += 1;
        }
        if window >= max_window {
            break;
        }
        window = (window * 2).min(max_window);
    }

    let mut report = RepairReport {
        outcome: Outcome::Failed,
        restarts_used: index.saturating_sub(1),
        swaps: SwapPlan {
            window,
            pairs: Vec::new(),
        },
        final_window: window,
        attempts,
    };
    if config.fallback == Fallback::Backtrack && n <= config.backtrack_threshold {
        let residues: Vec<Residue> = values.iter().map(|&v| modulus.residue_u64(v)).collect();
        if let Some(ordering) = brute_force_valid_ordering(&residues)? {
            check_sound(modulus, &ordering, config.allow_zero)?;
            report.outcome = Outcome::Backtracked;
            return Ok((ordering, report));
        }
    }
    Err(Error::Failed(Box::new(report)))
}

fn check_sound(modulus: PrimeModulus, ordering: &[Residue], allow_zero: bool) -> Result<()> {
    let state = OrderingState::new(modulus, ordering, allow_zero)?;
    assert!(state.is_valid(), "repair produced an invalid ordering");
    Ok(())
}
