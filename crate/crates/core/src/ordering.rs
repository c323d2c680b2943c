//! Orderings of a subset of Z_p, their prefix sums, and the bad-endpoint set.
//!
//! An interval `[a, b]` sums to zero exactly when `prefix[a - 1] == prefix[b]`,
//! so the right endpoints of zero-sum intervals with `a >= 2` are the positions
//! whose prefix value already appeared at an earlier position. The state keeps
//! a value → positions index so that this set is maintained under swaps.
//!
//! Positions are 1-based throughout the public API.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::zp::{PrimeModulus, Residue};

/// Largest window (in positions) whose subset sums are enumerated for the
/// distinct-subset-sum event.
pub const MAX_SUBSET_WINDOW: usize = 24;

#[derive(Debug, Clone)]
pub struct OrderingState {
    modulus: PrimeModulus,
    sigma: Vec<u64>,
    prefix: Vec<u64>,
    index: HashMap<u64, Vec<usize>>,
    bad: BTreeSet<usize>,
}

/// Positions `b` whose prefix sum repeats an earlier prefix sum, descending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BadEndpoints {
    pub positions: Vec<usize>,
}

impl BadEndpoints {
    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }
}

/// Prefix values changed by a tentative transposition, and how the
/// bad-endpoint set would change.
#[derive(Debug, Clone, Default)]
pub struct SwapDelta {
    pub removed: Vec<usize>,
    pub added: Vec<usize>,
}

impl OrderingState {
    /// Builds the state for `order` (position `i` holds `order[i - 1]`).
    pub fn new(modulus: PrimeModulus, order: &[Residue], allow_zero: bool) -> Result<Self> {
        for r in order {
            if r.modulus() != modulus {
                return Err(Error::ModulusMismatch(modulus.get(), r.modulus().get()));
            }
        }
        let values: Vec<u64> = order.iter().map(|r| r.value()).collect();
        Self::from_values(modulus, values, allow_zero)
    }

    /// Same as [`OrderingState::new`] for already reduced values.
    pub fn from_values(modulus: PrimeModulus, values: Vec<u64>, allow_zero: bool) -> Result<Self> {
        let p = modulus.get();
        let mut seen = HashSet::with_capacity(values.len());
        for &v in &values {
            if v >= p {
                return Err(Error::OutOfRange {
                    position: v as usize,
                    len: p as usize,
                });
            }
            if v == 0 && !allow_zero {
                return Err(Error::ZeroElement);
            }
            if !seen.insert(v) {
                return Err(Error::DuplicateElement(v));
            }
        }
        let mut state = OrderingState {
            modulus,
            sigma: values,
            prefix: Vec::new(),
            index: HashMap::new(),
            bad: BTreeSet::new(),
        };
        state.rebuild();
        Ok(state)
    }

    fn rebuild(&mut self) {
        let (prefix, index, bad) = Self::derive(self.modulus, &self.sigma);
        self.prefix = prefix;
        self.index = index;
        self.bad = bad;
    }

    #[allow(clippy::type_complexity)]
    fn derive(
        modulus: PrimeModulus,
        sigma: &[u64],
    ) -> (Vec<u64>, HashMap<u64, Vec<usize>>, BTreeSet<usize>) {
        let mut prefix = Vec::with_capacity(sigma.len());
        let mut acc = 0u64;
        for &s in sigma {
            acc = modulus.add(acc, s);
            prefix.push(acc);
        }
        let mut index: HashMap<u64, Vec<usize>> = HashMap::with_capacity(sigma.len());
        let mut bad = BTreeSet::new();
        for (i, &v) in prefix.iter().enumerate() {
            let list = index.entry(v).or_default();
            if !list.is_empty() {
                bad.insert(i + 1);
            }
            list.push(i + 1);
        }
        (prefix, index, bad)
    }

    pub fn modulus(&self) -> PrimeModulus {
        self.modulus
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    /// Element values in position order.
    pub fn sigma(&self) -> &[u64] {
        &self.sigma
    }

    /// `prefix()[b - 1]` is σ(1) + ⋯ + σ(b).
    pub fn prefix(&self) -> &[u64] {
        &self.prefix
    }

    pub fn residues(&self) -> Vec<Residue> {
        self.sigma
            .iter()
            .map(|&v| self.modulus.residue_u64(v))
            .collect()
    }

    /// Prefix sum through position `b`; `prefix_at(0) == 0`.
    #[inline]
    pub fn prefix_at(&self, b: usize) -> u64 {
        if b == 0 {
            0
        } else {
            self.prefix[b - 1]
        }
    }

    #[inline]
    pub fn element(&self, position: usize) -> u64 {
        self.sigma[position - 1]
    }

    /// Sorted positions whose prefix sum equals `value`.
    pub fn positions_of(&self, value: u64) -> &[usize] {
        self.index.get(&value).map(Vec::as_slice).unwrap_or(&[])
    }

    fn check_position(&self, position: usize) -> Result<()> {
        if position == 0 || position > self.len() {
            Err(Error::OutOfRange {
                position,
                len: self.len(),
            })
        } else {
            Ok(())
        }
    }

    /// σ(a) + ⋯ + σ(b) for `1 <= a <= b <= n`.
    pub fn interval_sum(&self, a: usize, b: usize) -> Result<Residue> {
        self.check_position(a)?;
        self.check_position(b)?;
        if a > b {
            return Err(Error::OutOfRange {
                position: a,
                len: b,
            });
        }
        let v = self.modulus.sub(self.prefix_at(b), self.prefix_at(a - 1));
        Ok(self.modulus.residue_u64(v))
    }

    pub fn bad_endpoints(&self) -> BadEndpoints {
        BadEndpoints {
            positions: self.bad.iter().rev().copied().collect(),
        }
    }

    pub(crate) fn bad_set(&self) -> &BTreeSet<usize> {
        &self.bad
    }

    /// All prefix sums distinct.
    pub fn is_valid(&self) -> bool {
        self.bad.is_empty()
    }

    /// Recomputes prefix sums, collision index and bad set from `sigma` and
    /// compares them with the incrementally maintained ones.
    pub fn is_consistent(&self) -> bool {
        let (prefix, index, bad) = Self::derive(self.modulus, &self.sigma);
        prefix == self.prefix && index == self.index && bad == self.bad
    }

    /// How the bad-endpoint set would change if positions `x < y` were
    /// swapped. Only prefix values at `x..y` move (by σ(y) − σ(x)), so only the
    /// collision lists of their old and new values are revisited.
    pub fn swap_delta(&self, x: usize, y: usize) -> Result<SwapDelta> {
        self.check_position(x)?;
        self.check_position(y)?;
        if x >= y {
            return Err(Error::OutOfRange {
                position: x,
                len: y,
            });
        }
        let m = self.modulus;
        let shift = m.sub(self.element(y), self.element(x));
        let mut touched: Vec<u64> = Vec::with_capacity(2 * (y - x));
        for t in x..y {
            let old = self.prefix[t - 1];
            touched.push(old);
            touched.push(m.add(old, shift));
        }
        touched.sort_unstable();
        touched.dedup();

        let mut delta = SwapDelta::default();
        let mut list: Vec<usize> = Vec::new();
        for &v in &touched {
            let old_list = self.positions_of(v);
            delta.removed.extend(old_list.iter().skip(1));
            list.clear();
            list.extend(old_list.iter().copied().filter(|&t| t < x || t >= y));
            let back = m.sub(v, shift);
            for t in x..y {
                if self.prefix[t - 1] == back {
                    list.push(t);
                }
            }
            list.sort_unstable();
            delta.added.extend(list.iter().skip(1));
        }
        Ok(delta)
    }

    /// Applies the transposition of positions `x < y` in place.
    pub fn swap(&mut self, x: usize, y: usize) -> Result<()> {
        let delta = self.swap_delta(x, y)?;
        let m = self.modulus;
        let shift = m.sub(self.element(y), self.element(x));
        for t in x..y {
            let old = self.prefix[t - 1];
            let new = m.add(old, shift);
            if let Some(list) = self.index.get_mut(&old) {
                if let Ok(i) = list.binary_search(&t) {
                    list.remove(i);
                }
                if list.is_empty() {
                    self.index.remove(&old);
                }
            }
            self.prefix[t - 1] = new;
        }
        for t in x..y {
            let list = self.index.entry(self.prefix[t - 1]).or_default();
            if let Err(i) = list.binary_search(&t) {
                list.insert(i, t);
            }
        }
        self.sigma.swap(x - 1, y - 1);
        for r in &delta.removed {
            self.bad.remove(r);
        }
        self.bad.extend(delta.added.iter().copied());
        Ok(())
    }

    /// Flags for the events used to certify a starting ordering, with window
    /// parameter `d` (the repair window is `5d`).
    pub fn detect_bad_events(&self, d: usize) -> EventFlags {
        let n = self.len();
        let d = d.max(1);
        let bad: Vec<usize> = self.bad.iter().copied().collect();

        let late = bad.iter().any(|&b| b + 30 * d >= n);

        // most bad endpoints inside any span of 20d consecutive positions
        let mut crowded = false;
        let mut lo = 0;
        for hi in 0..bad.len() {
            while bad[hi] - bad[lo] > 20 * d {
                lo += 1;
            }
            if hi - lo + 1 > d {
                crowded = true;
                break;
            }
        }

        let width = 20 * d + 1;
        let eligible: Vec<usize> = bad.iter().copied().filter(|&b| b + 30 * d <= n).collect();
        let (subset_collision, window_too_large) = if eligible.is_empty() {
            (Some(false), false)
        } else if width > MAX_SUBSET_WINDOW {
            (None, true)
        } else {
            let hit = eligible.iter().any(|&b| {
                let end = (b + 20 * d).min(n);
                let window: Vec<u64> = (b..=end).map(|t| self.element(t)).collect();
                has_equal_subset_sums(self.modulus, &window)
            });
            (Some(hit), false)
        };

        EventFlags {
            subset_collision,
            late_endpoint: late,
            crowded_endpoints: crowded,
            window_too_large,
        }
    }
}

/// Whether two distinct subsets of `window` have the same sum in Z_p.
pub fn has_equal_subset_sums(modulus: PrimeModulus, window: &[u64]) -> bool {
    let w = window.len();
    assert!(w <= MAX_SUBSET_WINDOW, "window of {w} exceeds the enumeration cap");
    if (1u64 << w) > modulus.get() {
        // pigeonhole
        return true;
    }
    let mut sums: Vec<u64> = Vec::with_capacity(1 << w);
    sums.push(0);
    for &x in window {
        let len = sums.len();
        for i in 0..len {
            let s = modulus.add(sums[i], x);
            sums.push(s);
        }
    }
    sums.sort_unstable();
    sums.windows(2).any(|pair| pair[0] == pair[1])
}

/// Bad-event flags of an ordering. `subset_collision` is `None` when the
/// window was too wide to enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventFlags {
    pub subset_collision: Option<bool>,
    pub late_endpoint: bool,
    pub crowded_endpoints: bool,
    pub window_too_large: bool,
}

impl EventFlags {
    pub fn any(&self) -> bool {
        self.subset_collision == Some(true) || self.late_endpoint || self.crowded_endpoints
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(p: u64, order: &[u64]) -> OrderingState {
        OrderingState::from_values(PrimeModulus::new(p).unwrap(), order.to_vec(), false).unwrap()
    }

    /// O(n²) scan over all intervals [a, b] with a >= 2.
    fn brute_bad(s: &OrderingState) -> Vec<usize> {
        let n = s.len();
        let mut out: Vec<usize> = (1..=n)
            .filter(|&b| (2..b).any(|a| s.interval_sum(a, b).unwrap().is_zero()))
            .collect();
        out.reverse();
        out
    }

    #[test]
    fn build_examples() {
        assert_eq!(state(5, &[1, 2, 3]).prefix(), &[1, 3, 1]);
        assert_eq!(state(5, &[4]).prefix(), &[4]);
        assert_eq!(state(7, &[3, 4]).prefix(), &[3, 0]);
    }

    #[test]
    fn build_rejects_zero_and_duplicates() {
        let p = PrimeModulus::new(5).unwrap();
        assert!(matches!(
            OrderingState::from_values(p, vec![1, 0], false),
            Err(Error::ZeroElement)
        ));
        assert!(matches!(
            OrderingState::from_values(p, vec![1, 2, 1], false),
            Err(Error::DuplicateElement(1))
        ));
        assert!(OrderingState::from_values(p, vec![0, 1], true).is_ok());
    }

    #[test]
    fn interval_sum_examples() {
        let s = state(5, &[1, 2, 3]);
        assert_eq!(s.interval_sum(2, 3).unwrap().value(), 0);
        assert_eq!(s.interval_sum(2, 2).unwrap().value(), 2);
        assert_eq!(s.interval_sum(1, 3).unwrap().value(), 1);
        assert!(matches!(s.interval_sum(0, 2), Err(Error::OutOfRange { .. })));
        assert!(matches!(s.interval_sum(2, 4), Err(Error::OutOfRange { .. })));
        assert!(s.interval_sum(3, 2).is_err());
    }

    #[test]
    fn bad_endpoint_examples() {
        assert_eq!(state(5, &[1, 2, 3]).bad_endpoints().positions, vec![3]);
        assert!(state(5, &[2, 1, 3]).bad_endpoints().is_empty());
        assert!(state(7, &[3, 4]).bad_endpoints().is_empty());
        assert_eq!(
            state(11, &[1, 2, 9, 4, 7]).bad_endpoints().positions,
            vec![5, 3]
        );
    }

    #[test]
    fn validity_examples() {
        assert!(state(5, &[2, 1, 3]).is_valid());
        assert!(!state(5, &[1, 2, 3]).is_valid());
        assert!(state(5, &[3]).is_valid());
    }

    #[test]
    fn zero_must_lead() {
        let p = PrimeModulus::new(7).unwrap();
        assert!(OrderingState::from_values(p, vec![0, 1, 2], true).unwrap().is_valid());
        assert!(!OrderingState::from_values(p, vec![1, 0, 2], true).unwrap().is_valid());
    }

    #[test]
    fn event_examples() {
        let s = state(5, &[2, 1, 3]);
        let f = s.detect_bad_events(1);
        assert!(!f.any());
        assert_eq!(f.subset_collision, Some(false));

        let f = state(5, &[1, 2, 3]).detect_bad_events(1);
        assert!(f.late_endpoint);

        let f = state(11, &[1, 2, 9, 4, 7]).detect_bad_events(1);
        assert!(f.crowded_endpoints);
    }

    #[test]
    fn event_subset_collision_window() {
        let p = PrimeModulus::new(1_000_003).unwrap();
        // powers of two have pairwise distinct subset sums below p
        let mut order: Vec<u64> = (0..19).map(|i| 1u64 << i).collect();
        order.extend((0..61).map(|i| 600_000 + 17 * i));
        // zero-sum interval [2, 5]
        order[4] = p.neg(order[1..4].iter().fold(0, |acc, &v| p.add(acc, v)));
        let s = OrderingState::from_values(p, order.clone(), false).unwrap();
        assert_eq!(s.len(), 80);
        assert!(s.bad_endpoints().positions.contains(&5));

        let f = s.detect_bad_events(1);
        // the window 5..=25 holds 2^4..2^18 plus larger terms; the sums are
        // checked by enumeration rather than assumed
        let window: Vec<u64> = (5..=25).map(|t| s.element(t)).collect();
        assert_eq!(f.subset_collision, Some(has_equal_subset_sums(p, &window)));
        assert!(!f.window_too_large);

        let f = s.detect_bad_events(2);
        assert_eq!(f.subset_collision, None);
        assert!(f.window_too_large);

        assert!(has_equal_subset_sums(p, &[3, 5, 8]));
        assert!(!has_equal_subset_sums(p, &[1, 2, 4, 8]));
    }

    #[test]
    fn swap_updates_match_rebuild() {
        let mut s = state(11, &[1, 2, 9, 4, 7, 3, 10]);
        for &(x, y) in &[(3, 4), (1, 7), (2, 5), (5, 6), (1, 2)] {
            let predicted = s.swap_delta(x, y).unwrap();
            let before: BTreeSet<usize> = s.bad_set().clone();
            s.swap(x, y).unwrap();
            assert!(s.is_consistent());
            let mut expected = before;
            for r in &predicted.removed {
                expected.remove(r);
            }
            expected.extend(predicted.added.iter().copied());
            assert_eq!(&expected, s.bad_set());
            assert_eq!(s.bad_endpoints().positions, brute_bad(&s));
        }
    }

    #[test]
    fn swap_rejects_bad_positions() {
        let mut s = state(11, &[1, 2, 9]);
        assert!(s.swap(2, 2).is_err());
        assert!(s.swap(3, 1).is_err());
        assert!(s.swap(1, 4).is_err());
    }
}
