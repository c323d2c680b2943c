//! Exact ground truth: backtracking search for valid orderings, the exact
//! distribution of Σ(R) over m-subsets, and exact chain probabilities.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::sampling::check_chain_sizes;
use crate::zp::{PrimeModulus, Residue};

/// Largest set the backtracking search accepts.
pub const BRUTE_FORCE_MAX: usize = 24;

/// Largest set for exact chain probabilities.
pub const CHAIN_EXACT_MAX: usize = 20;

/// Valid ordering by depth-first search over positions, trying elements in
/// ascending order and abandoning any prefix whose partial sum repeats.
pub fn brute_force_valid_ordering(set: &[Residue]) -> Result<Option<Vec<Residue>>> {
    let n = set.len();
    if n > BRUTE_FORCE_MAX {
        return Err(Error::TooLarge(format!(
            "backtracking is limited to {BRUTE_FORCE_MAX} elements, got {n}"
        )));
    }
    if n == 0 {
        return Ok(Some(Vec::new()));
    }
    let modulus = set[0].modulus();
    let mut elements: Vec<u64> = set.iter().map(|r| r.value()).collect();
    elements.sort_unstable();
    let mut order = Vec::with_capacity(n);
    let mut sums = Vec::with_capacity(n);
    if search(modulus, &elements, 0, &mut order, &mut sums) {
        Ok(Some(
            order
                .into_iter()
                .map(|i| modulus.residue_u64(elements[i]))
                .collect(),
        ))
    } else {
        Ok(None)
    }
}

fn search(
    modulus: PrimeModulus,
    elements: &[u64],
    used: u32,
    order: &mut Vec<usize>,
    sums: &mut Vec<u64>,
) -> bool {
    if order.len() == elements.len() {
        return true;
    }
    let last = sums.last().copied().unwrap_or(0);
    for (i, &x) in elements.iter().enumerate() {
        if used >> i & 1 == 1 {
            continue;
        }
        let next = modulus.add(last, x);
        if sums.contains(&next) {
            continue;
        }
        order.push(i);
        sums.push(next);
        if search(modulus, elements, used | 1 << i, order, sums) {
            return true;
        }
        order.pop();
        sums.pop();
    }
    false
}

/// Exact law of Σ(R) for a uniform m-subset R of S:
/// `counts[z] = #{R ⊆ S : |R| = m, Σ(R) = z}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceDistribution {
    pub p: u64,
    pub set_size: usize,
    pub slice_size: usize,
    pub counts: Vec<BigUint>,
}

impl SliceDistribution {
    /// C(n, m).
    pub fn total(&self) -> BigUint {
        binomial(self.set_size, self.slice_size)
    }

    pub fn probability(&self, z: u64) -> BigRational {
        BigRational::new(self.counts[z as usize].clone().into(), self.total().into())
    }

    /// Point probabilities as floats, for reporting only.
    pub fn probabilities_f64(&self) -> Vec<f64> {
        let total = self.total().to_f64().unwrap_or(f64::INFINITY);
        self.counts
            .iter()
            .map(|c| c.to_f64().unwrap_or(f64::INFINITY) / total)
            .collect()
    }
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Subset-sum DP by size: `f_i(k, z) = f_{i−1}(k, z) + f_{i−1}(k − 1, z − x_i)`.
/// Counts fit in `u128` while `n <= 127`; larger sets use big integers.
pub fn slice_distribution(set: &[Residue], m: usize) -> Result<SliceDistribution> {
    let n = set.len();
    if m > n {
        return Err(Error::BadSize(format!("m = {m} exceeds |S| = {n}")));
    }
    let p = match set.first() {
        Some(r) => r.modulus().get(),
        None => return Err(Error::BadSize("the set is empty; use slice_distribution_mod".into())),
    };
    let values: Vec<usize> = set.iter().map(|r| r.value() as usize).collect();
    let counts = if n <= 127 {
        slice_table::<u128>(&values, p as usize, m)
            .into_iter()
            .map(BigUint::from)
            .collect()
    } else {
        slice_table::<BigUint>(&values, p as usize, m)
    };
    Ok(SliceDistribution {
        p,
        set_size: n,
        slice_size: m,
        counts,
    })
}

/// Same as [`slice_distribution`] with an explicit modulus, so the empty set
/// still gets a length-`p` count vector.
pub fn slice_distribution_mod(
    modulus: PrimeModulus,
    set: &[Residue],
    m: usize,
) -> Result<SliceDistribution> {
    if set.is_empty() {
        if m > 0 {
            return Err(Error::BadSize(format!("m = {m} exceeds |S| = 0")));
        }
        let mut counts = vec![BigUint::zero(); modulus.get() as usize];
        counts[0] = BigUint::one();
        return Ok(SliceDistribution {
            p: modulus.get(),
            set_size: 0,
            slice_size: 0,
            counts,
        });
    }
    slice_distribution(set, m)
}

fn slice_table<T>(values: &[usize], p: usize, m: usize) -> Vec<T>
where
    T: Clone + Zero + One + for<'a> std::ops::AddAssign<&'a T>,
{
    let mut table = vec![T::zero(); (m + 1) * p];
    table[0] = T::one();
    for (i, &x) in values.iter().enumerate() {
        let top = m.min(i + 1);
        for k in (1..=top).rev() {
            let (lo, hi) = table.split_at_mut(k * p);
            let prev = &lo[(k - 1) * p..];
            let cur = &mut hi[..p];
            // cur[z] += prev[z - x]
            for (c, v) in cur[x..].iter_mut().zip(&prev[..p - x]) {
                *c += v;
            }
            for (c, v) in cur[..x].iter_mut().zip(&prev[p - x..]) {
                *c += v;
            }
        }
    }
    table.split_off(m * p)
}

/// Counts of Σ(R) over all 2ⁿ subsets R ⊆ S, regardless of size.
pub fn power_set_distribution(modulus: PrimeModulus, set: &[Residue]) -> Vec<BigUint> {
    let p = modulus.get() as usize;
    let mut counts = vec![BigUint::zero(); p];
    counts[0] = BigUint::one();
    for r in set {
        let x = r.value() as usize;
        let prev = counts.clone();
        for z in 0..p {
            counts[(z + x) % p] += &prev[z];
        }
    }
    counts
}

/// max_z P[Σ(R) = z] and the smallest maximizing z.
pub fn max_point_probability(dist: &SliceDistribution) -> (BigRational, u64) {
    let (argmax, best) = dist
        .counts
        .iter()
        .enumerate()
        .fold((0usize, &dist.counts[0]), |(bi, bc), (i, c)| {
            if c > bc {
                (i, c)
            } else {
                (bi, bc)
            }
        });
    (
        BigRational::new(best.clone().into(), dist.total().into()),
        argmax as u64,
    )
}

/// Number of chains R₁ ⊆ ⋯ ⊆ R_k ⊆ S with the given sizes: the multinomial
/// n! / (m₁! (m₂ − m₁)! ⋯ (n − m_k)!).
pub fn chain_count(n: usize, sizes: &[usize]) -> BigUint {
    let mut acc = BigUint::one();
    let mut prev = 0;
    for &m in sizes {
        acc *= binomial(n - prev, m - prev);
        prev = m;
    }
    acc
}

/// P[Σ(R_i) = z_i for all i] for a uniform chain with the given sizes.
///
/// Counts matching chains over subsets of S: `N_1(R) = [Σ(R) = z₁]` on
/// m₁-subsets, and `N_i(R) = [Σ(R) = z_i] · Σ_{R' ⊂ R, |R'| = m_{i−1}} N_{i−1}(R')`.
/// The inner sum is pushed up one element at a time, which counts each R'
/// once per insertion order of R \ R', then divided by that factorial.
pub fn chain_probability_exact(
    set: &[Residue],
    sizes: &[usize],
    targets: &[Residue],
) -> Result<BigRational> {
    let n = set.len();
    if n > CHAIN_EXACT_MAX {
        return Err(Error::TooLarge(format!(
            "exact chain probabilities are limited to {CHAIN_EXACT_MAX} elements, got {n}"
        )));
    }
    check_chain_sizes(n, sizes)?;
    if targets.len() != sizes.len() {
        return Err(Error::BadSizes(format!(
            "{} targets for {} sizes",
            targets.len(),
            sizes.len()
        )));
    }
    let modulus = set[0].modulus();
    let full = 1usize << n;

    let mut sum = vec![0u64; full];
    for mask in 1..full {
        let low = mask.trailing_zeros() as usize;
        sum[mask] = modulus.add(sum[mask & (mask - 1)], set[low].value());
    }

    let mut level: Vec<u128> = (0..full)
        .map(|mask| {
            u128::from(mask.count_ones() as usize == sizes[0] && sum[mask] == targets[0].value())
        })
        .collect();
    let mut prev_size = sizes[0];
    for (&size, target) in sizes.iter().zip(targets).skip(1) {
        let steps = size - prev_size;
        let mut cur = level;
        for step in 0..steps {
            let from = prev_size + step;
            let mut next = vec![0u128; full];
            for mask in 0..full {
                if cur[mask] == 0 || mask.count_ones() as usize != from {
                    continue;
                }
                let mut free = !mask & (full - 1);
                while free != 0 {
                    let bit = free & free.wrapping_neg();
                    free ^= bit;
                    next[mask | bit] += cur[mask];
                }
            }
            cur = next;
        }
        let orderings: u128 = (1..=steps as u128).product();
        level = (0..full)
            .map(|mask| {
                if mask.count_ones() as usize == size && sum[mask] == target.value() {
                    cur[mask] / orderings
                } else {
                    0
                }
            })
            .collect();
        prev_size = size;
    }
    let last = *sizes.last().unwrap();
    // each R_k extends to S in exactly one way, so matching chains are the
    // N_k counts themselves
    let matching: u128 = level.iter().sum();
    debug_assert!(level
        .iter()
        .enumerate()
        .all(|(mask, &c)| c == 0 || mask.count_ones() as usize == last));
    Ok(BigRational::new(
        BigUint::from(matching).into(),
        chain_count(n, sizes).into(),
    ))
}
