//! Uniform m-subsets, the equitable-partition representation of a uniform
//! m-subset, and uniformly random chains of nested subsets.
//!
//! All samplers draw through [`IndexSource`], so they are deterministic
//! functions of the input and the stream, and tests can enumerate every
//! sequence of draws.


use crate::error::{Error, Result};
use crate::rng::IndexSource;
use crate::zp::{PrimeModulus, Residue};

fn sorted(set: &[Residue]) -> Vec<Residue> {
    let mut v = set.to_vec();
    v.sort_unstable();
    v
}

/// Uniform in-place shuffle.
pub fn shuffle<T, S: IndexSource + ?Sized>(items: &mut [T], src: &mut S) {
    for i in (1..items.len()).rev() {
        let j = src.index_below(i + 1);
        items.swap(i, j);
    }
}

/// Moves a uniform m-subset (in uniform order) to the front of `items`.
pub fn partial_shuffle<T, S: IndexSource + ?Sized>(items: &mut [T], m: usize, src: &mut S) {
    let n = items.len();
    for i in 0..m.min(n) {
        let j = i + src.index_below(n - i);
        items.swap(i, j);
    }
}

/// A uniformly random subset of `set` of size `m`, returned sorted.
pub fn sample_uniform_subset<S: IndexSource + ?Sized>(
    set: &[Residue],
    m: usize,
    src: &mut S,
) -> Result<Vec<Residue>> {
    if m > set.len() {
        return Err(Error::BadSize(format!("m = {m} exceeds |S| = {}", set.len())));
    }
    let mut items = sorted(set);
    partial_shuffle(&mut items, m, src);
    items.truncate(m);
    items.sort_unstable();
    Ok(items)
}

/// Part sizes of an equitable partition of `n` elements into `m` parts:
/// the first `n mod m` parts have `⌊n/m⌋ + 1` elements, the rest `⌊n/m⌋`.
pub fn partition_profile(n: usize, m: usize) -> Vec<usize> {
    let base = n / m;
    let big = n - m * base;
    (0..m).map(|i| if i < big { base + 1 } else { base }).collect()
}

/// Ordered partition (S₁, …, S_m) with non-increasing sizes differing by at
/// most one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquitablePartition {
    pub parts: Vec<Vec<Residue>>,
}

impl EquitablePartition {
    pub fn num_parts(&self) -> usize {
        self.parts.len()
    }

    pub fn total_len(&self) -> usize {
        self.parts.iter().map(Vec::len).sum()
    }

    /// Checks the size profile: sizes are `⌊n/m⌋ + 1` for exactly the first
    /// `n − m⌊n/m⌋` parts and `⌊n/m⌋` afterwards.
    pub fn has_equitable_profile(&self) -> bool {
        let m = self.parts.len();
        if m == 0 {
            return false;
        }
        let sizes: Vec<usize> = self.parts.iter().map(Vec::len).collect();
        sizes == partition_profile(self.total_len(), m)
    }
}

/// Uniform over ordered partitions with the equitable size profile: a uniform
/// shuffle cut into consecutive blocks.
pub fn sample_equitable_partition<S: IndexSource + ?Sized>(
    set: &[Residue],
    m: usize,
    src: &mut S,
) -> Result<EquitablePartition> {
    if m == 0 || m > set.len() {
        return Err(Error::BadSize(format!(
            "need 1 <= m <= |S|, got m = {m}, |S| = {}",
            set.len()
        )));
    }
    let mut items = sorted(set);
    shuffle(&mut items, src);
    let mut parts = Vec::with_capacity(m);
    let mut start = 0;
    for size in partition_profile(items.len(), m) {
        let mut part = items[start..start + size].to_vec();
        part.sort_unstable();
        parts.push(part);
        start += size;
    }
    Ok(EquitablePartition { parts })
}

/// One uniform element from each part of a random equitable partition; the
/// resulting set is a uniform m-subset.
pub fn sample_via_partition<S: IndexSource + ?Sized>(
    set: &[Residue],
    m: usize,
    src: &mut S,
) -> Result<Vec<Residue>> {
    let partition = sample_equitable_partition(set, m, src)?;
    let mut picks: Vec<Residue> = partition
        .parts
        .iter()
        .map(|part| part[src.index_below(part.len())])
        .collect();
    picks.sort_unstable();
    Ok(picks)
}

/// Nested sets R₁ ⊆ ⋯ ⊆ R_k with |R_i| = sizes[i].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetChain {
    pub sets: Vec<Vec<Residue>>,
    pub sizes: Vec<usize>,
}

/// Validates `1 <= m₁ < ⋯ < m_k < n`.
pub fn check_chain_sizes(n: usize, sizes: &[usize]) -> Result<()> {
    if sizes.is_empty() {
        return Err(Error::BadSizes("empty size list".into()));
    }
    if sizes[0] == 0 {
        return Err(Error::BadSizes("sizes must be positive".into()));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::BadSizes(format!("{sizes:?} is not strictly increasing")));
    }
    if *sizes.last().unwrap() >= n {
        return Err(Error::BadSizes(format!("largest size must be below |S| = {n}")));
    }
    Ok(())
}

/// Uniform chain with the given sizes, exposed level by level: R₁ is a
/// uniform m₁-subset, then R₂ \ R₁ a uniform (m₂ − m₁)-subset of S \ R₁, etc.
pub fn sample_chain<S: IndexSource + ?Sized>(
    set: &[Residue],
    sizes: &[usize],
    src: &mut S,
) -> Result<SubsetChain> {
    check_chain_sizes(set.len(), sizes)?;
    let mut items = sorted(set);
    let mut sets = Vec::with_capacity(sizes.len());
    let mut done = 0;
    for &size in sizes {
        partial_shuffle(&mut items[done..], size - done, src);
        done = size;
        let mut level = items[..size].to_vec();
        level.sort_unstable();
        sets.push(level);
    }
    Ok(SubsetChain {
        sets,
        sizes: sizes.to_vec(),
    })
}

/// Uniform `n`-subset of Z_p \ {0} (Floyd's algorithm; no O(p) memory).
pub fn random_nonzero_set<S: IndexSource + ?Sized>(
    modulus: PrimeModulus,
    n: usize,
    src: &mut S,
) -> Result<Vec<Residue>> {
    let universe = modulus.get() - 1;
    if n as u64 > universe {
        return Err(Error::BadSize(format!(
            "cannot pick {n} nonzero residues modulo {modulus}"
        )));
    }
    let mut chosen = std::collections::BTreeSet::new();
    for j in (universe - n as u64 + 1)..=universe {
        let t = 1 + src.index_below(j as usize) as u64;
        if !chosen.insert(t) {
            chosen.insert(j);
        }
    }
    Ok(chosen.into_iter().map(|v| modulus.residue_u64(v)).collect())
}

/// Repeated draws of Σ(R) for uniform m-subsets R, reusing one work array.
///
/// A partial shuffle of any arrangement of S yields a uniform m-subset, so
/// the array is never reset between draws.
#[derive(Debug, Clone)]
pub struct SliceSampler {
    modulus: PrimeModulus,
    items: Vec<u64>,
}

impl SliceSampler {
    pub fn new(set: &[Residue]) -> Self {
        let modulus = set
            .first()
            .map(|r| r.modulus())
            .unwrap_or_else(|| PrimeModulus::new(2).unwrap());
        let mut items: Vec<u64> = set.iter().map(|r| r.value()).collect();
        items.sort_unstable();
        SliceSampler { modulus, items }
    }

    pub fn with_modulus(modulus: PrimeModulus, set: &[Residue]) -> Self {
        let mut s = Self::new(set);
        s.modulus = modulus;
        s
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn sample_sum<S: IndexSource + ?Sized>(&mut self, m: usize, src: &mut S) -> u64 {
        partial_shuffle(&mut self.items, m, src);
        let p = self.modulus.get() as u128;
        (self.items[..m].iter().map(|&v| v as u128).sum::<u128>() % p) as u64
    }

    /// Prefix sums Σ(R₁), …, Σ(R_k) of a uniform chain with the given sizes.
    pub fn sample_chain_sums<S: IndexSource + ?Sized>(
        &mut self,
        sizes: &[usize],
        src: &mut S,
        out: &mut Vec<u64>,
    ) {
        out.clear();
        let p = self.modulus;
        let mut done = 0;
        let mut acc = 0u64;
        for &size in sizes {
            partial_shuffle(&mut self.items[done..], size - done, src);
            for &v in &self.items[done..size] {
                acc = p.add(acc, v);
            }
            done = size;
            out.push(acc);
        }
    }
}
