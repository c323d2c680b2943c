//! Monte Carlo estimates of point probabilities of random subset sums, and
//! evaluators for the closed-form upper bounds they are compared against.
//!
//! Logarithms are natural. `√(log n)` is used as is, also when `log n < 1`.

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracles::binomial;
use crate::rng::stream;
use crate::sampling::{check_chain_sizes, SliceSampler};
use crate::zp::Residue;

/// The constant in the slice bound `1/p + C/(n√m)` as proved.
pub const PAPER_C: f64 = 16_777_216.0;

/// Trials per random stream. Work is split at these boundaries whatever the
/// thread count, so estimates are reproducible.
pub const CHUNK_TRIALS: u64 = 1 << 16;

/// Largest number of size tuples summed by [`check_lemma43_inequality`].
pub const LEMMA43_TUPLE_BUDGET: u64 = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "lowercase")]
pub enum ConstantsMode {
    /// `C = 2²⁴`, `C′_ε = 50·C·ε^(−3/2)`, `C_k = (k + 1)·C′_{1/(k+1)}`.
    Paper,
    /// Every constant equals the given value.
    Empirical(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub mode: ConstantsMode,
}

impl BoundConstants {
    pub fn paper() -> Self {
        BoundConstants {
            mode: ConstantsMode::Paper,
        }
    }

    /// All constants set to `value`; zero is allowed to isolate the `1/p`
    /// terms.
    pub fn empirical(value: f64) -> Self {
        assert!(value >= 0.0, "constants must be non-negative");
        BoundConstants {
            mode: ConstantsMode::Empirical(value),
        }
    }

    pub fn c(&self) -> f64 {
        match self.mode {
            ConstantsMode::Paper => PAPER_C,
            ConstantsMode::Empirical(v) => v,
        }
    }

    pub fn c_eps(&self, eps: f64) -> f64 {
        match self.mode {
            ConstantsMode::Paper => 50.0 * PAPER_C * eps.powf(-1.5),
            ConstantsMode::Empirical(v) => v,
        }
    }

    pub fn c_k(&self, k: usize) -> f64 {
        match self.mode {
            ConstantsMode::Paper => {
                let eps = 1.0 / (k as f64 + 1.0);
                self.c_eps(eps) / eps
            }
            ConstantsMode::Empirical(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub p: u64,
    pub n: usize,
    pub sizes: Vec<usize>,
    pub trials: u64,
    pub estimate: f64,
    pub std_error: f64,
    pub seed: u64,
    /// Most frequent sum, for max-point estimates.
    pub argmax: Option<u64>,
}

impl EstimateRecord {
    fn new(p: u64, n: usize, sizes: Vec<usize>, trials: u64, hits: u64, seed: u64) -> Self {
        let estimate = hits as f64 / trials as f64;
        EstimateRecord {
            p,
            n,
            sizes,
            trials,
            estimate,
            std_error: (estimate * (1.0 - estimate) / trials as f64).sqrt(),
            seed,
            argmax: None,
        }
    }
}

fn chunks(trials: u64) -> Vec<(u64, u64)> {
    (0..trials.div_ceil(CHUNK_TRIALS))
        .map(|i| (i, CHUNK_TRIALS.min(trials - i * CHUNK_TRIALS)))
        .collect()
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::BadSize("trials must be at least 1".into()));
    }
    Ok(())
}

/// Counts of Σ(R) over `trials` uniform m-subsets R of `set`.
pub fn mc_slice_histogram(set: &[Residue], m: usize, trials: u64, seed: u64) -> Result<Vec<u64>> {
    check_trials(trials)?;
    let Some(first) = set.first() else {
        return Err(Error::BadSize("the set is empty".into()));
    };
    if m > set.len() {
        return Err(Error::BadSize(format!("m = {m} exceeds |S| = {}", set.len())));
    }
    let p = first.modulus().get() as usize;
    let base = SliceSampler::new(set);
    let hist = chunks(trials)
        .into_par_iter()
        .map(|(index, count)| {
            let mut sampler = base.clone();
            let mut rng = stream(seed, index);
            let mut hist = vec![0u64; p];
            for _ in 0..count {
                hist[sampler.sample_sum(m, &mut rng) as usize] += 1;
            }
            hist
        })
        .reduce(
            || vec![0u64; p],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(hist)
}

/// max_z of the empirical frequency of Σ(R) = z.
pub fn mc_max_point_probability(
    set: &[Residue],
    m: usize,
    trials: u64,
    seed: u64,
) -> Result<EstimateRecord> {
    let hist = mc_slice_histogram(set, m, trials, seed)?;
    let (argmax, &hits) = hist
        .iter()
        .enumerate()
        .rev()
        .max_by_key(|&(_, c)| c)
        .expect("p >= 2");
    let p = hist.len() as u64;
    let mut record = EstimateRecord::new(p, set.len(), vec![m], trials, hits, seed);
    record.argmax = Some(argmax as u64);
    Ok(record)
}

/// Empirical frequency of Σ(R) = z.
pub fn mc_point_probability(
    set: &[Residue],
    m: usize,
    z: Residue,
    trials: u64,
    seed: u64,
) -> Result<EstimateRecord> {
    let hist = mc_slice_histogram(set, m, trials, seed)?;
    let p = hist.len() as u64;
    Ok(EstimateRecord::new(p, set.len(), vec![m], trials, hist[z.value() as usize], seed))
}

/// Counts of the outcomes (Σ(R₁), …, Σ(R_k)) over `trials` uniform chains.
pub fn mc_chain_histogram(
    set: &[Residue],
    sizes: &[usize],
    trials: u64,
    seed: u64,
) -> Result<std::collections::BTreeMap<Vec<u64>, u64>> {
    check_trials(trials)?;
    check_chain_sizes(set.len(), sizes)?;
    let base = SliceSampler::new(set);
    let maps = chunks(trials)
        .into_par_iter()
        .map(|(index, count)| {
            let mut sampler = base.clone();
            let mut rng = stream(seed, index);
            let mut out = Vec::with_capacity(sizes.len());
            let mut map = std::collections::BTreeMap::new();
            for _ in 0..count {
                sampler.sample_chain_sums(sizes, &mut rng, &mut out);
                *map.entry(out.clone()).or_insert(0u64) += 1;
            }
            map
        })
        .collect::<Vec<_>>();
    let mut merged = std::collections::BTreeMap::new();
    for map in maps {
        for (k, v) in map {
            *merged.entry(k).or_insert(0) += v;
        }
    }
    Ok(merged)
}

/// Empirical frequency of Σ(R_i) = z_i for all i over uniform chains.
pub fn mc_chain_probability(
    set: &[Residue],
    sizes: &[usize],
    targets: &[Residue],
    trials: u64,
    seed: u64,
) -> Result<EstimateRecord> {
    check_trials(trials)?;
    check_chain_sizes(set.len(), sizes)?;
    if targets.len() != sizes.len() {
        return Err(Error::BadSizes(format!(
            "{} targets for {} sizes",
            targets.len(),
            sizes.len()
        )));
    }
    let want: Vec<u64> = targets.iter().map(|r| r.value()).collect();
    let base = SliceSampler::new(set);
    let hits: u64 = chunks(trials)
        .into_par_iter()
        .map(|(index, count)| {
            let mut sampler = base.clone();
            let mut rng = stream(seed, index);
            let mut out = Vec::with_capacity(sizes.len());
            let mut hits = 0u64;
            for _ in 0..count {
                sampler.sample_chain_sums(sizes, &mut rng, &mut out);
                hits += u64::from(out == want);
            }
            hits
        })
        .sum();
    let p = set[0].modulus().get();
    Ok(EstimateRecord::new(p, set.len(), sizes.to_vec(), trials, hits, seed))
}

/// `1/p + C/(n√m)`.
pub fn bound_thm12(p: u64, n: usize, m: usize, constants: &BoundConstants) -> f64 {
    1.0 / p as f64 + constants.c() / (n as f64 * (m as f64).sqrt())
}

/// `1/p + C′_ε·√(log n)/(n√m)`, for `0 < ε < 1` and `m <= (1 − ε)n`.
pub fn bound_cor13(
    p: u64,
    n: usize,
    m: usize,
    eps: f64,
    constants: &BoundConstants,
) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) || m as f64 > (1.0 - eps) * n as f64 + 1e-9 {
        return Err(Error::EpsRange(eps));
    }
    Ok(1.0 / p as f64
        + constants.c_eps(eps) * (n as f64).ln().sqrt() / (n as f64 * (m as f64).sqrt()))
}

/// `1/(n − m + 1)`.
pub fn bound_lemma41(n: usize, m: usize) -> Result<BigRational> {
    if m == 0 || m > n {
        return Err(Error::BadSize(format!("need 1 <= m <= n, got m = {m}, n = {n}")));
    }
    Ok(BigRational::new(BigInt::from(1), BigInt::from(n - m + 1)))
}

fn chain_term(p: u64, n: usize, gap: usize, ck: f64) -> f64 {
    1.0 / p as f64 + ck * (n as f64).ln().sqrt() / (n as f64 * (gap as f64).sqrt())
}

fn cor42_from_terms(terms: &[f64]) -> f64 {
    // Σ_j Π_{i≠j} t_i via prefix and suffix products
    let k = terms.len();
    let mut prefix = vec![1.0; k + 1];
    for i in 0..k {
        prefix[i + 1] = prefix[i] * terms[i];
    }
    let mut total = 0.0;
    let mut suffix = 1.0;
    for j in (0..k).rev() {
        total += prefix[j] * suffix;
        suffix *= terms[j];
    }
    total
}

/// `Σ_{j=0}^{k} Π_{i≠j} (1/p + C_k√(log n)/(n√(m_{i+1} − m_i)))` with
/// `m₀ = 0` and `m_{k+1} = n`.
pub fn bound_cor42(p: u64, n: usize, sizes: &[usize], constants: &BoundConstants) -> Result<f64> {
    check_chain_sizes(n, sizes)?;
    let ck = constants.c_k(sizes.len());
    let mut prev = 0;
    let terms: Vec<f64> = sizes
        .iter()
        .chain(std::iter::once(&n))
        .map(|&m| {
            let t = chain_term(p, n, m - prev, ck);
            prev = m;
            t
        })
        .collect();
    Ok(cor42_from_terms(&terms))
}

/// `(k + 1)·(n/p + 2C_k√(log n)/√n)^k`.
pub fn bound_lemma43(p: u64, n: usize, k: usize, constants: &BoundConstants) -> f64 {
    let ck = constants.c_k(k);
    let nf = n as f64;
    let base = nf / p as f64 + 2.0 * ck * nf.ln().sqrt() / nf.sqrt();
    (k as f64 + 1.0) * base.powi(k as i32)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma43Check {
    pub p: u64,
    pub n: usize,
    pub k: usize,
    pub tuples: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub violated: bool,
}

/// Sums the chain bound over every `1 <= m₁ < ⋯ < m_k < n` and compares with
/// [`bound_lemma43`].
pub fn check_lemma43_inequality(
    p: u64,
    n: usize,
    k: usize,
    constants: &BoundConstants,
) -> Result<Lemma43Check> {
    if k == 0 || n < 2 {
        return Err(Error::BadSize(format!("need k >= 1 and n >= 2, got k = {k}, n = {n}")));
    }
    let tuples = binomial(n - 1, k);
    let tuples: u64 = u64::try_from(&tuples).unwrap_or(u64::MAX);
    if tuples > LEMMA43_TUPLE_BUDGET {
        return Err(Error::TooLarge(format!(
            "{tuples} size tuples exceed the budget of {LEMMA43_TUPLE_BUDGET}"
        )));
    }
    let ck = constants.c_k(k);
    let gap_term: Vec<f64> = (0..=n).map(|g| if g == 0 { 0.0 } else { chain_term(p, n, g, ck) }).collect();
    let mut sizes: Vec<usize> = (1..=k).collect();
    let mut terms = vec![0.0; k + 1];
    let mut lhs = 0.0;
    if k < n {
        loop {
            let mut prev = 0;
            for (i, &m) in sizes.iter().chain(std::iter::once(&n)).enumerate() {
                terms[i] = gap_term[m - prev];
                prev = m;
            }
            lhs += cor42_from_terms(&terms);
            // next combination of {1, …, n−1} in lexicographic order
            let mut i = k;
            while i > 0 && sizes[i - 1] == n - 1 - (k - i) {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            sizes[i - 1] += 1;
            for j in i..k {
                sizes[j] = sizes[j - 1] + 1;
            }
        }
    }
    let rhs = bound_lemma43(p, n, k, constants);
    Ok(Lemma43Check {
        p,
        n,
        k,
        tuples,
        lhs,
        rhs,
        ratio: if rhs > 0.0 { lhs / rhs } else { 0.0 },
        violated: lhs > rhs,
    })
}

/// `(maxprob − 1/p)·n·√m`, the constant that makes the slice bound tight.
/// Values below `1/p` by more than rounding error are rejected.
pub fn empirical_constant(p: u64, n: usize, m: usize, maxprob: f64) -> Result<f64> {
    let floor = 1.0 / p as f64;
    if maxprob < floor * (1.0 - 1e-12) {
        return Err(Error::BelowFloor(maxprob));
    }
    Ok(((maxprob - floor) * n as f64 * (m as f64).sqrt()).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zp::PrimeModulus;

    fn set(p: u64, xs: &[u64]) -> Vec<Residue> {
        let p = PrimeModulus::new(p).unwrap();
        xs.iter().map(|&x| p.residue_u64(x)).collect()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn paper_constants() {
        let c = BoundConstants::paper();
        assert_eq!(c.c(), 16_777_216.0);
        assert!(close(c.c_eps(0.25), 50.0 * PAPER_C * 8.0));
        assert!(close(c.c_k(1), 2.0 * 50.0 * PAPER_C * 2f64.powf(1.5)));
        let e = BoundConstants::empirical(3.0);
        assert_eq!((e.c(), e.c_eps(0.3), e.c_k(4)), (3.0, 3.0, 3.0));
    }

    #[test]
    fn mc_slice_examples() {
        let s = set(5, &[1, 2, 3, 4]);
        let r = mc_max_point_probability(&s, 2, 60_000, 11).unwrap();
        assert!((r.estimate - 1.0 / 3.0).abs() < 0.02);
        assert_eq!(r.argmax, Some(0));
        let r = mc_max_point_probability(&s, 0, 1000, 11).unwrap();
        assert_eq!(r.estimate, 1.0);
        let s = set(101, &[3, 9, 27, 81, 41, 22, 66]);
        let r = mc_max_point_probability(&s, 1, 200_000, 5).unwrap();
        let se = (1.0 / 7.0 * (6.0 / 7.0) / 200_000.0f64).sqrt();
        // the max over 7 bins sits slightly above the mean
        assert!(r.estimate >= 1.0 / 7.0 - 3.0 * se && r.estimate <= 1.0 / 7.0 + 4.0 * se);
    }

    #[test]
    fn mc_is_reproducible() {
        let s = set(101, &[3, 9, 27, 81, 41, 22, 66]);
        let a = mc_max_point_probability(&s, 3, 150_000, 1).unwrap();
        let b = mc_max_point_probability(&s, 3, 150_000, 1).unwrap();
        assert_eq!(a, b);
        assert!(mc_max_point_probability(&s, 3, 0, 1).is_err());
    }

    #[test]
    fn mc_chain_examples() {
        let s = set(7, &[1, 2, 3]);
        let t = set(7, &[1, 3]);
        let r = mc_chain_probability(&s, &[1, 2], &t, 1_000_000, 2).unwrap();
        assert!((r.estimate - 1.0 / 6.0).abs() < 0.005);
        let r = mc_chain_probability(&s, &[1, 2], &set(7, &[1, 1]), 10_000, 2).unwrap();
        assert_eq!(r.estimate, 0.0);
        assert!(matches!(
            mc_chain_probability(&s, &[2, 1], &t, 10, 2),
            Err(Error::BadSizes(_))
        ));
        // complement of a uniform singleton
        let s = set(11, &[1, 2, 4, 7]);
        let total = 14 % 11;
        let r = mc_chain_probability(&s, &[3], &set(11, &[(total + 11 - 4) % 11]), 400_000, 3)
            .unwrap();
        assert!((r.estimate - 0.25).abs() < 4.0 * r.std_error);
    }

    #[test]
    fn thm12_examples() {
        let c = BoundConstants::paper();
        assert!(close(bound_thm12(5, 4, 2, &c), 0.2 + PAPER_C / (4.0 * 2f64.sqrt())));
        assert!(close(bound_thm12(5, 4, 2, &BoundConstants::empirical(0.0)), 0.2));
        let a = bound_thm12(7, 10, 3, &c) - 1.0 / 7.0;
        let b = bound_thm12(7, 10, 6, &c) - 1.0 / 7.0;
        assert!(close(b, a / 2f64.sqrt()));
    }

    #[test]
    fn cor13_examples() {
        let c = BoundConstants::empirical(2.0);
        let v = bound_cor13(11, 20, 5, 0.5, &c).unwrap();
        assert!(close(v, 1.0 / 11.0 + 2.0 * 20f64.ln().sqrt() / (20.0 * 5f64.sqrt())));
        assert!(close(bound_cor13(11, 20, 5, 0.5, &BoundConstants::empirical(0.0)).unwrap(), 1.0 / 11.0));
        assert!(matches!(bound_cor13(11, 20, 15, 0.5, &c), Err(Error::EpsRange(_))));
        assert!(matches!(bound_cor13(11, 20, 5, 1.0, &c), Err(Error::EpsRange(_))));
        let a = bound_cor13(11, 20, 4, 0.5, &c).unwrap() - 1.0 / 11.0;
        let b = bound_cor13(11, 20, 8, 0.5, &c).unwrap() - 1.0 / 11.0;
        assert!(close(b, a / 2f64.sqrt()));
    }

    #[test]
    fn lemma41_examples() {
        let r = |a: i64, b: i64| BigRational::new(a.into(), b.into());
        assert_eq!(bound_lemma41(4, 2).unwrap(), r(1, 3));
        assert_eq!(bound_lemma41(9, 1).unwrap(), r(1, 9));
        assert_eq!(bound_lemma41(9, 9).unwrap(), r(1, 1));
        assert!(bound_lemma41(3, 0).is_err());
        assert!(bound_lemma41(3, 4).is_err());
    }

    #[test]
    fn cor42_examples() {
        let c = BoundConstants::empirical(1.5);
        let v = bound_cor42(5, 4, &[2], &c).unwrap();
        assert!(close(v, 2.0 * (0.2 + 1.5 * 4f64.ln().sqrt() / (4.0 * 2f64.sqrt()))));
        let zero = BoundConstants::empirical(0.0);
        assert!(close(bound_cor42(7, 10, &[2, 5, 9], &zero).unwrap(), 4.0 / 343.0));
        assert!(close(
            bound_cor42(7, 10, &[1], &c).unwrap(),
            bound_cor42(7, 10, &[9], &c).unwrap()
        ));
        assert!(matches!(bound_cor42(7, 10, &[3, 3], &c), Err(Error::BadSizes(_))));
        assert!(bound_cor42(7, 10, &[10], &c).is_err());
    }

    #[test]
    fn lemma43_examples() {
        let one = BoundConstants::empirical(1.0);
        assert!(!check_lemma43_inequality(101, 20, 1, &one).unwrap().violated);
        assert!(!check_lemma43_inequality(101, 30, 2, &one).unwrap().violated);
        let zero = BoundConstants::empirical(0.0);
        assert!(close(bound_lemma43(101, 20, 2, &zero), 3.0 * (20.0f64 / 101.0).powi(2)));
        let chk = check_lemma43_inequality(101, 20, 2, &zero).unwrap();
        assert!(!chk.violated && chk.tuples == 171);
        // direct sum for k = 1 without the helper
        let direct: f64 = (1..20)
            .map(|m| bound_cor42(101, 20, &[m], &one).unwrap())
            .sum();
        assert!(close(check_lemma43_inequality(101, 20, 1, &one).unwrap().lhs, direct));
        assert!(check_lemma43_inequality(101, 2000, 3, &one).is_err());
    }

    #[test]
    fn empirical_constant_examples() {
        let v = empirical_constant(5, 4, 2, 1.0 / 3.0).unwrap();
        assert!((v - (1.0 / 3.0 - 0.2) * 4.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!((v - 0.754).abs() < 1e-3);
        assert_eq!(empirical_constant(5, 4, 2, 0.2).unwrap(), 0.0);
        let w = empirical_constant(5, 4, 2, 0.2 + 2.0 * (1.0 / 3.0 - 0.2)).unwrap();
        assert!(close(w, 2.0 * v));
        assert!(matches!(empirical_constant(5, 4, 2, 0.1), Err(Error::BelowFloor(_))));
    }
}
