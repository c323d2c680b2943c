//! The spread functionals ψ and Ψ of a set under dilation by χ, their level
//! sets, and exact checks of the lemmas relating them.
//!
//! A squared circle norm ‖v‖_p² is `a(v)²/p²` with `a(v) = min(v, p − v)`, so
//! every sum of squared norms is an integer over `p²`. All membership tests
//! and lemma checks cross-multiply integers; nothing on these paths touches
//! floating point. Thresholds of the form `c√(t/m)` are turned into integer
//! radii `r` with `r²·m <= c²·t·p²`.

use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anticonc::{EstimateRecord, CHUNK_TRIALS};
use crate::error::{Error, Result};
use crate::rng::stream;
use crate::sampling::{sample_equitable_partition, EquitablePartition};
use crate::zp::{PrimeModulus, Residue};

pub const MAX_P: u64 = 100_000;
pub const MAX_SET: usize = 1_000;
/// Cap on `p × (number of distinct differences)` and on `p × |B_t|`.
pub const MAX_WORK: u64 = 2_000_000_000;
/// Largest modulus for sumset checks.
pub const SUMSET_MAX_P: u64 = 10_000;
pub const SUMSET_MAX_K: usize = 3;

#[inline]
fn a2(p: u64, v: u64) -> u128 {
    let a = v.min(p - v) as u128;
    a * a
}

#[inline]
fn dilate(p: u64, chi: u64, x: u64) -> u64 {
    ((chi as u128 * x as u128) % p as u128) as u64
}

fn ratio(num: u128, den: u128) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Σ_{x,x′∈part} a(χx − χx′)².
fn pair_sum(p: u64, chi: u64, part: &[u64]) -> u128 {
    let mut acc = 0u128;
    for (i, &x) in part.iter().enumerate() {
        for &y in &part[..i] {
            let d = if x >= y { x - y } else { x + p - y };
            acc += a2(p, dilate(p, chi, d));
        }
    }
    2 * acc
}

fn part_values(partition: &EquitablePartition) -> (u64, Vec<Vec<u64>>) {
    let p = partition
        .parts
        .iter()
        .flatten()
        .next()
        .map(|r| r.modulus().get())
        .unwrap_or(2);
    let parts = partition
        .parts
        .iter()
        .map(|part| part.iter().map(|r| r.value()).collect())
        .collect();
    (p, parts)
}

/// ψ(χ) = Σ_i |S_i|⁻² Σ_{x,x′∈S_i} ‖χx − χx′‖_p².
pub fn psi(partition: &EquitablePartition, chi: Residue) -> BigRational {
    let (p, parts) = part_values(partition);
    let mut by_size: BTreeMap<usize, u128> = BTreeMap::new();
    for part in &parts {
        if part.len() > 1 {
            *by_size.entry(part.len()).or_default() += pair_sum(p, chi.value(), part);
        }
    }
    let p2 = p as u128 * p as u128;
    by_size
        .into_iter()
        .fold(BigRational::zero(), |acc, (s, num)| acc + ratio(num, (s * s) as u128 * p2))
}

/// Σ_i Σ_{x,x′∈S_i} a(χx − χx′)², the unnormalized pair sum of a partition.
pub fn partition_pair_sum(partition: &EquitablePartition, chi: Residue) -> u128 {
    let (p, parts) = part_values(partition);
    parts.iter().map(|part| pair_sum(p, chi.value(), part)).sum()
}

/// `(num, den)` with ψ(χ) = num/den, for partitions with few distinct part
/// sizes (the denominator is `p²·lcm(|S_i|²)`).
fn psi_fraction(p: u64, chi: u64, parts: &[Vec<u64>]) -> (u128, u128) {
    let mut sizes: Vec<u128> = parts.iter().map(|s| s.len() as u128).filter(|&s| s > 0).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let l = sizes.iter().fold(1u128, |acc, &s| acc.lcm(&(s * s)));
    let num = parts
        .iter()
        .filter(|s| s.len() > 1)
        .map(|s| {
            let sq = (s.len() * s.len()) as u128;
            pair_sum(p, chi, s) * (l / sq)
        })
        .sum();
    (num, l * p as u128 * p as u128)
}

/// Ψ(χ) = (m/|S|²)·Σ_{x,x′∈S} ‖χx − χx′‖_p², by direct double sum.
pub fn big_psi(set: &[Residue], m: usize, chi: Residue) -> BigRational {
    let n = set.len();
    if n == 0 {
        return BigRational::zero();
    }
    let p = set[0].modulus().get();
    let values: Vec<u64> = set.iter().map(|r| r.value()).collect();
    let num = pair_sum(p, chi.value(), &values) * m as u128;
    ratio(num, (n * n) as u128 * p as u128 * p as u128)
}

/// Whether the lower bound
/// `ψ(χ) >= (m²/(2|S|²))·Σ_i Σ_{x,x′∈S_i} ‖χx − χx′‖_p²` holds, or `None` when
/// the parts exceed `√2·|S|/m` and the bound is not claimed.
pub fn check_psi_lower_bound(partition: &EquitablePartition, chi: Residue) -> Option<bool> {
    let m = partition.num_parts() as u128;
    let n = partition.total_len() as u128;
    let largest = partition.parts.iter().map(Vec::len).max().unwrap_or(0) as u128;
    if largest * largest * m * m > 2 * n * n {
        return None;
    }
    let lhs = psi(partition, chi);
    let pairs = partition_pair_sum(partition, chi);
    let p = partition.parts.iter().flatten().next()?.modulus().get() as u128;
    let rhs = ratio(m * m * pairs, 2 * n * n * p * p);
    Some(lhs >= rhs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tag {
    /// `2000t > m`: the bound on |B_t| is only claimed for `t <= m/2000`.
    HypothesisUnmet,
    /// |S| below the size the bound is derived for.
    OutsideProofRegime,
    /// The arc radius covers the whole circle.
    DegenerateThreshold,
}

/// Smallest level at which χ joins D_t, and the chosen center y_χ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DMembership {
    pub t_min: u64,
    pub center: u64,
}

/// Precomputed data for one `(S, m)`: Ψ numerators for every χ and the D_t
/// thresholds and centers.
#[derive(Debug, Clone)]
pub struct FourierLab {
    modulus: PrimeModulus,
    set: Vec<u64>,
    m: usize,
    /// `Σ_{x,x′} a(χ(x − x′))²` for each χ.
    psi_num: Vec<u128>,
    d_info: Vec<Option<DMembership>>,
    q_cache: HashMap<u64, (usize, Vec<u128>)>,
}

impl FourierLab {
    pub fn new(set: &[Residue], m: usize) -> Result<Self> {
        let Some(first) = set.first() else {
            return Err(Error::BadSize("the set is empty".into()));
        };
        if m == 0 {
            return Err(Error::BadSize("m must be at least 1".into()));
        }
        let modulus = first.modulus();
        let p = modulus.get();
        if p > MAX_P || set.len() > MAX_SET {
            return Err(Error::BudgetExceeded(format!(
                "level sets need p <= {MAX_P} and |S| <= {MAX_SET}, got p = {p}, |S| = {}",
                set.len()
            )));
        }
        let mut values: Vec<u64> = set.iter().map(|r| r.value()).collect();
        values.sort_unstable();
        values.dedup();
        if values.len() != set.len() {
            return Err(Error::BadSize("the set has repeated elements".into()));
        }

        let mut mult = vec![0u64; p as usize];
        for &x in &values {
            for &y in &values {
                if x != y {
                    mult[((x + p - y) % p) as usize] += 1;
                }
            }
        }
        let diffs: Vec<(u64, u64)> = mult
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(d, &c)| (d as u64, c))
            .collect();
        if p.saturating_mul(diffs.len() as u64) > MAX_WORK {
            return Err(Error::BudgetExceeded(format!(
                "{} distinct differences modulo {p}",
                diffs.len()
            )));
        }
        // Ψ(χ) = Ψ(−χ): fill the lower half and mirror
        let half: Vec<u128> = (0..=p / 2)
            .into_par_iter()
            .map(|chi| {
                diffs
                    .iter()
                    .map(|&(d, c)| c as u128 * a2(p, dilate(p, chi, d)))
                    .sum()
            })
            .collect();
        let psi_num: Vec<u128> = (0..p)
            .map(|chi| half[chi.min(p - chi) as usize])
            .collect();

        let k = (3 * values.len()).div_ceil(4);
        let d_info: Vec<Option<DMembership>> = (0..p)
            .into_par_iter()
            .map(|chi| (chi != 0).then(|| d_membership(p, chi, &values, k, m)))
            .collect();

        Ok(FourierLab {
            modulus,
            set: values,
            m,
            psi_num,
            d_info,
            q_cache: HashMap::new(),
        })
    }

    pub fn modulus(&self) -> PrimeModulus {
        self.modulus
    }

    pub fn set_size(&self) -> usize {
        self.set.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    fn p(&self) -> u64 {
        self.modulus.get()
    }

    pub fn big_psi(&self, chi: u64) -> BigRational {
        let n = self.set.len() as u128;
        let p = self.p() as u128;
        ratio(self.m as u128 * self.psi_num[chi as usize], n * n * p * p)
    }

    /// Ψ(χ) <= t.
    pub fn in_b(&self, chi: u64, t: u64) -> bool {
        let n = self.set.len() as u128;
        let p = self.p() as u128;
        self.m as u128 * self.psi_num[chi as usize] <= t as u128 * n * n * p * p
    }

    pub fn b_set(&self, t: u64) -> Vec<u64> {
        (0..self.p()).filter(|&chi| self.in_b(chi, t)).collect()
    }

    pub fn d_membership(&self, chi: u64) -> Option<DMembership> {
        self.d_info[chi as usize]
    }

    pub fn in_d(&self, chi: u64, t: u64) -> bool {
        self.d_info[chi as usize].is_some_and(|d| t >= d.t_min)
    }

    pub fn d_set(&self, t: u64) -> Vec<u64> {
        (1..self.p()).filter(|&chi| self.in_d(chi, t)).collect()
    }

    /// Whether the D_t radius `8√(t/m)` covers the whole circle.
    pub fn d_threshold_degenerate(&self, t: u64) -> bool {
        let p = self.p();
        2 * radius(p, self.m, 64 * t) + 1 >= p
    }

    /// ‖χx − y_χ‖_p <= 16√(t/m).
    pub fn in_j(&self, chi: u64, t: u64, x: u64) -> bool {
        let Some(d) = self.d_info[chi as usize] else {
            return false;
        };
        let p = self.p();
        let v = (dilate(p, chi, x) + p - d.center) % p;
        a2(p, v) * self.m as u128 <= 256 * t as u128 * p as u128 * p as u128
    }

    /// `(|B_t|, Σ_{χ∈B_t} a(χx)² for every x)`, cached per t.
    fn q_sums(&mut self, t: u64) -> Result<&(usize, Vec<u128>)> {
        if !self.q_cache.contains_key(&t) {
            let p = self.p();
            let b = self.b_set(t);
            if p.saturating_mul(b.len() as u64) > MAX_WORK {
                return Err(Error::BudgetExceeded(format!(
                    "|B_{t}| = {} is too large for p = {p}",
                    b.len()
                )));
            }
            let sums: Vec<u128> = (0..p)
                .into_par_iter()
                .map(|x| b.iter().map(|&chi| a2(p, dilate(p, chi, x))).sum())
                .collect();
            self.q_cache.insert(t, (b.len(), sums));
        }
        Ok(&self.q_cache[&t])
    }

    /// Q_{t,δ} = {x : Σ_{χ∈B_t} ‖χx‖_p² < δ|B_t|} for δ = `num/den`.
    pub fn q_set(&mut self, t: u64, delta: (u64, u64)) -> Result<Vec<u64>> {
        let p = self.p() as u128;
        let (num, den) = delta;
        let (size_b, sums) = self.q_sums(t)?;
        let bound = num as u128 * *size_b as u128 * p * p;
        Ok(sums
            .iter()
            .enumerate()
            .filter(|(_, &s)| s * (den as u128) < bound)
            .map(|(x, _)| x as u64)
            .collect())
    }

    /// Lemma: for χ ∈ D_t \ B_{2000t},
    /// `Σ_{x∈S\J_{χ,t}} ‖χx − y_χ‖_p² >= (200t/m)·|S|`.
    pub fn check_est_psi(&self, t: u64) -> EstPsiReport {
        let p = self.p();
        let n = self.set.len() as u128;
        let required = 200 * t as u128 * n * p as u128 * p as u128;
        let candidates: Vec<u64> = (1..p)
            .filter(|&chi| self.in_d(chi, t) && !self.in_b(chi, 2000 * t))
            .collect();
        let violations: Vec<EstPsiViolation> = candidates
            .par_iter()
            .filter_map(|&chi| {
                let center = self.d_info[chi as usize]?.center;
                let outside: u128 = self
                    .set
                    .iter()
                    .filter(|&&x| !self.in_j(chi, t, x))
                    .map(|&x| a2(p, (dilate(p, chi, x) + p - center) % p))
                    .sum();
                (self.m as u128 * outside < required).then(|| EstPsiViolation {
                    chi,
                    center,
                    outside_sum: outside.to_string(),
                    required: required.to_string(),
                })
            })
            .collect();
        let mut tags = Vec::new();
        if self.d_threshold_degenerate(t) {
            tags.push(Tag::DegenerateThreshold);
        }
        EstPsiReport {
            t,
            checked: candidates.len(),
            holds: violations.is_empty(),
            violations,
            tags,
        }
    }

    /// `|B_t| <= 1 + 200p√t/(|S|√m)`, compared as
    /// `((|B_t| − 1)·|S|)²·m <= 40000·p²·t`. Evaluated regardless of the
    /// hypotheses; unmet ones are tagged.
    pub fn check_b_t_bound(&self, t: u64) -> BtBoundReport {
        let p = self.p();
        let n = self.set.len();
        let size = self.b_set(t).len();
        let excess = (size as u128 - 1) * n as u128;
        let holds = excess * excess * self.m as u128 <= 40_000 * (p as u128).pow(2) * t as u128;
        let mut tags = Vec::new();
        if 2000 * t as u128 > self.m as u128 {
            tags.push(Tag::HypothesisUnmet);
        }
        if n < 10_000_000 {
            tags.push(Tag::OutsideProofRegime);
        }
        BtBoundReport {
            t,
            size,
            bound: 1.0 + 200.0 * p as f64 * (t as f64).sqrt() / (n as f64 * (self.m as f64).sqrt()),
            holds,
            tags,
        }
    }

    /// `|Q_{t,10t/m}| >= (9/10)|S|`.
    pub fn check_lower_bound_q(&mut self, t: u64) -> Result<QLowerReport> {
        let delta = reduce(10 * t, self.m as u64);
        let size = self.q_set(t, delta)?.len();
        let n = self.set.len();
        Ok(QLowerReport {
            t,
            delta_num: delta.0,
            delta_den: delta.1,
            size,
            required: 0.9 * n as f64,
            holds: 10 * size >= 9 * n,
        })
    }

    /// `|Q_{t,1/200}| <= (5/4)·p/|B_t|`.
    pub fn check_dual_est(&mut self, t: u64) -> Result<QDualReport> {
        let p = self.p();
        let size_q = self.q_set(t, (1, 200))?.len();
        let size_b = self.q_sums(t)?.0;
        Ok(QDualReport {
            t,
            size_q,
            size_b,
            bound: 1.25 * p as f64 / size_b as f64,
            holds: 4 * size_q as u128 * size_b as u128 <= 5 * p as u128,
        })
    }

    /// `kQ_{t,δ} ⊆ Q_{t,k²δ}`.
    pub fn check_sumset(&mut self, t: u64, delta: (u64, u64), k: usize) -> Result<SumsetReport> {
        let p = self.p();
        if p > SUMSET_MAX_P || k == 0 || k > SUMSET_MAX_K {
            return Err(Error::BudgetExceeded(format!(
                "sumset checks need p <= {SUMSET_MAX_P} and 1 <= k <= {SUMSET_MAX_K}, got p = {p}, k = {k}"
            )));
        }
        let delta = reduce(delta.0, delta.1);
        let q = self.q_set(t, delta)?;
        let target_delta = reduce(delta.0 * (k * k) as u64, delta.1);
        let target = self.q_set(t, target_delta)?;
        let mut member = vec![false; p as usize];
        for &x in &q {
            member[x as usize] = true;
        }
        let mut acc = member.clone();
        for _ in 1..k {
            acc = crate::zp::sumset(self.modulus, &acc, &member);
        }
        let mut in_target = vec![false; p as usize];
        for &x in &target {
            in_target[x as usize] = true;
        }
        let escaped: Vec<u64> = (0..p)
            .filter(|&x| acc[x as usize] && !in_target[x as usize])
            .collect();
        Ok(SumsetReport {
            t,
            delta_num: delta.0,
            delta_den: delta.1,
            k,
            size_q: q.len(),
            size_sumset: acc.iter().filter(|&&b| b).count(),
            size_target: target.len(),
            holds: escaped.is_empty(),
            witnesses: escaped.into_iter().take(16).collect(),
        })
    }

    /// Every level set for the given levels and δ values. A-sets need a
    /// partition.
    pub fn level_sets(
        &mut self,
        t_list: &[u64],
        deltas: &[(u64, u64)],
        partition: Option<&EquitablePartition>,
    ) -> Result<LevelSets> {
        let p = self.p();
        let a_sets = partition.map(|part| {
            let (_, parts) = part_values(part);
            let mut buckets: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
            for chi in 0..p {
                let (num, den) = psi_fraction(p, chi, &parts);
                let level = (num / den) as u64;
                let bucket = if level == 0 { 0 } else { 1 << (63 - level.leading_zeros()) };
                buckets.entry(bucket).or_default().push(chi);
            }
            buckets
        });
        let mut b_sets = BTreeMap::new();
        let mut d_sets = BTreeMap::new();
        let mut degenerate = Vec::new();
        let mut q_sets = Vec::new();
        for &t in t_list {
            b_sets.insert(t, self.b_set(t));
            d_sets.insert(t, self.d_set(t));
            if self.d_threshold_degenerate(t) {
                degenerate.push(t);
            }
            for &(num, den) in deltas {
                let delta = reduce(num, den);
                q_sets.push(QSet {
                    t,
                    delta_num: delta.0,
                    delta_den: delta.1,
                    members: self.q_set(t, delta)?,
                });
            }
        }
        Ok(LevelSets {
            p,
            n: self.set.len(),
            m: self.m,
            a_sets,
            b_sets,
            d_sets,
            centers: self.d_info.clone(),
            q_sets,
            degenerate,
        })
    }

    /// ψ and Ψ for every χ.
    pub fn profile(&self, partition: Option<&EquitablePartition>) -> FourierProfile {
        let p = self.p();
        FourierProfile {
            p,
            set: self.set.clone(),
            m: self.m,
            partition: partition.map(|part| part_values(part).1),
            psi: partition.map(|part| {
                (0..p)
                    .map(|chi| psi(part, self.modulus.residue_u64(chi)))
                    .collect()
            }),
            big_psi: (0..p).map(|chi| self.big_psi(chi)).collect(),
        }
    }
}

fn reduce(num: u64, den: u64) -> (u64, u64) {
    let g = num.gcd(&den).max(1);
    (num / g, den / g)
}

/// Largest `a <= (p − 1)/2` with `a²·m <= c2t·p²`.
fn radius(p: u64, m: usize, c2t: u64) -> u64 {
    let cap = (p - 1) / 2;
    let limit = c2t as u128 * p as u128 * p as u128 / m as u128;
    let mut a = ((limit as f64).sqrt() as u128).min(cap as u128);
    while a * a > limit {
        a -= 1;
    }
    while a < cap as u128 && (a + 1) * (a + 1) <= limit {
        a += 1;
    }
    a as u64
}

/// Sorts χS on the circle, finds the shortest arc holding `k` of its points,
/// and converts that into the first level t whose radius `8√(t/m)` reaches
/// it. The center is taken from the arc of that radius starting at the
/// smallest qualifying point of χS.
fn d_membership(p: u64, chi: u64, set: &[u64], k: usize, m: usize) -> DMembership {
    let n = set.len();
    let mut v: Vec<u64> = set.iter().map(|&x| dilate(p, chi, x)).collect();
    v.sort_unstable();
    let k = k.max(1);
    let span_from = |i: usize, len: usize| -> u64 {
        let j = i + len - 1;
        if j < n {
            v[j] - v[i]
        } else {
            v[j - n] + p - v[i]
        }
    };
    let min_span = (0..n).map(|i| span_from(i, k)).min().unwrap_or(0);
    let r_need = min_span.div_ceil(2);
    let t_min = ((r_need as u128 * r_need as u128 * m as u128).div_ceil(64 * p as u128 * p as u128))
        .max(1) as u64;
    let r = radius(p, m, 64 * t_min);
    debug_assert!(r >= r_need);
    let start = (0..n)
        .find(|&i| span_from(i, k) <= 2 * r)
        .expect("the shortest arc qualifies");
    DMembership {
        t_min,
        center: (v[start] + r) % p,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstPsiViolation {
    pub chi: u64,
    pub center: u64,
    /// `Σ_{x∈S\J} a(χx − y_χ)²`, to be multiplied by m.
    pub outside_sum: String,
    /// `200·t·|S|·p²`.
    pub required: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstPsiReport {
    pub t: u64,
    /// |D_t \ B_{2000t}|.
    pub checked: usize,
    pub holds: bool,
    pub violations: Vec<EstPsiViolation>,
    pub tags: Vec<Tag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BtBoundReport {
    pub t: u64,
    pub size: usize,
    pub bound: f64,
    pub holds: bool,
    pub tags: Vec<Tag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QLowerReport {
    pub t: u64,
    pub delta_num: u64,
    pub delta_den: u64,
    pub size: usize,
    pub required: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QDualReport {
    pub t: u64,
    pub size_q: usize,
    pub size_b: usize,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SumsetReport {
    pub t: u64,
    pub delta_num: u64,
    pub delta_den: u64,
    pub k: usize,
    pub size_q: usize,
    pub size_sumset: usize,
    pub size_target: usize,
    pub holds: bool,
    /// Up to 16 elements of kQ outside the target set.
    pub witnesses: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QSet {
    pub t: u64,
    pub delta_num: u64,
    pub delta_den: u64,
    pub members: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelSets {
    pub p: u64,
    pub n: usize,
    pub m: usize,
    /// A_0 = {ψ < 1}, A_t = {t <= ψ < 2t}; keys are the levels that occur.
    pub a_sets: Option<BTreeMap<u64, Vec<u64>>>,
    pub b_sets: BTreeMap<u64, Vec<u64>>,
    pub d_sets: BTreeMap<u64, Vec<u64>>,
    /// Indexed by χ; `None` at χ = 0.
    pub centers: Vec<Option<DMembership>>,
    pub q_sets: Vec<QSet>,
    /// Levels whose D_t radius covers the circle.
    pub degenerate: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierProfile {
    pub p: u64,
    pub set: Vec<u64>,
    pub m: usize,
    pub partition: Option<Vec<Vec<u64>>>,
    pub psi: Option<Vec<BigRational>>,
    pub big_psi: Vec<BigRational>,
}

/// Fraction of random equitable partitions with ψ(χ) < 2t.
pub fn mc_partition_psi(
    set: &[Residue],
    m: usize,
    chi: Residue,
    t: u64,
    trials: u64,
    seed: u64,
) -> Result<EstimateRecord> {
    if trials == 0 {
        return Err(Error::BadSize("trials must be at least 1".into()));
    }
    let Some(first) = set.first() else {
        return Err(Error::BadSize("the set is empty".into()));
    };
    let p = first.modulus().get();
    // validate once so the workers can unwrap
    sample_equitable_partition(set, m, &mut stream(seed, u64::MAX))?;
    let hits: u64 = (0..trials.div_ceil(CHUNK_TRIALS))
        .into_par_iter()
        .map(|index| {
            let count = CHUNK_TRIALS.min(trials - index * CHUNK_TRIALS);
            let mut rng = stream(seed, index);
            let mut hits = 0u64;
            for _ in 0..count {
                let partition = sample_equitable_partition(set, m, &mut rng).unwrap();
                let (_, parts) = part_values(&partition);
                let (num, den) = psi_fraction(p, chi.value(), &parts);
                hits += u64::from(num < 2 * t as u128 * den);
            }
            hits
        })
        .sum();
    let estimate = hits as f64 / trials as f64;
    Ok(EstimateRecord {
        p,
        n: set.len(),
        sizes: vec![m],
        trials,
        estimate,
        std_error: (estimate * (1.0 - estimate) / trials as f64).sqrt(),
        seed,
        argmax: None,
    })
}

/// `Σ_i |S_i|(|S_i| − 1)` over the equitable profile: the number of ordered
/// pairs of distinct elements that share a part.
pub fn same_part_pairs(n: usize, m: usize) -> BigUint {
    crate::sampling::partition_profile(n, m)
        .into_iter()
        .map(|s| BigUint::from(s * s.saturating_sub(1)))
        .sum()
}
