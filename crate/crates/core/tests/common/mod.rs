#![allow(dead_code)]

use graham_core::rng::IndexSource;
use graham_core::{PrimeModulus, Residue};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

/// Replays a fixed prefix of choices and answers 0 afterwards, recording
/// every bound it was asked for.
pub struct Script {
    prefix: Vec<usize>,
    choices: Vec<usize>,
    bounds: Vec<usize>,
}

impl IndexSource for Script {
    fn index_below(&mut self, bound: usize) -> usize {
        let c = self.prefix.get(self.choices.len()).copied().unwrap_or(0);
        assert!(c < bound);
        self.choices.push(c);
        self.bounds.push(bound);
        c
    }
}

/// Runs `f` along every path of its decision tree and returns each outcome
/// with its exact probability.
pub fn enumerate<T>(mut f: impl FnMut(&mut Script) -> T) -> Vec<(BigRational, T)> {
    let mut out = Vec::new();
    let mut prefix = Vec::new();
    loop {
        let mut s = Script {
            prefix: prefix.clone(),
            choices: Vec::new(),
            bounds: Vec::new(),
        };
        let value = f(&mut s);
        let denom: BigInt = s.bounds.iter().map(|&b| BigInt::from(b)).product();
        out.push((BigRational::new(BigInt::one(), denom), value));
        let Some(i) = (0..s.choices.len()).rev().find(|&i| s.choices[i] + 1 < s.bounds[i]) else {
            return out;
        };
        prefix = s.choices[..i].to_vec();
        prefix.push(s.choices[i] + 1);
    }
}

pub fn residues(p: u64, xs: &[u64]) -> Vec<Residue> {
    let p = PrimeModulus::new(p).unwrap();
    xs.iter().map(|&x| p.residue_u64(x)).collect()
}

pub fn rational(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub const SMALL_PRIMES: [u64; 10] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29];
