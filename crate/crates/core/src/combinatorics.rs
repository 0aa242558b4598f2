//! Counting arithmetic for the min-entangling expansion of `Π̂_m^ℓ`.
//!
//! For a degree `j` the per-layer count is `4(j+1)·Π_t (⌈j/2^t⌉ + 1)` over
//! `t = 1..⌈log₂ j⌉`, which for powers of two is the halving product
//! `4(j+1)(j/2+1)(j/4+1)⋯(1+1)`. The variant with `(j+1)²` in front is also
//! computed.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;
use twofloat::{consts::LOG2_E, TwoFloat};

use crate::error::{Error, Result};

/// `⌈j/2^t⌉ + 1` for `t = 1..⌈log₂ j⌉`.
pub fn halving_factors(j: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut v = j;
    while v > 1 {
        v = v.div_ceil(2);
        out.push(v + 1);
    }
    out
}

fn halving_product(j: u64) -> BigUint {
    halving_factors(j).into_iter().fold(BigUint::one(), |acc, f| acc * f)
}

/// `4(j+1)·Π(⌈j/2^t⌉+1)`.
pub fn per_layer_count(j: u64) -> BigUint {
    halving_product(j) * 4u32 * (j + 1)
}

/// `4(j+1)²·Π(⌈j/2^t⌉+1)`.
pub fn per_layer_count_squared(j: u64) -> BigUint {
    halving_product(j) * 4u32 * (j + 1) * (j + 1)
}

/// `20·j^{3/2}·2^{(1/2)log²j}` in double-double precision.
pub fn closed_form(j: u64) -> TwoFloat {
    let jt = TwoFloat::from(j as f64);
    let lj = jt.ln() * LOG2_E;
    let half_sq = lj * lj * 0.5;
    let sqrt_j = jt.sqrt();
    // 2^x = e^{x ln 2}; split the exponent so each factor stays in range.
    let pow = (half_sq * twofloat::consts::LN_2).exp();
    jt * sqrt_j * pow * 20.0
}

fn biguint_to_tf(x: &BigUint) -> TwoFloat {
    let bits = x.bits();
    if bits <= 53 {
        return TwoFloat::from(x.to_f64().unwrap_or(f64::INFINITY));
    }
    let shift = bits - 53;
    let hi_part: BigUint = x >> shift;
    let rest: BigUint = x - (&hi_part << shift);
    let scale = 2f64.powi(shift as i32);
    TwoFloat::from(hi_part.to_f64().unwrap_or(f64::INFINITY) * scale)
        + TwoFloat::from(rest.to_f64().unwrap_or(f64::INFINITY))
}

/// `p ≤ c` for an exact integer `p` and a double-double real `c ≥ 0`.
pub fn integer_le_real(p: &BigUint, c: TwoFloat) -> bool {
    if p.bits() <= 100 {
        return biguint_to_tf(p) <= c;
    }
    // c ≥ 2^100 here unless the comparison is trivially false.
    if c.hi() < 2f64.powi(99) {
        return false;
    }
    let hi = BigInt::from_f64_exact(c.hi());
    let lo = BigInt::from_f64_exact(c.lo().floor());
    let floor_c = hi + lo;
    BigInt::from(p.clone()) <= floor_c
}

trait FromF64Exact {
    fn from_f64_exact(x: f64) -> BigInt;
}

impl FromF64Exact for BigInt {
    fn from_f64_exact(x: f64) -> BigInt {
        num_traits::FromPrimitive::from_f64(x).expect("finite integral value")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CountBound {
    pub j: u64,
    pub ell: u32,
    pub exact_halving: bool,
    /// `4(j+1)·Π(⌈j/2^t⌉+1)`.
    pub per_layer: String,
    /// `4(j+1)²·Π(⌈j/2^t⌉+1)`.
    pub per_layer_squared: String,
    /// `per_layer^ℓ`.
    pub terms_bound: String,
    pub terms_bound_squared: String,
    pub closed_form: f64,
    /// `ℓ·log₂(closed_form)`.
    pub closed_form_log2_pow: f64,
    pub per_layer_within: bool,
    pub per_layer_squared_within: bool,
}

pub fn min_entangling_count(j: u64, ell: u32) -> Result<CountBound> {
    if j == 0 {
        return Err(Error::OutOfRange("j must be at least 1".into()));
    }
    let a = per_layer_count(j);
    let b = per_layer_count_squared(j);
    let c = closed_form(j);
    Ok(CountBound {
        j,
        ell,
        exact_halving: j.is_power_of_two(),
        terms_bound: a.pow(ell).to_string(),
        terms_bound_squared: b.pow(ell).to_string(),
        per_layer_within: integer_le_real(&a, c),
        per_layer_squared_within: integer_le_real(&b, c),
        per_layer: a.to_string(),
        per_layer_squared: b.to_string(),
        closed_form: c.hi(),
        closed_form_log2_pow: ell as f64 * c.hi().log2(),
    })
}

/// CSV row for the per-layer comparison.
#[derive(Debug, Clone, Serialize)]
pub struct CountRow {
    pub j: u64,
    pub product: String,
    pub closed_form: f64,
    pub ratio: f64,
    pub pass: bool,
}

pub fn count_row(j: u64) -> CountRow {
    let p = per_layer_count(j);
    let c = closed_form(j);
    let ratio = (biguint_to_tf(&p) / c).hi();
    CountRow { j, pass: integer_le_real(&p, c), product: p.to_string(), closed_form: c.hi(), ratio }
}

#[derive(Debug, Clone, Serialize)]
pub struct CountSweep {
    pub j_min: u64,
    pub j_max: u64,
    pub checked: u64,
    pub failures: Vec<u64>,
    pub max_ratio: f64,
    pub argmax_ratio: u64,
}

impl CountSweep {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks `per_layer_count(j) ≤ closed_form(j)` for every `j` in range.
pub fn sweep_per_layer(j_min: u64, j_max: u64, squared: bool) -> CountSweep {
    let results: Vec<(u64, bool, f64)> = (j_min..=j_max)
        .into_par_iter()
        .map(|j| {
            let p = if squared { per_layer_count_squared(j) } else { per_layer_count(j) };
            let c = closed_form(j);
            (j, integer_le_real(&p, c), (biguint_to_tf(&p) / c).hi())
        })
        .collect();
    let mut failures = Vec::new();
    let (mut max_ratio, mut argmax) = (f64::NEG_INFINITY, j_min);
    for (j, ok, r) in results {
        if !ok {
            failures.push(j);
        }
        if r > max_ratio {
            max_ratio = r;
            argmax = j;
        }
    }
    CountSweep {
        j_min,
        j_max,
        checked: j_max.saturating_sub(j_min) + 1,
        failures,
        max_ratio,
        argmax_ratio: argmax,
    }
}

pub const MAX_BRUTE_ELL: usize = 6;
pub const MAX_BRUTE_BUDGET: u32 = 24;

/// Exhaustive maximum of `Π(n_i + 1)` over nonnegative `n` of length `ℓ`
/// with `Σ n_i ≤ budget`. Ties resolve to the lexicographically largest
/// tuple.
pub fn constrained_product_max(ell: usize, budget: u32) -> Result<(u64, Vec<u32>)> {
    if ell == 0 || ell > MAX_BRUTE_ELL || budget > MAX_BRUTE_BUDGET {
        return Err(Error::OutOfRange(format!(
            "brute force needs 1 ≤ ℓ ≤ {MAX_BRUTE_ELL} and budget ≤ {MAX_BRUTE_BUDGET}"
        )));
    }
    fn rec(pos: usize, left: u32, cur: &mut Vec<u32>, best: &mut (u64, Vec<u32>)) {
        if pos == cur.len() {
            let v: u64 = cur.iter().map(|&n| n as u64 + 1).product();
            if v > best.0 || (v == best.0 && *cur > best.1) {
                *best = (v, cur.clone());
            }
            return;
        }
        for n in 0..=left {
            cur[pos] = n;
            rec(pos + 1, left - n, cur, best);
        }
        cur[pos] = 0;
    }
    let mut cur = vec![0; ell];
    let mut best = (0, vec![0; ell]);
    rec(0, budget, &mut cur, &mut best);
    Ok(best)
}

/// Number of tuples enumerated by [`constrained_product_max`].
pub fn constrained_tuple_count(ell: usize, budget: u32) -> u64 {
    // C(budget + ell, ell)
    (1..=ell as u64).fold(1u64, |acc, i| acc * (budget as u64 + i) / i)
}

pub const MAX_SYMBOLIC_J: u32 = 6;
pub const MAX_SYMBOLIC_ELL: u32 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SymbolicTerm {
    /// `(L-degree, R-degree)` per layer.
    pub layers: Vec<(u32, u32)>,
    pub coefficient: u64,
    pub l_degree: u32,
    pub r_degree: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct SymbolicReport {
    pub j: u32,
    pub ell: u32,
    pub term_count: usize,
    pub expected_terms: u64,
    /// Equals `2^{jℓ}`, the number of ordered words.
    pub coefficient_sum: u64,
    pub min_degree_ok: bool,
    pub terms: Vec<SymbolicTerm>,
}

impl SymbolicReport {
    pub fn passed(&self) -> bool {
        self.term_count as u64 == self.expected_terms
            && self.coefficient_sum == 1u64 << (self.j * self.ell)
            && self.min_degree_ok
    }
}

/// Expands `Π_layers (ℕ_L + ℕ_R)^j` word by word over noncommuting symbols,
/// collects words whose layers agree after commuting `ℕ_L` past `ℕ_R`, and
/// checks `min(L-degree, R-degree) ≤ jℓ/2` on every term.
pub fn symbolic_split_check(j: u32, ell: u32) -> Result<SymbolicReport> {
    if j > MAX_SYMBOLIC_J || ell == 0 || ell > MAX_SYMBOLIC_ELL {
        return Err(Error::OutOfRange(format!(
            "symbolic expansion needs j ≤ {MAX_SYMBOLIC_J} and 1 ≤ ℓ ≤ {MAX_SYMBOLIC_ELL}"
        )));
    }
    let letters = j * ell;
    let mut terms: BTreeMap<Vec<(u32, u32)>, u64> = BTreeMap::new();
    for word in 0u64..(1u64 << letters) {
        let layers: Vec<(u32, u32)> = (0..ell)
            .map(|t| {
                let chunk = (word >> (t * j)) & ((1u64 << j) - 1);
                let r = chunk.count_ones();
                (j - r, r)
            })
            .collect();
        *terms.entry(layers).or_insert(0) += 1;
    }
    let terms: Vec<SymbolicTerm> = terms
        .into_iter()
        .map(|(layers, coefficient)| {
            let l_degree = layers.iter().map(|l| l.0).sum();
            let r_degree = layers.iter().map(|l| l.1).sum();
            SymbolicTerm { layers, coefficient, l_degree, r_degree }
        })
        .collect();
    let half = (j * ell) as f64 / 2.0;
    Ok(SymbolicReport {
        j,
        ell,
        term_count: terms.len(),
        expected_terms: (j as u64 + 1).pow(ell),
        coefficient_sum: terms.iter().map(|t| t.coefficient).sum(),
        min_degree_ok: terms.iter().all(|t| (t.l_degree.min(t.r_degree) as f64) <= half),
        terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_counts() {
        assert_eq!(halving_factors(4), vec![3, 2]);
        assert_eq!(per_layer_count(4), BigUint::from(120u32));
        assert_eq!(per_layer_count_squared(4), BigUint::from(600u32));
        assert!((closed_form(4).hi() - 640.0).abs() < 1e-9);
        let c = min_entangling_count(4, 1).unwrap();
        assert!(c.per_layer_within && c.per_layer_squared_within && c.exact_halving);
        let one = min_entangling_count(1, 3).unwrap();
        assert_eq!(one.terms_bound, "512");
    }

    #[test]
    fn squared_variant_fails_off_powers_of_two() {
        assert_eq!(per_layer_count_squared(3), BigUint::from(384u32));
        assert!(!integer_le_real(&per_layer_count_squared(3), closed_form(3)));
        assert!(!min_entangling_count(3, 1).unwrap().exact_halving);
        for p in 1..=20 {
            let j = 1u64 << p;
            assert!(integer_le_real(&per_layer_count_squared(j), closed_form(j)), "j={j}");
        }
    }

    #[test]
    fn exact_comparison_on_big_values() {
        let p = BigUint::one() << 200u32;
        let c = TwoFloat::from(2f64.powi(200));
        assert!(integer_le_real(&p, c));
        assert!(!integer_le_real(&(p.clone() + 1u32), c));
        assert!(integer_le_real(&(p + 1u32), c + TwoFloat::from(1.0)));
    }

    #[test]
    fn brute_force_examples() {
        assert_eq!(constrained_product_max(2, 4).unwrap(), (9, vec![2, 2]));
        assert_eq!(constrained_product_max(4, 2).unwrap(), (4, vec![1, 1, 0, 0]));
        assert_eq!(constrained_product_max(1, 0).unwrap(), (1, vec![0]));
        assert_eq!(constrained_tuple_count(2, 4), 15);
        assert!(constrained_product_max(7, 2).is_err());
    }

    #[test]
    fn symbolic_examples() {
        let r = symbolic_split_check(2, 1).unwrap();
        assert_eq!(r.term_count, 3);
        let coeffs: Vec<u64> = r.terms.iter().map(|t| t.coefficient).collect();
        assert_eq!(coeffs, vec![1, 2, 1]);
        assert!(r.passed());
        let r = symbolic_split_check(1, 2).unwrap();
        assert_eq!(r.term_count, 4);
        assert!(r.passed());
        let r = symbolic_split_check(0, 1).unwrap();
        assert_eq!(r.term_count, 1);
        assert_eq!(r.terms[0].layers, vec![(0, 0)]);
    }
}
