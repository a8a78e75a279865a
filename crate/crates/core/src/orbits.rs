//! Counting `ψ`-orbits on `Z_k^n`, which index the trapping regions.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_integer::Integer;
use serde::Serialize;

use crate::boxes::SymbolVector;
use crate::error::{Error, Result};

/// Largest `k^n` that [`enumerate_orbits`] will sweep.
pub const MAX_ENUMERATION: u64 = 100_000_000;

pub fn euler_totient(n: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::InvalidParameter("totient of 0 is undefined".into()));
    }
    let (mut rest, mut phi) = (n, n);
    let mut p = 2;
    while p * p <= rest {
        if rest % p == 0 {
            while rest % p == 0 {
                rest /= p;
            }
            phi -= phi / p;
        }
        p += 1;
    }
    if rest > 1 {
        phi -= phi / rest;
    }
    Ok(phi)
}

/// Largest divisor of `n` coprime to `k`.
pub fn largest_coprime_divisor(n: u64, k: u64) -> Result<u64> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidParameter(format!("need n, k >= 1, got n = {n}, k = {k}")));
    }
    let mut a = n;
    loop {
        let g = a.gcd(&k);
        if g == 1 {
            return Ok(a);
        }
        a /= g;
    }
}

fn check_kn(k: u64, n: u64) -> Result<()> {
    if k == 0 || n == 0 {
        return Err(Error::InvalidParameter(format!("need k, n >= 1, got k = {k}, n = {n}")));
    }
    Ok(())
}

fn divisors(a: u64) -> Vec<u64> {
    (1..=a).filter(|d| a % d == 0).collect()
}

/// `N[k,n] = (1/kn) Σ_{d | a} φ(d) k^{n/d}` with `a` the largest divisor of
/// `n` coprime to `k`.
pub fn count_attractors_formula(k: u64, n: u64) -> Result<BigUint> {
    check_kn(k, n)?;
    let a = largest_coprime_divisor(n, k)?;
    let kb = BigUint::from(k);
    let mut sum = BigUint::from(0u32);
    for d in divisors(a) {
        sum += BigUint::from(euler_totient(d)?) * kb.pow((n / d) as u32);
    }
    exact_div(sum, k * n)
}

fn exact_div(sum: BigUint, by: u64) -> Result<BigUint> {
    let (q, r) = sum.div_rem(&BigUint::from(by));
    if r != BigUint::from(0u32) {
        return Err(Error::Internal(format!("orbit sum not divisible by {by}")));
    }
    Ok(q)
}

/// Fixed points of `ψ^i`, computed from the rotation structure.
pub fn fixed_points_direct(k: u64, n: u64, i: u64) -> BigUint {
    if i % k != 0 {
        return BigUint::from(0u32);
    }
    let r = i % n;
    let s = if r == 0 { n } else { r.gcd(&n) };
    if (i / s) % k == 0 {
        BigUint::from(k).pow(s as u32)
    } else {
        BigUint::from(0u32)
    }
}

/// Fixed points of `ψ^{jk}` from the closed criterion `b | j`, `b = n/a`.
pub fn fixed_points_closed(k: u64, n: u64, i: u64) -> Result<BigUint> {
    check_kn(k, n)?;
    if i % k != 0 {
        return Ok(BigUint::from(0u32));
    }
    let j = i / k;
    let a = largest_coprime_divisor(n, k)?;
    let b = n / a;
    if j % b != 0 {
        return Ok(BigUint::from(0u32));
    }
    let ii = j / b;
    Ok(BigUint::from(k).pow((b * ii.gcd(&a)) as u32))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BurnsideTally {
    pub k: u64,
    pub n: u64,
    /// `F[ψ^i]` for `i = 1..=kn`.
    pub fixed_points: Vec<BigUint>,
    pub count: BigUint,
}

/// Orbit count as the average number of fixed points over the cyclic group
/// generated by `ψ`. Both fixed-point routes are evaluated and must agree.
pub fn burnside_count(k: u64, n: u64) -> Result<BurnsideTally> {
    check_kn(k, n)?;
    let order = k * n;
    let mut fixed_points = Vec::with_capacity(order as usize);
    let mut sum = BigUint::from(0u32);
    for i in 1..=order {
        let direct = fixed_points_direct(k, n, i);
        let closed = fixed_points_closed(k, n, i)?;
        if direct != closed {
            return Err(Error::Internal(format!(
                "fixed-point routes disagree at k = {k}, n = {n}, i = {i}: {direct} vs {closed}"
            )));
        }
        sum += &direct;
        fixed_points.push(direct);
    }
    let count = exact_div(sum, order)?;
    Ok(BurnsideTally { k, n, fixed_points, count })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitEntry {
    /// Lexicographically smallest element.
    pub rep: SymbolVector,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitCensus {
    pub k: usize,
    pub n: usize,
    pub orbits: Vec<OrbitEntry>,
}

impl OrbitCensus {
    pub fn count(&self) -> usize {
        self.orbits.len()
    }

    pub fn total_vectors(&self) -> usize {
        self.orbits.iter().map(|o| o.size).sum()
    }

    /// Orbit size to number of orbits of that size.
    pub fn size_histogram(&self) -> BTreeMap<usize, usize> {
        let mut hist = BTreeMap::new();
        for o in &self.orbits {
            *hist.entry(o.size).or_insert(0) += 1;
        }
        hist
    }
}

/// Every `ψ`-orbit on `Z_k^n` by an exhaustive sweep in lexicographic order.
pub fn enumerate_orbits(k: usize, n: usize) -> Result<OrbitCensus> {
    check_kn(k as u64, n as u64)?;
    let total = (k as u64)
        .checked_pow(n as u32)
        .filter(|&t| t <= MAX_ENUMERATION)
        .ok_or_else(|| Error::SizeGuard(format!("k^n = {k}^{n} exceeds {MAX_ENUMERATION}")))?
        as usize;
    let high = total / k;
    let psi_index = |x: usize| (x % high) * k + (x / high + 1) % k;
    let mut visited = vec![false; total];
    let mut orbits = Vec::new();
    for start in 0..total {
        if visited[start] {
            continue;
        }
        let mut size = 0;
        let mut x = start;
        loop {
            visited[x] = true;
            size += 1;
            x = psi_index(x);
            if x == start {
                break;
            }
        }
        orbits.push(OrbitEntry { rep: SymbolVector::from_index(start, k, n), size });
    }
    Ok(OrbitCensus { k, n, orbits })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableEntry {
    pub k: u64,
    pub n: u64,
    pub count: BigUint,
}

/// `N[k,n]` over a rectangular range, rows by `k`.
pub fn attractor_table(ks: std::ops::RangeInclusive<u64>, ns: std::ops::RangeInclusive<u64>) -> Result<Vec<TableEntry>> {
    let mut out = Vec::new();
    for k in ks {
        for n in ns.clone() {
            out.push(TableEntry { k, n, count: count_attractors_formula(k, n)? });
        }
    }
    Ok(out)
}
