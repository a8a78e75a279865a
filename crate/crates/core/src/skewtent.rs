//! Geometry of the skew tent map on the `S_k` parameter regions.
//!
//! Inside `S_k` the map has a chaotic attractor made of `k` disjoint closed
//! intervals `I_0, …, I_{k−1}`, built from the forward orbit of the kink
//! point `z = 0`, and `h^k` restricted to any of them is again a skew tent
//! map with slopes `(a_L^{k−2} a_R², a_L^{k−1} a_R)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::SkewTentParams;

/// Closed interval `[lo, hi]`, serialized as `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::InvalidParameter(format!("interval [{lo}, {hi}] has lo > hi")));
        }
        Ok(Interval { lo, hi })
    }

    /// Smallest interval holding every point.
    pub fn hull(points: &[f64]) -> Interval {
        let lo = points.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = points.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, z: f64) -> bool {
        self.lo <= z && z <= self.hi
    }

    pub fn contains_in_interior(&self, z: f64) -> bool {
        self.lo < z && z < self.hi
    }

    /// `self ⊂ int(outer)` with at least `slack` to spare on both sides.
    pub fn inside_interior_of(&self, outer: &Interval, slack: f64) -> bool {
        self.lo > outer.lo + slack && self.hi < outer.hi - slack
    }

    pub fn shift(&self, by: f64) -> Interval {
        Interval { lo: self.lo + by, hi: self.hi + by }
    }

    pub fn scale(&self, by: f64) -> Interval {
        Interval::hull(&[self.lo * by, self.hi * by])
    }

    pub fn disjoint_from(&self, other: &Interval) -> bool {
        self.hi < other.lo || other.hi < self.lo
    }

    pub fn distance_to(&self, z: f64) -> f64 {
        (self.lo - z).max(z - self.hi).max(0.0)
    }

    pub fn hausdorff(&self, other: &Interval) -> f64 {
        (self.lo - other.lo).abs().max((self.hi - other.hi).abs())
    }
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = Error;

    fn try_from(v: [f64; 2]) -> Result<Self> {
        Interval::new(v[0], v[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

/// Image of an interval under `h`, exact for the piecewise-affine map: the
/// hull of the endpoint images, plus `h(0)` when the kink is straddled.
pub fn tent_image(iv: &Interval, p: &SkewTentParams) -> Interval {
    if iv.contains_in_interior(0.0) {
        Interval::hull(&[p.eval(iv.lo), p.eval(iv.hi), p.eval(0.0)])
    } else {
        Interval::hull(&[p.eval(iv.lo), p.eval(iv.hi)])
    }
}

/// `h^0(0), …, h^m(0)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalOrbit {
    pub k: usize,
    pub points: Vec<f64>,
}

impl CriticalOrbit {
    /// Orbit up to `h^m(0)`; `m` is raised to `2k + 1` if smaller.
    pub fn compute(k: usize, p: &SkewTentParams, m: usize) -> CriticalOrbit {
        let m = m.max(2 * k + 1);
        let mut points = Vec::with_capacity(m + 1);
        points.push(0.0);
        for i in 0..m {
            points.push(p.eval(points[i]));
        }
        CriticalOrbit { k, points }
    }

    /// `h^i(0)`.
    pub fn at(&self, i: usize) -> f64 {
        self.points[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SkRegionReport {
    pub k: usize,
    pub in_region: bool,
    /// Upper boundary `a_R` at this `a_L`; `None` when `a_L ∉ (0, 1)`.
    pub upper_value: Option<f64>,
    pub left_residual: f64,
    pub right_residual: f64,
    pub ordering_ok: bool,
}

fn check_k(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("band count k must be >= 2, got {k}")));
    }
    Ok(())
}

/// The curve `h^k(0) = 0`: `a_R = −(1 − a_L^{k−1}) / ((1 − a_L) a_L^{k−2})`.
pub fn upper_boundary_a_r(k: usize, a_l: f64) -> Result<f64> {
    check_k(k)?;
    if !(a_l > 0.0 && a_l < 1.0) {
        return Err(Error::InvalidParameter(format!("a_L must lie in (0, 1), got {a_l}")));
    }
    Ok(-(1.0 - a_l.powi(k as i32 - 1)) / ((1.0 - a_l) * a_l.powi(k as i32 - 2)))
}

/// Residuals of the left and right boundary curves. Both are negative
/// inside `S_k`.
pub fn boundary_residuals(k: usize, p: &SkewTentParams) -> (f64, f64) {
    let (a_l, a_r) = (p.a_l, p.a_r);
    let k = k as i32;
    let left = a_l.powi(2 * k - 2) * a_r.powi(3) + a_l - a_r;
    let right = a_l.powi(k - 1) * a_r * a_r + a_r - a_l;
    (left, right)
}

/// Bracket on `a_R` used when solving the implicit boundary curves.
pub const BOUNDARY_BRACKET: (f64, f64) = (-50.0, -1.0);

/// Bisection to absolute tolerance `tol`; `None` without a sign change.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return None;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Some(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// `a_R` on the left boundary curve for this `a_L`.
pub fn left_boundary_a_r(k: usize, a_l: f64) -> Option<f64> {
    let (lo, hi) = BOUNDARY_BRACKET;
    bisect(|a_r| boundary_residuals(k, &SkewTentParams { a_l, a_r }).0, lo, hi, 1e-12)
}

/// `a_R` on the right boundary curve for this `a_L`.
pub fn right_boundary_a_r(k: usize, a_l: f64) -> Option<f64> {
    let (lo, hi) = BOUNDARY_BRACKET;
    bisect(|a_r| boundary_residuals(k, &SkewTentParams { a_l, a_r }).1, lo, hi, 1e-12)
}

/// The two strict chains satisfied by the critical orbit inside `S_k`:
/// `h²(0) < h^{k+2}(0) < h³(0) < h^{k+3}(0) < ⋯ < h^{2k−1}(0) < h^k(0) < 0` and
/// `0 < h^{2k}(0) < h^{k+1}(0) < h^{2k+1}(0) < h(0)`.
pub fn ordering_chains(k: usize, p: &SkewTentParams) -> (Vec<f64>, Vec<f64>) {
    let orbit = CriticalOrbit::compute(k, p, 2 * k + 1);
    let h = |i| orbit.at(i);
    let mut negative = vec![h(2)];
    for i in 2..k {
        negative.push(h(k + i));
        negative.push(h(i + 1));
    }
    negative.push(0.0);
    let positive = vec![0.0, h(2 * k), h(k + 1), h(2 * k + 1), h(1)];
    (negative, positive)
}

pub fn check_ordering(k: usize, p: &SkewTentParams) -> bool {
    if k < 2 {
        return false;
    }
    let (negative, positive) = ordering_chains(k, p);
    let increasing = |c: &[f64]| c.windows(2).all(|w| w[0] < w[1]);
    increasing(&negative) && increasing(&positive)
}

pub fn in_s_k(k: usize, p: &SkewTentParams) -> Result<SkRegionReport> {
    check_k(k)?;
    let upper_value = upper_boundary_a_r(k, p.a_l).ok();
    let (left_residual, right_residual) = boundary_residuals(k, p);
    let ordering_ok = check_ordering(k, p);
    let h_k = p.eval_iter(0.0, k);
    let in_region = p.a_l > 0.0
        && p.a_l < 1.0
        && p.a_r < -1.0
        && h_k < 0.0
        && left_residual < 0.0
        && right_residual < 0.0
        && ordering_ok;
    Ok(SkRegionReport { k, in_region, upper_value, left_residual, right_residual, ordering_ok })
}

fn require_in_region(k: usize, p: &SkewTentParams) -> Result<()> {
    if !in_s_k(k, p)?.in_region {
        return Err(Error::NotInRegion { k, a_l: p.a_l, a_r: p.a_r });
    }
    Ok(())
}

/// `I_0 = [h^{k+1}(0), h(0)]` and `I_i = [h^{i+1}(0), h^{i+k+1}(0)]`.
pub fn attractor_intervals(k: usize, p: &SkewTentParams) -> Result<Vec<Interval>> {
    require_in_region(k, p)?;
    let orbit = CriticalOrbit::compute(k, p, 2 * k + 1);
    let mut out = Vec::with_capacity(k);
    out.push(Interval::new(orbit.at(k + 1), orbit.at(1))?);
    for i in 1..k {
        out.push(Interval::new(orbit.at(i + 1), orbit.at(i + k + 1))?);
    }
    Ok(out)
}

/// Slopes of the induced map `h^k` on one attractor interval.
pub fn induced_slopes(k: usize, p: &SkewTentParams) -> (f64, f64) {
    let k = k as i32;
    (p.a_l.powi(k - 2) * p.a_r * p.a_r, p.a_l.powi(k - 1) * p.a_r)
}

/// Index `i` with `z ∈ I_i`.
pub fn interval_index(intervals: &[Interval], z: f64, tol: f64) -> Option<usize> {
    intervals.iter().position(|iv| iv.lo - tol <= z && z <= iv.hi + tol)
}
