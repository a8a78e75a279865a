//! Trapping regions built from fattened attractor intervals.
//!
//! The intervals `I_i` are widened to `J_i` so that `h(J_i) ⊂ int(J_{i+1})`,
//! nested intervals `K_{i,j}` are placed between `h(J_{i−1}) − 1` and
//! `J_i − 1`, and the products `Φ_v = J_{v_1} × K_{v_2,2} × ⋯ × K_{v_n,n}`
//! are mapped by the simple form into `int(Φ_{ψ(v)})`. Unions of boxes over
//! a `ψ`-orbit are the trapping regions `T_v`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{NormalFormParams, PiecewiseMap, Sign, SimpleFormParams, SkewTentParams};
use crate::orbits;
use crate::skewtent::{attractor_intervals, in_s_k, induced_slopes, tent_image, CriticalOrbit, Interval};

/// Relative slack demanded by every strict inclusion check.
pub const INCLUSION_SLACK: f64 = 1e-12;

/// Halvings allowed when searching for `δ`.
pub const MAX_HALVINGS: u32 = 60;

/// Default grid points per axis for sampled box checks.
pub const DEFAULT_GRID: usize = 16;

/// The intervals `J_i = [p_i, q_i]` and their images `h(J_{i−1}) = [r_i, s_i]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FattenedFamily {
    pub k: usize,
    pub delta: f64,
    pub j: Vec<Interval>,
    /// `images[i] = h(J_{i−1 mod k})`.
    pub images: Vec<Interval>,
}

impl FattenedFamily {
    /// Fattened intervals for a given `δ >= 0`; no inclusion property is checked.
    pub fn new(k: usize, p: &SkewTentParams, delta: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!("band count k must be >= 2, got {k}")));
        }
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::InvalidParameter(format!("delta must be finite and >= 0, got {delta}")));
        }
        let orbit = CriticalOrbit::compute(k, p, 2 * k + 1);
        let h = |i: usize| orbit.at(i);
        let (a_l, a_r) = (p.a_l, p.a_r);
        let abs_r = a_r.abs();
        let mut j = Vec::with_capacity(k);
        j.push(Interval::new(
            h(k + 1) - (k + 1) as f64 * delta * a_l.powi(k as i32 - 1) * abs_r,
            h(1) + delta,
        )?);
        for i in 1..k {
            let lo = h(i + 1) - (i + 1) as f64 * delta * a_l.powi(i as i32 - 1) * abs_r;
            let hi = h(i + k + 1) + (i + k + 1) as f64 * delta * a_l.powi((k + i) as i32 - 2) * a_r * a_r;
            j.push(Interval::new(lo, hi)?);
        }
        let images = (0..k).map(|i| tent_image(&j[(i + k - 1) % k], p)).collect();
        Ok(FattenedFamily { k, delta, j, images })
    }

    pub fn p(&self, i: usize) -> f64 {
        self.j[i].lo
    }

    pub fn q(&self, i: usize) -> f64 {
        self.j[i].hi
    }

    pub fn r(&self, i: usize) -> f64 {
        self.images[i].lo
    }

    pub fn s(&self, i: usize) -> f64 {
        self.images[i].hi
    }

    pub fn mutually_disjoint(&self) -> bool {
        (0..self.k).all(|a| (a + 1..self.k).all(|b| self.j[a].disjoint_from(&self.j[b])))
    }
}

/// `h(J_i) ⊂ int(J_{i+1 mod k})` for every `i`, with the `J_i` mutually disjoint.
pub fn verify_j_cycle(fam: &FattenedFamily, p: &SkewTentParams) -> bool {
    if !fam.mutually_disjoint() {
        return false;
    }
    (0..fam.k).all(|i| {
        let target = &fam.j[(i + 1) % fam.k];
        tent_image(&fam.j[i], p).inside_interior_of(target, INCLUSION_SLACK * target.width())
    })
}

/// Search `δ = δ_0, δ_0/2, δ_0/4, …` for the first value whose fattened
/// family passes [`verify_j_cycle`].
pub fn find_delta(k: usize, p: &SkewTentParams) -> Result<FattenedFamily> {
    let intervals = attractor_intervals(k, p)?;
    let mut sorted = intervals.clone();
    sorted.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let min_gap = sorted.windows(2).map(|w| w[1].lo - w[0].hi).fold(f64::INFINITY, f64::min);
    let (atilde_l, _) = induced_slopes(k, p);
    let mut delta = min_gap / (8.0 * atilde_l.max(1.0) * (2 * k + 1) as f64);
    for _ in 0..=MAX_HALVINGS {
        let fam = FattenedFamily::new(k, p, delta)?;
        if verify_j_cycle(&fam, p) {
            return Ok(fam);
        }
        delta *= 0.5;
    }
    Err(Error::NoDeltaFound { halvings: MAX_HALVINGS })
}

/// `K_{i,j} = [t_{i,j} − 1, u_{i,j} − 1]` for `i ∈ 0..k`, `j ∈ 2..=n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KFamily {
    pub k: usize,
    pub n: usize,
    /// `intervals[i][j − 2] = K_{i,j}`.
    pub intervals: Vec<Vec<Interval>>,
}

impl KFamily {
    pub fn get(&self, i: usize, j: usize) -> &Interval {
        &self.intervals[i][j - 2]
    }
}

pub fn build_k(fam: &FattenedFamily, n: usize) -> Result<KFamily> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("dimension n must be >= 2, got {n}")));
    }
    let nf = n as f64;
    let mut intervals = Vec::with_capacity(fam.k);
    for i in 0..fam.k {
        let (p, q, r, s) = (fam.p(i), fam.q(i), fam.r(i), fam.s(i));
        let row: Vec<Interval> = (2..=n)
            .map(|j| {
                let t = p + (r - p) * (j - 1) as f64 / nf;
                let u = q + (s - q) * (j - 1) as f64 / nf;
                Interval::new(t - 1.0, u - 1.0)
            })
            .collect::<Result<_>>()?;
        intervals.push(row);
    }
    let kf = KFamily { k: fam.k, n, intervals };
    check_nesting(fam, &kf)?;
    Ok(kf)
}

/// `h(J_{i−1}) − 1 ⊂ int(K_{i,n})`, `K_{i,j} ⊂ int(K_{i,j−1})` and
/// `K_{i,2} + 1 ⊂ int(J_i)`.
fn check_nesting(fam: &FattenedFamily, kf: &KFamily) -> Result<()> {
    let n = kf.n;
    for i in 0..fam.k {
        let chain_ok = fam.images[i]
            .shift(-1.0)
            .inside_interior_of(kf.get(i, n), INCLUSION_SLACK * kf.get(i, n).width())
            && (3..=n).all(|j| {
                kf.get(i, j).inside_interior_of(kf.get(i, j - 1), INCLUSION_SLACK * kf.get(i, j - 1).width())
            })
            && kf.get(i, 2).shift(1.0).inside_interior_of(&fam.j[i], INCLUSION_SLACK * fam.j[i].width());
        if !chain_ok {
            return Err(Error::Internal(format!("K-interval nesting violated for i = {i}")));
        }
    }
    Ok(())
}

/// A vector `v ∈ Z_k^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SymbolVector(pub Vec<usize>);

impl SymbolVector {
    pub fn new(symbols: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(bad) = symbols.iter().find(|&&s| s >= k) {
            return Err(Error::InvalidParameter(format!("symbol {bad} is not in Z_{k}")));
        }
        Ok(SymbolVector(symbols))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Base-`k` index with `v_1` most significant, so index order is lexicographic.
    pub fn index(&self, k: usize) -> usize {
        self.0.iter().fold(0, |acc, &s| acc * k + s)
    }

    pub fn from_index(mut index: usize, k: usize, n: usize) -> SymbolVector {
        let mut v = vec![0; n];
        for slot in v.iter_mut().rev() {
            *slot = index % k;
            index /= k;
        }
        SymbolVector(v)
    }

    pub fn label(&self) -> String {
        self.0.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("-")
    }
}

/// `ψ(v) = (v_2, …, v_n, v_1 + 1)`.
pub fn psi(v: &SymbolVector, k: usize) -> SymbolVector {
    let mut out = Vec::with_capacity(v.len());
    out.extend_from_slice(&v.0[1..]);
    out.push((v.0[0] + 1) % k);
    SymbolVector(out)
}

/// A product of closed intervals, serialized as a list of `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhaseBox {
    pub sides: Vec<Interval>,
}

impl PhaseBox {
    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        self.sides.iter().zip(y).all(|(s, &v)| s.contains(v))
    }

    pub fn center(&self) -> Vec<f64> {
        self.sides.iter().map(Interval::mid).collect()
    }

    /// Chebyshev distance from `y` to the box.
    pub fn distance_to(&self, y: &[f64]) -> f64 {
        self.sides.iter().zip(y).map(|(s, &v)| s.distance_to(v)).fold(0.0, f64::max)
    }

    pub fn disjoint_from(&self, other: &PhaseBox) -> bool {
        self.sides.iter().zip(&other.sides).any(|(a, b)| a.disjoint_from(b))
    }

    /// Every side of `self` strictly inside the matching side of `outer`,
    /// with slack `INCLUSION_SLACK · width`.
    pub fn inside_interior_of(&self, outer: &PhaseBox) -> bool {
        self.dim() == outer.dim()
            && self
                .sides
                .iter()
                .zip(&outer.sides)
                .all(|(a, b)| a.inside_interior_of(b, INCLUSION_SLACK * b.width()))
    }

    pub fn scaled(&self, by: f64) -> PhaseBox {
        PhaseBox { sides: self.sides.iter().map(|s| s.scale(by)).collect() }
    }
}

/// `Φ_v = J_{v_1} × K_{v_2,2} × ⋯ × K_{v_n,n}`.
pub fn build_box(v: &SymbolVector, fam: &FattenedFamily, kf: &KFamily) -> PhaseBox {
    let mut sides = Vec::with_capacity(kf.n);
    sides.push(fam.j[v.0[0]]);
    for j in 2..=kf.n {
        sides.push(*kf.get(v.0[j - 1], j));
    }
    PhaseBox { sides }
}

/// Exact image of a box under the piecewise-affine simple form. Output
/// coordinate `j < n` is the translate of input side `j + 1`; the last
/// coordinate is `h(y_1) − 1`, evaluated at the endpoints and the kink.
pub fn image_box_simple(b: &PhaseBox, p: &SimpleFormParams) -> PhaseBox {
    let n = p.n;
    let mut sides = Vec::with_capacity(n);
    for j in 0..n - 1 {
        let shift = if j == 0 { p.sigma.value() } else { 0.0 };
        sides.push(b.sides[j + 1].shift(shift));
    }
    sides.push(tent_image(&b.sides[0], &p.tent).shift(-1.0));
    PhaseBox { sides }
}

fn check_consistent(v: &SymbolVector, fam: &FattenedFamily, kf: &KFamily, n: usize) -> Result<()> {
    if fam.k != kf.k || kf.n != n || v.len() != n {
        return Err(Error::DimensionMismatch { expected: kf.n, got: v.len().min(n) });
    }
    if v.0.iter().any(|&s| s >= fam.k) {
        return Err(Error::InvalidParameter(format!("symbol vector {:?} not in Z_{}^n", v.0, fam.k)));
    }
    Ok(())
}

/// `g(Φ_v) ⊂ int(Φ_{ψ(v)})`, checked exactly.
pub fn verify_box_map_simple(
    v: &SymbolVector,
    fam: &FattenedFamily,
    kf: &KFamily,
    p: &SimpleFormParams,
) -> Result<bool> {
    check_consistent(v, fam, kf, p.n)?;
    if p.sigma != Sign::Plus {
        return Err(Error::InvalidParameter("box mapping requires sigma = +1".into()));
    }
    let image = image_box_simple(&build_box(v, fam, kf), p);
    Ok(image.inside_interior_of(&build_box(&psi(v, fam.k), fam, kf)))
}

/// Regular grid with `per_axis` points per side, corners included.
pub fn box_grid(b: &PhaseBox, per_axis: usize) -> Vec<Vec<f64>> {
    let per_axis = per_axis.max(2);
    let axes: Vec<Vec<f64>> = b
        .sides
        .iter()
        .map(|s| {
            (0..per_axis)
                .map(|i| {
                    if i == per_axis - 1 {
                        s.hi
                    } else {
                        s.lo + s.width() * i as f64 / (per_axis - 1) as f64
                    }
                })
                .collect()
        })
        .collect();
    let total = per_axis.pow(b.dim() as u32);
    (0..total)
        .map(|mut idx| {
            axes.iter()
                .map(|axis| {
                    let v = axis[idx % per_axis];
                    idx /= per_axis;
                    v
                })
                .collect()
        })
        .collect()
}

/// Smallest signed margin, in scaled coordinates, by which a grid sample of
/// `f(μ Φ_v)` lies inside `int(μ Φ_{ψ(v)})` after subtracting the slack.
/// Positive means every sample passed.
pub fn perturbed_box_margin(
    v: &SymbolVector,
    fam: &FattenedFamily,
    kf: &KFamily,
    p: &NormalFormParams,
    grid: usize,
) -> Result<f64> {
    check_consistent(v, fam, kf, p.n)?;
    if !(p.mu > 0.0) {
        return Err(Error::InvalidParameter(format!("perturbed box check needs mu > 0, got {}", p.mu)));
    }
    let mu = p.mu;
    let source = build_box(v, fam, kf).scaled(mu);
    let target = build_box(&psi(v, fam.k), fam, kf).scaled(mu);
    let mut worst = f64::INFINITY;
    for x in box_grid(&source, grid) {
        let fx = p.apply(&x);
        for (side, &c) in target.sides.iter().zip(&fx) {
            let margin = (c - side.lo).min(side.hi - c) - INCLUSION_SLACK * side.width();
            worst = worst.min(margin / mu);
        }
    }
    Ok(worst)
}

/// Sampled check of `f(μ Φ_v; μ) ⊂ int(μ Φ_{ψ(v)})`: numerical evidence, not proof.
pub fn verify_box_map_perturbed(
    v: &SymbolVector,
    fam: &FattenedFamily,
    kf: &KFamily,
    p: &NormalFormParams,
    grid: usize,
) -> Result<bool> {
    Ok(perturbed_box_margin(v, fam, kf, p, grid)? > 0.0)
}

/// `T_v`: the boxes `Φ_w` over `w ∈ orb(v)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrappingRegion {
    #[serde(skip)]
    pub k: usize,
    pub rep: SymbolVector,
    pub orbit: Vec<SymbolVector>,
    pub boxes: Vec<PhaseBox>,
}

impl TrappingRegion {
    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rep.len()
    }
}

pub fn orbit_of(v: &SymbolVector, k: usize) -> Vec<SymbolVector> {
    let mut orbit = vec![v.clone()];
    let mut w = psi(v, k);
    while &w != v {
        let next = psi(&w, k);
        orbit.push(w);
        w = next;
    }
    orbit
}

pub fn trapping_region(v: &SymbolVector, fam: &FattenedFamily, kf: &KFamily) -> TrappingRegion {
    let orbit = orbit_of(v, fam.k);
    let boxes = orbit.iter().map(|w| build_box(w, fam, kf)).collect();
    TrappingRegion { k: fam.k, rep: v.clone(), orbit, boxes }
}

/// Where a point sits relative to the boxes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxLocation {
    pub region: usize,
    pub symbols: SymbolVector,
    /// Chebyshev distance to the box; zero when inside.
    pub distance: f64,
}

/// All trapping regions of one `(k, n, a_L, a_R)` point, in order of their
/// lexicographically smallest representative.
#[derive(Debug, Clone, Serialize)]
pub struct TrappingGeometry {
    pub k: usize,
    pub n: usize,
    pub delta: f64,
    pub regions: Vec<TrappingRegion>,
    #[serde(skip)]
    pub tent: SkewTentParams,
    #[serde(skip)]
    pub fattened: FattenedFamily,
    #[serde(skip)]
    pub nested: KFamily,
    #[serde(skip)]
    region_of: Vec<usize>,
}

impl TrappingGeometry {
    pub fn build(k: usize, n: usize, tent: &SkewTentParams) -> Result<Self> {
        let fattened = find_delta(k, tent)?;
        let nested = build_k(&fattened, n)?;
        let census = orbits::enumerate_orbits(k, n)?;
        let mut region_of = vec![usize::MAX; census.total_vectors()];
        let mut regions = Vec::with_capacity(census.orbits.len());
        for (idx, entry) in census.orbits.iter().enumerate() {
            let region = trapping_region(&entry.rep, &fattened, &nested);
            for w in &region.orbit {
                region_of[w.index(k)] = idx;
            }
            regions.push(region);
        }
        Ok(TrappingGeometry {
            k,
            n,
            delta: fattened.delta,
            regions,
            tent: *tent,
            fattened,
            nested,
            region_of,
        })
    }

    pub fn simple_form(&self) -> SimpleFormParams {
        SimpleFormParams { n: self.n, tent: self.tent, sigma: Sign::Plus }
    }

    pub fn region_index(&self, v: &SymbolVector) -> usize {
        self.region_of[v.index(self.k)]
    }

    pub fn box_of(&self, v: &SymbolVector) -> PhaseBox {
        build_box(v, &self.fattened, &self.nested)
    }

    fn side_intervals(&self, coord: usize) -> impl Iterator<Item = &Interval> {
        (0..self.k).map(move |i| {
            if coord == 0 {
                &self.fattened.j[i]
            } else {
                self.nested.get(i, coord + 1)
            }
        })
    }

    /// Box containing the scaled point `y`, if any.
    pub fn locate(&self, y: &[f64]) -> Option<BoxLocation> {
        let mut symbols = Vec::with_capacity(self.n);
        for (coord, &c) in y.iter().enumerate().take(self.n) {
            symbols.push(self.side_intervals(coord).position(|iv| iv.contains(c))?);
        }
        let symbols = SymbolVector(symbols);
        Some(BoxLocation { region: self.region_index(&symbols), symbols, distance: 0.0 })
    }

    /// Nearest box in the Chebyshev metric; coordinates decouple, so the
    /// nearest interval is picked per axis.
    pub fn nearest(&self, y: &[f64]) -> BoxLocation {
        let mut symbols = Vec::with_capacity(self.n);
        let mut distance: f64 = 0.0;
        for (coord, &c) in y.iter().enumerate().take(self.n) {
            let (best, d) = self
                .side_intervals(coord)
                .map(|iv| iv.distance_to(c))
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (i, d)| if d < acc.1 { (i, d) } else { acc });
            symbols.push(best);
            distance = distance.max(d);
        }
        let symbols = SymbolVector(symbols);
        BoxLocation { region: self.region_index(&symbols), symbols, distance }
    }

    pub fn all_symbols(&self) -> impl Iterator<Item = SymbolVector> + '_ {
        self.regions.iter().flat_map(|r| r.orbit.iter().cloned())
    }

    /// Exact simple-form check for every box.
    pub fn verify_simple(&self) -> Vec<(SymbolVector, bool)> {
        let g = self.simple_form();
        self.all_symbols()
            .map(|v| {
                let ok = verify_box_map_simple(&v, &self.fattened, &self.nested, &g).unwrap_or(false);
                (v, ok)
            })
            .collect()
    }

    /// Sampled perturbed check for every box, with the worst margin per box.
    pub fn verify_perturbed(&self, p: &NormalFormParams, grid: usize) -> Result<Vec<(SymbolVector, f64)>> {
        let symbols: Vec<SymbolVector> = self.all_symbols().collect();
        symbols
            .into_par_iter()
            .map(|v| {
                let m = perturbed_box_margin(&v, &self.fattened, &self.nested, p, grid)?;
                Ok((v, m))
            })
            .collect()
    }

    pub fn all_perturbed_pass(&self, p: &NormalFormParams, grid: usize) -> Result<bool> {
        Ok(self.verify_perturbed(p, grid)?.iter().all(|(_, m)| *m > 0.0))
    }
}

/// Outcome of growing `μ` until the sampled perturbed check fails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MuBisection {
    pub largest_passing: Option<f64>,
    pub smallest_failing: Option<f64>,
}

/// Bisection on `μ ∈ [mu_lo, mu_hi]` for the largest value at which every box
/// of `geometry` passes the sampled perturbed check. Assumes failure is
/// monotone in `μ`, which is what is observed, not proven.
pub fn largest_passing_mu(
    geometry: &TrappingGeometry,
    template: &NormalFormParams,
    mu_lo: f64,
    mu_hi: f64,
    grid: usize,
    iterations: usize,
) -> Result<MuBisection> {
    if !(mu_lo > 0.0 && mu_hi > mu_lo) {
        return Err(Error::InvalidParameter(format!("need 0 < mu_lo < mu_hi, got [{mu_lo}, {mu_hi}]")));
    }
    let pass = |mu: f64| geometry.all_perturbed_pass(&template.with_mu(mu), grid);
    if !pass(mu_lo)? {
        return Ok(MuBisection { largest_passing: None, smallest_failing: Some(mu_lo) });
    }
    if pass(mu_hi)? {
        return Ok(MuBisection { largest_passing: Some(mu_hi), smallest_failing: None });
    }
    let (mut lo, mut hi) = (mu_lo, mu_hi);
    for _ in 0..iterations {
        let mid = 0.5 * (lo + hi);
        if pass(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(MuBisection { largest_passing: Some(lo), smallest_failing: Some(hi) })
}

/// Sanity check used by callers that take `(k, a_L, a_R)` from input.
pub fn require_region(k: usize, p: &SkewTentParams) -> Result<()> {
    if in_s_k(k, p)?.in_region {
        Ok(())
    } else {
        Err(Error::NotInRegion { k, a_l: p.a_l, a_r: p.a_r })
    }
}
