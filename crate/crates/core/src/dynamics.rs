//! Dynamics on both sides of the bifurcation: the stable fixed point for
//! `μ < 0` and expansion, Lyapunov exponents and attractor census for `μ > 0`.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::boxes::{SymbolVector, TrappingGeometry, TrappingRegion};
use crate::error::{Error, Result};
use crate::linalg::{companion, eigenvalue_moduli, smallest_singular_value};
use crate::map::{check_dim, diverged, NormalFormParams, PiecewiseMap, Side, SimpleFormParams};
use crate::rng::stream;

/// `y* = −1/(1 − a_L) · (1, a_L, …, a_L)`, the fixed point of the scaled
/// map on the contracting side.
pub fn admissible_fixed_point(a_l: f64, n: usize) -> Result<Vec<f64>> {
    if !(a_l < 1.0) {
        return Err(Error::InvalidParameter(format!("fixed point needs a_L < 1, got {a_l}")));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("dimension n must be >= 1".into()));
    }
    let scale = -1.0 / (1.0 - a_l);
    Ok((0..n).map(|j| if j == 0 { scale } else { scale * a_l }).collect())
}

/// `|a_L|^{1/n}`, the common modulus of the `n`-th roots of `a_L`.
pub fn fixed_point_multipliers(a_l: f64, n: usize) -> f64 {
    a_l.abs().powf(1.0 / n as f64)
}

/// Eigenvalue moduli of the companion matrix with first column `a_L e_n`.
pub fn companion_multiplier_moduli(a_l: f64, n: usize) -> Vec<f64> {
    let mut col = vec![0.0; n];
    col[n - 1] = a_l;
    eigenvalue_moduli(&companion(&col))
}

pub const FIXED_POINT_MAX_STEPS: usize = 100_000;
pub const FIXED_POINT_TOL: f64 = 1e-12;
const CONTRACTION_OFFSET: f64 = 1e-3;
const CONTRACTION_STEPS: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointReport {
    pub location: Vec<f64>,
    /// Empirical contraction rate per step near the fixed point.
    pub multiplier_modulus: f64,
    pub converged: bool,
    /// `‖f(x*) − x*‖`.
    pub residual: f64,
    pub steps: usize,
    /// Spectral radius of the Jacobian at the reported location.
    pub jacobian_spectral_radius: f64,
    pub diverged_at: Option<usize>,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Iterate `f` from `|μ| y*` until successive iterates agree to
/// `1e−12·|μ|`, then estimate the contraction rate from a nearby orbit.
pub fn verify_stable_fixed_point(p: &NormalFormParams) -> Result<FixedPointReport> {
    if !(p.mu < 0.0) {
        return Err(Error::InvalidParameter(format!("stable fixed point needs mu < 0, got {}", p.mu)));
    }
    let mu_abs = p.mu.abs();
    let tol = FIXED_POINT_TOL * mu_abs;
    let mut x: Vec<f64> = admissible_fixed_point(p.base_a_l(), p.n)?.iter().map(|v| v * mu_abs).collect();
    let mut converged = false;
    let mut steps = 0;
    let mut diverged_at = None;
    while steps < FIXED_POINT_MAX_STEPS {
        let next = p.apply(&x);
        steps += 1;
        if diverged(&next) {
            diverged_at = Some(steps);
            break;
        }
        let step = distance(&next, &x);
        x = next;
        if step < tol {
            converged = true;
            break;
        }
    }
    let fx = p.apply(&x);
    let residual = distance(&fx, &x);
    let (multiplier_modulus, jacobian_spectral_radius) = if diverged_at.is_none() {
        (
            contraction_rate(p, &x, CONTRACTION_OFFSET * mu_abs, CONTRACTION_STEPS),
            eigenvalue_moduli(&p.jacobian_one_sided(&x)).into_iter().fold(0.0, f64::max),
        )
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(FixedPointReport {
        location: x,
        multiplier_modulus,
        converged: converged && residual < tol.max(f64::MIN_POSITIVE),
        residual,
        steps,
        jacobian_spectral_radius,
        diverged_at,
    })
}

/// `(d_T / d_0)^{1/T}` for an orbit started `offset` away from `x_star`
/// along the diagonal.
fn contraction_rate<M: PiecewiseMap + ?Sized>(map: &M, x_star: &[f64], offset: f64, steps: usize) -> f64 {
    let n = x_star.len();
    let unit = offset / (n as f64).sqrt();
    let mut y: Vec<f64> = x_star.iter().map(|v| v + unit).collect();
    let d0 = distance(&y, x_star);
    let mut fixed = x_star.to_vec();
    for _ in 0..steps {
        y = map.apply(&y);
        fixed = map.apply(&fixed);
    }
    (distance(&y, &fixed) / d0).powf(1.0 / steps as f64)
}

/// Smallest `|y_1|` tolerated before a point counts as touching the manifold.
pub const MANIFOLD_GUARD: f64 = 1e-14;

/// Diagonal of `D g^{kn}(y)` from the slopes met by the first coordinate.
/// Entry `j` collects the slopes at steps `j − 1, j − 1 + n, …`.
pub fn jacobian_product_simple(y: &[f64], k: usize, p: &SimpleFormParams) -> Result<Vec<f64>> {
    check_dim(p.n, y)?;
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    let n = p.n;
    let mut slopes = Vec::with_capacity(k * n);
    let mut x = y.to_vec();
    for step in 0..k * n {
        if x[0].abs() <= MANIFOLD_GUARD {
            return Err(Error::NonSmooth { step });
        }
        slopes.push(p.tent.slope(Side::of(x[0])));
        x = p.apply(&x);
    }
    Ok((0..n).map(|j| (0..k).map(|m| slopes[j + m * n]).product()).collect())
}

/// `D F^m(x)` by the chain rule; `None` when an iterate comes within `guard`
/// of the switching manifold.
pub fn jacobian_chain<M: PiecewiseMap + ?Sized>(map: &M, x0: &[f64], m: usize, guard: f64) -> Result<Option<DMatrix<f64>>> {
    check_dim(map.dim(), x0)?;
    let n = map.dim();
    let mut acc = DMatrix::identity(n, n);
    let mut x = x0.to_vec();
    for step in 0..m {
        if x[0].abs() <= guard {
            return Ok(None);
        }
        acc = map.jacobian_one_sided(&x) * acc;
        x = map.apply(&x);
        if diverged(&x) {
            return Err(Error::Diverged { step: step + 1 });
        }
    }
    Ok(Some(acc))
}

pub const DEFAULT_EXPANSION_SAMPLES: usize = 256;
const EXPANSION_GUARD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionReport {
    /// Smallest singular value of `D f^{kn}` per sample; `None` where skipped.
    pub per_sample: Vec<Option<f64>>,
    pub per_box_min: Vec<f64>,
    pub global_min: f64,
    pub skipped: usize,
    pub total: usize,
    pub pass: bool,
}

/// Sampled expansion of `f^{kn}` on `μ T_v`; samples are drawn per box from
/// counter-indexed RNG streams, so the result does not depend on scheduling.
pub fn verify_expansion_perturbed(
    p: &NormalFormParams,
    region: &TrappingRegion,
    samples: usize,
    seed: u64,
) -> Result<ExpansionReport> {
    if !(p.mu > 0.0) {
        return Err(Error::InvalidParameter(format!("expansion check needs mu > 0, got {}", p.mu)));
    }
    if region.dim() != p.n {
        return Err(Error::DimensionMismatch { expected: p.n, got: region.dim() });
    }
    if samples == 0 {
        return Err(Error::EmptySample);
    }
    let mu = p.mu;
    let steps = region.k * p.n;
    let total = region.len() * samples;
    let per_sample: Vec<Option<f64>> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let b = &region.boxes[idx / samples];
            let mut rng = stream(seed, idx as u64);
            let x: Vec<f64> = b.sides.iter().map(|s| mu * rng.gen_range(s.lo..=s.hi)).collect();
            Ok(jacobian_chain(p, &x, steps, EXPANSION_GUARD * mu)?.map(|m| smallest_singular_value(&m)))
        })
        .collect::<Result<_>>()?;
    let skipped = per_sample.iter().filter(|s| s.is_none()).count();
    if 2 * skipped > total {
        return Err(Error::Inconclusive { skipped, total });
    }
    let per_box_min: Vec<f64> = per_sample
        .chunks(samples)
        .map(|c| c.iter().flatten().copied().fold(f64::INFINITY, f64::min))
        .collect();
    let global_min = per_box_min.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ExpansionReport { per_sample, per_box_min, global_min, skipped, total, pass: global_min > 1.0 })
}

pub const MIN_LYAPUNOV_STEPS: usize = 10_000;
const REORTHONORMALIZE_EVERY: usize = 10;

/// Lyapunov spectrum by pushing an orthonormal frame through the per-step
/// Jacobians with a QR step every ten iterates; sorted descending.
pub fn lyapunov_exponents<M: PiecewiseMap + ?Sized>(map: &M, x0: &[f64], steps: usize) -> Result<Vec<f64>> {
    check_dim(map.dim(), x0)?;
    if steps < MIN_LYAPUNOV_STEPS {
        return Err(Error::InvalidParameter(format!("need at least {MIN_LYAPUNOV_STEPS} steps, got {steps}")));
    }
    let n = map.dim();
    let mut frame = DMatrix::<f64>::identity(n, n);
    let mut sums = vec![0.0; n];
    let mut x = x0.to_vec();
    for step in 1..=steps {
        frame = map.jacobian_one_sided(&x) * frame;
        x = map.apply(&x);
        if diverged(&x) {
            return Err(Error::Diverged { step });
        }
        if step % REORTHONORMALIZE_EVERY == 0 || step == steps {
            let qr = frame.qr();
            let r = qr.r();
            for (i, sum) in sums.iter_mut().enumerate() {
                *sum += r[(i, i)].abs().ln();
            }
            frame = qr.q();
        }
    }
    let mut out: Vec<f64> = sums.into_iter().map(|s| s / steps as f64).collect();
    out.sort_by(|a, b| b.total_cmp(a));
    Ok(out)
}

/// Average of `ln|h'|` along a skew tent orbit.
pub fn log_slope_average(p: &crate::map::SkewTentParams, z0: f64, steps: usize) -> f64 {
    let mut z = z0;
    let mut sum = 0.0;
    for _ in 0..steps {
        sum += p.slope(Side::of(z)).abs().ln();
        z = p.eval(z);
    }
    sum / steps as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CensusOptions {
    pub transient: usize,
    pub sample: usize,
    pub seeds_per_region: usize,
    pub seed: u64,
    /// Largest Chebyshev distance, in scaled units, at which a point is
    /// still attributed to its nearest box.
    pub capture_radius: f64,
    pub keep_tails: bool,
}

impl Default for CensusOptions {
    fn default() -> Self {
        CensusOptions {
            transient: 10_000,
            sample: 20_000,
            seeds_per_region: 5,
            seed: 0,
            capture_radius: 0.1,
            keep_tails: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailPoint {
    pub seed_id: usize,
    pub step: usize,
    pub x: Vec<f64>,
    pub region: usize,
    /// Position of the box within its region's orbit.
    pub box_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedOutcome {
    pub seed_id: usize,
    pub start_region: usize,
    pub start: Vec<f64>,
    /// Regions visited by the recorded tail, sorted.
    pub regions: Vec<usize>,
    /// Distinct boxes visited by the recorded tail.
    pub footprint: usize,
    /// Points attributed to a box they lie outside of.
    pub captured: usize,
    /// Iterate at which the orbit left every box by more than the capture radius.
    pub escaped_at: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionOccupancy {
    pub region: usize,
    pub rep: SymbolVector,
    pub boxes: Vec<SymbolVector>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttractorCensus {
    pub seeds: Vec<SeedOutcome>,
    pub occupied: Vec<RegionOccupancy>,
    pub distinct_regions: usize,
    pub escapes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tails: Option<Vec<TailPoint>>,
}

impl AttractorCensus {
    /// Footprint sizes of the occupied regions, ascending.
    pub fn footprints(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self.occupied.iter().map(|o| o.boxes.len()).collect();
        f.sort_unstable();
        f
    }
}

struct SeedRun {
    outcome: SeedOutcome,
    boxes: BTreeSet<SymbolVector>,
    tail: Vec<TailPoint>,
}

fn run_seed(p: &NormalFormParams, geo: &TrappingGeometry, seed_id: usize, start_region: usize, opts: &CensusOptions) -> SeedRun {
    let mu = p.mu;
    let region = &geo.regions[start_region];
    let mut rng = stream(opts.seed, seed_id as u64);
    let b = &region.boxes[rng.gen_range(0..region.len())];
    let start: Vec<f64> = b.sides.iter().map(|s| rng.gen_range(s.lo..=s.hi)).collect();
    let mut x: Vec<f64> = start.iter().map(|v| v * mu).collect();
    let mut regions = BTreeSet::new();
    let mut boxes = BTreeSet::new();
    let mut tail = Vec::new();
    let mut captured = 0;
    let mut escaped_at = None;
    for step in 1..=opts.transient + opts.sample {
        x = p.apply(&x);
        if diverged(&x) {
            escaped_at = Some(step);
            break;
        }
        if step <= opts.transient {
            continue;
        }
        let y: Vec<f64> = x.iter().map(|v| v / mu).collect();
        let loc = match geo.locate(&y) {
            Some(loc) => loc,
            None => {
                let loc = geo.nearest(&y);
                if loc.distance > opts.capture_radius {
                    escaped_at = Some(step);
                    break;
                }
                captured += 1;
                loc
            }
        };
        regions.insert(loc.region);
        if opts.keep_tails {
            let box_index = geo.regions[loc.region].orbit.iter().position(|w| *w == loc.symbols).unwrap_or(0);
            tail.push(TailPoint { seed_id, step: step - opts.transient, x: x.clone(), region: loc.region, box_index });
        }
        boxes.insert(loc.symbols);
    }
    SeedRun {
        outcome: SeedOutcome {
            seed_id,
            start_region,
            start: start.iter().map(|v| v * mu).collect(),
            regions: regions.into_iter().collect(),
            footprint: boxes.len(),
            captured,
            escaped_at,
        },
        boxes,
        tail,
    }
}

/// Seeds drawn uniformly from random boxes of every region are iterated;
/// after the transient each point is labelled by its enclosing box, or the
/// nearest box within the capture radius.
pub fn attractor_census(p: &NormalFormParams, geo: &TrappingGeometry, opts: &CensusOptions) -> Result<AttractorCensus> {
    if !(p.mu > 0.0) {
        return Err(Error::InvalidParameter(format!("census needs mu > 0, got {}", p.mu)));
    }
    if geo.n != p.n {
        return Err(Error::DimensionMismatch { expected: p.n, got: geo.n });
    }
    let jobs: Vec<(usize, usize)> = (0..geo.regions.len())
        .flat_map(|r| (0..opts.seeds_per_region).map(move |s| (r * opts.seeds_per_region + s, r)))
        .collect();
    let runs: Vec<SeedRun> = jobs.par_iter().map(|&(id, r)| run_seed(p, geo, id, r, opts)).collect();
    let mut per_region: Vec<BTreeSet<SymbolVector>> = vec![BTreeSet::new(); geo.regions.len()];
    for run in &runs {
        for v in &run.boxes {
            per_region[geo.region_index(v)].insert(v.clone());
        }
    }
    let occupied: Vec<RegionOccupancy> = per_region
        .into_iter()
        .enumerate()
        .filter(|(_, b)| !b.is_empty())
        .map(|(region, b)| RegionOccupancy { region, rep: geo.regions[region].rep.clone(), boxes: b.into_iter().collect() })
        .collect();
    let escapes = runs.iter().filter(|r| r.outcome.escaped_at.is_some()).count();
    let tails = opts.keep_tails.then(|| runs.iter().flat_map(|r| r.tail.iter().cloned()).collect());
    Ok(AttractorCensus {
        distinct_regions: occupied.len(),
        occupied,
        escapes,
        seeds: runs.into_iter().map(|r| r.outcome).collect(),
        tails,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{Monomial, NonlinearTermSpec, Sign, SkewTentParams};
    use crate::skewtent::induced_slopes;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn s3() -> SkewTentParams {
        SkewTentParams::new(0.62, -3.0).unwrap()
    }

    fn s4() -> SkewTentParams {
        SkewTentParams::new(0.47, -10.0).unwrap()
    }

    fn quadratic(mu: f64) -> NormalFormParams {
        let hot = NonlinearTermSpec {
            left: vec![Monomial { component: 1, coefficient: -1.0, x_exponents: vec![2, 0], mu_exponent: 0 }],
            right: vec![],
        };
        NormalFormParams::two_dimensional(-0.02, -0.62, -0.02, 3.0, mu, hot).unwrap()
    }

    #[test]
    fn y_star_values() {
        let y = admissible_fixed_point(0.62, 2).unwrap();
        assert_abs_diff_eq!(y[0], -2.631579, epsilon = 1e-6);
        assert_abs_diff_eq!(y[1], -1.631579, epsilon = 1e-6);
        assert_eq!(admissible_fixed_point(0.0, 4).unwrap(), vec![-1.0, 0.0, 0.0, 0.0]);
        assert!(admissible_fixed_point(1.0, 2).is_err());
        let g = SimpleFormParams::new(3, s4(), Sign::Minus).unwrap();
        let y = admissible_fixed_point(0.47, 3).unwrap();
        let gy = g.apply(&y);
        assert!(distance(&gy, &y) < 1e-12);
    }

    #[test]
    fn multipliers_match_companion_spectrum() {
        assert_abs_diff_eq!(fixed_point_multipliers(0.62, 2), 0.787401, epsilon = 1e-6);
        for n in 2..7 {
            for a in [0.62, 0.47, 0.1, -0.3] {
                let expected = fixed_point_multipliers(a, n);
                assert!(expected < 1.0);
                for m in companion_multiplier_moduli(a, n) {
                    assert_abs_diff_eq!(m, expected, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn stable_fixed_point_linear() {
        let g = SimpleFormParams::new(2, s3(), Sign::Plus).unwrap();
        let p = NormalFormParams::from_simple(&g, -0.01);
        let r = verify_stable_fixed_point(&p).unwrap();
        assert!(r.converged);
        let y = admissible_fixed_point(0.62, 2).unwrap();
        for (a, b) in r.location.iter().zip(&y) {
            assert_abs_diff_eq!(*a, 0.01 * b, epsilon = 1e-10);
        }
        assert_relative_eq!(r.multiplier_modulus, 0.62f64.sqrt(), max_relative = 1e-6);
        assert_relative_eq!(r.jacobian_spectral_radius, 0.62f64.sqrt(), max_relative = 1e-10);
    }

    #[test]
    fn stable_fixed_point_with_hot() {
        let p = quadratic(-0.005);
        let r = verify_stable_fixed_point(&p).unwrap();
        assert!(r.converged);
        assert!(r.residual < 1e-12 * 0.005);
        let y = admissible_fixed_point(0.62, 2).unwrap();
        let gap = distance(&r.location, &y.iter().map(|v| 0.005 * v).collect::<Vec<_>>());
        // O(μ) shift from τ = −0.02 plus O(μ²) from the quadratic term
        assert!(gap < 0.005 * 0.1, "gap {gap}");
        let target = fixed_point_multipliers(0.62, 2);
        assert!((r.multiplier_modulus - target).abs() < 0.1 * target);
        assert!(verify_stable_fixed_point(&quadratic(0.005)).is_err());
    }

    #[test]
    fn diagonal_product_values() {
        let g = SimpleFormParams::new(2, s3(), Sign::Plus).unwrap();
        let geo = TrappingGeometry::build(3, 2, &s3()).unwrap();
        let (al, ar) = induced_slopes(3, &s3());
        assert_abs_diff_eq!(al, 5.58, epsilon = 1e-12);
        assert_abs_diff_eq!(ar, -1.1532, epsilon = 1e-12);
        assert!(al > ar.abs() && ar.abs() > 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for v in geo.all_symbols() {
            let b = geo.box_of(&v);
            for _ in 0..20 {
                let y: Vec<f64> = b.sides.iter().map(|s| rng.gen_range(s.lo..=s.hi)).collect();
                for e in jacobian_product_simple(&y, 3, &g).unwrap() {
                    assert!((e - al).abs() <= 1e-10 * al.abs() || (e - ar).abs() <= 1e-10 * ar.abs());
                }
            }
        }
        assert!(matches!(jacobian_product_simple(&[0.0, 0.5], 3, &g), Err(Error::NonSmooth { step: 0 })));
    }

    #[test]
    fn diagonal_product_matches_chain_rule() {
        for (k, n, tent) in [(3, 2, s3()), (4, 3, s4()), (3, 4, s3())] {
            let g = SimpleFormParams::new(n, tent, Sign::Plus).unwrap();
            let geo = TrappingGeometry::build(k, n, &tent).unwrap();
            let symbols: Vec<_> = geo.all_symbols().collect();
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            for t in 0..100 {
                let b = geo.box_of(&symbols[t % symbols.len()]);
                let y: Vec<f64> = b.sides.iter().map(|s| rng.gen_range(s.lo..=s.hi)).collect();
                let diag = jacobian_product_simple(&y, k, &g).unwrap();
                let m = jacobian_chain(&g, &y, k * n, MANIFOLD_GUARD).unwrap().unwrap();
                for i in 0..n {
                    for j in 0..n {
                        if i == j {
                            assert_abs_diff_eq!(m[(i, i)], diag[i], epsilon = 1e-10 * diag[i].abs());
                        } else {
                            assert_eq!(m[(i, j)], 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn expansion_for_exact_form_is_smallest_entry() {
        let geo = TrappingGeometry::build(3, 2, &s3()).unwrap();
        let p = NormalFormParams::from_simple(&geo.simple_form(), 0.01);
        let (_, ar) = induced_slopes(3, &s3());
        for region in &geo.regions {
            let r = verify_expansion_perturbed(&p, region, 64, 3).unwrap();
            assert!(r.pass);
            assert_relative_eq!(r.global_min, ar.abs(), max_relative = 1e-9);
        }
    }

    #[test]
    fn expansion_quadratic_example() {
        let geo = TrappingGeometry::build(3, 2, &s3()).unwrap();
        let p = quadratic(0.008);
        for region in &geo.regions {
            let r = verify_expansion_perturbed(&p, region, 256, 1).unwrap();
            assert!(r.pass);
            assert!((r.global_min - 1.1532).abs() < 0.1 * 1.1532, "{}", r.global_min);
            assert_eq!(r.per_sample.len(), region.len() * 256);
        }
    }

    #[test]
    fn expansion_is_deterministic_across_thread_counts() {
        let geo = TrappingGeometry::build(3, 2, &s3()).unwrap();
        let p = quadratic(0.008);
        let a = verify_expansion_perturbed(&p, &geo.regions[0], 32, 9).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| verify_expansion_perturbed(&p, &geo.regions[0], 32, 9).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn expansion_negative_control() {
        let geo = TrappingGeometry::build(3, 2, &s3()).unwrap();
        let weak = SimpleFormParams::new(2, SkewTentParams::new(0.62, -1.05).unwrap(), Sign::Plus).unwrap();
        let p = NormalFormParams::from_simple(&weak, 0.01);
        let r = verify_expansion_perturbed(&p, &geo.regions[0], 64, 0).unwrap();
        assert!(!r.pass);
        assert!(verify_expansion_perturbed(&p.with_mu(-0.01), &geo.regions[0], 8, 0).is_err());
    }

    #[test]
    fn lyapunov_skew_tent_matches_log_slopes() {
        let tent = s3();
        let z0 = 0.3;
        let le = lyapunov_exponents(&tent, &[z0], 100_000).unwrap();
        let direct = log_slope_average(&tent, z0, 100_000);
        assert_abs_diff_eq!(le[0], direct, epsilon = 1e-3);
        assert!(le[0] > 0.0);
        assert!(lyapunov_exponents(&tent, &[z0], 100).is_err());
    }

    #[test]
    fn lyapunov_simple_form_in_region() {
        let geo = TrappingGeometry::build(3, 2, &s3()).unwrap();
        let g = geo.simple_form();
        let y0 = geo.regions[0].boxes[0].center();
        let le = lyapunov_exponents(&g, &y0, 100_000).unwrap();
        for l in &le {
            assert!(*l >= 1.1532f64.ln() / 6.0 - 0.01, "{le:?}");
        }
        assert!(le[0] >= le[1]);
    }

    #[test]
    fn lyapunov_contracting_side() {
        let target = 0.62f64.ln() / 2.0;
        for p in [NormalFormParams::from_simple(&SimpleFormParams::new(2, s3(), Sign::Plus).unwrap(), -0.005), quadratic(-0.005)] {
            let x0: Vec<f64> = admissible_fixed_point(0.62, 2).unwrap().iter().map(|v| v * 0.005).collect();
            let le = lyapunov_exponents(&p, &x0, 100_000).unwrap();
            for l in le {
                assert!(l < 0.0);
                assert!((l - target).abs() < 0.05 * target.abs(), "{l} vs {target}");
            }
        }
    }

    #[test]
    fn census_quadratic_example() {
        let geo = TrappingGeometry::build(3, 2, &s3()).unwrap();
        let opts = CensusOptions { keep_tails: true, sample: 2_000, transient: 1_000, ..Default::default() };
        let c = attractor_census(&quadratic(0.008), &geo, &opts).unwrap();
        assert_eq!(c.distinct_regions, 2);
        assert_eq!(c.footprints(), vec![3, 6]);
        assert_eq!(c.escapes, 0);
        for s in &c.seeds {
            assert_eq!(s.regions, vec![s.start_region]);
        }
        assert_eq!(c.tails.as_ref().unwrap().len(), 10 * 2_000);
    }

    #[test]
    fn census_linear_four_band() {
        let geo = TrappingGeometry::build(4, 3, &s4()).unwrap();
        let p = NormalFormParams::from_simple(&geo.simple_form(), 0.01);
        let opts = CensusOptions { sample: 2_000, transient: 500, ..Default::default() };
        let c = attractor_census(&p, &geo, &opts).unwrap();
        assert_eq!(c.distinct_regions, 6);
        for s in &c.seeds {
            assert_eq!(s.regions, vec![s.start_region]);
            assert_eq!(s.captured, 0);
        }
    }

    #[test]
    fn census_is_reproducible() {
        let geo = TrappingGeometry::build(3, 2, &s3()).unwrap();
        let opts = CensusOptions { sample: 300, transient: 100, seed: 42, ..Default::default() };
        let a = attractor_census(&quadratic(0.008), &geo, &opts).unwrap();
        let b = attractor_census(&quadratic(0.008), &geo, &opts).unwrap();
        assert_eq!(a, b);
        assert!(attractor_census(&quadratic(-0.008), &geo, &opts).is_err());
    }
}
