use bcblab_core::boxes::{largest_passing_mu, TrappingGeometry, DEFAULT_GRID};
use bcblab_core::dynamics::{
    admissible_fixed_point, attractor_census, fixed_point_multipliers, lyapunov_exponents, verify_stable_fixed_point,
    AttractorCensus, CensusOptions, FixedPointReport,
};
use bcblab_core::map::NormalFormParams;
use bcblab_core::orbits::{
    attractor_table, burnside_count, count_attractors_formula, enumerate_orbits, largest_coprime_divisor,
};
use bcblab_core::skewtent::{attractor_intervals, in_s_k, induced_slopes, CriticalOrbit};
use num_bigint::BigUint;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{state_columns, unsupported, Format, Output, Table};

/// What a command produced, plus a failure to report after the output is written.
pub struct Outcome {
    pub output: Output,
    pub failure: Option<CliError>,
}

impl Outcome {
    fn ok(output: Output) -> Self {
        Outcome { output, failure: None }
    }
}

/// Largest `k^n` for which `count` also enumerates the orbits.
const COUNT_ENUMERATION_LIMIT: u64 = 1_000_000;

const BIFURCATE_MU_STEPS: usize = 200;
const BIFURCATE_TRANSIENT: usize = 2_000;
const BIFURCATE_SAMPLE: usize = 100;
const BIFURCATE_SEEDS: usize = 2;
const LYAPUNOV_STEPS: usize = 100_000;
const BISECTION_ITERATIONS: usize = 30;
const BISECTION_RANGE: f64 = 1e-6;

fn big_to_json(x: &BigUint) -> Value {
    match u64::try_from(x) {
        Ok(v) => json!(v),
        Err(_) => json!(x.to_string()),
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

pub fn count(cfg: &RunConfig, format: Format) -> Result<Outcome, CliError> {
    let k = RunConfig::require(cfg.k, "k")? as u64;
    let n = RunConfig::require(cfg.n, "n")? as u64;
    if k == 0 || n == 0 {
        return Err(CliError::Invalid(format!("fields `k`, `n` must be >= 1, got k = {k}, n = {n}")));
    }
    let a = largest_coprime_divisor(n, k)?;
    let formula = count_attractors_formula(k, n)?;
    let burnside = burnside_count(k, n)?.count;
    if formula != burnside {
        return Err(CliError::Internal(format!("formula {formula} != Burnside {burnside}")));
    }
    let sizes = match k.checked_pow(n as u32) {
        Some(total) if total <= COUNT_ENUMERATION_LIMIT => {
            let census = enumerate_orbits(k as usize, n as usize)?;
            if BigUint::from(census.count()) != formula {
                return Err(CliError::Internal(format!("formula {formula} != enumeration {}", census.count())));
            }
            let mut sizes: Vec<usize> = census.orbits.iter().map(|o| o.size).collect();
            sizes.sort_unstable_by(|a, b| b.cmp(a));
            Some(sizes)
        }
        _ => None,
    };
    let output = match format {
        Format::Json => Output::Json(json!({
            "k": k, "n": n, "a": a, "N": big_to_json(&formula), "orbit_sizes": sizes,
        })),
        Format::Csv => {
            let mut t = Table::new(vec!["k".into(), "n".into(), "a".into(), "N".into()]);
            t.rows.push(vec![k.to_string(), n.to_string(), a.to_string(), formula.to_string()]);
            Output::Csv(t)
        }
    };
    Ok(Outcome::ok(output))
}

pub fn table(format: Format) -> Result<Outcome, CliError> {
    let entries = attractor_table(2..=10, 2..=6)?;
    let output = match format {
        Format::Csv => {
            let mut t = Table::new(std::iter::once("k".to_string()).chain((2..=6).map(|n| format!("n{n}"))).collect());
            for row in entries.chunks(5) {
                let mut r = vec![row[0].k.to_string()];
                r.extend(row.iter().map(|e| e.count.to_string()));
                t.rows.push(r);
            }
            Output::Csv(t)
        }
        Format::Json => Output::Json(Value::Array(
            entries.iter().map(|e| json!({"k": e.k, "n": e.n, "N": big_to_json(&e.count)})).collect(),
        )),
    };
    Ok(Outcome::ok(output))
}

pub fn region_check(cfg: &RunConfig, format: Format) -> Result<Outcome, CliError> {
    if format != Format::Json {
        return Err(unsupported("region-check", format));
    }
    let k = RunConfig::require(cfg.k, "k")?;
    if k < 2 {
        return Err(CliError::Invalid(format!("field `k` must be >= 2, got {k}")));
    }
    let tent = cfg.tent()?;
    let report = in_s_k(k, &tent)?;
    let mut out = json!({ "k": k, "a_l": tent.a_l, "a_r": tent.a_r, "report": report });
    if report.in_region {
        out["critical_orbit"] = json!(CriticalOrbit::compute(k, &tent, 2 * k + 1).points);
        out["intervals"] = json!(attractor_intervals(k, &tent)?);
        let (al, ar) = induced_slopes(k, &tent);
        out["induced_slopes"] = json!([al, ar]);
    }
    Ok(Outcome::ok(Output::Json(out)))
}

fn geometry(cfg: &RunConfig) -> Result<TrappingGeometry, CliError> {
    let tent = cfg.tent()?;
    let k = cfg.band_count(&tent)?;
    let n = cfg.dimension()?;
    Ok(TrappingGeometry::build(k, n, &tent)?)
}

pub fn build_verify(cfg: &RunConfig, format: Format) -> Result<Outcome, CliError> {
    if format != Format::Json {
        return Err(unsupported("build-verify", format));
    }
    let geo = geometry(cfg)?;
    let grid = RunConfig::positive_count(cfg.grid, DEFAULT_GRID, "grid")?;
    let simple = geo.verify_simple();
    let perturbed_params = if cfg.has_perturbation() {
        let mu = cfg.mu()?;
        if mu <= 0.0 {
            return Err(CliError::Invalid(format!("field `mu` must be > 0 for perturbed checks, got {mu}")));
        }
        Some(cfg.normal_form(mu)?)
    } else {
        None
    };
    let perturbed = match &perturbed_params {
        Some(p) => Some(geo.verify_perturbed(p, grid)?),
        None => None,
    };
    let mut boxes = Vec::with_capacity(simple.len());
    for (i, (v, ok)) in simple.iter().enumerate() {
        let mut entry = json!({ "region": geo.region_index(v), "symbols": v, "simple_pass": ok });
        if let Some(m) = &perturbed {
            entry["perturbed_margin"] = json!(m[i].1);
            entry["perturbed_pass"] = json!(m[i].1 > 0.0);
        }
        boxes.push(entry);
    }
    let simple_passed = simple.iter().filter(|(_, ok)| *ok).count();
    let mut out = json!({
        "k": geo.k,
        "n": geo.n,
        "delta": geo.delta,
        "regions": geo.regions.len(),
        "simple": { "passed": simple_passed, "total": simple.len() },
        "boxes": boxes,
        "geometry": geo,
    });
    let mut failures = Vec::new();
    if simple_passed < simple.len() {
        failures.push(format!("{} of {} simple box maps", simple.len() - simple_passed, simple.len()));
    }
    if let (Some(p), Some(m)) = (&perturbed_params, &perturbed) {
        let passed = m.iter().filter(|(_, margin)| *margin > 0.0).count();
        let worst = m.iter().map(|(_, margin)| *margin).fold(f64::INFINITY, f64::min);
        out["perturbed"] = json!({ "mu": p.mu, "grid": grid, "passed": passed, "total": m.len(), "worst_margin": worst });
        if passed < m.len() {
            failures.push(format!("{} of {} perturbed box maps at mu = {}", m.len() - passed, m.len(), p.mu));
        }
        if cfg.bisect == Some(true) {
            let b = largest_passing_mu(&geo, p, p.mu * BISECTION_RANGE, p.mu, grid, BISECTION_ITERATIONS)?;
            out["mu_bisection"] = json!(b);
        }
    }
    out["pass"] = json!(failures.is_empty());
    let failure = (!failures.is_empty()).then(|| CliError::Verification(failures.join("; ")));
    Ok(Outcome { output: Output::Json(out), failure })
}

fn census_options(cfg: &RunConfig, transient: usize, sample: usize, seeds: usize) -> Result<CensusOptions, CliError> {
    let defaults = CensusOptions::default();
    let capture_radius = cfg.capture_radius.unwrap_or(defaults.capture_radius);
    if !(capture_radius >= 0.0) {
        return Err(CliError::Invalid(format!("field `capture_radius` must be >= 0, got {capture_radius}")));
    }
    Ok(CensusOptions {
        transient: cfg.transient.unwrap_or(transient),
        sample: RunConfig::positive_count(cfg.sample, sample, "sample")?,
        seeds_per_region: cfg.seeds.unwrap_or(seeds),
        seed: cfg.seed.unwrap_or(defaults.seed),
        capture_radius,
        keep_tails: true,
    })
}

fn tail_rows(census: &AttractorCensus, n: usize, prefix: &[String], with_box: bool, rows: &mut Vec<Vec<String>>) {
    let tails = census.tails.as_deref().unwrap_or(&[]);
    for t in tails {
        let mut r = prefix.to_vec();
        r.push(t.seed_id.to_string());
        r.push(t.step.to_string());
        r.extend(t.x.iter().map(|&v| fmt_f64(v)));
        r.push(t.region.to_string());
        if with_box {
            r.push(t.box_index.to_string());
        }
        r.push("ok".into());
        rows.push(r);
    }
    for s in &census.seeds {
        if let Some(step) = s.escaped_at {
            let mut r = prefix.to_vec();
            r.push(s.seed_id.to_string());
            r.push(step.to_string());
            r.extend(std::iter::repeat(String::new()).take(n + 1 + usize::from(with_box)));
            r.push("escaped".into());
            rows.push(r);
        }
    }
}

/// Sort key `(seed_id, step)` stored in the columns after `offset`.
fn sort_rows(rows: &mut [Vec<String>], offset: usize) {
    rows.sort_by_key(|r| (r[offset].parse::<usize>().unwrap_or(0), r[offset + 1].parse::<usize>().unwrap_or(0)));
}

enum SweepPoint {
    Fixed(FixedPointReport),
    Origin,
    Census(AttractorCensus),
}

pub fn bifurcate(cfg: &RunConfig, format: Format) -> Result<Outcome, CliError> {
    let lo = RunConfig::finite(cfg.mu_min, "mu_min")?;
    let hi = RunConfig::finite(cfg.mu_max, "mu_max")?;
    if lo > hi {
        return Err(CliError::Invalid(format!("need mu_min <= mu_max, got [{lo}, {hi}]")));
    }
    let steps = RunConfig::positive_count(cfg.mu_steps, BIFURCATE_MU_STEPS, "mu_steps")?;
    let mus: Vec<f64> = (0..steps)
        .map(|i| if steps == 1 { lo } else { lo + (hi - lo) * i as f64 / (steps - 1) as f64 })
        .collect();
    let template = cfg.normal_form(lo)?;
    let n = template.n;
    let opts = census_options(cfg, BIFURCATE_TRANSIENT, BIFURCATE_SAMPLE, BIFURCATE_SEEDS)?;
    let geo = if hi > 0.0 { Some(geometry(cfg)?) } else { None };
    let points: Vec<SweepPoint> = mus
        .par_iter()
        .map(|&mu| {
            let p = template.with_mu(mu);
            if mu < 0.0 {
                Ok(SweepPoint::Fixed(verify_stable_fixed_point(&p)?))
            } else if mu == 0.0 {
                Ok(SweepPoint::Origin)
            } else {
                let geo = geo.as_ref().expect("geometry built when mu_max > 0");
                Ok(SweepPoint::Census(attractor_census(&p, geo, &opts)?))
            }
        })
        .collect::<Result<_, CliError>>()?;
    match format {
        Format::Csv => {
            let header = ["mu", "seed_id", "step"]
                .into_iter()
                .map(String::from)
                .chain(state_columns(n))
                .chain(["region".to_string(), "status".to_string()])
                .collect();
            let mut t = Table::new(header);
            for (&mu, point) in mus.iter().zip(&points) {
                let prefix = vec![fmt_f64(mu)];
                match point {
                    SweepPoint::Fixed(r) => {
                        let status = if r.converged {
                            "fixed_point"
                        } else if r.diverged_at.is_some() {
                            "diverged"
                        } else {
                            "not_converged"
                        };
                        let mut row = prefix.clone();
                        row.extend(["0".to_string(), r.steps.to_string()]);
                        row.extend(r.location.iter().map(|&v| fmt_f64(v)));
                        row.extend([String::new(), status.to_string()]);
                        t.rows.push(row);
                    }
                    SweepPoint::Origin => {
                        let mut row = prefix.clone();
                        row.extend(["0".to_string(), "0".to_string()]);
                        row.extend(std::iter::repeat("0".to_string()).take(n));
                        row.extend([String::new(), "origin".to_string()]);
                        t.rows.push(row);
                    }
                    SweepPoint::Census(c) => {
                        let mut rows = Vec::new();
                        tail_rows(c, n, &prefix, false, &mut rows);
                        sort_rows(&mut rows, 1);
                        t.rows.extend(rows);
                    }
                }
            }
            Ok(Outcome::ok(Output::Csv(t)))
        }
        Format::Json => {
            let entries = mus
                .iter()
                .zip(&points)
                .map(|(&mu, point)| match point {
                    SweepPoint::Fixed(r) => json!({ "mu": mu, "fixed_point": r }),
                    SweepPoint::Origin => json!({ "mu": mu, "fixed_point": vec![0.0; n] }),
                    SweepPoint::Census(c) => json!({
                        "mu": mu,
                        "distinct_regions": c.distinct_regions,
                        "footprints": c.footprints(),
                        "escapes": c.escapes,
                    }),
                })
                .collect();
            Ok(Outcome::ok(Output::Json(Value::Array(entries))))
        }
    }
}

pub fn phase(cfg: &RunConfig, format: Format) -> Result<Outcome, CliError> {
    let mu = cfg.mu()?;
    if mu <= 0.0 {
        return Err(CliError::Invalid(format!("field `mu` must be > 0 for phase portraits, got {mu}")));
    }
    let defaults = CensusOptions::default();
    let opts = census_options(cfg, defaults.transient, defaults.sample, defaults.seeds_per_region)?;
    let p = cfg.normal_form(mu)?;
    if opts.seeds_per_region == 0 {
        return Ok(Outcome::ok(Output::Empty));
    }
    let geo = geometry(cfg)?;
    let census = attractor_census(&p, &geo, &opts)?;
    let output = match format {
        Format::Csv => {
            let header = ["seed_id", "step"]
                .into_iter()
                .map(String::from)
                .chain(state_columns(p.n))
                .chain(["region", "box_index", "status"].into_iter().map(String::from))
                .collect();
            let mut t = Table::new(header);
            tail_rows(&census, p.n, &[], true, &mut t.rows);
            sort_rows(&mut t.rows, 0);
            Output::Csv(t)
        }
        Format::Json => Output::Json(json!(census)),
    };
    Ok(Outcome::ok(output))
}

pub fn lyapunov(cfg: &RunConfig, format: Format) -> Result<Outcome, CliError> {
    let mu = cfg.mu()?;
    if mu == 0.0 {
        return Err(CliError::Invalid("field `mu` must be nonzero for Lyapunov exponents".into()));
    }
    let p = cfg.normal_form(mu)?;
    let steps = cfg.steps.unwrap_or(LYAPUNOV_STEPS);
    let x0 = match &cfg.x0 {
        Some(x) if x.len() == p.n => x.clone(),
        Some(x) => return Err(CliError::Invalid(format!("field `x0` has {} entries, expected n = {}", x.len(), p.n))),
        None => default_start(cfg, &p)?,
    };
    let exponents = lyapunov_exponents(&p, &x0, steps)?;
    let output = match format {
        Format::Json => Output::Json(json!({ "mu": mu, "steps": steps, "x0": x0, "exponents": exponents })),
        Format::Csv => {
            let mut t = Table::new(
                std::iter::once("mu".to_string()).chain((1..=p.n).map(|i| format!("lambda_{i}"))).collect(),
            );
            t.rows.push(std::iter::once(fmt_f64(mu)).chain(exponents.iter().map(|&v| fmt_f64(v))).collect());
            Output::Csv(t)
        }
    };
    Ok(Outcome::ok(output))
}

/// `|μ| y*` on the contracting side; the centre of the first box, scaled by
/// `μ`, on the expanding side.
fn default_start(cfg: &RunConfig, p: &NormalFormParams) -> Result<Vec<f64>, CliError> {
    if p.mu < 0.0 {
        Ok(admissible_fixed_point(p.base_a_l(), p.n)?.iter().map(|v| v * p.mu.abs()).collect())
    } else {
        let geo = geometry(cfg)?;
        Ok(geo.regions[0].boxes[0].center().iter().map(|v| v * p.mu).collect())
    }
}

pub fn fixed_point(cfg: &RunConfig, format: Format) -> Result<Outcome, CliError> {
    if format != Format::Json {
        return Err(unsupported("fixed-point", format));
    }
    let mu = cfg.mu()?;
    if mu >= 0.0 {
        return Err(CliError::Invalid(format!("field `mu` must be < 0 for the stable fixed point, got {mu}")));
    }
    let p = cfg.normal_form(mu)?;
    let report = verify_stable_fixed_point(&p)?;
    let a_l = p.base_a_l();
    let scaled: Vec<f64> = admissible_fixed_point(a_l, p.n)?.iter().map(|v| v * mu.abs()).collect();
    let failure = (!report.converged).then(|| CliError::Verification(format!("no convergence at mu = {mu}")));
    Ok(Outcome {
        output: Output::Json(json!({
            "mu": mu,
            "report": report,
            "linear_fixed_point": scaled,
            "expected_multiplier_modulus": fixed_point_multipliers(a_l, p.n),
        })),
        failure,
    })
}
