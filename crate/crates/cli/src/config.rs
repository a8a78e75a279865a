use std::path::Path;

use bcblab_core::map::{NonlinearTermSpec, NormalFormParams, SkewTentParams};
use bcblab_core::skewtent::in_s_k;
use clap::Args;
use serde::Deserialize;

use crate::error::CliError;

/// Largest band count tried when `k` is not given.
const MAX_AUTO_K: usize = 40;

/// Experiment parameters. Every field may come from the JSON config file or
/// a flag; flags win.
#[derive(Debug, Clone, Default, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Number of attractor bands of the skew tent map.
    #[arg(long)]
    pub k: Option<usize>,
    /// Phase-space dimension.
    #[arg(long)]
    pub n: Option<usize>,
    /// Left slope of the skew tent map.
    #[arg(long, allow_hyphen_values = true)]
    pub a_l: Option<f64>,
    /// Right slope of the skew tent map.
    #[arg(long, allow_hyphen_values = true)]
    pub a_r: Option<f64>,
    /// First column of the left companion matrix, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub c_l: Option<Vec<f64>>,
    /// First column of the right companion matrix, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub c_r: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    /// Lower end of a mu sweep.
    #[arg(long, allow_hyphen_values = true)]
    pub mu_min: Option<f64>,
    /// Upper end of a mu sweep.
    #[arg(long, allow_hyphen_values = true)]
    pub mu_max: Option<f64>,
    /// Grid points of a mu sweep.
    #[arg(long)]
    pub mu_steps: Option<usize>,
    /// Nonlinear terms; config file only.
    #[arg(skip)]
    pub hot: Option<NonlinearTermSpec>,
    /// Grid points per axis for sampled box checks.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Random samples per box for the expansion check.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub transient: Option<usize>,
    /// Recorded iterates per seed.
    #[arg(long)]
    pub sample: Option<usize>,
    /// Seeds per trapping region.
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Iterations for Lyapunov exponents.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Initial state, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    /// Capture radius, in scaled units, for labelling points outside every box.
    #[arg(long)]
    pub capture_radius: Option<f64>,
    /// Also search for the largest mu at which every perturbed box passes.
    #[arg(long)]
    pub bisect: Option<bool>,
    #[arg(skip)]
    pub seed: Option<u64>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )*
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("config {}: {e}", path.display())))
    }

    /// `self` with every field set in `flags` replaced.
    pub fn overlay(mut self, flags: &RunConfig) -> Self {
        overlay!(
            self, flags, k, n, a_l, a_r, c_l, c_r, mu, mu_min, mu_max, mu_steps, hot, grid, samples, transient,
            sample, seeds, steps, x0, capture_radius, bisect, seed
        );
        self
    }

    pub fn require<T: Copy>(value: Option<T>, field: &str) -> Result<T, CliError> {
        value.ok_or_else(|| CliError::Invalid(format!("missing field `{field}`")))
    }

    pub fn positive_count(value: Option<usize>, default: usize, field: &str) -> Result<usize, CliError> {
        match value {
            Some(0) => Err(CliError::Invalid(format!("field `{field}` must be positive"))),
            Some(v) => Ok(v),
            None => Ok(default),
        }
    }

    pub fn finite(value: Option<f64>, field: &str) -> Result<f64, CliError> {
        let v = Self::require(value, field)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(CliError::Invalid(format!("field `{field}` must be finite")))
        }
    }

    pub fn mu(&self) -> Result<f64, CliError> {
        Self::finite(self.mu, "mu")
    }

    /// The skew tent slopes: `a_l`/`a_r` if given, otherwise the last
    /// entries of `c_l`/`c_r`.
    pub fn tent(&self) -> Result<SkewTentParams, CliError> {
        let a_l = match (self.a_l, &self.c_l) {
            (Some(a), _) => a,
            (None, Some(c)) if !c.is_empty() => c[c.len() - 1],
            _ => return Err(CliError::Invalid("missing field `a_l` (or `c_l`)".into())),
        };
        let a_r = match (self.a_r, &self.c_r) {
            (Some(a), _) => a,
            (None, Some(c)) if !c.is_empty() => c[c.len() - 1],
            _ => return Err(CliError::Invalid("missing field `a_r` (or `c_r`)".into())),
        };
        SkewTentParams::new(a_l, a_r).map_err(|e| CliError::Invalid(format!("fields `a_l`, `a_r`: {e}")))
    }

    pub fn dimension(&self) -> Result<usize, CliError> {
        let n = match (self.n, &self.c_l) {
            (Some(n), _) => n,
            (None, Some(c)) => c.len(),
            (None, None) => return Err(CliError::Invalid("missing field `n`".into())),
        };
        if n < 2 {
            return Err(CliError::Invalid(format!("field `n` must be >= 2, got {n}")));
        }
        Ok(n)
    }

    /// `k` if given, otherwise the smallest `k` whose region contains the slopes.
    pub fn band_count(&self, tent: &SkewTentParams) -> Result<usize, CliError> {
        if let Some(k) = self.k {
            if k < 2 {
                return Err(CliError::Invalid(format!("field `k` must be >= 2, got {k}")));
            }
            return Ok(k);
        }
        (2..=MAX_AUTO_K)
            .find(|&k| in_s_k(k, tent).map(|r| r.in_region).unwrap_or(false))
            .ok_or_else(|| {
                CliError::Invalid(format!(
                    "field `k` not given and ({}, {}) lies in no S_k for k <= {MAX_AUTO_K}",
                    tent.a_l, tent.a_r
                ))
            })
    }

    /// The normal form at `mu`: `c_l`/`c_r` if given, otherwise the simple
    /// form's columns `a_L e_n`, `a_R e_n`; plus any nonlinear terms.
    pub fn normal_form(&self, mu: f64) -> Result<NormalFormParams, CliError> {
        let n = self.dimension()?;
        let tent = self.tent()?;
        let column = |c: &Option<Vec<f64>>, a: f64, field: &str| -> Result<Vec<f64>, CliError> {
            match c {
                Some(c) if c.len() == n => Ok(c.clone()),
                Some(c) => Err(CliError::Invalid(format!("field `{field}` has {} entries, expected n = {n}", c.len()))),
                None => {
                    let mut v = vec![0.0; n];
                    v[n - 1] = a;
                    Ok(v)
                }
            }
        };
        let c_l = column(&self.c_l, tent.a_l, "c_l")?;
        let c_r = column(&self.c_r, tent.a_r, "c_r")?;
        NormalFormParams::new(c_l, c_r, mu, self.hot.clone().unwrap_or_default())
            .map_err(|e| CliError::Invalid(e.to_string()))
    }

    pub fn has_perturbation(&self) -> bool {
        self.mu.is_some() || self.c_l.is_some() || self.c_r.is_some() || self.hot.as_ref().is_some_and(|h| !h.is_empty())
    }
}
