//! Map families: the skew tent map `h`, the simple form `g`, the
//! border-collision normal form `f` with polynomial higher-order terms, and
//! the spatially scaled map `f̃(y) = f(|μ| y) / |μ|`.
//!
//! Every family switches on the first coordinate. The left piece is used for
//! `x_1 <= 0` and the right piece for `x_1 > 0`; both pieces agree on the
//! manifold so the tie-break only affects the recorded symbol.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coordinates beyond this magnitude abort an iteration as diverged.
pub const DIVERGENCE_BOUND: f64 = 1e12;

/// Which piece of a piecewise map applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    L,
    R,
}

impl Side {
    pub fn of(switching: f64) -> Side {
        if switching <= 0.0 {
            Side::L
        } else {
            Side::R
        }
    }
}

/// Slopes of the skew tent map `h(z) = a_Z z + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewTentParams {
    pub a_l: f64,
    pub a_r: f64,
}

impl SkewTentParams {
    pub fn new(a_l: f64, a_r: f64) -> Result<Self> {
        if !a_l.is_finite() || !a_r.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "slopes must be finite, got a_L = {a_l}, a_R = {a_r}"
            )));
        }
        Ok(SkewTentParams { a_l, a_r })
    }

    #[inline]
    pub fn slope(&self, side: Side) -> f64 {
        match side {
            Side::L => self.a_l,
            Side::R => self.a_r,
        }
    }

    #[inline]
    pub fn eval(&self, z: f64) -> f64 {
        self.slope(Side::of(z)) * z + 1.0
    }

    /// `h^m(z)`.
    pub fn eval_iter(&self, mut z: f64, m: usize) -> f64 {
        for _ in 0..m {
            z = self.eval(z);
        }
        z
    }
}

pub fn eval_skew_tent(z: f64, p: &SkewTentParams) -> f64 {
    p.eval(z)
}

/// Sign of the constant term `σ e_1` of the simple form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "-1")]
    Minus,
    #[serde(rename = "+1")]
    Plus,
}

impl Sign {
    pub fn of(x: f64) -> Option<Sign> {
        if x > 0.0 {
            Some(Sign::Plus)
        } else if x < 0.0 {
            Some(Sign::Minus)
        } else {
            None
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Sign::Minus => -1.0,
            Sign::Plus => 1.0,
        }
    }
}

/// The simple form `g(y) = A_Z y + σ e_1` whose companion matrices have
/// first columns `a_L e_n` and `a_R e_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimpleFormParams {
    pub n: usize,
    pub tent: SkewTentParams,
    pub sigma: Sign,
}

impl SimpleFormParams {
    pub fn new(n: usize, tent: SkewTentParams, sigma: Sign) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("dimension n must be >= 2, got {n}")));
        }
        Ok(SimpleFormParams { n, tent, sigma })
    }

    /// `d^L = a_L e_n`, `d^R = a_R e_n`.
    pub fn companion_columns(&self) -> (Vec<f64>, Vec<f64>) {
        let mut d_l = vec![0.0; self.n];
        let mut d_r = vec![0.0; self.n];
        d_l[self.n - 1] = self.tent.a_l;
        d_r[self.n - 1] = self.tent.a_r;
        (d_l, d_r)
    }
}

pub fn eval_simple_form(y: &[f64], p: &SimpleFormParams) -> Result<Vec<f64>> {
    check_dim(p.n, y)?;
    Ok(p.apply(y))
}

/// One monomial `coefficient · x_1^e_1 ⋯ x_n^e_n · μ^m` added to output
/// component `component` (1-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub component: usize,
    pub coefficient: f64,
    #[serde(rename = "x")]
    pub x_exponents: Vec<u32>,
    #[serde(rename = "mu", default)]
    pub mu_exponent: u32,
}

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.x_exponents.iter().sum::<u32>() + self.mu_exponent
    }

    fn eval(&self, x: &[f64], mu: f64) -> f64 {
        let mut v = self.coefficient * mu.powi(self.mu_exponent as i32);
        for (xi, &e) in x.iter().zip(&self.x_exponents) {
            if e > 0 {
                v *= xi.powi(e as i32);
            }
        }
        v
    }

    fn partial(&self, x: &[f64], mu: f64, var: usize) -> f64 {
        let e_var = self.x_exponents[var];
        if e_var == 0 {
            return 0.0;
        }
        let mut v = self.coefficient * f64::from(e_var) * mu.powi(self.mu_exponent as i32);
        for (i, (xi, &e)) in x.iter().zip(&self.x_exponents).enumerate() {
            let e = if i == var { e - 1 } else { e };
            if e > 0 {
                v *= xi.powi(e as i32);
            }
        }
        v
    }
}

/// Higher-order terms `E_L`, `E_R` as sums of monomials of total degree >= 2.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NonlinearTermSpec {
    #[serde(default)]
    pub left: Vec<Monomial>,
    #[serde(default)]
    pub right: Vec<Monomial>,
}

impl NonlinearTermSpec {
    pub fn is_empty(&self) -> bool {
        self.left.is_empty() && self.right.is_empty()
    }

    pub fn side(&self, side: Side) -> &[Monomial] {
        match side {
            Side::L => &self.left,
            Side::R => &self.right,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        for (label, terms) in [("left", &self.left), ("right", &self.right)] {
            for (idx, m) in terms.iter().enumerate() {
                if m.component == 0 || m.component > n {
                    return Err(Error::InvalidParameter(format!(
                        "hot.{label}[{idx}].component must be in 1..={n}, got {}",
                        m.component
                    )));
                }
                if m.x_exponents.len() != n {
                    return Err(Error::InvalidParameter(format!(
                        "hot.{label}[{idx}].x must have {n} exponents, got {}",
                        m.x_exponents.len()
                    )));
                }
                if m.degree() < 2 {
                    return Err(Error::InvalidParameter(format!(
                        "hot.{label}[{idx}] has total degree {} < 2",
                        m.degree()
                    )));
                }
                if !m.coefficient.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "hot.{label}[{idx}].coefficient is not finite"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `f(x; μ) = C_Z x + e_1 μ + E_Z(x; μ)` with companion matrices `C_Z`
/// whose first columns are `c_l`, `c_r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalFormParams {
    pub n: usize,
    pub c_l: Vec<f64>,
    pub c_r: Vec<f64>,
    pub mu: f64,
    #[serde(default)]
    pub hot: NonlinearTermSpec,
}

impl NormalFormParams {
    pub fn new(c_l: Vec<f64>, c_r: Vec<f64>, mu: f64, hot: NonlinearTermSpec) -> Result<Self> {
        let n = c_l.len();
        if n < 2 {
            return Err(Error::InvalidParameter(format!("dimension n must be >= 2, got {n}")));
        }
        check_dim(n, &c_r)?;
        if !mu.is_finite() || c_l.iter().chain(&c_r).any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("c_L, c_R and mu must be finite".into()));
        }
        hot.validate(n)?;
        Ok(NormalFormParams { n, c_l, c_r, mu, hot })
    }

    /// The two-dimensional form with `c_L = (τ_L, −δ_L)`, `c_R = (τ_R, −δ_R)`.
    pub fn two_dimensional(
        tau_l: f64,
        delta_l: f64,
        tau_r: f64,
        delta_r: f64,
        mu: f64,
        hot: NonlinearTermSpec,
    ) -> Result<Self> {
        Self::new(vec![tau_l, -delta_l], vec![tau_r, -delta_r], mu, hot)
    }

    /// The exact normal form at `(d^L, d^R)`, i.e. the simple form in the
    /// original coordinates.
    pub fn from_simple(base: &SimpleFormParams, mu: f64) -> Self {
        let (c_l, c_r) = base.companion_columns();
        NormalFormParams { n: base.n, c_l, c_r, mu, hot: NonlinearTermSpec::default() }
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        NormalFormParams { mu, ..self.clone() }
    }

    pub fn column(&self, side: Side) -> &[f64] {
        match side {
            Side::L => &self.c_l,
            Side::R => &self.c_r,
        }
    }

    /// The `a_L` of the nearest simple form, read off the last entry of `c_L`.
    pub fn base_a_l(&self) -> f64 {
        self.c_l[self.n - 1]
    }

    fn eval_side(&self, x: &[f64], side: Side) -> Vec<f64> {
        let n = self.n;
        let c = self.column(side);
        let x1 = x[0];
        let mut out = Vec::with_capacity(n);
        for j in 0..n {
            let shift = if j + 1 < n { x[j + 1] } else { 0.0 };
            out.push(c[j] * x1 + shift);
        }
        out[0] += self.mu;
        for m in self.hot.side(side) {
            out[m.component - 1] += m.eval(x, self.mu);
        }
        out
    }

    fn jacobian_side(&self, x: &[f64], side: Side) -> DMatrix<f64> {
        let n = self.n;
        let c = self.column(side);
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            jac[(j, 0)] = c[j];
            if j + 1 < n {
                jac[(j, j + 1)] = 1.0;
            }
        }
        for m in self.hot.side(side) {
            for var in 0..n {
                jac[(m.component - 1, var)] += m.partial(x, self.mu, var);
            }
        }
        jac
    }
}

pub fn eval_normal_form(x: &[f64], p: &NormalFormParams) -> Result<Vec<f64>> {
    check_dim(p.n, x)?;
    Ok(p.apply(x))
}

/// Left and right piece of the normal form evaluated at the same point,
/// ignoring the switching condition.
pub fn normal_form_pieces(x: &[f64], p: &NormalFormParams) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dim(p.n, x)?;
    Ok((p.eval_side(x, Side::L), p.eval_side(x, Side::R)))
}

/// Analytic Jacobian of the normal form; undefined on the switching manifold.
pub fn jacobian(x: &[f64], p: &NormalFormParams) -> Result<DMatrix<f64>> {
    p.jacobian(x)
}

/// `f̃(y; μ) = f(|μ| y; μ) / |μ|`.
#[derive(Debug, Clone, Copy)]
pub struct ScaledMap<'a> {
    params: &'a NormalFormParams,
    scale: f64,
}

impl<'a> ScaledMap<'a> {
    pub fn new(params: &'a NormalFormParams) -> Result<Self> {
        if params.mu == 0.0 {
            return Err(Error::InvalidParameter("scaled map needs mu != 0".into()));
        }
        Ok(ScaledMap { params, scale: params.mu.abs() })
    }

    pub fn params(&self) -> &NormalFormParams {
        self.params
    }
}

pub fn eval_scaled_map(y: &[f64], p: &NormalFormParams) -> Result<Vec<f64>> {
    check_dim(p.n, y)?;
    Ok(ScaledMap::new(p)?.apply(y))
}

/// A continuous piecewise-smooth map switching on its first coordinate.
pub trait PiecewiseMap: Sync {
    fn dim(&self) -> usize;

    /// Image of `x`; `x.len()` must equal [`PiecewiseMap::dim`].
    fn apply(&self, x: &[f64]) -> Vec<f64>;

    /// Jacobian of the piece selected by the usual tie-break, defined even
    /// on the manifold.
    fn jacobian_one_sided(&self, x: &[f64]) -> DMatrix<f64>;

    /// Jacobian off the switching manifold.
    fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        check_dim(self.dim(), x)?;
        if x[0] == 0.0 {
            return Err(Error::OnSwitchingManifold);
        }
        Ok(self.jacobian_one_sided(x))
    }
}

impl PiecewiseMap for SkewTentParams {
    fn dim(&self) -> usize {
        1
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        vec![self.eval(x[0])]
    }

    fn jacobian_one_sided(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, self.slope(Side::of(x[0])))
    }
}

impl PiecewiseMap for SimpleFormParams {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, y: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = Vec::with_capacity(n);
        out.extend_from_slice(&y[1..]);
        out.push(self.tent.slope(Side::of(y[0])) * y[0]);
        out[0] += self.sigma.value();
        out
    }

    fn jacobian_one_sided(&self, y: &[f64]) -> DMatrix<f64> {
        let n = self.n;
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n - 1 {
            jac[(j, j + 1)] = 1.0;
        }
        jac[(n - 1, 0)] = self.tent.slope(Side::of(y[0]));
        jac
    }
}

impl PiecewiseMap for NormalFormParams {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.eval_side(x, Side::of(x[0]))
    }

    fn jacobian_one_sided(&self, x: &[f64]) -> DMatrix<f64> {
        self.jacobian_side(x, Side::of(x[0]))
    }
}

impl PiecewiseMap for ScaledMap<'_> {
    fn dim(&self) -> usize {
        self.params.n
    }

    fn apply(&self, y: &[f64]) -> Vec<f64> {
        let x: Vec<f64> = y.iter().map(|v| v * self.scale).collect();
        let mut out = self.params.apply(&x);
        for v in &mut out {
            *v /= self.scale;
        }
        out
    }

    fn jacobian_one_sided(&self, y: &[f64]) -> DMatrix<f64> {
        let x: Vec<f64> = y.iter().map(|v| v * self.scale).collect();
        self.params.jacobian_one_sided(&x)
    }
}

/// States `x_0 … x_m` and the side taken before each step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub sides: Vec<Side>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory always holds x0")
    }
}

pub fn iterate<M: PiecewiseMap + ?Sized>(map: &M, x0: &[f64], m: usize) -> Result<Trajectory> {
    check_dim(map.dim(), x0)?;
    let mut states = Vec::with_capacity(m + 1);
    let mut sides = Vec::with_capacity(m);
    states.push(x0.to_vec());
    for step in 1..=m {
        let prev = &states[step - 1];
        sides.push(Side::of(prev[0]));
        let next = map.apply(prev);
        if diverged(&next) {
            return Err(Error::Diverged { step });
        }
        states.push(next);
    }
    Ok(Trajectory { states, sides })
}

#[inline]
pub(crate) fn diverged(x: &[f64]) -> bool {
    x.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_BOUND)
}

/// `sup_y ‖f̃(y) − g(y)‖₂` over the sample.
pub fn perturbation_gap(
    p: &NormalFormParams,
    base: &SimpleFormParams,
    sample: &[Vec<f64>],
) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if p.n != base.n {
        return Err(Error::DimensionMismatch { expected: base.n, got: p.n });
    }
    if Sign::of(p.mu) != Some(base.sigma) {
        return Err(Error::InvalidParameter(format!(
            "sgn(mu) must match sigma = {:?}, got mu = {}",
            base.sigma, p.mu
        )));
    }
    let scaled = ScaledMap::new(p)?;
    let mut gap = 0.0_f64;
    for y in sample {
        check_dim(p.n, y)?;
        let a = scaled.apply(y);
        let b = base.apply(y);
        let d = a.iter().zip(&b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
        gap = gap.max(d);
    }
    Ok(gap)
}

pub(crate) fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch { expected, got: x.len() });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tent() -> SkewTentParams {
        SkewTentParams::new(0.62, -3.0).unwrap()
    }

    fn quadratic_hot() -> NonlinearTermSpec {
        NonlinearTermSpec {
            left: vec![Monomial {
                component: 1,
                coefficient: -1.0,
                x_exponents: vec![2, 0],
                mu_exponent: 0,
            }],
            right: vec![],
        }
    }

    fn quadratic(mu: f64) -> NormalFormParams {
        NormalFormParams::two_dimensional(-0.02, -0.62, -0.02, 3.0, mu, quadratic_hot()).unwrap()
    }

    #[test]
    fn skew_tent_values() {
        let p = tent();
        assert_eq!(eval_skew_tent(0.0, &p), 1.0);
        assert_abs_diff_eq!(eval_skew_tent(1.0, &p), -2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(eval_skew_tent(-2.0, &p), -0.24, epsilon = 1e-15);
    }

    #[test]
    fn simple_form_values() {
        let p = SimpleFormParams::new(2, tent(), Sign::Plus).unwrap();
        assert_eq!(eval_simple_form(&[0.0, 0.0], &p).unwrap(), vec![1.0, 0.0]);
        assert_eq!(eval_simple_form(&[1.0, 0.0], &p).unwrap(), vec![1.0, -3.0]);
        assert!(matches!(
            eval_simple_form(&[1.0], &p),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));

        let minus = SimpleFormParams::new(2, tent(), Sign::Minus).unwrap();
        let y_star = [-1.0 / 0.38, -0.62 / 0.38];
        let img = eval_simple_form(&y_star, &minus).unwrap();
        assert_abs_diff_eq!(img[0], y_star[0], epsilon = 1e-12);
        assert_abs_diff_eq!(img[1], y_star[1], epsilon = 1e-12);
        assert_abs_diff_eq!(y_star[0], -2.63158, epsilon = 1e-5);
    }

    #[test]
    fn normal_form_matches_simple_form_at_companion_columns() {
        let base = SimpleFormParams::new(3, tent(), Sign::Plus).unwrap();
        let nf = NormalFormParams::from_simple(&base, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
            assert_eq!(eval_normal_form(&x, &nf).unwrap(), eval_simple_form(&x, &base).unwrap());
        }
    }

    #[test]
    fn normal_form_hand_evaluation() {
        let p = quadratic(0.008);
        let out = eval_normal_form(&[-0.01, 0.0], &p).unwrap();
        // (τ_L x_1 + x_2 + μ − x_1², −δ_L x_1)
        assert_abs_diff_eq!(out[0], 0.0081, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1], -0.0062, epsilon = 1e-15);
    }

    #[test]
    fn normal_form_origin_is_mu_e1() {
        let p = quadratic(0.008);
        assert_eq!(eval_normal_form(&[0.0, 0.0], &p).unwrap(), vec![0.008, 0.0]);
        let pure_mu = NonlinearTermSpec {
            left: vec![Monomial {
                component: 2,
                coefficient: 3.0,
                x_exponents: vec![0, 0],
                mu_exponent: 2,
            }],
            right: vec![],
        };
        let q = NormalFormParams::new(vec![0.0, 0.5], vec![0.0, -2.0], 0.1, pure_mu).unwrap();
        let out = eval_normal_form(&[0.0, 0.0], &q).unwrap();
        assert_abs_diff_eq!(out[0], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1], 0.03, epsilon = 1e-15);
    }

    #[test]
    fn hot_validation() {
        let bad_degree = NonlinearTermSpec {
            left: vec![Monomial {
                component: 1,
                coefficient: 1.0,
                x_exponents: vec![1, 0],
                mu_exponent: 0,
            }],
            right: vec![],
        };
        assert!(NormalFormParams::new(vec![0.0, 1.0], vec![0.0, 1.0], 0.1, bad_degree).is_err());
        let bad_component = NonlinearTermSpec {
            left: vec![],
            right: vec![Monomial {
                component: 3,
                coefficient: 1.0,
                x_exponents: vec![1, 1],
                mu_exponent: 0,
            }],
        };
        assert!(NormalFormParams::new(vec![0.0, 1.0], vec![0.0, 1.0], 0.1, bad_component).is_err());
    }

    #[test]
    fn scaled_map_plain_and_hot() {
        let base = SimpleFormParams::new(2, tent(), Sign::Plus).unwrap();
        let nf = NormalFormParams::from_simple(&base, 0.3);
        assert_eq!(eval_scaled_map(&[0.0, 0.0], &nf).unwrap(), vec![1.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let y: Vec<f64> = (0..2).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let a = eval_scaled_map(&y, &nf).unwrap();
            let b = eval_simple_form(&y, &base).unwrap();
            for (u, v) in a.iter().zip(&b) {
                assert_abs_diff_eq!(u, v, epsilon = 1e-13);
            }
        }

        // g(y) + (c_L − d_L) y_1 + E_L(|μ| y) / |μ| on the left piece
        let mu = 0.008;
        let p = quadratic(mu);
        let y = [-1.0, 0.0];
        let lhs = eval_scaled_map(&y, &p).unwrap();
        let g = eval_simple_form(&y, &base).unwrap();
        let d_l = [0.0, 0.62];
        let rhs: Vec<f64> = (0..2)
            .map(|j| {
                let e = if j == 0 { -(mu * y[0]).powi(2) / mu } else { 0.0 };
                g[j] + (p.c_l[j] - d_l[j]) * y[0] + e
            })
            .collect();
        assert_abs_diff_eq!(lhs[0], rhs[0], epsilon = 1e-12);
        assert_abs_diff_eq!(lhs[1], rhs[1], epsilon = 1e-12);

        assert!(eval_scaled_map(&y, &p.with_mu(0.0)).is_err());
    }

    #[test]
    fn jacobian_exact_cases() {
        let p = quadratic(0.008);
        assert_eq!(jacobian(&[0.0, 1.0], &p), Err(Error::OnSwitchingManifold));
        let plain = NormalFormParams::two_dimensional(-0.02, -0.62, -0.02, 3.0, 0.008, Default::default())
            .unwrap();
        let j = jacobian(&[-0.4, 0.2], &plain).unwrap();
        assert_eq!(j, DMatrix::from_row_slice(2, 2, &[-0.02, 1.0, 0.62, 0.0]));
        let j = jacobian(&[-0.4, 0.2], &p).unwrap();
        assert_abs_diff_eq!(j[(0, 0)], -0.02 + 0.8, epsilon = 1e-15);
        assert_eq!(j[(1, 0)], 0.62);
        let j = jacobian(&[0.4, 0.2], &p).unwrap();
        assert_eq!(j, DMatrix::from_row_slice(2, 2, &[-0.02, 1.0, -3.0, 0.0]));
    }

    #[test]
    fn iterate_skew_tent_orbit() {
        let traj = iterate(&tent(), &[0.0], 7).unwrap();
        let expected = [0.0, 1.0, -2.0, -0.24, 0.8512, -1.5536, 0.036768, 0.889696];
        assert_eq!(traj.len(), 8);
        for (s, e) in traj.states.iter().zip(expected) {
            assert_abs_diff_eq!(s[0], e, epsilon = 1e-12);
        }
        assert_eq!(traj.sides[0], Side::L);
        assert_eq!(traj.sides[1], Side::R);

        let single = iterate(&tent(), &[0.3], 0).unwrap();
        assert_eq!(single.states, vec![vec![0.3]]);
        assert!(single.sides.is_empty());
    }

    #[test]
    fn iterate_simple_form_first_coordinate_after_n_steps() {
        for n in 2..6 {
            let p = SimpleFormParams::new(n, tent(), Sign::Plus).unwrap();
            let traj = iterate(&p, &vec![0.0; n], 2 * n).unwrap();
            assert_abs_diff_eq!(traj.states[n][0], 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn iterate_reports_divergence() {
        let p = SkewTentParams::new(3.0, -3.0).unwrap();
        match iterate(&p, &[2.0], 100) {
            Err(Error::Diverged { step }) => assert!(step > 10 && step < 40),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn perturbation_gap_cases() {
        let base = SimpleFormParams::new(2, tent(), Sign::Plus).unwrap();
        let exact = NormalFormParams::from_simple(&base, 0.01);
        let sample = vec![vec![-1.0, 0.5], vec![0.7, -2.0], vec![0.0, 0.0]];
        assert_eq!(perturbation_gap(&exact, &base, &sample).unwrap(), 0.0);
        assert_eq!(perturbation_gap(&exact, &base, &[]), Err(Error::EmptySample));
        assert!(perturbation_gap(&exact.with_mu(-0.01), &base, &sample).is_err());

        // the hot-only gap is linear in mu; with c != d it tends to sup|(c − d) y_1| instead
        let hot = |mu: f64| NormalFormParams::new(vec![0.0, 0.62], vec![0.0, -3.0], mu, quadratic_hot()).unwrap();
        let gaps: Vec<f64> =
            [0.008, 0.004, 0.002].iter().map(|&mu| perturbation_gap(&hot(mu), &base, &sample).unwrap()).collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2] && gaps[2] > 0.0);
        assert_abs_diff_eq!(gaps[0], 4.0 * gaps[2], epsilon = 1e-15);
        let limit = perturbation_gap(&quadratic(1e-12), &base, &sample).unwrap();
        assert_abs_diff_eq!(limit, 0.02, epsilon = 1e-10);
        assert!(perturbation_gap(&quadratic(0.002), &base, &sample).unwrap() > 0.5 * limit);

        // homotopy c(s) = d + s (c − d) ends at the hot-only gap
        let hot_only = NormalFormParams::new(vec![0.0, 0.62], vec![0.0, -3.0], 0.008, quadratic_hot()).unwrap();
        let target = perturbation_gap(&hot_only, &base, &sample).unwrap();
        let full = quadratic(0.008);
        let mut prev = f64::NAN;
        for s in [1.0, 0.5, 0.25, 0.1, 0.01, 0.0] {
            let c_l: Vec<f64> = [0.0, 0.62].iter().zip(&full.c_l).map(|(d, c)| d + s * (c - d)).collect();
            let c_r: Vec<f64> = [0.0, -3.0].iter().zip(&full.c_r).map(|(d, c)| d + s * (c - d)).collect();
            let p = NormalFormParams::new(c_l, c_r, 0.008, quadratic_hot()).unwrap();
            let gap = perturbation_gap(&p, &base, &sample).unwrap();
            // |c − d| · max|y_1| bounds the distance to the hot-only gap
            assert!((gap - target).abs() <= s * 0.02 * 1.0 + 1e-15);
            prev = gap;
        }
        assert_abs_diff_eq!(prev, target, epsilon = 1e-15);
    }
}
