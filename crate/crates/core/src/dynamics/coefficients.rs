use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::rng::SeededStream;
use crate::spectral::{l2, SineGrid, SpectrumSpec};

/// Drift coefficients `B` (slow) and `F` (fast) of the slow-fast system,
/// acting on coefficient slices of width `m`.
pub trait Coefficients: Send + Sync + fmt::Debug {
    fn m(&self) -> usize;

    /// Declared Lipschitz constant `C` of `B` in `(x, y)` and of `F` in `x`.
    fn lip_b(&self) -> f64;

    /// Declared Lipschitz constant `L_F` of `F` in `y`.
    fn lip_f_y(&self) -> f64;

    /// `sup |B|` when the slow drift is bounded.
    fn slow_bound(&self) -> Option<f64> {
        None
    }

    /// Writes `B(x, y)` and `F(x, y)`. `scratch` is a reusable work buffer.
    fn eval(&self, x: &[f64], y: &[f64], b_out: &mut [f64], f_out: &mut [f64], scratch: &mut Vec<f64>);

    fn slow_drift(&self, x: &[f64], y: &[f64], out: &mut [f64], scratch: &mut Vec<f64>) {
        let mut f = vec![0.0; self.m()];
        self.eval(x, y, out, &mut f, scratch);
    }

    fn fast_drift(&self, x: &[f64], y: &[f64], out: &mut [f64], scratch: &mut Vec<f64>) {
        let mut b = vec![0.0; self.m()];
        self.eval(x, y, &mut b, out, scratch);
    }

    /// Closed-form averaged drift, if one is known.
    fn analytic_bbar(&self, _spectrum: &SpectrumSpec, _x: &[f64], _out: &mut [f64]) -> bool {
        false
    }

    fn has_analytic_bbar(&self) -> bool {
        false
    }

    /// The same coefficients on the first `m` modes.
    fn truncated(&self, m: usize) -> Result<Arc<dyn Coefficients>>;
}

/// Mode-wise linear benchmark:
/// `B(x, y)_k = b0 x_k + b1 y_k`, `F(x, y)_k = a x_k - b y_k`.
///
/// The frozen equation is linear with symmetric noise, so the invariant mean
/// of mode `k` solves `0 = -(lambda_k + b) m_k + a x_k` and
/// `Bbar(x)_k = b0 x_k + b1 a x_k / (lambda_k + b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearBenchmark {
    pub m: usize,
    pub a: f64,
    pub b: f64,
    pub b0: f64,
    pub b1: f64,
}

impl LinearBenchmark {
    pub fn new(m: usize, a: f64, b: f64, b0: f64, b1: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::param("m", "must be positive"));
        }
        if !(b >= 0.0) || ![a, b, b0, b1].iter().all(|v| v.is_finite()) {
            return Err(Error::param("b", "self-damping must be finite and nonnegative"));
        }
        Ok(Self { m, a, b, b0, b1 })
    }

    pub fn with_defaults(m: usize) -> Self {
        Self {
            m,
            a: 1.0,
            b: 1.0,
            b0: 0.5,
            b1: 1.0,
        }
    }

    /// Invariant mean of the frozen equation at `x`, mode by mode.
    pub fn frozen_mean(&self, spectrum: &SpectrumSpec, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(spectrum.eigenvalues())
            .map(|(xk, l)| self.a * xk / (l + self.b))
            .collect()
    }
}

impl Coefficients for LinearBenchmark {
    fn m(&self) -> usize {
        self.m
    }

    fn lip_b(&self) -> f64 {
        self.b0.abs().max(self.b1.abs()).max(self.a.abs())
    }

    fn lip_f_y(&self) -> f64 {
        self.b
    }

    #[inline]
    fn eval(&self, x: &[f64], y: &[f64], b_out: &mut [f64], f_out: &mut [f64], _: &mut Vec<f64>) {
        for k in 0..x.len() {
            b_out[k] = self.b0 * x[k] + self.b1 * y[k];
            f_out[k] = self.a * x[k] - self.b * y[k];
        }
    }

    fn slow_drift(&self, x: &[f64], y: &[f64], out: &mut [f64], _: &mut Vec<f64>) {
        for k in 0..x.len() {
            out[k] = self.b0 * x[k] + self.b1 * y[k];
        }
    }

    fn fast_drift(&self, x: &[f64], y: &[f64], out: &mut [f64], _: &mut Vec<f64>) {
        for k in 0..x.len() {
            out[k] = self.a * x[k] - self.b * y[k];
        }
    }

    fn analytic_bbar(&self, spectrum: &SpectrumSpec, x: &[f64], out: &mut [f64]) -> bool {
        for ((o, xk), l) in out.iter_mut().zip(x).zip(spectrum.eigenvalues()) {
            *o = self.b0 * xk + self.b1 * self.a * xk / (l + self.b);
        }
        true
    }

    fn has_analytic_bbar(&self) -> bool {
        true
    }

    fn truncated(&self, m: usize) -> Result<Arc<dyn Coefficients>> {
        Ok(Arc::new(Self { m, ..*self }))
    }
}

/// A smooth scalar map `R x R -> R` with declared derivative bounds.
#[derive(Clone)]
pub struct PointMap {
    pub name: String,
    f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    /// `sup |f|`, if finite.
    pub sup: Option<f64>,
    /// `sup |d f / d u|`
    pub du: f64,
    /// `sup |d f / d v|`
    pub dv: f64,
}

impl PointMap {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        sup: Option<f64>,
        du: f64,
        dv: f64,
    ) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
            sup,
            du,
            dv,
        }
    }

    #[inline]
    pub fn apply(&self, u: f64, v: f64) -> f64 {
        (self.f)(u, v)
    }
}

impl fmt::Debug for PointMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PointMap")
            .field("name", &self.name)
            .field("sup", &self.sup)
            .field("du", &self.du)
            .field("dv", &self.dv)
            .finish()
    }
}

/// Pointwise coefficients `B(x, y)(xi) = b(x(xi), y(xi))` on the Dirichlet
/// interval, evaluated by sine collocation and projected back onto `H_m`.
#[derive(Debug, Clone)]
pub struct NemytskiiCoefficients {
    pub b_point: PointMap,
    pub f_point: PointMap,
    grid: Arc<SineGrid>,
    /// Grid width override; `None` means `2m + 1`.
    n_points: Option<usize>,
}

impl NemytskiiCoefficients {
    pub fn new(m: usize, b_point: PointMap, f_point: PointMap, n_points: Option<usize>) -> Result<Self> {
        let grid = match n_points {
            Some(n) => SineGrid::new(m, n)?,
            None => SineGrid::for_modes(m)?,
        };
        Ok(Self {
            b_point,
            f_point,
            grid: Arc::new(grid),
            n_points,
        })
    }

    /// `b(u, v) = tanh(u + v)`, `f(u, v) = (sin u - tanh v) / 2`. Both
    /// bounded with bounded derivatives of all orders; `b` is odd and
    /// `f(0, .)` is odd, so the invariant law at `x = 0` is symmetric and
    /// `Bbar(0) = 0`.
    pub fn default_benchmark(m: usize) -> Result<Self> {
        Self::new(
            m,
            PointMap::new("tanh(u+v)", |u, v| (u + v).tanh(), Some(1.0), 1.0, 1.0),
            PointMap::new("(sin(u)-tanh(v))/2", |u, v| 0.5 * (u.sin() - v.tanh()), Some(1.0), 0.5, 0.5),
            None,
        )
    }

    pub fn grid(&self) -> &SineGrid {
        &self.grid
    }
}

impl Coefficients for NemytskiiCoefficients {
    fn m(&self) -> usize {
        self.grid.m()
    }

    fn lip_b(&self) -> f64 {
        self.b_point.du.max(self.b_point.dv).max(self.f_point.du)
    }

    fn lip_f_y(&self) -> f64 {
        self.f_point.dv
    }

    fn slow_bound(&self) -> Option<f64> {
        self.b_point.sup
    }

    fn eval(&self, x: &[f64], y: &[f64], b_out: &mut [f64], f_out: &mut [f64], scratch: &mut Vec<f64>) {
        let n = self.grid.n_points();
        scratch.resize(3 * n, 0.0);
        let (xg, rest) = scratch.split_at_mut(n);
        let (yg, vg) = rest.split_at_mut(n);
        self.grid.to_grid_into(x, xg);
        self.grid.to_grid_into(y, yg);
        for j in 0..n {
            vg[j] = self.b_point.apply(xg[j], yg[j]);
        }
        self.grid.project_into(vg, b_out);
        for j in 0..n {
            vg[j] = self.f_point.apply(xg[j], yg[j]);
        }
        self.grid.project_into(vg, f_out);
    }

    fn slow_drift(&self, x: &[f64], y: &[f64], out: &mut [f64], scratch: &mut Vec<f64>) {
        self.pointwise(&self.b_point, x, y, out, scratch);
    }

    fn fast_drift(&self, x: &[f64], y: &[f64], out: &mut [f64], scratch: &mut Vec<f64>) {
        self.pointwise(&self.f_point, x, y, out, scratch);
    }

    fn truncated(&self, m: usize) -> Result<Arc<dyn Coefficients>> {
        Ok(Arc::new(Self::new(
            m,
            self.b_point.clone(),
            self.f_point.clone(),
            self.n_points,
        )?))
    }
}

impl NemytskiiCoefficients {
    fn pointwise(&self, g: &PointMap, x: &[f64], y: &[f64], out: &mut [f64], scratch: &mut Vec<f64>) {
        let n = self.grid.n_points();
        scratch.resize(3 * n, 0.0);
        let (xg, rest) = scratch.split_at_mut(n);
        let (yg, vg) = rest.split_at_mut(n);
        self.grid.to_grid_into(x, xg);
        self.grid.to_grid_into(y, yg);
        for j in 0..n {
            vg[j] = g.apply(xg[j], yg[j]);
        }
        self.grid.project_into(vg, out);
    }
}

/// Largest observed ratios of sampled difference quotients to the declared
/// constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzCheck {
    pub max_ratio_b: f64,
    pub max_ratio_f_x: f64,
    pub max_ratio_f_y: f64,
    pub trials: usize,
}

impl LipschitzCheck {
    /// No quotient exceeded its declared constant by more than 1%.
    pub fn passes(&self) -> bool {
        self.max_ratio_b <= 1.01 && self.max_ratio_f_x <= 1.01 && self.max_ratio_f_y <= 1.01
    }
}

/// Probabilistic Lipschitz spot check on random pairs of nearby and distant
/// points.
pub fn spot_check_lipschitz(coeffs: &dyn Coefficients, seed: u64, trials: usize) -> LipschitzCheck {
    let m = coeffs.m();
    let mut rng = SeededStream::new(seed).rng();
    let mut scratch = Vec::new();
    let (mut rb, mut rfx, mut rfy) = (0.0f64, 0.0f64, 0.0f64);
    let draw = |scale: f64, rng: &mut crate::rng::StreamRng| -> Vec<f64> {
        (0..m).map(|_| scale * rng.next_normal()).collect()
    };
    let (mut b1, mut b2, mut f1, mut f2) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    for t in 0..trials {
        let spread = [1e-3, 0.1, 1.0, 5.0][t % 4];
        let x1 = draw(2.0, &mut rng);
        let y1 = draw(2.0, &mut rng);
        let dx = draw(spread, &mut rng);
        let dy = draw(spread, &mut rng);
        let x2: Vec<f64> = x1.iter().zip(&dx).map(|(a, d)| a + d).collect();
        let y2: Vec<f64> = y1.iter().zip(&dy).map(|(a, d)| a + d).collect();
        let (ndx, ndy) = (l2(&dx), l2(&dy));

        coeffs.eval(&x1, &y1, &mut b1, &mut f1, &mut scratch);
        coeffs.eval(&x2, &y2, &mut b2, &mut f2, &mut scratch);
        let db = l2(&b1.iter().zip(&b2).map(|(a, b)| a - b).collect::<Vec<_>>());
        rb = rb.max(db / (coeffs.lip_b() * (ndx + ndy)));

        // F in y alone
        coeffs.eval(&x1, &y2, &mut b2, &mut f2, &mut scratch);
        let dfy = l2(&f1.iter().zip(&f2).map(|(a, b)| a - b).collect::<Vec<_>>());
        if coeffs.lip_f_y() > 0.0 {
            rfy = rfy.max(dfy / (coeffs.lip_f_y() * ndy));
        } else {
            rfy = rfy.max(if dfy > 0.0 { f64::INFINITY } else { 0.0 });
        }
        // F in x alone
        coeffs.eval(&x2, &y1, &mut b2, &mut f2, &mut scratch);
        let dfx = l2(&f1.iter().zip(&f2).map(|(a, b)| a - b).collect::<Vec<_>>());
        rfx = rfx.max(dfx / (coeffs.lip_b() * ndx));
    }
    LipschitzCheck {
        max_ratio_b: rb,
        max_ratio_f_x: rfx,
        max_ratio_f_y: rfy,
        trials,
    }
}
