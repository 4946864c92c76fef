//! Truncated eigenbasis representation of the state space.
//!
//! A field is the coefficient vector of an element of `H_m = span{e_1..e_m}`
//! where `A e_k = -lambda_k e_k`. All operators used by the integrators are
//! diagonal in this basis except the Nemytskii coefficients, which go through
//! the sine collocation grid.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{check_len, Error, Result};

/// Eigenvalues `lambda_1 < ... < lambda_m` of `-A`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSpec {
    eigenvalues: Vec<f64>,
}

impl SpectrumSpec {
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::param("eigenvalues", "need at least one mode"));
        }
        if eigenvalues.iter().any(|l| !l.is_finite() || *l <= 0.0) {
            return Err(Error::param("eigenvalues", "must be finite and positive"));
        }
        if eigenvalues.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("eigenvalues", "must be strictly increasing"));
        }
        Ok(Self { eigenvalues })
    }

    /// Dirichlet Laplacian on (0, 1): `lambda_k = pi^2 k^2`.
    pub fn dirichlet_laplacian_1d(m: usize) -> Result<Self> {
        Self::new((1..=m).map(|k| PI * PI * (k * k) as f64).collect())
    }

    pub fn m(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn lambda1(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// The first `m_target` eigenvalues.
    pub fn truncated(&self, m_target: usize) -> Result<Self> {
        if m_target == 0 || m_target > self.m() {
            return Err(Error::param(
                "m_target",
                format!("must be in 1..={}, got {m_target}", self.m()),
            ));
        }
        Ok(Self {
            eigenvalues: self.eigenvalues[..m_target].to_vec(),
        })
    }
}

/// Element of `H_m` as eigenbasis coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    coeffs: Vec<f64>,
    spectrum: Arc<SpectrumSpec>,
}

impl SpectralField {
    pub fn new(spectrum: Arc<SpectrumSpec>, coeffs: Vec<f64>) -> Result<Self> {
        check_len(spectrum.m(), coeffs.len())?;
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::param("coeffs", "all coefficients must be finite"));
        }
        Ok(Self { coeffs, spectrum })
    }

    pub fn zeros(spectrum: Arc<SpectrumSpec>) -> Self {
        let m = spectrum.m();
        Self {
            coeffs: vec![0.0; m],
            spectrum,
        }
    }

    /// Basis vector `e_{index+1}`.
    pub fn unit(spectrum: Arc<SpectrumSpec>, index: usize) -> Result<Self> {
        if index >= spectrum.m() {
            return Err(Error::param("index", "outside the retained modes"));
        }
        let mut f = Self::zeros(spectrum);
        f.coeffs[index] = 1.0;
        Ok(f)
    }

    pub(crate) fn from_parts_unchecked(spectrum: Arc<SpectrumSpec>, coeffs: Vec<f64>) -> Self {
        debug_assert_eq!(spectrum.m(), coeffs.len());
        Self { coeffs, spectrum }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn spectrum(&self) -> &Arc<SpectrumSpec> {
        &self.spectrum
    }

    pub fn m(&self) -> usize {
        self.coeffs.len()
    }

    /// `|u|`, the H-norm.
    pub fn norm(&self) -> f64 {
        l2(&self.coeffs)
    }

    /// `||u||_s = (sum_k lambda_k^s u_k^2)^{1/2}`. Negative `s` is allowed.
    pub fn hs_norm(&self, s: f64) -> f64 {
        self.coeffs
            .iter()
            .zip(self.spectrum.eigenvalues())
            .map(|(u, l)| l.powf(s) * u * u)
            .sum::<f64>()
            .sqrt()
    }

    pub fn dot(&self, other: &Self) -> Result<f64> {
        self.same_spectrum(other)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum())
    }

    /// `e^{tA} u`.
    pub fn semigroup_apply(&self, t: f64) -> Result<Self> {
        if !(t >= 0.0) {
            return Err(Error::param("t", format!("must be nonnegative, got {t}")));
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(self.spectrum.eigenvalues())
            .map(|(u, l)| (-l * t).exp() * u)
            .collect();
        Ok(Self::from_parts_unchecked(self.spectrum.clone(), coeffs))
    }

    /// Orthogonal projection onto the first `m_target` modes; the result
    /// carries the truncated spectrum.
    pub fn project(&self, m_target: usize) -> Result<Self> {
        let spectrum = Arc::new(self.spectrum.truncated(m_target)?);
        Ok(Self::from_parts_unchecked(
            spectrum,
            self.coeffs[..m_target].to_vec(),
        ))
    }

    /// Zero-pads into a wider spectrum whose leading eigenvalues agree.
    pub fn embed(&self, spectrum: Arc<SpectrumSpec>) -> Result<Self> {
        let m = self.m();
        if spectrum.m() < m || spectrum.eigenvalues()[..m] != *self.spectrum.eigenvalues() {
            return Err(Error::param(
                "spectrum",
                "target spectrum must extend the field's spectrum",
            ));
        }
        let mut coeffs = vec![0.0; spectrum.m()];
        coeffs[..m].copy_from_slice(&self.coeffs);
        Ok(Self::from_parts_unchecked(spectrum, coeffs))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_spectrum(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Self::from_parts_unchecked(self.spectrum.clone(), coeffs))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_spectrum(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(Self::from_parts_unchecked(self.spectrum.clone(), coeffs))
    }

    pub fn scale(&self, c: f64) -> Self {
        let coeffs = self.coeffs.iter().map(|a| c * a).collect();
        Self::from_parts_unchecked(self.spectrum.clone(), coeffs)
    }

    fn same_spectrum(&self, other: &Self) -> Result<()> {
        check_len(self.m(), other.m())?;
        if !Arc::ptr_eq(&self.spectrum, &other.spectrum) && self.spectrum != other.spectrum {
            return Err(Error::param("spectrum", "fields live on different spectra"));
        }
        Ok(())
    }
}

/// Euclidean norm of a coefficient slice.
#[inline]
pub fn l2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Sine collocation grid `xi_j = j / (n + 1)`, `j = 1..n`, with the
/// evaluation matrix `sqrt(2) sin(k pi xi_j)` precomputed.
#[derive(Debug, Clone)]
pub struct SineGrid {
    m: usize,
    n_points: usize,
    // Row k holds sqrt(2) sin((k+1) pi xi_j) for j = 1..n.
    basis: Vec<f64>,
}

impl SineGrid {
    pub fn new(m: usize, n_points: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::param("m", "must be positive"));
        }
        if n_points < m {
            return Err(Error::param(
                "n_points",
                format!("grid of {n_points} points cannot resolve {m} modes"),
            ));
        }
        let h = 1.0 / (n_points + 1) as f64;
        let mut basis = Vec::with_capacity(m * n_points);
        for k in 1..=m {
            for j in 1..=n_points {
                basis.push(2f64.sqrt() * (k as f64 * PI * j as f64 * h).sin());
            }
        }
        Ok(Self { m, n_points, basis })
    }

    /// Default width `2m + 1`, wide enough that products of two band-`m`
    /// fields do not alias onto the retained modes.
    pub fn for_modes(m: usize) -> Result<Self> {
        Self::new(m, 2 * m + 1)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = 1.0 / (self.n_points + 1) as f64;
        (1..=self.n_points).map(|j| j as f64 * h).collect()
    }

    /// `u(xi_j) = sum_k u_k sqrt(2) sin(k pi xi_j)`.
    pub fn to_grid(&self, field: &SpectralField) -> Result<Vec<f64>> {
        check_len(self.m, field.m())?;
        let mut out = vec![0.0; self.n_points];
        self.to_grid_into(field.coeffs(), &mut out);
        Ok(out)
    }

    /// Discrete sine quadrature back onto the first `m` modes.
    pub fn from_grid(&self, values: &[f64], spectrum: Arc<SpectrumSpec>) -> Result<SpectralField> {
        check_len(self.n_points, values.len())?;
        check_len(self.m, spectrum.m())?;
        let mut coeffs = vec![0.0; self.m];
        self.project_into(values, &mut coeffs);
        SpectralField::new(spectrum, coeffs)
    }

    #[inline]
    pub(crate) fn to_grid_into(&self, coeffs: &[f64], out: &mut [f64]) {
        debug_assert_eq!(coeffs.len(), self.m);
        out.fill(0.0);
        for (row, &u) in self.basis.chunks_exact(self.n_points).zip(coeffs) {
            if u != 0.0 {
                for (o, b) in out.iter_mut().zip(row) {
                    *o += u * b;
                }
            }
        }
    }

    #[inline]
    pub(crate) fn project_into(&self, values: &[f64], out: &mut [f64]) {
        debug_assert_eq!(values.len(), self.n_points);
        let w = 1.0 / (self.n_points + 1) as f64;
        for (o, row) in out.iter_mut().zip(self.basis.chunks_exact(self.n_points)) {
            *o = w * row.iter().zip(values).map(|(b, v)| b * v).sum::<f64>();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(m: usize) -> Arc<SpectrumSpec> {
        Arc::new(SpectrumSpec::dirichlet_laplacian_1d(m).unwrap())
    }

    fn field(s: &Arc<SpectrumSpec>, c: &[f64]) -> SpectralField {
        SpectralField::new(s.clone(), c.to_vec()).unwrap()
    }

    #[test]
    fn spectrum_validation() {
        assert!(SpectrumSpec::new(vec![]).is_err());
        assert!(SpectrumSpec::new(vec![1.0, 1.0]).is_err());
        assert!(SpectrumSpec::new(vec![2.0, 1.0]).is_err());
        assert!(SpectrumSpec::new(vec![0.0, 1.0]).is_err());
        let s = SpectrumSpec::dirichlet_laplacian_1d(3).unwrap();
        assert!((s.eigenvalues()[2] - 9.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn field_rejects_nonfinite_and_wrong_width() {
        let s = spec(2);
        assert!(SpectralField::new(s.clone(), vec![f64::NAN, 0.0]).is_err());
        assert!(matches!(
            SpectralField::new(s, vec![1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn hs_norm_examples() {
        let s = spec(4);
        let e1 = SpectralField::unit(s.clone(), 0).unwrap();
        assert_eq!(e1.hs_norm(0.0), 1.0);
        assert!((e1.hs_norm(2.0) - PI * PI).abs() < 1e-12);
        let s2 = spec(2);
        let f = field(&s2, &[1.0, 1.0]);
        assert!((f.hs_norm(1.0) - PI * 5f64.sqrt()).abs() < 1e-12);
        // negative orders are well defined at finite m
        assert!((e1.hs_norm(-2.0) - 1.0 / (PI * PI)).abs() < 1e-14);
    }

    #[test]
    fn semigroup_examples() {
        let s = spec(3);
        let e1 = SpectralField::unit(s.clone(), 0).unwrap();
        let t = 0.07;
        let out = e1.semigroup_apply(t).unwrap();
        assert!((out.coeffs()[0] - (-PI * PI * t).exp()).abs() < 1e-15);
        assert_eq!(out.coeffs()[1], 0.0);
        let f = field(&s, &[0.3, -1.0, 2.0]);
        assert_eq!(f.semigroup_apply(0.0).unwrap(), f);
        assert!(f.semigroup_apply(-1e-9).is_err());
        assert!(f.semigroup_apply(f64::NAN).is_err());
    }

    #[test]
    fn project_examples() {
        let s = spec(6);
        let mut c = vec![0.0; 6];
        c[0] = 1.0;
        c[4] = 1.0;
        let f = field(&s, &c);
        let p = f.project(3).unwrap();
        assert_eq!(p.coeffs(), &[1.0, 0.0, 0.0]);
        assert_eq!(p.spectrum().m(), 3);
        assert_eq!(f.project(6).unwrap(), f);
        assert!(f.project(7).is_err());
        assert!(f.project(0).is_err());
    }

    #[test]
    fn embed_roundtrip() {
        let s = spec(6);
        let f = field(&s, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let p = f.project(2).unwrap();
        let e = p.embed(s.clone()).unwrap();
        assert_eq!(e.coeffs(), &[1.0, 2.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(f.embed(spec(3)).is_err());
    }

    #[test]
    fn grid_examples() {
        let s = spec(4);
        let grid = SineGrid::new(4, 9).unwrap(); // xi_5 = 0.5
        let e1 = SpectralField::unit(s.clone(), 0).unwrap();
        let g = grid.to_grid(&e1).unwrap();
        assert!((g[4] - 2f64.sqrt()).abs() < 1e-14);

        let samples: Vec<f64> = grid.nodes().iter().map(|x| (2.0 * PI * x).sin()).collect();
        let f = grid.from_grid(&samples, s.clone()).unwrap();
        let want = [0.0, 1.0 / 2f64.sqrt(), 0.0, 0.0];
        for (a, b) in f.coeffs().iter().zip(want) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn grid_dimension_errors() {
        assert!(SineGrid::new(5, 4).is_err());
        let grid = SineGrid::for_modes(3).unwrap();
        assert_eq!(grid.n_points(), 7);
        assert!(grid.to_grid(&SpectralField::zeros(spec(4))).is_err());
        assert!(grid.from_grid(&[0.0; 6], spec(3)).is_err());
        assert!(grid.from_grid(&[0.0; 7], spec(4)).is_err());
    }

    fn coeff_vec(m: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-10.0f64..10.0, m)
    }

    proptest! {
        #[test]
        fn grid_round_trip_is_identity(c in coeff_vec(12), extra in 0usize..20) {
            let s = spec(12);
            let grid = SineGrid::new(12, 12 + extra).unwrap();
            let f = field(&s, &c);
            let back = grid.from_grid(&grid.to_grid(&f).unwrap(), s.clone()).unwrap();
            let err = back.sub(&f).unwrap().norm();
            prop_assert!(err <= 1e-10 * f.norm().max(1.0));
        }

        #[test]
        fn parseval(c in coeff_vec(9)) {
            let s = spec(9);
            let f = field(&s, &c);
            let direct: f64 = c.iter().map(|u| u * u).sum();
            prop_assert!((f.norm().powi(2) - direct).abs() <= 1e-12 * direct.max(1.0));
            prop_assert!((f.hs_norm(0.0) - f.norm()).abs() <= 1e-12 * f.norm().max(1.0));
        }

        #[test]
        fn semigroup_property(c in coeff_vec(8), s1 in 0.0f64..0.3, t1 in 0.0f64..0.3) {
            let s = spec(8);
            let f = field(&s, &c);
            let two = f.semigroup_apply(s1).unwrap().semigroup_apply(t1).unwrap();
            let one = f.semigroup_apply(s1 + t1).unwrap();
            for (a, b) in two.coeffs().iter().zip(one.coeffs()) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300) + 1e-300);
            }
        }

        #[test]
        fn projection_contracts_and_error_is_monotone(c in coeff_vec(10)) {
            let s = spec(10);
            let f = field(&s, &c);
            let mut prev = f64::INFINITY;
            for j in 1..=10 {
                let p = f.project(j).unwrap();
                prop_assert!(p.norm() <= f.norm() + 1e-12);
                let err = p.embed(s.clone()).unwrap().sub(&f).unwrap().norm();
                prop_assert!(err <= prev + 1e-12);
                prev = err;
            }
            prop_assert!(prev <= 1e-15);
        }
    }

    // Smoothing estimate: ||e^{tA} f||_{s2} t^{(s2-s1)/2} e^{lambda_1 t/2} / ||f||_{s1}
    // stays bounded over t in [1e-3, 10]. The bound is computed by brute force
    // over the worst single mode (the ratio is a convex combination of
    // per-mode ratios), which dominates random fields.
    #[test]
    fn smoothing_ratio_bounded() {
        let s = spec(64);
        let lambda1 = s.lambda1();
        let mut rng = crate::rng::SeededStream::new(11).rng();
        for &(s1, s2) in &[(0.0, 1.0), (0.0, 2.0), (0.5, 1.5), (1.0, 1.0)] {
            let ts: Vec<f64> = (0..=80).map(|i| 1e-3 * 10f64.powf(i as f64 / 20.0)).collect();
            let mode_bound = ts
                .iter()
                .flat_map(|&t| {
                    s.eigenvalues().iter().map(move |&l| {
                        l.powf((s2 - s1) / 2.0)
                            * (-l * t).exp()
                            * t.powf((s2 - s1) / 2.0)
                            * (lambda1 * t / 2.0).exp()
                    })
                })
                .fold(0.0, f64::max);
            // analytic sup of z^a e^{-z/2} over z > 0 is (2a/e)^a, plus the e^{-lambda t/2} slack
            let a = (s2 - s1) / 2.0;
            let analytic: f64 = if a == 0.0 { 1.0 } else { (2.0 * a / std::f64::consts::E).powf(a) };
            assert!(mode_bound <= analytic * (1.0 + 1e-9), "{mode_bound} vs {analytic}");
            for _ in 0..50 {
                let c: Vec<f64> = (0..64).map(|_| rng.next_normal() / (1.0 + rng.next_open01() * 8.0)).collect();
                let f = field(&s, &c);
                for &t in &ts {
                    let r = f.semigroup_apply(t).unwrap().hs_norm(s2)
                        * t.powf(a)
                        * (lambda1 * t / 2.0).exp()
                        / f.hs_norm(s1);
                    assert!(r <= mode_bound * (1.0 + 1e-9));
                }
            }
        }
    }

    // |e^{tA} f - f| <= C t^{sigma/2} ||f||_sigma with C calibrated once.
    #[test]
    fn continuity_at_zero() {
        let s = spec(32);
        let mut rng = crate::rng::SeededStream::new(12).rng();
        let ts: Vec<f64> = (0..=60).map(|i| 1e-4 * 10f64.powf(i as f64 / 15.0)).collect();
        for &sigma in &[0.5, 1.0, 1.5, 2.0] {
            // per-mode worst case: (1 - e^{-z}) / z^{sigma/2}, z = lambda t
            let calibrated = ts
                .iter()
                .flat_map(|&t| {
                    s.eigenvalues()
                        .iter()
                        .map(move |&l| (1.0 - (-l * t).exp()) / (l * t).powf(sigma / 2.0))
                })
                .fold(0.0, f64::max);
            assert!(calibrated <= 1.0 + 1e-12);
            for _ in 0..50 {
                let c: Vec<f64> = (0..32).map(|_| rng.next_normal()).collect();
                let f = field(&s, &c);
                for &t in &ts {
                    let lhs = f.semigroup_apply(t).unwrap().sub(&f).unwrap().norm();
                    assert!(lhs <= calibrated * t.powf(sigma / 2.0) * f.hs_norm(sigma) * (1.0 + 1e-9));
                }
            }
        }
    }
}
