//! The discretized norm ‖f‖² = Σ_{n=1}^N 2^{-n}·(circle mean of |f(r_n
//! e^{it})|²), its exact monomial norms c_k, the truncated reproducing
//! kernel, and checks of the diagonal and pointwise growth estimates.

use crate::error::{Error, Result};
use crate::weights::RadiiSchedule;
use num_complex::Complex64;
use serde::Serialize;

/// Truncated kernel model: c_k = Σ_{n=1}^N 2^{-n} r_n^{2k}, k = 0..=D.
#[derive(Debug, Clone)]
pub struct KernelModel {
    schedule: RadiiSchedule,
    coeffs: Vec<f64>,
    /// 2 ln r_N, kept for the truncation tail bound.
    log_rn2: f64,
}

/// Kernel value together with its truncation-tail bound.
#[derive(Debug, Clone, Copy)]
pub struct KernelEval {
    pub value: Complex64,
    pub tail_bound: f64,
}

/// c_k via r_n^{2k} = exp(2k·ln(1-g_n)); the last-term lower bound
/// c_k ≥ 2^{-N} r_N^{2k} powers the kernel tail estimate.
pub fn monomial_norms(s: &RadiiSchedule, degree: usize) -> Result<KernelModel> {
    let n_max = s.n_max();
    if n_max < 1 {
        return Err(Error::InvalidParameter("schedule needs N ≥ 1".into()));
    }
    // 2 ln r_n through the gap; r_0 = 0 contributes nothing (n starts at 1).
    let log_r2: Vec<f64> = (1..=n_max).map(|n| 2.0 * (-s.gap(n)).ln_1p()).collect();
    let mut coeffs = Vec::with_capacity(degree + 1);
    for k in 0..=degree {
        let mut c = 0.0;
        // Fixed ascending order for determinism; terms are positive.
        for n in 1..=n_max {
            c += 0.5f64.powi(n as i32) * (k as f64 * log_r2[n - 1]).exp();
        }
        if c <= 0.0 {
            return Err(Error::Guard(format!("c_{k} underflowed to zero")));
        }
        coeffs.push(c);
    }
    Ok(KernelModel {
        schedule: s.clone(),
        coeffs,
        log_rn2: log_r2[n_max - 1],
    })
}

impl KernelModel {
    pub fn schedule(&self) -> &RadiiSchedule {
        &self.schedule
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs[k]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// ‖Σ a_k z^k‖² = Σ |a_k|² c_k (monomials are orthogonal on circles).
    pub fn norm_poly(&self, a: &[Complex64]) -> Result<f64> {
        if a.len() > self.coeffs.len() {
            return Err(Error::InvalidParameter(format!(
                "polynomial degree {} exceeds model degree {}",
                a.len() - 1,
                self.degree()
            )));
        }
        Ok(a.iter()
            .zip(&self.coeffs)
            .map(|(ak, ck)| ak.norm_sqr() * ck)
            .sum())
    }

    /// Σ_{k=0}^D (zζ̄)^k / c_k, with the tail Σ_{k>D} (|z||ζ|)^k/c_k bounded
    /// through c_k ≥ 2^{-N} r_N^{2k}.
    pub fn eval(&self, z: Complex64, zeta: Complex64) -> KernelEval {
        let q = z * zeta.conj();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut pw = Complex64::new(1.0, 0.0);
        for ck in &self.coeffs {
            acc += pw / ck;
            pw *= q;
        }
        KernelEval {
            value: acc,
            tail_bound: self.tail_bound(q.norm()),
        }
    }

    /// Upper bound on Σ_{k>D} q^k / c_k for q = |z||ζ|.
    pub fn tail_bound(&self, q: f64) -> f64 {
        self.tail_bound_for_degree(q, self.degree())
    }

    /// Same bound truncated at an arbitrary degree d ≤ D.
    pub fn tail_bound_for_degree(&self, q: f64, d: usize) -> f64 {
        if q == 0.0 {
            return 0.0;
        }
        let n = self.schedule.n_max() as f64;
        let log_x = q.ln() - self.log_rn2;
        if log_x >= 0.0 {
            return f64::INFINITY;
        }
        let x = log_x.exp();
        (n * std::f64::consts::LN_2 + (d as f64 + 1.0) * log_x - (-x).ln_1p()).exp()
    }

    /// Kernel evaluation that errors when the tail bound exceeds
    /// `rel_tol · |K|`.
    pub fn eval_checked(&self, z: Complex64, zeta: Complex64, rel_tol: f64) -> Result<Complex64> {
        let ev = self.eval(z, zeta);
        if ev.tail_bound > rel_tol * ev.value.norm().max(1.0 / self.coeffs[0]) {
            return Err(Error::KernelTail {
                bound: ev.tail_bound,
                tol: rel_tol,
            });
        }
        Ok(ev.value)
    }

    /// Feature vector e_k(z) = z^k / √c_k, so K(z,ζ) = ⟨e(z), e(ζ)⟩.
    pub fn feature_vector(&self, z: Complex64) -> Vec<Complex64> {
        let mut v = Vec::with_capacity(self.coeffs.len());
        let mut pw = Complex64::new(1.0, 0.0);
        for ck in &self.coeffs {
            v.push(pw / ck.sqrt());
            pw *= z;
        }
        v
    }

    /// ratio(z) = K(z,z)·(1−|z|)·2^{−n(z)}, the two-sided statistic for the
    /// diagonal growth estimate.
    pub fn diag_ratio(&self, z: Complex64) -> Result<f64> {
        let (n, overflow) = self.schedule.annulus_index(z)?;
        if overflow {
            return Err(Error::Guard(format!(
                "diagonal ratio undefined beyond r_N (|z| = {})",
                z.norm()
            )));
        }
        let ev = self.eval(z, z);
        if ev.tail_bound > 1e-6 * ev.value.re {
            return Err(Error::KernelTail {
                bound: ev.tail_bound,
                tol: 1e-6,
            });
        }
        Ok(ev.value.re * (1.0 - z.norm()) * 0.5f64.powi(n as i32))
    }

    /// Extremes of diag_ratio over a grid of points.
    pub fn diag_ratio_stats(&self, grid: &[Complex64]) -> Result<RatioStats> {
        if grid.is_empty() {
            return Err(Error::Empty("ratio grid".into()));
        }
        let mut min_ratio = f64::INFINITY;
        let mut max_ratio = f64::NEG_INFINITY;
        for &z in grid {
            let r = self.diag_ratio(z)?;
            min_ratio = min_ratio.min(r);
            max_ratio = max_ratio.max(r);
        }
        Ok(RatioStats { min_ratio, max_ratio })
    }

    /// max over samples of |f(z)|²·(1−|z|)·2^{−n(z)} / ‖f‖²; bounded above
    /// by diag_ratio(z) via Cauchy–Schwarz, with equality for the kernel
    /// direction.
    pub fn pointwise_bound_check(&self, samples: &[(Vec<Complex64>, Complex64)]) -> Result<f64> {
        let mut worst = 0.0f64;
        for (a, z) in samples {
            let norm2 = self.norm_poly(a)?;
            if norm2 <= 0.0 {
                return Err(Error::InvalidParameter("zero-norm polynomial".into()));
            }
            let (n, overflow) = self.schedule.annulus_index(*z)?;
            if overflow {
                return Err(Error::Guard("sample beyond r_N".into()));
            }
            let fz = eval_poly(a, *z);
            let stat = fz.norm_sqr() * (1.0 - z.norm()) * 0.5f64.powi(n as i32) / norm2;
            worst = worst.max(stat);
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RatioStats {
    pub min_ratio: f64,
    pub max_ratio: f64,
}

pub fn eval_poly(a: &[Complex64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &ak in a.iter().rev() {
        acc = acc * z + ak;
    }
    acc
}

/// Σ_{n=1}^N 2^{-n} × trapezoid circle mean of |f(r_n e^{it})|².
pub fn norm_fn_quadrature<F>(s: &RadiiSchedule, f: F, circle_points: usize) -> Result<f64>
where
    F: Fn(Complex64) -> Complex64,
{
    if circle_points < 4 {
        return Err(Error::InvalidParameter("need ≥ 4 circle points".into()));
    }
    let mut total = 0.0;
    for n in 1..=s.n_max() {
        let r = s.radius(n);
        let mut mean = 0.0;
        for i in 0..circle_points {
            let t = 2.0 * std::f64::consts::PI * i as f64 / circle_points as f64;
            let v = f(Complex64::from_polar(r, t));
            if !v.is_finite() {
                return Err(Error::Guard(format!("non-finite evaluation on circle n = {n}")));
            }
            mean += v.norm_sqr();
        }
        total += 0.5f64.powi(n as i32) * mean / circle_points as f64;
    }
    Ok(total)
}

/// Truncated power series of (1 − ζ̄ z)^{-γ}: a_k = a_{k-1}·ζ̄·(γ+k−1)/k.
pub fn binomial_test_function(zeta: Complex64, gamma: f64, degree: usize) -> Vec<Complex64> {
    let zc = zeta.conj();
    let mut a = Vec::with_capacity(degree + 1);
    a.push(Complex64::new(1.0, 0.0));
    for k in 1..=degree {
        let prev = a[k - 1];
        a.push(prev * zc * ((gamma + k as f64 - 1.0) / k as f64));
    }
    a
}

/// ‖f_ζ‖²·(1−|ζ|)^{2γ−1}·2^{n(ζ)} for f_ζ = (1−ζ̄z)^{-γ}; stays within
/// two-sided bounds in ζ when γ is large enough.
pub fn test_function_stat(km: &KernelModel, zeta: Complex64, gamma: f64) -> Result<f64> {
    let (n, overflow) = km.schedule().annulus_index(zeta)?;
    if overflow {
        return Err(Error::Guard("test point beyond r_N".into()));
    }
    let a = binomial_test_function(zeta, gamma, km.degree());
    let norm2 = km.norm_poly(&a)?;
    Ok(norm2 * (1.0 - zeta.norm()).powf(2.0 * gamma - 1.0) * 2f64.powi(n as i32))
}

/// Radial test grid: `angular` points on each circle r_n (1 ≤ n ≤ n_cap)
/// and on each log-gap-midpoint circle between r_n and r_{n+1}.
pub fn radial_grid(s: &RadiiSchedule, n_cap: usize, angular: usize) -> Result<Vec<Complex64>> {
    if n_cap > s.n_max() {
        return Err(Error::InvalidParameter(format!(
            "grid cap {n_cap} exceeds schedule N = {}",
            s.n_max()
        )));
    }
    if angular < 1 {
        return Err(Error::InvalidParameter("need ≥ 1 angular point".into()));
    }
    let mut gaps = Vec::new();
    for n in 0..=n_cap {
        gaps.push(s.gap(n));
        if n < n_cap {
            gaps.push((s.gap(n).ln().mul_add(0.5, s.gap(n + 1).ln() * 0.5)).exp());
        }
    }
    let mut pts = Vec::with_capacity(gaps.len() * angular);
    for (i, g) in gaps.iter().enumerate() {
        let phase = i as f64 * crate::GOLDEN_ANGLE;
        for j in 0..angular {
            let t = phase + 2.0 * std::f64::consts::PI * j as f64 / angular as f64;
            pts.push(Complex64::from_polar(1.0 - g, t));
        }
    }
    Ok(pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::Weight;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn constant_model(n: usize, d: usize) -> KernelModel {
        monomial_norms(&RadiiSchedule::dyadic(n), d).unwrap()
    }

    #[test]
    fn c0_partial_sum() {
        let km = constant_model(20, 3);
        assert!((km.coeff(0) - (1.0 - 0.5f64.powi(20))).abs() < 1e-15);
    }

    #[test]
    fn c1_geometric_oracle() {
        // Σ 2^{-n}(1-2^{-n})² = 1 - 2·(2/3) + 1/7·... = 10/21 as N → ∞.
        let km = constant_model(30, 3);
        assert!((km.coeff(1) - 10.0 / 21.0).abs() < 1e-8);
    }

    #[test]
    fn coeffs_decreasing() {
        let km = constant_model(12, 50);
        for k in 1..=50 {
            assert!(km.coeff(k) < km.coeff(k - 1), "k = {k}");
        }
        // last-term lower bound
        let rn = 1.0 - 0.5f64.powi(12);
        for k in 0..=50usize {
            assert!(km.coeff(k) >= 0.5f64.powi(12) * rn.powi(2 * k as i32));
        }
    }

    #[test]
    fn norm_poly_monomials() {
        let km = constant_model(30, 4);
        let one = [c(1.0, 0.0)];
        assert!((km.norm_poly(&one).unwrap() - km.coeff(0)).abs() < 1e-15);
        let z1 = [c(0.0, 0.0), c(1.0, 0.0)];
        assert!((km.norm_poly(&z1).unwrap() - km.coeff(1)).abs() < 1e-15);
        let both = [c(1.0, 0.0), c(1.0, 0.0)];
        let expect = 1.0 + 10.0 / 21.0;
        assert!((km.norm_poly(&both).unwrap() - expect).abs() < 1e-7);
    }

    #[test]
    fn norm_degree_overflow() {
        let km = constant_model(8, 2);
        assert!(km.norm_poly(&[c(1.0, 0.0); 4]).is_err());
    }

    #[test]
    fn quadrature_matches_poly() {
        let s = RadiiSchedule::dyadic(8);
        let km = monomial_norms(&s, 3).unwrap();
        let q = norm_fn_quadrature(&s, |_| c(1.0, 0.0), 16).unwrap();
        assert!((q - km.coeff(0)).abs() < 1e-14);
        let q3 = norm_fn_quadrature(&s, |z| z * z * z, 64).unwrap();
        assert!((q3 - km.coeff(3)).abs() < 1e-14);
    }

    #[test]
    fn quadrature_binomial_function() {
        let s = RadiiSchedule::dyadic(12);
        let km = monomial_norms(&s, 800).unwrap();
        let zeta = c(0.9, 0.0);
        let a = binomial_test_function(zeta, 3.0, 800);
        let series = km.norm_poly(&a).unwrap();
        let f = |z: Complex64| (Complex64::new(1.0, 0.0) - zeta.conj() * z).powf(-3.0);
        let quad = norm_fn_quadrature(&s, f, 4096).unwrap();
        assert!(
            (series - quad).abs() < 0.01 * quad,
            "series {series} vs quad {quad}"
        );
    }

    #[test]
    fn kernel_at_origin() {
        let km = constant_model(10, 50);
        let ev = km.eval(c(0.0, 0.0), c(0.3, 0.2));
        assert!((ev.value - c(1.0 / km.coeff(0), 0.0)).norm() < 1e-15);
        assert_eq!(ev.tail_bound, 0.0);
    }

    #[test]
    fn kernel_conjugate_symmetry() {
        let km = constant_model(10, 80);
        let z = c(0.4, 0.1);
        let w = c(-0.2, 0.3);
        let a = km.eval(z, w).value;
        let b = km.eval(w, z).value;
        assert!((a - b.conj()).norm() < 1e-13);
    }

    #[test]
    fn kernel_truncation_consistent() {
        // D = 200 value agrees with the D = 400 reference within its own
        // reported tail bound.
        let lo = constant_model(10, 200);
        let hi = constant_model(10, 400);
        let z = c(0.5, 0.0);
        let e_lo = lo.eval(z, z);
        let e_hi = hi.eval(z, z);
        assert!(e_hi.tail_bound < 1e-12);
        assert!((e_lo.value - e_hi.value).norm() <= e_lo.tail_bound + 1e-12);
        assert!(e_lo.tail_bound < 1e-3 * e_hi.value.re);
    }

    #[test]
    fn tail_flag_near_boundary() {
        let km = constant_model(10, 20); // far too small a degree near r_10
        let z = c(0.999, 0.0);
        assert!(matches!(
            km.eval_checked(z, z, 1e-6),
            Err(Error::KernelTail { .. })
        ));
    }

    #[test]
    fn diag_ratio_origin() {
        let km = constant_model(10, 100);
        let r = km.diag_ratio(c(0.0, 0.0)).unwrap();
        assert!((r - 1.0 / km.coeff(0)).abs() < 1e-12);
    }

    #[test]
    fn diag_ratio_two_sided_constant() {
        let s = RadiiSchedule::dyadic(12);
        let km = monomial_norms(&s, 12_000).unwrap();
        let grid = radial_grid(&s, 10, 1).unwrap();
        let st = km.diag_ratio_stats(&grid).unwrap();
        assert!(st.min_ratio > 0.0);
        assert!(
            st.max_ratio / st.min_ratio <= 20.0,
            "spread = {}",
            st.max_ratio / st.min_ratio
        );
    }

    #[test]
    fn kernel_radially_increasing() {
        let km = constant_model(10, 4000);
        let mut prev = 0.0;
        for i in 0..=40 {
            let x = 0.996_093_75 * i as f64 / 40.0; // r_{N-2} = r_8
            let v = km.eval(c(x, 0.0), c(x, 0.0)).value.re;
            assert!(v > prev, "x = {x}");
            prev = v;
        }
    }

    #[test]
    fn reproducing_property() {
        let km = constant_model(10, 3000);
        let a = vec![c(1.0, 0.5), c(-0.3, 0.2), c(0.0, 0.0), c(2.0, -1.0)];
        let zeta = c(0.7, 0.2); // inside r_{N-2}
        // ⟨p, K(·,ζ)⟩ = Σ_k a_k c_k · (ζ̄^k/c_k)̄  = Σ_k a_k ζ^k
        let mut ip = Complex64::new(0.0, 0.0);
        let mut pw = Complex64::new(1.0, 0.0);
        for (k, &ak) in a.iter().enumerate() {
            // kernel coefficient of z^k is ζ̄^k / c_k; weighted pairing adds c_k
            ip += ak * pw;
            let _ = k;
            pw *= zeta;
        }
        let direct = eval_poly(&a, zeta);
        assert!((ip - direct).norm() < 1e-12 * direct.norm());
        // and via explicit quadrature pairing on circles
        let s = km.schedule().clone();
        let km2 = km.clone();
        let pair = {
            let mut total = Complex64::new(0.0, 0.0);
            let m = 8192usize;
            for n in 1..=s.n_max() {
                let r = s.radius(n);
                let mut mean = Complex64::new(0.0, 0.0);
                for i in 0..m {
                    let t = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
                    let z = Complex64::from_polar(r, t);
                    mean += eval_poly(&a, z) * km2.eval(z, zeta).value.conj();
                }
                total += 0.5f64.powi(n as i32) * mean / m as f64;
            }
            total
        };
        assert!(
            (pair - direct).norm() < 1e-9 * direct.norm().max(1.0),
            "pair = {pair}, direct = {direct}"
        );
    }

    #[test]
    fn pointwise_bound_extremal() {
        let km = constant_model(10, 600);
        let z = c(0.6, 0.3);
        // kernel direction as a polynomial: coefficients z̄^k / c_k
        let mut a = Vec::new();
        let mut pw = Complex64::new(1.0, 0.0);
        for k in 0..=km.degree() {
            a.push(pw / km.coeff(k));
            pw *= z.conj();
        }
        let stat = km.pointwise_bound_check(&[(a, z)]).unwrap();
        let diag = km.diag_ratio(z).unwrap();
        assert!((stat - diag).abs() < 1e-9 * diag);
    }

    #[test]
    fn test_function_stat_two_sided() {
        let s = RadiiSchedule::dyadic(12);
        let km = monomial_norms(&s, 12_000).unwrap();
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for n in 0..=9 {
            let zeta = c(s.radius(n) + 0.3 * (s.gap(n) - s.gap(n + 1)), 0.0);
            let v = test_function_stat(&km, zeta, 3.0).unwrap();
            lo = lo.min(v);
            hi = hi.max(v);
        }
        assert!(lo > 0.0 && hi / lo < 50.0, "lo {lo} hi {hi}");
    }

    #[test]
    fn loglog_model_small_n() {
        let s = Weight::loglog().compute_radii(5, 1e-12).unwrap();
        let km = monomial_norms(&s, 40).unwrap();
        assert!(km.coeff(0) > 0.96 && km.coeff(0) < 0.97); // 1 - 2^{-5}
        for k in 1..=40 {
            assert!(km.coeff(k) < km.coeff(k - 1));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn random_polys_below_diag_ratio(
            coeffs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..20),
            zr in -0.9f64..0.9,
            zi in -0.3f64..0.3,
        ) {
            let z = c(zr, zi);
            prop_assume!(z.norm() < 0.95);
            let a: Vec<Complex64> = coeffs.iter().map(|&(r, i)| c(r, i)).collect();
            let km = constant_model(8, 600);
            prop_assume!(km.norm_poly(&a).unwrap() > 1e-12);
            let stat = km.pointwise_bound_check(&[(a, z)]).unwrap();
            let diag = km.diag_ratio(z).unwrap();
            prop_assert!(stat <= diag + 1e-9);
        }
    }
}
