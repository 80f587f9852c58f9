//! Pseudohyperbolic geometry on the unit disk: the metric ρ, finite
//! Blaschke products in log form, Jensen's-formula residuals, Carleson
//! squares, and a deterministic circle-lattice sequence generator.

use crate::error::{Error, Result};
use crate::weights::RadiiSchedule;
use crate::GOLDEN_ANGLE;
use num_complex::Complex64;
use std::path::Path;

/// Default separation threshold for the "separated" flag.
pub const DELTA_SEP: f64 = 0.05;

/// Total-point cap for generated lattices.
pub const LATTICE_CAP: usize = 1_000_000;

fn check_disk(z: Complex64) -> Result<()> {
    let a = z.norm();
    if a >= 1.0 || !a.is_finite() {
        return Err(Error::OutsideDisk(a));
    }
    Ok(())
}

/// ρ(z,ζ) = |z−ζ| / |1−ζ̄z|.
pub fn rho(z: Complex64, zeta: Complex64) -> Result<f64> {
    check_disk(z)?;
    check_disk(zeta)?;
    let num = (z - zeta).norm();
    let den = (Complex64::new(1.0, 0.0) - zeta.conj() * z).norm();
    Ok(num / den)
}

/// log|B(z)| = Σ_j log ρ(z, λ_j) for the Blaschke product with the given
/// zeros; −∞ when z coincides with a zero.
pub fn blaschke_log(zeros: &[Complex64], z: Complex64) -> Result<f64> {
    check_disk(z)?;
    let mut acc = 0.0;
    for &lam in zeros {
        let r = rho(z, lam)?;
        if r == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        acc += r.ln();
    }
    Ok(acc)
}

/// Jensen residual: |quadrature mean of log|B(re^{it})| − (#zeros)·log r −
/// Σ log|λ_j/r| ... | against the closed-form Jensen sum.  All zeros must
/// lie inside |z| < r; returns Err when a zero sits within 1e-6 of the
/// circle (quadrature divergence).
pub fn jensen_check(zeros: &[Complex64], r: f64, quad_points: usize) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidParameter(format!("jensen radius {r} not in (0,1)")));
    }
    if quad_points < 8 {
        return Err(Error::InvalidParameter("need ≥ 8 quadrature points".into()));
    }
    for &lam in zeros {
        let a = lam.norm();
        if a >= r {
            return Err(Error::InvalidParameter(format!(
                "zero |λ| = {a} not inside circle r = {r}"
            )));
        }
        if r - a < 1e-6 {
            return Err(Error::Guard(format!(
                "zero within 1e-6 of the circle (|λ| = {a}, r = {r})"
            )));
        }
    }
    // Closed form: mean_t log|B(re^{it})| = Σ_j log(|λ_j|/r) + (#z)·(…)?
    // For B with factors (λ−z)/(1−λ̄z): Jensen on the circle gives
    // mean log|B| = Σ_j [ log(|λ_j| / r) + log r + log|1/(…)| ] — easiest
    // exact statement: mean_t log|re^{it} − λ| = log r (λ inside), and
    // mean_t log|1 − λ̄ re^{it}| = 0 (root of 1−λ̄w outside).  Hence
    // mean log|B| = Σ_j log r = (#zeros) · log r.
    let closed = zeros.len() as f64 * r.ln();
    let mut acc = 0.0;
    for i in 0..quad_points {
        let t = 2.0 * std::f64::consts::PI * i as f64 / quad_points as f64;
        let z = Complex64::from_polar(r, t);
        acc += blaschke_log(zeros, z)?;
    }
    let mean = acc / quad_points as f64;
    Ok((mean - closed).abs())
}

/// Membership in the Carleson square Q_ζ = {z : |ζ| < |z| < 1,
/// |arg(z ζ̄)| < 1 − |ζ|} (symmetric argument window).
pub fn in_carleson_square(zeta: Complex64, z: Complex64) -> Result<bool> {
    let s = zeta.norm();
    if s == 0.0 {
        return Err(Error::InvalidParameter("Carleson square needs ζ ≠ 0".into()));
    }
    check_disk(zeta)?;
    let a = z.norm();
    if a <= s || a >= 1.0 {
        return Ok(false);
    }
    let arg = (z * zeta.conj()).arg().abs();
    Ok(arg < 1.0 - s)
}

/// A finite set of distinct disk points with cached separation.
#[derive(Debug, Clone)]
pub struct PointSequence {
    points: Vec<Complex64>,
    separation: f64,
    pub label: Option<String>,
}

impl PointSequence {
    pub fn new(points: Vec<Complex64>) -> Result<Self> {
        for &p in &points {
            check_disk(p)?;
        }
        let separation = pairwise_separation(&points)?;
        if points.len() > 1 && separation == 0.0 {
            return Err(Error::InvalidParameter("points must be pairwise distinct".into()));
        }
        Ok(PointSequence {
            points,
            separation,
            label: None,
        })
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// inf_{j≠l} ρ(λ_j, λ_l); +∞ for fewer than two points.
    pub fn separation(&self) -> f64 {
        self.separation
    }

    pub fn is_separated(&self, delta: f64) -> bool {
        self.separation >= delta
    }

    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_path(path.as_ref())?;
        let mut pts = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() < 2 {
                return Err(Error::Config("sequence rows must be `re,im`".into()));
            }
            let re: f64 = rec[0]
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad re `{}`", &rec[0])))?;
            let im: f64 = rec[1]
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad im `{}`", &rec[1])))?;
            pts.push(Complex64::new(re, im));
        }
        PointSequence::new(pts)
    }

    pub fn to_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(path.as_ref())?;
        for p in &self.points {
            wtr.write_record(&[format!("{:.17e}", p.re), format!("{:.17e}", p.im)])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn pairwise_separation(points: &[Complex64]) -> Result<f64> {
    let mut inf = f64::INFINITY;
    for j in 0..points.len() {
        for l in j + 1..points.len() {
            inf = inf.min(rho(points[j], points[l])?);
        }
    }
    Ok(inf)
}

/// On each circle |z| = r_n with n a multiple of `stride` (1 ≤ n ≤ N),
/// places K_n = max(1, round(2π r_n / (spacing (1−r_n)))) equally spaced
/// points with a golden-angle phase offset per circle.
pub fn generate_circle_lattice(
    s: &RadiiSchedule,
    spacing: f64,
    stride: usize,
) -> Result<PointSequence> {
    if !(spacing > 0.0) {
        return Err(Error::InvalidParameter("spacing must be positive".into()));
    }
    if stride < 1 {
        return Err(Error::InvalidParameter("stride must be ≥ 1".into()));
    }
    let mut pts = Vec::new();
    for n in 1..=s.n_max() {
        if n % stride != 0 {
            continue;
        }
        let r = s.radius(n);
        let g = s.gap(n);
        let k = ((2.0 * std::f64::consts::PI * r) / (spacing * g)).round().max(1.0);
        if !k.is_finite() || k > LATTICE_CAP as f64 {
            return Err(Error::InvalidParameter(format!(
                "spacing {spacing} puts {k:.0} points on circle n = {n} (cap {LATTICE_CAP})"
            )));
        }
        let k = k as usize;
        if pts.len() + k > LATTICE_CAP {
            return Err(Error::InvalidParameter(format!(
                "lattice exceeds cap of {LATTICE_CAP} points"
            )));
        }
        let phase = (n as f64 * GOLDEN_ANGLE) % (2.0 * std::f64::consts::PI);
        for i in 0..k {
            let t = phase + 2.0 * std::f64::consts::PI * i as f64 / k as f64;
            pts.push(Complex64::from_polar(r, t));
        }
    }
    let mut seq = PointSequence::new(pts)?;
    seq.label = Some(format!("lattice(spacing={spacing},stride={stride})"));
    Ok(seq)
}
