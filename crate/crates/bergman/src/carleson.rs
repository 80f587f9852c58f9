//! Carleson machinery for discrete measures: per-annulus restrictions,
//! the exact discrete sup of μ(Q_ζ)/(1−|ζ|) over Carleson squares, the
//! 2^n-weighted per-annulus profile, and a direct embedding-constant
//! oracle via the top eigenvalue of the weighted kernel Gram matrix.

use crate::error::{Error, Result};
use crate::space::KernelModel;
use crate::weights::RadiiSchedule;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::Path;

const TAU: f64 = 2.0 * std::f64::consts::PI;

/// A finite nonnegative atomic measure on the disk.
#[derive(Debug, Clone, Default)]
pub struct DiscreteMeasure {
    atoms: Vec<(Complex64, f64)>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<(Complex64, f64)>) -> Result<Self> {
        for &(z, m) in &atoms {
            if z.norm() >= 1.0 {
                return Err(Error::OutsideDisk(z.norm()));
            }
            if !(m >= 0.0) || !m.is_finite() {
                return Err(Error::InvalidParameter(format!("atom mass {m} invalid")));
            }
        }
        Ok(DiscreteMeasure { atoms })
    }

    pub fn atoms(&self) -> &[(Complex64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|&(_, m)| m).sum()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        DiscreteMeasure::new(self.atoms.iter().map(|&(z, m)| (z, m * factor)).collect())
    }

    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_path(path.as_ref())?;
        let mut atoms = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() < 3 {
                return Err(Error::Config("measure rows must be `re,im,mass`".into()));
            }
            let parse = |s: &str| -> Result<f64> {
                s.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad number `{s}`")))
            };
            atoms.push((
                Complex64::new(parse(&rec[0])?, parse(&rec[1])?),
                parse(&rec[2])?,
            ));
        }
        DiscreteMeasure::new(atoms)
    }

    pub fn to_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(path.as_ref())?;
        for &(z, m) in &self.atoms {
            wtr.write_record(&[
                format!("{:.17e}", z.re),
                format!("{:.17e}", z.im),
                format!("{:.17e}", m),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Atoms in Ω_n = {r_n ≤ |z| < r_{n+1}}, n ≤ N−1.
pub fn restrict_annulus(
    mu: &DiscreteMeasure,
    s: &RadiiSchedule,
    n: usize,
) -> Result<DiscreteMeasure> {
    if n + 1 > s.n_max() {
        return Err(Error::InvalidParameter(format!(
            "annulus index {n} exceeds N−1 = {}",
            s.n_max() - 1
        )));
    }
    // r_n ≤ |z| ⇔ 1−|z| ≤ g_n;  |z| < r_{n+1} ⇔ 1−|z| > g_{n+1}.
    let (g_lo, g_hi) = (s.gap(n + 1), s.gap(n));
    let atoms = mu
        .atoms
        .iter()
        .copied()
        .filter(|&(z, _)| {
            let g = 1.0 - z.norm();
            g <= g_hi && g > g_lo
        })
        .collect();
    DiscreteMeasure::new(atoms)
}

/// Discrete sup of μ(Q_ζ)/(1−|ζ|) over Carleson squares Q_ζ.  Candidate
/// levels are the atom moduli plus the full-disk limit level 0; at each
/// level the angular window (half-width 1−s) sweeps left endpoints over
/// atom arguments, with closed endpoints so the scan attains the sup.
pub fn h2_carleson_constant(mu: &DiscreteMeasure) -> Result<f64> {
    if mu.is_empty() {
        return Err(Error::Empty("measure".into()));
    }
    let mut levels: Vec<f64> = mu.atoms.iter().map(|&(z, _)| z.norm()).collect();
    levels.push(0.0);
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    levels.dedup();

    let mut best = 0.0f64;
    for &s in &levels {
        let h = 1.0 - s;
        let mut eligible: Vec<(f64, f64)> = mu
            .atoms
            .iter()
            .filter(|&&(z, _)| z.norm() >= s)
            .map(|&(z, m)| (z.arg(), m))
            .collect();
        if eligible.is_empty() {
            continue;
        }
        let window_mass = if h >= std::f64::consts::PI {
            eligible.iter().map(|&(_, m)| m).sum()
        } else {
            eligible.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            sliding_window_max(&eligible, 2.0 * h)
        };
        best = best.max(window_mass / h);
    }
    Ok(best)
}

/// Max total mass in a closed circular arc of the given width with left
/// endpoint at one of the atom angles; `sorted` is ascending in angle.
fn sliding_window_max(sorted: &[(f64, f64)], width: f64) -> f64 {
    let n = sorted.len();
    // Doubled array handles wraparound.
    let mut best = 0.0f64;
    for i in 0..n {
        let left = sorted[i].0;
        let mut sum = 0.0;
        for j in 0..n {
            let mut a = sorted[(i + j) % n].0;
            if (i + j) >= n {
                a += TAU;
            }
            if a - left <= width {
                sum += sorted[(i + j) % n].1;
            } else {
                break;
            }
        }
        best = best.max(sum);
    }
    best
}

#[derive(Debug, Clone, Serialize)]
pub struct CarlesonProfile {
    /// 2^n · C_n for n = 0..N−1 (0 where the annulus is empty).
    pub per_n: Vec<f64>,
    pub sup: f64,
}

/// C_n = square constant of μ restricted to Ω_n; sup_n 2^n C_n.
pub fn carleson_profile(mu: &DiscreteMeasure, s: &RadiiSchedule) -> Result<CarlesonProfile> {
    for &(z, _) in mu.atoms() {
        if 1.0 - z.norm() <= s.gap(s.n_max()) {
            return Err(Error::InvalidParameter(format!(
                "atom at |z| = {} beyond r_N",
                z.norm()
            )));
        }
    }
    let mut per_n = Vec::with_capacity(s.n_max());
    let mut sup = 0.0f64;
    for n in 0..s.n_max() {
        let part = restrict_annulus(mu, s, n)?;
        let entry = if part.is_empty() {
            0.0
        } else {
            2f64.powi(n as i32) * h2_carleson_constant(&part)?
        };
        sup = sup.max(entry);
        per_n.push(entry);
    }
    Ok(CarlesonProfile { per_n, sup })
}

/// Best embedding constant sup ∫|f|²dμ / ‖f‖² over polynomials of degree
/// ≤ D: top eigenvalue of the Hermitian matrix with entries
/// √(m_i m_j)·K_D(z_i, z_j), which shares its nonzero spectrum with the
/// k-indexed moment matrix Σ_atoms m·e_k(z)ē_{k'}(z).
pub fn embedding_constant_direct(mu: &DiscreteMeasure, km: &KernelModel) -> Result<f64> {
    if mu.is_empty() {
        return Ok(0.0);
    }
    // Tail guard: the truncation must resolve the kernel at every atom.
    for &(z, _) in mu.atoms() {
        let ev = km.eval(z, z);
        if ev.tail_bound > 1e-3 * ev.value.re {
            return Err(Error::KernelTail {
                bound: ev.tail_bound,
                tol: 1e-3,
            });
        }
    }
    let n = mu.len();
    let mut g = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        let (zi, mi) = mu.atoms[i];
        for j in i..n {
            let (zj, mj) = mu.atoms[j];
            let v = km.eval(zi, zj).value * (mi * mj).sqrt();
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
    }
    let eigs = g.symmetric_eigenvalues();
    let top = eigs.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if !top.is_finite() {
        return Err(Error::Eigen("non-finite top eigenvalue".into()));
    }
    Ok(top.max(0.0))
}

/// The canonical measure of a point sequence: mass 2^{-n(λ)}(1−|λ|) at
/// each λ.
pub fn canonical_measure(
    seq: &crate::geometry::PointSequence,
    s: &RadiiSchedule,
) -> Result<DiscreteMeasure> {
    let mut atoms = Vec::with_capacity(seq.len());
    for &lam in seq.points() {
        let (n, overflow) = s.annulus_index(lam)?;
        if overflow {
            return Err(Error::InvalidParameter(format!(
                "sequence point at |λ| = {} beyond r_N",
                lam.norm()
            )));
        }
        atoms.push((lam, 0.5f64.powi(n as i32) * (1.0 - lam.norm())));
    }
    DiscreteMeasure::new(atoms)
}

/// Seeded random measure: atoms uniform in angle, moduli uniform per
/// annulus drawn from [n_lo, n_hi], masses log-uniform in [0.1, 10].
pub fn random_measure(
    seed: u64,
    count: usize,
    s: &RadiiSchedule,
    n_lo: usize,
    n_hi: usize,
) -> Result<DiscreteMeasure> {
    if n_hi + 1 > s.n_max() || n_lo > n_hi {
        return Err(Error::InvalidParameter("bad annulus range".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut atoms = Vec::with_capacity(count);
    for _ in 0..count {
        let n = rng.gen_range(n_lo..=n_hi);
        // Uniform in the gap coordinate between g_{n+1} and g_n.
        let g = rng.gen_range(s.gap(n + 1)..s.gap(n));
        let t = rng.gen_range(0.0..TAU);
        let mass = 10f64.powf(rng.gen_range(-1.0..1.0));
        atoms.push((Complex64::from_polar(1.0 - g, t), mass));
    }
    DiscreteMeasure::new(atoms)
}
