//! Peak-function construction: per-block Blaschke potentials, balayage
//! onto schedule circles, the D_r cancellation bound, the n(z) circle
//! potential, atomization of circle masses, and assembly/verification of
//! the function G whose modulus tracks 2^{(1∓ε)n(z)/2} times local
//! pseudohyperbolic distance factors.
//!
//! Everything is truncated to finitely many blocks inside r_N; the
//! harmonic convergence factors needed for infinite products are
//! unnecessary here and omitted.

use crate::error::{Error, Result};
use crate::geometry::{blaschke_log, rho, PointSequence};
use crate::weights::RadiiSchedule;
use crate::{GOLDEN_ANGLE, HALF_LOG2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const TAU: f64 = 2.0 * std::f64::consts::PI;
const PI: f64 = std::f64::consts::PI;

/// Minimum pseudohyperbolic clearance for evaluating log|G| and for the
/// balayage quadrature.
pub const DELTA_EVAL: f64 = 0.05;

/// Quadrature count for integrals on a circle with the given gap 1−r.
pub fn circle_quad_points(gap: f64, mult: f64) -> usize {
    let base = (16.0 / gap).max(512.0) * mult.max(0.125);
    (base.min(1.0e6).ceil()) as usize
}

/// U_j(z) = Σ log|B_n(z)| over the block's annuli n = mj..mj+m−1; −∞ when
/// z hits a zero.
pub fn block_potential_u(
    seq: &PointSequence,
    s: &RadiiSchedule,
    j: usize,
    m: usize,
    z: Complex64,
) -> Result<f64> {
    let zeros = block_zeros(seq, s, j, m)?;
    blaschke_log(&zeros, z)
}

/// Zeros of Λ with annulus index in [mj, mj+m−1].
pub fn block_zeros(
    seq: &PointSequence,
    s: &RadiiSchedule,
    j: usize,
    m: usize,
) -> Result<Vec<Complex64>> {
    if j < 1 || m < 1 {
        return Err(Error::InvalidParameter("block needs j ≥ 1, m ≥ 1".into()));
    }
    let (lo, hi) = (m * j, m * j + m - 1);
    if hi > s.n_max() - 1 {
        return Err(Error::InvalidParameter(format!(
            "block j = {j} reaches annulus {hi} beyond N−1 = {}",
            s.n_max() - 1
        )));
    }
    let mut out = Vec::new();
    for &lam in seq.points() {
        let (n, overflow) = s.annulus_index(lam)?;
        // points at or beyond r_N belong to no block (blocks end at N−1)
        if !overflow && n >= lo && n <= hi {
            out.push(lam);
        }
    }
    Ok(out)
}

/// Balayage of U_j onto the circle |ζ| = r_circle:
///
///   V_j(z) = −(1/(π(1−r²))) ∫ log|(re^{it}−z)/(1−z̄ re^{it})| U_j(re^{it}) dt.
///
/// The leading sign makes V_j ≈ U_j away from the circle (the integrand's
/// Green-kernel expansion is negative while U_j ≤ 0); without it the
/// redistribution error grows without bound.
pub fn balayage_v<F>(u_on_circle: F, r_circle: f64, z: Complex64, quad_points: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(r_circle > 0.0 && r_circle < 1.0) {
        return Err(Error::InvalidParameter(format!("circle radius {r_circle} not in (0,1)")));
    }
    let gap = 1.0 - r_circle;
    if (quad_points as f64) * gap < 16.0 {
        return Err(Error::Guard(format!(
            "quadrature too coarse: {quad_points} points on circle with gap {gap:e}"
        )));
    }
    let a = z.norm();
    if a < 1.0 && rho(Complex64::new(a, 0.0), Complex64::new(r_circle, 0.0))? < DELTA_EVAL {
        return Err(Error::Guard(format!(
            "evaluation point within ρ < {DELTA_EVAL} of the balayage circle"
        )));
    }
    let mut acc = 0.0;
    for q in 0..quad_points {
        let t = TAU * q as f64 / quad_points as f64;
        let w = Complex64::from_polar(r_circle, t);
        let green = ((w - z).norm() / (Complex64::new(1.0, 0.0) - z.conj() * w).norm()).ln();
        acc += green * u_on_circle(t);
    }
    let integral = acc * TAU / quad_points as f64;
    Ok(-integral / (PI * (1.0 - r_circle * r_circle)))
}

/// sup over the grid of |Σ_{j≥1} (V_j − U_j)(z)| across all full blocks;
/// every grid point must keep ρ(z, Λ) ≥ δ.
pub fn redistribution_error(
    seq: &PointSequence,
    s: &RadiiSchedule,
    m: usize,
    grid: &[Complex64],
    delta: f64,
    quad_mult: f64,
) -> Result<f64> {
    if seq.is_empty() {
        return Ok(0.0);
    }
    let j_max = full_blocks(s, m);
    let mut worst = 0.0f64;
    for &z in grid {
        let near = nearest_rho(z, seq.points())?;
        if near < delta {
            return Err(Error::Guard(format!(
                "grid point at ρ = {near} < δ = {delta} from Λ"
            )));
        }
        let mut sum = 0.0;
        for j in 1..=j_max {
            let zeros = block_zeros(seq, s, j, m)?;
            if zeros.is_empty() {
                continue;
            }
            let u_z = blaschke_log(&zeros, z)?;
            let r_c = s.radius(m * j);
            let q = circle_quad_points(s.gap(m * j), quad_mult);
            let v_z = balayage_v(
                |t| blaschke_log(&zeros, Complex64::from_polar(r_c, t)).unwrap_or(f64::NEG_INFINITY),
                r_c,
                z,
                q,
            )?;
            sum += v_z - u_z;
        }
        worst = worst.max(sum.abs());
    }
    Ok(worst)
}

fn nearest_rho(z: Complex64, points: &[Complex64]) -> Result<f64> {
    let mut best = f64::INFINITY;
    for &p in points {
        best = best.min(rho(z, p)?);
    }
    Ok(best)
}

/// D_r(z) for |z| < r, computed from the definition and from the factored
/// identity; both are returned so their agreement can be asserted.
pub fn dr_cancellation(z: Complex64, r: f64) -> (f64, f64) {
    let one = Complex64::new(1.0, 0.0);
    let a2 = z.norm_sqr();
    let def = (1.0 - a2 / (r * r)) / (one - z / r).norm_sqr() - (1.0 - a2) / (one - r * z).norm_sqr();
    let p = (one - z / r).norm_sqr();
    let q = (one - r * z).norm_sqr();
    let ident = ((1.0 - r * r) * (1.0 - a2) * (1.0 - a2) / (p * q) - (1.0 - r * r) / p) / (r * r);
    (def, ident)
}

/// P(z) = Σ_{j≥1, mj ≤ N−1} (m log2/2)·(log max(|z|, r_mj) − log r_mj)/(1−r_mj),
/// the circle-supported potential approximating n(z)·(log 2)/2.  The
/// circle means are exact (mean_t log|z − re^{it}| = log max(|z|, r)), so
/// no quadrature is involved.
pub fn nz_potential(s: &RadiiSchedule, m: usize, z: Complex64) -> Result<f64> {
    if m < 1 {
        return Err(Error::InvalidParameter("m ≥ 1 required".into()));
    }
    let a = z.norm();
    if a >= 1.0 {
        return Err(Error::OutsideDisk(a));
    }
    let gz = 1.0 - a;
    let mut p = 0.0;
    let mut j = 1;
    while m * j <= s.n_max() - 1 {
        let g = s.gap(m * j);
        if gz < g {
            // |z| > r_mj: log|z| − log r_mj through the gaps
            p += m as f64 * HALF_LOG2 * ((-gz).ln_1p() - (-g).ln_1p()) / g;
        }
        j += 1;
    }
    Ok(p)
}

/// Quadrature circle mean of log|z − re^{it}|, for checking the exact
/// identity used by nz_potential.
pub fn circle_mean_log_dist(z: Complex64, r: f64, quad_points: usize) -> f64 {
    let mut acc = 0.0;
    for q in 0..quad_points {
        let t = TAU * q as f64 / quad_points as f64;
        acc += (z - Complex64::from_polar(r, t)).norm().ln();
    }
    acc / quad_points as f64
}

/// K = ⌊mass/2π⌋ equally spaced points on the circle (each atom carries
/// Riesz mass 2π); the remainder stays unatomized.
pub fn atomize(r_circle: f64, total_riesz_mass: f64, phase: f64) -> Result<(Vec<Complex64>, f64)> {
    if total_riesz_mass < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "negative Riesz mass {total_riesz_mass}"
        )));
    }
    let k = (total_riesz_mass / TAU).floor() as usize;
    let pts = (0..k)
        .map(|i| Complex64::from_polar(r_circle, phase + TAU * i as f64 / k as f64))
        .collect();
    Ok((pts, total_riesz_mass - k as f64 * TAU))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GCase {
    I,
    S,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomCircle {
    pub r: f64,
    pub count: usize,
    pub phase: f64,
    /// Signed circle mass before atomization (≥ 0 by feasibility).
    pub mass: f64,
    pub remainder: f64,
}

/// The assembled peak function: plain zeros at Λ, atomized circle zeros
/// (case I) or poles (case S), with log|G| =
/// Σ_Λ log ρ(z,λ) ± Σ_atoms (log|z−a| − log|a|).
#[derive(Debug, Clone)]
pub struct GModel {
    pub case: GCase,
    pub base: PointSequence,
    pub atoms: Vec<Complex64>,
    pub circles: Vec<AtomCircle>,
    pub epsilon: f64,
    pub m: usize,
    /// min ρ between Λ and the atom set (∞ if either side is empty).
    pub atom_separation: f64,
}

#[derive(Debug, Clone)]
pub enum EpsMode {
    Fixed(f64),
    /// Derive ε from a measured density estimate: half the slack to the
    /// (log 2)/2 threshold, with shrink-retry when infeasible.
    AutoFrom(f64),
}

#[derive(Debug, Clone)]
pub struct BuildConfig {
    pub case: GCase,
    pub epsilon: EpsMode,
    pub m: Option<usize>,
    pub m_cap: usize,
    pub quad_mult: f64,
    pub phase_seed: u64,
}

impl BuildConfig {
    pub fn new(case: GCase, epsilon: EpsMode) -> Self {
        BuildConfig {
            case,
            epsilon,
            m: None,
            m_cap: 12,
            quad_mult: 1.0,
            phase_seed: 0,
        }
    }
}

/// Number of full blocks: largest J with m·J + m − 1 ≤ N − 1.
pub fn full_blocks(s: &RadiiSchedule, m: usize) -> usize {
    if s.n_max() < 2 * m {
        0
    } else {
        (s.n_max() - m) / m
    }
}

/// Quadrature mean of −U_j over the block circle (exact value:
/// −Σ_{λ ∈ block} log|λ|, by the circle-mean identity).
fn mean_minus_u(zeros: &[Complex64], r_c: f64, q: usize) -> f64 {
    if zeros.is_empty() {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..q {
        let t = TAU * i as f64 / q as f64;
        let u = blaschke_log(zeros, Complex64::from_polar(r_c, t)).unwrap_or(f64::NEG_INFINITY);
        if u.is_finite() {
            acc -= u;
        }
        // a sample exactly on a zero contributes nothing; the neighbors
        // carry the (integrable) log singularity
    }
    acc / q as f64
}

/// Signed circle masses for all full blocks at the given (ε, m):
/// case I: (1−ε)·πm log2/(1−r) − M_V;  case S: M_V − (1+ε)·πm log2/(1−r).
fn circle_masses(
    seq: &PointSequence,
    s: &RadiiSchedule,
    case: GCase,
    eps: f64,
    m: usize,
    quad_mult: f64,
) -> Result<Vec<f64>> {
    let j_max = full_blocks(s, m);
    if j_max == 0 {
        return Err(Error::InvalidParameter(format!(
            "no full blocks: m = {m} too large for N = {}",
            s.n_max()
        )));
    }
    let mut masses = Vec::with_capacity(j_max);
    for j in 1..=j_max {
        let g = s.gap(m * j);
        let r_c = 1.0 - g;
        let zeros = block_zeros(seq, s, j, m)?;
        let q = circle_quad_points(g, quad_mult).min(4 * zeros.len().max(512));
        let mv = 4.0 * PI / (1.0 - r_c * r_c) * mean_minus_u(&zeros, r_c, q);
        let mn = PI * m as f64 * 2.0 * HALF_LOG2 / g;
        let mass = match case {
            GCase::I => (1.0 - eps) * mn - mv,
            GCase::S => mv - (1.0 + eps) * mn,
        };
        masses.push(mass);
    }
    Ok(masses)
}

/// Builds G: selects (ε, m), computes per-block signed circle masses,
/// atomizes them as extra zeros (I) or poles (S), and records the
/// achieved atom separation from Λ.
pub fn build_g(seq: &PointSequence, s: &RadiiSchedule, cfg: &BuildConfig) -> Result<GModel> {
    let mut eps = match cfg.epsilon {
        EpsMode::Fixed(e) => e,
        EpsMode::AutoFrom(d) => match cfg.case {
            GCase::I => (HALF_LOG2 - d) / 2.0,
            GCase::S => (d - HALF_LOG2) / 2.0,
        },
    };
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ε = {eps} must be positive (density on the wrong side of the threshold?)"
        )));
    }
    if cfg.case == GCase::I {
        eps = eps.min(HALF_LOG2 * 0.999);
    }
    loop {
        match try_build(seq, s, cfg, eps) {
            Ok(g) => return Ok(g),
            Err(e) => {
                // shrink-retry: a smaller ε enlarges the signed masses in
                // both cases, relaxing the feasibility condition
                if eps > 1e-3 {
                    eps *= 0.5;
                } else {
                    return Err(e);
                }
            }
        }
    }
}

fn try_build(
    seq: &PointSequence,
    s: &RadiiSchedule,
    cfg: &BuildConfig,
    eps: f64,
) -> Result<GModel> {
    // Prefer m ≥ 4: smaller m spaces the atoms many gaps apart along each
    // circle, so log|G| oscillates angularly; larger m coarsens the radial
    // staircase.  m = 4..6 keeps both errors small in practice.
    let m_candidates: Vec<usize> = match cfg.m {
        Some(m) => vec![m],
        None => (4..=cfg.m_cap).chain(1..4.min(cfg.m_cap + 1)).collect(),
    };
    let mut last_err = Error::InvalidParameter("no feasible m".into());
    for &m in &m_candidates {
        if full_blocks(s, m) == 0 {
            continue;
        }
        let masses = match circle_masses(seq, s, cfg.case, eps, m, cfg.quad_mult) {
            Ok(v) => v,
            Err(e) => {
                last_err = e;
                continue;
            }
        };
        if masses.iter().any(|&v| v < 0.0) {
            last_err = Error::InvalidParameter(format!(
                "mass-sign condition fails for m = {m}, ε = {eps:.4}: min mass {:.3}",
                masses.iter().cloned().fold(f64::INFINITY, f64::min)
            ));
            continue;
        }
        return assemble(seq, s, cfg, eps, m, &masses);
    }
    Err(last_err)
}

fn assemble(
    seq: &PointSequence,
    s: &RadiiSchedule,
    cfg: &BuildConfig,
    eps: f64,
    m: usize,
    masses: &[f64],
) -> Result<GModel> {
    let mut atoms = Vec::new();
    let mut circles = Vec::new();
    for (idx, &mass) in masses.iter().enumerate() {
        let j = idx + 1;
        let r_c = s.radius(m * j);
        let base_phase = (cfg.phase_seed as f64).mul_add(0.618_033_988_749_895, j as f64 * GOLDEN_ANGLE);
        // Pick among a few phase shifts the one keeping atoms farthest
        // from Λ (the construction leaves the phase free).
        let k = (mass / TAU).floor() as usize;
        let mut best: Option<(f64, Vec<Complex64>, f64, f64)> = None;
        for shift in 0..4 {
            let phase = base_phase + shift as f64 * PI / (2.0 * k.max(1) as f64);
            let (pts, rem) = atomize(r_c, mass, phase)?;
            let sep = min_cross_rho(&pts, seq.points())?;
            if best.as_ref().map_or(true, |b| sep > b.0) {
                best = Some((sep, pts, rem, phase));
            }
        }
        let (_, pts, rem, phase) = best.unwrap();
        circles.push(AtomCircle {
            r: r_c,
            count: pts.len(),
            phase,
            mass,
            remainder: rem,
        });
        atoms.extend(pts);
    }
    let atom_separation = min_cross_rho(&atoms, seq.points())?;
    Ok(GModel {
        case: cfg.case,
        base: seq.clone(),
        atoms,
        circles,
        epsilon: eps,
        m,
        atom_separation,
    })
}

fn min_cross_rho(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    let mut best = f64::INFINITY;
    for &x in a {
        for &y in b {
            best = best.min(rho(x, y)?);
        }
    }
    Ok(best)
}

impl GModel {
    /// All zeros of G: Λ plus the atomized circle zeros in case I.
    pub fn zero_set(&self) -> Vec<Complex64> {
        let mut z: Vec<Complex64> = self.base.points().to_vec();
        if self.case == GCase::I {
            z.extend(&self.atoms);
        }
        z
    }

    pub fn pole_set(&self) -> &[Complex64] {
        match self.case {
            GCase::I => &[],
            GCase::S => &self.atoms,
        }
    }

    /// log|G(z)|; −∞ at zeros, +∞ at poles.
    pub fn log_g(&self, z: Complex64) -> Result<f64> {
        let (logm, _) = self.eval_log(z, None)?;
        Ok(logm)
    }

    /// Log-magnitude and unit-phase of the product of all factors, with
    /// one base zero optionally skipped (for derivative-style quotients).
    /// Factors: b_λ(z) = (|λ|/λ)(λ−z)/(1−λ̄z) at Λ (b_0(z) = z), and
    /// (z−a)/|a| per atom, inverted for poles.
    pub fn eval_log(&self, z: Complex64, skip_base: Option<usize>) -> Result<(f64, Complex64)> {
        if z.norm() >= 1.0 {
            return Err(Error::OutsideDisk(z.norm()));
        }
        let one = Complex64::new(1.0, 0.0);
        let mut logm = 0.0f64;
        let mut phase = one;
        for (i, &lam) in self.base.points().iter().enumerate() {
            if skip_base == Some(i) {
                continue;
            }
            let f = if lam.norm() == 0.0 {
                z
            } else {
                (lam.norm() / lam) * (lam - z) / (one - lam.conj() * z)
            };
            let n = f.norm();
            if n == 0.0 {
                return Ok((f64::NEG_INFINITY, one));
            }
            logm += n.ln();
            phase *= f / n;
        }
        let pole = self.case == GCase::S;
        for &a in &self.atoms {
            let f = (z - a) / a.norm();
            let n = f.norm();
            if n == 0.0 {
                return Ok((if pole { f64::INFINITY } else { f64::NEG_INFINITY }, one));
            }
            if pole {
                logm -= n.ln();
                phase *= n / f;
            } else {
                logm += n.ln();
                phase *= f / n;
            }
        }
        Ok((logm, phase))
    }

    /// Highest annulus index the verification grid should use: edge
    /// effects from uncovered trailing annuli start past m·J.
    pub fn grid_cap(&self, s: &RadiiSchedule) -> usize {
        (self.m * full_blocks(s, self.m)).min(s.n_max() - 2)
    }

    pub fn to_json(&self) -> Result<String> {
        let ser = SerGModel {
            case: self.case,
            zeros: self.base.points().iter().map(|z| (z.re, z.im)).collect(),
            atoms: self.atoms.iter().map(|z| (z.re, z.im)).collect(),
            circles: self.circles.clone(),
            epsilon: self.epsilon,
            m: self.m,
            atom_separation: self.atom_separation,
        };
        Ok(serde_json::to_string_pretty(&ser)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ser: SerGModel = serde_json::from_str(text)?;
        let base =
            PointSequence::new(ser.zeros.iter().map(|&(r, i)| Complex64::new(r, i)).collect())?;
        let atoms = ser.atoms.iter().map(|&(r, i)| Complex64::new(r, i)).collect();
        let g = GModel {
            case: ser.case,
            base,
            atoms,
            circles: ser.circles,
            epsilon: ser.epsilon,
            m: ser.m,
            atom_separation: ser.atom_separation,
        };
        Ok(g)
    }
}

#[derive(Serialize, Deserialize)]
struct SerGModel {
    case: GCase,
    zeros: Vec<(f64, f64)>,
    atoms: Vec<(f64, f64)>,
    circles: Vec<AtomCircle>,
    epsilon: f64,
    m: usize,
    atom_separation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GVerify {
    pub min_log_ratio: f64,
    pub max_log_ratio: f64,
    pub spread: f64,
    pub grid_points: usize,
}

/// Residual extremes of
/// 2 log|G| − (1∓ε) n(z) log 2 − 2 log ρ(z, zeros) + 2 log ρ(z, poles)
/// over the grid; a bounded spread certifies the two-sided estimate.
pub fn verify_g(g: &GModel, s: &RadiiSchedule, grid: &[Complex64], delta: f64) -> Result<GVerify> {
    if grid.is_empty() {
        return Err(Error::Empty("verification grid".into()));
    }
    let zeros = g.zero_set();
    let poles = g.pole_set();
    let sign = match g.case {
        GCase::I => 1.0 - g.epsilon,
        GCase::S => 1.0 + g.epsilon,
    };
    let mut min_r = f64::INFINITY;
    let mut max_r = f64::NEG_INFINITY;
    for &z in grid {
        let near_zero = nearest_rho(z, &zeros)?;
        let near_pole = if poles.is_empty() {
            f64::INFINITY
        } else {
            nearest_rho(z, poles)?
        };
        if near_zero < delta || near_pole < delta {
            return Err(Error::Guard(format!(
                "grid point within ρ < {delta} of the singular set"
            )));
        }
        let (n, overflow) = s.annulus_index(z)?;
        if overflow {
            return Err(Error::Guard("grid point beyond r_N".into()));
        }
        let mut resid = 2.0 * g.log_g(z)? - sign * n as f64 * 2.0 * HALF_LOG2
            - 2.0 * near_zero.ln();
        if near_pole.is_finite() {
            resid += 2.0 * near_pole.ln();
        }
        min_r = min_r.min(resid);
        max_r = max_r.max(resid);
    }
    Ok(GVerify {
        min_log_ratio: min_r,
        max_log_ratio: max_r,
        spread: max_r - min_r,
        grid_points: grid.len(),
    })
}

/// Mid-annulus guard grid up to the model's cap, pre-filtered to respect
/// the δ-clearance from the singular set.
pub fn guard_grid(
    g: &GModel,
    s: &RadiiSchedule,
    angular: usize,
    delta: f64,
) -> Result<Vec<Complex64>> {
    let cap = g.grid_cap(s);
    let zeros = g.zero_set();
    let poles = g.pole_set();
    let mut out = Vec::new();
    for n in 0..cap {
        // log-mid gap inside annulus n
        let lg = 0.5 * (s.gap(n).ln() + s.gap(n + 1).ln());
        let r = 1.0 - lg.exp();
        let phase = n as f64 * GOLDEN_ANGLE * 0.5;
        for k in 0..angular {
            let z = Complex64::from_polar(r, phase + TAU * k as f64 / angular as f64);
            if nearest_rho(z, &zeros)? >= delta
                && (poles.is_empty() || nearest_rho(z, poles)? >= delta)
            {
                out.push(z);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Guard("guard grid entirely inside δ-exclusion".into()));
    }
    Ok(out)
}
