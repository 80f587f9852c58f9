//! Finite-m estimates of the upper and lower densities of a point
//! sequence: partial sums Σ (1 − ρ(z, λ_j)) over |λ_j| ≤ r_{n(z)+m},
//! normalized by m, with sup/inf over anchor families and tail-window
//! extremes standing in for limsup/liminf.  Classification against the
//! (log 2)/2 threshold decides interpolation/sampling candidacy.

use crate::error::{Error, Result};
use crate::geometry::{rho, PointSequence, DELTA_SEP};
use crate::weights::RadiiSchedule;
use crate::{GOLDEN_ANGLE, HALF_LOG2};
use num_complex::Complex64;
use serde::Serialize;

/// Anchor family for the sup/inf over z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Anchors {
    /// The sequence points themselves (the modified upper density).
    Points,
    /// A radial×angular grid over annuli 0..=N−m_max.
    Grid { radial: usize, angular: usize },
}

pub const DEFAULT_GRID: Anchors = Anchors::Grid {
    radial: 64,
    angular: 128,
};

#[derive(Debug, Clone, Serialize)]
pub struct PerM {
    pub m: usize,
    pub sup_value: f64,
    pub inf_value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityReport {
    pub per_m: Vec<PerM>,
    pub m_range: (usize, usize),
    /// Max of sup_value over the tail window m ∈ [max(m_min, m_max/2), m_max].
    pub d_plus_est: f64,
    /// Min of inf_value over the same tail window.
    pub d_minus_est: f64,
    /// Convergence diagnostic: slope of sup_value across the tail window.
    pub slope: f64,
    pub anchors_used: usize,
}

/// Σ over λ_j with |λ_j| ≤ r_{n(z)+m} (closed) or < (open) of
/// (1 − ρ(z, λ_j)).
pub fn partial_sum(
    seq: &PointSequence,
    z: Complex64,
    m: usize,
    s: &RadiiSchedule,
    closed: bool,
) -> Result<f64> {
    let (nz, overflow) = s.annulus_index(z)?;
    if overflow || nz + m > s.n_max() {
        return Err(Error::InvalidParameter(format!(
            "n(z) + m = {} exceeds N = {}",
            nz + m,
            s.n_max()
        )));
    }
    let g_cut = s.gap(nz + m);
    let mut acc = 0.0;
    for &lam in seq.points() {
        let g_l = 1.0 - lam.norm();
        let inside = if closed { g_l >= g_cut } else { g_l > g_cut };
        if inside {
            acc += 1.0 - rho(z, lam)?;
        }
    }
    Ok(acc)
}

fn grid_anchors(s: &RadiiSchedule, n_cap: usize, radial: usize, angular: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(radial * angular);
    for i in 0..radial {
        // Fractional annulus level, mid-cell; gap interpolated in log scale.
        let u = (i as f64 + 0.5) / radial as f64 * n_cap as f64;
        let j = (u.floor() as usize).min(n_cap.saturating_sub(1));
        let frac = u - j as f64;
        let lg = s.gap(j).ln() * (1.0 - frac) + s.gap(j + 1).ln() * frac;
        let r = 1.0 - lg.exp();
        let phase = i as f64 * GOLDEN_ANGLE;
        for k in 0..angular {
            let t = phase + 2.0 * std::f64::consts::PI * k as f64 / angular as f64;
            out.push(Complex64::from_polar(r, t));
        }
    }
    out
}

/// Per-anchor cumulative partial sums for every m in one pass over Λ.
/// Returns (closed_sums, open_sums), indexed by m − m_min.
fn anchor_sums(
    seq: &PointSequence,
    z: Complex64,
    s: &RadiiSchedule,
    m_min: usize,
    m_max: usize,
    exclude_self: bool,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (nz, overflow) = s.annulus_index(z)?;
    if overflow || nz + m_max > s.n_max() {
        return Err(Error::InvalidParameter(format!(
            "anchor annulus {nz} + m_max {m_max} exceeds N = {}",
            s.n_max()
        )));
    }
    let width = m_max - m_min + 1;
    let mut diff_closed = vec![0.0f64; width + 1];
    let mut diff_open = vec![0.0f64; width + 1];
    for &lam in seq.points() {
        let r = rho(z, lam)?;
        if exclude_self && r == 0.0 {
            continue;
        }
        let t = 1.0 - r;
        let g_l = 1.0 - lam.norm();
        // Smallest m with g_{nz+m} ≤ g_l (closed) resp. < g_l (open);
        // gaps decrease in m, so the condition is upward-closed in m.
        let m0_closed = first_m(s, nz, m_max, g_l, true);
        let m0_open = first_m(s, nz, m_max, g_l, false);
        if let Some(m0) = m0_closed {
            diff_closed[m0.max(m_min) - m_min] += t;
        }
        if let Some(m0) = m0_open {
            diff_open[m0.max(m_min) - m_min] += t;
        }
    }
    let cum = |d: &[f64]| {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(width);
        for v in &d[..width] {
            acc += v;
            out.push(acc);
        }
        out
    };
    Ok((cum(&diff_closed), cum(&diff_open)))
}

/// Smallest m ≤ m_max with gap(nz+m) ≤ g_l (closed) or < g_l (open).
fn first_m(s: &RadiiSchedule, nz: usize, m_max: usize, g_l: f64, closed: bool) -> Option<usize> {
    let ok = |m: usize| {
        let g = s.gap(nz + m);
        if closed {
            g <= g_l
        } else {
            g < g_l
        }
    };
    if !ok(m_max) {
        return None;
    }
    let (mut lo, mut hi) = (0usize, m_max); // hi always satisfies
    while lo < hi {
        let mid = (lo + hi) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(hi)
}

fn density_scan(
    seq: &PointSequence,
    s: &RadiiSchedule,
    m_range: (usize, usize),
    anchors: Anchors,
    exclude_self: bool,
) -> Result<DensityReport> {
    let (m_min, m_max) = m_range;
    if m_min < 1 || m_min > m_max {
        return Err(Error::InvalidParameter(format!("bad m range [{m_min}, {m_max}]")));
    }
    if m_max > s.n_max() {
        return Err(Error::InvalidParameter(format!(
            "m_max {m_max} exceeds N = {}",
            s.n_max()
        )));
    }
    if seq.is_empty() {
        return Err(Error::Empty("sequence".into()));
    }
    let n_cap = s.n_max() - m_max;
    let anchor_points: Vec<Complex64> = match anchors {
        Anchors::Points => seq
            .points()
            .iter()
            .copied()
            .filter(|&z| {
                let (n, over) = s.annulus_index(z).unwrap_or((usize::MAX, true));
                !over && n <= n_cap
            })
            .collect(),
        Anchors::Grid { radial, angular } => {
            if radial < 1 || angular < 1 {
                return Err(Error::InvalidParameter("grid anchors need ≥ 1×1".into()));
            }
            grid_anchors(s, n_cap, radial, angular)
        }
    };
    if anchor_points.is_empty() {
        return Err(Error::InvalidParameter(
            "no anchors survive the n(z) ≤ N − m_max restriction".into(),
        ));
    }
    let width = m_max - m_min + 1;
    let mut sup = vec![f64::NEG_INFINITY; width];
    let mut inf = vec![f64::INFINITY; width];
    for &z in &anchor_points {
        let (closed, open) = anchor_sums(seq, z, s, m_min, m_max, exclude_self)?;
        for i in 0..width {
            let m = (m_min + i) as f64;
            sup[i] = sup[i].max(closed[i] / m);
            inf[i] = inf[i].min(open[i] / m);
        }
    }
    let per_m: Vec<PerM> = (0..width)
        .map(|i| PerM {
            m: m_min + i,
            sup_value: sup[i],
            inf_value: inf[i],
        })
        .collect();
    let tail_start = (m_max / 2).max(m_min);
    let tail: Vec<&PerM> = per_m.iter().filter(|p| p.m >= tail_start).collect();
    let d_plus_est = tail.iter().map(|p| p.sup_value).fold(f64::NEG_INFINITY, f64::max);
    let d_minus_est = tail.iter().map(|p| p.inf_value).fold(f64::INFINITY, f64::min);
    let slope = if tail.len() >= 2 {
        (tail[tail.len() - 1].sup_value - tail[0].sup_value)
            / (tail[tail.len() - 1].m - tail[0].m).max(1) as f64
    } else {
        0.0
    };
    Ok(DensityReport {
        per_m,
        m_range,
        d_plus_est,
        d_minus_est,
        slope,
        anchors_used: anchor_points.len(),
    })
}

/// Modified upper density estimate: sup over anchors of the closed-cutoff
/// partial sum / m, tail-window max.
pub fn upper_density(
    seq: &PointSequence,
    s: &RadiiSchedule,
    m_range: (usize, usize),
    anchors: Anchors,
    exclude_self: bool,
) -> Result<DensityReport> {
    density_scan(seq, s, m_range, anchors, exclude_self)
}

/// Lower density estimate: inf over grid anchors of the open-cutoff
/// partial sum / m, tail-window min.  Point anchors are rejected — the
/// self-term biases the inf upward.
pub fn lower_density(
    seq: &PointSequence,
    s: &RadiiSchedule,
    m_range: (usize, usize),
    anchors: Anchors,
) -> Result<DensityReport> {
    if anchors == Anchors::Points {
        return Err(Error::InvalidParameter(
            "lower density requires grid anchors".into(),
        ));
    }
    density_scan(seq, s, m_range, anchors, false)
}

#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub separated: bool,
    pub separation: f64,
    pub d_plus: f64,
    pub d_minus: f64,
    pub interp_candidate: bool,
    pub sampling_candidate: bool,
    pub threshold: f64,
    pub margin: f64,
}

#[derive(Debug, Clone)]
pub struct ClassifyConfig {
    pub m_range: (usize, usize),
    pub margin: f64,
    pub delta_sep: f64,
    pub exclude_self: bool,
    pub grid: Anchors,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            m_range: (4, 8),
            margin: 0.02,
            delta_sep: DELTA_SEP,
            exclude_self: false,
            grid: DEFAULT_GRID,
        }
    }
}

/// Interpolation candidate: separated and d⁺ < (log 2)/2 − margin.
/// Sampling candidate: separated, d⁺ finite, d⁻ > (log 2)/2 + margin.
pub fn classify(
    seq: &PointSequence,
    s: &RadiiSchedule,
    cfg: &ClassifyConfig,
) -> Result<Classification> {
    let up = upper_density(seq, s, cfg.m_range, Anchors::Points, cfg.exclude_self)?;
    let low = lower_density(seq, s, cfg.m_range, cfg.grid)?;
    let separated = seq.is_separated(cfg.delta_sep);
    let d_plus = up.d_plus_est;
    let d_minus = low.d_minus_est;
    Ok(Classification {
        separated,
        separation: seq.separation(),
        d_plus,
        d_minus,
        interp_candidate: separated && d_plus < HALF_LOG2 - cfg.margin,
        sampling_candidate: separated && d_plus.is_finite() && d_minus > HALF_LOG2 + cfg.margin,
        threshold: HALF_LOG2,
        margin: cfg.margin,
    })
}
