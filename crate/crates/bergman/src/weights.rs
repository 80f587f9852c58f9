//! Admissible radial weights on [0,1), their tail integrals, the dyadic
//! radii schedule tail(r_n) = 2^{-n}, and the alpha transform
//! w_α = (1-α) w tail^{-α}.
//!
//! Radii are stored as gaps 1 - r_n.  For fast-growing weights the gaps
//! underflow long before the radii stop being distinct as reals, so every
//! internal formula works with the gap, never with r itself.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Minimum representable gap for a radius that can still host disk points.
const MIN_GAP: f64 = 1e-300;

#[derive(Debug, Clone)]
enum Kind {
    Constant,
    /// w(x) = (1-α)(1-x)^{-α}, α < 1.
    StandardAlpha(f64),
    /// w(x) = (1-x)^{-1} log^{-2}(e/(1-x)).
    LogLog,
    /// Piecewise-linear density from (x, w) samples, constant beyond the
    /// last sample; `scale` normalizes the total integral to 1.
    Tabulated {
        xs: Vec<f64>,
        ws: Vec<f64>,
        scale: f64,
    },
    /// w_α built on another weight.
    AlphaTransform { base: Box<Weight>, alpha: f64 },
}

/// A positive continuous weight on [0,1), normalized so that
/// ∫_0^1 w = 1, i.e. tail(0) = 1.
#[derive(Debug, Clone)]
pub struct Weight {
    kind: Kind,
}

/// Parsed form of the CLI/config weight grammar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WeightSpec {
    Constant,
    Alpha(f64),
    LogLog,
    Table(String),
}

impl WeightSpec {
    /// Grammar: `constant`, `alpha:<float>`, `loglog`, `table:<path>`.
    pub fn parse(s: &str) -> Result<Self> {
        if s == "constant" {
            Ok(WeightSpec::Constant)
        } else if s == "loglog" {
            Ok(WeightSpec::LogLog)
        } else if let Some(a) = s.strip_prefix("alpha:") {
            let a: f64 = a
                .parse()
                .map_err(|_| Error::Config(format!("bad alpha value in weight spec `{s}`")))?;
            Ok(WeightSpec::Alpha(a))
        } else if let Some(p) = s.strip_prefix("table:") {
            Ok(WeightSpec::Table(p.to_string()))
        } else {
            Err(Error::Config(format!("unknown weight spec `{s}`")))
        }
    }

    pub fn label(&self) -> String {
        match self {
            WeightSpec::Constant => "constant".into(),
            WeightSpec::Alpha(a) => format!("alpha:{a}"),
            WeightSpec::LogLog => "loglog".into(),
            WeightSpec::Table(p) => format!("table:{p}"),
        }
    }
}

/// Builds a normalized weight from a spec, reading CSV samples for the
/// tabulated family (rows `x,w` sorted by x).
pub fn make_weight(spec: &WeightSpec) -> Result<Weight> {
    match spec {
        WeightSpec::Constant => Ok(Weight { kind: Kind::Constant }),
        WeightSpec::Alpha(a) => Weight::standard_alpha(*a),
        WeightSpec::LogLog => Ok(Weight { kind: Kind::LogLog }),
        WeightSpec::Table(path) => {
            let mut rdr = csv::ReaderBuilder::new()
                .has_headers(false)
                .from_path(path)?;
            let mut xs = Vec::new();
            let mut ws = Vec::new();
            for rec in rdr.records() {
                let rec = rec?;
                if rec.len() < 2 {
                    return Err(Error::InvalidWeight("table rows must be `x,w`".into()));
                }
                let x: f64 = rec[0]
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidWeight(format!("bad x `{}`", &rec[0])))?;
                let w: f64 = rec[1]
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidWeight(format!("bad w `{}`", &rec[1])))?;
                xs.push(x);
                ws.push(w);
            }
            Weight::tabulated(xs, ws)
        }
    }
}

impl Weight {
    pub fn constant() -> Self {
        Weight { kind: Kind::Constant }
    }

    pub fn loglog() -> Self {
        Weight { kind: Kind::LogLog }
    }

    pub fn standard_alpha(alpha: f64) -> Result<Self> {
        if !(alpha < 1.0) {
            return Err(Error::InvalidWeight(format!(
                "standard_alpha requires α < 1, got {alpha}"
            )));
        }
        Ok(Weight {
            kind: Kind::StandardAlpha(alpha),
        })
    }

    /// Tabulated weight; samples must be sorted by x, positive, start at
    /// x = 0 and reach at least 1 - η (η = 0.01).
    pub fn tabulated(xs: Vec<f64>, ws: Vec<f64>) -> Result<Self> {
        const ETA: f64 = 0.01;
        if xs.len() < 2 {
            return Err(Error::InvalidWeight("need at least two samples".into()));
        }
        if xs[0] > 1e-12 {
            return Err(Error::InvalidWeight("samples must start at x = 0".into()));
        }
        if *xs.last().unwrap() < 1.0 - ETA {
            return Err(Error::InvalidWeight(format!(
                "samples must cover [0, {}]",
                1.0 - ETA
            )));
        }
        if *xs.last().unwrap() >= 1.0 {
            return Err(Error::InvalidWeight("samples must stay inside [0,1)".into()));
        }
        for i in 1..xs.len() {
            if xs[i] <= xs[i - 1] {
                return Err(Error::InvalidWeight("x samples must be strictly increasing".into()));
            }
        }
        if ws.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidWeight("w samples must be positive and finite".into()));
        }
        // Raw integral: trapezoid over samples, constant tail to 1.
        let mut total = 0.0;
        for i in 1..xs.len() {
            total += 0.5 * (ws[i] + ws[i - 1]) * (xs[i] - xs[i - 1]);
        }
        total += ws[ws.len() - 1] * (1.0 - xs[xs.len() - 1]);
        Ok(Weight {
            kind: Kind::Tabulated {
                xs,
                ws,
                scale: 1.0 / total,
            },
        })
    }

    /// The scale transform w_α(x) = (1-α) w(x) tail(x)^{-α}, whose tail is
    /// tail(x)^{1-α}.
    pub fn alpha_transform(&self, alpha: f64) -> Result<Self> {
        if !(alpha < 1.0) {
            return Err(Error::InvalidWeight(format!(
                "alpha transform requires α < 1, got {alpha}"
            )));
        }
        if alpha == 0.0 {
            return Ok(self.clone());
        }
        Ok(Weight {
            kind: Kind::AlphaTransform {
                base: Box::new(self.clone()),
                alpha,
            },
        })
    }

    /// Density at x = 1 - g, expressed through the gap g ∈ (0, 1].
    pub fn density_gap(&self, g: f64) -> f64 {
        match &self.kind {
            Kind::Constant => 1.0,
            Kind::StandardAlpha(a) => (1.0 - a) * g.powf(-a),
            Kind::LogLog => {
                let l = 1.0 - g.ln();
                1.0 / (g * l * l)
            }
            Kind::Tabulated { xs, ws, scale } => {
                let x = 1.0 - g;
                scale * interp(xs, ws, x)
            }
            Kind::AlphaTransform { base, alpha } => {
                (1.0 - alpha) * base.density_gap(g) * base.tail_gap(g).powf(-alpha)
            }
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        self.density_gap(1.0 - x)
    }

    /// Tail integral ∫_{1-g}^1 w, as a function of the gap.
    pub fn tail_gap(&self, g: f64) -> f64 {
        match &self.kind {
            Kind::Constant => g,
            Kind::StandardAlpha(a) => g.powf(1.0 - a),
            Kind::LogLog => 1.0 / (1.0 - g.ln()),
            Kind::Tabulated { xs, ws, scale } => {
                let x = 1.0 - g;
                scale * tail_tabulated(xs, ws, x)
            }
            Kind::AlphaTransform { base, alpha } => base.tail_gap(g).powf(1.0 - alpha),
        }
    }

    pub fn tail(&self, x: f64) -> f64 {
        self.tail_gap(1.0 - x)
    }

    /// Sampled doubling report: c_min = min over t in (0, 1/2] of
    /// w(1-t)/w(1-2t).
    pub fn check_doubling(&self, grid_size: usize) -> Result<DoublingReport> {
        if grid_size < 16 {
            return Err(Error::InvalidParameter("doubling grid must have ≥ 16 points".into()));
        }
        let mut c_min = f64::INFINITY;
        let mut worst_t = f64::NAN;
        for i in 1..=grid_size {
            let t = 0.5 * i as f64 / grid_size as f64;
            let num = self.density_gap(t);
            let den = self.density_gap(2.0 * t);
            if !num.is_finite() || !den.is_finite() || den <= 0.0 {
                return Err(Error::Guard(format!("weight evaluation failed at t = {t}")));
            }
            let r = num / den;
            if r < c_min {
                c_min = r;
                worst_t = t;
            }
        }
        Ok(DoublingReport { c_min, worst_t })
    }

    /// Solves tail(r_n) = 2^{-n} for n = 0..=N by bisection in log-gap.
    pub fn compute_radii(&self, n_radii: usize, tol: f64) -> Result<RadiiSchedule> {
        if n_radii < 1 {
            return Err(Error::InvalidParameter("need N ≥ 1".into()));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter("tol must be positive".into()));
        }
        let mut gaps = Vec::with_capacity(n_radii + 1);
        for n in 0..=n_radii {
            let target = 0.5f64.powi(n as i32);
            let g = self.solve_tail(target, tol)?;
            if g < MIN_GAP {
                return Err(Error::Schedule(format!(
                    "1 - r_{n} underflows ({g:e}); reduce N for this weight"
                )));
            }
            gaps.push(g);
        }
        for n in 0..n_radii {
            if gaps[n] <= gaps[n + 1] {
                return Err(Error::Schedule(format!(
                    "radii not strictly increasing at n = {n}; tail resolution too coarse"
                )));
            }
        }
        Ok(RadiiSchedule { gaps })
    }

    /// Bisection on t = ln g; the tail is increasing in g.  `tol` is
    /// relative to the target so deep radii stay accurate.
    fn solve_tail(&self, target: f64, tol: f64) -> Result<f64> {
        let tol = tol * target;
        let mut lo = MIN_GAP.ln() - 10.0;
        let mut hi = 0.0_f64; // g = 1
        let f_hi = self.tail_gap(1.0);
        if (f_hi - target).abs() <= tol {
            return Ok(1.0);
        }
        if f_hi < target {
            return Err(Error::Schedule(format!(
                "tail(0) = {f_hi} below target {target}; weight not normalized?"
            )));
        }
        for _ in 0..600 {
            let mid = 0.5 * (lo + hi);
            let v = self.tail_gap(mid.exp());
            if (v - target).abs() <= tol {
                return Ok(mid.exp());
            }
            if v > target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let g = (0.5 * (lo + hi)).exp();
        let v = self.tail_gap(g);
        if (v - target).abs() <= tol.max(1e-9 * target) {
            Ok(g)
        } else {
            Err(Error::Schedule(format!(
                "bisection stalled: tail = {v:e}, target = {target:e}"
            )))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DoublingReport {
    pub c_min: f64,
    pub worst_t: f64,
}

fn interp(xs: &[f64], ws: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ws[0];
    }
    let last = xs.len() - 1;
    if x >= xs[last] {
        return ws[last];
    }
    let i = xs.partition_point(|&xi| xi <= x);
    let (x0, x1) = (xs[i - 1], xs[i]);
    let t = (x - x0) / (x1 - x0);
    ws[i - 1] * (1.0 - t) + ws[i] * t
}

/// ∫_x^1 of the piecewise-linear density with constant extension.
fn tail_tabulated(xs: &[f64], ws: &[f64], x: f64) -> f64 {
    let last = xs.len() - 1;
    if x >= xs[last] {
        return ws[last] * (1.0 - x);
    }
    let x = x.max(xs[0]);
    let i = xs.partition_point(|&xi| xi <= x).min(last);
    // Partial segment [x, xs[i]].
    let wx = interp(xs, ws, x);
    let mut acc = 0.5 * (wx + ws[i]) * (xs[i] - x);
    for j in i + 1..=last {
        acc += 0.5 * (ws[j] + ws[j - 1]) * (xs[j] - xs[j - 1]);
    }
    acc + ws[last] * (1.0 - xs[last])
}

/// Increasing radii r_0 ≤ … ≤ r_N with tail(r_n) = 2^{-n}, stored as gaps.
#[derive(Debug, Clone)]
pub struct RadiiSchedule {
    gaps: Vec<f64>,
}

impl RadiiSchedule {
    /// Builds the exact constant-weight schedule r_n = 1 - 2^{-n}.
    pub fn dyadic(n_radii: usize) -> Self {
        RadiiSchedule {
            gaps: (0..=n_radii).map(|n| 0.5f64.powi(n as i32)).collect(),
        }
    }

    /// Builds a schedule from explicit gaps 1 - r_n; gaps must start at 1
    /// (r_0 = 0) and decrease strictly.
    pub fn from_gaps(gaps: Vec<f64>) -> Result<Self> {
        if gaps.len() < 2 {
            return Err(Error::InvalidParameter("need at least two radii".into()));
        }
        if gaps[0] != 1.0 {
            return Err(Error::Schedule("gaps must start at 1 (r_0 = 0)".into()));
        }
        for n in 1..gaps.len() {
            if !(gaps[n] > 0.0) || gaps[n] >= gaps[n - 1] {
                return Err(Error::Schedule(format!("gaps not strictly decreasing at n = {n}")));
            }
        }
        Ok(RadiiSchedule { gaps })
    }

    pub fn n_max(&self) -> usize {
        self.gaps.len() - 1
    }

    pub fn radius(&self, n: usize) -> f64 {
        1.0 - self.gaps[n]
    }

    /// 1 - r_n.
    pub fn gap(&self, n: usize) -> f64 {
        self.gaps[n]
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..=self.n_max()).map(|n| self.radius(n)).collect()
    }

    /// inf_n (1-r_n)/(1-r_{n+1}); the Eq-style admissibility asks > 1.
    pub fn separation_ratio(&self) -> Result<f64> {
        if self.n_max() < 2 {
            return Err(Error::InvalidParameter("need at least two radii".into()));
        }
        let mut inf = f64::INFINITY;
        for n in 0..self.n_max() {
            inf = inf.min(self.gaps[n] / self.gaps[n + 1]);
        }
        Ok(inf)
    }

    /// Annulus index n(z): r_n ≤ |z| < r_{n+1}.  Returns (n, overflow);
    /// overflow is set when |z| ≥ r_N, in which case n = N.
    pub fn annulus_index_gap(&self, gap_z: f64) -> (usize, bool) {
        // r_n ≤ |z|  ⇔  gap_z ≤ gaps[n]
        if gap_z <= self.gaps[self.n_max()] {
            return (self.n_max(), true);
        }
        // gaps decreasing; find the last n with gaps[n] >= gap_z.
        let i = self.gaps.partition_point(|&g| g >= gap_z);
        (i - 1, false)
    }

    pub fn annulus_index(&self, z: num_complex::Complex64) -> Result<(usize, bool)> {
        let a = z.norm();
        if a >= 1.0 {
            return Err(Error::OutsideDisk(a));
        }
        Ok(self.annulus_index_gap(1.0 - a))
    }
}
