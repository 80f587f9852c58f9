//! Finite-dimensional certificates: the normalized kernel Gram matrix and
//! its minimum eigenvalue, frame bounds on polynomial subspaces, the
//! explicit interpolation operator built from a peak function G, the
//! sampling reconstruction formula, and the Blaschke-quotient test
//! functions used on the necessity side.

use crate::construction::{GCase, GModel, DELTA_EVAL};
use crate::error::{Error, Result};
use crate::geometry::{rho, PointSequence, DELTA_SEP};
use crate::space::KernelModel;
use crate::weights::RadiiSchedule;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

/// Kernel-tail guard shared by the matrix builders.
fn check_tail(km: &KernelModel, points: &[Complex64], degree: usize) -> Result<()> {
    for &z in points {
        let q = z.norm_sqr();
        let bound = km.tail_bound_for_degree(q, degree);
        let diag = km.eval(z, z).value.re;
        if bound > 1e-3 * diag {
            return Err(Error::KernelTail { bound, tol: 1e-3 });
        }
    }
    Ok(())
}

/// G_{jl} = K(λ_j, λ_l)/√(K_jj K_ll): Hermitian, unit diagonal, PSD.
pub fn normalized_gram(seq: &PointSequence, km: &KernelModel) -> Result<DMatrix<Complex64>> {
    if seq.is_empty() {
        return Err(Error::Empty("sequence".into()));
    }
    check_tail(km, seq.points(), km.degree())?;
    let n = seq.len();
    let diag: Vec<f64> = seq
        .points()
        .iter()
        .map(|&z| km.eval(z, z).value.re)
        .collect();
    let mut g = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        g[(j, j)] = Complex64::new(1.0, 0.0);
        for l in j + 1..n {
            let v = km.eval(seq.points()[j], seq.points()[l]).value / (diag[j] * diag[l]).sqrt();
            g[(j, l)] = v;
            g[(l, j)] = v.conj();
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, Serialize)]
pub struct InterpCertificate {
    pub min_eig: f64,
    pub max_eig: f64,
    pub separated: bool,
    pub separation: f64,
    pub verdict: bool,
    pub threshold: f64,
}

/// Smallest eigenvalue of the normalized Gram, coupled with the
/// separation flag.  A report, not a claimed equivalence.
pub fn interpolation_certificate(
    seq: &PointSequence,
    km: &KernelModel,
    threshold: f64,
) -> Result<InterpCertificate> {
    let g = normalized_gram(seq, km)?;
    let eigs = g.symmetric_eigenvalues();
    let min_eig = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_eig = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !min_eig.is_finite() {
        return Err(Error::Eigen("non-finite Gram eigenvalue".into()));
    }
    let separated = seq.is_separated(DELTA_SEP);
    Ok(InterpCertificate {
        min_eig,
        max_eig,
        separated,
        separation: seq.separation(),
        verdict: separated && min_eig >= threshold,
        threshold,
    })
}

/// Exact frame bounds on the degree-d polynomial subspace: extreme
/// eigenvalues of M = Σ_j v_j v_j^H / K(λ_j, λ_j) with
/// (v_j)_k = conj(λ_j)^k/√c_k, so that v_j^H b = f(λ_j) in the
/// orthonormal coefficients b_k = a_k √c_k.
pub fn frame_bounds(seq: &PointSequence, km: &KernelModel, degree: usize) -> Result<(f64, f64)> {
    if degree > km.degree() {
        return Err(Error::InvalidParameter(format!(
            "frame degree {degree} exceeds model degree {}",
            km.degree()
        )));
    }
    if seq.is_empty() {
        return Ok((0.0, 0.0));
    }
    // The frame statement is exact on the degree-d subspace; the tail flag
    // fires only when the model itself cannot resolve the kernel at a node.
    check_tail(km, seq.points(), km.degree())?;
    let dim = degree + 1;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for &lam in seq.points() {
        // full-model diagonal: keeps M_d a principal submatrix of M_{d'}
        // for d < d', hence A nonincreasing and B nondecreasing in d
        let diag = km.eval(lam, lam).value.re;
        let mut v = Vec::with_capacity(dim);
        let mut zp = Complex64::new(1.0, 0.0);
        for k in 0..dim {
            v.push(zp.conj() / km.coeff(k).sqrt());
            zp *= lam;
        }
        for j in 0..dim {
            for l in 0..dim {
                m[(j, l)] += v[j] * v[l].conj() / diag;
            }
        }
    }
    let eigs = m.symmetric_eigenvalues();
    let a = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    let b = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::Eigen("non-finite frame eigenvalue".into()));
    }
    Ok((a.max(0.0), b))
}

/// Plateau check over a ladder of frame lower bounds A(D) at doubling
/// degrees: stable iff the last two doublings change A by < 5% relative
/// and A stays positive.
pub fn sampling_stable(a_ladder: &[f64]) -> bool {
    if a_ladder.len() < 3 {
        return false;
    }
    let n = a_ladder.len();
    let (a0, a1, a2) = (a_ladder[n - 3], a_ladder[n - 2], a_ladder[n - 1]);
    if a2 <= 0.0 {
        return false;
    }
    let rel = |x: f64, y: f64| (x - y).abs() / y.abs().max(1e-300);
    rel(a1, a2) < 0.05 && rel(a0, a1) < 0.05
}

/// Evaluator shared by the interpolation operator and the sampling
/// reconstruction; precomputes P_j(λ_j) = Π_{k≠j-factor} at each node.
pub struct PeakOperator {
    g: GModel,
    /// log-magnitude and unit phase of P_j at λ_j.
    node_pj: Vec<(f64, Complex64)>,
}

impl PeakOperator {
    pub fn new(g: GModel) -> Result<Self> {
        let mut node_pj = Vec::with_capacity(g.base.len());
        for j in 0..g.base.len() {
            let lam = g.base.points()[j];
            let (logm, phase) = g.eval_log(lam, Some(j))?;
            if !logm.is_finite() {
                return Err(Error::Guard(format!(
                    "P_j(λ_j) degenerate at node {j} (another singularity at the node)"
                )));
            }
            if logm < -600.0 {
                return Err(Error::Guard(format!("G'(λ_{j}) underflows: log = {logm}")));
            }
            node_pj.push((logm, phase));
        }
        Ok(PeakOperator { g, node_pj })
    }

    pub fn model(&self) -> &GModel {
        &self.g
    }

    fn blaschke_factor(lam: Complex64, z: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        if lam.norm() == 0.0 {
            z
        } else {
            (lam.norm() / lam) * (lam - z) / (one - lam.conj() * z)
        }
    }

    /// Guard shared by both evaluations: z must stay δ-clear of the
    /// non-node singularities (atom zeros in case I, poles in case S).
    fn guard(&self, z: Complex64) -> Result<()> {
        for &a in &self.g.atoms {
            if rho(z, a)? < DELTA_EVAL {
                return Err(Error::Guard(format!(
                    "evaluation point within ρ < {DELTA_EVAL} of an atom"
                )));
            }
        }
        Ok(())
    }

    /// Per-node quotient P_j(z)/P_j(λ_j) for all j, via one full pass:
    /// log P_j(z) = log G(z) − log b_j(z).
    fn node_quotients(&self, z: Complex64) -> Result<Vec<Complex64>> {
        let (s_log, s_phase) = self.g.eval_log(z, None)?;
        let n = self.g.base.len();
        let mut out = Vec::with_capacity(n);
        for j in 0..n {
            let lam = self.g.base.points()[j];
            let bj = Self::blaschke_factor(lam, z);
            let bn = bj.norm();
            if bn == 0.0 || !s_log.is_finite() {
                // z sits on a node; handled by the caller's near-node path
                out.push(Complex64::new(f64::NAN, 0.0));
                continue;
            }
            let (pl, pp) = self.node_pj[j];
            let logq = s_log - bn.ln() - pl;
            let phase = s_phase * (bn / bj) * pp.conj();
            out.push(phase * logq.exp());
        }
        Ok(out)
    }

    /// f(z) = Σ_j a_j · (P_j(z)/P_j(λ_j)) · (1−|λ_j|²)²/(1−λ̄_j z)².
    /// Interpolates f(λ_j) = a_j exactly; requires a case-I model.
    pub fn interpolate(&self, a: &[Complex64], z: Complex64) -> Result<Complex64> {
        if self.g.case != GCase::I {
            return Err(Error::InvalidParameter("interpolation needs a case-I model".into()));
        }
        self.eval_series(a, z, |lam, z| {
            let one = Complex64::new(1.0, 0.0);
            let d = one - lam.conj() * z;
            let w = 1.0 - lam.norm_sqr();
            Complex64::new(w * w, 0.0) / (d * d)
        })
    }

    /// f(z) = Σ_j f_j · (P_j(z)/P_j(λ_j)) · (1−|λ_j|²)(1−|z|²)/|1−λ̄_j z|².
    /// Requires a case-S model; poles guard applies.
    pub fn reconstruct(&self, samples: &[Complex64], z: Complex64) -> Result<Complex64> {
        if self.g.case != GCase::S {
            return Err(Error::InvalidParameter("reconstruction needs a case-S model".into()));
        }
        self.eval_series(samples, z, |lam, z| {
            let one = Complex64::new(1.0, 0.0);
            let d2 = (one - lam.conj() * z).norm_sqr();
            Complex64::new((1.0 - lam.norm_sqr()) * (1.0 - z.norm_sqr()) / d2, 0.0)
        })
    }

    fn eval_series<W>(&self, data: &[Complex64], z: Complex64, weight: W) -> Result<Complex64>
    where
        W: Fn(Complex64, Complex64) -> Complex64,
    {
        let n = self.g.base.len();
        if data.len() != n {
            return Err(Error::InvalidParameter(format!(
                "data length {} ≠ node count {n}",
                data.len()
            )));
        }
        self.guard(z)?;
        // near-node limit: every other term carries the vanishing factor
        for (j, &lam) in self.g.base.points().iter().enumerate() {
            if rho(z, lam)? < 1e-9 {
                return Ok(data[j]);
            }
        }
        let quot = self.node_quotients(z)?;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            let lam = self.g.base.points()[j];
            acc += data[j] * quot[j] * weight(lam, z);
        }
        Ok(acc)
    }
}

/// Data-admissibility norms: the kernel-diagonal weighting and the
/// 2^{-n}(1−|λ|) surrogate, both reported.
#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityNorms {
    pub kernel_weighted: f64,
    pub surrogate: f64,
}

pub fn admissibility_norms(
    seq: &PointSequence,
    a: &[Complex64],
    km: &KernelModel,
    s: &RadiiSchedule,
) -> Result<AdmissibilityNorms> {
    if a.len() != seq.len() {
        return Err(Error::InvalidParameter("data/sequence length mismatch".into()));
    }
    let mut kernel_weighted = 0.0;
    let mut surrogate = 0.0;
    for (&lam, &aj) in seq.points().iter().zip(a) {
        let kd = km.eval(lam, lam).value.re;
        kernel_weighted += aj.norm_sqr() / kd;
        let (n, overflow) = s.annulus_index(lam)?;
        if overflow {
            return Err(Error::InvalidParameter("node beyond r_N".into()));
        }
        surrogate += aj.norm_sqr() * (1.0 - lam.norm()) * 0.5f64.powi(n as i32);
    }
    Ok(AdmissibilityNorms {
        kernel_weighted,
        surrogate,
    })
}

/// f_{l,m}(z) = B_{l,m}(z)/(1−λ̄_l z), the Blaschke quotient with zeros at
/// the other sequence points up to radius r_{n(λ_l)+m}.
pub struct NecessityFn {
    pub zeros: Vec<Complex64>,
    pub lam: Complex64,
}

pub fn necessity_test_function(
    seq: &PointSequence,
    s: &RadiiSchedule,
    l: usize,
    m: usize,
) -> Result<NecessityFn> {
    if l >= seq.len() {
        return Err(Error::InvalidParameter(format!("index {l} out of range")));
    }
    let lam = seq.points()[l];
    let (nl, overflow) = s.annulus_index(lam)?;
    if overflow || nl + m > s.n_max() {
        return Err(Error::InvalidParameter(format!(
            "n(λ_l) + m = {} exceeds N = {}",
            nl + m,
            s.n_max()
        )));
    }
    let g_cut = s.gap(nl + m);
    let zeros = seq
        .points()
        .iter()
        .enumerate()
        .filter(|&(j, z)| j != l && 1.0 - z.norm() >= g_cut)
        .map(|(_, &z)| z)
        .collect();
    Ok(NecessityFn { zeros, lam })
}

impl NecessityFn {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        let mut acc = one / (one - self.lam.conj() * z);
        for &w in &self.zeros {
            acc *= PeakOperator::blaschke_factor(w, z);
        }
        acc
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificationReport {
    pub gram_min_eig: f64,
    pub frame_a: f64,
    pub frame_b: f64,
    pub degree_used: usize,
    pub separated: bool,
    pub separation: f64,
}

/// One-stop report: Gram min-eig plus frame bounds at the given degree.
pub fn certification_report(
    seq: &PointSequence,
    km: &KernelModel,
    degree: usize,
) -> Result<CertificationReport> {
    let cert = interpolation_certificate(seq, km, 1e-3)?;
    let (a, b) = frame_bounds(seq, km, degree)?;
    Ok(CertificationReport {
        gram_min_eig: cert.min_eig,
        frame_a: a,
        frame_b: b,
        degree_used: degree,
        separated: cert.separated,
        separation: cert.separation,
    })
}
