//! Eigenvalue-like constants `lambda_1`, sampled checks of the growth
//! inequalities, existence-case selection with the a-priori bounds, and the
//! coercivity construction for scalar problems.
//!
//! Growth checks quantify over all of `R^n x R^m` in theory; here they run on
//! seeded samples and only ever produce a *sampled certificate*.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::boundary::{cone_diagonal_check, BoundaryOperator, DomainDescriptor};
use crate::expr::EvalError;
use crate::geometry::{dot, norm};
use crate::matrices::{apriori_bound_iv, ConvMatrix, MatrixError};
use crate::nonlinear::Forcing;

/// Grid size below which finite-difference `lambda_1` estimates are refined.
pub const LAMBDA1_MIN_INTERVALS: usize = 400;

/// Sampled inequalities pass when the worst violation is at most this.
pub const GROWTH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("not coercive: {0}")]
    NotCoercive(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lambda1Method {
    Analytic,
    EigFd,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lambda1Estimate {
    pub value: f64,
    pub method: Lambda1Method,
    pub grid_n: usize,
}

/// `lambda_1` of a boundary operator with cone-type domain.
///
/// When the domain contains the diagonal, constants are admissible and the
/// value is exactly zero. Otherwise the smallest eigenvalue of the discrete
/// problem `-u'' = lambda u` on the boundary subspace is returned. The
/// `|u'| <= 1` restriction in the definition does not change the infimum on
/// cones, as the Rayleigh quotient is scale invariant.
pub fn lambda1_estimate(bop: &BoundaryOperator, t_end: f64, n: usize) -> Result<Lambda1Estimate, AnalysisError> {
    let domain = bop.domain();
    if !domain.is_cone() {
        return Err(AnalysisError::Unsupported(format!("{} has a non-conical domain", bop.kind().name())));
    }
    let separated = cone_diagonal_check(bop).map_err(|e| AnalysisError::Unsupported(e.to_string()))?;
    if !separated && matches!(domain, DomainDescriptor::FullSpace | DomainDescriptor::Diagonal) {
        return Ok(Lambda1Estimate { value: 0.0, method: Lambda1Method::Analytic, grid_n: 0 });
    }
    let value = lambda1_fd(domain, t_end, n)?;
    Ok(Lambda1Estimate { value, method: Lambda1Method::EigFd, grid_n: n })
}

/// Closed-form `lambda_1` on `[0, T]`: `(pi / T)^2` for the Dirichlet and
/// antiperiodic subspaces, zero when the diagonal is admissible.
pub fn lambda1_reference(domain: DomainDescriptor, t_end: f64) -> Option<f64> {
    match domain {
        DomainDescriptor::SinglePoint0 | DomainDescriptor::Antidiagonal => {
            Some((std::f64::consts::PI / t_end).powi(2))
        }
        DomainDescriptor::FullSpace | DomainDescriptor::Diagonal => Some(0.0),
        DomainDescriptor::ConvexSet => None,
    }
}

/// Smallest eigenvalue of the piecewise-linear stiffness matrix against the
/// lumped mass matrix on the subspace of grid functions whose end values lie
/// in `domain` (one scalar component; the problem decouples by component).
///
/// Found by bisection on the Sylvester inertia of `K - s M`.
pub fn lambda1_fd(domain: DomainDescriptor, t_end: f64, n: usize) -> Result<f64, AnalysisError> {
    if !(t_end > 0.0) || n < 2 {
        return Err(AnalysisError::Invalid(format!("need T > 0 and N >= 2, got T={t_end}, N={n}")));
    }
    let ends: Vec<Vec<(usize, f64)>> = match domain {
        DomainDescriptor::SinglePoint0 => vec![],
        DomainDescriptor::FullSpace => vec![vec![(0, 1.0)], vec![(n, 1.0)]],
        DomainDescriptor::Diagonal => vec![vec![(0, 1.0), (n, 1.0)]],
        DomainDescriptor::Antidiagonal => vec![vec![(0, 1.0), (n, -1.0)]],
        DomainDescriptor::ConvexSet => {
            return Err(AnalysisError::Unsupported("non-conical domain".into()));
        }
    };
    // fold the grid so that both ends sit next to each other: bandwidth 3
    let fold = |j: usize| 2 * j.min(n - j) + usize::from(2 * j > n);
    let mut dofs: Vec<Vec<(usize, f64)>> = ends;
    dofs.extend((1..n).map(|j| vec![(j, 1.0)]));
    dofs.sort_by_key(|d| d.iter().map(|&(j, _)| fold(j)).min().unwrap());

    let mut of_node: Vec<Option<(usize, f64)>> = vec![None; n + 1];
    for (k, d) in dofs.iter().enumerate() {
        for &(j, c) in d {
            of_node[j] = Some((k, c));
        }
    }
    let h = t_end / n as f64;
    let size = dofs.len();
    let mut mass = vec![0.0; size];
    for (j, slot) in of_node.iter().enumerate() {
        if let Some((k, c)) = slot {
            mass[*k] += c * c * if j == 0 || j == n { 0.5 * h } else { h };
        }
    }
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    for e in 0..n {
        let local = [[1.0 / h, -1.0 / h], [-1.0 / h, 1.0 / h]];
        for (a, i) in [e, e + 1].into_iter().enumerate() {
            for (b, j) in [e, e + 1].into_iter().enumerate() {
                if let (Some((ka, ca)), Some((kb, cb))) = (of_node[i], of_node[j]) {
                    if ka <= kb {
                        entries.push((ka, kb, ca * cb * local[a][b]));
                    }
                }
            }
        }
    }
    let bw = entries.iter().map(|&(a, b, _)| b - a).max().unwrap_or(0);
    let mut stiff = vec![vec![0.0; bw + 1]; size];
    for (a, b, v) in entries {
        stiff[a][b - a] += v;
    }

    // eigenvalues of M^{-1} K lie in [0, 4 / h^2] by Gershgorin
    let mut lo = 0.0;
    let mut hi = 4.0 / (h * h) * 1.01 + 1.0;
    if size == 0 {
        return Err(AnalysisError::Invalid("empty subspace".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if count_below(&stiff, &mass, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Number of negative pivots of `K - s M` (upper band storage, no pivoting).
fn count_below(stiff: &[Vec<f64>], mass: &[f64], s: f64) -> usize {
    let size = stiff.len();
    let bw = stiff[0].len() - 1;
    let mut a: Vec<Vec<f64>> = stiff.to_vec();
    for (k, row) in a.iter_mut().enumerate() {
        row[0] -= s * mass[k];
    }
    let mut negatives = 0;
    for k in 0..size {
        let mut p = a[k][0];
        if p == 0.0 {
            p = -f64::EPSILON * (1.0 + s * mass[k]);
        }
        if p < 0.0 {
            negatives += 1;
        }
        let last = (k + bw).min(size - 1);
        for i in k + 1..=last {
            let l = a[k][i - k] / p;
            if l == 0.0 {
                continue;
            }
            for j in i..=last {
                let v = a[k][j - k];
                a[i][j - i] -= l * v;
            }
        }
    }
    negatives
}

/// Sampling domain for the growth inequalities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleBox {
    pub radius: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for SampleBox {
    fn default() -> Self {
        Self { radius: 10.0, samples: 10_000, seed: 24397 }
    }
}

impl SampleBox {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        if !(self.radius > 0.0 && self.radius.is_finite()) || self.samples < 1000 {
            return Err(AnalysisError::Invalid(format!(
                "sample box needs R > 0 and at least 1000 samples, got R={} and {}",
                self.radius, self.samples
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

fn direction(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let r = norm(&v);
        if r > 1e-8 {
            return v.into_iter().map(|c| c / r).collect();
        }
    }
}

fn in_ball(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    if dim == 0 {
        return Vec::new();
    }
    let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
    direction(rng, dim).into_iter().map(|c| c * r).collect()
}

fn on_sphere(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    direction(rng, dim).into_iter().map(|c| c * radius).collect()
}

/// Seeded samples: `t` uniform in `[0, T]`; half with `x, y` uniform in the
/// ball of radius `R`, the rest boosted to the sphere of radius `R` in `x` or
/// in `y`; plus the origin at both ends of the interval.
pub fn growth_samples(n: usize, m: usize, t_end: f64, sbox: &SampleBox) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(sbox.seed);
    let r = sbox.radius;
    let mut out = Vec::with_capacity(sbox.samples + 2);
    for t in [0.0, t_end] {
        out.push(Sample { t, x: vec![0.0; n], y: vec![0.0; m] });
    }
    for k in 0..sbox.samples {
        let t = t_end * rng.random::<f64>();
        let (x, y) = match k % 4 {
            0 | 1 => (in_ball(&mut rng, n, r), in_ball(&mut rng, m, r)),
            2 => (on_sphere(&mut rng, n, r), in_ball(&mut rng, m, r)),
            _ if m == 0 => (on_sphere(&mut rng, n, r), Vec::new()),
            _ => (in_ball(&mut rng, n, r), on_sphere(&mut rng, m, r)),
        };
        out.push(Sample { t, x, y });
    }
    out
}

/// Which of the growth inequalities a forcing term is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthRole {
    /// `<f(t,x,y)|x> <= (a-1)|x|^2 + b|y|^2 + delta`
    First,
    /// `<f(t,x,y)|y> <= c|x|^2 + (d-1)|y|^2 + delta`
    Second,
    /// `<f(t,x)|x> <= (a-1)|x|^2 + delta`
    Scalar,
}

/// One growth inequality: `own` multiplies the paired variable (`a` or `d`),
/// `cross` the other one (`b` or `c`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inequality {
    pub own: f64,
    pub cross: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthCheck {
    pub pass: bool,
    pub worst_violation: f64,
    pub witness: Sample,
}

/// `<f|x> - (own-1)|x|^2 - cross|y|^2` (roles swapped for `Second`).
fn excess(
    f: &dyn Forcing,
    role: GrowthRole,
    own: f64,
    cross: f64,
    s: &Sample,
    buf: &mut [f64],
) -> Result<f64, EvalError> {
    f.eval(s.t, &s.x, &s.y, buf)?;
    let (paired, other) = match role {
        GrowthRole::First | GrowthRole::Scalar => (&s.x, &s.y),
        GrowthRole::Second => (&s.y, &s.x),
    };
    let lhs = dot(buf, paired);
    let cross_term = if role == GrowthRole::Scalar { 0.0 } else { cross * dot(other, other) };
    Ok(lhs - (own - 1.0) * dot(paired, paired) - cross_term)
}

fn role_dims(f: &dyn Forcing, role: GrowthRole, n: usize, m: usize) -> Result<(usize, usize), AnalysisError> {
    let m = if role == GrowthRole::Scalar { 0 } else { m };
    let expected = if role == GrowthRole::Second { m } else { n };
    if f.dim() != expected {
        return Err(AnalysisError::Invalid(format!(
            "forcing has {} components, the {role:?} inequality needs {expected}",
            f.dim()
        )));
    }
    Ok((n, m))
}

fn check_on(
    f: &dyn Forcing,
    role: GrowthRole,
    ineq: &Inequality,
    samples: &[Sample],
) -> Result<GrowthCheck, AnalysisError> {
    let mut buf = vec![0.0; f.dim()];
    let mut worst = f64::NEG_INFINITY;
    let mut witness = 0;
    for (i, s) in samples.iter().enumerate() {
        let v = excess(f, role, ineq.own, ineq.cross, s, &mut buf)? - ineq.delta;
        if v > worst {
            worst = v;
            witness = i;
        }
    }
    Ok(GrowthCheck { pass: worst <= GROWTH_TOL, worst_violation: worst, witness: samples[witness].clone() })
}

/// Evaluates the growth inequality of `role` on the seeded samples of `sbox`.
pub fn check_growth(
    f: &dyn Forcing,
    role: GrowthRole,
    ineq: &Inequality,
    dims: (usize, usize),
    t_end: f64,
    sbox: &SampleBox,
) -> Result<GrowthCheck, AnalysisError> {
    sbox.validate()?;
    if !(ineq.own >= 0.0 && ineq.cross >= 0.0 && ineq.delta >= 0.0) {
        return Err(AnalysisError::Invalid(format!("growth constants must be nonnegative: {ineq:?}")));
    }
    let (n, m) = role_dims(f, role, dims.0, dims.1)?;
    check_on(f, role, ineq, &growth_samples(n, m, t_end, sbox))
}

/// Smallest `delta >= 0` for which the inequality holds on every sample.
pub fn estimate_delta(
    f: &dyn Forcing,
    role: GrowthRole,
    own: f64,
    cross: f64,
    dims: (usize, usize),
    t_end: f64,
    sbox: &SampleBox,
) -> Result<f64, AnalysisError> {
    sbox.validate()?;
    let (n, m) = role_dims(f, role, dims.0, dims.1)?;
    let mut buf = vec![0.0; f.dim()];
    let mut worst = 0.0f64;
    for s in growth_samples(n, m, t_end, sbox) {
        worst = worst.max(excess(f, role, own, cross, &s, &mut buf)?);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstGrowth {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondGrowth {
    pub c: f64,
    pub d: f64,
}

/// Constants of the growth inequalities. Either inequality may be absent;
/// `delta` is shared.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthConstants {
    pub first: Option<FirstGrowth>,
    pub second: Option<SecondGrowth>,
    pub delta: f64,
}

impl GrowthConstants {
    pub fn full(a: f64, b: f64, c: f64, d: f64, delta: f64) -> Self {
        Self { first: Some(FirstGrowth { a, b }), second: Some(SecondGrowth { c, d }), delta }
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        let mut all = vec![self.delta];
        if let Some(g) = self.first {
            all.extend([g.a, g.b]);
        }
        if let Some(g) = self.second {
            all.extend([g.c, g.d]);
        }
        if all.iter().all(|v| *v >= 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(AnalysisError::Invalid(format!("growth constants must be nonnegative: {self:?}")))
        }
    }

    pub fn matrix(&self) -> Option<[[f64; 2]; 2]> {
        let (f, s) = (self.first?, self.second?);
        Some([[f.a, f.b], [s.c, s.d]])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    I,
    II,
    III,
    IV,
    None,
}

impl Case {
    pub fn name(self) -> &'static str {
        match self {
            Case::I => "i",
            Case::II => "ii",
            Case::III => "iii",
            Case::IV => "iv",
            Case::None => "none",
        }
    }
}

/// Applicable case with bounds on `(|u|_{H^1}^2, |v|_{H^1}^2)` and on
/// `|(u, v)| = |u|_{H^1} + |v|_{H^1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseSelection {
    pub case: Case,
    pub squared: Option<[f64; 2]>,
    pub bound: Option<f64>,
}

impl CaseSelection {
    fn from_squared(case: Case, bu: f64, bv: f64) -> Self {
        Self { case, squared: Some([bu, bv]), bound: Some(bu.sqrt() + bv.sqrt()) }
    }
}

/// First applicable case among (i)-(iv). `None` means existence is not
/// certified, not that it fails.
pub fn select_case(
    gamma_l1: f64,
    eta_l1: f64,
    constants: Option<&GrowthConstants>,
    t_end: f64,
) -> CaseSelection {
    let t = t_end;
    if gamma_l1 > 0.0 && eta_l1 > 0.0 {
        return CaseSelection::from_squared(Case::I, t + t / gamma_l1, t + t / eta_l1);
    }
    let none = CaseSelection { case: Case::None, squared: None, bound: None };
    let Some(gc) = constants.filter(|c| c.validate().is_ok()) else {
        return none;
    };
    if let Some(FirstGrowth { a, b }) = gc.first {
        if eta_l1 > 0.0 && a < 1.0 {
            let k1 = (b / eta_l1 + gc.delta) * t;
            return CaseSelection::from_squared(Case::II, k1 / (1.0 - a), t + t / eta_l1);
        }
    }
    if let Some(SecondGrowth { c, d }) = gc.second {
        if gamma_l1 > 0.0 && d < 1.0 {
            let k2 = (c / gamma_l1 + gc.delta) * t;
            return CaseSelection::from_squared(Case::III, t + t / gamma_l1, k2 / (1.0 - d));
        }
    }
    if let Some(m) = gc.matrix() {
        if let Ok(bound) = ConvMatrix::new(m).and_then(|m| apriori_bound_iv(&m, gc.delta, t)) {
            return CaseSelection::from_squared(Case::IV, bound.beta_u, bound.beta_v);
        }
    }
    none
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoercivityConstants {
    pub sigma: f64,
    pub rho: f64,
    pub k: f64,
}

/// Coercivity constants of a scalar-role forcing term `f(t, x)`, and the
/// growth constants `a = 1 - sigma`, `delta = sigma rho^2 + k` they imply.
///
/// For each `rho` of the ladder `0, 1, 2, 4, ...` below `R`, `sigma(rho)` is
/// the largest value in `(0, 1]` with `<f|x> <= -sigma |x|^2` on all samples
/// with `|x| > rho`; the best `sigma` wins, ties going to the smaller `rho`.
/// `k` is the sampled maximum of `|<f|x>|` on the `rho`-ball.
pub fn coercivity_constants(
    f: &dyn Forcing,
    n: usize,
    t_end: f64,
    sbox: &SampleBox,
) -> Result<(CoercivityConstants, Inequality), AnalysisError> {
    sbox.validate()?;
    role_dims(f, GrowthRole::Scalar, n, 0)?;
    let mut ladder = vec![0.0];
    let mut r = 1.0;
    while r < sbox.radius {
        ladder.push(r);
        r *= 2.0;
    }

    let mut samples = growth_samples(n, 0, t_end, sbox);
    // shells on every ladder radius, so the rho-balls are sampled up to their
    // boundary
    let mut rng = ChaCha8Rng::seed_from_u64(sbox.seed ^ 0x5eed);
    let per_shell = (sbox.samples / 4 / ladder.len()).max(16);
    for &rho in ladder.iter().skip(1) {
        for k in 0..per_shell {
            let t = if k == 0 { 0.0 } else { t_end * rng.random::<f64>() };
            samples.push(Sample { t, x: on_sphere(&mut rng, n, rho), y: Vec::new() });
        }
    }

    let mut buf = vec![0.0; n];
    let mut values = Vec::with_capacity(samples.len());
    for s in &samples {
        f.eval(s.t, &s.x, &s.y, &mut buf)?;
        values.push((norm(&s.x), dot(&buf, &s.x)));
    }
    let inside = |r: f64, rho: f64| r <= rho * (1.0 + 1e-12);

    let mut best: Option<(f64, f64)> = None;
    for &rho in &ladder {
        let mut sigma = 1.0f64;
        let mut tail = 0;
        for &(r, fx) in &values {
            if !inside(r, rho) {
                tail += 1;
                sigma = sigma.min(-fx / (r * r));
            }
        }
        if tail == 0 || sigma <= 0.0 {
            continue;
        }
        if best.is_none_or(|(s, _)| sigma > s) {
            best = Some((sigma, rho));
        }
    }
    let Some((sigma, rho)) = best else {
        return Err(AnalysisError::NotCoercive(
            "no (sigma, rho) pair validates <f|x> <= -sigma |x|^2 on the tail samples".into(),
        ));
    };
    let k = values.iter().filter(|(r, _)| inside(*r, rho)).fold(0.0f64, |m, (_, fx)| m.max(fx.abs()));
    let ineq = Inequality { own: 1.0 - sigma, cross: 0.0, delta: sigma * rho * rho + k };
    let check = check_on(f, GrowthRole::Scalar, &ineq, &samples)?;
    if !check.pass {
        return Err(AnalysisError::NotCoercive(format!(
            "constants {ineq:?} violated by {:e} at t={}, x={:?}",
            check.worst_violation, check.witness.t, check.witness.x
        )));
    }
    Ok((CoercivityConstants { sigma, rho, k }, ineq))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinear::ExprForcing;
    use std::f64::consts::PI;

    fn forcing(s: &[&str]) -> ExprForcing {
        ExprForcing::parse(s).unwrap()
    }

    #[test]
    fn lambda1_catalog() {
        let t = 1.0;
        for bop in [BoundaryOperator::periodic(2), BoundaryOperator::neumann(1), BoundaryOperator::rotation(1)] {
            let e = lambda1_estimate(&bop, t, 400).unwrap();
            assert_eq!(e.value, 0.0);
            assert_eq!(e.method, Lambda1Method::Analytic);
        }
        for bop in [BoundaryOperator::dirichlet(1), BoundaryOperator::antiperiodic(3)] {
            let e = lambda1_estimate(&bop, t, 400).unwrap();
            assert_eq!(e.method, Lambda1Method::EigFd);
            assert!((e.value / (PI * PI) - 1.0).abs() < 0.01, "{e:?}");
        }
    }

    #[test]
    fn lambda1_fd_matches_closed_form() {
        // lumped P1 eigenvalue of the Dirichlet problem: (4/h^2) sin^2(pi h / 2T)
        let (t, n) = (2.0, 64);
        let h = t / n as f64;
        let exact = 4.0 / (h * h) * (PI * h / (2.0 * t)).sin().powi(2);
        let got = lambda1_fd(DomainDescriptor::SinglePoint0, t, n).unwrap();
        assert!((got - exact).abs() < 1e-9 * exact, "{got} vs {exact}");
        // the antiperiodic space has the same first mode cos(pi t / T)
        let anti = lambda1_fd(DomainDescriptor::Antidiagonal, t, n).unwrap();
        assert!((anti / exact - 1.0).abs() < 2e-3);
        assert!(lambda1_fd(DomainDescriptor::FullSpace, t, n).unwrap() < 1e-10);
        assert!(lambda1_fd(DomainDescriptor::Diagonal, t, n).unwrap() < 1e-10);
    }

    #[test]
    fn lambda1_rejects_convex_sets() {
        use crate::boundary::{build_boundary, BoundaryKind, BoundaryParams, ConvexSet};
        let bop = build_boundary(
            BoundaryKind::ProjectionProx,
            1,
            BoundaryParams::Projection(ConvexSet::Ball { radius: 1.0 }),
        )
        .unwrap();
        assert!(matches!(lambda1_estimate(&bop, 1.0, 400), Err(AnalysisError::Unsupported(_))));
    }

    #[test]
    fn growth_examples() {
        let sbox = SampleBox::default();
        let f = forcing(&["-x1"]);
        let c = check_growth(&f, GrowthRole::First, &Inequality { own: 0.0, cross: 0.0, delta: 0.0 }, (1, 1), 1.0, &sbox)
            .unwrap();
        assert!(c.pass);
        assert!(c.worst_violation.abs() < 1e-12);

        let f = forcing(&["x1"]);
        let c = check_growth(&f, GrowthRole::First, &Inequality { own: 0.5, cross: 0.0, delta: 0.0 }, (1, 1), 1.0, &sbox)
            .unwrap();
        assert!(!c.pass);
        // 1.5 |x|^2 is largest on the outer sphere
        assert!((norm(&c.witness.x) - 10.0).abs() < 1e-9);

        let f = forcing(&["-x1 + sin(y1)"]);
        let c = check_growth(&f, GrowthRole::First, &Inequality { own: 0.5, cross: 0.0, delta: 0.5 }, (1, 1), 1.0, &sbox)
            .unwrap();
        assert!(c.pass, "{c:?}");

        let f = forcing(&["-y1 + 0.5*x1"]);
        let c = check_growth(&f, GrowthRole::Second, &Inequality { own: 0.25, cross: 0.25, delta: 0.0 }, (1, 1), 1.0, &sbox)
            .unwrap();
        assert!(c.pass, "{c:?}");
    }

    #[test]
    fn growth_rejects_bad_input() {
        let f = forcing(&["-x1"]);
        let bad = Inequality { own: -0.1, cross: 0.0, delta: 0.0 };
        assert!(check_growth(&f, GrowthRole::First, &bad, (1, 1), 1.0, &SampleBox::default()).is_err());
        let tiny = SampleBox { samples: 10, ..SampleBox::default() };
        let ok = Inequality { own: 0.0, cross: 0.0, delta: 0.0 };
        assert!(check_growth(&f, GrowthRole::First, &ok, (1, 1), 1.0, &tiny).is_err());
        assert!(check_growth(&f, GrowthRole::Second, &ok, (1, 2), 1.0, &SampleBox::default()).is_err());
    }

    #[test]
    fn select_case_examples() {
        let p2 = PI * PI;
        let s = select_case(p2, p2, None, 1.0);
        assert_eq!(s.case, Case::I);
        assert!((s.bound.unwrap() - 2.0 * (1.0 + 1.0 / p2).sqrt()).abs() < 1e-12);

        let gc = GrowthConstants { first: Some(FirstGrowth { a: 0.5, b: 1.0 }), second: None, delta: 0.0 };
        let s = select_case(0.0, p2, Some(&gc), 1.0);
        assert_eq!(s.case, Case::II);
        let expect = (2.0 / p2).sqrt() + (1.0 + 1.0 / p2).sqrt();
        assert!((s.bound.unwrap() - expect).abs() < 1e-12);

        let gc = GrowthConstants { first: None, second: Some(SecondGrowth { c: 1.0, d: 0.5 }), delta: 1.0 };
        let s = select_case(p2, 0.0, Some(&gc), 1.0);
        assert_eq!(s.case, Case::III);
        assert!((s.squared.unwrap()[1] - 2.0 * (1.0 / p2 + 1.0)).abs() < 1e-12);

        let gc = GrowthConstants::full(0.4, 0.4, 0.4, 0.4, 1.0);
        let s = select_case(0.0, 0.0, Some(&gc), 1.0);
        assert_eq!(s.case, Case::IV);
        let [bu, bv] = s.squared.unwrap();
        assert!((bu - 5.0).abs() < 1e-12 && (bv - 5.0).abs() < 1e-12);
        assert!((s.bound.unwrap() - 2.0 * 5f64.sqrt()).abs() < 1e-12);

        let gc = GrowthConstants::full(0.6, 0.5, 0.5, 0.6, 1.0);
        assert_eq!(select_case(0.0, 0.0, Some(&gc), 1.0).case, Case::None);
        assert_eq!(select_case(0.0, 0.0, None, 1.0).case, Case::None);
    }

    #[test]
    fn coercivity_examples() {
        let sbox = SampleBox::default();
        let (c, ineq) = coercivity_constants(&forcing(&["-x1"]), 1, 1.0, &sbox).unwrap();
        assert_eq!((c.sigma, c.rho, c.k), (1.0, 0.0, 0.0));
        assert_eq!((ineq.own, ineq.delta), (0.0, 0.0));

        let (c, ineq) = coercivity_constants(&forcing(&["-x1^3"]), 1, 1.0, &sbox).unwrap();
        assert_eq!((c.sigma, c.rho), (1.0, 1.0));
        assert!((c.k - 1.0).abs() < 0.05, "{c:?}");
        assert!(ineq.own.abs() < 0.05 && (ineq.delta - 2.0).abs() < 0.1, "{ineq:?}");

        assert!(matches!(
            coercivity_constants(&forcing(&["x1"]), 1, 1.0, &sbox),
            Err(AnalysisError::NotCoercive(_))
        ));
    }
}
