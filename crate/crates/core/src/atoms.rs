//! (p,q,s)-atoms, molecular norms and finite atomic combinations.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use std::sync::Arc;

use crate::error::{LhkError, Result};
use crate::geometry::{ball_volume, monomial_basis, norm_xt, unit_ball_volume, MultiIndex, PolySpace};
use crate::point::Params;
use crate::profile::{BumpPoly, Profile};
use crate::quadrature::{required_t_nodes, GridFunction, Neumaier, NeumaierC, PhysicalGrid, PANEL_ORDER};
use crate::report::{Check, EstimateReport, Metric};

/// Gram matrices with a larger condition number are rejected.
pub const MAX_GRAM_CONDITION: f64 = 1e12;

/// floor(Q (1/p - 1)), guarded against rounding just below an integer.
pub fn min_moment_order(q_dim: f64, p: f64) -> usize {
    (q_dim * (1.0 / p - 1.0) + 1e-9).floor().max(0.0) as usize
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomSpec {
    pub p: f64,
    /// f64::INFINITY for q = inf
    pub q: f64,
    pub s: usize,
    pub r: f64,
}

impl AtomSpec {
    pub fn new(params: &Params, p: f64, q: f64, s: usize, r: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(LhkError::Inadmissible(format!("p = {p} not in (0, 1]")));
        }
        if !(q >= 1.0) {
            return Err(LhkError::Inadmissible(format!("q = {q} not in [1, inf]")));
        }
        if p == q {
            return Err(LhkError::Inadmissible("p = q is excluded".into()));
        }
        let need = min_moment_order(params.q_dim(), p);
        if s < need {
            return Err(LhkError::Inadmissible(format!("s = {s} below floor(Q(1/p-1)) = {need}")));
        }
        if !(r > 0.0) || !r.is_finite() {
            return Err(LhkError::InvalidParameter(format!("radius must be > 0, got {r}")));
        }
        Ok(Self { p, q, s, r })
    }

    fn inv_q(&self) -> f64 {
        if self.q.is_infinite() {
            0.0
        } else {
            1.0 / self.q
        }
    }

    /// m_alpha(B(e,r))^{1/q - 1/p}, the size bound of the atom in L^q.
    pub fn size_bound(&self, params: &Params) -> f64 {
        ball_volume(params, self.r).unwrap().powf(self.inv_q() - 1.0 / self.p)
    }
}

/// An atom in closed form: a polynomial (in x/r, t/r^2) times a bump of radius r.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub spec: AtomSpec,
    pub alpha: f64,
    pub body: BumpPoly,
    pub gram_condition: f64,
}

impl Atom {
    /// delta^{-Q/p} a(x/delta, t/delta^2), a (p, q, s)-atom of radius delta r.
    pub fn dilated(&self, delta: f64) -> Result<Atom> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(LhkError::InvalidParameter(format!("dilation factor must be positive, got {delta}")));
        }
        let params = Params::new(self.alpha)?;
        let spec = AtomSpec::new(&params, self.spec.p, self.spec.q, self.spec.s, delta * self.spec.r)?;
        let mut body = self.body.scaled(delta.powf(-params.q_dim() / self.spec.p));
        body.r = spec.r;
        Ok(Atom { spec, alpha: self.alpha, body, gram_condition: self.gram_condition })
    }
}

impl Profile for Atom {
    fn name(&self) -> String {
        format!("atom_p{}_q{}_s{}_r{}", self.spec.p, self.spec.q, self.spec.s, self.spec.r)
    }
    fn eval(&self, x: f64, t: f64) -> Complex64 {
        self.body.eval(x, t)
    }
    fn laguerre(&self, alpha: f64, x: f64, t: f64) -> Option<Complex64> {
        self.body.laguerre(alpha, x, t)
    }
    fn support_radius(&self) -> Option<f64> {
        Some(self.spec.r)
    }
}

/// The default atom profile: (x/r)^{2 ceil((s+1)/2)} times bump_k, which is not in the moment span.
pub fn default_profile(spec: &AtomSpec, k: u32) -> BumpPoly {
    let e = 2 * (spec.s + 1).div_ceil(2);
    BumpPoly::monomial(k, spec.r, MultiIndex::new(e, 0))
}

fn covers_ball(grid: &PhysicalGrid, r: f64) -> bool {
    let (_, xm) = grid.x_range();
    let (t0, t1) = grid.t_range();
    // nodes are interior; the last panel must reach the boundary of the box
    let px = grid.xs.len();
    let h = if px > 1 { grid.xs[px - 1] - grid.xs[px - 2] } else { 0.0 };
    xm + h >= r && t1 + h >= 0.5 * r * r && -t0 + h >= 0.5 * r * r
}

fn lq_norm_values(values: &[f64], grid: &PhysicalGrid, q: f64) -> f64 {
    if q.is_infinite() {
        return values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    }
    let mut s = Neumaier::default();
    for (i, v) in values.iter().enumerate() {
        if *v != 0.0 {
            s.add(v.abs().powf(q) * grid.weight(i));
        }
    }
    s.value().powf(1.0 / q)
}

/// Builds an atom from a bump-polynomial profile by removing its moments up to
/// degree s with bump-weighted monomials, then scaling to the exact size bound.
pub fn make_atom(profile: &BumpPoly, spec: &AtomSpec, phys: &PhysicalGrid) -> Result<Atom> {
    let params = Params::new(phys.alpha)?;
    if (profile.r - spec.r).abs() > 1e-12 * spec.r {
        return Err(LhkError::InvalidParameter(format!(
            "profile radius {} differs from atom radius {}",
            profile.r, spec.r
        )));
    }
    if !covers_ball(phys, spec.r) {
        return Err(LhkError::GridCoverage(format!("grid does not contain the ball of radius {}", spec.r)));
    }
    let space = monomial_basis(spec.s);
    let n = space.basis.len();
    let r = spec.r;
    let nodes: Vec<(f64, f64, f64, f64)> = phys
        .iter()
        .filter_map(|(x, t, w)| {
            let b = profile.bump_value(x, t);
            (b != 0.0).then_some((x / r, t / (r * r), w, b))
        })
        .collect();
    let mono = |mi: &MultiIndex, u: f64, v: f64| mi.eval(u, v);
    let mut gram = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut s = Neumaier::default();
            for &(u, v, w, b) in &nodes {
                s.add(w * b * mono(&space.basis[i], u, v) * mono(&space.basis[j], u, v));
            }
            gram[(i, j)] = s.value();
            gram[(j, i)] = s.value();
        }
    }
    let eig = SymmetricEigen::new(gram.clone()).eigenvalues;
    let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e.abs())));
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if condition > MAX_GRAM_CONDITION {
        return Err(LhkError::IllConditioned(condition));
    }
    let chol = gram.clone().cholesky().ok_or(LhkError::IllConditioned(condition))?;

    let mut body = profile.clone();
    // two passes: the second removes what rounding left in the first
    for _ in 0..2 {
        let rhs = DVector::from_iterator(
            n,
            space.basis.iter().map(|mi| {
                let mut s = Neumaier::default();
                for &(u, v, w, b) in &nodes {
                    s.add(w * b * body.poly_value(u * r, v * r * r) * mono(mi, u, v));
                }
                s.value()
            }),
        );
        let c = chol.solve(&rhs);
        for (mi, cj) in space.basis.iter().zip(c.iter()) {
            match body.terms.iter_mut().find(|(m, _)| m == mi) {
                Some(term) => term.1 -= cj,
                None => body.terms.push((*mi, -cj)),
            }
        }
    }

    let values_before: Vec<f64> = phys.iter().map(|(x, t, _)| profile.eval(x, t).re).collect();
    let values_after: Vec<f64> = phys.iter().map(|(x, t, _)| body.eval(x, t).re).collect();
    let before = lq_norm_values(&values_before, phys, spec.q);
    let after = lq_norm_values(&values_after, phys, spec.q);
    if !(after > 1e-10 * before) {
        return Err(LhkError::Degenerate(format!("moment removal leaves L^q norm {after:.3e} of {before:.3e}")));
    }
    let body = body.scaled(spec.size_bound(&params) / after);
    Ok(Atom { spec: *spec, alpha: phys.alpha, body, gram_condition: condition })
}

/// Construction grid for an atom of radius r: the box [0, r] x [-r^2/2, r^2/2]
/// with `n` nodes per axis, which contains the ball exactly.
pub fn atom_grid(alpha: f64, r: f64, n: usize) -> Result<PhysicalGrid> {
    PhysicalGrid::build(alpha, r, 0.5 * r * r, n, n)
}

fn split(a: f64, b: f64, panels: usize) -> Vec<f64> {
    (0..=panels).map(|k| a + (b - a) * k as f64 / panels as f64).collect()
}

/// Grid on the homogeneous box of radius 4r that contains `atom_grid(alpha, r, n)`
/// panel for panel, so an atom sampled on it keeps its discrete moments. Outside
/// the ball the t panels resolve e^{i lambda t} up to `lambda_max`.
pub fn molecule_grid(alpha: f64, r: f64, n: usize, lambda_max: f64) -> Result<PhysicalGrid> {
    let inner = n.div_ceil(PANEL_ORDER);
    let (x_out, t_in, t_out) = (4.0 * r, 0.5 * r * r, 8.0 * r * r);
    let mut xb = split(0.0, r, inner);
    xb.extend(split(r, x_out, (3 * inner).div_ceil(4).max(1)).into_iter().skip(1));
    let outer_t = required_t_nodes(t_out - t_in, lambda_max).div_ceil(PANEL_ORDER).max(1);
    let mut tb: Vec<f64> = split(-t_out, -t_in, outer_t);
    tb.extend(split(-t_in, t_in, inner).into_iter().skip(1));
    tb.extend(split(t_in, t_out, outer_t).into_iter().skip(1));
    PhysicalGrid::from_breakpoints(alpha, &xb, &tb, PANEL_ORDER)
}

/// Grid used by validation: larger than the ball and with different node counts
/// than any construction grid, so that it checks rather than repeats.
pub fn validation_grid(alpha: f64, r: f64) -> Result<PhysicalGrid> {
    PhysicalGrid::build(alpha, 1.25 * r, 0.8 * r * r, 190, 250)
}

pub const MOMENT_TOL: f64 = 1e-10;
pub const SIZE_TOL: f64 = 1e-8;
pub const LEAKAGE_TOL: f64 = 1e-12;
pub const LP_TOL: f64 = 1e-8;

/// Checks support, size and moment conditions on an independent grid.
pub fn validate_atom(a: &dyn Profile, spec: &AtomSpec, alpha: f64) -> EstimateReport {
    let mut rep = EstimateReport::new("atom");
    rep.param("p", spec.p);
    rep.param("q", spec.q);
    rep.param("s", spec.s);
    rep.param("r", spec.r);
    let params = match Params::new(alpha) {
        Ok(p) => p,
        Err(e) => {
            rep.note = e.to_string();
            rep.push(Metric::new("alpha", f64::NAN, Check::Finite));
            return rep;
        }
    };
    let grid = match validation_grid(alpha, spec.r) {
        Ok(g) => g,
        Err(e) => {
            rep.note = e.to_string();
            rep.push(Metric::new("grid", f64::NAN, Check::Finite));
            return rep;
        }
    };
    let vals: Vec<Complex64> = grid.iter().map(|(x, t, _)| a.eval(x, t)).collect();
    let r = spec.r;

    let mut leak = Neumaier::default();
    let mut l1 = Neumaier::default();
    for (i, (x, t, w)) in grid.iter().enumerate() {
        let v = vals[i].norm();
        l1.add(v * w);
        if norm_xt(x, t) >= r {
            leak.add(v * w);
        }
    }
    let l1 = l1.value();
    rep.push(Metric::new("support_leakage", leak.value(), Check::AtMost(LEAKAGE_TOL)));

    let absvals: Vec<f64> = vals.iter().map(|v| v.norm()).collect();
    let lq = lq_norm_values(&absvals, &grid, spec.q);
    rep.push(Metric::new(
        "size_ratio",
        lq / spec.size_bound(&params),
        Check::Within { reference: 1.0, tolerance: SIZE_TOL },
    ));

    let space = monomial_basis(spec.s);
    let mut worst: f64 = 0.0;
    for mi in &space.basis {
        let mut m = NeumaierC::default();
        for (i, (x, t, w)) in grid.iter().enumerate() {
            m.add(vals[i] * (w * mi.eval(x, t)));
        }
        // monomials are measured in units of the ball: x^i1 t^i0 / r^d(I)
        let rel = m.value().norm() / (l1 * r.powi(mi.degree() as i32));
        worst = worst.max(if l1 > 0.0 { rel } else { 0.0 });
    }
    rep.push(Metric::new("max_moment_ratio", worst, Check::AtMost(MOMENT_TOL)));

    let lp = lq_norm_values(&absvals, &grid, spec.p);
    rep.push(Metric::new("lp_norm", lp, Check::AtMost(1.0 + LP_TOL)));
    let sup = absvals.iter().copied().fold(0.0, f64::max);
    rep.push(Metric::measured("exceptional", if sup <= 1.0 { 1.0 } else { 0.0 }));
    rep.push(Metric::measured("l1_norm", l1));
    rep.push(Metric::measured("reference_lp_bound_cq", unit_ball_volume(&params).powf(1.0 / spec.p)));
    rep
}

/// Quantities entering the molecular norm of a function.
#[derive(Debug, Clone, PartialEq)]
pub struct MoleculeReport {
    pub p: f64,
    pub q: f64,
    pub s: usize,
    pub eps: f64,
    pub a: f64,
    pub b: f64,
    pub norm_q: f64,
    pub weighted_norm_q: f64,
    pub molecular_norm: f64,
    pub moments: Vec<Complex64>,
    /// max |M| on the outer node lines over max |M|
    pub edge_fraction: f64,
}

/// N(M) = ‖M‖_q^{a/b} ‖M N^{Qb}‖_q^{1-a/b}, a = 1 - 1/p + eps, b = 1 - 1/q + eps.
pub fn molecule_norm(m: &GridFunction, p: f64, q: f64, s: usize, eps: f64) -> Result<MoleculeReport> {
    let q_dim = 2.0 * m.grid().alpha + 4.0;
    let floor = (s as f64 / q_dim).max(1.0 / p - 1.0);
    if !(eps > floor) {
        return Err(LhkError::Inadmissible(format!("eps = {eps} must exceed {floor}")));
    }
    let inv_q = if q.is_infinite() { 0.0 } else { 1.0 / q };
    let a = 1.0 - 1.0 / p + eps;
    let b = 1.0 - inv_q + eps;
    let theta = a / b;
    let norm_q = m.lp_norm(q);
    let weighted = m.weighted_lp_norm(q, |pt| norm_xt(pt.x, pt.t).powf(q_dim * b));
    let molecular_norm = if norm_q == 0.0 { 0.0 } else { norm_q.powf(theta) * weighted.powf(1.0 - theta) };
    let space: PolySpace = monomial_basis(s);
    let g = m.grid();
    let moments = space
        .basis
        .iter()
        .map(|mi| {
            let mut acc = NeumaierC::default();
            for (i, (x, t, w)) in g.iter().enumerate() {
                acc.add(m.values()[i] * (w * mi.eval(x, t)));
            }
            acc.value()
        })
        .collect();
    let peak = m.max_abs();
    let edge_fraction = if peak == 0.0 {
        0.0
    } else {
        let (nx, nt) = (g.nx(), g.nt());
        let mut e: f64 = 0.0;
        for it in 0..nt {
            e = e.max(m.values()[(nx - 1) * nt + it].norm());
        }
        for ix in 0..nx {
            e = e.max(m.values()[ix * nt].norm()).max(m.values()[ix * nt + nt - 1].norm());
        }
        e / peak
    };
    Ok(MoleculeReport { p, q, s, eps, a, b, norm_q, weighted_norm_q: weighted, molecular_norm, moments, edge_fraction })
}

/// A finite sum of atoms with complex coefficients.
#[derive(Debug, Clone)]
pub struct AtomicCombination {
    pub p: f64,
    pub alpha: f64,
    pub terms: Vec<(Complex64, Atom)>,
}

pub fn atomic_combination(terms: Vec<(Complex64, Atom)>) -> Result<AtomicCombination> {
    let first = terms.first().ok_or_else(|| LhkError::InvalidParameter("empty atomic combination".into()))?;
    let (p, alpha) = (first.1.spec.p, first.1.alpha);
    if terms.iter().any(|(_, a)| a.spec.p != p || a.alpha != alpha) {
        return Err(LhkError::GridMismatch("atoms of a combination must share p and alpha".into()));
    }
    Ok(AtomicCombination { p, alpha, terms })
}

impl AtomicCombination {
    /// (sum |beta_k|^p)^{1/p}
    pub fn proxy_norm(&self) -> f64 {
        self.terms.iter().map(|(b, _)| b.norm().powf(self.p)).sum::<f64>().powf(1.0 / self.p)
    }

    pub fn sum_abs(&self) -> f64 {
        self.terms.iter().map(|(b, _)| b.norm()).sum()
    }

    /// C_Q^{1/p} times the proxy norm.
    pub fn reference_lp_bound(&self) -> f64 {
        let params = Params::new(self.alpha).unwrap();
        unit_ball_volume(&params).powf(1.0 / self.p) * self.proxy_norm()
    }

    pub fn max_radius(&self) -> f64 {
        self.terms.iter().map(|(_, a)| a.spec.r).fold(0.0, f64::max)
    }

    /// The pointwise sum on a grid that must contain every support.
    pub fn synthesize(&self, grid: &Arc<PhysicalGrid>) -> Result<GridFunction> {
        if grid.alpha != self.alpha {
            return Err(LhkError::GridMismatch("grid alpha differs from the atoms".into()));
        }
        if !covers_ball(grid, self.max_radius()) {
            return Err(LhkError::GridCoverage("grid does not contain every atom".into()));
        }
        Ok(GridFunction::sample(grid.clone(), self))
    }
}

impl Profile for AtomicCombination {
    fn name(&self) -> String {
        format!("combination_{}", self.terms.len())
    }
    fn eval(&self, x: f64, t: f64) -> Complex64 {
        self.terms.iter().map(|(b, a)| b * a.eval(x, t)).sum()
    }
    fn support_radius(&self) -> Option<f64> {
        Some(self.max_radius())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid(alpha: f64, r: f64) -> PhysicalGrid {
        PhysicalGrid::build(alpha, r, 0.5 * r * r, 200, 200).unwrap()
    }

    #[test]
    fn admissibility() {
        let p0 = Params::new(0.0).unwrap();
        assert!(AtomSpec::new(&p0, 1.0, 2.0, 0, 1.0).is_ok());
        assert!(AtomSpec::new(&p0, 1.0, 1.0, 0, 1.0).is_err());
        assert!(AtomSpec::new(&p0, 2.0 / 3.0, 2.0, 1, 1.0).is_err());
        assert!(AtomSpec::new(&p0, 2.0 / 3.0, 2.0, 2, 1.0).is_ok());
        assert!(AtomSpec::new(&p0, 1.5, 2.0, 2, 1.0).is_err());
        assert_eq!(min_moment_order(4.0, 2.0 / 3.0), 2);
        assert_eq!(min_moment_order(6.0, 0.5), 6);
    }

    #[test]
    fn built_atoms_validate() {
        for &alpha in &[0.0, 1.0] {
            let params = Params::new(alpha).unwrap();
            for &(p, r) in &[(1.0, 1.0), (2.0 / 3.0, 0.5), (2.0 / 3.0, 2.0)] {
                let s = min_moment_order(params.q_dim(), p);
                let spec = AtomSpec::new(&params, p, 2.0, s, r).unwrap();
                let atom = make_atom(&default_profile(&spec, 6), &spec, &unit_grid(alpha, r)).unwrap();
                let rep = validate_atom(&atom, &spec, alpha);
                assert!(rep.all_pass(), "alpha {alpha} p {p} r {r}: {:?}", rep.metrics);
            }
        }
    }

    #[test]
    fn scaled_atom_fails_size_and_constant_fails_moments() {
        let params = Params::new(0.0).unwrap();
        let spec = AtomSpec::new(&params, 1.0, 2.0, 0, 1.0).unwrap();
        let atom = make_atom(&default_profile(&spec, 6), &spec, &unit_grid(0.0, 1.0)).unwrap();
        let mut doubled = atom.clone();
        doubled.body = atom.body.scaled(2.0);
        let rep = validate_atom(&doubled, &spec, 0.0);
        let ratio = rep.metric("size_ratio").unwrap();
        assert!((ratio.value - 2.0).abs() < 1e-8);
        assert_eq!(ratio.status, crate::report::Status::Fail);
        let constant = BumpPoly::bump(6, 1.0);
        let rep = validate_atom(&constant, &spec, 0.0);
        assert_eq!(rep.metric("max_moment_ratio").unwrap().status, crate::report::Status::Fail);
    }

    #[test]
    fn rebuilding_an_atom_changes_nothing() {
        let params = Params::new(1.0).unwrap();
        let spec = AtomSpec::new(&params, 1.0, 2.0, 1, 1.0).unwrap();
        let grid = unit_grid(1.0, 1.0);
        let atom = make_atom(&default_profile(&spec, 6), &spec, &grid).unwrap();
        let again = make_atom(&atom.body, &spec, &grid).unwrap();
        for ((m1, c1), (m2, c2)) in atom.body.terms.iter().zip(&again.body.terms) {
            assert_eq!(m1, m2);
            assert!((c1 - c2).abs() < 1e-12 * (1.0 + c1.abs()));
        }
    }

    #[test]
    fn degenerate_profile_is_rejected() {
        // a profile inside the moment span is annihilated by the projection
        let params = Params::new(0.0).unwrap();
        let spec = AtomSpec::new(&params, 1.0, 2.0, 2, 1.0).unwrap();
        let res = make_atom(&BumpPoly::monomial(6, 1.0, MultiIndex::new(0, 1)), &spec, &unit_grid(0.0, 1.0));
        assert!(matches!(res, Err(LhkError::Degenerate(_))));
    }

    #[test]
    fn molecule_norm_basics() {
        let params = Params::new(0.0).unwrap();
        let spec = AtomSpec::new(&params, 1.0, 2.0, 0, 1.0).unwrap();
        let atom = make_atom(&default_profile(&spec, 6), &spec, &unit_grid(0.0, 1.0)).unwrap();
        let grid = Arc::new(PhysicalGrid::build(0.0, 2.0, 2.0, 100, 100).unwrap());
        let f = GridFunction::sample(grid.clone(), &atom);
        let m = molecule_norm(&f, 1.0, 2.0, 0, 0.5).unwrap();
        assert!(m.molecular_norm.is_finite() && m.molecular_norm > 0.0);
        let f2 = f.map(|_, v| v * 2.0);
        let m2 = molecule_norm(&f2, 1.0, 2.0, 0, 0.5).unwrap();
        assert!((m2.molecular_norm / m.molecular_norm - 2.0).abs() < 1e-12);
        let z = GridFunction::zeros(grid);
        assert_eq!(molecule_norm(&z, 1.0, 2.0, 0, 0.5).unwrap().molecular_norm, 0.0);
        assert!(molecule_norm(&f, 1.0, 2.0, 0, 0.0).is_err());
    }

    #[test]
    fn proxy_norms() {
        let params = Params::new(0.0).unwrap();
        let spec = AtomSpec::new(&params, 0.5, 2.0, 4, 1.0).unwrap();
        let atom = make_atom(&default_profile(&spec, 6), &spec, &unit_grid(0.0, 1.0)).unwrap();
        let one = atomic_combination(vec![(Complex64::new(1.0, 0.0), atom.clone())]).unwrap();
        assert!((one.proxy_norm() - 1.0).abs() < 1e-15);
        let two = atomic_combination(vec![(Complex64::new(1.0, 0.0), atom.clone()), (Complex64::new(1.0, 0.0), atom)])
            .unwrap();
        assert!((two.proxy_norm() - 4.0).abs() < 1e-12);
        assert!(atomic_combination(vec![]).is_err());
    }

    #[test]
    fn dilated_atoms_stay_atoms() {
        for &alpha in &[0.0, 1.0] {
            let params = Params::new(alpha).unwrap();
            let spec =
                AtomSpec::new(&params, 2.0 / 3.0, 2.0, min_moment_order(params.q_dim(), 2.0 / 3.0), 1.0).unwrap();
            let atom = make_atom(&default_profile(&spec, 6), &spec, &unit_grid(alpha, 1.0)).unwrap();
            for delta in [0.25, 4.0] {
                let d = atom.dilated(delta).unwrap();
                assert_eq!(d.spec.r, delta);
                let rep = validate_atom(&d, &d.spec, alpha);
                assert!(rep.all_pass(), "alpha {alpha} delta {delta}: {:?}", rep.metrics);
                let q = params.q_dim();
                let (x, t) = (0.3, -0.1);
                let want = atom.eval(x, t) * delta.powf(-q / spec.p);
                assert!((d.eval(delta * x, delta * delta * t) - want).norm() < 1e-12 * want.norm().max(1.0));
            }
            assert!(atom.dilated(0.0).is_err());
        }
    }

    #[test]
    fn molecule_grid_contains_the_atom_grid() {
        for &(r, n) in &[(1.0, 100usize), (0.5, 60)] {
            let a = atom_grid(0.0, r, n).unwrap();
            let m = molecule_grid(0.0, r, n, 32.0).unwrap();
            let near = |v: &[f64], x: f64| v.iter().any(|y| (y - x).abs() < 1e-14 * r.max(1.0));
            assert!(a.xs.iter().all(|&x| near(&m.xs, x)));
            assert!(a.ts.iter().all(|&t| near(&m.ts, t)));
            let (_, xm) = m.x_range();
            assert!(xm < 4.0 * r && xm > 3.9 * r);
        }
    }
}
