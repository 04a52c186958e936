//! Normal forms of type `(alpha, beta)`: the predicate, the transform of a
//! defining series under a holomorphic map, and weight-by-weight
//! normalization with a prescribed initial value in `H`.

use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{random_real, GroupElement};
use crate::linalg::{nullspace, solve_real};
use crate::scalar::{cx_real, int, Cx, Mode, Real};
use crate::series::{monomials, HolMap, Monomial, Series, Signature};

#[derive(Clone, Debug, PartialEq)]
pub struct NormalFormType<S: Real> {
    pub alpha: S,
    pub beta: S,
}

impl<S: Real> NormalFormType<S> {
    pub fn new(alpha: S, beta: S) -> Self {
        NormalFormType { alpha, beta }
    }

    pub fn chern_moser() -> Self {
        NormalFormType { alpha: S::zero(), beta: S::zero() }
    }
}

/// `(1/4a) ln(1/(1 - 4a<z,z>)) = sum (4a)^(m-1) <z,z>^m / m`; `<z,z>` for `a = 0`.
pub fn log_model<S: Real>(sig: Signature, trunc: u32, alpha: &S) -> Series<S> {
    let q = Series::hyperquadric(sig, trunc);
    let four_a = S::from_i64(4) * alpha.clone();
    let mut acc = Series::zero(sig, trunc);
    let mut p = q.clone();
    let mut coef = S::one();
    for m in 1..=trunc / 2 {
        acc = acc.add(&p.scale_real(&(coef.clone() / S::from_i64(m as i64)))).expect("same signature");
        p = p.mul(&q).expect("same signature");
        coef = coef * four_a.clone();
        if coef.is_zero() {
            break;
        }
    }
    acc
}

fn default_tol<S: Real>() -> f64 {
    match S::MODE {
        Mode::Exact => 0.0,
        Mode::Float => 1e-9,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DefectKind {
    /// A term of type `(s, t)` with `min(s, t) <= 1` not accounted for by the model.
    LowType {
        s: u32,
        t: u32,
    },
    Trace22,
    Trace23,
    Trace33,
}

#[derive(Clone, Debug, Serialize)]
pub struct Defect {
    pub weight: u32,
    #[serde(flatten)]
    pub kind: DefectKind,
    pub norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormalFormReport {
    pub ok: bool,
    pub tolerance: f64,
    pub defects: Vec<Defect>,
    /// Largest defect norm per weight `3..=trunc`.
    pub weight_norms: Vec<(u32, f64)>,
}

/// Monomials indexing the linear conditions of a single weight.
struct Layout {
    low: Vec<Monomial>,
    t22: Vec<Monomial>,
    t23: Vec<Monomial>,
    t33: Vec<Monomial>,
}

impl Layout {
    fn new(n: usize, mu: u32) -> Self {
        let empty = Vec::new;
        Layout {
            low: monomials(n, mu, |s, t| s.min(t) <= 1),
            t22: if mu >= 4 { monomials(n, mu - 2, |s, t| s == 1 && t == 1) } else { empty() },
            t23: if mu >= 5 { monomials(n, mu - 4, |s, t| s + t == 1) } else { empty() },
            t33: if mu >= 6 { monomials(n, mu - 6, |s, t| s == 0 && t == 0) } else { empty() },
        }
    }
}

/// Values of the normal-form functionals on a weight-`mu` series, grouped as
/// (low types, trace 22, trace 23, trace 33). `extra33` is subtracted from
/// `Delta^3 G_33`.
fn conditions<S: Real>(x: &Series<S>, layout: &Layout, extra33: Option<&Series<S>>) -> [Vec<S>; 4] {
    let push = |out: &mut Vec<S>, c: Cx<S>| {
        out.push(c.re);
        out.push(c.im);
    };
    let mut low = Vec::new();
    for m in &layout.low {
        push(&mut low, x.coeff(m));
    }
    let mut t22 = Vec::new();
    if !layout.t22.is_empty() {
        let l = x.type_part(2, 2).laplacian(1);
        for m in &layout.t22 {
            push(&mut t22, l.coeff(m));
        }
    }
    let mut t23 = Vec::new();
    if !layout.t23.is_empty() {
        let l = x.type_part(2, 3).add(&x.type_part(3, 2)).expect("same signature").laplacian(2);
        for m in &layout.t23 {
            push(&mut t23, l.coeff(m));
        }
    }
    let mut t33 = Vec::new();
    if !layout.t33.is_empty() {
        let mut l = x.type_part(3, 3).laplacian(3);
        if let Some(e) = extra33 {
            l = l.sub(e).expect("same signature");
        }
        for m in &layout.t33 {
            push(&mut t33, l.coeff(m));
        }
    }
    [low, t22, t23, t33]
}

/// `beta Delta^4 (G_22^2)` restricted to weight `mu - 6`, where `G_22` is the
/// `(2,2)` part of `g` below weight `mu`.
fn beta_term<S: Real>(g: &Series<S>, mu: u32, beta: &S) -> Option<Series<S>> {
    if mu < 6 || beta.is_zero() {
        return None;
    }
    let g22 = g.filter(|m| m.ty() == (2, 2) && m.weight() < mu).with_trunc(mu + 2);
    let sq = g22.mul(&g22).expect("same signature").weight_part(mu + 2);
    Some(sq.laplacian(4).with_trunc(g.trunc).scale_real(beta))
}

fn max_abs<S: Real>(v: &[S]) -> f64 {
    v.iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max)
}

/// Largest trace-condition value (types `(2,2)`, `(2,3)`, `(3,3)`) of a
/// weight-`mu` series, ignoring low types.
pub fn trace_defect<S: Real>(x: &Series<S>, mu: u32) -> f64 {
    let layout = Layout::new(x.sig.n, mu);
    let c = conditions(x, &layout, None);
    c[1..].iter().map(|v| max_abs(v)).fold(0.0, f64::max)
}

pub fn is_normal_form<S: Real>(f: &Series<S>, t: &NormalFormType<S>) -> Result<NormalFormReport> {
    is_normal_form_tol(f, t, default_tol::<S>())
}

pub fn is_normal_form_tol<S: Real>(f: &Series<S>, t: &NormalFormType<S>, tol: f64) -> Result<NormalFormReport> {
    if f.trunc < 6 {
        return Err(Error::InsufficientTruncation(format!(
            "truncation weight {} < 6 cannot test the (3,3) component",
            f.trunc
        )));
    }
    let sig = f.sig;
    let g = f.sub(&log_model(sig, f.trunc, &t.alpha))?;
    let mut defects = Vec::new();
    let mut weight_norms = Vec::new();
    for (w, part) in g.decompose_by_weight() {
        if w < 3 {
            let norm = part.max_abs();
            if norm > tol {
                defects.push(Defect { weight: w, kind: DefectKind::LowType { s: 0, t: 0 }, norm });
            }
        }
    }
    for mu in 3..=f.trunc {
        let x = g.weight_part(mu);
        let layout = Layout::new(sig.n, mu);
        let extra = beta_term(&g, mu, &t.beta);
        let [_, t22, t23, t33] = conditions(&x, &layout, extra.as_ref());
        let mut worst = 0.0f64;
        for (ty, part) in x.decompose_by_type() {
            if ty.0.min(ty.1) <= 1 {
                let norm = part.max_abs();
                worst = worst.max(norm);
                if norm > tol {
                    defects.push(Defect { weight: mu, kind: DefectKind::LowType { s: ty.0, t: ty.1 }, norm });
                }
            }
        }
        for (kind, vals) in [(DefectKind::Trace22, t22), (DefectKind::Trace23, t23), (DefectKind::Trace33, t33)] {
            let norm = max_abs(&vals);
            worst = worst.max(norm);
            if norm > tol {
                defects.push(Defect { weight: mu, kind, norm });
            }
        }
        weight_norms.push((mu, worst));
    }
    Ok(NormalFormReport { ok: defects.is_empty(), tolerance: tol, defects, weight_norms })
}

/// Defining series of `phi(M)` where `M = {v = F}`: solves
/// `Im w' = F(z', conj z', Re w')` for `(z', w') = phi^{-1}(Z, U + iV)` by
/// iteration in `V`, gaining one weight per pass.
pub fn transform_by_holomorphic<S: Real>(f: &Series<S>, phi: &HolMap<S>) -> Result<Series<S>> {
    f.sig.check_same(&phi.sig)?;
    let sig = f.sig;
    let n = sig.n;
    let trunc = f.trunc.min(phi.trunc);
    let psi = phi.with_trunc(trunc).invert()?;
    let c = psi.w_coeff();
    if !c.im.near_zero(1e-12) {
        return Err(Error::Precondition("w-derivative of the map at 0 is not real".into()));
    }
    let c = c.re;
    let mut h = psi.g.clone();
    h.add_term(&vec![0; n], 1, -cx_real(c.clone()));
    let cinv = S::one() / c.clone();
    let i = Complex::new(S::zero(), S::one());
    let mut v = Series::zero(sig, trunc);
    for j in 0..trunc {
        let t = (j + 2).min(trunc);
        let wser = Series::var_u(sig, t).add(&v.with_trunc(t).scale(&i))?;
        let zs = psi.f.iter().map(|x| x.at_w(&wser, t)).collect::<Result<Vec<_>>>()?;
        let hw = h.at_w(&wser, t)?;
        let rew = wser.scale_real(&c).add(&hw)?.real_part();
        let mut slots: Vec<Series<S>> = zs.clone();
        slots.extend(zs.iter().map(|x| x.conj()));
        slots.push(rew);
        let fv = f.with_trunc(t).substitute(&slots, t)?;
        let mut next = fv.sub(&hw.imag_part())?.scale_real(&cinv);
        if S::MODE == Mode::Float {
            next = next.real_part();
        }
        let done = t == trunc && next == v;
        v = next;
        if done {
            break;
        }
    }
    Ok(v)
}

/// `F*` for the map `(id + high) o phi_lin`.
pub fn transform_defining<S: Real>(f: &Series<S>, lin: &GroupElement<S>, high: &HolMap<S>) -> Result<Series<S>> {
    let trunc = f.trunc.min(high.trunc);
    let outer = HolMap::identity(f.sig, trunc).add(high);
    let phi = outer.compose(&lin.to_holmap(trunc))?;
    transform_by_holomorphic(f, &phi)
}

#[derive(Clone, Debug)]
pub struct NormalizationResult<S: Real> {
    pub sigma: GroupElement<S>,
    /// Higher-weight part `(f~, g~)`: the map is `(id + correction) o phi_sigma`.
    /// Components `f^a` are determined through weight `trunc - 1`, `g`
    /// through `trunc`; `map` carries no `f` terms of weight `trunc`.
    pub correction: HolMap<S>,
    pub map: HolMap<S>,
    pub output: Series<S>,
    pub report: NormalFormReport,
    /// `(weight, max-norm of normal-form defect)` for weights `3..=trunc`.
    pub residuals: Vec<(u32, f64)>,
    pub warnings: Vec<String>,
}

impl<S: Real> NormalizationResult<S> {
    pub fn passed(&self) -> bool {
        self.report.ok
    }
}

#[derive(Clone, Copy, Debug)]
pub struct NormalizeOptions {
    /// Float-mode bound on the per-weight least-squares residual.
    pub residual_tol: f64,
    /// Float-mode condition number above which a warning is recorded.
    pub cond_warn: f64,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        NormalizeOptions { residual_tol: 1e-10, cond_warn: 1e8 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Slot {
    F(usize),
    G,
}

struct Unknown {
    slot: Slot,
    zi: Vec<u32>,
    j: u32,
    imag: bool,
}

fn hol_monomials(n: usize, weight: u32) -> Vec<(Vec<u32>, u32)> {
    monomials(n, weight, |_, t| t == 0).into_iter().map(|m| (m.zi(), m.l())).collect()
}

pub fn normalize<S: Real>(
    f: &Series<S>,
    sigma: &GroupElement<S>,
    t: &NormalFormType<S>,
) -> Result<NormalizationResult<S>> {
    normalize_with(f, sigma, t, NormalizeOptions::default())
}

pub fn normalize_with<S: Real>(
    f: &Series<S>,
    sigma: &GroupElement<S>,
    t: &NormalFormType<S>,
    opts: NormalizeOptions,
) -> Result<NormalizationResult<S>> {
    let sig = f.sig;
    sig.check_same(&sigma.sig)?;
    let n = sig.n;
    let trunc = f.trunc;
    if trunc < 6 {
        return Err(Error::InsufficientTruncation(format!("truncation weight {trunc} < 6")));
    }
    let tol = default_tol::<S>();
    f.check_real(if S::MODE == Mode::Exact { 0.0 } else { 1e-10 * (1.0 + f.max_abs()) })?;
    if f.filter(|m| m.weight() < 2).max_abs() > tol {
        return Err(Error::Precondition("defining series has terms of weight < 2".into()));
    }
    if f.weight_part(2).sub(&Series::hyperquadric(sig, trunc))?.max_abs() > tol {
        return Err(Error::Precondition("weight-2 part must equal <z,z>".into()));
    }
    if sigma.rho.is_negative() && 2 * sig.e != n {
        return Err(Error::Precondition("rho < 0 requires a neutral signature (2e = n)".into()));
    }
    let phi_sigma = sigma.to_holmap(trunc);
    let f_sigma = transform_by_holomorphic(f, &phi_sigma)?;
    // float residuals are measured against the size of the initial-value map
    let map_scale = phi_sigma.max_abs();
    let model = log_model(sig, trunc, &t.alpha);
    let mut corr = HolMap::zero(sig, trunc);
    let mut warnings = Vec::new();

    let iq = Series::hyperquadric(sig, trunc).scale(&Complex::new(S::zero(), S::one()));
    let base = Series::var_u(sig, trunc).add(&iq)?;
    let mut p_pows = vec![Series::constant(sig, trunc, Cx::one())];
    for j in 1..=trunc / 2 {
        let next = p_pows[j as usize - 1].mul(&base)?;
        p_pows.push(next);
    }

    for mu in 3..=trunc {
        let psi = HolMap::identity(sig, mu).add(&corr.with_trunc(mu));
        let k_full = transform_by_holomorphic(&f_sigma.with_trunc(mu), &psi)?;
        let g = k_full.sub(&model.with_trunc(mu))?;
        let k_mu = g.weight_part(mu);
        let layout = Layout::new(n, mu);
        let extra = beta_term(&g, mu, &t.beta);
        let rhs_parts = conditions(&k_mu, &layout, extra.as_ref());

        let mut unknowns = Vec::new();
        for k in 0..n {
            for (zi, j) in hol_monomials(n, mu - 1) {
                for imag in [false, true] {
                    unknowns.push(Unknown { slot: Slot::F(k), zi: zi.clone(), j, imag });
                }
            }
        }
        for (zi, j) in hol_monomials(n, mu) {
            for imag in [false, true] {
                unknowns.push(Unknown { slot: Slot::G, zi: zi.clone(), j, imag });
            }
        }
        let cols = unknowns.len();
        let mut columns: Vec<Vec<S>> = Vec::with_capacity(cols);
        for un in &unknowns {
            let c = if un.imag { Complex::new(S::zero(), S::one()) } else { Cx::one() };
            let zero = vec![0; n];
            let zm = Monomial::new(&un.zi, &zero, 0);
            let base = p_pows[un.j as usize].with_trunc(mu).mul(&Series::monomial(sig, mu, zm, c))?;
            let l = match un.slot {
                Slot::G => base.imag_part(),
                Slot::F(k) => {
                    let zb = Series::monomial(sig, mu, Monomial::zbar(n, k), cx_real(sig.eps_real::<S>(k)));
                    base.mul(&zb)?.real_part().scale_real(&S::from_i64(-2))
                }
            };
            let parts = conditions(&l.weight_part(mu), &layout, None);
            columns.push(parts.concat());
        }
        let rows = columns.first().map_or(0, |c| c.len());
        let mut a: Vec<Vec<S>> = (0..rows).map(|r| columns.iter().map(|c| c[r].clone()).collect()).collect();
        let mut b: Vec<S> = rhs_parts.concat().into_iter().map(|x| -x).collect();

        let find = |slot: Slot, zi: &[u32], j: u32, imag: bool| {
            unknowns
                .iter()
                .position(|u| u.slot == slot && u.zi == zi && u.j == j && u.imag == imag)
                .expect("unknown exists")
        };
        if mu == 3 {
            // no w-term in f~_2: keeps the initial value a
            for k in 0..n {
                for imag in [false, true] {
                    let mut row = vec![S::zero(); cols];
                    row[find(Slot::F(k), &vec![0; n], 1, imag)] = S::one();
                    a.push(row);
                    b.push(S::zero());
                }
            }
        }
        if mu == 4 {
            // Re g_ww(0) = 2 rho r for the composed map
            let ca = crate::linalg::mat_vec(&sigma.c(), &sigma.a);
            let mut s = Cx::<S>::zero();
            for al in 0..n {
                let mut e = vec![0; n];
                e[al] = 1;
                s = s + corr.g.coeff(&e, 1) * ca[al].clone();
            }
            let rho = sigma.rho.clone();
            let mut row = vec![S::zero(); cols];
            row[find(Slot::G, &vec![0; n], 2, false)] = rho.clone() * rho.clone();
            a.push(row);
            b.push(rho * s.re);
        }

        let sol = solve_real(&a, &b, cols);
        if sol.rank < cols {
            return Err(Error::SingularSystem { weight: mu, rank: sol.rank, unknowns: cols });
        }
        let scale = 1.0 + max_abs(&b) + map_scale;
        let bad = match S::MODE {
            Mode::Exact => sol.residual != 0.0,
            Mode::Float => sol.residual > opts.residual_tol * scale,
        };
        if bad {
            return Err(Error::Inconsistent(sol.residual));
        }
        if let Some(cond) = sol.cond {
            if cond > opts.cond_warn {
                warnings.push(format!("weight {mu}: condition number {cond:.3e}"));
            }
        }
        for (un, x) in unknowns.iter().zip(sol.x) {
            if x.is_zero() {
                continue;
            }
            let c = if un.imag { Complex::new(S::zero(), x) } else { cx_real(x) };
            match un.slot {
                Slot::F(k) => corr.f[k].add_term(&un.zi, un.j, c),
                Slot::G => corr.g.add_term(&un.zi, un.j, c),
            }
        }
    }

    let psi = HolMap::identity(sig, trunc).add(&corr);
    let output = transform_by_holomorphic(&f_sigma, &psi)?;
    let map = psi.compose(&phi_sigma)?.without_top_f();
    let report = is_normal_form_tol(&output, t, if S::MODE == Mode::Exact { 0.0 } else { 1e-8 * (1.0 + map_scale) })?;
    let residuals = report.weight_norms.clone();
    Ok(NormalizationResult { sigma: sigma.clone(), correction: corr, map, output, report, residuals, warnings })
}

/// Compares the two-step normalization `(phi_{s1} on the output of phi_{s2})`
/// with the one-step normalization by `s1 s2`. Returns the max coefficient
/// distance between the composed maps divided by `1 + ` the largest
/// coefficient of the one-step map.
pub fn normalization_group_law<S: Real>(
    f: &Series<S>,
    s1: &GroupElement<S>,
    s2: &GroupElement<S>,
    t: &NormalFormType<S>,
) -> Result<f64> {
    let r2 = normalize(f, s2, t)?;
    let r1 = normalize(&r2.output, s1, t)?;
    let r12 = normalize(f, &s1.compose(s2)?, t)?;
    let two_step = r1.map.compose(&r2.map)?.without_top_f();
    Ok(two_step.distance(&r12.map) / (1.0 + r12.map.max_abs()))
}

pub fn is_identity<S: Real>(m: &HolMap<S>, tol: f64) -> bool {
    m.distance(&HolMap::identity(m.sig, m.trunc)) <= tol
}

/// Basis (over the reals) of weight-`mu` real series with only types
/// `min(s, t) >= 2` satisfying the Chern-Moser trace conditions.
pub fn normal_form_basis(sig: Signature, mu: u32) -> Vec<Series<BigRational>> {
    let n = sig.n;
    let mut gens: Vec<Series<BigRational>> = Vec::new();
    for m in monomials(n, mu, |s, t| s.min(t) >= 2) {
        let c = m.conj();
        if m < c {
            let a = Series::from_terms(sig, mu, [(m, cx_real(int(1))), (c, cx_real(int(1)))]);
            let b =
                Series::from_terms(sig, mu, [(m, Complex::new(int(0), int(1))), (c, Complex::new(int(0), int(-1)))]);
            gens.push(a);
            gens.push(b);
        } else if m == c {
            gens.push(Series::monomial(sig, mu, m, cx_real(int(1))));
        }
    }
    if gens.is_empty() {
        return gens;
    }
    let layout = Layout::new(n, mu);
    let cols: Vec<Vec<BigRational>> = gens.iter().map(|g| conditions(g, &layout, None).concat()).collect();
    let rows = cols[0].len();
    let a: Vec<Vec<BigRational>> = (0..rows).map(|r| cols.iter().map(|c| c[r].clone()).collect()).collect();
    nullspace(&a, gens.len(), 0.0)
        .into_iter()
        .map(|v| {
            let mut acc = Series::zero(sig, mu);
            for (x, g) in v.iter().zip(&gens) {
                if !x.is_zero() {
                    acc = acc.add(&g.scale_real(x)).expect("same signature");
                }
            }
            acc
        })
        .collect()
}

/// Random element of the span of [`normal_form_basis`] with coefficients in
/// `[-1, 1]` (multiples of 1/16 in exact mode), truncated at `trunc`.
pub fn random_normal_form_component<S: Real, R: Rng>(sig: Signature, mu: u32, trunc: u32, rng: &mut R) -> Series<S> {
    let mut acc = Series::zero(sig, trunc);
    for b in normal_form_basis(sig, mu) {
        let c: S = random_real(rng, -1.0, 1.0);
        let term = Series::from_terms(
            sig,
            trunc,
            b.terms().map(|(m, x)| (*m, Complex::new(S::from_rational(&x.re), S::from_rational(&x.im)))),
        );
        acc = acc.add(&term.scale_real(&c)).expect("same signature");
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type Q = BigRational;

    fn sig(n: usize, e: usize) -> Signature {
        Signature::new(n, e).unwrap()
    }

    fn one() -> Cx<Q> {
        cx_real(int(1))
    }

    fn mono(zi: &[u32], zj: &[u32], l: u32) -> Monomial {
        Monomial::new(zi, zj, l)
    }

    #[test]
    fn predicate_examples() {
        let s = sig(1, 1);
        let q = Series::<Q>::hyperquadric(s, 8);
        let cm = NormalFormType::chern_moser();
        assert!(is_normal_form(&q, &cm).unwrap().ok);
        let mut f = q.clone();
        f.add_term(mono(&[2], &[2], 0), one());
        let rep = is_normal_form(&f, &cm).unwrap();
        assert!(!rep.ok);
        assert_eq!(rep.defects.len(), 1);
        assert_eq!((rep.defects[0].weight, rep.defects[0].kind), (4, DefectKind::Trace22));
        assert_eq!(rep.defects[0].norm, 4.0);
        assert!(matches!(is_normal_form(&q.with_trunc(5), &cm), Err(Error::InsufficientTruncation(_))));
        for a in [rat(1, 4), rat(1, 2), int(1)] {
            let m = log_model(s, 8, &a);
            assert!(is_normal_form(&m, &NormalFormType::new(a.clone(), int(0))).unwrap().ok);
            assert!(!is_normal_form(&m, &cm).unwrap().ok);
        }
    }

    #[test]
    fn log_model_traces() {
        for n in 1..=2usize {
            let s = sig(n, n);
            let a = rat(1, 3);
            let m = log_model(s, 8, &a);
            let nn = int(n as i64);
            let l22 = m.type_part(2, 2).laplacian(1);
            let want = Series::hyperquadric(s, 8).scale_real(&(int(4) * a.clone() * (nn.clone() + int(1))));
            assert_eq!(l22, want);
            let l33 = m.type_part(3, 3).laplacian(3);
            let c = int(32) * a.clone() * a.clone() * nn.clone() * (nn.clone() + int(1)) * (nn + int(2));
            assert_eq!(l33, Series::constant(s, 8, cx_real(c)));
        }
    }

    #[test]
    fn transform_by_identity_and_group() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (n, e, trunc) in [(1, 1, 8), (2, 1, 6)] {
            let s = sig(n, e);
            let q = Series::<Q>::hyperquadric(s, trunc);
            let mut f = q.clone();
            f.add_term(mono(&vec![2; n], &vec![2; n], 0), cx_real(rat(1, 3)));
            let id = HolMap::identity(s, trunc);
            assert_eq!(transform_by_holomorphic(&f, &id).unwrap(), f);
            let g = GroupElement::<Q>::random(s, &mut rng, true);
            let out = transform_defining(&q, &g, &HolMap::zero(s, trunc)).unwrap();
            assert_eq!(out, q);
        }
    }

    #[test]
    fn transform_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let s = sig(1, 1);
        let mut f = Series::<Q>::hyperquadric(s, 7);
        f.add_term(mono(&[2], &[3], 0), Cx::new(int(1), int(2)));
        f.add_term(mono(&[3], &[2], 0), Cx::new(int(1), int(-2)));
        let g = GroupElement::<Q>::random(s, &mut rng, false);
        let phi = g.to_holmap(7);
        let there = transform_by_holomorphic(&f, &phi).unwrap();
        let back = transform_by_holomorphic(&there, &phi.invert().unwrap()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn hyperquadric_normalizes_to_group_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let s = sig(1, 1);
        let q = Series::<Q>::hyperquadric(s, 8);
        let cm = NormalFormType::chern_moser();
        let r = normalize(&q, &GroupElement::identity(s), &cm).unwrap();
        assert!(is_identity(&r.map, 0.0));
        assert_eq!(r.output, q);
        let g = GroupElement::<Q>::random(s, &mut rng, false);
        let r = normalize(&q, &g, &cm).unwrap();
        assert_eq!(r.map, g.to_holmap(8).without_top_f());
        assert!(r.passed());
    }

    #[test]
    fn perturbation_is_normalized_exactly() {
        let s = sig(1, 1);
        let mut f = Series::<Q>::hyperquadric(s, 8);
        f.add_term(mono(&[2], &[2], 0), cx_real(rat(1, 10)));
        let cm = NormalFormType::chern_moser();
        let r = normalize(&f, &GroupElement::identity(s), &cm).unwrap();
        assert!(r.passed(), "{:?}", r.report.defects);
        assert!(r.output.type_part(2, 2).is_empty());
        assert!(r.residuals.iter().all(|(_, x)| *x == 0.0));
        let again = normalize(&r.output, &GroupElement::identity(s), &cm).unwrap();
        assert!(is_identity(&again.map, 0.0));
        assert_eq!(again.output, r.output);
    }

    #[test]
    fn jets_realize_initial_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let s = sig(2, 1);
        let mut f = Series::<Q>::hyperquadric(s, 6);
        f.add_term(mono(&[1, 1], &[2, 0], 0), Cx::new(int(1), int(1)));
        f.add_term(mono(&[2, 0], &[1, 1], 0), Cx::new(int(1), int(-1)));
        let g = GroupElement::<Q>::random(s, &mut rng, false);
        let r = normalize(&f, &g, &NormalFormType::chern_moser()).unwrap();
        assert!(r.passed(), "{:?}", r.report.defects);
        let m = &r.map;
        assert_eq!(m.linear_matrix(), g.c());
        let ca = crate::linalg::mat_vec(&g.c(), &g.a);
        for k in 0..2 {
            assert_eq!(m.f[k].coeff(&[0, 0], 1), -ca[k].clone());
        }
        assert_eq!(m.w_coeff().re, g.rho);
        assert_eq!(m.g.coeff(&[0, 0], 2).re * int(2), int(2) * g.rho.clone() * g.r.clone());
    }

    #[test]
    fn float_mode_agrees_with_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let s = sig(1, 1);
        let mut f = Series::<Q>::hyperquadric(s, 8);
        f.add_term(mono(&[2], &[2], 0), cx_real(rat(1, 10)));
        f.add_term(mono(&[3], &[2], 0), Cx::new(rat(1, 5), rat(1, 7)));
        f.add_term(mono(&[2], &[3], 0), Cx::new(rat(1, 5), rat(-1, 7)));
        let g = GroupElement::<Q>::random(s, &mut rng, false);
        let cm = NormalFormType::chern_moser();
        let exact = normalize(&f, &g, &cm).unwrap();
        let float = normalize(&f.to_f64(), &g.to_f64(), &NormalFormType::chern_moser()).unwrap();
        assert!(float.passed());
        assert!(float.map.distance(&exact.map.to_f64()) < 1e-9);
        assert!(float.output.sub(&exact.output.to_f64()).unwrap().max_abs() < 1e-9);
    }
}
