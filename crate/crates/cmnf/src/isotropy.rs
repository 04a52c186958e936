//! Isotropy parameters of a nonspherical normal form: the linear map
//! `a -> H_{l+1}(.; a)`, its rank, and recovery of `rho`, `a`, `r` from the
//! lowest components of a source and a target normal form.

use num_complex::Complex;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::linalg::{mat_inv, mat_vec, nullspace, numeric_rank, solve_real, CMat};
use crate::normal::{normalize, trace_defect, NormalFormType};
use crate::scalar::{cx_real, Cx, Mode, Real};
use crate::series::{Monomial, Series, Signature};

/// A weight-`l` normal-form component: types `min(s,t) >= 2` only, with the
/// trace conditions on `(2,2)`, `(2,3)` and `(3,3)` parts.
#[derive(Clone, Debug)]
pub struct IsotropyContext<S: Real> {
    pub sig: Signature,
    pub l: u32,
    pub f_l: Series<S>,
}

impl<S: Real> IsotropyContext<S> {
    pub fn new(f_l: Series<S>, l: u32) -> Result<Self> {
        if l < 4 {
            return Err(Error::Precondition(format!("weight l = {l} < 4")));
        }
        let tol = if S::MODE == Mode::Exact { 0.0 } else { 1e-10 * (1.0 + f_l.max_abs()) };
        let outside = |m: &Monomial| m.weight() != l || m.s().min(m.t()) < 2;
        if let Some((m, _)) = f_l.terms().find(|(m, c)| outside(m) && cx_abs(c) > tol) {
            return Err(Error::Precondition(format!("term {m:?} is not of weight {l} with min(s,t) >= 2")));
        }
        let f_l = f_l.filter(|m| !outside(m));
        f_l.check_real(tol)?;
        let d = trace_defect(&f_l, l);
        if d > tol {
            return Err(Error::Precondition(format!("trace conditions violated by {d:e}")));
        }
        let f_l = f_l.with_trunc(l + 2);
        Ok(IsotropyContext { sig: f_l.sig, l, f_l })
    }

    fn trunc(&self) -> u32 {
        self.l + 2
    }

    fn q(&self) -> Series<S> {
        Series::hyperquadric(self.sig, self.trunc())
    }

    /// `(u + i s <z,z>)^k` for `s = +-1`.
    fn upow(&self, k: u32, s: i64) -> Series<S> {
        let iq = self.q().scale(&Complex::new(S::zero(), S::from_i64(s)));
        Series::var_u(self.sig, self.trunc()).add(&iq).expect("same signature").pow(k).expect("same signature")
    }
}

fn cx_abs<S: Real>(c: &Cx<S>) -> f64 {
    c.re.to_f64().abs().max(c.im.to_f64().abs())
}

fn const_of<S: Real>(x: &Series<S>, m: &Monomial) -> Result<Cx<S>> {
    if let Some((bad, _)) = x.terms().find(|(k, _)| *k != m) {
        return Err(Error::Invariant(format!("unexpected term {bad:?} in correction")));
    }
    Ok(x.coeff(m))
}

/// Weight-`(l+1)` correction `G_{l+1}(.; a)` restoring the trace conditions.
pub fn g_correction<S: Real>(ctx: &IsotropyContext<S>, a: &[Cx<S>]) -> Result<Series<S>> {
    let sig = ctx.sig;
    let n = sig.n;
    let nn = S::from_i64(n as i64);
    let l = ctx.l;
    let tr = ctx.trunc();
    let q = ctx.q();
    let two = S::from_i64(2);
    if l % 2 == 1 {
        let k = (l + 1) / 2;
        let f43 = ctx.f_l.type_part(4, 3);
        let f34 = ctx.f_l.type_part(3, 4);
        let mut sum = Series::zero(sig, tr);
        for al in 0..n {
            sum = sum.add(&f43.d_z(al).laplacian(3).scale(&a[al]))?;
            sum = sum.add(&f34.d_zbar(al).laplacian(3).scale(&a[al].conj()))?;
        }
        if k < 4 {
            if !sum.is_empty() {
                return Err(Error::Invariant("nonzero (4,3) part below weight 7".into()));
            }
            return Ok(Series::zero(sig, tr));
        }
        let c = const_of(&sum, &Monomial::u(n).with_l(k - 4))?;
        let kk = S::from_i64(k as i64);
        let den = two.clone()
            * kk.clone()
            * (kk.clone() - S::one())
            * (kk.clone() - two.clone())
            * nn.clone()
            * (nn.clone() + S::one())
            * (nn + two.clone());
        if !c.im.near_zero(1e-10 * (1.0 + c.re.to_f64().abs())) {
            return Err(Error::Invariant("g is not real".into()));
        }
        let half_g = c.re / den / two;
        let km1 = q.scale_real(&(kk - S::one()));
        let iu = Series::var_u(sig, tr).scale(&Complex::new(S::zero(), S::one()));
        let t1 = km1.add(&iu)?.mul(&ctx.upow(k - 1, 1))?;
        let t2 = km1.sub(&iu)?.mul(&ctx.upow(k - 1, -1))?;
        Ok(t1.add(&t2)?.scale_real(&half_g).with_trunc(tr))
    } else {
        let k = l / 2;
        let f33 = ctx.f_l.type_part(3, 3);
        let f24 = ctx.f_l.type_part(2, 4);
        let mut sum = Series::zero(sig, tr);
        for al in 0..n {
            sum = sum.add(&f33.d_z(al).laplacian(2).scale(&a[al]))?;
            sum = sum.add(&f24.d_zbar(al).laplacian(2).scale(&a[al].conj()))?;
        }
        if k < 3 {
            if !sum.is_empty() {
                return Err(Error::Invariant("nonzero (3,3) part below weight 6".into()));
            }
            return Ok(Series::zero(sig, tr));
        }
        let kk = S::from_i64(k as i64);
        let den = S::from_i64(4) * kk.clone() * (kk.clone() - S::one()) * (nn.clone() + S::one()) * (nn + two);
        // <kappa, z> as a series linear in zbar
        let mut kz = Series::zero(sig, tr);
        for (m, c) in sum.terms() {
            if m.s() != 0 || m.t() != 1 || m.l() != k - 3 {
                return Err(Error::Invariant(format!("unexpected term {m:?} in kappa")));
            }
            kz.add_term(m.with_l(0), c.clone() * cx_real(S::one() / den.clone()));
        }
        let zk = kz.conj();
        let two_ik = Complex::new(S::zero(), S::from_i64(2 * k as i64));
        let pp = ctx.upow(k, 1);
        let pm = ctx.upow(k, -1);
        let pp1 = ctx.upow(k - 1, 1);
        let pm1 = ctx.upow(k - 1, -1);
        let diff = kz.sub(&zk)?;
        let mut g = diff.mul(&pp.sub(&pm)?)?;
        g = g.add(&q.mul(&zk)?.mul(&pp1)?.scale(&two_ik))?;
        g = g.sub(&q.mul(&kz)?.mul(&pm1)?.scale(&two_ik))?;
        Ok(g)
    }
}

/// The explicit terms of `H_{l+1}(.; a)` without the correction `G`.
pub fn h_terms<S: Real>(ctx: &IsotropyContext<S>, a: &[Cx<S>]) -> Result<Series<S>> {
    let sig = ctx.sig;
    let n = sig.n;
    let tr = ctx.trunc();
    let q = ctx.q();
    let i = Complex::new(S::zero(), S::one());
    let two_i = Complex::new(S::zero(), S::from_i64(2));
    let za = Series::form_z_c(sig, tr, a);
    let az = Series::form_c_z(sig, tr, a);
    let up = ctx.upow(1, 1);
    let um = ctx.upow(1, -1);
    let parts = ctx.f_l.decompose_by_type();

    let mut h = za.sub(&az)?.mul(&ctx.f_l)?.scale(&-two_i.clone());
    for (&(s, t), fst) in &parts {
        let mut dz = Series::zero(sig, tr);
        let mut dzb = Series::zero(sig, tr);
        for al in 0..n {
            dz = dz.add(&fst.d_z(al).scale(&a[al]))?;
            dzb = dzb.add(&fst.d_zbar(al).scale(&a[al].conj()))?;
        }
        if s >= 3 && t >= 2 {
            h = h.add(&dz.mul(&up)?)?;
        }
        if s == 2 {
            h = h.add(&dz.mul(&q)?.scale(&two_i))?;
        }
        if s >= 2 && t >= 3 {
            h = h.add(&dzb.mul(&um)?)?;
        }
        if t == 2 {
            h = h.sub(&dzb.mul(&q)?.scale(&two_i))?;
        }
    }
    let half_i = i * cx_real(S::one() / S::from_i64(2));
    let bracket = za.mul(&up)?.sub(&az.mul(&um)?)?;
    h = h.add(&ctx.f_l.d_u().mul(&bracket)?.scale(&half_i))?;
    Ok(h.weight_part(ctx.l + 1))
}

/// `H_{l+1}(z, zbar, u; a)`: real, real-linear in `a`.
pub fn h_map<S: Real>(ctx: &IsotropyContext<S>, a: &[Cx<S>]) -> Result<Series<S>> {
    let h = h_terms(ctx, a)?.add(&g_correction(ctx, a)?)?;
    Ok(h.with_trunc(ctx.l + 1))
}

/// First-order image of `v = <z,z> + F_l` under the fractional-linear
/// translation `(I, a, 1, 0)`, weight `l + 1`, before renormalization.
pub fn translation_image<S: Real>(ctx: &IsotropyContext<S>, a: &[Cx<S>]) -> Result<Series<S>> {
    let sig = ctx.sig;
    let n = sig.n;
    let tr = ctx.trunc();
    let two_i = Complex::new(S::zero(), S::from_i64(2));
    let i = Complex::new(S::zero(), S::one());
    let za = Series::form_z_c(sig, tr, a);
    let az = Series::form_c_z(sig, tr, a);
    let up = ctx.upow(1, 1);
    let um = ctx.upow(1, -1);
    let mut h = za.sub(&az)?.mul(&ctx.f_l)?.scale(&-two_i.clone());
    for (&(s, t), fst) in &ctx.f_l.decompose_by_type() {
        let euler = za.scale_real(&S::from_i64(s as i64)).sub(&az.scale_real(&S::from_i64(t as i64)))?;
        h = h.add(&euler.mul(fst)?.scale(&two_i))?;
    }
    for al in 0..n {
        h = h.add(&ctx.f_l.d_z(al).scale(&a[al]).mul(&up)?)?;
        h = h.add(&ctx.f_l.d_zbar(al).scale(&a[al].conj()).mul(&um)?)?;
    }
    let bracket = za.mul(&up)?.sub(&az.mul(&um)?)?;
    h = h.add(&ctx.f_l.d_u().mul(&bracket)?.scale(&i))?;
    Ok(h.weight_part(ctx.l + 1).with_trunc(ctx.l + 1))
}

/// Normal-form part of a single-weight perturbation `x` of `<z,z>`.
pub fn project_to_normal_form<S: Real>(x: &Series<S>, mu: u32) -> Result<Series<S>> {
    let sig = x.sig;
    let tr = mu.max(6);
    let f = Series::hyperquadric(sig, tr).add(&x.weight_part(mu).with_trunc(tr))?;
    let out = normalize(&f, &GroupElement::identity(sig), &NormalFormType::chern_moser())?.output;
    Ok(out.weight_part(mu).with_trunc(mu))
}

/// The weight-`(l+1)` part of the normal form obtained from `<z,z> + F_l`
/// with initial value `(I, a, 1, 0)`.
pub fn h_map_normalized<S: Real>(ctx: &IsotropyContext<S>, a: &[Cx<S>]) -> Result<Series<S>> {
    project_to_normal_form(&translation_image(ctx, a)?, ctx.l + 1)
}

fn real_matrix<S: Real>(n: usize, map: impl Fn(&[Cx<S>]) -> Result<Series<S>>) -> Result<(Vec<Monomial>, Vec<Vec<S>>)> {
    let mut cols = Vec::new();
    for k in 0..2 * n {
        let mut a = vec![Cx::<S>::zero(); n];
        a[k % n] = if k < n { Cx::one() } else { Complex::new(S::zero(), S::one()) };
        cols.push(map(&a)?);
    }
    let mut mons: Vec<Monomial> = cols.iter().flat_map(|c| c.terms().map(|(m, _)| *m)).collect();
    mons.sort();
    mons.dedup();
    let mut rows = Vec::new();
    for m in &mons {
        rows.push(cols.iter().map(|c| c.coeff(m).re).collect());
        rows.push(cols.iter().map(|c| c.coeff(m).im).collect());
    }
    Ok((mons, rows))
}

/// Real `K x 2n` matrix of `a -> H_{l+1}(.; a)` on the basis `e_k, i e_k`.
pub fn h_matrix<S: Real>(ctx: &IsotropyContext<S>) -> Result<(Vec<Monomial>, Vec<Vec<S>>)> {
    real_matrix(ctx.sig.n, |a| h_map(ctx, a))
}

fn rank_of<S: Real>(rows: &[Vec<S>], cols: usize) -> usize {
    if rows.is_empty() {
        return 0;
    }
    match S::MODE {
        Mode::Exact => cols - nullspace(rows, cols, 0.0).len(),
        Mode::Float => {
            let m: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|x| x.to_f64()).collect()).collect();
            numeric_rank(&m, cols, 1e-10)
        }
    }
}

/// Rank of the real-linear map `R^{2n} -> coefficients` of [`h_map`]: exact
/// in exact mode, singular values above `1e-10 sigma_max` otherwise.
pub fn injectivity_rank<S: Real>(ctx: &IsotropyContext<S>) -> Result<usize> {
    Ok(rank_of(&h_matrix(ctx)?.1, 2 * ctx.sig.n))
}

/// Same rank for [`h_map_normalized`].
pub fn normalized_injectivity_rank<S: Real>(ctx: &IsotropyContext<S>) -> Result<usize> {
    Ok(rank_of(&real_matrix(ctx.sig.n, |a| h_map_normalized(ctx, a))?.1, 2 * ctx.sig.n))
}

/// Solves `h_map_normalized(a) = rhs` by least squares; fails if the residual
/// exceeds `tol` relative to the right side.
pub fn solve_h_map(ctx: &IsotropyContext<f64>, rhs: &Series<f64>, tol: f64) -> Result<Vec<Complex<f64>>> {
    let n = ctx.sig.n;
    let (mons, rows) = real_matrix(n, |a| h_map_normalized(ctx, a))?;
    let extra: Vec<Monomial> = rhs.terms().map(|(m, _)| *m).filter(|m| !mons.contains(m)).collect();
    let mut a = rows;
    let mut b = Vec::new();
    for m in &mons {
        b.push(rhs.coeff(m).re);
        b.push(rhs.coeff(m).im);
    }
    for m in &extra {
        a.push(vec![0.0; 2 * n]);
        a.push(vec![0.0; 2 * n]);
        b.push(rhs.coeff(m).re);
        b.push(rhs.coeff(m).im);
    }
    let sol = solve_real(&a, &b, 2 * n);
    let scale = 1.0 + b.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if sol.residual > tol * scale {
        return Err(Error::Inconsistent(sol.residual));
    }
    Ok((0..n).map(|k| Complex::new(sol.x[k], sol.x[k + n])).collect())
}

/// Lowest nonzero component of `F - <z,z>`.
pub fn lowest_component(f: &Series<f64>, tol: f64) -> Result<(u32, Series<f64>)> {
    let g = f.sub(&Series::hyperquadric(f.sig, f.trunc))?;
    for (w, part) in g.decompose_by_weight() {
        if part.max_abs() > tol {
            return Ok((w, part));
        }
    }
    Err(Error::Precondition("series is spherical through its truncation weight".into()))
}

/// `lambda = (1/n) Delta <Uz, Uz>`.
pub fn lambda_of(sig: Signature, u: &CMat<f64>) -> f64 {
    let n = sig.n;
    let mut s = 0.0;
    for b in 0..n {
        for a in 0..n {
            s += (sig.eps(a) * sig.eps(b)) as f64 * u[a][b].norm_sqr();
        }
    }
    s / n as f64
}

/// `F(M z, conj(M z), c u)` for a constant matrix `M` and real `c`.
pub fn linear_change(f: &Series<f64>, m: &CMat<f64>, c: f64) -> Result<Series<f64>> {
    let sig = f.sig;
    let n = sig.n;
    let tr = f.trunc;
    let mut slots: Vec<Series<f64>> = (0..n).map(|i| Series::form_z_c(sig, tr, &conj_eps_row(sig, &m[i]))).collect();
    let bars: Vec<Series<f64>> = slots.iter().map(|s| s.conj()).collect();
    slots.extend(bars);
    slots.push(Series::var_u(sig, tr).scale_real(&c));
    f.substitute(&slots, tr)
}

// `<z, c>` with `c_j = eps_j conj(m_j)` equals `sum_j m_j z_j`.
fn conj_eps_row(sig: Signature, row: &[Complex<f64>]) -> Vec<Complex<f64>> {
    row.iter().enumerate().map(|(j, x)| x.conj() * sig.eps(j) as f64).collect()
}

fn sample_points(sig: Signature, seed: u64) -> Vec<(Vec<Complex<f64>>, f64)> {
    let n = sig.n;
    let one = vec![Complex::new(1.0, 0.0); n];
    let half = vec![Complex::new(0.5, 0.0); n];
    let mut pts = vec![(one.clone(), 1.0), (half, 1.0), (one, 0.5)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..16 {
        let z = (0..n).map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        pts.push((z, rng.gen_range(0.2..1.0)));
    }
    pts
}

fn seed_of(f: &Series<f64>) -> u64 {
    f.terms().fold(17u64, |h, (_, c)| h.rotate_left(7) ^ c.re.to_bits() ^ c.im.to_bits().rotate_left(29))
}

/// Evaluates `num / den` at the deterministic sample points, falling back to
/// seeded random points where `den` vanishes; requires three agreeing values.
fn consistent_ratio(
    num: impl Fn(&[Complex<f64>], f64) -> Result<f64>,
    den: impl Fn(&[Complex<f64>], f64) -> Result<f64>,
    pts: &[(Vec<Complex<f64>>, f64)],
    rel: f64,
) -> Result<f64> {
    let mut vals = Vec::new();
    for (z, u) in pts {
        let d = den(z, *u)?;
        if d.abs() < 1e-10 {
            continue;
        }
        vals.push(num(z, *u)? / d);
        if vals.len() == 3 {
            break;
        }
    }
    if vals.len() < 3 {
        return Err(Error::Precondition("denominator vanishes at all sample points".into()));
    }
    let v0 = vals[0];
    for v in &vals[1..] {
        if (v - v0).abs() > rel * (1.0 + v0.abs()) {
            return Err(Error::Precondition(format!("ratio depends on the sample point: {vals:?}")));
        }
    }
    Ok(v0)
}

/// `rho` of an element `(U, a, rho, r)` normalizing `source` to `target`.
pub fn rho_param(source: &Series<f64>, target: &Series<f64>, u: &CMat<f64>) -> Result<f64> {
    let sig = source.sig;
    let (l, src_l) = lowest_component(source, 1e-12)?;
    let (lt, tgt_l) = lowest_component(target, 1e-12)?;
    if l != lt {
        return Err(Error::Precondition(format!("lowest weights differ: {l} vs {lt}")));
    }
    let lam = lambda_of(sig, u);
    if (lam.abs() - 1.0).abs() > 1e-10 {
        return Err(Error::Precondition("U is not compatible with the form".into()));
    }
    let lam = lam.signum();
    let uinv = mat_inv(u)?;
    let moved = linear_change(&src_l, &uinv, lam)?;
    let ratio = consistent_ratio(
        |z, uu| Ok(lam * moved.eval_complex(z, uu).re),
        |z, uu| Ok(tgt_l.eval_complex(z, uu).re),
        &sample_points(sig, seed_of(&tgt_l)),
        1e-8,
    )?;
    if ratio <= 0.0 {
        return Err(Error::Precondition("U is not an isotropy direction (negative ratio)".into()));
    }
    Ok(lam * ratio.powf(2.0 / (l as f64 - 2.0)))
}

pub fn rho_of_u(f: &Series<f64>, u: &CMat<f64>) -> Result<f64> {
    rho_param(f, f, u)
}

/// `a` of an element normalizing `source` to `target`, given `U` and `rho`.
pub fn a_param(source: &Series<f64>, target: &Series<f64>, u: &CMat<f64>, rho: f64) -> Result<Vec<Complex<f64>>> {
    let sig = source.sig;
    let (l, _) = lowest_component(source, 1e-12)?;
    let (_, tgt_l) = lowest_component(target, 1e-12)?;
    let ctx = IsotropyContext::new(tgt_l.filter(|m| m.weight() == l), l)?;
    let lam = rho.signum();
    let uinv = mat_inv(u)?;
    let src_next = source.weight_part(l + 1);
    let moved = linear_change(&src_next, &uinv, lam)?.scale_real(&(lam * rho.abs().powf((1.0 - l as f64) / 2.0)));
    let rhs = target.weight_part(l + 1).sub(&moved)?.with_trunc(l + 1);
    let a_star = solve_h_map(&ctx, &rhs, 1e-8).map_err(|e| match e {
        Error::Inconsistent(r) => Error::Precondition(format!("U is not an isotropy direction (residual {r:e})")),
        e => e,
    })?;
    let k = rho / rho.abs().sqrt();
    let _ = sig;
    Ok(mat_vec(&uinv, &a_star).into_iter().map(|x| x * k).collect())
}

pub fn a_of_u(f: &Series<f64>, u: &CMat<f64>, rho: f64) -> Result<Vec<Complex<f64>>> {
    a_param(f, f, u, rho)
}

/// `Sum ((l+s+t-4) u + 2(s-t) i <z,z>) F_st - 2 <z,z>^2 dF_st/du` at a point:
/// the first-order weight-`(l+2)` image of `F_l` under `(I, 0, 1, r)` is
/// `-(r/2)` times this.
pub fn r_denominator(f_l: &Series<f64>, l: u32, z: &[Complex<f64>], u: f64) -> Complex<f64> {
    let q = f_l.sig.form(z, z).re;
    let mut acc = Complex::new(0.0, 0.0);
    for ((s, t), fst) in f_l.decompose_by_type() {
        let v = fst.eval_complex(z, u);
        let dv = fst.d_u().eval_complex(z, u);
        let coef = Complex::new((l + s + t) as f64 * u - 4.0 * u, 2.0 * (s as f64 - t as f64) * q);
        acc += coef * v - dv * (2.0 * q * q);
    }
    acc
}

/// `r` of an element normalizing `source` to `target`, given `U`, `rho`, `a`.
pub fn r_param(source: &Series<f64>, target: &Series<f64>, u: &CMat<f64>, rho: f64, a: &[Complex<f64>]) -> Result<f64> {
    let sig = source.sig;
    let (l, src_l) = lowest_component(source, 1e-12)?;
    if source.trunc < l + 2 || target.trunc < l + 2 {
        return Err(Error::InsufficientTruncation(format!("need weight {} for r", l + 2)));
    }
    let tau = GroupElement::<f64>::translation(sig, a.to_vec(), 0.0);
    let tilde = normalize(source, &tau, &NormalFormType::chern_moser())?.output.weight_part(l + 2);
    let c: CMat<f64> = u.iter().map(|row| row.iter().map(|x| x * rho.abs().sqrt()).collect()).collect();
    let tgt = linear_change(&target.weight_part(l + 2), &c, rho)?.scale_real(&(1.0 / rho));
    let rhs = tgt.sub(&tilde)?;
    let val = consistent_ratio(
        |z, uu| Ok(-2.0 * rhs.eval_complex(z, uu).re),
        |z, uu| {
            let d = r_denominator(&src_l, l, z, uu);
            Ok(if d.im.abs() > 1e-9 * (1.0 + d.re.abs()) { 0.0 } else { d.re })
        },
        &sample_points(sig, seed_of(&src_l)),
        1e-6,
    )?;
    Ok(val)
}

pub fn r_of_u(f: &Series<f64>, u: &CMat<f64>, rho: f64, a: &[Complex<f64>]) -> Result<f64> {
    r_param(f, f, u, rho, a)
}
