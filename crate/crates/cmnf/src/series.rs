//! Truncated formal power series in `(z, zbar, u)` graded by weight
//! (`z`, `zbar` weight 1, `u` weight 2) and by type `(|I|, |J|)`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{mat_inv, CMat};
use crate::scalar::{cx_real, Cx, Real};

/// Largest supported number of complex variables `z`.
pub const MAX_N: usize = 6;

/// Signature of the Hermitian form: `e` plus signs followed by `n - e` minus signs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    pub n: usize,
    pub e: usize,
}

impl Signature {
    pub fn new(n: usize, e: usize) -> Result<Self> {
        if n == 0 || n > MAX_N {
            return Err(Error::Precondition(format!("n = {n} outside 1..={MAX_N}")));
        }
        if e > n {
            return Err(Error::Precondition(format!("e = {e} exceeds n = {n}")));
        }
        Ok(Signature { n, e })
    }

    pub fn definite(n: usize) -> Self {
        Signature::new(n, n).expect("valid dimension")
    }

    pub fn eps(&self, alpha: usize) -> i64 {
        if alpha < self.e {
            1
        } else {
            -1
        }
    }

    pub fn eps_real<S: Real>(&self, alpha: usize) -> S {
        S::from_i64(self.eps(alpha))
    }

    /// `<z, w> = sum eps_a z^a conj(w^a)`.
    pub fn form<S: Real>(&self, z: &[Cx<S>], w: &[Cx<S>]) -> Cx<S> {
        (0..self.n).fold(Cx::zero(), |acc, a| {
            let t = z[a].clone() * w[a].conj();
            if self.eps(a) > 0 {
                acc + t
            } else {
                acc - t
            }
        })
    }

    pub fn check_same(&self, other: &Signature) -> Result<()> {
        if self != other {
            return Err(Error::SignatureMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// A monomial `z^I zbar^J u^l`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Monomial {
    n: u8,
    zi: [u8; MAX_N],
    zj: [u8; MAX_N],
    l: u8,
}

impl Monomial {
    pub fn one(n: usize) -> Self {
        Monomial { n: n as u8, zi: [0; MAX_N], zj: [0; MAX_N], l: 0 }
    }

    pub fn new(zi: &[u32], zj: &[u32], l: u32) -> Self {
        assert_eq!(zi.len(), zj.len());
        let mut m = Monomial::one(zi.len());
        for a in 0..zi.len() {
            m.zi[a] = zi[a] as u8;
            m.zj[a] = zj[a] as u8;
        }
        m.l = l as u8;
        m
    }

    pub fn z(n: usize, alpha: usize) -> Self {
        let mut m = Monomial::one(n);
        m.zi[alpha] = 1;
        m
    }

    pub fn zbar(n: usize, alpha: usize) -> Self {
        let mut m = Monomial::one(n);
        m.zj[alpha] = 1;
        m
    }

    pub fn u(n: usize) -> Self {
        let mut m = Monomial::one(n);
        m.l = 1;
        m
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn zi(&self) -> Vec<u32> {
        self.zi[..self.n()].iter().map(|&x| x as u32).collect()
    }

    pub fn zj(&self) -> Vec<u32> {
        self.zj[..self.n()].iter().map(|&x| x as u32).collect()
    }

    pub fn zi_at(&self, a: usize) -> u32 {
        self.zi[a] as u32
    }

    pub fn zj_at(&self, a: usize) -> u32 {
        self.zj[a] as u32
    }

    pub fn l(&self) -> u32 {
        self.l as u32
    }

    pub fn s(&self) -> u32 {
        self.zi.iter().map(|&x| x as u32).sum()
    }

    pub fn t(&self) -> u32 {
        self.zj.iter().map(|&x| x as u32).sum()
    }

    pub fn ty(&self) -> (u32, u32) {
        (self.s(), self.t())
    }

    pub fn weight(&self) -> u32 {
        self.s() + self.t() + 2 * self.l()
    }

    /// Swaps the roles of `z` and `zbar`.
    pub fn conj(&self) -> Self {
        Monomial { n: self.n, zi: self.zj, zj: self.zi, l: self.l }
    }

    pub fn mul(&self, o: &Monomial) -> Self {
        let mut m = *self;
        for a in 0..MAX_N {
            m.zi[a] += o.zi[a];
            m.zj[a] += o.zj[a];
        }
        m.l += o.l;
        m
    }

    pub fn with_zi(mut self, a: usize, k: u32) -> Self {
        self.zi[a] = k as u8;
        self
    }

    pub fn with_zj(mut self, a: usize, k: u32) -> Self {
        self.zj[a] = k as u8;
        self
    }

    pub fn with_l(mut self, k: u32) -> Self {
        self.l = k as u8;
        self
    }

    /// Exponent of slot `k` in the order `z^1..z^n, zbar^1..zbar^n, u`.
    pub fn slot(&self, k: usize) -> u32 {
        let n = self.n();
        if k < n {
            self.zi[k] as u32
        } else if k < 2 * n {
            self.zj[k - n] as u32
        } else {
            self.l as u32
        }
    }
}

impl Ord for Monomial {
    fn cmp(&self, o: &Self) -> Ordering {
        self.weight()
            .cmp(&o.weight())
            .then(self.s().cmp(&o.s()))
            .then(self.zi.cmp(&o.zi))
            .then(self.zj.cmp(&o.zj))
            .then(self.l.cmp(&o.l))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "z{:?}zb{:?}u{}", self.zi(), self.zj(), self.l)
    }
}

/// All multi-indices of length `n` with entries summing to `s`.
pub fn multi_indices(n: usize, s: u32) -> Vec<Vec<u32>> {
    if n == 1 {
        return vec![vec![s]];
    }
    let mut out = Vec::new();
    for first in (0..=s).rev() {
        for mut rest in multi_indices(n - 1, s - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// All monomials of the given weight whose type satisfies `keep`, in canonical order.
pub fn monomials(n: usize, weight: u32, keep: impl Fn(u32, u32) -> bool) -> Vec<Monomial> {
    let mut out = Vec::new();
    for l in 0..=weight / 2 {
        let d = weight - 2 * l;
        for s in 0..=d {
            let t = d - s;
            if !keep(s, t) {
                continue;
            }
            for zi in multi_indices(n, s) {
                for zj in multi_indices(n, t) {
                    out.push(Monomial::new(&zi, &zj, l));
                }
            }
        }
    }
    out.sort();
    out
}

/// Truncated series with complex coefficients. A defining series is one that
/// additionally satisfies the reality condition checked by [`Series::check_real`].
#[derive(Clone, PartialEq)]
pub struct Series<S: Real> {
    pub sig: Signature,
    pub trunc: u32,
    terms: BTreeMap<Monomial, Cx<S>>,
}

pub type DefiningSeries<S> = Series<S>;

impl<S: Real> fmt::Debug for Series<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Series[n={},e={},N={}]{{", self.sig.n, self.sig.e, self.trunc)?;
        for (m, c) in &self.terms {
            write!(f, " ({:?}+{:?}i){:?}", c.re, c.im, m)?;
        }
        write!(f, " }}")
    }
}

impl<S: Real> Series<S> {
    pub fn zero(sig: Signature, trunc: u32) -> Self {
        Series { sig, trunc, terms: BTreeMap::new() }
    }

    pub fn constant(sig: Signature, trunc: u32, c: Cx<S>) -> Self {
        Self::monomial(sig, trunc, Monomial::one(sig.n), c)
    }

    pub fn monomial(sig: Signature, trunc: u32, m: Monomial, c: Cx<S>) -> Self {
        let mut s = Self::zero(sig, trunc);
        s.add_term(m, c);
        s
    }

    pub fn from_terms(sig: Signature, trunc: u32, terms: impl IntoIterator<Item = (Monomial, Cx<S>)>) -> Self {
        let mut s = Self::zero(sig, trunc);
        for (m, c) in terms {
            s.add_term(m, c);
        }
        s
    }

    pub fn var_z(sig: Signature, trunc: u32, a: usize) -> Self {
        Self::monomial(sig, trunc, Monomial::z(sig.n, a), Cx::one())
    }

    pub fn var_zbar(sig: Signature, trunc: u32, a: usize) -> Self {
        Self::monomial(sig, trunc, Monomial::zbar(sig.n, a), Cx::one())
    }

    pub fn var_u(sig: Signature, trunc: u32) -> Self {
        Self::monomial(sig, trunc, Monomial::u(sig.n), Cx::one())
    }

    /// The Hermitian form `<z, z>`.
    pub fn hyperquadric(sig: Signature, trunc: u32) -> Self {
        let n = sig.n;
        Self::from_terms(
            sig,
            trunc,
            (0..n).map(|a| (Monomial::z(n, a).mul(&Monomial::zbar(n, a)), cx_real(sig.eps_real::<S>(a)))),
        )
    }

    /// `<z, c>` for a constant vector `c`: linear in `z`.
    pub fn form_z_c(sig: Signature, trunc: u32, c: &[Cx<S>]) -> Self {
        let n = sig.n;
        Self::from_terms(sig, trunc, (0..n).map(|a| (Monomial::z(n, a), c[a].conj() * cx_real(sig.eps_real::<S>(a)))))
    }

    /// `<c, z>`: linear in `zbar`.
    pub fn form_c_z(sig: Signature, trunc: u32, c: &[Cx<S>]) -> Self {
        Self::form_z_c(sig, trunc, c).conj()
    }

    pub fn add_term(&mut self, m: Monomial, c: Cx<S>) {
        if m.weight() > self.trunc || c.is_zero() {
            return;
        }
        debug_assert_eq!(m.n(), self.sig.n);
        match self.terms.get_mut(&m) {
            Some(v) => {
                *v = v.clone() + c;
                if v.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn coeff(&self, m: &Monomial) -> Cx<S> {
        self.terms.get(m).cloned().unwrap_or_else(Cx::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Cx<S>)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Lowest weight present, if any.
    pub fn order(&self) -> Option<u32> {
        self.terms.keys().next().map(|m| m.weight())
    }

    pub fn with_trunc(&self, trunc: u32) -> Self {
        Self::from_terms(self.sig, trunc, self.terms.iter().map(|(m, c)| (*m, c.clone())))
    }

    pub fn map_coeffs(&self, f: impl Fn(&Cx<S>) -> Cx<S>) -> Self {
        Self::from_terms(self.sig, self.trunc, self.terms.iter().map(|(m, c)| (*m, f(c))))
    }

    pub fn to_mode<T: Real>(&self) -> Series<T> {
        Series::from_terms(
            self.sig,
            self.trunc,
            self.terms.iter().map(|(m, c)| (*m, Complex::new(T::from_f64(c.re.to_f64()), T::from_f64(c.im.to_f64())))),
        )
    }

    pub fn to_f64(&self) -> Series<f64> {
        self.to_mode()
    }

    pub fn filter(&self, keep: impl Fn(&Monomial) -> bool) -> Self {
        Self::from_terms(self.sig, self.trunc, self.terms.iter().filter(|(m, _)| keep(m)).map(|(m, c)| (*m, c.clone())))
    }

    pub fn weight_part(&self, k: u32) -> Self {
        self.filter(|m| m.weight() == k)
    }

    pub fn up_to_weight(&self, k: u32) -> Self {
        self.filter(|m| m.weight() <= k)
    }

    pub fn type_part(&self, s: u32, t: u32) -> Self {
        self.filter(|m| m.ty() == (s, t))
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.sig.check_same(&o.sig)?;
        let mut out = self.with_trunc(self.trunc.min(o.trunc));
        for (m, c) in &o.terms {
            out.add_term(*m, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        self.map_coeffs(|c| -c.clone())
    }

    pub fn scale(&self, c: &Cx<S>) -> Self {
        if c.is_zero() {
            return Self::zero(self.sig, self.trunc);
        }
        self.map_coeffs(|x| x.clone() * c.clone())
    }

    pub fn scale_real(&self, c: &S) -> Self {
        self.scale(&cx_real(c.clone()))
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        self.sig.check_same(&o.sig)?;
        let trunc = self.trunc.min(o.trunc);
        let mut acc: HashMap<Monomial, Cx<S>> = HashMap::new();
        for (ma, ca) in &self.terms {
            let wa = ma.weight();
            if wa > trunc {
                break;
            }
            for (mb, cb) in &o.terms {
                if wa + mb.weight() > trunc {
                    break;
                }
                let p = ca.clone() * cb.clone();
                let e = acc.entry(ma.mul(mb)).or_insert_with(Cx::zero);
                *e = e.clone() + p;
            }
        }
        Ok(Self::from_terms(self.sig, trunc, acc))
    }

    pub fn pow(&self, k: u32) -> Result<Self> {
        let mut acc = Self::constant(self.sig, self.trunc, Cx::one());
        for _ in 0..k {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Complex conjugate series: `conj(F)(z, zbar, u) = sum conj(c) zbar^I z^J u^l`.
    pub fn conj(&self) -> Self {
        Self::from_terms(self.sig, self.trunc, self.terms.iter().map(|(m, c)| (m.conj(), c.conj())))
    }

    /// `(F + conj F) / 2`.
    pub fn real_part(&self) -> Self {
        let half = cx_real(S::one() / S::from_i64(2));
        self.add(&self.conj()).expect("same signature").scale(&half)
    }

    /// `(F - conj F) / 2i`.
    pub fn imag_part(&self) -> Self {
        let k = Cx::new(S::zero(), -(S::one() / S::from_i64(2)));
        self.sub(&self.conj()).expect("same signature").scale(&k)
    }

    /// Largest deviation from `coeff(I,J,l) = conj(coeff(J,I,l))`.
    pub fn reality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (m, c) in &self.terms {
            let d = c.clone() - self.coeff(&m.conj()).conj();
            worst = worst.max(d.re.to_f64().abs().max(d.im.to_f64().abs()));
        }
        worst
    }

    pub fn check_real(&self, tol: f64) -> Result<()> {
        for (m, c) in &self.terms {
            let d = c.clone() - self.coeff(&m.conj()).conj();
            if !(d.re.near_zero(tol) && d.im.near_zero(tol)) {
                return Err(Error::NotReal(format!("{m:?}")));
            }
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.re.to_f64().abs().max(c.im.to_f64().abs())).fold(0.0, f64::max)
    }

    pub fn d_z(&self, a: usize) -> Self {
        Self::from_terms(
            self.sig,
            self.trunc,
            self.terms.iter().filter(|(m, _)| m.zi_at(a) > 0).map(|(m, c)| {
                let k = m.zi_at(a);
                (m.with_zi(a, k - 1), c.clone() * cx_real(S::from_i64(k as i64)))
            }),
        )
    }

    pub fn d_zbar(&self, a: usize) -> Self {
        Self::from_terms(
            self.sig,
            self.trunc,
            self.terms.iter().filter(|(m, _)| m.zj_at(a) > 0).map(|(m, c)| {
                let k = m.zj_at(a);
                (m.with_zj(a, k - 1), c.clone() * cx_real(S::from_i64(k as i64)))
            }),
        )
    }

    pub fn d_u(&self) -> Self {
        Self::from_terms(
            self.sig,
            self.trunc,
            self.terms.iter().filter(|(m, _)| m.l() > 0).map(|(m, c)| {
                let k = m.l();
                (m.with_l(k - 1), c.clone() * cx_real(S::from_i64(k as i64)))
            }),
        )
    }

    /// The signature Laplacian applied `k` times.
    pub fn laplacian(&self, k: u32) -> Self {
        let mut cur = self.clone();
        for _ in 0..k {
            let mut next = Self::zero(self.sig, self.trunc);
            for (m, c) in &cur.terms {
                for a in 0..self.sig.n {
                    let (p, q) = (m.zi_at(a), m.zj_at(a));
                    if p == 0 || q == 0 {
                        continue;
                    }
                    let f = S::from_i64(self.sig.eps(a) * (p * q) as i64);
                    next.add_term(m.with_zi(a, p - 1).with_zj(a, q - 1), c.clone() * cx_real(f));
                }
            }
            cur = next;
        }
        cur
    }

    /// `(1/(s t)) Delta F` for a series of pure type `(s, t)`, in the frame
    /// where the weight-2 part is the constant form.
    pub fn trace_op(&self, s: u32, t: u32) -> Result<Self> {
        if s == 0 || t == 0 {
            return Err(Error::Precondition(format!("trace needs s, t >= 1, got ({s},{t})")));
        }
        if let Some((m, _)) = self.terms.iter().find(|(m, _)| m.ty() != (s, t)) {
            return Err(Error::Precondition(format!("term {m:?} is not of type ({s},{t})")));
        }
        Ok(self.laplacian(1).scale_real(&(S::one() / S::from_i64((s * t) as i64))))
    }

    pub fn decompose_by_weight(&self) -> BTreeMap<u32, Self> {
        let mut out: BTreeMap<u32, Self> = BTreeMap::new();
        for (m, c) in &self.terms {
            out.entry(m.weight()).or_insert_with(|| Self::zero(self.sig, self.trunc)).add_term(*m, c.clone());
        }
        out
    }

    pub fn decompose_by_type(&self) -> BTreeMap<(u32, u32), Self> {
        let mut out: BTreeMap<(u32, u32), Self> = BTreeMap::new();
        for (m, c) in &self.terms {
            out.entry(m.ty()).or_insert_with(|| Self::zero(self.sig, self.trunc)).add_term(*m, c.clone());
        }
        out
    }

    /// Complex value at `(z, conj z, u)`.
    pub fn eval_complex(&self, z: &[Complex<f64>], u: f64) -> Complex<f64> {
        let zb: Vec<Complex<f64>> = z.iter().map(|x| x.conj()).collect();
        self.eval_at(z, &zb, Complex::new(u, 0.0))
    }

    /// Value with independent arguments for `z`, `zbar` and `u`.
    pub fn eval_at(&self, z: &[Complex<f64>], zb: &[Complex<f64>], u: Complex<f64>) -> Complex<f64> {
        let mut acc = Complex::new(0.0, 0.0);
        for (m, c) in &self.terms {
            let mut t = Complex::new(c.re.to_f64(), c.im.to_f64());
            for a in 0..self.sig.n {
                t *= z[a].powu(m.zi_at(a)) * zb[a].powu(m.zj_at(a));
            }
            acc += t * u.powu(m.l());
        }
        acc
    }

    /// Real value of a defining series; fails if the imaginary residue exceeds
    /// `1e-12` relative to the sum of term magnitudes.
    pub fn eval(&self, z: &[Complex<f64>], u: f64) -> Result<f64> {
        let v = self.eval_complex(z, u);
        let scale = self.eval_abs(z, u).max(1e-300);
        if v.im.abs() > 1e-12 * scale {
            return Err(Error::NotReal(format!("imaginary residue {:e} at evaluation", v.im)));
        }
        Ok(v.re)
    }

    fn eval_abs(&self, z: &[Complex<f64>], u: f64) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut t = Complex::new(c.re.to_f64(), c.im.to_f64()).norm();
                for a in 0..self.sig.n {
                    t *= z[a].norm().powi((m.zi_at(a) + m.zj_at(a)) as i32);
                }
                t * u.abs().powi(m.l() as i32)
            })
            .sum()
    }

    /// Substitutes series for the slots `z^1..z^n, zbar^1..zbar^n, u`; the
    /// result has truncation `trunc`. Terms are grouped by their `z`
    /// exponent so that each group costs one product after the `(zbar, u)`
    /// parts are combined linearly; powers and shared prefixes are cached.
    pub fn substitute(&self, slots: &[Self], trunc: u32) -> Result<Self> {
        let n = self.sig.n;
        assert_eq!(slots.len(), 2 * n + 1);
        let sig = slots[0].sig;
        let nslots = 2 * n + 1;
        let mut powers: Vec<Vec<Series<S>>> = vec![vec![Series::constant(sig, trunc, Cx::one())]; nslots];
        let mut prefix: HashMap<(usize, Monomial), Series<S>> = HashMap::new();
        let mut groups: BTreeMap<Monomial, Vec<(Monomial, &Cx<S>)>> = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut alpha = Monomial::one(n);
            alpha.zi = m.zi;
            let mut beta = *m;
            beta.zi = [0; MAX_N];
            groups.entry(alpha).or_default().push((beta, c));
        }
        let mut out = Series::zero(sig, trunc);
        for (alpha, members) in groups {
            let q = prefix_product(&alpha, nslots, slots, &mut powers, &mut prefix, trunc)?;
            let Some(qord) = q.order() else { continue };
            if qord > trunc {
                continue;
            }
            let inner_trunc = trunc - qord;
            let mut acc: HashMap<Monomial, Cx<S>> = HashMap::new();
            for (beta, c) in members {
                let p = prefix_product(&beta, nslots, slots, &mut powers, &mut prefix, trunc)?;
                for (pm, pc) in p.terms.range(..) {
                    if pm.weight() > inner_trunc {
                        break;
                    }
                    let e = acc.entry(*pm).or_insert_with(Cx::zero);
                    *e = e.clone() + pc.clone() * c.clone();
                }
            }
            let inner = Series::from_terms(sig, inner_trunc, acc);
            let prod = q.mul(&inner.with_trunc(trunc))?;
            for (pm, pc) in prod.terms {
                out.add_term(pm, pc);
            }
        }
        Ok(out)
    }
}

fn power<S: Real>(
    powers: &mut [Vec<Series<S>>],
    slots: &[Series<S>],
    k: usize,
    e: u32,
    trunc: u32,
) -> Result<Series<S>> {
    while powers[k].len() <= e as usize {
        let last = powers[k].last().unwrap().clone();
        let next = last.mul(&slots[k].with_trunc(trunc))?;
        powers[k].push(next);
    }
    Ok(powers[k][e as usize].clone())
}

fn prefix_product<S: Real>(
    m: &Monomial,
    upto: usize,
    slots: &[Series<S>],
    powers: &mut [Vec<Series<S>>],
    cache: &mut HashMap<(usize, Monomial), Series<S>>,
    trunc: u32,
) -> Result<Series<S>> {
    // product over slots 0..upto of slot^exp
    let last = (0..upto).rev().find(|&k| m.slot(k) > 0);
    let Some(k) = last else {
        return Ok(Series::constant(slots[0].sig, trunc, Cx::one()));
    };
    let key = (k + 1, clear_after(m, k + 1));
    if let Some(s) = cache.get(&key) {
        return Ok(s.clone());
    }
    let head = prefix_product(m, k, slots, powers, cache, trunc)?;
    let p = power(powers, slots, k, m.slot(k), trunc)?;
    let r = if head.len() == 1 && head.coeff(&Monomial::one(head.sig.n)).is_one() { p } else { head.mul(&p)? };
    cache.insert(key, r.clone());
    Ok(r)
}

fn clear_after(m: &Monomial, k: usize) -> Monomial {
    let n = m.n();
    let mut out = *m;
    for j in k..2 * n + 1 {
        if j < n {
            out = out.with_zi(j, 0);
        } else if j < 2 * n {
            out = out.with_zj(j - n, 0);
        } else {
            out = out.with_l(0);
        }
    }
    out
}

/// Holomorphic series in `(z, w)`, stored as a [`Series`] with no `zbar`
/// exponents and the power of `w` in the `u` slot.
#[derive(Clone, Debug, PartialEq)]
pub struct HolSeries<S: Real>(pub Series<S>);

impl<S: Real> HolSeries<S> {
    pub fn zero(sig: Signature, trunc: u32) -> Self {
        HolSeries(Series::zero(sig, trunc))
    }

    pub fn var_z(sig: Signature, trunc: u32, a: usize) -> Self {
        HolSeries(Series::var_z(sig, trunc, a))
    }

    pub fn var_w(sig: Signature, trunc: u32) -> Self {
        HolSeries(Series::var_u(sig, trunc))
    }

    pub fn constant(sig: Signature, trunc: u32, c: Cx<S>) -> Self {
        HolSeries(Series::constant(sig, trunc, c))
    }

    /// Adds `c z^I w^k`.
    pub fn add_term(&mut self, zi: &[u32], k: u32, c: Cx<S>) {
        let zero = vec![0; zi.len()];
        self.0.add_term(Monomial::new(zi, &zero, k), c);
    }

    /// Coefficient of `z^I w^k`.
    pub fn coeff(&self, zi: &[u32], k: u32) -> Cx<S> {
        let zero = vec![0; zi.len()];
        self.0.coeff(&Monomial::new(zi, &zero, k))
    }

    pub fn add(&self, o: &Self) -> Self {
        HolSeries(self.0.add(&o.0).expect("same signature"))
    }

    pub fn sub(&self, o: &Self) -> Self {
        HolSeries(self.0.sub(&o.0).expect("same signature"))
    }

    pub fn mul(&self, o: &Self) -> Self {
        HolSeries(self.0.mul(&o.0).expect("same signature"))
    }

    pub fn scale(&self, c: &Cx<S>) -> Self {
        HolSeries(self.0.scale(c))
    }

    pub fn weight_part(&self, k: u32) -> Self {
        HolSeries(self.0.weight_part(k))
    }

    pub fn with_trunc(&self, trunc: u32) -> Self {
        HolSeries(self.0.with_trunc(trunc))
    }

    /// `1 / (1 - d)` for `d` without constant term.
    pub fn geometric(d: &Self) -> Self {
        let trunc = d.0.trunc;
        let one = Self::constant(d.0.sig, trunc, Cx::one());
        let mut acc = one.clone();
        let mut p = one;
        for _ in 0..trunc {
            p = p.mul(d);
            if p.0.is_empty() {
                break;
            }
            acc = acc.add(&p);
        }
        acc
    }

    /// Substitutes `w := wsub` (a series in `z, zbar, u`).
    pub fn at_w(&self, wsub: &Series<S>, trunc: u32) -> Result<Series<S>> {
        let sig = self.0.sig;
        let n = sig.n;
        let mut slots: Vec<Series<S>> = (0..n).map(|a| Series::var_z(sig, trunc, a)).collect();
        slots.extend((0..n).map(|a| Series::var_zbar(sig, trunc, a)));
        slots.push(wsub.with_trunc(trunc));
        self.0.substitute(&slots, trunc)
    }

    /// Holomorphic composition `self(zmap, wmap)`.
    pub fn compose(&self, zmap: &[HolSeries<S>], wmap: &HolSeries<S>, trunc: u32) -> Result<Self> {
        let sig = self.0.sig;
        let mut slots: Vec<Series<S>> = zmap.iter().map(|h| h.0.with_trunc(trunc)).collect();
        slots.extend((0..sig.n).map(|_| Series::zero(sig, trunc)));
        slots.push(wmap.0.with_trunc(trunc));
        Ok(HolSeries(self.0.substitute(&slots, trunc)?))
    }
}

/// Holomorphic map `(z, w) -> (f(z, w), g(z, w))` fixing the origin,
/// truncated at weight `trunc` (each `f^a` and `g` counted by the weights of
/// their monomials).
#[derive(Clone, Debug, PartialEq)]
pub struct HolMap<S: Real> {
    pub sig: Signature,
    pub trunc: u32,
    pub f: Vec<HolSeries<S>>,
    pub g: HolSeries<S>,
}

impl<S: Real> HolMap<S> {
    pub fn identity(sig: Signature, trunc: u32) -> Self {
        HolMap {
            sig,
            trunc,
            f: (0..sig.n).map(|a| HolSeries::var_z(sig, trunc, a)).collect(),
            g: HolSeries::var_w(sig, trunc),
        }
    }

    pub fn zero(sig: Signature, trunc: u32) -> Self {
        HolMap { sig, trunc, f: vec![HolSeries::zero(sig, trunc); sig.n], g: HolSeries::zero(sig, trunc) }
    }

    pub fn add(&self, o: &Self) -> Self {
        HolMap {
            sig: self.sig,
            trunc: self.trunc.min(o.trunc),
            f: self.f.iter().zip(&o.f).map(|(x, y)| x.add(y)).collect(),
            g: self.g.add(&o.g),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        HolMap {
            sig: self.sig,
            trunc: self.trunc.min(o.trunc),
            f: self.f.iter().zip(&o.f).map(|(x, y)| x.sub(y)).collect(),
            g: self.g.sub(&o.g),
        }
    }

    pub fn with_trunc(&self, trunc: u32) -> Self {
        HolMap {
            sig: self.sig,
            trunc,
            f: self.f.iter().map(|x| x.with_trunc(trunc)).collect(),
            g: self.g.with_trunc(trunc),
        }
    }

    /// `self o inner`.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        self.sig.check_same(&inner.sig)?;
        let trunc = self.trunc.min(inner.trunc);
        let f = self.f.iter().map(|x| x.compose(&inner.f, &inner.g, trunc)).collect::<Result<Vec<_>>>()?;
        let g = self.g.compose(&inner.f, &inner.g, trunc)?;
        Ok(HolMap { sig: self.sig, trunc, f, g })
    }

    /// Weight-homogeneous leading part: `z -> C z`, `w -> c w + q(z)`.
    pub fn leading(&self) -> Self {
        HolMap {
            sig: self.sig,
            trunc: self.trunc,
            f: self.f.iter().map(|x| x.weight_part(1)).collect(),
            g: self.g.weight_part(2),
        }
    }

    /// Matrix of `z`-derivatives of `f` at the origin.
    pub fn linear_matrix(&self) -> CMat<S> {
        let n = self.sig.n;
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let mut e = vec![0; n];
                        e[j] = 1;
                        self.f[i].coeff(&e, 0)
                    })
                    .collect()
            })
            .collect()
    }

    /// Coefficient of `w` in `g`.
    pub fn w_coeff(&self) -> Cx<S> {
        self.g.coeff(&vec![0; self.sig.n], 1)
    }

    /// Formal inverse by fixed-point iteration on the non-leading part.
    pub fn invert(&self) -> Result<Self> {
        let sig = self.sig;
        let n = sig.n;
        let trunc = self.trunc;
        if self.f.iter().any(|x| x.0.order() == Some(0)) || matches!(self.g.0.order(), Some(0) | Some(1)) {
            return Err(Error::Precondition("map does not fix the origin to leading order".into()));
        }
        let c = self.linear_matrix();
        let cinv = mat_inv(&c).map_err(|_| Error::Precondition("non-invertible linear part".into()))?;
        let rho = self.w_coeff();
        if rho.is_zero() {
            return Err(Error::Precondition("non-invertible linear part: zero w coefficient".into()));
        }
        let lead = self.leading();
        let q = lead.g.sub(&HolSeries::var_w(sig, trunc).scale(&rho));
        let zmap: Vec<HolSeries<S>> = (0..n)
            .map(|i| {
                let mut h = HolSeries::zero(sig, trunc);
                for j in 0..n {
                    let mut e = vec![0; n];
                    e[j] = 1;
                    h.add_term(&e, 0, cinv[i][j].clone());
                }
                h
            })
            .collect();
        let qz = q.compose(&zmap, &HolSeries::var_w(sig, trunc), trunc)?;
        let rinv = Cx::<S>::one() / rho;
        let linv = HolMap { sig, trunc, f: zmap, g: HolSeries::var_w(sig, trunc).sub(&qz).scale(&rinv) };
        let rest = self.sub(&lead);
        let id = HolMap::identity(sig, trunc);
        let mut psi = linv.clone();
        for _ in 0..=trunc {
            let next = linv.compose(&id.sub(&rest.compose(&psi)?))?;
            if next == psi {
                break;
            }
            psi = next;
        }
        Ok(psi)
    }

    /// Drops the weight-`trunc` part of each `f^a`, which a weight-`trunc`
    /// normalization does not determine.
    pub fn without_top_f(&self) -> Self {
        let mut out = self.clone();
        for x in out.f.iter_mut() {
            *x = HolSeries(x.0.filter(|m| m.weight() < self.trunc));
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.f.iter().map(|x| x.0.max_abs()).fold(self.g.0.max_abs(), f64::max)
    }

    /// Max-norm coefficient distance.
    pub fn distance(&self, o: &Self) -> f64 {
        let mut d = self.g.sub(&o.g).0.max_abs();
        for (x, y) in self.f.iter().zip(&o.f) {
            d = d.max(x.sub(y).0.max_abs());
        }
        d
    }

    pub fn to_f64(&self) -> HolMap<f64> {
        HolMap {
            sig: self.sig,
            trunc: self.trunc,
            f: self.f.iter().map(|x| HolSeries(x.0.to_f64())).collect(),
            g: HolSeries(self.g.0.to_f64()),
        }
    }

    /// Evaluates the truncated map at a point.
    pub fn eval(&self, z: &[Complex<f64>], w: Complex<f64>) -> (Vec<Complex<f64>>, Complex<f64>) {
        let zb = vec![Complex::new(0.0, 0.0); z.len()];
        (self.f.iter().map(|x| x.0.eval_at(z, &zb, w)).collect(), self.g.0.eval_at(z, &zb, w))
    }
}
