//! Isotropy group `H` of the hyperquadric `v = <z,z>` and its affine
//! automorphisms.

use num_complex::Complex;
use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{conj_transpose, identity, mat_inv, mat_mul, mat_vec, CMat};
use crate::scalar::{cx_real, rat, Cx, Mode, Real};
use crate::series::{HolMap, HolSeries, Signature};

/// Element `(U, a, rho, r)` of `H`, acting by
/// `z* = C(z - a w)/d`, `w* = rho w/d`, `d = 1 + 2i<z,a> - w(r + i<a,a>)`,
/// where `C = sqrt|rho| U`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement<S: Real> {
    pub sig: Signature,
    pub u: CMat<S>,
    pub a: Vec<Cx<S>>,
    pub rho: S,
    pub r: S,
    sqrt_abs_rho: S,
}

/// Affine automorphism `z* = z + b`, `w* = w + 2i<z,b> + c + i<b,b>`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineElement<S: Real> {
    pub b: Vec<Cx<S>>,
    pub c: S,
}

fn tol_for<S: Real>() -> f64 {
    match S::MODE {
        Mode::Exact => 0.0,
        Mode::Float => 1e-12,
    }
}

fn i_unit<S: Real>() -> Cx<S> {
    Complex::new(S::zero(), S::one())
}

impl<S: Real> GroupElement<S> {
    pub fn new(sig: Signature, u: CMat<S>, a: Vec<Cx<S>>, rho: S, r: S) -> Result<Self> {
        if rho.is_zero() {
            return Err(Error::Precondition("rho must be nonzero".into()));
        }
        if u.len() != sig.n || u.iter().any(|row| row.len() != sig.n) || a.len() != sig.n {
            return Err(Error::Precondition(format!("U must be {0}x{0} and a of length {0}", sig.n)));
        }
        let sqrt_abs_rho = rho
            .abs()
            .try_sqrt()
            .ok_or_else(|| Error::Precondition("|rho| must be a rational square in exact mode".into()))?;
        let g = GroupElement { sig, u, a, rho, r, sqrt_abs_rho };
        g.check_form(tol_for::<S>())?;
        Ok(g)
    }

    pub fn identity(sig: Signature) -> Self {
        GroupElement {
            sig,
            u: identity(sig.n),
            a: vec![Cx::zero(); sig.n],
            rho: S::one(),
            r: S::zero(),
            sqrt_abs_rho: S::one(),
        }
    }

    /// Element with `U = I`, `rho = 1`: the "translation" part `(a, r)`.
    pub fn translation(sig: Signature, a: Vec<Cx<S>>, r: S) -> Self {
        GroupElement { a, r, ..Self::identity(sig) }
    }

    pub fn sqrt_abs_rho(&self) -> &S {
        &self.sqrt_abs_rho
    }

    pub fn c(&self) -> CMat<S> {
        let s = cx_real(self.sqrt_abs_rho.clone());
        self.u.iter().map(|row| row.iter().map(|x| x.clone() * s.clone()).collect()).collect()
    }

    /// Checks `U^* E U = sign(rho) E` entrywise.
    pub fn check_form(&self, tol: f64) -> Result<()> {
        let n = self.sig.n;
        let e = self.form_matrix();
        let lhs = mat_mul(&conj_transpose(&self.u), &mat_mul(&e, &self.u));
        let sgn = if self.rho.is_positive() { S::one() } else { -S::one() };
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { cx_real(sgn.clone() * self.sig.eps_real::<S>(i)) } else { Cx::zero() };
                let d = lhs[i][j].clone() - want;
                if !(d.re.near_zero(tol) && d.im.near_zero(tol)) {
                    return Err(Error::Precondition(format!(
                        "U does not satisfy <Uz,Uz> = sign(rho)<z,z> at entry ({i},{j})"
                    )));
                }
            }
        }
        Ok(())
    }

    fn form_matrix(&self) -> CMat<S> {
        let n = self.sig.n;
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { cx_real(self.sig.eps_real(i)) } else { Cx::zero() }).collect())
            .collect()
    }

    /// `(n+2) x (n+2)` matrix acting on homogeneous coordinates `(w, z, 1)`.
    pub fn to_matrix(&self) -> CMat<S> {
        let n = self.sig.n;
        let mut m = vec![vec![Cx::<S>::zero(); n + 2]; n + 2];
        m[0][0] = cx_real(self.rho.clone());
        let c = self.c();
        let ca = mat_vec(&c, &self.a);
        for i in 0..n {
            m[i + 1][0] = -ca[i].clone();
            for j in 0..n {
                m[i + 1][j + 1] = c[i][j].clone();
            }
        }
        let aa = self.sig.form(&self.a, &self.a);
        m[n + 1][0] = -cx_real(self.r.clone()) - i_unit::<S>() * aa;
        let two_i = Complex::new(S::zero(), S::from_i64(2));
        for j in 0..n {
            m[n + 1][j + 1] = two_i.clone() * self.a[j].conj() * cx_real(self.sig.eps_real::<S>(j));
        }
        m[n + 1][n + 1] = Cx::one();
        m
    }

    /// Reads an element off a matrix of the block pattern, after scaling the
    /// bottom-right entry to 1.
    pub fn from_matrix(sig: Signature, m: &CMat<S>) -> Result<Self> {
        let n = sig.n;
        let tol = if S::MODE == Mode::Float { 1e-9 } else { 0.0 };
        let corner = m[n + 1][n + 1].clone();
        if corner.is_zero() {
            return Err(Error::Invariant("matrix has zero projective corner".into()));
        }
        let inv = Cx::<S>::one() / corner;
        let m: CMat<S> = m.iter().map(|r| r.iter().map(|x| x.clone() * inv.clone()).collect()).collect();
        let rho_c = m[0][0].clone();
        if !rho_c.im.near_zero(tol) {
            return Err(Error::Invariant("rho entry is not real".into()));
        }
        let rho = rho_c.re;
        let s = rho.abs().try_sqrt().ok_or_else(|| Error::Invariant("|rho| of product is not a square".into()))?;
        let c: CMat<S> = (0..n).map(|i| (0..n).map(|j| m[i + 1][j + 1].clone()).collect()).collect();
        let sinv = cx_real(S::one() / s.clone());
        let u: CMat<S> = c.iter().map(|r| r.iter().map(|x| x.clone() * sinv.clone()).collect()).collect();
        let minus_ca: Vec<Cx<S>> = (0..n).map(|i| -m[i + 1][0].clone()).collect();
        let a = mat_vec(&mat_inv(&c)?, &minus_ca);
        let bl = m[n + 1][0].clone();
        let aa = sig.form(&a, &a);
        let d = bl.im.clone() + aa.re.clone();
        if !d.near_zero(tol * (1.0 + aa.re.to_f64().abs())) {
            return Err(Error::Invariant("bottom-left entry inconsistent with -i<a,a>".into()));
        }
        let g = GroupElement { sig, u, a, rho, r: -bl.re, sqrt_abs_rho: s };
        g.check_form(tol)?;
        Ok(g)
    }

    /// Group product; `compose(s1, s2)` acts as `s1` after `s2`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.sig.check_same(&other.sig)?;
        Self::from_matrix(self.sig, &mat_mul(&self.to_matrix(), &other.to_matrix()))
    }

    pub fn invert(&self) -> Self {
        let rho_inv = S::one() / self.rho.clone();
        let u_inv = mat_inv(&self.u).expect("form-unitary matrices are invertible");
        let ca = mat_vec(&self.c(), &self.a);
        let a = ca.into_iter().map(|x| -x * cx_real(rho_inv.clone())).collect();
        GroupElement {
            sig: self.sig,
            u: u_inv,
            a,
            rho: rho_inv.clone(),
            r: -self.r.clone() * rho_inv,
            sqrt_abs_rho: S::one() / self.sqrt_abs_rho.clone(),
        }
    }

    pub fn denominator(&self, z: &[Cx<S>], w: &Cx<S>) -> Cx<S> {
        let two_i = Complex::new(S::zero(), S::from_i64(2));
        let aa = self.sig.form(&self.a, &self.a);
        Cx::<S>::one() + two_i * self.sig.form(z, &self.a) - w.clone() * (cx_real(self.r.clone()) + i_unit::<S>() * aa)
    }

    pub fn apply(&self, z: &[Cx<S>], w: &Cx<S>) -> Result<(Vec<Cx<S>>, Cx<S>)> {
        let d = self.denominator(z, w);
        let tol = if S::MODE == Mode::Float { 1e-14 } else { 0.0 };
        if d.re.near_zero(tol) && d.im.near_zero(tol) {
            return Err(Error::Indeterminate);
        }
        let dinv = Cx::<S>::one() / d;
        let shifted: Vec<Cx<S>> = z.iter().zip(&self.a).map(|(zi, ai)| zi.clone() - ai.clone() * w.clone()).collect();
        let zs = mat_vec(&self.c(), &shifted).into_iter().map(|x| x * dinv.clone()).collect();
        let ws = w.clone() * cx_real(self.rho.clone()) * dinv;
        Ok((zs, ws))
    }

    /// Parameters `(a*, r*)` of `tau sigma tau^{-1}` with `tau = (I, a', 1, r')`.
    pub fn conjugate_normal_part(&self, a1: &[Cx<S>], r1: &S) -> (Vec<Cx<S>>, S) {
        let sig = self.sig;
        let c = self.c();
        let cinv = mat_inv(&c).expect("invertible");
        let rho = cx_real(self.rho.clone());
        let t = mat_vec(&cinv, a1);
        let a_star: Vec<Cx<S>> =
            (0..sig.n).map(|k| rho.clone() * t[k].clone() + self.a[k].clone() - a1[k].clone()).collect();
        let diff: Vec<Cx<S>> = self.a.iter().zip(a1).map(|(x, y)| x.clone() - y.clone()).collect();
        let cd = mat_vec(&c, &diff);
        let i = i_unit::<S>();
        let val = i.clone() * sig.form(&cd, a1) - i.clone() * sig.form(a1, &cd) + i.clone() * sig.form(&self.a, a1)
            - i * sig.form(a1, &self.a);
        let r_star = self.rho.clone() * r1.clone() - r1.clone() + self.r.clone() + val.re;
        (a_star, r_star)
    }

    /// Power series of the fractional-linear map through weight `trunc`.
    pub fn to_holmap(&self, trunc: u32) -> HolMap<S> {
        let sig = self.sig;
        let n = sig.n;
        let zero = vec![0; n];
        let mut d = HolSeries::zero(sig, trunc);
        let minus_two_i = Complex::new(S::zero(), S::from_i64(-2));
        for k in 0..n {
            let mut e = zero.clone();
            e[k] = 1;
            d.add_term(&e, 0, minus_two_i.clone() * self.a[k].conj() * cx_real(sig.eps_real::<S>(k)));
        }
        let aa = sig.form(&self.a, &self.a);
        d.add_term(&zero, 1, cx_real(self.r.clone()) + i_unit::<S>() * aa);
        let geo = HolSeries::geometric(&d);
        let c = self.c();
        let f = (0..n)
            .map(|i| {
                let mut h = HolSeries::zero(sig, trunc);
                for j in 0..n {
                    let mut e = zero.clone();
                    e[j] = 1;
                    h.add_term(&e, 0, c[i][j].clone());
                    h.add_term(&zero, 1, -c[i][j].clone() * self.a[j].clone());
                }
                h.mul(&geo)
            })
            .collect();
        let mut g = HolSeries::zero(sig, trunc);
        g.add_term(&zero, 1, cx_real(self.rho.clone()));
        HolMap { sig, trunc, f, g: g.mul(&geo) }
    }

    pub fn to_f64(&self) -> GroupElement<f64> {
        let conv = |z: &Cx<S>| Complex::new(z.re.to_f64(), z.im.to_f64());
        GroupElement {
            sig: self.sig,
            u: self.u.iter().map(|r| r.iter().map(conv).collect()).collect(),
            a: self.a.iter().map(conv).collect(),
            rho: self.rho.to_f64(),
            r: self.r.to_f64(),
            sqrt_abs_rho: self.sqrt_abs_rho.to_f64(),
        }
    }

    /// Max-norm distance between parameters.
    pub fn distance(&self, o: &Self) -> f64 {
        let cd =
            |x: &Cx<S>, y: &Cx<S>| (x.re.to_f64() - y.re.to_f64()).abs().max((x.im.to_f64() - y.im.to_f64()).abs());
        let mut d = (self.rho.to_f64() - o.rho.to_f64()).abs().max((self.r.to_f64() - o.r.to_f64()).abs());
        for (x, y) in self.a.iter().zip(&o.a) {
            d = d.max(cd(x, y));
        }
        for (rx, ry) in self.u.iter().zip(&o.u) {
            for (x, y) in rx.iter().zip(ry) {
                d = d.max(cd(x, y));
            }
        }
        d
    }

    /// Random element with bounded parameters. In exact mode `U` is a Cayley
    /// transform with dyadic entries and `|rho|` a rational square. Negative
    /// `rho` is only produced when `2e = n`.
    pub fn random<R: Rng>(sig: Signature, rng: &mut R, allow_negative: bool) -> Self {
        let n = sig.n;
        let negative = allow_negative && 2 * sig.e == n && rng.gen_bool(0.5);
        let mut u = random_form_unitary::<S, R>(sig, rng);
        if negative {
            // swap the positive and negative blocks
            let h = n / 2;
            let mut p = vec![vec![Cx::<S>::zero(); n]; n];
            for k in 0..h {
                p[k][k + h] = Cx::one();
                p[k + h][k] = Cx::one();
            }
            u = mat_mul(&p, &u);
        }
        let s = random_real::<S, R>(rng, 0.5, 1.5);
        let mut rho = s.clone() * s;
        if negative {
            rho = -rho;
        }
        let a = (0..n).map(|_| Complex::new(random_real(rng, -1.0, 1.0), random_real(rng, -1.0, 1.0))).collect();
        let r = random_real(rng, -1.0, 1.0);
        GroupElement::new(sig, u, a, rho, r).expect("random element is valid")
    }
}

/// Uniform sample in `[lo, hi]`; multiples of 1/16 in exact mode.
pub fn random_real<S: Real, R: Rng>(rng: &mut R, lo: f64, hi: f64) -> S {
    match S::MODE {
        Mode::Exact => {
            let k = rng.gen_range((lo * 16.0).ceil() as i64..=(hi * 16.0).floor() as i64);
            S::from_rational(&rat(k, 16))
        }
        Mode::Float => S::from_f64(rng.gen_range(lo..=hi)),
    }
}

/// `U = (I + E S)(I - E S)^{-1}` with `S` skew-Hermitian, so `U^* E U = E`.
pub fn random_form_unitary<S: Real, R: Rng>(sig: Signature, rng: &mut R) -> CMat<S> {
    let n = sig.n;
    loop {
        let mut sk = vec![vec![Cx::<S>::zero(); n]; n];
        for i in 0..n {
            sk[i][i] = Complex::new(S::zero(), random_real(rng, -0.5, 0.5));
            for j in i + 1..n {
                let x: Cx<S> = Complex::new(random_real(rng, -0.5, 0.5), random_real(rng, -0.5, 0.5));
                sk[j][i] = -x.conj();
                sk[i][j] = x;
            }
        }
        let es: CMat<S> =
            (0..n).map(|i| sk[i].iter().map(|x| x.clone() * cx_real(sig.eps_real::<S>(i))).collect()).collect();
        let id = identity::<S>(n);
        let plus: CMat<S> = (0..n).map(|i| (0..n).map(|j| id[i][j].clone() + es[i][j].clone()).collect()).collect();
        let minus: CMat<S> = (0..n).map(|i| (0..n).map(|j| id[i][j].clone() - es[i][j].clone()).collect()).collect();
        if let Ok(inv) = mat_inv(&minus) {
            return mat_mul(&plus, &inv);
        }
    }
}

impl<S: Real> AffineElement<S> {
    pub fn new(b: Vec<Cx<S>>, c: S) -> Self {
        AffineElement { b, c }
    }

    /// The element sending `(kappa, chi)` to the origin.
    pub fn to_origin(kappa: &[Cx<S>], chi: &Cx<S>) -> Self {
        AffineElement { b: kappa.iter().map(|x| -x.clone()).collect(), c: -chi.re.clone() }
    }

    pub fn apply(&self, sig: Signature, z: &[Cx<S>], w: &Cx<S>) -> (Vec<Cx<S>>, Cx<S>) {
        let zs = z.iter().zip(&self.b).map(|(x, y)| x.clone() + y.clone()).collect();
        let two_i = Complex::new(S::zero(), S::from_i64(2));
        let ws = w.clone()
            + two_i * sig.form(z, &self.b)
            + cx_real(self.c.clone())
            + i_unit::<S>() * sig.form(&self.b, &self.b);
        (zs, ws)
    }
}

/// Residue `|Im w - <z,z>|` of a point against the hyperquadric.
pub fn hyperquadric_residue(sig: Signature, z: &[Complex<f64>], w: Complex<f64>) -> f64 {
    (w.im - sig.form(z, z).re).abs()
}
