//! Chains on the hyperquadric: the second-order ODE for `z = p(u)`, its
//! closed-form solutions, the map to the Moser-Vitushkin model and the
//! Schwarzian reparametrization `q(u)`.

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::series::{HolMap, HolSeries, Series, Signature};

type C64 = Complex<f64>;

const I: C64 = Complex { re: 0.0, im: 1.0 };

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainState {
    pub p: Vec<C64>,
    pub dp: Vec<C64>,
    pub u: f64,
}

impl ChainState {
    pub fn new(p: Vec<C64>, dp: Vec<C64>, u: f64) -> Self {
        ChainState { p, dp, u }
    }

    /// `(p, u + i<p,p>)`.
    pub fn point(&self, sig: Signature) -> (Vec<C64>, C64) {
        (self.p.clone(), Complex::new(self.u, sig.form(&self.p, &self.p).re))
    }

    /// Tangent `(p', 1 + i(<p',p> + <p,p'>))`.
    pub fn tangent(&self, sig: Signature) -> (Vec<C64>, C64) {
        let s = sig.form(&self.dp, &self.p) + sig.form(&self.p, &self.dp);
        (self.dp.clone(), Complex::new(1.0, 0.0) + I * s)
    }
}

/// `p'' = 2i p' <p',p'> (1 - i<p,p'> - i<p',p>) / (1 + i<p,p'> - i<p',p>)`.
///
/// On a chain `w' = 1 + i(<p',p> + <p,p'>)`, so the numerator factor is
/// `conj(w')`; the denominator vanishes where the chain leaves the chart.
pub fn hyperquadric_chain_rhs(sig: Signature, s: &ChainState) -> Result<Vec<C64>> {
    let pp = sig.form(&s.p, &s.dp);
    let qp = sig.form(&s.dp, &s.p);
    let d = 1.0 + I * pp - I * qp;
    if d.norm() < 1e-12 {
        return Err(Error::Singularity(format!(
            "chain denominator vanishes at u = {}, p = {:?}, p' = {:?}",
            s.u, s.p, s.dp
        )));
    }
    let k = 2.0 * I * sig.form(&s.dp, &s.dp) * (1.0 - I * pp - I * qp) / d;
    Ok(s.dp.iter().map(|x| x * k).collect())
}

/// The variant `2i p' <p',p'> (1 + 3i<p,p'> - i<p',p>) / ((1 + i<p,p'> - i<p',p>)(1 + 2i<p,p'> - 2i<p',p>))`.
/// It agrees with [`hyperquadric_chain_rhs`] at `p = 0` only; its solutions
/// leave the complex line through the initial data.
pub fn printed_chain_rhs(sig: Signature, s: &ChainState) -> Result<Vec<C64>> {
    let pp = sig.form(&s.p, &s.dp);
    let qp = sig.form(&s.dp, &s.p);
    let d1 = 1.0 + I * pp - I * qp;
    let d2 = 1.0 + 2.0 * I * pp - 2.0 * I * qp;
    if d1.norm() < 1e-12 || d2.norm() < 1e-12 {
        return Err(Error::Singularity(format!("denominator vanishes at u = {}", s.u)));
    }
    let k = 2.0 * I * sig.form(&s.dp, &s.dp) * (1.0 + 3.0 * I * pp - I * qp) / (d1 * d2);
    Ok(s.dp.iter().map(|x| x * k).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainPoint {
    pub u: f64,
    pub z: Vec<C64>,
    pub w: C64,
    /// Distance of `z` from the complex line through the initial point
    /// tangent to the chain, measured along `w`.
    pub line_defect: f64,
}

#[derive(Debug)]
pub struct Trajectory {
    pub points: Vec<ChainPoint>,
    /// Set when integration stopped early at a singularity.
    pub failure: Option<Error>,
}

fn axpy(y: &[C64], a: f64, x: &[C64]) -> Vec<C64> {
    y.iter().zip(x).map(|(y, x)| y + x * a).collect()
}

fn rk4_step(sig: Signature, s: &ChainState, h: f64) -> Result<ChainState> {
    let f = |st: &ChainState| hyperquadric_chain_rhs(sig, st).map(|a| (st.dp.clone(), a));
    let (k1p, k1v) = f(s)?;
    let s2 = ChainState::new(axpy(&s.p, h / 2.0, &k1p), axpy(&s.dp, h / 2.0, &k1v), s.u + h / 2.0);
    let (k2p, k2v) = f(&s2)?;
    let s3 = ChainState::new(axpy(&s.p, h / 2.0, &k2p), axpy(&s.dp, h / 2.0, &k2v), s.u + h / 2.0);
    let (k3p, k3v) = f(&s3)?;
    let s4 = ChainState::new(axpy(&s.p, h, &k3p), axpy(&s.dp, h, &k3v), s.u + h);
    let (k4p, k4v) = f(&s4)?;
    let comb = |y: &[C64], a: &[C64], b: &[C64], c: &[C64], d: &[C64]| -> Vec<C64> {
        (0..y.len()).map(|i| y[i] + (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]) * (h / 6.0)).collect()
    };
    Ok(ChainState::new(comb(&s.p, &k1p, &k2p, &k3p, &k4p), comb(&s.dp, &k1v, &k2v, &k3v, &k4v), s.u + h))
}

/// Fixed-step RK4 from `s0` to `u_end` (either direction). Points lie on the
/// hyperquadric by construction.
pub fn integrate_chain(sig: Signature, s0: &ChainState, u_end: f64, h: f64) -> Result<Trajectory> {
    if !(h > 0.0) || s0.p.len() != sig.n || s0.dp.len() != sig.n {
        return Err(Error::Precondition("step must be positive and state must have n components".into()));
    }
    let steps = ((u_end - s0.u).abs() / h).round().max(1.0) as usize;
    let step = (u_end - s0.u) / steps as f64;
    let (z0, w0) = s0.point(sig);
    let (dz, dw) = s0.tangent(sig);
    let defect = |st: &ChainState| -> f64 {
        let (z, w) = st.point(sig);
        let c = (w - w0) / dw;
        z.iter().zip(&z0).zip(&dz).map(|((z, z0), d)| (z - z0 - d * c).norm_sqr()).sum::<f64>().sqrt()
    };
    let emit = |st: &ChainState| {
        let (z, w) = st.point(sig);
        ChainPoint { u: st.u, z, w, line_defect: defect(st) }
    };
    let mut points = vec![emit(s0)];
    let mut s = s0.clone();
    for i in 0..steps {
        match rk4_step(sig, &s, step) {
            Ok(mut next) => {
                next.u = s0.u + (i + 1) as f64 * step;
                s = next;
                points.push(emit(&s));
            }
            Err(e) => return Ok(Trajectory { points, failure: Some(e) }),
        }
    }
    Ok(Trajectory { points, failure: None })
}

/// The chain through 0 with data `(a, rho, r)`:
/// `z = rho^{-1} a u* / D`, `w = rho^{-1} u* / D`, `D = 1 - rho^{-1} u* (-r + i<a,a>)`.
pub fn chain_closed_form(sig: Signature, a: &[C64], rho: f64, r: f64, ustar: f64) -> Result<(Vec<C64>, C64)> {
    if rho == 0.0 {
        return Err(Error::Precondition("rho must be nonzero".into()));
    }
    let d = 1.0 - ustar / rho * (Complex::new(-r, 0.0) + I * sig.form(a, a));
    if d.norm() < 1e-14 {
        return Err(Error::Singularity(format!("pole of the closed-form chain at u* = {ustar}")));
    }
    let w = Complex::new(ustar / rho, 0.0) / d;
    Ok((a.iter().map(|x| x * w).collect(), w))
}

/// `1 - 2i conj(c) <a,a>` for the line `{c (a, 1)}`.
pub fn chain_transversality_det(sig: Signature, a: &[C64], c: C64) -> C64 {
    1.0 - 2.0 * I * c.conj() * sig.form(a, a)
}

/// `z* = z / (1 - i alpha w)`, `w* = atan(alpha w) / alpha` on the principal branch.
pub fn mv_point(z: &[C64], w: C64, alpha: f64) -> Result<(Vec<C64>, C64)> {
    if alpha == 0.0 {
        return Err(Error::Precondition("alpha must be nonzero".into()));
    }
    let x = w * alpha;
    if x.re.abs() < 1e-12 && x.im.abs() >= 0.99 {
        return Err(Error::Precondition(format!("alpha w = {x} is at the branch cut of atan")));
    }
    let d = 1.0 - I * x;
    let at = if x.norm() < 1e-4 {
        let x2 = x * x;
        x * (1.0 - x2 * (1.0 / 3.0 - x2 * (1.0 / 5.0 - x2 / 7.0)))
    } else {
        x.atan()
    };
    Ok((z.iter().map(|z| z / d).collect(), at / alpha))
}

/// The same map as a truncated holomorphic series.
pub fn mv_holmap<S: Real>(sig: Signature, trunc: u32, alpha: &S) -> HolMap<S> {
    let n = sig.n;
    let zero = vec![0u32; n];
    let ia = Complex::new(S::zero(), alpha.clone());
    let mut geo = HolSeries::zero(sig, trunc);
    let mut c = Complex::new(S::one(), S::zero());
    for k in 0..=trunc / 2 {
        geo.add_term(&zero, k, c.clone());
        c = c * ia.clone();
    }
    let f = (0..n).map(|a| HolSeries::var_z(sig, trunc, a).mul(&geo)).collect();
    let mut g = HolSeries::zero(sig, trunc);
    let a2 = alpha.clone() * alpha.clone();
    let mut p = S::one();
    let mut sign = 1;
    for k in 0..=trunc / 4 {
        let coef = p.clone() * S::from_i64(sign) / S::from_i64(2 * k as i64 + 1);
        g.add_term(&zero, 2 * k + 1, Complex::new(coef, S::zero()));
        p = p * a2.clone();
        sign = -sign;
    }
    HolMap { sig, trunc, f, g }
}

/// Defining series of the image of `{v = F}` under [`mv_point`].
pub fn mv_series<S: Real>(f: &Series<S>, alpha: &S) -> Result<Series<S>> {
    if alpha.is_zero() {
        return Err(Error::Precondition("alpha must be nonzero".into()));
    }
    crate::normal::transform_by_holomorphic(f, &mv_holmap(f.sig, f.trunc, alpha))
}

/// `q` with `e^{2 alpha i q} = e^{i lambda} (e^{2 alpha i u} + kappa) / (1 + conj(kappa) e^{2 alpha i u})`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MobiusQ {
    pub alpha: f64,
    pub lambda: f64,
    pub kappa: C64,
    pub sign: i8,
}

/// `e^{i lambda} = (alpha(1+rho) + ir) / (alpha(1+rho) - ir)`,
/// `kappa = (alpha(1-rho) - ir) / (alpha(1+rho) + ir)`.
pub fn solve_q(alpha: f64, rho: f64, r: f64) -> Result<MobiusQ> {
    if alpha == 0.0 || rho == 0.0 {
        return Err(Error::Precondition("alpha and rho must be nonzero".into()));
    }
    let d = Complex::new(alpha * (1.0 + rho), r);
    let kappa = Complex::new(alpha * (1.0 - rho), -r) / d;
    if (kappa.norm() - 1.0).abs() < 1e-14 {
        return Err(Error::Invariant("|kappa| = 1".into()));
    }
    Ok(MobiusQ { alpha, lambda: 2.0 * d.arg(), kappa, sign: if rho > 0.0 { 1 } else { -1 } })
}

impl MobiusQ {
    fn x(&self, u: f64) -> C64 {
        self.kappa * Complex::from_polar(1.0, -2.0 * self.alpha * u)
    }

    /// Continuous branch with `q(0) = 0`; defined for `|kappa| < 1`.
    pub fn q(&self, u: f64) -> Result<f64> {
        if self.kappa.norm() >= 1.0 {
            return Err(Error::Precondition("continuous branch needs |kappa| < 1 (rho > 0)".into()));
        }
        let x = self.x(u);
        Ok(u + ((1.0 + x).arg() - (1.0 + self.kappa).arg()) / self.alpha)
    }

    /// `(q', q'', q''')` at `u`.
    pub fn jets(&self, u: f64) -> (f64, f64, f64) {
        let x = self.x(u);
        let a = self.alpha;
        let d = 1.0 + x;
        let q1 = -1.0 + 2.0 * (1.0 / d).re;
        let q2 = 2.0 * (2.0 * a * I * x / (d * d)).re;
        let q3 = 2.0 * (4.0 * a * a * x * (1.0 - x) / (d * d * d)).re;
        (q1, q2, q3)
    }

    /// `q'''/3q' - (q''/q')^2/2 + (2 alpha^2/3)(q'^2 - 1)`.
    pub fn schwarzian_residual(&self, u: f64) -> f64 {
        let (q1, q2, q3) = self.jets(u);
        schwarzian_lhs(self.alpha, q1, q2, q3)
    }
}

fn schwarzian_lhs(alpha: f64, q1: f64, q2: f64, q3: f64) -> f64 {
    q3 / (3.0 * q1) - 0.5 * (q2 / q1).powi(2) + 2.0 * alpha * alpha / 3.0 * (q1 * q1 - 1.0)
}

/// RK4 for `(q, q', q'')` from `(0, rho, 2 rho r)`; returns `(u, q)` samples.
pub fn integrate_schwarzian(alpha: f64, rho: f64, r: f64, u_end: f64, h: f64) -> Result<Vec<(f64, f64)>> {
    if !(h > 0.0) || rho == 0.0 {
        return Err(Error::Precondition("step must be positive and rho nonzero".into()));
    }
    let rhs = |y: [f64; 3]| -> Result<[f64; 3]> {
        if y[1].abs() < 1e-12 {
            return Err(Error::Singularity("q' vanishes".into()));
        }
        let q3 = 1.5 * y[2] * y[2] / y[1] - 2.0 * alpha * alpha * y[1] * (y[1] * y[1] - 1.0);
        Ok([y[1], y[2], q3])
    };
    let steps = (u_end.abs() / h).round().max(1.0) as usize;
    let dt = u_end / steps as f64;
    let mut y = [0.0, rho, 2.0 * rho * r];
    let mut out = vec![(0.0, 0.0)];
    let add = |y: [f64; 3], k: [f64; 3], c: f64| [y[0] + c * k[0], y[1] + c * k[1], y[2] + c * k[2]];
    for i in 0..steps {
        let k1 = rhs(y)?;
        let k2 = rhs(add(y, k1, dt / 2.0))?;
        let k3 = rhs(add(y, k2, dt / 2.0))?;
        let k4 = rhs(add(y, k3, dt))?;
        for j in 0..3 {
            y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        out.push(((i + 1) as f64 * dt, y[0]));
    }
    Ok(out)
}

/// `(floor((q(u2) - q(u1)) alpha / pi), floor((u2 - u1) alpha / pi))`.
pub fn turn_counts(q: &MobiusQ, u1: f64, u2: f64) -> Result<(i64, i64)> {
    let per = std::f64::consts::PI / q.alpha;
    Ok((((q.q(u2)? - q.q(u1)?) / per).floor() as i64, ((u2 - u1) / per).floor() as i64))
}

/// `A_1`, `A_2` of the general chain equation at `(u, p, p')` for `v = F`,
/// with `F'' = (1/2) d^2F/du^2`. `B` is not
/// available, so the full right-hand side cannot be assembled.
#[cfg(feature = "experimental")]
pub fn chain_matrices(f: &Series<f64>, p: &[C64], dp: &[C64], u: f64) -> (Vec<Vec<C64>>, Vec<Vec<C64>>) {
    let n = f.sig.n;
    let pb: Vec<C64> = p.iter().map(|x| x.conj()).collect();
    let ev = |s: &Series<f64>| s.eval_at(p, &pb, Complex::new(u, 0.0));
    let fz: Vec<C64> = (0..n).map(|a| ev(&f.d_z(a))).collect();
    let fzb: Vec<C64> = (0..n).map(|a| ev(&f.d_zbar(a))).collect();
    let fu = f.d_u();
    let f1 = ev(&fu);
    let f2 = ev(&fu.d_u()) * 0.5;
    let fz1: Vec<C64> = (0..n).map(|a| ev(&fu.d_z(a))).collect();
    let fzb1: Vec<C64> = (0..n).map(|a| ev(&fu.d_zbar(a))).collect();
    let fzzb: Vec<Vec<C64>> = (0..n).map(|g| (0..n).map(|a| ev(&f.d_z(g).d_zbar(a))).collect()).collect();
    let one = Complex::new(1.0, 0.0);
    let ip = one + I * f1;
    let im = one - I * f1;
    let fzp: C64 = (0..n).map(|g| fz[g] * dp[g]).sum();
    let fzbp: C64 = (0..n).map(|g| fzb[g] * dp[g].conj()).sum();
    let common = one - I * ip * fzp + I * im * fzbp + f1 * f1;
    let inner = |a: usize| -> C64 {
        let lin: C64 = (0..n).map(|g| fzzb[g][a] * dp[g]).sum();
        let tail: C64 = (0..n).map(|g| fz1[g] * dp[g] + I * f2 * fz[g] * dp[g] + I * f2 * fzb[g] * dp[g].conj()).sum();
        2.0 * I * lin + 2.0 * f2 * fzb[a] + I * ip * fzb1[a] + 2.0 / ip * fzb[a] * tail
    };
    let mut a1 = vec![vec![Complex::new(0.0, 0.0); n]; n];
    let mut a2 = a1.clone();
    for a in 0..n {
        let ia = inner(a);
        for b in 0..n {
            a1[a][b] =
                (2.0 * I * fzzb[b][a] + 2.0 / ip * (fz1[b] + I * f2 * fz[b]) * fzb[a]) * common - I * ip * fz[b] * ia;
            a2[a][b] = 2.0 * I * f2 / ip * fzb[a] * fzb[b] * common + I * im * fzb[b] * ia;
        }
    }
    (a1, a2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal::{is_normal_form, log_model, NormalFormType};
    use approx::assert_relative_eq;
    use num_rational::BigRational;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        Complex::new(re, im)
    }

    fn sig(n: usize, e: usize) -> Signature {
        Signature::new(n, e).unwrap()
    }

    #[test]
    fn rhs_examples() {
        let s = sig(2, 1);
        let st = ChainState::new(vec![c(0.3, 0.1), c(-0.2, 0.4)], vec![c(0.0, 0.0); 2], 0.0);
        assert!(hyperquadric_chain_rhs(s, &st).unwrap().iter().all(|x| x.norm() == 0.0));
        let a = vec![c(0.5, -0.2), c(0.1, 0.3)];
        let st = ChainState::new(vec![c(0.0, 0.0); 2], a.clone(), 0.0);
        let got = hyperquadric_chain_rhs(s, &st).unwrap();
        let k = 2.0 * I * s.form(&a, &a);
        for (g, x) in got.iter().zip(&a) {
            assert_relative_eq!((g - x * k).norm(), 0.0, epsilon = 1e-15);
        }
        let null = vec![c(1.0, 0.0), c(1.0, 0.0)];
        let st = ChainState::new(vec![c(0.0, 0.0); 2], null, 0.0);
        assert!(hyperquadric_chain_rhs(s, &st).unwrap().iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn closed_form_example() {
        let s = sig(1, 1);
        let (z, w) = chain_closed_form(s, &[c(1.0, 0.0)], 1.0, 0.0, 1.0).unwrap();
        assert_relative_eq!((z[0] - c(0.5, 0.5)).norm(), 0.0, epsilon = 1e-15);
        assert_relative_eq!((w - c(0.5, 0.5)).norm(), 0.0, epsilon = 1e-15);
        let (z, w) = chain_closed_form(s, &[c(0.0, 0.0)], 2.0, 0.5, 1.0).unwrap();
        assert_eq!(z[0], c(0.0, 0.0));
        assert_eq!(w.im, 0.0);
    }

    #[test]
    fn closed_form_lies_on_hyperquadric_and_line() {
        let s = sig(2, 1);
        let a = vec![c(0.4, 0.2), c(-0.3, 0.5)];
        for k in 0..20 {
            let us = -1.0 + 0.1 * k as f64;
            let (z, w) = chain_closed_form(s, &a, 1.5, 0.3, us).unwrap();
            assert!(crate::group::hyperquadric_residue(s, &z, w) < 1e-14);
            for (zi, ai) in z.iter().zip(&a) {
                assert!((zi - ai * w).norm() < 1e-15);
            }
        }
    }

    // u* with Re w(u*) = u for a = 1, rho = 1, r = 0: u*/(1 + u*^2) = u.
    fn ustar(u: f64) -> f64 {
        2.0 * u / (1.0 + (1.0 - 4.0 * u * u).sqrt())
    }

    #[test]
    fn rk4_matches_closed_form() {
        let s = sig(1, 1);
        let s0 = ChainState::new(vec![c(0.0, 0.0)], vec![c(1.0, 0.0)], 0.0);
        let traj = integrate_chain(s, &s0, 0.4, 1e-3).unwrap();
        assert!(traj.failure.is_none());
        let mut err: f64 = 0.0;
        for p in &traj.points {
            let (z, _) = chain_closed_form(s, &[c(1.0, 0.0)], 1.0, 0.0, ustar(p.u)).unwrap();
            err = err.max((z[0] - p.z[0]).norm());
            assert!(crate::group::hyperquadric_residue(s, &p.z, p.w) < 1e-14);
        }
        assert!(err < 1e-8, "sup error {err}");
    }

    #[test]
    fn line_defect_converges_at_fourth_order() {
        let s = sig(2, 1);
        let s0 = ChainState::new(vec![c(0.0, 0.0); 2], vec![c(0.6, 0.2), c(0.1, -0.3)], 0.0);
        let worst = |h: f64| {
            let t = integrate_chain(s, &s0, 1.0, h).unwrap();
            assert!(t.failure.is_none());
            t.points.iter().map(|p| p.line_defect).fold(0.0, f64::max)
        };
        let (e1, e2) = (worst(0.04), worst(0.02));
        assert!(e1 < 1e-5);
        let ratio = e1 / e2;
        assert!((14.0..=18.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn printed_variant_leaves_the_line() {
        let s = sig(1, 1);
        let st = ChainState::new(vec![c(0.0, 0.0)], vec![c(0.7, -0.2)], 0.0);
        let a = hyperquadric_chain_rhs(s, &st).unwrap()[0];
        let b = printed_chain_rhs(s, &st).unwrap()[0];
        assert!((a - b).norm() < 1e-15);
        let st = ChainState::new(vec![c(0.3, 0.2)], vec![c(0.7, -0.2)], 0.1);
        let a = hyperquadric_chain_rhs(s, &st).unwrap()[0];
        let b = printed_chain_rhs(s, &st).unwrap()[0];
        assert!((a - b).norm() > 1e-2);
    }

    #[test]
    fn trivial_chain_is_the_u_axis() {
        let s = sig(1, 1);
        let s0 = ChainState::new(vec![c(0.0, 0.0)], vec![c(0.0, 0.0)], 0.0);
        let t = integrate_chain(s, &s0, 1.0, 0.1).unwrap();
        assert!(t.points.iter().all(|p| p.z[0].norm() == 0.0 && p.w.im == 0.0));
    }

    #[test]
    fn transversality() {
        let s = sig(2, 1);
        assert_eq!(chain_transversality_det(s, &[c(1.0, 0.0), c(1.0, 0.0)], c(0.3, 0.7)), c(1.0, 0.0));
        assert_eq!(chain_transversality_det(s, &[c(1.0, 2.0), c(0.0, 0.0)], c(0.0, 0.0)), c(1.0, 0.0));
        let a = vec![c(0.4, 0.2), c(-0.3, 0.5)];
        for k in 1..30 {
            let (_, w) = chain_closed_form(s, &a, 1.0, 0.2, 0.1 * k as f64).unwrap();
            assert!(chain_transversality_det(s, &a, w).norm() > 1e-6);
        }
    }

    #[test]
    fn mv_point_examples() {
        let (z, w) = mv_point(&[c(0.0, 0.0)], c(0.5, 0.0), 0.7).unwrap();
        assert_eq!(w.im, 0.0);
        assert_eq!(z[0], c(0.0, 0.0));
        let (_, w) = mv_point(&[c(0.1, 0.0)], c(0.3, 0.01), 1e-8).unwrap();
        assert!((w - c(0.3, 0.01)).norm() < 1e-12);
        assert!(mv_point(&[c(0.0, 0.0)], c(0.0, 2.0), 1.0).is_err());
        assert!(mv_point(&[c(0.0, 0.0)], c(0.0, 0.1), 0.0).is_err());
    }

    #[test]
    fn mv_series_of_hyperquadric_is_log_model() {
        type Q = BigRational;
        let s = sig(1, 1);
        let alpha = crate::scalar::rat(1, 4);
        let out = mv_series(&Series::<Q>::hyperquadric(s, 8), &alpha).unwrap();
        assert_eq!(out, log_model(s, 8, &alpha));
        let t = NormalFormType::new(alpha.clone(), Q::from_integer(0.into()));
        assert!(is_normal_form(&out, &t).unwrap().ok);
        let m = crate::series::Monomial::new(&[2], &[2], 0);
        assert_eq!(out.coeff(&m).re, alpha * crate::scalar::rat(2, 1));
    }

    #[test]
    fn mv_series_agrees_with_points() {
        let s = sig(1, 1);
        let alpha = 0.3;
        let img = mv_series(&Series::<f64>::hyperquadric(s, 12), &alpha).unwrap();
        let t = 0.05;
        let z = [c(0.6, 0.2) * t];
        let w = c(0.4 * t * t, z[0].norm_sqr());
        let (zs, ws) = mv_point(&z, w, alpha).unwrap();
        assert!((ws.im - img.eval(&zs, ws.re).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn mobius_examples() {
        let q = solve_q(1.0, 1.0, 0.0).unwrap();
        assert_eq!(q.kappa, c(0.0, 0.0));
        assert_eq!(q.lambda, 0.0);
        assert_relative_eq!(q.q(0.7).unwrap(), 0.7, epsilon = 1e-15);
        let q = solve_q(1.0, 2.0, 0.0).unwrap();
        assert_relative_eq!(q.kappa.re, -1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(q.lambda, 0.0);
        let h = 1e-4;
        let d = (q.q(h).unwrap() - q.q(-h).unwrap()) / (2.0 * h);
        assert!((d - 2.0).abs() < 1e-6);
    }

    #[test]
    fn mobius_jets_and_schwarzian() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let alpha = rng.gen_range(0.2..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let rho = rng.gen_range(0.2..3.0);
            let r = rng.gen_range(-1.0..1.0);
            let q = solve_q(alpha, rho, r).unwrap();
            let (q1, q2, _) = q.jets(0.0);
            assert_relative_eq!(q.q(0.0).unwrap(), 0.0, epsilon = 1e-15);
            assert_relative_eq!(q1, rho, epsilon = 1e-12);
            assert_relative_eq!(q2, 2.0 * rho * r, epsilon = 1e-12);
            let h = 1e-4;
            let fd = (q.q(h).unwrap() - 2.0 * q.q(0.0).unwrap() + q.q(-h).unwrap()) / (h * h);
            assert!((fd - 2.0 * rho * r).abs() < 1e-5 * (1.0 + rho));
            let mut last = f64::NEG_INFINITY;
            for k in 0..200 {
                let u = -3.0 + 0.03 * k as f64;
                assert!(q.schwarzian_residual(u).abs() < 1e-8);
                let v = q.q(u).unwrap();
                assert!(v > last);
                last = v;
            }
        }
    }

    #[test]
    fn turn_counts_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for (alpha, rho, r) in [(1.0, 2.0, 0.0), (0.7, 0.5, 0.3), (-1.3, 1.2, -0.4)] {
            let q = solve_q(alpha, rho, r).unwrap();
            let per = std::f64::consts::PI / alpha;
            let mut checked = 0;
            while checked < 50 {
                let (u1, u2) = (rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0));
                let near = |x: f64| (x - x.round()).abs() < 1e-3;
                if near((u2 - u1) / per) || near((q.q(u2).unwrap() - q.q(u1).unwrap()) / per) {
                    continue;
                }
                let (a, b) = turn_counts(&q, u1, u2).unwrap();
                assert_eq!(a, b * q.sign as i64);
                checked += 1;
            }
        }
    }

    #[test]
    fn schwarzian_rk4_matches_mobius() {
        let q = solve_q(1.0, 2.0, 0.0).unwrap();
        let samples = integrate_schwarzian(1.0, 2.0, 0.0, 1.0, 1e-3).unwrap();
        let err = samples.iter().map(|(u, v)| (v - q.q(*u).unwrap()).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "sup error {err}");
        let id = integrate_schwarzian(1.0, 1.0, 0.0, 1.0, 1e-2).unwrap();
        assert!(id.iter().all(|(u, v)| (u - v).abs() < 1e-14));
        let q = solve_q(0.7, 0.6, 0.4).unwrap();
        let samples = integrate_schwarzian(0.7, 0.6, 0.4, 1.5, 1e-3).unwrap();
        let err = samples.iter().map(|(u, v)| (v - q.q(*u).unwrap()).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "sup error {err}");
    }

    #[cfg(feature = "experimental")]
    #[test]
    fn chain_matrices_on_hyperquadric() {
        let s = sig(2, 1);
        let f = Series::<f64>::hyperquadric(s, 6);
        let p = [c(0.2, 0.1), c(-0.3, 0.2)];
        let dp = [c(0.5, -0.1), c(0.2, 0.4)];
        let (a1, a2) = chain_matrices(&f, &p, &dp, 0.1);
        let common = 1.0 - I * s.form(&dp, &p) + I * s.form(&p, &dp);
        for a in 0..2 {
            for b in 0..2 {
                let (ea, eb) = (s.eps(a) as f64, s.eps(b) as f64);
                let delta = if a == b { ea } else { 0.0 };
                let x1 = 2.0 * I * delta * common + 2.0 * eb * p[b].conj() * ea * dp[a];
                let x2 = -2.0 * eb * p[b] * ea * dp[a];
                assert!((a1[a][b] - x1).norm() < 1e-14);
                assert!((a2[a][b] - x2).norm() < 1e-14);
            }
        }
    }
}
