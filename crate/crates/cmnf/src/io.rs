//! JSON file formats for series, holomorphic maps, group elements and
//! normalization results. Coefficients are `"p/q"` strings in exact mode and
//! decimal strings in float mode.

use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::group::GroupElement;
use crate::normal::{NormalFormReport, NormalizationResult};
use crate::scalar::{Cx, Mode, Real};
use crate::series::{HolMap, HolSeries, Monomial, Series, Signature};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub zi: Vec<u32>,
    pub zj: Vec<u32>,
    pub u: u32,
    pub re: String,
    pub im: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesJson {
    pub n: usize,
    pub e: usize,
    pub trunc_weight: u32,
    pub mode: Mode,
    pub terms: Vec<TermJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolTermJson {
    pub zi: Vec<u32>,
    pub w: u32,
    pub re: String,
    pub im: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolMapJson {
    pub n: usize,
    pub e: usize,
    pub trunc_weight: u32,
    pub mode: Mode,
    pub f: Vec<Vec<HolTermJson>>,
    pub g: Vec<HolTermJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupJson {
    pub n: usize,
    pub e: usize,
    /// Row-major `n*n` entries as `[re, im]`.
    #[serde(rename = "U")]
    pub u: Vec<[String; 2]>,
    pub a: Vec<[String; 2]>,
    pub rho: String,
    pub r: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormalizationJson {
    pub sigma: GroupJson,
    pub map: HolMapJson,
    pub output: SeriesJson,
    pub residuals: Vec<(u32, f64)>,
    pub report: NormalFormReport,
    pub warnings: Vec<String>,
}

fn cx_pair<S: Real>(c: &Cx<S>) -> [String; 2] {
    [c.re.to_text(), c.im.to_text()]
}

fn parse_cx<S: Real>(re: &str, im: &str) -> Result<Cx<S>> {
    Ok(Complex::new(S::from_text(re)?, S::from_text(im)?))
}

fn check_mode<S: Real>(mode: Mode) -> Result<()> {
    if mode != S::MODE {
        return Err(Error::Parse(format!("file mode {mode} does not match requested mode {}", S::MODE)));
    }
    Ok(())
}

pub fn series_to_json<S: Real>(f: &Series<S>) -> SeriesJson {
    SeriesJson {
        n: f.sig.n,
        e: f.sig.e,
        trunc_weight: f.trunc,
        mode: S::MODE,
        terms: f
            .terms()
            .map(|(m, c)| {
                let [re, im] = cx_pair(c);
                TermJson { zi: m.zi(), zj: m.zj(), u: m.l(), re, im }
            })
            .collect(),
    }
}

/// Builds the series without checking reality.
pub fn series_from_json_raw<S: Real>(j: &SeriesJson) -> Result<Series<S>> {
    check_mode::<S>(j.mode)?;
    let sig = Signature::new(j.n, j.e)?;
    let mut f = Series::zero(sig, j.trunc_weight);
    for t in &j.terms {
        if t.zi.len() != j.n || t.zj.len() != j.n {
            return Err(Error::Parse(format!("term exponents must have length {}", j.n)));
        }
        let m = Monomial::new(&t.zi, &t.zj, t.u);
        if m.weight() > j.trunc_weight {
            return Err(Error::Parse(format!("term {m:?} above trunc_weight {}", j.trunc_weight)));
        }
        f.add_term(m, parse_cx(&t.re, &t.im)?);
    }
    Ok(f)
}

/// Loads a defining series and validates the reality condition.
pub fn series_from_json<S: Real>(j: &SeriesJson) -> Result<Series<S>> {
    let f = series_from_json_raw::<S>(j)?;
    let tol = match S::MODE {
        Mode::Exact => 0.0,
        Mode::Float => 1e-12 * (1.0 + f.max_abs()),
    };
    f.check_real(tol)?;
    Ok(f)
}

fn hol_terms<S: Real>(h: &HolSeries<S>) -> Vec<HolTermJson> {
    h.0.terms()
        .map(|(m, c)| {
            let [re, im] = cx_pair(c);
            HolTermJson { zi: m.zi(), w: m.l(), re, im }
        })
        .collect()
}

fn hol_from_terms<S: Real>(sig: Signature, trunc: u32, ts: &[HolTermJson]) -> Result<HolSeries<S>> {
    let mut h = HolSeries::zero(sig, trunc);
    for t in ts {
        if t.zi.len() != sig.n {
            return Err(Error::Parse(format!("term exponents must have length {}", sig.n)));
        }
        h.add_term(&t.zi, t.w, parse_cx(&t.re, &t.im)?);
    }
    Ok(h)
}

pub fn holmap_to_json<S: Real>(m: &HolMap<S>) -> HolMapJson {
    HolMapJson {
        n: m.sig.n,
        e: m.sig.e,
        trunc_weight: m.trunc,
        mode: S::MODE,
        f: m.f.iter().map(hol_terms).collect(),
        g: hol_terms(&m.g),
    }
}

pub fn holmap_from_json<S: Real>(j: &HolMapJson) -> Result<HolMap<S>> {
    check_mode::<S>(j.mode)?;
    let sig = Signature::new(j.n, j.e)?;
    if j.f.len() != j.n {
        return Err(Error::Parse(format!("map needs {} f-components", j.n)));
    }
    let f = j.f.iter().map(|ts| hol_from_terms(sig, j.trunc_weight, ts)).collect::<Result<Vec<_>>>()?;
    let g = hol_from_terms(sig, j.trunc_weight, &j.g)?;
    Ok(HolMap { sig, trunc: j.trunc_weight, f, g })
}

pub fn group_to_json<S: Real>(g: &GroupElement<S>) -> GroupJson {
    GroupJson {
        n: g.sig.n,
        e: g.sig.e,
        u: g.u.iter().flat_map(|row| row.iter().map(cx_pair)).collect(),
        a: g.a.iter().map(cx_pair).collect(),
        rho: g.rho.to_text(),
        r: g.r.to_text(),
    }
}

/// Loads a group element; `U` must preserve the form exactly (exact mode)
/// or to 1e-12 (float mode).
pub fn group_from_json<S: Real>(j: &GroupJson) -> Result<GroupElement<S>> {
    let sig = Signature::new(j.n, j.e)?;
    if j.u.len() != j.n * j.n || j.a.len() != j.n {
        return Err(Error::Parse(format!("U needs {} entries and a needs {}", j.n * j.n, j.n)));
    }
    let mut u = Vec::with_capacity(j.n);
    for row in j.u.chunks(j.n) {
        u.push(row.iter().map(|[re, im]| parse_cx(re, im)).collect::<Result<Vec<_>>>()?);
    }
    let a = j.a.iter().map(|[re, im]| parse_cx(re, im)).collect::<Result<Vec<_>>>()?;
    GroupElement::new(sig, u, a, S::from_text(&j.rho)?, S::from_text(&j.r)?)
}

pub fn normalization_to_json<S: Real>(r: &NormalizationResult<S>) -> NormalizationJson {
    NormalizationJson {
        sigma: group_to_json(&r.sigma),
        map: holmap_to_json(&r.map),
        output: series_to_json(&r.output),
        residuals: r.residuals.clone(),
        report: r.report.clone(),
        warnings: r.warnings.clone(),
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
