//! Truncated multivariate Laurent series over exact rationals.
//!
//! A [`LaurentSeries`] stores finitely many terms `c * q^e` with integer
//! exponent vectors `e` confined to an explicit per-variable comparison box.
//! Absent exponents inside the box mean coefficient zero; arithmetic never
//! reports coefficients outside the box. Completeness inside a box is the
//! caller's responsibility and is audited by recomputing with enlarged
//! enumeration domains and diffing (see the checker module).
//!
//! The scalar primitive [`sfr`] is the shifted-factorial ratio
//! `prod_{l<=a}(x+l) / prod_{l<=0}(x+l)` that every node, arrow, and
//! Lefschetz factor of the I-functions reduces to at `u = 1`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::rat::{binom_rat, rat, rat_from_string, rat_pow, rat_to_string, Rat};

/// Errors produced by series arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SeriesError {
    /// The evaluation point is non-generic for this term: a factor in
    /// denominator position vanished. Callers re-randomize or treat this as a
    /// configuration error.
    #[error("pole: denominator factor vanished ({0})")]
    Pole(String),
    /// Binary operation on series with different variable lists or boxes.
    #[error("box/variable mismatch: {0}")]
    BoxMismatch(String),
    /// A substitution would need source terms outside the box the source
    /// series was computed on. Never silently truncated.
    #[error("insufficient box: {0}")]
    InsufficientBox(String),
    #[error("malformed series data: {0}")]
    Parse(String),
}

/// Shifted factorial ratio `prod_{l<=a}(x+l) / prod_{l<=0}(x+l)`.
///
/// For `a > 0` this is `(x+1)(x+2)...(x+a)`; for `a = 0` it is `1`; for
/// `a < 0` it is `1/((x+a+1)...(x-1)(x))`. A vanishing factor in the
/// reciprocal case is a pole, not a zero.
pub fn sfr(x: &Rat, a: i64) -> Result<Rat, SeriesError> {
    let mut p = Rat::one();
    if a >= 0 {
        for l in 1..=a {
            p *= x + rat(l);
        }
        Ok(p)
    } else {
        for l in (a + 1)..=0 {
            p *= x + rat(l);
        }
        if p.is_zero() {
            return Err(SeriesError::Pole(format!("sfr({}, {})", x, a)));
        }
        Ok(p.recip())
    }
}

/// Per-variable inclusive exponent intervals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeBox {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl DegreeBox {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        assert!(lo.iter().zip(&hi).all(|(l, h)| l <= h), "empty box interval");
        DegreeBox { lo, hi }
    }

    /// The symmetric box `[-r, r]^n`.
    pub fn radius(n: usize, r: i64) -> Self {
        DegreeBox::new(vec![-r; n], vec![r; n])
    }

    pub fn dims(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, e: &[i64]) -> bool {
        e.len() == self.dims()
            && e.iter()
                .enumerate()
                .all(|(i, &v)| self.lo[i] <= v && v <= self.hi[i])
    }

    /// Whether `self` contains `other` as a sub-box.
    pub fn covers(&self, other: &DegreeBox) -> bool {
        self.dims() == other.dims()
            && (0..self.dims()).all(|i| self.lo[i] <= other.lo[i] && self.hi[i] >= other.hi[i])
    }

    /// Extend the lower end of coordinate `k` downward by `amount >= 0`.
    pub fn extend_lo(&self, k: usize, amount: i64) -> Self {
        let mut b = self.clone();
        b.lo[k] -= amount;
        b
    }

    /// Widen every coordinate by `amount` on both ends.
    pub fn widen(&self, amount: i64) -> Self {
        DegreeBox::new(
            self.lo.iter().map(|l| l - amount).collect(),
            self.hi.iter().map(|h| h + amount).collect(),
        )
    }

    pub fn interval(&self, k: usize) -> (i64, i64) {
        (self.lo[k], self.hi[k])
    }
}

/// Finitely supported map from exponent vectors to exact rationals, within a
/// comparison box.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentSeries {
    pub vars: Vec<String>,
    pub bx: DegreeBox,
    pub terms: BTreeMap<Vec<i64>, Rat>,
}

impl LaurentSeries {
    pub fn zero(vars: Vec<String>, bx: DegreeBox) -> Self {
        assert_eq!(vars.len(), bx.dims());
        LaurentSeries { vars, bx, terms: BTreeMap::new() }
    }

    pub fn one(vars: Vec<String>, bx: DegreeBox) -> Self {
        let mut s = LaurentSeries::zero(vars, bx);
        s.add_term(vec![0; s.bx.dims()], Rat::one());
        s
    }

    pub fn monomial(vars: Vec<String>, bx: DegreeBox, e: Vec<i64>, c: Rat) -> Self {
        let mut s = LaurentSeries::zero(vars, bx);
        s.add_term(e, c);
        s
    }

    /// Accumulate `c * q^e`, silently dropping exponents outside the box
    /// (they are not part of the series' domain).
    pub fn add_term(&mut self, e: Vec<i64>, c: Rat) {
        if c.is_zero() || !self.bx.contains(&e) {
            return;
        }
        let entry = self.terms.entry(e).or_insert_with(Rat::zero);
        *entry += c;
        if entry.is_zero() {
            // keep the support minimal so boundary audits see true support
            let key = self
                .terms
                .iter()
                .find(|(_, v)| v.is_zero())
                .map(|(k, _)| k.clone());
            if let Some(k) = key {
                self.terms.remove(&k);
            }
        }
    }

    pub fn coeff(&self, e: &[i64]) -> Rat {
        self.terms.get(e).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn check_compatible(&self, other: &LaurentSeries) -> Result<(), SeriesError> {
        if self.vars != other.vars || self.bx != other.bx {
            return Err(SeriesError::BoxMismatch(format!(
                "({:?}, {:?}) vs ({:?}, {:?})",
                self.vars, self.bx, other.vars, other.bx
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &LaurentSeries) -> Result<LaurentSeries, SeriesError> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    /// Truncated convolution: the coefficient of `v` is the sum of
    /// `a[v1] * b[v2]` over in-box splits `v1 + v2 = v` of in-box summands.
    pub fn mul(&self, other: &LaurentSeries) -> Result<LaurentSeries, SeriesError> {
        self.check_compatible(other)?;
        let mut out = LaurentSeries::zero(self.vars.clone(), self.bx.clone());
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<i64> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                if out.bx.contains(&e) {
                    out.add_term(e, ca * cb);
                }
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Rat) -> LaurentSeries {
        let mut out = LaurentSeries::zero(self.vars.clone(), self.bx.clone());
        for (e, v) in &self.terms {
            out.add_term(e.clone(), v * c);
        }
        out
    }

    /// Restrict to a sub-box (used to compare inside the advertised box after
    /// computing on a wider working box).
    pub fn restrict(&self, bx: &DegreeBox) -> LaurentSeries {
        let mut out = LaurentSeries::zero(self.vars.clone(), bx.clone());
        for (e, v) in &self.terms {
            if bx.contains(e) {
                out.add_term(e.clone(), v.clone());
            }
        }
        out
    }

    /// First mismatching exponent (lexicographic) between `self` and `other`
    /// inside `window`, with both coefficients. `None` means equal.
    pub fn first_mismatch(
        &self,
        other: &LaurentSeries,
        window: &DegreeBox,
    ) -> Option<(Vec<i64>, Rat, Rat)> {
        let mut keys: Vec<&Vec<i64>> = self
            .terms
            .keys()
            .chain(other.terms.keys())
            .filter(|e| window.contains(e))
            .collect();
        keys.sort();
        keys.dedup();
        for e in keys {
            let a = self.coeff(e);
            let b = other.coeff(e);
            if a != b {
                return Some((e.clone(), a, b));
            }
        }
        None
    }

    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|(e, c)| json!({"e": e, "c": rat_to_string(c)}))
            .collect();
        let bx: Vec<Value> = self
            .bx
            .lo
            .iter()
            .zip(&self.bx.hi)
            .map(|(l, h)| json!([l, h]))
            .collect();
        json!({"vars": self.vars, "box": bx, "terms": terms})
    }

    pub fn from_json(v: &Value) -> Result<LaurentSeries, SeriesError> {
        let err = |m: &str| SeriesError::Parse(m.to_string());
        let vars: Vec<String> = v["vars"]
            .as_array()
            .ok_or_else(|| err("vars"))?
            .iter()
            .map(|s| s.as_str().unwrap_or_default().to_string())
            .collect();
        let bx_arr = v["box"].as_array().ok_or_else(|| err("box"))?;
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for pair in bx_arr {
            let p = pair.as_array().ok_or_else(|| err("box entry"))?;
            lo.push(p[0].as_i64().ok_or_else(|| err("box lo"))?);
            hi.push(p[1].as_i64().ok_or_else(|| err("box hi"))?);
        }
        let mut s = LaurentSeries::zero(vars, DegreeBox::new(lo, hi));
        for t in v["terms"].as_array().ok_or_else(|| err("terms"))? {
            let e: Vec<i64> = t["e"]
                .as_array()
                .ok_or_else(|| err("term e"))?
                .iter()
                .map(|x| x.as_i64().unwrap_or(0))
                .collect();
            let c = rat_from_string(t["c"].as_str().ok_or_else(|| err("term c"))?)
                .ok_or_else(|| err("term coefficient"))?;
            s.add_term(e, c);
        }
        Ok(s)
    }
}

impl fmt::Display for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({})", rat_to_string(c))?;
            for (i, &p) in e.iter().enumerate() {
                if p != 0 {
                    write!(f, "*{}^{}", self.vars[i], p)?;
                }
            }
        }
        Ok(())
    }
}

/// A binomial unit `1 + sign * q_var` with `sign = (-1)^N` for some integer N.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Unit {
    pub var: usize,
    pub sign: i8,
}

impl Unit {
    pub fn sign_rat(&self) -> Rat {
        rat(self.sign as i64)
    }
}

/// Exponent of a prefactor unit: a rational constant plus a rational
/// combination of equivariant parameters, evaluated before expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineForm {
    pub constant: Rat,
    /// `(parameter index, coefficient)` pairs.
    pub coeffs: Vec<(usize, Rat)>,
}

impl AffineForm {
    pub fn constant(c: Rat) -> Self {
        AffineForm { constant: c, coeffs: Vec::new() }
    }

    pub fn add_param(&mut self, idx: usize, c: Rat) {
        self.coeffs.push((idx, c));
    }

    pub fn eval(&self, params: &[Rat]) -> Rat {
        let mut v = self.constant.clone();
        for (i, c) in &self.coeffs {
            v += c * &params[*i];
        }
        v
    }
}

/// Formal product of exponential factors `exp(c * q_k)` and binomial units
/// raised to affine-form exponents.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Prefactor {
    pub exp_terms: Vec<(Rat, usize)>,
    pub unit_terms: Vec<(Unit, AffineForm)>,
}

impl Prefactor {
    pub fn trivial() -> Self {
        Prefactor::default()
    }

    pub fn is_trivial(&self) -> bool {
        self.exp_terms.is_empty() && self.unit_terms.is_empty()
    }

    pub fn exp(c: Rat, var: usize) -> Self {
        Prefactor { exp_terms: vec![(c, var)], unit_terms: Vec::new() }
    }

    pub fn unit_power(unit: Unit, e: AffineForm) -> Self {
        Prefactor { exp_terms: Vec::new(), unit_terms: vec![(unit, e)] }
    }
}

/// Expand a prefactor into a truncated series at an evaluated parameter
/// point: `exp(c q) = sum c^k q^k / k!` and
/// `(1+s q)^E = sum C(E,k) s^k q^k`.
pub fn expand_prefactor(
    p: &Prefactor,
    params: &[Rat],
    vars: &[String],
    bx: &DegreeBox,
) -> Result<LaurentSeries, SeriesError> {
    let mut out = LaurentSeries::one(vars.to_vec(), bx.clone());
    for (c, k) in &p.exp_terms {
        let mut factor = LaurentSeries::zero(vars.to_vec(), bx.clone());
        let mut coeff = Rat::one();
        let hi = bx.hi[*k];
        for i in 0..=hi.max(0) {
            let mut e = vec![0; bx.dims()];
            e[*k] = i;
            factor.add_term(e, coeff.clone());
            coeff = &coeff * c / rat(i + 1);
        }
        out = out.mul(&factor)?;
    }
    for (unit, ef) in &p.unit_terms {
        let e_val = ef.eval(params);
        let mut factor = LaurentSeries::zero(vars.to_vec(), bx.clone());
        let hi = bx.hi[unit.var];
        for i in 0..=hi.max(0) {
            let mut e = vec![0; bx.dims()];
            e[unit.var] = i;
            let c = binom_rat(&e_val, i as u64) * rat_pow(&unit.sign_rat(), i);
            factor.add_term(e, c);
        }
        out = out.mul(&factor)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat_frac;

    fn qvars(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("q{}", i)).collect()
    }

    #[test]
    fn sfr_base_cases() {
        let x = rat_frac(3, 7);
        assert_eq!(sfr(&x, 0).unwrap(), rat(1));
        assert_eq!(sfr(&x, 2).unwrap(), (&x + rat(1)) * (&x + rat(2)));
        assert_eq!(sfr(&x, -2).unwrap(), (&x * (&x - rat(1))).recip());
    }

    #[test]
    fn sfr_zero_and_pole() {
        // numerator-position zero is an exact 0
        assert_eq!(sfr(&rat(-1), 2).unwrap(), rat(0));
        // denominator-position zero is a pole
        assert!(matches!(sfr(&rat(0), -2), Err(SeriesError::Pole(_))));
        assert!(matches!(sfr(&rat(1), -2), Err(SeriesError::Pole(_))));
    }

    #[test]
    fn mul_identity_and_laurent() {
        let bx = DegreeBox::radius(1, 3);
        let one = LaurentSeries::one(qvars(1), bx.clone());
        let q = LaurentSeries::monomial(qvars(1), bx.clone(), vec![1], rat(1));
        let qinv = LaurentSeries::monomial(qvars(1), bx.clone(), vec![-1], rat(1));
        assert_eq!(one.mul(&q).unwrap(), q);
        assert_eq!(q.mul(&qinv).unwrap(), one);
    }

    #[test]
    fn mul_difference_of_squares() {
        let bx = DegreeBox::radius(1, 3);
        let mut a = LaurentSeries::one(qvars(1), bx.clone());
        a.add_term(vec![1], rat(1)); // 1 + q
        let mut b = LaurentSeries::one(qvars(1), bx.clone());
        b.add_term(vec![1], rat(-1)); // 1 - q
        let p = a.mul(&b).unwrap();
        let mut expect = LaurentSeries::one(qvars(1), bx);
        expect.add_term(vec![2], rat(-1));
        assert_eq!(p, expect);
    }

    #[test]
    fn box_mismatch_is_error() {
        let a = LaurentSeries::one(qvars(1), DegreeBox::radius(1, 2));
        let b = LaurentSeries::one(qvars(1), DegreeBox::radius(1, 3));
        assert!(matches!(a.mul(&b), Err(SeriesError::BoxMismatch(_))));
    }

    #[test]
    fn expand_exp_prefactor() {
        let bx = DegreeBox::radius(1, 4);
        let c = rat_frac(2, 3);
        let p = Prefactor::exp(c.clone(), 0);
        let s = expand_prefactor(&p, &[], &qvars(1), &bx).unwrap();
        assert_eq!(s.coeff(&[0]), rat(1));
        assert_eq!(s.coeff(&[2]), &c * &c / rat(2));
    }

    #[test]
    fn expand_unit_prefactor() {
        let bx = DegreeBox::radius(1, 4);
        // (1+q)^E with E a free affine form over one parameter
        let mut e = AffineForm::constant(rat(0));
        e.add_param(0, rat(1));
        let p = Prefactor::unit_power(Unit { var: 0, sign: 1 }, e);
        let ev = rat_frac(5, 2);
        let s = expand_prefactor(&p, &[ev.clone()], &qvars(1), &bx).unwrap();
        assert_eq!(s.coeff(&[2]), &ev * (&ev - rat(1)) / rat(2));
    }

    #[test]
    fn expand_geometric_unit() {
        // (1 + (-1)^1 q)^(-1) = sum q^k with all signs positive
        let bx = DegreeBox::radius(1, 5);
        let p = Prefactor::unit_power(Unit { var: 0, sign: -1 }, AffineForm::constant(rat(-1)));
        let s = expand_prefactor(&p, &[], &qvars(1), &bx).unwrap();
        for k in 0..=5 {
            assert_eq!(s.coeff(&[k]), rat(1));
        }
    }

    #[test]
    fn exp_times_exp_inverse_is_one() {
        let bx = DegreeBox::radius(1, 6);
        let c = rat_frac(7, 5);
        let a = expand_prefactor(&Prefactor::exp(c.clone(), 0), &[], &qvars(1), &bx).unwrap();
        let b = expand_prefactor(&Prefactor::exp(-c, 0), &[], &qvars(1), &bx).unwrap();
        assert_eq!(a.mul(&b).unwrap(), LaurentSeries::one(qvars(1), bx));
    }

    #[test]
    fn series_json_round_trip() {
        let bx = DegreeBox::new(vec![-2, 0], vec![2, 3]);
        let mut s = LaurentSeries::one(qvars(2), bx);
        s.add_term(vec![-1, 2], rat_frac(3, 4));
        let v = s.to_json();
        let back = LaurentSeries::from_json(&v).unwrap();
        assert_eq!(s, back);
    }
}
