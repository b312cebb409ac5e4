//! Monomial substitutions on Kähler variables.
//!
//! A [`KahlerMap`] sends each source variable to `sign * q^column * prod_u
//! u^t` where the units `u = 1 + sign * q_k` are the binomial factors showing
//! up in the equal-rank mutation case. Maps compose as long as every unit's
//! base variable stays a pure variable under the outer map, which holds along
//! the whole mutation chain checked here.

use num_traits::Zero;
use serde_json::{json, Value};

use crate::rat::{binom_rat, rat, rat_pow, Rat};
use crate::series::{DegreeBox, LaurentSeries, SeriesError, Unit};

/// Image of one source variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarImage {
    pub sign: i8,
    /// Integer exponents over the target variables.
    pub exps: Vec<i64>,
    /// Integer exponents over the map's unit list.
    pub unit_exps: Vec<i64>,
}

/// A monomial substitution with sign and binomial units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KahlerMap {
    /// Variable names; source and target variable lists coincide.
    pub vars: Vec<String>,
    pub images: Vec<VarImage>,
    pub units: Vec<Unit>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KahlerError {
    #[error("map is not invertible over the rationals")]
    NotInvertible,
    #[error("unit base q_{0} does not stay a pure variable under composition")]
    UnitNotComposable(usize),
    #[error("dimension mismatch in composition")]
    Dimension,
}

impl KahlerMap {
    pub fn identity(vars: Vec<String>) -> Self {
        let n = vars.len();
        let images = (0..n)
            .map(|j| VarImage {
                sign: 1,
                exps: (0..n).map(|i| i64::from(i == j)).collect(),
                unit_exps: Vec::new(),
            })
            .collect();
        KahlerMap { vars, images, units: Vec::new() }
    }

    pub fn dims(&self) -> usize {
        self.vars.len()
    }

    /// Build a unit-free map from exponent columns: `q'_j = q^{cols[j]}`.
    pub fn monomial(vars: Vec<String>, cols: Vec<Vec<i64>>) -> Self {
        let images = cols
            .into_iter()
            .map(|exps| VarImage { sign: 1, exps, unit_exps: Vec::new() })
            .collect();
        KahlerMap { vars, images, units: Vec::new() }
    }

    /// Drop units with all-zero exponent columns and sort the unit list; two
    /// maps are compared after normalization.
    pub fn normalized(&self) -> KahlerMap {
        let used: Vec<usize> = (0..self.units.len())
            .filter(|&u| self.images.iter().any(|im| im.unit_exps.get(u).copied().unwrap_or(0) != 0))
            .collect();
        let mut units: Vec<(Unit, usize)> = used.iter().map(|&u| (self.units[u], u)).collect();
        units.sort();
        let images = self
            .images
            .iter()
            .map(|im| VarImage {
                sign: im.sign,
                exps: im.exps.clone(),
                unit_exps: units
                    .iter()
                    .map(|(_, old)| im.unit_exps.get(*old).copied().unwrap_or(0))
                    .collect(),
            })
            .collect();
        KahlerMap { vars: self.vars.clone(), images, units: units.into_iter().map(|(u, _)| u).collect() }
    }

    pub fn is_identity(&self) -> bool {
        *self == KahlerMap::identity(self.vars.clone()).normalized() || {
            let n = self.normalized();
            n == KahlerMap::identity(self.vars.clone())
        }
    }

    /// `self` after `inner`: first apply `inner` (new vars -> mid vars), then
    /// `self` (mid vars -> base vars).
    pub fn compose_after(&self, inner: &KahlerMap) -> Result<KahlerMap, KahlerError> {
        if self.dims() != inner.dims() {
            return Err(KahlerError::Dimension);
        }
        let n = self.dims();
        // translate inner's units through self: their base must stay pure
        let mut units = self.units.clone();
        let mut inner_unit_cols = Vec::new();
        for u in &inner.units {
            let im = &self.images[u.var];
            let pure_var = im.sign == 1
                && im.unit_exps.iter().all(|&t| t == 0)
                && im.exps.iter().filter(|&&e| e != 0).count() == 1
                && im.exps.iter().any(|&e| e == 1);
            if !pure_var {
                return Err(KahlerError::UnitNotComposable(u.var));
            }
            let base = im.exps.iter().position(|&e| e == 1).unwrap();
            let tu = Unit { var: base, sign: u.sign };
            let idx = units.iter().position(|x| *x == tu).unwrap_or_else(|| {
                units.push(tu);
                units.len() - 1
            });
            inner_unit_cols.push(idx);
        }
        let mut images = Vec::with_capacity(n);
        for j in 0..n {
            let src = &inner.images[j];
            let mut sign = src.sign;
            let mut exps = vec![0i64; n];
            let mut unit_exps = vec![0i64; units.len()];
            for i in 0..n {
                let a = src.exps[i];
                if a == 0 {
                    continue;
                }
                let mid = &self.images[i];
                if mid.sign < 0 && a % 2 != 0 {
                    sign = -sign;
                }
                for t in 0..n {
                    exps[t] += a * mid.exps[t];
                }
                for (u, &te) in mid.unit_exps.iter().enumerate() {
                    unit_exps[u] += a * te;
                }
            }
            for (u, &t) in src.unit_exps.iter().enumerate() {
                unit_exps[inner_unit_cols[u]] += t;
            }
            images.push(VarImage { sign, exps, unit_exps });
        }
        Ok(KahlerMap { vars: self.vars.clone(), images, units }.normalized())
    }

    /// Exponent matrix `A` with `A[i][j]` the exponent of target variable `i`
    /// in the image of source variable `j`.
    pub fn exponent_matrix(&self) -> Vec<Vec<i64>> {
        let n = self.dims();
        let mut a = vec![vec![0i64; n]; n];
        for (j, im) in self.images.iter().enumerate() {
            for i in 0..n {
                a[i][j] = im.exps[i];
            }
        }
        a
    }

    /// Rational inverse of the exponent matrix; `Err` if singular. All
    /// catalogued maps are unimodular so the inverse is integral.
    pub fn inverse_matrix(&self) -> Result<Vec<Vec<Rat>>, KahlerError> {
        let n = self.dims();
        let a = self.exponent_matrix();
        let mut m: Vec<Vec<Rat>> = (0..n)
            .map(|i| {
                (0..2 * n)
                    .map(|j| {
                        if j < n {
                            rat(a[i][j])
                        } else {
                            rat(i64::from(j - n == i))
                        }
                    })
                    .collect()
            })
            .collect();
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| !m[r][col].is_zero())
                .ok_or(KahlerError::NotInvertible)?;
            m.swap(col, pivot);
            let p = m[col][col].clone();
            for j in 0..2 * n {
                m[col][j] = &m[col][j] / &p;
            }
            for r in 0..n {
                if r != col && !m[r][col].is_zero() {
                    let f = m[r][col].clone();
                    for j in 0..2 * n {
                        let v = &m[col][j] * &f;
                        m[r][j] = &m[r][j] - v;
                    }
                }
            }
        }
        Ok(m.into_iter().map(|row| row[n..].to_vec()).collect())
    }

    /// The target box with unit coordinates extended downward by one box
    /// width: binomial units only raise exponents, so base points this far
    /// below the box are provisioned for and anything simultaneously deeper
    /// and relevant is caught by the substitution guard and the
    /// boundary-slack audit.
    pub fn extended_target(&self, target: &DegreeBox) -> DegreeBox {
        let mut t = target.clone();
        for u in &self.units {
            let width = target.hi[u.var] - target.lo[u.var];
            t = t.extend_lo(u.var, width);
        }
        t
    }

    /// Per-variable source intervals needed so that `A . f` can reach every
    /// exponent of [`KahlerMap::extended_target`]. Completeness beyond this
    /// static bound is certified by the boundary-slack audit.
    pub fn source_box(&self, target: &DegreeBox) -> Result<DegreeBox, KahlerError> {
        let t = self.extended_target(target);
        let inv = self.inverse_matrix()?;
        let n = self.dims();
        let mut lo = vec![0i64; n];
        let mut hi = vec![0i64; n];
        for j in 0..n {
            let (mut l, mut h) = (Rat::zero(), Rat::zero());
            for i in 0..n {
                let c = &inv[j][i];
                let (a, b) = (rat(t.lo[i]) * c, rat(t.hi[i]) * c);
                if a <= b {
                    l += a;
                    h += b;
                } else {
                    l += b;
                    h += a;
                }
            }
            lo[j] = l.floor().to_integer().try_into().map_err(|_| KahlerError::NotInvertible)?;
            hi[j] = h.ceil().to_integer().try_into().map_err(|_| KahlerError::NotInvertible)?;
        }
        Ok(DegreeBox::new(lo, hi))
    }

    /// Substitute the map into a series: each monomial `q^f` maps to
    /// `sign(f) * q^{A f} * prod_u u^{<t,f>}` with units expanded to the
    /// target box. The source series must have been computed on at least
    /// [`KahlerMap::source_box`] of the target, otherwise the result could be
    /// silently incomplete and `InsufficientBox` is reported instead.
    pub fn substitute(
        &self,
        series: &LaurentSeries,
        target: &DegreeBox,
    ) -> Result<LaurentSeries, SeriesError> {
        let required = self
            .source_box(target)
            .map_err(|e| SeriesError::InsufficientBox(e.to_string()))?;
        if !series.bx.covers(&required) {
            return Err(SeriesError::InsufficientBox(format!(
                "source box {:?} does not cover required {:?}",
                series.bx, required
            )));
        }
        let n = self.dims();
        let a = self.exponent_matrix();
        let ext = self.extended_target(target);
        let mut out = LaurentSeries::zero(series.vars.clone(), target.clone());
        for (f, c) in &series.terms {
            let mut e0 = vec![0i64; n];
            let mut sign = 1i8;
            for j in 0..n {
                for i in 0..n {
                    e0[i] += a[i][j] * f[j];
                }
                if self.images[j].sign < 0 && f[j] % 2 != 0 {
                    sign = -sign;
                }
            }
            // a nonzero term whose base point falls below the provisioned
            // window in a unit coordinate could still lift into the box;
            // refuse rather than silently dropping it
            for u in &self.units {
                if e0[u.var] < ext.lo[u.var] {
                    return Err(SeriesError::InsufficientBox(format!(
                        "term at {:?} maps below the provisioned unit window in coordinate {}",
                        f, u.var
                    )));
                }
            }
            let unit_pows: Vec<i64> = (0..self.units.len())
                .map(|u| {
                    (0..n)
                        .map(|j| self.images[j].unit_exps.get(u).copied().unwrap_or(0) * f[j])
                        .sum()
                })
                .collect();
            let base = if sign < 0 { -c.clone() } else { c.clone() };
            expand_units_into(&mut out, &self.units, &unit_pows, 0, e0, base, target);
        }
        Ok(out)
    }

    /// Human-readable form of each image, for logs and golden comparisons.
    pub fn image_strings(&self) -> Vec<String> {
        self.images
            .iter()
            .map(|im| {
                let mut s = String::new();
                if im.sign < 0 {
                    s.push('-');
                }
                let mut empty = true;
                for (i, &e) in im.exps.iter().enumerate() {
                    if e != 0 {
                        if !empty {
                            s.push('*');
                        }
                        empty = false;
                        if e == 1 {
                            s.push_str(&self.vars[i]);
                        } else {
                            s.push_str(&format!("{}^{}", self.vars[i], e));
                        }
                    }
                }
                for (u, &t) in im.unit_exps.iter().enumerate() {
                    if t != 0 {
                        if !empty {
                            s.push('*');
                        }
                        empty = false;
                        let unit = &self.units[u];
                        let op = if unit.sign >= 0 { '+' } else { '-' };
                        if t == 1 {
                            s.push_str(&format!("(1{}{})", op, self.vars[unit.var]));
                        } else {
                            s.push_str(&format!("(1{}{})^{}", op, self.vars[unit.var], t));
                        }
                    }
                }
                if empty {
                    s.push('1');
                }
                s
            })
            .collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "vars": self.vars,
            "units": self.units.iter().map(|u| json!({"var": self.vars[u.var], "sign": u.sign})).collect::<Vec<_>>(),
            "images": self
                .images
                .iter()
                .zip(self.image_strings())
                .map(|(im, s)| json!({"sign": im.sign, "exps": im.exps, "unit_exps": im.unit_exps, "display": s}))
                .collect::<Vec<_>>(),
        })
    }
}

fn expand_units_into(
    out: &mut LaurentSeries,
    units: &[Unit],
    pows: &[i64],
    idx: usize,
    e: Vec<i64>,
    coeff: Rat,
    target: &DegreeBox,
) {
    if coeff.is_zero() {
        return;
    }
    if idx == units.len() {
        // skip contributions that can never re-enter the box: units only
        // raise exponents, so anything above hi in a unit coordinate, or
        // outside the box in a plain coordinate, is dead here
        if target.contains(&e) {
            out.add_term(e, coeff);
        }
        return;
    }
    let u = units[idx];
    let p = pows[idx];
    if p == 0 {
        expand_units_into(out, units, pows, idx + 1, e, coeff, target);
        return;
    }
    if e[u.var] > target.hi[u.var] {
        return;
    }
    let max_i = target.hi[u.var] - e[u.var];
    let max_i = if p > 0 { max_i.min(p) } else { max_i };
    let pr = rat(p);
    for i in 0..=max_i {
        let c = &coeff * binom_rat(&pr, i as u64) * rat_pow(&u.sign_rat(), i);
        let mut e2 = e.clone();
        e2[u.var] += i;
        expand_units_into(out, units, pows, idx + 1, e2, c, target);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn qvars(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("q{}", i)).collect()
    }

    #[test]
    fn substitute_inversion() {
        // q^-2 under q -> q^-1 becomes q^2
        let bx = DegreeBox::radius(1, 3);
        let s = LaurentSeries::monomial(qvars(1), bx.clone(), vec![-2], Rat::one());
        let m = KahlerMap::monomial(qvars(1), vec![vec![-1]]);
        let t = m.substitute(&s, &bx).unwrap();
        assert_eq!(t.coeff(&[2]), Rat::one());
        assert_eq!(t.coeff(&[-2]), Rat::zero());
    }

    #[test]
    fn substitute_with_unit() {
        // q1 under q1 -> (1+q3) q1 becomes q1 + q1 q3
        let bx = DegreeBox::radius(3, 2);
        let mut m = KahlerMap::identity(qvars(3));
        m.units.push(Unit { var: 2, sign: 1 });
        for im in m.images.iter_mut() {
            im.unit_exps = vec![0];
        }
        m.images[0].unit_exps[0] = 1;
        let src_box = m.source_box(&bx).unwrap();
        let s = LaurentSeries::monomial(qvars(3), src_box, vec![1, 0, 0], Rat::one());
        let t = m.substitute(&s, &bx).unwrap();
        assert_eq!(t.coeff(&[1, 0, 0]), Rat::one());
        assert_eq!(t.coeff(&[1, 0, 1]), Rat::one());
        assert_eq!(t.coeff(&[1, 0, 2]), Rat::zero());
    }

    #[test]
    fn insufficient_box_reported() {
        let bx = DegreeBox::radius(1, 3);
        let small = DegreeBox::radius(1, 1);
        let s = LaurentSeries::monomial(qvars(1), small, vec![1], Rat::one());
        let m = KahlerMap::monomial(qvars(1), vec![vec![-1]]);
        assert!(matches!(m.substitute(&s, &bx), Err(SeriesError::InsufficientBox(_))));
    }

    #[test]
    fn compose_cancels_units() {
        // m1: q1 -> (1+q3)q1, q3 -> q3; m2: q1 -> q1*(1+q3)^-1
        let vars = qvars(3);
        let mut m1 = KahlerMap::identity(vars.clone());
        m1.units.push(Unit { var: 2, sign: 1 });
        for im in m1.images.iter_mut() {
            im.unit_exps = vec![0];
        }
        m1.images[0].unit_exps[0] = 1;
        let mut m2 = KahlerMap::identity(vars.clone());
        m2.units.push(Unit { var: 2, sign: 1 });
        for im in m2.images.iter_mut() {
            im.unit_exps = vec![0];
        }
        m2.images[0].unit_exps[0] = -1;
        let c = m1.compose_after(&m2).unwrap();
        assert!(c.is_identity());
    }

    #[test]
    fn source_box_for_plain_inverse() {
        let m = KahlerMap::monomial(qvars(2), vec![vec![-1, 0], vec![1, 1]]);
        // e1 = -f1 + f2, e2 = f2 => f2 = e2, f1 = e2 - e1
        let bx = DegreeBox::radius(2, 2);
        let src = m.source_box(&bx).unwrap();
        assert_eq!(src, DegreeBox::new(vec![-4, -2], vec![4, 2]));
    }
}
