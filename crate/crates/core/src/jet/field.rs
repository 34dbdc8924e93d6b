use std::collections::BTreeMap;

use crate::expr::{EquivReport, Expr, Probe};

use super::{CoordSystem, JetError};

/// Vector field with symbolic coefficients. Absent entries are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    coords: CoordSystem,
    comps: BTreeMap<usize, Expr>,
}

impl VectorField {
    pub fn zero(coords: &CoordSystem) -> VectorField {
        VectorField {
            coords: coords.clone(),
            comps: BTreeMap::new(),
        }
    }

    /// Build from `(coordinate name, coefficient)` pairs.
    pub fn from_named(coords: &CoordSystem, comps: &[(&str, Expr)]) -> Result<VectorField, JetError> {
        let mut v = VectorField::zero(coords);
        for (name, e) in comps {
            let i = coords
                .index(name)
                .ok_or_else(|| JetError::ForeignVariable(name.to_string()))?;
            coords.covers(e)?;
            v.set(i, e.clone());
        }
        Ok(v)
    }

    /// Basis field d/d(coordinate i).
    pub fn basis(coords: &CoordSystem, i: usize) -> VectorField {
        let mut v = VectorField::zero(coords);
        v.set(i, Expr::one());
        v
    }

    pub fn coords(&self) -> &CoordSystem {
        &self.coords
    }

    pub fn set(&mut self, i: usize, e: Expr) {
        if e.is_zero() {
            self.comps.remove(&i);
        } else {
            self.comps.insert(i, e);
        }
    }

    pub fn coeff(&self, i: usize) -> Expr {
        self.comps.get(&i).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn coeff_of(&self, name: &str) -> Expr {
        self.coords.index(name).map(|i| self.coeff(i)).unwrap_or_else(Expr::zero)
    }

    pub fn components(&self) -> impl Iterator<Item = (usize, &Expr)> {
        self.comps.iter().map(|(i, e)| (*i, e))
    }

    /// Dense coefficient list in coordinate order.
    pub fn dense(&self) -> Vec<Expr> {
        (0..self.coords.dim()).map(|i| self.coeff(i)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    /// Directional derivative X(f).
    pub fn apply(&self, f: &Expr) -> Expr {
        Expr::add_all(
            self.comps
                .iter()
                .map(|(i, c)| c * f.diff(self.coords.name(*i)))
                .filter(|t| !t.is_zero()),
        )
    }

    pub fn scale(&self, f: &Expr) -> VectorField {
        let mut v = VectorField::zero(&self.coords);
        for (i, c) in &self.comps {
            v.set(*i, c * f);
        }
        v
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        let mut v = self.clone();
        for (i, c) in &other.comps {
            v.set(*i, v.coeff(*i) + c);
        }
        v
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        self.add(&other.scale(&Expr::int(-1)))
    }

    /// Re-express on a larger coordinate system sharing names.
    pub fn embed(&self, target: &CoordSystem) -> Result<VectorField, JetError> {
        let mut v = VectorField::zero(target);
        for (i, c) in &self.comps {
            let name = self.coords.name(*i);
            let j = target
                .index(name)
                .ok_or_else(|| JetError::ForeignVariable(name.to_string()))?;
            v.set(j, c.clone());
        }
        Ok(v)
    }

    /// Keep only the components on the first `dim` coordinates of `target`.
    pub fn restrict(&self, target: &CoordSystem) -> VectorField {
        let mut v = VectorField::zero(target);
        for (i, c) in &self.comps {
            if let Some(j) = target.index(self.coords.name(*i)) {
                v.set(j, c.clone());
            }
        }
        v
    }

    /// Componentwise numeric comparison with another field.
    pub fn equiv(&self, other: &VectorField, probe: &Probe, tol: f64) -> Result<EquivReport, crate::expr::SampleError> {
        probe.equiv(&self.dense(), &other.dense(), tol)
    }
}

impl std::fmt::Display for VectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.comps.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .comps
            .iter()
            .map(|(i, c)| format!("({c})*d_{}", self.coords.name(*i)))
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

/// `d/dx + u1 d/du + ... + phi d/du_{n-1}` on the given jet space.
pub fn associated_field(phi: &Expr, coords: &CoordSystem) -> Result<VectorField, JetError> {
    coords.covers(phi)?;
    let n = coords.dim();
    let mut a = VectorField::zero(coords);
    a.set(0, Expr::one());
    for i in 1..n - 1 {
        a.set(i, coords.var(i + 1));
    }
    a.set(n - 1, phi.clone());
    Ok(a)
}

/// Prolongation of a point field on `(x, u)` to the jet space `target`.
pub fn prolong(v: &VectorField, target: &CoordSystem) -> Result<VectorField, JetError> {
    let base = target.truncate(0);
    for (i, c) in v.components() {
        let name = v.coords().name(i);
        if base.index(name).is_none() {
            return Err(JetError::NotPointField(name.to_string()));
        }
        base.covers(c).map_err(|_| JetError::NotPointField(c.to_string()))?;
    }
    let xi = v.coeff_of(target.name(0));
    let mut eta = v.coeff_of(target.name(1));
    let dxi = target.total_derivative(&xi, None)?;
    let mut out = VectorField::zero(target);
    out.set(0, xi);
    out.set(1, eta.clone());
    for j in 1..=target.order() {
        eta = target.total_derivative(&eta, None)? - target.var(1 + j) * &dxi;
        out.set(1 + j, eta.clone());
    }
    Ok(out)
}

/// First-order lambda-prolongation of `xi d/dy + eta d/dw` on `(y, w, w1)`.
pub fn lambda_prolong(v: &VectorField, lambda: &Expr, target: &CoordSystem) -> Result<VectorField, JetError> {
    if target.order() != 1 {
        return Err(JetError::Coordinates("lambda-prolongation needs a first-order jet space".into()));
    }
    target.covers(lambda)?;
    let xi = v.coeff_of(target.name(0));
    let eta = v.coeff_of(target.name(1));
    let w1 = target.var(2);
    let d_eta = target.total_derivative(&eta, None)? + lambda * &eta;
    let d_xi = target.total_derivative(&xi, None)? + lambda * &xi;
    let mut out = VectorField::zero(target);
    out.set(0, xi);
    out.set(1, eta);
    out.set(2, d_eta - d_xi * w1);
    Ok(out)
}

pub fn lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField, JetError> {
    if x.coords() != y.coords() {
        return Err(JetError::Mismatch);
    }
    let c = x.coords();
    let mut out = VectorField::zero(c);
    for i in 0..c.dim() {
        let e = x.apply(&y.coeff(i)) - y.apply(&x.coeff(i));
        out.set(i, e);
    }
    Ok(out)
}

/// `Q = eta - xi * u1` for a field on a jet space of order at least one.
pub fn characteristic(v: &VectorField) -> Expr {
    let c = v.coords();
    v.coeff(1) - v.coeff(0) * c.var(2)
}

/// Checks `[v^(n-1), A] = -A(xi) A` componentwise.
pub fn is_point_symmetry(v: &VectorField, a: &VectorField, probe: &Probe, tol: f64) -> Result<EquivReport, JetError> {
    let pv = prolong(v, a.coords())?;
    let lhs = lie_bracket(&pv, a)?;
    let rhs = a.scale(&-a.apply(&pv.coeff(0)));
    Ok(lhs.equiv(&rhs, probe, tol)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr, Domain, FunctionBackend};

    fn jet2() -> CoordSystem {
        CoordSystem::jet("x", "u", 2)
    }

    fn pf(c: &CoordSystem, xi: &str, eta: &str) -> VectorField {
        let s = c.scope();
        VectorField::from_named(c, &[("x", parse_expr(xi, &s).unwrap()), ("u", parse_expr(eta, &s).unwrap())]).unwrap()
    }

    fn probe() -> Probe {
        let d = Domain::new(&[("x", 0.5, 2.0), ("u", -1.0, 1.0), ("u1", 0.5, 1.5), ("u2", -0.5, 0.5)]);
        Probe::new(d, 100, 3, FunctionBackend::new())
    }

    #[test]
    fn prolongations() {
        let c = jet2();
        let s = c.scope();
        assert_eq!(prolong(&pf(&c, "1", "0"), &c).unwrap(), pf(&c, "1", "0"));
        let p = prolong(&pf(&c, "x", "0"), &c).unwrap();
        assert_eq!(p.coeff(2), parse_expr("-u1", &s).unwrap());
        assert_eq!(p.coeff(3), parse_expr("-2*u2", &s).unwrap());
        let p = prolong(&pf(&c, "x^2", "2*x*u"), &c).unwrap();
        assert_eq!(p.coeff(2), parse_expr("2*u", &s).unwrap());
        assert_eq!(p.coeff(3), parse_expr("2*u1 - 2*x*u2", &s).unwrap());
    }

    #[test]
    fn brackets_of_generators() {
        let c = jet2();
        let b = lie_bracket(&pf(&c, "1", "0"), &pf(&c, "x", "0")).unwrap();
        assert_eq!(b, pf(&c, "1", "0"));
        let v = pf(&c, "x^2", "2*x*u");
        assert!(lie_bracket(&v, &v).unwrap().is_zero());
        let b = lie_bracket(&pf(&c, "x", "u"), &v).unwrap();
        assert_eq!(b, v);
    }

    #[test]
    fn lambda_prolongation() {
        let r = CoordSystem::jet("y", "w", 1);
        let s = r.scope();
        let dw = VectorField::basis(&r, 1);
        let lam = parse_expr("-w + w1/w", &s).unwrap();
        let x1 = lambda_prolong(&dw, &lam, &r).unwrap();
        assert_eq!(x1.coeff(2), lam);
        let v = VectorField::from_named(&r, &[("y", parse_expr("y*w", &s).unwrap()), ("w", parse_expr("w^2", &s).unwrap())]).unwrap();
        let a = lambda_prolong(&v, &Expr::zero(), &r).unwrap();
        assert_eq!(a, prolong(&v, &r).unwrap());
    }

    #[test]
    fn characteristics() {
        let r = CoordSystem::jet("y", "w", 1);
        let s = r.scope();
        let v = VectorField::from_named(&r, &[("w", parse_expr("-w", &s).unwrap())]).unwrap();
        assert_eq!(characteristic(&v), parse_expr("-w", &s).unwrap());
        assert_eq!(characteristic(&VectorField::basis(&r, 0)), parse_expr("-w1", &s).unwrap());
    }

    #[test]
    fn symmetry_condition() {
        let c = jet2();
        let s = c.scope();
        let phi = parse_expr("3*u2^2/(2*u1) + u*u1^3", &s).unwrap();
        let a = associated_field(&phi, &c).unwrap();
        assert!(is_point_symmetry(&pf(&c, "x", "0"), &a, &probe(), 1e-10).unwrap().pass);
        assert!(!is_point_symmetry(&pf(&c, "0", "1"), &a, &probe(), 1e-10).unwrap().pass);
    }

    #[test]
    fn free_particle_field() {
        let c = CoordSystem::jet("x", "u", 0);
        let a = associated_field(&Expr::zero(), &c).unwrap();
        assert_eq!(a, VectorField::basis(&c, 0));
    }
}
