use std::collections::BTreeMap;

use crate::expr::{EvalError, Expr, FunctionBackend, Tape};

use super::{CoordSystem, JetError, VectorField};

/// Differential k-form: strictly increasing index tuples to coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct DifferentialForm {
    coords: CoordSystem,
    degree: usize,
    comps: BTreeMap<Vec<usize>, Expr>,
}

// sign of the permutation sorting `v`, or None if it has a repeat
fn sort_sign(v: &mut [usize]) -> Option<i64> {
    let mut sign = 1;
    for i in 0..v.len() {
        for j in 0..v.len() - 1 - i {
            if v[j] == v[j + 1] {
                return None;
            }
            if v[j] > v[j + 1] {
                v.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some(sign)
}

impl DifferentialForm {
    pub fn zero(coords: &CoordSystem, degree: usize) -> DifferentialForm {
        DifferentialForm {
            coords: coords.clone(),
            degree,
            comps: BTreeMap::new(),
        }
    }

    pub fn scalar(coords: &CoordSystem, f: Expr) -> DifferentialForm {
        let mut w = DifferentialForm::zero(coords, 0);
        w.add_to(vec![], f);
        w
    }

    /// The basis one-form d(coordinate i).
    pub fn basis(coords: &CoordSystem, i: usize) -> DifferentialForm {
        let mut w = DifferentialForm::zero(coords, 1);
        w.add_to(vec![i], Expr::one());
        w
    }

    /// One-form from dense coefficients.
    pub fn one_form(coords: &CoordSystem, coeffs: &[Expr]) -> DifferentialForm {
        let mut w = DifferentialForm::zero(coords, 1);
        for (i, c) in coeffs.iter().enumerate() {
            w.add_to(vec![i], c.clone());
        }
        w
    }

    /// `dx0 ^ dx1 ^ ... ^ dx_{n-1}`.
    pub fn volume(coords: &CoordSystem) -> DifferentialForm {
        let mut w = DifferentialForm::zero(coords, coords.dim());
        w.add_to((0..coords.dim()).collect(), Expr::one());
        w
    }

    pub fn coords(&self) -> &CoordSystem {
        &self.coords
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn coeff(&self, key: &[usize]) -> Expr {
        self.comps.get(key).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn components(&self) -> impl Iterator<Item = (&Vec<usize>, &Expr)> {
        self.comps.iter()
    }

    /// All coefficients in lexicographic key order over every increasing
    /// tuple of the right degree (zeros included).
    pub fn dense(&self) -> Vec<Expr> {
        combinations(self.coords.dim(), self.degree)
            .into_iter()
            .map(|k| self.coeff(&k))
            .collect()
    }

    /// Scalar value of a 0-form.
    pub fn as_scalar(&self) -> Expr {
        self.coeff(&[])
    }

    fn add_to(&mut self, key: Vec<usize>, e: Expr) {
        if e.is_zero() {
            return;
        }
        let v = match self.comps.remove(&key) {
            Some(c) => c + e,
            None => e,
        };
        if !v.is_zero() {
            self.comps.insert(key, v);
        }
    }

    pub fn scale(&self, f: &Expr) -> DifferentialForm {
        let mut w = DifferentialForm::zero(&self.coords, self.degree);
        for (k, c) in &self.comps {
            w.add_to(k.clone(), c * f);
        }
        w
    }

    pub fn add(&self, other: &DifferentialForm) -> Result<DifferentialForm, JetError> {
        if self.degree != other.degree || self.coords != other.coords {
            return Err(JetError::Mismatch);
        }
        let mut w = self.clone();
        for (k, c) in &other.comps {
            w.add_to(k.clone(), c.clone());
        }
        Ok(w)
    }

    pub fn sub(&self, other: &DifferentialForm) -> Result<DifferentialForm, JetError> {
        self.add(&other.scale(&Expr::int(-1)))
    }

    pub fn wedge(&self, other: &DifferentialForm) -> Result<DifferentialForm, JetError> {
        if self.coords != other.coords {
            return Err(JetError::Mismatch);
        }
        let deg = self.degree + other.degree;
        if deg > self.coords.dim() {
            return Err(JetError::DegreeOverflow(deg));
        }
        let mut w = DifferentialForm::zero(&self.coords, deg);
        for (ka, a) in &self.comps {
            for (kb, b) in &other.comps {
                let mut key: Vec<usize> = ka.iter().chain(kb.iter()).copied().collect();
                if let Some(sign) = sort_sign(&mut key) {
                    w.add_to(key, Expr::int(sign) * a * b);
                }
            }
        }
        Ok(w)
    }

    /// Interior product X _| w.
    pub fn interior(&self, x: &VectorField) -> Result<DifferentialForm, JetError> {
        if self.degree == 0 {
            return Err(JetError::DegreeZero);
        }
        if x.coords() != &self.coords {
            return Err(JetError::Mismatch);
        }
        let mut w = DifferentialForm::zero(&self.coords, self.degree - 1);
        for (k, a) in &self.comps {
            for (pos, idx) in k.iter().enumerate() {
                let xc = x.coeff(*idx);
                if xc.is_zero() {
                    continue;
                }
                let sign = if pos % 2 == 0 { 1 } else { -1 };
                let mut rest = k.clone();
                rest.remove(pos);
                w.add_to(rest, Expr::int(sign) * xc * a);
            }
        }
        Ok(w)
    }

    /// Pairing of a one-form with a field, as an expression.
    pub fn pair(&self, x: &VectorField) -> Result<Expr, JetError> {
        if self.degree != 1 {
            return Err(JetError::Coordinates("pairing needs a one-form".into()));
        }
        Ok(self.interior(x)?.as_scalar())
    }

    pub fn exterior_derivative(&self) -> Result<DifferentialForm, JetError> {
        let n = self.coords.dim();
        if self.degree >= n {
            return Err(JetError::DegreeOverflow(self.degree + 1));
        }
        let mut w = DifferentialForm::zero(&self.coords, self.degree + 1);
        for (k, a) in &self.comps {
            for c in 0..n {
                if k.contains(&c) {
                    continue;
                }
                let d = a.diff(self.coords.name(c));
                if d.is_zero() {
                    continue;
                }
                let mut key = vec![c];
                key.extend(k.iter().copied());
                let sign = sort_sign(&mut key).expect("distinct indices");
                w.add_to(key, Expr::int(sign) * d);
            }
        }
        Ok(w)
    }

    /// Differential of a function as a one-form.
    pub fn d(coords: &CoordSystem, f: &Expr) -> DifferentialForm {
        let mut w = DifferentialForm::zero(coords, 1);
        for i in 0..coords.dim() {
            w.add_to(vec![i], f.diff(coords.name(i)));
        }
        w
    }

    /// Compile all coefficients (dense order) for numeric evaluation.
    pub fn compile(&self, backend: &FunctionBackend) -> Result<Tape, EvalError> {
        Tape::compile(&self.dense(), self.coords.names(), backend)
    }
}

impl std::fmt::Display for DifferentialForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.comps.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .comps
            .iter()
            .map(|(k, c)| {
                if k.is_empty() {
                    format!("{c}")
                } else {
                    let basis: Vec<String> = k.iter().map(|i| format!("d{}", self.coords.name(*i))).collect();
                    format!("({c})*{}", basis.join("^"))
                }
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

/// Increasing k-tuples of 0..n in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;
    use crate::jet::associated_field;

    fn c() -> CoordSystem {
        CoordSystem::jet("x", "u", 2)
    }

    #[test]
    fn wedge_basics() {
        let c = c();
        let dx = DifferentialForm::basis(&c, 0);
        let du = DifferentialForm::basis(&c, 1);
        let w = dx.wedge(&du).unwrap();
        assert_eq!(w.coeff(&[0, 1]), Expr::one());
        assert!(dx.wedge(&dx).unwrap().is_zero());
        assert_eq!(du.wedge(&dx).unwrap().coeff(&[0, 1]), Expr::int(-1));
        let vol = (0..4)
            .map(|i| DifferentialForm::basis(&c, i))
            .reduce(|a, b| a.wedge(&b).unwrap())
            .unwrap();
        assert_eq!(vol, DifferentialForm::volume(&c));
        assert!(matches!(vol.wedge(&dx), Err(JetError::DegreeOverflow(5))));
    }

    #[test]
    fn interior_contraction() {
        let c = c();
        let phi = parse_expr("3*u2^2/(2*u1) + u*u1^3", &c.scope()).unwrap();
        let a = associated_field(&phi, &c).unwrap();
        let w = DifferentialForm::basis(&c, 0).wedge(&DifferentialForm::basis(&c, 1)).unwrap();
        let r = w.interior(&a).unwrap();
        let expect = DifferentialForm::basis(&c, 1).sub(&DifferentialForm::basis(&c, 0).scale(&Expr::var("u1"))).unwrap();
        assert_eq!(r, expect);
        let vol = DifferentialForm::volume(&c);
        assert!(vol.interior(&a).unwrap().interior(&a).unwrap().is_zero());
        assert!(matches!(DifferentialForm::scalar(&c, Expr::one()).interior(&a), Err(JetError::DegreeZero)));
    }

    #[test]
    fn exterior_derivative_rules() {
        let c = c();
        let s = c.scope();
        assert!(DifferentialForm::scalar(&c, Expr::int(3)).exterior_derivative().unwrap().is_zero());
        let f = parse_expr("x*u1^2", &s).unwrap();
        let df = DifferentialForm::scalar(&c, f.clone()).exterior_derivative().unwrap();
        assert_eq!(df, DifferentialForm::d(&c, &f));
        assert!(df.exterior_derivative().unwrap().is_zero());
        // d(u1 dx) = du1 ^ dx
        let w = DifferentialForm::basis(&c, 0).scale(&Expr::var("u1"));
        let dw = w.exterior_derivative().unwrap();
        assert_eq!(dw.coeff(&[0, 2]), Expr::int(-1));
    }

    #[test]
    fn combination_count() {
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(4, 0), vec![Vec::<usize>::new()]);
    }
}
