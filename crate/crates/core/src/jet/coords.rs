use std::sync::Arc;

use crate::expr::{Expr, Scope, Symbol};

use super::JetError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Independent,
    Dependent,
    Derivative(usize),
}

#[derive(Debug, PartialEq, Eq)]
struct Inner {
    names: Vec<Symbol>,
    roles: Vec<Role>,
}

/// Ordered jet coordinates `(x, u, u1, ..., un)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoordSystem(Arc<Inner>);

impl CoordSystem {
    /// Jet space of the given order with derivative names `dep1, dep2, ...`.
    pub fn jet(indep: &str, dep: &str, order: usize) -> CoordSystem {
        let mut names: Vec<Symbol> = vec![indep.into(), dep.into()];
        let mut roles = vec![Role::Independent, Role::Dependent];
        for k in 1..=order {
            names.push(format!("{dep}{k}").into());
            roles.push(Role::Derivative(k));
        }
        CoordSystem(Arc::new(Inner { names, roles }))
    }

    /// Explicit names; the first is independent, the second dependent and the
    /// rest successive derivatives.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<CoordSystem, JetError> {
        if names.len() < 2 {
            return Err(JetError::Coordinates("need at least an independent and a dependent coordinate".into()));
        }
        let syms: Vec<Symbol> = names.iter().map(|s| Symbol::from(s.as_ref())).collect();
        for (i, a) in syms.iter().enumerate() {
            if syms[..i].contains(a) {
                return Err(JetError::Coordinates(format!("duplicate coordinate `{a}`")));
            }
        }
        let roles = (0..syms.len())
            .map(|i| match i {
                0 => Role::Independent,
                1 => Role::Dependent,
                k => Role::Derivative(k - 1),
            })
            .collect();
        Ok(CoordSystem(Arc::new(Inner { names: syms, roles })))
    }

    pub fn dim(&self) -> usize {
        self.0.names.len()
    }

    /// Highest derivative order present.
    pub fn order(&self) -> usize {
        self.dim() - 2
    }

    pub fn names(&self) -> &[Symbol] {
        &self.0.names
    }

    pub fn name(&self, i: usize) -> &Symbol {
        &self.0.names[i]
    }

    pub fn role(&self, i: usize) -> Role {
        self.0.roles[i]
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.0.names.iter().position(|n| &**n == name)
    }

    pub fn var(&self, i: usize) -> Expr {
        Expr::var_sym(&self.0.names[i])
    }

    /// Index of the k-th derivative of the dependent variable (k = 0 is the
    /// dependent variable itself).
    pub fn deriv_index(&self, k: usize) -> usize {
        1 + k
    }

    pub fn scope(&self) -> Scope {
        Scope::new(&self.0.names)
    }

    /// Lower-order jet space with the same names.
    pub fn truncate(&self, order: usize) -> CoordSystem {
        CoordSystem(Arc::new(Inner {
            names: self.0.names[..order + 2].to_vec(),
            roles: self.0.roles[..order + 2].to_vec(),
        }))
    }

    /// True if every free variable of `e` is a coordinate.
    pub fn covers(&self, e: &Expr) -> Result<(), JetError> {
        for v in e.free_vars() {
            if self.index(&v).is_none() {
                return Err(JetError::ForeignVariable(v.to_string()));
            }
        }
        Ok(())
    }

    /// Total derivative D = d/dx + sum u_{k+1} d/du_k. When `e` depends on
    /// the top coordinate the closure expression substitutes its successor.
    pub fn total_derivative(&self, e: &Expr, closure: Option<&Expr>) -> Result<Expr, JetError> {
        let n = self.dim();
        let mut terms = vec![e.diff(self.name(0))];
        for i in 1..n {
            let d = e.diff(self.name(i));
            if d.is_zero() {
                continue;
            }
            let next = if i + 1 < n {
                self.var(i + 1)
            } else {
                match closure {
                    Some(c) => c.clone(),
                    None => return Err(JetError::NoClosure(self.name(i).to_string())),
                }
            };
            terms.push(d * next);
        }
        Ok(Expr::add_all(terms))
    }
}
