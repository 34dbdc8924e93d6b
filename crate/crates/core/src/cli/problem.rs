//! Problem files: line-oriented `[section]` blocks of `key = value` entries.
//!
//! Values are expressions in the expression grammar or plain numbers. A line
//! that starts with whitespace continues the previous value. `#` starts a
//! comment line. See the README for the list of sections and keys.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Arc;

use crate::expr::{parse_expr, Assignment, Domain, Expr, FunctionBackend, Probe, Scope, SpecialFn, Symbol};
use crate::jet::{CoordSystem, DifferentialForm, VectorField};
use crate::numint::{FundamentalPair, LinearOdeSpec};
use crate::sl2::{ReductionInput, Sl2Error, Sl2Problem, Tolerances};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}, column {col}: {msg}")]
pub struct ProblemError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

fn err<T>(line: usize, col: usize, msg: impl Into<String>) -> Result<T, ProblemError> {
    Err(ProblemError {
        line,
        col,
        msg: msg.into(),
    })
}

#[derive(Clone, Debug)]
struct Entry {
    key: String,
    value: String,
    line: usize,
    col: usize,
}

#[derive(Clone, Debug)]
struct Section {
    name: String,
    arg: Option<String>,
    line: usize,
    entries: Vec<Entry>,
}

impl Section {
    fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    fn need(&self, key: &str) -> Result<&Entry, ProblemError> {
        self.get(key)
            .ok_or_else(|| ProblemError {
                line: self.line,
                col: 1,
                msg: format!("[{}] is missing `{key}`", self.name),
            })
    }

    fn check_keys(&self, allowed: impl Fn(&str) -> bool) -> Result<(), ProblemError> {
        for e in &self.entries {
            if !allowed(&e.key) {
                return err(e.line, 1, format!("unknown key `{}` in [{}]", e.key, self.name));
            }
        }
        Ok(())
    }
}

fn split_sections(text: &str) -> Result<Vec<Section>, ProblemError> {
    let mut out: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if raw.starts_with(char::is_whitespace) {
            let Some(e) = out.last_mut().and_then(|s| s.entries.last_mut()) else {
                return err(line, 1, "continuation line without a preceding entry");
            };
            e.value.push(' ');
            e.value.push_str(trimmed);
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('[') {
            let Some(inner) = rest.strip_suffix(']') else {
                return err(line, raw.len(), "expected `]`");
            };
            let mut parts = inner.split_whitespace();
            let name = parts.next().unwrap_or("").to_string();
            let arg = parts.next().map(str::to_string);
            if name.is_empty() || parts.next().is_some() {
                return err(line, 2, "section header is `[name]` or `[name argument]`");
            }
            out.push(Section {
                name,
                arg,
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let Some(eq) = raw.find('=') else {
            return err(line, 1, "expected `key = value`");
        };
        let Some(sec) = out.last_mut() else {
            return err(line, 1, "entry before any section header");
        };
        let key = raw[..eq].trim().to_string();
        if key.is_empty() {
            return err(line, 1, "empty key");
        }
        let vstart = eq + 1 + (raw[eq + 1..].len() - raw[eq + 1..].trim_start().len());
        let entry = Entry {
            key,
            value: raw[eq + 1..].trim().to_string(),
            line,
            col: vstart + 1,
        };
        if entry.key != "exclude" && sec.get(&entry.key).is_some() {
            return err(line, 1, format!("duplicate key `{}`", entry.key));
        }
        sec.entries.push(entry);
    }
    Ok(out)
}

fn expr(e: &Entry, scope: &Scope) -> Result<Expr, ProblemError> {
    parse_expr(&e.value, scope).map_err(|pe| ProblemError {
        line: e.line,
        col: e.col + pe.pos(),
        msg: pe.to_string(),
    })
}

fn number_str(s: &str, line: usize, col: usize) -> Result<f64, ProblemError> {
    if let Ok(v) = s.trim().parse::<f64>() {
        return Ok(v);
    }
    let e = parse_expr(s, &Scope::new::<&str>(&[])).map_err(|pe| ProblemError {
        line,
        col: col + pe.pos(),
        msg: pe.to_string(),
    })?;
    match e.eval_plain(&Assignment::new()) {
        Ok(v) if v.is_finite() => Ok(v),
        _ => err(line, col, format!("`{s}` is not a finite number")),
    }
}

fn number(e: &Entry) -> Result<f64, ProblemError> {
    number_str(&e.value, e.line, e.col)
}

fn numbers(e: &Entry, n: usize) -> Result<Vec<f64>, ProblemError> {
    let parts: Vec<&str> = e.value.split(',').collect();
    if parts.len() != n {
        return err(e.line, e.col, format!("expected {n} comma-separated numbers"));
    }
    parts.iter().map(|p| number_str(p, e.line, e.col)).collect()
}

fn interval(e: &Entry) -> Result<(f64, f64), ProblemError> {
    let v = numbers(e, 2)?;
    if !(v[0] < v[1]) {
        return err(e.line, e.col, "interval must have lo < hi");
    }
    Ok((v[0], v[1]))
}

fn count(e: &Entry) -> Result<usize, ProblemError> {
    e.value
        .trim()
        .parse::<usize>()
        .map_err(|_| ProblemError {
            line: e.line,
            col: e.col,
            msg: format!("`{}` is not a nonnegative integer", e.value),
        })
}

fn names(e: &Entry, n: usize) -> Result<Vec<String>, ProblemError> {
    let v: Vec<String> = e.value.split(',').map(|s| s.trim().to_string()).collect();
    if v.len() != n || v.iter().any(|s| !valid_ident(s)) {
        return err(e.line, e.col, format!("expected {n} comma-separated names"));
    }
    Ok(v)
}

fn valid_ident(s: &str) -> bool {
    let mut c = s.chars();
    matches!(c.next(), Some(ch) if ch.is_ascii_alphabetic() || ch == '_') && c.all(|ch| ch.is_ascii_alphanumeric() || ch == '_')
}

/// Parametric solution `s -> (x(s), u(s))`.
#[derive(Clone, Debug)]
pub struct SolutionSpec {
    pub param: Symbol,
    pub span: (f64, f64),
    pub x: Expr,
    pub u: Expr,
    pub constants: Vec<(String, f64)>,
}

/// Seeded initial conditions drawn from `ic_box`, integrated over `length`
/// in the independent variable.
#[derive(Clone, Debug)]
pub struct TrajectorySpec {
    pub count: usize,
    pub length: f64,
    pub tol: f64,
    pub ic_box: Domain,
}

/// A scalar first-order equation `dm/ds = rhs(s, m)` satisfied along
/// solutions by the maps `s(x, u, ...)`, `m(x, u, ...)`.
#[derive(Clone, Debug)]
pub struct RiccatiSpec {
    pub s: Expr,
    pub m: Expr,
    pub rhs: Expr,
    pub vars: [Symbol; 2],
}

#[derive(Clone, Debug)]
pub struct ProblemFile {
    pub name: String,
    pub coords: CoordSystem,
    pub phi: Expr,
    pub pairs: Vec<Arc<FundamentalPair>>,
    pub backend: FunctionBackend,
    pub gens: [VectorField; 3],
    pub reduction: Option<ReductionInput>,
    /// In file order; later fixtures may use earlier ones by name.
    pub fixtures: Vec<(String, Expr)>,
    pub forms: Vec<(String, DifferentialForm)>,
    pub domain: Domain,
    pub points: usize,
    pub tol: Tolerances,
    pub solution: Option<SolutionSpec>,
    pub trajectories: Option<TrajectorySpec>,
    pub riccati: Option<RiccatiSpec>,
}

const SECTIONS: [&str; 13] = [
    "problem",
    "coordinates",
    "pair",
    "equation",
    "generators",
    "reduction",
    "fixtures",
    "sampling",
    "reduced-sampling",
    "tolerances",
    "solution",
    "trajectories",
    "riccati",
];

fn parse_box(sec: &Section, vars: &[Symbol], scope: &Scope) -> Result<(Domain, usize), ProblemError> {
    sec.check_keys(|k| k == "points" || k == "exclude" || k == "margin" || vars.iter().any(|v| &**v == k))?;
    let mut bounds = Vec::new();
    for v in vars {
        let e = sec.need(v)?;
        let (lo, hi) = interval(e)?;
        bounds.push((v.to_string(), lo, hi));
    }
    let mut d = Domain::new(&bounds);
    for e in sec.entries.iter().filter(|e| e.key == "exclude") {
        d = d.with_locus(expr(e, scope)?);
    }
    if let Some(e) = sec.get("margin") {
        d = d.with_margin(number(e)?);
    }
    let points = match sec.get("points") {
        Some(e) => count(e)?,
        None => 100,
    };
    Ok((d, points))
}

impl ProblemFile {
    pub fn load(path: &Path) -> Result<ProblemFile, ProblemError> {
        let text = std::fs::read_to_string(path).map_err(|e| ProblemError {
            line: 0,
            col: 0,
            msg: format!("{}: {e}", path.display()),
        })?;
        ProblemFile::parse(&text)
    }

    pub fn parse(text: &str) -> Result<ProblemFile, ProblemError> {
        let sections = split_sections(text)?;
        let mut by_name: HashMap<&str, &Section> = HashMap::new();
        let mut pair_secs = Vec::new();
        for s in &sections {
            if !SECTIONS.contains(&s.name.as_str()) {
                return err(s.line, 2, format!("unknown section [{}]", s.name));
            }
            if s.name == "pair" {
                pair_secs.push(s);
                continue;
            }
            if s.arg.is_some() {
                return err(s.line, 2, format!("[{}] takes no argument", s.name));
            }
            if by_name.insert(&s.name, s).is_some() {
                return err(s.line, 2, format!("duplicate section [{}]", s.name));
            }
        }
        let section = |n: &str| -> Result<&Section, ProblemError> {
            by_name.get(n).copied().ok_or_else(|| ProblemError {
                line: 0,
                col: 0,
                msg: format!("missing section [{n}]"),
            })
        };

        let name = match by_name.get("problem") {
            Some(s) => {
                s.check_keys(|k| k == "name" || k == "description")?;
                s.get("name").map(|e| e.value.clone()).unwrap_or_default()
            }
            None => String::new(),
        };

        // coordinates
        let cs = section("coordinates")?;
        cs.check_keys(|k| matches!(k, "independent" | "dependent" | "order"))?;
        let indep = cs.need("independent")?;
        let dep = cs.need("dependent")?;
        for e in [indep, dep] {
            if !valid_ident(&e.value) {
                return err(e.line, e.col, "not a valid name");
            }
        }
        let oe = cs.need("order")?;
        if count(oe)? != 3 {
            return err(oe.line, oe.col, "only third-order equations are supported");
        }
        let coords = CoordSystem::jet(&indep.value, &dep.value, 2);

        // special functions
        let mut backend = FunctionBackend::new();
        let mut specials: Vec<Arc<SpecialFn>> = Vec::new();
        let mut pairs = Vec::new();
        for s in &pair_secs {
            s.check_keys(|k| matches!(k, "names" | "var" | "p" | "q" | "anchor" | "ic1" | "ic2" | "interval"))?;
            let nm = names(s.need("names")?, 2)?;
            let ve = s.need("var")?;
            if !valid_ident(&ve.value) {
                return err(ve.line, ve.col, "not a valid name");
            }
            let vscope = Scope::new(&[ve.value.as_str()]);
            let ic1 = numbers(s.need("ic1")?, 2)?;
            let ic2 = numbers(s.need("ic2")?, 2)?;
            let spec = LinearOdeSpec {
                var: ve.value.as_str().into(),
                p: expr(s.need("p")?, &vscope)?,
                q: expr(s.need("q")?, &vscope)?,
                anchor: number(s.need("anchor")?)?,
                ics: [(ic1[0], ic1[1]), (ic2[0], ic2[1])],
                interval: interval(s.need("interval")?)?,
                names: [nm[0].clone(), nm[1].clone()],
            };
            for n in &nm {
                if specials.iter().any(|f| &*f.name == n) || coords.index(n).is_some() {
                    return err(s.line, 2, format!("special function `{n}` declared twice or clashes with a coordinate"));
                }
            }
            specials.extend(spec.symbols());
            let pair = FundamentalPair::new(spec).map_err(|e| ProblemError {
                line: s.line,
                col: 2,
                msg: e.to_string(),
            })?;
            pair.register(&mut backend);
            pairs.push(pair);
        }
        let scope_with = |vars: &[Symbol]| Scope::new(vars).with_specials(specials.iter());
        let jscope = scope_with(coords.names());

        // equation
        let es = section("equation")?;
        let top = format!("{}3", dep.value);
        es.check_keys(|k| k == top)?;
        let phi = expr(es.need(&top)?, &jscope)?;

        // generators on (x, u)
        let gs = section("generators")?;
        gs.check_keys(|k| {
            matches!(
                k,
                "v1.xi" | "v1.eta" | "v2.xi" | "v2.eta" | "v3.xi" | "v3.eta"
            )
        })?;
        let base = coords.truncate(0);
        let bscope = base.scope();
        let mut gens = Vec::new();
        for i in 1..=3 {
            let mut v = VectorField::zero(&base);
            for (slot, part) in ["xi", "eta"].iter().enumerate() {
                if let Some(e) = gs.get(&format!("v{i}.{part}")) {
                    v.set(slot, expr(e, &bscope)?);
                }
            }
            gens.push(v);
        }
        let gens: [VectorField; 3] = gens.try_into().expect("three generators");

        // sampling box over the jet coordinates
        let (domain, points) = parse_box(section("sampling")?, coords.names(), &jscope)?;

        // reduction
        let mut red_names: Vec<Symbol> = Vec::new();
        let reduction = match by_name.get("reduction") {
            None => None,
            Some(rs) => {
                rs.check_keys(|k| {
                    matches!(k, "y" | "w" | "alpha" | "names" | "varsigma1")
                        || k.strip_prefix("section.").is_some_and(|c| coords.index(c).is_some())
                })?;
                let ne = rs.need("names")?;
                let nm = names(ne, 4)?;
                for n in &nm {
                    if coords.index(n).is_some() || specials.iter().any(|f| &*f.name == n) {
                        return err(ne.line, ne.col, format!("reduced name `{n}` clashes with an existing name"));
                    }
                }
                red_names = nm.iter().map(|s| Symbol::from(s.as_str())).collect();
                let sec_scope = scope_with(&red_names);
                let mut section_map = Vec::new();
                for c in coords.names() {
                    section_map.push(expr(rs.need(&format!("section.{c}"))?, &sec_scope)?);
                }
                let rsamp = section("reduced-sampling")?;
                let rvars: Vec<Symbol> = red_names.to_vec();
                let rscope = scope_with(&rvars[..3]);
                let (rdom_all, _) = parse_box(rsamp, &rvars, &rscope)?;
                let alpha_range = rdom_all.bounds[3];
                let mut rdom = Domain::new(&[
                    (rvars[0].to_string(), rdom_all.bounds[0].0, rdom_all.bounds[0].1),
                    (rvars[1].to_string(), rdom_all.bounds[1].0, rdom_all.bounds[1].1),
                    (rvars[2].to_string(), rdom_all.bounds[2].0, rdom_all.bounds[2].1),
                ])
                .with_margin(rdom_all.margin);
                for l in rdom_all.loci {
                    rdom = rdom.with_locus(l.g);
                }
                Some(ReductionInput {
                    names: [red_names[0].clone(), red_names[1].clone(), red_names[2].clone()],
                    alpha: red_names[3].clone(),
                    y: expr(rs.need("y")?, &bscope)?,
                    w: expr(rs.need("w")?, &jscope)?,
                    alpha_expr: rs.get("alpha").map(|e| expr(e, &bscope)).transpose()?,
                    section: section_map.try_into().expect("four section components"),
                    varsigma1: rs.get("varsigma1").map(|e| expr(e, &bscope)).transpose()?,
                    domain: rdom,
                    alpha_range,
                })
            }
        };
        if reduction.is_none() && by_name.contains_key("reduced-sampling") {
            let s = by_name["reduced-sampling"];
            return err(s.line, 2, "[reduced-sampling] without [reduction]");
        }

        // fixtures: scalar entries, or one-form components `name.coord`
        let mut fixtures: Vec<(String, Expr)> = Vec::new();
        let mut form_parts: BTreeMap<String, Vec<(usize, Expr, usize)>> = BTreeMap::new();
        if let Some(fs) = by_name.get("fixtures") {
            for e in &fs.entries {
                let mut vars: Vec<Symbol> = coords.names().to_vec();
                vars.extend(red_names.iter().take(3).cloned());
                vars.extend(fixtures.iter().map(|(n, _)| Symbol::from(n.as_str())));
                let scope = scope_with(&vars);
                let mut v = expr(e, &scope)?;
                let subs: HashMap<Symbol, Expr> = fixtures.iter().map(|(n, x)| (Symbol::from(n.as_str()), x.clone())).collect();
                v = v.subs(&subs);
                match e.key.split_once('.') {
                    Some((form, c)) => {
                        let Some(i) = coords.index(c) else {
                            return err(e.line, 1, format!("`{c}` is not a coordinate"));
                        };
                        form_parts.entry(form.to_string()).or_default().push((i, v, e.line));
                    }
                    None => {
                        if !valid_ident(&e.key) {
                            return err(e.line, 1, format!("`{}` is not a valid fixture name", e.key));
                        }
                        if coords.index(&e.key).is_some() || red_names.iter().any(|n| **n == *e.key) {
                            return err(e.line, 1, format!("fixture `{}` shadows a coordinate", e.key));
                        }
                        fixtures.push((e.key.clone(), v));
                    }
                }
            }
        }
        let mut forms = Vec::new();
        for (name, parts) in form_parts {
            let mut coeffs = vec![Expr::zero(); coords.dim()];
            for (i, v, line) in parts {
                if !coeffs[i].is_zero() {
                    return err(line, 1, format!("duplicate component of `{name}`"));
                }
                coeffs[i] = v;
            }
            forms.push((name, DifferentialForm::one_form(&coords, &coeffs)));
        }

        // tolerances
        let mut tol = Tolerances::default();
        if let Some(ts) = by_name.get("tolerances") {
            ts.check_keys(|k| matches!(k, "relations" | "symbolic" | "structure" | "numeric" | "solution"))?;
            for e in &ts.entries {
                let v = number(e)?;
                if !(v > 0.0) {
                    return err(e.line, e.col, "tolerances must be positive");
                }
                match e.key.as_str() {
                    "relations" => tol.relations = v,
                    "symbolic" => tol.symbolic = v,
                    "structure" => tol.structure = v,
                    "numeric" => tol.numeric = v,
                    _ => tol.solution = v,
                }
            }
        }

        // explicit solution
        let solution = match by_name.get("solution") {
            None => None,
            Some(ss) => {
                ss.check_keys(|k| matches!(k, "param" | "span" | "x" | "u") || k.starts_with("const."))?;
                let pe = ss.need("param")?;
                if !valid_ident(&pe.value) || coords.index(&pe.value).is_some() {
                    return err(pe.line, pe.col, "parameter must be a fresh name");
                }
                let mut constants = Vec::new();
                for e in ss.entries.iter().filter(|e| e.key.starts_with("const.")) {
                    let n = &e.key["const.".len()..];
                    if !valid_ident(n) {
                        return err(e.line, 1, format!("`{n}` is not a valid constant name"));
                    }
                    constants.push((n.to_string(), number(e)?));
                }
                let mut vars: Vec<Symbol> = vec![pe.value.as_str().into()];
                vars.extend(constants.iter().map(|(n, _)| Symbol::from(n.as_str())));
                let scope = scope_with(&vars);
                let subs: HashMap<Symbol, Expr> = constants
                    .iter()
                    .map(|(n, v)| (Symbol::from(n.as_str()), Expr::constant(num::BigRational::from_float(*v).expect("finite"))))
                    .collect();
                Some(SolutionSpec {
                    param: pe.value.as_str().into(),
                    span: interval(ss.need("span")?)?,
                    x: expr(ss.need("x")?, &scope)?.subs(&subs),
                    u: expr(ss.need("u")?, &scope)?.subs(&subs),
                    constants,
                })
            }
        };

        let trajectories = match by_name.get("trajectories") {
            None => None,
            Some(ts) => {
                ts.check_keys(|k| matches!(k, "count" | "length" | "tol") || coords.index(k).is_some())?;
                let mut ic_box = domain.clone();
                ic_box.loci.clear();
                for e in ts.entries.iter().filter(|e| coords.index(&e.key).is_some()) {
                    let (lo, hi) = interval(e)?;
                    ic_box = ic_box.with_bound(&e.key, lo, hi);
                }
                ic_box.loci = domain.loci.clone();
                let tol_e = ts.get("tol");
                Some(TrajectorySpec {
                    count: ts.get("count").map(count).transpose()?.unwrap_or(5),
                    length: number(ts.need("length")?)?,
                    tol: tol_e.map(number).transpose()?.unwrap_or(1e-10),
                    ic_box,
                })
            }
        };

        let riccati = match by_name.get("riccati") {
            None => None,
            Some(rs) => {
                rs.check_keys(|k| matches!(k, "s" | "m" | "rhs" | "vars"))?;
                let vars = match rs.get("vars") {
                    Some(e) => names(e, 2)?,
                    None => vec!["s".to_string(), "m".to_string()],
                };
                let rscope = scope_with(&[Symbol::from(vars[0].as_str()), Symbol::from(vars[1].as_str())]);
                Some(RiccatiSpec {
                    s: expr(rs.need("s")?, &jscope)?,
                    m: expr(rs.need("m")?, &jscope)?,
                    rhs: expr(rs.need("rhs")?, &rscope)?,
                    vars: [vars[0].as_str().into(), vars[1].as_str().into()],
                })
            }
        };

        Ok(ProblemFile {
            name,
            coords,
            phi,
            pairs,
            backend,
            gens,
            reduction,
            fixtures,
            forms,
            domain,
            points,
            tol,
            solution,
            trajectories,
            riccati,
        })
    }

    pub fn fixture(&self, name: &str) -> Option<&Expr> {
        self.fixtures.iter().find(|(n, _)| n == name).map(|(_, e)| e)
    }

    pub fn form(&self, name: &str) -> Option<&DifferentialForm> {
        self.forms.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }

    pub fn probe(&self, seed: u64) -> Probe {
        Probe::new(self.domain.clone(), self.points, seed, self.backend.clone())
    }

    pub fn problem(&self, seed: u64) -> Result<Sl2Problem, Sl2Error> {
        Sl2Problem::new(self.coords.clone(), self.phi.clone(), self.gens.clone(), self.probe(seed), self.tol)
    }
}
