use std::collections::{BTreeMap, BTreeSet};

use crate::model::{
    Bounds, CellAddr, Constraint, Equation, Expr, Formula, IndexExpr, LhsIndex, ModelError, Object, Quantifier, Subscript, TableDecl,
    Vector,
};
use crate::notation::{
    AddrExpr, ConstraintOp, Diagnostic, EquationT, FunctionDef, IntExpr, LhsIndexT, ObjectExpr, ObjectLit, Pos, Program, TemplateFormula,
};

use super::{union, MapEntry, MappingSpec};

/// Parameter bindings.
pub type Env = BTreeMap<String, i64>;

/// The value of an object expression: an object plus any mapping clauses
/// applied to it, and the parameter bindings of the entry function.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Instance {
    pub object: Object,
    pub mapping: MappingSpec,
    pub env: Env,
}

const MAX_CALL_DEPTH: usize = 64;

/// Evaluates an integer expression with every name bound by `env`.
pub fn eval_int(e: &IntExpr, env: &Env, pos: Pos) -> Result<i64, Diagnostic> {
    let overflow = || Diagnostic::semantic(pos, format!("integer overflow in {e}"));
    Ok(match e {
        IntExpr::Lit(v) => *v,
        IntExpr::Name(n) => *env.get(n).ok_or_else(|| Diagnostic::semantic(pos, format!("unknown name `{n}`")))?,
        IntExpr::Add(a, b) => eval_int(a, env, pos)?.checked_add(eval_int(b, env, pos)?).ok_or_else(overflow)?,
        IntExpr::Sub(a, b) => eval_int(a, env, pos)?.checked_sub(eval_int(b, env, pos)?).ok_or_else(overflow)?,
        IntExpr::Mul(a, b) => eval_int(a, env, pos)?.checked_mul(eval_int(b, env, pos)?).ok_or_else(overflow)?,
        IntExpr::Neg(a) => eval_int(a, env, pos)?.checked_neg().ok_or_else(overflow)?,
    })
}

/// Evaluates an address expression (`Sheet!A1 + vector(dx, dy)`).
pub fn eval_addr(e: &AddrExpr, env: &Env, pos: Pos) -> Result<CellAddr, Diagnostic> {
    match e {
        AddrExpr::Const(a) => Ok(a.clone()),
        AddrExpr::Shift { base, dx, dy } => {
            let base = eval_addr(base, env, pos)?;
            let v = Vector::new(eval_int(dx, env, pos)?, eval_int(dy, env, pos)?);
            base.shifted(v).map_err(|e| Diagnostic::semantic(pos, e.to_string()))
        }
    }
}

/// `Σ coef·var + constant`, the affine form of an index expression.
type Affine = (BTreeMap<String, i64>, i64);

fn affine(e: &IntExpr, env: &Env, vars: &BTreeSet<&str>, pos: Pos) -> Result<Affine, Diagnostic> {
    let overflow = || Diagnostic::semantic(pos, format!("integer overflow in {e}"));
    let combine = |(mut a, ca): Affine, (b, cb): Affine, sign: i64| -> Option<Affine> {
        for (k, v) in b {
            let slot = a.entry(k).or_insert(0);
            *slot = slot.checked_add(v.checked_mul(sign)?)?;
        }
        Some((a, ca.checked_add(cb.checked_mul(sign)?)?))
    };
    Ok(match e {
        IntExpr::Lit(v) => (BTreeMap::new(), *v),
        IntExpr::Name(n) if vars.contains(n.as_str()) => (BTreeMap::from([(n.clone(), 1)]), 0),
        IntExpr::Name(n) => match env.get(n) {
            Some(v) => (BTreeMap::new(), *v),
            None => return Err(Diagnostic::semantic(pos, format!("unknown name `{n}`"))),
        },
        IntExpr::Add(a, b) => combine(affine(a, env, vars, pos)?, affine(b, env, vars, pos)?, 1).ok_or_else(overflow)?,
        IntExpr::Sub(a, b) => combine(affine(a, env, vars, pos)?, affine(b, env, vars, pos)?, -1).ok_or_else(overflow)?,
        IntExpr::Neg(a) => combine((BTreeMap::new(), 0), affine(a, env, vars, pos)?, -1).ok_or_else(overflow)?,
        IntExpr::Mul(a, b) => {
            let (fa, ca) = affine(a, env, vars, pos)?;
            let (fb, cb) = affine(b, env, vars, pos)?;
            let (coefs, k, c) = match (fa.is_empty(), fb.is_empty()) {
                (true, _) => (fb, ca, cb),
                (_, true) => (fa, cb, ca),
                _ => return Err(Diagnostic::semantic(pos, format!("index {e} multiplies two variables"))),
            };
            let coefs = coefs
                .into_iter()
                .map(|(n, v)| v.checked_mul(k).map(|v| (n, v)))
                .collect::<Option<BTreeMap<_, _>>>()
                .ok_or_else(overflow)?;
            (coefs, c.checked_mul(k).ok_or_else(overflow)?)
        }
    })
}

/// Folds an index to a literal or `variable + constant`.
fn index(e: &IntExpr, env: &Env, vars: &BTreeSet<&str>, pos: Pos) -> Result<IndexExpr, Diagnostic> {
    let (coefs, c) = affine(e, env, vars, pos)?;
    let live: Vec<_> = coefs.into_iter().filter(|(_, v)| *v != 0).collect();
    match live.as_slice() {
        [] => Ok(IndexExpr::Lit(c)),
        [(name, 1)] => Ok(IndexExpr::var(name.clone(), c)),
        _ => Err(Diagnostic::semantic(pos, format!("index {e} must be a constant or one variable plus a constant"))),
    }
}

fn formula(t: &TemplateFormula, env: &Env, vars: &BTreeSet<&str>, pos: Pos) -> Result<Formula, Diagnostic> {
    let f = t.try_map_indices(&mut |i| index(i, env, vars, pos))?;
    Ok(lower_constant_indices(f))
}

/// `Index(Lit(v))` nodes become plain numbers.
fn lower_constant_indices(f: Formula) -> Formula {
    match f {
        Expr::Index(IndexExpr::Lit(v)) => Expr::num(v as f64),
        Expr::Binary { op, lhs, rhs } => Expr::binary(op, lower_constant_indices(*lhs), lower_constant_indices(*rhs)),
        Expr::Neg(e) => Expr::Neg(Box::new(lower_constant_indices(*e))),
        Expr::Call { func, args } => Expr::call(func, args.into_iter().map(lower_constant_indices).collect()),
        other => other,
    }
}

/// Resolves an object literal under `env`.
pub fn instantiate_literal(lit: &ObjectLit, env: &Env) -> Result<Object, Diagnostic> {
    let mut object = Object::new();
    for decl in &lit.tables {
        let mut dims = Vec::with_capacity(decl.dims.len());
        for (k, (lo, hi)) in decl.dims.iter().enumerate() {
            let (lo, hi) = (eval_int(lo, env, decl.pos)?, eval_int(hi, env, decl.pos)?);
            dims.push(Bounds::new(lo, hi).ok_or_else(|| {
                Diagnostic::semantic(decl.pos, format!("dimension {} of table `{}` is empty ({lo} > {hi})", k + 1, decl.name))
            })?);
        }
        object.declare(TableDecl::new(decl.name.clone(), dims)).map_err(|e| Diagnostic::semantic(decl.pos, e.to_string()))?;
    }
    for eq in &lit.equations {
        let padded = pad_trailing(&object, eq);
        let eq = padded.as_ref().unwrap_or(eq);
        let mut lhs = Vec::with_capacity(eq.lhs.len());
        for ix in &eq.lhs {
            lhs.push(match ix {
                LhsIndexT::Fixed(e) => LhsIndex::Fixed(eval_int(e, env, eq.pos)?),
                LhsIndexT::Bound { var, op, value } => {
                    let k = match value {
                        Some(v) => eval_int(v, env, eq.pos)?,
                        None => 0,
                    };
                    let constraint = match op {
                        ConstraintOp::All => Constraint::All,
                        ConstraintOp::Gt => Constraint::Gt(k),
                        ConstraintOp::Lt => Constraint::Lt(k),
                        ConstraintOp::Eq => Constraint::Eq(k),
                        ConstraintOp::Ge => Constraint::Ge(k),
                        ConstraintOp::Le => Constraint::Le(k),
                    };
                    LhsIndex::Bound(Quantifier { var: var.clone(), constraint })
                }
            });
        }
        let vars: BTreeSet<&str> = eq
            .lhs
            .iter()
            .filter_map(|ix| match ix {
                LhsIndexT::Bound { var, .. } => Some(var.as_str()),
                LhsIndexT::Fixed(_) => None,
            })
            .collect();
        let rhs = formula(&eq.rhs, env, &vars, eq.pos)?;
        let equation = Equation::new(eq.table.clone(), lhs, rhs);
        check_equation(&object, &equation).map_err(|m| Diagnostic::semantic(eq.pos, m))?;
        object.add_equation(equation);
    }
    Ok(object)
}

/// An equation that indexes its table with fewer subscripts than it has
/// dimensions quantifies the missing trailing positions implicitly; element
/// references on the right that are short by the same positions receive the
/// same variables. `None` when nothing needs padding.
fn pad_trailing(object: &Object, eq: &EquationT) -> Option<EquationT> {
    let rank = object.table(&eq.table)?.rank();
    if eq.lhs.len() >= rank {
        return None;
    }
    let taken: BTreeSet<String> = eq
        .lhs
        .iter()
        .filter_map(|ix| match ix {
            LhsIndexT::Bound { var, .. } => Some(var.clone()),
            LhsIndexT::Fixed(_) => None,
        })
        .collect();
    let mut implicit = BTreeMap::new();
    let mut out = eq.clone();
    for p in eq.lhs.len()..rank {
        let mut name = format!("_{}", p + 1);
        while taken.contains(&name) {
            name.push('_');
        }
        out.lhs.push(LhsIndexT::Bound { var: name.clone(), op: ConstraintOp::All, value: None });
        implicit.insert(p, name);
    }
    out.rhs = pad_refs(object, &eq.rhs, &implicit);
    Some(out)
}

fn pad_refs(object: &Object, f: &TemplateFormula, implicit: &BTreeMap<usize, String>) -> TemplateFormula {
    match f {
        Expr::Element { table, indices } => {
            let mut indices = indices.clone();
            if let Some(decl) = object.table(table) {
                for p in indices.len()..decl.rank() {
                    match implicit.get(&p) {
                        Some(v) => indices.push(Subscript::At(IntExpr::Name(v.clone()))),
                        None => break,
                    }
                }
            }
            Expr::Element { table: table.clone(), indices }
        }
        Expr::Binary { op, lhs, rhs } => Expr::binary(*op, pad_refs(object, lhs, implicit), pad_refs(object, rhs, implicit)),
        Expr::Neg(e) => Expr::Neg(Box::new(pad_refs(object, e, implicit))),
        Expr::Call { func, args } => Expr::call(*func, args.iter().map(|a| pad_refs(object, a, implicit)).collect()),
        other => other.clone(),
    }
}

fn check_equation(object: &Object, eq: &Equation) -> Result<(), String> {
    let mut single = Object { tables: BTreeMap::new(), equations: BTreeSet::from([eq.clone()]) };
    let mut names: BTreeSet<&str> = eq.rhs.tables();
    names.insert(&eq.table);
    for n in names {
        if let Some(d) = object.table(n) {
            single.tables.insert(n.to_string(), d.clone());
        }
    }
    match single.validate() {
        Ok(()) | Err(ModelError::UnknownTable(_)) => Ok(()),
        Err(e) => Err(e.to_string()),
    }
}

/// Whole-object validation once every literal has been combined.
fn finish(inst: Instance) -> Result<Instance, Diagnostic> {
    inst.object.validate().map_err(|e| Diagnostic::semantic(Pos::default(), e.to_string()))?;
    Ok(inst)
}

/// Applies the named function to integer arguments.
pub fn apply_function(program: &Program, name: &str, args: &[i64]) -> Result<Instance, Diagnostic> {
    let def = program.function(name).ok_or_else(|| Diagnostic::semantic(Pos::default(), format!("unknown function `{name}`")))?;
    let env = bind(def, args, def.pos)?;
    let mut inst = eval(program, &def.body, &env, 0)?;
    inst.env = env;
    finish(inst)
}

/// Resolves a program: the named (or else the last) function applied to
/// `args`, or, with no arguments and a top-level expression, that expression.
pub fn instantiate(program: &Program, entry: Option<&str>, args: &[i64]) -> Result<Instance, Diagnostic> {
    match (entry, &program.top) {
        (Some(name), _) => apply_function(program, name, args),
        (None, Some(top)) if args.is_empty() => finish(eval(program, top, &Env::new(), 0)?),
        (None, _) => match program.definitions.last() {
            Some(def) => apply_function(program, &def.name, args),
            None => Err(Diagnostic::semantic(Pos::default(), "the program defines nothing to compile")),
        },
    }
}

fn bind(def: &FunctionDef, args: &[i64], pos: Pos) -> Result<Env, Diagnostic> {
    if def.params.len() != args.len() {
        return Err(Diagnostic::semantic(
            pos,
            format!("`{}` takes {} argument(s) but is given {}", def.name, def.params.len(), args.len()),
        ));
    }
    Ok(def.params.iter().cloned().zip(args.iter().copied()).collect())
}

fn eval(program: &Program, e: &ObjectExpr, env: &Env, depth: usize) -> Result<Instance, Diagnostic> {
    Ok(match e {
        ObjectExpr::Literal(lit) => Instance { object: instantiate_literal(lit, env)?, ..Instance::default() },
        ObjectExpr::Call { name, args, pos } => {
            if depth >= MAX_CALL_DEPTH {
                return Err(Diagnostic::semantic(*pos, format!("calls nested deeper than {MAX_CALL_DEPTH}")));
            }
            let def = program.function(name).ok_or_else(|| Diagnostic::semantic(*pos, format!("unknown function `{name}`")))?;
            let values = args.iter().map(|a| eval_int(a, env, *pos)).collect::<Result<Vec<_>, _>>()?;
            let inner = bind(def, &values, *pos)?;
            eval(program, &def.body, &inner, depth + 1)?
        }
        ObjectExpr::Union(a, b) => {
            let a = eval(program, a, env, depth)?;
            let b = eval(program, b, env, depth)?;
            let object = union(&a.object, &b.object).map_err(|e| Diagnostic::semantic(Pos::default(), e.to_string()))?;
            let mut mapping = a.mapping;
            mapping.entries.extend(b.mapping.entries);
            Instance { object, mapping, env: Env::new() }
        }
        ObjectExpr::Mapping { object, clauses } => {
            let mut inst = eval(program, object, env, depth)?;
            for c in clauses {
                let decl = inst
                    .object
                    .table(&c.table)
                    .ok_or_else(|| Diagnostic::semantic(c.pos, format!("mapping names table `{}`, which is not declared", c.table)))?;
                let orientation = match (c.orientation, decl.rank()) {
                    (Some(o), r) if o.fits(r) => o,
                    (Some(o), r) => {
                        return Err(Diagnostic::semantic(
                            c.pos,
                            format!("orientation {o} does not fit `{}` with {r} dimension(s)", c.table),
                        ))
                    }
                    (None, 0) => crate::model::Orientation::YX,
                    (None, r) => {
                        return Err(Diagnostic::semantic(
                            c.pos,
                            format!("`{}` has {r} dimension(s) and needs `by yx`, `by xy`, `by y` or `by x`", c.table),
                        ))
                    }
                };
                let origin = eval_addr(&c.target, env, c.pos)?;
                inst.mapping.entries.push(MapEntry { table: c.table.clone(), origin, orientation });
            }
            inst
        }
    })
}
