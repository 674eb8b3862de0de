use std::collections::BTreeMap;

use crate::model::{cartesian, BinOp, Bounds, Equation, Expr, Formula, IndexExpr, LhsIndex, Num, Object, Subscript, TableDecl};

use super::AlgebraError;

/// One defining formula per concrete table element. Element references in
/// the formulas carry literal indices only.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExpandedObject {
    pub tables: BTreeMap<String, TableDecl>,
    pub cells: BTreeMap<String, BTreeMap<Vec<i64>, Formula>>,
}

impl ExpandedObject {
    pub fn new(tables: BTreeMap<String, TableDecl>) -> Self {
        ExpandedObject { tables, cells: BTreeMap::new() }
    }

    /// Number of defined elements.
    pub fn len(&self) -> usize {
        self.cells.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, table: &str, index: &[i64]) -> Option<&Formula> {
        self.cells.get(table)?.get(index)
    }

    /// Defines an element; a second definition is an error.
    pub fn define(&mut self, table: &str, index: Vec<i64>, f: Formula) -> Result<(), AlgebraError> {
        let slot = self.cells.entry(table.to_string()).or_default();
        if slot.contains_key(&index) {
            return Err(AlgebraError::MultipleDefinition { table: table.to_string(), index });
        }
        slot.insert(index, f);
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Vec<i64>, &Formula)> + '_ {
        self.cells.iter().flat_map(|(t, m)| m.iter().map(move |(i, f)| (t.as_str(), i, f)))
    }
}

/// Instantiates every equation over its effective quantifier ranges.
pub fn expand(o: &Object) -> Result<ExpandedObject, AlgebraError> {
    o.validate()?;
    let mut out = ExpandedObject::new(o.tables.clone());
    for eq in &o.equations {
        expand_equation(o, eq, &mut out)?;
    }
    Ok(out)
}

fn expand_equation(o: &Object, eq: &Equation, out: &mut ExpandedObject) -> Result<(), AlgebraError> {
    let decl = &o.tables[&eq.table];
    let mut ranges = Vec::with_capacity(eq.lhs.len());
    for (ix, b) in eq.lhs.iter().zip(&decl.dims) {
        ranges.push(match ix {
            LhsIndex::Fixed(v) if b.contains(*v) => (*v, *v),
            LhsIndex::Fixed(_) => {
                let index = eq.lhs.iter().map(|ix| if let LhsIndex::Fixed(v) = ix { *v } else { 0 }).collect();
                return Err(AlgebraError::OutOfBounds { table: eq.table.clone(), index, from: eq.table.clone() });
            }
            LhsIndex::Bound(q) => match q.constraint.restrict(*b) {
                Some(r) => (r.lo, r.hi),
                None => return Ok(()),
            },
        });
    }
    let vars: Vec<(usize, &str)> = eq.variables().map(|(k, q)| (k, q.var.as_str())).collect();
    let table_slot = out.cells.entry(eq.table.clone()).or_default();
    for index in cartesian(ranges) {
        let lookup = |name: &str| vars.iter().find(|(_, v)| *v == name).map(|(k, _)| index[*k]);
        let f = substitute(o, &eq.rhs, &lookup).map_err(|(table, bad)| AlgebraError::OutOfBounds {
            table,
            index: bad,
            from: format!("{}{:?}", eq.table, index),
        })?;
        if table_slot.contains_key(&index) {
            return Err(AlgebraError::MultipleDefinition { table: eq.table.clone(), index });
        }
        table_slot.insert(index, fold_constants(f));
    }
    Ok(())
}

/// Replaces variables by values; fails with the offending element when a
/// reference leaves its table's bounds.
fn substitute(o: &Object, f: &Formula, lookup: &impl Fn(&str) -> Option<i64>) -> Result<Formula, (String, Vec<i64>)> {
    let value = |i: &IndexExpr| match i {
        IndexExpr::Lit(v) => *v,
        IndexExpr::Var { name, offset } => lookup(name).expect("validated variable") + offset,
    };
    Ok(match f {
        Expr::Index(i) => Expr::num(value(i) as f64),
        Expr::Element { table, indices } => {
            let decl = &o.tables[table];
            let mut out = Vec::with_capacity(indices.len());
            let mut bad = false;
            for (s, b) in indices.iter().zip(&decl.dims) {
                out.push(match s {
                    Subscript::At(i) => {
                        let v = value(i);
                        bad |= !b.contains(v);
                        Subscript::At(IndexExpr::Lit(v))
                    }
                    Subscript::Span(x, y) => {
                        let (lo, hi) = (value(x), value(y));
                        bad |= Bounds::new(lo, hi).is_none() || !b.contains(lo) || !b.contains(hi);
                        Subscript::Span(IndexExpr::Lit(lo), IndexExpr::Lit(hi))
                    }
                });
            }
            if bad {
                let corner = out
                    .iter()
                    .map(|s| match s {
                        Subscript::At(IndexExpr::Lit(v)) | Subscript::Span(IndexExpr::Lit(v), _) => *v,
                        _ => unreachable!(),
                    })
                    .collect();
                return Err((table.clone(), corner));
            }
            Expr::Element { table: table.clone(), indices: out }
        }
        Expr::Binary { op, lhs, rhs } => Expr::binary(*op, substitute(o, lhs, lookup)?, substitute(o, rhs, lookup)?),
        Expr::Neg(e) => Expr::Neg(Box::new(substitute(o, e, lookup)?)),
        Expr::Call { func, args } => Expr::call(*func, args.iter().map(|a| substitute(o, a, lookup)).collect::<Result<_, _>>()?),
        other => other.clone(),
    })
}

/// Folds arithmetic whose operands are all numeric literals (and text
/// concatenation of text literals). Results that are not finite are left
/// unfolded so the evaluator reports them.
pub fn fold_constants(f: Formula) -> Formula {
    match f {
        Expr::Binary { op, lhs, rhs } => {
            let (l, r) = (fold_constants(*lhs), fold_constants(*rhs));
            match (&l, &r) {
                (Expr::Number(Num(a)), Expr::Number(Num(b))) => {
                    let v = match op {
                        BinOp::Add => Some(a + b),
                        BinOp::Sub => Some(a - b),
                        BinOp::Mul => Some(a * b),
                        BinOp::Div => Some(a / b),
                        _ => None,
                    };
                    match v {
                        Some(v) if v.is_finite() => Expr::num(v),
                        _ => Expr::binary(op, l, r),
                    }
                }
                (Expr::Text(a), Expr::Text(b)) if op == BinOp::Concat => Expr::Text(format!("{a}{b}")),
                _ => Expr::binary(op, l, r),
            }
        }
        Expr::Neg(e) => match fold_constants(*e) {
            Expr::Number(Num(v)) => Expr::num(-v),
            other => Expr::Neg(Box::new(other)),
        },
        Expr::Call { func, args } => Expr::call(func, args.into_iter().map(fold_constants).collect()),
        other => other,
    }
}
