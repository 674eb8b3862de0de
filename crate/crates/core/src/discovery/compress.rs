use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::algebra::ExpandedObject;
use crate::model::{Constraint, Equation, Expr, Formula, IndexExpr, LhsIndex, Object, Quantifier, Subscript, TableDecl};

/// Names given to the quantified variable of each dimension.
pub fn dim_var(d: usize) -> String {
    match d {
        0 => "i".into(),
        1 => "j".into(),
        2 => "k".into(),
        _ => format!("i{}", d + 1),
    }
}

/// How one literal index in a formula is expressed: as itself, or as an
/// offset from the element's own index in some dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Rep {
    Rel(usize),
    Lit,
}

/// Literal indices of `f` in the order `map_indices` meets them, with the
/// subscript position each came from.
fn slots(f: &Formula) -> Vec<(usize, i64)> {
    let mut out = Vec::new();
    f.visit(&mut |e| {
        let mut push = |p: usize, i: &IndexExpr| {
            if let IndexExpr::Lit(v) = i {
                out.push((p, *v));
            }
        };
        match e {
            Expr::Index(i) => push(usize::MAX, i),
            Expr::Element { indices, .. } => {
                for (p, s) in indices.iter().enumerate() {
                    match s {
                        Subscript::At(i) => push(p, i),
                        Subscript::Span(a, b) => {
                            push(p, a);
                            push(p, b);
                        }
                    }
                }
            }
            _ => {}
        }
    });
    out
}

fn shape(f: &Formula) -> Formula {
    f.map_indices(&mut |i| match i {
        IndexExpr::Lit(_) => IndexExpr::Lit(0),
        v => v.clone(),
    })
}

fn rep_value(rep: Rep, lit: i64, at: &[i64]) -> i64 {
    match rep {
        Rep::Lit => lit,
        Rep::Rel(d) => lit - at[d],
    }
}

/// Merges elements whose formulas agree once indices are taken relative to
/// the element, and covers each such set with quantified equations over
/// boxes that an equation's left-hand side can express. Elements left over
/// get equations of their own, so `expand(compress(e)) == e`.
pub fn compress(e: &ExpandedObject) -> Object {
    let mut o = Object::new();
    for decl in e.tables.values() {
        o.declare(decl.clone()).expect("tables of one expanded object are distinct");
    }
    for (table, cells) in &e.cells {
        let decl = &e.tables[table];
        for eq in compress_table(decl, cells) {
            o.add_equation(eq);
        }
    }
    o
}

/// An element index with its numeric slots.
type Occurrence<'a> = (&'a Vec<i64>, Vec<(usize, i64)>);

fn compress_table(decl: &TableDecl, cells: &BTreeMap<Vec<i64>, Formula>) -> Vec<Equation> {
    let rank = decl.rank();
    let mut by_shape: BTreeMap<Formula, Vec<Occurrence>> = BTreeMap::new();
    for (at, f) in cells {
        by_shape.entry(shape(f)).or_default().push((at, slots(f)));
    }
    let mut out = Vec::new();
    for (shape, members) in by_shape {
        let nslots = members[0].1.len();
        let mut reps = Vec::with_capacity(nslots);
        for s in 0..nslots {
            let pos = members[0].1[s].0;
            let mut options = Vec::new();
            if pos < rank {
                options.push(Rep::Rel(pos));
            }
            options.push(Rep::Lit);
            options.extend((0..rank).filter(|d| *d != pos).map(Rep::Rel));
            let best = options
                .into_iter()
                .enumerate()
                .max_by_key(|(order, rep)| {
                    let mut freq: HashMap<i64, usize> = HashMap::new();
                    for (at, sl) in &members {
                        *freq.entry(rep_value(*rep, sl[s].1, at)).or_default() += 1;
                    }
                    (freq.values().copied().max().unwrap_or(0), std::cmp::Reverse(*order))
                })
                .map(|(_, r)| r)
                .expect("at least the literal option");
            reps.push(best);
        }
        let mut groups: BTreeMap<Vec<i64>, BTreeSet<Vec<i64>>> = BTreeMap::new();
        for (at, sl) in &members {
            let key = sl.iter().zip(&reps).map(|((_, v), r)| rep_value(*r, *v, at)).collect();
            groups.entry(key).or_default().insert((*at).clone());
        }
        for (key, points) in groups {
            for region in cover(decl, points) {
                out.push(equation(decl, &shape, &reps, &key, &region));
            }
        }
    }
    out
}

/// Greedy cover of `points` by boxes whose every side is the whole
/// dimension, a prefix, a suffix or a single index.
fn cover(decl: &TableDecl, mut points: BTreeSet<Vec<i64>>) -> Vec<Vec<(i64, i64)>> {
    let rank = decl.rank();
    let bounds: Vec<(i64, i64)> = decl.dims.iter().map(|b| (b.lo, b.hi)).collect();
    let mut out = Vec::new();
    if points.len() as u64 == decl.element_count() {
        out.push(bounds);
        return out;
    }
    while let Some(p) = points.first().cloned() {
        let mut best: Option<(u64, Vec<(i64, i64)>)> = None;
        for combo in 0..4usize.pow(rank as u32) {
            let kinds: Vec<usize> = (0..rank).map(|d| (combo / 4usize.pow(d as u32)) % 4).collect();
            if let Some(b) = grow(&points, &bounds, &p, &kinds) {
                let vol = b.iter().map(|(a, z)| (z - a + 1) as u64).product();
                if best.as_ref().is_none_or(|(v, _)| vol > *v) {
                    best = Some((vol, b));
                }
            }
        }
        let (_, b) = best.expect("the single point always fits");
        for q in crate::model::cartesian(b.clone()) {
            points.remove(&q);
        }
        out.push(b);
    }
    out
}

/// Kind per dimension: 0 whole, 1 suffix, 2 prefix, 3 single index.
fn grow(points: &BTreeSet<Vec<i64>>, bounds: &[(i64, i64)], p: &[i64], kinds: &[usize]) -> Option<Vec<(i64, i64)>> {
    let mut b: Vec<(i64, i64)> = kinds
        .iter()
        .enumerate()
        .map(|(d, k)| match k {
            0 => bounds[d],
            1 => (p[d], bounds[d].1),
            2 => (bounds[d].0, p[d]),
            _ => (p[d], p[d]),
        })
        .collect();
    let inside = |b: &[(i64, i64)]| crate::model::cartesian(b.to_vec()).all(|q| points.contains(&q));
    if !inside(&b) {
        return None;
    }
    for (d, k) in kinds.iter().enumerate() {
        loop {
            let mut slab = b.clone();
            match k {
                1 if b[d].0 > bounds[d].0 => slab[d] = (b[d].0 - 1, b[d].0 - 1),
                2 if b[d].1 < bounds[d].1 => slab[d] = (b[d].1 + 1, b[d].1 + 1),
                _ => break,
            }
            if !inside(&slab) {
                break;
            }
            if *k == 1 {
                b[d].0 -= 1;
            } else {
                b[d].1 += 1;
            }
        }
    }
    Some(b)
}

fn equation(decl: &TableDecl, shape: &Formula, reps: &[Rep], key: &[i64], region: &[(i64, i64)]) -> Equation {
    let lhs: Vec<LhsIndex> = decl
        .dims
        .iter()
        .zip(region)
        .enumerate()
        .map(|(d, (bd, (a, z)))| {
            let bound = |c| LhsIndex::Bound(Quantifier { var: dim_var(d), constraint: c });
            if *a == bd.lo && *z == bd.hi {
                bound(Constraint::All)
            } else if a == z {
                LhsIndex::Fixed(*a)
            } else if *a == bd.lo {
                bound(Constraint::Lt(z + 1))
            } else {
                bound(Constraint::Gt(a - 1))
            }
        })
        .collect();
    let mut s = 0;
    let rhs = shape.map_indices(&mut |i| {
        if let IndexExpr::Var { .. } = i {
            return i.clone();
        }
        let v = key[s];
        let r = reps[s];
        s += 1;
        match r {
            Rep::Lit => IndexExpr::Lit(v),
            Rep::Rel(d) => match &lhs[d] {
                LhsIndex::Fixed(k) => IndexExpr::Lit(k + v),
                LhsIndex::Bound(_) => IndexExpr::var(dim_var(d), v),
            },
        }
    });
    Equation::new(decl.name.clone(), lhs, rhs)
}

/// Splits `o` into calculations and annotations: an equation is an
/// annotation when it yields text and no equation refers to its table.
pub fn split_annotations(o: &Object) -> (Object, Object) {
    let mut referenced: BTreeSet<&str> = BTreeSet::new();
    for eq in &o.equations {
        referenced.extend(eq.rhs.tables());
    }
    let mut calc = Object::new();
    let mut notes = Object::new();
    for eq in &o.equations {
        let target = if eq.rhs.is_text_valued() && !referenced.contains(eq.table.as_str()) { &mut notes } else { &mut calc };
        target.add_equation(eq.clone());
    }
    for (name, decl) in &o.tables {
        let in_notes = notes.equations.iter().any(|e| &e.table == name);
        let in_calc = calc.equations.iter().any(|e| &e.table == name);
        if in_notes {
            notes.declare(decl.clone()).expect("fresh object");
        }
        if in_calc || !in_notes {
            calc.declare(decl.clone()).expect("fresh object");
        }
    }
    (calc, notes)
}
