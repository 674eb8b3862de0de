//! Formula evaluation over a workbook. Cells are computed in dependency
//! order; cells on a cycle, division by zero and type mismatches become
//! error values rather than failures.

use std::collections::HashMap;
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::emitter::format_number;
use crate::model::{BinOp, Cell, CellAddr, CellRange, CellRef, Expr, Formula, Func, Workbook};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorValue {
    Cycle,
    DivZero,
    Value,
    Ref,
}

impl fmt::Display for ErrorValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorValue::Cycle => "#CYCLE!",
            ErrorValue::DivZero => "#DIV/0!",
            ErrorValue::Value => "#VALUE!",
            ErrorValue::Ref => "#REF!",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Text(String),
    Blank,
    Error(ErrorValue),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Number(v) => f.write_str(&format_number(*v)),
            Value::Text(s) => f.write_str(s),
            Value::Blank => Ok(()),
            Value::Error(e) => write!(f, "{e}"),
        }
    }
}

impl Value {
    fn number(&self) -> Result<f64, ErrorValue> {
        match self {
            Value::Number(v) => Ok(*v),
            Value::Blank => Ok(0.0),
            Value::Text(s) => s.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or(ErrorValue::Value),
            Value::Error(e) => Err(*e),
        }
    }

    fn text(&self) -> Result<String, ErrorValue> {
        match self {
            Value::Number(v) => Ok(format_number(*v)),
            Value::Text(s) => Ok(s.clone()),
            Value::Blank => Ok(String::new()),
            Value::Error(e) => Err(*e),
        }
    }
}

/// Values of every non-empty cell.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Evaluation {
    values: HashMap<CellAddr, Value>,
}

impl Evaluation {
    /// Blank for empty cells.
    pub fn get(&self, addr: &CellAddr) -> Value {
        self.values.get(addr).cloned().unwrap_or(Value::Blank)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CellAddr, &Value)> {
        self.values.iter()
    }
}

fn range_addrs<'w>(w: &'w Workbook, r: &CellRange, host: &str) -> Option<impl Iterator<Item = CellAddr> + 'w> {
    let sheet_name = r.sheet().unwrap_or(host).to_string();
    let sheet = w.sheet(&sheet_name)?;
    Some(sheet.cells_in(r.bounds()).map(move |((row, col), _)| CellAddr::new(sheet_name.clone(), col, row)))
}

/// Evaluates every formula in `w`.
pub fn evaluate(w: &Workbook) -> Evaluation {
    let mut values = HashMap::with_capacity(w.cell_count());
    let mut graph: DiGraph<(CellAddr, &Formula), ()> = DiGraph::new();
    let mut nodes: HashMap<CellAddr, NodeIndex> = HashMap::new();
    for (addr, cell) in w.iter() {
        match cell {
            Cell::Number(v) => {
                values.insert(addr, Value::Number(*v));
            }
            Cell::Text(s) => {
                values.insert(addr, Value::Text(s.clone()));
            }
            Cell::Formula(f) => {
                let n = graph.add_node((addr.clone(), f));
                nodes.insert(addr, n);
            }
        }
    }
    let mut edges = Vec::new();
    for n in graph.node_indices() {
        let (host, f) = &graph[n];
        f.visit(&mut |e| match e {
            Expr::Cell(r) => {
                if let Some(d) = nodes.get(&r.resolve(&host.sheet)) {
                    edges.push((n, *d));
                }
            }
            Expr::Range(r) => {
                if let Some(addrs) = range_addrs(w, r, &host.sheet) {
                    edges.extend(addrs.filter_map(|a| nodes.get(&a)).map(|d| (n, *d)));
                }
            }
            _ => {}
        });
    }
    for (a, b) in edges {
        graph.add_edge(a, b, ());
    }
    // Components come out dependencies first.
    for scc in tarjan_scc(&graph) {
        let cyclic = scc.len() > 1 || graph.contains_edge(scc[0], scc[0]);
        for n in scc {
            let (host, f) = &graph[n];
            let v = if cyclic { Value::Error(ErrorValue::Cycle) } else { Ctx { w, values: &values, host }.eval(f) };
            values.insert(host.clone(), v);
        }
    }
    Evaluation { values }
}

struct Ctx<'a> {
    w: &'a Workbook,
    values: &'a HashMap<CellAddr, Value>,
    host: &'a CellAddr,
}

impl Ctx<'_> {
    fn cell(&self, r: &CellRef) -> Value {
        let a = r.resolve(&self.host.sheet);
        if self.w.sheet(&a.sheet).is_none() {
            return Value::Error(ErrorValue::Ref);
        }
        self.values.get(&a).cloned().unwrap_or(Value::Blank)
    }

    fn range(&self, r: &CellRange) -> Result<Vec<Value>, ErrorValue> {
        let addrs = range_addrs(self.w, r, &self.host.sheet).ok_or(ErrorValue::Ref)?;
        Ok(addrs.map(|a| self.values.get(&a).cloned().unwrap_or(Value::Blank)).collect())
    }

    fn eval(&self, f: &Formula) -> Value {
        self.value(f).unwrap_or_else(Value::Error)
    }

    fn value(&self, f: &Formula) -> Result<Value, ErrorValue> {
        Ok(match f {
            Expr::Number(n) => Value::Number(n.0),
            Expr::Text(s) => Value::Text(s.clone()),
            Expr::Cell(r) => match self.cell(r) {
                Value::Error(e) => return Err(e),
                v => v,
            },
            Expr::Range(_) | Expr::Index(_) | Expr::Element { .. } => return Err(ErrorValue::Value),
            Expr::Neg(x) => Value::Number(-self.value(x)?.number()?),
            Expr::Binary { op, lhs, rhs } => {
                let (a, b) = (self.value(lhs)?, self.value(rhs)?);
                binary(*op, &a, &b)?
            }
            Expr::Call { func, args } => self.call(*func, args)?,
        })
    }

    /// Arguments flattened: ranges contribute their cells, anything else
    /// its single value.
    fn spread(&self, args: &[Formula]) -> Result<Vec<(Value, bool)>, ErrorValue> {
        let mut out = Vec::new();
        for a in args {
            match a {
                Expr::Range(r) => out.extend(self.range(r)?.into_iter().map(|v| (v, true))),
                other => out.push((self.value(other)?, false)),
            }
        }
        Ok(out)
    }

    fn numbers(&self, args: &[Formula]) -> Result<Vec<f64>, ErrorValue> {
        let mut out = Vec::new();
        for (v, from_range) in self.spread(args)? {
            match (v, from_range) {
                (Value::Error(e), _) => return Err(e),
                (Value::Number(n), _) => out.push(n),
                (v, false) => out.push(v.number()?),
                (_, true) => {}
            }
        }
        Ok(out)
    }

    fn call(&self, func: Func, args: &[Formula]) -> Result<Value, ErrorValue> {
        let fold = |xs: Vec<f64>, pick: fn(f64, f64) -> f64| xs.into_iter().reduce(pick).unwrap_or(0.0);
        Ok(match func {
            Func::Sum => Value::Number(self.numbers(args)?.into_iter().sum()),
            Func::Min => Value::Number(fold(self.numbers(args)?, f64::min)),
            Func::Max => Value::Number(fold(self.numbers(args)?, f64::max)),
            Func::If => {
                let [c, t, e] = args else { return Err(ErrorValue::Value) };
                let branch = if self.value(c)?.number()? != 0.0 { t } else { e };
                self.value(branch)?
            }
            Func::CountIf => {
                let [range, cond] = args else { return Err(ErrorValue::Value) };
                let cells = match range {
                    Expr::Range(r) => self.range(r)?,
                    Expr::Cell(r) => vec![self.cell(r)],
                    _ => return Err(ErrorValue::Value),
                };
                let cond = self.value(cond)?.text()?;
                Value::Number(eval_countif(&cells, &cond) as f64)
            }
        })
    }
}

fn binary(op: BinOp, a: &Value, b: &Value) -> Result<Value, ErrorValue> {
    use std::cmp::Ordering;
    let num = |v: f64| if v.is_finite() { Ok(Value::Number(v)) } else { Err(ErrorValue::Value) };
    match op {
        BinOp::Add => num(a.number()? + b.number()?),
        BinOp::Sub => num(a.number()? - b.number()?),
        BinOp::Mul => num(a.number()? * b.number()?),
        BinOp::Div => {
            let d = b.number()?;
            if d == 0.0 {
                Err(ErrorValue::DivZero)
            } else {
                num(a.number()? / d)
            }
        }
        BinOp::Concat => Ok(Value::Text(a.text()? + &b.text()?)),
        _ => {
            let ord = compare(a, b)?;
            let hold = match op {
                BinOp::Eq => ord == Ordering::Equal,
                BinOp::Ne => ord != Ordering::Equal,
                BinOp::Lt => ord == Ordering::Less,
                BinOp::Gt => ord == Ordering::Greater,
                BinOp::Le => ord != Ordering::Greater,
                BinOp::Ge => ord != Ordering::Less,
                _ => unreachable!("arithmetic handled above"),
            };
            num(if hold { 1.0 } else { 0.0 })
        }
    }
}

/// Numbers sort before text; a blank acts as 0 or "" to match the other side.
fn compare(a: &Value, b: &Value) -> Result<std::cmp::Ordering, ErrorValue> {
    use Value::*;
    Ok(match (a, b) {
        (Error(e), _) | (_, Error(e)) => return Err(*e),
        (Text(x), Text(y)) => x.cmp(y),
        (Text(x), Blank) => x.as_str().cmp(""),
        (Blank, Text(y)) => "".cmp(y.as_str()),
        (Text(_), _) => std::cmp::Ordering::Greater,
        (_, Text(_)) => std::cmp::Ordering::Less,
        _ => a.number()?.total_cmp(&b.number()?),
    })
}

/// Counts cells equal to `condition`: numerically when it reads as a number,
/// otherwise by exact, case-sensitive text. An empty condition counts
/// blank cells.
pub fn eval_countif(cells: &[Value], condition: &str) -> usize {
    let as_number = condition.trim().parse::<f64>().ok().filter(|v| v.is_finite());
    cells
        .iter()
        .filter(|v| match (v, as_number) {
            (Value::Number(n), Some(c)) => *n == c,
            (Value::Text(s), Some(c)) => s == condition || s.trim().parse::<f64>().ok() == Some(c),
            (Value::Text(s), None) => s == condition,
            (Value::Blank, _) => condition.is_empty(),
            _ => false,
        })
        .count()
}
