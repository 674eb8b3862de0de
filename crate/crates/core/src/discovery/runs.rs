use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::model::{CellAddr, CellRange, CellRef, Expr, Formula, Sheet, Workbook};
use crate::notation::show_sheet_formula_r1c1;

/// A formula with every relative reference written as an offset from its
/// host cell. Two cells hold the same formula iff their normal forms are
/// equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NormalForm(pub String);

impl fmt::Display for NormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Drops sheet prefixes that name the host sheet.
fn strip_host(f: &Formula, host: &str) -> Formula {
    let fix = |r: &CellRef| {
        let mut r = r.clone();
        if r.sheet.as_deref() == Some(host) {
            r.sheet = None;
        }
        r
    };
    match f {
        Expr::Cell(r) => Expr::Cell(fix(r)),
        Expr::Range(r) => Expr::Range(CellRange { start: fix(&r.start), end: fix(&r.end) }),
        Expr::Binary { op, lhs, rhs } => Expr::binary(*op, strip_host(lhs, host), strip_host(rhs, host)),
        Expr::Neg(x) => Expr::Neg(Box::new(strip_host(x, host))),
        Expr::Call { func, args } => Expr::call(*func, args.iter().map(|a| strip_host(a, host)).collect()),
        other => other.clone(),
    }
}

pub fn normalize_formula(f: &Formula, at: &CellAddr) -> NormalForm {
    NormalForm(show_sheet_formula_r1c1(&strip_host(f, &at.sheet), at))
}

/// A rectangle of cells on one sheet sharing a normal form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Run {
    pub sheet: String,
    /// Inclusive `(min_col, min_row, max_col, max_row)`.
    pub rect: crate::model::Rect,
    pub form: NormalForm,
}

impl Run {
    pub fn width(&self) -> u32 {
        self.rect.2 - self.rect.0 + 1
    }

    pub fn height(&self) -> u32 {
        self.rect.3 - self.rect.1 + 1
    }

    pub fn contains(&self, col: u32, row: u32) -> bool {
        col >= self.rect.0 && col <= self.rect.2 && row >= self.rect.1 && row <= self.rect.3
    }

    pub fn range(&self) -> String {
        let a = CellAddr::new(self.sheet.clone(), self.rect.0, self.rect.1);
        let b = CellAddr::new(self.sheet.clone(), self.rect.2, self.rect.3);
        format!("{a}:{}", b.to_ref().local_a1())
    }
}

/// The class shared by every literal cell that takes part in runs.
pub const CONSTANT: &str = "<constant>";

/// Every cell some formula refers to, directly or through a range.
pub fn referenced_cells(w: &Workbook) -> BTreeSet<CellAddr> {
    let mut out = BTreeSet::new();
    for (host, cell) in w.iter() {
        if let crate::model::Cell::Formula(f) = cell {
            f.visit(&mut |e| match e {
                Expr::Cell(r) => {
                    out.insert(r.resolve(&host.sheet));
                }
                Expr::Range(r) => {
                    let sheet = r.sheet().unwrap_or(&host.sheet);
                    if let Some(s) = w.sheet(sheet) {
                        for ((row, col), _) in s.cells_in(r.bounds()) {
                            out.insert(CellAddr::new(sheet, col, row));
                        }
                    }
                }
                _ => {}
            });
        }
    }
    out
}

/// Text literals that no formula reads.
pub fn captions(w: &Workbook) -> BTreeSet<CellAddr> {
    let used = referenced_cells(w);
    w.iter().filter(|(a, c)| matches!(c, crate::model::Cell::Text(_)) && !used.contains(a)).map(|(a, _)| a).collect()
}

/// Normal form per run-forming cell of `sheet`: formulas by their relative
/// form, numbers and referenced text by [`CONSTANT`].
pub(crate) fn classes(sheet: &Sheet, skip: &dyn Fn(u32, u32) -> bool) -> HashMap<(u32, u32), NormalForm> {
    let mut out = HashMap::new();
    for (&(row, col), cell) in &sheet.cells {
        if skip(col, row) {
            continue;
        }
        let form = match cell {
            crate::model::Cell::Formula(f) => normalize_formula(f, &CellAddr::new(sheet.name.clone(), col, row)),
            _ => NormalForm(CONSTANT.into()),
        };
        out.insert((row, col), form);
    }
    out
}

/// Maximal rectangles of equal normal form. Seeds are taken in row-major
/// order; each grows right then down and also down then right, keeping the
/// larger (right first on ties). Captions are left out.
pub fn detect_runs(w: &Workbook) -> Vec<Run> {
    let caps = captions(w);
    let mut out = Vec::new();
    for sheet in &w.sheets {
        let name = sheet.name.clone();
        let skip = |c: u32, r: u32| caps.contains(&CellAddr::new(name.clone(), c, r));
        out.extend(runs_in(sheet, classes(sheet, &skip)));
    }
    out
}

pub(crate) fn runs_in(sheet: &Sheet, class: HashMap<(u32, u32), NormalForm>) -> Vec<Run> {
    let mut claimed: BTreeSet<(u32, u32)> = BTreeSet::new();
    let mut seeds: Vec<&(u32, u32)> = class.keys().collect();
    seeds.sort();
    let mut out = Vec::new();
    for &(row, col) in seeds {
        if claimed.contains(&(row, col)) {
            continue;
        }
        let form = &class[&(row, col)];
        let free = |r: u32, c: u32| !claimed.contains(&(r, c)) && class.get(&(r, c)) == Some(form);
        let row_ok = |r: u32, c0: u32, c1: u32| (c0..=c1).all(|c| free(r, c));
        let col_ok = |c: u32, r0: u32, r1: u32| (r0..=r1).all(|r| free(r, c));
        let mut w1 = 0;
        while free(row, col + w1 + 1) {
            w1 += 1;
        }
        let mut h1 = 0;
        while row_ok(row + h1 + 1, col, col + w1) {
            h1 += 1;
        }
        let mut h2 = 0;
        while free(row + h2 + 1, col) {
            h2 += 1;
        }
        let mut w2 = 0;
        while col_ok(col + w2 + 1, row, row + h2) {
            w2 += 1;
        }
        let (w, h) = if (w2 + 1) * (h2 + 1) > (w1 + 1) * (h1 + 1) { (w2, h2) } else { (w1, h1) };
        for r in row..=row + h {
            for c in col..=col + w {
                claimed.insert((r, c));
            }
        }
        out.push(Run { sheet: sheet.name.clone(), rect: (col, row, col + w, row + h), form: form.clone() });
    }
    out
}

/// Where a run's caption search ended.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Found {
    Caption(CellAddr),
    Run(usize),
    Nothing,
}

/// Nearest text above the run's first column, else left along its first
/// row. Blank cells are passed over; meeting another run directly adjacent
/// adopts that run's caption; meeting anything else stops the search.
fn search(runs: &[Run], at: &HashMap<(String, u32, u32), usize>, caps: &BTreeSet<CellAddr>, w: &Workbook, i: usize) -> Found {
    let run = &runs[i];
    let (c0, r0, _, _) = run.rect;
    let probe = |col: u32, row: u32, adjacent: bool| -> Option<Found> {
        let addr = CellAddr::new(run.sheet.clone(), col, row);
        if caps.contains(&addr) {
            return Some(Found::Caption(addr));
        }
        if let Some(&j) = at.get(&(run.sheet.clone(), col, row)) {
            return Some(if adjacent { Found::Run(j) } else { Found::Nothing });
        }
        w.get(&addr).map(|_| Found::Nothing)
    };
    for row in (1..r0).rev() {
        match probe(c0, row, row + 1 == r0) {
            Some(Found::Nothing) => break,
            Some(f) => return f,
            None => {}
        }
    }
    for col in (1..c0).rev() {
        match probe(col, r0, col + 1 == c0) {
            Some(Found::Nothing) => break,
            Some(f) => return f,
            None => {}
        }
    }
    Found::Nothing
}

/// The caption cell each run belongs to, following adjacent runs.
pub fn run_captions(w: &Workbook, runs: &[Run]) -> Vec<Option<CellAddr>> {
    let caps = captions(w);
    let mut at = HashMap::new();
    for (i, r) in runs.iter().enumerate() {
        for row in r.rect.1..=r.rect.3 {
            for col in r.rect.0..=r.rect.2 {
                at.insert((r.sheet.clone(), col, row), i);
            }
        }
    }
    let mut memo: Vec<Option<Option<CellAddr>>> = vec![None; runs.len()];
    let mut order: Vec<usize> = (0..runs.len()).collect();
    // Adopted runs lie above or to the left, so settle those first.
    order.sort_by_key(|&i| (runs[i].sheet.clone(), runs[i].rect.1, runs[i].rect.0));
    for i in order {
        let v = match search(runs, &at, &caps, w, i) {
            Found::Caption(a) => Some(a),
            Found::Run(j) => memo[j].clone().flatten(),
            Found::Nothing => None,
        };
        memo[i] = Some(v);
    }
    memo.into_iter().map(Option::flatten).collect()
}

/// Turns caption text into an identifier.
pub fn sanitize(text: &str) -> String {
    let mut s = String::new();
    let mut gap = false;
    for ch in text.trim().chars() {
        if ch.is_ascii_alphanumeric() {
            if gap && !s.is_empty() {
                s.push('_');
            }
            s.push(ch);
            gap = false;
        } else {
            gap = true;
        }
    }
    if s.starts_with(|c: char| c.is_ascii_digit()) {
        s.insert_str(0, "T_");
    }
    if crate::model::addr::RESERVED_WORDS.iter().any(|w| w.eq_ignore_ascii_case(&s))
        || crate::model::Func::from_name(&s).is_some()
        || crate::model::Orientation::from_name(&s).is_some()
        || looks_like_cell(&s)
    {
        s.push('_');
    }
    s
}

/// Names such as `AB12` or `R1C1` would read as cell references.
fn looks_like_cell(s: &str) -> bool {
    let letters = s.chars().take_while(|c| c.is_ascii_alphabetic()).count();
    (letters > 0 && letters <= 3 && s.len() > letters && s[letters..].chars().all(|c| c.is_ascii_digit()))
        || (s.starts_with(['R', 'r']) && s[1..].contains(['C', 'c']))
}

/// Allocates unique names: `base`, `base_2`, `base_3`, ...
#[derive(Debug, Default)]
pub struct Names {
    used: BTreeSet<String>,
    fallback: usize,
}

impl Names {
    pub fn reserve(&mut self, name: &str) {
        self.used.insert(name.to_string());
    }

    pub fn fresh(&mut self, base: &str) -> String {
        if base.is_empty() {
            loop {
                self.fallback += 1;
                let n = format!("T{}", self.fallback);
                if self.used.insert(n.clone()) {
                    return n;
                }
            }
        }
        let mut n = base.to_string();
        let mut k = 1;
        while self.used.contains(&n) {
            k += 1;
            n = format!("{base}_{k}");
        }
        self.used.insert(n.clone());
        n
    }
}

/// One name per run from its caption; `overrides` (by run range text)
/// win. Runs without a caption get `T1`, `T2`, ...
pub fn guess_names(w: &Workbook, runs: &[Run], overrides: &BTreeMap<String, String>) -> Vec<String> {
    let caps = run_captions(w, runs);
    let mut names = Names::default();
    for n in overrides.values() {
        names.reserve(n);
    }
    runs.iter()
        .zip(caps)
        .map(|(r, cap)| {
            if let Some(n) = overrides.get(&r.range()) {
                return n.clone();
            }
            let base = cap
                .and_then(|a| match w.get(&a) {
                    Some(crate::model::Cell::Text(t)) => Some(sanitize(t)),
                    _ => None,
                })
                .unwrap_or_default();
            names.fresh(&base)
        })
        .collect()
}
