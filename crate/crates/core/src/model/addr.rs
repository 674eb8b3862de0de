//! Cell addresses and cell references in A1 notation.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Largest column reachable with three letters (`ZZZ`).
pub const MAX_A1_COL: u32 = 18_278;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AddrError {
    #[error("address underflow: {sheet}!(col {col}, row {row}) lies outside the grid")]
    Underflow { sheet: String, col: i64, row: i64 },
    #[error("malformed cell reference at offset {pos}: {msg}")]
    Malformed { pos: usize, msg: String },
}

/// A two-dimensional displacement on a worksheet, `vector(dx, dy)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Vector {
    pub dx: i64,
    pub dy: i64,
}

impl Vector {
    pub const fn new(dx: i64, dy: i64) -> Self {
        Vector { dx, dy }
    }
}

impl std::ops::Add for Vector {
    type Output = Vector;
    fn add(self, rhs: Vector) -> Vector {
        Vector::new(self.dx + rhs.dx, self.dy + rhs.dy)
    }
}

impl std::ops::Neg for Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        Vector::new(-self.dx, -self.dy)
    }
}

/// A concrete position: sheet, 1-based column and 1-based row.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellAddr {
    pub sheet: String,
    pub col: u32,
    pub row: u32,
}

impl CellAddr {
    pub fn new(sheet: impl Into<String>, col: u32, row: u32) -> Self {
        CellAddr { sheet: sheet.into(), col, row }
    }

    /// Vector arithmetic on addresses. Fails when the result leaves the grid.
    pub fn shifted(&self, v: Vector) -> Result<CellAddr, AddrError> {
        let col = self.col as i64 + v.dx;
        let row = self.row as i64 + v.dy;
        if col < 1 || row < 1 || col > u32::MAX as i64 || row > u32::MAX as i64 {
            return Err(AddrError::Underflow { sheet: self.sheet.clone(), col, row });
        }
        Ok(CellAddr::new(self.sheet.clone(), col as u32, row as u32))
    }

    /// Vector from `self` to `other`, ignoring sheets.
    pub fn delta_to(&self, other: &CellAddr) -> Vector {
        Vector::new(other.col as i64 - self.col as i64, other.row as i64 - self.row as i64)
    }

    pub fn to_ref(&self) -> CellRef {
        CellRef { sheet: Some(self.sheet.clone()), col: self.col, row: self.row, col_abs: false, row_abs: false }
    }
}

impl fmt::Display for CellAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_sheet_prefix(f, &self.sheet)?;
        write!(f, "{}{}", col_letters(self.col), self.row)
    }
}

impl FromStr for CellAddr {
    type Err = AddrError;

    /// Parses `Sheet!D8`; the sheet prefix is mandatory and `$` markers are ignored.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let r: CellRef = s.parse()?;
        let sheet = r.sheet.ok_or_else(|| AddrError::Malformed { pos: 0, msg: "cell address needs a sheet prefix".into() })?;
        Ok(CellAddr::new(sheet, r.col, r.row))
    }
}

/// A reference as written in a formula: optional sheet, coordinates, and
/// absolute markers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellRef {
    pub sheet: Option<String>,
    pub col: u32,
    pub row: u32,
    pub col_abs: bool,
    pub row_abs: bool,
}

impl CellRef {
    pub fn relative(sheet: Option<String>, col: u32, row: u32) -> Self {
        CellRef { sheet, col, row, col_abs: false, row_abs: false }
    }

    pub fn absolute(sheet: Option<String>, col: u32, row: u32) -> Self {
        CellRef { sheet, col, row, col_abs: true, row_abs: true }
    }

    /// The addressed cell, with a missing sheet taken from `host_sheet`.
    pub fn resolve(&self, host_sheet: &str) -> CellAddr {
        CellAddr::new(self.sheet.as_deref().unwrap_or(host_sheet), self.col, self.row)
    }

    /// Formats without a sheet prefix.
    pub fn local_a1(&self) -> String {
        format!("{}{}{}{}", if self.col_abs { "$" } else { "" }, col_letters(self.col), if self.row_abs { "$" } else { "" }, self.row)
    }
}

impl fmt::Display for CellRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(sheet) = &self.sheet {
            write_sheet_prefix(f, sheet)?;
        }
        f.write_str(&self.local_a1())
    }
}

impl FromStr for CellRef {
    type Err = AddrError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (sheet, local, base) = split_sheet(s)?;
        let (r, used) = scan_local_a1(local.as_bytes())
            .ok_or_else(|| AddrError::Malformed { pos: base, msg: format!("expected `$?COL$?ROW`, found {local:?}") })?;
        if used != local.len() {
            return Err(AddrError::Malformed { pos: base + used, msg: "trailing characters".into() });
        }
        Ok(CellRef { sheet, ..r })
    }
}

/// A rectangular reference `start:end`. The sheet lives on `start`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellRange {
    pub start: CellRef,
    pub end: CellRef,
}

impl CellRange {
    /// Inclusive `(min_col, min_row, max_col, max_row)`.
    pub fn bounds(&self) -> super::Rect {
        (
            self.start.col.min(self.end.col),
            self.start.row.min(self.end.row),
            self.start.col.max(self.end.col),
            self.start.row.max(self.end.row),
        )
    }

    pub fn sheet(&self) -> Option<&str> {
        self.start.sheet.as_deref()
    }
}

impl fmt::Display for CellRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start, self.end.local_a1())
    }
}

/// Bijective base-26 column name: 1 → `A`, 27 → `AA`.
pub fn col_letters(mut col: u32) -> String {
    debug_assert!(col >= 1);
    let mut out = Vec::new();
    while col > 0 {
        let rem = (col - 1) % 26;
        out.push(b'A' + rem as u8);
        col = (col - 1) / 26;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

/// Inverse of [`col_letters`]; accepts lower case, at most three letters.
pub fn letters_col(letters: &str) -> Option<u32> {
    if letters.is_empty() || letters.len() > 3 {
        return None;
    }
    letters.bytes().try_fold(0u32, |acc, b| b.is_ascii_alphabetic().then(|| acc * 26 + (b.to_ascii_uppercase() - b'A') as u32 + 1))
}

/// Scans `$?LETTERS$?DIGITS` from the start of `bytes`; returns the reference
/// (without sheet) and the number of bytes consumed.
pub(crate) fn scan_local_a1(bytes: &[u8]) -> Option<(CellRef, usize)> {
    let mut i = 0;
    let col_abs = bytes.first() == Some(&b'$');
    if col_abs {
        i += 1;
    }
    let col_start = i;
    while i < bytes.len() && bytes[i].is_ascii_alphabetic() {
        i += 1;
    }
    let col = letters_col(std::str::from_utf8(&bytes[col_start..i]).ok()?)?;
    let row_abs = bytes.get(i) == Some(&b'$');
    if row_abs {
        i += 1;
    }
    let row_start = i;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i == row_start || i - row_start > 9 {
        return None;
    }
    let row: u32 = std::str::from_utf8(&bytes[row_start..i]).ok()?.parse().ok()?;
    if row == 0 {
        return None;
    }
    Some((CellRef { sheet: None, col, row, col_abs, row_abs }, i))
}

fn split_sheet(s: &str) -> Result<(Option<String>, &str, usize), AddrError> {
    if let Some(rest) = s.strip_prefix('\'') {
        let mut name = String::new();
        let mut chars = rest.char_indices().peekable();
        while let Some((i, c)) = chars.next() {
            if c == '\'' {
                if matches!(chars.peek(), Some((_, '\''))) {
                    chars.next();
                    name.push('\'');
                    continue;
                }
                let after = &rest[i + 1..];
                return match after.strip_prefix('!') {
                    Some(local) => Ok((Some(name), local, i + 3)),
                    None => Err(AddrError::Malformed { pos: i + 2, msg: "expected `!` after quoted sheet".into() }),
                };
            }
            name.push(c);
        }
        return Err(AddrError::Malformed { pos: s.len(), msg: "unterminated sheet quote".into() });
    }
    match s.rfind('!') {
        Some(i) => {
            let sheet = &s[..i];
            if sheet.is_empty() {
                return Err(AddrError::Malformed { pos: 0, msg: "empty sheet name".into() });
            }
            Ok((Some(sheet.to_string()), &s[i + 1..], i + 1))
        }
        None => Ok((None, s, 0)),
    }
}

pub(crate) const RESERVED_WORDS: &[&str] = &["all", "be", "by", "grid", "let", "mapping", "row", "skip", "to", "union", "vector"];

/// True when a sheet name must be quoted to survive a formula round trip.
pub fn sheet_needs_quotes(name: &str) -> bool {
    let mut chars = name.chars();
    let plain = match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => chars.all(|c| c.is_ascii_alphanumeric() || c == '_'),
        _ => false,
    };
    if !plain {
        return true;
    }
    let looks_a1 = scan_local_a1(name.as_bytes()).is_some_and(|(_, n)| n == name.len());
    looks_a1 || looks_r1c1(name) || RESERVED_WORDS.contains(&name)
}

fn looks_r1c1(name: &str) -> bool {
    let b = name.as_bytes();
    if b.first().map(u8::to_ascii_uppercase) != Some(b'R') {
        return false;
    }
    let mut i = 1;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    if b.get(i).map(u8::to_ascii_uppercase) != Some(b'C') {
        return false;
    }
    b[i + 1..].iter().all(u8::is_ascii_digit)
}

pub(crate) fn write_sheet_prefix(f: &mut impl fmt::Write, sheet: &str) -> fmt::Result {
    if sheet_needs_quotes(sheet) {
        write!(f, "'{}'!", sheet.replace('\'', "''"))
    } else {
        write!(f, "{sheet}!")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Enumerates column names in order, independent of the arithmetic in
    /// `col_letters`: A..Z, then every two-letter name, then three.
    fn enumerate_letters(limit: usize) -> Vec<String> {
        let alphabet: Vec<char> = ('A'..='Z').collect();
        let mut out: Vec<String> = alphabet.iter().map(|c| c.to_string()).collect();
        let mut prev = out.clone();
        while out.len() < limit {
            let next: Vec<String> = prev.iter().flat_map(|p| alphabet.iter().map(move |c| format!("{p}{c}"))).collect();
            out.extend(next.iter().cloned());
            prev = next;
        }
        out.truncate(limit);
        out
    }

    #[test]
    fn letters_match_enumeration() {
        let names = enumerate_letters(MAX_A1_COL as usize);
        for (i, name) in names.iter().enumerate() {
            let col = i as u32 + 1;
            assert_eq!(&col_letters(col), name);
            assert_eq!(letters_col(name), Some(col));
        }
        assert_eq!(names[26], "AA");
        assert_eq!(names[24], "Y");
        assert_eq!(names.last().unwrap(), "ZZZ");
    }

    #[test]
    fn vector_arithmetic() {
        let d8: CellAddr = "Lets!D8".parse().unwrap();
        assert_eq!(d8.shifted(Vector::new(21, 0)).unwrap().to_string(), "Lets!Y8");
        let a1 = CellAddr::new("Lets", 1, 1);
        assert_eq!(a1.shifted(Vector::default()).unwrap(), a1);
        assert!(matches!(a1.shifted(Vector::new(-1, 0)), Err(AddrError::Underflow { .. })));
    }

    #[test]
    fn format_and_parse_examples() {
        assert_eq!(CellAddr::new("Lets", 4, 8).to_string(), "Lets!D8");
        let r: CellRef = "Sheet1!$A$2".parse().unwrap();
        assert_eq!(r, CellRef::absolute(Some("Sheet1".into()), 1, 2));
        assert_eq!(r.to_string(), "Sheet1!$A$2");
        let q: CellRef = "'My ''Data'''!b$7".parse().unwrap();
        assert_eq!(q.sheet.as_deref(), Some("My 'Data'"));
        assert_eq!(q.to_string(), "'My ''Data'''!B$7");
        let e = "Sheet1!A0".parse::<CellRef>().unwrap_err();
        assert!(matches!(e, AddrError::Malformed { pos: 7, .. }));
        assert!("D8".parse::<CellAddr>().is_err());
        assert!("Lets!D8x".parse::<CellRef>().is_err());
    }

    #[test]
    fn quoting_rules() {
        assert!(!sheet_needs_quotes("Sheet1"));
        assert!(sheet_needs_quotes("A1"));
        assert!(sheet_needs_quotes("R1C1"));
        assert!(sheet_needs_quotes("rc"));
        assert!(sheet_needs_quotes("My Sheet"));
        assert!(sheet_needs_quotes("union"));
        assert!(sheet_needs_quotes("1st"));
    }

    fn sheet_name() -> impl Strategy<Value = String> {
        prop_oneof!["[A-Za-z_][A-Za-z0-9_]{0,6}", "[a-z ']{1,6}", Just("A1".to_string())]
    }

    proptest! {
        #[test]
        fn a1_round_trip(sheet in sheet_name(), col in 1u32..=MAX_A1_COL, row in 1u32..2_000_000,
                         ca in any::<bool>(), ra in any::<bool>()) {
            let r = CellRef { sheet: Some(sheet.clone()), col, row, col_abs: ca, row_abs: ra };
            prop_assert_eq!(r.to_string().parse::<CellRef>().unwrap(), r);
            let a = CellAddr::new(sheet, col, row);
            prop_assert_eq!(a.to_string().parse::<CellAddr>().unwrap(), a);
        }

        #[test]
        fn shifts_compose(col in 1u32..500, row in 1u32..500,
                          (u1, u2) in (-200i64..200, -200i64..200), (v1, v2) in (-200i64..200, -200i64..200)) {
            let a = CellAddr::new("S", col, row);
            let u = Vector::new(u1, u2);
            let v = Vector::new(v1, v2);
            if let Ok(mid) = a.shifted(u) {
                if let Ok(end) = mid.shifted(v) {
                    prop_assert_eq!(end, a.shifted(u + v).unwrap());
                }
            }
        }
    }
}
