//! C ABI over the `sheetmodel` library.
//!
//! Objects cross the boundary as opaque handles released by their `*_free`
//! function. Every fallible call returns an [`SmStatus`]; on failure the
//! message is available from [`sm_last_error`] on the same thread. Strings
//! returned through `char **` belong to the caller and are released with
//! [`sm_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::OnceLock;

use sheetmodel::crosstab::{insert_crosstab, parse_spec};
use sheetmodel::discovery::{discover, layout_csv, parse_overrides, Discovery};
use sheetmodel::emitter::{dump_grid, emit_xml, read_csv, read_csv_grid, read_xml};
use sheetmodel::evaluator::{evaluate, Evaluation, Value};
use sheetmodel::model::{CellAddr, Workbook};
use sheetmodel::notation::{parse_program, Program};
use sheetmodel::pipeline::{compile, LayoutSheet};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Model text, formula or address did not parse.
    Parse = 3,
    /// Instantiation, layout or mapping failed.
    Compile = 4,
    /// Workbook or CSV input could not be read.
    Read = 5,
    Discovery = 6,
    Crosstab = 7,
    /// Index out of range or no such sheet.
    NotFound = 8,
    /// The cell value is not of the requested kind.
    WrongType = 9,
    /// The library panicked; the handle arguments should not be reused.
    Panic = 99,
}

/// Kind of an evaluated cell value.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmValueKind {
    Blank = 0,
    Number = 1,
    Text = 2,
    Error = 3,
}

/// A workbook; evaluated lazily on first value query.
pub struct SmWorkbook {
    workbook: Workbook,
    evaluation: OnceLock<Evaluation>,
}

impl SmWorkbook {
    fn new(workbook: Workbook) -> *mut SmWorkbook {
        Box::into_raw(Box::new(SmWorkbook { workbook, evaluation: OnceLock::new() }))
    }

    fn value(&self, at: &CellAddr) -> Value {
        self.evaluation.get_or_init(|| evaluate(&self.workbook)).get(at)
    }
}

/// A parsed model file.
pub struct SmModel {
    program: Program,
}

/// The result of structure discovery.
pub struct SmDiscovery {
    discovery: Discovery,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(SmStatus, String);

type Outcome = Result<(), Failure>;

fn fail(status: SmStatus, e: impl std::fmt::Display) -> Failure {
    Failure(status, e.to_string())
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, recording its message and catching panics.
fn guard(f: impl FnOnce() -> Outcome) -> SmStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SmStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            set_error(format!("internal error: {}", msg.unwrap_or_default()));
            SmStatus::Panic
        }
    }
}

unsafe fn arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(SmStatus::NullArgument, format!("`{name}` is null")))
}

unsafe fn slot<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| fail(SmStatus::NullArgument, format!("`{name}` is null")))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(SmStatus::NullArgument, format!("`{name}` is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(SmStatus::InvalidUtf8, format!("`{name}` is not UTF-8")))
}

unsafe fn optional_text<'a>(p: *const c_char, name: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, name).map(Some)
    }
}

fn owned(s: impl Into<String>) -> *mut c_char {
    let s: String = s.into();
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

fn address(s: &str) -> Result<CellAddr, Failure> {
    s.parse().map_err(|e| fail(SmStatus::Parse, format!("`{s}`: {e}")))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn sm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn sm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been released.
#[no_mangle]
pub unsafe extern "C" fn sm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---- workbooks ----------------------------------------------------------

/// Reads SpreadsheetML 2003 bytes.
///
/// # Safety
/// `bytes` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_workbook_read_xml(bytes: *const u8, len: usize, out: *mut *mut SmWorkbook) -> SmStatus {
    guard(|| {
        let out = slot(out, "out")?;
        let data = if len == 0 { &[][..] } else { std::slice::from_raw_parts(arg(bytes, "bytes")?, len) };
        let w = read_xml(data).map_err(|e| fail(SmStatus::Read, e))?;
        *out = SmWorkbook::new(w);
        Ok(())
    })
}

/// Reads CSV text into a one-sheet workbook named `sheet`.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_workbook_read_csv(csv: *const c_char, sheet: *const c_char, out: *mut *mut SmWorkbook) -> SmStatus {
    guard(|| {
        let out = slot(out, "out")?;
        let w = read_csv(text(csv, "csv")?, text(sheet, "sheet")?).map_err(|e| fail(SmStatus::Read, e))?;
        *out = SmWorkbook::new(w);
        Ok(())
    })
}

/// Releases a workbook. Null is ignored.
///
/// # Safety
/// `wb` must come from this library and not have been released.
#[no_mangle]
pub unsafe extern "C" fn sm_workbook_free(wb: *mut SmWorkbook) {
    if !wb.is_null() {
        drop(Box::from_raw(wb));
    }
}

/// Writes the workbook as SpreadsheetML 2003 text.
///
/// # Safety
/// `wb` must be a live workbook; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_workbook_emit_xml(wb: *const SmWorkbook, out: *mut *mut c_char) -> SmStatus {
    guard(|| {
        let (wb, out) = (arg(wb, "wb")?, slot(out, "out")?);
        *out = owned(String::from_utf8_lossy(&emit_xml(&wb.workbook)));
        Ok(())
    })
}

/// Number of non-empty cells, or 0 for null.
///
/// # Safety
/// `wb` must be null or a live workbook.
#[no_mangle]
pub unsafe extern "C" fn sm_workbook_cell_count(wb: *const SmWorkbook) -> usize {
    wb.as_ref().map_or(0, |w| w.workbook.cell_count())
}

/// Number of sheets, or 0 for null.
///
/// # Safety
/// `wb` must be null or a live workbook.
#[no_mangle]
pub unsafe extern "C" fn sm_workbook_sheet_count(wb: *const SmWorkbook) -> usize {
    wb.as_ref().map_or(0, |w| w.workbook.sheets.len())
}

/// Name of sheet `index`, counting from 0.
///
/// # Safety
/// `wb` must be a live workbook; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_workbook_sheet_name(wb: *const SmWorkbook, index: usize, out: *mut *mut c_char) -> SmStatus {
    guard(|| {
        let (wb, out) = (arg(wb, "wb")?, slot(out, "out")?);
        let sheet = wb.workbook.sheets.get(index).ok_or_else(|| fail(SmStatus::NotFound, format!("no sheet {index}")))?;
        *out = owned(sheet.name.as_str());
        Ok(())
    })
}

/// A sheet as tab-separated rows of cell contents, formulas in A1 form.
///
/// # Safety
/// `wb` must be a live workbook; `sheet` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sm_workbook_dump(wb: *const SmWorkbook, sheet: *const c_char, out: *mut *mut c_char) -> SmStatus {
    guard(|| {
        let (wb, sheet, out) = (arg(wb, "wb")?, text(sheet, "sheet")?, slot(out, "out")?);
        if wb.workbook.sheet(sheet).is_none() {
            return Err(fail(SmStatus::NotFound, format!("no sheet `{sheet}`")));
        }
        *out = owned(dump_grid(&wb.workbook, sheet));
        Ok(())
    })
}

/// Kind of the evaluated value at `addr` (`Sheet!A1`).
///
/// # Safety
/// `wb` must be a live workbook; `addr` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sm_workbook_value_kind(wb: *const SmWorkbook, addr: *const c_char, out: *mut SmValueKind) -> SmStatus {
    guard(|| {
        let (wb, at, out) = (arg(wb, "wb")?, address(text(addr, "addr")?)?, slot(out, "out")?);
        *out = match wb.value(&at) {
            Value::Blank => SmValueKind::Blank,
            Value::Number(_) => SmValueKind::Number,
            Value::Text(_) => SmValueKind::Text,
            Value::Error(_) => SmValueKind::Error,
        };
        Ok(())
    })
}

/// Numeric value at `addr`; [`SmStatus::WrongType`] for anything else.
///
/// # Safety
/// `wb` must be a live workbook; `addr` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sm_workbook_value_number(wb: *const SmWorkbook, addr: *const c_char, out: *mut f64) -> SmStatus {
    guard(|| {
        let (wb, at, out) = (arg(wb, "wb")?, address(text(addr, "addr")?)?, slot(out, "out")?);
        match wb.value(&at) {
            Value::Number(v) => {
                *out = v;
                Ok(())
            }
            other => Err(fail(SmStatus::WrongType, format!("{at} holds `{other}`, not a number"))),
        }
    })
}

/// Value at `addr` as display text: numbers in shortest form, errors as
/// `#NAME?` and the like, blanks empty.
///
/// # Safety
/// `wb` must be a live workbook; `addr` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sm_workbook_value_text(wb: *const SmWorkbook, addr: *const c_char, out: *mut *mut c_char) -> SmStatus {
    guard(|| {
        let (wb, at, out) = (arg(wb, "wb")?, address(text(addr, "addr")?)?, slot(out, "out")?);
        *out = owned(wb.value(&at).to_string());
        Ok(())
    })
}

// ---- models -------------------------------------------------------------

/// Parses model source text.
///
/// # Safety
/// `source` must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sm_model_parse(source: *const c_char, out: *mut *mut SmModel) -> SmStatus {
    guard(|| {
        let out = slot(out, "out")?;
        let program = parse_program(text(source, "source")?).map_err(|e| fail(SmStatus::Parse, e))?;
        *out = Box::into_raw(Box::new(SmModel { program }));
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from this library and not have been released.
#[no_mangle]
pub unsafe extern "C" fn sm_model_free(model: *mut SmModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Compiles a model into a workbook. `entry` may be null for the last
/// function defined. Layout `i` is the CSV text `layout_csvs[i]` placed on
/// sheet `layout_sheets[i]`.
///
/// # Safety
/// `args` must hold `nargs` values and both layout arrays `nlayouts`
/// NUL-terminated strings; either may be null when its count is 0.
#[no_mangle]
pub unsafe extern "C" fn sm_model_compile(
    model: *const SmModel,
    entry: *const c_char,
    args: *const i64,
    nargs: usize,
    layout_sheets: *const *const c_char,
    layout_csvs: *const *const c_char,
    nlayouts: usize,
    out: *mut *mut SmWorkbook,
) -> SmStatus {
    guard(|| {
        let (model, out) = (arg(model, "model")?, slot(out, "out")?);
        let entry = optional_text(entry, "entry")?;
        let args = if nargs == 0 { &[][..] } else { std::slice::from_raw_parts(arg(args, "args")?, nargs) };
        let mut layouts: Vec<LayoutSheet> = Vec::with_capacity(nlayouts);
        if nlayouts > 0 {
            let sheets = std::slice::from_raw_parts(arg(layout_sheets, "layout_sheets")?, nlayouts);
            let csvs = std::slice::from_raw_parts(arg(layout_csvs, "layout_csvs")?, nlayouts);
            for (s, c) in sheets.iter().zip(csvs) {
                let sheet = text(*s, "layout_sheets[i]")?;
                let grid =
                    read_csv_grid(text(*c, "layout_csvs[i]")?).map_err(|e| fail(SmStatus::Read, format!("{sheet}.layout.csv:{e}")))?;
                layouts.push((sheet.to_string(), grid));
            }
        }
        let c = compile(&model.program, entry, args, &layouts).map_err(|e| fail(SmStatus::Compile, e))?;
        *out = SmWorkbook::new(c.workbook);
        Ok(())
    })
}

// ---- discovery ----------------------------------------------------------

/// Recovers tables, equations and layouts from a workbook. `overrides` may
/// be null or hold `range Sheet!A1:B9 name=Ident` lines.
///
/// # Safety
/// `wb` must be a live workbook; `overrides` null or NUL-terminated; `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn sm_discover(wb: *const SmWorkbook, overrides: *const c_char, out: *mut *mut SmDiscovery) -> SmStatus {
    guard(|| {
        let (wb, out) = (arg(wb, "wb")?, slot(out, "out")?);
        let ov = match optional_text(overrides, "overrides")? {
            Some(t) => parse_overrides(t).map_err(|e| fail(SmStatus::Parse, e))?,
            None => Vec::new(),
        };
        let discovery = discover(&wb.workbook, &ov).map_err(|e| fail(SmStatus::Discovery, e))?;
        *out = Box::into_raw(Box::new(SmDiscovery { discovery }));
        Ok(())
    })
}

/// Releases a discovery result. Null is ignored.
///
/// # Safety
/// `d` must come from this library and not have been released.
#[no_mangle]
pub unsafe extern "C" fn sm_discovery_free(d: *mut SmDiscovery) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Number of equations in the calculations, or 0 for null.
///
/// # Safety
/// `d` must be null or a live discovery result.
#[no_mangle]
pub unsafe extern "C" fn sm_discovery_equation_count(d: *const SmDiscovery) -> usize {
    d.as_ref().map_or(0, |d| d.discovery.equation_count())
}

/// Calculations as model source defining `model()`.
///
/// # Safety
/// `d` must be a live discovery result; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sm_discovery_calc_source(d: *const SmDiscovery, out: *mut *mut c_char) -> SmStatus {
    guard(|| {
        let (d, out) = (arg(d, "d")?, slot(out, "out")?);
        *out = owned(d.discovery.calc_source());
        Ok(())
    })
}

/// Annotations as model source defining `annotations()`.
///
/// # Safety
/// `d` must be a live discovery result; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sm_discovery_annotations_source(d: *const SmDiscovery, out: *mut *mut c_char) -> SmStatus {
    guard(|| {
        let (d, out) = (arg(d, "d")?, slot(out, "out")?);
        *out = owned(d.discovery.annotations_source());
        Ok(())
    })
}

/// Number of layout sheets, or 0 for null.
///
/// # Safety
/// `d` must be null or a live discovery result.
#[no_mangle]
pub unsafe extern "C" fn sm_discovery_layout_count(d: *const SmDiscovery) -> usize {
    d.as_ref().map_or(0, |d| d.discovery.layouts.len())
}

/// Sheet name and CSV text of layout sheet `index`.
///
/// # Safety
/// `d` must be a live discovery result; both outputs writable.
#[no_mangle]
pub unsafe extern "C" fn sm_discovery_layout(
    d: *const SmDiscovery,
    index: usize,
    out_sheet: *mut *mut c_char,
    out_csv: *mut *mut c_char,
) -> SmStatus {
    guard(|| {
        let (d, out_sheet, out_csv) = (arg(d, "d")?, slot(out_sheet, "out_sheet")?, slot(out_csv, "out_csv")?);
        let (sheet, grid) = d.discovery.layouts.get(index).ok_or_else(|| fail(SmStatus::NotFound, format!("no layout {index}")))?;
        *out_sheet = owned(sheet.as_str());
        *out_csv = owned(layout_csv(grid));
        Ok(())
    })
}

// ---- cross-tabulation ---------------------------------------------------

/// Adds a cross-tabulation described by `spec` (key=value lines) and returns
/// the extended workbook; the input is left unchanged.
///
/// # Safety
/// `wb` must be a live workbook; `spec` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sm_crosstab(wb: *const SmWorkbook, spec: *const c_char, out: *mut *mut SmWorkbook) -> SmStatus {
    guard(|| {
        let (wb, out) = (arg(wb, "wb")?, slot(out, "out")?);
        let spec = parse_spec(text(spec, "spec")?).map_err(|e| fail(SmStatus::Parse, e))?;
        let w = insert_crosstab(&wb.workbook, &spec).map_err(|e| fail(SmStatus::Crosstab, e))?;
        *out = SmWorkbook::new(w);
        Ok(())
    })
}
