/* Generated by cbindgen from src/lib.rs; do not edit. */

#ifndef SHEETMODEL_H
#define SHEETMODEL_H

#include <stddef.h>
#include <stdint.h>

// Result of every fallible call.
typedef enum SmStatus {
  SM_STATUS_OK = 0,
  // A required pointer argument was null.
  SM_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  SM_STATUS_INVALID_UTF8 = 2,
  // Model text, formula or address did not parse.
  SM_STATUS_PARSE = 3,
  // Instantiation, layout or mapping failed.
  SM_STATUS_COMPILE = 4,
  // Workbook or CSV input could not be read.
  SM_STATUS_READ = 5,
  SM_STATUS_DISCOVERY = 6,
  SM_STATUS_CROSSTAB = 7,
  // Index out of range or no such sheet.
  SM_STATUS_NOT_FOUND = 8,
  // The cell value is not of the requested kind.
  SM_STATUS_WRONG_TYPE = 9,
  // The library panicked; the handle arguments should not be reused.
  SM_STATUS_PANIC = 99,
} SmStatus;

// Kind of an evaluated cell value.
typedef enum SmValueKind {
  SM_VALUE_KIND_BLANK = 0,
  SM_VALUE_KIND_NUMBER = 1,
  SM_VALUE_KIND_TEXT = 2,
  SM_VALUE_KIND_ERROR = 3,
} SmValueKind;

// The result of structure discovery.
typedef struct SmDiscovery SmDiscovery;

// A parsed model file.
typedef struct SmModel SmModel;

// A workbook; evaluated lazily on first value query.
typedef struct SmWorkbook SmWorkbook;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next call into this library on the same thread.
const char *sm_last_error(void);

// Library version as a static string.
const char *sm_version(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been released.
void sm_string_free(char *s);

// Reads SpreadsheetML 2003 bytes.
//
// # Safety
// `bytes` must point to `len` readable bytes; `out` must be writable.
enum SmStatus sm_workbook_read_xml(const uint8_t *bytes, size_t len, struct SmWorkbook **out);

// Reads CSV text into a one-sheet workbook named `sheet`.
//
// # Safety
// String arguments must be NUL-terminated; `out` must be writable.
enum SmStatus sm_workbook_read_csv(const char *csv, const char *sheet, struct SmWorkbook **out);

// Releases a workbook. Null is ignored.
//
// # Safety
// `wb` must come from this library and not have been released.
void sm_workbook_free(struct SmWorkbook *wb);

// Writes the workbook as SpreadsheetML 2003 text.
//
// # Safety
// `wb` must be a live workbook; `out` must be writable.
enum SmStatus sm_workbook_emit_xml(const struct SmWorkbook *wb, char **out);

// Number of non-empty cells, or 0 for null.
//
// # Safety
// `wb` must be null or a live workbook.
size_t sm_workbook_cell_count(const struct SmWorkbook *wb);

// Number of sheets, or 0 for null.
//
// # Safety
// `wb` must be null or a live workbook.
size_t sm_workbook_sheet_count(const struct SmWorkbook *wb);

// Name of sheet `index`, counting from 0.
//
// # Safety
// `wb` must be a live workbook; `out` must be writable.
enum SmStatus sm_workbook_sheet_name(const struct SmWorkbook *wb, size_t index, char **out);

// A sheet as tab-separated rows of cell contents, formulas in A1 form.
//
// # Safety
// `wb` must be a live workbook; `sheet` NUL-terminated; `out` writable.
enum SmStatus sm_workbook_dump(const struct SmWorkbook *wb, const char *sheet, char **out);

// Kind of the evaluated value at `addr` (`Sheet!A1`).
//
// # Safety
// `wb` must be a live workbook; `addr` NUL-terminated; `out` writable.
enum SmStatus sm_workbook_value_kind(const struct SmWorkbook *wb,
                                     const char *addr,
                                     enum SmValueKind *out);

// Numeric value at `addr`; [`SmStatus::WrongType`] for anything else.
//
// # Safety
// `wb` must be a live workbook; `addr` NUL-terminated; `out` writable.
enum SmStatus sm_workbook_value_number(const struct SmWorkbook *wb, const char *addr, double *out);

// Value at `addr` as display text: numbers in shortest form, errors as
// `#NAME?` and the like, blanks empty.
//
// # Safety
// `wb` must be a live workbook; `addr` NUL-terminated; `out` writable.
enum SmStatus sm_workbook_value_text(const struct SmWorkbook *wb, const char *addr, char **out);

// Parses model source text.
//
// # Safety
// `source` must be NUL-terminated; `out` writable.
enum SmStatus sm_model_parse(const char *source, struct SmModel **out);

// Releases a model. Null is ignored.
//
// # Safety
// `model` must come from this library and not have been released.
void sm_model_free(struct SmModel *model);

// Compiles a model into a workbook. `entry` may be null for the last
// function defined. Layout `i` is the CSV text `layout_csvs[i]` placed on
// sheet `layout_sheets[i]`.
//
// # Safety
// `args` must hold `nargs` values and both layout arrays `nlayouts`
// NUL-terminated strings; either may be null when its count is 0.
enum SmStatus sm_model_compile(const struct SmModel *model,
                               const char *entry,
                               const int64_t *args,
                               size_t nargs,
                               const char *const *layout_sheets,
                               const char *const *layout_csvs,
                               size_t nlayouts,
                               struct SmWorkbook **out);

// Recovers tables, equations and layouts from a workbook. `overrides` may
// be null or hold `range Sheet!A1:B9 name=Ident` lines.
//
// # Safety
// `wb` must be a live workbook; `overrides` null or NUL-terminated; `out`
// writable.
enum SmStatus sm_discover(const struct SmWorkbook *wb,
                          const char *overrides,
                          struct SmDiscovery **out);

// Releases a discovery result. Null is ignored.
//
// # Safety
// `d` must come from this library and not have been released.
void sm_discovery_free(struct SmDiscovery *d);

// Number of equations in the calculations, or 0 for null.
//
// # Safety
// `d` must be null or a live discovery result.
size_t sm_discovery_equation_count(const struct SmDiscovery *d);

// Calculations as model source defining `model()`.
//
// # Safety
// `d` must be a live discovery result; `out` writable.
enum SmStatus sm_discovery_calc_source(const struct SmDiscovery *d, char **out);

// Annotations as model source defining `annotations()`.
//
// # Safety
// `d` must be a live discovery result; `out` writable.
enum SmStatus sm_discovery_annotations_source(const struct SmDiscovery *d, char **out);

// Number of layout sheets, or 0 for null.
//
// # Safety
// `d` must be null or a live discovery result.
size_t sm_discovery_layout_count(const struct SmDiscovery *d);

// Sheet name and CSV text of layout sheet `index`.
//
// # Safety
// `d` must be a live discovery result; both outputs writable.
enum SmStatus sm_discovery_layout(const struct SmDiscovery *d,
                                  size_t index,
                                  char **out_sheet,
                                  char **out_csv);

// Adds a cross-tabulation described by `spec` (key=value lines) and returns
// the extended workbook; the input is left unchanged.
//
// # Safety
// `wb` must be a live workbook; `spec` NUL-terminated; `out` writable.
enum SmStatus sm_crosstab(const struct SmWorkbook *wb, const char *spec, struct SmWorkbook **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHEETMODEL_H */
