//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::crosstab::{headers, insert_crosstab, parse_spec};
use crate::discovery::{discover, layout_csv, parse_overrides};
use crate::emitter::{dump_grid, emit_xml, read_csv_grid, read_xml};
use crate::evaluator::evaluate;
use crate::model::Workbook;
use crate::notation::{parse_program, Program, GRAMMAR};
use crate::pipeline::{compare, compile, element_values, Compiled, LayoutSheet};

/// Exit status for success.
pub const EXIT_OK: i32 = 0;
/// Exit status when inputs are rejected or results differ.
pub const EXIT_DIAGNOSTICS: i32 = 1;
/// Exit status for malformed command lines.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "sheetmodel", version, about = "Compile table models to spreadsheets and back")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compile a model file and its layouts to SpreadsheetML.
    Compile {
        model: PathBuf,
        /// Layout sheet CSV; the file name `<Sheet>.layout.csv` names the sheet. Repeatable.
        #[arg(long = "layout")]
        layouts: Vec<PathBuf>,
        /// Function to apply; defaults to the last one defined.
        #[arg(long)]
        entry: Option<String>,
        #[arg(short, long)]
        output: PathBuf,
        /// Size arguments of the model function.
        #[arg(last = true, allow_negative_numbers = true)]
        args: Vec<i64>,
    },
    /// Compile under two layouts (or compare with a workbook) and check every table element.
    Verify {
        model: PathBuf,
        /// Layout sheets of the first layout.
        #[arg(long = "a")]
        layout_a: Vec<PathBuf>,
        /// Layout sheets of the second layout.
        #[arg(long = "b", conflicts_with = "workbook")]
        layout_b: Vec<PathBuf>,
        /// Workbook laid out by the first layout, to check against a fresh compile.
        #[arg(long)]
        workbook: Option<PathBuf>,
        #[arg(long)]
        entry: Option<String>,
        #[arg(last = true, allow_negative_numbers = true)]
        args: Vec<i64>,
    },
    /// Recover calculations, annotations and layouts from a workbook.
    Discover {
        workbook: PathBuf,
        /// Sidecar of `range Sheet!A1:B9 name=Ident` lines.
        #[arg(long)]
        overrides: Option<PathBuf>,
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
        /// Base name of the model files.
        #[arg(long, default_value = "model")]
        stem: String,
    },
    /// Add a cross-tabulation of two columns to a workbook.
    Crosstab {
        workbook: PathBuf,
        spec: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Print a sheet as tab-separated cells (formulas, or values with --values).
    Dump {
        workbook: PathBuf,
        #[arg(long)]
        sheet: Option<String>,
        #[arg(long)]
        values: bool,
    },
    /// Print the model grammar.
    Grammar,
}

/// A failure with its message ready for the error stream.
#[derive(Debug)]
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = Result<i32, Failure>;

/// Output stream that notes when the reader has gone away.
struct PipeGuard<'a> {
    inner: &'a mut dyn Write,
    closed: bool,
}

impl Write for PipeGuard<'_> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let r = self.inner.write(buf);
        self.closed |= matches!(&r, Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe);
        r
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

/// Runs the command line `args` (program name first).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let mut guarded = PipeGuard { inner: out, closed: false };
    match dispatch(cli.command, &mut guarded, err) {
        Ok(code) => code,
        Err(_) if guarded.closed => EXIT_OK,
        Err(Failure(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_DIAGNOSTICS
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    match cmd {
        Command::Compile { model, layouts, entry, output, args } => {
            let c = compile_files(&model, &layouts, entry.as_deref(), &args)?;
            write_atomic(&output, &emit_xml(&c.workbook))?;
            writeln!(
                out,
                "wrote {}: {} table(s), {} cell(s) on {} sheet(s)",
                output.display(),
                c.instance.object.tables.len(),
                c.workbook.cell_count(),
                c.workbook.sheets.len()
            )?;
            Ok(EXIT_OK)
        }
        Command::Verify { model, layout_a, layout_b, workbook, entry, args } => {
            let a = compile_files(&model, &layout_a, entry.as_deref(), &args)?;
            let left = element_values(&a.instance, &a.mapping, &a.workbook)?;
            let right = match &workbook {
                Some(path) => element_values(&a.instance, &a.mapping, &read_workbook(path)?)?,
                None => {
                    let b = compile_files(&model, &layout_b, entry.as_deref(), &args)?;
                    element_values(&b.instance, &b.mapping, &b.workbook)?
                }
            };
            let diffs = compare(&left, &right);
            if diffs.is_empty() {
                writeln!(out, "IDENTICAL ({} elements)", left.len())?;
                Ok(EXIT_OK)
            } else {
                writeln!(out, "DIFFERENT ({} of {} elements)", diffs.len(), left.len())?;
                for d in &diffs {
                    writeln!(out, "  {d}")?;
                }
                Ok(EXIT_DIAGNOSTICS)
            }
        }
        Command::Discover { workbook, overrides, out_dir, stem } => {
            let w = read_workbook(&workbook)?;
            let ov = match &overrides {
                Some(p) => parse_overrides(&read_text(p)?).map_err(|e| Failure(format!("{}: {e}", p.display())))?,
                None => Vec::new(),
            };
            let d = discover(&w, &ov)?;
            std::fs::create_dir_all(&out_dir).map_err(|e| Failure(format!("{}: {e}", out_dir.display())))?;
            write_atomic(&out_dir.join(format!("{stem}.calc.shf")), d.calc_source().as_bytes())?;
            write_atomic(&out_dir.join(format!("{stem}.annot.shf")), d.annotations_source().as_bytes())?;
            for (sheet, grid) in &d.layouts {
                write_atomic(&out_dir.join(format!("{sheet}.layout.csv")), layout_csv(grid).as_bytes())?;
            }
            for wmsg in &d.warnings {
                writeln!(err, "warning: {wmsg}")?;
            }
            writeln!(
                out,
                "{} run(s), {} table(s), {} equation(s) for {} cell(s); {} layout sheet(s), {} explicit placement(s)",
                d.runs.len(),
                d.tables.len(),
                d.equation_count(),
                w.cell_count(),
                d.layouts.len(),
                d.explicit.entries.len()
            )?;
            Ok(EXIT_OK)
        }
        Command::Crosstab { workbook, spec, output } => {
            let w = read_workbook(&workbook)?;
            let s = parse_spec(&read_text(&spec)?).map_err(|e| Failure(format!("{}: {e}", spec.display())))?;
            let result = insert_crosstab(&w, &s)?;
            write_atomic(&output, &emit_xml(&result))?;
            let h = headers(&w, &s);
            let ev = evaluate(&result);
            let total: f64 = result
                .sheet(&s.result_anchor.sheet)
                .map(|sh| {
                    sh.cells
                        .keys()
                        .filter(|(r, c)| *r > s.result_anchor.row && *c > s.result_anchor.col)
                        .map(|(r, c)| match ev.get(&crate::model::CellAddr::new(sh.name.clone(), *c, *r)) {
                            crate::evaluator::Value::Number(n) => n,
                            _ => 0.0,
                        })
                        .sum()
                })
                .unwrap_or(0.0);
            writeln!(out, "wrote {}: {} across, {} down at {}; counts total {total}", output.display(), h[0], h[1], s.result_anchor)?;
            Ok(EXIT_OK)
        }
        Command::Dump { workbook, sheet, values } => {
            let w = read_workbook(&workbook)?;
            let names: Vec<String> = match sheet {
                Some(s) if w.sheet(&s).is_none() => return Err(Failure(format!("no sheet `{s}`"))),
                Some(s) => vec![s],
                None => w.sheets.iter().map(|s| s.name.clone()).collect(),
            };
            let ev = values.then(|| evaluate(&w));
            for name in names {
                if w.sheets.len() > 1 {
                    writeln!(out, "== {name}")?;
                }
                match &ev {
                    None => writeln!(out, "{}", dump_grid(&w, &name))?,
                    Some(ev) => writeln!(out, "{}", value_grid(&w, &name, ev))?,
                }
            }
            Ok(EXIT_OK)
        }
        Command::Grammar => {
            out.write_all(GRAMMAR.as_bytes())?;
            Ok(EXIT_OK)
        }
    }
}

fn value_grid(w: &Workbook, sheet: &str, ev: &crate::evaluator::Evaluation) -> String {
    let Some(s) = w.sheet(sheet) else { return String::new() };
    let (rows, cols) = s.cells.keys().fold((0, 0), |(r, c), k| (r.max(k.0), c.max(k.1)));
    (1..=rows)
        .map(|r| {
            let cells: Vec<String> = (1..=cols)
                .map(|c| match s.get(c, r) {
                    None => String::new(),
                    Some(_) => ev.get(&crate::model::CellAddr::new(sheet, c, r)).to_string(),
                })
                .collect();
            cells.join("\t").trim_end_matches('\t').to_string()
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn read_workbook(path: &Path) -> Result<Workbook, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    read_xml(&bytes).map_err(|e| Failure(format!("{}:{e}", path.display())))
}

/// Sheet name of a layout file: its name without `.csv` and `.layout`.
pub fn layout_sheet_name(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let name = name.strip_suffix(".csv").unwrap_or(&name);
    name.strip_suffix(".layout").unwrap_or(name).to_string()
}

fn read_layouts(paths: &[PathBuf]) -> Result<Vec<LayoutSheet>, Failure> {
    paths
        .iter()
        .map(|p| {
            let grid = read_csv_grid(&read_text(p)?).map_err(|e| Failure(format!("{}:{e}", p.display())))?;
            Ok((layout_sheet_name(p), grid))
        })
        .collect()
}

fn read_program(path: &Path) -> Result<Program, Failure> {
    parse_program(&read_text(path)?).map_err(|d| Failure(format!("{}:{d}", path.display())))
}

fn compile_files(model: &Path, layouts: &[PathBuf], entry: Option<&str>, args: &[i64]) -> Result<Compiled, Failure> {
    let program = read_program(model)?;
    let sheets = read_layouts(layouts)?;
    compile(&program, entry, args, &sheets).map_err(|e| Failure(format!("{}: {e}", model.display())))
}

/// Writes through a temporary file in the target directory, so a failed
/// run never leaves a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let fail = |e: &dyn std::fmt::Display| Failure(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| fail(&e))?;
    tmp.write_all(bytes).map_err(|e| fail(&e))?;
    tmp.persist(path).map_err(|e| fail(&e.error))?;
    Ok(())
}
