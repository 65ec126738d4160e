//! Output directories, error reports, CSV tables and gnuplot scripts.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use chscale::record::write_atomic;
use chscale::{Error, Field, Result};

pub fn error_report(error: &Error, exit_code: u8) -> Value {
    let mut report = json!({
        "status": "error",
        "exit_code": exit_code,
        "kind": format!("{:?}", error.kind()).to_lowercase(),
        "error": error.tag(),
        "message": error.to_string(),
    });
    match error {
        Error::BlowUp { time, .. } | Error::StepUnderflow { time, .. } | Error::StepBudget { time, .. } => {
            report["time"] = json!(time);
        }
        Error::BoundaryContamination { time, ratio, limit } => {
            report["time"] = json!(time);
            report["ratio"] = json!(ratio);
            report["limit"] = json!(limit);
        }
        _ => {}
    }
    report
}

/// A directory filled under a temporary name and renamed into place, so an
/// interrupted run never leaves a partial directory at the final path.
pub struct Staged {
    pub tmp: PathBuf,
    pub dest: PathBuf,
}

impl Staged {
    pub fn new(dest: &Path) -> Result<Self> {
        let name = dest.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
        let tmp = dest.with_file_name(format!(".{name}.tmp-{}", std::process::id()));
        if tmp.exists() {
            fs::remove_dir_all(&tmp)?;
        }
        fs::create_dir_all(&tmp)?;
        Ok(Self {
            tmp,
            dest: dest.to_path_buf(),
        })
    }

    pub fn commit(self) -> Result<PathBuf> {
        if self.dest.exists() {
            fs::remove_dir_all(&self.dest)?;
        }
        fs::rename(&self.tmp, &self.dest)?;
        Ok(self.dest)
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())
}

pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// Coordinates of every grid point followed by the listed fields.
pub fn field_csv(value_names: &[&str], fields: &[&Field]) -> Result<String> {
    let grid = fields.first().ok_or_else(|| Error::invalid("no fields"))?.grid;
    if fields.iter().any(|f| f.grid != grid) {
        return Err(Error::invalid("fields on different grids"));
    }
    let axes = ["x1", "x2", "x3"];
    let header: Vec<&str> = axes[..grid.dim].iter().copied().chain(value_names.iter().copied()).collect();
    let rows = (0..grid.len()).map(|i| {
        let p = grid.point(i);
        p[..grid.dim].iter().copied().chain(fields.iter().map(|f| f.values[i])).collect()
    });
    Ok(csv(&header, rows))
}

const PREAMBLE: &str = "set datafile separator ','\nset key autotitle columnhead\n";

/// Log-log plot of columns `2..=last` of a CSV against column 1.
pub fn gnuplot_loglog(file: &str, columns: usize, title: &str) -> String {
    let curves: Vec<String> = (2..=columns)
        .map(|c| format!("'{file}' using 1:{c} with lines"))
        .collect();
    format!(
        "{PREAMBLE}set title '{title}'\nset logscale xy\nset xlabel 'time'\nplot {}\npause -1\n",
        curves.join(", \\\n     ")
    )
}

/// Line plot (1D) or surface (2D) of the columns after the coordinates.
pub fn gnuplot_field(file: &str, dim: usize, values: usize, title: &str) -> String {
    let first = dim + 1;
    let curves: Vec<String> = (first..first + values)
        .map(|c| match dim {
            1 => format!("'{file}' using 1:{c} with lines"),
            _ => format!("'{file}' using 1:2:{c} with points pointsize 0.2"),
        })
        .collect();
    let cmd = if dim == 1 { "plot" } else { "splot" };
    format!("{PREAMBLE}set title '{title}'\n{cmd} {}\npause -1\n", curves.join(", \\\n     "))
}

/// Semi-log plot of `|column 2|` against column 1.
pub fn gnuplot_semilog(file: &str, title: &str) -> String {
    format!(
        "{PREAMBLE}set title '{title}'\nset logscale y\nplot '{file}' using 1:(abs($2)) with lines\npause -1\n"
    )
}
