//! Gnuplot scripts for the three spectrum diagrams of a result CSV.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use dpp_core::spectrum::{SpectrumRecord, FIELD_NAMES};

use crate::CliError;

/// Read every data row of a spectrum CSV.
pub fn read_records(path: &Path) -> Result<Vec<SpectrumRecord>, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::Csv(format!("{}: {e}", path.display())))?;
    let header = reader.headers().map_err(|e| CliError::Csv(format!("{}: {e}", path.display())))?;
    let expected: Vec<&str> = SpectrumRecord::CSV_HEADER.split(',').collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(CliError::Csv(format!("{}: header does not match the spectrum schema", path.display())));
    }
    reader
        .records()
        .enumerate()
        .map(|(i, row)| {
            let row = row.map_err(|e| CliError::Csv(format!("{}: {e}", path.display())))?;
            let fields: Vec<&str> = row.iter().collect();
            SpectrumRecord::from_csv_fields(&fields)
                .map_err(|e| CliError::Csv(format!("{} row {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

/// Write `records` with the spectrum header.
pub fn write_records(path: &Path, records: &[SpectrumRecord]) -> Result<(), CliError> {
    let mut text = String::from(SpectrumRecord::CSV_HEADER);
    text.push('\n');
    for r in records {
        text.push_str(&r.csv_row());
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

const DATA_COLUMNS: &str =
    "ndiv dof ksp total_s dos doa_u1 doa_p1 doa_u2 doa_p2 doe_u1 doe_p1 doe_u2 doe_p2 dof_per_s_total";

fn datablock(records: &[SpectrumRecord]) -> String {
    let mut s = format!("# {DATA_COLUMNS}\n");
    for r in records {
        let _ = write!(s, "{} {} {} {:e} {:e}", r.n_div, r.dof, r.ksp, r.total_s, r.dos());
        for v in r.doa().iter().chain(&r.doe()) {
            let _ = write!(s, " {v:e}");
        }
        let _ = writeln!(s, " {:e}", r.rates().total);
    }
    s
}

fn script(svg: &str, data: &str, body: &str) -> String {
    format!("set terminal svg size 800,600\nset output '{svg}'\nset key outside right\nset grid\n$data << EOD\n{data}EOD\n{body}")
}

fn field_plot(first_column: usize, x_column: usize) -> String {
    let lines: Vec<String> = FIELD_NAMES
        .iter()
        .enumerate()
        .map(|(i, f)| format!("$data using {x_column}:{} with linespoints title '{f}'", first_column + i))
        .collect();
    format!("plot {}\n", lines.join(", \\\n     "))
}

/// Write a data file and the DoA-vs-DoS, DoF/s-vs-time and DoE-vs-time
/// scripts next to `csv_path`. Returns the written paths.
pub fn emit_plots(csv_path: &Path) -> Result<Vec<PathBuf>, CliError> {
    let records = read_records(csv_path)?;
    if records.is_empty() {
        return Err(CliError::Csv(format!("{}: no data rows to plot", csv_path.display())));
    }
    let dir = csv_path.parent().unwrap_or(Path::new("."));
    let stem = csv_path.file_stem().and_then(|s| s.to_str()).unwrap_or("spectrum");
    let data = datablock(&records);
    let doa = format!(
        "set title 'Digits of accuracy vs digits of size'\nset xlabel 'DoS = -log10(DoF)'\nset ylabel 'DoA = -log10(L2 error)'\n{}",
        field_plot(6, 5)
    );
    let rate =
        "set title 'Static scaling'\nset logscale xy\nset xlabel 'total time (s)'\nset ylabel 'DoF per second'\n\
plot $data using 4:14 with linespoints title 'total'\n"
            .to_string();
    let doe = format!(
        "set title 'Digits of efficacy vs time'\nset logscale x\nset xlabel 'total time (s)'\nset ylabel 'DoE = -log10(L2 error x time)'\n{}",
        field_plot(10, 4)
    );
    let mut written = Vec::new();
    let dat = dir.join(format!("{stem}.dat"));
    std::fs::write(&dat, &data).map_err(|e| CliError::io(&dat, e))?;
    written.push(dat);
    for (kind, body) in [("doa_dos", doa), ("rate_time", rate), ("doe_time", doe)] {
        let path = dir.join(format!("{stem}_{kind}.gp"));
        let text = script(&format!("{stem}_{kind}.svg"), &data, &body);
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
