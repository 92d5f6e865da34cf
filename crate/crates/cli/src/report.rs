//! Diagnostics CSVs and plot data.
//!
//! Every rational column `x` is followed by `x_approx`, a 12-significant-digit
//! decimal that is only an approximation.

use std::path::{Path, PathBuf};

use towerplex_core::exact::{parse_rat, to_decimal, IntervalSet};
use towerplex_core::multiplex::assemble_t;
use towerplex_core::stats::{
    product_scaled_report, rigidity_deviation, rwm_report, sweep_out_profile, weight_sequence, DiagnosticsReport,
    ProductSpec,
};
use towerplex_core::{Chain, Rat};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::run::write_atomic;

pub const APPROX_DIGITS: u32 = 12;

pub const CSV_FILES: [&str; 5] = ["weights.csv", "rwm.csv", "rigidity.csv", "power.csv", "sweep.csv"];

/// A CSV table whose cells are plain text or exact rationals.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    rational: Vec<bool>,
}

impl Table {
    /// `columns` pairs a name with whether it holds a rational.
    pub fn new(columns: &[(&str, bool)]) -> Self {
        let mut header = Vec::new();
        for (name, rational) in columns {
            header.push(name.to_string());
            if *rational {
                header.push(format!("{name}_approx"));
            }
        }
        Table { header, rows: Vec::new(), rational: columns.iter().map(|c| c.1).collect() }
    }

    pub fn push(&mut self, plain: &[String], rats: &[&Rat]) {
        let (mut p, mut r) = (plain.iter(), rats.iter());
        let mut row = Vec::new();
        for &is_rat in &self.rational {
            if is_rat {
                let x = r.next().expect("rational cell");
                row.push(x.to_string());
                row.push(to_decimal(x, APPROX_DIGITS));
            } else {
                row.push(p.next().expect("plain cell").clone());
            }
        }
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }
}

fn report_rows(table: &mut Table, prefix: &[String], report: &DiagnosticsReport) {
    for i in 0..report.len() {
        let mut plain = prefix.to_vec();
        plain.push(i.to_string());
        table.push(&plain, &[&report.terms[i], &report.partial_sums[i], &report.normalizers[i]]);
    }
}

/// Everything `stats` writes, plus the first failure if any diagnostic hit
/// its budget (the remaining files are still produced).
pub struct StatsOutput {
    pub files: Vec<(&'static str, String)>,
    pub failure: Option<CliError>,
}

pub fn compute_stats(config: &RunConfig, chain: &Chain) -> CliResult<StatsOutput> {
    let n = config.stats.stage.unwrap_or(chain.depth());
    let stage = chain.stage(n).map_err(CliError::core(Some(n)))?;
    let t = assemble_t(chain, n).map_err(CliError::core(Some(n)))?;
    let budget = &config.chain.budget;
    let f = chain.starter.space.clone();
    let a: IntervalSet = match &config.stats.set {
        Some(s) => s.clone(),
        None => chain.initial_partition[0].clone(),
    };
    let mu_x = stage.mu_x();
    let horizon = config.stats.horizon;
    let mut failure: Option<CliError> = None;
    let mut note = |e: towerplex_core::Error| {
        if failure.is_none() {
            failure = Some(CliError::Core { stage: Some(n), source: e });
        }
    };

    let mut weights = Table::new(&[("k", false), ("u_k", true), ("a_k", true)]);
    match weight_sequence(&t, &f, config.stats.weights_horizon) {
        Ok(w) => {
            for (k, (u, a)) in w.u.iter().zip(&w.a).enumerate() {
                weights.push(&[k.to_string()], &[u, a]);
            }
        }
        Err(e) => note(e),
    }

    let cols = [("i", false), ("term", true), ("partial_sum", true), ("normalizer", true)];
    let mut rwm = Table::new(&cols);
    match rwm_report(&t, &f, &a, &a, horizon) {
        Ok(r) => report_rows(&mut rwm, &[], &r),
        Err(e) => note(e),
    }

    let mut rigidity = Table::new(&[("rho", false), ("deviation", true)]);
    for &rho in &config.stats.rigidity {
        match rigidity_deviation(&t, &a, rho, budget) {
            Ok(d) => rigidity.push(&[rho.to_string()], &[&d]),
            Err(e) => {
                note(e);
                break;
            }
        }
    }

    let mut power = Table::new(&[("v", false), ("i", false), ("term", true), ("partial_sum", true), ("normalizer", true)]);
    for v in &config.stats.vectors {
        let spec = ProductSpec::new(v.clone()).map_err(CliError::core(None))?;
        let boxes = vec![a.clone(); spec.len()];
        match product_scaled_report(&spec, &t, &boxes, horizon, &mu_x, budget) {
            Ok(r) => report_rows(&mut power, &[spec.to_string()], &r),
            Err(e) => note(e),
        }
    }

    let sweep_h = config.stats.sweep_horizon.unwrap_or_else(|| {
        let prev = n.saturating_sub(1).max(1);
        4 * chain.stage(prev).map(|s| s.plan.h).unwrap_or(1) as usize
    });
    let mut sweep = Table::new(&[("N", false), ("unswept", true)]);
    match sweep_out_profile(&t, &f, sweep_h) {
        Ok(p) => {
            for (k, u) in p.iter().enumerate() {
                sweep.push(&[k.to_string()], &[u]);
            }
        }
        Err(e) => note(e),
    }

    let files = vec![
        (CSV_FILES[0], weights.to_csv()),
        (CSV_FILES[1], rwm.to_csv()),
        (CSV_FILES[2], rigidity.to_csv()),
        (CSV_FILES[3], power.to_csv()),
        (CSV_FILES[4], sweep.to_csv()),
    ];
    Ok(StatsOutput { files, failure })
}

pub fn cmd_stats(config: &RunConfig, chain: &Chain, dir: &Path) -> CliResult<()> {
    let out = compute_stats(config, chain)?;
    for (name, text) in &out.files {
        write_atomic(&dir.join(name), text.as_bytes())?;
    }
    match out.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// `# x y` header then one pair per line.
pub fn plot_data(points: &[(String, Rat)]) -> String {
    let mut out = String::from("# x y (y approximate, 12 significant digits)\n");
    for (x, y) in points {
        out.push_str(&format!("{x} {}\n", to_decimal(y, APPROX_DIGITS)));
    }
    out
}

/// Diagnostic value `partial_sum / normalizer` at horizon `i + 1`.
pub fn report_points(report: &DiagnosticsReport) -> Vec<(String, Rat)> {
    (0..report.len())
        .filter(|&i| report.normalizers[i] != towerplex_core::exact::int(0))
        .map(|i| ((i + 1).to_string(), &report.partial_sums[i] / &report.normalizers[i]))
        .collect()
}

fn read_csv(path: &Path) -> CliResult<(Vec<String>, Vec<Vec<String>>)> {
    if !path.exists() {
        return Err(CliError::MissingInput(path.to_path_buf()));
    }
    let csv_err = |e: csv::Error| CliError::Csv { path: path.to_path_buf(), detail: e.to_string() };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()).map_err(csv_err))
        .collect::<CliResult<_>>()?;
    Ok((header, rows))
}

fn column(path: &Path, header: &[String], name: &str) -> CliResult<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::Csv { path: path.to_path_buf(), detail: format!("no column `{name}`") })
}

fn rat_cell(path: &Path, text: &str) -> CliResult<Rat> {
    parse_rat(text).map_err(|e| CliError::Csv { path: path.to_path_buf(), detail: e.to_string() })
}

/// Rebuilds reports grouped by the `v` column (a single group when absent).
pub fn read_reports(path: &Path, name: &str) -> CliResult<Vec<(String, DiagnosticsReport)>> {
    let (header, rows) = read_csv(path)?;
    let group = header.iter().position(|h| h == "v");
    let (ti, pi, ni) = (column(path, &header, "term")?, column(path, &header, "partial_sum")?, column(path, &header, "normalizer")?);
    let mut out: Vec<(String, DiagnosticsReport)> = Vec::new();
    for row in rows {
        let key = group.map(|g| row[g].clone()).unwrap_or_default();
        if out.last().map(|(k, _)| k != &key).unwrap_or(true) {
            let empty = DiagnosticsReport {
                name: name.to_string(),
                terms: Vec::new(),
                partial_sums: Vec::new(),
                normalizers: Vec::new(),
                meta: Vec::new(),
            };
            out.push((key, empty));
        }
        let r = &mut out.last_mut().expect("group pushed").1;
        r.terms.push(rat_cell(path, &row[ti])?);
        r.partial_sums.push(rat_cell(path, &row[pi])?);
        r.normalizers.push(rat_cell(path, &row[ni])?);
    }
    Ok(out)
}

fn read_series(path: &Path, x: &str, y: &str) -> CliResult<Vec<(String, Rat)>> {
    let (header, rows) = read_csv(path)?;
    let (xi, yi) = (column(path, &header, x)?, column(path, &header, y)?);
    rows.iter().map(|r| Ok((r[xi].clone(), rat_cell(path, &r[yi])?))).collect()
}

fn file_tag(v: &str) -> String {
    v.chars()
        .filter_map(|c| match c {
            '0'..='9' => Some(c),
            '-' => Some('m'),
            ',' => Some('_'),
            _ => None,
        })
        .collect()
}

/// Plot files derived from the CSVs in `dir`, written to `dir/plot`.
pub fn cmd_export(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let plot = dir.join("plot");
    std::fs::create_dir_all(&plot).map_err(CliError::io(&plot))?;
    let mut files: Vec<(String, String)> = Vec::new();
    files.push(("weights.dat".into(), plot_data(&read_series(&dir.join("weights.csv"), "k", "a_k")?)));
    let rwm = read_reports(&dir.join("rwm.csv"), "rwm")?;
    let points = rwm.first().map(|(_, r)| report_points(r)).unwrap_or_default();
    files.push(("rwm.dat".into(), plot_data(&points)));
    files.push(("rigidity.dat".into(), plot_data(&read_series(&dir.join("rigidity.csv"), "rho", "deviation")?)));
    for (v, r) in read_reports(&dir.join("power.csv"), "product_scaled")? {
        files.push((format!("power_{}.dat", file_tag(&v)), plot_data(&report_points(&r))));
    }
    files.push(("sweep.dat".into(), plot_data(&read_series(&dir.join("sweep.csv"), "N", "unswept")?)));
    let mut written = Vec::new();
    for (name, text) in files {
        let path = plot.join(name);
        write_atomic(&path, text.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}
