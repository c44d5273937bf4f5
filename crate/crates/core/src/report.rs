//! CSV and SVG renderings of clustering, assessment and estimation results.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::clustering::{composition, ClusterModel, MonthClusterMatrix};
use crate::error::{Error, Result};
use crate::estimation::DayEstimate;
use crate::riskassess::{AssessmentReport, LifeLossStudy, TemperatureStudy, ThresholdResult};

pub const COMPOSITION_FILE: &str = "composition.csv";
pub const THRESHOLDS_FILE: &str = "thresholds.csv";
pub const MONTH_DAYS_FILE: &str = "month_days.csv";
pub const TOP_OIL_FILE: &str = "service_top_oil.csv";
pub const HOTSPOT_FILE: &str = "service_hotspot.csv";
pub const LIFE_LOSS_FILE: &str = "life_loss.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MONTH_CHART_FILE: &str = "month_days.svg";
pub const ESTIMATES_FILE: &str = "estimates.csv";

const MONTHS: [&str; 12] = [
    "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
];

/// Fixed-decimal text without a negative sign on zero.
fn fixed(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

/// Day counts print as integers when every count in the table is whole.
fn day_formatter(values: impl IntoIterator<Item = f64>) -> impl Fn(f64) -> String {
    let whole = values.into_iter().all(|v| (v - v.round()).abs() < 1e-9);
    move |v| if whole { fixed(v, 0) } else { fixed(v, 2) }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "Y"
    } else {
        "N"
    }
}

fn csv_text(header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

fn header(items: impl IntoIterator<Item = impl Into<String>>) -> Vec<String> {
    items.into_iter().map(Into::into).collect()
}

/// One row per cluster: member records, transformer-days and the centroid in
/// raw units.
pub fn composition_csv(model: &ClusterModel) -> String {
    let schema = &model.schema;
    let mut head = header(["cluster_id", "members", "member_days"]);
    head.extend(schema.numeric().iter().map(|f| f.name.clone()));
    head.extend(schema.ordinal().iter().map(|f| f.name.clone()));
    head.extend(schema.nominal().iter().map(|f| f.name.clone()));
    let days = model.member_day_counts();
    let fmt_days = day_formatter(days.values().copied());
    let rows: Vec<Vec<String>> = composition(model)
        .into_iter()
        .map(|row| {
            let mut out = vec![
                row.cluster_id.to_string(),
                row.member_count.to_string(),
                fmt_days(days[&row.cluster_id]),
            ];
            out.extend(row.numeric.iter().map(|v| fixed(*v, 2)));
            out.extend(row.ordinal.iter().map(|v| fixed(*v, 3)));
            out.extend(row.nominal);
            out
        })
        .collect();
    csv_text(&head, &rows)
}

pub fn thresholds_csv(results: &[ThresholdResult]) -> String {
    let head = header([
        "cluster_id",
        "max_avg_load_pu",
        "max_peak_load_pu",
        "impact_rank",
        "binding_limit",
    ]);
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            vec![
                r.cluster_id.to_string(),
                fixed(r.max_avg_load_pu, 2),
                fixed(r.max_peak_load_pu, 2),
                r.impact_rank.to_string(),
                r.binding_limit.label().to_string(),
            ]
        })
        .collect();
    csv_text(&head, &rows)
}

/// Cluster indices of `months` ordered by impact rank.
fn by_impact(months: &MonthClusterMatrix, thresholds: &[ThresholdResult]) -> Result<Vec<(usize, usize)>> {
    let mut order = months
        .cluster_ids
        .iter()
        .enumerate()
        .map(|(c, id)| {
            thresholds
                .iter()
                .find(|t| t.cluster_id == *id)
                .map(|t| (t.impact_rank, c))
                .ok_or_else(|| Error::KeyMismatch(format!("no threshold for cluster {id}")))
        })
        .collect::<Result<Vec<_>>>()?;
    order.sort();
    Ok(order)
}

/// Months down, clusters across in impact order, with a `Sum` row and a
/// closing `Cluster` row naming the cluster behind each impact column.
pub fn month_days_csv(months: &MonthClusterMatrix, thresholds: &[ThresholdResult]) -> Result<String> {
    let order = by_impact(months, thresholds)?;
    let fmt_days = day_formatter(months.days.iter().flatten().copied());
    let mut head = header(["Mth"]);
    head.extend(order.iter().map(|(rank, _)| format!("Imp {rank}")));
    let mut rows: Vec<Vec<String>> = MONTHS
        .iter()
        .zip(&months.days)
        .map(|(name, row)| {
            std::iter::once(name.to_string())
                .chain(order.iter().map(|(_, c)| fmt_days(row[*c])))
                .collect()
        })
        .collect();
    let sums = months.column_sums();
    let fmt_sums = day_formatter(sums.iter().copied());
    rows.push(
        std::iter::once("Sum".to_string())
            .chain(order.iter().map(|(_, c)| fmt_sums(sums[*c])))
            .collect(),
    );
    rows.push(
        std::iter::once("Cluster".to_string())
            .chain(order.iter().map(|(_, c)| months.cluster_ids[*c].to_string()))
            .collect(),
    );
    Ok(csv_text(&head, &rows))
}

fn n_header(n_values: &[usize]) -> Vec<String> {
    let mut head = header(["cluster_id"]);
    head.extend(n_values.iter().map(|n| format!("N={n}")));
    head
}

fn grid_csv(n_values: &[usize], cluster_ids: &[usize], grid: &[Vec<f64>], max_row: &[f64]) -> String {
    let mut rows: Vec<Vec<String>> = cluster_ids
        .iter()
        .zip(grid)
        .map(|(id, row)| {
            std::iter::once(id.to_string())
                .chain(row.iter().map(|v| fixed(*v, 0)))
                .collect()
        })
        .collect();
    rows.push(
        std::iter::once("Max".to_string())
            .chain(max_row.iter().map(|v| fixed(*v, 0)))
            .collect(),
    );
    csv_text(&n_header(n_values), &rows)
}

/// Maximum top-oil °C per cluster and service count, integer-rounded.
pub fn top_oil_csv(study: &TemperatureStudy) -> String {
    grid_csv(&study.n_values, &study.cluster_ids, &study.top_oil, &study.max_top_oil)
}

pub fn hotspot_csv(study: &TemperatureStudy) -> String {
    grid_csv(&study.n_values, &study.cluster_ids, &study.hotspot, &study.max_hotspot)
}

/// Daily life loss per cluster and service count with a day-count column and
/// `Total`, `Annual` and `Economic loss` footer rows.
pub fn life_loss_csv(study: &LifeLossStudy) -> String {
    let mut head = n_header(&study.n_values);
    head.push("days".to_string());
    let fmt_days = day_formatter(study.member_days.iter().copied());
    let mut rows: Vec<Vec<String>> = study
        .cluster_ids
        .iter()
        .zip(&study.daily_loss)
        .zip(&study.member_days)
        .map(|((id, row), days)| {
            std::iter::once(id.to_string())
                .chain(row.iter().map(|v| fixed(*v, 3)))
                .chain(std::iter::once(fmt_days(*days)))
                .collect()
        })
        .collect();
    for (label, values, decimals) in [
        ("Total", &study.total_days, 1),
        ("Annual", &study.annual_days, 1),
        ("Economic loss", &study.economic_loss, 2),
    ] {
        rows.push(
            std::iter::once(label.to_string())
                .chain(values.iter().map(|v| fixed(*v, decimals)))
                .chain(std::iter::once("-".to_string()))
                .collect(),
        );
    }
    csv_text(&head, &rows)
}

pub fn summary_json(report: &AssessmentReport) -> String {
    let value = serde_json::json!({
        "max_services_by_temperature": report.temperature.max_services,
        "max_services_by_life": report.life.max_services,
        "budget": report.life.budget,
        "years": report.life.years,
        "replacement_cost": report.life.replacement_cost,
        "min_peak_threshold_pu": report
            .thresholds
            .iter()
            .map(|t| t.max_peak_load_pu)
            .fold(f64::INFINITY, f64::min),
    });
    let mut s = serde_json::to_string_pretty(&value).expect("summary serializes");
    s.push('\n');
    s
}

pub fn estimates_csv(rows: &[DayEstimate]) -> String {
    let head = header([
        "day",
        "date",
        "t_max_c",
        "t_min_c",
        "t_avg_c",
        "l_avg_kva",
        "weekday",
        "est_max_top_oil_c",
        "far_flag",
    ]);
    let rows: Vec<Vec<String>> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            vec![
                (i + 1).to_string(),
                r.query.date.to_string(),
                fixed(r.query.t_max, 2),
                fixed(r.query.t_min, 2),
                fixed(r.query.t_avg, 2),
                fixed(r.query.l_avg, 2),
                yes_no(r.query.weekday).to_string(),
                fixed(r.max_top_oil_c, 1),
                yes_no(r.far_flag).to_string(),
            ]
        })
        .collect();
    csv_text(&head, &rows)
}

const PALETTE: [&str; 10] = [
    "#d62728", "#ff7f0e", "#bcbd22", "#2ca02c", "#17becf", "#1f77b4", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// Grouped bar chart: one group per month, one bar per cluster in impact
/// order.
pub fn month_days_svg(months: &MonthClusterMatrix, thresholds: &[ThresholdResult]) -> Result<String> {
    let order = by_impact(months, thresholds)?;
    let (width, height) = (900.0, 420.0);
    let (left, right, top, bottom) = (50.0, 150.0, 20.0, 40.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;
    let peak = months.days.iter().flatten().copied().fold(0.0, f64::max).max(1.0);
    let group_w = plot_w / 12.0;
    let bar_w = group_w * 0.8 / order.len().max(1) as f64;

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    )
    .expect("string write");
    writeln!(
        svg,
        r#"<line x1="{left}" y1="{y}" x2="{x}" y2="{y}" stroke="black"/>"#,
        y = top + plot_h,
        x = left + plot_w
    )
    .expect("string write");
    writeln!(
        svg,
        r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{y}" stroke="black"/>"#,
        y = top + plot_h
    )
    .expect("string write");
    for tick in 0..=4 {
        let v = peak * tick as f64 / 4.0;
        let y = top + plot_h - plot_h * tick as f64 / 4.0;
        writeln!(
            svg,
            r#"<text x="{x:.1}" y="{y:.1}" text-anchor="end">{label}</text>"#,
            x = left - 4.0,
            label = fixed(v, 0)
        )
        .expect("string write");
    }
    for (m, row) in months.days.iter().enumerate() {
        let x0 = left + group_w * m as f64 + group_w * 0.1;
        for (slot, (_, c)) in order.iter().enumerate() {
            let h = plot_h * row[*c] / peak;
            writeln!(
                svg,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{bar_w:.2}" height="{h:.2}" fill="{color}"/>"#,
                x = x0 + bar_w * slot as f64,
                y = top + plot_h - h,
                color = PALETTE[slot % PALETTE.len()]
            )
            .expect("string write");
        }
        writeln!(
            svg,
            r#"<text x="{x:.1}" y="{y:.1}" text-anchor="middle">{name}</text>"#,
            x = left + group_w * (m as f64 + 0.5),
            y = top + plot_h + 16.0,
            name = MONTHS[m]
        )
        .expect("string write");
    }
    for (slot, (rank, c)) in order.iter().enumerate() {
        let y = top + 14.0 * slot as f64;
        writeln!(
            svg,
            r#"<rect x="{x:.1}" y="{y:.1}" width="10" height="10" fill="{color}"/><text x="{tx:.1}" y="{ty:.1}">Imp {rank} (cluster {id})</text>"#,
            x = width - right + 10.0,
            color = PALETTE[slot % PALETTE.len()],
            tx = width - right + 24.0,
            ty = y + 9.0,
            id = months.cluster_ids[*c]
        )
        .expect("string write");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes every assessment table into `dir`, plus the month chart when
/// `chart` is set. Returns the written paths.
pub fn write_assessment(dir: &Path, report: &AssessmentReport, chart: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = vec![
        write_file(dir, THRESHOLDS_FILE, &thresholds_csv(&report.thresholds))?,
        write_file(
            dir,
            MONTH_DAYS_FILE,
            &month_days_csv(&report.months, &report.thresholds)?,
        )?,
        write_file(dir, TOP_OIL_FILE, &top_oil_csv(&report.temperature))?,
        write_file(dir, HOTSPOT_FILE, &hotspot_csv(&report.temperature))?,
        write_file(dir, LIFE_LOSS_FILE, &life_loss_csv(&report.life))?,
        write_file(dir, SUMMARY_FILE, &summary_json(report))?,
    ];
    if chart {
        written.push(write_file(
            dir,
            MONTH_CHART_FILE,
            &month_days_svg(&report.months, &report.thresholds)?,
        )?);
    }
    Ok(written)
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(dir, name, text)
}
