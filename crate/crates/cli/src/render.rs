//! Aligned plain-text renderings of the JSON reports.

use vibci_core::select::{ChannelReport, PairReport};

use crate::reports::{OnlineSimReport, StatsReport};

fn pad(s: &str, width: usize) -> String {
    format!("{s:<width$}")
}

/// Table of per-channel accuracies: one row per subject with
/// `mean (±std)` cells and a final averages row.
pub fn channel_table(report: &ChannelReport) -> String {
    let cells: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|c| format!("{:.3} (\u{00b1}{:.3})", c.mean, c.std))
                .collect()
        })
        .collect();
    let avg_cells: Vec<String> = report.averages.iter().map(|a| format!("{a:.3}")).collect();

    let label_width = report
        .subjects
        .iter()
        .map(|s| s.len())
        .chain(std::iter::once(4)) // "Avg."
        .max()
        .unwrap_or(4)
        + 2;
    let col_widths: Vec<usize> = report
        .channels
        .iter()
        .enumerate()
        .map(|(c, name)| {
            cells
                .iter()
                .map(|row| row[c].len())
                .chain(std::iter::once(name.len()))
                .chain(std::iter::once(avg_cells[c].len()))
                .max()
                .unwrap_or(name.len())
                + 2
        })
        .collect();

    let mut out = String::new();
    out.push_str(&pad("", label_width));
    for (c, name) in report.channels.iter().enumerate() {
        out.push_str(&pad(name, col_widths[c]));
    }
    out.push('\n');
    for (s, subject) in report.subjects.iter().enumerate() {
        out.push_str(&pad(subject, label_width));
        for c in 0..report.channels.len() {
            out.push_str(&pad(&cells[s][c], col_widths[c]));
        }
        out.push('\n');
    }
    out.push_str(&pad("Avg.", label_width));
    for (c, avg) in avg_cells.iter().enumerate() {
        out.push_str(&pad(avg, col_widths[c]));
    }
    out.push('\n');
    out
}

/// Table of per-pair accuracies with a per-subject average column.
pub fn pair_table(report: &PairReport) -> String {
    let headers: Vec<String> = report
        .pairs
        .iter()
        .map(|(a, b)| format!("{a}-{b}"))
        .chain(std::iter::once("Avg.".to_string()))
        .collect();
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .zip(&report.subject_averages)
        .map(|(row, avg)| {
            row.iter()
                .map(|c| format!("{:.3}", c.mean))
                .chain(std::iter::once(format!("{avg:.3}")))
                .collect()
        })
        .collect();

    let label_width = report.subjects.iter().map(|s| s.len()).max().unwrap_or(0) + 2;
    let col_widths: Vec<usize> = headers
        .iter()
        .enumerate()
        .map(|(c, h)| {
            rows.iter()
                .map(|r| r[c].len())
                .chain(std::iter::once(h.len()))
                .max()
                .unwrap_or(h.len())
                + 2
        })
        .collect();

    let mut out = String::new();
    out.push_str(&pad("", label_width));
    for (c, h) in headers.iter().enumerate() {
        out.push_str(&pad(h, col_widths[c]));
    }
    out.push('\n');
    for (s, subject) in report.subjects.iter().enumerate() {
        out.push_str(&pad(subject, label_width));
        for c in 0..headers.len() {
            out.push_str(&pad(&rows[s][c], col_widths[c]));
        }
        out.push('\n');
    }
    out
}

/// Success-rate rows, one per run.
pub fn online_table(report: &OnlineSimReport) -> String {
    let header = report.channels.join("-");
    let label_width = report
        .runs
        .iter()
        .map(|r| format!("Run{}", r.run).len())
        .max()
        .unwrap_or(4)
        + 2;
    let mut out = String::new();
    out.push_str(&pad("", label_width));
    out.push_str(&header);
    out.push('\n');
    for run in &report.runs {
        out.push_str(&pad(&format!("Run{}", run.run), label_width));
        out.push_str(&run.display);
        out.push('\n');
    }
    out
}

/// Overall channel statistics plus per-class significance summaries.
pub fn stats_table(report: &StatsReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "subject {}   band {}-{} Hz   alpha {}{}   selection {:?}\n",
        report.subject,
        report.band.low_hz,
        report.band.high_hz,
        report.alpha,
        if report.bonferroni { " (bonferroni)" } else { "" },
        report.selection_mode,
    ));
    out.push_str(&format!("selected: {}\n\n", report.selected.join(", ")));
    out.push_str("overall (all imagery vs rest)\n");
    out.push_str(&format!("{:<10}{:>10}{:>10}  sig\n", "channel", "t", "p"));
    for stat in &report.overall {
        out.push_str(&format!(
            "{:<10}{:>10.3}{:>10.4}  {}\n",
            stat.channel,
            stat.t_value,
            stat.p_value,
            if stat.significant { "*" } else { "" }
        ));
    }
    for class in &report.per_class {
        let significant: Vec<&str> = class
            .channels
            .iter()
            .filter(|c| c.significant)
            .map(|c| c.channel.as_str())
            .collect();
        out.push_str(&format!(
            "\n{:?} vs rest: {} significant [{}]\n",
            class.class,
            significant.len(),
            significant.join(", ")
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use vibci_core::select::CellStat;

    #[test]
    fn channel_table_headers_match_channel_list() {
        let report = ChannelReport::from_rows(
            vec!["AF3".into(), "Oz".into()],
            vec!["sub01".into()],
            vec![vec![
                CellStat { mean: 0.611, std: 0.026 },
                CellStat { mean: 0.602, std: 0.02 },
            ]],
        )
        .unwrap();
        let text = channel_table(&report);
        let header = text.lines().next().unwrap();
        assert!(header.contains("AF3"));
        assert!(header.contains("Oz"));
        assert!(text.contains("0.611 (\u{00b1}0.026)"));
        assert!(text.lines().last().unwrap().starts_with("Avg."));
    }

    #[test]
    fn pair_table_has_average_column() {
        let report = PairReport::from_rows(
            vec![("AFz".into(), "AF3".into()), ("AFz".into(), "Oz".into())],
            vec!["sub01".into()],
            vec![vec![
                CellStat { mean: 0.687, std: 0.0 },
                CellStat { mean: 0.642, std: 0.0 },
            ]],
        )
        .unwrap();
        let text = pair_table(&report);
        assert!(text.lines().next().unwrap().contains("AFz-AF3"));
        assert!(text.contains("Avg."));
        assert!(text.contains("0.665")); // (0.687 + 0.642) / 2 = 0.6645 rounded
    }
}
