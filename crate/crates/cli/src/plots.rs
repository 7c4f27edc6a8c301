//! Self-contained gnuplot scripts with inline data blocks.

use std::fmt::Write;

use genfunc::grid::GrowthProfile;
use genfunc::microlocal::WavefrontReport;

fn finite_or_nan(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else {
        "NaN".into()
    }
}

/// Fitted exponents against their index, one line per series.
pub fn profile_script(title: &str, xlabel: &str, series: &[(&str, &GrowthProfile)]) -> String {
    let mut s = String::new();
    for (k, (_, p)) in series.iter().enumerate() {
        writeln!(s, "$S{k} << EOD").unwrap();
        for (i, e) in p.exponents().iter().enumerate() {
            writeln!(s, "{i} {}", finite_or_nan(*e)).unwrap();
        }
        writeln!(s, "EOD").unwrap();
    }
    writeln!(s, "set title \"{title}\"\nset xlabel \"{xlabel}\"\nset ylabel \"fitted exponent\"\nset key left top").unwrap();
    let plots: Vec<String> = series.iter().enumerate().map(|(k, (label, _))| format!("$S{k} using 1:2 with linespoints title \"{label}\"")).collect();
    writeln!(s, "plot {}", plots.join(", ")).unwrap();
    s
}

/// Flagged `(x, direction)` pairs as unit arrows from their centers.
pub fn wavefront_script(report: &WavefrontReport) -> String {
    let mut s = String::from("$FLAGS << EOD\n");
    let dim = report.cutoffs.centers.first().map_or(1, |c| c.len());
    for (c, k) in &report.wavefront {
        let x = &report.cutoffs.centers[*c];
        let a = report.cones[*k].axis();
        let scale = 0.4 * report.cutoffs.cell;
        if dim == 1 {
            writeln!(s, "{} 0 {} 0", x[0], scale * a[0]).unwrap();
        } else {
            writeln!(s, "{} {} {} {}", x[0], x[1], scale * a[0], scale * a[1]).unwrap();
        }
    }
    s.push_str("EOD\n$SING << EOD\n");
    for i in &report.singsupp_estimate {
        let x = &report.cutoffs.centers[*i];
        writeln!(s, "{} {}", x[0], x.get(1).copied().unwrap_or(0.0)).unwrap();
    }
    s.push_str("EOD\n");
    writeln!(s, "set title \"wavefront ({})\"\nset size ratio -1\nset xlabel \"x1\"\nset ylabel \"{}\"", report.family.label(), if dim == 1 { "" } else { "x2" })
        .unwrap();
    s.push_str("plot $SING using 1:2 with points pt 7 title \"singular support\", $FLAGS using 1:2:3:4 with vectors title \"flagged directions\"\n");
    s
}
