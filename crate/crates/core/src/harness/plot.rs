use std::fmt::Write;

/// Kind of result file a plotting script is generated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Ber,
    Bound,
    Mse,
}

/// A gnuplot script drawing `csv` into `image` (PNG).
///
/// BER files get one curve per detector; `extra` lists further BER or bound
/// files overlaid on the same axes.
pub fn plot_script(kind: PlotKind, csv: &str, image: &str, extra: &[(PlotKind, String)]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set terminal pngcairo size 900,650");
    let _ = writeln!(s, "set output '{image}'");
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key bottom left");
    let _ = writeln!(s, "set grid");
    let _ = writeln!(s, "set logscale y");
    let _ = writeln!(s, "set format y '10^{{%L}}'");
    match kind {
        PlotKind::Mse => {
            let _ = writeln!(s, "set xlabel '1/N0 (dB)'");
            let _ = writeln!(s, "set ylabel 'MSE'");
        }
        _ => {
            let _ = writeln!(s, "set xlabel 'Eb/N0 (dB)'");
            let _ = writeln!(s, "set ylabel 'BER'");
        }
    }
    let mut curves = vec![curve(kind, csv)];
    curves.extend(extra.iter().map(|(k, f)| curve(*k, f)));
    let _ = writeln!(s, "plot {}", curves.join(", \\\n     "));
    s
}

fn curve(kind: PlotKind, csv: &str) -> String {
    match kind {
        PlotKind::Ber => format!(
            "for [d in system(\"tail -n +2 '{csv}' | cut -d, -f2 | sort -u\")] \
             '{csv}' using 3:(strcol(2) eq d ? $6 : 1/0) skip 1 with linespoints title d"
        ),
        PlotKind::Bound => {
            format!("'{csv}' using 2:3 skip 1 with lines dashtype 2 title 'union bound'")
        }
        PlotKind::Mse => format!(
            "'{csv}' using 1:2 skip 1 with points title 'simulated', \
             '{csv}' using 1:3 skip 1 with lines title 'theory'"
        ),
    }
}
