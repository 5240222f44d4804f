//! gnuplot scripts next to the CSV files. Each CSV has a header and a units
//! row, hence `skip 2`.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

const PREAMBLE: &str = "set datafile separator ','\nset grid\nset key outside\n";

fn write(dir: &Path, name: &str, body: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, format!("{PREAMBLE}{body}")).with_context(|| format!("writing {}", path.display()))
}

pub fn edges(dir: &Path) -> Result<()> {
    write(
        dir,
        "edges.gp",
        "set terminal pngcairo size 1500,450\n\
         set output 'edges.png'\n\
         set multiplot layout 1,3\n\
         set xlabel 'CRB (dB)'; set ylabel 'rate (bps/Hz)'\n\
         plot 'edge_cr.csv' skip 2 using 3:4 with linespoints title 'C-R'\n\
         set xlabel 'energy (W)'; set ylabel 'rate (bps/Hz)'\n\
         plot 'edge_re.csv' skip 2 using 5:4 with linespoints title 'R-E'\n\
         set xlabel 'CRB (dB)'; set ylabel 'energy (W)'\n\
         plot 'edge_ce.csv' skip 2 using 3:5 with linespoints title 'C-E'\n\
         unset multiplot\n",
    )
}

pub fn surface(dir: &Path) -> Result<()> {
    write(
        dir,
        "surface.gp",
        "set terminal pngcairo size 900,700\n\
         set output 'surface.png'\n\
         set xlabel 'CRB threshold (dB)'; set ylabel 'energy threshold (W)'; set zlabel 'rate (bps/Hz)'\n\
         splot 'surface.csv' skip 2 using 3:1:4 with points pt 7 ps 0.6 title 'surface', \\\n\
         \x20     'edge_cr.csv' skip 2 using 3:5:4 with lines lw 2 title 'C-R', \\\n\
         \x20     'edge_re.csv' skip 2 using 3:5:4 with lines lw 2 title 'R-E', \\\n\
         \x20     'edge_ce.csv' skip 2 using 3:5:4 with lines lw 2 title 'C-E'\n",
    )
}

pub fn benchmark(dir: &Path) -> Result<()> {
    write(
        dir,
        "benchmark_ts.gp",
        "set terminal pngcairo size 900,600\n\
         set output 'benchmark_ts.png'\n\
         set xlabel 'CRB threshold (dB)'; set ylabel 'rate (bps/Hz)'\n\
         plot 'benchmark_ts.csv' skip 2 using 3:4 with linespoints title 'optimal', \\\n\
         \x20    'benchmark_ts.csv' skip 2 using 3:7 with linespoints title 'time switching'\n",
    )
}
