//! `geoinr bench`: one CSV row per matched size.

use std::io::Write;

use geoinr::encodings::bench::{encoding_benchmark, SizeRow};

use super::encode::csv_err;
use crate::artifacts::write_atomic;
use crate::error::Result;
use crate::BenchArgs;

pub const HEADER: [&str; 11] = [
    "size",
    "legendre",
    "dilations",
    "rotations",
    "sh_mean_ms",
    "sh_std_ms",
    "sh_closed_form_mean_ms",
    "sh_closed_form_std_ms",
    "sw_mean_ms",
    "sw_std_ms",
    "repetitions",
];

pub fn run(args: BenchArgs, stdout: &mut dyn Write) -> Result<()> {
    let rows: Vec<SizeRow> = args.sizes.iter().map(|&s| SizeRow::for_size(s)).collect::<geoinr::Result<_>>()?;
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(HEADER).map_err(csv_err)?;
    for row in &rows {
        // harmonic (recurrence), harmonic (closed form), wavelet
        let timed = encoding_benchmark(&[row.harmonic(), row.wavelet()], args.points, args.reps)?;
        let f = |v: f64| format!("{v:.4}");
        out.write_record([
            row.size.to_string(),
            row.legendre.to_string(),
            row.dilations.to_string(),
            row.rotations.to_string(),
            f(timed[0].mean_ms),
            f(timed[0].std_ms),
            f(timed[1].mean_ms),
            f(timed[1].std_ms),
            f(timed[2].mean_ms),
            f(timed[2].std_ms),
            timed[0].repetitions.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = out.into_inner().map_err(|e| crate::CliError::Io(e.into_error()))?;
    match &args.out {
        Some(path) => write_atomic(path, &bytes)?,
        None => stdout.write_all(&bytes)?,
    }
    Ok(())
}
