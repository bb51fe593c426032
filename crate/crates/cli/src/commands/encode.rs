//! `geoinr encode`: `lat,lon` rows in, `lat,lon,e0,…` rows out.

use std::io::{BufRead, Write};

use geoinr::encodings::{Encoder, EncodingSpec};
use geoinr::sphere::SpherePoint;

use crate::error::{CliError, Result};
use crate::EncodeArgs;

pub fn run(args: EncodeArgs, stdin: &mut dyn BufRead, stdout: &mut dyn Write) -> Result<()> {
    let spec: EncodingSpec = args.encoding.parse()?;
    let encoder = Encoder::new(&spec)?;
    let mut out = csv::Writer::from_writer(stdout);
    let mut header = vec!["lat".to_string(), "lon".to_string()];
    header.extend((0..encoder.len()).map(|i| format!("e{i}")));
    out.write_record(&header).map_err(csv_err)?;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).flexible(true).from_reader(stdin);
    let mut features = vec![0.0; encoder.len()];
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() < 2 {
            return Err(CliError::Usage(format!("line {}: expected lat,lon", i + 1)));
        }
        let (lat, lon) = match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(lat), Ok(lon)) => (lat, lon),
            // a header line
            _ if i == 0 => continue,
            _ => return Err(CliError::Usage(format!("line {}: expected numeric lat,lon", i + 1))),
        };
        let p = SpherePoint::from_lat_lon_deg(lat, lon)?;
        encoder.encode_into(p, &mut features);
        let mut row = vec![rec[0].to_string(), rec[1].to_string()];
        row.extend(features.iter().map(|v| v.to_string()));
        out.write_record(&row).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> CliError {
    CliError::Usage(format!("csv: {e}"))
}
