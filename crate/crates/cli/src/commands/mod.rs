pub mod bench;
pub mod encode;
pub mod report;
pub mod sweep;
pub mod synth;
pub mod train;

use geoinr::geodata::GridFormat;
use std::path::Path;

pub(crate) fn grid_format(path: &Path, explicit: Option<&str>) -> crate::Result<GridFormat> {
    Ok(match explicit {
        Some(f) => f.parse()?,
        None => GridFormat::from_path(path),
    })
}
