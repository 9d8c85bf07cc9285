//! Resolution and sectioning measurements on correlation maps.

mod defocus;
mod fwhm;
mod linescan;
mod report;

pub use defocus::{
    defocus_series, defocus_series_with, DefocusOptions, DefocusSeries, REFERENCE_DEFOCUS_NM,
};
pub use fwhm::{fwhm, fwhm_with, FitOptions, FwhmFit};
pub use linescan::{line_scan, LineScan};
pub use report::{resolution_report, OrderResolution, ResolutionReport};
