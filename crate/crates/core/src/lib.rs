pub mod firstorder;
pub mod generators;
pub mod model;
pub mod norms;
pub mod numeric;
pub mod report;
pub mod secondorder;
pub mod svg;
