//! Rectangular weights, grid functions and their masses.

mod field;
mod generate;
mod io;
pub(crate) mod lattice;
mod measure;
mod prefix;

pub use field::{FieldLayout, RectField};
pub use generate::{gen_cascade, gen_power, gen_uniform, keyed_rng, WeightSpec, RNG_NAME};
pub use io::{decode_f64, encode_f64, GridFunctionFile, MetaRecord, WeightFile, FORMAT_VERSION};
pub use measure::{cell_index, GridFunction, Measure, Weight, WeightMeta};
pub use prefix::PrefixTable;
