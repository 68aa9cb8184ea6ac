//! Positive dyadic operators, fractional integrals in kernel and dyadic
//! form, and the multilinear form.

mod boxes;
mod exponents;
mod forms;
mod kernel;
mod kernel_form;

pub use exponents::{check_carleson, conjugate, HlsExponents, MultilinearExponents, HLS_TOLERANCE};
pub use forms::{
    apply_frac_dyadic, apply_perez, apply_positive, apply_shifted_sum, mlinear_form,
    rect_integrals, shift_bound_ratio, Applied, Diagnostics, DominationReport, FracOperator,
    OperatorForm,
};
pub use kernel::{Kernel, KernelSpec};
pub use kernel_form::{
    apply_frac_kernel, closed_kernel, kernel_equivalence, kernel_sum, EquivalenceStats,
    MATRIX_CACHE_CELLS,
};

pub(crate) use forms::mlinear_from_integrals;
