//! Boxes whose corners sit on finest-cell boundaries.

use crate::dyadic::{DyadicCube, GridConfig, ProductRect};
use crate::measures::PrefixTable;
use crate::scalar::{DoubleWord, Scalar};

/// `[lo, hi)` in finest-cell units, clipped to `[0, L]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct CellBox {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl CellBox {
    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(l, h)| l >= h)
    }
}

/// Cell-unit box of `R` (`inflate = 0`) or `3R` (`inflate = 1`), clipped
/// to the domain.
pub(crate) fn cell_box(config: &GridConfig, rect: &ProductRect, inflate: i64) -> CellBox {
    let k = config.depth() as i32;
    let top = config.cells_per_axis() as i64;
    let mut lo = Vec::with_capacity(config.total_dim());
    let mut hi = Vec::with_capacity(config.total_dim());
    for q in rect.factors() {
        push_cube(q, k, top, inflate, &mut lo, &mut hi);
    }
    CellBox { lo, hi }
}

fn push_cube(q: &DyadicCube, k: i32, top: i64, inflate: i64, lo: &mut Vec<i64>, hi: &mut Vec<i64>) {
    let scale = 1i64 << (k - q.level());
    for (&m, s) in q.index().iter().zip(q.shift()) {
        let l = (3 * m + s.numerator() - 3 * inflate) * scale;
        let h = (3 * m + s.numerator() + 3 + 3 * inflate) * scale;
        lo.push(l.clamp(0, top));
        hi.push(h.clamp(0, top));
    }
}

/// Box integrals of a cellwise mass vector.
pub(crate) struct CellPrefix<S> {
    table: PrefixTable<S>,
}

impl<S: Scalar> CellPrefix<S> {
    pub fn new(config: &GridConfig, masses: &[S]) -> Self {
        Self {
            table: PrefixTable::new(masses, config.cells_per_axis(), config.total_dim()),
        }
    }

    pub fn sum(&self, b: &CellBox) -> S {
        let lo: Vec<i64> = b.lo.iter().map(|x| 2 * x).collect();
        let hi: Vec<i64> = b.hi.iter().map(|x| 2 * x).collect();
        self.table.query_units(&lo, &hi)
    }
}

/// `x -> sum_i c_i 1_{B_i}(x)` on finest cells, via a difference array
/// kept in double-word precision.
pub(crate) fn spread<S: Scalar>(config: &GridConfig, terms: &[(&CellBox, S)]) -> Vec<S> {
    let l = config.cells_per_axis();
    let dim = config.total_dim();
    let ext = l + 1;
    let strides: Vec<usize> = (0..dim).map(|a| ext.pow((dim - 1 - a) as u32)).collect();
    let mut diff = vec![DoubleWord::<S>::zero(); ext.pow(dim as u32)];
    for (b, c) in terms {
        if b.is_empty() || *c == S::zero() {
            continue;
        }
        for bits in 0..1usize << dim {
            let mut at = 0;
            let mut negative = false;
            for a in 0..dim {
                if (bits >> a) & 1 == 1 {
                    at += b.hi[a] as usize * strides[a];
                    negative = !negative;
                } else {
                    at += b.lo[a] as usize * strides[a];
                }
            }
            let v = DoubleWord::from_scalar(*c);
            diff[at] = diff[at].add(if negative { v.neg() } else { v });
        }
    }
    for a in 0..dim {
        let st = strides[a];
        for i in 0..diff.len() {
            if (i / st) % ext > 0 {
                diff[i] = diff[i].add(diff[i - st]);
            }
        }
    }
    let mut out = Vec::with_capacity(config.cell_count());
    for i in 0..diff.len() {
        if (0..dim).all(|a| (i / strides[a]) % ext < l) {
            out.push(diff[i].value());
        }
    }
    out
}
