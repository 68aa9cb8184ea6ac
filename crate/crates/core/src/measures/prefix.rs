//! N-dimensional summed-area table with double-word entries.

use crate::dyadic::GeoBox;
use crate::scalar::{DoubleWord, Scalar};

use super::lattice::{advance, strides};

/// Inclusion-exclusion prefix sums over the finest lattice.
///
/// Entries are kept as unevaluated `hi + lo` pairs, so the difference of
/// two large prefixes still resolves a tiny box mass to full relative
/// precision. Corners at half-cell positions are answered by multilinear
/// interpolation, which is exact for cellwise constant densities.
#[derive(Clone, Debug)]
pub struct PrefixTable<S> {
    per_axis: usize,
    dim: usize,
    strides: Vec<usize>,
    data: Vec<DoubleWord<S>>,
}

impl<S: Scalar> PrefixTable<S> {
    pub fn new(cells: &[S], per_axis: usize, dim: usize) -> Self {
        let shape = vec![per_axis + 1; dim];
        let st = strides(&shape);
        let n: usize = shape.iter().product();
        let mut data = vec![DoubleWord::zero(); n];
        let cell_shape = vec![per_axis; dim];
        let mut idx = vec![0usize; dim];
        for &c in cells {
            let at: usize = idx.iter().zip(&st).map(|(&i, &s)| (i + 1) * s).sum();
            data[at] = DoubleWord::from_scalar(c);
            advance(&mut idx, &cell_shape);
        }
        for a in 0..dim {
            let mut idx = vec![0usize; dim];
            loop {
                if idx[a] > 0 {
                    let at: usize = idx.iter().zip(&st).map(|(&i, &s)| i * s).sum();
                    data[at] = data[at].add(data[at - st[a]]);
                }
                if !advance(&mut idx, &shape) {
                    break;
                }
            }
        }
        Self {
            per_axis,
            dim,
            strides: st,
            data,
        }
    }

    /// Prefix value at a corner given in half-cell units (`0..=2L`).
    fn corner(&self, half: &[i64]) -> DoubleWord<S> {
        let mut acc = DoubleWord::zero();
        let odd: Vec<usize> = (0..self.dim).filter(|&a| half[a] % 2 != 0).collect();
        let base: Vec<usize> = half.iter().map(|&h| (h / 2) as usize).collect();
        let half_weight = S::from_f64_lossy(0.5).powi(odd.len() as i32);
        for bits in 0..1usize << odd.len() {
            let mut at = 0usize;
            for a in 0..self.dim {
                let mut i = base[a];
                if let Some(pos) = odd.iter().position(|&o| o == a) {
                    i += (bits >> pos) & 1;
                }
                at += i * self.strides[a];
            }
            acc = acc.add(self.data[at]);
        }
        acc.scale_pow2(half_weight)
    }

    /// Total over a box whose corners are integers in half-cell units.
    /// The box is clipped to the lattice first.
    pub fn query_units(&self, lo: &[i64], hi: &[i64]) -> S {
        let top = 2 * self.per_axis as i64;
        let lo: Vec<i64> = lo.iter().map(|&x| x.clamp(0, top)).collect();
        let hi: Vec<i64> = hi.iter().map(|&x| x.clamp(0, top)).collect();
        if lo.iter().zip(&hi).any(|(l, h)| l >= h) {
            return S::zero();
        }
        let mut acc = DoubleWord::zero();
        let mut corner = vec![0i64; self.dim];
        for bits in 0..1usize << self.dim {
            let mut negative = false;
            for a in 0..self.dim {
                if (bits >> a) & 1 == 1 {
                    corner[a] = hi[a];
                } else {
                    corner[a] = lo[a];
                    negative = !negative;
                }
            }
            let v = self.corner(&corner);
            acc = acc.add(if negative { v.neg() } else { v });
        }
        acc.value().max(S::zero())
    }

    /// Total over a box already expressed in the grid's global unit.
    pub fn query_box(&self, b: &GeoBox) -> S {
        self.query_units(b.lo(), b.hi())
    }

    pub fn total(&self) -> S {
        self.data[self.data.len() - 1].value()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_queries() {
        let cells = [1.0f64, 2.0, 3.0, 4.0];
        let t = PrefixTable::new(&cells, 4, 1);
        assert_eq!(t.total(), 10.0);
        // cells 1..3 in half units 2..6
        assert_eq!(t.query_units(&[2], &[6]), 5.0);
        // half cell at each end: 0.5*1 + 2 + 3 + 0.5*4 ... [1, 7)
        assert_eq!(t.query_units(&[1], &[7]), 0.5 + 2.0 + 3.0 + 2.0);
        assert_eq!(t.query_units(&[-5], &[100]), 10.0);
        assert_eq!(t.query_units(&[3], &[3]), 0.0);
    }

    #[test]
    fn two_dimensional_half_cells() {
        // 2x2 lattice with values [[1,2],[3,4]]
        let t = PrefixTable::new(&[1.0f64, 2.0, 3.0, 4.0], 2, 2);
        assert_eq!(t.query_units(&[0, 0], &[4, 4]), 10.0);
        assert_eq!(t.query_units(&[0, 0], &[2, 2]), 1.0);
        // centre-to-centre square: a quarter of each cell
        assert_eq!(t.query_units(&[1, 1], &[3, 3]), 2.5);
    }

    #[test]
    fn tiny_box_keeps_precision() {
        let mut cells = vec![1.0f64; 1000];
        cells[999] = 1e-12;
        let t = PrefixTable::new(&cells, 1000, 1);
        let v = t.query_units(&[1998], &[2000]);
        assert!((v - 1e-12).abs() / 1e-12 < 1e-12);
    }
}
