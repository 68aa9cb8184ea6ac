//! Row-major index arithmetic over small axis-aligned arrays.

use std::ops::Range;

use crate::scalar::Scalar;

pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for a in (0..shape.len().saturating_sub(1)).rev() {
        s[a] = s[a + 1] * shape[a + 1];
    }
    s
}

/// Advance a row-major multi-index; false once it wraps around.
pub(crate) fn advance(idx: &mut [usize], shape: &[usize]) -> bool {
    for a in (0..idx.len()).rev() {
        idx[a] += 1;
        if idx[a] < shape[a] {
            return true;
        }
        idx[a] = 0;
    }
    false
}

/// Sum pairs of neighbours along `axes`, halving those extents.
/// Children are visited in a fixed bit order.
pub(crate) fn collapse<S: Scalar>(src: &[S], shape: &[usize], axes: Range<usize>) -> Vec<S> {
    let mut dst_shape = shape.to_vec();
    for a in axes.clone() {
        dst_shape[a] /= 2;
    }
    let src_strides = strides(shape);
    let k = axes.len();
    let offsets: Vec<usize> = (0..1usize << k)
        .map(|bits| {
            axes.clone()
                .enumerate()
                .map(|(i, a)| ((bits >> (k - 1 - i)) & 1) * src_strides[a])
                .sum()
        })
        .collect();
    let n: usize = dst_shape.iter().product();
    let mut out = Vec::with_capacity(n);
    let mut idx = vec![0usize; shape.len()];
    for _ in 0..n {
        let base: usize = idx
            .iter()
            .enumerate()
            .map(|(a, &i)| {
                let i = if axes.contains(&a) { 2 * i } else { i };
                i * src_strides[a]
            })
            .sum();
        let mut acc = S::zero();
        for &o in &offsets {
            acc = acc + src[base + o];
        }
        out.push(acc);
        advance(&mut idx, &dst_shape);
    }
    out
}

/// Adjoint of [`collapse`]: add each coarse value to its `2^k` children.
pub(crate) fn expand_add<S: Scalar>(
    dst: &mut [S],
    shape: &[usize],
    coarse: &[S],
    axes: Range<usize>,
) {
    let mut coarse_shape = shape.to_vec();
    for a in axes.clone() {
        coarse_shape[a] /= 2;
    }
    let cs = strides(&coarse_shape);
    let mut idx = vec![0usize; shape.len()];
    for v in dst.iter_mut() {
        let c: usize = idx
            .iter()
            .enumerate()
            .map(|(a, &i)| if axes.contains(&a) { i / 2 } else { i } * cs[a])
            .sum();
        *v = *v + coarse[c];
        advance(&mut idx, shape);
    }
}

/// Sum `3^N` blocks of the finest lattice into the level-`K` dyadic grid.
pub(crate) fn collapse_triples<S: Scalar>(cells: &[S], per_axis: usize, dim: usize) -> Vec<S> {
    let shape = vec![per_axis; dim];
    let coarse_shape = vec![per_axis / 3; dim];
    let fs = strides(&shape);
    let n: usize = coarse_shape.iter().product();
    let block = 3usize.pow(dim as u32);
    let offsets: Vec<usize> = (0..block)
        .map(|mut b| {
            let mut off = 0;
            for a in (0..dim).rev() {
                off += (b % 3) * fs[a];
                b /= 3;
            }
            off
        })
        .collect();
    let mut out = Vec::with_capacity(n);
    let mut idx = vec![0usize; dim];
    for _ in 0..n {
        let base: usize = idx.iter().zip(&fs).map(|(&i, &s)| 3 * i * s).sum();
        let mut acc = S::zero();
        for &o in &offsets {
            acc = acc + cells[base + o];
        }
        out.push(acc);
        advance(&mut idx, &coarse_shape);
    }
    out
}

/// Adjoint of [`collapse_triples`].
pub(crate) fn expand_triples<S: Scalar>(coarse: &[S], per_axis: usize, dim: usize) -> Vec<S> {
    let shape = vec![per_axis; dim];
    let cs = strides(&vec![per_axis / 3; dim]);
    let n: usize = shape.iter().product();
    let mut out = Vec::with_capacity(n);
    let mut idx = vec![0usize; dim];
    for _ in 0..n {
        let c: usize = idx.iter().zip(&cs).map(|(&i, &s)| (i / 3) * s).sum();
        out.push(coarse[c]);
        advance(&mut idx, &shape);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collapse_and_expand_are_adjoint() {
        let shape = [4usize, 6];
        let x: Vec<f64> = (0..24).map(|i| (i * 7 % 11) as f64).collect();
        let y: Vec<f64> = (0..12).map(|i| (i * 3 % 5) as f64 + 0.5).collect();
        let cx = collapse(&x, &shape, 1..2);
        assert_eq!(cx.len(), 12);
        let lhs: f64 = cx.iter().zip(&y).map(|(a, b)| a * b).sum();
        let mut ey = vec![0.0; 24];
        expand_add(&mut ey, &shape, &y, 1..2);
        let rhs: f64 = x.iter().zip(&ey).map(|(a, b)| a * b).sum();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn triples_round_trip_shapes() {
        let x: Vec<f64> = vec![1.0; 36];
        let c = collapse_triples(&x, 6, 2);
        assert_eq!(c, vec![9.0; 4]);
        let e = expand_triples(&c, 6, 2);
        assert_eq!(e.len(), 36);
    }
}
