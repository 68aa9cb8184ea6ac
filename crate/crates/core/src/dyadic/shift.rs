//! Covering tripled dyadic cubes by single one-third shifted cubes.

use super::cube::{DyadicCube, Shift};

/// For a standard cube `Q`, a shift `tau` and a cube `P` of the
/// `tau`-shifted grid with `3Q ⊆ P` and `side(P) = 8 side(Q)`.
///
/// Works axis by axis. In units of `side(Q)` the axis interval of `3Q` is
/// `[m-1, m+2)`. When one standard interval of length 8 holds it, no shift
/// is needed. Otherwise `3Q` straddles a multiple of 8 and the shifted
/// interval is moved by 8/3 towards the side holding two of its three unit
/// pieces (a tie is impossible: the split is at an integer, the midpoint of
/// `3Q` at a half-integer).
pub fn shift_cover(q: &DyadicCube) -> (Vec<Shift>, DyadicCube) {
    assert!(q.is_standard(), "shift_cover expects a standard cube");
    let (shift, index): (Vec<Shift>, Vec<i64>) = q
        .index()
        .iter()
        .map(|&m| {
            let first = (m - 1).div_euclid(8);
            let last = (m + 1).div_euclid(8);
            if first == last {
                return (Shift::Zero, first);
            }
            // 3Q meets [8a, 8a+8) in 8a + 8 - (m - 1) unit pieces.
            let left = 8 * first + 8 - (m - 1);
            if left >= 2 {
                // P = 8/3 + [8a, 8a+8) = 8 (a + 1/3 + [0,1))
                (Shift::Plus, first)
            } else {
                // P = -8/3 + [8a+8, 8a+16) = 8 (a + 1 - 1/3 + [0,1))
                (Shift::Minus, last)
            }
        })
        .unzip();
    let p = DyadicCube::new(q.level() - 3, index, shift.clone());
    (shift, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval(c: &DyadicCube) -> (f64, f64) {
        let b = c.to_box();
        (b.lo_f64(0), b.hi_f64(0))
    }

    #[test]
    fn unit_interval() {
        let (tau, p) = shift_cover(&DyadicCube::unit(1));
        assert_eq!(tau, vec![Shift::Minus]);
        let (lo, hi) = interval(&p);
        assert!((lo + 8.0 / 3.0).abs() < 1e-12 && (hi - 16.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn half_interval() {
        let (tau, p) = shift_cover(&DyadicCube::standard(1, vec![0]));
        assert_eq!(tau, vec![Shift::Minus]);
        let (lo, hi) = interval(&p);
        assert!((lo + 4.0 / 3.0).abs() < 1e-12 && (hi - 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn interior_cube_needs_no_shift() {
        let q = DyadicCube::standard(0, vec![3]);
        let (tau, p) = shift_cover(&q);
        assert_eq!(tau, vec![Shift::Zero]);
        assert!(q.triple().is_subset_of(&p.to_box()));
    }

    #[test]
    fn all_residues_covered() {
        for k in -4..=4 {
            for m in -16..16 {
                for m2 in [0i64, 5, 7] {
                    let q = DyadicCube::standard(k, vec![m, m2]);
                    let (_, p) = shift_cover(&q);
                    assert_eq!(p.level(), k - 3);
                    assert!(q.triple().is_subset_of(&p.to_box()), "{q:?}");
                }
            }
        }
    }
}
