use crate::error::{Error, Result};

use super::config::GridConfig;
use super::cube::{DyadicCube, ProductRect, Shift};

/// The product cubes of one shifted grid with factor levels `0..=K` that
/// overlap `[0,1)^N` with positive volume.
///
/// Iteration order: level tuples lexicographically, then indices
/// lexicographically (axes of factor 1 first).
#[derive(Clone, Debug)]
pub struct RectFamily {
    config: GridConfig,
    shift: Vec<Shift>,
}

impl RectFamily {
    pub fn new(config: &GridConfig, shift: Vec<Shift>) -> Result<Self> {
        if shift.len() != config.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: config.total_dim(),
                got: shift.len(),
            });
        }
        Ok(Self {
            config: config.clone(),
            shift,
        })
    }

    pub fn standard(config: &GridConfig) -> Self {
        Self {
            config: config.clone(),
            shift: vec![Shift::Zero; config.total_dim()],
        }
    }

    pub fn config(&self) -> &GridConfig {
        &self.config
    }

    pub fn shift(&self) -> &[Shift] {
        &self.shift
    }

    pub fn is_standard(&self) -> bool {
        self.shift.iter().all(|&s| s == Shift::Zero)
    }

    /// Inclusive index range on `axis` at `level`.
    pub fn axis_range(&self, axis: usize, level: u32) -> (i64, i64) {
        let t = self.shift[axis].numerator();
        let top = 3i64 << level;
        // 3m + t + 3 > 0 and 3m + t < 3 * 2^k
        let lo = (-3 - t).div_euclid(3) + 1;
        let hi = -((t - top).div_euclid(3)) - 1;
        (lo, hi)
    }

    /// All level tuples `(k_1..k_n)` in lexicographic order.
    pub fn level_tuples(&self) -> Vec<Vec<u32>> {
        let n = self.config.factors();
        let k = self.config.depth();
        let mut out = Vec::new();
        let mut t = vec![0u32; n];
        loop {
            out.push(t.clone());
            let mut i = n;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if t[i] < k {
                    t[i] += 1;
                    t[i + 1..].iter_mut().for_each(|x| *x = 0);
                    break;
                }
            }
        }
    }

    fn ranges_for(&self, levels: &[u32]) -> Vec<(i64, i64)> {
        self.config
            .axis_factors()
            .iter()
            .enumerate()
            .map(|(a, &j)| self.axis_range(a, levels[j]))
            .collect()
    }

    /// Number of members.
    pub fn len(&self) -> usize {
        self.level_tuples()
            .iter()
            .map(|t| {
                self.ranges_for(t)
                    .iter()
                    .map(|(lo, hi)| (hi - lo + 1) as usize)
                    .product::<usize>()
            })
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Members with the given level tuple, lexicographic in index.
    pub fn rects_at(&self, levels: &[u32]) -> Vec<ProductRect> {
        let ranges = self.ranges_for(levels);
        let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        let mut out = Vec::new();
        if ranges.iter().any(|(lo, hi)| lo > hi) {
            return out;
        }
        loop {
            out.push(self.build(levels, &idx));
            let mut a = idx.len();
            loop {
                if a == 0 {
                    return out;
                }
                a -= 1;
                if idx[a] < ranges[a].1 {
                    idx[a] += 1;
                    for b in a + 1..idx.len() {
                        idx[b] = ranges[b].0;
                    }
                    break;
                }
            }
        }
    }

    fn build(&self, levels: &[u32], idx: &[i64]) -> ProductRect {
        let factors = (0..self.config.factors())
            .map(|j| {
                let axes = self.config.factor_axes(j);
                DyadicCube::new(
                    levels[j] as i32,
                    idx[axes.clone()].to_vec(),
                    self.shift[axes].to_vec(),
                )
            })
            .collect();
        ProductRect::from_factors_unchecked(factors)
    }

    pub fn iter(&self) -> impl Iterator<Item = ProductRect> + '_ {
        self.level_tuples()
            .into_iter()
            .flat_map(move |t| self.rects_at(&t))
    }
}

/// Stream of the product cubes of the `tau`-grid meeting the domain.
pub fn enumerate_rects(config: &GridConfig, shift: &[Shift]) -> Result<Vec<ProductRect>> {
    Ok(RectFamily::new(config, shift.to_vec())?.iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_factor_depth_two() {
        let cfg = GridConfig::new(vec![1], 2).unwrap();
        let rects = enumerate_rects(&cfg, &[Shift::Zero]).unwrap();
        assert_eq!(rects.len(), 7);
        assert_eq!(rects[0], ProductRect::top(&cfg));
        assert_eq!(rects[1].levels(), vec![1]);
        assert_eq!(rects[6].factor(0).index(), &[3]);
    }

    #[test]
    fn two_factors_depth_one() {
        let cfg = GridConfig::new(vec![1, 1], 1).unwrap();
        assert_eq!(RectFamily::standard(&cfg).len(), 9);
    }

    #[test]
    fn count_matches_closed_form() {
        for k in 1..=8 {
            let cfg = GridConfig::new(vec![1], k).unwrap();
            let fam = RectFamily::standard(&cfg);
            assert_eq!(fam.len(), (1usize << (k + 1)) - 1);
            assert_eq!(fam.iter().count(), fam.len());
        }
    }

    #[test]
    fn shifted_ranges_overlap_domain() {
        let cfg = GridConfig::new(vec![1], 3).unwrap();
        for s in Shift::ALL {
            let fam = RectFamily::new(&cfg, vec![s]).unwrap();
            for r in fam.iter() {
                let b = r.to_box();
                assert!(b.hi_f64(0) > 0.0 && b.lo_f64(0) < 1.0, "{r:?}");
            }
            let expected: usize = (0..=3)
                .map(|k| (1usize << k) + (s != Shift::Zero) as usize)
                .sum();
            assert_eq!(fam.len(), expected);
        }
    }

    #[test]
    fn order_is_level_major() {
        let cfg = GridConfig::new(vec![1, 1], 2).unwrap();
        let rects: Vec<_> = RectFamily::standard(&cfg).iter().collect();
        let mut sorted = rects.clone();
        sorted.sort_by_key(|r| {
            (
                r.levels(),
                r.factors()
                    .iter()
                    .map(|q| q.index().to_vec())
                    .collect::<Vec<_>>(),
            )
        });
        assert_eq!(rects, sorted);
    }
}
