//! Values attached to every standard product cube with levels `0..=K`.

use std::sync::Arc;

use crate::dyadic::{DyadicCube, GridConfig, ProductRect, RectFamily};
use crate::scalar::Scalar;

use super::lattice::{collapse, collapse_triples, expand_add, expand_triples, strides};

/// Shape bookkeeping shared by every [`RectField`] of one configuration.
///
/// Storage order is the enumeration order of the standard family, so slot
/// `i` of a field corresponds to the `i`-th rectangle of
/// [`RectFamily::standard`].
#[derive(Debug)]
pub struct FieldLayout {
    config: GridConfig,
    tuples: Vec<Vec<u32>>,
    shapes: Vec<Vec<usize>>,
    offsets: Vec<usize>,
    len: usize,
}

impl FieldLayout {
    pub fn new(config: &GridConfig) -> Arc<Self> {
        let tuples = RectFamily::standard(config).level_tuples();
        let axis_factor = config.axis_factors();
        let shapes: Vec<Vec<usize>> = tuples
            .iter()
            .map(|t| axis_factor.iter().map(|&j| 1usize << t[j]).collect())
            .collect();
        let mut offsets = Vec::with_capacity(tuples.len());
        let mut len = 0;
        for s in &shapes {
            offsets.push(len);
            len += s.iter().product::<usize>();
        }
        Arc::new(Self {
            config: config.clone(),
            tuples,
            shapes,
            offsets,
            len,
        })
    }

    pub fn config(&self) -> &GridConfig {
        &self.config
    }

    /// Number of standard product cubes.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn tuples(&self) -> &[Vec<u32>] {
        &self.tuples
    }

    pub(crate) fn shape(&self, t: usize) -> &[usize] {
        &self.shapes[t]
    }

    pub(crate) fn range(&self, t: usize) -> std::ops::Range<usize> {
        let start = self.offsets[t];
        start..start + self.shapes[t].iter().product::<usize>()
    }

    pub(crate) fn tuple_index(&self, levels: &[u32]) -> usize {
        let base = self.config.depth() as usize + 1;
        levels.iter().fold(0, |acc, &k| acc * base + k as usize)
    }

    /// Slot of a standard rectangle inside the domain, if any.
    pub fn slot(&self, rect: &ProductRect) -> Option<usize> {
        if !rect.is_standard() {
            return None;
        }
        let k = self.config.depth() as i32;
        let levels = rect.levels();
        if levels.iter().any(|&l| l < 0 || l > k) {
            return None;
        }
        let levels: Vec<u32> = levels.iter().map(|&l| l as u32).collect();
        let t = self.tuple_index(&levels);
        let shape = &self.shapes[t];
        let st = strides(shape);
        let mut flat = 0usize;
        let mut a = 0;
        for q in rect.factors() {
            for &m in q.index() {
                if m < 0 || m as usize >= shape[a] {
                    return None;
                }
                flat += m as usize * st[a];
                a += 1;
            }
        }
        Some(self.offsets[t] + flat)
    }

    /// Rectangle stored in `slot`.
    pub fn rect(&self, slot: usize) -> ProductRect {
        let t = self.offsets.partition_point(|&o| o <= slot) - 1;
        let shape = &self.shapes[t];
        let mut rem = slot - self.offsets[t];
        let st = strides(shape);
        let idx: Vec<i64> = st
            .iter()
            .map(|&s| {
                let i = rem / s;
                rem %= s;
                i as i64
            })
            .collect();
        let factors = (0..self.config.factors())
            .map(|j| {
                let axes = self.config.factor_axes(j);
                DyadicCube::standard(self.tuples[t][j] as i32, idx[axes].to_vec())
            })
            .collect();
        ProductRect::from_factors_unchecked(factors)
    }

    /// Slots of `<R; Q, j>` for the `2^{N_j}` children `Q` of `P_j(R)`, where
    /// `R` is the rectangle at position `local` of tuple `t`. `None` at depth `K`.
    pub(crate) fn child_slots(&self, t: usize, local: usize, j: usize) -> Option<Vec<usize>> {
        let levels = &self.tuples[t];
        if levels[j] >= self.config.depth() {
            return None;
        }
        let mut up = levels.clone();
        up[j] += 1;
        let tc = self.tuple_index(&up);
        let shape = &self.shapes[t];
        let st = strides(shape);
        let cst = strides(&self.shapes[tc]);
        let axes = self.config.factor_axes(j);
        let mut rem = local;
        let mut base = self.offsets[tc];
        for a in 0..shape.len() {
            let i = rem / st[a];
            rem %= st[a];
            let ci = if axes.contains(&a) { 2 * i } else { i };
            base += ci * cst[a];
        }
        let d = axes.len();
        Some(
            (0..1usize << d)
                .map(|bits| {
                    base + axes
                        .clone()
                        .enumerate()
                        .map(|(i, a)| ((bits >> (d - 1 - i)) & 1) * cst[a])
                        .sum::<usize>()
                })
                .collect(),
        )
    }

    /// Source tuple for aggregation: `t + e_i` with `i` the last factor
    /// below depth `K`.
    fn source(&self, t: usize) -> Option<(usize, usize)> {
        let k = self.config.depth();
        let levels = &self.tuples[t];
        let i = (0..levels.len()).rev().find(|&i| levels[i] < k)?;
        let mut up = levels.clone();
        up[i] += 1;
        Some((self.tuple_index(&up), i))
    }
}

/// One value per standard product cube, stored in enumeration order.
#[derive(Clone, Debug)]
pub struct RectField<S> {
    layout: Arc<FieldLayout>,
    data: Vec<S>,
}

impl<S: Scalar> RectField<S> {
    pub fn zeros(layout: &Arc<FieldLayout>) -> Self {
        Self {
            layout: layout.clone(),
            data: vec![S::zero(); layout.len()],
        }
    }

    pub fn from_fn(layout: &Arc<FieldLayout>, mut f: impl FnMut(usize) -> S) -> Self {
        Self {
            layout: layout.clone(),
            data: (0..layout.len()).map(&mut f).collect(),
        }
    }

    pub fn from_vec(layout: &Arc<FieldLayout>, data: Vec<S>) -> Self {
        assert_eq!(data.len(), layout.len(), "field length mismatch");
        Self {
            layout: layout.clone(),
            data,
        }
    }

    /// Aggregate finest-cell values over every standard product cube.
    ///
    /// The level-`K` grid is formed from `3^N` blocks; every other tuple is
    /// formed from a fixed neighbour tuple by summing the `2^{N_i}` children
    /// in one factor, so parent values are exactly the sum of those
    /// children and the summation order never changes.
    pub fn aggregate(layout: &Arc<FieldLayout>, cells: &[S]) -> Self {
        let cfg = layout.config();
        assert_eq!(cells.len(), cfg.cell_count(), "cell count mismatch");
        let mut data = vec![S::zero(); layout.len()];
        let nt = layout.tuples.len();
        let base = collapse_triples(cells, cfg.cells_per_axis(), cfg.total_dim());
        data[layout.range(nt - 1)].copy_from_slice(&base);
        for t in (0..nt - 1).rev() {
            let (src, i) = layout.source(t).expect("non-base tuple has a source");
            let v = collapse(
                &data[layout.range(src)],
                layout.shape(src),
                cfg.factor_axes(i),
            );
            data[layout.range(t)].copy_from_slice(&v);
        }
        Self {
            layout: layout.clone(),
            data,
        }
    }

    /// Adjoint of [`RectField::aggregate`]: the finest-cell function
    /// `x -> sum_R c(R) 1_R(x)`.
    pub fn push_down(&self) -> Vec<S> {
        let layout = &self.layout;
        let cfg = layout.config();
        let nt = layout.tuples.len();
        let mut acc = self.data.clone();
        for t in 0..nt - 1 {
            let (src, i) = layout.source(t).expect("non-base tuple has a source");
            let coarse = acc[layout.range(t)].to_vec();
            let r = layout.range(src);
            expand_add(&mut acc[r], layout.shape(src), &coarse, cfg.factor_axes(i));
        }
        expand_triples(
            &acc[layout.range(nt - 1)],
            cfg.cells_per_axis(),
            cfg.total_dim(),
        )
    }

    pub fn layout(&self) -> &Arc<FieldLayout> {
        &self.layout
    }

    pub fn values(&self) -> &[S] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn get(&self, rect: &ProductRect) -> Option<S> {
        self.layout.slot(rect).map(|i| self.data[i])
    }

    pub fn at(&self, slot: usize) -> S {
        self.data[slot]
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Self {
            layout: self.layout.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(S, S) -> S) -> Self {
        Self {
            layout: self.layout.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}
