use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::config::GridConfig;
use super::geom::{floor_index, GeoBox, Point};

/// Per-axis grid offset `tau` in `{0, +1/3, -1/3}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Shift {
    Minus,
    #[default]
    Zero,
    Plus,
}

impl Shift {
    pub const ALL: [Shift; 3] = [Shift::Zero, Shift::Plus, Shift::Minus];

    /// Numerator `t` of `tau = t/3`.
    pub fn numerator(self) -> i64 {
        match self {
            Shift::Minus => -1,
            Shift::Zero => 0,
            Shift::Plus => 1,
        }
    }

    pub fn from_numerator(t: i64) -> Result<Shift> {
        match t {
            -1 => Ok(Shift::Minus),
            0 => Ok(Shift::Zero),
            1 => Ok(Shift::Plus),
            _ => Err(Error::Format(format!("shift code {t} not in {{-1,0,1}}"))),
        }
    }

    pub fn flipped(self) -> Shift {
        match self {
            Shift::Minus => Shift::Plus,
            Shift::Zero => Shift::Zero,
            Shift::Plus => Shift::Minus,
        }
    }

    /// Every shift vector in `{0, +1/3, -1/3}^d`, zero vector first.
    pub fn all_vectors(d: usize) -> Vec<Vec<Shift>> {
        let mut out = vec![Vec::with_capacity(d)];
        for _ in 0..d {
            out = out
                .into_iter()
                .flat_map(|v| {
                    Shift::ALL.iter().map(move |&s| {
                        let mut w = v.clone();
                        w.push(s);
                        w
                    })
                })
                .collect();
        }
        out
    }
}

/// The cube `2^-k (m + tau + [0,1)^d)`.
///
/// Corner `a` sits at `(3 m_a + t_a) / (3 * 2^k)`, so every comparison is an
/// integer comparison. The children of a shifted cube carry the opposite
/// shift at the next level, since `2 * (1/3) = 1 - 1/3`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicCube {
    level: i32,
    index: Vec<i64>,
    shift: Vec<Shift>,
}

impl DyadicCube {
    pub fn new(level: i32, index: Vec<i64>, shift: Vec<Shift>) -> Self {
        assert_eq!(index.len(), shift.len(), "index/shift dimension mismatch");
        Self {
            level,
            index,
            shift,
        }
    }

    pub fn standard(level: i32, index: Vec<i64>) -> Self {
        let d = index.len();
        Self::new(level, index, vec![Shift::Zero; d])
    }

    /// `[0,1)^d`.
    pub fn unit(d: usize) -> Self {
        Self::standard(0, vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn level(&self) -> i32 {
        self.level
    }

    pub fn index(&self) -> &[i64] {
        &self.index
    }

    pub fn shift(&self) -> &[Shift] {
        &self.shift
    }

    pub fn is_standard(&self) -> bool {
        self.shift.iter().all(|&s| s == Shift::Zero)
    }

    /// Side length `2^-k`.
    pub fn side(&self) -> f64 {
        2f64.powi(-self.level)
    }

    /// Lower corner numerator on `axis` at scale `level`.
    fn lower_num(&self, axis: usize) -> i64 {
        3 * self.index[axis] + self.shift[axis].numerator()
    }

    /// The cube as a half-open box.
    pub fn to_box(&self) -> GeoBox {
        self.scaled_box(0, 3)
    }

    /// `3Q`: same centre, three times the side.
    pub fn triple(&self) -> GeoBox {
        self.scaled_box(-3, 6)
    }

    /// Box `[lower + a, lower + b)` in units of `1/(3 * 2^k)`.
    fn scaled_box(&self, a: i64, b: i64) -> GeoBox {
        let (lo, hi): (Vec<i64>, Vec<i64>) = (0..self.dim())
            .map(|ax| (self.lower_num(ax) + a, self.lower_num(ax) + b))
            .unzip();
        if self.level >= 0 {
            GeoBox::new(lo, hi, self.level)
        } else {
            let sh = -self.level;
            GeoBox::new(
                lo.into_iter().map(|x| x << sh).collect(),
                hi.into_iter().map(|x| x << sh).collect(),
                0,
            )
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.to_box().contains(p)
    }

    /// The `2^d` cubes of half the side, in lexicographic index order.
    ///
    /// Fails when the children would lie below `max_level`.
    pub fn children(&self, max_level: i32) -> Result<Vec<DyadicCube>> {
        if self.level >= max_level {
            return Err(Error::DepthExceeded(format!(
                "cube at level {} has no children within depth {max_level}",
                self.level
            )));
        }
        Ok(self.children_unbounded())
    }

    pub(crate) fn children_unbounded(&self) -> Vec<DyadicCube> {
        let d = self.dim();
        let shift: Vec<Shift> = self.shift.iter().map(|s| s.flipped()).collect();
        // child lower numerator at level k+1 is 2 (3m + t) + 3b
        let base: Vec<i64> = (0..d)
            .map(|a| {
                let m = self.index[a];
                match self.shift[a] {
                    Shift::Zero => 2 * m,
                    Shift::Plus => 2 * m + 1,
                    Shift::Minus => 2 * m - 1,
                }
            })
            .collect();
        (0..1usize << d)
            .map(|bits| {
                let index = (0..d)
                    .map(|a| base[a] + ((bits >> (d - 1 - a)) & 1) as i64)
                    .collect();
                DyadicCube::new(self.level + 1, index, shift.clone())
            })
            .collect()
    }

    /// The unique cube one level up whose children include `self`.
    pub fn parent(&self) -> DyadicCube {
        let shift: Vec<Shift> = self.shift.iter().map(|s| s.flipped()).collect();
        let index = (0..self.dim())
            .map(|a| {
                let m = self.index[a];
                match self.shift[a] {
                    Shift::Zero => m.div_euclid(2),
                    // parent shift +1/3: m = 2p + 1 + b
                    Shift::Minus => (m - 1).div_euclid(2),
                    // parent shift -1/3: m = 2p - 1 + b
                    Shift::Plus => (m + 1).div_euclid(2),
                }
            })
            .collect();
        DyadicCube::new(self.level - 1, index, shift)
    }

    /// The standard cube at `level` containing `p`.
    pub fn standard_containing(p: &Point, level: i32) -> DyadicCube {
        DyadicCube::standard(
            level,
            p.coords()
                .iter()
                .map(|&c| floor_index(c, p.scale(), level))
                .collect(),
        )
    }
}

/// Product cube `Q_1 x ... x Q_n`, one cube per factor.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProductRect {
    factors: Vec<DyadicCube>,
}

impl ProductRect {
    pub fn new(config: &GridConfig, factors: Vec<DyadicCube>) -> Result<Self> {
        if factors.len() != config.factors() {
            return Err(Error::DimensionMismatch {
                expected: config.factors(),
                got: factors.len(),
            });
        }
        for (q, &d) in factors.iter().zip(config.dims()) {
            if q.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: q.dim(),
                });
            }
        }
        Ok(Self { factors })
    }

    pub(crate) fn from_factors_unchecked(factors: Vec<DyadicCube>) -> Self {
        Self { factors }
    }

    /// `[0,1)^N`.
    pub fn top(config: &GridConfig) -> Self {
        Self {
            factors: config.dims().iter().map(|&d| DyadicCube::unit(d)).collect(),
        }
    }

    pub fn factors(&self) -> &[DyadicCube] {
        &self.factors
    }

    /// `P_j(R)`.
    pub fn factor(&self, j: usize) -> &DyadicCube {
        &self.factors[j]
    }

    pub fn levels(&self) -> Vec<i32> {
        self.factors.iter().map(|q| q.level()).collect()
    }

    pub fn is_standard(&self) -> bool {
        self.factors.iter().all(|q| q.is_standard())
    }

    /// `<R; Q, j>`: replace the `j`-th factor by `q`.
    pub fn replace(&self, q: DyadicCube, j: usize) -> Result<Self> {
        let Some(old) = self.factors.get(j) else {
            return Err(Error::DimensionMismatch {
                expected: self.factors.len(),
                got: j + 1,
            });
        };
        if old.dim() != q.dim() {
            return Err(Error::DimensionMismatch {
                expected: old.dim(),
                got: q.dim(),
            });
        }
        let mut factors = self.factors.clone();
        factors[j] = q;
        Ok(Self { factors })
    }

    pub fn to_box(&self) -> GeoBox {
        GeoBox::product(&self.factors.iter().map(|q| q.to_box()).collect::<Vec<_>>())
    }

    /// `3R`.
    pub fn triple(&self) -> GeoBox {
        GeoBox::product(&self.factors.iter().map(|q| q.triple()).collect::<Vec<_>>())
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.to_box().contains(p)
    }

    pub fn to_record(&self) -> RectRecord {
        RectRecord {
            levels: self.levels(),
            indices: self.factors.iter().map(|q| q.index().to_vec()).collect(),
            tau: self
                .factors
                .iter()
                .flat_map(|q| q.shift().iter().map(|s| s.numerator()))
                .collect(),
        }
    }

    pub fn from_record(config: &GridConfig, rec: &RectRecord) -> Result<Self> {
        if rec.levels.len() != config.factors() || rec.indices.len() != config.factors() {
            return Err(Error::Format("rect record factor count mismatch".into()));
        }
        if rec.tau.len() != config.total_dim() {
            return Err(Error::Format("rect record tau length mismatch".into()));
        }
        let mut factors = Vec::with_capacity(config.factors());
        for j in 0..config.factors() {
            let axes = config.factor_axes(j);
            let shift = rec.tau[axes]
                .iter()
                .map(|&t| Shift::from_numerator(t))
                .collect::<Result<Vec<_>>>()?;
            if rec.indices[j].len() != shift.len() {
                return Err(Error::Format("rect record index length mismatch".into()));
            }
            factors.push(DyadicCube::new(
                rec.levels[j],
                rec.indices[j].clone(),
                shift,
            ));
        }
        Self::new(config, factors)
    }
}

/// Serialized form `{levels, indices, tau}` with `tau` codes `0, 1, -1`
/// meaning `0, +1/3, -1/3`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RectRecord {
    pub levels: Vec<i32>,
    pub indices: Vec<Vec<i64>>,
    pub tau: Vec<i64>,
}
