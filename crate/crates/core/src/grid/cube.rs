use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed axis-aligned cube with center `c` and side `l`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    center: Vec<f64>,
    side: f64,
}

impl Cube {
    pub fn new(center: Vec<f64>, side: f64) -> Result<Self> {
        super::check_dim(center.len())?;
        if !(side.is_finite() && side > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cube side must be positive, got {side}"
            )));
        }
        Ok(Self { center, side })
    }

    /// Like [`Cube::new`] but allows the degenerate side `0`.
    pub(crate) fn with_side(center: Vec<f64>, side: f64) -> Self {
        debug_assert!(side >= 0.0);
        Self { center, side }
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn diameter(&self) -> f64 {
        (self.dim() as f64).sqrt() * self.side
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim() as i32)
    }

    /// Radius of the circumscribed ball, `sqrt(n) l / 2`.
    pub fn circumradius(&self) -> f64 {
        0.5 * self.diameter()
    }

    /// Concentric cube with side multiplied by `factor`.
    pub fn dilate(&self, factor: f64) -> Cube {
        Cube {
            center: self.center.clone(),
            side: self.side * factor,
        }
    }

    pub fn lower(&self, axis: usize) -> f64 {
        self.center[axis] - 0.5 * self.side
    }

    pub fn upper(&self, axis: usize) -> f64 {
        self.center[axis] + 0.5 * self.side
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        (0..self.dim()).all(|a| (x[a] - self.center[a]).abs() <= 0.5 * self.side)
    }

    pub fn contains_cube(&self, other: &Cube) -> bool {
        (0..self.dim())
            .all(|a| other.lower(a) >= self.lower(a) && other.upper(a) <= self.upper(a))
    }

    /// True when the open interiors do not meet.
    pub fn interiors_disjoint(&self, other: &Cube) -> bool {
        (0..self.dim()).any(|a| other.upper(a) <= self.lower(a) || other.lower(a) >= self.upper(a))
    }
}

/// Anchor of a dyadic tree: generation-`k` cubes have side `base * 2^-k`
/// and lower corners at `origin + coords * side`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicFrame {
    pub origin: Vec<f64>,
    pub base: f64,
}

impl DyadicFrame {
    pub fn new(origin: Vec<f64>, base: f64) -> Result<Self> {
        super::check_dim(origin.len())?;
        if !(base.is_finite() && base > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dyadic base scale must be positive, got {base}"
            )));
        }
        Ok(Self { origin, base })
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn side(&self, generation: i32) -> f64 {
        self.base * 2f64.powi(-generation)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicCube {
    generation: i32,
    coords: Vec<i64>,
    frame: DyadicFrame,
}

impl DyadicCube {
    pub fn new(frame: DyadicFrame, generation: i32, coords: Vec<i64>) -> Result<Self> {
        if coords.len() != frame.dim() {
            return Err(Error::InvalidParameter(
                "dyadic coordinates do not match the frame dimension".into(),
            ));
        }
        Ok(Self {
            generation,
            coords,
            frame,
        })
    }

    pub fn generation(&self) -> i32 {
        self.generation
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords
    }

    pub fn frame(&self) -> &DyadicFrame {
        &self.frame
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn side(&self) -> f64 {
        self.frame.side(self.generation)
    }

    pub fn volume(&self) -> f64 {
        self.side().powi(self.dim() as i32)
    }

    pub fn lower(&self, axis: usize) -> f64 {
        self.frame.origin[axis] + self.coords[axis] as f64 * self.side()
    }

    pub fn upper(&self, axis: usize) -> f64 {
        self.frame.origin[axis] + (self.coords[axis] + 1) as f64 * self.side()
    }

    pub fn to_cube(&self) -> Cube {
        let side = self.side();
        let center = (0..self.dim())
            .map(|a| self.frame.origin[a] + (self.coords[a] as f64 + 0.5) * side)
            .collect();
        Cube { center, side }
    }

    /// The `2^n` children in lexicographic order of their offset bits.
    pub fn children(&self) -> Vec<DyadicCube> {
        let n = self.dim();
        (0..1usize << n)
            .map(|bits| {
                let coords = (0..n)
                    .map(|a| 2 * self.coords[a] + ((bits >> (n - 1 - a)) & 1) as i64)
                    .collect();
                DyadicCube {
                    generation: self.generation + 1,
                    coords,
                    frame: self.frame.clone(),
                }
            })
            .collect()
    }

    pub fn parent(&self) -> DyadicCube {
        DyadicCube {
            generation: self.generation - 1,
            coords: self.coords.iter().map(|c| c.div_euclid(2)).collect(),
            frame: self.frame.clone(),
        }
    }

    /// Ancestor-or-self test; dyadic cubes are either nested or disjoint.
    pub fn contains(&self, other: &DyadicCube) -> bool {
        let diff = other.generation - self.generation;
        if diff < 0 || self.frame != other.frame {
            return false;
        }
        let scale = 1i64 << diff;
        self.coords
            .iter()
            .zip(&other.coords)
            .all(|(&c, &o)| o.div_euclid(scale) == c)
    }

    pub fn is_disjoint(&self, other: &DyadicCube) -> bool {
        !self.contains(other) && !other.contains(self)
    }
}

/// Lebesgue measure of a finite union of cubes.
pub fn union_volume(cubes: &[Cube]) -> f64 {
    let Some(first) = cubes.first() else {
        return 0.0;
    };
    let n = first.dim();
    if n == 1 {
        let mut iv: Vec<(f64, f64)> = cubes.iter().map(|c| (c.lower(0), c.upper(0))).collect();
        iv.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut total = 0.0;
        let (mut lo, mut hi) = iv[0];
        for &(a, b) in &iv[1..] {
            if a > hi {
                total += hi - lo;
                lo = a;
                hi = b;
            } else {
                hi = hi.max(b);
            }
        }
        return total + (hi - lo);
    }
    // coordinate compression
    let breaks: Vec<Vec<f64>> = (0..n)
        .map(|a| {
            let mut v: Vec<f64> = cubes.iter().flat_map(|c| [c.lower(a), c.upper(a)]).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        })
        .collect();
    let mut total = 0.0;
    let counts: Vec<usize> = breaks.iter().map(|b| b.len() - 1).collect();
    let cells: usize = counts.iter().product();
    let mut mid = [0.0; 3];
    for cell in 0..cells {
        let mut rem = cell;
        let mut vol = 1.0;
        for a in (0..n).rev() {
            let k = rem % counts[a];
            rem /= counts[a];
            mid[a] = 0.5 * (breaks[a][k] + breaks[a][k + 1]);
            vol *= breaks[a][k + 1] - breaks[a][k];
        }
        if cubes.iter().any(|c| c.contains_point(&mid[..n])) {
            total += vol;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(n: usize) -> DyadicFrame {
        DyadicFrame::new(vec![0.0; n], 1.0).unwrap()
    }

    #[test]
    fn cube_geometry() {
        let c = Cube::new(vec![0.0, 0.0], 2.0).unwrap();
        assert_eq!(c.volume(), 4.0);
        assert!((c.diameter() - 2.0 * 2f64.sqrt()).abs() < 1e-15);
        assert!((c.circumradius() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(c.dilate(3.0).side(), 6.0);
        assert!(c.contains_point(&[1.0, -1.0]));
        assert!(!c.contains_point(&[1.01, 0.0]));
    }

    #[test]
    fn dyadic_children_partition_parent() {
        for n in 1..=3 {
            let q = DyadicCube::new(frame(n), 2, vec![1; n]).unwrap();
            let kids = q.children();
            assert_eq!(kids.len(), 1 << n);
            let vol: f64 = kids.iter().map(|k| k.volume()).sum();
            assert_eq!(vol, q.volume());
            for (i, a) in kids.iter().enumerate() {
                assert_eq!(a.parent(), q);
                assert!(q.contains(a));
                assert!(q.to_cube().contains_cube(&a.to_cube()));
                for b in &kids[i + 1..] {
                    assert!(a.is_disjoint(b));
                    assert!(a.to_cube().interiors_disjoint(&b.to_cube()));
                }
            }
        }
    }

    #[test]
    fn dyadic_cube_to_cube_is_exact() {
        let f = DyadicFrame::new(vec![0.5], 4.0).unwrap();
        let q = DyadicCube::new(f, 3, vec![-3]).unwrap();
        assert_eq!(q.side(), 0.5);
        assert_eq!(q.lower(0), -1.0);
        assert_eq!(q.to_cube().center(), &[-0.75]);
        assert_eq!(q.parent().coords(), &[-2]);
    }

    #[test]
    fn union_volume_overlaps() {
        let a = Cube::new(vec![0.0], 2.0).unwrap();
        let b = Cube::new(vec![1.5], 1.0).unwrap();
        let c = Cube::new(vec![10.0], 1.0).unwrap();
        assert_eq!(union_volume(&[a.clone(), b.clone(), c.clone()]), 4.0);
        assert_eq!(union_volume(&[a, c]), 3.0);
        let s = Cube::new(vec![0.0, 0.0], 2.0).unwrap();
        let t = Cube::new(vec![1.0, 1.0], 2.0).unwrap();
        assert!((union_volume(&[s, t]) - 7.0).abs() < 1e-12);
        assert_eq!(union_volume(&[]), 0.0);
    }
}
