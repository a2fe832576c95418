//! Geometry of `Z^d`: sup-norm points, elementary regions (cubes with an
//! optional removed sector), generalized elementary regions (a rectangle
//! minus a translate of itself), widths, inner boundaries and disjoint
//! tilings.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{invalid, Error, Result};

/// A point of `Z^d`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LatticePoint(Vec<i64>);

impl LatticePoint {
    pub fn new(coords: Vec<i64>) -> Self {
        Self(coords)
    }

    pub fn origin(d: usize) -> Self {
        Self(vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    /// `|n| = max_i |n_i|`.
    pub fn norm(&self) -> u64 {
        self.0.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn dist(&self, other: &Self) -> u64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.abs_diff(*b))
            .max()
            .unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn neg(&self) -> Self {
        Self(self.0.iter().map(|a| -a).collect())
    }
}

impl From<i64> for LatticePoint {
    fn from(x: i64) -> Self {
        Self(vec![x])
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

/// Every point of the box `lo..=hi` (per axis) in lexicographic order.
pub fn box_points(lo: &[i64], hi: &[i64]) -> Vec<LatticePoint> {
    let d = lo.len();
    if lo.iter().zip(hi).any(|(a, b)| a > b) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut cur: Vec<i64> = lo.to_vec();
    loop {
        out.push(LatticePoint(cur.clone()));
        let mut axis = d;
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            if cur[axis] < hi[axis] {
                cur[axis] += 1;
                cur[axis + 1..d].copy_from_slice(&lo[axis + 1..d]);
                break;
            }
        }
    }
}

/// Points of the cube `[-r, r]^d`.
pub fn cube_points(d: usize, r: i64) -> Vec<LatticePoint> {
    box_points(&vec![-r; d], &vec![r; d])
}

/// A finite subset of `Z^d` described by a membership predicate.
pub trait Region {
    fn dim(&self) -> usize;
    fn contains(&self, p: &LatticePoint) -> bool;
    /// Per-axis inclusive bounds of a box containing the region.
    fn bounds(&self) -> (Vec<i64>, Vec<i64>);

    /// Member points in lexicographic order.
    fn points(&self) -> Vec<LatticePoint> {
        let (lo, hi) = self.bounds();
        box_points(&lo, &hi)
            .into_iter()
            .filter(|p| self.contains(p))
            .collect()
    }

    fn is_empty(&self) -> bool {
        self.points().is_empty()
    }

    /// `sup |n - n'|` over member pairs; equals the largest per-axis extent.
    fn diameter(&self) -> Result<u64> {
        let pts = self.points();
        if pts.is_empty() {
            return Err(Error::EmptyRegion);
        }
        let d = self.dim();
        let mut lo = vec![i64::MAX; d];
        let mut hi = vec![i64::MIN; d];
        for p in &pts {
            for (i, &c) in p.coords().iter().enumerate() {
                lo[i] = lo[i].min(c);
                hi[i] = hi[i].max(c);
            }
        }
        Ok(lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| a.abs_diff(*b))
            .max()
            .unwrap_or(0))
    }
}

/// Per-axis marker of the removed sector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SectorMark {
    None,
    /// removes `n_i < c_i`
    Less,
    /// removes `n_i > c_i`
    Greater,
}

impl SectorMark {
    fn digit(self) -> u64 {
        match self {
            SectorMark::None => 0,
            SectorMark::Less => 1,
            SectorMark::Greater => 2,
        }
    }

    #[inline]
    fn removes(self, offset: i64) -> bool {
        match self {
            SectorMark::None => true,
            SectorMark::Less => offset < 0,
            SectorMark::Greater => offset > 0,
        }
    }
}

/// `center + Q_N`, where `Q_N` is `[-N, N]^d` or that cube minus the sector
/// `{n : n_i ς_i 0 for every marked axis i}` (at least two marked axes).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ElementaryRegion {
    center: LatticePoint,
    size: u64,
    sector: Vec<SectorMark>,
}

impl ElementaryRegion {
    pub fn cube(center: LatticePoint, size: u64) -> Self {
        let d = center.dim();
        Self {
            center,
            size,
            sector: vec![SectorMark::None; d],
        }
    }

    pub fn with_sector(center: LatticePoint, size: u64, sector: Vec<SectorMark>) -> Result<Self> {
        if sector.len() != center.dim() {
            return Err(Error::DimensionMismatch {
                expected: center.dim(),
                got: sector.len(),
            });
        }
        let marked = sector.iter().filter(|m| **m != SectorMark::None).count();
        if marked == 1 {
            return Err(invalid("a removed sector needs at least two marked axes"));
        }
        Ok(Self {
            center,
            size,
            sector,
        })
    }

    pub fn center(&self) -> &LatticePoint {
        &self.center
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn sector(&self) -> &[SectorMark] {
        &self.sector
    }

    pub fn is_cube(&self) -> bool {
        self.sector.iter().all(|m| *m == SectorMark::None)
    }

    /// Base-3 code of the sector markers; 0 for the full cube.
    pub fn shape_id(&self) -> u64 {
        self.sector
            .iter()
            .rev()
            .fold(0, |acc, m| acc * 3 + m.digit())
    }

    pub fn translate(&self, by: &LatticePoint) -> Self {
        Self {
            center: self.center.add(by),
            size: self.size,
            sector: self.sector.clone(),
        }
    }

    pub fn recenter(&self, center: LatticePoint) -> Self {
        Self {
            center,
            size: self.size,
            sector: self.sector.clone(),
        }
    }

    fn contains_offset(&self, off: &[i64]) -> bool {
        let n = self.size as i64;
        if off.iter().any(|c| c.abs() > n) {
            return false;
        }
        if self.is_cube() {
            return true;
        }
        !self.sector.iter().zip(off).all(|(m, &c)| m.removes(c))
    }

    /// Whether this region is a subset of `other` (same dimension).
    pub fn is_subset_of(&self, other: &ElementaryRegion) -> bool {
        let n = self.size as i64;
        let m = other.size as i64;
        let shift: Vec<i64> = self
            .center
            .coords()
            .iter()
            .zip(other.center.coords())
            .map(|(a, b)| a - b)
            .collect();
        // Must sit inside the host cube.
        if shift.iter().any(|s| s.abs() + n > m) {
            return false;
        }
        if other.is_cube() {
            return true;
        }
        if self.is_cube() {
            // Avoids the host sector iff some marked axis keeps the whole
            // range on the retained side.
            return other
                .sector
                .iter()
                .zip(&shift)
                .any(|(mark, &s)| match mark {
                    SectorMark::None => false,
                    SectorMark::Less => s - n >= 0,
                    SectorMark::Greater => s + n <= 0,
                });
        }
        self.points().iter().all(|p| other.contains(p))
    }
}

impl Region for ElementaryRegion {
    fn dim(&self) -> usize {
        self.center.dim()
    }

    fn contains(&self, p: &LatticePoint) -> bool {
        let off: Vec<i64> = p
            .coords()
            .iter()
            .zip(self.center.coords())
            .map(|(a, b)| a - b)
            .collect();
        self.contains_offset(&off)
    }

    fn bounds(&self) -> (Vec<i64>, Vec<i64>) {
        let n = self.size as i64;
        (
            self.center.coords().iter().map(|c| c - n).collect(),
            self.center.coords().iter().map(|c| c + n).collect(),
        )
    }
}

/// All elementary regions of size `n` centred at the origin of `Z^d`, each
/// distinct shape exactly once, the full cube first.
pub fn enumerate_shapes(d: usize, n: u64) -> Result<Vec<ElementaryRegion>> {
    if d == 0 || n == 0 {
        return Err(invalid(format!("need d >= 1 and N >= 1, got d={d}, N={n}")));
    }
    let origin = LatticePoint::origin(d);
    let mut out = vec![ElementaryRegion::cube(origin.clone(), n)];
    if d == 1 {
        return Ok(out);
    }
    let total = 3u64.pow(d as u32);
    for code in 1..total {
        let mut c = code;
        let mut sector = Vec::with_capacity(d);
        for _ in 0..d {
            sector.push(match c % 3 {
                0 => SectorMark::None,
                1 => SectorMark::Less,
                _ => SectorMark::Greater,
            });
            c /= 3;
        }
        if sector.iter().filter(|m| **m != SectorMark::None).count() >= 2 {
            out.push(ElementaryRegion {
                center: origin.clone(),
                size: n,
                sector,
            });
        }
    }
    Ok(out)
}

/// Number of distinct shapes in `E_N^0` for `d >= 1`.
pub fn shape_count(d: usize) -> usize {
    if d <= 1 {
        1
    } else {
        3usize.pow(d as u32) - (2 * d + 1) + 1
    }
}

/// `R \ (R + y)` with `R` an axis-parallel rectangle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneralizedRegion {
    center: LatticePoint,
    half_widths: Vec<u64>,
    cut: Option<LatticePoint>,
}

impl GeneralizedRegion {
    pub fn new(
        center: LatticePoint,
        half_widths: Vec<u64>,
        cut: Option<LatticePoint>,
    ) -> Result<Self> {
        if half_widths.len() != center.dim() {
            return Err(Error::DimensionMismatch {
                expected: center.dim(),
                got: half_widths.len(),
            });
        }
        if let Some(y) = &cut {
            if y.dim() != center.dim() {
                return Err(Error::DimensionMismatch {
                    expected: center.dim(),
                    got: y.dim(),
                });
            }
        }
        Ok(Self {
            center,
            half_widths,
            cut,
        })
    }

    pub fn rectangle(center: LatticePoint, half_widths: Vec<u64>) -> Result<Self> {
        Self::new(center, half_widths, None)
    }

    fn in_rect(&self, p: &LatticePoint, shift: Option<&LatticePoint>) -> bool {
        let c = self.center.coords();
        p.coords().iter().enumerate().all(|(i, &x)| {
            let ci = c[i] + shift.map_or(0, |s| s.coords()[i]);
            x.abs_diff(ci) <= self.half_widths[i]
        })
    }

    /// Per-axis extent of the member set without enumerating it.
    fn axis_extent(&self, axis: usize) -> Option<(i64, i64)> {
        let c = self.center.coords()[axis];
        let m = self.half_widths[axis] as i64;
        let (lo, hi) = (c - m, c + m);
        let y = match &self.cut {
            None => return Some((lo, hi)),
            Some(y) => y,
        };
        // Slabs orthogonal to `axis` are removed whole only when the cut
        // moves along `axis` alone.
        if y.coords()
            .iter()
            .enumerate()
            .any(|(j, &v)| j != axis && v != 0)
        {
            return Some((lo, hi));
        }
        let (clo, chi) = (lo + y.coords()[axis], hi + y.coords()[axis]);
        // Remaining values in [lo, hi] \ [clo, chi].
        let left = if clo > lo {
            Some((lo, (clo - 1).min(hi)))
        } else {
            None
        };
        let right = if chi < hi {
            Some(((chi + 1).max(lo), hi))
        } else {
            None
        };
        match (left, right) {
            (None, None) => None,
            (Some(l), None) => Some(l),
            (None, Some(r)) => Some(r),
            (Some(l), Some(r)) => Some((l.0, r.1)),
        }
    }
}

impl Region for GeneralizedRegion {
    fn dim(&self) -> usize {
        self.center.dim()
    }

    fn contains(&self, p: &LatticePoint) -> bool {
        self.in_rect(p, None) && !self.cut.as_ref().is_some_and(|y| self.in_rect(p, Some(y)))
    }

    fn bounds(&self) -> (Vec<i64>, Vec<i64>) {
        let c = self.center.coords();
        (
            c.iter()
                .zip(&self.half_widths)
                .map(|(x, m)| x - *m as i64)
                .collect(),
            c.iter()
                .zip(&self.half_widths)
                .map(|(x, m)| x + *m as i64)
                .collect(),
        )
    }

    fn diameter(&self) -> Result<u64> {
        let mut best = 0;
        for axis in 0..self.dim() {
            match self.axis_extent(axis) {
                Some((lo, hi)) => best = best.max(lo.abs_diff(hi)),
                None => return Err(Error::EmptyRegion),
            }
        }
        Ok(best)
    }
}

/// Dense membership grid over a region's bounding box.
struct Occupancy {
    lo: Vec<i64>,
    extent: Vec<usize>,
    cells: Vec<bool>,
}

impl Occupancy {
    fn new(points: &[LatticePoint], d: usize) -> Self {
        let mut lo = vec![i64::MAX; d];
        let mut hi = vec![i64::MIN; d];
        for p in points {
            for (i, &c) in p.coords().iter().enumerate() {
                lo[i] = lo[i].min(c);
                hi[i] = hi[i].max(c);
            }
        }
        let extent: Vec<usize> = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| (b - a) as usize + 1)
            .collect();
        let mut occ = Self {
            lo,
            extent: extent.clone(),
            cells: vec![false; extent.iter().product()],
        };
        for p in points {
            let k = occ.index(p.coords()).expect("point inside its own bounds");
            occ.cells[k] = true;
        }
        occ
    }

    fn index(&self, c: &[i64]) -> Option<usize> {
        let mut k = 0usize;
        for (i, &x) in c.iter().enumerate() {
            let off = x - self.lo[i];
            if off < 0 || off as usize >= self.extent[i] {
                return None;
            }
            k = k * self.extent[i] + off as usize;
        }
        Some(k)
    }

    fn contains(&self, c: &[i64]) -> bool {
        self.index(c).is_some_and(|k| self.cells[k])
    }
}

/// Width of a region: the largest `M` such that every member `n` lies in
/// some `M' ∈ E_M` with `M' ⊂ Λ` and `dist(n, Λ \ M') >= M / 2`; zero when
/// no `M >= 1` works.
pub fn width(region: &impl Region) -> Result<u64> {
    let pts = region.points();
    if pts.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let d = region.dim();
    let occ = Occupancy::new(&pts, d);
    let max_m = (*occ.extent.iter().min().unwrap_or(&1) as u64).saturating_sub(1) / 2;
    for m in (1..=max_m).rev() {
        let shapes = enumerate_shapes(d, m)?;
        if pts.iter().all(|n| has_width_witness(n, m, &shapes, &occ)) {
            return Ok(m);
        }
    }
    Ok(0)
}

fn has_width_witness(
    n: &LatticePoint,
    m: u64,
    shapes: &[ElementaryRegion],
    occ: &Occupancy,
) -> bool {
    let d = n.dim();
    let mi = m as i64;
    // Points of Λ strictly closer than M/2 to n must lie in the witness.
    let near_r = (m as i64 + 1) / 2 - 1;
    let near: Vec<Vec<i64>> = cube_points(d, near_r)
        .into_iter()
        .map(|o| {
            o.coords()
                .iter()
                .zip(n.coords())
                .map(|(a, b)| a + b)
                .collect::<Vec<i64>>()
        })
        .filter(|c| occ.contains(c))
        .collect();
    let offsets = cube_points(d, mi);
    for shape in shapes {
        // Candidate centres c = n - q for q in the shape.
        for q in offsets.iter().filter(|q| shape.contains_offset(q.coords())) {
            let c: Vec<i64> = n
                .coords()
                .iter()
                .zip(q.coords())
                .map(|(a, b)| a - b)
                .collect();
            let inside = offsets
                .iter()
                .filter(|o| shape.contains_offset(o.coords()))
                .all(|o| {
                    let p: Vec<i64> = c.iter().zip(o.coords()).map(|(a, b)| a + b).collect();
                    occ.contains(&p)
                });
            if !inside {
                continue;
            }
            let covers_near = near.iter().all(|p| {
                let off: Vec<i64> = p.iter().zip(&c).map(|(a, b)| a - b).collect();
                shape.contains_offset(&off)
            });
            if covers_near {
                return true;
            }
        }
    }
    false
}

/// Inner boundary: members with a sup-distance-1 neighbour outside the region.
pub fn boundary(region: &impl Region) -> Result<Vec<LatticePoint>> {
    let pts = region.points();
    if pts.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let nbrs: Vec<LatticePoint> = cube_points(region.dim(), 1)
        .into_iter()
        .filter(|o| o.norm() == 1)
        .collect();
    Ok(pts
        .into_iter()
        .filter(|p| nbrs.iter().any(|o| !region.contains(&p.add(o))))
        .collect())
}

/// Sup-norm distance from `p` to the complement of `region` (zero outside).
pub fn dist_to_complement(region: &impl Region, p: &LatticePoint) -> u64 {
    if !region.contains(p) {
        return 0;
    }
    let mut r = 1i64;
    loop {
        let shell = cube_points(p.dim(), r)
            .into_iter()
            .filter(|o| o.norm() == r as u64);
        if shell.map(|o| p.add(&o)).any(|q| !region.contains(&q)) {
            return r as u64;
        }
        r += 1;
    }
}

/// Pairwise disjoint elementary regions of one size inside a host.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionFamily {
    pub host: ElementaryRegion,
    pub size: u64,
    pub members: Vec<ElementaryRegion>,
}

impl RegionFamily {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Point-wise check of disjointness and containment.
    pub fn verify(&self) -> bool {
        let mut seen = BTreeSet::new();
        for m in &self.members {
            if m.size != self.size {
                return false;
            }
            for p in m.points() {
                if !self.host.contains(&p) || !seen.insert(p) {
                    return false;
                }
            }
        }
        true
    }
}

/// Grid tiling of `host` by disjoint size-`m` cubes (side `2m + 1`),
/// centred in the host's bounding cube; for a sector-cut host only the
/// cubes that avoid the removed sector are kept.
pub fn tile_disjoint(host: &ElementaryRegion, m: u64) -> Result<RegionFamily> {
    if m == 0 || m > host.size {
        return Err(invalid(format!(
            "tile size {m} must be in 1..={}",
            host.size
        )));
    }
    let d = host.dim();
    let side = 2 * m + 1;
    let host_side = 2 * host.size + 1;
    let per_axis = host_side / side;
    let slack = host_side - per_axis * side;
    let first = -(host.size as i64) + (slack / 2) as i64 + m as i64;
    let idx = box_points(&vec![0; d], &vec![per_axis as i64 - 1; d]);
    let members = idx
        .into_iter()
        .map(|k| {
            let c: Vec<i64> = k
                .coords()
                .iter()
                .zip(host.center.coords())
                .map(|(&i, &h)| h + first + i * side as i64)
                .collect();
            ElementaryRegion::cube(LatticePoint::new(c), m)
        })
        .filter(|cube| cube.is_subset_of(host))
        .collect();
    Ok(RegionFamily {
        host: host.clone(),
        size: m,
        members,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[i64]) -> LatticePoint {
        LatticePoint::new(c.to_vec())
    }

    #[test]
    fn sup_norm() {
        assert_eq!(p(&[3, -7, 2]).norm(), 7);
        assert_eq!(p(&[1, 1]).dist(&p(&[-2, 0])), 3);
    }

    #[test]
    fn shape_counts() {
        let one = enumerate_shapes(1, 2).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].points().len(), 5);
        assert_eq!(enumerate_shapes(2, 1).unwrap().len(), 5);
        assert_eq!(enumerate_shapes(3, 1).unwrap().len(), 21);
        for d in 1..=4 {
            assert_eq!(enumerate_shapes(d, 1).unwrap().len(), shape_count(d));
        }
        assert!(enumerate_shapes(0, 1).is_err());
        assert!(enumerate_shapes(2, 0).is_err());
    }

    #[test]
    fn single_marked_axis_rejected() {
        let r =
            ElementaryRegion::with_sector(p(&[0, 0]), 2, vec![SectorMark::Less, SectorMark::None]);
        assert!(r.is_err());
    }

    #[test]
    fn sector_region_membership() {
        let r =
            ElementaryRegion::with_sector(p(&[0, 0]), 1, vec![SectorMark::Less, SectorMark::Less])
                .unwrap();
        assert!(!r.contains(&p(&[-1, -1])));
        assert!(r.contains(&p(&[-1, 0])));
        assert!(r.contains(&p(&[0, 0])));
        assert_eq!(r.points().len(), 8);
    }

    #[test]
    fn boundary_examples() {
        let i = ElementaryRegion::cube(p(&[0]), 2);
        assert_eq!(boundary(&i).unwrap(), vec![p(&[-2]), p(&[2])]);
        let single = ElementaryRegion::cube(p(&[0]), 0);
        assert_eq!(boundary(&single).unwrap(), vec![p(&[0])]);
        let sq = ElementaryRegion::cube(p(&[0, 0]), 2);
        assert_eq!(boundary(&sq).unwrap().len(), 16);
    }

    #[test]
    fn width_examples() {
        let i = GeneralizedRegion::rectangle(p(&[0]), vec![2]).unwrap();
        assert_eq!(width(&i).unwrap(), 2);
        let single = GeneralizedRegion::rectangle(p(&[5]), vec![0]).unwrap();
        assert_eq!(width(&single).unwrap(), 0);
        let empty = GeneralizedRegion::new(p(&[0]), vec![1], Some(p(&[0]))).unwrap();
        assert_eq!(width(&empty), Err(Error::EmptyRegion));
    }

    #[test]
    fn generalized_diameter_matches_points() {
        let g = GeneralizedRegion::new(p(&[0, 0]), vec![3, 2], Some(p(&[2, 0]))).unwrap();
        // [-3, -2] x [-2, 2] survives.
        assert_eq!(g.diameter().unwrap(), 4);
        assert_eq!(
            g.diameter(),
            Ok(g.points()
                .iter()
                .map(|a| g.points().iter().map(|b| a.dist(b)).max().unwrap())
                .max()
                .unwrap())
        );
        let g = GeneralizedRegion::new(p(&[0]), vec![3], Some(p(&[5]))).unwrap();
        assert_eq!(g.diameter().unwrap(), 4);
        let g = GeneralizedRegion::new(p(&[0]), vec![3], Some(p(&[-4]))).unwrap();
        assert_eq!(g.diameter().unwrap(), 3);
    }

    #[test]
    fn tilings() {
        let host = ElementaryRegion::cube(p(&[0]), 4);
        let fam = tile_disjoint(&host, 1).unwrap();
        assert_eq!(fam.len(), 3);
        assert!(fam.members.iter().all(|m| m.points().len() == 3));
        assert!(fam.verify());

        let host = ElementaryRegion::cube(p(&[0]), 1);
        let fam = tile_disjoint(&host, 1).unwrap();
        assert_eq!(fam.members, vec![host.clone()]);

        let host = ElementaryRegion::cube(p(&[0, 0]), 4);
        let fam = tile_disjoint(&host, 1).unwrap();
        assert_eq!(fam.len(), 9);
        assert!(fam.verify());

        assert!(tile_disjoint(&host, 5).is_err());
    }

    #[test]
    fn sector_host_tiling_avoids_sector() {
        let host =
            ElementaryRegion::with_sector(p(&[0, 0]), 4, vec![SectorMark::Less, SectorMark::Less])
                .unwrap();
        let fam = tile_disjoint(&host, 1).unwrap();
        // Of the 3x3 grid only the five cubes clear of the open lower-left quadrant remain.
        assert_eq!(fam.len(), 5);
        assert!(fam.verify());
    }
}
