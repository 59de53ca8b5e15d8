//! Lattice points of Z^d.
//!
//! Sites are stored inline in a fixed-width array so that they can be used as
//! cheap hash keys in the local-time and environment maps. Coordinates beyond
//! the walk dimension are always zero.

use std::fmt;
use std::ops::{Add, Neg, Sub};

/// Largest supported lattice dimension.
pub const MAX_DIM: usize = 4;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Site([i32; MAX_DIM]);

impl Site {
    pub const ORIGIN: Site = Site([0; MAX_DIM]);

    /// Builds a site from its coordinates; `None` if there are more than
    /// [`MAX_DIM`] of them.
    pub fn from_coords(coords: &[i32]) -> Option<Self> {
        if coords.len() > MAX_DIM {
            return None;
        }
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Some(Site(c))
    }

    /// Unit vector `±e_axis`.
    pub fn unit(axis: usize, positive: bool) -> Self {
        let mut c = [0; MAX_DIM];
        c[axis] = if positive { 1 } else { -1 };
        Site(c)
    }

    #[inline]
    pub fn coord(&self, axis: usize) -> i32 {
        self.0[axis]
    }

    /// The first `dim` coordinates.
    pub fn coords(&self, dim: usize) -> &[i32] {
        &self.0[..dim]
    }

    #[inline]
    pub fn is_origin(&self) -> bool {
        self.0 == [0; MAX_DIM]
    }

    /// Squared Euclidean norm.
    pub fn norm_sq(&self) -> i64 {
        self.0.iter().map(|&c| i64::from(c) * i64::from(c)).sum()
    }

    #[inline]
    pub(crate) fn bump(&mut self, axis: usize, delta: i32) {
        self.0[axis] += delta;
    }

    /// A stable 64-bit fingerprint of the coordinates, independent of any
    /// hasher implementation. Used to key per-site random streams.
    pub fn fingerprint(&self) -> u64 {
        let mut h = 0x243F_6A88_85A3_08D3u64;
        for (i, &c) in self.0.iter().enumerate() {
            h = crate::rng::mix64(h ^ (u64::from(c as u32) | ((i as u64) << 32)));
        }
        h
    }
}

impl Add for Site {
    type Output = Site;
    #[inline]
    fn add(self, rhs: Site) -> Site {
        let mut c = self.0;
        for (a, b) in c.iter_mut().zip(rhs.0) {
            *a += b;
        }
        Site(c)
    }
}

impl Sub for Site {
    type Output = Site;
    #[inline]
    fn sub(self, rhs: Site) -> Site {
        let mut c = self.0;
        for (a, b) in c.iter_mut().zip(rhs.0) {
            *a -= b;
        }
        Site(c)
    }
}

impl Neg for Site {
    type Output = Site;
    fn neg(self) -> Site {
        Site(self.0.map(|c| -c))
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let a = Site::from_coords(&[1, -2]).unwrap();
        let b = Site::unit(1, true);
        assert_eq!((a + b).coords(2), &[1, -1]);
        assert_eq!((a - a), Site::ORIGIN);
        assert_eq!((-a).coords(2), &[-1, 2]);
        assert_eq!(a.norm_sq(), 5);
        assert!(Site::from_coords(&[0; MAX_DIM + 1]).is_none());
    }

    #[test]
    fn fingerprints_distinguish_neighbours() {
        let a = Site::from_coords(&[1, 0]).unwrap();
        let b = Site::from_coords(&[0, 1]).unwrap();
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint(), Site::unit(0, true).fingerprint());
    }
}
