use std::cmp::Ordering;
use std::ops::{Add, Neg};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dyadic scale discretization `{2^0, 2^1, ..., 2^(S-1)}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScaleGrid {
    num_scales: usize,
}

impl Default for ScaleGrid {
    fn default() -> Self {
        Self { num_scales: 3 }
    }
}

impl ScaleGrid {
    pub fn new(num_scales: usize) -> Result<Self> {
        if num_scales == 0 || num_scales > 16 {
            return Err(Error::InvalidArgument(format!(
                "number of scales must be in 1..=16, got {num_scales}"
            )));
        }
        Ok(Self { num_scales })
    }

    pub fn num_scales(&self) -> usize {
        self.num_scales
    }

    pub fn factor(&self, j: usize) -> usize {
        1 << j
    }

    pub fn factors(&self) -> Vec<usize> {
        (0..self.num_scales).map(|j| self.factor(j)).collect()
    }

    /// Width of a `k`-tap kernel dilated to the top scale.
    pub fn max_support(&self, k: usize) -> usize {
        (k - 1) * self.factor(self.num_scales - 1) + 1
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        (0..self.num_scales as i32).contains(&g.log2_scale)
    }
}

/// Exact dyadic rational `mantissa * 2^exp`, kept normalized (odd mantissa
/// or zero) so structural equality is numeric equality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    mantissa: i64,
    exp: i32,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { mantissa: 0, exp: 0 };

    pub fn new(mantissa: i64, exp: i32) -> Self {
        let mut d = Dyadic { mantissa, exp };
        d.normalize();
        d
    }

    pub fn integer(v: i64) -> Self {
        Self::new(v, 0)
    }

    fn normalize(&mut self) {
        if self.mantissa == 0 {
            self.exp = 0;
            return;
        }
        let tz = self.mantissa.trailing_zeros() as i32;
        self.mantissa >>= tz;
        self.exp += tz;
    }

    /// Multiplies by `2^k`.
    pub fn scale_pow2(self, k: i32) -> Self {
        Self::new(self.mantissa, self.exp + k)
    }

    pub fn to_f64(self) -> f64 {
        self.mantissa as f64 * 2f64.powi(self.exp)
    }

    pub fn as_integer(self) -> Option<i64> {
        (self.exp >= 0).then(|| self.mantissa << self.exp)
    }
}

impl Add for Dyadic {
    type Output = Dyadic;

    fn add(self, rhs: Dyadic) -> Dyadic {
        let exp = self.exp.min(rhs.exp);
        let a = self.mantissa << (self.exp - exp);
        let b = rhs.mantissa << (rhs.exp - exp);
        Dyadic::new(a + b, exp)
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;

    fn neg(self) -> Dyadic {
        Dyadic::new(-self.mantissa, self.exp)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let exp = self.exp.min(other.exp);
        (self.mantissa << (self.exp - exp)).cmp(&(other.mantissa << (other.exp - exp)))
    }
}

/// Element `(x, s)` of the discretized 1D scale-translation group with
/// `s = 2^log2_scale`.
///
/// Product `(x, s)(x', s') = (s x' + x, s s')`, inverse `(-x / s, 1 / s)`,
/// identity `(0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GroupElement {
    pub translation: Dyadic,
    pub log2_scale: i32,
}

impl GroupElement {
    pub fn new(translation: i64, log2_scale: i32) -> Self {
        Self {
            translation: Dyadic::integer(translation),
            log2_scale,
        }
    }

    pub fn identity() -> Self {
        Self::new(0, 0)
    }

    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        GroupElement {
            translation: other.translation.scale_pow2(self.log2_scale) + self.translation,
            log2_scale: self.log2_scale + other.log2_scale,
        }
    }

    pub fn inverse(&self) -> GroupElement {
        GroupElement {
            translation: -self.translation.scale_pow2(-self.log2_scale),
            log2_scale: -self.log2_scale,
        }
    }

    /// Action on a position: `g . u = s u + x`.
    pub fn act(&self, position: Dyadic) -> Dyadic {
        position.scale_pow2(self.log2_scale) + self.translation
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_factors() {
        let grid = ScaleGrid::new(3).unwrap();
        assert_eq!(grid.factors(), vec![1, 2, 4]);
        assert_eq!(grid.max_support(3), 9);
        assert!(ScaleGrid::new(0).is_err());
    }

    #[test]
    fn composition_table() {
        let e = GroupElement::identity();
        let a = GroupElement::new(3, 1);
        let b = GroupElement::new(-2, 0);
        // (3, 2) . (-2, 1) = (2 * -2 + 3, 2) = (-1, 2)
        assert_eq!(a.compose(&b), GroupElement::new(-1, 1));
        // (-2, 1) . (3, 2) = (3 - 2, 2) = (1, 2)
        assert_eq!(b.compose(&a), GroupElement::new(1, 1));
        assert_eq!(a.compose(&e), a);
        assert_eq!(e.compose(&a), a);
        // (3, 2)^-1 = (-3/2, 1/2)
        let inv = a.inverse();
        assert_eq!(inv.translation, Dyadic::new(-3, -1));
        assert_eq!(inv.log2_scale, -1);
        assert_eq!(a.compose(&inv), e);
    }

    fn sample(rng: &mut ChaCha8Rng) -> GroupElement {
        GroupElement {
            translation: Dyadic::new(rng.random_range(-64..=64), rng.random_range(-4..=4)),
            log2_scale: rng.random_range(-4..=4),
        }
    }

    #[test]
    fn group_axioms_on_random_elements() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let elems: Vec<_> = (0..100).map(|_| sample(&mut rng)).collect();
        let e = GroupElement::identity();
        for (i, a) in elems.iter().enumerate() {
            let b = &elems[(i * 7 + 3) % elems.len()];
            let c = &elems[(i * 13 + 5) % elems.len()];
            assert_eq!(a.compose(b).compose(c), a.compose(&b.compose(c)));
            assert_eq!(a.compose(&e), *a);
            assert_eq!(e.compose(a), *a);
            assert_eq!(a.compose(&a.inverse()), e);
            assert_eq!(a.inverse().compose(a), e);
            // action is a homomorphism
            let u = Dyadic::new(rng.random_range(-16..16), 0);
            assert_eq!(a.compose(b).act(u), a.act(b.act(u)));
        }
    }

    #[test]
    fn dyadic_arithmetic() {
        assert_eq!(Dyadic::new(4, 0), Dyadic::new(1, 2));
        assert_eq!(Dyadic::new(1, -1) + Dyadic::new(1, -1), Dyadic::integer(1));
        assert_eq!((Dyadic::new(3, -2)).to_f64(), 0.75);
        assert_eq!(Dyadic::integer(6).as_integer(), Some(6));
        assert_eq!(Dyadic::new(1, -1).as_integer(), None);
        assert!(Dyadic::new(1, -1) < Dyadic::integer(1));
    }
}
