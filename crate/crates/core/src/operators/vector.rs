use std::collections::BTreeMap;

use crate::linalg::{Vector, C64, ZERO};
use crate::tensorspace::MultiIndex;

/// A finitely supported vector of `⊕_n ℂ^d`. Dense spaces use the single rank-0 degree.
#[derive(Clone, Debug, PartialEq)]
pub struct GradedVector {
    pub fiber: usize,
    pub entries: BTreeMap<MultiIndex, Vector>,
}

impl GradedVector {
    pub fn zeros(fiber: usize) -> Self {
        GradedVector { fiber, entries: BTreeMap::new() }
    }

    /// `δ_n ⊗ e_comp`.
    pub fn basis(degree: MultiIndex, fiber: usize, comp: usize) -> Self {
        let mut v = Vector::zeros(fiber);
        v[comp] = crate::linalg::ONE;
        Self::single(degree, v)
    }

    pub fn single(degree: MultiIndex, v: Vector) -> Self {
        let fiber = v.len();
        let mut entries = BTreeMap::new();
        entries.insert(degree, v);
        GradedVector { fiber, entries }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.values().all(|v| v.iter().all(|x| *x == ZERO))
    }

    pub fn add_at(&mut self, degree: MultiIndex, v: &Vector) {
        debug_assert_eq!(v.len(), self.fiber);
        match self.entries.get_mut(&degree) {
            Some(x) => *x += v,
            None => {
                self.entries.insert(degree, v.clone());
            }
        }
    }

    pub fn add_scaled(&mut self, c: C64, other: &GradedVector) {
        for (n, v) in &other.entries {
            self.add_at(n.clone(), &v.scale_c(c));
        }
    }

    pub fn plus(&self, other: &GradedVector) -> GradedVector {
        let mut out = self.clone();
        out.add_scaled(crate::linalg::ONE, other);
        out
    }

    pub fn minus(&self, other: &GradedVector) -> GradedVector {
        let mut out = self.clone();
        out.add_scaled(-crate::linalg::ONE, other);
        out
    }

    pub fn scaled(&self, c: C64) -> GradedVector {
        GradedVector {
            fiber: self.fiber,
            entries: self.entries.iter().map(|(n, v)| (n.clone(), v.scale_c(c))).collect(),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.values().map(|v| v.norm_squared()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `⟨self, other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &GradedVector) -> C64 {
        let mut acc = ZERO;
        for (n, v) in &self.entries {
            if let Some(w) = other.entries.get(n) {
                acc += v.dotc(w);
            }
        }
        acc
    }

    pub fn get(&self, degree: &MultiIndex) -> Option<&Vector> {
        self.entries.get(degree)
    }

    /// Drop entries whose every component is exactly zero.
    pub fn pruned(mut self) -> GradedVector {
        self.entries.retain(|_, v| v.iter().any(|x| *x != ZERO));
        self
    }

    /// Keep only the degrees accepted by `keep`.
    pub fn restricted(&self, keep: impl Fn(&MultiIndex) -> bool) -> GradedVector {
        GradedVector {
            fiber: self.fiber,
            entries: self.entries.iter().filter(|(n, _)| keep(n)).map(|(n, v)| (n.clone(), v.clone())).collect(),
        }
    }

    /// Degrees carrying a nonzero entry.
    pub fn support(&self) -> Vec<MultiIndex> {
        self.entries.iter().filter(|(_, v)| v.iter().any(|x| *x != ZERO)).map(|(n, _)| n.clone()).collect()
    }
}

trait ScaleC {
    fn scale_c(&self, c: C64) -> Vector;
}

impl ScaleC for Vector {
    fn scale_c(&self, c: C64) -> Vector {
        self.map(|x| x * c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn inner_and_norm() {
        let n0 = MultiIndex::zero(1, false);
        let n1 = MultiIndex::unit(1, 0, false);
        let mut v = GradedVector::basis(n0.clone(), 2, 0);
        v.add_at(n1.clone(), &Vector::from_vec(vec![c(0.0, 1.0), c(1.0, 0.0)]));
        assert!((v.norm_sqr() - 3.0).abs() < 1e-15);
        let w = GradedVector::basis(n1, 2, 0);
        assert_eq!(w.inner(&v), c(0.0, 1.0));
        assert_eq!(v.inner(&w), c(0.0, -1.0));
        assert!(v.minus(&v).is_zero());
        assert_eq!(v.minus(&v).pruned().entries.len(), 0);
    }
}
