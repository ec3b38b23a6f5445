use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Open coordinate box standing in for a chart of the manifold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBox", into = "RawBox")]
pub struct DomainBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<RawBox> for DomainBox {
    type Error = Error;

    fn try_from(raw: RawBox) -> Result<Self> {
        DomainBox::new(raw.lower, raw.upper)
    }
}

impl From<DomainBox> for RawBox {
    fn from(b: DomainBox) -> Self {
        RawBox { lower: b.lower, upper: b.upper }
    }
}

impl DomainBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::InvalidDomain(format!(
                "bound lengths differ ({} vs {})",
                lower.len(),
                upper.len()
            )));
        }
        if lower.len() < 2 {
            return Err(Error::InvalidDomain(format!(
                "dimension must be at least 2, got {}",
                lower.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidDomain(format!(
                    "axis {i}: lower {lo} must be below upper {hi}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The cube `|x_i| < half` in dimension `n`.
    pub fn cube(n: usize, half: f64) -> Result<Self> {
        Self::new(vec![-half; n], vec![half; n])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| lo < v && v < hi)
    }

    /// Smallest distance from `x` to a face of the box; negative outside.
    pub fn distance_to_boundary(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (lo, hi))| (v - lo).min(hi - v))
            .fold(f64::INFINITY, f64::min)
    }

    /// Box with every face moved inward by `margin`.
    pub fn shrink(&self, margin: f64) -> Result<Self> {
        Self::new(
            self.lower.iter().map(|v| v + margin).collect(),
            self.upper.iter().map(|v| v - margin).collect(),
        )
    }

    /// Box scaled about its centre by `factor`.
    pub fn scale(&self, factor: f64) -> Result<Self> {
        let (lower, upper) = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| {
                let mid = 0.5 * (lo + hi);
                let half = 0.5 * (hi - lo) * factor;
                (mid - half, mid + half)
            })
            .unzip();
        Self::new(lower, upper)
    }

    /// Corners followed by a uniform grid with `per_axis` nodes on each axis.
    pub fn grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let n = self.dim();
        let per_axis = per_axis.max(2);
        let total = per_axis.pow(n as u32);
        (0..total)
            .map(|mut idx| {
                (0..n)
                    .map(|axis| {
                        let k = idx % per_axis;
                        idx /= per_axis;
                        let t = k as f64 / (per_axis - 1) as f64;
                        self.lower[axis] + t * (self.upper[axis] - self.lower[axis])
                    })
                    .collect()
            })
            .collect()
    }

    pub fn largest_abs_coordinate(&self) -> f64 {
        self.lower
            .iter()
            .chain(&self.upper)
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_inverted_and_low_dimensional_boxes() {
        assert!(DomainBox::new(vec![0.0, 1.0], vec![1.0, 0.0]).is_err());
        assert!(DomainBox::new(vec![0.0], vec![1.0]).is_err());
        assert!(DomainBox::new(vec![0.0, 0.0], vec![1.0]).is_err());
    }

    #[test]
    fn distance_and_shrink() {
        let b = DomainBox::cube(2, 1.0).unwrap();
        assert_eq!(b.distance_to_boundary(&[0.5, 0.0]), 0.5);
        let s = b.shrink(0.25).unwrap();
        assert_eq!(s.upper(), &[0.75, 0.75]);
        assert!(b.shrink(1.0).is_err());
        assert_eq!(b.grid(3).len(), 9);
    }

    #[test]
    fn deserialization_validates() {
        let ok: DomainBox = serde_json::from_str(r#"{"lower":[-1,-1],"upper":[1,1]}"#).unwrap();
        assert_eq!(ok.dim(), 2);
        let bad = serde_json::from_str::<DomainBox>(r#"{"lower":[1,1],"upper":[-1,-1]}"#);
        assert!(bad.is_err());
    }
}
