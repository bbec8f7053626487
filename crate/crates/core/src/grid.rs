//! Uniform structured grids in one to three dimensions.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub n: usize,
    pub min: f64,
    pub max: f64,
    pub periodic: bool,
}

impl Axis {
    pub fn bounded(n: usize, min: f64, max: f64) -> Self {
        Axis {
            n,
            min,
            max,
            periodic: false,
        }
    }

    pub fn periodic(n: usize, min: f64, max: f64) -> Self {
        Axis {
            n,
            min,
            max,
            periodic: true,
        }
    }

    /// Node spacing. Periodic axes do not repeat the endpoint.
    pub fn h(&self) -> f64 {
        let len = self.max - self.min;
        if self.periodic {
            len / self.n as f64
        } else {
            len / (self.n - 1) as f64
        }
    }

    pub fn coords(&self) -> Vec<f64> {
        let h = self.h();
        (0..self.n).map(|i| self.min + i as f64 * h).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Low,
    High,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Face {
    pub axis: usize,
    pub side: Side,
}

impl Face {
    pub fn new(axis: usize, side: Side) -> Self {
        Face { axis, side }
    }

    /// Sign of the outward normal along `axis`.
    pub fn normal_sign(&self) -> f64 {
        match self.side {
            Side::Low => -1.0,
            Side::High => 1.0,
        }
    }

    pub fn name(&self) -> String {
        const AXES: [&str; 3] = ["x", "y", "z"];
        let axis = AXES.get(self.axis).copied().unwrap_or("?");
        let side = match self.side {
            Side::Low => "low",
            Side::High => "high",
        };
        format!("{axis}-{side}")
    }

    pub fn parse(s: &str) -> Option<Face> {
        let (a, side) = s.split_once('-')?;
        let axis = match a {
            "x" | "r" => 0,
            "y" | "theta" => 1,
            "z" => 2,
            _ => return None,
        };
        let side = match side {
            "low" => Side::Low,
            "high" => Side::High,
            _ => return None,
        };
        Some(Face { axis, side })
    }
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    axes: Vec<Axis>,
    strides: Vec<usize>,
    len: usize,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 3 {
            return Err(Error::InvalidParameter(format!(
                "grid dimension must be 1, 2 or 3, got {}",
                axes.len()
            )));
        }
        for a in &axes {
            if !(a.max > a.min) || !a.min.is_finite() || !a.max.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "axis extent [{}, {}] is empty or not finite",
                    a.min, a.max
                )));
            }
            if a.n < 2 {
                return Err(Error::TooFewNodes { n: a.n, min: 2 });
            }
        }
        let d = axes.len();
        let mut strides = vec![1; d];
        for k in (0..d.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * axes[k + 1].n;
        }
        let len = axes.iter().map(|a| a.n).product();
        Ok(Grid { axes, strides, len })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.n).collect()
    }

    /// Total node count.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Flat-index stride of `axis`; the last axis is contiguous.
    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    pub fn unravel(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        for k in 0..self.dim() {
            idx[k] = flat / self.strides[k];
            flat %= self.strides[k];
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Physical position of a node; unused trailing coordinates are zero.
    pub fn position(&self, flat: usize) -> [f64; 3] {
        let idx = self.unravel(flat);
        let mut p = [0.0; 3];
        for (k, a) in self.axes.iter().enumerate() {
            p[k] = a.min + idx[k] as f64 * a.h();
        }
        p
    }

    pub fn min_spacing(&self) -> f64 {
        self.axes.iter().map(Axis::h).fold(f64::INFINITY, f64::min)
    }

    /// Faces of all bounded axes, in axis order, low before high.
    pub fn faces(&self) -> Vec<Face> {
        let mut out = Vec::new();
        for (k, a) in self.axes.iter().enumerate() {
            if !a.periodic {
                out.push(Face::new(k, Side::Low));
                out.push(Face::new(k, Side::High));
            }
        }
        out
    }

    pub fn check_face(&self, face: Face) -> Result<()> {
        if face.axis >= self.dim() {
            return Err(Error::InvalidFace {
                face,
                reason: format!("grid has {} axes", self.dim()),
            });
        }
        if self.axes[face.axis].periodic {
            return Err(Error::InvalidFace {
                face,
                reason: "axis is periodic".into(),
            });
        }
        Ok(())
    }

    /// Flat indices of the nodes on a face, in lexicographic order.
    pub fn face_nodes(&self, face: Face) -> Vec<usize> {
        let fixed = match face.side {
            Side::Low => 0,
            Side::High => self.axes[face.axis].n - 1,
        };
        (0..self.len)
            .filter(|&f| self.unravel(f)[face.axis] == fixed)
            .collect()
    }

    pub fn describe(&self) -> String {
        self.axes
            .iter()
            .map(|a| {
                format!(
                    "{}[{},{}]{}",
                    a.n,
                    a.min,
                    a.max,
                    if a.periodic { "p" } else { "" }
                )
            })
            .collect::<Vec<_>>()
            .join("x")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strides_put_last_axis_fastest() {
        let g = Grid::new(vec![
            Axis::bounded(3, 0.0, 1.0),
            Axis::bounded(4, 0.0, 1.0),
            Axis::bounded(5, 0.0, 1.0),
        ])
        .unwrap();
        assert_eq!(g.stride(2), 1);
        assert_eq!(g.stride(1), 5);
        assert_eq!(g.stride(0), 20);
        assert_eq!(g.len(), 60);
        let idx = g.unravel(37);
        assert_eq!(g.ravel(&idx[..3]), 37);
        assert_eq!(idx, [1, 3, 2]);
    }

    #[test]
    fn periodic_spacing_excludes_endpoint() {
        let a = Axis::periodic(4, 0.0, 1.0);
        assert_eq!(a.h(), 0.25);
        assert_eq!(a.coords(), vec![0.0, 0.25, 0.5, 0.75]);
        let b = Axis::bounded(5, 0.0, 1.0);
        assert_eq!(b.h(), 0.25);
    }

    #[test]
    fn faces_skip_periodic_axes() {
        let g = Grid::new(vec![Axis::periodic(8, 0.0, 1.0), Axis::bounded(5, 0.0, 1.0)]).unwrap();
        let faces = g.faces();
        assert_eq!(faces.len(), 2);
        assert!(faces.iter().all(|f| f.axis == 1));
        assert!(g.check_face(Face::new(0, Side::Low)).is_err());
        assert_eq!(g.face_nodes(Face::new(1, Side::High)).len(), 8);
        assert_eq!(Face::parse("y-high"), Some(Face::new(1, Side::High)));
        assert_eq!(Face::new(0, Side::Low).to_string(), "x-low");
    }
}
