//! A grid together with one SBP operator per axis, and the Kronecker-structured
//! operations built from them: derivatives, volume quadrature, face quadrature.
//!
//! All reductions run sequentially over nodes in flat (lexicographic) order.

use crate::error::{Error, Result};
use crate::field::StateField;
use crate::grid::{Face, Grid};
use crate::linalg::Mat;
use crate::sbp::{Closure, Order, SbpOperator1D};

#[derive(Clone, Debug)]
pub struct Discretisation {
    grid: Grid,
    order: Order,
    ops: Vec<SbpOperator1D>,
    node_weights: Vec<f64>,
    line_starts: Vec<Vec<usize>>,
}

/// Per-node weight matrix for [`Discretisation::inner_product`].
pub enum Weight<'a> {
    Identity,
    Nodal(&'a dyn Fn(usize) -> Mat),
}

impl Discretisation {
    pub fn new(grid: Grid, order: Order) -> Result<Self> {
        let ops = grid
            .axes()
            .iter()
            .map(|a| {
                let closure = if a.periodic {
                    Closure::Periodic
                } else {
                    Closure::Bounded
                };
                SbpOperator1D::new(order, closure, a.n, a.h())
            })
            .collect::<Result<Vec<_>>>()?;
        let node_weights = (0..grid.len())
            .map(|f| {
                let idx = grid.unravel(f);
                ops.iter()
                    .enumerate()
                    .fold(1.0, |w, (k, op)| w * op.weights()[idx[k]])
            })
            .collect();
        let line_starts = (0..grid.dim())
            .map(|k| {
                (0..grid.len())
                    .filter(|&f| grid.unravel(f)[k] == 0)
                    .collect()
            })
            .collect();
        Ok(Discretisation {
            grid,
            order,
            ops,
            node_weights,
            line_starts,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn op(&self, axis: usize) -> &SbpOperator1D {
        &self.ops[axis]
    }

    pub fn n_nodes(&self) -> usize {
        self.grid.len()
    }

    /// Volume quadrature weight of each node (product of axis weights).
    pub fn node_weights(&self) -> &[f64] {
        &self.node_weights
    }

    fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.grid.dim() {
            return Err(Error::AxisOutOfRange {
                axis,
                dim: self.grid.dim(),
            });
        }
        Ok(())
    }

    fn check_field(&self, f: &StateField) -> Result<()> {
        if f.n_nodes() != self.grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "field has {} nodes, grid has {}",
                f.n_nodes(),
                self.grid.len()
            )));
        }
        Ok(())
    }

    /// Applies `I_n ⊗ … ⊗ D_axis ⊗ …` to every component.
    pub fn apply_derivative(&self, field: &StateField, axis: usize) -> Result<StateField> {
        self.check_axis(axis)?;
        self.check_field(field)?;
        let mut out = StateField::zeros(field.n_comp(), field.n_nodes());
        self.derivative_into(field, axis, &mut out);
        Ok(out)
    }

    pub(crate) fn derivative_into(&self, field: &StateField, axis: usize, out: &mut StateField) {
        let op = &self.ops[axis];
        let stride = self.grid.stride(axis);
        for c in 0..field.n_comp() {
            let src = field.comp(c);
            let dst = out.comp_mut(c);
            for &start in &self.line_starts[axis] {
                op.apply_strided(&src[start..], &mut dst[start..], stride);
            }
        }
    }

    /// `Σ_nodes w · uᵀ W v`.
    pub fn inner_product(&self, u: &StateField, v: &StateField, weight: Weight<'_>) -> Result<f64> {
        self.check_field(u)?;
        if !u.same_shape(v) {
            return Err(Error::ShapeMismatch("inner product operands differ".into()));
        }
        let nc = u.n_comp();
        let mut s = 0.0;
        match weight {
            Weight::Identity => {
                for node in 0..self.grid.len() {
                    let mut local = 0.0;
                    for c in 0..nc {
                        local += u.comp(c)[node] * v.comp(c)[node];
                    }
                    s += self.node_weights[node] * local;
                }
            }
            Weight::Nodal(w) => {
                let mut a = vec![0.0; nc];
                let mut b = vec![0.0; nc];
                for node in 0..self.grid.len() {
                    let m = w(node);
                    if m.n() != nc {
                        return Err(Error::ShapeMismatch(format!(
                            "weight is {}x{}, field has {nc} components",
                            m.n(),
                            m.n()
                        )));
                    }
                    if !m.is_symmetric(1e-14) {
                        return Err(Error::NonSymmetricWeight { node });
                    }
                    u.node(node, &mut a);
                    v.node(node, &mut b);
                    s += self.node_weights[node] * m.quad(&a, &b);
                }
            }
        }
        Ok(s)
    }

    /// Quadrature weight of a face node, excluding the normal direction.
    pub fn transverse_weight(&self, node: usize, normal_axis: usize) -> f64 {
        let idx = self.grid.unravel(node);
        self.ops
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != normal_axis)
            .fold(1.0, |w, (k, op)| w * op.weights()[idx[k]])
    }

    /// Face nodes paired with their transverse quadrature weights.
    pub fn face_quadrature(&self, face: Face) -> Result<Vec<(usize, f64)>> {
        self.grid.check_face(face)?;
        Ok(self
            .grid
            .face_nodes(face)
            .into_iter()
            .map(|n| (n, self.transverse_weight(n, face.axis)))
            .collect())
    }

    /// Signed face term of the SBP identity, `uᵀ (… ⊗ B_axis ⊗ …) v` restricted
    /// to one face: positive on the high side, negative on the low side.
    pub fn boundary_quadrature(&self, u: &StateField, v: &StateField, face: Face) -> Result<f64> {
        self.check_field(u)?;
        if !u.same_shape(v) {
            return Err(Error::ShapeMismatch("boundary quadrature operands differ".into()));
        }
        let sign = face.normal_sign();
        let mut s = 0.0;
        for (node, w) in self.face_quadrature(face)? {
            let mut local = 0.0;
            for c in 0..u.n_comp() {
                local += u.comp(c)[node] * v.comp(c)[node];
            }
            s += w * local;
        }
        Ok(sign * s)
    }

    /// Sum over all faces normal to `axis` (zero on periodic axes).
    pub fn boundary_quadrature_axis(&self, u: &StateField, v: &StateField, axis: usize) -> Result<f64> {
        self.check_axis(axis)?;
        let mut s = 0.0;
        for face in self.grid.faces().into_iter().filter(|f| f.axis == axis) {
            s += self.boundary_quadrature(u, v, face)?;
        }
        Ok(s)
    }

    /// Grid with the same extents refined by a factor of two.
    pub fn refined(&self) -> Result<Discretisation> {
        let axes = self
            .grid
            .axes()
            .iter()
            .map(|a| {
                let mut b = a.clone();
                b.n = if a.periodic { 2 * a.n } else { 2 * (a.n - 1) + 1 };
                b
            })
            .collect();
        Discretisation::new(Grid::new(axes)?, self.order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Axis, Side};

    fn unit_1d(n: usize, order: Order) -> Discretisation {
        Discretisation::new(Grid::new(vec![Axis::bounded(n, 0.0, 1.0)]).unwrap(), order).unwrap()
    }

    #[test]
    fn quadrature_of_one_and_x_squared() {
        let d = unit_1d(5, Order::Second);
        let one = StateField::from_vec(1, 5, vec![1.0; 5]).unwrap();
        assert_eq!(d.inner_product(&one, &one, Weight::Identity).unwrap(), 1.0);

        let d = unit_1d(9, Order::Fourth);
        let x = StateField::from_vec(1, 9, d.grid().axis(0).coords()).unwrap();
        let q = d.inner_product(&x, &x, Weight::Identity).unwrap();
        assert!((q - 1.0 / 3.0).abs() < 1e-15, "{q}");
    }

    #[test]
    fn second_order_quadrature_converges() {
        let err = |n| {
            let d = unit_1d(n, Order::Second);
            let x = StateField::from_vec(1, n, d.grid().axis(0).coords()).unwrap();
            (d.inner_product(&x, &x, Weight::Identity).unwrap() - 1.0 / 3.0).abs()
        };
        let rate = (err(17) / err(33)).log2();
        assert!((rate - 2.0).abs() < 0.05, "{rate}");
    }

    #[test]
    fn semi_norm_annihilates_masked_component() {
        let d = unit_1d(6, Order::Second);
        let mut u = StateField::zeros(2, 6);
        u.comp_mut(1).copy_from_slice(&[1.0, -2.0, 3.0, 0.5, 0.1, 9.0]);
        let w = |_node: usize| Mat::diag(&[1.0, 0.0]);
        assert_eq!(d.inner_product(&u, &u, Weight::Nodal(&w)).unwrap(), 0.0);
        let bad = |_node: usize| Mat::from_rows([[1.0, 1.0], [0.0, 1.0]]);
        assert!(matches!(
            d.inner_product(&u, &u, Weight::Nodal(&bad)),
            Err(Error::NonSymmetricWeight { node: 0 })
        ));
    }

    #[test]
    fn boundary_quadrature_signs() {
        let d = unit_1d(5, Order::Second);
        let u = StateField::from_vec(1, 5, vec![2.0, 0.0, 0.0, 0.0, 3.0]).unwrap();
        let v = StateField::from_vec(1, 5, vec![5.0, 0.0, 0.0, 0.0, 7.0]).unwrap();
        assert_eq!(d.boundary_quadrature(&u, &v, Face::new(0, Side::High)).unwrap(), 21.0);
        assert_eq!(d.boundary_quadrature(&u, &v, Face::new(0, Side::Low)).unwrap(), -10.0);

        let g = Grid::new(vec![Axis::bounded(9, 0.0, 1.0), Axis::bounded(9, 0.0, 1.0)]).unwrap();
        let d2 = Discretisation::new(g, Order::Fourth).unwrap();
        let one = StateField::from_vec(1, 81, vec![1.0; 81]).unwrap();
        let r = d2.boundary_quadrature(&one, &one, Face::new(0, Side::High)).unwrap();
        assert!((r - 1.0).abs() < 1e-15);
        assert!(d2.boundary_quadrature(&one, &one, Face::new(2, Side::High)).is_err());
    }

    #[test]
    fn derivative_of_constant_and_axis_errors() {
        let d = unit_1d(9, Order::Fourth);
        let c = StateField::from_vec(2, 9, vec![3.0; 18]).unwrap();
        let dc = d.apply_derivative(&c, 0).unwrap();
        assert!(dc.max_abs() <= 1e-13 * 8.0);
        assert!(matches!(
            d.apply_derivative(&c, 1),
            Err(Error::AxisOutOfRange { axis: 1, dim: 1 })
        ));
        let wrong = StateField::zeros(1, 4);
        assert!(matches!(d.apply_derivative(&wrong, 0), Err(Error::ShapeMismatch(_))));
    }
}
