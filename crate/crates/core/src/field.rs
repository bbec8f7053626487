//! Multi-component nodal fields.

use crate::error::{Error, Result};

/// Block vector of all solution components over a grid.
///
/// Layout is component-major; within a component the grid's flat node
/// ordering (last axis fastest) is used.
#[derive(Clone, Debug, PartialEq)]
pub struct StateField {
    n_comp: usize,
    n_nodes: usize,
    data: Vec<f64>,
}

impl StateField {
    pub fn zeros(n_comp: usize, n_nodes: usize) -> Self {
        StateField {
            n_comp,
            n_nodes,
            data: vec![0.0; n_comp * n_nodes],
        }
    }

    pub fn from_vec(n_comp: usize, n_nodes: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_comp * n_nodes {
            return Err(Error::ShapeMismatch(format!(
                "expected {} values for {n_comp} components on {n_nodes} nodes, got {}",
                n_comp * n_nodes,
                data.len()
            )));
        }
        Ok(StateField {
            n_comp,
            n_nodes,
            data,
        })
    }

    /// Builds a field from a nodal function.
    pub fn from_fn(n_comp: usize, n_nodes: usize, mut f: impl FnMut(usize, &mut [f64])) -> Self {
        let mut out = Self::zeros(n_comp, n_nodes);
        let mut v = vec![0.0; n_comp];
        for node in 0..n_nodes {
            f(node, &mut v);
            out.set_node(node, &v);
        }
        out
    }

    pub fn n_comp(&self) -> usize {
        self.n_comp
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn comp(&self, c: usize) -> &[f64] {
        &self.data[c * self.n_nodes..(c + 1) * self.n_nodes]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * self.n_nodes..(c + 1) * self.n_nodes]
    }

    #[inline]
    pub fn node(&self, node: usize, out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate().take(self.n_comp) {
            *o = self.data[c * self.n_nodes + node];
        }
    }

    pub fn node_vec(&self, node: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.n_comp];
        self.node(node, &mut v);
        v
    }

    #[inline]
    pub fn set_node(&mut self, node: usize, v: &[f64]) {
        for (c, &x) in v.iter().enumerate().take(self.n_comp) {
            self.data[c * self.n_nodes + node] = x;
        }
    }

    #[inline]
    pub fn add_node(&mut self, node: usize, v: &[f64]) {
        for (c, &x) in v.iter().enumerate().take(self.n_comp) {
            self.data[c * self.n_nodes + node] += x;
        }
    }

    pub fn same_shape(&self, other: &StateField) -> bool {
        self.n_comp == other.n_comp && self.n_nodes == other.n_nodes
    }

    pub fn check_shape(&self, n_comp: usize, n_nodes: usize, what: &str) -> Result<()> {
        if self.n_comp != n_comp || self.n_nodes != n_nodes {
            return Err(Error::ShapeMismatch(format!(
                "{what}: expected {n_comp} components on {n_nodes} nodes, got {} on {}",
                self.n_comp, self.n_nodes
            )));
        }
        Ok(())
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &StateField) {
        debug_assert!(self.same_shape(other));
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }

    pub fn add(&self, other: &StateField) -> StateField {
        debug_assert!(self.same_shape(other));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        StateField { data, ..*self }
    }

    pub fn sub(&self, other: &StateField) -> StateField {
        debug_assert!(self.same_shape(other));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        StateField { data, ..*self }
    }

    pub fn scaled(&self, s: f64) -> StateField {
        StateField {
            data: self.data.iter().map(|x| s * x).collect(),
            ..*self
        }
    }

    pub fn neg(&self) -> StateField {
        StateField {
            data: self.data.iter().map(|x| -x).collect(),
            ..*self
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Stacks two fields with the same node count into one.
    pub fn stack(a: &StateField, b: &StateField) -> StateField {
        debug_assert_eq!(a.n_nodes, b.n_nodes);
        let mut data = a.data.clone();
        data.extend_from_slice(&b.data);
        StateField {
            n_comp: a.n_comp + b.n_comp,
            n_nodes: a.n_nodes,
            data,
        }
    }

    /// Inverse of [`StateField::stack`].
    pub fn split(&self, first_comp: usize) -> (StateField, StateField) {
        let cut = first_comp * self.n_nodes;
        (
            StateField {
                n_comp: first_comp,
                n_nodes: self.n_nodes,
                data: self.data[..cut].to_vec(),
            },
            StateField {
                n_comp: self.n_comp - first_comp,
                n_nodes: self.n_nodes,
                data: self.data[cut..].to_vec(),
            },
        )
    }

    /// FNV-1a over the bit patterns, for identifying states in reports.
    pub fn state_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for x in &self.data {
            for b in x.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn component_major_layout() {
        let f = StateField::from_fn(2, 3, |node, v| {
            v[0] = node as f64;
            v[1] = 10.0 + node as f64;
        });
        assert_eq!(f.as_slice(), &[0.0, 1.0, 2.0, 10.0, 11.0, 12.0]);
        assert_eq!(f.node_vec(1), vec![1.0, 11.0]);
        assert_eq!(f.comp(1), &[10.0, 11.0, 12.0]);
    }

    #[test]
    fn stack_split_round_trip() {
        let a = StateField::from_vec(1, 2, vec![1.0, 2.0]).unwrap();
        let b = StateField::from_vec(2, 2, vec![3.0, 4.0, 5.0, 6.0]).unwrap();
        let s = StateField::stack(&a, &b);
        let (a2, b2) = s.split(1);
        assert_eq!(a, a2);
        assert_eq!(b, b2);
        assert!(StateField::from_vec(2, 2, vec![1.0]).is_err());
    }
}
