use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nodes of the volume coordinate `s = r^N` on `[0, R^N]`, graded toward
/// the origin as `s_j = R^N (j/J)^g`. A grading equal to `N` gives nodes
/// uniformly spaced in `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub dim: u32,
    pub radius: f64,
    pub grading: f64,
    pub s_nodes: Vec<f64>,
    pub r_nodes: Vec<f64>,
}

impl RadialGrid {
    pub fn new(dim: u32, radius: f64, cells: usize, grading: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if cells < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 cells, got {cells}")));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
        }
        if !(grading >= 1.0 && grading.is_finite()) {
            return Err(Error::InvalidParameter(format!("grading must be >= 1, got {grading}")));
        }
        let n = f64::from(dim);
        let extent = radius.powi(dim as i32);
        let jf = cells as f64;
        let mut s_nodes = Vec::with_capacity(cells + 1);
        let mut r_nodes = Vec::with_capacity(cells + 1);
        for j in 0..=cells {
            let x = j as f64 / jf;
            s_nodes.push(extent * x.powf(grading));
            r_nodes.push(radius * x.powf(grading / n));
        }
        s_nodes[cells] = extent;
        r_nodes[cells] = radius;
        Ok(Self { dim, radius, grading, s_nodes, r_nodes })
    }

    pub fn n(&self) -> f64 {
        f64::from(self.dim)
    }

    pub fn cells(&self) -> usize {
        self.s_nodes.len() - 1
    }

    pub fn extent(&self) -> f64 {
        self.s_nodes[self.cells()]
    }

    /// Width of cell `c` in `s`.
    pub fn ds(&self, c: usize) -> f64 {
        self.s_nodes[c + 1] - self.s_nodes[c]
    }

    /// Volume centroid of cell `c` in `r`: the point at which a cell average
    /// matches point values to second order.
    pub fn centroid(&self, c: usize) -> f64 {
        let n = self.n();
        let (a, b) = (self.r_nodes[c], self.r_nodes[c + 1]);
        let num = b.powf(n + 1.0) - a.powf(n + 1.0);
        let den = self.s_nodes[c + 1] - self.s_nodes[c];
        n / (n + 1.0) * num / den
    }

    pub fn centroids(&self) -> Vec<f64> {
        (0..self.cells()).map(|c| self.centroid(c)).collect()
    }

    /// Interpolates cell values to nodes, linearly in `r` between adjacent
    /// centroids; the end nodes take the value of their cell. Every node value
    /// is a convex combination of neighbouring cell values.
    pub fn cells_to_nodes(&self, cells: &[f64]) -> Vec<f64> {
        let jc = self.cells();
        debug_assert_eq!(cells.len(), jc);
        let mut out = vec![0.0; jc + 1];
        out[0] = cells[0];
        out[jc] = cells[jc - 1];
        let mut left = self.centroid(0);
        for j in 1..jc {
            let right = self.centroid(j);
            let theta = ((self.r_nodes[j] - left) / (right - left)).clamp(0.0, 1.0);
            out[j] = cells[j - 1] + theta * (cells[j] - cells[j - 1]);
            left = right;
        }
        out
    }
}
