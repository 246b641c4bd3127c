use crate::error::{Error, Result};

use super::grid::RadialGrid;
use super::tridiag::solve_tridiagonal;

/// Discrete solution of `−r^{1−N}(r^{N−1}v_r)_r + v = u` with zero flux at
/// `r = 0` and `r = R`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticSolution {
    /// Cell averages of `v`.
    pub v_cells: Vec<f64>,
    /// `v` at the grid nodes.
    pub v_nodes: Vec<f64>,
    /// `z(s_j) = ∫₀^{r_j} ρ^{N−1} v dρ`.
    pub z: Vec<f64>,
}

/// Face conductances for interior faces; the two boundary entries are zero.
///
/// The face derivative comes from fitting `α + β r²` to the two adjacent cell
/// averages, which is exact for the even quadratics that describe smooth
/// radial fields near the origin: `v_r(r_j) ≈ 2 r_j (v̄_c − v̄_{c−1}) / (q_c − q_{c−1})`
/// with `q_c` the cell average of `r²`.
fn conductances(grid: &RadialGrid) -> Vec<f64> {
    let jc = grid.cells();
    let n = grid.n();
    let q: Vec<f64> = (0..jc)
        .map(|c| {
            let (a, b) = (grid.r_nodes[c], grid.r_nodes[c + 1]);
            n / (n + 2.0) * (b.powf(n + 2.0) - a.powf(n + 2.0)) / grid.ds(c)
        })
        .collect();
    let mut kappa = vec![0.0; jc + 1];
    for j in 1..jc {
        kappa[j] = 2.0 * grid.s_nodes[j] / (q[j] - q[j - 1]);
    }
    kappa
}

/// Finite-volume solve on the shells `[r_c, r_{c+1}]`. Fluxes carry the
/// `r^{N−1}` weight, so the cell equations telescope: `Σ v_c Δs_c = Σ u_c Δs_c`
/// and `z_j − w_j` equals the discrete `r^{N−1} v_r` at node `j`.
pub fn solve_elliptic(u_cells: &[f64], grid: &RadialGrid) -> Result<EllipticSolution> {
    let jc = grid.cells();
    if u_cells.len() != jc {
        return Err(Error::InvalidParameter(format!(
            "expected {jc} cell values, got {}",
            u_cells.len()
        )));
    }
    let n = grid.n();
    let kappa = conductances(grid);
    // Constants are exact solutions, so solve for the deviation from the
    // volume mean of u; this keeps roundoff from the stiff fluxes off the mean.
    let mean = cumulative_cells(u_cells, grid)[jc] * n / grid.extent();
    let mut lower = vec![0.0; jc];
    let mut diag = vec![0.0; jc];
    let mut upper = vec![0.0; jc];
    let mut rhs = vec![0.0; jc];
    for c in 0..jc {
        let vol = grid.ds(c) / n;
        lower[c] = -kappa[c];
        upper[c] = -kappa[c + 1];
        diag[c] = vol + kappa[c] + kappa[c + 1];
        rhs[c] = vol * (u_cells[c] - mean);
    }
    let mut v_cells = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
    for v in &mut v_cells {
        *v += mean;
    }
    let v_nodes = grid.cells_to_nodes(&v_cells);
    let z = cumulative_cells(&v_cells, grid);
    Ok(EllipticSolution { v_cells, v_nodes, z })
}

/// Max-norm residual of the cell equations divided by cell volume, i.e. in
/// the units of `u`.
pub fn elliptic_residual(u_cells: &[f64], v_cells: &[f64], grid: &RadialGrid) -> f64 {
    let jc = grid.cells();
    let n = grid.n();
    let kappa = conductances(grid);
    let flux = |j: usize| {
        if j == 0 || j == jc {
            0.0
        } else {
            kappa[j] * (v_cells[j] - v_cells[j - 1])
        }
    };
    (0..jc)
        .map(|c| {
            let vol = grid.ds(c) / n;
            ((flux(c) - flux(c + 1)) / vol + v_cells[c] - u_cells[c]).abs()
        })
        .fold(0.0, f64::max)
}

/// Node values `Σ_{c<j} f_c Δs_c / N` of the cumulative integral of a
/// cell-averaged field.
pub fn cumulative_cells(cells: &[f64], grid: &RadialGrid) -> Vec<f64> {
    let n = grid.n();
    let mut out = Vec::with_capacity(cells.len() + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for (c, f) in cells.iter().enumerate() {
        acc += f * grid.ds(c) / n;
        out.push(acc);
    }
    out
}

/// `w(s_j) = ∫₀^{r_j} ρ^{N−1} u dρ` for a node-sampled field, integrating its
/// piecewise-linear interpolant in `r` exactly.
pub fn compute_w(u_nodes: &[f64], grid: &RadialGrid) -> Vec<f64> {
    let n = grid.n();
    let r = &grid.r_nodes;
    let mut out = Vec::with_capacity(r.len());
    let mut acc = 0.0;
    out.push(0.0);
    for c in 0..grid.cells() {
        let (a, b) = (r[c], r[c + 1]);
        let slope = (u_nodes[c + 1] - u_nodes[c]) / (b - a);
        let intercept = u_nodes[c] - slope * a;
        acc += intercept * (grid.s_nodes[c + 1] - grid.s_nodes[c]) / n
            + slope * (b.powf(n + 1.0) - a.powf(n + 1.0)) / (n + 1.0);
        out.push(acc);
    }
    out
}

/// Same construction as [`compute_w`], applied to `v`.
pub fn compute_z(v_nodes: &[f64], grid: &RadialGrid) -> Vec<f64> {
    compute_w(v_nodes, grid)
}

/// Cell values `N Δw / Δs`.
pub fn differentiate_w(w: &[f64], grid: &RadialGrid) -> Vec<f64> {
    let n = grid.n();
    (0..grid.cells()).map(|c| n * (w[c + 1] - w[c]) / grid.ds(c)).collect()
}

/// Max-norm error of the solver against `v*(r) = 2 + cos(πr/R)`, which has
/// zero slope at both ends; the source is `u* = v* − Δ_rad v*`, and both are
/// compared as exact cell averages.
pub fn manufactured_elliptic_error(grid: &RadialGrid) -> Result<f64> {
    use crate::quadrature::{integrate, Tolerance};
    use std::f64::consts::PI;
    let n = grid.n();
    let k = PI / grid.radius;
    let vstar = |r: f64| 2.0 + (k * r).cos();
    let ustar = |r: f64| {
        let lap = if r == 0.0 {
            -n * k * k
        } else {
            -k * k * (k * r).cos() - (n - 1.0) / r * k * (k * r).sin()
        };
        vstar(r) - lap
    };
    let tol = Tolerance { abs: 1e-15, rel: 1e-13, max_intervals: 200 };
    let average = |f: &dyn Fn(f64) -> f64, c: usize| -> Result<f64> {
        let i = integrate(|r| r.powf(n - 1.0) * f(r), grid.r_nodes[c], grid.r_nodes[c + 1], tol)?;
        Ok(i.value * n / grid.ds(c))
    };
    let u = (0..grid.cells()).map(|c| average(&ustar, c)).collect::<Result<Vec<_>>>()?;
    let sol = solve_elliptic(&u, grid)?;
    let mut err: f64 = 0.0;
    for c in 0..grid.cells() {
        err = err.max((sol.v_cells[c] - average(&vstar, c)?).abs());
    }
    Ok(err)
}
