//! The discrete function space: piecewise-constant fields, the edge-based
//! bilinear form, discrete norms, and the per-cell gradient reconstruction.
//!
//! For a field `u` with one value per cell and boundary data `g`, the
//! gradient on cell K is
//!
//! ```text
//! (grad u)_K = 1/m(K) [ sum_{L ~ K} A_{K,L} (u_L - u_K)
//!                      + sum_{sigma in boundary(K)} A_{K,sigma} (g_sigma - u_K) ]
//! ```
//!
//! with `A_{K,sigma} = tau_sigma (x_sigma - x_K)`. With `g = 0` this is the
//! homogeneous form; the `(g_sigma - u_K)` extension is the standard
//! two-point treatment of non-homogeneous Dirichlet data and reduces
//! bit-exactly to the homogeneous formulas when `g` vanishes.

use std::sync::Arc;

use crate::error::DiscreteError;
use crate::geometry::{self, Point};
use crate::mesh::Mesh;

/// One real value per cell: an element of the discrete space H_D.
#[derive(Clone, Debug)]
pub struct DiscreteField<const D: usize> {
    mesh: Arc<Mesh<D>>,
    values: Vec<f64>,
}

impl<const D: usize> DiscreteField<D> {
    pub fn new(mesh: Arc<Mesh<D>>, values: Vec<f64>) -> Result<Self, DiscreteError> {
        if values.len() != mesh.cell_count() {
            return Err(DiscreteError::MeshMismatch);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(DiscreteError::NonFinite(format!("cell {i}")));
        }
        Ok(DiscreteField { mesh, values })
    }

    pub fn zero(mesh: Arc<Mesh<D>>) -> Self {
        let values = vec![0.0; mesh.cell_count()];
        DiscreteField { mesh, values }
    }

    pub fn mesh(&self) -> &Arc<Mesh<D>> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Piecewise-constant L2 norm: sqrt(sum m(K) u_K^2).
    pub fn l2_norm(&self) -> f64 {
        self.values
            .iter()
            .zip(self.mesh.cells())
            .map(|(v, c)| c.measure * v * v)
            .sum::<f64>()
            .sqrt()
    }
}

/// One d-vector per cell: the range of the discrete gradient.
#[derive(Clone, Debug)]
pub struct GradientField<const D: usize> {
    mesh: Arc<Mesh<D>>,
    vectors: Vec<Point<D>>,
}

impl<const D: usize> GradientField<D> {
    pub fn mesh(&self) -> &Arc<Mesh<D>> {
        &self.mesh
    }

    pub fn vectors(&self) -> &[Point<D>] {
        &self.vectors
    }

    pub fn l2_norm(&self) -> f64 {
        self.vectors
            .iter()
            .zip(self.mesh.cells())
            .map(|(v, c)| c.measure * geometry::dot(*v, *v))
            .sum::<f64>()
            .sqrt()
    }
}

/// Dirichlet values at boundary edge barycenters, stored per edge id
/// (interior entries unused and kept at zero).
#[derive(Clone, Debug)]
pub struct BoundaryData<const D: usize> {
    mesh: Arc<Mesh<D>>,
    values: Vec<f64>,
}

impl<const D: usize> BoundaryData<D> {
    pub fn zero(mesh: Arc<Mesh<D>>) -> Self {
        let values = vec![0.0; mesh.edge_count()];
        BoundaryData { mesh, values }
    }

    /// Sample `g` at every boundary edge barycenter x_sigma.
    pub fn from_fn(
        mesh: Arc<Mesh<D>>,
        g: impl Fn(Point<D>) -> f64,
    ) -> Result<Self, DiscreteError> {
        let mut values = vec![0.0; mesh.edge_count()];
        for e in mesh.boundary_edge_ids().collect::<Vec<_>>() {
            let v = g(mesh.edge(e).barycenter);
            if !v.is_finite() {
                return Err(DiscreteError::NonFinite(format!("boundary edge {e}")));
            }
            values[e] = v;
        }
        Ok(BoundaryData { mesh, values })
    }

    pub fn value(&self, edge: usize) -> f64 {
        self.values[edge]
    }

    pub fn mesh(&self) -> &Arc<Mesh<D>> {
        &self.mesh
    }
}

/// Which cell point anchors the gradient coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoefficientVariant {
    /// The mesh point x_K (the choice the scheme's analysis relies on).
    Center,
    /// The gravity center of K: the averaged Raviart-Thomas construction,
    /// kept around because it demonstrably fails for anisotropic problems.
    Barycenter,
}

/// Per-edge gradient coefficients A_{K,sigma} = tau_sigma (x_sigma - x_K),
/// stored for both orientations of interior edges.
#[derive(Clone, Debug)]
pub struct EdgeCoefficients<const D: usize> {
    mesh: Arc<Mesh<D>>,
    variant: CoefficientVariant,
    inner: Vec<Point<D>>,
    outer: Vec<Option<Point<D>>>,
}

impl<const D: usize> EdgeCoefficients<D> {
    pub fn build(mesh: &Arc<Mesh<D>>, variant: CoefficientVariant) -> Self {
        let anchor = |k: usize| -> Point<D> {
            match variant {
                CoefficientVariant::Center => mesh.cell(k).center,
                CoefficientVariant::Barycenter => mesh.cell(k).centroid,
            }
        };
        let mut inner = Vec::with_capacity(mesh.edge_count());
        let mut outer = Vec::with_capacity(mesh.edge_count());
        for edge in mesh.edges() {
            let tau = edge.transmissibility;
            inner.push(geometry::scale(
                tau,
                geometry::sub(edge.barycenter, anchor(edge.inner_cell)),
            ));
            outer.push(
                edge.outer_cell
                    .map(|l| geometry::scale(tau, geometry::sub(edge.barycenter, anchor(l)))),
            );
        }
        EdgeCoefficients { mesh: Arc::clone(mesh), variant, inner, outer }
    }

    pub fn mesh(&self) -> &Arc<Mesh<D>> {
        &self.mesh
    }

    pub fn variant(&self) -> CoefficientVariant {
        self.variant
    }

    /// A_{K,sigma} for the given edge as seen from `cell`.
    pub fn from_cell(&self, edge: usize, cell: usize) -> Point<D> {
        if self.mesh.edge(edge).inner_cell == cell {
            self.inner[edge]
        } else {
            self.outer[edge].expect("cell is not adjacent to edge")
        }
    }
}

fn same_mesh<const D: usize>(a: &Arc<Mesh<D>>, b: &Arc<Mesh<D>>) -> Result<(), DiscreteError> {
    if Arc::ptr_eq(a, b) {
        Ok(())
    } else {
        Err(DiscreteError::MeshMismatch)
    }
}

/// Interpolation operator: sample a continuous function at the cell points.
pub fn interpolate<const D: usize>(
    phi: impl Fn(Point<D>) -> f64,
    mesh: &Arc<Mesh<D>>,
) -> Result<DiscreteField<D>, DiscreteError> {
    let mut values = Vec::with_capacity(mesh.cell_count());
    for (k, cell) in mesh.cells().iter().enumerate() {
        let v = phi(cell.center);
        if !v.is_finite() {
            return Err(DiscreteError::NonFinite(format!("phi(x_K) at cell {k}")));
        }
        values.push(v);
    }
    Ok(DiscreteField { mesh: Arc::clone(mesh), values })
}

/// Averaging rule for the per-edge coefficient alpha_sigma.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeAlphaRule {
    /// Mean over the diamond: the cone-measure weighted average of the two
    /// cell values (single cell value on boundary diamonds). Exact for alpha
    /// constant per cell.
    DiamondMean,
    /// Distance-weighted harmonic mean of the two cell values.
    HarmonicCells,
}

/// Compute alpha_sigma for every edge.
pub fn edge_alpha<const D: usize>(
    alpha: impl Fn(Point<D>) -> f64,
    mesh: &Arc<Mesh<D>>,
    rule: EdgeAlphaRule,
) -> Result<Vec<f64>, DiscreteError> {
    let at = |p: Point<D>, what: &str| -> Result<f64, DiscreteError> {
        let v = alpha(p);
        if !v.is_finite() {
            return Err(DiscreteError::NonFinite(what.to_string()));
        }
        if v <= 0.0 {
            return Err(DiscreteError::Coercivity { value: v, location: what.to_string() });
        }
        Ok(v)
    };
    let mut out = Vec::with_capacity(mesh.edge_count());
    for (e, edge) in mesh.edges().iter().enumerate() {
        let ak = at(mesh.cell(edge.inner_cell).center, &format!("cell {}", edge.inner_cell))?;
        let value = match edge.outer_cell {
            None => ak,
            Some(l) => {
                let al = at(mesh.cell(l).center, &format!("cell {l}"))?;
                let dk = edge.d_inner;
                let dl = edge.d_outer.expect("interior edge");
                match rule {
                    // Cone measures are m(sigma) d / dim, so the weights
                    // reduce to the distances.
                    EdgeAlphaRule::DiamondMean => (ak * dk + al * dl) / (dk + dl),
                    EdgeAlphaRule::HarmonicCells => (dk + dl) / (dk / ak + dl / al),
                }
            }
        };
        if !value.is_finite() {
            return Err(DiscreteError::NonFinite(format!("alpha_sigma at edge {e}")));
        }
        out.push(value);
    }
    Ok(out)
}

/// The symmetric bilinear form
/// `[u,v] = sum_int tau alpha (u_L-u_K)(v_L-v_K)
///        + sum_bnd tau alpha (u_K-gu_sigma)(v_K-gv_sigma)`.
///
/// Each side carries its own boundary data; pass zero data for test fields.
pub fn bilinear_form<const D: usize>(
    u: &DiscreteField<D>,
    gu: &BoundaryData<D>,
    v: &DiscreteField<D>,
    gv: &BoundaryData<D>,
    alpha_sigma: &[f64],
) -> Result<f64, DiscreteError> {
    let mesh = u.mesh();
    same_mesh(mesh, v.mesh())?;
    same_mesh(mesh, gu.mesh())?;
    same_mesh(mesh, gv.mesh())?;
    if alpha_sigma.len() != mesh.edge_count() {
        return Err(DiscreteError::MeshMismatch);
    }
    let mut acc = 0.0;
    for (e, edge) in mesh.edges().iter().enumerate() {
        let k = edge.inner_cell;
        let w = edge.transmissibility * alpha_sigma[e];
        // Grouping the two jumps first keeps [u,v] = [v,u] bit-exact.
        match edge.outer_cell {
            Some(l) => {
                acc += w * ((u.values[l] - u.values[k]) * (v.values[l] - v.values[k]));
            }
            None => {
                acc += w * ((u.values[k] - gu.value(e)) * (v.values[k] - gv.value(e)));
            }
        }
    }
    Ok(acc)
}

/// `||u||_D = sqrt([u,u]_{D,1})` with the given boundary data.
pub fn discrete_norm<const D: usize>(
    u: &DiscreteField<D>,
    g: &BoundaryData<D>,
) -> Result<f64, DiscreteError> {
    let ones = vec![1.0; u.mesh().edge_count()];
    Ok(bilinear_form(u, g, u, g, &ones)?.sqrt())
}

/// The discrete gradient.
pub fn discrete_gradient<const D: usize>(
    u: &DiscreteField<D>,
    g: &BoundaryData<D>,
    coeffs: &EdgeCoefficients<D>,
) -> Result<GradientField<D>, DiscreteError> {
    let mesh = u.mesh();
    same_mesh(mesh, g.mesh())?;
    same_mesh(mesh, coeffs.mesh())?;
    let mut vectors = Vec::with_capacity(mesh.cell_count());
    for (k, cell) in mesh.cells().iter().enumerate() {
        let mut acc = geometry::zero::<D>();
        for &e in &cell.edge_ids {
            let edge = mesh.edge(e);
            let delta = match edge.other_cell(k) {
                Some(l) => u.values[l] - u.values[k],
                None => g.value(e) - u.values[k],
            };
            acc = geometry::axpy(delta, coeffs.from_cell(e, k), acc);
        }
        vectors.push(geometry::scale(1.0 / cell.measure, acc));
    }
    Ok(GradientField { mesh: Arc::clone(mesh), vectors })
}

// ---------------------------------------------------------------------------
// Cell quadrature and L2 errors against continuous references (2D)
// ---------------------------------------------------------------------------

/// Order-2 quadrature nodes and weights for one cell. Axis-aligned
/// rectangles get a 2x2 tensor Gauss rule; any other convex polygon is
/// fanned into triangles from its centroid with the 3-point edge-midpoint
/// rule on each.
pub fn cell_quadrature(mesh: &Mesh<2>, k: usize) -> Vec<(Point<2>, f64)> {
    let cell = mesh.cell(k);
    let pts: Vec<Point<2>> = cell.vertex_ids.iter().map(|&v| mesh.vertices()[v]).collect();
    if let Some(rule) = rectangle_gauss(&pts) {
        return rule;
    }
    let c = cell.centroid;
    let mut nodes = Vec::with_capacity(3 * pts.len());
    for i in 0..pts.len() {
        let a = pts[i];
        let b = pts[(i + 1) % pts.len()];
        let area = 0.5
            * ((a[0] - c[0]) * (b[1] - c[1]) - (a[1] - c[1]) * (b[0] - c[0]));
        let w = area / 3.0;
        nodes.push((geometry::scale(0.5, geometry::add(a, b)), w));
        nodes.push((geometry::scale(0.5, geometry::add(b, c)), w));
        nodes.push((geometry::scale(0.5, geometry::add(c, a)), w));
    }
    nodes
}

fn rectangle_gauss(pts: &[Point<2>]) -> Option<Vec<(Point<2>, f64)>> {
    if pts.len() != 4 {
        return None;
    }
    let scale = geometry::polygon_diameter(pts);
    for i in 0..4 {
        let e = geometry::sub(pts[(i + 1) % 4], pts[i]);
        if e[0].abs().min(e[1].abs()) > 1e-12 * scale {
            return None;
        }
    }
    let xs = [pts[0][0], pts[1][0], pts[2][0], pts[3][0]];
    let ys = [pts[0][1], pts[1][1], pts[2][1], pts[3][1]];
    let (x0, x1) = (xs.iter().cloned().fold(f64::INFINITY, f64::min), xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    let (y0, y1) = (ys.iter().cloned().fold(f64::INFINITY, f64::min), ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    let g = 0.5 / 3f64.sqrt();
    let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
    let (hx, hy) = (x1 - x0, y1 - y0);
    let w = 0.25 * hx * hy;
    Some(vec![
        ([cx - g * hx, cy - g * hy], w),
        ([cx + g * hx, cy - g * hy], w),
        ([cx - g * hx, cy + g * hy], w),
        ([cx + g * hx, cy + g * hy], w),
    ])
}

/// Cell average of a continuous function by the order-2 rule.
pub fn cell_average(mesh: &Mesh<2>, k: usize, f: impl Fn(Point<2>) -> f64) -> f64 {
    let nodes = cell_quadrature(mesh, k);
    let mut acc = 0.0;
    for (p, w) in nodes {
        acc += w * f(p);
    }
    acc / mesh.cell(k).measure
}

/// L2(Omega) distance between a piecewise-constant field and a continuous
/// reference, integrated by the order-2 cell rule. Carries the within-cell
/// variation of the reference, hence first-order for interpolants of smooth
/// functions.
pub fn l2_error(
    u: &DiscreteField<2>,
    exact: impl Fn(Point<2>) -> f64,
) -> Result<f64, DiscreteError> {
    let mesh = u.mesh();
    let mut acc = 0.0;
    for k in 0..mesh.cell_count() {
        for (p, w) in cell_quadrature(mesh, k) {
            let v = exact(p);
            if !v.is_finite() {
                return Err(DiscreteError::NonFinite(format!("quadrature at cell {k}")));
            }
            let d = u.values[k] - v;
            acc += w * d * d;
        }
    }
    Ok(acc.sqrt())
}

/// L2 distance between a piecewise-constant field and the cell averages of a
/// continuous reference.
pub fn l2_error_vs_average(
    u: &DiscreteField<2>,
    exact: impl Fn(Point<2>) -> f64,
) -> Result<f64, DiscreteError> {
    let mesh = u.mesh();
    let mut acc = 0.0;
    for (k, cell) in mesh.cells().iter().enumerate() {
        let avg = cell_average(mesh, k, &exact);
        if !avg.is_finite() {
            return Err(DiscreteError::NonFinite(format!("quadrature at cell {k}")));
        }
        let d = u.values[k] - avg;
        acc += cell.measure * d * d;
    }
    Ok(acc.sqrt())
}

/// L2 distance between a piecewise-constant field and the point values of a
/// continuous reference at the cell points.
pub fn l2_error_at_centers(
    u: &DiscreteField<2>,
    exact: impl Fn(Point<2>) -> f64,
) -> Result<f64, DiscreteError> {
    let mesh = u.mesh();
    let mut acc = 0.0;
    for (k, cell) in mesh.cells().iter().enumerate() {
        let v = exact(cell.center);
        if !v.is_finite() {
            return Err(DiscreteError::NonFinite(format!("exact(x_K) at cell {k}")));
        }
        let d = u.values[k] - v;
        acc += cell.measure * d * d;
    }
    Ok(acc.sqrt())
}

/// L2(Omega)^d distance between a piecewise-constant gradient field and a
/// continuous vector reference, integrated by the order-2 cell rule. This
/// carries the within-cell variation of the reference, so it decays at
/// first order once the reconstruction is accurate.
pub fn l2_error_gradient(
    gu: &GradientField<2>,
    exact_grad: impl Fn(Point<2>) -> Point<2>,
) -> Result<f64, DiscreteError> {
    let mesh = gu.mesh();
    let mut acc = 0.0;
    for k in 0..mesh.cell_count() {
        for (p, w) in cell_quadrature(mesh, k) {
            let g = exact_grad(p);
            if !geometry::is_finite(g) {
                return Err(DiscreteError::NonFinite(format!("quadrature at cell {k}")));
            }
            let d = geometry::sub(gu.vectors[k], g);
            acc += w * geometry::dot(d, d);
        }
    }
    Ok(acc.sqrt())
}

/// L2 distance between a gradient field and the cell averages of a
/// continuous vector reference (the within-cell variation removed).
pub fn l2_error_gradient_vs_average(
    gu: &GradientField<2>,
    exact_grad: impl Fn(Point<2>) -> Point<2>,
) -> Result<f64, DiscreteError> {
    let mesh = gu.mesh();
    let mut acc = 0.0;
    for (k, cell) in mesh.cells().iter().enumerate() {
        let gx = cell_average(mesh, k, |p| exact_grad(p)[0]);
        let gy = cell_average(mesh, k, |p| exact_grad(p)[1]);
        if !gx.is_finite() || !gy.is_finite() {
            return Err(DiscreteError::NonFinite(format!("quadrature at cell {k}")));
        }
        let d = geometry::sub(gu.vectors[k], [gx, gy]);
        acc += cell.measure * geometry::dot(d, d);
    }
    Ok(acc.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_delaunay_mesh, build_rectangular_mesh, Rect};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_by_one() -> Arc<Mesh<2>> {
        Arc::new(build_rectangular_mesh(2, 1, Rect::UNIT).unwrap())
    }

    fn random_field<const D: usize>(mesh: &Arc<Mesh<D>>, rng: &mut ChaCha8Rng) -> DiscreteField<D> {
        let values = (0..mesh.cell_count()).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        DiscreteField::new(Arc::clone(mesh), values).unwrap()
    }

    #[test]
    fn interpolate_samples_cell_points() {
        let mesh = two_by_one();
        let u = interpolate(|p| p[0], &mesh).unwrap();
        assert_eq!(u.values(), &[0.25, 0.75]);
        let z = interpolate(|_| 0.0, &mesh).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
        assert!(interpolate(|p| 1.0 / (p[0] - 0.25), &mesh).is_err());
    }

    #[test]
    fn edge_alpha_rules_match_hand_values() {
        let mesh = two_by_one();
        // alpha jumps from 1 to 3 across the interior edge at x = 0.5.
        let alpha = |p: Point<2>| if p[0] < 0.5 { 1.0 } else { 3.0 };
        let diamond = edge_alpha(alpha, &mesh, EdgeAlphaRule::DiamondMean).unwrap();
        let harmonic = edge_alpha(alpha, &mesh, EdgeAlphaRule::HarmonicCells).unwrap();
        let interior: Vec<_> = mesh.interior_edge_ids().collect();
        assert_eq!(interior.len(), 1);
        // Equal-measure diamond halves: arithmetic mean 2.
        assert!((diamond[interior[0]] - 2.0).abs() < 1e-14);
        // 2*1*3/(1+3) = 1.5.
        assert!((harmonic[interior[0]] - 1.5).abs() < 1e-14);
        let constant = edge_alpha(|_| 1.0, &mesh, EdgeAlphaRule::DiamondMean).unwrap();
        assert!(constant.iter().all(|&a| (a - 1.0).abs() < 1e-15));
        assert!(matches!(
            edge_alpha(|p| p[0] - 0.25, &mesh, EdgeAlphaRule::DiamondMean),
            Err(DiscreteError::Coercivity { .. })
        ));
    }

    #[test]
    fn bilinear_form_hand_value() {
        let mesh = two_by_one();
        let ones = vec![1.0; mesh.edge_count()];
        let g0 = BoundaryData::zero(Arc::clone(&mesh));
        let u = DiscreteField::new(Arc::clone(&mesh), vec![1.0, -1.0]).unwrap();
        // Interior: tau=2, jump -2 squared -> 8. Boundary per cell:
        // tau in {4,1,1}, u_K^2 = 1 -> 6 per cell. Total 20.
        let val = bilinear_form(&u, &g0, &u, &g0, &ones).unwrap();
        assert!((val - 20.0).abs() < 1e-13);

        let z = DiscreteField::zero(Arc::clone(&mesh));
        assert_eq!(bilinear_form(&z, &g0, &z, &g0, &ones).unwrap(), 0.0);
    }

    #[test]
    fn single_cell_norm() {
        let mesh = Arc::new(build_rectangular_mesh(1, 1, Rect::UNIT).unwrap());
        let g0 = BoundaryData::zero(Arc::clone(&mesh));
        let u = DiscreteField::new(Arc::clone(&mesh), vec![1.0]).unwrap();
        // Four boundary edges with tau = 2.
        assert!((discrete_norm(&u, &g0).unwrap() - 8f64.sqrt()).abs() < 1e-14);
        // Homogeneity under scaling.
        let u3 = DiscreteField::new(Arc::clone(&mesh), vec![-3.0]).unwrap();
        assert!((discrete_norm(&u3, &g0).unwrap() - 3.0 * 8f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn gradient_of_two_cell_step_matches_edge_loop_oracle() {
        let mesh = two_by_one();
        let g0 = BoundaryData::zero(Arc::clone(&mesh));
        let coeffs = EdgeCoefficients::build(&mesh, CoefficientVariant::Center);
        let u = DiscreteField::new(Arc::clone(&mesh), vec![0.0, 1.0]).unwrap();
        let grad = discrete_gradient(&u, &g0, &coeffs).unwrap();

        // Independent brute-force edge loop: sum tau (x_sigma - x_K) delta.
        let mut oracle = vec![[0.0f64; 2]; 2];
        for k in 0..2 {
            for &e in &mesh.cell(k).edge_ids {
                let edge = mesh.edge(e);
                let delta = match edge.other_cell(k) {
                    Some(l) => u.values()[l] - u.values()[k],
                    None => -u.values()[k],
                };
                let a = geometry::scale(
                    edge.transmissibility,
                    geometry::sub(edge.barycenter, mesh.cell(k).center),
                );
                oracle[k] = geometry::axpy(delta, a, oracle[k]);
            }
            oracle[k] = geometry::scale(1.0 / mesh.cell(k).measure, oracle[k]);
        }
        for k in 0..2 {
            assert!(geometry::dist(grad.vectors()[k], oracle[k]) < 1e-14);
        }
        // Frozen hand value for this configuration.
        assert!(geometry::dist(grad.vectors()[0], [1.0, 0.0]) < 1e-13);
        assert!(geometry::dist(grad.vectors()[1], [-1.0, 0.0]) < 1e-13);
    }

    #[test]
    fn gradient_is_exact_on_affine_fields() {
        // Needs x_sigma = z_sigma on boundary edges, which both generators
        // provide.
        let a = [0.7, -1.3];
        let b = 0.4;
        let affine = |p: Point<2>| geometry::dot(a, p) + b;
        for mesh in [
            Arc::new(build_rectangular_mesh(4, 3, Rect::UNIT).unwrap()),
            Arc::new(build_delaunay_mesh(6, 0.15, 1, Rect::UNIT).unwrap()),
        ] {
            let u = interpolate(affine, &mesh).unwrap();
            let g = BoundaryData::from_fn(Arc::clone(&mesh), affine).unwrap();
            let coeffs = EdgeCoefficients::build(&mesh, CoefficientVariant::Center);
            let grad = discrete_gradient(&u, &g, &coeffs).unwrap();
            for v in grad.vectors() {
                assert!(geometry::dist(*v, a) < 1e-12);
            }
        }
    }

    #[test]
    fn gradient_zero_field_and_linearity() {
        let mesh = Arc::new(build_delaunay_mesh(5, 0.1, 2, Rect::UNIT).unwrap());
        let g0 = BoundaryData::zero(Arc::clone(&mesh));
        let coeffs = EdgeCoefficients::build(&mesh, CoefficientVariant::Center);
        let z = DiscreteField::zero(Arc::clone(&mesh));
        let gz = discrete_gradient(&z, &g0, &coeffs).unwrap();
        assert!(gz.vectors().iter().all(|v| v == &[0.0, 0.0]));

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = random_field(&mesh, &mut rng);
        let v = random_field(&mesh, &mut rng);
        let (a, b) = (1.7, -0.3);
        let combo = DiscreteField::new(
            Arc::clone(&mesh),
            u.values().iter().zip(v.values()).map(|(x, y)| a * x + b * y).collect(),
        )
        .unwrap();
        let gu = discrete_gradient(&u, &g0, &coeffs).unwrap();
        let gv = discrete_gradient(&v, &g0, &coeffs).unwrap();
        let gc = discrete_gradient(&combo, &g0, &coeffs).unwrap();
        for k in 0..mesh.cell_count() {
            let lin = geometry::add(
                geometry::scale(a, gu.vectors()[k]),
                geometry::scale(b, gv.vectors()[k]),
            );
            assert!(geometry::dist(gc.vectors()[k], lin) < 1e-12);
        }
    }

    #[test]
    fn coefficient_bound_holds() {
        // |A_{K,sigma}| <= m(sigma)/theta_D on every edge, both variants.
        for variant in [CoefficientVariant::Center, CoefficientVariant::Barycenter] {
            let mesh = Arc::new(build_delaunay_mesh(7, 0.2, 3, Rect::UNIT).unwrap());
            let coeffs = EdgeCoefficients::build(&mesh, variant);
            let bound_scale = 1.0 / mesh.theta();
            for (e, edge) in mesh.edges().iter().enumerate() {
                let a = coeffs.from_cell(e, edge.inner_cell);
                assert!(geometry::norm(a) <= edge.measure * bound_scale * (1.0 + 1e-12));
                if let Some(l) = edge.outer_cell {
                    let a = coeffs.from_cell(e, l);
                    assert!(geometry::norm(a) <= edge.measure * bound_scale * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn poincare_and_gradient_bound_on_random_fields() {
        for mesh in [
            Arc::new(build_rectangular_mesh(6, 6, Rect::UNIT).unwrap()),
            Arc::new(build_delaunay_mesh(6, 0.15, 0, Rect::UNIT).unwrap()),
        ] {
            let g0 = BoundaryData::zero(Arc::clone(&mesh));
            let coeffs = EdgeCoefficients::build(&mesh, CoefficientVariant::Center);
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let c_grad = (2.0 * 2.0 / (mesh.theta() * mesh.theta())).sqrt();
            for _ in 0..50 {
                let u = random_field(&mesh, &mut rng);
                let norm_d = discrete_norm(&u, &g0).unwrap();
                assert!(u.l2_norm() <= mesh.domain_diameter() * norm_d * (1.0 + 1e-12));
                let grad = discrete_gradient(&u, &g0, &coeffs).unwrap();
                assert!(grad.l2_norm() <= c_grad * norm_d * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn bilinear_symmetry_and_coercivity() {
        let mesh = Arc::new(build_delaunay_mesh(5, 0.2, 4, Rect::UNIT).unwrap());
        let g0 = BoundaryData::zero(Arc::clone(&mesh));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let alpha = edge_alpha(
            |p: Point<2>| 1.0 + 0.5 * (3.0 * p[0]).sin().powi(2) + p[1] * p[1],
            &mesh,
            EdgeAlphaRule::DiamondMean,
        )
        .unwrap();
        let alpha_floor = alpha.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(alpha_floor >= 1.0);
        for _ in 0..20 {
            let u = random_field(&mesh, &mut rng);
            let v = random_field(&mesh, &mut rng);
            let uv = bilinear_form(&u, &g0, &v, &g0, &alpha).unwrap();
            let vu = bilinear_form(&v, &g0, &u, &g0, &alpha).unwrap();
            assert_eq!(uv, vu);
            let uu = bilinear_form(&u, &g0, &u, &g0, &alpha).unwrap();
            let nd = discrete_norm(&u, &g0).unwrap();
            assert!(uu >= 1.0 * nd * nd * (1.0 - 1e-12));
        }
    }

    #[test]
    fn l2_norms_and_errors() {
        let mesh = Arc::new(build_rectangular_mesh(4, 4, Rect::UNIT).unwrap());
        let one = DiscreteField::new(Arc::clone(&mesh), vec![1.0; 16]).unwrap();
        assert!((one.l2_norm() - 1.0).abs() < 1e-14);
        let z = DiscreteField::zero(Arc::clone(&mesh));
        assert_eq!(z.l2_norm(), 0.0);
        // Cell averages of an affine function equal its center values, so
        // the interpolant has zero average-reference error.
        let affine = |p: Point<2>| 2.0 * p[0] - p[1] + 0.3;
        let u = interpolate(affine, &mesh).unwrap();
        assert!(l2_error_vs_average(&u, affine).unwrap() < 1e-14);
        assert!(l2_error_at_centers(&u, affine).unwrap() < 1e-14);
    }

    #[test]
    fn interpolant_error_decays_at_first_order() {
        use std::f64::consts::PI;
        let f = |p: Point<2>| (PI * p[0]).sin() * (PI * p[1]).sin();
        let mut errs = Vec::new();
        for n in [8usize, 16, 32, 64] {
            let mesh = Arc::new(build_rectangular_mesh(n, n, Rect::UNIT).unwrap());
            let u = interpolate(f, &mesh).unwrap();
            errs.push(l2_error(&u, f).unwrap());
        }
        for w in errs.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!((0.9..=1.1).contains(&rate), "interpolant L2 rate {rate}");
        }
    }

    #[test]
    fn quadrature_is_order_two() {
        // Quadratics integrate exactly on rectangles and on polygon fans.
        let mesh = Arc::new(build_delaunay_mesh(4, 0.1, 5, Rect::UNIT).unwrap());
        let q = |p: Point<2>| 1.0 + 2.0 * p[0] - p[1] + 3.0 * p[0] * p[1] - p[0] * p[0];
        // Exact integral over a triangle via the same rule is trivially
        // consistent; instead check the averages sum to the exact domain
        // integral: int over [0,1]^2 = 1 + 1 - 0.5 + 0.75 - 1/3.
        let exact = 1.0 + 1.0 - 0.5 + 0.75 - 1.0 / 3.0;
        let mut acc = 0.0;
        for k in 0..mesh.cell_count() {
            acc += cell_average(&mesh, k, q) * mesh.cell(k).measure;
        }
        assert!((acc - exact).abs() < 1e-12);

        let rect = Arc::new(build_rectangular_mesh(3, 2, Rect::UNIT).unwrap());
        let cubic = |p: Point<2>| p[0] * p[0] * p[0] + p[1] * p[1] * p[1];
        let mut acc = 0.0;
        for k in 0..rect.cell_count() {
            acc += cell_average(&rect, k, cubic) * rect.cell(k).measure;
        }
        assert!((acc - 0.5).abs() < 1e-13);
    }

    #[test]
    fn mismatched_meshes_are_rejected() {
        let m1 = two_by_one();
        let m2 = two_by_one();
        let u = DiscreteField::zero(Arc::clone(&m1));
        let v = DiscreteField::zero(Arc::clone(&m2));
        let g1 = BoundaryData::zero(Arc::clone(&m1));
        let g2 = BoundaryData::zero(Arc::clone(&m2));
        let ones = vec![1.0; m1.edge_count()];
        assert!(matches!(
            bilinear_form(&u, &g1, &v, &g2, &ones),
            Err(DiscreteError::MeshMismatch)
        ));
        let coeffs = EdgeCoefficients::build(&m2, CoefficientVariant::Center);
        assert!(matches!(
            discrete_gradient(&u, &g1, &coeffs),
            Err(DiscreteError::MeshMismatch)
        ));
    }

    /// One-dimensional instantiation of the generic machinery.
    #[test]
    fn one_dimensional_gradient() {
        let mesh = Arc::new(crate::mesh::test_line_mesh_1d());
        let coeffs = EdgeCoefficients::build(&mesh, CoefficientVariant::Center);
        // Affine u(x) = x with matching boundary data is reconstructed
        // exactly.
        let u = interpolate(|p: Point<1>| p[0], &mesh).unwrap();
        let g = BoundaryData::from_fn(Arc::clone(&mesh), |p| p[0]).unwrap();
        let grad = discrete_gradient(&u, &g, &coeffs).unwrap();
        for v in grad.vectors() {
            assert!((v[0] - 1.0).abs() < 1e-14);
        }
        // Symmetric two-cell step with zero boundary data.
        let g0 = BoundaryData::zero(Arc::clone(&mesh));
        let step = DiscreteField::new(Arc::clone(&mesh), vec![0.0, 1.0]).unwrap();
        let gs = discrete_gradient(&step, &g0, &coeffs).unwrap();
        assert!((gs.vectors()[0][0] - 1.0).abs() < 1e-14);
        assert!((gs.vectors()[1][0] + 1.0).abs() < 1e-14);
    }
}
