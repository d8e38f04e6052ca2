//! Verification harness: manufactured solutions, convergence studies, the
//! alpha sweep, and property suites that check the discrete machinery
//! against its analytical guarantees.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::assembly::{
    assemble, conservation_residual, reconstruct_fluxes, AlphaRule, CellQuadrature, Problem,
};
use crate::discrete::{
    bilinear_form, discrete_gradient, discrete_norm, edge_alpha, BoundaryData,
    CoefficientVariant, DiscreteField, EdgeAlphaRule, EdgeCoefficients,
};
use crate::error::VerifyError;
use crate::geometry::{self, Point};
use crate::linsolve::{conjugate_gradient, Preconditioner};
use crate::mesh::{build_delaunay_mesh, build_rectangular_mesh, geometric_identity_residual, Mesh, Rect};

/// A manufactured problem whose exact solution is known. Construction
/// verifies `-div(Lambda grad u) = f` by central finite differences at
/// interior sample points.
pub struct TestCase {
    pub name: String,
    pub problem: Problem,
    /// Interval of alpha values for which the gradient part stays positive
    /// semidefinite: (0, min eigenvalue of Lambda].
    pub alpha_max: f64,
}

const RESIDUAL_GATE_SAMPLES: usize = 20;

impl TestCase {
    pub fn new(name: impl Into<String>, problem: Problem, alpha_max: f64) -> Result<Self, VerifyError> {
        let case = TestCase { name: name.into(), problem, alpha_max };
        case.check_residual()?;
        Ok(case)
    }

    /// Central-difference check of the PDE residual at seeded interior
    /// points: requires exact_u, exact_gradient and the source to agree.
    fn check_residual(&self) -> Result<(), VerifyError> {
        let grad = self
            .problem
            .exact_gradient
            .as_ref()
            .expect("test case carries an exact gradient")
            .clone();
        let lambda = |p: Point<2>| self.problem.lambda_at(p);
        let flux = move |p: Point<2>| geometry::mat_vec(&lambda(p), grad(p));
        let mut rng = ChaCha8Rng::seed_from_u64(0xF00D);
        let h = 1e-5;
        for _ in 0..RESIDUAL_GATE_SAMPLES {
            let p = [0.1 + 0.8 * rng.random::<f64>(), 0.1 + 0.8 * rng.random::<f64>()];
            let div = (flux([p[0] + h, p[1]])[0] - flux([p[0] - h, p[1]])[0]) / (2.0 * h)
                + (flux([p[0], p[1] + h])[1] - flux([p[0], p[1] - h])[1]) / (2.0 * h);
            let f = self.problem.source_at(p);
            let residual = -div - f;
            if residual.abs() > 1e-6 * (1.0 + f.abs()) {
                return Err(VerifyError::ResidualGate { point: p, residual });
            }
        }
        Ok(())
    }
}

/// Homogeneous anisotropic problem: constant full tensor, sine product
/// solution vanishing on the boundary of the unit square.
pub fn case1() -> Result<TestCase, VerifyError> {
    use std::f64::consts::PI;
    let lambda = [[1.5, 0.5], [0.5, 1.5]];
    let exact = |p: Point<2>| (PI * p[0]).sin() * (PI * p[1]).sin();
    let exact_grad = move |p: Point<2>| {
        [
            PI * (PI * p[0]).cos() * (PI * p[1]).sin(),
            PI * (PI * p[0]).sin() * (PI * p[1]).cos(),
        ]
    };
    let source = move |p: Point<2>| {
        PI * PI
            * (3.0 * (PI * p[0]).sin() * (PI * p[1]).sin()
                - (PI * p[0]).cos() * (PI * p[1]).cos())
    };
    let problem = Problem::new("case1", move |_| lambda, source, |_| 0.0)
        .with_alpha(AlphaRule::Constant(1.0))
        .with_exact(exact, exact_grad);
    TestCase::new("case1", problem, 1.0)
}

/// Rotating permeability field: the tensor is constant in polar coordinates
/// about c = (0.5, 1.1) and the exact solution is the log-distance to c, so
/// the source vanishes while the Dirichlet data does not.
pub fn case2() -> Result<TestCase, VerifyError> {
    let center = [0.5, 1.1];
    let exact = move |p: Point<2>| {
        let d = geometry::sub(p, center);
        0.5 * geometry::dot(d, d).ln()
    };
    let exact_grad = move |p: Point<2>| {
        let d = geometry::sub(p, center);
        geometry::scale(1.0 / geometry::dot(d, d), d)
    };
    let lambda = move |p: Point<2>| {
        let d = geometry::sub(p, center);
        let r = geometry::norm(d);
        let er = geometry::scale(1.0 / r, d);
        let et = [-er[1], er[0]];
        // R [[10, .2], [.2, 10]] R^T = 10 I + 0.2 (er et^T + et er^T).
        let mut m = [[0.0f64; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = 10.0 * if i == j { 1.0 } else { 0.0 }
                    + 0.2 * (er[i] * et[j] + et[i] * er[j]);
            }
        }
        m
    };
    let problem = Problem::new("case2", lambda, |_| 0.0, exact)
        .with_alpha(AlphaRule::Constant(9.8))
        .with_exact(exact, exact_grad);
    TestCase::new("case2", problem, 9.8)
}

/// Isotropic control case: Laplace operator with the sine product solution,
/// for which the gradient part of the scheme vanishes identically.
pub fn isotropic_case() -> Result<TestCase, VerifyError> {
    use std::f64::consts::PI;
    let exact = |p: Point<2>| (PI * p[0]).sin() * (PI * p[1]).sin();
    let exact_grad = move |p: Point<2>| {
        [
            PI * (PI * p[0]).cos() * (PI * p[1]).sin(),
            PI * (PI * p[0]).sin() * (PI * p[1]).cos(),
        ]
    };
    let source = move |p: Point<2>| 2.0 * PI * PI * (PI * p[0]).sin() * (PI * p[1]).sin();
    let problem = Problem::new("isotropic", |_| geometry::identity(), source, |_| 0.0)
        .with_alpha(AlphaRule::Constant(1.0))
        .with_exact(exact, exact_grad);
    TestCase::new("isotropic", problem, 1.0)
}

/// Mesh family used by convergence studies.
#[derive(Clone, Copy, Debug)]
pub enum MeshFamily {
    /// Uniform n x n squares; the level is n.
    Rectangular,
    /// Smoothed Delaunay triangulations; the level is the resolution.
    Delaunay { jitter: f64, seed: u64 },
}

impl MeshFamily {
    pub fn build(&self, level: usize) -> Result<Mesh<2>, crate::error::MeshError> {
        match self {
            MeshFamily::Rectangular => build_rectangular_mesh(level, level, Rect::UNIT),
            MeshFamily::Delaunay { jitter, seed } => {
                build_delaunay_mesh(level, *jitter, *seed, Rect::UNIT)
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        // Two orders below the smallest discretization error in the studied
        // range, so solver error never pollutes measured orders.
        SolverConfig { tolerance: 1e-10, max_iterations: 0 }
    }
}

impl SolverConfig {
    fn iterations_for(&self, cells: usize) -> usize {
        if self.max_iterations > 0 {
            self.max_iterations
        } else {
            (10 * cells).max(1000)
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConvergenceRow {
    pub level: usize,
    pub h: f64,
    pub cells: usize,
    pub theta: f64,
    pub err_u: f64,
    pub err_grad: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub case: String,
    pub rows: Vec<ConvergenceRow>,
    pub eoc_u: f64,
    pub eoc_grad: f64,
}

/// Solve one case on one mesh; returns the solution and solve stats.
pub fn solve_case(
    case: &TestCase,
    mesh: &Arc<Mesh<2>>,
    variant: CoefficientVariant,
    alpha_rule: EdgeAlphaRule,
    alpha_override: Option<f64>,
    solver: SolverConfig,
) -> Result<(DiscreteField<2>, crate::assembly::AssembledSystem, EdgeCoefficients<2>, crate::linsolve::SolveStats), VerifyError> {
    let problem = match alpha_override {
        Some(a) => case.problem.clone().with_alpha(AlphaRule::Constant(a)),
        None => case.problem.clone(),
    };
    let coeffs = EdgeCoefficients::build(mesh, variant);
    let system = assemble(mesh, &problem, &coeffs, alpha_rule, CellQuadrature::Centroid)?;
    let (values, stats) = conjugate_gradient(
        &system.matrix,
        &system.rhs,
        solver.tolerance,
        solver.iterations_for(mesh.cell_count()),
        Preconditioner::Jacobi,
    )?;
    let u = DiscreteField::new(Arc::clone(mesh), values).map_err(VerifyError::Discrete)?;
    Ok((u, system, coeffs, stats))
}

/// Measure errors of a discrete solution against the exact solution.
///
/// The solution error compares cell values with the exact solution at the
/// cell points (the quantity the scheme controls); the gradient error is
/// the L2(Omega)^d distance between the piecewise-constant reconstruction
/// and the exact gradient field.
pub fn measure_errors(
    case: &TestCase,
    u: &DiscreteField<2>,
    system: &crate::assembly::AssembledSystem,
    coeffs: &EdgeCoefficients<2>,
) -> Result<(f64, f64), VerifyError> {
    let exact = case.problem.exact.as_ref().expect("case carries exact solution").clone();
    let exact_grad = case
        .problem
        .exact_gradient
        .as_ref()
        .expect("case carries exact gradient")
        .clone();
    let err_u =
        crate::discrete::l2_error_at_centers(u, |p| exact(p)).map_err(VerifyError::Discrete)?;
    let grad = discrete_gradient(u, &system.boundary, coeffs).map_err(VerifyError::Discrete)?;
    let err_grad = crate::discrete::l2_error_gradient(&grad, |p| exact_grad(p))
        .map_err(VerifyError::Discrete)?;
    Ok((err_u, err_grad))
}

/// Run a refinement study and fit the convergence orders.
pub fn run_convergence(
    case: &TestCase,
    family: MeshFamily,
    levels: &[usize],
    alpha_override: Option<f64>,
    variant: CoefficientVariant,
    solver: SolverConfig,
) -> Result<ConvergenceReport, VerifyError> {
    let mut levels = levels.to_vec();
    levels.sort_unstable();
    let mut rows = Vec::with_capacity(levels.len());
    for &level in &levels {
        let run = || -> Result<ConvergenceRow, VerifyError> {
            let mesh = Arc::new(family.build(level)?);
            let (u, system, coeffs, stats) = solve_case(
                case,
                &mesh,
                variant,
                EdgeAlphaRule::DiamondMean,
                alpha_override,
                solver,
            )?;
            let (err_u, err_grad) = measure_errors(case, &u, &system, &coeffs)?;
            Ok(ConvergenceRow {
                level,
                h: mesh.h(),
                cells: mesh.cell_count(),
                theta: mesh.theta(),
                err_u,
                err_grad,
                iterations: stats.iterations,
            })
        };
        rows.push(run().map_err(|e| VerifyError::Level { level, source: Box::new(e) })?);
    }
    let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let eoc_u = eoc_regression(&hs, &rows.iter().map(|r| r.err_u).collect::<Vec<_>>())?.slope;
    let eoc_grad =
        eoc_regression(&hs, &rows.iter().map(|r| r.err_grad).collect::<Vec<_>>())?.slope;
    Ok(ConvergenceReport { case: case.name.clone(), rows, eoc_u, eoc_grad })
}

/// Like [`run_convergence`], with the independent levels distributed over
/// up to `workers` threads. Rows are assembled in level order, so the
/// report is identical to the sequential one.
pub fn run_convergence_parallel(
    case: &TestCase,
    family: MeshFamily,
    levels: &[usize],
    alpha_override: Option<f64>,
    variant: CoefficientVariant,
    solver: SolverConfig,
    workers: usize,
) -> Result<ConvergenceReport, VerifyError> {
    let mut levels = levels.to_vec();
    levels.sort_unstable();
    let workers = workers.clamp(1, levels.len().max(1));
    if workers == 1 {
        return run_convergence(case, family, &levels, alpha_override, variant, solver);
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<Option<Result<ConvergenceRow, VerifyError>>>> =
        levels.iter().map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= levels.len() {
                    break;
                }
                let level = levels[i];
                let outcome = (|| -> Result<ConvergenceRow, VerifyError> {
                    let mesh = Arc::new(family.build(level)?);
                    let (u, system, coeffs, stats) = solve_case(
                        case,
                        &mesh,
                        variant,
                        EdgeAlphaRule::DiamondMean,
                        alpha_override,
                        solver,
                    )?;
                    let (err_u, err_grad) = measure_errors(case, &u, &system, &coeffs)?;
                    Ok(ConvergenceRow {
                        level,
                        h: mesh.h(),
                        cells: mesh.cell_count(),
                        theta: mesh.theta(),
                        err_u,
                        err_grad,
                        iterations: stats.iterations,
                    })
                })();
                *slots[i].lock().unwrap() =
                    Some(outcome.map_err(|e| VerifyError::Level { level, source: Box::new(e) }));
            });
        }
    });
    let mut rows = Vec::with_capacity(levels.len());
    for slot in slots {
        rows.push(slot.into_inner().unwrap().expect("worker filled every slot")?);
    }
    let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let eoc_u = eoc_regression(&hs, &rows.iter().map(|r| r.err_u).collect::<Vec<_>>())?.slope;
    let eoc_grad =
        eoc_regression(&hs, &rows.iter().map(|r| r.err_grad).collect::<Vec<_>>())?.slope;
    Ok(ConvergenceReport { case: case.name.clone(), rows, eoc_u, eoc_grad })
}

#[derive(Clone, Copy, Debug)]
pub struct EocFit {
    pub slope: f64,
    pub points_used: usize,
    pub points_excluded: usize,
}

/// Least-squares slope of log(err) against log(h). Non-positive errors are
/// excluded (the discrete solution hit the exact one).
pub fn eoc_regression(h: &[f64], err: &[f64]) -> Result<EocFit, VerifyError> {
    assert_eq!(h.len(), err.len());
    if h.len() < 3 {
        return Err(VerifyError::TooFewPoints { needed: 3, got: h.len() });
    }
    let pairs: Vec<(f64, f64)> = h
        .iter()
        .zip(err)
        .filter(|(&hi, &ei)| hi > 0.0 && ei > 0.0)
        .map(|(&hi, &ei)| (hi.ln(), ei.ln()))
        .collect();
    let excluded = h.len() - pairs.len();
    if pairs.len() < 2 {
        return Err(VerifyError::TooFewPoints { needed: 2, got: pairs.len() });
    }
    let n = pairs.len() as f64;
    let sx: f64 = pairs.iter().map(|p| p.0).sum();
    let sy: f64 = pairs.iter().map(|p| p.1).sum();
    let sxx: f64 = pairs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pairs.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    Ok(EocFit { slope, points_used: pairs.len(), points_excluded: excluded })
}

#[derive(Clone, Debug)]
pub struct AlphaSweepRow {
    pub alpha: f64,
    pub err_u: f64,
    pub err_grad: f64,
    pub converged: bool,
}

/// Solve the case once per alpha value, recording errors; alphas that break
/// solvability are recorded as failed rows.
pub fn alpha_sweep(
    case: &TestCase,
    mesh: &Arc<Mesh<2>>,
    alphas: &[f64],
    solver: SolverConfig,
) -> Vec<AlphaSweepRow> {
    let mut rows = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let attempt = solve_case(
            case,
            mesh,
            CoefficientVariant::Center,
            EdgeAlphaRule::DiamondMean,
            Some(alpha),
            solver,
        )
        .and_then(|(u, system, coeffs, _)| measure_errors(case, &u, &system, &coeffs));
        match attempt {
            Ok((err_u, err_grad)) => {
                rows.push(AlphaSweepRow { alpha, err_u, err_grad, converged: true })
            }
            Err(_) => rows.push(AlphaSweepRow {
                alpha,
                err_u: f64::NAN,
                err_grad: f64::NAN,
                converged: false,
            }),
        }
    }
    rows
}

/// Index of the converged row with the smallest solution error.
pub fn argmin_alpha(rows: &[AlphaSweepRow]) -> Option<usize> {
    rows.iter()
        .enumerate()
        .filter(|(_, r)| r.converged && r.err_u.is_finite())
        .min_by(|a, b| a.1.err_u.partial_cmp(&b.1.err_u).unwrap())
        .map(|(i, _)| i)
}

#[derive(Clone, Debug)]
pub struct PropertyResult {
    pub name: &'static str,
    pub passed: bool,
    pub worst: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug)]
pub struct PropertyReport {
    pub entries: Vec<PropertyResult>,
}

impl PropertyReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PropertyConfig {
    pub seed: u64,
    pub field_samples: usize,
}

impl Default for PropertyConfig {
    fn default() -> Self {
        PropertyConfig { seed: 0, field_samples: 50 }
    }
}

fn random_field(mesh: &Arc<Mesh<2>>, rng: &mut ChaCha8Rng) -> DiscreteField<2> {
    let values = (0..mesh.cell_count()).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    DiscreteField::new(Arc::clone(mesh), values).expect("finite random values")
}

/// Run the geometric and functional invariants on one mesh with seeded
/// random fields. Report-only: failures are entries, not errors.
pub fn property_suite(mesh: &Arc<Mesh<2>>, config: PropertyConfig) -> PropertyReport {
    let mut entries = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let push = |name: &'static str, worst: f64, tolerance: f64, entries: &mut Vec<PropertyResult>| {
        entries.push(PropertyResult { name, passed: worst <= tolerance, worst, tolerance });
    };

    // Geometric identity with x0 = x_K, plus random anchors and directions.
    let mut worst_geom_id: f64 = 0.0;
    for (k, cell) in mesh.cells().iter().enumerate() {
        worst_geom_id = worst_geom_id.max(geometric_identity_residual(mesh, k, cell.center) / cell.measure);
    }
    for _ in 0..50 {
        let k = rng.random_range(0..mesh.cell_count());
        let x0 = [rng.random::<f64>() * 2.0 - 0.5, rng.random::<f64>() * 2.0 - 0.5];
        let v = [rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0];
        // Vector form: sum m (x_sigma - x0) (n.v) = m(K) v.
        let cell = mesh.cell(k);
        let mut acc = [0.0f64; 2];
        for &e in &cell.edge_ids {
            let edge = mesh.edge(e);
            let n = edge.normal_from(k);
            acc = geometry::axpy(
                edge.measure * geometry::dot(n, v),
                geometry::sub(edge.barycenter, x0),
                acc,
            );
        }
        let gap = geometry::dist(geometry::scale(1.0 / cell.measure, acc), v)
            / geometry::norm(v).max(1e-30);
        worst_geom_id = worst_geom_id.max(gap);
    }
    push("geometric identity ", worst_geom_id, 1e-10, &mut entries);

    // sum m(sigma) d_{K,sigma} = d m(K).
    let mut worst: f64 = 0.0;
    for (k, cell) in mesh.cells().iter().enumerate() {
        let sum: f64 = cell
            .edge_ids
            .iter()
            .map(|&e| mesh.edge(e).measure * mesh.edge(e).distance_from(k))
            .sum();
        worst = worst.max((sum - 2.0 * cell.measure).abs() / cell.measure);
    }
    push("edge-cone volumes sum to d m(K)", worst, 1e-10, &mut entries);

    // Closed cells: sum m(sigma) n = 0.
    let mut worst: f64 = 0.0;
    for (k, cell) in mesh.cells().iter().enumerate() {
        let mut acc = [0.0f64; 2];
        let mut scale = 0.0;
        for &e in &cell.edge_ids {
            let edge = mesh.edge(e);
            acc = geometry::axpy(edge.measure, edge.normal_from(k), acc);
            scale += edge.measure;
        }
        worst = worst.max(geometry::norm(acc) / scale);
    }
    push("outward normals close up", worst, 1e-10, &mut entries);

    // Interior orthogonality: n = (x_L - x_K)/d_{K|L}.
    let mut worst: f64 = 0.0;
    for edge in mesh.edges().iter().filter(|e| !e.is_boundary()) {
        let k = edge.inner_cell;
        let l = edge.outer_cell.unwrap();
        let dir = geometry::scale(
            1.0 / edge.center_distance(),
            geometry::sub(mesh.cell(l).center, mesh.cell(k).center),
        );
        worst = worst.max(geometry::dist(dir, edge.normal));
    }
    push("interior normals align with center segments", worst, 1e-10, &mut entries);

    // Poincare and gradient bound on random fields.
    let g0 = BoundaryData::zero(Arc::clone(mesh));
    let coeffs = EdgeCoefficients::build(mesh, CoefficientVariant::Center);
    let c_grad = (2.0 * 2.0 / (mesh.theta() * mesh.theta())).sqrt();
    let mut worst_poincare: f64 = 0.0;
    let mut worst_bound: f64 = 0.0;
    let mut worst_linear: f64 = 0.0;
    for _ in 0..config.field_samples {
        let u = random_field(mesh, &mut rng);
        let nd = discrete_norm(&u, &g0).expect("same mesh");
        worst_poincare = worst_poincare.max(u.l2_norm() / (mesh.domain_diameter() * nd));
        let grad = discrete_gradient(&u, &g0, &coeffs).expect("same mesh");
        worst_bound = worst_bound.max(grad.l2_norm() / (c_grad * nd));

        let v = random_field(mesh, &mut rng);
        let (a, b) = (rng.random::<f64>() * 4.0 - 2.0, rng.random::<f64>() * 4.0 - 2.0);
        let combo = DiscreteField::new(
            Arc::clone(mesh),
            u.values().iter().zip(v.values()).map(|(x, y)| a * x + b * y).collect(),
        )
        .expect("finite");
        let gv = discrete_gradient(&v, &g0, &coeffs).expect("same mesh");
        let gc = discrete_gradient(&combo, &g0, &coeffs).expect("same mesh");
        for k in 0..mesh.cell_count() {
            let lin = geometry::add(
                geometry::scale(a, grad.vectors()[k]),
                geometry::scale(b, gv.vectors()[k]),
            );
            worst_linear = worst_linear
                .max(geometry::dist(gc.vectors()[k], lin) / (1.0 + geometry::norm(lin)));
        }
    }
    push("discrete Poincare inequality", worst_poincare, 1.0 + 1e-12, &mut entries);
    push("gradient bound sqrt(2d)/theta", worst_bound, 1.0 + 1e-12, &mut entries);
    push("gradient linearity", worst_linear, 1e-12, &mut entries);

    // Bilinear symmetry (bit-exact) and coercivity with a varying alpha.
    let alpha = edge_alpha(
        |p: Point<2>| 1.0 + 0.5 * (4.0 * p[0] + p[1]).sin().powi(2),
        mesh,
        EdgeAlphaRule::DiamondMean,
    )
    .expect("positive alpha");
    let mut sym_ok = true;
    let mut worst_coercivity: f64 = 0.0;
    for _ in 0..config.field_samples.min(20) {
        let u = random_field(mesh, &mut rng);
        let v = random_field(mesh, &mut rng);
        let uv = bilinear_form(&u, &g0, &v, &g0, &alpha).expect("same mesh");
        let vu = bilinear_form(&v, &g0, &u, &g0, &alpha).expect("same mesh");
        sym_ok &= uv == vu;
        let uu = bilinear_form(&u, &g0, &u, &g0, &alpha).expect("same mesh");
        let nd = discrete_norm(&u, &g0).expect("same mesh");
        // alpha >= 1 everywhere, so [u,u]_alpha >= ||u||_D^2.
        worst_coercivity = worst_coercivity.max(nd * nd / uu);
    }
    entries.push(PropertyResult {
        name: "bilinear form symmetry (bit-exact)",
        passed: sym_ok,
        worst: if sym_ok { 0.0 } else { 1.0 },
        tolerance: 0.0,
    });
    push("coercivity [u,u]_alpha >= alpha0 ||u||^2", worst_coercivity, 1.0 + 1e-12, &mut entries);

    // Coefficient bound |A| <= m(sigma)/theta.
    let mut worst: f64 = 0.0;
    for (e, edge) in mesh.edges().iter().enumerate() {
        let bound = edge.measure / mesh.theta();
        worst = worst.max(geometry::norm(coeffs.from_cell(e, edge.inner_cell)) / bound);
        if let Some(l) = edge.outer_cell {
            worst = worst.max(geometry::norm(coeffs.from_cell(e, l)) / bound);
        }
    }
    push("coefficient bound |A| <= m/theta", worst, 1.0 + 1e-12, &mut entries);

    // Assembly invariants on a full-tensor problem over this mesh.
    let problem = Problem::new("suite", |_| [[1.5, 0.5], [0.5, 1.5]], |_| 1.0, |_| 0.0)
        .with_alpha(AlphaRule::Constant(1.0));
    match assemble(mesh, &problem, &coeffs, EdgeAlphaRule::DiamondMean, CellQuadrature::Centroid) {
        Err(_) => {
            entries.push(PropertyResult {
                name: "assembly on this mesh",
                passed: false,
                worst: 1.0,
                tolerance: 0.0,
            });
        }
        Ok(system) => {
            push("system matrix symmetry", system.matrix.max_asymmetry(), 1e-12, &mut entries);

            let n = mesh.cell_count();
            let mut y = vec![0.0; n];
            let mut min_quad = f64::INFINITY;
            for _ in 0..100 {
                let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
                system.matrix.mul_vec(&x, &mut y);
                min_quad = min_quad.min(x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>());
            }
            entries.push(PropertyResult {
                name: "positive definiteness (random quadratic forms)",
                passed: min_quad > 0.0,
                worst: -min_quad.min(0.0),
                tolerance: 0.0,
            });

            // Stencil: nothing beyond neighbors of neighbors.
            let mut stencil_ok = true;
            for k in 0..n {
                let mut allowed: std::collections::BTreeSet<usize> = [k].into();
                for (l, _) in mesh.neighbors(k) {
                    allowed.insert(l);
                    for (m2, _) in mesh.neighbors(l) {
                        allowed.insert(m2);
                    }
                }
                stencil_ok &= system.matrix.row(k).all(|(j, _)| allowed.contains(&j));
            }
            entries.push(PropertyResult {
                name: "stencil within two-hop adjacency",
                passed: stencil_ok,
                worst: if stencil_ok { 0.0 } else { 1.0 },
                tolerance: 0.0,
            });

            // Conservative fluxes of the solved system.
            let tol = 1e-10;
            match conjugate_gradient(&system.matrix, &system.rhs, tol, 10 * n + 1000, Preconditioner::Jacobi)
            {
                Err(_) => entries.push(PropertyResult {
                    name: "solver convergence",
                    passed: false,
                    worst: 1.0,
                    tolerance: 0.0,
                }),
                Ok((values, _)) => {
                    let u = DiscreteField::new(Arc::clone(mesh), values).expect("finite");
                    let (flux, _) =
                        reconstruct_fluxes(&u, &system, &coeffs).expect("same mesh");
                    let b_norm = system.rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let residual = conservation_residual(mesh, &flux, &system.source_integrals);
                    push("discrete conservation (flux balance)", residual, 10.0 * tol * b_norm.max(1.0), &mut entries);
                    let mut antisym_ok = true;
                    for (e, edge) in mesh.edges().iter().enumerate() {
                        if let Some(l) = edge.outer_cell {
                            antisym_ok &= flux.from_cell(mesh, e, edge.inner_cell)
                                == -flux.from_cell(mesh, e, l);
                        }
                    }
                    entries.push(PropertyResult {
                        name: "flux antisymmetry (exact)",
                        passed: antisym_ok,
                        worst: if antisym_ok { 0.0 } else { 1.0 },
                        tolerance: 0.0,
                    });
                }
            }
        }
    }

    PropertyReport { entries }
}
