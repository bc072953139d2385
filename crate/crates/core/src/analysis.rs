//! Error norms, experimental orders of convergence and the refinement study.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use crate::assembly::{assemble_eliminated, assemble_mixed, solve, BilinearFormConfig, FormKind, PenaltyScaling, SparsityStats};
use crate::error::{Error, Result};
use crate::femspace::{DgSpace, Gradient, QuadContext};
use crate::linalg::{PreconditionerKind, SolverOptions};
use crate::mesh::{Mesh, Point};
use crate::problems::BenchmarkProblem;

/// Which faces carry jump terms in the broken norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JumpFaces {
    /// Interior faces only.
    #[default]
    Interior,
    /// Interior and boundary faces.
    All,
}

/// Rules of degree `2k + 4` for error integration.
pub fn error_context(space: &DgSpace) -> QuadContext {
    let d = 2 * space.degree() + 4;
    space.quad_context(d, d)
}

fn local_value(vals: &[f64], c: &[f64]) -> f64 {
    vals.iter().zip(c).map(|(a, b)| a * b).sum()
}

fn local_gradient(grads: &[Gradient], c: &[f64]) -> Gradient {
    grads.iter().zip(c).fold([0.0; 2], |a, (g, ci)| [a[0] + ci * g[0], a[1] + ci * g[1]])
}

/// `‖u − u_h‖_{L²}`.
pub fn l2_error(space: &DgSpace, u_h: &[f64], u: impl Fn(Point) -> f64 + Sync) -> f64 {
    let ctx = error_context(space);
    let dm = space.dofmap();
    let parts: Vec<f64> = (0..space.mesh().n_elements())
        .into_par_iter()
        .map(|k| {
            let e = space.element_eval(k, &ctx);
            let c = &u_h[dm.range(k)];
            e.weights
                .iter()
                .enumerate()
                .map(|(q, w)| w * (u(e.tables.points[q]) - local_value(e.tables.values_at(q), c)).powi(2))
                .sum()
        })
        .collect();
    parts.iter().sum::<f64>().sqrt()
}

/// `Σ_K ‖∇u − ∇u_h‖²` (pass `|_| [0, 0]` for the seminorm of `u_h` itself).
fn broken_gradient_sq(space: &DgSpace, ctx: &QuadContext, v: &[f64], grad: &(dyn Fn(Point) -> Gradient + Sync)) -> f64 {
    let dm = space.dofmap();
    let parts: Vec<f64> = (0..space.mesh().n_elements())
        .into_par_iter()
        .map(|k| {
            let e = space.element_eval(k, ctx);
            let c = &v[dm.range(k)];
            e.weights
                .iter()
                .enumerate()
                .map(|(q, w)| {
                    let g = local_gradient(e.tables.gradients_at(q), c);
                    let ge = grad(e.tables.points[q]);
                    w * ((ge[0] - g[0]).powi(2) + (ge[1] - g[1]).powi(2))
                })
                .sum()
        })
        .collect();
    parts.iter().sum()
}

/// Face sums `Σ h⁻¹‖⟦w⟧‖²`, `Σ h⁻¹‖⟦∇w⟧‖²`, `Σ h⁻³‖⟦w⟧‖²` with `w = u − v`
/// (`u` continuous, so only its boundary traces enter).
fn jump_terms(
    space: &DgSpace,
    ctx: &QuadContext,
    v: &[f64],
    u: &(dyn Fn(Point) -> f64 + Sync),
    faces: JumpFaces,
) -> (f64, f64, f64) {
    let mesh = space.mesh();
    let dm = space.dofmap();
    let parts: Vec<(f64, f64, f64)> = (0..mesh.faces().len())
        .into_par_iter()
        .map(|f| {
            let face = &mesh.faces()[f];
            if !face.is_interior() && faces == JumpFaces::Interior {
                return (0.0, 0.0, 0.0);
            }
            let k = face.elements.0;
            let tk = space.face_trace(f, k, ctx);
            let ck = &v[dm.range(k)];
            let other = face.elements.1.map(|o| (space.face_trace(f, o, ctx), &v[dm.range(o)]));
            let (mut val, mut grad) = (0.0, 0.0);
            for (q, w) in tk.weights.iter().enumerate() {
                let vk = local_value(tk.values_at(q), ck);
                match &other {
                    Some((to, co)) => {
                        val += w * (vk - local_value(to.values_at(q), co)).powi(2);
                        let (gk, go) = (local_gradient(tk.gradients_at(q), ck), local_gradient(to.gradients_at(q), co));
                        grad += w * ((gk[0] - go[0]).powi(2) + (gk[1] - go[1]).powi(2));
                    }
                    None => val += w * (u(tk.points[q]) - vk).powi(2),
                }
            }
            let h = face.length;
            (val / h, grad / h, val / h.powi(3))
        })
        .collect();
    parts.iter().fold((0.0, 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2))
}

/// `|||u − u_h|||₁ = (‖∇u − ∇_h u_h‖² + Σ h⁻¹‖⟦u − u_h⟧‖²)^{1/2}`.
pub fn energy_error(
    space: &DgSpace,
    u_h: &[f64],
    u: impl Fn(Point) -> f64 + Sync,
    grad: impl Fn(Point) -> Gradient + Sync,
    faces: JumpFaces,
) -> f64 {
    let ctx = error_context(space);
    let (j, _, _) = jump_terms(space, &ctx, u_h, &u, faces);
    (broken_gradient_sq(space, &ctx, u_h, &grad) + j).sqrt()
}

/// `|||v|||₁`.
pub fn energy_norm_1(space: &DgSpace, v: &[f64], faces: JumpFaces) -> f64 {
    energy_error(space, v, |_| 0.0, |_| [0.0; 2], faces)
}

/// `|||v|||₂ = (‖D²_h v‖² + Σ h⁻¹‖⟦∇v⟧‖² + Σ h⁻³‖⟦v⟧‖²)^{1/2}`.
pub fn energy_norm_2(space: &DgSpace, v: &[f64], faces: JumpFaces) -> f64 {
    let ctx = error_context(space);
    let dm = space.dofmap();
    let hess: Vec<f64> = (0..space.mesh().n_elements())
        .into_par_iter()
        .map(|k| {
            let e = space.element_eval(k, &ctx);
            let c = &v[dm.range(k)];
            let mut s = 0.0;
            for (q, w) in e.weights.iter().enumerate() {
                let mut h = [[0.0; 2]; 2];
                for (hj, cj) in e.tables.hessians_at(q).iter().zip(c) {
                    for m in 0..2 {
                        for n in 0..2 {
                            h[m][n] += cj * hj[m][n];
                        }
                    }
                }
                s += w * h.iter().flatten().map(|x| x * x).sum::<f64>();
            }
            s
        })
        .collect();
    let (_, g, j3) = jump_terms(space, &ctx, v, &|_| 0.0, faces);
    (hess.iter().sum::<f64>() + g + j3).sqrt()
}

/// `log₂(e_coarse / e_fine)`.
pub fn eoc(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelResult {
    pub n_elements: usize,
    pub n_dofs: usize,
    pub h_max: f64,
    pub l2_error: f64,
    pub l2_eoc: Option<f64>,
    pub energy_error: f64,
    pub energy_eoc: Option<f64>,
    /// Energy error with boundary jumps included.
    pub energy_error_all_faces: f64,
    pub iterations: usize,
    pub relative_residual: f64,
    pub precond: PreconditionerKind,
    pub at_rounding_floor: bool,
    pub sparsity: SparsityStats,
    pub assembly_seconds: f64,
    pub solve_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub problem: String,
    pub degree: usize,
    pub sigma: f64,
    pub penalty_scaling: PenaltyScaling,
    pub theta: f64,
    pub form: FormKind,
    pub rows: Vec<LevelResult>,
    /// Set when a level failed; `rows` then holds the completed levels.
    pub failure: Option<String>,
}

pub const CSV_HEADER: &str = "elements,l2_error,l2_eoc,energy_error,energy_eoc";

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map(|x| format!("{x:.prec$}")).unwrap_or_default()
}

impl ConvergenceReport {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    pub fn last(&self) -> Option<&LevelResult> {
        self.rows.last()
    }

    /// Table rows followed by `#` comment lines with solver statistics.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{CSV_HEADER}").unwrap();
        for r in &self.rows {
            writeln!(
                s,
                "{},{:.12e},{},{:.12e},{}",
                r.n_elements,
                r.l2_error,
                opt(r.l2_eoc, 9),
                r.energy_error,
                opt(r.energy_eoc, 9)
            )
            .unwrap();
        }
        self.write_footer(&mut s, "# ");
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "{} (k = {}, sigma = {}, {:?} penalty, theta = {}, {:?} form)\n",
            self.problem, self.degree, self.sigma, self.penalty_scaling, self.theta, self.form
        )
        .unwrap();
        writeln!(s, "| {:>8} | {:>13} | {:>9} | {:>13} | {:>9} |", "elements", "L2 error", "EOC", "energy error", "EOC")
            .unwrap();
        writeln!(s, "|{:-<10}|{:-<15}|{:-<11}|{:-<15}|{:-<11}|", "", "", "", "", "").unwrap();
        for r in &self.rows {
            writeln!(
                s,
                "| {:>8} | {:>13.6e} | {:>9} | {:>13.6e} | {:>9} |",
                r.n_elements,
                r.l2_error,
                opt(r.l2_eoc, 6),
                r.energy_error,
                opt(r.energy_eoc, 6)
            )
            .unwrap();
        }
        s.push('\n');
        self.write_footer(&mut s, "");
        s
    }

    fn write_footer(&self, s: &mut String, prefix: &str) {
        writeln!(
            s,
            "{prefix}problem={} k={} sigma={} penalty={:?} theta={} form={:?}",
            self.problem, self.degree, self.sigma, self.penalty_scaling, self.theta, self.form
        )
        .unwrap();
        for r in &self.rows {
            writeln!(
                s,
                "{prefix}elements={} dofs={} iterations={} residual={:.3e}{} precond={:?} nnz={} max_blocks_per_row={} energy_error_with_boundary={:.6e}",
                r.n_elements,
                r.n_dofs,
                r.iterations,
                r.relative_residual,
                if r.at_rounding_floor { " (rounding floor)" } else { "" },
                r.precond,
                r.sparsity.nnz,
                r.sparsity.max_blocks_per_row,
                r.energy_error_all_faces
            )
            .unwrap();
        }
        if let Some(f) = &self.failure {
            writeln!(s, "{prefix}FAILED: {f}").unwrap();
        }
    }
}

#[derive(Debug, Clone)]
pub struct StudyOptions {
    pub degree: usize,
    pub levels: usize,
    /// Cells per side of the coarsest criss-cross mesh.
    pub base_n: usize,
    pub form: BilinearFormConfig,
    pub solver: SolverOptions,
}

impl StudyOptions {
    pub fn new(degree: usize, levels: usize) -> Self {
        Self { degree, levels, base_n: 8, form: BilinearFormConfig::default(), solver: SolverOptions::default() }
    }
}

/// Solves on one mesh; returns the `u` coefficients together with the level row
/// (without EOCs).
pub fn solve_level(
    problem: &BenchmarkProblem,
    mesh: Mesh,
    opts: &StudyOptions,
    level: usize,
) -> Result<(DgSpace, Vec<f64>, LevelResult)> {
    let space = DgSpace::new(mesh, opts.degree)?;
    let f = |x| problem.forcing(x);
    let t0 = Instant::now();
    let (sys, mixed) = match opts.form.form {
        FormKind::Eliminated => (assemble_eliminated(&space, &problem.coefficient, f, &opts.form)?, None),
        FormKind::Mixed => {
            let m = assemble_mixed(&space, &problem.coefficient, f, &opts.form)?;
            (m.stacked(), Some(m))
        }
    };
    let assembly_seconds = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let (x, rep) = solve(&sys, &opts.solver)?;
    let solve_seconds = t1.elapsed().as_secs_f64();
    if !rep.converged {
        return Err(Error::SolverFailed { level, iterations: rep.iterations, residual: rep.relative_residual });
    }
    let u_h = match &mixed {
        Some(m) => m.extract_u(&x),
        None => x,
    };
    let (u, grad) = (problem.u.clone(), problem.grad.clone());
    let row = LevelResult {
        n_elements: space.mesh().n_elements(),
        n_dofs: space.n_dofs(),
        h_max: space.mesh().h_max(),
        l2_error: l2_error(&space, &u_h, |x| u(x)),
        l2_eoc: None,
        energy_error: energy_error(&space, &u_h, |x| u(x), |x| grad(x), JumpFaces::Interior),
        energy_eoc: None,
        energy_error_all_faces: energy_error(&space, &u_h, |x| u(x), |x| grad(x), JumpFaces::All),
        iterations: rep.iterations,
        relative_residual: rep.relative_residual,
        precond: rep.precond,
        at_rounding_floor: rep.at_rounding_floor,
        sparsity: sys.stats,
        assembly_seconds,
        solve_seconds,
    };
    Ok((space, u_h, row))
}

/// Uniform refinement study starting from the `base_n` criss-cross mesh.
///
/// A failing level stops the study; the levels completed so far are kept and
/// the failure is recorded in the report.
pub fn run_study(problem: &BenchmarkProblem, opts: &StudyOptions) -> Result<ConvergenceReport> {
    if opts.levels == 0 {
        return Err(Error::InvalidConfig("at least one level is required".into()));
    }
    opts.form.validate()?;
    let mut report = ConvergenceReport {
        problem: problem.id.map(|p| p.to_string()).unwrap_or_else(|| "custom".into()),
        degree: opts.degree,
        sigma: opts.form.sigma,
        penalty_scaling: opts.form.penalty_scaling,
        theta: opts.form.flux.theta(),
        form: opts.form.form,
        rows: Vec::with_capacity(opts.levels),
        failure: None,
    };
    let mut mesh = Mesh::build_criss_cross(opts.base_n)?;
    for level in 0..opts.levels {
        if level > 0 {
            mesh = mesh.refine();
        }
        match solve_level(problem, mesh.clone(), opts, level) {
            Ok((_, _, mut row)) => {
                if let Some(prev) = report.rows.last() {
                    row.l2_eoc = Some(eoc(prev.l2_error, row.l2_error));
                    row.energy_eoc = Some(eoc(prev.energy_error, row.energy_error));
                }
                log::info!(
                    "level {level}: {} elements, L2 {:.4e}, energy {:.4e}, {} iterations",
                    row.n_elements,
                    row.l2_error,
                    row.energy_error,
                    row.iterations
                );
                report.rows.push(row);
            }
            Err(e @ Error::SolverFailed { .. }) => {
                log::error!("{e}");
                report.failure = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}
