//! Benchmark problems on the unit square: coefficient fields `A(x)`, exact
//! solutions with derivatives, and forcing `f = -A : D^2 u` in closed form.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::Point;

pub type Matrix2 = [[f64; 2]; 2];
pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(Point) -> Matrix2 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    Constant,
    /// Smooth enough for the coercivity analysis.
    Coercive,
    /// Continuous but with unbounded derivatives somewhere.
    Nondifferentiable,
    /// Piecewise constant on the mesh.
    PiecewiseConstant,
}

/// Symmetric, uniformly elliptic coefficient matrix field.
#[derive(Clone)]
pub struct CoefficientField {
    entries: MatrixFn,
    pub smoothness: Smoothness,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientField").field("smoothness", &self.smoothness).finish_non_exhaustive()
    }
}

fn min_eigenvalue(m: Matrix2) -> f64 {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    0.5 * tr - (0.25 * tr * tr - det).max(0.0).sqrt()
}

impl CoefficientField {
    pub fn new(entries: impl Fn(Point) -> Matrix2 + Send + Sync + 'static, smoothness: Smoothness) -> Self {
        Self { entries: Arc::new(entries), smoothness }
    }

    /// `A = [[1, b], [b, a]]`.
    pub fn from_ab(
        a: impl Fn(Point) -> f64 + Send + Sync + 'static,
        b: impl Fn(Point) -> f64 + Send + Sync + 'static,
        smoothness: Smoothness,
    ) -> Self {
        Self::new(
            move |x| {
                let bx = b(x);
                [[1.0, bx], [bx, a(x)]]
            },
            smoothness,
        )
    }

    pub fn identity() -> Self {
        Self::constant([[1.0, 0.0], [0.0, 1.0]])
    }

    pub fn constant(m: Matrix2) -> Self {
        Self::new(move |_| m, Smoothness::Constant)
    }

    pub fn eval(&self, x: Point) -> Matrix2 {
        (self.entries)(x)
    }

    /// Smallest eigenvalue of `A` over a uniform `(n+1) x (n+1)` sample grid.
    pub fn ellipticity_estimate(&self, n: usize) -> f64 {
        let h = 1.0 / n as f64;
        (0..=n)
            .flat_map(|j| (0..=n).map(move |i| [i as f64 * h, j as f64 * h]))
            .map(|x| min_eigenvalue(self.eval(x)))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemId {
    Test1,
    Test2,
    Test3a,
    Test3b,
}

impl ProblemId {
    pub const ALL: [ProblemId; 4] = [ProblemId::Test1, ProblemId::Test2, ProblemId::Test3a, ProblemId::Test3b];

    pub fn problem(self) -> BenchmarkProblem {
        match self {
            ProblemId::Test1 => test1(),
            ProblemId::Test2 => test2(),
            ProblemId::Test3a => test3a(),
            ProblemId::Test3b => test3b(),
        }
    }
}

impl FromStr for ProblemId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().trim_start_matches("test") {
            "1" => Ok(Self::Test1),
            "2" => Ok(Self::Test2),
            "3a" => Ok(Self::Test3a),
            "3b" => Ok(Self::Test3b),
            _ => Err(Error::UnknownProblem(s.to_string())),
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemId::Test1 => "test1",
            ProblemId::Test2 => "test2",
            ProblemId::Test3a => "test3a",
            ProblemId::Test3b => "test3b",
        })
    }
}

/// Exact solution with its derivatives and the matching right-hand side.
#[derive(Clone)]
pub struct BenchmarkProblem {
    pub id: Option<ProblemId>,
    pub coefficient: CoefficientField,
    pub u: ScalarFn,
    pub grad: VectorFn,
    pub hessian: MatrixFn,
    pub f: ScalarFn,
    pub regularity: &'static str,
    /// Point where `u` is not differentiable and must not be evaluated.
    pub singular_point: Option<Point>,
}

impl fmt::Debug for BenchmarkProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BenchmarkProblem")
            .field("id", &self.id)
            .field("coefficient", &self.coefficient)
            .field("regularity", &self.regularity)
            .finish_non_exhaustive()
    }
}

impl BenchmarkProblem {
    /// Builds a problem from `A` and `u`; `f = -A : D^2 u` is formed pointwise.
    pub fn manufactured(
        coefficient: CoefficientField,
        u: ScalarFn,
        grad: VectorFn,
        hessian: MatrixFn,
        regularity: &'static str,
    ) -> Self {
        let (a, h) = (coefficient.clone(), hessian.clone());
        let f: ScalarFn = Arc::new(move |x| -frobenius(a.eval(x), h(x)));
        Self { id: None, coefficient, u, grad, hessian, f, regularity, singular_point: None }
    }

    fn check(&self, x: Point) -> Result<()> {
        match self.singular_point {
            Some(p) if p == x => Err(Error::SingularPoint(x[0], x[1])),
            _ => Ok(()),
        }
    }

    pub fn exact(&self, x: Point) -> Result<f64> {
        self.check(x).map(|_| (self.u)(x))
    }

    pub fn forcing(&self, x: Point) -> Result<f64> {
        self.check(x).map(|_| (self.f)(x))
    }
}

pub fn frobenius(a: Matrix2, b: Matrix2) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

/// `u = sin(pi x) sin(pi y)` with derivatives.
pub fn sine_solution() -> (ScalarFn, VectorFn, MatrixFn) {
    let u: ScalarFn = Arc::new(|x: Point| (PI * x[0]).sin() * (PI * x[1]).sin());
    let grad: VectorFn = Arc::new(|x: Point| {
        let (sx, cx) = (PI * x[0]).sin_cos();
        let (sy, cy) = (PI * x[1]).sin_cos();
        [PI * cx * sy, PI * sx * cy]
    });
    let hess: MatrixFn = Arc::new(|x: Point| {
        let (sx, cx) = (PI * x[0]).sin_cos();
        let (sy, cy) = (PI * x[1]).sin_cos();
        let p2 = PI * PI;
        [[-p2 * sx * sy, p2 * cx * cy], [p2 * cx * cy, -p2 * sx * sy]]
    });
    (u, grad, hess)
}

/// `a(x) = -ln((x_1 - 1/2)^2 + 1e-10) + 1`
pub fn log_coefficient(x: Point) -> f64 {
    -((x[0] - 0.5).powi(2) + 1e-10).ln() + 1.0
}

/// `b(x) = (x_1^2 x_2^2)^{1/3}`
pub fn cube_root_coefficient(x: Point) -> f64 {
    (x[0] * x[0] * x[1] * x[1]).cbrt()
}

/// `a(x) = -ln(x_1^2 + 1e-10) + 1`, i.e. [`log_coefficient`] with `1/2`
/// evaluated in integer arithmetic: the peak moves onto the boundary `x_1 = 0`.
pub fn boundary_log_coefficient(x: Point) -> f64 {
    -(x[0].powi(2) + 1e-10).ln() + 1.0
}

fn test1_coefficient() -> CoefficientField {
    CoefficientField::from_ab(log_coefficient, |_| 0.0, Smoothness::Coercive)
}

/// Coercive operator with a logarithmic peak along `x_1 = 1/2`.
pub fn test1() -> BenchmarkProblem {
    log_peak_problem(Some(ProblemId::Test1), log_coefficient)
}

/// Test 1 with the peak on `x_1 = 0` (see [`boundary_log_coefficient`]).
/// There `∂_22 u` vanishes, so the peak barely affects the discretisation.
pub fn test1_boundary_peak() -> BenchmarkProblem {
    log_peak_problem(None, boundary_log_coefficient)
}

fn log_peak_problem(id: Option<ProblemId>, a: fn(Point) -> f64) -> BenchmarkProblem {
    let (u, grad, hessian) = sine_solution();
    let f: ScalarFn = Arc::new(move |x: Point| PI * PI * (PI * x[0]).sin() * (PI * x[1]).sin() * (1.0 + a(x)));
    BenchmarkProblem {
        id,
        coefficient: CoefficientField::from_ab(a, |_| 0.0, Smoothness::Coercive),
        u,
        grad,
        hessian,
        f,
        regularity: "smooth",
        singular_point: None,
    }
}

/// Off-diagonal coefficient with unbounded derivative along the axes.
pub fn test2() -> BenchmarkProblem {
    let (u, grad, hessian) = sine_solution();
    let f: ScalarFn = Arc::new(|x: Point| {
        let (sx, cx) = (PI * x[0]).sin_cos();
        let (sy, cy) = (PI * x[1]).sin_cos();
        PI * PI * (3.0 * sx * sy - 2.0 * cube_root_coefficient(x) * cx * cy)
    });
    BenchmarkProblem {
        id: Some(ProblemId::Test2),
        coefficient: CoefficientField::from_ab(|_| 2.0, cube_root_coefficient, Smoothness::Nondifferentiable),
        u,
        grad,
        hessian,
        f,
        regularity: "smooth",
        singular_point: None,
    }
}

/// Cosine bump supported in the disc `|x - 1/2|^2 <= 1/8`: in `H^2` but not `H^3`.
pub fn test3a() -> BenchmarkProblem {
    let inside = |x: Point| {
        let d = [x[0] - 0.5, x[1] - 0.5];
        (d, d[0] * d[0] + d[1] * d[1] <= 0.125)
    };
    let u: ScalarFn = Arc::new(move |x| {
        let (d, ins) = inside(x);
        if ins {
            0.25 * ((8.0 * PI * (d[0] * d[0] + d[1] * d[1])).cos() + 1.0)
        } else {
            0.0
        }
    });
    let grad: VectorFn = Arc::new(move |x| {
        let (d, ins) = inside(x);
        if ins {
            let s = (8.0 * PI * (d[0] * d[0] + d[1] * d[1])).sin();
            [-4.0 * PI * s * d[0], -4.0 * PI * s * d[1]]
        } else {
            [0.0, 0.0]
        }
    });
    let hessian: MatrixFn = Arc::new(move |x| {
        let (d, ins) = inside(x);
        if ins {
            let (s, c) = (8.0 * PI * (d[0] * d[0] + d[1] * d[1])).sin_cos();
            let h = |i: usize, j: usize| {
                -64.0 * PI * PI * c * d[i] * d[j] - if i == j { 4.0 * PI * s } else { 0.0 }
            };
            [[h(0, 0), h(0, 1)], [h(1, 0), h(1, 1)]]
        } else {
            [[0.0; 2]; 2]
        }
    });
    let h2 = hessian.clone();
    let f: ScalarFn = Arc::new(move |x| {
        let h = h2(x);
        -(h[0][0] + log_coefficient(x) * h[1][1])
    });
    BenchmarkProblem {
        id: Some(ProblemId::Test3a),
        coefficient: test1_coefficient(),
        u,
        grad,
        hessian,
        f,
        regularity: "H^2 but not H^3",
        singular_point: None,
    }
}

/// `u = 100 x_1 (1 - x_1) x_2 (1 - x_2) / |x|`: in `H^1` but not `H^2` (corner singularity).
pub fn test3b() -> BenchmarkProblem {
    fn parts(x: Point) -> (f64, [f64; 2], Matrix2, f64, [f64; 2], Matrix2) {
        let (px, py) = (x[0] * (1.0 - x[0]), x[1] * (1.0 - x[1]));
        let g = 100.0 * px * py;
        let gg = [100.0 * (1.0 - 2.0 * x[0]) * py, 100.0 * px * (1.0 - 2.0 * x[1])];
        let gxy = 100.0 * (1.0 - 2.0 * x[0]) * (1.0 - 2.0 * x[1]);
        let gh = [[-200.0 * py, gxy], [gxy, -200.0 * px]];
        let r = x[0].hypot(x[1]);
        let w = 1.0 / r;
        let r3 = r * r * r;
        let r5 = r3 * r * r;
        let wg = [-x[0] / r3, -x[1] / r3];
        let wh = |i: usize, j: usize| 3.0 * x[i] * x[j] / r5 - if i == j { 1.0 / r3 } else { 0.0 };
        (g, gg, gh, w, wg, [[wh(0, 0), wh(0, 1)], [wh(1, 0), wh(1, 1)]])
    }
    let u: ScalarFn = Arc::new(|x| {
        let (g, _, _, w, _, _) = parts(x);
        g * w
    });
    let grad: VectorFn = Arc::new(|x| {
        let (g, gg, _, w, wg, _) = parts(x);
        [gg[0] * w + g * wg[0], gg[1] * w + g * wg[1]]
    });
    let hessian: MatrixFn = Arc::new(|x| {
        let (g, gg, gh, w, wg, wh) = parts(x);
        let h = |i: usize, j: usize| gh[i][j] * w + gg[i] * wg[j] + gg[j] * wg[i] + g * wh[i][j];
        [[h(0, 0), h(0, 1)], [h(1, 0), h(1, 1)]]
    });
    let h2 = hessian.clone();
    let f: ScalarFn = Arc::new(move |x| {
        let h = h2(x);
        -(h[0][0] + log_coefficient(x) * h[1][1])
    });
    BenchmarkProblem {
        id: Some(ProblemId::Test3b),
        coefficient: test1_coefficient(),
        u,
        grad,
        hessian,
        f,
        regularity: "H^1 but not H^2",
        singular_point: Some([0.0, 0.0]),
    }
}
