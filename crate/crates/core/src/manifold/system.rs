use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};

pub type MatrixFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type DirectionalFn = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// Finite-dimensional quasilinear vector field `u ↦ A(u)u + f(u)`.
///
/// The directional derivative `∂A(u)[w]` and the Jacobian `∂f(u)` may be
/// supplied analytically; otherwise central differences are used.
#[derive(Clone)]
pub struct QuasilinearSystem {
    dim: usize,
    a: MatrixFn,
    f: VectorFn,
    da: Option<DirectionalFn>,
    df: Option<MatrixFn>,
    reference: DVector<f64>,
    domain_radius: f64,
}

/// Central-difference step `ε^{1/3}(1 + ‖u‖)`.
pub fn fd_step(u: &DVector<f64>) -> f64 {
    f64::EPSILON.cbrt() * (1.0 + u.norm())
}

impl QuasilinearSystem {
    pub fn new<A, F>(dim: usize, a: A, f: F) -> Self
    where
        A: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        Self {
            dim,
            a: Arc::new(a),
            f: Arc::new(f),
            da: None,
            df: None,
            reference: DVector::zeros(dim),
            domain_radius: f64::INFINITY,
        }
    }

    /// Semilinear/linear system with constant `A` and `f ≡ 0`.
    pub fn linear(m: DMatrix<f64>) -> Self {
        let dim = m.nrows();
        Self::new(dim, move |_| m.clone(), move |_| DVector::zeros(dim))
    }

    pub fn with_da<G>(mut self, da: G) -> Self
    where
        G: Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.da = Some(Arc::new(da));
        self
    }

    pub fn with_df<G>(mut self, df: G) -> Self
    where
        G: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.df = Some(Arc::new(df));
        self
    }

    pub fn with_domain(mut self, reference: DVector<f64>, radius: f64) -> Self {
        self.reference = reference;
        self.domain_radius = radius;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain_radius(&self) -> f64 {
        self.domain_radius
    }

    pub fn reference(&self) -> &DVector<f64> {
        &self.reference
    }

    pub fn in_domain(&self, u: &DVector<f64>) -> bool {
        (u - &self.reference).norm() <= self.domain_radius
    }

    pub fn a(&self, u: &DVector<f64>) -> DMatrix<f64> {
        (self.a)(u)
    }

    pub fn f(&self, u: &DVector<f64>) -> DVector<f64> {
        (self.f)(u)
    }

    pub fn vector_field(&self, u: &DVector<f64>) -> DVector<f64> {
        self.a(u) * u + self.f(u)
    }

    pub fn residual(&self, u: &DVector<f64>) -> f64 {
        self.vector_field(u).norm()
    }

    /// `∂A(u)[w]`, analytic when available.
    pub fn da(&self, u: &DVector<f64>, w: &DVector<f64>) -> DMatrix<f64> {
        match &self.da {
            Some(da) => da(u, w),
            None => self.fd_da(u, w),
        }
    }

    pub fn df(&self, u: &DVector<f64>) -> DMatrix<f64> {
        match &self.df {
            Some(df) => df(u),
            None => self.fd_df(u),
        }
    }

    fn fd_da(&self, u: &DVector<f64>, w: &DVector<f64>) -> DMatrix<f64> {
        let wn = w.norm();
        if wn == 0.0 {
            return DMatrix::zeros(self.dim, self.dim);
        }
        let h = fd_step(u) / wn;
        (self.a(&(u + w * h)) - self.a(&(u - w * h))) / (2.0 * h)
    }

    fn fd_df(&self, u: &DVector<f64>) -> DMatrix<f64> {
        central_jacobian(u, |v| self.f(v))
    }

    /// Jacobian of the full field: `w ↦ A(u)w + (∂A(u)[w])u + ∂f(u)w`.
    pub fn jacobian(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let mut jac = self.a(u) + self.df(u);
        for j in 0..self.dim {
            let e = DVector::from_fn(self.dim, |i, _| if i == j { 1.0 } else { 0.0 });
            let col = self.da(u, &e) * u;
            let mut c = jac.column_mut(j);
            c += col;
        }
        jac
    }

    /// Finite-difference Jacobian of `u ↦ A(u)u + f(u)`, independent of any
    /// analytic derivative data.
    pub fn fd_jacobian(&self, u: &DVector<f64>) -> DMatrix<f64> {
        central_jacobian(u, |v| self.vector_field(v))
    }

    /// Largest relative discrepancy between the analytic derivatives and
    /// finite differences over `samples` random points of the domain ball
    /// (radius 1 when the domain is unbounded). Zero if nothing analytic is
    /// supplied.
    pub fn derivative_discrepancy(&self, rng: &mut impl Rng, samples: usize) -> f64 {
        let radius = if self.domain_radius.is_finite() {
            self.domain_radius
        } else {
            1.0
        };
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let u = random_in_ball(rng, &self.reference, radius);
            if let Some(da) = &self.da {
                let w = random_in_ball(rng, &DVector::zeros(self.dim), 1.0);
                let an = da(&u, &w);
                let fd = self.fd_da(&u, &w);
                worst = worst.max((&an - &fd).norm() / (1.0 + an.norm()));
            }
            if let Some(df) = &self.df {
                let an = df(&u);
                let fd = self.fd_df(&u);
                worst = worst.max((&an - &fd).norm() / (1.0 + an.norm()));
            }
        }
        worst
    }

    /// Checks that `A` and `f` are finite at `u`.
    pub fn check_finite(&self, u: &DVector<f64>) -> Result<()> {
        let v = self.vector_field(u);
        if v.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::Config(format!("vector field is not finite at {:?}", u.as_slice())))
        }
    }
}

impl fmt::Debug for QuasilinearSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuasilinearSystem")
            .field("dim", &self.dim)
            .field("analytic_da", &self.da.is_some())
            .field("analytic_df", &self.df.is_some())
            .field("domain_radius", &self.domain_radius)
            .finish()
    }
}

pub(crate) fn central_jacobian(
    u: &DVector<f64>,
    mut g: impl FnMut(&DVector<f64>) -> DVector<f64>,
) -> DMatrix<f64> {
    let h = fd_step(u);
    let g0 = g(u);
    let mut jac = DMatrix::zeros(g0.len(), u.len());
    for j in 0..u.len() {
        let mut up = u.clone();
        let mut um = u.clone();
        up[j] += h;
        um[j] -= h;
        let col = (g(&up) - g(&um)) / (2.0 * h);
        jac.set_column(j, &col);
    }
    jac
}

pub(crate) fn random_in_ball(rng: &mut impl Rng, center: &DVector<f64>, radius: f64) -> DVector<f64> {
    let d = center.len();
    if d == 0 {
        return center.clone();
    }
    let dir = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0f64));
    let n = dir.norm().max(1e-300);
    let r = radius * rng.random_range(0.0..1.0f64).powf(1.0 / d as f64);
    center + dir * (r / n)
}
