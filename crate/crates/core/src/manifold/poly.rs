//! Polynomial systems described in JSON.
//!
//! A polynomial is a list of monomials `{"coeff": c, "powers": [p_1, …]}`.
//! A system lists `A` as a `d × d` table of polynomials and `f` as `d`
//! polynomials in `u`; an optional equilibrium family is given by `m`
//! polynomials per component in the parameters.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::stability::ManifoldParam;
use super::system::QuasilinearSystem;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial(pub Vec<Monomial>);

impl Polynomial {
    pub fn eval(&self, u: &[f64]) -> f64 {
        self.0
            .iter()
            .map(|t| {
                t.powers
                    .iter()
                    .zip(u)
                    .fold(t.coeff, |acc, (&p, &x)| acc * x.powi(p as i32))
            })
            .sum()
    }

    pub fn derivative(&self, var: usize) -> Polynomial {
        Polynomial(
            self.0
                .iter()
                .filter_map(|t| {
                    let p = *t.powers.get(var)?;
                    if p == 0 {
                        return None;
                    }
                    let mut powers = t.powers.clone();
                    powers[var] -= 1;
                    Some(Monomial {
                        coeff: t.coeff * p as f64,
                        powers,
                    })
                })
                .collect(),
        )
    }

    fn check(&self, vars: usize, what: &str) -> Result<()> {
        for t in &self.0 {
            if t.powers.len() > vars {
                return Err(Error::Schema {
                    key: what.to_string(),
                    message: format!("monomial has {} powers for {vars} variables", t.powers.len()),
                });
            }
            if !t.coeff.is_finite() {
                return Err(Error::Schema {
                    key: what.to_string(),
                    message: "non-finite coefficient".into(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolyManifold {
    pub dim: usize,
    pub map: Vec<Polynomial>,
    #[serde(default)]
    pub sample_radius: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolySystem {
    pub dim: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<Polynomial>>,
    pub f: Vec<Polynomial>,
    #[serde(default)]
    pub u_star: Option<Vec<f64>>,
    #[serde(default)]
    pub domain_radius: Option<f64>,
    #[serde(default)]
    pub manifold: Option<PolyManifold>,
}

impl PolySystem {
    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        if d == 0 {
            return Err(Error::Schema {
                key: "dim".into(),
                message: "must be positive".into(),
            });
        }
        if self.a.len() != d || self.a.iter().any(|r| r.len() != d) {
            return Err(Error::Schema {
                key: "A".into(),
                message: format!("must be a {d}×{d} table"),
            });
        }
        if self.f.len() != d {
            return Err(Error::Schema {
                key: "f".into(),
                message: format!("must have {d} entries"),
            });
        }
        for (i, row) in self.a.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                p.check(d, &format!("A[{i}][{j}]"))?;
            }
        }
        for (i, p) in self.f.iter().enumerate() {
            p.check(d, &format!("f[{i}]"))?;
        }
        if let Some(u) = &self.u_star {
            if u.len() != d {
                return Err(Error::Schema {
                    key: "u_star".into(),
                    message: format!("must have {d} entries"),
                });
            }
        }
        if let Some(man) = &self.manifold {
            if man.map.len() != d {
                return Err(Error::Schema {
                    key: "manifold.map".into(),
                    message: format!("must have {d} entries"),
                });
            }
            for (i, p) in man.map.iter().enumerate() {
                p.check(man.dim, &format!("manifold.map[{i}]"))?;
            }
        }
        Ok(())
    }

    /// Builds the system with exact polynomial derivatives.
    pub fn build(&self) -> Result<QuasilinearSystem> {
        self.validate()?;
        let d = self.dim;
        let a = self.a.clone();
        let f = self.f.clone();
        let da_tables: Vec<Vec<Vec<Polynomial>>> = (0..d)
            .map(|v| a.iter().map(|row| row.iter().map(|p| p.derivative(v)).collect()).collect())
            .collect();
        let df_table: Vec<Vec<Polynomial>> = f.iter().map(|p| (0..d).map(|v| p.derivative(v)).collect()).collect();
        let a2 = a.clone();
        let mut sys = QuasilinearSystem::new(
            d,
            move |u| eval_table(&a2, u.as_slice()),
            move |u| DVector::from_fn(d, |i, _| f[i].eval(u.as_slice())),
        )
        .with_da(move |u, w| {
            let mut out = DMatrix::zeros(d, d);
            for (v, table) in da_tables.iter().enumerate() {
                if w[v] != 0.0 {
                    out += eval_table(table, u.as_slice()) * w[v];
                }
            }
            out
        })
        .with_df(move |u| eval_table(&df_table, u.as_slice()));
        if let Some(r) = self.domain_radius {
            let center = self.u_star.clone().map(DVector::from_vec).unwrap_or_else(|| DVector::zeros(d));
            sys = sys.with_domain(center, r);
        }
        Ok(sys)
    }

    pub fn equilibrium(&self) -> DVector<f64> {
        self.u_star
            .clone()
            .map(DVector::from_vec)
            .unwrap_or_else(|| DVector::zeros(self.dim))
    }

    pub fn manifold_param(&self) -> Option<ManifoldParam> {
        let man = self.manifold.clone()?;
        let d = self.dim;
        let radius = man.sample_radius;
        let param = ManifoldParam::new(man.dim, move |p| {
            DVector::from_fn(d, |i, _| man.map[i].eval(p.as_slice()))
        });
        Some(match radius {
            Some(r) => param.with_sample_radius(r),
            None => param,
        })
    }
}

fn eval_table(t: &[Vec<Polynomial>], u: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(t.len(), t.len(), |i, j| t[i][j].eval(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{check_normal_stability, StabilityOptions};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const ORACLE: &str = r#"{
        "dim": 2,
        "A": [[[], [{"coeff": 1.0, "powers": [1, 0]}]],
              [[], [{"coeff": -1.0, "powers": [0, 0]}]]],
        "f": [[], []],
        "manifold": {"dim": 1, "map": [[{"coeff": 1.0, "powers": [1]}], []]}
    }"#;

    #[test]
    fn parses_and_evaluates() {
        let spec: PolySystem = serde_json::from_str(ORACLE).unwrap();
        let sys = spec.build().unwrap();
        let u = DVector::from_vec(vec![0.5, 0.2]);
        let v = sys.vector_field(&u);
        assert!((v[0] - 0.1).abs() < 1e-15 && (v[1] + 0.2).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sys.derivative_discrepancy(&mut rng, 10) < 1e-5);
    }

    #[test]
    fn json_manifold_passes_stability() {
        let spec: PolySystem = serde_json::from_str(ORACLE).unwrap();
        let sys = spec.build().unwrap();
        let rep = check_normal_stability(
            &sys,
            &spec.equilibrium(),
            &spec.manifold_param().unwrap(),
            &StabilityOptions::default(),
        )
        .unwrap();
        assert!(rep.passed());
        assert!((rep.gap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shape_errors_name_the_key() {
        let bad = r#"{"dim": 2, "A": [[[], []]], "f": [[], []]}"#;
        let spec: PolySystem = serde_json::from_str(bad).unwrap();
        match spec.build().unwrap_err() {
            Error::Schema { key, .. } => assert_eq!(key, "A"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn derivative_of_monomial() {
        let p = Polynomial(vec![Monomial {
            coeff: 3.0,
            powers: vec![2, 1],
        }]);
        let dp = p.derivative(0);
        assert_eq!(dp.eval(&[2.0, 5.0]), 60.0);
        assert!(p.derivative(1).derivative(1).0.is_empty());
    }
}
