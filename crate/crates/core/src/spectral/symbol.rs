use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type SymbolFn = dyn Fn(i64) -> Option<f64> + Send + Sync;

/// Real, even Fourier multiplier symbol `k ↦ m(k)`.
///
/// A symbol may be partial (e.g. a table extracted numerically up to some
/// mode); applying it to a field that represents an undefined mode is a
/// configuration error.
#[derive(Clone)]
pub struct MultiplierSymbol {
    name: String,
    eval: Arc<SymbolFn>,
}

impl MultiplierSymbol {
    /// Symbol defined for every integer mode.
    pub fn new<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(i64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            eval: Arc::new(move |k| Some(f(k))),
        }
    }

    pub fn partial<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(i64) -> Option<f64> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            eval: Arc::new(f),
        }
    }

    /// Symbol given by `table[|k|]` for `|k| < table.len()`, undefined beyond.
    pub fn from_table(name: impl Into<String>, table: Vec<f64>) -> Self {
        let table = Arc::new(table);
        Self::partial(name, move |k| table.get(k.unsigned_abs() as usize).copied())
    }

    pub fn identity() -> Self {
        Self::new("identity", |_| 1.0)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn get(&self, k: i64) -> Option<f64> {
        (self.eval)(k)
    }

    /// Evaluates `m(k)`, checking that it is defined, finite and even.
    pub fn eval_checked(&self, k: i64) -> Result<f64> {
        let m = self.get(k).ok_or(Error::UndefinedSymbol(k))?;
        if !m.is_finite() {
            return Err(Error::Config(format!(
                "symbol `{}` is not finite at k = {k}",
                self.name
            )));
        }
        if k != 0 {
            let mirror = self.get(-k).ok_or(Error::UndefinedSymbol(-k))?;
            if (mirror - m).abs() > 1e-12 * (1.0 + m.abs()) {
                return Err(Error::Config(format!(
                    "symbol `{}` is not even: m({k}) = {m}, m({}) = {mirror}",
                    self.name, -k
                )));
            }
        }
        Ok(m)
    }
}

impl fmt::Debug for MultiplierSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultiplierSymbol")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}
