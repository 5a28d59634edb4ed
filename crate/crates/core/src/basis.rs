//! Hinge terms and their products.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{FairMarsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `[x - k]_+`
    Plus,
    /// `[k - x]_+`
    Minus,
}

/// One factor of a basis function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HingeTerm {
    pub variable: usize,
    pub knot: f64,
    pub direction: Direction,
    /// Raw `x_v` factor; `knot` and `direction` are ignored.
    #[serde(default)]
    pub linear: bool,
}

impl HingeTerm {
    pub fn plus(variable: usize, knot: f64) -> Self {
        HingeTerm {
            variable,
            knot,
            direction: Direction::Plus,
            linear: false,
        }
    }

    pub fn minus(variable: usize, knot: f64) -> Self {
        HingeTerm {
            variable,
            knot,
            direction: Direction::Minus,
            linear: false,
        }
    }

    pub fn linear(variable: usize) -> Self {
        HingeTerm {
            variable,
            knot: 0.0,
            direction: Direction::Plus,
            linear: true,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        eval_hinge(x, self)
    }

    fn render(&self, names: &[String]) -> String {
        let name = names
            .get(self.variable)
            .cloned()
            .unwrap_or_else(|| format!("x{}", self.variable));
        if self.linear {
            return name;
        }
        match self.direction {
            Direction::Plus => format!("h({name}-{})", self.knot),
            Direction::Minus => format!("h({}-{name})", self.knot),
        }
    }
}

#[inline]
pub fn eval_hinge(x: f64, term: &HingeTerm) -> f64 {
    if term.linear {
        return x;
    }
    match term.direction {
        Direction::Plus => (x - term.knot).max(0.0),
        Direction::Minus => (term.knot - x).max(0.0),
    }
}

/// `[x-k]_+ - [x-u]_+` evaluated piecewise; requires `k < u`.
pub fn hinge_difference_identity(x: f64, k: f64, u: f64) -> Result<f64> {
    if !(k < u) {
        return Err(FairMarsError::Precondition(format!(
            "hinge difference needs k < u, got k={k}, u={u}"
        )));
    }
    Ok(if x <= k {
        0.0
    } else if x < u {
        x - k
    } else {
        u - k
    })
}

/// Product of hinge terms on distinct variables. No terms means the intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisFunction {
    pub id: usize,
    pub terms: Vec<HingeTerm>,
}

impl BasisFunction {
    pub fn intercept() -> Self {
        BasisFunction {
            id: 0,
            terms: Vec::new(),
        }
    }

    pub fn is_intercept(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.len()
    }

    pub fn uses_variable(&self, v: usize) -> bool {
        self.terms.iter().any(|t| t.variable == v)
    }

    /// `parent * term`, rejecting a variable already present in `parent`.
    pub fn extend(parent: &BasisFunction, term: HingeTerm, id: usize) -> Result<Self> {
        if parent.uses_variable(term.variable) {
            return Err(FairMarsError::Precondition(format!(
                "variable {} already appears in basis {}",
                term.variable, parent.id
            )));
        }
        let mut terms = parent.terms.clone();
        terms.push(term);
        Ok(BasisFunction { id, terms })
    }

    /// Checks the structural invariants against a feature count and degree cap.
    pub fn validate(&self, n_features: usize, max_degree: usize) -> Result<()> {
        if self.degree() > max_degree {
            return Err(FairMarsError::Precondition(format!(
                "basis {} has degree {} above the cap {max_degree}",
                self.id,
                self.degree()
            )));
        }
        for (i, t) in self.terms.iter().enumerate() {
            if t.variable >= n_features {
                return Err(FairMarsError::Precondition(format!(
                    "basis {} references variable {} of {n_features}",
                    self.id, t.variable
                )));
            }
            if !t.linear && !t.knot.is_finite() {
                return Err(FairMarsError::Precondition(format!(
                    "basis {} has a non-finite knot",
                    self.id
                )));
            }
            if self.terms[..i].iter().any(|o| o.variable == t.variable) {
                return Err(FairMarsError::Precondition(format!(
                    "basis {} repeats variable {}",
                    self.id, t.variable
                )));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, row: &[f64]) -> f64 {
        eval_basis(row, self)
    }

    /// Rendering used by rule tables, e.g. `h(StdMath-49.86)*age`.
    pub fn render(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "Intercept".to_string();
        }
        let mut out = String::new();
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                out.push('*');
            }
            let _ = write!(out, "{}", t.render(names));
        }
        out
    }

    /// Order-sensitive structural key (ignores the id).
    pub(crate) fn structure_key(&self) -> Vec<(usize, u64, bool, bool)> {
        self.terms
            .iter()
            .map(|t| {
                (
                    t.variable,
                    t.knot.to_bits(),
                    t.direction == Direction::Plus,
                    t.linear,
                )
            })
            .collect()
    }
}

#[inline]
pub fn eval_basis(row: &[f64], b: &BasisFunction) -> f64 {
    b.terms
        .iter()
        .fold(1.0, |acc, t| acc * eval_hinge(row[t.variable], t))
}

/// Basis values at every row of `ds`.
pub fn design_column(ds: &Dataset, b: &BasisFunction) -> Vec<f64> {
    let mut col = vec![1.0; ds.n_rows()];
    for t in &b.terms {
        for (c, &x) in col.iter_mut().zip(ds.column(t.variable)) {
            *c *= eval_hinge(x, t);
        }
    }
    col
}
