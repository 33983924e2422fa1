//! Named source and boundary functions usable from configuration files.

use serde::{Deserialize, Serialize};

use crate::geometry::Point;

/// One monomial `coeff · x1^px · x2^py`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub coeff: f64,
    #[serde(default)]
    pub px: u32,
    #[serde(default)]
    pub py: u32,
}

/// Scalar function of position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarFunction {
    Constant { value: f64 },
    /// `x1`
    X1,
    /// `x1 + x2²`
    X1PlusX2Squared,
    Polynomial { terms: Vec<Monomial> },
}

impl ScalarFunction {
    pub fn zero() -> Self {
        ScalarFunction::Constant { value: 0.0 }
    }

    pub fn constant(value: f64) -> Self {
        ScalarFunction::Constant { value }
    }

    pub fn eval(&self, p: Point) -> f64 {
        match self {
            ScalarFunction::Constant { value } => *value,
            ScalarFunction::X1 => p[0],
            ScalarFunction::X1PlusX2Squared => p[0] + p[1] * p[1],
            ScalarFunction::Polynomial { terms } => terms
                .iter()
                .map(|t| t.coeff * p[0].powi(t.px as i32) * p[1].powi(t.py as i32))
                .sum(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ScalarFunction::Constant { value } => *value == 0.0,
            ScalarFunction::Polynomial { terms } => terms.iter().all(|t| t.coeff == 0.0),
            _ => false,
        }
    }
}

/// Vector function of position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VectorFunction {
    Components { x: ScalarFunction, y: ScalarFunction },
    /// `(a + c·x2, b − c·x1)`: translation plus infinitesimal rotation.
    RigidBody { a: f64, b: f64, c: f64 },
}

impl VectorFunction {
    pub fn zero() -> Self {
        VectorFunction::Components { x: ScalarFunction::zero(), y: ScalarFunction::zero() }
    }

    pub fn eval(&self, p: Point) -> [f64; 2] {
        match self {
            VectorFunction::Components { x, y } => [x.eval(p), y.eval(p)],
            VectorFunction::RigidBody { a, b, c } => [a + c * p[1], b - c * p[0]],
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            VectorFunction::Components { x, y } => x.is_zero() && y.is_zero(),
            VectorFunction::RigidBody { a, b, c } => *a == 0.0 && *b == 0.0 && *c == 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_values() {
        assert_eq!(ScalarFunction::X1PlusX2Squared.eval([0.5, 2.0]), 4.5);
        let poly = ScalarFunction::Polynomial {
            terms: vec![Monomial { coeff: 2.0, px: 1, py: 2 }, Monomial { coeff: -1.0, px: 0, py: 0 }],
        };
        assert_eq!(poly.eval([3.0, 2.0]), 23.0);
        assert_eq!(VectorFunction::RigidBody { a: 1.0, b: 2.0, c: 3.0 }.eval([1.0, 1.0]), [4.0, -1.0]);
    }

    #[test]
    fn json_forms() {
        let f: ScalarFunction = serde_json::from_str(r#"{"kind": "x1_plus_x2_squared"}"#).unwrap();
        assert_eq!(f, ScalarFunction::X1PlusX2Squared);
        let c: ScalarFunction = serde_json::from_str(r#"{"kind": "constant", "value": 1}"#).unwrap();
        assert_eq!(c, ScalarFunction::constant(1.0));
        assert!(serde_json::from_str::<ScalarFunction>(r#"{"kind": "constant", "value": 1, "x": 2}"#).is_err());
    }
}
