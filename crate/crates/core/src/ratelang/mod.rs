//! A small expression language for jump-rate functions `w(y, t)` and initial
//! profiles `rho(y)`.
//!
//! Expressions are ordinary infix arithmetic over the variables `y` and `t`
//! with `+ - * /`, `^` (constant exponent only), `exp`, `log`, `sin`, `cos`,
//! and `min`/`max` at the top level of an expression. Derivatives are
//! computed symbolically on the tree and constant-folded.

mod ast;
mod diff;
mod parse;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use ast::{Func, Node, Var};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("expression `{expr}` is not finite at (y={y}, t={t})")]
    Domain { expr: String, y: f64, t: f64 },
    #[error("expression `{0}` uses min/max and cannot be differentiated")]
    NotDifferentiable(String),
}

impl ExprError {
    /// Byte offset for syntax-level errors.
    pub fn offset(&self) -> Option<usize> {
        match self {
            ExprError::Syntax { offset, .. } | ExprError::UnknownIdentifier { offset, .. } => Some(*offset),
            _ => None,
        }
    }
}

/// A parsed, immutable expression. Cloning is cheap.
#[derive(Clone)]
pub struct RateExpr {
    root: Arc<Node>,
    source: Arc<str>,
}

impl RateExpr {
    pub fn parse(text: &str) -> Result<RateExpr, ExprError> {
        let root = parse::parse(text)?;
        Ok(RateExpr {
            root: Arc::new(root),
            source: Arc::from(text),
        })
    }

    pub fn constant(c: f64) -> RateExpr {
        RateExpr::from_node(Node::Const(c))
    }

    fn from_node(node: Node) -> RateExpr {
        let source: Arc<str> = Arc::from(node.to_string());
        RateExpr {
            root: Arc::new(node),
            source,
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn ast(&self) -> &Node {
        &self.root
    }

    /// Checked evaluation: any non-finite intermediate is a `Domain` error.
    pub fn eval(&self, y: f64, t: f64) -> Result<f64, ExprError> {
        self.root.eval_checked(y, t).map_err(|_| ExprError::Domain {
            expr: self.source.to_string(),
            y,
            t,
        })
    }

    /// Unchecked evaluation. Only for points inside a domain on which the
    /// expression has been validated.
    #[inline]
    pub fn value(&self, y: f64, t: f64) -> f64 {
        self.root.eval(y, t)
    }

    pub fn diff(&self, var: Var) -> Result<RateExpr, ExprError> {
        if self.root.has_kink() {
            return Err(ExprError::NotDifferentiable(self.source.to_string()));
        }
        Ok(RateExpr::from_node(diff::derivative(&self.root, var)))
    }

    pub fn diff_y(&self) -> Result<RateExpr, ExprError> {
        self.diff(Var::Y)
    }

    pub fn diff_t(&self) -> Result<RateExpr, ExprError> {
        self.diff(Var::T)
    }

    pub fn depends_on(&self, var: Var) -> bool {
        self.root.mentions(var)
    }

    /// `Some(c)` when the expression mentions neither variable.
    pub fn as_constant(&self) -> Option<f64> {
        if self.depends_on(Var::Y) || self.depends_on(Var::T) {
            None
        } else {
            Some(self.root.eval(0.0, 0.0))
        }
    }

    pub fn node_count(&self) -> usize {
        self.root.size()
    }

    /// Evaluates on an `n x n` grid over `[0,1] x [0,horizon]`, returning the
    /// first point where the value is not finite.
    pub fn check_total(&self, horizon: f64, n: usize) -> Result<(), ExprError> {
        let n = n.max(2);
        for i in 0..n {
            let y = i as f64 / (n - 1) as f64;
            for j in 0..n {
                let t = horizon * j as f64 / (n - 1) as f64;
                self.eval(y, t)?;
            }
        }
        Ok(())
    }
}

/// Canonical, fully parenthesized form; parses back to the same tree.
impl fmt::Display for RateExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)
    }
}

impl fmt::Debug for RateExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RateExpr({:?})", self.source)
    }
}

impl PartialEq for RateExpr {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root
    }
}

impl Serialize for RateExpr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.source)
    }
}

impl<'de> Deserialize<'de> for RateExpr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        RateExpr::parse(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn e(s: &str) -> RateExpr {
        RateExpr::parse(s).unwrap()
    }

    #[test]
    fn literal_is_a_constant_node() {
        assert_eq!(e("0.5").ast(), &Node::Const(0.5));
        assert_eq!(e("-2").ast(), &Node::Const(-2.0));
        assert_eq!(e("1.5e-3").ast(), &Node::Const(1.5e-3));
    }

    #[test]
    fn product_structure() {
        let x = e("exp(-t)*(1+y)");
        match x.ast() {
            Node::Mul(l, r) => {
                assert!(matches!(**l, Node::Call(Func::Exp, _)));
                assert!(matches!(**r, Node::Add(_, _)));
            }
            other => panic!("unexpected tree {other:?}"),
        }
    }

    #[test]
    fn precedence_and_associativity() {
        assert_abs_diff_eq!(e("1 - 2 - 3").eval(0.0, 0.0).unwrap(), -4.0);
        assert_abs_diff_eq!(e("8 / 4 / 2").eval(0.0, 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(e("-2^2").eval(0.0, 0.0).unwrap(), -4.0);
        assert_abs_diff_eq!(e("2^-1").eval(0.0, 0.0).unwrap(), 0.5);
        assert_abs_diff_eq!(e("2*y^2+t").eval(3.0, 1.0).unwrap(), 19.0);
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        let err = RateExpr::parse("y + ").unwrap_err();
        assert!(matches!(err, ExprError::Syntax { offset: 4, .. }), "{err}");
        assert_eq!(RateExpr::parse("(y").unwrap_err().offset(), Some(2));
        assert_eq!(RateExpr::parse("y $ 2").unwrap_err().offset(), Some(2));
        assert!(RateExpr::parse("   ").is_err());
        assert!(RateExpr::parse("y^t").is_err());
    }

    #[test]
    fn unknown_identifiers() {
        let err = RateExpr::parse("2*z").unwrap_err();
        assert_eq!(
            err,
            ExprError::UnknownIdentifier {
                offset: 2,
                name: "z".into()
            }
        );
        assert!(matches!(
            RateExpr::parse("tanh(y)").unwrap_err(),
            ExprError::UnknownIdentifier { .. }
        ));
    }

    #[test]
    fn min_max_only_at_root() {
        assert!(RateExpr::parse("max(y, 0.5)").is_ok());
        assert!(RateExpr::parse("1 + max(y, 0.5)").is_err());
        assert!(RateExpr::parse("max(min(y, 1), 0.5)").is_err());
        assert!(matches!(
            e("min(y, 0.5)").diff_y().unwrap_err(),
            ExprError::NotDifferentiable(_)
        ));
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(e("y*t").eval(0.5, 2.0).unwrap(), 1.0);
        assert_eq!(e("exp(0)").eval(0.3, 7.0).unwrap(), 1.0);
        // 1.5 * e^{-1}, computed by hand
        assert_abs_diff_eq!(
            e("exp(-t)*(1+y)").eval(0.5, 1.0).unwrap(),
            0.551_819_161_757_164_8,
            epsilon = 1e-12
        );
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(e("1/y").eval(0.0, 0.0), Err(ExprError::Domain { .. })));
        assert!(matches!(e("log(y)").eval(0.0, 1.0), Err(ExprError::Domain { .. })));
        assert!(e("log(1+y)").check_total(2.0, 401).is_ok());
        assert!(e("1/(y-0.5)").check_total(1.0, 401).is_err());
    }

    #[test]
    fn derivative_examples() {
        assert_abs_diff_eq!(e("y*y").diff_y().unwrap().eval(0.3, 0.0).unwrap(), 0.6, epsilon = 1e-15);
        let c = e("3.14").diff_y().unwrap();
        assert_eq!(c.ast(), &Node::Const(0.0));
        // -2 e^{-1}
        let d = e("exp(-2*y)").diff_y().unwrap();
        assert_abs_diff_eq!(d.eval(0.5, 9.0).unwrap(), -0.735_758_882_342_884_6, epsilon = 1e-12);
        let dt = e("exp(-t)*(1+y)").diff_t().unwrap();
        assert_abs_diff_eq!(dt.eval(0.5, 1.0).unwrap(), -0.551_819_161_757_164_8, epsilon = 1e-12);
    }

    #[test]
    fn folding_keeps_derivatives_small() {
        let d = e("2*y + 3*t").diff_y().unwrap();
        assert_eq!(d.ast(), &Node::Const(2.0));
        let dd = e("y^3").diff_y().unwrap().diff_y().unwrap();
        assert_abs_diff_eq!(dd.eval(2.0, 0.0).unwrap(), 12.0);
        assert!(dd.node_count() <= 5, "{dd}");
    }

    #[test]
    fn display_round_trips() {
        for s in [
            "-y",
            "-(y+1)",
            "(-2)*y",
            "y^-0.5",
            "1e-9*t",
            "max(y, -1)",
            "--y",
            "exp(-t)*(1+y)",
        ] {
            let a = e(s);
            let b = e(&a.to_string());
            assert_eq!(a, b, "{s} -> {a}");
        }
    }
}
