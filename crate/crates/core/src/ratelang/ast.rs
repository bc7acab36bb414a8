use std::fmt;

/// Free variables of a rate expression.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    /// Normalized position in `[0, 1]`.
    Y,
    /// Time.
    T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
}

impl Func {
    pub(crate) fn from_name(name: &str) -> Option<Func> {
        match name {
            "exp" => Some(Func::Exp),
            "log" => Some(Func::Log),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
        }
    }
}

/// Expression tree. `Min`/`Max` only ever appear at the root.
#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Const(f64),
    Var(Var),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, f64),
    Call(Func, Box<Node>),
    Min(Box<Node>, Box<Node>),
    Max(Box<Node>, Box<Node>),
}

/// An intermediate value that is not finite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct NonFinite;

impl Node {
    /// Evaluates the tree, failing on the first non-finite intermediate.
    pub(crate) fn eval_checked(&self, y: f64, t: f64) -> Result<f64, NonFinite> {
        let v = match self {
            Node::Const(c) => *c,
            Node::Var(Var::Y) => y,
            Node::Var(Var::T) => t,
            Node::Neg(a) => -a.eval_checked(y, t)?,
            Node::Add(a, b) => a.eval_checked(y, t)? + b.eval_checked(y, t)?,
            Node::Sub(a, b) => a.eval_checked(y, t)? - b.eval_checked(y, t)?,
            Node::Mul(a, b) => a.eval_checked(y, t)? * b.eval_checked(y, t)?,
            Node::Div(a, b) => a.eval_checked(y, t)? / b.eval_checked(y, t)?,
            Node::Pow(a, e) => pow(a.eval_checked(y, t)?, *e),
            Node::Call(f, a) => f.apply(a.eval_checked(y, t)?),
            Node::Min(a, b) => a.eval_checked(y, t)?.min(b.eval_checked(y, t)?),
            Node::Max(a, b) => a.eval_checked(y, t)?.max(b.eval_checked(y, t)?),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(NonFinite)
        }
    }

    /// Unchecked evaluation for hot loops over already validated domains.
    #[inline]
    pub(crate) fn eval(&self, y: f64, t: f64) -> f64 {
        match self {
            Node::Const(c) => *c,
            Node::Var(Var::Y) => y,
            Node::Var(Var::T) => t,
            Node::Neg(a) => -a.eval(y, t),
            Node::Add(a, b) => a.eval(y, t) + b.eval(y, t),
            Node::Sub(a, b) => a.eval(y, t) - b.eval(y, t),
            Node::Mul(a, b) => a.eval(y, t) * b.eval(y, t),
            Node::Div(a, b) => a.eval(y, t) / b.eval(y, t),
            Node::Pow(a, e) => pow(a.eval(y, t), *e),
            Node::Call(f, a) => f.apply(a.eval(y, t)),
            Node::Min(a, b) => a.eval(y, t).min(b.eval(y, t)),
            Node::Max(a, b) => a.eval(y, t).max(b.eval(y, t)),
        }
    }

    pub(crate) fn mentions(&self, var: Var) -> bool {
        match self {
            Node::Const(_) => false,
            Node::Var(v) => *v == var,
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => a.mentions(var),
            Node::Add(a, b)
            | Node::Sub(a, b)
            | Node::Mul(a, b)
            | Node::Div(a, b)
            | Node::Min(a, b)
            | Node::Max(a, b) => a.mentions(var) || b.mentions(var),
        }
    }

    pub(crate) fn has_kink(&self) -> bool {
        match self {
            Node::Min(..) | Node::Max(..) => true,
            Node::Const(_) | Node::Var(_) => false,
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => a.has_kink(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => a.has_kink() || b.has_kink(),
        }
    }

    pub(crate) fn size(&self) -> usize {
        match self {
            Node::Const(_) | Node::Var(_) => 1,
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => 1 + a.size(),
            Node::Add(a, b)
            | Node::Sub(a, b)
            | Node::Mul(a, b)
            | Node::Div(a, b)
            | Node::Min(a, b)
            | Node::Max(a, b) => 1 + a.size() + b.size(),
        }
    }
}

#[inline]
fn pow(base: f64, e: f64) -> f64 {
    if e == 2.0 {
        base * base
    } else if e.fract() == 0.0 && e.abs() <= 16.0 {
        base.powi(e as i32)
    } else {
        base.powf(e)
    }
}

fn fmt_const(c: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    // Debug keeps a decimal point or exponent, and round-trips exactly.
    if c < 0.0 || (c == 0.0 && c.is_sign_negative()) {
        write!(f, "(-{:?})", -c)
    } else {
        write!(f, "{c:?}")
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(c) => fmt_const(*c, f),
            Node::Var(Var::Y) => f.write_str("y"),
            Node::Var(Var::T) => f.write_str("t"),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "({a} * {b})"),
            Node::Div(a, b) => write!(f, "({a} / {b})"),
            Node::Pow(a, e) => {
                write!(f, "({a} ^ ")?;
                fmt_const(*e, f)?;
                f.write_str(")")
            }
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
            Node::Min(a, b) => write!(f, "min({a}, {b})"),
            Node::Max(a, b) => write!(f, "max({a}, {b})"),
        }
    }
}
