use super::ast::{Func, Node, Var};

fn b(n: Node) -> Box<Node> {
    Box::new(n)
}

/// Symbolic partial derivative. The caller guarantees there are no kinks.
pub(crate) fn derivative(node: &Node, var: Var) -> Node {
    let d = match node {
        Node::Const(_) => Node::Const(0.0),
        Node::Var(v) => Node::Const(if *v == var { 1.0 } else { 0.0 }),
        Node::Neg(a) => Node::Neg(b(derivative(a, var))),
        Node::Add(l, r) => Node::Add(b(derivative(l, var)), b(derivative(r, var))),
        Node::Sub(l, r) => Node::Sub(b(derivative(l, var)), b(derivative(r, var))),
        Node::Mul(l, r) => Node::Add(
            b(Node::Mul(b(derivative(l, var)), r.clone())),
            b(Node::Mul(l.clone(), b(derivative(r, var)))),
        ),
        Node::Div(l, r) => Node::Div(
            b(Node::Sub(
                b(Node::Mul(b(derivative(l, var)), r.clone())),
                b(Node::Mul(l.clone(), b(derivative(r, var)))),
            )),
            b(Node::Pow(r.clone(), 2.0)),
        ),
        Node::Pow(a, e) => Node::Mul(
            b(Node::Mul(b(Node::Const(*e)), b(Node::Pow(a.clone(), e - 1.0)))),
            b(derivative(a, var)),
        ),
        Node::Call(func, a) => {
            let outer = match func {
                Func::Exp => Node::Call(Func::Exp, a.clone()),
                Func::Log => Node::Div(b(Node::Const(1.0)), a.clone()),
                Func::Sin => Node::Call(Func::Cos, a.clone()),
                Func::Cos => Node::Neg(b(Node::Call(Func::Sin, a.clone()))),
            };
            Node::Mul(b(outer), b(derivative(a, var)))
        }
        Node::Min(..) | Node::Max(..) => unreachable!("kinks are rejected before differentiation"),
    };
    simplify(d)
}

/// Constant folding plus the usual additive/multiplicative identities.
pub(crate) fn simplify(node: Node) -> Node {
    use Node::*;
    match node {
        Const(_) | Var(_) => node,
        Neg(a) => match simplify(*a) {
            Const(c) => Const(-c),
            Neg(inner) => *inner,
            other => Neg(b(other)),
        },
        Add(l, r) => match (simplify(*l), simplify(*r)) {
            (Const(x), Const(y)) => Const(x + y),
            (Const(z), other) | (other, Const(z)) if z == 0.0 => other,
            (l, Neg(r)) => simplify(Sub(b(l), r)),
            (l, r) => Add(b(l), b(r)),
        },
        Sub(l, r) => match (simplify(*l), simplify(*r)) {
            (Const(x), Const(y)) => Const(x - y),
            (other, Const(z)) if z == 0.0 => other,
            (Const(z), other) if z == 0.0 => simplify(Neg(b(other))),
            (l, r) => Sub(b(l), b(r)),
        },
        Mul(l, r) => match (simplify(*l), simplify(*r)) {
            (Const(x), Const(y)) => Const(x * y),
            (Const(z), _) | (_, Const(z)) if z == 0.0 => Const(0.0),
            (Const(o), other) | (other, Const(o)) if o == 1.0 => other,
            (Const(m), other) | (other, Const(m)) if m == -1.0 => simplify(Neg(b(other))),
            (Const(x), Mul(inner_l, inner_r)) if matches!(*inner_l, Const(_)) => {
                let Const(y) = *inner_l else { unreachable!() };
                simplify(Mul(b(Const(x * y)), inner_r))
            }
            (l, r) => Mul(b(l), b(r)),
        },
        Div(l, r) => match (simplify(*l), simplify(*r)) {
            (Const(x), Const(y)) if y != 0.0 => Const(x / y),
            (Const(z), _) if z == 0.0 => Const(0.0),
            (other, Const(o)) if o == 1.0 => other,
            (l, r) => Div(b(l), b(r)),
        },
        Pow(a, e) => match simplify(*a) {
            _ if e == 0.0 => Const(1.0),
            other if e == 1.0 => other,
            Const(c) if c.powf(e).is_finite() => Const(c.powf(e)),
            other => Pow(b(other), e),
        },
        Call(func, a) => match simplify(*a) {
            Const(c) => {
                let v = Call(func, b(Const(c))).eval(0.0, 0.0);
                if v.is_finite() {
                    Const(v)
                } else {
                    Call(func, b(Const(c)))
                }
            }
            other => Call(func, b(other)),
        },
        Min(l, r) => Min(b(simplify(*l)), b(simplify(*r))),
        Max(l, r) => Max(b(simplify(*l)), b(simplify(*r))),
    }
}
