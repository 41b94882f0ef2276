//! Hand-authored expression trees with their expected LaTeX.

use nefmath::structure::{BigOperator, BracketKind, ExprNode as E};

fn s(l: &str) -> E {
    E::sym(l)
}

fn n(t: &str) -> E {
    E::num(t)
}

pub fn goldens() -> Vec<(E, &'static str)> {
    use BigOperator::*;
    let a_plus_b = || E::row(vec![s("a"), s("+"), s("b")]);
    let i_eq = |k: &str| E::row(vec![s("i"), s("="), n(k)]);
    vec![
        (E::row(vec![E::frac(s("a"), s("b"))]), r"\frac{a}{b}"),
        (E::row(vec![E::sup(s("x"), n("2"))]), r"x^{2}"),
        (E::row(vec![n("1.5")]), r"1.5"),
        (E::row(vec![E::sub(s("x"), n("1")), s("+"), E::sup(s("y"), n("2"))]), r"x_{1}+y^{2}"),
        (E::row(vec![E::root(None, E::row(vec![s("x"), s("+"), n("1")]))]), r"\sqrt{x+1}"),
        (E::row(vec![E::root(Some(n("3")), n("8"))]), r"\sqrt[3]{8}"),
        (E::row(vec![E::bigop(Sum, Some(i_eq("1")), Some(s("n")), E::sub(s("x"), s("i")))]), r"\sum_{i=1}^{n} x_{i}"),
        (E::row(vec![E::bigop(Product, Some(i_eq("1")), Some(s("n")), s("i"))]), r"\prod_{i=1}^{n} i"),
        (E::row(vec![E::bigop(Integral, Some(n("0")), Some(n("1")), s("x"))]), r"\int_{0}^{1} x"),
        (E::row(vec![E::sup(E::group(BracketKind::Paren, a_plus_b()), n("2"))]), r"(a+b)^{2}"),
        (E::row(vec![E::group(BracketKind::Square, E::row(vec![s("x"), s("-"), n("1")]))]), r"[x-1]"),
        (E::row(vec![n("2"), E::group(BracketKind::Paren, a_plus_b())]), r"2(a+b)"),
        (E::row(vec![E::frac(a_plus_b(), E::row(vec![s("c"), s("-"), s("d")]))]), r"\frac{a+b}{c-d}"),
        (E::row(vec![n("3.14"), s("+"), n("2,5")]), r"3.14+2{,}5"),
        (E::row(vec![s("y"), s("="), s("sin"), s("x")]), r"y=\sin x"),
        (E::row(vec![E::sup(s("e"), n("2")), s("-"), s("ln"), s("x")]), r"e^{2}-\ln x"),
        (E::row(vec![s("x"), s("="), E::frac(n("1"), n("2")), s("+"), n("0.25")]), r"x=\frac{1}{2}+0.25"),
        (
            E::row(vec![E::root(None, E::row(vec![E::sup(s("a"), n("2")), s("+"), E::sup(s("b"), n("2"))]))]),
            r"\sqrt{a^{2}+b^{2}}",
        ),
        (E::row(vec![E::bigop(Sum, Some(i_eq("0")), Some(s("m")), E::row(vec![n("2"), s("i")]))]), r"\sum_{i=0}^{m} 2i"),
        (
            E::row(vec![E::bigop(Integral, Some(s("a")), Some(s("b")), E::row(vec![s("cos"), s("x")]))]),
            r"\int_{a}^{b} \cos x",
        ),
    ]
}
