//! LaTeX and presentation-MathML output for expression trees.

use serde::{Deserialize, Serialize};

use crate::structure::{BigOperator, BracketKind, ExprNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    #[default]
    Latex,
    Mathml,
}

/// Whitespace around binary operators and relations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Compact,
    Spaced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct RenderOptions {
    pub target: Target,
    pub spacing: Spacing,
    /// Emit `\left`/`\right` (LaTeX) or stretchy fences (MathML).
    pub auto_size_brackets: bool,
}

impl RenderOptions {
    pub fn latex() -> Self {
        Self::default()
    }

    pub fn mathml() -> Self {
        Self { target: Target::Mathml, ..Self::default() }
    }
}

pub fn render(node: &ExprNode, opts: &RenderOptions) -> String {
    match opts.target {
        Target::Latex => latex(node, opts),
        Target::Mathml => format!("<math xmlns=\"http://www.w3.org/1998/Math/MathML\">{}</math>", mathml(node, opts)),
    }
}

pub fn to_latex(node: &ExprNode) -> String {
    render(node, &RenderOptions::latex())
}

pub fn to_mathml(node: &ExprNode) -> String {
    render(node, &RenderOptions::mathml())
}

const FUNCTIONS: [&str; 5] = ["sin", "cos", "ln", "exp", "lim"];
const BINARY: [&str; 5] = ["+", "-", "=", "<", ">"];

fn latex_symbol(label: &str) -> String {
    match label {
        l if FUNCTIONS.contains(&l) => format!("\\{l}"),
        "Σ" => "\\Sigma".into(),
        "Π" => "\\Pi".into(),
        "∫" => "\\int".into(),
        "√" => "\\surd".into(),
        "\\" => "\\backslash".into(),
        "{" => "\\{".into(),
        "}" => "\\}".into(),
        "#" | "$" | "%" | "&" | "_" | "^" | "~" => format!("\\{label}"),
        "unknown" => "?".into(),
        other => other.into(),
    }
}

/// Joins two fragments, separating a trailing control word from a
/// following letter.
fn push(out: &mut String, next: &str) {
    let ends_with_word = {
        let tail: String = out.chars().rev().take_while(|c| c.is_ascii_alphabetic()).collect();
        !tail.is_empty() && out[..out.len() - tail.len()].ends_with('\\')
    };
    if ends_with_word && next.starts_with(|c: char| c.is_ascii_alphabetic()) {
        out.push(' ');
    }
    out.push_str(next);
}

fn braced_base(node: &ExprNode, opts: &RenderOptions) -> String {
    let inner = latex(node, opts);
    match node {
        ExprNode::Fraction { .. } | ExprNode::Row { .. } | ExprNode::Scripts { .. } | ExprNode::BigOp { .. } => {
            format!("{{{inner}}}")
        }
        _ => inner,
    }
}

fn latex(node: &ExprNode, opts: &RenderOptions) -> String {
    match node {
        ExprNode::Symbol { label } => latex_symbol(label),
        ExprNode::Number { text } => text.replace(',', "{,}"),
        ExprNode::Row { children } => {
            let mut out = String::new();
            for (i, c) in children.iter().enumerate() {
                let s = latex(c, opts);
                let binary = matches!(c, ExprNode::Symbol { label } if BINARY.contains(&label.as_str()));
                if opts.spacing == Spacing::Spaced && binary && i > 0 {
                    out.push(' ');
                    out.push_str(&s);
                    out.push(' ');
                } else {
                    push(&mut out, &s);
                }
            }
            out.trim_end().to_owned()
        }
        ExprNode::Fraction { numerator, denominator } => {
            format!("\\frac{{{}}}{{{}}}", latex(numerator, opts), latex(denominator, opts))
        }
        ExprNode::Scripts { base, sup, sub } => {
            let mut out = braced_base(base, opts);
            if let Some(s) = sub {
                out.push_str(&format!("_{{{}}}", latex(s, opts)));
            }
            if let Some(s) = sup {
                out.push_str(&format!("^{{{}}}", latex(s, opts)));
            }
            out
        }
        ExprNode::Root { degree, radicand } => match degree {
            Some(d) => format!("\\sqrt[{}]{{{}}}", latex(d, opts), latex(radicand, opts)),
            None => format!("\\sqrt{{{}}}", latex(radicand, opts)),
        },
        ExprNode::BigOp { operator, lower, upper, body } => {
            let mut out = match operator {
                BigOperator::Sum => "\\sum",
                BigOperator::Product => "\\prod",
                BigOperator::Integral => "\\int",
            }
            .to_owned();
            if let Some(l) = lower {
                out.push_str(&format!("_{{{}}}", latex(l, opts)));
            }
            if let Some(u) = upper {
                out.push_str(&format!("^{{{}}}", latex(u, opts)));
            }
            out.push(' ');
            out.push_str(&latex(body, opts));
            out
        }
        ExprNode::Group { bracket, child } => {
            let (open, close) = match bracket {
                BracketKind::Brace => ("\\{", "\\}"),
                other => other.delimiters(),
            };
            let inner = latex(child, opts);
            if opts.auto_size_brackets {
                format!("\\left{open}{inner}\\right{close}")
            } else {
                format!("{open}{inner}{close}")
            }
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn mathml_token(label: &str) -> String {
    let is_ident = label.chars().all(|c| c.is_alphabetic()) && !matches!(label, "Σ" | "Π");
    if label == "unknown" {
        "<merror><mi>?</mi></merror>".into()
    } else if label.chars().all(|c| c.is_ascii_digit()) {
        format!("<mn>{label}</mn>")
    } else if is_ident {
        format!("<mi>{}</mi>", escape(label))
    } else {
        let op = match label {
            "-" => "\u{2212}",
            "Σ" => "\u{2211}",
            "Π" => "\u{220F}",
            "√" => "\u{221A}",
            other => other,
        };
        format!("<mo>{}</mo>", escape(op))
    }
}

fn mathml(node: &ExprNode, opts: &RenderOptions) -> String {
    match node {
        ExprNode::Symbol { label } => mathml_token(label),
        ExprNode::Number { text } => format!("<mn>{}</mn>", escape(text)),
        ExprNode::Row { children } => {
            format!("<mrow>{}</mrow>", children.iter().map(|c| mathml(c, opts)).collect::<String>())
        }
        ExprNode::Fraction { numerator, denominator } => {
            format!("<mfrac>{}{}</mfrac>", mathml(numerator, opts), mathml(denominator, opts))
        }
        ExprNode::Scripts { base, sup, sub } => {
            let b = mathml(base, opts);
            match (sup, sub) {
                (Some(p), Some(s)) => format!("<msubsup>{b}{}{}</msubsup>", mathml(s, opts), mathml(p, opts)),
                (Some(p), None) => format!("<msup>{b}{}</msup>", mathml(p, opts)),
                (None, Some(s)) => format!("<msub>{b}{}</msub>", mathml(s, opts)),
                (None, None) => b,
            }
        }
        ExprNode::Root { degree, radicand } => match degree {
            Some(d) => format!("<mroot>{}{}</mroot>", mathml(radicand, opts), mathml(d, opts)),
            None => format!("<msqrt>{}</msqrt>", mathml(radicand, opts)),
        },
        ExprNode::BigOp { operator, lower, upper, body } => {
            let (op, under_over) = match operator {
                BigOperator::Sum => ("\u{2211}", true),
                BigOperator::Product => ("\u{220F}", true),
                BigOperator::Integral => ("\u{222B}", false),
            };
            let op = format!("<mo>{op}</mo>");
            let (l, u) = (lower.as_ref().map(|n| mathml(n, opts)), upper.as_ref().map(|n| mathml(n, opts)));
            let head = match (l, u, under_over) {
                (Some(l), Some(u), true) => format!("<munderover>{op}{l}{u}</munderover>"),
                (Some(l), Some(u), false) => format!("<msubsup>{op}{l}{u}</msubsup>"),
                (Some(l), None, true) => format!("<munder>{op}{l}</munder>"),
                (Some(l), None, false) => format!("<msub>{op}{l}</msub>"),
                (None, Some(u), true) => format!("<mover>{op}{u}</mover>"),
                (None, Some(u), false) => format!("<msup>{op}{u}</msup>"),
                (None, None, _) => op,
            };
            format!("<mrow>{head}{}</mrow>", mathml(body, opts))
        }
        ExprNode::Group { bracket, child } => {
            let (open, close) = bracket.delimiters();
            let stretch = if opts.auto_size_brackets { "true" } else { "false" };
            format!(
                "<mrow><mo stretchy=\"{stretch}\">{open}</mo>{}<mo stretchy=\"{stretch}\">{close}</mo></mrow>",
                mathml(child, opts)
            )
        }
    }
}
