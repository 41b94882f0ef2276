use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BigOperator {
    Sum,
    Product,
    Integral,
}

impl BigOperator {
    pub fn from_label(label: &str) -> Option<Self> {
        match label {
            "Σ" => Some(BigOperator::Sum),
            "Π" => Some(BigOperator::Product),
            "∫" => Some(BigOperator::Integral),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BracketKind {
    Paren,
    Square,
    Brace,
}

impl BracketKind {
    pub fn open(label: &str) -> Option<Self> {
        match label {
            "(" => Some(BracketKind::Paren),
            "[" => Some(BracketKind::Square),
            "{" => Some(BracketKind::Brace),
            _ => None,
        }
    }

    pub fn close(label: &str) -> Option<Self> {
        match label {
            ")" => Some(BracketKind::Paren),
            "]" => Some(BracketKind::Square),
            "}" => Some(BracketKind::Brace),
            _ => None,
        }
    }

    pub fn delimiters(self) -> (&'static str, &'static str) {
        match self {
            BracketKind::Paren => ("(", ")"),
            BracketKind::Square => ("[", "]"),
            BracketKind::Brace => ("{", "}"),
        }
    }
}

/// Expression tree produced by structural analysis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ExprNode {
    Symbol {
        label: String,
    },
    Row {
        children: Vec<ExprNode>,
    },
    Fraction {
        numerator: Box<ExprNode>,
        denominator: Box<ExprNode>,
    },
    Scripts {
        base: Box<ExprNode>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sup: Option<Box<ExprNode>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sub: Option<Box<ExprNode>>,
    },
    Root {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        degree: Option<Box<ExprNode>>,
        radicand: Box<ExprNode>,
    },
    BigOp {
        operator: BigOperator,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lower: Option<Box<ExprNode>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        upper: Option<Box<ExprNode>>,
        body: Box<ExprNode>,
    },
    Group {
        bracket: BracketKind,
        child: Box<ExprNode>,
    },
    Number {
        text: String,
    },
}

impl ExprNode {
    pub fn sym(label: &str) -> Self {
        ExprNode::Symbol { label: label.to_owned() }
    }

    pub fn num(text: &str) -> Self {
        ExprNode::Number { text: text.to_owned() }
    }

    pub fn row(children: Vec<ExprNode>) -> Self {
        ExprNode::Row { children }
    }

    pub fn empty() -> Self {
        ExprNode::Row { children: Vec::new() }
    }

    /// A single node stays bare; anything else becomes a row.
    pub fn seq(mut nodes: Vec<ExprNode>) -> Self {
        if nodes.len() == 1 {
            nodes.pop().expect("one node")
        } else {
            ExprNode::Row { children: nodes }
        }
    }

    pub fn frac(numerator: ExprNode, denominator: ExprNode) -> Self {
        ExprNode::Fraction { numerator: Box::new(numerator), denominator: Box::new(denominator) }
    }

    pub fn scripts(base: ExprNode, sup: Option<ExprNode>, sub: Option<ExprNode>) -> Self {
        ExprNode::Scripts { base: Box::new(base), sup: sup.map(Box::new), sub: sub.map(Box::new) }
    }

    pub fn sup(base: ExprNode, sup: ExprNode) -> Self {
        Self::scripts(base, Some(sup), None)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(base: ExprNode, sub: ExprNode) -> Self {
        Self::scripts(base, None, Some(sub))
    }

    pub fn root(degree: Option<ExprNode>, radicand: ExprNode) -> Self {
        ExprNode::Root { degree: degree.map(Box::new), radicand: Box::new(radicand) }
    }

    pub fn bigop(operator: BigOperator, lower: Option<ExprNode>, upper: Option<ExprNode>, body: ExprNode) -> Self {
        ExprNode::BigOp { operator, lower: lower.map(Box::new), upper: upper.map(Box::new), body: Box::new(body) }
    }

    pub fn group(bracket: BracketKind, child: ExprNode) -> Self {
        ExprNode::Group { bracket, child: Box::new(child) }
    }

    /// Checks the structural invariants of every node.
    pub fn validate(&self) -> Result<(), String> {
        match self {
            ExprNode::Symbol { label } if label.is_empty() => Err("symbol with empty label".into()),
            ExprNode::Number { text } if text.is_empty() => Err("empty number".into()),
            ExprNode::Symbol { .. } | ExprNode::Number { .. } => Ok(()),
            ExprNode::Row { children } => children.iter().try_for_each(ExprNode::validate),
            ExprNode::Fraction { numerator, denominator } => {
                numerator.validate()?;
                denominator.validate()
            }
            ExprNode::Scripts { base, sup, sub } => {
                if sup.is_none() && sub.is_none() {
                    return Err("scripts node without a script".into());
                }
                base.validate()?;
                sup.iter().chain(sub.iter()).try_for_each(|n| n.validate())
            }
            ExprNode::Root { degree, radicand } => {
                radicand.validate()?;
                degree.iter().try_for_each(|n| n.validate())
            }
            ExprNode::BigOp { lower, upper, body, .. } => {
                body.validate()?;
                lower.iter().chain(upper.iter()).try_for_each(|n| n.validate())
            }
            ExprNode::Group { child, .. } => child.validate(),
        }
    }

    /// Leaf labels in tree order; numbers contribute their text.
    pub fn leaves(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<String>) {
        match self {
            ExprNode::Symbol { label } => out.push(label.clone()),
            ExprNode::Number { text } => out.push(text.clone()),
            ExprNode::Row { children } => children.iter().for_each(|c| c.collect_leaves(out)),
            ExprNode::Fraction { numerator, denominator } => {
                numerator.collect_leaves(out);
                denominator.collect_leaves(out);
            }
            ExprNode::Scripts { base, sup, sub } => {
                base.collect_leaves(out);
                sup.iter().chain(sub.iter()).for_each(|n| n.collect_leaves(out));
            }
            ExprNode::Root { degree, radicand } => {
                degree.iter().for_each(|n| n.collect_leaves(out));
                radicand.collect_leaves(out);
            }
            ExprNode::BigOp { lower, upper, body, .. } => {
                lower.iter().chain(upper.iter()).for_each(|n| n.collect_leaves(out));
                body.collect_leaves(out);
            }
            ExprNode::Group { child, .. } => child.collect_leaves(out),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serde_shape_is_tagged() {
        let n = ExprNode::frac(ExprNode::sym("a"), ExprNode::num("2"));
        let v = serde_json::to_value(&n).unwrap();
        assert_eq!(v["type"], "fraction");
        assert_eq!(v["numerator"]["label"], "a");
        assert_eq!(v["denominator"]["text"], "2");
        let back: ExprNode = serde_json::from_value(v).unwrap();
        assert_eq!(back, n);
    }

    #[test]
    fn scripts_need_a_script() {
        assert!(ExprNode::scripts(ExprNode::sym("x"), None, None).validate().is_err());
        assert!(ExprNode::sup(ExprNode::sym("x"), ExprNode::num("2")).validate().is_ok());
    }

    #[test]
    fn seq_collapses_singletons() {
        assert_eq!(ExprNode::seq(vec![ExprNode::sym("x")]), ExprNode::sym("x"));
        assert_eq!(ExprNode::seq(vec![]), ExprNode::empty());
    }
}
