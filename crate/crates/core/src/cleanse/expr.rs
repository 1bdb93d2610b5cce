//! Row expressions for derived corrections.
//!
//! ```text
//! expr    := sum ( "||" sum )*
//! sum     := product ( ("+" | "-") product )*
//! product := unary ( ("*" | "/") unary )*
//! unary   := "-" unary | atom
//! atom    := number | 'text' | column | "(" expr ")"
//! ```
//!
//! `||` concatenates the text forms of its operands. Arithmetic stays in
//! integers while exact and otherwise moves to decimals. Text literals use
//! single quotes; `''` escapes a quote.

use std::collections::BTreeSet;

use rust_decimal::Decimal;

use crate::tabular::{Row, TableSchema, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Number(Value),
    Text(String),
    Column(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Concat,
}

/// Why a derivation produced no value for a row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalFailure {
    NullOperand(String),
    DivisionByZero,
    Overflow,
    NotNumeric(String),
}

impl std::fmt::Display for EvalFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EvalFailure::NullOperand(c) => write!(f, "operand `{c}` is NULL"),
            EvalFailure::DivisionByZero => f.write_str("division by zero"),
            EvalFailure::Overflow => f.write_str("arithmetic overflow"),
            EvalFailure::NotNumeric(v) => write!(f, "`{v}` is not numeric"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(String),
    Text(String),
    Ident(String),
    Op(&'static str),
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<Token>, String> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            '+' => {
                out.push(Token::Op("+"));
                i += 1;
            }
            '-' => {
                out.push(Token::Op("-"));
                i += 1;
            }
            '*' => {
                out.push(Token::Op("*"));
                i += 1;
            }
            '/' => {
                out.push(Token::Op("/"));
                i += 1;
            }
            '|' if chars.get(i + 1) == Some(&'|') => {
                out.push(Token::Op("||"));
                i += 2;
            }
            '\'' => {
                let mut text = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err("unterminated text literal".into()),
                        Some('\'') if chars.get(i + 1) == Some(&'\'') => {
                            text.push('\'');
                            i += 2;
                        }
                        Some('\'') => {
                            i += 1;
                            break;
                        }
                        Some(&ch) => {
                            text.push(ch);
                            i += 1;
                        }
                    }
                }
                out.push(Token::Text(text));
            }
            d if d.is_ascii_digit() || d == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                out.push(Token::Number(chars[start..i].iter().collect()));
            }
            a if a.is_alphabetic() || a == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Token::Ident(chars[start..i].iter().collect()));
            }
            other => return Err(format!("unexpected character `{other}`")),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek_op(&self) -> Option<&'static str> {
        match self.tokens.get(self.pos) {
            Some(Token::Op(op)) => Some(op),
            _ => None,
        }
    }

    fn binary(
        &mut self,
        ops: &[(&str, BinOp)],
        next: fn(&mut Parser) -> Result<Expr, String>,
    ) -> Result<Expr, String> {
        let mut left = next(self)?;
        while let Some(op) = self.peek_op() {
            let Some((_, bin)) = ops.iter().find(|(s, _)| *s == op) else {
                break;
            };
            self.pos += 1;
            let right = next(self)?;
            left = Expr::Binary(*bin, Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn concat(&mut self) -> Result<Expr, String> {
        self.binary(&[("||", BinOp::Concat)], Parser::sum)
    }

    fn sum(&mut self) -> Result<Expr, String> {
        self.binary(&[("+", BinOp::Add), ("-", BinOp::Sub)], Parser::product)
    }

    fn product(&mut self) -> Result<Expr, String> {
        self.binary(&[("*", BinOp::Mul), ("/", BinOp::Div)], Parser::unary)
    }

    fn unary(&mut self) -> Result<Expr, String> {
        if self.peek_op() == Some("-") {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, String> {
        let tok = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or("unexpected end of expression")?;
        self.pos += 1;
        match tok {
            Token::Number(text) => {
                if let Ok(i) = text.parse::<i64>() {
                    Ok(Expr::Number(Value::Integer(i)))
                } else {
                    text.parse::<Decimal>()
                        .map(|d| Expr::Number(Value::Decimal(d)))
                        .map_err(|_| format!("bad number `{text}`"))
                }
            }
            Token::Text(t) => Ok(Expr::Text(t)),
            Token::Ident(name) => Ok(Expr::Column(name)),
            Token::LParen => {
                let inner = self.concat()?;
                match self.tokens.get(self.pos) {
                    Some(Token::RParen) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => Err("missing `)`".into()),
                }
            }
            other => Err(format!("unexpected token {other:?}")),
        }
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, String> {
        let mut p = Parser {
            tokens: tokenize(src)?,
            pos: 0,
        };
        let e = p.concat()?;
        if p.pos != p.tokens.len() {
            return Err(format!("trailing input after token {}", p.pos));
        }
        Ok(e)
    }

    pub fn columns(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_columns(&mut out);
        out
    }

    fn collect_columns(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Column(c) => {
                out.insert(c.clone());
            }
            Expr::Neg(e) => e.collect_columns(out),
            Expr::Binary(_, l, r) => {
                l.collect_columns(out);
                r.collect_columns(out);
            }
            Expr::Number(_) | Expr::Text(_) => {}
        }
    }

    /// Evaluates against one row. Column names must exist in `schema`.
    pub fn eval(&self, schema: &TableSchema, row: &Row) -> Result<Value, EvalFailure> {
        match self {
            Expr::Number(v) => Ok(v.clone()),
            Expr::Text(t) => Ok(Value::Text(t.clone())),
            Expr::Column(c) => {
                let i = schema
                    .column_index(c)
                    .ok_or_else(|| EvalFailure::NullOperand(c.clone()))?;
                row[i]
                    .clone()
                    .ok_or_else(|| EvalFailure::NullOperand(c.clone()))
            }
            Expr::Neg(e) => match e.eval(schema, row)? {
                Value::Integer(i) => i
                    .checked_neg()
                    .map(Value::Integer)
                    .ok_or(EvalFailure::Overflow),
                Value::Decimal(d) => Ok(Value::Decimal(-d)),
                other => Err(EvalFailure::NotNumeric(other.to_string())),
            },
            Expr::Binary(BinOp::Concat, l, r) => {
                let (a, b) = (l.eval(schema, row)?, r.eval(schema, row)?);
                Ok(Value::Text(format!("{a}{b}")))
            }
            Expr::Binary(op, l, r) => arith(*op, l.eval(schema, row)?, r.eval(schema, row)?),
        }
    }
}

fn arith(op: BinOp, a: Value, b: Value) -> Result<Value, EvalFailure> {
    if let (Value::Integer(x), Value::Integer(y)) = (&a, &b) {
        let (x, y) = (*x, *y);
        let exact = match op {
            BinOp::Add => x.checked_add(y),
            BinOp::Sub => x.checked_sub(y),
            BinOp::Mul => x.checked_mul(y),
            BinOp::Div if y == 0 => return Err(EvalFailure::DivisionByZero),
            BinOp::Div if x % y == 0 => x.checked_div(y),
            BinOp::Div => None,
            BinOp::Concat => unreachable!("handled by caller"),
        };
        if let Some(v) = exact {
            return Ok(Value::Integer(v));
        }
        if op != BinOp::Div {
            return Err(EvalFailure::Overflow);
        }
    }
    let x = a
        .as_decimal()
        .ok_or_else(|| EvalFailure::NotNumeric(a.to_string()))?;
    let y = b
        .as_decimal()
        .ok_or_else(|| EvalFailure::NotNumeric(b.to_string()))?;
    let v = match op {
        BinOp::Add => x.checked_add(y),
        BinOp::Sub => x.checked_sub(y),
        BinOp::Mul => x.checked_mul(y),
        BinOp::Div if y.is_zero() => return Err(EvalFailure::DivisionByZero),
        BinOp::Div => x.checked_div(y),
        BinOp::Concat => unreachable!("handled by caller"),
    };
    v.map(|d| Value::Decimal(d.normalize()))
        .ok_or(EvalFailure::Overflow)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{ColumnKind, ColumnSpec};

    fn schema() -> TableSchema {
        TableSchema::new(
            "t",
            vec![
                ColumnSpec::new("qty", ColumnKind::Integer),
                ColumnSpec::new("price", ColumnKind::Decimal),
                ColumnSpec::new("first", ColumnKind::Text),
                ColumnSpec::new("last", ColumnKind::Text),
            ],
            &["qty"],
        )
    }

    fn row() -> Row {
        vec![
            Some(Value::Integer(3)),
            Some(ColumnKind::Decimal.parse("2.50").unwrap()),
            Some(Value::Text("Ada".into())),
            None,
        ]
    }

    fn eval(src: &str) -> Result<Value, EvalFailure> {
        Expr::parse(src).unwrap().eval(&schema(), &row())
    }

    #[test]
    fn arithmetic_and_precedence() {
        assert_eq!(eval("qty * 2 + 1").unwrap(), Value::Integer(7));
        assert_eq!(eval("qty * (2 + 1)").unwrap(), Value::Integer(9));
        assert_eq!(eval("-qty").unwrap(), Value::Integer(-3));
        assert_eq!(eval("qty * price").unwrap().to_string(), "7.5");
        assert_eq!(eval("qty / 2").unwrap().to_string(), "1.5");
        assert_eq!(eval("6 / 3").unwrap(), Value::Integer(2));
    }

    #[test]
    fn concatenation() {
        assert_eq!(
            eval("first || ' #' || qty").unwrap(),
            Value::Text("Ada #3".into())
        );
        assert_eq!(eval("'it''s'").unwrap(), Value::Text("it's".into()));
    }

    #[test]
    fn failures() {
        assert_eq!(
            eval("first || last").unwrap_err(),
            EvalFailure::NullOperand("last".into())
        );
        assert_eq!(eval("qty / 0").unwrap_err(), EvalFailure::DivisionByZero);
        assert!(matches!(
            eval("first + 1").unwrap_err(),
            EvalFailure::NotNumeric(_)
        ));
    }

    #[test]
    fn parse_errors() {
        assert!(Expr::parse("qty +").is_err());
        assert!(Expr::parse("(qty").is_err());
        assert!(Expr::parse("qty qty").is_err());
        assert!(Expr::parse("'open").is_err());
        assert!(Expr::parse("qty $ 1").is_err());
        assert_eq!(
            Expr::parse("a + b * c")
                .unwrap()
                .columns()
                .into_iter()
                .collect::<Vec<_>>(),
            ["a", "b", "c"]
        );
    }
}
