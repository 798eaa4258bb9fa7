//! Query to SQL translation, and a small interpreter for the emitted
//! dialect.
//!
//! Target schema (one table):
//!
//! ```sql
//! CREATE TABLE transmitters (
//!     name           TEXT PRIMARY KEY,
//!     latitude       DOUBLE PRECISION NULL,
//!     longitude      DOUBLE PRECISION NULL,
//!     hours_from_min INTEGER NOT NULL,
//!     hours_to_min   INTEGER NOT NULL,
//!     freq_low_hz    BIGINT NOT NULL,
//!     freq_high_hz   BIGINT NOT NULL
//! );
//! ```
//!
//! Every statement has the shape
//! `SELECT <columns> FROM transmitters WHERE <expr> ORDER BY name ASC`,
//! where `<expr>` joins one parenthesized expression per clause with the
//! query's AND/OR connectors. SQL gives AND precedence over OR, which is
//! the evaluator's rule too. Clause templates (`$a`, `$b`, ... are the
//! clause's own placeholders, numbered densely across the statement):
//!
//! | predicate | include | exclude |
//! |---|---|---|
//! | name | `(name = $a)` | `(NOT (name = $a))` |
//! | band `[lo, hi]` | `(freq_low_hz <= $b AND freq_high_hz >= $a)` | `(NOT (...))` |
//! | hours `[from, to)` | `(` [`HOURS_TEMPLATE`] `)` | `(NOT (...))` |
//! | within | `(latitude IS NOT NULL AND longitude IS NOT NULL AND <dist> <= $c)` | `(latitude IS NOT NULL AND longitude IS NOT NULL AND NOT (<dist> <= $c))` |
//!
//! `<dist>` is [`DISTANCE_TEMPLATE`] with `$a = lat`, `$b = lon`. The
//! spatial templates keep the NULL guard outside the negation, so a row
//! without a position never matches a spatial clause of either polarity.
//!
//! [`interpret`] executes exactly this dialect over a [`Dataset`], with
//! SQL three-valued logic for the nullable position columns.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::model::{Dataset, Transmitter};
use crate::query::{Clause, Connector, Predicate, Query};

pub const SELECT_COLUMNS: &str =
    "name, latitude, longitude, hours_from_min, hours_to_min, freq_low_hz, freq_high_hz";

/// Overlap of a stored arc `[hours_from_min, hours_to_min)` with the query
/// arc `[$a, $b)`, either of which may wrap past midnight.
pub const HOURS_TEMPLATE: &str = "(hours_from_min < hours_to_min AND $a < $b AND $a < hours_to_min AND hours_from_min < $b) \
OR (hours_from_min > hours_to_min AND $a < $b AND ($a < hours_to_min OR hours_from_min < $b)) \
OR (hours_from_min < hours_to_min AND $a > $b AND ($a < hours_to_min OR hours_from_min < $b)) \
OR (hours_from_min > hours_to_min AND $a > $b)";

/// Haversine distance in km from `($a, $b)` to the row's position.
pub const DISTANCE_TEMPLATE: &str = "2 * 6371.0088 * ASIN(LEAST(1, SQRT(POWER(SIN(RADIANS(latitude - $a) / 2), 2) \
+ COS(RADIANS($a)) * COS(RADIANS(latitude)) * POWER(SIN(RADIANS(longitude - $b) / 2), 2))))";

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum SqlValue {
    Text(String),
    Int(i64),
    Float(f64),
}

/// Statement text with `$1..$n` placeholders and the values bound to them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SqlStatement {
    pub text: String,
    pub params: Vec<SqlValue>,
}

struct Emitter {
    params: Vec<SqlValue>,
}

impl Emitter {
    fn bind(&mut self, value: SqlValue) -> String {
        self.params.push(value);
        format!("${}", self.params.len())
    }

    fn fill(template: &str, slots: &[(&str, &str)]) -> String {
        slots
            .iter()
            .fold(template.to_string(), |text, (slot, placeholder)| text.replace(slot, placeholder))
    }

    fn clause(&mut self, clause: &Clause) -> String {
        let negate = |cond: String| {
            if clause.include {
                cond
            } else {
                format!("NOT ({cond})")
            }
        };
        match &clause.predicate {
            Predicate::NameIs(name) => {
                let p = self.bind(SqlValue::Text(name.clone()));
                format!("({})", negate(format!("name = {p}")))
            }
            Predicate::BandOverlaps(band) => {
                let low = self.bind(SqlValue::Int(band.low_hz() as i64));
                let high = self.bind(SqlValue::Int(band.high_hz() as i64));
                format!("({})", negate(format!("freq_low_hz <= {high} AND freq_high_hz >= {low}")))
            }
            Predicate::ActiveDuring(hours) => {
                let from = self.bind(SqlValue::Int(hours.from().minutes() as i64));
                let to = self.bind(SqlValue::Int(hours.to().minutes() as i64));
                let cond = Self::fill(HOURS_TEMPLATE, &[("$a", &from), ("$b", &to)]);
                format!("({})", negate(cond))
            }
            Predicate::WithinKm { centre, radius_km } => {
                let lat = self.bind(SqlValue::Float(centre.lat()));
                let lon = self.bind(SqlValue::Float(centre.lon()));
                let radius = self.bind(SqlValue::Float(*radius_km));
                let distance = Self::fill(DISTANCE_TEMPLATE, &[("$a", &lat), ("$b", &lon)]);
                format!(
                    "(latitude IS NOT NULL AND longitude IS NOT NULL AND {})",
                    negate(format!("{distance} <= {radius}"))
                )
            }
        }
    }
}

pub fn emit(q: &Query) -> SqlStatement {
    let mut emitter = Emitter { params: Vec::new() };
    let mut text = format!("SELECT {SELECT_COLUMNS} FROM transmitters WHERE ");
    text.push_str(&emitter.clause(&q.clauses()[0]));
    for (connector, clause) in q.connectors().iter().zip(&q.clauses()[1..]) {
        let op = match connector {
            Connector::And => "AND",
            Connector::Or => "OR",
        };
        let _ = write!(text, " {op} {}", emitter.clause(clause));
    }
    text.push_str(" ORDER BY name ASC");
    SqlStatement {
        text,
        params: emitter.params,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SqlError {
    #[error("unsupported SQL at byte {offset}: {message}")]
    UnsupportedSql { offset: usize, message: String },
}

fn unsupported(offset: usize, message: impl Into<String>) -> SqlError {
    SqlError::UnsupportedSql {
        offset,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Word(String),
    Number(String),
    Param(usize),
    Symbol(&'static str),
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, SqlError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            tokens.push((start, Token::Word(text[start..i].to_ascii_uppercase())));
        } else if c.is_ascii_digit() {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            tokens.push((start, Token::Number(text[start..i].to_string())));
        } else if c == b'$' {
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let n: usize = text[start + 1..i]
                .parse()
                .map_err(|_| unsupported(start, "malformed placeholder"))?;
            tokens.push((start, Token::Param(n)));
        } else {
            let two = text.get(i..i + 2).unwrap_or("");
            let symbol = match two {
                "<=" => Some("<="),
                ">=" => Some(">="),
                "<>" => Some("<>"),
                _ => None,
            };
            let symbol = match symbol {
                Some(s) => {
                    i += 2;
                    s
                }
                None => {
                    i += 1;
                    match c {
                        b'(' => "(",
                        b')' => ")",
                        b',' => ",",
                        b'=' => "=",
                        b'<' => "<",
                        b'>' => ">",
                        b'+' => "+",
                        b'-' => "-",
                        b'*' => "*",
                        b'/' => "/",
                        _ => return Err(unsupported(start, format!("unexpected character {:?}", c as char))),
                    }
                }
            };
            tokens.push((start, Token::Symbol(symbol)));
        }
    }
    Ok(tokens)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Column {
    Name,
    Latitude,
    Longitude,
    HoursFrom,
    HoursTo,
    FreqLow,
    FreqHigh,
}

impl Column {
    fn parse(word: &str) -> Option<Column> {
        Some(match word {
            "NAME" => Column::Name,
            "LATITUDE" => Column::Latitude,
            "LONGITUDE" => Column::Longitude,
            "HOURS_FROM_MIN" => Column::HoursFrom,
            "HOURS_TO_MIN" => Column::HoursTo,
            "FREQ_LOW_HZ" => Column::FreqLow,
            "FREQ_HIGH_HZ" => Column::FreqHigh,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Radians,
    Sin,
    Cos,
    Asin,
    Sqrt,
    Power,
    Least,
}

impl Func {
    fn parse(word: &str) -> Option<Func> {
        Some(match word {
            "RADIANS" => Func::Radians,
            "SIN" => Func::Sin,
            "COS" => Func::Cos,
            "ASIN" => Func::Asin,
            "SQRT" => Func::Sqrt,
            "POWER" => Func::Power,
            "LEAST" => Func::Least,
            _ => return None,
        })
    }

    fn arity(self) -> usize {
        match self {
            Func::Power | Func::Least => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq)]
enum Expr {
    Column(Column),
    Param(usize),
    Int(i64),
    Float(f64),
    Neg(Box<Expr>),
    Arith(ArithOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    IsNull { expr: Box<Expr>, negated: bool },
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

struct SqlParser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl SqlParser {
    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T, SqlError> {
        Err(unsupported(self.offset(), message))
    }

    fn eat_word(&mut self, word: &str) -> bool {
        if matches!(self.peek(), Some(Token::Word(w)) if w == word) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_word(&mut self, word: &str) -> Result<(), SqlError> {
        if self.eat_word(word) {
            Ok(())
        } else {
            self.fail(format!("expected {word}"))
        }
    }

    fn eat_symbol(&mut self, symbol: &str) -> bool {
        if matches!(self.peek(), Some(Token::Symbol(s)) if *s == symbol) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_symbol(&mut self, symbol: &str) -> Result<(), SqlError> {
        if self.eat_symbol(symbol) {
            Ok(())
        } else {
            self.fail(format!("expected {symbol:?}"))
        }
    }

    fn statement(&mut self) -> Result<Expr, SqlError> {
        self.expect_word("SELECT")?;
        for (i, column) in SELECT_COLUMNS.split(", ").enumerate() {
            if i > 0 {
                self.expect_symbol(",")?;
            }
            self.expect_word(&column.to_ascii_uppercase())?;
        }
        self.expect_word("FROM")?;
        self.expect_word("TRANSMITTERS")?;
        self.expect_word("WHERE")?;
        let predicate = self.or_expr()?;
        self.expect_word("ORDER")?;
        self.expect_word("BY")?;
        self.expect_word("NAME")?;
        self.expect_word("ASC")?;
        if self.pos != self.tokens.len() {
            return self.fail("trailing input");
        }
        Ok(predicate)
    }

    fn or_expr(&mut self) -> Result<Expr, SqlError> {
        let mut lhs = self.and_expr()?;
        while self.eat_word("OR") {
            lhs = Expr::Or(Box::new(lhs), Box::new(self.and_expr()?));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, SqlError> {
        let mut lhs = self.not_expr()?;
        while self.eat_word("AND") {
            lhs = Expr::And(Box::new(lhs), Box::new(self.not_expr()?));
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> Result<Expr, SqlError> {
        if self.eat_word("NOT") {
            return Ok(Expr::Not(Box::new(self.not_expr()?)));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, SqlError> {
        let lhs = self.additive()?;
        if self.eat_word("IS") {
            let negated = self.eat_word("NOT");
            self.expect_word("NULL")?;
            return Ok(Expr::IsNull {
                expr: Box::new(lhs),
                negated,
            });
        }
        let op = match self.peek() {
            Some(Token::Symbol("=")) => CmpOp::Eq,
            Some(Token::Symbol("<>")) => CmpOp::Ne,
            Some(Token::Symbol("<")) => CmpOp::Lt,
            Some(Token::Symbol("<=")) => CmpOp::Le,
            Some(Token::Symbol(">")) => CmpOp::Gt,
            Some(Token::Symbol(">=")) => CmpOp::Ge,
            _ => return Ok(lhs),
        };
        self.pos += 1;
        let rhs = self.additive()?;
        Ok(Expr::Cmp(op, Box::new(lhs), Box::new(rhs)))
    }

    fn additive(&mut self) -> Result<Expr, SqlError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = if self.eat_symbol("+") {
                ArithOp::Add
            } else if self.eat_symbol("-") {
                ArithOp::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Arith(op, Box::new(lhs), Box::new(self.multiplicative()?));
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, SqlError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat_symbol("*") {
                ArithOp::Mul
            } else if self.eat_symbol("/") {
                ArithOp::Div
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Arith(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr, SqlError> {
        if self.eat_symbol("-") {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, SqlError> {
        let offset = self.offset();
        match self.peek().cloned() {
            Some(Token::Symbol("(")) => {
                self.pos += 1;
                // Parenthesized boolean or arithmetic; the full grammar covers both.
                let inner = self.or_expr()?;
                self.expect_symbol(")")?;
                Ok(inner)
            }
            Some(Token::Param(n)) => {
                self.pos += 1;
                Ok(Expr::Param(n))
            }
            Some(Token::Number(text)) => {
                self.pos += 1;
                if text.contains('.') {
                    text.parse()
                        .map(Expr::Float)
                        .map_err(|_| unsupported(offset, "malformed number"))
                } else {
                    text.parse()
                        .map(Expr::Int)
                        .map_err(|_| unsupported(offset, "malformed number"))
                }
            }
            Some(Token::Word(word)) => {
                if let Some(column) = Column::parse(&word) {
                    self.pos += 1;
                    return Ok(Expr::Column(column));
                }
                if let Some(func) = Func::parse(&word) {
                    self.pos += 1;
                    self.expect_symbol("(")?;
                    let mut args = vec![self.additive()?];
                    while self.eat_symbol(",") {
                        args.push(self.additive()?);
                    }
                    self.expect_symbol(")")?;
                    if args.len() != func.arity() {
                        return Err(unsupported(offset, format!("{word} takes {} arguments", func.arity())));
                    }
                    return Ok(Expr::Call(func, args));
                }
                self.fail(format!("unsupported identifier {word}"))
            }
            _ => self.fail("expected an expression"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

impl Value {
    fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(f) => Some(*f),
            _ => None,
        }
    }
}

struct Row<'a> {
    t: &'a Transmitter,
    params: &'a [SqlValue],
}

impl Row<'_> {
    fn column(&self, c: Column) -> Value {
        let t = self.t;
        match c {
            Column::Name => Value::Text(t.name().to_string()),
            Column::Latitude => t.location().map_or(Value::Null, |p| Value::Float(p.lat())),
            Column::Longitude => t.location().map_or(Value::Null, |p| Value::Float(p.lon())),
            Column::HoursFrom => Value::Int(t.hours().from().minutes() as i64),
            Column::HoursTo => Value::Int(t.hours().to().minutes() as i64),
            Column::FreqLow => Value::Int(t.band().low_hz() as i64),
            Column::FreqHigh => Value::Int(t.band().high_hz() as i64),
        }
    }

    fn eval(&self, e: &Expr) -> Result<Value, SqlError> {
        let type_error = |what: &str| unsupported(0, format!("type error: {what}"));
        Ok(match e {
            Expr::Column(c) => self.column(*c),
            Expr::Param(n) => match n.checked_sub(1).and_then(|i| self.params.get(i)) {
                Some(SqlValue::Text(s)) => Value::Text(s.clone()),
                Some(SqlValue::Int(i)) => Value::Int(*i),
                Some(SqlValue::Float(f)) => Value::Float(*f),
                None => return Err(unsupported(0, format!("unbound placeholder ${n}"))),
            },
            Expr::Int(i) => Value::Int(*i),
            Expr::Float(f) => Value::Float(*f),
            Expr::Neg(inner) => match self.eval(inner)? {
                Value::Null => Value::Null,
                Value::Int(i) => Value::Int(-i),
                Value::Float(f) => Value::Float(-f),
                _ => return Err(type_error("negating a non-number")),
            },
            Expr::Arith(op, lhs, rhs) => {
                let (l, r) = (self.eval(lhs)?, self.eval(rhs)?);
                if l == Value::Null || r == Value::Null {
                    return Ok(Value::Null);
                }
                match (&l, &r, op) {
                    (Value::Int(a), Value::Int(b), ArithOp::Add) => Value::Int(a + b),
                    (Value::Int(a), Value::Int(b), ArithOp::Sub) => Value::Int(a - b),
                    (Value::Int(a), Value::Int(b), ArithOp::Mul) => Value::Int(a * b),
                    _ => {
                        let a = l.as_f64().ok_or_else(|| type_error("arithmetic on non-number"))?;
                        let b = r.as_f64().ok_or_else(|| type_error("arithmetic on non-number"))?;
                        Value::Float(match op {
                            ArithOp::Add => a + b,
                            ArithOp::Sub => a - b,
                            ArithOp::Mul => a * b,
                            ArithOp::Div => a / b,
                        })
                    }
                }
            }
            Expr::Call(func, args) => {
                let values = args.iter().map(|a| self.eval(a)).collect::<Result<Vec<_>, _>>()?;
                if values.contains(&Value::Null) {
                    return Ok(Value::Null);
                }
                let x = values[0].as_f64().ok_or_else(|| type_error("function of non-number"))?;
                Value::Float(match func {
                    Func::Radians => x.to_radians(),
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Asin => x.asin(),
                    Func::Sqrt => x.sqrt(),
                    Func::Power | Func::Least => {
                        let y = values[1].as_f64().ok_or_else(|| type_error("function of non-number"))?;
                        if *func == Func::Least {
                            x.min(y)
                        } else if y == 2.0 {
                            x.powi(2)
                        } else {
                            x.powf(y)
                        }
                    }
                })
            }
            Expr::Cmp(op, lhs, rhs) => {
                let (l, r) = (self.eval(lhs)?, self.eval(rhs)?);
                let ordering = match (&l, &r) {
                    (Value::Null, _) | (_, Value::Null) => return Ok(Value::Null),
                    (Value::Text(a), Value::Text(b)) => a.cmp(b),
                    (Value::Int(a), Value::Int(b)) => a.cmp(b),
                    _ => {
                        let a = l.as_f64().ok_or_else(|| type_error("comparing incompatible values"))?;
                        let b = r.as_f64().ok_or_else(|| type_error("comparing incompatible values"))?;
                        match a.partial_cmp(&b) {
                            Some(o) => o,
                            // NaN compares as unknown.
                            None => return Ok(Value::Null),
                        }
                    }
                };
                use std::cmp::Ordering::*;
                Value::Bool(match op {
                    CmpOp::Eq => ordering == Equal,
                    CmpOp::Ne => ordering != Equal,
                    CmpOp::Lt => ordering == Less,
                    CmpOp::Le => ordering != Greater,
                    CmpOp::Gt => ordering == Greater,
                    CmpOp::Ge => ordering != Less,
                })
            }
            Expr::IsNull { expr, negated } => Value::Bool((self.eval(expr)? == Value::Null) != *negated),
            Expr::Not(inner) => match self.truth(inner)? {
                Some(b) => Value::Bool(!b),
                None => Value::Null,
            },
            Expr::And(lhs, rhs) => match (self.truth(lhs)?, self.truth(rhs)?) {
                (Some(false), _) | (_, Some(false)) => Value::Bool(false),
                (Some(true), Some(true)) => Value::Bool(true),
                _ => Value::Null,
            },
            Expr::Or(lhs, rhs) => match (self.truth(lhs)?, self.truth(rhs)?) {
                (Some(true), _) | (_, Some(true)) => Value::Bool(true),
                (Some(false), Some(false)) => Value::Bool(false),
                _ => Value::Null,
            },
        })
    }

    /// Three-valued truth: `None` is SQL unknown.
    fn truth(&self, e: &Expr) -> Result<Option<bool>, SqlError> {
        match self.eval(e)? {
            Value::Bool(b) => Ok(Some(b)),
            Value::Null => Ok(None),
            _ => Err(unsupported(0, "type error: non-boolean condition")),
        }
    }
}

/// Runs an emitted statement over `d`. A row is returned only when the
/// WHERE expression is true; false and unknown both reject it.
pub fn interpret<'d>(s: &SqlStatement, d: &'d Dataset) -> Result<Vec<&'d Transmitter>, SqlError> {
    let mut parser = SqlParser {
        tokens: tokenize(&s.text)?,
        pos: 0,
        end: s.text.len(),
    };
    let predicate = parser.statement()?;
    let mut hits = Vec::new();
    for t in d {
        let row = Row { t, params: &s.params };
        if row.truth(&predicate)? == Some(true) {
            hits.push(t);
        }
    }
    hits.sort_by(|a, b| a.name().cmp(b.name()));
    Ok(hits)
}
