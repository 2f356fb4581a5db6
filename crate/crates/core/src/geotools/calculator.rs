//! Recursive-descent arithmetic evaluator.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := unary ('^' factor)?
//! unary  := '-' unary | atom
//! atom   := number | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds looser than unary minus, so `-2^2 == 4`.
//! Trig functions take radians.

use thiserror::Error;

pub const MAX_EXPRESSION_LEN: usize = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalcError {
    #[error("parse error at position {position}: {detail}")]
    ParseError { position: usize, detail: String },
    #[error("division by zero")]
    DivisionByZero,
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("`{name}` expects {expected} argument(s), got {got}")]
    Arity {
        name: String,
        expected: &'static str,
        got: usize,
    },
    #[error("domain error: {0}")]
    DomainError(String),
}

/// Evaluates `expression` to a finite `f64`.
pub fn calculator_eval(expression: &str) -> Result<f64, CalcError> {
    if expression.trim().is_empty() {
        return Err(CalcError::ParseError {
            position: 0,
            detail: "empty expression".into(),
        });
    }
    if expression.len() > MAX_EXPRESSION_LEN {
        return Err(CalcError::ParseError {
            position: MAX_EXPRESSION_LEN,
            detail: format!("expression longer than {MAX_EXPRESSION_LEN} bytes"),
        });
    }
    let mut p = Parser {
        src: expression.as_bytes(),
        pos: 0,
    };
    let value = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    finite(value, "result")
}

fn finite(v: f64, what: &str) -> Result<f64, CalcError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CalcError::DomainError(format!("{what} is not a finite number")))
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, detail: &str) -> CalcError {
        CalcError::ParseError {
            position: self.pos,
            detail: detail.to_owned(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<f64, CalcError> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc += self.term()?;
            } else if self.eat(b'-') {
                acc -= self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<f64, CalcError> {
        let mut acc = self.factor()?;
        loop {
            if self.eat(b'*') {
                acc *= self.factor()?;
            } else if self.eat(b'/') {
                let rhs = self.factor()?;
                if rhs == 0.0 {
                    return Err(CalcError::DivisionByZero);
                }
                acc /= rhs;
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<f64, CalcError> {
        let base = self.unary()?;
        if self.eat(b'^') {
            let exp = self.factor()?;
            return power(base, exp);
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<f64, CalcError> {
        if self.eat(b'-') {
            return Ok(-self.unary()?);
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<f64, CalcError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.call(),
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<f64, CalcError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            self.pos = start;
            return Err(self.error("malformed number"));
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = mark;
                return Err(self.error("malformed exponent"));
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        text.parse::<f64>().map_err(|_| CalcError::ParseError {
            position: start,
            detail: format!("malformed number `{text}`"),
        })
    }

    fn call(&mut self) -> Result<f64, CalcError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos])
            .expect("ascii slice")
            .to_owned();
        if !self.eat(b'(') {
            return Err(CalcError::ParseError {
                position: start,
                detail: format!("`{name}` must be called as a function"),
            });
        }
        let mut args = vec![self.expr()?];
        while self.eat(b',') {
            args.push(self.expr()?);
        }
        if !self.eat(b')') {
            return Err(self.error("expected `)` or `,`"));
        }
        apply(&name, &args)
    }
}

fn power(base: f64, exp: f64) -> Result<f64, CalcError> {
    if base == 0.0 && exp < 0.0 {
        return Err(CalcError::DivisionByZero);
    }
    let v = base.powf(exp);
    if v.is_nan() {
        return Err(CalcError::DomainError(format!("{base}^{exp} is undefined")));
    }
    finite(v, "power")
}

fn apply(name: &str, args: &[f64]) -> Result<f64, CalcError> {
    let arity = |expected: &'static str, ok: bool| {
        if ok {
            Ok(())
        } else {
            Err(CalcError::Arity {
                name: name.to_owned(),
                expected,
                got: args.len(),
            })
        }
    };
    match name {
        "sqrt" => {
            arity("1", args.len() == 1)?;
            if args[0] < 0.0 {
                return Err(CalcError::DomainError(format!("sqrt of negative {}", args[0])));
            }
            Ok(args[0].sqrt())
        }
        "abs" => {
            arity("1", args.len() == 1)?;
            Ok(args[0].abs())
        }
        "sin" | "cos" | "tan" => {
            arity("1", args.len() == 1)?;
            let v = match name {
                "sin" => args[0].sin(),
                "cos" => args[0].cos(),
                _ => args[0].tan(),
            };
            finite(v, name)
        }
        "atan2" => {
            arity("2", args.len() == 2)?;
            Ok(args[0].atan2(args[1]))
        }
        "pow" => {
            arity("2", args.len() == 2)?;
            power(args[0], args[1])
        }
        "min" => {
            arity("at least 1", !args.is_empty())?;
            Ok(args.iter().copied().fold(f64::INFINITY, f64::min))
        }
        "max" => {
            arity("at least 1", !args.is_empty())?;
            Ok(args.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        }
        other => Err(CalcError::UnknownFunction(other.to_owned())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_arithmetic() {
        assert_eq!(calculator_eval("2*(3+4)").unwrap(), 14.0);
        assert_eq!(calculator_eval("1 + 2 * 3").unwrap(), 7.0);
        assert_eq!(calculator_eval("10 - 4 - 3").unwrap(), 3.0);
        assert_eq!(calculator_eval("8 / 4 / 2").unwrap(), 1.0);
    }

    #[test]
    fn centroid_distance_times_gsd() {
        let v = calculator_eval("sqrt((200-100)^2 + (100-100)^2) * 0.072").unwrap();
        assert!((v - 7.2).abs() < 1e-12, "{v}");
    }

    #[test]
    fn power_is_right_associative_and_below_unary_minus() {
        assert_eq!(calculator_eval("2^3^2").unwrap(), 512.0);
        assert_eq!(calculator_eval("-2^2").unwrap(), 4.0);
        assert_eq!(calculator_eval("0-2^2").unwrap(), -4.0);
        assert_eq!(calculator_eval("--3").unwrap(), 3.0);
    }

    #[test]
    fn functions() {
        assert_eq!(calculator_eval("max(1, 5, 3)").unwrap(), 5.0);
        assert_eq!(calculator_eval("min(4)").unwrap(), 4.0);
        assert_eq!(calculator_eval("abs(-2.5)").unwrap(), 2.5);
        assert_eq!(calculator_eval("pow(2, 10)").unwrap(), 1024.0);
        assert!((calculator_eval("atan2(1, 1)").unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert_eq!(calculator_eval("1.5e2").unwrap(), 150.0);
        assert_eq!(calculator_eval(".5").unwrap(), 0.5);
    }

    #[test]
    fn errors() {
        assert_eq!(calculator_eval("1/0"), Err(CalcError::DivisionByZero));
        assert_eq!(calculator_eval("0^-1"), Err(CalcError::DivisionByZero));
        assert!(matches!(calculator_eval("sqrt(-1)"), Err(CalcError::DomainError(_))));
        assert!(matches!(calculator_eval("(-8)^0.5"), Err(CalcError::DomainError(_))));
        assert!(matches!(calculator_eval("10^400"), Err(CalcError::DomainError(_))));
        assert_eq!(
            calculator_eval("log(3)"),
            Err(CalcError::UnknownFunction("log".into()))
        );
        assert!(matches!(calculator_eval("sqrt(1, 2)"), Err(CalcError::Arity { .. })));
        assert!(matches!(
            calculator_eval("2 +"),
            Err(CalcError::ParseError { position: 3, .. })
        ));
        assert!(matches!(calculator_eval("(1"), Err(CalcError::ParseError { .. })));
        assert!(matches!(calculator_eval("2 3"), Err(CalcError::ParseError { position: 2, .. })));
        assert!(matches!(calculator_eval("pi"), Err(CalcError::ParseError { .. })));
        assert!(matches!(calculator_eval("2**3"), Err(CalcError::ParseError { .. })));
        assert!(matches!(calculator_eval(""), Err(CalcError::ParseError { .. })));
        assert!(matches!(calculator_eval("1e"), Err(CalcError::ParseError { .. })));
        let long = "1+".repeat(2049) + "1";
        assert!(matches!(calculator_eval(&long), Err(CalcError::ParseError { .. })));
    }
}
