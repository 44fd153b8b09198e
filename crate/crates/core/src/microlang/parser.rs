//! Recursive-descent parser for the brace form of the Microlanguage.
//!
//! ```text
//! S -> S S | for(Unit u) { S } | if(B) [then] { S } [else { S }] | C | e | λ
//! ```
//!
//! Commands may be followed by an optional `;`. `//` starts a line comment.

use super::ast::*;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("{line}:{column}: syntax error in `{production}`: expected {expected}, found {found}")]
    Syntax {
        line: usize,
        column: usize,
        production: &'static str,
        expected: String,
        found: String,
    },
    #[error("{line}:{column}: unknown identifier `{name}` (expected {expected})")]
    UnknownIdentifier {
        line: usize,
        column: usize,
        name: String,
        expected: String,
    },
    #[error("{line}:{column}: `{function}` takes {expected} argument(s), found {found}")]
    Arity {
        line: usize,
        column: usize,
        function: String,
        expected: usize,
        found: usize,
    },
}

impl ParseError {
    pub fn position(&self) -> (usize, usize) {
        match *self {
            ParseError::Syntax { line, column, .. }
            | ParseError::UnknownIdentifier { line, column, .. }
            | ParseError::Arity { line, column, .. } => (line, column),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Number(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Dot,
    Semi,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(s) => format!("`{s}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(source: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = source.chars().collect();
    let (mut i, mut line, mut column) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, column);
        if c == '\n' {
            i += 1;
            line += 1;
            column = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            column += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            ',' => Some(Tok::Comma),
            '.' => Some(Tok::Dot),
            ';' => Some(Tok::Semi),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Token {
                tok,
                line: tl,
                column: tc,
            });
            i += 1;
            column += 1;
            continue;
        }
        if c.is_ascii_digit() || c.is_alphabetic() || c == '_' {
            let start = i;
            let numeric = c.is_ascii_digit();
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            column += i - start;
            let tok = if numeric && text.chars().all(|ch| ch.is_ascii_digit()) {
                Tok::Number(text)
            } else {
                Tok::Ident(text)
            };
            out.push(Token {
                tok,
                line: tl,
                column: tc,
            });
            continue;
        }
        return Err(ParseError::Syntax {
            line: tl,
            column: tc,
            production: "token",
            expected: "identifier, number or punctuation".into(),
            found: format!("`{c}`"),
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column,
    });
    Ok(out)
}

/// Parses Microlanguage source text into a [`Program`].
pub fn parse(source: &str) -> Result<Program, ParseError> {
    let tokens = lex(source)?;
    let mut p = Parser { tokens, pos: 0 };
    let statements = p.statements()?;
    if p.peek().tok != Tok::Eof {
        return Err(p.error("S → S S", "statement or end of input"));
    }
    Ok(Program { statements })
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

const P_FOR: &str = "S → for(Unit u) S";
const P_IF: &str = "S → if(B) then S [else S]";
const P_CMD: &str = "S → C";

enum Arg {
    Ident(String),
    Number(String),
}

struct ArgTok {
    arg: Arg,
    line: usize,
    column: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, production: &'static str, expected: &str) -> ParseError {
        let t = self.peek();
        ParseError::Syntax {
            line: t.line,
            column: t.column,
            production,
            expected: expected.into(),
            found: t.tok.describe(),
        }
    }

    fn expect(&mut self, tok: Tok, production: &'static str) -> Result<Token, ParseError> {
        if self.peek().tok == tok {
            Ok(self.next())
        } else {
            Err(self.error(production, &tok.describe()))
        }
    }

    fn expect_ident(&mut self, name: &str, production: &'static str) -> Result<(), ParseError> {
        match &self.peek().tok {
            Tok::Ident(s) if s == name => {
                self.next();
                Ok(())
            }
            _ => Err(self.error(production, &format!("`{name}`"))),
        }
    }

    fn statements(&mut self) -> Result<Vec<Statement>, ParseError> {
        let mut out = Vec::new();
        loop {
            match &self.peek().tok {
                Tok::Eof | Tok::RBrace => return Ok(out),
                Tok::Semi => {
                    self.next();
                }
                _ => out.push(self.statement()?),
            }
        }
    }

    fn block(&mut self, production: &'static str) -> Result<Vec<Statement>, ParseError> {
        self.expect(Tok::LBrace, production)?;
        let body = self.statements()?;
        self.expect(Tok::RBrace, production)?;
        Ok(body)
    }

    fn statement(&mut self) -> Result<Statement, ParseError> {
        let head = match &self.peek().tok {
            Tok::Ident(s) => s.clone(),
            _ => return Err(self.error("S", "`for`, `if`, `e` or `u.<command>`")),
        };
        match head.as_str() {
            "for" => {
                self.next();
                self.expect(Tok::LParen, P_FOR)?;
                self.expect_ident("Unit", P_FOR)?;
                self.expect_ident("u", P_FOR)?;
                self.expect(Tok::RParen, P_FOR)?;
                let body = self.block(P_FOR)?;
                Ok(Statement::For { body })
            }
            "if" => {
                self.next();
                self.expect(Tok::LParen, P_IF)?;
                let cond = self.bool_expr()?;
                self.expect(Tok::RParen, P_IF)?;
                if matches!(&self.peek().tok, Tok::Ident(s) if s == "then") {
                    self.next();
                }
                let then = self.block(P_IF)?;
                if matches!(&self.peek().tok, Tok::Ident(s) if s == "else") {
                    self.next();
                    let otherwise = self.block(P_IF)?;
                    Ok(Statement::IfElse {
                        cond,
                        then,
                        otherwise,
                    })
                } else {
                    Ok(Statement::If { cond, then })
                }
            }
            "e" => {
                self.next();
                Ok(Statement::Empty)
            }
            "u" => {
                let command = self.command()?;
                if self.peek().tok == Tok::Semi {
                    self.next();
                }
                Ok(Statement::Command { command })
            }
            _ => {
                let t = self.peek();
                Err(ParseError::UnknownIdentifier {
                    line: t.line,
                    column: t.column,
                    name: head,
                    expected: "`for`, `if`, `e` or `u`".into(),
                })
            }
        }
    }

    /// Parses `u.name(args)` and returns the name token position plus raw args.
    fn call(&mut self, production: &'static str) -> Result<(Token, String, Vec<ArgTok>), ParseError> {
        self.expect_ident("u", production)?;
        self.expect(Tok::Dot, production)?;
        let name_tok = self.next();
        let name = match &name_tok.tok {
            Tok::Ident(s) => s.clone(),
            other => {
                return Err(ParseError::Syntax {
                    line: name_tok.line,
                    column: name_tok.column,
                    production,
                    expected: "function name".into(),
                    found: other.describe(),
                })
            }
        };
        self.expect(Tok::LParen, production)?;
        let mut args = Vec::new();
        if self.peek().tok != Tok::RParen {
            loop {
                let t = self.next();
                let arg = match t.tok {
                    Tok::Ident(s) => Arg::Ident(s),
                    Tok::Number(s) => Arg::Number(s),
                    other => {
                        return Err(ParseError::Syntax {
                            line: t.line,
                            column: t.column,
                            production,
                            expected: "argument".into(),
                            found: other.describe(),
                        })
                    }
                };
                args.push(ArgTok {
                    arg,
                    line: t.line,
                    column: t.column,
                });
                if self.peek().tok == Tok::Comma {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, production)?;
        Ok((name_tok, name, args))
    }

    fn bool_expr(&mut self) -> Result<BoolExpr, ParseError> {
        let (tok, name, args) = self.call("B")?;
        let arity = |n: usize| check_arity(&tok, &name, n, args.len());
        let b = match name.as_str() {
            "hasNumberOfUnits" => {
                arity(2)?;
                BoolExpr::HasNumberOfUnits(unit_type(&args[0])?, count(&args[1])?)
            }
            "opponentHasNumberOfUnits" => {
                arity(2)?;
                BoolExpr::OpponentHasNumberOfUnits(unit_type(&args[0])?, count(&args[1])?)
            }
            "hasLessNumberOfUnits" => {
                arity(2)?;
                BoolExpr::HasLessNumberOfUnits(unit_type(&args[0])?, count(&args[1])?)
            }
            "haveQtdUnitsAttacking" => {
                arity(1)?;
                BoolExpr::HaveQtdUnitsAttacking(count(&args[0])?)
            }
            "hasUnitWithinDistanceFromOpponent" => {
                arity(1)?;
                BoolExpr::HasUnitWithinDistanceFromOpponent(count(&args[0])?)
            }
            "hasNumberOfWorkersHarvesting" => {
                arity(1)?;
                BoolExpr::HasNumberOfWorkersHarvesting(count(&args[0])?)
            }
            "is_Type" => {
                arity(1)?;
                BoolExpr::IsType(unit_type(&args[0])?)
            }
            "isBuilder" => arity(0).map(|_| BoolExpr::IsBuilder)?,
            "canAttack" => arity(0).map(|_| BoolExpr::CanAttack)?,
            "hasUnitThatKillsInOneAttack" => arity(0).map(|_| BoolExpr::HasUnitThatKillsInOneAttack)?,
            "opponentHasUnitThatKillsUnitInOneAttack" => {
                arity(0).map(|_| BoolExpr::OpponentHasUnitThatKillsUnitInOneAttack)?
            }
            "hasUnitInOpponentRange" => arity(0).map(|_| BoolExpr::HasUnitInOpponentRange)?,
            "opponentHasUnitInPlayerRange" => {
                arity(0).map(|_| BoolExpr::OpponentHasUnitInPlayerRange)?
            }
            "canHarvest" => arity(0).map(|_| BoolExpr::CanHarvest)?,
            _ => {
                return Err(ParseError::UnknownIdentifier {
                    line: tok.line,
                    column: tok.column,
                    name,
                    expected: "boolean function (B)".into(),
                })
            }
        };
        Ok(b)
    }

    fn command(&mut self) -> Result<Command, ParseError> {
        let (tok, name, args) = self.call(P_CMD)?;
        let arity = |n: usize| check_arity(&tok, &name, n, args.len());
        let c = match name.as_str() {
            "build" => {
                arity(3)?;
                Command::Build(unit_type(&args[0])?, direction(&args[1])?, count(&args[2])?)
            }
            "train" => {
                arity(3)?;
                Command::Train(unit_type(&args[0])?, direction(&args[1])?, count(&args[2])?)
            }
            "moveToUnit" => {
                arity(2)?;
                Command::MoveToUnit(target_player(&args[0])?, criterion(&args[1])?)
            }
            "attack" => {
                arity(1)?;
                Command::Attack(criterion(&args[0])?)
            }
            "harvest" => {
                arity(1)?;
                Command::Harvest(count(&args[0])?)
            }
            "idle" => arity(0).map(|_| Command::Idle)?,
            "moveAway" => arity(0).map(|_| Command::MoveAway)?,
            "attack_if_in_range" => arity(0).map(|_| Command::AttackIfInRange)?,
            _ => {
                return Err(ParseError::UnknownIdentifier {
                    line: tok.line,
                    column: tok.column,
                    name,
                    expected: "command function (C)".into(),
                })
            }
        };
        Ok(c)
    }
}

fn check_arity(tok: &Token, name: &str, expected: usize, found: usize) -> Result<(), ParseError> {
    if expected == found {
        Ok(())
    } else {
        Err(ParseError::Arity {
            line: tok.line,
            column: tok.column,
            function: name.to_string(),
            expected,
            found,
        })
    }
}

fn unknown(a: &ArgTok, expected: &str) -> ParseError {
    let name = match &a.arg {
        Arg::Ident(s) | Arg::Number(s) => s.clone(),
    };
    ParseError::UnknownIdentifier {
        line: a.line,
        column: a.column,
        name,
        expected: expected.into(),
    }
}

fn ident<'a>(a: &'a ArgTok) -> Option<&'a str> {
    match &a.arg {
        Arg::Ident(s) => Some(s),
        Arg::Number(_) => None,
    }
}

fn unit_type(a: &ArgTok) -> Result<UnitType, ParseError> {
    ident(a)
        .and_then(UnitType::from_name)
        .ok_or_else(|| unknown(a, "unit type (T)"))
}

fn direction(a: &ArgTok) -> Result<Direction, ParseError> {
    ident(a)
        .and_then(Direction::from_name)
        .ok_or_else(|| unknown(a, "direction (D)"))
}

fn criterion(a: &ArgTok) -> Result<Criterion, ParseError> {
    ident(a)
        .and_then(Criterion::from_name)
        .ok_or_else(|| unknown(a, "opponent criterion (O_p)"))
}

fn target_player(a: &ArgTok) -> Result<TargetPlayer, ParseError> {
    ident(a)
        .and_then(TargetPlayer::from_name)
        .ok_or_else(|| unknown(a, "target player (T_p)"))
}

fn count(a: &ArgTok) -> Result<u32, ParseError> {
    match &a.arg {
        Arg::Number(s) => s
            .parse::<u32>()
            .ok()
            .filter(|n| is_valid_count(*n) && s == &n.to_string())
            .ok_or_else(|| unknown(a, "integer in N")),
        Arg::Ident(_) => Err(unknown(a, "integer in N")),
    }
}
