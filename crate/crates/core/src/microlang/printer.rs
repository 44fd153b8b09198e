use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "    ";

/// Canonical brace-style rendering. `parse(&print(p)) == p` for every valid `p`.
pub fn print(p: &Program) -> String {
    let mut out = String::new();
    block(&mut out, &p.statements, 0);
    if out.ends_with('\n') {
        out.pop();
    }
    out
}

fn block(out: &mut String, stmts: &[Statement], depth: usize) {
    for s in stmts {
        statement(out, s, depth);
    }
}

fn pad(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str(INDENT);
    }
}

fn statement(out: &mut String, s: &Statement, depth: usize) {
    pad(out, depth);
    match s {
        Statement::For { body } => {
            out.push_str("for(Unit u){\n");
            block(out, body, depth + 1);
            pad(out, depth);
            out.push_str("}\n");
        }
        Statement::If { cond, then } => {
            let _ = writeln!(out, "if({}) then {{", bool_expr(cond));
            block(out, then, depth + 1);
            pad(out, depth);
            out.push_str("}\n");
        }
        Statement::IfElse {
            cond,
            then,
            otherwise,
        } => {
            let _ = writeln!(out, "if({}) then {{", bool_expr(cond));
            block(out, then, depth + 1);
            pad(out, depth);
            out.push_str("} else {\n");
            block(out, otherwise, depth + 1);
            pad(out, depth);
            out.push_str("}\n");
        }
        Statement::Command { command } => {
            out.push_str(&command_expr(command));
            out.push('\n');
        }
        Statement::Empty => out.push_str("e\n"),
    }
}

pub fn bool_expr(b: &BoolExpr) -> String {
    let args = match *b {
        BoolExpr::HasNumberOfUnits(t, n)
        | BoolExpr::OpponentHasNumberOfUnits(t, n)
        | BoolExpr::HasLessNumberOfUnits(t, n) => format!("{},{n}", t.name()),
        BoolExpr::HaveQtdUnitsAttacking(n)
        | BoolExpr::HasUnitWithinDistanceFromOpponent(n)
        | BoolExpr::HasNumberOfWorkersHarvesting(n) => n.to_string(),
        BoolExpr::IsType(t) => t.name().to_string(),
        _ => String::new(),
    };
    format!("u.{}({args})", b.name())
}

pub fn command_expr(c: &Command) -> String {
    let args = match *c {
        Command::Build(t, d, n) | Command::Train(t, d, n) => {
            format!("{},{},{n}", t.name(), d.name())
        }
        Command::MoveToUnit(tp, op) => format!("{},{}", tp.name(), op.name()),
        Command::Attack(op) => op.name().to_string(),
        Command::Harvest(n) => n.to_string(),
        Command::Idle | Command::MoveAway | Command::AttackIfInRange => String::new(),
    };
    format!("u.{}({args})", c.name())
}
