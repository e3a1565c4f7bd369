//! Reading input bindings back from their repr, e.g. `{'n': 17, 'k': 3}`.

use crate::lang::ast::{Expr, ExprKind, UnaryOp};
use crate::lang::parse_expression;

use super::ops::{negate, to_key};
use super::value::{Bindings, MappingData, Value};

/// Evaluates an expression made only of literals and unary signs.
pub fn literal_value(expr: &Expr) -> Result<Value, String> {
    let all = |items: &[Expr]| items.iter().map(literal_value).collect::<Result<Vec<_>, _>>();
    Ok(match &expr.kind {
        ExprKind::Int(i) => Value::Int(*i),
        ExprKind::Float(f) => Value::Float(*f),
        ExprKind::Str(s) => Value::text(s),
        ExprKind::Bool(b) => Value::Bool(*b),
        ExprKind::NoneLit => Value::None,
        ExprKind::List(items) => Value::seq(all(items)?),
        ExprKind::Tuple(items) => Value::tuple(all(items)?),
        ExprKind::Dict(pairs) => {
            let mut m = MappingData::new();
            for (k, v) in pairs {
                let key = to_key(&literal_value(k)?).map_err(|_| "mapping keys must be int or str".to_string())?;
                m.insert(key, literal_value(v)?);
            }
            Value::mapping(m)
        }
        ExprKind::Unary { op: UnaryOp::Neg, operand } => {
            negate(&literal_value(operand)?).map_err(|_| "cannot negate literal".to_string())?
        }
        ExprKind::Unary { op: UnaryOp::Pos, operand } => literal_value(operand)?,
        _ => return Err(format!("not a literal (line {})", expr.line)),
    })
}

/// Parses a binding written as a mapping literal with text keys.
pub fn bindings_from_repr(text: &str) -> Result<Bindings, String> {
    let expr = parse_expression(text).map_err(|e| e.to_string())?;
    let ExprKind::Dict(pairs) = &expr.kind else {
        return Err("input must be a mapping literal".into());
    };
    let mut out = Bindings::new();
    for (k, v) in pairs {
        let ExprKind::Str(name) = &k.kind else {
            return Err("input names must be text".into());
        };
        out.insert(name.clone(), literal_value(v)?);
    }
    Ok(out)
}
