//! Operator, comparison and subscript semantics.

use std::cmp::Ordering;
use std::rc::Rc;

use super::trace::BudgetKind;
use super::value::{Key, Value};
use crate::lang::ast::{BinOp, CmpOp};

#[derive(Debug, Clone, PartialEq)]
pub enum Halt {
    Error(String),
    Budget(BudgetKind),
}

pub type Res<T> = Result<T, Halt>;

pub fn err<T>(msg: impl Into<String>) -> Res<T> {
    Err(Halt::Error(msg.into()))
}

pub fn type_error<T>(msg: impl AsRef<str>) -> Res<T> {
    err(format!("TypeError: {}", msg.as_ref()))
}

fn overflow<T>() -> Res<T> {
    err("OverflowError: integer overflow")
}

/// Collection-size guard shared by operators and builtins.
#[derive(Debug, Clone, Copy)]
pub struct SizeGuard {
    pub max_len: usize,
}

impl SizeGuard {
    pub fn check(self, len: usize) -> Res<()> {
        if len > self.max_len {
            Err(Halt::Budget(BudgetKind::CollectionSize))
        } else {
            Ok(())
        }
    }
}

enum Num {
    I(i64),
    F(f64),
}

fn as_num(v: &Value) -> Option<Num> {
    match v {
        Value::Int(i) => Some(Num::I(*i)),
        Value::Bool(b) => Some(Num::I(i64::from(*b))),
        Value::Float(f) => Some(Num::F(*f)),
        _ => None,
    }
}

pub fn as_index(v: &Value) -> Option<i64> {
    match v {
        Value::Int(i) => Some(*i),
        Value::Bool(b) => Some(i64::from(*b)),
        _ => None,
    }
}

fn py_fmod(a: f64, b: f64) -> f64 {
    let r = a % b;
    if r != 0.0 && ((r < 0.0) != (b < 0.0)) {
        r + b
    } else {
        r
    }
}

fn int_floordiv(a: i64, b: i64) -> Res<i64> {
    if b == 0 {
        return err("ZeroDivisionError: integer division or modulo by zero");
    }
    let q = a.checked_div(b).ok_or(()).or_else(|_| overflow())?;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        Ok(q - 1)
    } else {
        Ok(q)
    }
}

fn int_mod(a: i64, b: i64) -> Res<i64> {
    if b == 0 {
        return err("ZeroDivisionError: integer division or modulo by zero");
    }
    let r = a.checked_rem(b).unwrap_or(0);
    if r != 0 && ((r < 0) != (b < 0)) {
        Ok(r + b)
    } else {
        Ok(r)
    }
}

fn float_op(op: BinOp, a: f64, b: f64) -> Res<Value> {
    let v = match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => {
            if b == 0.0 {
                return err("ZeroDivisionError: float division by zero");
            }
            a / b
        }
        BinOp::FloorDiv => {
            if b == 0.0 {
                return err("ZeroDivisionError: float floor division by zero");
            }
            ((a - py_fmod(a, b)) / b).round()
        }
        BinOp::Mod => {
            if b == 0.0 {
                return err("ZeroDivisionError: float modulo");
            }
            py_fmod(a, b)
        }
        BinOp::Pow => {
            if a == 0.0 && b < 0.0 {
                return err("ZeroDivisionError: 0.0 cannot be raised to a negative power");
            }
            if a < 0.0 && b.fract() != 0.0 {
                return err("ValueError: negative number cannot be raised to a fractional power");
            }
            let r = a.powf(b);
            if r.is_infinite() && a.is_finite() && b.is_finite() {
                return err("OverflowError: numerical result out of range");
            }
            r
        }
    };
    Ok(Value::Float(v))
}

fn int_op(op: BinOp, a: i64, b: i64) -> Res<Value> {
    let v = match op {
        BinOp::Add => a.checked_add(b),
        BinOp::Sub => a.checked_sub(b),
        BinOp::Mul => a.checked_mul(b),
        BinOp::Div => {
            if b == 0 {
                return err("ZeroDivisionError: division by zero");
            }
            return Ok(Value::Float(a as f64 / b as f64));
        }
        BinOp::FloorDiv => return int_floordiv(a, b).map(Value::Int),
        BinOp::Mod => return int_mod(a, b).map(Value::Int),
        BinOp::Pow => {
            if b < 0 {
                return float_op(BinOp::Pow, a as f64, b as f64);
            }
            u32::try_from(b).ok().and_then(|e| a.checked_pow(e))
        }
    };
    v.map(Value::Int).ok_or(()).or_else(|_| overflow())
}

fn repeat<T: Clone>(items: &[T], n: i64, guard: SizeGuard) -> Res<Vec<T>> {
    let n = n.max(0) as usize;
    let total = items.len().checked_mul(n).ok_or(Halt::Budget(BudgetKind::CollectionSize))?;
    guard.check(total)?;
    let mut out = Vec::with_capacity(total);
    for _ in 0..n {
        out.extend_from_slice(items);
    }
    Ok(out)
}

pub fn binary(op: BinOp, left: &Value, right: &Value, guard: SizeGuard) -> Res<Value> {
    if let (Some(a), Some(b)) = (as_num(left), as_num(right)) {
        return match (a, b) {
            (Num::I(a), Num::I(b)) => int_op(op, a, b),
            (Num::I(a), Num::F(b)) => float_op(op, a as f64, b),
            (Num::F(a), Num::I(b)) => float_op(op, a, b as f64),
            (Num::F(a), Num::F(b)) => float_op(op, a, b),
        };
    }
    match (op, left, right) {
        (BinOp::Add, Value::Text(a), Value::Text(b)) => {
            guard.check(a.chars().count() + b.chars().count())?;
            Ok(Value::Text(Rc::from(format!("{a}{b}"))))
        }
        (BinOp::Add, Value::Sequence(a), Value::Sequence(b)) => {
            let mut out = a.borrow().clone();
            out.extend(b.borrow().iter().cloned());
            guard.check(out.len())?;
            Ok(Value::seq(out))
        }
        (BinOp::Add, Value::Tuple(a), Value::Tuple(b)) => {
            guard.check(a.len() + b.len())?;
            Ok(Value::tuple(a.iter().chain(b.iter()).cloned().collect()))
        }
        (BinOp::Mul, Value::Text(s), n) | (BinOp::Mul, n, Value::Text(s)) if as_index(n).is_some() => {
            let chars: Vec<char> = s.chars().collect();
            let out = repeat(&chars, as_index(n).unwrap_or(0), guard)?;
            Ok(Value::Text(Rc::from(out.into_iter().collect::<String>())))
        }
        (BinOp::Mul, Value::Sequence(items), n) | (BinOp::Mul, n, Value::Sequence(items)) if as_index(n).is_some() => {
            let items = items.borrow().clone();
            Ok(Value::seq(repeat(&items, as_index(n).unwrap_or(0), guard)?))
        }
        (BinOp::Mul, Value::Tuple(items), n) | (BinOp::Mul, n, Value::Tuple(items)) if as_index(n).is_some() => {
            Ok(Value::tuple(repeat(items, as_index(n).unwrap_or(0), guard)?))
        }
        _ => type_error(format!(
            "unsupported operand type(s) for {}: '{}' and '{}'",
            op.symbol(),
            left.type_name(),
            right.type_name()
        )),
    }
}

pub fn negate(v: &Value) -> Res<Value> {
    match as_num(v) {
        Some(Num::I(i)) => i.checked_neg().map(Value::Int).ok_or(()).or_else(|_| overflow()),
        Some(Num::F(f)) => Ok(Value::Float(-f)),
        None => type_error(format!("bad operand type for unary -: '{}'", v.type_name())),
    }
}

pub fn unary_plus(v: &Value) -> Res<Value> {
    match as_num(v) {
        Some(Num::I(i)) => Ok(Value::Int(i)),
        Some(Num::F(f)) => Ok(Value::Float(f)),
        None => type_error(format!("bad operand type for unary +: '{}'", v.type_name())),
    }
}

/// Total order used by `<`, `sorted`, `min` and `max`.
pub fn compare_values(a: &Value, b: &Value) -> Res<Ordering> {
    if let (Some(x), Some(y)) = (as_num(a), as_num(b)) {
        let ord = match (x, y) {
            (Num::I(x), Num::I(y)) => x.cmp(&y),
            (Num::I(x), Num::F(y)) => (x as f64).partial_cmp(&y).unwrap_or(Ordering::Equal),
            (Num::F(x), Num::I(y)) => x.partial_cmp(&(y as f64)).unwrap_or(Ordering::Equal),
            (Num::F(x), Num::F(y)) => x.partial_cmp(&y).unwrap_or(Ordering::Equal),
        };
        return Ok(ord);
    }
    match (a, b) {
        (Value::Text(x), Value::Text(y)) => Ok(x.cmp(y)),
        (Value::Sequence(x), Value::Sequence(y)) => {
            let (x, y) = (x.borrow().clone(), y.borrow().clone());
            compare_slices(&x, &y)
        }
        (Value::Tuple(x), Value::Tuple(y)) => compare_slices(x, y),
        _ => type_error(format!(
            "'<' not supported between instances of '{}' and '{}'",
            a.type_name(),
            b.type_name()
        )),
    }
}

fn compare_slices(x: &[Value], y: &[Value]) -> Res<Ordering> {
    for (a, b) in x.iter().zip(y) {
        if a != b {
            return compare_values(a, b);
        }
    }
    Ok(x.len().cmp(&y.len()))
}

pub fn contains(container: &Value, item: &Value) -> Res<bool> {
    match container {
        Value::Text(s) => match item {
            Value::Text(sub) => Ok(s.contains(&**sub)),
            other => type_error(format!("'in <string>' requires string as left operand, not {}", other.type_name())),
        },
        Value::Sequence(items) => Ok(items.borrow().iter().any(|v| v == item)),
        Value::Tuple(items) => Ok(items.iter().any(|v| v == item)),
        Value::Mapping(m) => Ok(match to_key(item) {
            Ok(k) => m.borrow().contains_key(&k),
            Err(_) => false,
        }),
        other => type_error(format!("argument of type '{}' is not iterable", other.type_name())),
    }
}

pub fn compare(op: CmpOp, a: &Value, b: &Value) -> Res<bool> {
    Ok(match op {
        CmpOp::Eq => a == b,
        CmpOp::Ne => a != b,
        CmpOp::Lt => compare_values(a, b)? == Ordering::Less,
        CmpOp::Le => compare_values(a, b)? != Ordering::Greater,
        CmpOp::Gt => compare_values(a, b)? == Ordering::Greater,
        CmpOp::Ge => compare_values(a, b)? != Ordering::Less,
        CmpOp::In => contains(b, a)?,
        CmpOp::NotIn => !contains(b, a)?,
        CmpOp::Is => identical(a, b),
        CmpOp::IsNot => !identical(a, b),
    })
}

fn identical(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::None, Value::None) => true,
        (Value::Bool(x), Value::Bool(y)) => x == y,
        (Value::Sequence(x), Value::Sequence(y)) => Rc::ptr_eq(x, y),
        (Value::Mapping(x), Value::Mapping(y)) => Rc::ptr_eq(x, y),
        (Value::Tuple(x), Value::Tuple(y)) => Rc::ptr_eq(x, y),
        (Value::Text(x), Value::Text(y)) => x == y,
        (Value::Int(x), Value::Int(y)) => x == y,
        _ => false,
    }
}

pub fn to_key(v: &Value) -> Res<Key> {
    match v {
        Value::Int(i) => Ok(Key::Int(*i)),
        Value::Bool(b) => Ok(Key::Int(i64::from(*b))),
        Value::Float(f) if f.fract() == 0.0 && f.abs() < 9.0e18 => Ok(Key::Int(*f as i64)),
        Value::Text(s) => Ok(Key::Text(s.clone())),
        other => type_error(format!("unsupported mapping key type: '{}'", other.type_name())),
    }
}

fn normalize_index(i: i64, len: usize, what: &str) -> Res<usize> {
    let len_i = len as i64;
    let j = if i < 0 { i + len_i } else { i };
    if j < 0 || j >= len_i {
        return err(format!("IndexError: {what} index out of range"));
    }
    Ok(j as usize)
}

pub fn index(obj: &Value, idx: &Value) -> Res<Value> {
    match obj {
        Value::Mapping(m) => {
            let key = to_key(idx)?;
            m.borrow()
                .get(&key)
                .cloned()
                .ok_or_else(|| Halt::Error(format!("KeyError: {}", super::value::repr_value(idx))))
        }
        Value::Sequence(items) => {
            let i = as_index(idx).ok_or(()).or_else(|_| type_error("list indices must be integers"))?;
            let items = items.borrow();
            Ok(items[normalize_index(i, items.len(), "list")?].clone())
        }
        Value::Tuple(items) => {
            let i = as_index(idx).ok_or(()).or_else(|_| type_error("tuple indices must be integers"))?;
            Ok(items[normalize_index(i, items.len(), "tuple")?].clone())
        }
        Value::Text(s) => {
            let i = as_index(idx).ok_or(()).or_else(|_| type_error("string indices must be integers"))?;
            let chars: Vec<char> = s.chars().collect();
            let c = chars[normalize_index(i, chars.len(), "string")?];
            Ok(Value::Text(Rc::from(c.to_string())))
        }
        other => type_error(format!("'{}' object is not subscriptable", other.type_name())),
    }
}

pub fn set_index(obj: &Value, idx: &Value, value: Value, guard: SizeGuard) -> Res<()> {
    match obj {
        Value::Sequence(items) => {
            let i = as_index(idx).ok_or(()).or_else(|_| type_error("list indices must be integers"))?;
            let mut items = items.borrow_mut();
            let j = normalize_index(i, items.len(), "list assignment")?;
            items[j] = value;
            Ok(())
        }
        Value::Mapping(m) => {
            let key = to_key(idx)?;
            let mut m = m.borrow_mut();
            if !m.contains_key(&key) {
                guard.check(m.len() + 1)?;
            }
            m.insert(key, value);
            Ok(())
        }
        other => type_error(format!("'{}' object does not support item assignment", other.type_name())),
    }
}

fn slice_indices(len: usize, lower: Option<i64>, upper: Option<i64>, step: Option<i64>) -> Res<Vec<usize>> {
    let step = step.unwrap_or(1);
    if step == 0 {
        return err("ValueError: slice step cannot be zero");
    }
    let len = len as i64;
    let clamp = |v: i64, lo: i64, hi: i64| v.max(lo).min(hi);
    let adjust = |v: i64, lo: i64, hi: i64| clamp(if v < 0 { v + len } else { v }, lo, hi);
    let mut out = Vec::new();
    if step > 0 {
        let start = lower.map_or(0, |v| adjust(v, 0, len));
        let stop = upper.map_or(len, |v| adjust(v, 0, len));
        let mut i = start;
        while i < stop {
            out.push(i as usize);
            i += step;
        }
    } else {
        let start = lower.map_or(len - 1, |v| adjust(v, -1, len - 1));
        let stop = upper.map_or(-1, |v| adjust(v, -1, len - 1));
        let mut i = start;
        while i > stop {
            out.push(i as usize);
            i += step;
        }
    }
    Ok(out)
}

pub fn slice(obj: &Value, lower: Option<&Value>, upper: Option<&Value>, step: Option<&Value>) -> Res<Value> {
    let bound = |v: Option<&Value>| -> Res<Option<i64>> {
        match v {
            None | Some(Value::None) => Ok(None),
            Some(x) => as_index(x)
                .map(Some)
                .ok_or(())
                .or_else(|_| type_error("slice indices must be integers or None")),
        }
    };
    let (lo, hi, st) = (bound(lower)?, bound(upper)?, bound(step)?);
    match obj {
        Value::Sequence(items) => {
            let items = items.borrow();
            let idx = slice_indices(items.len(), lo, hi, st)?;
            Ok(Value::seq(idx.into_iter().map(|i| items[i].clone()).collect()))
        }
        Value::Tuple(items) => {
            let idx = slice_indices(items.len(), lo, hi, st)?;
            Ok(Value::tuple(idx.into_iter().map(|i| items[i].clone()).collect()))
        }
        Value::Text(s) => {
            let chars: Vec<char> = s.chars().collect();
            let idx = slice_indices(chars.len(), lo, hi, st)?;
            Ok(Value::Text(Rc::from(idx.into_iter().map(|i| chars[i]).collect::<String>())))
        }
        other => type_error(format!("'{}' object is not subscriptable", other.type_name())),
    }
}

/// Materializes the items iterated by a `for` loop or an iterable builtin.
pub fn iterate(v: &Value) -> Res<Vec<Value>> {
    match v {
        Value::Sequence(items) => Ok(items.borrow().clone()),
        Value::Tuple(items) => Ok(items.to_vec()),
        Value::Text(s) => Ok(s.chars().map(|c| Value::Text(Rc::from(c.to_string()))).collect()),
        Value::Mapping(m) => Ok(m.borrow().keys().map(Key::to_value).collect()),
        other => type_error(format!("'{}' object is not iterable", other.type_name())),
    }
}
