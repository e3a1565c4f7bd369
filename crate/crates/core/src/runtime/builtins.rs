//! Builtin callables and methods available to traced programs.

use std::cell::Cell;
use std::cmp::Ordering;
use std::rc::Rc;

use super::ops::{as_index, compare_values, err, iterate, to_key, type_error, Halt, Res, SizeGuard};
use super::trace::BudgetKind;
use super::value::{Key, MappingData, Value};
use crate::lang::ast::BinOp;

/// Builtins the runtime implements. Validation decides which of these a
/// program may reference.
pub const KNOWN_BUILTINS: &[&str] = &[
    "len", "str", "int", "float", "abs", "min", "max", "sum", "sorted", "range", "list", "enumerate",
    "permutations", "tuple", "bool", "reversed", "zip",
];

pub const KNOWN_METHODS: &[&str] = &[
    // text
    "join", "split", "upper", "lower", "strip", "lstrip", "rstrip", "startswith", "endswith", "replace",
    "find", "isdigit", "isalpha", // sequence
    "append", "pop", "insert", "remove", "index", "extend", "reverse", "sort", "count", "copy",
    // mapping
    "get", "keys", "values", "items",
];

/// Matches positional and keyword arguments against a parameter list.
fn bind(
    func: &str,
    args: Vec<Value>,
    kwargs: Vec<(String, Value)>,
    params: &[&str],
    required: usize,
) -> Res<Vec<Option<Value>>> {
    if args.len() > params.len() {
        return type_error(format!("{func}() takes at most {} arguments ({} given)", params.len(), args.len()));
    }
    let mut slots: Vec<Option<Value>> = vec![None; params.len()];
    for (i, a) in args.into_iter().enumerate() {
        slots[i] = Some(a);
    }
    for (k, v) in kwargs {
        let Some(i) = params.iter().position(|p| *p == k) else {
            return type_error(format!("{func}() got an unexpected keyword argument '{k}'"));
        };
        if slots[i].is_some() {
            return type_error(format!("{func}() got multiple values for argument '{k}'"));
        }
        slots[i] = Some(v);
    }
    if let Some(missing) = slots[..required].iter().position(Option::is_none) {
        return type_error(format!("{func}() missing required argument '{}'", params[missing]));
    }
    Ok(slots)
}

fn no_kwargs(func: &str, kwargs: &[(String, Value)]) -> Res<()> {
    match kwargs.first() {
        Some((k, _)) => type_error(format!("{func}() got an unexpected keyword argument '{k}'")),
        None => Ok(()),
    }
}

fn int_arg(func: &str, v: &Value) -> Res<i64> {
    as_index(v).ok_or(()).or_else(|_| type_error(format!("{func}() expected an integer, got '{}'", v.type_name())))
}

fn text(s: impl Into<String>) -> Value {
    Value::Text(Rc::from(s.into()))
}

/// Stable sort with a fallible comparison; the first comparison error wins.
fn sort_values(items: &mut [Value], reverse: bool) -> Res<()> {
    let failure: Cell<Option<Halt>> = Cell::new(None);
    items.sort_by(|a, b| {
        let r = if reverse { compare_values(b, a) } else { compare_values(a, b) };
        match r {
            Ok(o) => o,
            Err(e) => {
                let prev = failure.take();
                failure.set(Some(prev.unwrap_or(e)));
                Ordering::Equal
            }
        }
    });
    match failure.take() {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// All r-length orderings of `pool`, in lexicographic order of positions.
pub fn permutations(pool: &[Value], r: usize, guard: SizeGuard) -> Res<Vec<Value>> {
    let n = pool.len();
    if r > n {
        return Ok(vec![]);
    }
    let mut count: usize = 1;
    for k in (n - r + 1)..=n {
        count = count.checked_mul(k).ok_or(Halt::Budget(BudgetKind::CollectionSize))?;
        guard.check(count)?;
    }
    let mut out = Vec::with_capacity(count);
    let mut used = vec![false; n];
    let mut current = Vec::with_capacity(r);
    fn rec(pool: &[Value], r: usize, used: &mut [bool], current: &mut Vec<Value>, out: &mut Vec<Value>) {
        if current.len() == r {
            out.push(Value::tuple(current.clone()));
            return;
        }
        for i in 0..pool.len() {
            if used[i] {
                continue;
            }
            used[i] = true;
            current.push(pool[i].clone());
            rec(pool, r, used, current, out);
            current.pop();
            used[i] = false;
        }
    }
    rec(pool, r, &mut used, &mut current, &mut out);
    Ok(out)
}

fn parse_int(s: &str, base: u32) -> Option<i64> {
    let t = s.trim().replace('_', "");
    let (neg, digits) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(&t)),
    };
    let digits = match base {
        16 => digits.strip_prefix("0x").or_else(|| digits.strip_prefix("0X")).unwrap_or(digits),
        2 => digits.strip_prefix("0b").or_else(|| digits.strip_prefix("0B")).unwrap_or(digits),
        8 => digits.strip_prefix("0o").or_else(|| digits.strip_prefix("0O")).unwrap_or(digits),
        _ => digits,
    };
    if digits.is_empty() || digits.starts_with(['+', '-']) {
        return None;
    }
    let v = i64::from_str_radix(digits, base).ok()?;
    if neg {
        v.checked_neg()
    } else {
        Some(v)
    }
}

fn min_max(func: &str, args: Vec<Value>, kwargs: Vec<(String, Value)>, want: Ordering) -> Res<Value> {
    no_kwargs(func, &kwargs)?;
    let items = match args.len() {
        0 => return type_error(format!("{func} expected at least 1 argument, got 0")),
        1 => iterate(&args[0])?,
        _ => args,
    };
    let mut it = items.into_iter();
    let Some(mut best) = it.next() else {
        return err(format!("ValueError: {func}() arg is an empty sequence"));
    };
    for v in it {
        if compare_values(&v, &best)? == want {
            best = v;
        }
    }
    Ok(best)
}

pub fn call_builtin(name: &str, args: Vec<Value>, kwargs: Vec<(String, Value)>, guard: SizeGuard) -> Res<Value> {
    match name {
        "len" => {
            let a = bind(name, args, kwargs, &["obj"], 1)?;
            let v = a[0].as_ref().expect("required");
            let n = match v {
                Value::Text(s) => s.chars().count(),
                Value::Sequence(items) => items.borrow().len(),
                Value::Tuple(items) => items.len(),
                Value::Mapping(m) => m.borrow().len(),
                other => return type_error(format!("object of type '{}' has no len()", other.type_name())),
            };
            Ok(Value::Int(n as i64))
        }
        "str" => {
            let a = bind(name, args, kwargs, &["object"], 0)?;
            Ok(a[0].as_ref().map_or_else(|| text(""), |v| text(v.to_display())))
        }
        "int" => {
            let a = bind(name, args, kwargs, &["x", "base"], 0)?;
            let base = match &a[1] {
                Some(b) => {
                    let b = int_arg(name, b)?;
                    if !(2..=36).contains(&b) {
                        return err("ValueError: int() base must be >= 2 and <= 36");
                    }
                    Some(b as u32)
                }
                None => None,
            };
            match (&a[0], base) {
                (None, _) => Ok(Value::Int(0)),
                (Some(Value::Text(s)), b) => parse_int(s, b.unwrap_or(10))
                    .map(Value::Int)
                    .ok_or_else(|| Halt::Error(format!("ValueError: invalid literal for int(): {}", super::value::repr_text(s)))),
                (Some(_), Some(_)) => type_error("int() can't convert non-string with explicit base"),
                (Some(Value::Int(i)), None) => Ok(Value::Int(*i)),
                (Some(Value::Bool(b)), None) => Ok(Value::Int(i64::from(*b))),
                (Some(Value::Float(f)), None) => {
                    if !f.is_finite() {
                        return err("ValueError: cannot convert float to integer");
                    }
                    let t = f.trunc();
                    if t.abs() >= 9.223_372_036_854_775e18 {
                        return err("OverflowError: integer overflow");
                    }
                    Ok(Value::Int(t as i64))
                }
                (Some(other), None) => type_error(format!("int() argument must be a string or a number, not '{}'", other.type_name())),
            }
        }
        "float" => {
            let a = bind(name, args, kwargs, &["x"], 0)?;
            match &a[0] {
                None => Ok(Value::Float(0.0)),
                Some(Value::Int(i)) => Ok(Value::Float(*i as f64)),
                Some(Value::Bool(b)) => Ok(Value::Float(f64::from(u8::from(*b)))),
                Some(Value::Float(f)) => Ok(Value::Float(*f)),
                Some(Value::Text(s)) => {
                    let t = s.trim().to_ascii_lowercase();
                    let parsed = match t.trim_start_matches(['+', '-']) {
                        "inf" | "infinity" => Some(if t.starts_with('-') { f64::NEG_INFINITY } else { f64::INFINITY }),
                        "nan" => Some(f64::NAN),
                        _ => t.parse::<f64>().ok(),
                    };
                    parsed
                        .map(Value::Float)
                        .ok_or_else(|| Halt::Error(format!("ValueError: could not convert string to float: {}", super::value::repr_text(s))))
                }
                Some(other) => type_error(format!("float() argument must be a string or a number, not '{}'", other.type_name())),
            }
        }
        "abs" => {
            let a = bind(name, args, kwargs, &["x"], 1)?;
            match a[0].as_ref().expect("required") {
                Value::Int(i) => i.checked_abs().map(Value::Int).ok_or_else(|| Halt::Error("OverflowError: integer overflow".into())),
                Value::Bool(b) => Ok(Value::Int(i64::from(*b))),
                Value::Float(f) => Ok(Value::Float(f.abs())),
                other => type_error(format!("bad operand type for abs(): '{}'", other.type_name())),
            }
        }
        "min" => min_max(name, args, kwargs, Ordering::Less),
        "max" => min_max(name, args, kwargs, Ordering::Greater),
        "sum" => {
            let a = bind(name, args, kwargs, &["iterable", "start"], 1)?;
            let mut acc = a[1].clone().unwrap_or(Value::Int(0));
            if matches!(acc, Value::Text(_)) {
                return type_error("sum() can't sum strings [use ''.join(seq) instead]");
            }
            for v in iterate(a[0].as_ref().expect("required"))? {
                acc = super::ops::binary(BinOp::Add, &acc, &v, guard)?;
            }
            Ok(acc)
        }
        "sorted" => {
            let a = bind(name, args, kwargs, &["iterable", "reverse"], 1)?;
            let mut items = iterate(a[0].as_ref().expect("required"))?;
            let reverse = a[1].as_ref().is_some_and(Value::truthy);
            sort_values(&mut items, reverse)?;
            Ok(Value::seq(items))
        }
        "range" => {
            no_kwargs(name, &kwargs)?;
            let ints = args.iter().map(|v| int_arg(name, v)).collect::<Res<Vec<i64>>>()?;
            let (start, stop, step) = match ints.as_slice() {
                [stop] => (0, *stop, 1),
                [start, stop] => (*start, *stop, 1),
                [start, stop, step] => (*start, *stop, *step),
                _ => return type_error(format!("range expected 1 to 3 arguments, got {}", ints.len())),
            };
            if step == 0 {
                return err("ValueError: range() arg 3 must not be zero");
            }
            let span = if step > 0 { stop as i128 - start as i128 } else { start as i128 - stop as i128 };
            let count = if span <= 0 { 0 } else { ((span - 1) / (step as i128).abs() + 1) as u128 };
            if count > guard.max_len as u128 {
                return Err(Halt::Budget(BudgetKind::CollectionSize));
            }
            Ok(Value::seq((0..count as i64).map(|i| Value::Int(start + i * step)).collect()))
        }
        "list" => {
            let a = bind(name, args, kwargs, &["iterable"], 0)?;
            Ok(Value::seq(match &a[0] {
                Some(v) => iterate(v)?,
                None => vec![],
            }))
        }
        "tuple" => {
            let a = bind(name, args, kwargs, &["iterable"], 0)?;
            Ok(Value::tuple(match &a[0] {
                Some(v) => iterate(v)?,
                None => vec![],
            }))
        }
        "bool" => {
            let a = bind(name, args, kwargs, &["x"], 0)?;
            Ok(Value::Bool(a[0].as_ref().is_some_and(Value::truthy)))
        }
        "enumerate" => {
            let a = bind(name, args, kwargs, &["iterable", "start"], 1)?;
            let start = match &a[1] {
                Some(v) => int_arg(name, v)?,
                None => 0,
            };
            let items = iterate(a[0].as_ref().expect("required"))?;
            let mut out = Vec::with_capacity(items.len());
            for (i, v) in items.into_iter().enumerate() {
                let idx = start.checked_add(i as i64).ok_or_else(|| Halt::Error("OverflowError: integer overflow".into()))?;
                out.push(Value::tuple(vec![Value::Int(idx), v]));
            }
            Ok(Value::seq(out))
        }
        "reversed" => {
            let a = bind(name, args, kwargs, &["sequence"], 1)?;
            let v = a[0].as_ref().expect("required");
            if matches!(v, Value::Mapping(_)) {
                return type_error("'dict' object is not reversible");
            }
            let mut items = iterate(v)?;
            items.reverse();
            Ok(Value::seq(items))
        }
        "zip" => {
            no_kwargs(name, &kwargs)?;
            let cols = args.iter().map(iterate).collect::<Res<Vec<_>>>()?;
            let n = cols.iter().map(Vec::len).min().unwrap_or(0);
            Ok(Value::seq((0..n).map(|i| Value::tuple(cols.iter().map(|c| c[i].clone()).collect())).collect()))
        }
        "permutations" => {
            let a = bind(name, args, kwargs, &["iterable", "r"], 1)?;
            let pool = iterate(a[0].as_ref().expect("required"))?;
            let r = match &a[1] {
                None | Some(Value::None) => pool.len(),
                Some(v) => {
                    let r = int_arg(name, v)?;
                    if r < 0 {
                        return err("ValueError: r must be non-negative");
                    }
                    r as usize
                }
            };
            Ok(Value::seq(permutations(&pool, r, guard)?))
        }
        _ => err(format!("NameError: name '{name}' is not defined")),
    }
}

fn strip_chars(s: &str, chars: Option<&Value>, left: bool, right: bool) -> Res<String> {
    let set: Option<Vec<char>> = match chars {
        None | Some(Value::None) => None,
        Some(Value::Text(c)) => Some(c.chars().collect()),
        Some(other) => return type_error(format!("strip arg must be None or str, not '{}'", other.type_name())),
    };
    let pred = |c: char| match &set {
        Some(set) => set.contains(&c),
        None => c.is_whitespace(),
    };
    let mut out = s;
    if left {
        out = out.trim_start_matches(pred);
    }
    if right {
        out = out.trim_end_matches(pred);
    }
    Ok(out.to_string())
}

fn text_method(s: &Rc<str>, method: &str, args: Vec<Value>, kwargs: Vec<(String, Value)>, guard: SizeGuard) -> Res<Value> {
    let m = format!("str.{method}");
    match method {
        "join" => {
            let a = bind(&m, args, kwargs, &["iterable"], 1)?;
            let items = iterate(a[0].as_ref().expect("required"))?;
            let mut parts = Vec::with_capacity(items.len());
            for (i, v) in items.iter().enumerate() {
                match v {
                    Value::Text(t) => parts.push(t.to_string()),
                    other => return type_error(format!("sequence item {i}: expected str instance, {} found", other.type_name())),
                }
            }
            let joined = parts.join(s);
            guard.check(joined.chars().count())?;
            Ok(text(joined))
        }
        "split" => {
            let a = bind(&m, args, kwargs, &["sep", "maxsplit"], 0)?;
            let maxsplit = match &a[1] {
                Some(v) => int_arg(&m, v)?,
                None => -1,
            };
            let limit = if maxsplit < 0 { usize::MAX } else { maxsplit as usize };
            let parts: Vec<String> = match &a[0] {
                None | Some(Value::None) => {
                    let mut out = Vec::new();
                    let mut rest = s.trim_start();
                    while !rest.is_empty() {
                        if out.len() == limit {
                            out.push(rest.trim_end().to_string());
                            break;
                        }
                        let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
                        out.push(rest[..end].to_string());
                        rest = rest[end..].trim_start();
                    }
                    out
                }
                Some(Value::Text(sep)) => {
                    if sep.is_empty() {
                        return err("ValueError: empty separator");
                    }
                    if limit == usize::MAX {
                        s.split(&**sep).map(str::to_string).collect()
                    } else {
                        s.splitn(limit.saturating_add(1), &**sep).map(str::to_string).collect()
                    }
                }
                Some(other) => return type_error(format!("must be str or None, not {}", other.type_name())),
            };
            guard.check(parts.len())?;
            Ok(Value::seq(parts.into_iter().map(text).collect()))
        }
        "upper" | "lower" | "isdigit" | "isalpha" => {
            bind(&m, args, kwargs, &[], 0)?;
            Ok(match method {
                "upper" => text(s.to_uppercase()),
                "lower" => text(s.to_lowercase()),
                "isdigit" => Value::Bool(!s.is_empty() && s.chars().all(|c| c.is_ascii_digit())),
                _ => Value::Bool(!s.is_empty() && s.chars().all(char::is_alphabetic)),
            })
        }
        "strip" | "lstrip" | "rstrip" => {
            let a = bind(&m, args, kwargs, &["chars"], 0)?;
            let (l, r) = match method {
                "strip" => (true, true),
                "lstrip" => (true, false),
                _ => (false, true),
            };
            Ok(text(strip_chars(s, a[0].as_ref(), l, r)?))
        }
        "startswith" | "endswith" => {
            let a = bind(&m, args, kwargs, &["prefix"], 1)?;
            let Some(Value::Text(p)) = &a[0] else {
                return type_error(format!("{m} arg must be str"));
            };
            Ok(Value::Bool(if method == "startswith" { s.starts_with(&**p) } else { s.ends_with(&**p) }))
        }
        "replace" => {
            let a = bind(&m, args, kwargs, &["old", "new"], 2)?;
            let (Some(Value::Text(old)), Some(Value::Text(new))) = (&a[0], &a[1]) else {
                return type_error("replace() arguments must be str");
            };
            let out = s.replace(&**old, new);
            guard.check(out.chars().count())?;
            Ok(text(out))
        }
        "find" | "count" => {
            let a = bind(&m, args, kwargs, &["sub"], 1)?;
            let Some(Value::Text(sub)) = &a[0] else {
                return type_error(format!("{m}() argument must be str"));
            };
            if method == "count" {
                let n = if sub.is_empty() { s.chars().count() + 1 } else { s.matches(&**sub).count() };
                return Ok(Value::Int(n as i64));
            }
            Ok(Value::Int(s.find(&**sub).map_or(-1, |b| s[..b].chars().count() as i64)))
        }
        _ => err(format!("AttributeError: 'str' object has no attribute '{method}'")),
    }
}

fn sequence_method(
    items: &Rc<std::cell::RefCell<Vec<Value>>>,
    method: &str,
    args: Vec<Value>,
    kwargs: Vec<(String, Value)>,
    guard: SizeGuard,
) -> Res<Value> {
    let m = format!("list.{method}");
    match method {
        "append" => {
            let a = bind(&m, args, kwargs, &["object"], 1)?;
            let len = items.borrow().len();
            guard.check(len + 1)?;
            items.borrow_mut().push(a[0].clone().expect("required"));
            Ok(Value::None)
        }
        "extend" => {
            let a = bind(&m, args, kwargs, &["iterable"], 1)?;
            let more = iterate(a[0].as_ref().expect("required"))?;
            let len = items.borrow().len();
            guard.check(len + more.len())?;
            items.borrow_mut().extend(more);
            Ok(Value::None)
        }
        "pop" => {
            let a = bind(&m, args, kwargs, &["index"], 0)?;
            let mut v = items.borrow_mut();
            if v.is_empty() {
                return err("IndexError: pop from empty list");
            }
            let len = v.len() as i64;
            let i = match &a[0] {
                Some(x) => int_arg(&m, x)?,
                None => -1,
            };
            let j = if i < 0 { i + len } else { i };
            if j < 0 || j >= len {
                return err("IndexError: pop index out of range");
            }
            Ok(v.remove(j as usize))
        }
        "insert" => {
            let a = bind(&m, args, kwargs, &["index", "object"], 2)?;
            let i = int_arg(&m, a[0].as_ref().expect("required"))?;
            let len = items.borrow().len();
            guard.check(len + 1)?;
            let len = len as i64;
            let j = if i < 0 { (i + len).max(0) } else { i.min(len) };
            items.borrow_mut().insert(j as usize, a[1].clone().expect("required"));
            Ok(Value::None)
        }
        "remove" | "index" | "count" => {
            let a = bind(&m, args, kwargs, &["value"], 1)?;
            let needle = a[0].as_ref().expect("required");
            let pos = items.borrow().iter().position(|v| v == needle);
            match method {
                "count" => Ok(Value::Int(items.borrow().iter().filter(|v| *v == needle).count() as i64)),
                "index" => pos
                    .map(|p| Value::Int(p as i64))
                    .ok_or_else(|| Halt::Error(format!("ValueError: {} is not in list", super::value::repr_value(needle)))),
                _ => {
                    let Some(p) = pos else {
                        return err("ValueError: list.remove(x): x not in list");
                    };
                    items.borrow_mut().remove(p);
                    Ok(Value::None)
                }
            }
        }
        "reverse" => {
            bind(&m, args, kwargs, &[], 0)?;
            items.borrow_mut().reverse();
            Ok(Value::None)
        }
        "sort" => {
            let a = bind(&m, args, kwargs, &["reverse"], 0)?;
            let mut v = items.borrow().clone();
            sort_values(&mut v, a[0].as_ref().is_some_and(Value::truthy))?;
            *items.borrow_mut() = v;
            Ok(Value::None)
        }
        "copy" => {
            bind(&m, args, kwargs, &[], 0)?;
            Ok(Value::seq(items.borrow().clone()))
        }
        _ => err(format!("AttributeError: 'list' object has no attribute '{method}'")),
    }
}

fn mapping_method(
    map: &Rc<std::cell::RefCell<MappingData>>,
    method: &str,
    args: Vec<Value>,
    kwargs: Vec<(String, Value)>,
) -> Res<Value> {
    let m = format!("dict.{method}");
    match method {
        "get" => {
            let a = bind(&m, args, kwargs, &["key", "default"], 1)?;
            let key = to_key(a[0].as_ref().expect("required"))?;
            Ok(map.borrow().get(&key).cloned().unwrap_or_else(|| a[1].clone().unwrap_or(Value::None)))
        }
        "keys" => {
            bind(&m, args, kwargs, &[], 0)?;
            Ok(Value::seq(map.borrow().keys().map(Key::to_value).collect()))
        }
        "values" => {
            bind(&m, args, kwargs, &[], 0)?;
            Ok(Value::seq(map.borrow().values().cloned().collect()))
        }
        "items" => {
            bind(&m, args, kwargs, &[], 0)?;
            Ok(Value::seq(
                map.borrow().iter().map(|(k, v)| Value::tuple(vec![k.to_value(), v.clone()])).collect(),
            ))
        }
        "pop" => {
            let a = bind(&m, args, kwargs, &["key", "default"], 1)?;
            let key = to_key(a[0].as_ref().expect("required"))?;
            let removed = map.borrow_mut().shift_remove(&key);
            match (removed, &a[1]) {
                (Some(v), _) => Ok(v),
                (None, Some(d)) => Ok(d.clone()),
                (None, None) => err(format!("KeyError: {}", super::value::repr_value(&key.to_value()))),
            }
        }
        "copy" => {
            bind(&m, args, kwargs, &[], 0)?;
            Ok(Value::mapping(map.borrow().clone()))
        }
        _ => err(format!("AttributeError: 'dict' object has no attribute '{method}'")),
    }
}

pub fn call_method(receiver: &Value, method: &str, args: Vec<Value>, kwargs: Vec<(String, Value)>, guard: SizeGuard) -> Res<Value> {
    match receiver {
        Value::Text(s) => text_method(s, method, args, kwargs, guard),
        Value::Sequence(items) => sequence_method(items, method, args, kwargs, guard),
        Value::Mapping(map) => mapping_method(map, method, args, kwargs),
        Value::Tuple(items) if matches!(method, "index" | "count") => {
            let list = Rc::new(std::cell::RefCell::new(items.to_vec()));
            sequence_method(&list, method, args, kwargs, guard)
        }
        other => err(format!("AttributeError: '{}' object has no attribute '{method}'", other.type_name())),
    }
}

#[cfg(test)]
mod tests {
    use super::super::value::repr_value;
    use super::*;

    const G: SizeGuard = SizeGuard { max_len: 10_000 };

    fn call(name: &str, args: Vec<Value>) -> Value {
        call_builtin(name, args, vec![], G).unwrap()
    }

    fn chars(s: &str) -> Vec<Value> {
        s.chars().map(|c| Value::text(&c.to_string())).collect()
    }

    #[test]
    fn permutations_of_hrf_in_index_order() {
        let out = call("permutations", vec![Value::text("hrf")]);
        assert_eq!(
            repr_value(&out),
            "[('h', 'r', 'f'), ('h', 'f', 'r'), ('r', 'h', 'f'), ('r', 'f', 'h'), ('f', 'h', 'r'), ('f', 'r', 'h')]"
        );
    }

    #[test]
    fn permutations_with_r() {
        let out = permutations(&chars("abc"), 2, G).unwrap();
        assert_eq!(out.len(), 6);
        assert!(permutations(&chars("abc"), 4, G).unwrap().is_empty());
        let small = SizeGuard { max_len: 5 };
        assert_eq!(permutations(&chars("abc"), 3, small), Err(Halt::Budget(BudgetKind::CollectionSize)));
    }

    #[test]
    fn range_forms() {
        assert_eq!(repr_value(&call("range", vec![Value::Int(3)])), "[0, 1, 2]");
        assert_eq!(repr_value(&call("range", vec![Value::Int(5), Value::Int(0), Value::Int(-2)])), "[5, 3, 1]");
        assert_eq!(repr_value(&call("range", vec![Value::Int(2), Value::Int(2)])), "[]");
        assert_eq!(
            call_builtin("range", vec![Value::Int(i64::MAX)], vec![], G),
            Err(Halt::Budget(BudgetKind::CollectionSize))
        );
    }

    #[test]
    fn conversions() {
        assert_eq!(call("int", vec![Value::text(" -42 ")]), Value::Int(-42));
        assert_eq!(call("int", vec![Value::text("101"), Value::Int(2)]), Value::Int(5));
        assert_eq!(call("int", vec![Value::Float(-3.7)]), Value::Int(-3));
        assert!(call_builtin("int", vec![Value::text("x")], vec![], G).is_err());
        assert_eq!(call("str", vec![Value::Int(7)]), Value::text("7"));
        assert_eq!(call("str", vec![Value::seq(vec![Value::text("a")])]), Value::text("['a']"));
        assert_eq!(call("float", vec![Value::text("2.5")]), Value::Float(2.5));
    }

    #[test]
    fn aggregates() {
        let xs = Value::seq(vec![Value::Int(3), Value::Int(1), Value::Int(2)]);
        assert_eq!(call("sum", vec![xs.clone()]), Value::Int(6));
        assert_eq!(call("min", vec![xs.clone()]), Value::Int(1));
        assert_eq!(call("max", vec![Value::Int(4), Value::Int(9)]), Value::Int(9));
        assert_eq!(repr_value(&call("sorted", vec![xs.clone()])), "[1, 2, 3]");
        let desc = call_builtin("sorted", vec![xs], vec![("reverse".into(), Value::Bool(true))], G).unwrap();
        assert_eq!(repr_value(&desc), "[3, 2, 1]");
        assert!(call_builtin("max", vec![Value::seq(vec![])], vec![], G).is_err());
        assert_eq!(repr_value(&call("enumerate", vec![Value::text("ab")])), "[(0, 'a'), (1, 'b')]");
    }

    #[test]
    fn sorted_rejects_mixed_types() {
        let xs = Value::seq(vec![Value::Int(3), Value::text("a")]);
        assert!(matches!(call_builtin("sorted", vec![xs], vec![], G), Err(Halt::Error(m)) if m.starts_with("TypeError")));
    }

    #[test]
    fn text_methods() {
        let s = Value::text("  a b  c ");
        assert_eq!(repr_value(&call_method(&s, "split", vec![], vec![], G).unwrap()), "['a', 'b', 'c']");
        assert_eq!(call_method(&s, "strip", vec![], vec![], G).unwrap(), Value::text("a b  c"));
        let csv = Value::text("1,,2");
        assert_eq!(repr_value(&call_method(&csv, "split", vec![Value::text(",")], vec![], G).unwrap()), "['1', '', '2']");
        let sep = Value::text("-");
        let joined = call_method(&sep, "join", vec![Value::seq(chars("xyz"))], vec![], G).unwrap();
        assert_eq!(joined, Value::text("x-y-z"));
        assert_eq!(call_method(&Value::text("Ab"), "upper", vec![], vec![], G).unwrap(), Value::text("AB"));
    }

    #[test]
    fn list_methods_mutate_in_place() {
        let l = Value::seq(vec![Value::Int(1), Value::Int(2), Value::Int(3)]);
        call_method(&l, "append", vec![Value::Int(4)], vec![], G).unwrap();
        assert_eq!(call_method(&l, "pop", vec![Value::Int(0)], vec![], G).unwrap(), Value::Int(1));
        call_method(&l, "insert", vec![Value::Int(-1), Value::Int(9)], vec![], G).unwrap();
        call_method(&l, "remove", vec![Value::Int(2)], vec![], G).unwrap();
        assert_eq!(repr_value(&l), "[3, 9, 4]");
        assert_eq!(call_method(&l, "index", vec![Value::Int(4)], vec![], G).unwrap(), Value::Int(2));
        assert!(call_method(&Value::seq(vec![]), "pop", vec![], vec![], G).is_err());
    }

    #[test]
    fn mapping_methods() {
        let mut m = MappingData::new();
        m.insert(Key::Text("a".into()), Value::Int(1));
        let d = Value::mapping(m);
        assert_eq!(call_method(&d, "get", vec![Value::text("a")], vec![], G).unwrap(), Value::Int(1));
        assert_eq!(call_method(&d, "get", vec![Value::text("z"), Value::Int(0)], vec![], G).unwrap(), Value::Int(0));
        assert_eq!(repr_value(&call_method(&d, "items", vec![], vec![], G).unwrap()), "[('a', 1)]");
    }
}
