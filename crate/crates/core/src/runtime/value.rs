//! Dynamic values of the mini-language and their canonical textual reprs.

use std::cell::RefCell;
use std::fmt;
use std::rc::Rc;

use indexmap::IndexMap;

/// Mapping keys are restricted to integers and text.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Key {
    Int(i64),
    Text(Rc<str>),
}

impl Key {
    pub fn to_value(&self) -> Value {
        match self {
            Key::Int(i) => Value::Int(*i),
            Key::Text(s) => Value::Text(s.clone()),
        }
    }
}

pub type MappingData = IndexMap<Key, Value>;

#[derive(Debug, Clone)]
pub enum Value {
    Int(i64),
    Float(f64),
    Text(Rc<str>),
    Bool(bool),
    None,
    /// Ordered, mutable, shared by reference.
    Sequence(Rc<RefCell<Vec<Value>>>),
    Tuple(Rc<[Value]>),
    /// Insertion-ordered, mutable, shared by reference.
    Mapping(Rc<RefCell<MappingData>>),
}

/// Named input arguments for the entry function, in declaration order.
pub type Bindings = IndexMap<String, Value>;

impl Value {
    pub fn text(s: &str) -> Value {
        Value::Text(Rc::from(s))
    }

    pub fn seq(items: Vec<Value>) -> Value {
        Value::Sequence(Rc::new(RefCell::new(items)))
    }

    pub fn tuple(items: Vec<Value>) -> Value {
        Value::Tuple(Rc::from(items))
    }

    pub fn mapping(items: MappingData) -> Value {
        Value::Mapping(Rc::new(RefCell::new(items)))
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Float(_) => "float",
            Value::Text(_) => "str",
            Value::Bool(_) => "bool",
            Value::None => "NoneType",
            Value::Sequence(_) => "list",
            Value::Tuple(_) => "tuple",
            Value::Mapping(_) => "dict",
        }
    }

    pub fn truthy(&self) -> bool {
        match self {
            Value::Int(i) => *i != 0,
            Value::Float(f) => *f != 0.0,
            Value::Text(s) => !s.is_empty(),
            Value::Bool(b) => *b,
            Value::None => false,
            Value::Sequence(v) => !v.borrow().is_empty(),
            Value::Tuple(t) => !t.is_empty(),
            Value::Mapping(m) => !m.borrow().is_empty(),
        }
    }

    /// `str(v)`: text is returned unquoted, everything else as its repr.
    pub fn to_display(&self) -> String {
        match self {
            Value::Text(s) => s.to_string(),
            other => repr_value(other),
        }
    }

    pub fn from_json(json: &serde_json::Value) -> Result<Value, String> {
        use serde_json::Value as J;
        Ok(match json {
            J::Null => Value::None,
            J::Bool(b) => Value::Bool(*b),
            J::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Value::Int(i)
                } else if n.is_u64() {
                    return Err(format!("integer {n} does not fit in 64 bits"));
                } else {
                    Value::Float(n.as_f64().ok_or_else(|| format!("unrepresentable number {n}"))?)
                }
            }
            J::String(s) => Value::text(s),
            J::Array(items) => Value::seq(items.iter().map(Value::from_json).collect::<Result<_, _>>()?),
            J::Object(map) => {
                let mut m = MappingData::new();
                for (k, v) in map {
                    m.insert(Key::Text(Rc::from(k.as_str())), Value::from_json(v)?);
                }
                Value::mapping(m)
            }
        })
    }
}

/// Converts a JSON object of named arguments into bindings, preserving key order.
pub fn bindings_from_json(json: &serde_json::Value) -> Result<Bindings, String> {
    let obj = json.as_object().ok_or("input binding must be a JSON object")?;
    obj.iter()
        .map(|(k, v)| Ok((k.clone(), Value::from_json(v)?)))
        .collect()
}

/// Renders bindings as a mapping literal, e.g. `{'n': 17, 'k': 3}`.
pub fn bindings_repr(bindings: &Bindings) -> String {
    let parts: Vec<String> = bindings
        .iter()
        .map(|(k, v)| format!("{}: {}", repr_text(k), repr_value(v)))
        .collect();
    format!("{{{}}}", parts.join(", "))
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        use Value::*;
        match (self, other) {
            (Int(a), Int(b)) => a == b,
            (Float(a), Float(b)) => a == b,
            (Int(a), Float(b)) | (Float(b), Int(a)) => (*a as f64) == *b && b.fract() == 0.0 && b.abs() < 9.3e18,
            (Bool(a), Bool(b)) => a == b,
            (Bool(a), Int(b)) | (Int(b), Bool(a)) => i64::from(*a) == *b,
            (Bool(a), Float(b)) | (Float(b), Bool(a)) => f64::from(u8::from(*a)) == *b,
            (Text(a), Text(b)) => a == b,
            (None, None) => true,
            (Sequence(a), Sequence(b)) => Rc::ptr_eq(a, b) || *a.borrow() == *b.borrow(),
            (Tuple(a), Tuple(b)) => a == b,
            (Mapping(a), Mapping(b)) => {
                if Rc::ptr_eq(a, b) {
                    return true;
                }
                let (a, b) = (a.borrow(), b.borrow());
                a.len() == b.len() && a.iter().all(|(k, v)| b.get(k).is_some_and(|w| v == w))
            }
            _ => false,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&repr_value(self))
    }
}

/// Canonical repr. Text uses single quotes with backslash escapes so that
/// distinct texts never share a repr.
pub fn repr_value(value: &Value) -> String {
    let mut out = String::new();
    let mut active = Vec::new();
    write_repr(value, &mut out, &mut active);
    out
}

fn write_repr(value: &Value, out: &mut String, active: &mut Vec<usize>) {
    match value {
        Value::Int(i) => out.push_str(&i.to_string()),
        Value::Float(f) => out.push_str(&repr_float(*f)),
        Value::Text(s) => out.push_str(&repr_text(s)),
        Value::Bool(true) => out.push_str("True"),
        Value::Bool(false) => out.push_str("False"),
        Value::None => out.push_str("None"),
        Value::Sequence(items) => {
            let id = Rc::as_ptr(items) as *const () as usize;
            if active.contains(&id) {
                out.push_str("[...]");
                return;
            }
            active.push(id);
            out.push('[');
            for (i, v) in items.borrow().iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_repr(v, out, active);
            }
            out.push(']');
            active.pop();
        }
        Value::Tuple(items) => {
            out.push('(');
            for (i, v) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_repr(v, out, active);
            }
            if items.len() == 1 {
                out.push(',');
            }
            out.push(')');
        }
        Value::Mapping(map) => {
            let id = Rc::as_ptr(map) as *const () as usize;
            if active.contains(&id) {
                out.push_str("{...}");
                return;
            }
            active.push(id);
            out.push('{');
            for (i, (k, v)) in map.borrow().iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_repr(&k.to_value(), out, active);
                out.push_str(": ");
                write_repr(v, out, active);
            }
            out.push('}');
            active.pop();
        }
    }
}

pub fn repr_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\'' => out.push_str("\\'"),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if (c as u32) < 0x20 || c as u32 == 0x7f => out.push_str(&format!("\\x{:02x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

/// Shortest round-trip decimal, laid out the way Python prints floats:
/// positional for decimal exponents in [-4, 16), scientific otherwise.
pub fn repr_float(f: f64) -> String {
    if f.is_nan() {
        return "nan".into();
    }
    if f.is_infinite() {
        return if f > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if f == 0.0 {
        return if f.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    // `{:e}` yields the shortest round-trip digits, e.g. "1.2345e3"
    let sci = format!("{:e}", f.abs());
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let sign = if f < 0.0 { "-" } else { "" };
    if (-4..16).contains(&exp) {
        let n = digits.len() as i32;
        let body = if exp >= 0 {
            let int_len = exp + 1;
            if n <= int_len {
                format!("{}{}.0", digits, "0".repeat((int_len - n) as usize))
            } else {
                format!("{}.{}", &digits[..int_len as usize], &digits[int_len as usize..])
            }
        } else {
            format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
        };
        format!("{sign}{body}")
    } else {
        let mant = if digits.len() == 1 { digits.clone() } else { format!("{}.{}", &digits[..1], &digits[1..]) };
        let esign = if exp < 0 { '-' } else { '+' };
        format!("{sign}{mant}e{esign}{:02}", exp.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_reprs() {
        assert_eq!(repr_value(&Value::text("202")), "'202'");
        assert_eq!(repr_value(&Value::Int(100)), "100");
        assert_eq!(repr_value(&Value::seq(vec![])), "[]");
        assert_eq!(repr_value(&Value::Bool(true)), "True");
        assert_eq!(repr_value(&Value::None), "None");
        assert_eq!(repr_value(&Value::text("it's")), "'it\\'s'");
    }

    #[test]
    fn collection_reprs() {
        let t = Value::tuple(vec![Value::text("h"), Value::Int(1)]);
        assert_eq!(repr_value(&t), "('h', 1)");
        assert_eq!(repr_value(&Value::tuple(vec![Value::Int(1)])), "(1,)");
        let mut m = MappingData::new();
        m.insert(Key::Text("b".into()), Value::Int(2));
        m.insert(Key::Int(1), Value::seq(vec![Value::Float(0.5)]));
        assert_eq!(repr_value(&Value::mapping(m)), "{'b': 2, 1: [0.5]}");
    }

    #[test]
    fn self_referential_list() {
        let v = Value::seq(vec![Value::Int(1)]);
        if let Value::Sequence(items) = &v {
            items.borrow_mut().push(v.clone());
        }
        assert_eq!(repr_value(&v), "[1, [...]]");
    }

    #[test]
    fn float_reprs_match_python() {
        let cases = [
            (1.0, "1.0"),
            (0.1, "0.1"),
            (2.5, "2.5"),
            (-3.75, "-3.75"),
            (1e16, "1e+16"),
            (1e15, "1000000000000000.0"),
            (123456789.125, "123456789.125"),
            (0.0001, "0.0001"),
            (0.00001, "1e-05"),
            (1.5e-7, "1.5e-07"),
            (1.0 / 3.0, "0.3333333333333333"),
            (2.0f64.powi(70), "1.1805916207174113e+21"),
        ];
        for (f, want) in cases {
            assert_eq!(repr_float(f), want, "{f}");
        }
    }

    #[test]
    fn bindings_preserve_order() {
        let json: serde_json::Value = serde_json::from_str(r#"{"n": 17, "k": 3}"#).unwrap();
        let b = bindings_from_json(&json).unwrap();
        assert_eq!(bindings_repr(&b), "{'n': 17, 'k': 3}");
    }

    #[test]
    fn numeric_cross_type_equality() {
        assert_eq!(Value::Int(1), Value::Float(1.0));
        assert_ne!(Value::Int(1), Value::text("1"));
        assert_eq!(Value::seq(vec![Value::Int(1)]), Value::seq(vec![Value::Bool(true)]));
    }
}
