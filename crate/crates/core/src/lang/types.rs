use std::fmt;

/// Static type of a MiniJ expression.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MiniJType {
    Int,
    Boolean,
    Char,
    String,
    Void,
    Class(String),
    Array(Box<MiniJType>),
    /// Type of the `null` literal; assignable to every reference type.
    Null,
}

impl MiniJType {
    pub fn array_of(elem: MiniJType) -> MiniJType {
        debug_assert!(elem != MiniJType::Void, "arrays of void");
        MiniJType::Array(Box::new(elem))
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, MiniJType::Int | MiniJType::Char)
    }

    pub fn is_reference(&self) -> bool {
        matches!(
            self,
            MiniJType::String | MiniJType::Class(_) | MiniJType::Array(_) | MiniJType::Null
        )
    }

    /// Whether a value of type `from` may be stored where `self` is expected.
    pub fn accepts(&self, from: &MiniJType) -> bool {
        if self == from {
            return true;
        }
        match (self, from) {
            (MiniJType::Int, MiniJType::Char) => true,
            (to, MiniJType::Null) => to.is_reference() && *to != MiniJType::Null,
            _ => false,
        }
    }
}

impl fmt::Display for MiniJType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MiniJType::Int => f.write_str("int"),
            MiniJType::Boolean => f.write_str("boolean"),
            MiniJType::Char => f.write_str("char"),
            MiniJType::String => f.write_str("string"),
            MiniJType::Void => f.write_str("void"),
            MiniJType::Class(c) => f.write_str(c),
            MiniJType::Array(e) => write!(f, "{e}[]"),
            MiniJType::Null => f.write_str("null"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignability() {
        assert!(MiniJType::Int.accepts(&MiniJType::Char));
        assert!(!MiniJType::Char.accepts(&MiniJType::Int));
        assert!(MiniJType::String.accepts(&MiniJType::Null));
        assert!(!MiniJType::Int.accepts(&MiniJType::Null));
        let arr = MiniJType::array_of(MiniJType::Int);
        assert_eq!(arr.to_string(), "int[]");
        assert!(arr.accepts(&MiniJType::Null));
    }
}
