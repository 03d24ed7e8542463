//! Column-oriented attribute storage for vertices and edges.

use std::fmt;
use std::io::{self, Write};
use std::marker::PhantomData;

use num_complex::Complex64;

use super::EngineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttrKind {
    Real,
    Complex,
    Int,
}

impl fmt::Display for AttrKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttrKind::Real => "real",
            AttrKind::Complex => "complex",
            AttrKind::Int => "integer",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
    Int(Vec<i64>),
}

impl Column {
    pub fn kind(&self) -> AttrKind {
        match self {
            Column::Real(_) => AttrKind::Real,
            Column::Complex(_) => AttrKind::Complex,
            Column::Int(_) => AttrKind::Int,
        }
    }

    fn len(&self) -> usize {
        match self {
            Column::Real(v) => v.len(),
            Column::Complex(v) => v.len(),
            Column::Int(v) => v.len(),
        }
    }
}

/// Scalar types that can live in an attribute column.
pub trait AttrValue: Copy + Send + Sync + 'static {
    const KIND: AttrKind;
    fn slice(column: &Column) -> Option<&[Self]>;
    fn slice_mut(column: &mut Column) -> Option<&mut [Self]>;
    fn wrap(values: Vec<Self>) -> Column;
}

macro_rules! attr_value {
    ($ty:ty, $variant:ident) => {
        impl AttrValue for $ty {
            const KIND: AttrKind = AttrKind::$variant;
            fn slice(column: &Column) -> Option<&[Self]> {
                match column {
                    Column::$variant(v) => Some(v),
                    _ => None,
                }
            }
            fn slice_mut(column: &mut Column) -> Option<&mut [Self]> {
                match column {
                    Column::$variant(v) => Some(v),
                    _ => None,
                }
            }
            fn wrap(values: Vec<Self>) -> Column {
                Column::$variant(values)
            }
        }
    };
}

attr_value!(f64, Real);
attr_value!(Complex64, Complex);
attr_value!(i64, Int);

/// Typed handle to a declared column.
pub struct ColumnId<T> {
    index: usize,
    _marker: PhantomData<fn() -> T>,
}

impl<T> Clone for ColumnId<T> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<T> Copy for ColumnId<T> {}

impl<T> fmt::Debug for ColumnId<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ColumnId({})", self.index)
    }
}

/// Named, typed columns of equal length.
#[derive(Debug, Clone, Default)]
pub struct AttributeTable {
    len: usize,
    names: Vec<String>,
    columns: Vec<Column>,
}

impl AttributeTable {
    pub fn new(len: usize) -> Self {
        Self {
            len,
            names: Vec::new(),
            columns: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Declares a column filled with `init`.
    pub fn declare<T: AttrValue>(&mut self, name: &str, init: T) -> Result<ColumnId<T>, EngineError> {
        self.insert(name, vec![init; self.len])
    }

    /// Declares a column with explicit contents.
    pub fn insert<T: AttrValue>(&mut self, name: &str, values: Vec<T>) -> Result<ColumnId<T>, EngineError> {
        if self.names.iter().any(|n| n == name) {
            return Err(EngineError::DuplicateAttribute(name.to_string()));
        }
        if values.len() != self.len {
            return Err(EngineError::LengthMismatch {
                name: name.to_string(),
                expected: self.len,
                found: values.len(),
            });
        }
        self.names.push(name.to_string());
        self.columns.push(T::wrap(values));
        Ok(ColumnId {
            index: self.columns.len() - 1,
            _marker: PhantomData,
        })
    }

    /// Resolves a declared column by name.
    pub fn column<T: AttrValue>(&self, name: &str) -> Result<ColumnId<T>, EngineError> {
        let index = self
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| EngineError::UndeclaredAttribute(name.to_string()))?;
        let found = self.columns[index].kind();
        if found != T::KIND {
            return Err(EngineError::AttributeKind {
                name: name.to_string(),
                expected: T::KIND,
                found,
            });
        }
        Ok(ColumnId {
            index,
            _marker: PhantomData,
        })
    }

    pub fn get<T: AttrValue>(&self, id: ColumnId<T>) -> &[T] {
        T::slice(&self.columns[id.index]).expect("column handle kind matches its declaration")
    }

    pub fn get_mut<T: AttrValue>(&mut self, id: ColumnId<T>) -> &mut [T] {
        T::slice_mut(&mut self.columns[id.index]).expect("column handle kind matches its declaration")
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    /// Writes the table as CSV. `prefix` supplies leading key columns per row.
    pub fn write_csv<W: Write>(
        &self,
        out: &mut W,
        prefix_header: &[&str],
        prefix: impl Fn(usize) -> Vec<String>,
    ) -> io::Result<()> {
        let mut header: Vec<String> = prefix_header.iter().map(|s| s.to_string()).collect();
        for (name, column) in self.names.iter().zip(&self.columns) {
            match column {
                Column::Complex(_) => {
                    header.push(format!("{name}_re"));
                    header.push(format!("{name}_im"));
                }
                _ => header.push(name.clone()),
            }
        }
        writeln!(out, "{}", header.join(","))?;
        for row in 0..self.len {
            let mut cells = prefix(row);
            for column in &self.columns {
                debug_assert_eq!(column.len(), self.len);
                match column {
                    Column::Real(v) => cells.push(v[row].to_string()),
                    Column::Int(v) => cells.push(v[row].to_string()),
                    Column::Complex(v) => {
                        cells.push(v[row].re.to_string());
                        cells.push(v[row].im.to_string());
                    }
                }
            }
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}
