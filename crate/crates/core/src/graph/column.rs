use super::GraphError;

/// A named flat array of fixed-width items indexed by local vertex id or local
/// edge slot.
#[derive(Clone, Debug, PartialEq)]
pub struct PropertyColumn<T> {
    name: String,
    items: Vec<T>,
}

impl<T: Clone> PropertyColumn<T> {
    pub fn filled(name: impl Into<String>, len: usize, value: T) -> Self {
        PropertyColumn {
            name: name.into(),
            items: vec![value; len],
        }
    }
}

impl<T> PropertyColumn<T> {
    /// Loads `items`, checking the length against the indexed entity count.
    pub fn load(
        name: impl Into<String>,
        items: Vec<T>,
        entity_count: usize,
    ) -> Result<Self, GraphError> {
        let name = name.into();
        if items.len() != entity_count {
            return Err(GraphError::ColumnLength {
                name,
                expected: entity_count,
                actual: items.len(),
            });
        }
        Ok(PropertyColumn { name, items })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.items
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.items
    }

    pub fn into_inner(self) -> Vec<T> {
        self.items
    }
}

impl<T> std::ops::Index<usize> for PropertyColumn<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.items[i]
    }
}

impl<T> std::ops::IndexMut<usize> for PropertyColumn<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.items[i]
    }
}
