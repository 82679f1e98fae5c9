use std::cell::UnsafeCell;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Mutex, MutexGuard};

use crate::partition::mix64;

pub const DEFAULT_LOCK_TABLE_SIZE: usize = 4096;

/// Striped exclusive locks: vertex `v` maps to stripe `mix64(v) mod size`.
/// Two vertices sharing a stripe merely serialize.
#[derive(Debug)]
pub struct LockTable {
    stripes: Box<[Mutex<()>]>,
    mask: u64,
}

impl LockTable {
    /// `size` is rounded up to a power of two.
    pub fn new(size: usize) -> Self {
        let size = size.max(1).next_power_of_two();
        LockTable {
            stripes: (0..size).map(|_| Mutex::new(())).collect(),
            mask: size as u64 - 1,
        }
    }

    pub fn len(&self) -> usize {
        self.stripes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stripes.is_empty()
    }

    #[inline]
    pub fn stripe_of(&self, v: u32) -> usize {
        (mix64(v as u64) & self.mask) as usize
    }

    #[inline]
    pub fn lock(&self, v: u32) -> MutexGuard<'_, ()> {
        // a panicking lane poisons the stripe; the protected cell holds plain data
        self.stripes[self.stripe_of(v)]
            .lock()
            .unwrap_or_else(|e| e.into_inner())
    }
}

/// Column of values updated concurrently under a [`LockTable`].
pub struct LockedColumn<T> {
    cells: Box<[UnsafeCell<T>]>,
}

// Shared access only reaches a cell through `update`, which holds the cell's
// stripe lock.
unsafe impl<T: Send> Sync for LockedColumn<T> {}

impl<T: Copy> LockedColumn<T> {
    pub fn filled(len: usize, value: T) -> Self {
        LockedColumn {
            cells: (0..len).map(|_| UnsafeCell::new(value)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// `cell[i] = f(cell[i])` under the stripe lock of `key`. Every caller
    /// must pass the same `key` for the same `i`.
    #[inline]
    pub fn update(&self, locks: &LockTable, key: u32, i: usize, f: impl FnOnce(T) -> T) {
        let _guard = locks.lock(key);
        let cell = self.cells[i].get();
        unsafe { *cell = f(*cell) }
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        // UnsafeCell<T> is repr(transparent) over T
        unsafe { std::slice::from_raw_parts_mut(self.cells.as_mut_ptr() as *mut T, self.cells.len()) }
    }

    pub fn as_slice(&mut self) -> &[T] {
        self.as_mut_slice()
    }
}

impl<T: Copy + std::fmt::Debug> std::fmt::Debug for LockedColumn<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "LockedColumn(len = {})", self.cells.len())
    }
}

/// Fixed-size bitmap with atomic set/clear.
#[derive(Debug, Default)]
pub struct Bitmap {
    words: Vec<AtomicU64>,
    len: usize,
}

impl Bitmap {
    pub fn new(len: usize) -> Self {
        Bitmap {
            words: (0..len.div_ceil(64)).map(|_| AtomicU64::new(0)).collect(),
            len,
        }
    }

    pub fn from_words(len: usize, words: &[u64]) -> Option<Self> {
        if words.len() != len.div_ceil(64) {
            return None;
        }
        let tail = len % 64;
        if tail != 0 && words.last().is_some_and(|w| w >> tail != 0) {
            return None;
        }
        Some(Bitmap {
            words: words.iter().map(|&w| AtomicU64::new(w)).collect(),
            len,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64].load(Ordering::Relaxed) >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&self, i: usize) {
        self.words[i / 64].fetch_or(1 << (i % 64), Ordering::Relaxed);
    }

    #[inline]
    pub fn clear(&self, i: usize) {
        self.words[i / 64].fetch_and(!(1 << (i % 64)), Ordering::Relaxed);
    }

    pub fn clear_all(&mut self) {
        for w in &mut self.words {
            *w.get_mut() = 0;
        }
    }

    pub fn set_all(&mut self) {
        for i in 0..self.len {
            self.set(i);
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words
            .iter()
            .map(|w| w.load(Ordering::Relaxed).count_ones() as u64)
            .sum()
    }

    /// Indices of set bits, ascending.
    pub fn ones(&self) -> Vec<u32> {
        let mut out = Vec::new();
        for (wi, w) in self.words.iter().enumerate() {
            let mut bits = w.load(Ordering::Relaxed);
            while bits != 0 {
                let b = bits.trailing_zeros();
                out.push((wi * 64) as u32 + b);
                bits &= bits - 1;
            }
        }
        out
    }

    pub fn words(&self) -> Vec<u64> {
        self.words.iter().map(|w| w.load(Ordering::Relaxed)).collect()
    }
}
