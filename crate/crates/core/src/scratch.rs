//! Reusable work buffers for the operator plans.
//!
//! Large temporaries that are freshly allocated on every call get new pages from
//! the kernel each time; at 513² that is a noticeable share of the run time and
//! depends on allocator history. Plans keep their big buffers here instead.

use std::sync::Mutex;

/// Most buffers retained at once; extra returns are dropped.
const MAX_RETAINED: usize = 8;

#[derive(Debug, Default)]
pub(crate) struct BufferPool<E> {
    free: Mutex<Vec<Vec<E>>>,
}

impl<E: Clone + Default> BufferPool<E> {
    pub(crate) fn new() -> Self {
        Self { free: Mutex::new(Vec::new()) }
    }

    /// A zero-filled (`E::default()`) buffer of length `len`.
    pub(crate) fn take(&self, len: usize) -> Vec<E> {
        let mut v = {
            let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
            match free.iter().position(|b| b.capacity() >= len) {
                Some(i) => free.swap_remove(i),
                None => free.pop().unwrap_or_default(),
            }
        };
        v.clear();
        v.resize(len, E::default());
        v
    }

    pub(crate) fn give(&self, v: Vec<E>) {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        if free.len() < MAX_RETAINED {
            free.push(v);
        }
    }
}

/// Clones start empty; buffers are never shared between plans.
impl<E: Clone + Default> Clone for BufferPool<E> {
    fn clone(&self) -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reused_buffers_come_back_zeroed() {
        let pool = BufferPool::<f64>::new();
        let mut a = pool.take(10);
        a.iter_mut().for_each(|v| *v = 3.0);
        let ptr = a.as_ptr();
        pool.give(a);
        let b = pool.take(8);
        assert_eq!(b.as_ptr(), ptr);
        assert!(b.len() == 8 && b.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn prefers_a_buffer_that_fits() {
        let pool = BufferPool::<u8>::new();
        let big = pool.take(100);
        let small = pool.take(4);
        let big_ptr = big.as_ptr();
        pool.give(big);
        pool.give(small);
        let reused = pool.take(50);
        assert_eq!(reused.as_ptr(), big_ptr);
    }

    #[test]
    fn retention_is_bounded() {
        let pool = BufferPool::<u8>::new();
        for _ in 0..2 * MAX_RETAINED {
            pool.give(vec![0; 4]);
        }
        assert_eq!(pool.free.lock().unwrap().len(), MAX_RETAINED);
    }
}
