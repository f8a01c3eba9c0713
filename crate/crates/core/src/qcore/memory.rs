use std::sync::atomic::{AtomicU64, Ordering};

use crate::{Error, Result};

/// Default per-allocation cap: 4 GiB.
pub const DEFAULT_MEMORY_CAP: u64 = 4 << 30;

static MEMORY_CAP: AtomicU64 = AtomicU64::new(DEFAULT_MEMORY_CAP);

/// Sets the per-allocation cap in bytes. Applies process-wide.
pub fn set_memory_cap(bytes: u64) {
    MEMORY_CAP.store(bytes, Ordering::Relaxed);
}

pub fn memory_cap() -> u64 {
    MEMORY_CAP.load(Ordering::Relaxed)
}

/// Fails with [`Error::Resource`] when `elements × elem_bytes` exceeds the cap.
pub fn check_alloc(elements: u128, elem_bytes: u128) -> Result<()> {
    let bytes = elements.saturating_mul(elem_bytes);
    let cap = memory_cap() as u128;
    if bytes > cap {
        return Err(Error::Resource(format!("allocation of {bytes} bytes exceeds memory cap of {cap} bytes")));
    }
    Ok(())
}

/// `2^n` as usize, or a resource error when it cannot be represented.
pub fn dim_for(n: usize) -> Result<usize> {
    if n >= usize::BITS as usize - 1 {
        return Err(Error::Resource(format!("2^{n} does not fit in memory")));
    }
    Ok(1usize << n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cap_rejects_large_allocations() {
        assert!(check_alloc(1 << 20, 16).is_ok());
        assert!(matches!(check_alloc(1 << 40, 16), Err(Error::Resource(_))));
        assert!(dim_for(200).is_err());
    }
}
