//! Guard thresholds for exact enumeration paths.
//!
//! Every exact routine that walks an exponential space checks its work
//! estimate against these limits first and returns
//! [`Error::EnumerationTooLarge`](crate::Error::EnumerationTooLarge)
//! instead of stalling.

/// Enumeration guards with documented defaults.
#[derive(Debug, Clone, Copy)]
pub struct Limits {
    /// Maximum number of items an exact enumeration may visit. Default `2^24`.
    pub max_enumeration: u64,
    /// Maximum class count for subset-exact norm evaluation (`2^(t(r-1))`
    /// subsets are visited). Default 16.
    pub max_norm_classes: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_enumeration: 1 << 24, max_norm_classes: 16 }
    }
}

impl Limits {
    /// Checks an item-count estimate against `max_enumeration`.
    pub fn check(&self, needed: u128) -> crate::Result<()> {
        if needed > self.max_enumeration as u128 {
            Err(crate::Error::EnumerationTooLarge { needed, limit: self.max_enumeration })
        } else {
            Ok(())
        }
    }
}
