//! C ABI bindings.
