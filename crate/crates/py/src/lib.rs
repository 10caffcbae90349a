//! Python bindings; filled in once the core API is complete.
