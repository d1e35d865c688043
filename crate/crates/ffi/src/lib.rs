//! C ABI surface; filled in alongside the suites.
