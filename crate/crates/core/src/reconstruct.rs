//! Reconstruction from intrinsic data. (filled in below)
