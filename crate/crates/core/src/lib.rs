//! Random graphs, the odd-triangle complex `Z(G)` and its double cover, exact
//! integral homology, spectral link certificates, collapses and Radon witnesses,
//! plus a seeded Monte Carlo harness that drives them.

pub mod complex;
pub mod graphs;
pub mod homology;
pub mod spectral;
pub mod collapse;
pub mod radon;
pub mod experiment;
