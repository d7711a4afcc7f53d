//! Numerical laboratory for time-periodic two-species Lotka–Volterra
//! competition-diffusion systems and their bistable travelling fronts.

pub mod logistic;
pub mod pde;
pub mod periodic_fn;
pub mod quadrature;
pub mod kinetics;
pub mod stats;
pub mod wavespeed;
pub mod interp;
pub mod comparison;
pub mod config;
pub mod experiments;
pub mod report;
