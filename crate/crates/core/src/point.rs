//! Points of the hypergroup and of its dual, plus the model parameter.

use crate::error::{LhkError, Result};

/// The Laguerre parameter alpha together with the derived homogeneous dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    alpha: f64,
}

impl Params {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(LhkError::InvalidParameter(format!("alpha must be finite and >= 0, got {alpha}")));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Homogeneous dimension Q = 2 alpha + 4.
    pub fn q_dim(&self) -> f64 {
        2.0 * self.alpha + 4.0
    }
}

/// A point (x, t) of K = [0, inf) x R.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypergroupPoint {
    pub x: f64,
    pub t: f64,
}

impl HypergroupPoint {
    pub fn new(x: f64, t: f64) -> Result<Self> {
        if !(x >= 0.0) || !x.is_finite() || !t.is_finite() {
            return Err(LhkError::OutsideDomain(format!("({x}, {t}) is not in K")));
        }
        Ok(Self { x, t })
    }

    pub const IDENTITY: HypergroupPoint = HypergroupPoint { x: 0.0, t: 0.0 };
}

/// A dual point (lambda, m) with lambda != 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualPoint {
    pub lambda: f64,
    pub m: usize,
}

impl DualPoint {
    pub fn new(lambda: f64, m: usize) -> Result<Self> {
        if lambda == 0.0 {
            return Err(LhkError::ZeroLambda);
        }
        if !lambda.is_finite() {
            return Err(LhkError::InvalidParameter(format!("lambda = {lambda}")));
        }
        Ok(Self { lambda, m })
    }
}
