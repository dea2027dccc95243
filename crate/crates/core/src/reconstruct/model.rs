use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::DMatrix;

use crate::error::Result;
use crate::forward::ForwardOp;
use crate::manifolds::{FamilyTag, ManifoldFamily, SimplexChart};
use crate::measurement::{measure_point, measured_jacobian, Measurement};

/// `h ↦ Q F(φ⁻¹(h))` together with its Jacobian, as seen by the solver.
pub trait MeasuredMap: Sync {
    fn chart_dim(&self) -> usize;
    fn measure(&self, h: &[f64]) -> Result<Measurement>;
    fn jacobian(&self, h: &[f64]) -> Result<DMatrix<f64>>;
    /// Whether `h` lies in the open chart image.
    fn in_chart(&self, h: &[f64]) -> bool;
    /// Nearest point of the closed compact set K.
    fn project(&self, h: &[f64]) -> Vec<f64>;
    /// `‖φ⁻¹(a) − φ⁻¹(b)‖_X`.
    fn ambient_distance(&self, a: &[f64], b: &[f64]) -> Result<f64>;
}

/// A forward operator on a family, measured at bandwidth N. Forward
/// evaluations are counted so callers can check which phase performed them.
#[derive(Debug)]
pub struct ForwardModel<'a> {
    pub op: ForwardOp,
    pub family: &'a ManifoldFamily,
    pub bandwidth: usize,
    chart: Option<SimplexChart>,
    calls: AtomicUsize,
}

impl<'a> ForwardModel<'a> {
    pub fn new(op: ForwardOp, family: &'a ManifoldFamily, bandwidth: usize) -> Self {
        ForwardModel { op, family, bandwidth, chart: None, calls: AtomicUsize::new(0) }
    }

    /// Uses the simplex chart centred at `chart` instead of the reference one.
    pub fn with_chart(mut self, chart: SimplexChart) -> Self {
        self.chart = Some(chart);
        self
    }

    pub fn chart(&self) -> Option<&SimplexChart> {
        self.chart.as_ref().or(self.family.simplex_chart())
    }

    pub fn measure_calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl MeasuredMap for ForwardModel<'_> {
    fn chart_dim(&self) -> usize {
        self.family.chart_dim()
    }

    fn measure(&self, h: &[f64]) -> Result<Measurement> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        measure_point(self.op, self.family, h, self.bandwidth)
    }

    fn jacobian(&self, h: &[f64]) -> Result<DMatrix<f64>> {
        measured_jacobian(self.op, self.family, h, self.bandwidth)
    }

    fn in_chart(&self, h: &[f64]) -> bool {
        match (&self.chart, self.family.tag()) {
            (Some(chart), FamilyTag::Simplices) => chart.contains(h) && self.family.in_atlas(h),
            _ => self.family.in_chart(h),
        }
    }

    fn project(&self, h: &[f64]) -> Vec<f64> {
        self.family.compact().project(h)
    }

    fn ambient_distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        self.family.distance(a, b)
    }
}
