use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::laplacian::BoundaryGeometry;

/// A coefficient field on the strip, either a profile in the normal
/// variable alone or a general function of `(x′, t)`.
#[derive(Clone)]
pub enum Field<V> {
    Profile(Arc<dyn Fn(f64) -> V + Send + Sync>),
    General(Arc<dyn Fn(&[f64], f64) -> V + Send + Sync>),
}

impl<V> Field<V> {
    pub fn profile(f: impl Fn(f64) -> V + Send + Sync + 'static) -> Self {
        Self::Profile(Arc::new(f))
    }

    pub fn general(f: impl Fn(&[f64], f64) -> V + Send + Sync + 'static) -> Self {
        Self::General(Arc::new(f))
    }

    pub fn at(&self, x: &[f64], t: f64) -> V {
        match self {
            Self::Profile(f) => f(t),
            Self::General(f) => f(x, t),
        }
    }

    pub fn is_profile(&self) -> bool {
        matches!(self, Self::Profile(_))
    }
}

impl<V> fmt::Debug for Field<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.is_profile() { "Field::Profile(..)" } else { "Field::General(..)" })
    }
}

/// `g_{ij}` as an `n × n` row-major array; the last index is the normal direction.
pub type MetricField = Field<Vec<f64>>;
/// `ω_1 … ω_n`, each an `r × r` row-major block, concatenated.
pub type ConnectionField = Field<Vec<Complex64>>;

/// Dirichlet problem for the connection Laplacian on `[0, 1] × T^{n−1}`,
/// with tangential circumference `2π`. Boundary data lives on `t = 0`;
/// the top edge `t = 1` is held at zero.
#[derive(Clone, Debug)]
pub struct StripProblem {
    n: usize,
    r: usize,
    tangential_nodes: usize,
    normal_intervals: usize,
    metric: MetricField,
    connection: ConnectionField,
}

impl StripProblem {
    /// `resolution` nodes per tangential direction and `resolution`
    /// intervals in `t`.
    pub fn new(n: usize, r: usize, resolution: usize, metric: MetricField, connection: ConnectionField) -> Result<Self> {
        if !(2..=3).contains(&n) {
            return Err(Error::Shape(format!("strip dimension must be 2 or 3, got {n}")));
        }
        if r == 0 {
            return Err(Error::Shape("bundle rank must be positive".into()));
        }
        if resolution < 8 {
            return Err(Error::Shape(format!("resolution {resolution} is below the minimum of 8")));
        }
        let x0 = vec![0.0; n - 1];
        if metric.at(&x0, 0.0).len() != n * n {
            return Err(Error::Shape(format!("metric samples must hold {} entries", n * n)));
        }
        if connection.at(&x0, 0.0).len() != n * r * r {
            return Err(Error::Shape(format!("connection samples must hold {} entries", n * r * r)));
        }
        Ok(Self { n, r, tangential_nodes: resolution, normal_intervals: resolution, metric, connection })
    }

    /// Euclidean metric, trivial connection.
    pub fn flat(n: usize, r: usize, resolution: usize) -> Result<Self> {
        Self::new(n, r, resolution, flat_metric(n), Field::profile(move |_| vec![Complex64::new(0.0, 0.0); n * r * r]))
    }

    /// Replaces the number of intervals in `t`.
    pub fn with_normal_intervals(mut self, intervals: usize) -> Result<Self> {
        if intervals < 8 {
            return Err(Error::Shape(format!("{intervals} normal intervals is below the minimum of 8")));
        }
        self.normal_intervals = intervals;
        Ok(self)
    }

    /// Replaces the metric by `e^{μ} g`.
    pub fn conformally_scaled(&self, mu: Field<f64>) -> Self {
        let metric = match (&self.metric, &mu) {
            (Field::Profile(g), Field::Profile(m)) => {
                let (g, m) = (g.clone(), m.clone());
                Field::profile(move |t| g(t).into_iter().map(|v| v * m(t).exp()).collect())
            }
            _ => {
                let (g, m) = (self.metric.clone(), mu.clone());
                Field::general(move |x, t| g.at(x, t).into_iter().map(|v| v * m.at(x, t).exp()).collect())
            }
        };
        Self { metric, ..self.clone() }
    }

    /// Extends an `x′`-independent boundary geometry to the strip by its
    /// Taylor polynomials in `t`, with `g_{nn} = 1`, `g_{kn} = 0`, `ω_n = 0`.
    pub fn from_geometry(geom: &BoundaryGeometry<f64>, resolution: usize) -> Result<Self> {
        let (n, r) = (geom.n(), geom.r());
        let m = n - 1;
        let tangential = |j: &crate::jet::Jet<f64>| j.coeffs().any(|(mi, c)| mi.tangential_degree() > 0 && c.norm() > 0.0);
        if geom.metric_entries().iter().any(tangential)
            || geom.connection_entries().iter().any(|w| w.entries().iter().any(tangential))
        {
            return Err(Error::Shape("strip extension needs a geometry without tangential dependence".into()));
        }
        let poly = |j: &crate::jet::Jet<f64>| -> Vec<Complex64> {
            let mut c = vec![Complex64::new(0.0, 0.0); j.truncation().normal_order().map_or(0, |o| o + 1)];
            for (mi, v) in j.coeffs() {
                c[mi.normal_exponent() as usize] = *v;
            }
            c
        };
        let eval = |c: &[Complex64], t: f64| c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, v| acc * t + v);
        let g_polys: Vec<Vec<Complex64>> = geom.metric_entries().iter().map(poly).collect();
        let w_polys: Vec<Vec<Vec<Complex64>>> =
            geom.connection_entries().iter().map(|w| w.entries().iter().map(poly).collect()).collect();
        let metric = Field::profile(move |t| {
            let mut g = vec![0.0; n * n];
            for k in 0..m {
                for l in 0..m {
                    g[k * n + l] = eval(&g_polys[k * m + l], t).re;
                }
            }
            g[n * n - 1] = 1.0;
            g
        });
        let connection = Field::profile(move |t| {
            let mut w = vec![Complex64::new(0.0, 0.0); n * r * r];
            for (k, entries) in w_polys.iter().enumerate() {
                for (e, c) in entries.iter().enumerate() {
                    w[k * r * r + e] = eval(c, t);
                }
            }
            w
        });
        Self::new(n, r, resolution, metric, connection)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn tangential_nodes(&self) -> usize {
        self.tangential_nodes
    }

    pub fn normal_intervals(&self) -> usize {
        self.normal_intervals
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    pub fn connection(&self) -> &ConnectionField {
        &self.connection
    }

    /// True when no coefficient depends on `x′`, so tangential Fourier
    /// modes decouple exactly.
    pub fn is_translation_invariant(&self) -> bool {
        self.metric.is_profile() && self.connection.is_profile()
    }

    /// Tangential grid spacing `2π / M`.
    pub fn tangential_spacing(&self) -> f64 {
        std::f64::consts::TAU / self.tangential_nodes as f64
    }

    /// Normal grid spacing `1 / N`.
    pub fn normal_spacing(&self) -> f64 {
        1.0 / self.normal_intervals as f64
    }

    /// Number of nodes on one `t = const` layer.
    pub fn layer_size(&self) -> usize {
        self.tangential_nodes.pow(self.n as u32 - 1)
    }

    /// Tangential coordinates of layer node `a`.
    pub fn node_position(&self, a: usize) -> Vec<f64> {
        let d = self.tangential_spacing();
        self.layer_multi_index(a).into_iter().map(|i| i as f64 * d).collect()
    }

    pub(crate) fn layer_multi_index(&self, a: usize) -> Vec<usize> {
        let m = self.tangential_nodes;
        match self.n {
            2 => vec![a],
            _ => vec![a / m, a % m],
        }
    }

    /// Layer index of a (wrapped) tangential multi-index.
    pub(crate) fn layer_index(&self, idx: &[i64]) -> usize {
        let m = self.tangential_nodes as i64;
        idx.iter().fold(0usize, |acc, &i| acc * m as usize + i.rem_euclid(m) as usize)
    }
}

pub(crate) fn flat_metric(n: usize) -> MetricField {
    Field::profile(move |_| (0..n * n).map(|i| if i / n == i % n { 1.0 } else { 0.0 }).collect())
}
