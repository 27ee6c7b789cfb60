use sdp_core::Scalar;
use sdp_geometry::{GeomError, Norm};
use sdp_multiobj::SoundApproximation;
use serde::Serialize;
use serde_json::{Map, Value};

/// Result of one run.  Fields serialize in declaration order.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    /// Total wall-clock seconds.
    pub t: f64,
    /// Seconds spent building the model.
    pub t_m: f64,
    #[serde(rename = "E")]
    pub error: f64,
    /// Total number of lower vertices.
    pub p: usize,
    pub engine: String,
    pub eta: f64,
    pub arith: String,
    pub norm: String,
    #[serde(rename = "E_exact", skip_serializing_if = "Option::is_none")]
    pub error_exact: Option<String>,
    pub entrances: Vec<EntranceReport>,
    #[serde(skip_serializing_if = "Map::is_empty")]
    pub extra: Map<String, Value>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntranceReport {
    pub entrance: usize,
    pub gap: f64,
    pub lower: Vec<Vec<f64>>,
    pub upper: Vec<Vec<f64>>,
}

fn floats<T: Scalar>(ps: &[Vec<T>]) -> Vec<Vec<f64>> {
    ps.iter().map(|p| p.iter().map(Scalar::to_f64).collect()).collect()
}

impl Report {
    pub fn from_approx<T: Scalar>(
        engine: &str,
        approx: &SoundApproximation<T>,
        norm: Norm,
        t: f64,
        t_m: f64,
    ) -> Result<Self, GeomError> {
        let err = approx.error(norm)?;
        let entrances = approx
            .entrances
            .iter()
            .enumerate()
            .map(|(i, e)| {
                Ok(EntranceReport {
                    entrance: i,
                    gap: e.gap(norm)?.to_f64(),
                    lower: floats(&e.lower_points()),
                    upper: floats(&e.upper_points()?),
                })
            })
            .collect::<Result<Vec<_>, GeomError>>()?;
        Ok(Report {
            t,
            t_m,
            error: err.to_f64(),
            p: approx.total_lower_vertices(),
            engine: engine.to_string(),
            eta: approx.eta,
            arith: T::ENGINE.to_string(),
            norm: match norm {
                Norm::L2 => "l2",
                Norm::Linf => "linf",
            }
            .to_string(),
            error_exact: T::EXACT.then(|| err.to_string()),
            entrances,
            extra: Map::new(),
        })
    }
}

pub fn emit_report(r: &Report) -> String {
    serde_json::to_string_pretty(r).expect("plain data")
}
