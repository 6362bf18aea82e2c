//! Time-sampled paths `s ↦ u(s)` on a uniform grid, and their JSON-lines form.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::flow::FlowConfig;
use crate::spectral::{project, Layout, Projection, SpectralField};

/// Provenance attached to a trajectory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub source: String,
    pub config: Option<FlowConfig>,
    pub config_hash: String,
}

impl TrajectoryMeta {
    pub fn new(source: &str, config: Option<FlowConfig>) -> Self {
        let config_hash = config.as_ref().map(config_hash).unwrap_or_default();
        Self {
            source: source.to_string(),
            config,
            config_hash,
        }
    }

    /// Metadata for trajectories not produced by [`crate::flow::evolve`].
    pub fn hashed<T: Serialize>(source: &str, settings: &T) -> Self {
        Self {
            source: source.to_string(),
            config: None,
            config_hash: config_hash(settings),
        }
    }
}

/// First 16 hex digits of the SHA-256 of the JSON form of `config`.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let json = serde_json::to_vec(config).expect("config serializes");
    let digest = Sha256::digest(&json);
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    layout: Layout,
    s0: f64,
    ds: f64,
    samples: Vec<SpectralField>,
    meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn new(layout: Layout, s0: f64, ds: f64, samples: Vec<SpectralField>) -> Result<Self> {
        if !(ds > 0.0) {
            return Err(Error::InvalidArgument(format!("sample spacing {ds} must be positive")));
        }
        for field in &samples {
            layout.check_same(&field.layout())?;
        }
        Ok(Self {
            layout,
            s0,
            ds,
            samples,
            meta: TrajectoryMeta::default(),
        })
    }

    /// Builds a trajectory by sampling `f` at `s0 + i ds`, `i = 0..count`.
    pub fn from_fn(
        layout: Layout,
        s0: f64,
        ds: f64,
        count: usize,
        f: impl Fn(f64) -> SpectralField,
    ) -> Result<Self> {
        let samples = (0..count).map(|i| f(s0 + i as f64 * ds)).collect();
        Self::new(layout, s0, ds, samples)
    }

    pub fn with_meta(mut self, meta: TrajectoryMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn meta(&self) -> &TrajectoryMeta {
        &self.meta
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn ds(&self) -> f64 {
        self.ds
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.s0 + i as f64 * self.ds
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }

    pub fn samples(&self) -> &[SpectralField] {
        &self.samples
    }

    pub fn sample(&self, i: usize) -> &SpectralField {
        &self.samples[i]
    }

    pub fn last(&self) -> Option<&SpectralField> {
        self.samples.last()
    }

    pub fn into_samples(self) -> Vec<SpectralField> {
        self.samples
    }

    pub fn map(&self, f: impl Fn(f64, &SpectralField) -> SpectralField) -> Self {
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, u)| f(self.time(i), u))
            .collect();
        Self {
            samples,
            ..self.clone()
        }
    }

    pub fn project(&self, selector: Projection) -> Self {
        self.map(|_, u| project(u, selector))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.map(|_, u| u.scaled(factor))
    }

    /// Sample-wise difference; grids must coincide.
    pub fn sub(&self, other: &Trajectory) -> Result<Self> {
        self.check_same_grid(other)?;
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            samples,
            ..self.clone()
        })
    }

    pub fn check_same_grid(&self, other: &Trajectory) -> Result<()> {
        self.layout.check_same(&other.layout)?;
        let same = self.len() == other.len()
            && (self.s0 - other.s0).abs() <= 1e-12 * self.ds
            && (self.ds - other.ds).abs() <= 1e-12 * self.ds;
        if !same {
            return Err(Error::InvalidArgument("trajectories use different time grids".into()));
        }
        Ok(())
    }

    /// Shifts every sample time by `shift`.
    pub fn shifted(&self, shift: f64) -> Self {
        Self {
            s0: self.s0 + shift,
            ..self.clone()
        }
    }

    /// Samples with index in `range`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            s0: self.time(range.start),
            samples: self.samples[range].to_vec(),
            ..self.clone()
        }
    }

    /// Index of the sample closest to time `s`, if inside the span.
    pub fn index_of(&self, s: f64) -> Option<usize> {
        let x = ((s - self.s0) / self.ds).round();
        (x >= 0.0 && (x as usize) < self.len()).then_some(x as usize)
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        let header = Header {
            kind: "header".into(),
            n: self.layout.n,
            j_max: self.layout.j_max,
            s0: self.s0,
            ds: self.ds,
            samples: self.len(),
            meta: self.meta.clone(),
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for (i, field) in self.samples.iter().enumerate() {
            serde_json::to_writer(
                &mut out,
                &Record {
                    s: self.time(i),
                    coefficients: field.coeffs().to_vec(),
                },
            )?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| Error::Format("missing header line".into()))??;
        let header: Header = serde_json::from_str(&header_line)
            .map_err(|e| Error::Format(format!("bad header: {e}")))?;
        if header.kind != "header" {
            return Err(Error::Format(format!("unexpected header kind {:?}", header.kind)));
        }
        let layout = Layout::new(header.n, header.j_max)
            .map_err(|e| Error::Format(e.to_string()))?;
        let mut samples = Vec::with_capacity(header.samples);
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: Record = serde_json::from_str(&line)
                .map_err(|e| Error::Format(format!("record {i}: {e}")))?;
            let expected = header.s0 + i as f64 * header.ds;
            if (record.s - expected).abs() > 1e-9 * header.ds.max(expected.abs()) {
                return Err(Error::NonUniformGrid(i));
            }
            samples.push(
                SpectralField::from_coeffs(layout, record.coefficients)
                    .map_err(|e| Error::Format(format!("record {i}: {e}")))?,
            );
        }
        if samples.len() != header.samples {
            return Err(Error::Format(format!(
                "header announces {} samples, found {}",
                header.samples,
                samples.len()
            )));
        }
        Ok(Self::new(layout, header.s0, header.ds, samples)?.with_meta(header.meta))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    kind: String,
    n: usize,
    #[serde(rename = "J_max")]
    j_max: usize,
    s0: f64,
    ds: f64,
    samples: usize,
    meta: TrajectoryMeta,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    s: f64,
    coefficients: Vec<f64>,
}
