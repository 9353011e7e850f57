//! Shared domain types: readings, sensor topology, aggregated step vectors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// Header line of the narrow per-reading CSV wire form.
pub const READING_CSV_HEADER: &str = "t,sensor_id,attribute_id,value";

/// Attribute columns of the wide vitals export, in file order.
pub const MIMIC_ATTRIBUTES: [&str; 6] = ["RESP", "BP-S", "BP-D", "SpO2", "HR", "PULSE"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("sensor {0} has no attributes")]
    EmptySensor(usize),
    #[error("topology has no sensors")]
    NoSensors,
    #[error("expected 4 fields in reading, found {0}")]
    FieldCount(usize),
    #[error("invalid {field}: {reason}")]
    InvalidField { field: &'static str, reason: String },
}

/// One timestamped attribute value from one sensor.
///
/// `sensor_id` and `attribute_id` are 1-based, matching how devices are
/// labelled in the input files.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reading<F> {
    pub t: u64,
    pub sensor_id: u16,
    pub attribute_id: u16,
    pub value: F,
}

impl<F: Scalar> Reading<F> {
    pub fn new(t: u64, sensor_id: u16, attribute_id: u16, value: F) -> Result<Self, ModelError> {
        if sensor_id == 0 || attribute_id == 0 {
            return Err(ModelError::InvalidField {
                field: "id",
                reason: "sensor and attribute ids are 1-based".into(),
            });
        }
        if !value.is_finite() {
            return Err(ModelError::InvalidField {
                field: "value",
                reason: format!("{value} is not finite"),
            });
        }
        Ok(Self { t, sensor_id, attribute_id, value })
    }

    /// Render as one line of the wire form, without trailing newline.
    pub fn to_csv_line(&self) -> String {
        format!("{},{},{},{}", self.t, self.sensor_id, self.attribute_id, self.value)
    }
}

impl<F: Scalar + FromStr> FromStr for Reading<F> {
    type Err = ModelError;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let fields: Vec<&str> = line.trim_end_matches(['\r', '\n']).split(',').collect();
        if fields.len() != 4 {
            return Err(ModelError::FieldCount(fields.len()));
        }
        fn parse<T: FromStr>(s: &str, field: &'static str) -> Result<T, ModelError> {
            s.trim().parse().map_err(|_| ModelError::InvalidField {
                field,
                reason: format!("cannot parse {s:?}"),
            })
        }
        Reading::new(
            parse(fields[0], "t")?,
            parse(fields[1], "sensor_id")?,
            parse(fields[2], "attribute_id")?,
            parse(fields[3], "value")?,
        )
    }
}

/// Which sensors exist and how many attributes each reports.
///
/// Dimensions are enumerated sensor-major: all attributes of sensor 1, then
/// sensor 2, and so on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensorTopology {
    sensors: Vec<Vec<String>>,
    offsets: Vec<usize>,
}

impl SensorTopology {
    /// `sensors[i]` holds the attribute names of sensor `i + 1`.
    pub fn new(sensors: Vec<Vec<String>>) -> Result<Self, ModelError> {
        if sensors.is_empty() {
            return Err(ModelError::NoSensors);
        }
        if let Some(i) = sensors.iter().position(|attrs| attrs.is_empty()) {
            return Err(ModelError::EmptySensor(i + 1));
        }
        let mut offsets = Vec::with_capacity(sensors.len());
        let mut acc = 0;
        for attrs in &sensors {
            offsets.push(acc);
            acc += attrs.len();
        }
        Ok(Self { sensors, offsets })
    }

    /// One single-attribute sensor per name.
    pub fn single_attribute<S: AsRef<str>>(names: &[S]) -> Result<Self, ModelError> {
        Self::new(names.iter().map(|n| vec![n.as_ref().to_string()]).collect())
    }

    /// The six-channel bedside monitor layout.
    pub fn mimic() -> Self {
        Self::single_attribute(&MIMIC_ATTRIBUTES).expect("static topology is valid")
    }

    pub fn sensor_count(&self) -> usize {
        self.sensors.len()
    }

    pub fn attribute_count(&self, sensor_id: u16) -> Option<usize> {
        self.sensors.get(usize::from(sensor_id).checked_sub(1)?).map(Vec::len)
    }

    /// Total dimension K.
    pub fn dimension_count(&self) -> usize {
        self.sensors.iter().map(Vec::len).sum()
    }

    pub fn enumerate_dimensions(&self) -> Vec<(u16, u16)> {
        self.sensors
            .iter()
            .enumerate()
            .flat_map(|(i, attrs)| (0..attrs.len()).map(move |j| (i as u16 + 1, j as u16 + 1)))
            .collect()
    }

    pub fn dimension_of(&self, sensor_id: u16, attribute_id: u16) -> Option<usize> {
        let i = usize::from(sensor_id).checked_sub(1)?;
        let j = usize::from(attribute_id).checked_sub(1)?;
        let attrs = self.sensors.get(i)?;
        (j < attrs.len()).then(|| self.offsets[i] + j)
    }

    pub fn ids_of(&self, dim: usize) -> Option<(u16, u16)> {
        if dim >= self.dimension_count() {
            return None;
        }
        let i = self.offsets.partition_point(|&o| o <= dim) - 1;
        Some((i as u16 + 1, (dim - self.offsets[i]) as u16 + 1))
    }

    pub fn name(&self, dim: usize) -> Option<&str> {
        let (i, j) = self.ids_of(dim)?;
        Some(&self.sensors[usize::from(i) - 1][usize::from(j) - 1])
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.sensors.iter().flatten().map(String::as_str)
    }

    pub fn dimension_by_name(&self, name: &str) -> Option<usize> {
        self.names().position(|n| n == name)
    }
}

/// Whether a reconstructed coordinate arrived this step or was carried over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Source {
    Received,
    CarriedForward,
}

/// The aggregated K-dimensional vector for one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeStepVector<F> {
    pub t: u64,
    pub values: Vec<F>,
    pub sources: Vec<Source>,
}

impl<F: Scalar> TimeStepVector<F> {
    /// A vector with every coordinate marked as received.
    pub fn received(t: u64, values: Vec<F>) -> Self {
        let sources = vec![Source::Received; values.len()];
        Self { t, values, sources }
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    /// Bit `d` is set when coordinate `d` was received this step.
    pub fn received_bits(&self) -> u64 {
        self.sources
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == Source::Received)
            .fold(0u64, |acc, (d, _)| acc | (1 << d))
    }
}

/// Outcome of assessing one reading on the sensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Transmit,
    DiscardUninteresting,
    DiscardFaulty,
}

impl Decision {
    pub fn is_transmit(self) -> bool {
        self == Decision::Transmit
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Transmit => "transmit",
            Decision::DiscardUninteresting => "uninteresting",
            Decision::DiscardFaulty => "faulty",
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
