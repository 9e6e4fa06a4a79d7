//! Sliding activation buffer and the descriptor time series built from it.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::features::{descriptor_vector_with, ActivationWindow, FeatureConfig, FeatureVector};
use crate::rmt::TwTable;

pub const DEFAULT_CAPACITY: usize = 32;
pub const DEFAULT_STRIDE: usize = 1;

/// Ring of the most recent `capacity` activation rows.
#[derive(Debug, Clone)]
pub struct SlidingBuffer {
    capacity: usize,
    width: usize,
    rows: VecDeque<Vec<f64>>,
    step_counter: u64,
}

impl SlidingBuffer {
    pub fn new(capacity: usize, width: usize) -> Result<Self> {
        if capacity < 2 {
            return Err(invalid(
                "capacity",
                format!("need at least 2 rows, got {capacity}"),
            ));
        }
        if width < 2 {
            return Err(invalid(
                "width",
                format!("need at least 2 columns, got {width}"),
            ));
        }
        Ok(Self {
            capacity,
            width,
            rows: VecDeque::with_capacity(capacity),
            step_counter: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn step_counter(&self) -> u64 {
        self.step_counter
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, v: &[f64]) -> Result<()> {
        let step = self.step_counter + 1;
        if v.len() != self.width {
            return Err(Error::WidthChanged {
                step,
                expected: self.width,
                actual: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("activation row"));
        }
        let row = if self.rows.len() == self.capacity {
            let mut recycled = self.rows.pop_front().expect("buffer is full");
            recycled.copy_from_slice(v);
            recycled
        } else {
            v.to_vec()
        };
        self.rows.push_back(row);
        self.step_counter = step;
        Ok(())
    }

    /// The last `capacity` rows in arrival order, once the buffer has filled.
    pub fn current_window(&self) -> Option<ActivationWindow> {
        if self.rows.len() < self.capacity {
            return None;
        }
        let mut data = Vec::with_capacity(self.capacity * self.width);
        for r in &self.rows {
            data.extend_from_slice(r);
        }
        Some(
            ActivationWindow::new(data, self.capacity, self.width)
                .expect("rows were validated on push"),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescriptorSeries {
    pub vectors: Vec<FeatureVector>,
    pub stride: usize,
}

impl DescriptorSeries {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Values only, one `[f64; 22]` per emitted window.
    pub fn matrix(&self) -> Vec<[f64; crate::features::FEATURE_COUNT]> {
        self.vectors.iter().map(|v| v.values).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowConfig {
    pub capacity: usize,
    pub stride: usize,
    pub features: FeatureConfig,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            capacity: DEFAULT_CAPACITY,
            stride: DEFAULT_STRIDE,
            features: FeatureConfig::default(),
        }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 {
            return Err(invalid("stride", "must be at least 1"));
        }
        if self.capacity < 2 {
            return Err(invalid("capacity", "need at least 2 rows"));
        }
        if self.features.fit_bins == 0 {
            return Err(invalid("fit_bins", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.features.sigma2_quantile) {
            return Err(invalid("sigma2_quantile", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Push-driven extractor: feed rows, get a descriptor at each evaluation
/// step. The window advances every row; `stride` only sets how often a
/// full window is evaluated.
pub struct StreamingDescriptor<'a> {
    buffer: Option<SlidingBuffer>,
    config: WindowConfig,
    table: &'a TwTable,
}

impl<'a> StreamingDescriptor<'a> {
    pub fn new(config: WindowConfig, table: &'a TwTable) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            buffer: None,
            config,
            table,
        })
    }

    pub fn step_counter(&self) -> u64 {
        self.buffer.as_ref().map_or(0, SlidingBuffer::step_counter)
    }

    /// The first row fixes the width.
    pub fn push(&mut self, row: &[f64]) -> Result<Option<FeatureVector>> {
        let buffer = match &mut self.buffer {
            Some(b) => b,
            None => self
                .buffer
                .insert(SlidingBuffer::new(self.config.capacity, row.len())?),
        };
        buffer.push(row)?;
        let step = buffer.step_counter();
        let n = self.config.capacity as u64;
        if step < n || !(step - n).is_multiple_of(self.config.stride as u64) {
            return Ok(None);
        }
        let window = buffer.current_window().expect("buffer is full");
        let mut v = descriptor_vector_with(&window, &self.config.features, self.table)?;
        v.window_index = step;
        Ok(Some(v))
    }
}

/// Descriptor series over a whole stream of rows.
pub fn descriptor_series<I, R>(source: I, config: &WindowConfig) -> Result<DescriptorSeries>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let table = TwTable::embedded();
    let mut extractor = StreamingDescriptor::new(*config, table)?;
    let mut vectors = Vec::new();
    for row in source {
        if let Some(v) = extractor.push(row.as_ref())? {
            vectors.push(v);
        }
    }
    Ok(DescriptorSeries {
        vectors,
        stride: config.stride,
    })
}

/// Number of windows a stream of `steps` rows yields.
pub fn emitted_count(steps: usize, capacity: usize, stride: usize) -> usize {
    if steps < capacity || stride == 0 {
        0
    } else {
        (steps - capacity) / stride + 1
    }
}
