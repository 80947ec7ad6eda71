use serde::{Deserialize, Serialize};

/// One client's flattened trainable-parameter update for one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightDelta {
    pub client: usize,
    pub values: Vec<f64>,
}

impl WeightDelta {
    pub fn new(client: usize, values: Vec<f64>) -> Self {
        Self { client, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self::new(self.client, self.values.iter().map(|v| v * a).collect())
    }
}
