//! WebAssembly bindings for the browser demo in `www/`.

pub mod lab;

use wasm_bindgen::prelude::*;

fn js(e: stecnn::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Lab(lab::Lab);

#[wasm_bindgen]
impl Lab {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32) -> Result<Lab, JsError> {
        lab::Lab::new(seed as u64).map(Lab).map_err(js)
    }

    pub fn train(&mut self, epochs: u32) -> Result<f64, JsError> {
        self.0.train(epochs as usize).map_err(js)
    }

    pub fn epochs(&self) -> u32 {
        self.0.epochs() as u32
    }

    #[wasm_bindgen(js_name = setWidthScale)]
    pub fn set_width_scale(&mut self, scale: f64) -> Result<(), JsError> {
        self.0.set_width_scale(scale).map_err(js)
    }

    /// `[acc_1, g_mean]` on the held-out windows.
    pub fn score(&mut self) -> Result<Vec<f64>, JsError> {
        let (a, g) = self.0.score().map_err(js)?;
        Ok(vec![a, g])
    }

    #[wasm_bindgen(js_name = windowCount)]
    pub fn window_count(&self) -> u32 {
        self.0.probe_len() as u32
    }

    pub fn window(&self, i: u32) -> Result<Vec<f64>, JsError> {
        self.0.window(i as usize).map_err(js)
    }

    pub fn label(&self, i: u32) -> Result<u32, JsError> {
        self.0.label(i as usize).map(|l| l as u32).map_err(js)
    }

    pub fn predict(&mut self, i: u32) -> Result<Vec<f64>, JsError> {
        self.0.predict(i as usize).map_err(js)
    }
}

/// `[max_error, scales, input.., of_shifted.., shifted..]`.
#[wasm_bindgen(js_name = shiftDemo)]
pub fn shift_demo(seed: u32, shift: u32) -> Result<Vec<f64>, JsError> {
    let d = lab::shift_demo(seed as u64, shift as usize).map_err(js)?;
    let mut out = vec![d.max_error, d.scales as f64];
    out.extend(d.input);
    out.extend(d.of_shifted);
    out.extend(d.shifted);
    Ok(out)
}

/// Metrics JSON for two lists of class indices.
#[wasm_bindgen]
pub fn metrics(labels: &str, predictions: &str) -> Result<String, JsError> {
    let labels = lab::parse_classes(labels).map_err(js)?;
    let predictions = lab::parse_classes(predictions).map_err(js)?;
    lab::metrics_json(&labels, &predictions).map_err(js)
}
