//! Minimal deterministic JSON emitter used for canonical documents.

/// Fixed 17-significant-digit rendering; round-trips every finite `f64`.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct CanonWriter {
    out: String,
    // one flag per open container: has it received an entry yet
    frames: Vec<bool>,
}

impl Default for CanonWriter {
    fn default() -> Self {
        Self::new()
    }
}

impl CanonWriter {
    pub fn new() -> Self {
        Self { out: String::new(), frames: Vec::new() }
    }

    fn entry(&mut self) {
        if let Some(seen) = self.frames.last_mut() {
            if *seen {
                self.out.push(',');
            }
            *seen = true;
            self.out.push('\n');
            self.indent();
        }
    }

    fn indent(&mut self) {
        for _ in 0..self.frames.len() {
            self.out.push_str("  ");
        }
    }

    pub fn open_object(&mut self) {
        self.out.push('{');
        self.frames.push(false);
    }

    pub fn close_object(&mut self) {
        self.close('}');
    }

    pub fn open_array(&mut self) {
        self.out.push('[');
        self.frames.push(false);
    }

    pub fn close_array(&mut self) {
        self.close(']');
    }

    fn close(&mut self, c: char) {
        let seen = self.frames.pop().unwrap_or(false);
        if seen {
            self.out.push('\n');
            self.indent();
        }
        self.out.push(c);
    }

    pub fn key(&mut self, k: &str) {
        self.entry();
        self.out.push_str(&serde_json::to_string(k).expect("string serializes"));
        self.out.push_str(": ");
    }

    pub fn raw(&mut self, text: &str) {
        self.out.push_str(text);
    }

    pub fn string(&mut self, s: &str) {
        self.out.push_str(&serde_json::to_string(s).expect("string serializes"));
    }

    pub fn item_inline(&mut self, text: &str) {
        self.entry();
        self.out.push_str(text);
    }

    pub fn finish(mut self) -> String {
        self.out.push('\n');
        self.out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_has_seventeen_digits_and_round_trips() {
        for x in [0.0, 1.0, 255.0, 0.1, 1.0 / 3.0, 101.5001, 1e-300, -2.5] {
            let s = real(x);
            let digits = s.split('e').next().unwrap().chars().filter(char::is_ascii_digit).count();
            assert_eq!(digits, 17, "{s}");
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
            let v: f64 = serde_json::from_str(&s).unwrap();
            assert_eq!(v.to_bits(), x.to_bits());
        }
    }

    #[test]
    fn nested_layout() {
        let mut w = CanonWriter::new();
        w.open_object();
        w.key("a");
        w.open_array();
        w.item_inline("1");
        w.item_inline("2");
        w.close_array();
        w.key("b");
        w.string("x\"y");
        w.close_object();
        let text = w.finish();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["a"][1], 2);
        assert_eq!(v["b"], "x\"y");
    }
}
