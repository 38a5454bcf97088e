//! Recorded time series and its CSV form.
//!
//! Column order is fixed: `time_s,v_out_V,v_sense_V,i_out_A,d_mag,attack_active`,
//! then `i_sense_A` when a current sensor is configured, then one
//! `vG_<id>_V` column per switch. Floats use Rust's shortest round-trip
//! formatting, so parsing the CSV back reproduces the exact values.

use std::io::{BufRead, Write};

use super::SimError;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Series {
    pub step: f64,
    pub time: Vec<f64>,
    pub v_out: Vec<f64>,
    pub v_sense: Vec<f64>,
    pub i_out: Vec<f64>,
    pub d_mag: Vec<f64>,
    pub attack_active: Vec<bool>,
    pub i_sense: Option<Vec<f64>>,
    /// Gate voltage per switch, in topology order.
    pub gate_voltages: Vec<(String, Vec<f64>)>,
}

const FIXED: [&str; 6] = ["time_s", "v_out_V", "v_sense_V", "i_out_A", "d_mag", "attack_active"];

impl Series {
    pub fn with_capacity(step: f64, n: usize, current_sensor: bool, switches: &[String]) -> Self {
        Self {
            step,
            time: Vec::with_capacity(n),
            v_out: Vec::with_capacity(n),
            v_sense: Vec::with_capacity(n),
            i_out: Vec::with_capacity(n),
            d_mag: Vec::with_capacity(n),
            attack_active: Vec::with_capacity(n),
            i_sense: current_sensor.then(|| Vec::with_capacity(n)),
            gate_voltages: switches.iter().map(|id| (id.clone(), Vec::with_capacity(n))).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = FIXED.iter().map(|s| s.to_string()).collect();
        if self.i_sense.is_some() {
            h.push("i_sense_A".into());
        }
        h.extend(self.gate_voltages.iter().map(|(id, _)| format!("vG_{id}_V")));
        h
    }

    /// Numeric channels by column name, excluding time and the attack flag.
    pub fn channels(&self) -> Vec<(String, &[f64])> {
        let mut c: Vec<(String, &[f64])> = vec![
            ("v_out_V".into(), &self.v_out),
            ("v_sense_V".into(), &self.v_sense),
            ("i_out_A".into(), &self.i_out),
            ("d_mag".into(), &self.d_mag),
        ];
        if let Some(i) = &self.i_sense {
            c.push(("i_sense_A".into(), i));
        }
        for (id, v) in &self.gate_voltages {
            c.push((format!("vG_{id}_V"), v));
        }
        c
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels().into_iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.header().join(","))?;
        for k in 0..self.len() {
            write!(
                out,
                "{},{},{},{},{},{}",
                self.time[k],
                self.v_out[k],
                self.v_sense[k],
                self.i_out[k],
                self.d_mag[k],
                u8::from(self.attack_active[k])
            )?;
            if let Some(i) = &self.i_sense {
                write!(out, ",{}", i[k])?;
            }
            for (_, v) in &self.gate_voltages {
                write!(out, ",{}", v[k])?;
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Parses a CSV written by [`Series::write_csv`].
    pub fn read_csv<R: BufRead>(input: R, step: f64) -> Result<Self, SimError> {
        let bad = |line: usize, msg: &str| SimError::Parse(format!("timeseries line {line}: {msg}"));
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| bad(1, "empty file"))?
            .map_err(|e| SimError::Io(e.to_string()))?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() < FIXED.len() || cols[..FIXED.len()] != FIXED {
            return Err(bad(1, "unexpected header"));
        }
        let mut rest = &cols[FIXED.len()..];
        let has_i_sense = rest.first() == Some(&"i_sense_A");
        if has_i_sense {
            rest = &rest[1..];
        }
        let mut switches = Vec::with_capacity(rest.len());
        for c in rest {
            let id = c
                .strip_prefix("vG_")
                .and_then(|s| s.strip_suffix("_V"))
                .ok_or_else(|| bad(1, "unexpected column"))?;
            switches.push(id.to_string());
        }
        let mut s = Series::with_capacity(step, 0, has_i_sense, &switches);
        for (n, line) in lines.enumerate() {
            let line = line.map_err(|e| SimError::Io(e.to_string()))?;
            let lineno = n + 2;
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols.len() {
                return Err(bad(lineno, "wrong number of fields"));
            }
            let num = |i: usize| fields[i].parse::<f64>().map_err(|_| bad(lineno, "bad number"));
            s.time.push(num(0)?);
            s.v_out.push(num(1)?);
            s.v_sense.push(num(2)?);
            s.i_out.push(num(3)?);
            s.d_mag.push(num(4)?);
            s.attack_active.push(match fields[5] {
                "0" => false,
                "1" => true,
                _ => return Err(bad(lineno, "attack_active must be 0 or 1")),
            });
            let mut col = FIXED.len();
            if let Some(i) = s.i_sense.as_mut() {
                i.push(num(col)?);
                col += 1;
            }
            for (_, v) in s.gate_voltages.iter_mut() {
                v.push(num(col)?);
                col += 1;
            }
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(rows in proptest::collection::vec(
            (any::<f64>().prop_filter("finite", |x| x.is_finite()), -1e6f64..1e6, any::<bool>()), 0..50)) {
            let switches = vec!["S1".to_string(), "S2".to_string()];
            let mut s = Series::with_capacity(1e-5, rows.len(), true, &switches);
            for (k, (a, b, on)) in rows.iter().enumerate() {
                s.time.push(k as f64 * 1e-5);
                s.v_out.push(*a);
                s.v_sense.push(*b);
                s.i_out.push(a / 3.0);
                s.d_mag.push(0.5);
                s.attack_active.push(*on);
                s.i_sense.as_mut().unwrap().push(-b);
                s.gate_voltages[0].1.push(18.0);
                s.gate_voltages[1].1.push(-3.0);
            }
            let mut buf = Vec::new();
            s.write_csv(&mut buf).unwrap();
            let back = Series::read_csv(buf.as_slice(), 1e-5).unwrap();
            prop_assert_eq!(back, s);
        }
    }

    #[test]
    fn header_layout() {
        let s = Series::with_capacity(1.0, 0, false, &["S1".to_string()]);
        assert_eq!(
            s.header().join(","),
            "time_s,v_out_V,v_sense_V,i_out_A,d_mag,attack_active,vG_S1_V"
        );
    }

    #[test]
    fn rejects_malformed_rows() {
        let text = "time_s,v_out_V,v_sense_V,i_out_A,d_mag,attack_active\n0,1,2,3,0.5,2\n";
        assert!(Series::read_csv(text.as_bytes(), 1.0).is_err());
        let text = "time_s,v_out_V\n0,1\n";
        assert!(Series::read_csv(text.as_bytes(), 1.0).is_err());
    }
}
