//! Flat `key = value` report documents.

use std::fmt::Write as _;

use anyhow::{bail, Result};

use rivolve_core::verify::Certificate;

use crate::io::fmt_f64;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(&mut self, key: impl Into<String>, value: impl Into<String>) -> &mut Self {
        self.entries.push((key.into(), value.into()));
        self
    }

    pub fn num(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.text(key, fmt_f64(value))
    }

    pub fn int(&mut self, key: impl Into<String>, value: usize) -> &mut Self {
        self.text(key, value.to_string())
    }

    pub fn verdict(&mut self, key: impl Into<String>, pass: bool) -> &mut Self {
        self.text(key, if pass { "PASS" } else { "FAIL" })
    }

    pub fn list(&mut self, key: impl Into<String>, values: &[f64]) -> &mut Self {
        let v: Vec<String> = values.iter().map(|&x| fmt_f64(x)).collect();
        self.text(key, v.join(";"))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut r = Report::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once(" = ") else {
                bail!("line {}: expected `key = value`", i + 1);
            };
            r.text(k.trim(), v.trim());
        }
        Ok(r)
    }
}

pub fn add_certificate(r: &mut Report, c: &Certificate) {
    r.verdict("verdict", c.pass());
    r.verdict("verdict.minimality", c.verdict.minimality);
    r.verdict("verdict.stability", c.verdict.stability);
    r.verdict("verdict.balance", c.verdict.balance);
    r.verdict("verdict.jumps", c.verdict.jumps);
    r.num("minimality_residual", c.minimality_residual);
    r.num("stability_residual", c.stability_residual);
    r.num("stability_worst_t", c.stability_worst_t);
    r.num("stability_tol", c.stability_tol);
    r.int("stability_excluded_probes", c.excluded_probes);
    r.num("balance.residual", c.balance.residual);
    r.num("balance.normalized", c.balance.normalized);
    r.num("balance.var_d", c.balance.var_d);
    r.num("balance.jump_excess", c.balance.jump_excess);
    r.num("balance.power_integral", c.balance.power_integral);
    r.num("balance.e0", c.balance.e0);
    r.num("balance.e_t", c.balance.e_t);
    r.int("jumps", c.jump_residuals.len());
    for (i, j) in c.jump_residuals.iter().enumerate() {
        let k = format!("jump.{i}");
        r.num(format!("{k}.t"), j.t);
        r.num(format!("{k}.solve_time"), j.solve_time);
        r.num(format!("{k}.energy_drop"), j.energy_drop);
        r.num(format!("{k}.cost"), j.cost);
        r.num(format!("{k}.lower"), j.lower);
        r.num(format!("{k}.gap"), j.gap);
        r.num(format!("{k}.residual"), j.residual);
        r.text(format!("{k}.refined"), j.refined.to_string());
        r.verdict(format!("{k}.verdict"), j.pass);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_parse_round_trip() {
        let mut r = Report::new();
        r.num("a", 0.1).verdict("b", false).list("c", &[1.0, 2.5]).int("d", 7);
        let text = r.render();
        assert!(text.contains("a = 1.0000000000000001e-1\n"));
        assert_eq!(Report::parse(&text).unwrap(), r);
        assert_eq!(r.get("b"), Some("FAIL"));
        assert!(Report::parse("no separator").is_err());
    }
}
