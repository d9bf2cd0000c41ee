use std::fmt;

/// Plain-text table for terminal summaries; text columns are left-aligned,
/// everything else right-aligned.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row<S: Into<String>>(&mut self, cells: impl IntoIterator<Item = S>) {
        self.rows.push(cells.into_iter().map(Into::into).collect());
    }

    fn numeric(&self, col: usize) -> bool {
        self.rows.iter().all(|r| {
            r.get(col).is_none_or(|c| {
                let c = c.trim_start_matches('*').trim_end_matches('%');
                c == "-" || c.parse::<f64>().is_ok()
            })
        })
    }
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cols = self.header.len();
        let width: Vec<usize> = (0..cols)
            .map(|c| {
                self.rows
                    .iter()
                    .filter_map(|r| r.get(c))
                    .chain(std::iter::once(&self.header[c]))
                    .map(|s| s.chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let right: Vec<bool> = (0..cols).map(|c| self.numeric(c)).collect();
        let line = |f: &mut fmt::Formatter<'_>, cells: &[String]| -> fmt::Result {
            let mut out = String::new();
            for c in 0..cols {
                let cell = cells.get(c).map(String::as_str).unwrap_or("");
                if c > 0 {
                    out.push_str("  ");
                }
                if right[c] {
                    out.push_str(&format!("{cell:>w$}", w = width[c]));
                } else {
                    out.push_str(&format!("{cell:<w$}", w = width[c]));
                }
            }
            writeln!(f, "{}", out.trim_end())
        };
        line(f, &self.header)?;
        let rule: Vec<String> = width.iter().map(|w| "-".repeat(*w)).collect();
        line(f, &rule)?;
        for r in &self.rows {
            line(f, r)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aligns_numbers_right() {
        let mut t = Table::new(["name", "g"]);
        t.row(["a", "1.00"]);
        t.row(["long", "*12.50"]);
        assert_eq!(t.to_string(), "name       g\n----  ------\na       1.00\nlong  *12.50\n");
    }
}
