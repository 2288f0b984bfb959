//! Complete discrete datasets: CSV with a header row of variable names and
//! one state label per cell.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::network::{BayesianNetwork, Variable};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    variables: Vec<Variable>,
    /// Row-major: `rows[l * width + j]` is the state of column `j` in case `l`.
    states: Vec<usize>,
}

impl Dataset {
    pub fn new(variables: Vec<Variable>) -> Self {
        Self {
            variables,
            states: Vec::new(),
        }
    }

    pub fn from_rows(variables: Vec<Variable>, rows: &[Vec<usize>]) -> Result<Self> {
        let mut d = Self::new(variables);
        for r in rows {
            d.push(r)?;
        }
        Ok(d)
    }

    pub fn push(&mut self, row: &[usize]) -> Result<()> {
        if row.len() != self.width() {
            return Err(Error::SchemaMismatch(format!(
                "row has {} values for {} columns",
                row.len(),
                self.width()
            )));
        }
        for (j, (&s, v)) in row.iter().zip(&self.variables).enumerate() {
            if s >= v.state_count() {
                return Err(Error::InvalidIndex(format!(
                    "state {s} in column {j} (`{}`)",
                    v.name()
                )));
            }
        }
        self.states.extend_from_slice(row);
        Ok(())
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn width(&self) -> usize {
        self.variables.len()
    }

    pub fn len(&self) -> usize {
        if self.variables.is_empty() {
            0
        } else {
            self.states.len() / self.width()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, l: usize) -> &[usize] {
        let w = self.width();
        &self.states[l * w..(l + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[usize]> {
        self.states.chunks(self.width().max(1))
    }

    pub fn column_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name() == name)
    }

    /// Column index for each name in `names`.
    pub fn columns_for(&self, names: &[&str]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| {
                self.column_of(n)
                    .ok_or_else(|| Error::SchemaMismatch(format!("dataset has no column `{n}`")))
            })
            .collect()
    }

    /// Errors unless each variable of `net` has a column with identical labels.
    pub fn check_against(&self, net: &BayesianNetwork) -> Result<Vec<usize>> {
        net.variables()
            .iter()
            .map(|v| {
                let c = self.column_of(v.name()).ok_or_else(|| {
                    Error::SchemaMismatch(format!("dataset has no column `{}`", v.name()))
                })?;
                if self.variables[c].labels() != v.labels() {
                    return Err(Error::SchemaMismatch(format!(
                        "labels of `{}` differ between network and dataset",
                        v.name()
                    )));
                }
                Ok(c)
            })
            .collect()
    }

    /// Reads CSV against the given schema. Columns may appear in any order
    /// but must name exactly the schema's variables.
    pub fn read_csv<R: Read>(reader: R, schema: &[Variable]) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let header = rdr.headers().map_err(csv_err)?.clone();
        let names: Vec<&str> = header.iter().collect();
        let mut order = Vec::with_capacity(names.len());
        for n in &names {
            let j = schema
                .iter()
                .position(|v| v.name() == *n)
                .ok_or_else(|| Error::SchemaMismatch(format!("unknown column `{n}`")))?;
            if order.contains(&j) {
                return Err(Error::SchemaMismatch(format!("duplicate column `{n}`")));
            }
            order.push(j);
        }
        if order.len() != schema.len() {
            let missing: Vec<&str> = schema
                .iter()
                .enumerate()
                .filter(|(j, _)| !order.contains(j))
                .map(|(_, v)| v.name())
                .collect();
            return Err(Error::SchemaMismatch(format!(
                "missing columns {missing:?}"
            )));
        }

        let mut data = Dataset::new(schema.to_vec());
        let mut row = vec![0; schema.len()];
        for (l, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let line = l + 1;
            if rec.len() == 1 && rec.get(0) == Some("") && names.len() > 1 {
                continue;
            }
            for (k, &j) in order.iter().enumerate() {
                let cell = rec.get(k).unwrap_or("");
                if cell.is_empty() {
                    return Err(Error::MissingValue {
                        row: line,
                        column: schema[j].name().to_string(),
                    });
                }
                row[j] = schema[j]
                    .state_of(cell)
                    .ok_or_else(|| Error::UnknownLabel {
                        row: line,
                        column: schema[j].name().to_string(),
                        label: cell.to_string(),
                    })?;
            }
            if rec.len() > order.len() {
                return Err(Error::SchemaMismatch(format!(
                    "row {line} has {} cells for {} columns",
                    rec.len(),
                    order.len()
                )));
            }
            data.states.extend_from_slice(&row);
        }
        Ok(data)
    }

    /// Reads CSV without a schema. Each column's labels are ordered by first
    /// appearance, so the first label seen is the reference state.
    pub fn infer_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let names: Vec<String> = rdr
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(String::from)
            .collect();
        let mut labels: Vec<Vec<String>> = vec![Vec::new(); names.len()];
        let mut raw: Vec<usize> = Vec::new();
        for (l, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            for (j, cell) in rec.iter().enumerate() {
                if cell.is_empty() {
                    return Err(Error::MissingValue {
                        row: l + 1,
                        column: names[j].clone(),
                    });
                }
                let idx = match labels[j].iter().position(|x| x == cell) {
                    Some(i) => i,
                    None => {
                        labels[j].push(cell.to_string());
                        labels[j].len() - 1
                    }
                };
                raw.push(idx);
            }
        }
        let variables = names
            .into_iter()
            .zip(labels)
            .map(|(n, mut ls)| {
                // A column with a single observed label still needs two states.
                while ls.len() < 2 {
                    ls.push(format!("unseen{}", ls.len()));
                }
                Variable::new(n, ls)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            variables,
            states: raw,
        })
    }

    pub fn parse_csv(text: &str, schema: &[Variable]) -> Result<Self> {
        Self::read_csv(text.as_bytes(), schema)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().from_writer(writer);
        w.write_record(self.variables.iter().map(Variable::name))
            .map_err(csv_err)?;
        for row in self.rows() {
            w.write_record(
                row.iter()
                    .zip(&self.variables)
                    .map(|(&s, v)| v.labels()[s].as_str()),
            )
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("labels are UTF-8")
    }

    /// The same cases restricted to `columns`, in that order.
    pub fn project(&self, columns: &[usize]) -> Dataset {
        let vars = columns.iter().map(|&c| self.variables[c].clone()).collect();
        let mut out = Dataset::new(vars);
        for row in self.rows() {
            out.states.extend(columns.iter().map(|&c| row[c]));
        }
        out
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.position() {
        Some(p) => Error::Parse {
            line: p.line() as usize,
            message: e.to_string(),
        },
        None => Error::Io(e.to_string()),
    }
}

/// Draws `n` cases by ancestral sampling with a seeded ChaCha8 generator.
pub fn sample_dataset(net: &BayesianNetwork, n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with(net, n, &mut rng)
}

pub fn sample_with<R: Rng + ?Sized>(net: &BayesianNetwork, n: usize, rng: &mut R) -> Dataset {
    let mut data = Dataset::new(net.variables().to_vec());
    data.states.reserve(n * net.len());
    let mut states = vec![0; net.len()];
    for _ in 0..n {
        for &v in net.topological_order() {
            let row = net.cpt(v).row(net.row_index(v, &states));
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = row.len() - 1;
            for (s, &p) in row.iter().enumerate() {
                acc += p;
                if u < acc {
                    pick = s;
                    break;
                }
            }
            states[v] = pick;
        }
        data.states.extend_from_slice(&states);
    }
    data
}
