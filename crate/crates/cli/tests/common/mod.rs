#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use entropic_bespoke::calibration::expected_payoffs;
use entropic_bespoke::io::{fmt_exact, PortfolioFile};
use entropic_bespoke::loss::build_conditional_prior;
use entropic_bespoke::prior::build_market_grid;
use entropic_bespoke::synthetic::SyntheticIndex;
use entropic_bespoke::{Bucket, FactorParams, IndexId, LossGrid, PortfolioSet, PricingConstraint};
use tempfile::TempDir;

pub const NODES: [usize; 2] = [4, 4];

pub struct Fixture {
    pub dir: TempDir,
}

impl Fixture {
    pub fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, contents).unwrap();
        p
    }

    pub fn read(&self, rel: &str) -> String {
        std::fs::read_to_string(self.path(rel)).unwrap()
    }

    pub fn portfolio(&self, set: &PortfolioSet) {
        self.write("portfolio.toml", &PortfolioFile::from_set(set).to_toml().unwrap());
    }

    /// Flat 3% discount curve and two tranches.
    pub fn market(&self) {
        let mut d = String::from("t,B\n");
        for t in 1..=10 {
            d.push_str(&format!("{t},{}\n", (-0.03 * t as f64).exp()));
        }
        self.write("discount.csv", &d);
        self.write(
            "tranches.csv",
            "K_d,K_u,maturity,frequency,daycount\n0,0.03,5,4,ACT/360\n0.03,0.07,5,4,ACT/360\n",
        );
    }

    pub fn run(&self, args: &[&str]) -> Output {
        self.run_env(args, &[])
    }

    pub fn run_env(&self, args: &[&str], env: &[(&str, &str)]) -> Output {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_entropic-bespoke"));
        cmd.args(args).current_dir(self.dir.path()).env_remove("ENTROPIC_BESPOKE_THREADS");
        for (k, v) in env {
            cmd.env(k, v);
        }
        cmd.output().unwrap()
    }
}

/// Two 12-name indices with 5 relevant names each, horizons 1, 3 and 5 years.
pub fn synthetic_set() -> PortfolioSet {
    let mut s = SyntheticIndex::new(12, 5, vec![0.01, 0.03, 0.05]);
    let one = s.build(IndexId::One).unwrap();
    s.mean_default_probs = vec![0.015, 0.04, 0.07];
    s.loading = 0.5;
    let two = s.build(IndexId::Two).unwrap();
    PortfolioSet {
        horizons: vec![1.0, 3.0, 5.0],
        params: FactorParams::new(0.5, 0.3).unwrap(),
        portfolios: [one, two],
    }
}

/// Constraint CSV with prior-implied targets scaled by `1 + shift` (equity, mezzanine, relevant
/// total per index and horizon).
pub fn constraints_csv(set: &PortfolioSet, shift: f64) -> String {
    let grid = build_market_grid(NODES[0], NODES[1], &set.params).unwrap();
    let lg = LossGrid::fit(&[&set.portfolios[0], &set.portfolios[1]]).unwrap();
    let mut out = String::from("index_id,kind,K_low,K_high,horizon,target_el,sigma\n");
    for (h, t) in set.horizons.iter().enumerate() {
        let priors: Vec<_> = set
            .portfolios
            .iter()
            .map(|p| build_conditional_prior(p, &set.params, &grid, &lg, h).unwrap())
            .collect();
        for index in IndexId::ALL {
            let cs = [
                PricingConstraint::tranche(index, 0.0, 0.03, 0.0, 1e-4).unwrap(),
                PricingConstraint::tranche(index, 0.03, 0.07, 0.0, 1e-4).unwrap(),
                PricingConstraint::total(index, Bucket::Relevant, 0.0, 1e-4).unwrap(),
            ];
            let els = expected_payoffs(&cs, grid.prior_weights(), &priors);
            for (c, el) in cs.iter().zip(els) {
                let target = fmt_exact(el * (1.0 + shift));
                let line = match c.kind {
                    entropic_bespoke::calibration::ConstraintKind::Tranche { k_low, k_high } => {
                        format!("{index},tranche,{k_low},{k_high},{t},{target},\n")
                    }
                    _ => format!("{index},relevant,,,{t},{target},\n"),
                };
                out.push_str(&line);
            }
        }
    }
    out
}

pub fn config(mode: &str, extra: &str) -> String {
    format!(
        "mode = \"{mode}\"\n\n[inputs]\nportfolio = \"portfolio.toml\"\nconstraints = \"constraints.csv\"\n\
         discount = \"discount.csv\"\ntranches = \"tranches.csv\"\n{extra}\n[grid]\nnodes = [{}, {}]\n",
        NODES[0], NODES[1]
    )
}

/// Column `name` of a CSV text.
pub fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split(',').nth(i).unwrap().to_string()).collect()
}

pub fn files_in(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}
