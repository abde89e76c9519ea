use clap::Subcommand;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Build one tree and write its parent arrays, contour and height paths
    SimulateTree,
    /// Lineage-count traces of k uniform vertices
    Trace,
    /// k-point subtrees of the limiting tree
    SampleLimit,
    /// Discrete k-point subtrees against the limit sampler
    CompareFdd,
    /// Offspring moment asymptotics over an n grid
    Moments,
    /// Full-tree lineage counts against the trace sampler
    TransitionCheck,
    /// Tightness of the lineage count at the mid probe
    Cdfi,
    /// Lineage count at generation 1 from the full top generation
    Counterexample,
    /// First-merge times against the continuous block-count process
    AppendixA,
    /// Contour/height discrepancy over an n grid
    Discrepancy,
}

impl Command {
    pub const ALL: [Command; 10] = [
        Command::SimulateTree,
        Command::Trace,
        Command::SampleLimit,
        Command::CompareFdd,
        Command::Moments,
        Command::TransitionCheck,
        Command::Cdfi,
        Command::Counterexample,
        Command::AppendixA,
        Command::Discrepancy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::SimulateTree => "simulate-tree",
            Command::Trace => "trace",
            Command::SampleLimit => "sample-limit",
            Command::CompareFdd => "compare-fdd",
            Command::Moments => "moments",
            Command::TransitionCheck => "transition-check",
            Command::Cdfi => "cdfi",
            Command::Counterexample => "counterexample",
            Command::AppendixA => "appendix-a",
            Command::Discrepancy => "discrepancy",
        }
    }
}
