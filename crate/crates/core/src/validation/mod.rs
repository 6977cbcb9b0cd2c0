//! Numerical checks of the local expansions behind the asymptotics, and
//! Monte Carlo comparisons against the asymptotic formulas.

pub mod convergence;
pub mod lemmas;
pub mod mc;

pub use convergence::{convergence_study, convergence_table, ConvergenceRow, ConvergenceTable, McBudget, TrendStatistic};
pub use lemmas::{check_lemma1, check_lemma2, check_lemma3, lemma_ladder, lemma_suite, LemmaCheckReport, LemmaKind};
pub use mc::{mc_tail, ExtremesSample, McEstimate, McLevel};
