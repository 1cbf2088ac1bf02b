//! Seeded experiment orchestration: single runs, sweeps, the run pool and
//! cross-seed aggregation.

mod config;
mod record;
mod run;
mod sweep;

pub use config::{parse_kv, Method, RunConfig, Scale};
pub use record::{
    eval_line, read_eval_csv, read_params, update_line, updates_header, write_params, EvalPoint, OuterRow,
    RunRecord, Table, UpdateRow, EVAL_HEADER,
};
pub use run::{eval_seeds, evaluate, greedy_episode, mean_std, run};
pub use sweep::{
    aggregate, final_table, final_table_csv, run_pool, seeded, summary_csv, sweep_beta, sweep_episode_length, Curve,
    FinalRow, SummaryRow, Sweep,
};
