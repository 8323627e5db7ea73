//! HTTP session layer over the dataprep engine.
//!
//! A session holds one uploaded CSV, the recommended cleaning plan built for
//! it, and the user's edits to both. Every mutating request carries the
//! snapshot version it was made against; a mismatch is rejected with
//! `StaleVersion`, so concurrent clients never overwrite each other.
//! Finalizing runs the plan on the uploaded bytes exactly as
//! `dataprep run` would, and keeps the cleaned CSV and report for export.
//!
//! All routes live under `/v1`:
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/v1/sessions` | upload (raw CSV or multipart) |
//! | GET, DELETE | `/v1/sessions/{id}` | summary, close |
//! | GET | `/v1/sessions/{id}/plan` | plan document |
//! | GET | `/v1/sessions/{id}/profile` | profiles, pairs, plots, rules |
//! | GET | `/v1/sessions/{id}/plot?x=&y=` | plot recommendation |
//! | GET | `/v1/sessions/{id}/outliers?x=&y=&detector=` | scored points for two axes |
//! | POST | `/v1/sessions/{id}/rows:remove` | drop rows by id |
//! | PATCH | `/v1/sessions/{id}/plan/steps/{sid}` | accept, edit, reject, move |
//! | POST | `/v1/sessions/{id}:undo` | restore the previous snapshot |
//! | POST | `/v1/sessions/{id}:finalize` | execute the plan |
//! | GET | `/v1/sessions/{id}/export/{csv,report}` | finalized artifacts |

mod api;
mod error;
mod session;

pub use api::{app, router, AppState};
pub use error::ApiError;
pub use session::{Clock, ManualClock, ServiceConfig, Session, SessionStore, SystemClock};
